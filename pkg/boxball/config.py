"""
Box-Ball Toolkit - Run Configuration
====================================

RunConfig resolution in three layers, lowest priority first:
- dataclass defaults
- an optional config file (`key=value` lines or a JSON object)
- explicit command-line flags

The seed falls back to BOXBALL_SEED, then 0.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from boxball.errors import DomainError
from boxball.qstat import QParams, cut, q_from_bernoulli, q_from_markov, q_from_vector

logger = logging.getLogger(__name__)

SEED_ENV = "BOXBALL_SEED"


@dataclass
class RunConfig:
    """Fully resolved parameters of one CLI run."""
    command: str = ""
    # parameter family
    bernoulli: Optional[str] = None
    markov: Optional[List[str]] = None  # [a, b]
    q: Optional[str] = None  # "q1,q2,..."
    tail_bound: Optional[float] = None
    cut: Optional[int] = None
    # tagged soliton and time
    k: int = 1
    index: int = 1
    steps: int = 1
    replicas: int = 100
    # sampling
    records: int = 100
    left: int = 0
    method: str = "slot"
    mu: bool = False
    samples: int = 20
    seed: Optional[int] = None
    # experiments
    lambdas: List[float] = field(default_factory=lambda: [-0.05, 0.05])
    n_list: List[int] = field(default_factory=lambda: [10, 20, 40])
    u: float = 0.0
    v: float = 0.5
    exponent: float = 1.0
    threshold: float = 1.0
    # output
    threads: Optional[int] = None
    out: Optional[str] = None
    csv: Optional[str] = None
    json: bool = False

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)


def _parse_list(raw: Any, cast) -> List[Any]:
    if isinstance(raw, (list, tuple)):
        return [cast(x) for x in raw]
    return [cast(x) for x in str(raw).split(",") if x.strip()]


def _parse_pair(raw: Any) -> List[str]:
    # "a b", "a,b" or a two-element list
    if isinstance(raw, (list, tuple)):
        return [str(x).strip() for x in raw]
    return str(raw).replace(",", " ").split()


def _parse_bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    return str(raw).strip().lower() in ("1", "true", "yes", "on")


_CASTS = {
    "k": int, "index": int, "steps": int, "replicas": int, "records": int, "left": int,
    "samples": int, "seed": int, "threads": int, "cut": int,
    "tail_bound": float, "u": float, "v": float, "exponent": float, "threshold": float,
    "mu": _parse_bool, "json": _parse_bool,
    "lambdas": lambda raw: _parse_list(raw, float),
    "n_list": lambda raw: _parse_list(raw, int),
    "markov": lambda raw: _parse_pair(raw),
}


def coerce(key: str, raw: Any) -> Any:
    """Convert a file or flag value to the field's type."""
    if raw is None:
        return None
    cast = _CASTS.get(key, str)
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"bad value for {key}: {raw!r}") from exc


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read `key=value` lines (with `#` comments) or a JSON object.

    Raises:
        DomainError: on unknown keys or malformed lines
    """
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        data = json.loads(text)
        if not isinstance(data, dict):
            raise DomainError(f"{path}: expected a JSON object")
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            data[key.strip().replace("-", "_")] = value.strip()
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise DomainError(f"{path}: unknown keys {', '.join(unknown)}")
    return data


def resolve(command: str, flags: Dict[str, Any], config_path: Optional[str] = None) -> RunConfig:
    """Merge defaults, file values and explicit flags (None means not given)."""
    cfg = RunConfig(command=command)
    layers = []
    if config_path:
        layers.append(load_config_file(config_path))
    layers.append({k: v for k, v in flags.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    for layer in layers:
        for key, raw in layer.items():
            if key in known and key != "command":
                setattr(cfg, key, coerce(key, raw))
    if cfg.seed is None:
        env = os.environ.get(SEED_ENV)
        cfg.seed = coerce("seed", env) if env else 0
    logger.debug("resolved config: %s", cfg)
    return cfg


def build_q(cfg: RunConfig) -> QParams:
    """
    QParams from exactly one of --bernoulli, --markov, --q, then --cut if given.

    Raises:
        DomainError: when none or several families are given, or the cut is negative
    """
    given = [name for name in ("bernoulli", "markov", "q") if getattr(cfg, name) is not None]
    if len(given) != 1:
        raise DomainError("give exactly one of --bernoulli, --markov, --q")
    if cfg.bernoulli is not None:
        q = q_from_bernoulli(cfg.bernoulli)
    elif cfg.markov is not None:
        if len(cfg.markov) != 2:
            raise DomainError(f"--markov takes two values a b; got {cfg.markov!r}")
        q = q_from_markov(cfg.markov[0], cfg.markov[1])
    else:
        q = q_from_vector([p for p in cfg.q.split(",") if p.strip()], cfg.tail_bound)
    if cfg.cut is None:
        return q
    if cfg.cut < 0:
        raise DomainError(f"--cut needs K >= 0, got {cfg.cut}")
    return cut(q, cfg.cut)
