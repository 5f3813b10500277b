"""
Box-Ball Toolkit - Command Line
===============================

`boxball <command> [flags]` with commands:
- evolve, identify, linearize, skip: deterministic operations on a configuration
- qstat: closed-form scalars of a parameter family
- sample: one nu_q or mu_q configuration
- velocity, diffusion, ldp, correlate, audit: ensemble experiments

Data goes to stdout (or --out), logs to stderr. Exit codes: 0 on
success, 1 on a failed verdict or identity, 2 on usage or domain errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from boxball import __version__
from boxball.audit import identity_audit
from boxball.config import RunConfig, build_q, resolve
from boxball.errors import BoxBallError, CapabilityError, DomainError, IdentityViolation
from boxball.harness import (
    ExperimentReport,
    correlation_experiment,
    diffusion_experiment,
    ldp_experiment,
    velocity_experiment,
)
from boxball.lattice import Configuration, carrier_profile, evolve
from boxball.qstat import QClass, excursion_length_law, lambda_y, rate_function, scalar_table
from boxball.reporting import render_report, render_table, write_json, write_series_csv, write_text
from boxball.sampler import SampleSpec, sample_mu, sample_nu
from boxball.seats import SlotArray, reconstruct, seat_decompose, slots
from boxball.skip_map import skip
from boxball.solitons import identify, run_tagged, soliton_set_to_json, trajectory_to_json

logger = logging.getLogger("boxball")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
COUNTEREXAMPLE_FILE = "counterexamples.txt"


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


# Parser

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value or .json file merged under the flags")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--json", action="store_true", default=None, help="JSON output")
    common.add_argument("--verbose", action="store_true", help="debug logging")
    common.add_argument("--quiet", action="store_true", help="warnings and errors only")
    return common


def _input_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--in", dest="input", help="file holding a configuration line (`@origin bits`)")
    group.add_argument("--text", help="configuration given inline, e.g. '@0 1100'")


def _q_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--bernoulli", help="Bernoulli density rho in (0, 1/2)")
    parser.add_argument("--markov", nargs=2, metavar=("A", "B"), help="two-sided Markov parameters a b")
    parser.add_argument("--q", help="explicit q_1,q_2,... (fractions allowed)")
    parser.add_argument("--tail-bound", type=float, help="treat --q as a truncation with this tail bound")
    parser.add_argument("--cut", type=int, metavar="K", help="apply C_K: drop every level above K")


def _ensemble_flags(parser: argparse.ArgumentParser, steps: bool = True) -> None:
    _q_flags(parser)
    parser.add_argument("--k", type=int, help="soliton size (default 1)")
    if steps:
        parser.add_argument("--steps", type=int, help="time horizon n")
    parser.add_argument("--replicas", type=int, help="ensemble size E (default 100)")
    parser.add_argument("--seed", type=int, help="base seed (falls back to BOXBALL_SEED)")
    parser.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    parser.add_argument("--csv", help="write the per-replica series as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxball", description="Box-ball system toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_parser()
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("evolve", parents=[common], help="apply T repeatedly")
    _input_flags(p)
    p.add_argument("--steps", type=int, help="number of steps (default 1)")
    p.add_argument("--carrier", action="store_true", help="also print the carrier load row")

    p = sub.add_parser("identify", parents=[common], help="list solitons or track one")
    _input_flags(p)
    p.add_argument("--track", action="store_true", help="track the tagged soliton instead of listing")
    p.add_argument("--k", type=int, help="size of the tagged soliton")
    p.add_argument("--index", type=int, help="volume index of the tagged soliton (default 1)")
    p.add_argument("--steps", type=int, help="steps to track")

    p = sub.add_parser("linearize", parents=[common], help="seat labels and slot contents")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--in", dest="input", help="file holding a configuration line")
    group.add_argument("--text", help="configuration given inline")
    group.add_argument("--reconstruct", help="slot array JSON to turn back into a configuration")

    p = sub.add_parser("skip", parents=[common], help="apply the k-skip map")
    _input_flags(p)
    p.add_argument("--k", type=int, help="skip level (default 1)")

    p = sub.add_parser("qstat", parents=[common], help="closed-form scalars of q")
    _q_flags(p)
    p.add_argument("--k", type=int, help="largest level to tabulate (default 1)")
    p.add_argument("--lambdas", help="comma-separated lambda grid for Lambda^Y")
    p.add_argument("--rate", help="comma-separated points u for the rate function I(u)")
    p.add_argument("--excursions", type=int, help="print the excursion length law up to this many balls")

    p = sub.add_parser("sample", parents=[common], help="draw one configuration")
    _q_flags(p)
    p.add_argument("--records", type=int, help="excursions right of the origin (default 100)")
    p.add_argument("--left", type=int, help="excursions left of the origin (default 0)")
    p.add_argument("--method", choices=["slot", "markov"], help="sampler construction (default slot)")
    p.add_argument("--mu", action="store_true", default=None, help="sample mu_q instead of nu_q")
    p.add_argument("--seed", type=int, help="seed (falls back to BOXBALL_SEED)")

    p = sub.add_parser("velocity", parents=[common], help="law of large numbers experiment")
    _ensemble_flags(p)
    p = sub.add_parser("diffusion", parents=[common], help="diffusion coefficient experiment")
    _ensemble_flags(p)
    p = sub.add_parser("ldp", parents=[common], help="cumulant generating function experiment")
    _ensemble_flags(p)
    p.add_argument("--lambdas", help="comma-separated lambda grid (default -0.05,0.05)")

    p = sub.add_parser("correlate", parents=[common], help="gap between far-apart tagged solitons")
    _ensemble_flags(p, steps=False)
    p.add_argument("--n-list", dest="n_list", help="comma-separated n values, time n^2 (default 10,20,40)")
    p.add_argument("--u", type=float, help="first index scale (default 0)")
    p.add_argument("--v", type=float, help="second index scale (default 0.5)")
    p.add_argument("--exponent", type=float, help="index exponent a (default 1)")
    p.add_argument("--threshold", type=float, help="largest acceptable final gap (default 1)")

    p = sub.add_parser("audit", parents=[common], help="exact identity audit on fresh samples")
    _q_flags(p)
    p.add_argument("--samples", type=int, help="number of samples S (default 20)")
    p.add_argument("--steps", type=int, help="steps per tracked soliton")
    p.add_argument("--seed", type=int, help="seed (falls back to BOXBALL_SEED)")
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    p.add_argument("--counterexamples", default=COUNTEREXAMPLE_FILE, help="where failing configurations are written")
    return parser


# Helpers

def read_configuration(args: argparse.Namespace) -> Configuration:
    if getattr(args, "text", None):
        return Configuration.from_text(args.text)
    path = args.input
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            return Configuration.from_text(line)
    raise DomainError(f"{path}: no configuration line")


def _emit(cfg: RunConfig, payload: Dict[str, Any], text: str) -> None:
    if cfg.json:
        write_json({"config": cfg.to_json(), **payload}, cfg.out)
    else:
        write_text(text, cfg.out)


def _finish(cfg: RunConfig, report: ExperimentReport) -> int:
    report.spec["config"] = cfg.to_json()
    if cfg.csv:
        write_series_csv(report, cfg.csv)
    if cfg.json:
        write_json(report.to_json(), cfg.out)
    else:
        write_text(render_report(report), cfg.out)
    return EXIT_OK if report.passed else EXIT_FAIL


# Commands

def cmd_evolve(cfg: RunConfig, args: argparse.Namespace) -> int:
    config = read_configuration(args)
    rows, carriers = [config.to_text()], []
    current = config
    for _ in range(cfg.steps):
        if args.carrier:
            prof = carrier_profile(current)
            carriers.append({"start": prof.start, "values": prof.values.tolist()})
        current = evolve(current)
        rows.append(current.to_text())
    text_lines = list(rows)
    for j, c in enumerate(carriers):
        text_lines.append(f"W[{j}] @{c['start']} " + " ".join(str(w) for w in c["values"]))
    _emit(cfg, {"configurations": rows, "carriers": carriers}, "\n".join(text_lines))
    return EXIT_OK


def cmd_identify(cfg: RunConfig, args: argparse.Namespace) -> int:
    config = read_configuration(args)
    if args.track:
        traj = run_tagged(config, cfg.k, cfg.index, cfg.steps)
        data = trajectory_to_json(traj)
        text = f"k={traj.size} index={traj.index} X: " + " ".join(map(str, traj.positions))
        text += f"\nY={data['Y']} M={data['M']}"
        _emit(cfg, {"trajectory": data}, text)
        return EXIT_OK
    sset = identify(config)
    rows = soliton_set_to_json(sset)
    lines = ["census: " + ", ".join(f"{k}x{c}" for k, c in sset.census().items())]
    for r in rows:
        lines.append(f"k={r['k']} X={r['position']} heads={r['heads']} tails={r['tails']} "
                     f"natural={r['natural_index']} volume={r['volume']}")
    _emit(cfg, {"census": {str(k): c for k, c in sset.census().items()}, "solitons": rows}, "\n".join(lines))
    return EXIT_OK


def cmd_linearize(cfg: RunConfig, args: argparse.Namespace) -> int:
    if args.reconstruct:
        slot_array = SlotArray.from_json(json.loads(Path(args.reconstruct).read_text(encoding="utf-8")))
        config = reconstruct(slot_array).trimmed()
        _emit(cfg, {"configuration": config.to_text()}, config.to_text())
        return EXIT_OK
    config = read_configuration(args)
    view = seat_decompose(config)
    block = slots(view)
    labels = view.labels_text()
    lines = [f"@{view.lo} " + " ".join(labels)]
    for k, table in sorted(block.zeta.items()):
        lines.append(f"zeta_{k}: " + " ".join(f"{i}:{c}" for i, c in sorted(table.items())))
    _emit(cfg, {"range": [view.lo, view.hi], "labels": labels, "slots": block.to_json()}, "\n".join(lines))
    return EXIT_OK


def cmd_skip(cfg: RunConfig, args: argparse.Namespace) -> int:
    config = read_configuration(args)
    result = skip(config, cfg.k)
    text = f"{result.image.to_text()}\norigin shift {result.origin_shift}"
    _emit(cfg, {"image": result.image.to_text(), "origin_shift": result.origin_shift}, text)
    return EXIT_OK


def cmd_qstat(cfg: RunConfig, args: argparse.Namespace) -> int:
    q = build_q(cfg)
    table = scalar_table(q, cfg.k)
    payload: Dict[str, Any] = {"table": table.to_json()}
    lines = [render_table(table)]
    if args.lambdas:
        grid = {}
        for lam in cfg.lambdas:
            try:
                grid[str(lam)] = lambda_y(q, cfg.k, lam)
            except (CapabilityError, DomainError) as exc:
                grid[str(lam)] = None
                logger.warning("Lambda^Y(%g): %s", lam, exc)
        payload["lambda_y"] = grid
        lines.append("Lambda^Y: " + ", ".join(f"{k}: {v}" for k, v in grid.items()))
    if args.rate:
        rates = {u: rate_function(q, cfg.k, float(u)) for u in args.rate.split(",") if u.strip()}
        payload["rate"] = rates
        lines.append("I(u): " + ", ".join(f"{k}: {v}" for k, v in rates.items()))
    if args.excursions is not None:
        if q.qclass not in (QClass.BERNOULLI, QClass.MARKOV):
            raise DomainError("the excursion law needs a Bernoulli or Markov q")
        law = excursion_length_law(q.a, q.b, args.excursions)
        payload["excursion_law"] = {str(m): str(p) for m, p in law.items()}
        lines.append("excursion law: " + ", ".join(f"{m}: {float(p):.6g}" for m, p in law.items()))
    _emit(cfg, payload, "\n".join(lines))
    return EXIT_OK


def cmd_sample(cfg: RunConfig, args: argparse.Namespace) -> int:
    spec = SampleSpec(build_q(cfg), records=cfg.records, seed=cfg.seed, method=cfg.method, left=cfg.left)
    config = sample_mu(spec) if cfg.mu else sample_nu(spec)
    _emit(cfg, {"configuration": config.to_text()}, config.to_text())
    return EXIT_OK


def cmd_velocity(cfg: RunConfig, args: argparse.Namespace) -> int:
    return _finish(cfg, velocity_experiment(build_q(cfg), cfg.k, cfg.steps, cfg.replicas, cfg.seed, cfg.threads))


def cmd_diffusion(cfg: RunConfig, args: argparse.Namespace) -> int:
    return _finish(cfg, diffusion_experiment(build_q(cfg), cfg.k, cfg.steps, cfg.replicas, cfg.seed, cfg.threads))


def cmd_ldp(cfg: RunConfig, args: argparse.Namespace) -> int:
    report = ldp_experiment(build_q(cfg), cfg.k, cfg.steps, cfg.replicas, cfg.lambdas, cfg.seed, cfg.threads)
    return _finish(cfg, report)


def cmd_correlate(cfg: RunConfig, args: argparse.Namespace) -> int:
    report = correlation_experiment(
        build_q(cfg), cfg.k, cfg.n_list, cfg.u, cfg.v, cfg.replicas, cfg.seed,
        exponent=cfg.exponent, threshold=cfg.threshold, threads=cfg.threads,
    )
    return _finish(cfg, report)


def cmd_audit(cfg: RunConfig, args: argparse.Namespace) -> int:
    report = identity_audit(build_q(cfg), cfg.samples, cfg.steps, cfg.seed, cfg.threads)
    failures = report.series.get("counterexamples", [])
    if failures:
        lines = [f"# {f['case']} replica {f['replica']}: {f['message']}\n{f['config']}" for f in failures]
        Path(args.counterexamples).write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.error("%d identity failures; counterexamples in %s", len(failures), args.counterexamples)
    return _finish(cfg, report)


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "evolve": cmd_evolve,
    "identify": cmd_identify,
    "linearize": cmd_linearize,
    "skip": cmd_skip,
    "qstat": cmd_qstat,
    "sample": cmd_sample,
    "velocity": cmd_velocity,
    "diffusion": cmd_diffusion,
    "ldp": cmd_ldp,
    "correlate": cmd_correlate,
    "audit": cmd_audit,
}

_LOCAL = {"config", "verbose", "quiet", "input", "text", "carrier", "track", "reconstruct",
          "rate", "excursions", "counterexamples", "command"}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, resolve the run config and dispatch; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.verbose, args.quiet)

    flags = {k: v for k, v in vars(args).items() if k not in _LOCAL}
    try:
        cfg = resolve(args.command, flags, args.config)
        logger.debug("running %s with %s", args.command, cfg.to_json())
        return COMMANDS[args.command](cfg, args)
    except IdentityViolation as exc:
        logger.error("%s", exc)
        if exc.counterexample:
            logger.error("counterexample: %s", exc.counterexample)
        return EXIT_FAIL
    except BoxBallError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
