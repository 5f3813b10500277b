"""
Box-Ball Toolkit - Monte Carlo Harness
======================================

Ensemble experiments for a tagged soliton under nu_q:
- Velocity (law of large numbers) against v_k
- Diffusion (variance / n) against D_k with bootstrap errors
- Cumulant generating function against Lambda^Y
- Gap between two tagged solitons far apart (strong correlation trend)
- Exponential identity for Y against U and n - M
- Orthogonal decomposition increments: zero mean, zero cross covariance

Every comparison reports estimate, standard error, theory value and the
tolerance used. Replicas run in a process pool and are folded back in
replica order, so serial and parallel runs give identical numbers.
"""

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from boxball.errors import CapacityError, NotFoundError
from boxball.qstat import (
    QParams,
    U_cumulant,
    diffusion_coefficient,
    effective_velocity,
    lambda_y,
    rbar,
)
from boxball.sampler import SampleSpec, replica_rng, two_sided_nu
from boxball.skip_map import orthogonal_decomposition
from boxball.solitons import run_tagged

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BOOTSTRAP_RESAMPLES = 200
SE_MULTIPLIER = 3.0
DIFFUSION_BIAS = 0.05
ESS_FLOOR = 100
WINDOW_MARGIN = 64
REACH_TAIL = 1e-3


class Verdict(Enum):
    """Outcome of one comparison."""
    PASS = "pass"
    FAIL = "fail"
    WARN = "warn"  # estimate unreliable, not counted as a failure


@dataclass
class Check:
    """One estimate compared against its theory value."""
    name: str
    estimate: float
    stderr: float
    theory: Optional[float]
    tolerance: float
    formula: str
    verdict: Verdict = Verdict.PASS
    note: str = ""

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "theory": self.theory,
            "tolerance": self.tolerance,
            "formula": self.formula,
            "verdict": self.verdict.value,
            "note": self.note,
        }


def compare(name: str, estimate: float, stderr: float, theory: float, slack: float = 0.0) -> Check:
    """|estimate - theory| <= 3 s.e. + slack; an exact match is required when s.e. is 0."""
    tol = SE_MULTIPLIER * stderr + slack
    ok = abs(estimate - theory) <= max(tol, 1e-12)
    formula = f"|estimate - theory| <= {SE_MULTIPLIER:g} se" + (f" + {slack:.4g}" if slack else "")
    return Check(name, float(estimate), float(stderr), float(theory), tol, formula, Verdict.PASS if ok else Verdict.FAIL)


@dataclass
class ExperimentReport:
    """Echo of the run, all checks, and timing kept apart from the data."""
    experiment: str
    spec: Dict[str, Any]
    checks: List[Check] = field(default_factory=list)
    series: Dict[str, List[Any]] = field(default_factory=dict)
    timing: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.verdict is not Verdict.FAIL for c in self.checks)

    def to_json(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "spec": self.spec,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "series": self.series,
            "timing": self.timing,
        }


# Replica plumbing

def run_replicas(task: Callable[[int], Any], count: int, threads: Optional[int] = None) -> List[Any]:
    """
    Evaluate task(0..count-1) and return results in replica order.

    `task` must be picklable (a module-level function or a partial of one)
    when more than one worker is used.
    """
    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers <= 1 or count <= 1:
        return [task(r) for r in range(count)]
    chunk = max(1, count // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(count), chunksize=chunk))


def window_excursions(q: QParams, n: int, k: int, extra_volumes: int = 0, speed: Optional[int] = None) -> int:
    """
    Excursions needed on one side of the origin.

    The side must reach n * speed + margin sites, with the mean excursion
    length 1 / r_0 and a 2x safety factor; extra volumes are budgeted at
    q_k nonempty slots per excursion. `speed` defaults to the reach of the
    tagged k-soliton itself.
    """
    if speed is None:
        speed = max(2 * k, k + 2)
    extent = n * speed + WINDOW_MARGIN
    count = math.ceil(2 * extent * float(rbar(q, 0))) + 8
    if extra_volumes:
        qk = float(q.level(k))
        if qk <= 0:
            raise CapacityError(f"q_{k} = 0: no {k}-solitons to index")
        count += math.ceil(4 * (extra_volumes + 1) / qk)
    return count


def reach_size(q: QParams, k: int, excursions: int, tail: float = REACH_TAIL) -> int:
    """
    Largest soliton size expected at least `tail` times among `excursions`
    excursions, q_l being the chance that an l-slot is occupied.
    """
    size = k
    for ell, q_ell in enumerate(q.values, start=1):
        if ell > k and float(q_ell) * excursions >= tail:
            size = ell
    return size


def window_sides(q: QParams, n: int, k: int, extra_volumes: int = 1) -> Tuple[int, int]:
    """
    (left, right) excursion counts for tracking a k-soliton over n steps.

    The right side only has to hold what the tagged soliton runs into.
    The left side must hold every larger soliton that can catch up with
    it, so it is sized by the speed of the largest size q makes likely.
    """
    right = window_excursions(q, n, k, extra_volumes)
    reach = reach_size(q, k, 4 * right)
    left = window_excursions(q, n, k, extra_volumes, speed=max(2 * k, k + 2, reach + 2))
    logger.debug("window for k=%d n=%d: %d left (reach %d), %d right", k, n, left, reach, right)
    return left, right


@dataclass(frozen=True)
class TrackJob:
    """Everything a worker needs to sample and track one replica."""
    q: QParams
    k: int
    n: int
    seed: int
    left: int
    right: int
    indices: Sequence[int] = (1,)


def track_replica(job: TrackJob, replica: int) -> List[Dict[str, int]]:
    """Sample a two-sided nu_q window and track each tagged index for n steps."""
    spec = SampleSpec(job.q, records=job.right, seed=job.seed, left=job.left)
    config = two_sided_nu(spec, replica)
    out = []
    for i in job.indices:
        try:
            traj = run_tagged(config, job.k, i, job.n, numbering="volume")
        except NotFoundError as exc:
            raise CapacityError(f"replica {replica}: {exc}") from exc
        out.append({"Y": traj.increment(job.n), "M": traj.blocked_steps(job.n)})
    return out


def _ensemble(job: TrackJob, count: int, threads: Optional[int]) -> List[List[Dict[str, int]]]:
    logger.info("tracking %d replicas: k=%d n=%d window=%d+%d excursions", count, job.k, job.n, job.left, job.right)
    return run_replicas(partial(track_replica, job), count, threads)


def _spec_echo(q: QParams, **extra: Any) -> Dict[str, Any]:
    out = {"q": q.describe()}
    out.update(extra)
    return out


def _timed(report: ExperimentReport, started: float) -> ExperimentReport:
    report.timing = {"wall_seconds": round(time.perf_counter() - started, 3)}
    return report


# Experiments

def velocity_experiment(q: QParams, k: int, n: int, count: int, seed: int, threads: Optional[int] = None) -> ExperimentReport:
    """Mean of Y_k(n)/n against v_k, plus the mean square deviation."""
    started = time.perf_counter()
    left, right = window_sides(q, n, k)
    rows = _ensemble(TrackJob(q, k, n, seed, left, right), count, threads)
    speeds = np.array([r[0]["Y"] / n for r in rows])
    theory = float(effective_velocity(q, k))
    report = ExperimentReport("velocity", _spec_echo(q, k=k, n=n, replicas=count, seed=seed))
    se = float(speeds.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    report.checks.append(compare("Y/n", float(speeds.mean()), se, theory))
    report.checks.append(Check(
        "mean square deviation", float(np.mean((speeds - theory) ** 2)), 0.0, None, 0.0,
        "reported only", Verdict.PASS,
    ))
    report.series["Y"] = [r[0]["Y"] for r in rows]
    return _timed(report, started)


def bootstrap_variance_se(values: np.ndarray, rng: np.random.Generator, resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    draws = rng.integers(0, len(values), size=(resamples, len(values)))
    return float(values[draws].var(axis=1, ddof=1).std(ddof=1))


def diffusion_experiment(q: QParams, k: int, n: int, count: int, seed: int, threads: Optional[int] = None) -> ExperimentReport:
    """Var(Y_k(n))/n against D_k with a 5% finite-n allowance."""
    started = time.perf_counter()
    theory = float(diffusion_coefficient(q, k))
    left, right = window_sides(q, n, k)
    rows = _ensemble(TrackJob(q, k, n, seed, left, right), count, threads)
    ys = np.array([r[0]["Y"] for r in rows], dtype=float)
    estimate = float(ys.var(ddof=1) / n)
    se = bootstrap_variance_se(ys, replica_rng(seed, count)) / n
    report = ExperimentReport("diffusion", _spec_echo(q, k=k, n=n, replicas=count, seed=seed))
    report.checks.append(compare("Var(Y)/n", estimate, se, theory, slack=DIFFUSION_BIAS * theory))
    report.series["Y"] = [int(y) for y in ys]
    return _timed(report, started)


def empirical_cgf(values: np.ndarray, lam: float, n: int) -> Dict[str, float]:
    """(1/n) log mean exp(lam Y) with a delta-method s.e. and the effective sample size."""
    logs = lam * values
    est = (logsumexp(logs) - math.log(len(values))) / n
    w = np.exp(logs - logs.max())
    ess = float(w.sum() ** 2 / (w ** 2).sum())
    se = float(w.std(ddof=1) / (math.sqrt(len(values)) * w.mean()) / n) if len(values) > 1 else 0.0
    return {"estimate": float(est), "stderr": se, "ess": ess}


def ldp_experiment(
    q: QParams,
    k: int,
    n: int,
    count: int,
    lambdas: Sequence[float],
    seed: int,
    threads: Optional[int] = None,
) -> ExperimentReport:
    """Empirical cumulant function on a lambda grid against Lambda^Y; slope at 0 against v_k."""
    started = time.perf_counter()
    left, right = window_sides(q, n, k)
    rows = _ensemble(TrackJob(q, k, n, seed, left, right), count, threads)
    ys = np.array([r[0]["Y"] for r in rows], dtype=float)
    report = ExperimentReport("ldp", _spec_echo(q, k=k, n=n, replicas=count, seed=seed, lambdas=list(lambdas)))
    for lam in lambdas:
        emp = empirical_cgf(ys, lam, n)
        check = compare(f"Lambda({lam:g})", emp["estimate"], emp["stderr"], lambda_y(q, k, lam))
        if emp["ess"] < ESS_FLOOR:
            check.verdict = Verdict.WARN
            check.note = f"effective sample size {emp['ess']:.1f} below {ESS_FLOOR}"
            logger.warning("lambda=%g: %s", lam, check.note)
        report.checks.append(check)
    se = float(ys.std(ddof=1) / math.sqrt(count) / n) if count > 1 else 0.0
    report.checks.append(compare("slope at 0", float(ys.mean() / n), se, float(effective_velocity(q, k))))
    return _timed(report, started)


def correlation_experiment(
    q: QParams,
    k: int,
    n_list: Sequence[int],
    u: float,
    v: float,
    count: int,
    seed: int,
    exponent: float = 1.0,
    threshold: float = 1.0,
    threads: Optional[int] = None,
) -> ExperimentReport:
    """
    E|Y^(floor(n^a u))(n^2) - Y^(floor(n^a v))(n^2)|^2 / n^2 over an increasing n list.

    Passes when the gap decreases strictly along the list and the last
    value is below `threshold`.
    """
    started = time.perf_counter()
    report = ExperimentReport(
        "correlation",
        _spec_echo(q, k=k, n_list=list(n_list), u=u, v=v, exponent=exponent, replicas=count, seed=seed),
    )
    gaps, errors = [], []
    for n in n_list:
        iu, iv = math.floor(n ** exponent * u), math.floor(n ** exponent * v)
        steps = n * n
        if iu == iv:
            gaps.append(0.0)
            errors.append(0.0)
            continue
        extra = max(abs(iu), abs(iv), 1)
        left, right = window_sides(q, steps, k, extra_volumes=extra)
        rows = _ensemble(TrackJob(q, k, steps, seed + n, left, right, (iu, iv)), count, threads)
        sq = np.array([(r[0]["Y"] - r[1]["Y"]) ** 2 / steps for r in rows], dtype=float)
        gaps.append(float(sq.mean()))
        errors.append(float(sq.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0)
    report.series["n"] = list(n_list)
    report.series["gap"] = gaps
    report.series["stderr"] = errors
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:])) or all(g == 0 for g in gaps)
    final_ok = gaps[-1] <= threshold if gaps else True
    report.checks.append(Check(
        "gap trend", gaps[-1] if gaps else 0.0, errors[-1] if errors else 0.0, 0.0, threshold,
        f"strictly decreasing along n and last value <= {threshold:g}",
        Verdict.PASS if decreasing and final_ok else Verdict.FAIL,
    ))
    return _timed(report, started)


def exponential_identity_experiment(
    q: QParams,
    k: int,
    n: int,
    count: int,
    lambdas: Sequence[float],
    seed: int,
    threads: Optional[int] = None,
) -> ExperimentReport:
    """Mean exp(lam Y_k(n)) against mean exp(U_k(lam)(n - M_k(n)))."""
    started = time.perf_counter()
    left, right = window_sides(q, n, k)
    rows = _ensemble(TrackJob(q, k, n, seed, left, right), count, threads)
    ys = np.array([r[0]["Y"] for r in rows], dtype=float)
    free = np.array([n - r[0]["M"] for r in rows], dtype=float)
    report = ExperimentReport("exponential identity", _spec_echo(q, k=k, n=n, replicas=count, seed=seed))
    for lam in lambdas:
        lhs = np.exp(lam * ys)
        rhs = np.exp(U_cumulant(q, k, lam) * free)
        diff = lhs - rhs
        se = float(diff.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        report.checks.append(compare(f"E[exp] gap at {lam:g}", float(diff.mean()), se, 0.0))
    return _timed(report, started)


def decomposition_replica(job: TrackJob, replica: int) -> Dict[str, Any]:
    spec = SampleSpec(job.q, records=job.right, seed=job.seed, left=job.left)
    config = two_sided_nu(spec, replica)
    dec = orthogonal_decomposition(config, job.k, 1, job.n, job.q)
    return {t.level: float(t.centered) for t in dec.terms if t.level > 0}


def decomposition_experiment(q: QParams, k: int, n: int, count: int, seed: int, threads: Optional[int] = None) -> ExperimentReport:
    """Per-level centered increments DeltaY_{k,h}: mean 0 and zero pairwise covariance."""
    started = time.perf_counter()
    left, right = window_sides(q, n, k)
    job = TrackJob(q, k, n, seed, left, right)
    rows = run_replicas(partial(decomposition_replica, job), count, threads)
    report = ExperimentReport("decomposition", _spec_echo(q, k=k, n=n, replicas=count, seed=seed))
    levels = list(range(1, k))
    table = {h: np.array([r[h] for r in rows]) for h in levels}
    for h in levels:
        se = float(table[h].std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        report.checks.append(compare(f"mean DeltaY_{h}", float(table[h].mean()), se, 0.0))
    for a in levels:
        for b in levels:
            if a >= b:
                continue
            prod = (table[a] - table[a].mean()) * (table[b] - table[b].mean())
            se = float(prod.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
            report.checks.append(compare(f"cov DeltaY_{a},{b}", float(prod.mean()), se, 0.0))
    return _timed(report, started)
