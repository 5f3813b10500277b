"""
Box-Ball Toolkit - Identity Audit
=================================

Runs every exact identity of the toolkit on fresh nu_q samples:
- Linear slot evolution and the carrier / coordinate relation
- Position formula, overtaking counts and blocked-step counts
- Skip map semigroup, seat correspondence and recentering
- Capacity carriers against seat occupancy, excursion sizes
- Slot roundtrips in both directions and record characterization
- Narayana counts of excursions (global, by enumeration)

A failing identity yields its name, the message, and the offending
configuration in `@origin bits` form.
"""

import logging
import time
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Callable, Dict, List, Optional

import numpy as np

from boxball.errors import BoxBallError, IdentityViolation, NotFoundError
from boxball.harness import Check, ExperimentReport, Verdict, run_replicas, window_excursions
from boxball.lattice import (
    Configuration,
    descents,
    enumerate_excursions,
    evolve,
    is_record_bruteforce,
    record_flags_reference,
    records,
)
from boxball.qstat import QParams, narayana, q_from_vector
from boxball.sampler import SampleSpec, draw_slots, replica_rng, two_sided_nu
from boxball.seats import (
    SlotArray,
    capacity_carrier,
    check_carrier_xi,
    check_slot_dichotomy,
    offset,
    reconstruct,
    seat_decompose,
    slots,
)
from boxball.skip_map import (
    J_index,
    audit_counting,
    check_seat_correspondence,
    check_semigroup,
    skip_recentered,
)
from boxball.solitons import identify, run_tagged

logger = logging.getLogger(__name__)

MAX_AUDIT_SIZE = 3
RECORD_SPOT_CHECKS = 20


class CaseStatus(Enum):
    """Status of one audit case on one sample."""
    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


@dataclass
class AuditCase:
    """A named identity and the function that checks it on a configuration."""
    id: str
    name: str
    run: Callable[[Configuration, int], None]


@dataclass
class CaseResult:
    """Outcome of one case on one sample."""
    case_id: str
    replica: int
    status: CaseStatus
    message: str = ""
    counterexample: str = ""


# Sample-level identities

def _linear_slots(config: Configuration, n: int) -> None:
    nxt = evolve(config)
    before, after = seat_decompose(config), seat_decompose(nxt)
    for k in range(1, before.max_level + 1):
        o = offset(config, k, nxt)
        moved = {i + k + o: c for i, c in before.zeta(k).items()}
        if moved != after.zeta(k):
            raise IdentityViolation("linear slot evolution", f"k={k} o={o}", config.to_text())


def _carrier_coordinates(config: Configuration, n: int) -> None:
    for ell in range(1, seat_decompose(config).max_level + 1):
        check_carrier_xi(config, ell)


def _sizes(config: Configuration) -> List[int]:
    return [k for k in identify(config).sizes if k <= MAX_AUDIT_SIZE]


def _position_formula(config: Configuration, n: int) -> None:
    # run_tagged checks the per-step increment and the overtaken bound itself
    for k in _sizes(config):
        traj = run_tagged(config, k, 1, n)
        for m in range(traj.steps):
            if traj.free[m] and traj.census[m] != traj.overtakes[m]:
                raise IdentityViolation(
                    "overtake census", f"k={k} step {m + 1}: {traj.census[m]} != {traj.overtakes[m]}",
                    config.to_text(),
                )
        if traj.positions[n] != traj.position_formula(n):
            raise IdentityViolation("position formula", f"k={k}", config.to_text())


def _counting(config: Configuration, n: int) -> None:
    sizes = identify(config).sizes
    for k in _sizes(config):
        for ell in sizes:
            if ell != k and ell <= MAX_AUDIT_SIZE + 1:
                try:
                    audit_counting(config, k, ell, 1, n)
                except NotFoundError:
                    continue


def _blocked_spread(config: Configuration, n: int) -> None:
    view = seat_decompose(config)
    for k in _sizes(config):
        try:
            first, second = run_tagged(config, k, 1, n), run_tagged(config, k, 2, n)
        except NotFoundError:
            continue
        bound = 2 * (J_index(view, k, 2) - J_index(view, k, 1) - 1) + 1
        gap = abs(first.blocked_steps(n) - second.blocked_steps(n))
        if gap > bound:
            raise IdentityViolation("blocked-step spread", f"k={k}: {gap} > {bound}", config.to_text())


def _skip_structure(config: Configuration, n: int) -> None:
    for k in (1, 2):
        check_seat_correspondence(config, k)
        skip_recentered(config, k)
        for ell in (1, 2):
            check_semigroup(config, k, ell)


def _capacity_seats(config: Configuration, n: int) -> None:
    view = seat_decompose(config)
    for ell in range(1, view.max_level + 1):
        check_slot_dichotomy(view, ell)
        carrier = capacity_carrier(config, ell)
        if not np.array_equal(carrier.values, view.carrier_load(ell)):
            raise IdentityViolation("capacity carrier", f"l={ell}", config.to_text())


def _excursion_sizes(config: Configuration, n: int) -> None:
    view = seat_decompose(config)
    idx = view.records
    for i in range(idx.first, idx.last):
        length = idx.site(i + 1) - idx.site(i)
        census = slots(view, (i, i)).census()
        expected = 1 + 2 * sum(k * c for k, c in census.items())
        if length != expected:
            raise IdentityViolation("excursion size", f"excursion {i}: {length} != {expected}", config.to_text())


def _roundtrips(config: Configuration, n: int) -> None:
    view = seat_decompose(config)
    back = reconstruct(slots(view))
    if back != config:
        raise IdentityViolation("slot roundtrip", f"rebuilt {back.to_text()}", config.to_text())
    drawn = draw_slots_for(config)
    if drawn is not None:
        rebuilt = reconstruct(drawn)
        again = slots(seat_decompose(rebuilt), (0, drawn.records - 2))
        if again.zeta != drawn.zeta:
            raise IdentityViolation("slot array roundtrip", "drawn slots not recovered", rebuilt.to_text())


def draw_slots_for(config: Configuration) -> Optional[SlotArray]:
    """A small slot array derived from the sample's size so the reverse roundtrip is exercised too."""
    view = seat_decompose(config)
    census = slots(view).census()
    if not census:
        return None
    top = max(census)
    q = q_from_vector(["1/4"] * top)
    return draw_slots(q, max(2, len(view.records.sites) // 4), replica_rng(config.balls, len(config)))


def _record_scan(config: Configuration, n: int) -> None:
    # every site of the window, plus one past each end, against the suffix-sum pass
    idx = records(config)
    flags = record_flags_reference(config, idx.lo - 1, idx.hi + 1)
    for x, flag in zip(range(idx.lo - 1, idx.hi + 2), flags):
        if idx.is_record(x) != flag:
            raise IdentityViolation("record characterization", f"site {x}", config.to_text())
    # spot checks of the direct definition spread over the whole window
    for x in np.linspace(idx.lo, idx.hi, num=min(RECORD_SPOT_CHECKS, idx.hi - idx.lo + 1), dtype=np.int64):
        if idx.is_record(int(x)) != is_record_bruteforce(config, int(x)):
            raise IdentityViolation("record characterization", f"site {int(x)}", config.to_text())


SAMPLE_CASES = [
    AuditCase("linear", "linear slot evolution", _linear_slots),
    AuditCase("carrier-xi", "carrier / coordinate shift", _carrier_coordinates),
    AuditCase("position", "position formula and overtaken bound", _position_formula),
    AuditCase("counting", "overtaking and blocked counts", _counting),
    AuditCase("spread", "blocked-step spread of two solitons", _blocked_spread),
    AuditCase("skip", "skip semigroup, seats and recentering", _skip_structure),
    AuditCase("capacity", "capacity carriers and slot dichotomy", _capacity_seats),
    AuditCase("excursion-size", "excursion size from slots", _excursion_sizes),
    AuditCase("roundtrip", "slot roundtrips", _roundtrips),
    AuditCase("records", "record characterization", _record_scan),
]


def narayana_counts(m_max: int = 6) -> List[CaseResult]:
    """Exhaustive excursion enumeration against Narayana numbers."""
    out = []
    for m in range(m_max + 1):
        counts = Counter(descents(w) for w in enumerate_excursions(m))
        expected = {z: narayana(m, z) for z in range(m + 1) if narayana(m, z)}
        status = CaseStatus.PASS if dict(counts) == expected else CaseStatus.FAIL
        out.append(CaseResult("narayana", -1, status, f"m={m}: {dict(counts)} vs {expected}"))
    return out


# Driver

@dataclass(frozen=True)
class AuditJob:
    """Sampling parameters shared by every audited replica."""
    q: QParams
    n: int
    seed: int
    left: int
    right: int


def audit_replica(job: AuditJob, replica: int) -> List[CaseResult]:
    """Draw one sample and run every case on it."""
    config = two_sided_nu(SampleSpec(job.q, records=job.right, seed=job.seed, left=job.left), replica)
    results = []
    for case in SAMPLE_CASES:
        try:
            case.run(config, job.n)
            results.append(CaseResult(case.id, replica, CaseStatus.PASS))
        except IdentityViolation as exc:
            results.append(CaseResult(case.id, replica, CaseStatus.FAIL, str(exc), exc.counterexample or config.to_text()))
        except NotFoundError as exc:
            results.append(CaseResult(case.id, replica, CaseStatus.SKIP, str(exc)))
        except BoxBallError as exc:
            results.append(CaseResult(case.id, replica, CaseStatus.FAIL, f"{type(exc).__name__}: {exc}", config.to_text()))
    return results


class IdentityAuditor:
    """
    Drives the exact identities over an ensemble.

    Features:
    - One process-pool task per sample, folded in replica order
    - Global enumeration checks run once
    - Report with per-case pass counts and the first counterexample
    """

    def __init__(self, q: QParams, samples: int, n: int, seed: int, threads: Optional[int] = None):
        self.q = q
        self.samples = samples
        self.n = n
        self.seed = seed
        self.threads = threads
        self.results: List[CaseResult] = []

    def run_all(self) -> ExperimentReport:
        started = time.perf_counter()
        side = window_excursions(self.q, self.n, MAX_AUDIT_SIZE)
        job = AuditJob(self.q, self.n, self.seed, max(1, side // 4), side)
        logger.info("auditing %d samples, n=%d, %d+%d excursions", self.samples, self.n, job.left, job.right)
        per_sample = run_replicas(partial(audit_replica, job), self.samples, self.threads)
        self.results = [r for rows in per_sample for r in rows] + narayana_counts()
        report = self._generate_report()
        report.timing = {"wall_seconds": round(time.perf_counter() - started, 3)}
        return report

    def failures(self) -> List[CaseResult]:
        return [r for r in self.results if r.status is CaseStatus.FAIL]

    def _generate_report(self) -> ExperimentReport:
        report = ExperimentReport(
            "audit",
            {"q": self.q.describe(), "samples": self.samples, "n": self.n, "seed": self.seed},
        )
        by_case: Dict[str, List[CaseResult]] = {}
        for r in self.results:
            by_case.setdefault(r.case_id, []).append(r)
        for case_id, rows in by_case.items():
            failed = [r for r in rows if r.status is CaseStatus.FAIL]
            checked = sum(1 for r in rows if r.status is not CaseStatus.SKIP)
            check = Check(
                case_id, float(len(failed)), 0.0, 0.0, 0.0, f"zero violations over {checked} checks",
                Verdict.FAIL if failed else Verdict.PASS,
            )
            if failed:
                check.note = failed[0].message
            report.checks.append(check)
        counterexamples = [
            {"case": r.case_id, "replica": r.replica, "message": r.message, "config": r.counterexample}
            for r in self.failures()
        ]
        report.series["counterexamples"] = counterexamples[:10]
        return report


def identity_audit(q: QParams, samples: int, n: int, seed: int, threads: Optional[int] = None) -> ExperimentReport:
    """Run the full audit; the report fails if any identity is violated."""
    return IdentityAuditor(q, samples, n, seed, threads).run_all()
