"""
Box-Ball Toolkit - Skip Map
===========================

The k-skip map Psi_k and the counting identities built on it:
- Psi_k(eta): keep records and seats above level k, relabel by xi_k
- Slot indices J_k(i) of nonempty k-slots and crossing indices sigma
- Overtaking counts N, blocked counts M and their slot-sum expressions
- Orthogonal decomposition of a tagged soliton's displacement
"""

import logging
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from boxball.errors import DomainError, IdentityViolation, NotFoundError
from boxball.lattice import Configuration, evolve, recenter, records
from boxball.qstat import QParams, alpha, effective_velocity, rbar
from boxball.seats import SeatView, SlotArray, seat_decompose
from boxball.solitons import run_tagged, track_all

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SkipResult:
    """Psi_k(eta) with the xi_k(eta, 0) used to re-anchor it."""
    image: Configuration
    origin_shift: int


@dataclass
class CrossingIndices:
    """J_k(i) for every realized nonempty slot, plus sigma values as they are computed."""
    J: Dict[Tuple[int, int], int] = field(default_factory=dict)
    sigma: Dict[Tuple[int, int, int, int], Optional[int]] = field(default_factory=dict)


def skip(config: Configuration, k: int, view: Optional[SeatView] = None) -> SkipResult:
    """
    Delete every seat of level <= k and close up the gaps.

    The site y of a record or of a seat above level k moves to
    xi_k(eta, y) - xi_k(eta, 0), so s_inf(Psi_k(eta), 0) = -xi_k(eta, 0).
    """
    if k < 0:
        raise DomainError(f"skip level must be non-negative, got {k}")
    view = view if view is not None else seat_decompose(config)
    mask = view.slot_mask(k)
    shift = view.xi(k, 0)
    bits = config.window(view.lo, view.hi)[mask]
    first = int(view.xi_array(k)[mask][0]) if mask.any() else view.xi(k, view.lo)
    return SkipResult(Configuration(bits, first - shift).trimmed(), shift)


def skip_recentered(config: Configuration, k: int) -> Configuration:
    """
    Psi_k of the recentered configuration; equals the recentered Psi_k(eta).

    Raises:
        IdentityViolation: if the two orders disagree
    """
    direct = skip(recenter(config), k).image
    other = recenter(skip(config, k).image)
    if direct != other:
        raise IdentityViolation("skip recentering", f"k={k}: {direct.to_text()} != {other.to_text()}", config.to_text())
    return direct


# Slot indices

def _nonempty_slots(view: SeatView, k: int) -> List[int]:
    return sorted(view.zeta(k))


def J_index(view: SeatView, k: int, i: int) -> int:
    """J_k(i): slot of the i-th nonempty k-slot, index 1 being the first at or right of 0."""
    keys = _nonempty_slots(view, k)
    j = bisect_left(keys, 0) + i - 1
    if not 0 <= j < len(keys):
        raise NotFoundError(f"no nonempty {k}-slot with index {i}")
    return keys[j]


def _J_extended(view: SeatView, k: int, i: Optional[int]) -> int:
    # None stands for +inf: one past the last realized nonempty slot
    keys = _nonempty_slots(view, k)
    if not keys:
        return 0
    if i is None:
        return keys[-1] + 1
    j = bisect_left(keys, 0) + i - 1
    if j < 0:
        return keys[0] + j
    if j >= len(keys):
        return keys[-1] + 1 + (j - len(keys))
    return keys[j]


def crossing_indices(view: SeatView, slot_array: Optional[SlotArray] = None) -> CrossingIndices:
    """J_k(i) for every level and every nonempty slot of the view (or of the given block)."""
    out = CrossingIndices()
    for k in range(1, view.max_level + 1):
        keys = _nonempty_slots(view, k)
        split = bisect_left(keys, 0)
        for pos, j in enumerate(keys):
            if slot_array is None or slot_array.get(k, j):
                out.J[(k, pos - split + 1)] = j
    return out


def slot_sum(view: SeatView, k: int, first: int, last: int) -> int:
    """Sum of zeta_k(j) over first <= j <= last; zero when empty."""
    return sum(c for j, c in view.zeta(k).items() if first <= j <= last)


def sigma(config: Configuration, k: int, ell: int, i: int, n: int) -> Optional[int]:
    """
    Least volume index j with X^(j)_{l-k}(Psi_k(eta~), n) >= J_k(eta~, i).

    `config` must already be recentered. Returns None when no such soliton
    exists (the empty infimum).

    Raises:
        DomainError: unless ell > k
        NotFoundError: when Psi_k(eta~) holds no (ell - k)-soliton
    """
    if ell <= k:
        raise DomainError(f"sigma needs l > k, got k={k}, l={ell}")
    view = seat_decompose(config)
    target = J_index(view, k, i)
    paths = track_all(skip(config, k, view).image, ell - k, n)
    if not paths:
        raise NotFoundError(f"no {ell}-soliton to cross slot {target}")
    order = sorted(paths)
    finals = [paths[j][n] for j in order]
    pos = bisect_left(finals, target)
    return order[pos] if pos < len(order) else None


def _record_count_at(image: Configuration, site: int, n: int) -> int:
    """Number of m < n with site not a record of T^m image."""
    blocked, current = 0, image
    for _ in range(n):
        if not records(current).is_record(site):
            blocked += 1
        current = evolve(current)
    return blocked


def _check(report: Dict[str, Any], name: str, lhs: int, rhs: Any, ok: bool, config: Configuration) -> None:
    report[name] = {"lhs": lhs, "rhs": rhs, "pass": ok}
    if not ok:
        raise IdentityViolation(name, f"{lhs} vs {rhs}", config.to_text())


def audit_counting(config: Configuration, k: int, ell: int, i: int, n: int) -> Dict[str, Any]:
    """
    Check the counting identities for the i-th k-soliton of eta~.

    For l < k: the l-solitons overtaken equal the zeta_l slot sum over the
    path of the image (k - l)-soliton in Psi_l(eta~). For l > k: the
    l-solitons that overtook it are bracketed by slot sums between the
    crossing indices at times 0 and n. The blocked-step count always equals
    the non-record count at J_k(i) in T^m Psi_k(eta~).

    Returns:
        {identity: {lhs, rhs, pass}}

    Raises:
        IdentityViolation: on the first failing identity
    """
    base = recenter(config)
    view = seat_decompose(base)
    traj = run_tagged(base, k, i, n, numbering="volume")
    report: Dict[str, Any] = {"k": k, "l": ell, "i": i, "n": n}

    J = J_index(view, k, i)
    image_k = skip(base, k, view).image
    blocked, expected = traj.blocked_steps(n), _record_count_at(image_k, J, n)
    _check(report, "blocked count", blocked, expected, blocked == expected, base)

    if 0 < ell < k:
        paths = track_all(skip(base, ell, view).image, k - ell, n)
        if i not in paths:
            raise NotFoundError(f"no image of the {k}-soliton {i} in Psi_{ell}")
        path = paths[i]
        rhs = slot_sum(view, ell, path[0] + 1, path[n])
        lhs = traj.overtaken_total(ell, n)
        _check(report, "overtaken count", lhs, rhs, lhs == rhs, base)
    elif ell > k:
        s0, sn = sigma(base, k, ell, i, 0), sigma(base, k, ell, i, n)
        J0, Jn = _J_extended(view, ell, s0), _J_extended(view, ell, sn)
        low, high = slot_sum(view, ell, Jn, J0 - 1), slot_sum(view, ell, Jn - 1, J0)
        lhs = traj.overtaken_by_total(ell, n)
        _check(report, "overtaking bracket", lhs, [low, high], low <= lhs <= high, base)
        report["sigma"] = {"0": s0, str(n): sn}
    return report


# Orthogonal decomposition

@dataclass
class DecompositionTerm:
    """One summand of the decomposition of Y^i_k(n)."""
    level: int  # 0 marks the blocked-step term
    coefficient: Any
    count: int
    centered: Any

    @property
    def value(self) -> Any:
        return self.coefficient * self.centered


@dataclass
class Decomposition:
    """Terms, their total and the directly tracked displacement."""
    k: int
    index: int
    steps: int
    displacement: int
    terms: List[DecompositionTerm] = field(default_factory=list)

    @property
    def total(self) -> Any:
        return sum((t.value for t in self.terms), Fraction(0))

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "index": self.index,
            "n": self.steps,
            "Y": self.displacement,
            "total": str(self.total),
            "terms": [
                {"level": t.level, "coefficient": str(t.coefficient), "count": t.count, "value": str(t.value)}
                for t in self.terms
            ],
        }


def delta_Y(config: Configuration, k: int, h: int, i: int, n: int, q: QParams) -> Tuple[Any, int]:
    """
    Centered slot sum over the path of the i-th (k - h)-soliton of Psi_h(eta~).

    Returns:
        (sum of zeta_h(j) - alpha_h over the path, path length)
    """
    if not 1 <= h < k:
        raise DomainError(f"level h must satisfy 1 <= h < k, got h={h}, k={k}")
    base = recenter(config)
    view = seat_decompose(base)
    paths = track_all(skip(base, h, view).image, k - h, n)
    if i not in paths:
        raise NotFoundError(f"no image of the {k}-soliton {i} in Psi_{h}")
    path = paths[i]
    count = path[n] - path[0]
    return slot_sum(view, h, path[0] + 1, path[n]) - alpha(q, h) * count, count


def orthogonal_decomposition(config: Configuration, k: int, i: int, n: int, q: QParams) -> Decomposition:
    """
    Y^i_k(n) = (v_k / r_k)(n - M_k(n)) + sum_h 2 (v_h / r_h) DeltaY_{k,h}.

    The equality is exact for every configuration; the q-dependent
    coefficients only reweight the centered slot sums.

    Raises:
        IdentityViolation: if the terms fail to add up to Y
    """
    base = recenter(config)
    traj = run_tagged(base, k, i, n, numbering="volume")
    out = Decomposition(k, i, n, traj.increment(n))
    free_steps = n - traj.blocked_steps(n)
    out.terms.append(DecompositionTerm(0, effective_velocity(q, k) / rbar(q, k), free_steps, free_steps))
    for h in range(1, k):
        centered, count = delta_Y(base, k, h, i, n, q)
        coef = 2 * effective_velocity(q, h) / rbar(q, h)
        out.terms.append(DecompositionTerm(h, coef, count, centered))

    total = out.total
    exact = isinstance(total, Fraction)
    if (exact and total != out.displacement) or (not exact and abs(float(total) - out.displacement) > 1e-8):
        raise IdentityViolation(
            "orthogonal decomposition", f"k={k} i={i} n={n}: {total} != {out.displacement}", base.to_text()
        )
    logger.debug("decomposition k=%d i=%d n=%d: %s", k, i, n, [str(t.value) for t in out.terms])
    return out


# Structural checks

def check_semigroup(config: Configuration, k: int, ell: int) -> None:
    """Psi_k(Psi_l(eta)) = Psi_{k+l}(eta) and zeta_l(Psi_k(eta)) = zeta_{k+l}(eta)."""
    twice = skip(skip(config, ell).image, k).image
    once = skip(config, k + ell).image
    if twice != once:
        raise IdentityViolation("skip semigroup", f"k={k} l={ell}: {twice.to_text()} != {once.to_text()}", config.to_text())
    view = seat_decompose(config)
    image_view = seat_decompose(skip(config, k, view).image)
    for level in range(1, view.max_level - k + 1):
        if image_view.zeta(level) != view.zeta(k + level):
            raise IdentityViolation(
                "slot shift under skip", f"zeta_{level}(Psi_{k}) != zeta_{k + level}", config.to_text()
            )


def check_seat_correspondence(config: Configuration, k: int) -> None:
    """Every kept site keeps its seat direction and drops k levels."""
    view = seat_decompose(config)
    result = skip(config, k, view)
    image_view = seat_decompose(result.image)
    mask = view.slot_mask(k)
    sites = view.lo + np.flatnonzero(mask)
    for y in sites.tolist():
        x = view.xi(k, y) - result.origin_shift
        label = view.label(y)
        expected = None if label is None else (label[0] - k, label[1])
        if image_view.label(x) != expected:
            raise IdentityViolation(
                "seat correspondence", f"k={k} site {y} -> {x}: {image_view.label(x)} != {expected}", config.to_text()
            )
