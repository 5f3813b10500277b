"""
Box-Ball Toolkit - Soliton Identification
=========================================

Soliton structure of a configuration and its time evolution:
- Takahashi-Satsuma grouping inside every excursion
- Natural numbering and numbering by volume representatives
- Connected groups Con(gamma) and their volumes
- Free / blocked classification against larger solitons
- Tracking a tagged soliton step by step (tails become heads)
- Interaction counters N_{k,l}, M_k and M_{k,l}
"""

import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

from boxball.errors import IdentityViolation, LightConeError, NotFoundError
from boxball.lattice import (
    MAX_SITES,
    Configuration,
    RecordIndex,
    evolve,
    excursions,
    excursions_meeting,
    records,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Soliton:
    """A k-soliton: k heads (sites holding 1) and k tails (sites holding 0)."""
    size: int
    heads: Tuple[int, ...]
    tails: Tuple[int, ...]

    @property
    def position(self) -> int:
        """X(gamma) = inf(gamma) - 1."""
        return min(self.heads[0], self.tails[0]) - 1

    @property
    def sup(self) -> int:
        return max(self.heads[-1], self.tails[-1])

    @property
    def sites(self) -> Tuple[int, ...]:
        return tuple(sorted(self.heads + self.tails))

    def within(self, lo: int, hi: int) -> bool:
        return lo <= self.position + 1 and self.sup <= hi


@dataclass(frozen=True)
class VolumeGroup:
    """Maximal run of connected same-size solitons; the leftmost represents it."""
    size: int
    members: Tuple[Soliton, ...]

    @property
    def representative(self) -> Soliton:
        return self.members[0]

    @property
    def volume(self) -> int:
        return len(self.members)


def _runs(sites: List[int], bits: List[int]) -> List[Tuple[int, List[int]]]:
    runs: List[Tuple[int, List[int]]] = []
    for x, b in zip(sites, bits):
        if runs and runs[-1][0] == b:
            runs[-1][1].append(x)
        else:
            runs.append((b, [x]))
    return runs


def takahashi_satsuma(sites: List[int], bits: List[int]) -> List[Soliton]:
    """
    Group an excursion body into solitons.

    Repeatedly selects the leftmost run whose successor is at least as
    long, pairs its k letters with the first k letters of the successor,
    and removes the pair.
    """
    runs = _runs(sites, bits)
    found: List[Soliton] = []
    while runs:
        j = next((j for j in range(len(runs) - 1) if len(runs[j + 1][1]) >= len(runs[j][1])), None)
        if j is None:
            raise IdentityViolation(
                "takahashi-satsuma", f"no run qualifies in body at sites {sites[0]}..{sites[-1]}"
            )
        bit, first = runs[j]
        nxt_bit, nxt = runs[j + 1]
        k = len(first)
        ones, zeros = (first, nxt[:k]) if bit == 1 else (nxt[:k], first)
        found.append(Soliton(k, tuple(ones), tuple(zeros)))

        remaining = runs[:j]
        if len(nxt) > k:
            remaining.append((nxt_bit, nxt[k:]))
        remaining.extend(runs[j + 2:])
        runs = []
        for b, xs in remaining:
            if runs and runs[-1][0] == b:
                runs[-1] = (b, runs[-1][1] + xs)
            else:
                runs.append((b, list(xs)))
    return found


class SolitonSet:
    """
    Solitons of one configuration grouped by size.

    Features:
    - Left-to-right lists per size
    - Natural numbering relative to s_inf(0)
    - Volume groups and numbering over representatives
    - Lookup by head set for time tracking
    """

    def __init__(self, solitons: Iterable[Soliton], index: RecordIndex):
        self.records = index
        self.by_size: Dict[int, List[Soliton]] = {}
        for sol in solitons:
            self.by_size.setdefault(sol.size, []).append(sol)
        for sols in self.by_size.values():
            sols.sort(key=lambda s: s.position)
        self._positions = {k: [s.position for s in v] for k, v in self.by_size.items()}
        self._by_heads = {(s.size, frozenset(s.heads)): s for v in self.by_size.values() for s in v}
        self._groups: Dict[int, List[VolumeGroup]] = {}

    @property
    def sizes(self) -> List[int]:
        return sorted(self.by_size)

    @property
    def max_size(self) -> int:
        return max(self.by_size) if self.by_size else 0

    def solitons(self, k: int) -> List[Soliton]:
        return self.by_size.get(k, [])

    def all(self) -> List[Soliton]:
        return sorted((s for v in self.by_size.values() for s in v), key=lambda s: (s.position, s.size))

    def census(self) -> Dict[int, int]:
        return {k: len(v) for k, v in sorted(self.by_size.items())}

    def find(self, k: int, heads: Iterable[int]) -> Optional[Soliton]:
        return self._by_heads.get((k, frozenset(heads)))

    # Natural numbering

    def _split(self, positions: List[int]) -> int:
        return bisect_left(positions, self.records.site(0))

    def natural_index(self, sol: Soliton) -> int:
        positions = self._positions.get(sol.size, [])
        j = bisect_left(positions, sol.position)
        return j - self._split(positions) + 1

    def by_natural(self, k: int, i: int) -> Soliton:
        positions = self._positions.get(k, [])
        j = i + self._split(positions) - 1
        if not 0 <= j < len(positions):
            raise NotFoundError(f"no {k}-soliton with natural index {i}")
        return self.by_size[k][j]

    # Volumes

    def volume_groups(self, k: int) -> List[VolumeGroup]:
        """Partition of the k-solitons into connected groups, left to right."""
        if k in self._groups:
            return self._groups[k]
        larger = sorted(x for size, sols in self.by_size.items() if size > k for s in sols for x in s.sites)
        groups: List[List[Soliton]] = []
        for sol in self.solitons(k):
            if groups and self._connected(groups[-1][-1], sol, larger):
                groups[-1].append(sol)
            else:
                groups.append([sol])
        self._groups[k] = [VolumeGroup(k, tuple(g)) for g in groups]
        return self._groups[k]

    def _connected(self, left: Soliton, right: Soliton, larger: List[int]) -> bool:
        lo, hi = left.sup, right.position
        if self.records.site(self.records.index_of(hi)) >= lo:
            return False
        return bisect_right(larger, hi) == bisect_left(larger, lo)

    def group_of(self, sol: Soliton) -> VolumeGroup:
        for group in self.volume_groups(sol.size):
            if sol in group.members:
                return group
        raise NotFoundError(f"{sol} is not in this set")

    def representatives(self, k: int) -> List[Soliton]:
        return [g.representative for g in self.volume_groups(k)]

    def volume_index(self, sol: Soliton) -> int:
        reps = [r.position for r in self.representatives(sol.size)]
        rep = self.group_of(sol).representative
        return bisect_left(reps, rep.position) - self._split(reps) + 1

    def by_volume(self, k: int, i: int) -> Soliton:
        reps = self.representatives(k)
        j = i + self._split([r.position for r in reps]) - 1
        if not 0 <= j < len(reps):
            raise NotFoundError(f"no {k}-soliton with volume index {i}")
        return reps[j]

    # Interaction

    def is_free(self, sol: Soliton) -> bool:
        """No larger soliton of sol's excursion has its position left of X(sol)."""
        x = sol.position
        left = self.records.site(self.records.index_of(x))
        for size, positions in self._positions.items():
            if size <= sol.size:
                continue
            # the leftmost soliton of an excursion has X equal to its record
            j = bisect_left(positions, left)
            if j < len(positions) and positions[j] < x:
                return False
        return True

    def excursion_members(self, sol: Soliton) -> List[Soliton]:
        """Solitons sharing sol's excursion."""
        i = self.records.index_of(sol.position + 1)
        lo, hi = self.records.site(i), self.records.site(i + 1) - 1
        return [s for s in self.all() if s.within(lo, hi)]


def identify(
    config: Configuration,
    site_range: Optional[Tuple[int, int]] = None,
    index: Optional[RecordIndex] = None,
) -> SolitonSet:
    """
    Run the Takahashi-Satsuma algorithm on every excursion.

    Args:
        config: configuration to decompose
        site_range: restrict to excursions meeting this inclusive range
        index: precomputed records of config

    Returns:
        SolitonSet over the processed excursions
    """
    idx = index if index is not None else records(config)
    if site_range is None:
        excs = excursions(config, index=idx)
    else:
        excs = excursions_meeting(config, site_range[0], site_range[1], index=idx)
    found: List[Soliton] = []
    for exc in excs:
        if exc.ones == 0:
            continue
        body_sites = list(range(exc.start + 1, exc.end + 1))
        found.extend(takahashi_satsuma(body_sites, list(exc.word[1:])))
    return SolitonSet(found, idx)


def is_free(sol: Soliton, sset: SolitonSet, index: Optional[RecordIndex] = None) -> bool:
    """Module-level form of SolitonSet.is_free; `index` overrides the set's records."""
    if index is not None and index is not sset.records:
        return SolitonSet(sset.all(), index).is_free(sol)
    return sset.is_free(sol)


def volume_groups(sset: SolitonSet, index: Optional[RecordIndex] = None) -> Dict[int, List[VolumeGroup]]:
    """Connected groups for every size present."""
    target = sset if index is None or index is sset.records else SolitonSet(sset.all(), index)
    return {k: target.volume_groups(k) for k in target.sizes}


def track_step(sol: Soliton, config: Configuration, evolved: Optional[Configuration] = None) -> Soliton:
    """
    Follow sol through one step: gamma(1) is the soliton of T eta whose heads
    are the tails of gamma.

    Raises:
        IdentityViolation: when the tails match no soliton of T eta
    """
    nxt = evolved if evolved is not None else evolve(config)
    nxt_set = identify(nxt, site_range=(min(sol.tails), max(sol.tails)))
    match = nxt_set.find(sol.size, sol.tails)
    if match is None:
        raise IdentityViolation("soliton tracking", f"tails {sol.tails} match no soliton", config.to_text())
    return match


def overtake_census(tagged: Soliton, sset: SolitonSet) -> Dict[int, int]:
    """Smaller solitons inside [H_1, T_1] of the tagged soliton, by size."""
    lo, hi = tagged.heads[0], tagged.tails[0]
    out: Dict[int, int] = {}
    for size in sset.sizes:
        if size >= tagged.size:
            continue
        count = sum(1 for s in sset.solitons(size) if s.within(lo, hi))
        if count:
            out[size] = count
    return out


@dataclass
class TaggedTrajectory:
    """Time series of one tagged soliton and its interaction counters."""
    size: int
    index: int
    numbering: str  # "volume" or "natural"
    positions: List[int] = field(default_factory=list)
    free: List[bool] = field(default_factory=list)  # free[m] for m = 0..n-1
    overtakes: List[Dict[int, int]] = field(default_factory=list)  # N_{k,l}(m), m = 1..n
    overtaken_by: List[Dict[int, int]] = field(default_factory=list)  # per-step M_{k,l}, m = 1..n
    census: List[Dict[int, int]] = field(default_factory=list)  # [H_1, T_1] census at m-1

    @property
    def steps(self) -> int:
        return len(self.positions) - 1

    def increment(self, n: int) -> int:
        """Y(n) = X(n) - X(0)."""
        return self.positions[n] - self.positions[0]

    def blocked_steps(self, n: int) -> int:
        """M_k(n): steps m in 0..n-1 at which the soliton was not free."""
        return sum(1 for f in self.free[:n] if not f)

    def overtaken_total(self, ell: int, n: int) -> int:
        """Sum over m <= n of N_{k,ell}(m)."""
        return sum(row.get(ell, 0) for row in self.overtakes[:n])

    def overtaken_by_total(self, ell: int, n: int) -> int:
        """M_{k,ell}(n)."""
        return sum(row.get(ell, 0) for row in self.overtaken_by[:n])

    def position_formula(self, n: int) -> int:
        """Right-hand side of X(n) = X(0) + k(n - M_k(n)) + 2 sum_m sum_l l N_{k,l}(m)."""
        extra = sum(ell * c for row in self.overtakes[:n] for ell, c in row.items())
        return self.positions[0] + self.size * (n - self.blocked_steps(n)) + 2 * extra

    def larger_sizes(self) -> List[int]:
        return sorted({ell for row in self.overtaken_by for ell in row})

    def overtaken_bounds(self, n: int) -> Tuple[int, int]:
        """Lower and upper bound on M_k(n) from the overtaking counts."""
        total = sum(self.overtaken_by_total(ell, n) for ell in self.larger_sizes())
        return 2 * total, 1 + 2 * total


def _tagged(sset: SolitonSet, k: int, index: int, numbering: str) -> Soliton:
    if numbering == "volume":
        return sset.by_volume(k, index)
    if numbering == "natural":
        return sset.by_natural(k, index)
    raise ValueError(f"unknown numbering {numbering!r}")


def _crossings(
    tagged: Soliton,
    moved: Soliton,
    sset: SolitonSet,
    nxt_set: SolitonSet,
    config: Configuration,
) -> Tuple[Dict[int, int], Dict[int, int]]:
    """
    Solitons whose X passes the tagged soliton's X in one step.

    Returns (smaller ones overtaken, larger ones overtaking), by size.
    Every soliton of the window is followed, since a larger soliton
    can reach the tagged one while their excursions merge.
    """
    passed: Dict[int, int] = {}
    passing: Dict[int, int] = {}
    x0, x1 = tagged.position, moved.position
    for size in sset.sizes:
        if size == tagged.size:
            continue
        for other in sset.solitons(size):
            after = nxt_set.find(size, other.tails)
            if after is None:
                raise IdentityViolation("soliton tracking", f"tails {other.tails} match no soliton", config.to_text())
            if size < tagged.size and x0 < other.position and x1 > after.position:
                passed[size] = passed.get(size, 0) + 1
            elif size > tagged.size and other.position < x0 and after.position > x1:
                passing[size] = passing.get(size, 0) + 1
    return passed, passing


def run_tagged(
    config: Configuration,
    size_k: int,
    index: int,
    n_steps: int,
    numbering: str = "volume",
    max_sites: Optional[int] = MAX_SITES,
) -> TaggedTrajectory:
    """
    Track the index-th k-soliton for n_steps and record its counters.

    N and M_{k,l} follow the overtaking definition directly: a soliton
    is counted at step m when its X is on one side of the tagged X at
    m - 1 and on the other side at m.

    Raises:
        NotFoundError: the requested soliton does not exist
        LightConeError: the window outgrew max_sites
        IdentityViolation: the position formula failed at some step
    """
    current = config
    sset = identify(current)
    tagged = _tagged(sset, size_k, index, numbering)
    traj = TaggedTrajectory(size_k, index, numbering, positions=[tagged.position])

    for m in range(1, n_steps + 1):
        free = sset.is_free(tagged)
        nxt = evolve(current)
        if max_sites is not None and len(nxt) > max_sites:
            raise LightConeError(f"window spans {len(nxt)} sites at step {m}, cap is {max_sites}")
        nxt_set = identify(nxt)
        moved = nxt_set.find(size_k, tagged.tails)
        if moved is None:
            raise IdentityViolation("soliton tracking", f"tails {tagged.tails} match no soliton", current.to_text())
        passed, passing = _crossings(tagged, moved, sset, nxt_set, current)

        traj.free.append(free)
        traj.census.append(overtake_census(tagged, sset) if free else {})
        traj.overtakes.append(passed)
        traj.overtaken_by.append(passing)
        traj.positions.append(moved.position)

        expected = size_k + 2 * sum(ell * c for ell, c in passed.items()) if free else 0
        if moved.position - tagged.position != expected:
            raise IdentityViolation(
                "position increment",
                f"step {m}: moved {moved.position - tagged.position}, expected {expected}",
                current.to_text(),
            )
        low, high = traj.overtaken_bounds(m)
        if traj.free[0] and not low <= traj.blocked_steps(m) <= high:
            raise IdentityViolation(
                "overtaken bound",
                f"step {m}: M_k={traj.blocked_steps(m)} outside [{low}, {high}]",
                config.to_text(),
            )
        logger.debug("step %d: X=%d free=%s N=%s", m, moved.position, free, passed)
        current, sset, tagged = nxt, nxt_set, moved

    return traj


def track_all(config: Configuration, k: int, n: int) -> Dict[int, List[int]]:
    """
    Positions of every volume representative of size k over n steps,
    keyed by its volume index at time 0.
    """
    sset = identify(config)
    current = config
    tracked = {sset.volume_index(r): r for r in sset.representatives(k)}
    out = {j: [r.position] for j, r in tracked.items()}
    for _ in range(n):
        current = evolve(current)
        nxt_set = identify(current)
        for j, sol in tracked.items():
            moved = nxt_set.find(k, sol.tails)
            if moved is None:
                raise IdentityViolation("soliton tracking", f"tails {sol.tails} match no soliton", current.to_text())
            tracked[j] = moved
            out[j].append(moved.position)
    return out


def soliton_set_to_json(sset: SolitonSet) -> List[Dict[str, Any]]:
    """Array of {k, position, heads, tails, natural_index, volume_rep, volume}."""
    rows = []
    for sol in sset.all():
        group = sset.group_of(sol)
        rows.append({
            "k": sol.size,
            "position": sol.position,
            "heads": list(sol.heads),
            "tails": list(sol.tails),
            "natural_index": sset.natural_index(sol),
            "volume_rep": group.representative.position,
            "volume": group.volume,
        })
    return rows


def trajectory_to_json(traj: TaggedTrajectory) -> Dict[str, Any]:
    return {
        "k": traj.size,
        "index": traj.index,
        "numbering": traj.numbering,
        "positions": traj.positions,
        "steps": [
            {
                "m": m + 1,
                "free_before": traj.free[m],
                "N": {str(k): v for k, v in sorted(traj.overtakes[m].items())},
                "M_by": {str(k): v for k, v in sorted(traj.overtaken_by[m].items())},
            }
            for m in range(traj.steps)
        ],
        "M": traj.blocked_steps(traj.steps),
        "Y": traj.increment(traj.steps),
    }
