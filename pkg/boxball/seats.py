"""
Box-Ball Toolkit - Seat Linearization
=====================================

Seat-number configuration and the linear coordinates it induces:
- Carrier with numbered seats: (k, up) / (k, down) labels and records
- Coordinates xi_k, their right inverse s_k and Xi_k(i) = xi_k(s_inf(i))
- Slot contents zeta_k(i) and the inverse map back to a configuration
- Offsets o_k for the linear evolution zeta_k(T eta, i + k + o_k) = zeta_k(eta, i)
- Carriers with capacity l and their relation to seat occupancy
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from boxball.errors import DomainError, IdentityViolation, NotFoundError
from boxball.lattice import Configuration, RecordIndex, evolve, records

logger = logging.getLogger(__name__)


class SeatView:
    """
    Immutable seat snapshot of one configuration over its realized range.

    `levels[j]` is 0 for a record and k for a (k, sigma)-seat at site
    `lo + j`; `up[j]` tells the two seat directions apart. Every site
    outside [lo, hi] is a record, so the coordinates extrapolate with
    slope one.
    """

    def __init__(self, config: Configuration, index: RecordIndex, levels: np.ndarray, up: np.ndarray):
        self.config = config
        self.records = index
        self.lo, self.hi = index.lo, index.hi
        self.levels = levels
        self.up = up
        self.levels.setflags(write=False)
        self.up.setflags(write=False)
        self._xi: Dict[int, np.ndarray] = {}
        self._zeta: Dict[int, Dict[int, int]] = {}

    @property
    def max_level(self) -> int:
        return int(self.levels.max()) if self.levels.size else 0

    def label(self, x: int) -> Optional[Tuple[int, bool]]:
        """(k, is_up) for a seat, None for a record."""
        if x < self.lo or x > self.hi or self.levels[x - self.lo] == 0:
            return None
        return int(self.levels[x - self.lo]), bool(self.up[x - self.lo])

    def labels_text(self) -> List[str]:
        out = []
        for lev, u in zip(self.levels.tolist(), self.up.tolist()):
            out.append("r" if lev == 0 else f"{lev}{'u' if u else 'd'}")
        return out

    def seat_indicator(self, k: int, is_up: bool) -> np.ndarray:
        """eta^sigma_k over [lo, hi] as 0/1 integers."""
        return ((self.levels == k) & (self.up == is_up)).astype(np.int64)

    def slot_mask(self, k: int) -> np.ndarray:
        """Sites where xi_k increments: records and seats above level k."""
        return (self.levels == 0) | (self.levels > k)

    # Coordinates

    def xi_array(self, k: int) -> np.ndarray:
        if k not in self._xi:
            cum = np.cumsum(self.slot_mask(k).astype(np.int64))
            anchor = cum[self.records.site(0) - self.lo]
            arr = cum - anchor
            arr.setflags(write=False)
            self._xi[k] = arr
        return self._xi[k]

    def xi(self, k: int, x: int) -> int:
        arr = self.xi_array(k)
        if x < self.lo:
            return int(arr[0]) - (self.lo - x)
        if x > self.hi:
            return int(arr[-1]) + (x - self.hi)
        return int(arr[x - self.lo])

    def s(self, k: int, i: int) -> int:
        """s_k(i): the site where xi_k first reaches i."""
        arr = self.xi_array(k)
        if i < arr[0]:
            return self.lo - (int(arr[0]) - i)
        if i > arr[-1]:
            return self.hi + (i - int(arr[-1]))
        return self.lo + int(np.searchsorted(arr, i, side="left"))

    def Xi(self, k: int, i: int) -> int:
        return self.xi(k, self.records.site(i))

    # Slots

    def zeta(self, k: int) -> Dict[int, int]:
        """Nonzero zeta_k(i) by slot index."""
        if k in self._zeta:
            return self._zeta[k]
        contrib = self.seat_indicator(k, True) - self.seat_indicator(k + 1, True)
        nz = np.flatnonzero(contrib)
        table: Dict[int, int] = {}
        if nz.size:
            arr = self.xi_array(k)
            before = np.where(nz > 0, arr[np.maximum(nz - 1, 0)], arr[0] - 1)
            base = int(before.min())
            counts = np.bincount(before - base, weights=contrib[nz]).astype(np.int64)
            table = {base + int(j): int(c) for j, c in enumerate(counts) if c}
            if any(c < 0 for c in table.values()):
                raise IdentityViolation("slot census", f"negative zeta_{k}", self.config.to_text())
        self._zeta[k] = table
        return table

    def zeta_at(self, k: int, i: int) -> int:
        return self.zeta(k).get(i, 0)

    # Carriers

    def seat_carrier(self, k: int) -> np.ndarray:
        """Occupancy of seat k after each site."""
        return np.cumsum(self.seat_indicator(k, True) - self.seat_indicator(k, False))

    def carrier_load(self, ell: int) -> np.ndarray:
        """Balls sitting in seats 1..ell after each site."""
        low = (self.levels >= 1) & (self.levels <= ell)
        return np.cumsum(np.where(low, np.where(self.up, 1, -1), 0))


def seat_decompose(config: Configuration) -> SeatView:
    """
    Sweep the carrier with numbered seats.

    A ball takes the empty seat with the smallest number; a hole with a
    nonempty carrier empties the occupied seat with the smallest number;
    a hole with an empty carrier is a record.
    """
    idx = records(config)
    bits = config.window(idx.lo, idx.hi).tolist()
    levels: List[int] = []
    ups: List[bool] = []
    occupied = 0
    for b in bits:
        if b:
            lev = (~occupied & (occupied + 1)).bit_length()
            occupied |= 1 << (lev - 1)
            levels.append(lev)
            ups.append(True)
        elif occupied:
            lev = (occupied & -occupied).bit_length()
            occupied &= occupied - 1
            levels.append(lev)
            ups.append(False)
        else:
            levels.append(0)
            ups.append(False)
    return SeatView(config, idx, np.array(levels, dtype=np.int64), np.array(ups, dtype=bool))


def xi(view: SeatView, k: int, x: int) -> int:
    return view.xi(k, x)


def s(view: SeatView, k: int, i: int) -> int:
    return view.s(k, i)


def Xi(view: SeatView, k: int, i: int) -> int:
    return view.Xi(k, i)


def seat_carrier(view: SeatView, k: int) -> np.ndarray:
    return view.seat_carrier(k)


@dataclass
class SlotArray:
    """Slot contents zeta_k(i) over a block of consecutive records."""
    levels: int
    records: int
    first_record: int = 0
    zeta: Dict[int, Dict[int, int]] = field(default_factory=dict)

    def get(self, k: int, i: int) -> int:
        return self.zeta.get(k, {}).get(i, 0)

    def census(self) -> Dict[int, int]:
        return {k: sum(v.values()) for k, v in sorted(self.zeta.items()) if sum(v.values())}

    def to_json(self) -> Dict[str, Any]:
        return {
            "levels": self.levels,
            "records": self.records,
            "first_record": self.first_record,
            "zeta": {
                str(k): {str(i): c for i, c in sorted(table.items())}
                for k, table in sorted(self.zeta.items())
                if table
            },
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "SlotArray":
        zeta = {int(k): {int(i): int(c) for i, c in table.items()} for k, table in data.get("zeta", {}).items()}
        return cls(int(data["levels"]), int(data["records"]), int(data.get("first_record", 0)), zeta)


def slots(view: SeatView, excursions: Optional[Tuple[int, int]] = None) -> SlotArray:
    """
    Slot contents of a seat view.

    Args:
        view: seat snapshot
        excursions: inclusive (i_lo, i_hi) excursion span; defaults to every
            realized excursion

    Returns:
        SlotArray holding the records s_inf(i_lo)..s_inf(i_hi + 1)
    """
    idx = view.records
    i_lo, i_hi = excursions if excursions is not None else (idx.first, idx.last - 1)
    if i_hi < i_lo - 1:
        raise DomainError(f"empty excursion span ({i_lo}, {i_hi})")
    start, stop = idx.site(i_lo), idx.site(i_hi + 1)
    zeta: Dict[int, Dict[int, int]] = {}
    for k in range(1, view.max_level + 1):
        a, b = view.xi(k, start), view.xi(k, stop)
        table = {i: c for i, c in view.zeta(k).items() if a <= i < b}
        if table:
            zeta[k] = table
    levels = max(zeta) if zeta else 0
    return SlotArray(levels, i_hi - i_lo + 2, i_lo, zeta)


def insert_level(levels: np.ndarray, up: np.ndarray, k: int, counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Insert counts[p] copies of a k-soliton word right after position p.

    The word is 1^k 0^k after a record or a down seat (seats 1..k empty)
    and 0^k 1^k after an up seat of higher level (seats 1..k full).
    """
    reps = 1 + 2 * k * counts
    src = np.repeat(np.arange(len(levels)), reps)
    starts = np.cumsum(reps) - reps
    t = np.arange(int(reps.sum())) - starts[src]
    u = (t - 1) % (2 * k)
    flip = (levels[src] > 0) & up[src]
    new_levels = np.where(t == 0, levels[src], u % k + 1)
    new_up = np.where(t == 0, up[src], np.where(flip, u >= k, u < k))
    return new_levels.astype(np.int64), new_up.astype(bool)


def labels_to_config(levels: np.ndarray, up: np.ndarray, origin_rank: int) -> Configuration:
    """Bits of a seat labeling, with the origin_rank-th record placed at site 0."""
    rec = np.flatnonzero(levels == 0)
    if not 0 <= origin_rank < len(rec):
        raise DomainError(f"origin record {origin_rank} outside {len(rec)} records")
    bits = ((levels > 0) & up).astype(np.uint8)
    return Configuration(bits, -int(rec[origin_rank]))


def reconstruct(slots_in: SlotArray, record_count: Optional[int] = None) -> Configuration:
    """
    Inverse of the slot map: build a configuration with a record at 0.

    Works top-down from the largest level. At level k every record and
    every seat above k is a slot site, indexed relative to the origin
    record, and zeta_k(i) words of length 2k are inserted after slot i.

    Raises:
        NotFoundError: when a slot index falls outside the generated block
    """
    count = record_count if record_count is not None else slots_in.records
    if count < 1:
        raise DomainError("reconstruct needs at least one record")
    origin_rank = -slots_in.first_record
    levels = np.zeros(count, dtype=np.int64)
    up = np.zeros(count, dtype=bool)
    for k in range(slots_in.levels, 0, -1):
        table = slots_in.zeta.get(k)
        if not table:
            continue
        slot_pos = np.flatnonzero((levels == 0) | (levels > k))
        origin_pos = int(np.flatnonzero(levels == 0)[origin_rank])
        zero = int(np.searchsorted(slot_pos, origin_pos))
        counts = np.zeros(len(levels), dtype=np.int64)
        for i, c in table.items():
            j = zero + i
            if not 0 <= j < len(slot_pos):
                raise NotFoundError(f"slot {i} of level {k} lies outside the {len(slot_pos)} generated slots")
            counts[slot_pos[j]] = c
        levels, up = insert_level(levels, up, k, counts)
    return labels_to_config(levels, up, origin_rank)


def offset(config: Configuration, k: int, evolved: Optional[Configuration] = None) -> int:
    """
    o_k(eta): record drift plus seat corrections over (s_inf(0), 0].

    Zero whenever s_inf(0) = 0 and no soliton crosses the origin.
    """
    nxt = evolved if evolved is not None else evolve(config)
    before, after = seat_decompose(config), seat_decompose(nxt)
    s0, t0 = before.records.site(0), after.records.site(0)

    def low_seats(view: SeatView, start: int, is_up: bool) -> int:
        if start >= 0:
            return 0
        a, b = start + 1 - view.lo, 0 - view.lo + 1
        sel = slice(max(a, 0), max(b, 0))
        lev = view.levels[sel]
        return int(((lev >= 1) & (lev <= k) & (view.up[sel] == is_up)).sum())

    return s0 - t0 + 2 * low_seats(before, s0, False) - 2 * low_seats(after, t0, True)


@dataclass(frozen=True)
class CapacityCarrier:
    """Carrier W_l that holds at most l balls."""
    capacity: int
    start: int
    values: np.ndarray

    def at(self, x: int) -> int:
        j = x - self.start
        if j < 0:
            return 0
        if j >= len(self.values):
            return int(self.values[-1]) if len(self.values) else 0
        return int(self.values[j])


def capacity_carrier(config: Configuration, ell: int, site_range: Optional[Tuple[int, int]] = None) -> CapacityCarrier:
    """
    Sweep a carrier of capacity ell: load while below capacity, unload on
    holes while nonempty, otherwise pass the site unchanged.
    """
    if ell < 1:
        raise DomainError(f"capacity must be positive, got {ell}")
    if site_range is None:
        idx = records(config)
        site_range = (idx.lo, idx.hi)
    lo, hi = site_range
    w, out = 0, []
    for b in config.window(lo, hi).tolist():
        if b and w < ell:
            w += 1
        elif not b and w > 0:
            w -= 1
        out.append(w)
    return CapacityCarrier(ell, lo, np.array(out, dtype=np.int64))


def effective_distance(view: SeatView, first, second) -> int:
    """|xi_k(X(a)) - xi_k(X(b))| for two k-solitons; zero iff they are connected."""
    k = first.size
    return abs(view.xi(k, first.position) - view.xi(k, second.position))


def check_slot_dichotomy(view: SeatView, k: int) -> None:
    """Assert W_k is 0 or k at every k-slot site."""
    load = view.carrier_load(k)
    at_slots = load[view.slot_mask(k)]
    bad = np.flatnonzero((at_slots != 0) & (at_slots != k))
    if bad.size:
        site = view.lo + int(np.flatnonzero(view.slot_mask(k))[bad[0]])
        raise IdentityViolation(
            "slot dichotomy", f"W_{k}({site}) = {int(at_slots[bad[0]])}", view.config.to_text()
        )


def check_carrier_xi(config: Configuration, ell: int) -> None:
    """
    Assert xi_l(T eta, x) - xi_l(eta, x) = W_l(T eta, x) + W_l(eta, x) + o_l(eta)
    at every site of the joint realized range.
    """
    nxt = evolve(config)
    before, after = seat_decompose(config), seat_decompose(nxt)
    o = offset(config, ell, nxt)
    lo, hi = min(before.lo, after.lo), max(before.hi, after.hi)
    w_before = capacity_carrier(config, ell, (lo, hi))
    w_after = capacity_carrier(nxt, ell, (lo, hi))
    for x in range(lo, hi + 1):
        lhs = after.xi(ell, x) - before.xi(ell, x)
        rhs = w_after.at(x) + w_before.at(x) + o
        if lhs != rhs:
            raise IdentityViolation(
                "carrier coordinate shift", f"l={ell} x={x}: {lhs} != {rhs}", config.to_text()
            )
