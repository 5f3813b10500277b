"""
Box-Ball Toolkit - Lattice Core
===============================

Finite-support 0/1 configurations on Z and the box-ball dynamics:
- Configuration values with absolute site coordinates
- Carrier profile W and one-step evolution T (vectorized with numpy)
- Inverse evolution through the reflection x -> -x-1
- Records, excursions and recentering on the record left of the origin
- Reference loop implementations used for differential testing

Storage: cells are a numpy uint8 array, one byte per site, instead of
64 sites packed per machine word. The carrier is a cumulative sum with a
running minimum over the whole window, so one numpy pass replaces the
word-parallel update loop; the scalar loops below stay as the unpacked
reference. Every window is capped by MAX_SITES (the sampler and the
trackers use the same cap).
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from boxball.errors import DomainError, LightConeError, WindowError

logger = logging.getLogger(__name__)

MAX_SITES = 10_000_000


class Configuration:
    """
    Immutable 0/1 configuration with finitely many balls.

    `cells[j]` is the bit at lattice site `origin + j`; every site outside
    the stored window reads 0. Equality compares the trimmed support, so
    two values that differ only by zero padding are equal.
    """

    __slots__ = ("_cells", "_origin")

    def __init__(self, cells: Sequence[int], origin: int = 0):
        arr = np.array(cells, dtype=np.uint8).reshape(-1)
        if arr.size and arr.max() > 1:
            raise DomainError("configuration cells must be 0 or 1")
        arr.setflags(write=False)
        self._cells = arr
        self._origin = int(origin)

    # Construction and text format

    @classmethod
    def zeros(cls, length: int, origin: int = 0) -> "Configuration":
        return cls(np.zeros(length, dtype=np.uint8), origin)

    @classmethod
    def from_text(cls, text: str) -> "Configuration":
        """
        Parse `[@origin] bits`.

        Whitespace inside the bit string is ignored, so figure rows such as
        `@-4 11000 1110` read the same as the packed form.
        """
        tokens = text.split()
        origin = 0
        if tokens and tokens[0].startswith("@"):
            try:
                origin = int(tokens[0][1:])
            except ValueError as exc:
                raise DomainError(f"bad origin token {tokens[0]!r}") from exc
            tokens = tokens[1:]
        bits = "".join(tokens)
        if any(ch not in "01" for ch in bits):
            raise DomainError(f"configuration text may only hold 0/1, got {bits!r}")
        return cls([int(ch) for ch in bits], origin)

    def to_text(self) -> str:
        bits = "".join("1" if b else "0" for b in self._cells)
        return f"@{self._origin} {bits}" if bits else f"@{self._origin}"

    # Accessors

    @property
    def cells(self) -> np.ndarray:
        return self._cells

    @property
    def origin(self) -> int:
        return self._origin

    @property
    def lo(self) -> int:
        """First stored site."""
        return self._origin

    @property
    def hi(self) -> int:
        """Last stored site."""
        return self._origin + len(self._cells) - 1

    @property
    def balls(self) -> int:
        return int(self._cells.sum())

    def __len__(self) -> int:
        return len(self._cells)

    def __getitem__(self, x: int) -> int:
        j = int(x) - self._origin
        if 0 <= j < len(self._cells):
            return int(self._cells[j])
        return 0

    def support(self) -> Optional[Tuple[int, int]]:
        """Sites of the leftmost and rightmost ball, or None when empty."""
        ones = np.flatnonzero(self._cells)
        if ones.size == 0:
            return None
        return self._origin + int(ones[0]), self._origin + int(ones[-1])

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Bits at sites lo..hi inclusive, zero outside the stored cells."""
        out = np.zeros(max(hi - lo + 1, 0), dtype=np.uint8)
        a = max(lo, self.lo)
        b = min(hi, self.hi)
        if a <= b:
            out[a - lo:b - lo + 1] = self._cells[a - self._origin:b - self._origin + 1]
        return out

    def padded(self, lo: int, hi: int) -> "Configuration":
        """Grow the stored window so it covers lo..hi."""
        lo = min(lo, self.lo)
        hi = max(hi, self.hi)
        return Configuration(self.window(lo, hi), lo)

    def trimmed(self) -> "Configuration":
        supp = self.support()
        if supp is None:
            return Configuration([], 0)
        return Configuration(self.window(*supp), supp[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        a, b = self.trimmed(), other.trimmed()
        return a._origin == b._origin and np.array_equal(a._cells, b._cells)

    def __hash__(self) -> int:
        t = self.trimmed()
        return hash((t._origin, t._cells.tobytes()))

    def __repr__(self) -> str:
        return f"Configuration({self.to_text()!r})"


@dataclass(frozen=True)
class CarrierProfile:
    """Carrier load W(x) over a contiguous site range starting at `start`."""
    start: int
    values: np.ndarray

    @property
    def end(self) -> int:
        return self.start + len(self.values) - 1

    def at(self, x: int) -> int:
        if x < self.start:
            return 0
        if x > self.end:
            # past the range the carrier only unloads
            return max(int(self.values[-1]) - (x - self.end), 0) if len(self.values) else 0
        return int(self.values[x - self.start])


@dataclass(frozen=True)
class RecordIndex:
    """
    Record sites s_inf(i) over the realized range [lo, hi].

    Every site outside [lo, hi] is also a record, so `site` and `index_of`
    extrapolate exactly.
    """
    sites: np.ndarray
    zero_index: int
    lo: int
    hi: int

    @property
    def first(self) -> int:
        """Smallest realized record index."""
        return -self.zero_index

    @property
    def last(self) -> int:
        return len(self.sites) - 1 - self.zero_index

    def site(self, i: int) -> int:
        j = self.zero_index + i
        if j < 0:
            return int(self.sites[0]) + j
        if j >= len(self.sites):
            return int(self.sites[-1]) + (j - len(self.sites) + 1)
        return int(self.sites[j])

    def index_of(self, x: int) -> int:
        """Excursion index i with s_inf(i) <= x < s_inf(i+1)."""
        if x < self.lo:
            return (x - self.lo) - self.zero_index
        if x > self.hi:
            return self.last + (x - self.hi)
        return int(np.searchsorted(self.sites, x, side="right")) - 1 - self.zero_index

    def is_record(self, x: int) -> bool:
        if x < self.lo or x > self.hi:
            return True
        j = int(np.searchsorted(self.sites, x))
        return j < len(self.sites) and int(self.sites[j]) == x


@dataclass(frozen=True)
class Excursion:
    """Segment from record s_inf(index) up to the next record."""
    index: int
    start: int  # site of the leading record
    word: Tuple[int, ...]

    @property
    def end(self) -> int:
        return self.start + len(self.word) - 1

    @property
    def ones(self) -> int:
        return sum(self.word)


# Carrier and dynamics

def realized_range(config: Configuration) -> Tuple[int, int]:
    """
    Site range on which records and carrier values are materialized.

    Covers the stored cells and the origin with one record to spare on the
    left, and runs far enough right that the carrier has unloaded.
    """
    lo = min(config.lo, 0) - 1
    hi = max(config.hi, 0) + config.balls + 1
    return lo, hi


def _carrier_values(bits: np.ndarray) -> np.ndarray:
    walk = np.cumsum(2 * bits.astype(np.int64) - 1)
    return walk - np.minimum.accumulate(np.minimum(walk, 0))


def carrier_profile(config: Configuration, site_range: Optional[Tuple[int, int]] = None) -> CarrierProfile:
    """
    Carrier load W(x) = max(W(x-1) + 2*eta(x) - 1, 0).

    Args:
        config: configuration to sweep
        site_range: inclusive (lo, hi); defaults to the realized range

    Returns:
        CarrierProfile aligned to lattice sites

    Raises:
        WindowError: when the range misses the support or its neighbours
    """
    if site_range is None:
        lo, hi = realized_range(config)
    else:
        lo, hi = site_range
        supp = config.support()
        if supp is not None and (lo > supp[0] - 1 or hi < supp[1] + 1):
            raise WindowError(
                f"range [{lo}, {hi}] must cover support [{supp[0]}, {supp[1]}] plus one site each side"
            )
        if hi < lo:
            raise WindowError(f"empty range [{lo}, {hi}]")
    return CarrierProfile(lo, _carrier_values(config.window(lo, hi)))


def evolve(config: Configuration) -> Configuration:
    """One BBS step: T eta(x) = eta(x) - W(x) + W(x-1)."""
    lo, hi = realized_range(config)
    bits = config.window(lo, hi).astype(np.int64)
    w = _carrier_values(bits)
    w_prev = np.concatenate(([0], w[:-1]))
    return Configuration(bits - w + w_prev, lo).trimmed()


def reverse(config: Configuration) -> Configuration:
    """Reflection eta_bar(x) = eta(-x-1)."""
    return Configuration(config.cells[::-1], -config.hi - 1)


def shift(config: Configuration, y: int) -> Configuration:
    """Translation tau_y eta(x) = eta(x + y)."""
    return Configuration(config.cells, config.origin - y)


def evolve_inverse(config: Configuration) -> Configuration:
    """T^-1 as the reflection of T applied to the reflection."""
    return reverse(evolve(reverse(config)))


def evolve_n(config: Configuration, n: int, max_sites: Optional[int] = MAX_SITES) -> Configuration:
    """
    Apply T n times, growing the window as balls move right.

    Raises:
        LightConeError: if the support would span more than max_sites
    """
    current = config
    for step in range(n):
        current = evolve(current)
        if max_sites is not None and len(current) > max_sites:
            raise LightConeError(f"support spans {len(current)} sites at step {step + 1}, cap is {max_sites}")
    logger.debug("evolved %d steps: window %d -> %d sites", n, len(config), len(current))
    return current


# Reference implementations

def carrier_profile_reference(config: Configuration, site_range: Tuple[int, int]) -> List[int]:
    """Site-by-site three-case carrier rule."""
    lo, hi = site_range
    w, out = 0, []
    for x in range(lo, hi + 1):
        if config[x] == 1:
            w += 1
        elif w > 0:
            w -= 1
        out.append(w)
    return out


def evolve_reference(config: Configuration) -> Configuration:
    """T by explicit pick-up and drop, one site at a time."""
    lo, hi = realized_range(config)
    w, out = 0, []
    for x in range(lo, hi + 1):
        if config[x] == 1:
            w += 1
            out.append(0)
        elif w > 0:
            w -= 1
            out.append(1)
        else:
            out.append(0)
    return Configuration(out, lo).trimmed()


def is_record_bruteforce(config: Configuration, x: int) -> bool:
    """x is a record iff max over z <= x of sum_{y=z..x}(2 eta(y) - 1) <= -1."""
    lo = min(realized_range(config)[0], x)
    best = None
    total = 0
    for z in range(x, lo - 1, -1):
        total += 2 * config[z] - 1
        best = total if best is None else max(best, total)
    return best is not None and best <= -1


def record_flags_reference(config: Configuration, lo: int, hi: int) -> List[bool]:
    """
    Record flags for sites lo..hi from the running maximal suffix sum of 2 eta - 1.

    One left-to-right pass: best(x) = max(best(x - 1), 0) + 2 eta(x) - 1,
    and x is a record iff best(x) <= -1.
    """
    start = min(realized_range(config)[0], lo)
    best = None
    out = []
    for z in range(start, hi + 1):
        step = 2 * config[z] - 1
        best = step if best is None else max(best, 0) + step
        if z >= lo:
            out.append(best <= -1)
    return out


# Records and excursions

def records(config: Configuration) -> RecordIndex:
    """Records are the sites with eta(x) = 0 and an empty incoming carrier."""
    lo, hi = realized_range(config)
    bits = config.window(lo, hi)
    w = _carrier_values(bits)
    w_prev = np.concatenate(([0], w[:-1]))
    sites = lo + np.flatnonzero((bits == 0) & (w_prev == 0))
    zero_index = int(np.searchsorted(sites, 0, side="right")) - 1
    return RecordIndex(sites.astype(np.int64), zero_index, lo, hi)


def excursions(
    config: Configuration,
    site_range: Optional[Tuple[int, int]] = None,
    index: Optional[RecordIndex] = None,
) -> List[Excursion]:
    """
    Excursions between consecutive realized records.

    With `site_range`, only excursions whose leading record lies in the
    range are returned.
    """
    idx = index if index is not None else records(config)
    lo, hi = idx.lo, idx.hi
    bits = config.window(lo, hi)
    out = []
    for j in range(len(idx.sites) - 1):
        start = int(idx.sites[j])
        if site_range is not None and not (site_range[0] <= start <= site_range[1]):
            continue
        stop = int(idx.sites[j + 1])
        out.append(Excursion(j - idx.zero_index, start, tuple(int(b) for b in bits[start - lo:stop - lo])))
    return out


def recenter(config: Configuration) -> Configuration:
    """tau_{s_inf(0)} eta: moves the record left of the origin to site 0."""
    return shift(config, records(config).site(0))


def is_excursion_word(word: Sequence[int]) -> bool:
    """Leading record 0 followed by a balanced body that never dips below 0."""
    if not word or word[0] != 0:
        return False
    height = 0
    for b in word[1:]:
        height += 1 if b else -1
        if height < 0:
            return False
    return height == 0


def enumerate_excursions(m: int) -> Iterator[Tuple[int, ...]]:
    """Every word of the excursion set with m ones."""

    def bodies(opened: int, closed: int) -> Iterator[Tuple[int, ...]]:
        if opened == m and closed == m:
            yield ()
            return
        if opened < m:
            for rest in bodies(opened + 1, closed):
                yield (1,) + rest
        if closed < opened:
            for rest in bodies(opened, closed + 1):
                yield (0,) + rest

    for body in bodies(0, 0):
        yield (0,) + body


def descents(word: Sequence[int]) -> int:
    """Number of adjacent `10` pairs; equals the soliton count of an excursion."""
    return sum(1 for a, b in zip(word, word[1:]) if a == 1 and b == 0)


def excursions_meeting(
    config: Configuration,
    lo: int,
    hi: int,
    index: Optional[RecordIndex] = None,
) -> List[Excursion]:
    """Realized excursions that share at least one site with [lo, hi]."""
    idx = index if index is not None else records(config)
    if len(idx.sites) < 2:
        return []
    first = max(int(np.searchsorted(idx.sites, lo, side="right")) - 1, 0)
    last = min(int(np.searchsorted(idx.sites, hi, side="right")) - 1, len(idx.sites) - 2)
    out = []
    for j in range(first, last + 1):
        start, stop = int(idx.sites[j]), int(idx.sites[j + 1])
        word = tuple(int(b) for b in config.window(start, stop - 1))
        out.append(Excursion(j - idx.zero_index, start, word))
    return out
