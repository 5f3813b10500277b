"""
Box-Ball Toolkit - Sampler
==========================

Random finite configurations under the invariant laws:
- nu_q: record at the origin, independent Geometric(q_k) slot contents
- Two constructions: slot reconstruction and a direct Markov chain scan
- Two-sided samples with excursions on both sides of the origin
- mu_q by splicing a size-biased excursion around the origin
- Excursion census by length and descent count

Every replica draws from its own numpy stream derived from (seed, replica),
so ensembles are reproducible and independent of scheduling order.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy import stats

from boxball.errors import CapacityError, DomainError
from boxball.lattice import MAX_SITES, Configuration, descents, excursions
from boxball.qstat import QParams, markov_transition, rbar
from boxball.seats import SlotArray, reconstruct, seat_decompose

logger = logging.getLogger(__name__)

METHODS = ("slot", "markov")
MU_RETRY_CAP = 10_000


@dataclass(frozen=True)
class SampleSpec:
    """What to draw: parameters, number of excursions and the stream seed."""
    q: QParams
    records: int = 100
    seed: int = 0
    method: str = "slot"
    left: int = 0
    max_sites: int = MAX_SITES

    def __post_init__(self):
        if self.records < 1:
            raise DomainError(f"need at least one excursion, got {self.records}")
        if self.left < 0:
            raise DomainError(f"left excursion count must be non-negative, got {self.left}")
        if self.method not in METHODS:
            raise DomainError(f"unknown sampling method {self.method!r}; choose from {METHODS}")
        if self.method == "markov" and not self.q.closed_form:
            raise DomainError("the markov method needs a Bernoulli or Markov q")


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Independent stream for replica r of a seeded ensemble."""
    return np.random.default_rng(np.random.SeedSequence((int(seed) & (2**64 - 1), int(replica))))


def geometric(q: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """P(m) = q^m (1 - q) on {0, 1, ...} by inversion."""
    if q <= 0:
        return np.zeros(size, dtype=np.int64)
    u = rng.random(size)
    return np.floor(np.log1p(-u) / math.log(q)).astype(np.int64)


def draw_slots(q: QParams, records: int, rng: np.random.Generator) -> SlotArray:
    """
    Draw every zeta_k(i) for a block of `records` excursions, top level first.

    At level k the slot sites are the records plus the seats above k, so
    their number depends on what was drawn above. The terminal record's
    slot stays empty.
    """
    levels = q.levels
    totals: Dict[int, int] = {}
    zeta: Dict[int, Dict[int, int]] = {}
    for k in range(levels, 0, -1):
        slot_count = records + 1 + sum(2 * (ell - k) * c for ell, c in totals.items())
        draws = geometric(float(q.values[k - 1]), slot_count, rng)
        draws[-1] = 0
        nz = np.flatnonzero(draws)
        if nz.size:
            zeta[k] = {int(j): int(draws[j]) for j in nz}
            totals[k] = int(draws.sum())
    return SlotArray(max(zeta) if zeta else 0, records + 1, 0, zeta)


def _words_from_config(config: Configuration) -> List[Tuple[int, ...]]:
    return [exc.word for exc in excursions(config, site_range=(config.lo, config.hi - 1))]


def _slot_excursions(q: QParams, count: int, rng: np.random.Generator, max_sites: int) -> List[Tuple[int, ...]]:
    slot_array = draw_slots(q, count, rng)
    size = count + 1 + 2 * sum(k * c for k, table in slot_array.zeta.items() for c in table.values())
    if size > max_sites:
        raise CapacityError(f"{count} excursions need {size} sites, cap is {max_sites}")
    config = reconstruct(slot_array)
    return _words_from_config(config)[:count]


def _markov_excursions(q: QParams, count: int, rng: np.random.Generator, max_sites: int) -> List[Tuple[int, ...]]:
    """
    Run the two-state chain from the 0 held by a record.

    The excursion closes at the first 0 met with an empty carrier, which is
    the next record; the Markov property makes successive excursions i.i.d.
    """
    (p00, p01), (p10, p11) = markov_transition(q.a, q.b)
    stay = (float(p00), float(p11))
    words: List[Tuple[int, ...]] = []
    used = 0
    state = 0
    while len(words) < count:
        word, w = [0], 0
        while True:
            nxt = state if rng.random() < stay[state] else 1 - state
            state = nxt
            if nxt == 0 and w == 0:
                break
            w += 1 if nxt else -1
            word.append(nxt)
        used += len(word)
        if used > max_sites:
            raise CapacityError(f"markov scan passed {max_sites} sites after {len(words)} excursions")
        words.append(tuple(word))
    return words


def _draw_excursions(spec: SampleSpec, count: int, rng: np.random.Generator) -> List[Tuple[int, ...]]:
    if count == 0:
        return []
    if spec.method == "markov":
        return _markov_excursions(spec.q, count, rng, spec.max_sites)
    return _slot_excursions(spec.q, count, rng, spec.max_sites)


def _assemble(words: Iterable[Tuple[int, ...]], origin: int) -> Configuration:
    bits: List[int] = []
    for word in words:
        bits.extend(word)
    bits.append(0)
    return Configuration(bits, origin)


def sample_nu(spec: SampleSpec, replica: int = 0) -> Configuration:
    """
    One nu_q sample: `spec.records` excursions starting with a record at 0.

    The slot method draws zeta top-down and reconstructs; the markov method
    scans the chain. Both end with a terminal record.
    """
    return two_sided_nu(spec, replica)


def two_sided_nu(spec: SampleSpec, replica: int = 0) -> Configuration:
    """nu_q sample with `spec.left` excursions left of the origin record as well."""
    rng = replica_rng(spec.seed, replica)
    left = _draw_excursions(spec, spec.left, rng)
    right = _draw_excursions(spec, spec.records, rng)
    return _assemble(left + right, -sum(len(w) for w in left))


def _size_biased(spec: SampleSpec, rng: np.random.Generator, cap: int) -> Tuple[int, ...]:
    for _ in range(MU_RETRY_CAP):
        word = _draw_excursions(spec, 1, rng)[0]
        if len(word) > cap:
            logger.warning("excursion of length %d above acceptance cap %d", len(word), cap)
            return word
        if rng.random() * cap < len(word):
            return word
    raise CapacityError(f"size-biased excursion not accepted after {MU_RETRY_CAP} proposals (cap {cap})")


def sample_mu(spec: SampleSpec, replica: int = 0, cap: Optional[int] = None) -> Configuration:
    """
    One mu_q sample by splicing.

    Draws left and right nu_q blocks, a length-biased middle excursion by
    accept-reject against its length, and puts the origin uniformly inside
    the middle excursion.

    Raises:
        CapacityError: when the accept-reject loop runs out of proposals
    """
    rng = replica_rng(spec.seed, replica)
    left = _draw_excursions(spec, max(spec.left, 1), rng)
    right = _draw_excursions(spec, spec.records, rng)
    if cap is None:
        # eight mean excursion lengths
        cap = max(64, int(8 / float(rbar(spec.q, 0))))
    middle = _size_biased(spec, rng, cap)
    u = int(rng.integers(len(middle)))
    offset = sum(len(w) for w in left)
    return _assemble(left + [middle] + right, -(offset + u))


def excursion_census(samples: Iterable[Configuration]) -> Dict[Tuple[int, int], int]:
    """Histogram of (balls m, descents z) over the stored excursions of each sample."""
    counts: Counter = Counter()
    for config in samples:
        # records past the stored cells are padding, not drawn excursions
        for exc in excursions(config, site_range=(config.lo, config.hi - 1)):
            counts[(exc.ones, descents(exc.word))] += 1
    return dict(sorted(counts.items()))


def slot_marginals(samples: Iterable[Configuration], k: int) -> np.ndarray:
    """Every zeta_k(i) of the samples' realized slots, empty slots included."""
    values: List[int] = []
    for config in samples:
        view = seat_decompose(config)
        # the terminal record's slot is always empty
        first, last = view.xi(k, config.lo), view.xi(k, config.hi)
        values.extend(view.zeta_at(k, i) for i in range(first, last))
    return np.array(values, dtype=np.int64)


def geometric_fit(values: np.ndarray, q_k: float, bins: int = 6) -> float:
    """Chi-square p-value of the values against Geometric(q_k), tail pooled."""
    if values.size == 0:
        raise DomainError("no slot values to test")
    probs = [(1 - q_k) * q_k ** m for m in range(bins - 1)]
    probs.append(1 - sum(probs))
    observed = np.bincount(np.minimum(values, bins - 1), minlength=bins).astype(float)
    expected = np.array(probs) * values.size
    keep = expected > 5
    if keep.sum() < 2:
        return 1.0
    obs, exp = observed[keep], expected[keep]
    exp *= obs.sum() / exp.sum()
    return float(stats.chisquare(obs, exp).pvalue)
