"""
Box-Ball Toolkit - q-Statistics
===============================

Parameter sequences q = (q_k) of the invariant slot laws and every
closed-form scalar derived from them:
- Bernoulli, two-sided Markov, finite-support and truncated classes
- Shift theta, cut C_k, ball density and record density
- alpha_k, beta_k, r_k and effective velocities v_k
- Diffusion coefficients G_k / D_k and cumulant functions Lambda^M, U, Lambda^Y
- Rate function by numerical Legendre transform
- Narayana excursion counts and the Markov excursion law

Exact rational arithmetic is used whenever the inputs are rational and
every square root on the way is a perfect square; otherwise values are
floats.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Optional, Tuple, Union

from scipy import optimize

from boxball.errors import CapabilityError, DomainError, ToleranceError

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]

# levels are appended until k * q_k drops below this
TAIL_TOLERANCE = 1e-14
MAX_LEVELS = 64


class QClass(Enum):
    """Parameter classes with different closed forms."""
    BERNOULLI = "bernoulli"
    MARKOV = "markov"
    FINITE = "finite"
    TRUNCATED = "truncated"


def as_number(value: Any) -> Number:
    """Parse ints, decimal strings and floats into Fractions where exact."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(repr(value))
    raise DomainError(f"cannot read {value!r} as a number")


def _sqrt(x: Number) -> Number:
    if isinstance(x, Fraction) and x >= 0:
        n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if n * n == x.numerator and d * d == x.denominator:
            return Fraction(n, d)
    return math.sqrt(float(x))


def _markov_shift(a: Number, b: Number) -> Tuple[Number, Number]:
    return a * b / (1 - a) ** 2, b / (1 - a) ** 2


@lru_cache(maxsize=None)
def _markov_levels(a: Number, b: Number, depth: int) -> Tuple[Tuple[Number, Number], ...]:
    """(a, b) of theta^j q for j = 0..depth."""
    out = [(a, b)]
    for _ in range(depth):
        out.append(_markov_shift(*out[-1]))
    return tuple(out)


def _markov_density(a: Number, b: Number) -> Number:
    return (1 - _sqrt(1 - 4 * a / (1 + a - b) ** 2)) / 2


@dataclass(frozen=True)
class QParams:
    """
    Truncated parameter vector with class metadata.

    `values` holds q_1..q_K (zero beyond K). Markov and Bernoulli
    classes also keep (a, b), from which any level is recomputed exactly.
    """
    values: Tuple[Number, ...]
    qclass: QClass
    a: Optional[Number] = None
    b: Optional[Number] = None
    rho: Optional[Number] = None
    tail_bound: float = 0.0
    shift: int = field(default=0, compare=False)

    @property
    def levels(self) -> int:
        return len(self.values)

    @property
    def closed_form(self) -> bool:
        return self.qclass in (QClass.BERNOULLI, QClass.MARKOV)

    def level(self, k: int) -> Number:
        """q_k, exact for the closed-form classes."""
        if k < 1:
            raise DomainError(f"levels start at 1, got {k}")
        if self.closed_form:
            if self.a == 0:
                return Fraction(0)
            return _markov_levels(self.a, self.b, k - 1)[k - 1][0]
        return self.values[k - 1] if k <= len(self.values) else Fraction(0)

    def max_level(self) -> int:
        """K(q): the largest level with q_k > 0 in the stored vector."""
        nz = [k for k, v in enumerate(self.values, start=1) if v > 0]
        return nz[-1] if nz else 0

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"class": self.qclass.value, "levels": self.levels, "tail_bound": self.tail_bound}
        if self.rho is not None:
            out["rho"] = str(self.rho)
        if self.a is not None:
            out["a"], out["b"] = str(self.a), str(self.b)
        return out


def _float_levels(a: float, b: float) -> Tuple[Tuple[float, ...], float]:
    values: List[float] = []
    aa, bb = a, b
    while len(values) < MAX_LEVELS:
        values.append(aa)
        if aa == 0 or len(values) * aa < TAIL_TOLERANCE:
            break
        aa, bb = _markov_shift(aa, bb)
    tail, k = 0.0, len(values)
    aa, bb = _markov_shift(aa, bb) if aa else (0.0, bb)
    while aa > 0 and k < MAX_LEVELS + 200:
        k += 1
        tail += k * aa
        if k * aa < TAIL_TOLERANCE * 1e-3:
            break
        aa, bb = _markov_shift(aa, bb)
    if tail > 1e-9:
        logger.warning("truncation tail bound %.3g above 1e-9 at %d levels", tail, len(values))
    return tuple(values), tail


def q_from_markov(a: Any, b: Any) -> QParams:
    """
    q_1 = a, q_k = a b^(k-1) / prod (1 - q_l)^(2(k-l)).

    Raises:
        DomainError: unless a > 0, 0 <= b < 1 and sqrt(a) + sqrt(b) < 1
    """
    a, b = as_number(a), as_number(b)
    if not (a > 0 and 0 <= b < 1 and math.sqrt(a) + math.sqrt(b) < 1):
        raise DomainError(f"Markov parameters need a > 0, 0 <= b < 1, sqrt(a) + sqrt(b) < 1; got a={a}, b={b}")
    values, tail = _float_levels(float(a), float(b))
    return QParams(values, QClass.MARKOV, a=a, b=b, tail_bound=tail)


def q_from_bernoulli(rho: Any) -> QParams:
    """Bernoulli(rho) as the Markov pair a = b = rho(1 - rho)."""
    rho = as_number(rho)
    if not 0 < rho < Fraction(1, 2):
        raise DomainError(f"Bernoulli density must lie in (0, 1/2), got {rho}")
    base = q_from_markov(rho * (1 - rho), rho * (1 - rho))
    return QParams(base.values, QClass.BERNOULLI, a=base.a, b=base.b, rho=rho, tail_bound=base.tail_bound)


def q_from_vector(values: List[Any], tail_bound: Optional[float] = None) -> QParams:
    """Finite-support q; with a tail bound the vector is a truncation of a longer one."""
    parsed = tuple(as_number(v) for v in values)
    if any(not 0 <= v < 1 for v in parsed):
        raise DomainError("every q_k must lie in [0, 1)")
    if tail_bound:
        return QParams(parsed, QClass.TRUNCATED, tail_bound=float(tail_bound))
    return QParams(parsed, QClass.FINITE)


def markov_transition(a: Any, b: Any) -> Tuple[Tuple[Number, Number], Tuple[Number, Number]]:
    """
    Transition matrix with p01 p10 = a and p00 p11 = b.

    p01 + p10 = 1 + a - b; p01 is the smaller root so the stationary
    density p01 / (p01 + p10) stays below 1/2.
    """
    a, b = as_number(a), as_number(b)
    total = 1 + a - b
    disc = _sqrt(total * total - 4 * a)
    p01 = (total - disc) / 2
    p10 = (total + disc) / 2
    return (1 - p01, p01), (p10, 1 - p10)


def stationary(matrix: Tuple[Tuple[Number, Number], Tuple[Number, Number]]) -> Tuple[Number, Number]:
    p01, p10 = matrix[0][1], matrix[1][0]
    return p10 / (p01 + p10), p01 / (p01 + p10)


def theta_shift(q: QParams, times: int = 1) -> QParams:
    """Drop the first `times` levels; Markov parameters follow (a, b) -> (ab/(1-a)^2, b/(1-a)^2)."""
    out = q
    for _ in range(times):
        if out.closed_form:
            a, b = _markov_shift(out.a, out.b)
            out = QParams(out.values[1:], QClass.MARKOV, a=a, b=b, tail_bound=out.tail_bound, shift=out.shift + 1)
        else:
            out = QParams(out.values[1:], out.qclass, tail_bound=out.tail_bound, shift=out.shift + 1)
    return out


def cut(q: QParams, k: int) -> QParams:
    """C_k q: no solitons larger than k."""
    return QParams(tuple(q.level(j) for j in range(1, k + 1)), QClass.FINITE)


def alpha(q: QParams, k: int) -> Number:
    v = q.level(k)
    return v / (1 - v)


def beta(q: QParams, k: int) -> Number:
    v = q.level(k)
    return v / (1 - v) ** 2


@lru_cache(maxsize=None)
def _rbar_table(q: QParams) -> Tuple[Number, ...]:
    """r_0..r_K by backward solution of 1/r_k = 1 + 2 sum_{l>k} (l-k) alpha_l / r_l."""
    top = q.max_level()
    table: Dict[int, Number] = {k: Fraction(1) for k in range(top, top + 1)}
    for k in range(top - 1, -1, -1):
        acc = Fraction(1) if all(isinstance(v, Fraction) for v in q.values) else 1.0
        for ell in range(k + 1, top + 1):
            acc += 2 * (ell - k) * alpha(q, ell) / table[ell]
        table[k] = 1 / acc
    return tuple(table[k] for k in range(top + 1))


def rbar(q: QParams, k: int) -> Number:
    """r_k(q) = E[r(0)] under mu_{theta^k q} = 1 - 2 rho(theta^k q)."""
    if k < 0:
        raise DomainError(f"r_k needs k >= 0, got {k}")
    if q.closed_form:
        a, b = _markov_levels(q.a, q.b, k)[k]
        if a == 0:
            return Fraction(1)
        return 1 - 2 * _markov_density(a, b)
    table = _rbar_table(q)
    return table[k] if k < len(table) else Fraction(1)


def density(q: QParams) -> Number:
    """Ball density rho(q) under mu_q."""
    if q.closed_form:
        return _markov_density(q.a, q.b)
    return (1 - rbar(q, 0)) / 2


def shifted_density(q: QParams, k: int) -> Number:
    """rho(theta^k q)."""
    return (1 - rbar(q, k)) / 2


@lru_cache(maxsize=None)
def _velocity(q: QParams, s: int, k: int) -> Number:
    # v_k(theta^s q) = k r_{s+k} + 2 sum_l l alpha_{s+l} v_{k-l}(theta^{s+l} q)
    total = k * rbar(q, s + k)
    for ell in range(1, k):
        total += 2 * ell * alpha(q, s + ell) * _velocity(q, s + ell, k - ell)
    return total


def effective_velocity(q: QParams, k: int, shift: int = 0) -> Number:
    """v^eff_k(theta^shift q)."""
    if k < 1:
        raise DomainError(f"soliton size must be positive, got {k}")
    return _velocity(q, shift, k)


def capability(q: QParams, k: int) -> Tuple[str, int]:
    """
    Closed-form domain of G_k and Lambda^M.

    For a finitely supported q the blocked-step counter of the
    second-largest size k is driven by the largest size l alone, and the
    closed form is log(c e^lam / 2 + sqrt(c^2 e^(2 lam) / 4 + q_l)) with
    c = (1 - q_l)^(l - k). At lam = 0 this equals zero only when
    c = 1 - q_l, that is l = k + 1. With a larger gap the expression
    gives Lambda(0) < 0, so it is no cumulant function and the gap-one
    hypothesis is refused rather than extrapolated.

    Returns:
        ("markov", 0), ("trivial", l) when k is at least the largest size l,
        or ("finite", l) when k is the second-largest size and l = k + 1

    Raises:
        CapabilityError: naming the hypothesis that fails
    """
    if q.closed_form:
        return "markov", 0
    if q.qclass is QClass.TRUNCATED:
        raise CapabilityError(
            f"no closed form for a truncated general q at k={k}", "q asymptotically Markov or finitely supported"
        )
    largest = q.max_level()
    if k >= largest:
        return "trivial", largest
    second = max((h for h in range(1, largest) if q.level(h) > 0), default=0)
    if k != second:
        raise CapabilityError(
            f"k={k} is not the second-largest size {second}", "k is the second-largest soliton size of q"
        )
    if largest - k != 1:
        raise CapabilityError(
            f"sizes {k} and {largest} are {largest - k} apart", "largest and second-largest sizes differ by one"
        )
    return "finite", largest


def g_coefficient(q: QParams, k: int) -> Number:
    """G_k: diffusive variance of the blocked-step counter M_k."""
    kind, largest = capability(q, k)
    if kind == "markov":
        p = shifted_density(q, k)
        return 4 * p * (1 - p) * (1 - 2 * p)
    if kind == "trivial":
        return Fraction(0)
    ql = q.level(largest)
    big = 4 * ql / (1 - ql) ** (2 * (largest - k))
    root = _sqrt(1 + big)
    return big / (root * root * root) if isinstance(root, Fraction) else float(big) * (1 + float(big)) ** -1.5


def diffusion_coefficient(q: QParams, k: int) -> Number:
    """D_k = v_k^2 G_k / r_k^2 + 4 sum_l v_l^2 v_{k-l}(theta^l q) beta_l / r_l^2."""
    g = g_coefficient(q, k)
    total = effective_velocity(q, k) ** 2 * g / rbar(q, k) ** 2
    for ell in range(1, k):
        total += 4 * effective_velocity(q, ell) ** 2 * effective_velocity(q, k - ell, ell) * beta(q, ell) / rbar(q, ell) ** 2
    return total


def lambda_m(q: QParams, k: int, lam: float) -> float:
    """Limiting cumulant function of n - M_k(n)."""
    kind, largest = capability(q, k)
    if kind == "trivial":
        return float(lam)
    if kind == "markov":
        r = float(rbar(q, k))
        return math.log(r / (1 + r) * (math.exp(lam) + math.sqrt(math.exp(2 * lam) + (1 - r * r) / (r * r))))
    return finite_lambda_m(float(q.level(largest)), largest - k, lam)


def finite_lambda_m(ql: float, gap: int, lam: float) -> float:
    """The finite-support closed form for sizes `gap` apart; a cumulant function only for gap 1."""
    c = (1 - ql) ** gap
    return math.log(c * math.exp(lam) / 2 + math.sqrt(c * c * math.exp(2 * lam) / 4 + ql))


def u_cumulant(q: QParams, k: int, lam: float) -> float:
    """log E[exp(2 lam zeta_k(0))] under Geometric(q_k); +inf past log(1/q_k)/2."""
    qk = float(q.level(k))
    if qk == 0:
        return 0.0
    if lam >= math.log(1 / qk) / 2:
        return math.inf
    return math.log((1 - qk) / (1 - math.exp(2 * lam) * qk))


def U_cumulant(q: QParams, k: int, lam: float) -> float:
    """U_1 = lam, U_k = k lam + sum_{l<k} (k-l) u_l(U_l(lam))."""
    values = [0.0, float(lam)]
    for j in range(2, k + 1):
        total = j * lam
        for ell in range(1, j):
            total += (j - ell) * u_cumulant(q, ell, values[ell])
        values.append(total)
    return values[k]


def U_slope(q: QParams, k: int) -> Number:
    """dU_k/dlam at 0 = k + 2 sum_{l<k} (k-l) alpha_l U'_l(0)."""
    slopes: List[Number] = [Fraction(0), Fraction(1)]
    for j in range(2, k + 1):
        total: Number = Fraction(j)
        for ell in range(1, j):
            total += 2 * (j - ell) * alpha(q, ell) * slopes[ell]
        slopes.append(total)
    return slopes[k]


def delta(q: QParams, k: int, tol: float = 1e-9) -> float:
    """Right end of the domain where U_k is finite, by bisection."""
    bounds = [math.log(1 / float(q.level(ell))) / (2 * ell) for ell in range(1, k) if q.level(ell) > 0]
    if not bounds:
        return math.inf
    lo, hi = 0.0, min(bounds)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if math.isfinite(U_cumulant(q, k, mid)):
            lo = mid
        else:
            hi = mid
    return lo


def lambda_y(q: QParams, k: int, lam: float) -> float:
    """Lambda^Y = Lambda^M(U_k(lam)) on lam < delta_{q,k}."""
    if lam >= delta(q, k):
        raise DomainError(f"lambda={lam} outside the domain of U_{k} (delta={delta(q, k):.6g})")
    return lambda_m(q, k, U_cumulant(q, k, lam))


def rate_function(q: QParams, k: int, u: float, span: float = 30.0) -> float:
    """
    I(u) = sup_lam (lam u - Lambda^Y(lam)) by bounded 1-D maximization.

    Returns +inf when the supremum runs into the edge of the search
    window, i.e. u is outside the effective domain.
    """
    right = min(delta(q, k) - 1e-9, span)
    left = -span

    def negated(lam: float) -> float:
        return -(lam * u - lambda_y(q, k, lam))

    res = optimize.minimize_scalar(negated, bounds=(left, right), method="bounded", options={"xatol": 1e-10})
    if not res.success:
        raise ToleranceError(f"Legendre transform did not converge at u={u}: {res.message}")
    if res.x - left < 1e-4 or right - res.x < 1e-4:
        return math.inf
    return float(-res.fun)


# Excursion laws

def narayana(m: int, z: int) -> int:
    """Excursions in E(m) with z descents."""
    if m == 0:
        return 1 if z == 0 else 0
    if not 1 <= z <= m:
        return 0
    return math.comb(m, z) * math.comb(m, z - 1) // m


def excursion_probability(word: Tuple[int, ...], a: Any, b: Any) -> Number:
    """nu_q(e^(0) = word) = p00 a^z b^(m-z) under Markov q."""
    a, b = as_number(a), as_number(b)
    m = sum(word)
    z = sum(1 for x, y in zip(word, word[1:] + (0,)) if x == 1 and y == 0)
    p00 = markov_transition(a, b)[0][0]
    return p00 * a ** z * b ** (m - z)


def excursion_length_law(a: Any, b: Any, m_max: int) -> Dict[int, Number]:
    """Probability that an excursion holds m balls, m = 0..m_max."""
    a, b = as_number(a), as_number(b)
    p00 = markov_transition(a, b)[0][0]
    return {m: p00 * sum(narayana(m, z) * a ** z * b ** (m - z) for z in range(0, m + 1)) for m in range(m_max + 1)}


def time_series_chain(rho: Any) -> Tuple[Tuple[Number, Number], Tuple[Number, Number]]:
    """Two-state chain of T^n eta(x) in n at a fixed site."""
    rho = as_number(rho)
    p = rho / (1 - rho)
    return (1 - p, p), (Fraction(1), Fraction(0))


# Tables

@dataclass
class ScalarTable:
    """Per-level closed-form scalars of one q."""
    q: QParams
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def row(self, k: int) -> Dict[str, Any]:
        return self.rows[k - 1]

    def to_json(self) -> Dict[str, Any]:
        def fmt(v: Any) -> Any:
            if isinstance(v, Fraction):
                return {"exact": str(v), "value": float(v)}
            return v

        return {"q": self.q.describe(), "rows": [{key: fmt(v) for key, v in row.items()} for row in self.rows]}


def scalar_table(q: QParams, k_max: int) -> ScalarTable:
    """alpha, beta, r, rho(theta^k q), v_k, G_k and D_k (where defined) for k = 1..k_max."""
    table = ScalarTable(q)
    for k in range(1, k_max + 1):
        row: Dict[str, Any] = {
            "k": k,
            "q_k": q.level(k),
            "alpha": alpha(q, k),
            "beta": beta(q, k),
            "rbar": rbar(q, k),
            "rho_theta": shifted_density(q, k),
            "v_eff": effective_velocity(q, k),
        }
        try:
            row["G"] = g_coefficient(q, k)
            row["D"] = diffusion_coefficient(q, k)
        except CapabilityError as exc:
            row["G"] = row["D"] = None
            row["capability"] = exc.hypothesis
        table.rows.append(row)
    return table


def velocity_identity(q: QParams, k: int) -> Tuple[Number, Number]:
    """Both sides of v_k(q) = r_k(q) v_k(C_k q)."""
    return effective_velocity(q, k), rbar(q, k) * effective_velocity(cut(q, k), k)
