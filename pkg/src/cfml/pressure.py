"""Finite-alphabet pressure sums and the dimension formula for ``E'(phi)``.

For an alphabet ``{1..M}`` and a depth ``n`` the cylinder sum is

    S_n(s; B, M) = sum over w in {1..M}^n of  B^{-(3s-1) n} q_n(w)^{-2s},

and ``s_n(B, M)`` is its unique root ``S_n = 1``.  Every summand decreases
strictly in ``s`` whenever ``B > 1``, which is what the bisection relies on.

Continuants are enumerated once per ``(n, M)`` depth first in lexicographic
word order, then collapsed to distinct values with multiplicities.  Sums are
taken over that grouped table in ascending ``q`` at ``precision_bits`` of
mpmath precision, so they do not depend on evaluation order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from cfml.errors import CapExceeded, DomainError, NumericalFailure
from cfml.phi import PhiSpec

ENUMERATION_CAP = 10**7
DEFAULT_TOL = 1e-10
# Above this many distinct continuants the sum falls back to float64 terms
# with an exactly rounded (math.fsum) reduction.
MPMATH_TERM_LIMIT = 50_000


@dataclass(frozen=True)
class SnQuery:
    n: int
    M: int
    B: float
    tol: float = DEFAULT_TOL
    cap: int = ENUMERATION_CAP

    def __post_init__(self) -> None:
        if self.n < 1 or self.M < 1:
            raise DomainError("need n >= 1 and M >= 1")
        if not self.B > 1:
            raise DomainError("need B > 1")
        if not self.tol > 0:
            raise DomainError("need tol > 0")
        if self.M**self.n > self.cap:
            raise CapExceeded(f"M**n = {self.M}**{self.n} exceeds the enumeration cap {self.cap}")


@lru_cache(maxsize=64)
def continuant_table(n: int, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct ``q_n(w)`` over ``w in {1..M}^n`` and their multiplicities."""
    dtype = np.int64 if (M + 1) ** n < 2**62 else object
    qm = np.zeros(1, dtype=dtype)
    q = np.ones(1, dtype=dtype)
    digits = np.arange(1, M + 1, dtype=dtype)
    for _ in range(n):
        # row i of the (len, M) block is the parent word i extended by 1..M
        new_q = (q[:, None] * digits[None, :] + qm[:, None]).reshape(-1)
        qm = np.repeat(q, M)
        q = new_q
    values, counts = np.unique(q, return_counts=True)
    return values, counts


def lexicographic_continuants(n: int, M: int) -> np.ndarray:
    """``q_n`` of every word of ``{1..M}^n`` in lexicographic order (for oracles and tests)."""
    qm = np.zeros(1, dtype=np.int64)
    q = np.ones(1, dtype=np.int64)
    digits = np.arange(1, M + 1, dtype=np.int64)
    for _ in range(n):
        new_q = (q[:, None] * digits[None, :] + qm[:, None]).reshape(-1)
        qm = np.repeat(q, M)
        q = new_q
    return q


def _grouped_power_sum(values: np.ndarray, counts: np.ndarray, exponent) -> mpmath.mpf:
    """``sum_i counts[i] * values[i] ** (-exponent)`` at the current mpmath precision."""
    if values.size <= MPMATH_TERM_LIMIT:
        e = mpmath.mpf(exponent)
        return mpmath.fsum(int(c) * mpmath.power(int(v), -e) for v, c in zip(values.tolist(), counts.tolist()))
    logs = np.log(values.astype(np.float64))
    terms = counts.astype(np.float64) * np.exp(-float(exponent) * logs)
    return mpmath.mpf(math.fsum(terms.tolist()))


def cylinder_sum(q: SnQuery, s, precision_bits: int = 80) -> mpmath.mpf:
    """``S_n(s; B, M)`` for the query's ``(n, M, B)``."""
    if not 0 <= s <= 2:
        raise DomainError("s must lie in [0, 2]")
    values, counts = continuant_table(q.n, q.M)
    with mpmath.workprec(precision_bits):
        s = mpmath.mpf(s)
        total = _grouped_power_sum(values, counts, 2 * s) * mpmath.power(mpmath.mpf(q.B), -(3 * s - 1) * q.n)
        if not mpmath.isfinite(total):
            raise NumericalFailure("cylinder sum is not finite")
        return +total


def solve_sn(q: SnQuery, precision_bits: int = 80) -> float:
    """Root ``s_n(B, M)`` of ``S_n(s) = 1`` on ``[1/3, 2]`` by bisection to width ``tol``.

    ``M = 1`` returns 1/3, the left end of the bracket.
    """
    if q.M == 1:
        return 1.0 / 3.0
    lo, hi = mpmath.mpf(1) / 3, mpmath.mpf(2)
    with mpmath.workprec(precision_bits):
        f_lo = cylinder_sum(q, lo, precision_bits) - 1
        if f_lo < 0:
            raise NumericalFailure(f"bracket failure: S_n(1/3) < 1 for n={q.n}, M={q.M}, B={q.B}")
        if cylinder_sum(q, hi, precision_bits) - 1 > 0:
            raise NumericalFailure(f"bracket failure: S_n(2) > 1 for n={q.n}, M={q.M}, B={q.B}")
        while hi - lo > q.tol:
            mid = (lo + hi) / 2
            if cylinder_sum(q, mid, precision_bits) > 1:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


@dataclass(frozen=True)
class PressureApprox:
    value: float
    band: tuple[float, float]


def pressure_approx(n: int, M: int, s: float, B: float, precision_bits: int = 80) -> PressureApprox:
    """``(1/n) log S_n(s; B, M)``, the depth-``n`` approximant of the pressure.

    The sup of the Birkhoff weight over ``X_A cap I_n`` lies between
    ``4^{-s} q_n^{-2s}`` and ``q_n^{-2s}``, which gives the reported band.
    """
    total = cylinder_sum(SnQuery(n=n, M=M, B=B), s, precision_bits)
    value = float(mpmath.log(total)) / n
    return PressureApprox(value=value, band=(value - 2 * s * math.log(2) / n, value))


# ------------------------------------------------------------ dimension formula

REGIMES = ("B_eq_1", "B_finite", "B_inf_b_finite", "B_inf_b_inf")


@dataclass(frozen=True)
class Exponents:
    logB: float
    logb: float
    approximate: bool = False


def liminf_exponents(phi: PhiSpec, horizon: tuple[int, int] = (2, 64)) -> Exponents:
    """``log B = liminf log phi(n) / n`` and ``log b = liminf log log phi(n) / n``.

    Symbolic forms return the exact limits; tables return the minimum of the
    ratios over ``horizon`` and are flagged approximate.
    """
    p = phi.params
    if phi.form == "power":
        if p["k"] == 0 and p["c"] * phi.scale <= 1:
            raise DomainError("log log phi is undefined for a constant phi <= 1")
        return Exponents(0.0, 0.0)
    if phi.form == "geometric":
        return Exponents(math.log(p["B"]), 0.0)
    if phi.form == "doubly":
        if p["b"] == 1.0 or p["c"] == 1.0:
            const = (p["c"] if p["b"] == 1.0 else 1.0) * phi.scale
            if const <= 1:
                raise DomainError("log log phi is undefined for a constant phi <= 1")
            return Exponents(0.0, 0.0)
        return Exponents(math.inf, math.log(p["b"]))
    n_min, n_max = horizon
    if n_min < 2 or n_max < n_min:
        raise DomainError("horizon needs 2 <= n_min <= n_max")
    ratios_B, ratios_b = [], []
    for n in range(n_min, n_max + 1):
        lv = phi.log_value(n)
        if lv <= 0:
            raise DomainError(f"log log phi undefined: phi({n}) <= 1")
        ratios_B.append(lv / n)
        ratios_b.append(math.log(lv) / n)
    return Exponents(min(ratios_B), min(ratios_b), approximate=True)


@dataclass(frozen=True)
class DimensionResult:
    logB: float
    logb: float
    regime: str
    dim: float
    method: str
    diagnostics: dict = field(default_factory=dict)


def classify(ex: Exponents) -> str:
    if ex.logB == 0:
        return "B_eq_1"
    if math.isinf(ex.logB):
        return "B_inf_b_inf" if math.isinf(ex.logb) else "B_inf_b_finite"
    return "B_finite"


def dimension(
    phi: PhiSpec,
    n: int = 3,
    M: int = 8,
    tol: float = DEFAULT_TOL,
    horizon: tuple[int, int] = (2, 64),
    precision_bits: int = 80,
) -> DimensionResult:
    """Hausdorff dimension of ``E'(phi)``.

    ``B = 1`` gives 1 and ``B = inf`` gives ``1/(b+1)`` (0 when ``b = inf``).
    For ``1 < B < inf`` the result is ``s_n(B, M)`` at the given budget, a
    finite-alphabet approximation of ``s(B)``; the sequence ``s_k`` for
    ``k <= n`` is attached for external extrapolation.
    """
    ex = liminf_exponents(phi, horizon)
    regime = classify(ex)
    diagnostics: dict = {"horizon_approximate": ex.approximate}
    if regime == "B_eq_1":
        return DimensionResult(ex.logB, ex.logb, regime, 1.0, "closed_form", diagnostics)
    if regime == "B_inf_b_inf":
        return DimensionResult(ex.logB, ex.logb, regime, 0.0, "closed_form", diagnostics)
    if regime == "B_inf_b_finite":
        b = math.exp(ex.logb)
        return DimensionResult(ex.logB, ex.logb, regime, 1.0 / (b + 1.0), "closed_form", diagnostics)
    B = math.exp(ex.logB)
    seq = [solve_sn(SnQuery(n=k, M=M, B=B, tol=tol), precision_bits) for k in range(1, n + 1)]
    diagnostics.update({"n": n, "M": M, "B": B, "s_sequence": seq})
    return DimensionResult(ex.logB, ex.logb, regime, seq[-1], "sn_extrapolation", diagnostics)
