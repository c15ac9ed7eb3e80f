"""Empirical side of the zero-one law for two large prime partial quotients.

``E'_n`` holds when ``a_n`` is a prime ``>= phi(n)`` and some earlier
``a_k`` (``k < n``) is also a prime ``>= phi(n)``; ``E_n`` drops primality and
``F'_n`` keeps only the condition at index ``n``.  ``E'(phi)`` is the limsup
of the ``E'_n``, and the series ``sum n / (phi(n)^2 log^2 phi(n))`` decides
whether it is null or full.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from cfml import sampling
from cfml.cf import Word, digit_slice_measure
from cfml.errors import DomainError
from cfml.phi import PhiSpec
from cfml.primes import PrimeTable, load_table

DEFAULT_TABLE_LIMIT = 10**7
WILSON_Z = 1.959963984540054


class EventKind(str, enum.Enum):
    Eprime_n = "Eprime_n"
    E_n = "E_n"
    Fprime_n = "Fprime_n"


@lru_cache(maxsize=4)
def default_table(limit: int = DEFAULT_TABLE_LIMIT) -> PrimeTable:
    return load_table(limit)


def _table(table: PrimeTable | None) -> PrimeTable:
    return table if table is not None else default_table()


def check_event(
    w: Word | Sequence[int],
    kind: EventKind | str,
    phi: PhiSpec,
    n: int,
    table: PrimeTable | None = None,
) -> bool:
    kind = EventKind(kind)
    digits = tuple(w)
    if n < 1 or len(digits) < n:
        raise DomainError(f"word of length {len(digits)} is too short for n = {n}")
    table = _table(table)
    thr = phi(n)

    def large(a: int, prime: bool) -> bool:
        return a >= thr and (not prime or table.is_prime_any(a))

    prime = kind is not EventKind.E_n
    if not large(digits[n - 1], prime):
        return False
    if kind is EventKind.Fprime_n:
        return True
    return any(large(a, prime) for a in digits[: n - 1])


def wilson_interval(hits: int, samples: int, z: float = WILSON_Z) -> tuple[float, float]:
    if samples <= 0:
        raise DomainError("samples must be positive")
    p = hits / samples
    z2 = z * z
    denom = 1 + z2 / samples
    center = (p + z2 / (2 * samples)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / samples + z2 / (4 * samples * samples))
    lo = 0.0 if hits == 0 else max(0.0, center - half)
    hi = 1.0 if hits == samples else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class McReport:
    kind: EventKind
    n: int
    phi_n: float
    samples: int
    hits: int
    estimate: float
    ci95: tuple[float, float]
    seed: int

    CSV_HEADER = ("kind", "n", "phi_n", "samples", "hits", "estimate", "ci_lo", "ci_hi", "seed")

    def csv_row(self) -> list[str]:
        return [
            self.kind.value,
            str(self.n),
            repr(self.phi_n),
            str(self.samples),
            str(self.hits),
            repr(self.estimate),
            repr(self.ci95[0]),
            repr(self.ci95[1]),
            str(self.seed),
        ]


def _prime_large(digits: np.ndarray, thr, table: PrimeTable) -> np.ndarray:
    """Boolean mask of entries that are primes ``>= thr`` (thr broadcasts over rows)."""
    mask = digits >= thr
    idx = np.nonzero(mask)
    if idx[0].size:
        mask[idx] = table.is_prime_array(digits[idx])
    return mask


def _block_hits(kind: EventKind, thr: float, n: int, seed: int, table: PrimeTable, block: int, size: int) -> int:
    digits = sampling.digit_block(seed, block, n, size)
    if kind is EventKind.E_n:
        last = digits[n - 1] >= thr
        earlier = digits[: n - 1].max(axis=0, initial=0) >= thr
        return int(np.count_nonzero(last & earlier))
    last = _prime_large(digits[n - 1], thr, table)
    if kind is EventKind.Fprime_n:
        return int(np.count_nonzero(last))
    earlier = _prime_large(digits[: n - 1], thr, table).any(axis=0)
    return int(np.count_nonzero(last & earlier))


def mc_measure(
    kind: EventKind | str,
    phi: PhiSpec,
    n: int,
    samples: int,
    seed: int,
    workers: int = 1,
    table: PrimeTable | None = None,
) -> McReport:
    """Seeded Monte Carlo estimate of the Lebesgue measure of the event at index ``n``."""
    kind = EventKind(kind)
    if samples < 1:
        raise DomainError("samples must be >= 1")
    if n < 1:
        raise DomainError("n must be >= 1")
    thr = phi(n)
    if not thr >= 2:
        raise DomainError(f"phi(n) = {thr} < 2; log phi(n) must be positive")
    table = _table(table)
    parts = sampling.map_blocks(lambda b, size: _block_hits(kind, thr, n, seed, table, b, size), samples, workers)
    hits = sum(parts)
    return McReport(
        kind=kind,
        n=n,
        phi_n=thr,
        samples=samples,
        hits=hits,
        estimate=hits / samples,
        ci95=wilson_interval(hits, samples),
        seed=seed,
    )


def first_digit_prime_measure(threshold: float, table: PrimeTable | None = None, exact_below: int = 1000):
    """Bracket for ``L{x : a_1(x) prime >= threshold}`` = ``sum_p 1/(p (p+1))``.

    Primes below ``exact_below`` are summed exactly as digit-slice measures of
    the empty word, the rest up to the sieve limit in 192-bit fixed point, and
    ``1/(limit + 1)`` bounds every digit beyond the limit.
    """
    table = _table(table)
    start = max(2, math.ceil(threshold))
    head_hi = min(exact_below - 1, table.limit)
    exact = sum((digit_slice_measure(Word(), int(p)) for p in table.primes_between(start, head_hi)), Fraction(0))
    one = 1 << 192
    fixed, count = 0, 0
    for chunk in table.iter_primes(max(start, exact_below), table.limit):
        fixed += sum(one // (p * (p + 1)) for p in chunk.tolist())
        count += int(chunk.size)
    lower = exact + Fraction(fixed, one)
    upper = exact + Fraction(fixed + count, one) + Fraction(1, table.limit + 1)
    return lower, upper


# --------------------------------------------------------------- series test


@dataclass(frozen=True)
class SeriesResult:
    verdict: str
    reason: str
    partial_sums: list = field(default_factory=list)


def series_term(phi: PhiSpec, n: int) -> float:
    lv = phi.log_value(n)
    if lv <= 0:
        raise DomainError(f"log phi({n}) <= 0")
    if math.isinf(lv):
        return 0.0
    return n / (math.exp(2 * lv) * lv * lv) if lv < 350 else 0.0


def _partial_sums(phi: PhiSpec, horizon: int, checkpoints: int = 12) -> list[tuple[int, float]]:
    n0 = 1
    while n0 <= horizon and phi.log_value(n0) <= 0:
        n0 += 1
    if n0 > horizon:
        raise DomainError("phi(n) <= 1 on the whole horizon")
    marks = sorted({min(horizon, max(n0, round(horizon ** (i / checkpoints)))) for i in range(1, checkpoints + 1)})
    out, acc, j = [], 0.0, 0
    terms = [series_term(phi, n) for n in range(n0, horizon + 1)]
    for n, t in zip(range(n0, horizon + 1), terms):
        acc += t
        if j < len(marks) and n == marks[j]:
            out.append((n, acc))
            j += 1
    return out


def _symbolic_verdict(phi: PhiSpec) -> tuple[str, str]:
    p, scale = phi.params, phi.scale
    if phi.form == "power":
        k = p["k"]
        if k == 0:
            if p["c"] * scale <= 1:
                raise DomainError("constant phi <= 1: log phi undefined")
            return "divergent", "constant phi: terms grow like n"
        if k >= 1:
            return "convergent", f"terms ~ n^(1-2k)/log^2 n with k={k} >= 1 (integral test at k=1)"
        return "divergent", f"terms ~ n^(1-2k)/log^2 n with k={k} < 1 are >> 1/n"
    if phi.form == "geometric":
        if p["B"] == 1:
            if p["C"] * scale <= 1:
                raise DomainError("constant phi <= 1: log phi undefined")
            return "divergent", "constant phi: terms grow like n"
        return "convergent", "geometric phi: terms decay exponentially"
    if p["b"] == 1 or p["c"] == 1:
        const = (p["c"] if p["b"] == 1 else 1.0) * scale
        if const <= 1:
            raise DomainError("constant phi <= 1: log phi undefined")
        return "divergent", "constant phi: terms grow like n"
    return "convergent", "doubly exponential phi: terms decay super-exponentially"


def series_classifier(
    phi: PhiSpec,
    horizon: int = 10_000,
    lower_bound: PhiSpec | None = None,
    upper_bound: PhiSpec | None = None,
) -> SeriesResult:
    """Convergence of ``sum n / (phi(n)^2 log^2 phi(n))``.

    Symbolic forms are decided analytically.  A table is inconclusive unless a
    symbolic comparison function is supplied: the term decreases in ``phi``
    for ``phi > 1``, so ``phi >= psi`` with a convergent ``psi`` converges and
    ``phi <= psi`` with a divergent ``psi`` diverges.  Bounds are checked on
    the table's range.
    """
    if phi.symbolic:
        verdict, reason = _symbolic_verdict(phi)
        return SeriesResult(verdict, reason, _partial_sums(phi, horizon))
    values = phi.params["values"]
    horizon = min(horizon, len(values))
    sums = _partial_sums(phi, horizon)
    for bound, relation in ((lower_bound, "lower"), (upper_bound, "upper")):
        if bound is None:
            continue
        if not bound.symbolic:
            raise DomainError("comparison bound must be symbolic")
        ok = all(
            (phi.log_value(n) >= bound.log_value(n)) if relation == "lower" else (phi.log_value(n) <= bound.log_value(n))
            for n in range(1, len(values) + 1)
        )
        if not ok:
            raise DomainError(f"supplied {relation} bound does not hold on the table")
        bv, _ = _symbolic_verdict(bound)
        if relation == "lower" and bv == "convergent":
            return SeriesResult("convergent", "dominated by a convergent symbolic lower bound on phi", sums)
        if relation == "upper" and bv == "divergent":
            return SeriesResult("divergent", "dominates a divergent symbolic upper bound on phi", sums)
    return SeriesResult("inconclusive", "tabulated phi: partial sums only", sums)


# --------------------------------------------------------- Chung-Erdos ratio


@dataclass(frozen=True)
class CeResult:
    ratio: float
    N: int
    samples: int
    seed: int
    first_moment: int
    second_moment: int
    degenerate: bool
    hits_per_n: tuple[int, ...] = field(repr=False, default=())

    CSV_HEADER = ("N", "samples", "seed", "ratio", "first_moment", "second_moment", "degenerate")

    def csv_row(self) -> list[str]:
        return [
            str(self.N),
            str(self.samples),
            str(self.seed),
            repr(self.ratio),
            str(self.first_moment),
            str(self.second_moment),
            str(int(self.degenerate)),
        ]


def hit_matrix(digits: np.ndarray, phis: np.ndarray, table: PrimeTable) -> np.ndarray:
    """``H[n-1, j]`` = sample ``j`` lies in ``E'_n``, for ``n = 1..N`` (rows of ``digits``)."""
    N = digits.shape[0]
    thr = phis[:, None]
    prime = np.zeros(digits.shape, dtype=bool)
    cand = np.nonzero(digits >= 2)
    prime[cand] = table.is_prime_array(digits[cand])
    aprime = np.where(prime, digits, 0)
    H = np.zeros(digits.shape, dtype=bool)
    if N >= 2:
        prefix = np.maximum.accumulate(aprime, axis=0)
        H[1:] = (aprime[1:] >= thr[1:]) & (prefix[:-1] >= thr[1:])
    return H


def chung_erdos_ratio(
    phi: PhiSpec,
    N: int,
    samples: int,
    seed: int,
    workers: int = 1,
    table: PrimeTable | None = None,
) -> CeResult:
    """``(sum_n L(E'_n))^2 / sum_{m,n} L(E'_m cap E'_n)`` over ``n <= N``.

    Every sampled trajectory is tested against all ``N`` events once.  With
    ``R_j`` the number of events hit by sample ``j``, the ratio estimate is
    ``(sum R_j)^2 / (samples * sum R_j^2)``, built from exact integer moments.
    """
    if N < 1 or samples < 1:
        raise DomainError("need N >= 1 and samples >= 1")
    phis = np.array([phi(n) for n in range(1, N + 1)], dtype=np.float64)
    if not np.all(phis > 0):
        raise DomainError("phi must be positive")
    table = _table(table)

    def run(block: int, size: int):
        H = hit_matrix(sampling.digit_block(seed, block, N, size), phis, table)
        R = H.sum(axis=0, dtype=np.int64)
        return int(R.sum()), int((R * R).sum()), H.sum(axis=1, dtype=np.int64)

    parts = sampling.map_blocks(run, samples, workers)
    first = sum(p[0] for p in parts)
    second = sum(p[1] for p in parts)
    per_n = np.sum([p[2] for p in parts], axis=0)
    if second == 0:
        return CeResult(0.0, N, samples, seed, first, second, True, tuple(int(v) for v in per_n))
    ratio = float(Fraction(first * first, samples * second))
    return CeResult(ratio, N, samples, seed, first, second, False, tuple(int(v) for v in per_n))
