"""Cantor subset of ``E'(phi)`` with its mass distribution, and audits of it.

Block ``k`` of an admissible word occupies positions ``n_{k-1}+3 .. n_k+2``:

* ``l_k N`` free digits in ``{1..M}`` (positions up to ``m_k``),
* ``N + i_k`` filler digits equal to 2 (positions ``m_k+1 .. n_k``),
* two primes from ``P_{n_k} = primes in [Bt^{n_k}, 2 Bt^{n_k}]``.

with ``n_0 = -2``, ``m_k = n_{k-1} + 2 + l_k N`` and
``n_k = m_k + N + i_k``.  Positions past the last configured block are free.

The fundamental interval ``J_n(w)`` is the hull of the admissible
``(n+1)``-cylinders below ``w``.  Its endpoints are exact rationals; masses are
mpmath reals at ``precision_bits``.  A level is stored column-wise
(:class:`Level`) because one prime block already yields ~10^5 nodes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import mpmath
import numpy as np

from cfml.cf import Word
from cfml.errors import CapExceeded, DomainError
from cfml.pressure import SnQuery, solve_sn
from cfml.primes import PrimeTable, gamma_power_bounds, interval_prime_count, sieve

DEFAULT_NODE_CAP = 10**6
E20 = math.exp(20)


@dataclass(frozen=True)
class CantorParams:
    Btilde: float
    M: int
    N: int
    s: float
    delta: float
    ell: tuple[int, ...]
    i_seq: tuple[int, ...] = ()
    audit_mode: bool = True
    precision_bits: int = 80

    def __post_init__(self) -> None:
        object.__setattr__(self, "ell", tuple(int(v) for v in self.ell))
        i_seq = tuple(int(v) for v in self.i_seq) + (0,) * max(0, len(self.ell) - len(self.i_seq))
        object.__setattr__(self, "i_seq", i_seq[: len(self.ell)])
        if not self.Btilde > 1:
            raise DomainError("Btilde must be > 1")
        if self.M < 2 or self.N < 1:
            raise DomainError("need M >= 2 and N >= 1")
        if not self.ell or any(v < 1 for v in self.ell):
            raise DomainError("ell must be a non-empty sequence of positive integers")
        if any(not 0 <= i < self.N for i in self.i_seq):
            raise DomainError("each i_k must satisfy 0 <= i_k < N")
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        if not 0.5 < self.s < 1:
            raise DomainError("s must lie in (1/2, 1)")
        if not self.s - self.delta > 0.5:
            raise DomainError("s - delta must exceed 1/2")

    @property
    def blocks(self) -> int:
        return len(self.ell)

    @cached_property
    def n_seq(self) -> tuple[int, ...]:
        """``(n_0, n_1, ..., n_K)`` with ``n_0 = -2``."""
        out = [-2]
        for l, i in zip(self.ell, self.i_seq):
            out.append(out[-1] + 2 + l * self.N + self.N + i)
        return tuple(out)

    def n_k(self, k: int) -> int:
        return self.n_seq[k]

    def m_k(self, k: int) -> int:
        return self.n_seq[k - 1] + 2 + self.ell[k - 1] * self.N

    @property
    def holder_exponent(self) -> float:
        return self.s * (1 - self.delta) - self.delta

    def block_of(self, position: int) -> int:
        """Block index ``k`` containing the 1-based ``position`` (``K+1`` past the end)."""
        for k in range(1, self.blocks + 1):
            if position <= self.n_seq[k] + 2:
                return k
        return self.blocks + 1

    def position_kind(self, position: int) -> tuple[str, int]:
        """``('free' | 'filler' | 'prime', k)`` for a 1-based digit position."""
        k = self.block_of(position)
        if k > self.blocks:
            return "free", k
        if position <= self.m_k(k):
            return "free", k
        if position <= self.n_seq[k]:
            return "filler", k
        return "prime", k

    def prime_bounds(self, k: int) -> tuple[int, int]:
        """Integer range ``[ceil(Bt^{n_k}), floor(2 Bt^{n_k})]``."""
        return gamma_power_bounds(self.Btilde, self.n_seq[k])

    def to_dict(self) -> dict:
        return {
            "Btilde": self.Btilde,
            "M": self.M,
            "N": self.N,
            "s": self.s,
            "delta": self.delta,
            "ell": list(self.ell),
            "i_seq": list(self.i_seq),
            "audit_mode": self.audit_mode,
            "n_k": list(self.n_seq[1:]),
            "m_k": [self.m_k(k) for k in range(1, self.blocks + 1)],
        }


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    severity: str = "warn"  # "warn": a construction hypothesis that small parameters may violate

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "severity": self.severity, "detail": self.detail}


def _raw_factor(p: CantorParams, w: Sequence[int]) -> mpmath.mpf:
    q = Word(tuple(w)).q(p.N)
    s = mpmath.mpf(p.s)
    return mpmath.power(mpmath.mpf(p.Btilde), -(3 * s - 1) * p.N) * mpmath.power(q, -2 * s)


def normalizer(p: CantorParams) -> mpmath.mpf:
    """``u = sum over w in {1..M}^N of Bt^{-(3s-1)N} q_N(w)^{-2s}``, i.e. ``S_N(s; Bt, M)``."""
    if p.M**p.N > DEFAULT_NODE_CAP:
        raise CapExceeded(f"M**N = {p.M}**{p.N} words is too many for the normaliser")
    with mpmath.workprec(p.precision_bits):
        return mpmath.fsum(_raw_factor(p, w) for w in itertools.product(range(1, p.M + 1), repeat=p.N))


class Construction:
    """Digit rules, prime sets and the normaliser ``u`` for one parameter set."""

    def __init__(self, params: CantorParams, table: PrimeTable | None = None):
        self.params = params
        top = max(params.prime_bounds(k)[1] for k in range(1, params.blocks + 1))
        self.table = table if table is not None and table.limit >= top else sieve(max(top, 2))
        self.primes = {k: self.table.primes_between(*params.prime_bounds(k)) for k in range(1, params.blocks + 1)}
        for k, ps in self.primes.items():
            if ps.size == 0:
                lo, hi = params.prime_bounds(k)
                raise DomainError(f"P_(n_{k}) is empty: no prime in [{lo}, {hi}]")
        self._factor_cache: dict[tuple[int, ...], mpmath.mpf] = {}
        self._partial_cache: dict[tuple[int, ...], mpmath.mpf] = {}

    # digit rules ---------------------------------------------------------
    def allowed(self, position: int) -> np.ndarray:
        kind, k = self.params.position_kind(position)
        if kind == "free":
            return np.arange(1, self.params.M + 1, dtype=np.int64)
        if kind == "filler":
            return np.array([2], dtype=np.int64)
        return self.primes[k]

    def hull_digits(self, position: int) -> tuple[int, int]:
        kind, k = self.params.position_kind(position)
        if kind == "free":
            return 1, self.params.M
        if kind == "filler":
            return 2, 2
        ps = self.primes[k]
        return int(ps[0]), int(ps[-1])

    def prime_count(self, k: int) -> int:
        return int(self.primes[k].size)

    def large_interval_constant(self, k: int) -> float:
        n = self.params.n_seq[k]
        return self.prime_count(k) * n * math.log(self.params.Btilde) / float(mpmath.mpf(self.params.Btilde) ** n)

    # mass ------------------------------------------------------------------
    @cached_property
    def u(self) -> mpmath.mpf:
        return normalizer(self.params)

    def _raw_factor(self, w: Sequence[int]) -> mpmath.mpf:
        return _raw_factor(self.params, w)

    def factor(self, w: tuple[int, ...]) -> mpmath.mpf:
        """``u^{-1} Bt^{-(3s-1)N} q_N(w)^{-2s}`` for one free ``N``-block."""
        if w not in self._factor_cache:
            with mpmath.workprec(self.params.precision_bits):
                self._factor_cache[w] = self._raw_factor(w) / self.u
        return self._factor_cache[w]

    def partial_factor(self, head: tuple[int, ...]) -> mpmath.mpf:
        """Sum of :meth:`factor` over all completions of a partial free block."""
        if len(head) == self.params.N:
            return self.factor(head)
        if head not in self._partial_cache:
            M, N = self.params.M, self.params.N
            with mpmath.workprec(self.params.precision_bits):
                self._partial_cache[head] = mpmath.fsum(
                    self.factor(head + tail) for tail in itertools.product(range(1, M + 1), repeat=N - len(head))
                )
        return self._partial_cache[head]

    def mass_of(self, digits: Sequence[int]) -> mpmath.mpf:
        """``mu(J_n(a_1..a_n))`` for an admissible word, following the block recursion."""
        p = self.params
        digits = tuple(int(a) for a in digits)
        n = len(digits)
        with mpmath.workprec(p.precision_bits):
            mass = mpmath.mpf(1)
            pos = 0  # digits consumed
            for k in range(1, p.blocks + 2):
                if pos >= n:
                    break
                if k > p.blocks:
                    raise DomainError("mass is defined up to level n_K + 2 of the configured blocks")
                free_end = p.m_k(k)
                free = digits[pos:min(n, free_end)]
                for j in range(0, len(free), p.N):
                    mass *= self.partial_factor(free[j : j + p.N])
                if n <= free_end:
                    break
                pos = p.n_seq[k]
                if n <= pos:
                    break
                n_primes = min(n, pos + 2) - pos
                mass /= mpmath.mpf(self.prime_count(k)) ** n_primes
                pos += 2
            return +mass


@dataclass(frozen=True)
class MassNode:
    word: Word
    level: int
    lo: Fraction
    hi: Fraction
    mass: mpmath.mpf

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo


@dataclass
class Level:
    """All nodes at level ``n`` stored column-wise, words in lexicographic order."""

    n: int
    digits: np.ndarray  # (count, n)
    pm: list[int]
    qm: list[int]
    p: list[int]
    q: list[int]
    hull: tuple[int, int]  # admissible range of digit n+1
    masses: list
    parent: np.ndarray | None
    sampled: bool = False
    sample_fraction: Fraction = Fraction(1)

    @property
    def count(self) -> int:
        return int(self.digits.shape[0])

    def endpoints(self, i: int) -> tuple[Fraction, Fraction]:
        lo_d, hi_d = self.hull
        e1 = Fraction(lo_d * self.p[i] + self.pm[i], lo_d * self.q[i] + self.qm[i])
        e2 = Fraction((hi_d + 1) * self.p[i] + self.pm[i], (hi_d + 1) * self.q[i] + self.qm[i])
        return (e1, e2) if e1 < e2 else (e2, e1)

    def length_terms(self) -> tuple[list[int], list[int]]:
        """``|J_n| = num / den`` per node, exactly (numerator is constant on a level)."""
        lo_d, hi_d = self.hull
        width = hi_d + 1 - lo_d
        dens = [(lo_d * q + qm) * ((hi_d + 1) * q + qm) for q, qm in zip(self.q, self.qm)]
        return [width] * len(dens), dens

    def edge_fractions(self) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
        """Left and right hull endpoints as ``(num, den)`` pairs."""
        lo_d, hi_d = self.hull
        a = [(lo_d * p + pm, lo_d * q + qm) for p, pm, q, qm in zip(self.p, self.pm, self.q, self.qm)]
        b = [((hi_d + 1) * p + pm, (hi_d + 1) * q + qm) for p, pm, q, qm in zip(self.p, self.pm, self.q, self.qm)]
        # h is increasing in t for even n, and t = 1/lo_d > 1/(hi_d+1)
        return (b, a) if self.n % 2 == 0 else (a, b)

    def node(self, i: int) -> MassNode:
        lo, hi = self.endpoints(i)
        return MassNode(Word(tuple(int(v) for v in self.digits[i])), self.n, lo, hi, self.masses[i])

    def nodes(self) -> Iterator[MassNode]:
        return (self.node(i) for i in range(self.count))

    def total_mass(self) -> mpmath.mpf:
        return mpmath.fsum(self.masses)


def _mass_key(params: CantorParams, digits_row: Sequence[int]) -> tuple:
    """Digits that determine the mass: prime digits only matter through their count."""
    key = []
    for pos, a in enumerate(digits_row, start=1):
        kind, _ = params.position_kind(pos)
        key.append(0 if kind == "prime" else a)
    return tuple(key)


def _extend(con: Construction, prev: Level | None, n: int, prime_sample: int | None, seed: int) -> Level:
    params = con.params
    allowed = con.allowed(n)
    sampled = False
    fraction = prev.sample_fraction if prev is not None else Fraction(1)
    if prime_sample is not None and params.position_kind(n)[0] == "prime" and allowed.size > prime_sample:
        rng = np.random.Generator(np.random.Philox(key=(int(seed) & ((1 << 64) - 1)) | (n << 64)))
        allowed = np.sort(rng.choice(allowed, size=prime_sample, replace=False))
        fraction *= Fraction(prime_sample, con.prime_count(params.position_kind(n)[1]))
        sampled = True
    b = int(allowed.size)
    if prev is None:
        digits = allowed.reshape(-1, 1)
        pm0, qm0, p0, q0 = [1], [0], [0], [1]
        parent = None
    else:
        digits = np.hstack([np.repeat(prev.digits, b, axis=0), np.tile(allowed, prev.count).reshape(-1, 1)])
        pm0, qm0, p0, q0 = prev.pm, prev.qm, prev.p, prev.q
        parent = np.repeat(np.arange(prev.count), b)
    alist = allowed.tolist()
    new_pm, new_qm, new_p, new_q = [], [], [], []
    for pm, qm, p, q in zip(pm0, qm0, p0, q0):
        for a in alist:
            new_pm.append(p)
            new_qm.append(q)
            new_p.append(a * p + pm)
            new_q.append(a * q + qm)
    cache: dict[tuple, mpmath.mpf] = {}
    masses = []
    for row in digits.tolist():
        key = _mass_key(params, row)
        m = cache.get(key)
        if m is None:
            m = cache[key] = con.mass_of(row)
        masses.append(m)
    return Level(
        n=n,
        digits=digits,
        pm=new_pm,
        qm=new_qm,
        p=new_p,
        q=new_q,
        hull=con.hull_digits(n + 1),
        masses=masses,
        parent=parent,
        sampled=sampled or (prev is not None and prev.sampled),
        sample_fraction=fraction,
    )


def level_size(con: Construction, n: int, prime_sample: int | None = None) -> int:
    size = 1
    for pos in range(1, n + 1):
        b = con.allowed(pos).size
        if prime_sample is not None and con.params.position_kind(pos)[0] == "prime":
            b = min(b, prime_sample)
        size *= int(b)
    return size


def iter_levels(
    con: Construction,
    max_level: int,
    cap: int = DEFAULT_NODE_CAP,
    prime_sample: int | None = None,
    seed: int = 0,
) -> Iterator[Level]:
    """Levels ``1..max_level`` in order, each built from the previous one."""
    params = con.params
    if max_level > params.n_seq[-1] + 2:
        raise DomainError(f"levels are defined up to n_K + 2 = {params.n_seq[-1] + 2}")
    for n in range(1, max_level + 1):
        size = level_size(con, n, prime_sample)
        if size > cap:
            raise CapExceeded(f"level {n} has {size} nodes, above the cap {cap}; pass prime_sample to subsample primes")
    prev = None
    for n in range(1, max_level + 1):
        prev = _extend(con, prev, n, prime_sample, seed)
        yield prev


def enumerate_level(
    params: CantorParams | Construction,
    n: int,
    cap: int = DEFAULT_NODE_CAP,
    prime_sample: int | None = None,
    seed: int = 0,
) -> Level:
    """Every admissible word of length ``n`` with exact ``J_n`` hull and mass."""
    con = params if isinstance(params, Construction) else Construction(params)
    level = None
    for level in iter_levels(con, n, cap, prime_sample, seed):
        pass
    return level


def mass(params: CantorParams | Construction, node: MassNode | Sequence[int]) -> mpmath.mpf:
    con = params if isinstance(params, Construction) else Construction(params)
    con_u = con.u
    if not con_u > 1 and not con.params.audit_mode:
        raise DomainError(f"u = {mpmath.nstr(con_u, 12)} <= 1: s >= s_N(Bt, M)")
    digits = node.word.digits if isinstance(node, MassNode) else tuple(node)
    return con.mass_of(digits)


# ------------------------------------------------------------------ validation


def validate_params(params: CantorParams, table: PrimeTable | None = None) -> tuple[CantorParams, list[Check]]:
    """Check the construction's hypotheses.

    Hypotheses that small parameters cannot meet are warnings in
    audit mode and errors otherwise.  Empty prime sets and ``c_{n_j} >= 2``
    are always errors.
    """
    p = params
    checks: list[Check] = []
    try:
        sN = solve_sn(SnQuery(n=p.N, M=p.M, B=p.Btilde), p.precision_bits)
        checks.append(Check("s_N(Bt,M) > s", sN > p.s, f"s_N = {sN:.10f}, s = {p.s}"))
    except CapExceeded as exc:
        checks.append(Check("s_N(Bt,M) > s", False, f"not evaluated: {exc}"))
    bound = max(E20, 2 / p.delta + 1)
    checks.append(Check("N > max(e^20, 2/delta + 1)", p.N > bound, f"N = {p.N}, bound = {bound:.6g}"))
    for k in range(1, p.blocks + 1):
        nk, lk = p.n_seq[k], p.ell[k - 1]
        checks.append(Check(f"N l_{k} / n_{k} >= 1 - delta", p.N * lk / nk >= 1 - p.delta, f"{p.N * lk / nk:.6g} vs {1 - p.delta:.6g}"))
        checks.append(Check(f"log n_{k} / n_{k} < delta", math.log(nk) / nk < p.delta, f"{math.log(nk) / nk:.6g} vs {p.delta}"))
        checks.append(Check(f"l_{k} >= 24 N", lk >= 24 * p.N, f"l_{k} = {lk}, 24N = {24 * p.N}"))
    u = normalizer(p)
    checks.append(Check("u > 1", u > 1, f"u = {mpmath.nstr(u, 15)}"))
    try:
        con = Construction(p, table)
    except CapExceeded as exc:
        con = None
        for k in range(1, p.blocks + 1):
            checks.append(Check(f"c_(n_{k})(Bt) < 2", False, f"not evaluated: {exc}"))
    if con is not None:
        for k in range(1, p.blocks + 1):
            c = con.large_interval_constant(k)
            checks.append(Check(f"c_(n_{k})(Bt) < 2", c < 2, f"c = {c:.10f}, #P = {con.prime_count(k)}", severity="error"))
    failed_errors = [c for c in checks if not c.passed and c.severity == "error"]
    if failed_errors:
        raise DomainError("; ".join(f"{c.name} fails ({c.detail})" for c in failed_errors))
    if not p.audit_mode:
        failed = [c for c in checks if not c.passed]
        if failed:
            raise DomainError("; ".join(f"{c.name} fails ({c.detail})" for c in failed))
    return p, checks


# ----------------------------------------------------------------------- audits


def level_class(params: CantorParams, n: int) -> tuple[str, int]:
    """``'free'`` (n_{j-1}+2 <= n < m_j), ``'filler'`` (m_j <= n < n_j) or ``'prime'`` (n in {n_j, n_j+1})."""
    for j in range(1, params.blocks + 1):
        if n < params.m_k(j):
            return "free", j
        if n < params.n_seq[j]:
            return "filler", j
        if n <= params.n_seq[j] + 1:
            return "prime", j
    return "free", params.blocks + 1


GENERIC_BAND = (Fraction(1, 12), Fraction(1))
PRIME_BAND = (Fraction(1, 64), Fraction(8))


@dataclass
class LengthReport:
    level: int
    level_class: str
    band: tuple[Fraction, Fraction]
    min_scaled: Fraction
    max_scaled: Fraction
    in_band: bool
    generic_scaling_holds: bool
    prime_span: int | None = None
    prime_span_ok: bool | None = None

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "class": self.level_class,
            "band": [float(self.band[0]), float(self.band[1])],
            "min_scaled": float(self.min_scaled),
            "max_scaled": float(self.max_scaled),
            "in_band": self.in_band,
            "generic_scaling_holds": self.generic_scaling_holds,
            "prime_span": self.prime_span,
            "prime_span_ok": self.prime_span_ok,
        }


def length_audit(con: Construction, level: Level) -> LengthReport:
    """Scaled lengths ``|J_n| q_n^2`` (times ``Bt^{n_j}`` at prime-block levels) against fixed bands.

    Generic levels use ``[1/12, 1]``: with ``r = q_{n-1}/q_n`` the free hull
    gives ``M / ((1+r)(M+1+r))`` and the filler gives ``1/((2+r)(3+r))``.
    ``generic_scaling_holds`` reports whether the unscaled ``|J_n| q_n^2``
    stays in that band, which is expected to fail at prime-block levels.
    """
    params = con.params
    cls, j = level_class(params, level.n)
    nums, dens = level.length_terms()
    scale_num = 1
    band = GENERIC_BAND
    span = span_ok = None
    if cls == "prime":
        bn = mpmath.mpf(params.Btilde) ** params.n_seq[j]
        if bn != mpmath.floor(bn):
            raise DomainError("prime-block length audit needs an integer Bt^{n_j}")
        scale_num = int(bn)
        band = PRIME_BAND
        ps = con.primes[j]
        span = int(ps[-1] - ps[0])
        span_ok = span <= scale_num
    scaled = [Fraction(num * scale_num * q * q, den) for num, den, q in zip(nums, dens, level.q)]
    lo, hi = min(scaled), max(scaled)
    generic = all(GENERIC_BAND[0] <= Fraction(num * q * q, den) <= GENERIC_BAND[1] for num, den, q in zip(nums, dens, level.q))
    return LengthReport(level.n, cls, band, lo, hi, band[0] <= lo and hi <= band[1], generic, span, span_ok)


@dataclass
class GapReport:
    level: int
    count: int
    min_ratio: Fraction
    threshold: Fraction
    overlaps: int

    @property
    def passed(self) -> bool:
        return self.overlaps == 0 and self.min_ratio >= self.threshold

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "count": self.count,
            "min_gap_ratio": float(self.min_ratio),
            "threshold": float(self.threshold),
            "overlaps": self.overlaps,
            "passed": self.passed,
        }


def gap_audit(con: Construction, level: Level) -> GapReport:
    """Minimum over adjacent pairs of ``gap / |J_n|`` (both members), exactly."""
    if level.count < 2:
        raise DomainError("gap audit needs at least two nodes")
    if level.sampled:
        raise DomainError("gap audit needs a fully enumerated level")
    left, right = level.edge_fractions()
    bits = max(d.bit_length() for _, d in left + right)
    K = 2 * bits + 4
    keys = [(n << K) // d for n, d in left]
    order = sorted(range(level.count), key=keys.__getitem__)
    nums, dens = level.length_terms()
    best: Fraction | None = None
    overlaps = 0
    for a, b in zip(order, order[1:]):
        rn, rd = right[a]
        ln, ld = left[b]
        gap_num, gap_den = ln * rd - rn * ld, ld * rd
        if gap_num <= 0:
            overlaps += 1
            continue
        for i in (a, b):
            ratio = Fraction(gap_num * dens[i], gap_den * nums[i])
            if best is None or ratio < best:
                best = ratio
    threshold = Fraction(1, 8 * con.params.M)
    return GapReport(level.n, level.count, best if best is not None else Fraction(0), threshold, overlaps)


def gap_table(con: Construction, level: Level) -> list[dict]:
    """Every adjacent pair with exact endpoints and gap, for small instances."""
    left, right = level.edge_fractions()
    order = sorted(range(level.count), key=lambda i: Fraction(*left[i]))
    rows = []
    for a, b in zip(order, order[1:]):
        gap = Fraction(*left[b]) - Fraction(*right[a])
        la = Fraction(*right[a]) - Fraction(*left[a])
        lb = Fraction(*right[b]) - Fraction(*left[b])
        rows.append(
            {
                "left_word": [int(v) for v in level.digits[a]],
                "right_word": [int(v) for v in level.digits[b]],
                "gap": str(gap),
                "ratio_left": float(gap / la),
                "ratio_right": float(gap / lb),
            }
        )
    return rows


@dataclass
class HolderRow:
    level: int
    count: int
    max_log_ratio: float
    argmax: list[int]

    @property
    def max_ratio(self) -> float:
        return math.exp(self.max_log_ratio)


def holder_row(con: Construction, level: Level, exponent: float | None = None) -> HolderRow:
    """Max over nodes of ``mu(J_n) / |J_n|^exponent`` (default ``s(1-delta) - delta``), in log space."""
    theta = con.params.holder_exponent if exponent is None else exponent
    nums, dens = level.length_terms()
    log_num = math.log(nums[0])
    mass_logs: dict[int, float] = {}
    best, arg = -math.inf, 0
    for i, (den, m) in enumerate(zip(dens, level.masses)):
        lm = mass_logs.get(id(m))
        if lm is None:
            lm = mass_logs[id(m)] = float(mpmath.log(m))
        val = lm - theta * (log_num - math.log(den))
        if val > best:
            best, arg = val, i
    return HolderRow(level.n, level.count, best, [int(v) for v in level.digits[arg]])


def holder_audit(con: Construction, max_level: int, cap: int = DEFAULT_NODE_CAP, exponent: float | None = None) -> list[HolderRow]:
    return [holder_row(con, lev, exponent) for lev in iter_levels(con, max_level, cap)]


def max_growth(rows: Sequence[HolderRow]) -> float:
    """Largest ratio between consecutive per-level Hoelder maxima."""
    if len(rows) < 2:
        return 1.0
    return max(math.exp(b.max_log_ratio - a.max_log_ratio) for a, b in zip(rows, rows[1:]))


# -------------------------------------------------------------- full audit


def _child_sum_error(prev: Level, cur: Level) -> float:
    """Max relative deviation between a parent mass and the sum of its children."""
    groups: dict[int, list] = {}
    for child, par in enumerate(cur.parent.tolist()):
        groups.setdefault(par, []).append(cur.masses[child])
    worst = mpmath.mpf(0)
    for par, kids in groups.items():
        parent_mass = prev.masses[par]
        err = abs(mpmath.fsum(kids) - parent_mass) / parent_mass
        worst = max(worst, err)
    return float(worst)


def _nested(prev: Level, cur: Level) -> bool:
    pl, pr = prev.edge_fractions()
    cl, cr = cur.edge_fractions()
    for child, par in enumerate(cur.parent.tolist()):
        (a, b), (c, d) = cl[child], pl[par]
        if a * d < c * b:
            return False
        (a, b), (c, d) = cr[child], pr[par]
        if a * d > c * b:
            return False
    return True


def audit(
    params: CantorParams,
    max_level: int | None = None,
    cap: int = DEFAULT_NODE_CAP,
    prime_sample: int | None = None,
    seed: int = 0,
    table: PrimeTable | None = None,
) -> dict:
    """JSON-ready audit: parameters, hypothesis checks and one row per level."""
    _, checks = validate_params(params, table)
    con = Construction(params, table)
    if max_level is None:
        max_level = params.n_seq[1] + 1
    mass_tol = 1e-9
    rows = []
    holder_rows: list[HolderRow] = []
    multiplicity = {}
    prev: Level | None = None
    with mpmath.workprec(params.precision_bits):
        for lev in iter_levels(con, max_level, cap, prime_sample, seed):
            total = lev.total_mass()
            expected = mpmath.mpf(lev.sample_fraction.numerator) / lev.sample_fraction.denominator
            mass_err = float(abs(total - expected) / expected)
            row = {
                "level": lev.n,
                "count": lev.count,
                "sampled": lev.sampled,
                "total_mass": float(total),
                "mass_rel_error": mass_err,
                "mass_ok": mass_err <= mass_tol,
            }
            if prev is not None:
                row["child_sum_rel_error"] = _child_sum_error(prev, lev)
                row["nested"] = _nested(prev, lev)
                kind, k = params.position_kind(lev.n)
                if kind == "prime" and not lev.sampled:
                    mult = lev.count // prev.count
                    lo, hi = params.prime_bounds(k)
                    expected_mult = interval_prime_count(lo, hi, con.table)
                    multiplicity[lev.n] = {"multiplicity": mult, "sieve_count": expected_mult, "ok": mult == expected_mult}
                    row["multiplicity"] = mult
            length = length_audit(con, lev)
            row["length"] = length.to_dict()
            if not lev.sampled and lev.count >= 2:
                gap = gap_audit(con, lev)
                row["gap"] = gap.to_dict()
            hr = holder_row(con, lev)
            holder_rows.append(hr)
            row["holder_max_ratio"] = hr.max_ratio
            row["holder_argmax"] = hr.argmax
            rows.append(row)
            prev = lev
    growth = [
        math.exp(b.max_log_ratio - a.max_log_ratio) for a, b in zip(holder_rows, holder_rows[1:])
    ]
    for row, g in zip(rows[1:], growth):
        row["holder_growth"] = g
    warnings = [c.to_dict() for c in checks if not c.passed]
    return {
        "parameters": params.to_dict(),
        "precision_bits": params.precision_bits,
        "u": mpmath.nstr(con.u, 20),
        "prime_counts": {f"n_{k}": con.prime_count(k) for k in range(1, params.blocks + 1)},
        "checks": [c.to_dict() for c in checks],
        "warnings": warnings,
        "prime_sample": prime_sample,
        "seed": seed,
        "levels": rows,
        "multiplicity": multiplicity,
        "summary": {
            "mass_ok": all(r["mass_ok"] for r in rows),
            "gap_ok": all(r["gap"]["passed"] for r in rows if "gap" in r),
            "min_gap_ratio": min((r["gap"]["min_gap_ratio"] for r in rows if "gap" in r), default=None),
            "holder_finite": all(math.isfinite(h.max_log_ratio) for h in holder_rows),
            "holder_max_growth": max(growth, default=1.0),
            "nested_ok": all(r.get("nested", True) for r in rows),
            "multiplicity_ok": all(v["ok"] for v in multiplicity.values()),
        },
    }
