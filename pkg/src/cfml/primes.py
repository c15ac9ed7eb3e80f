"""Prime sieving and the prime-distribution estimates used by the other modules.

The table stores primality of every integer ``0..limit`` as a little-endian
packed bitset (bit ``i`` of byte ``j`` is the integer ``8 j + i``) plus the
prime count at every block boundary, so ``pi(x)`` costs one block popcount.

Reciprocal-square tails are accumulated in binary fixed point on Python
integers: each term contributes ``floor(2**K / p**2)``.  The sum is therefore
exact up to the per-term floor, independent of summation order, and gives a
rigorous lower bound.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np

from cfml.errors import CapExceeded, DomainError

DEFAULT_MAX_LIMIT = 2 * 10**9
SEGMENT = 1 << 22
BLOCK_BITS = 1 << 16

CACHE_MAGIC = b"CFMLSIEV"
CACHE_VERSION = 1
_HEADER = struct.Struct("<8sIQ")
CACHE_ENV = "CFML_SIEVE_CACHE"

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

# Deterministic for every n < 3.3e24, which covers all 64-bit integers.
MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime_u64(n: int) -> bool:
    """Deterministic Miller-Rabin for ``n < 2**64`` (and far beyond)."""
    if n < 2:
        return False
    for p in MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _simple_sieve(n: int) -> np.ndarray:
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    return np.flatnonzero(flags)


def _sieve_segment(lo: int, hi: int, base: np.ndarray, limit: int) -> np.ndarray:
    """Packed primality bits for ``[lo, hi)``; ``lo`` and ``hi - lo`` are multiples of 8."""
    flags = np.ones(hi - lo, dtype=bool)
    if hi - 1 > limit:
        flags[limit + 1 - lo :] = False
    flags[(lo % 2) :: 2] = False  # evens
    if lo <= 2 < hi:
        flags[2 - lo] = True
    for v in (0, 1):
        if lo <= v < hi:
            flags[v - lo] = False
    for p in base:
        p = int(p)
        if p == 2:
            continue
        if p * p >= hi:
            break
        start = max(p * p, -(-lo // p) * p)
        # even multiples are already cleared
        if start % 2 == 0:
            start += p
        flags[start - lo :: 2 * p] = False
    return np.packbits(flags, bitorder="little")


@dataclass
class PrimeTable:
    """Primality of ``0..limit`` with block-cumulative prime counts."""

    limit: int
    bits: np.ndarray = field(repr=False)
    cum: np.ndarray = field(repr=False)
    _tail_cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_bits(cls, limit: int, bits: np.ndarray) -> "PrimeTable":
        nbits = bits.size * 8
        pad = (-nbits) % BLOCK_BITS
        padded = np.concatenate([bits, np.zeros(pad // 8, dtype=np.uint8)]) if pad else bits
        per_block = _POPCOUNT[padded].reshape(-1, BLOCK_BITS // 8).sum(axis=1, dtype=np.int64)
        cum = np.concatenate([[0], np.cumsum(per_block)]).astype(np.int64)
        return cls(limit=limit, bits=bits, cum=cum)

    def _check(self, x: int) -> None:
        if x > self.limit:
            raise CapExceeded(f"{x} exceeds the sieve limit {self.limit}")

    def is_prime(self, n: int) -> bool:
        n = int(n)
        if n < 0:
            return False
        self._check(n)
        return bool((self.bits[n >> 3] >> (n & 7)) & 1)

    def is_prime_any(self, n: int) -> bool:
        """Primality for any non-negative integer; Miller-Rabin above the limit."""
        n = int(n)
        if n <= self.limit:
            return self.is_prime(n)
        return is_prime_u64(n)

    def is_prime_array(self, values: np.ndarray) -> np.ndarray:
        """Vectorised primality of non-negative integers (any size)."""
        values = np.asarray(values)
        out = np.zeros(values.shape, dtype=bool)
        small = (values >= 0) & (values <= self.limit)
        v = values[small].astype(np.int64)
        out[small] = ((self.bits[v >> 3] >> (v & 7).astype(np.uint8)) & 1).astype(bool)
        big = np.flatnonzero((values > self.limit).ravel())
        if big.size:
            flat = out.reshape(-1)
            src = values.reshape(-1)
            for i in big:
                flat[i] = is_prime_u64(int(src[i]))
        return out

    def pi(self, x: int) -> int:
        """Number of primes ``<= x``."""
        x = int(x)
        if x < 2:
            return 0
        self._check(x)
        block = x // BLOCK_BITS
        start_byte = block * (BLOCK_BITS // 8)
        end_byte = x >> 3
        count = int(self.cum[block])
        if end_byte > start_byte:
            count += int(_POPCOUNT[self.bits[start_byte:end_byte]].sum(dtype=np.int64))
        last = int(self.bits[end_byte]) & ((1 << ((x & 7) + 1)) - 1)
        return count + bin(last).count("1")

    def primes_between(self, lo: int, hi: int) -> np.ndarray:
        """All primes ``p`` with ``lo <= p <= hi`` in ascending order (int64)."""
        lo = max(int(lo), 0)
        hi = int(hi)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        self._check(hi)
        b0, b1 = lo >> 3, (hi >> 3) + 1
        flags = np.unpackbits(self.bits[b0:b1], bitorder="little")
        idx = np.flatnonzero(flags).astype(np.int64) + 8 * b0
        return idx[(idx >= lo) & (idx <= hi)]

    def iter_primes(self, lo: int, hi: int, chunk: int = 1 << 24):
        """Ascending chunks of the primes in ``[lo, hi]``."""
        start = lo
        while start <= hi:
            stop = min(hi, start + chunk - 1)
            yield self.primes_between(start, stop)
            start = stop + 1

    @property
    def nbytes(self) -> int:
        return int(self.bits.nbytes + self.cum.nbytes)


def sieve(limit: int, *, max_limit: int = DEFAULT_MAX_LIMIT, workers: int = 1) -> PrimeTable:
    """Segmented sieve of Eratosthenes over ``0..limit``."""
    limit = int(limit)
    if limit < 2:
        raise DomainError("sieve limit must be >= 2")
    if limit > max_limit:
        raise CapExceeded(f"sieve limit {limit} exceeds the memory cap {max_limit}")
    base = _simple_sieve(math.isqrt(limit) + 1)
    total = (limit // 8 + 1) * 8
    bounds = [(lo, min(lo + SEGMENT, total)) for lo in range(0, total, SEGMENT)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _sieve_segment(b[0], b[1], base, limit), bounds))
    else:
        parts = [_sieve_segment(lo, hi, base, limit) for lo, hi in bounds]
    return PrimeTable.from_bits(limit, np.concatenate(parts))


# ---------------------------------------------------------------- cache file


def cache_path(directory: str | os.PathLike, limit: int) -> Path:
    return Path(directory) / f"sieve_{limit}.bin"


def save_table(table: PrimeTable, path: str | os.PathLike) -> Path:
    """Write ``magic | u32 version | u64 limit`` (little-endian) then the packed bits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, table.limit))
        fh.write(table.bits.tobytes())
    os.replace(tmp, path)
    return path


def load_table_file(path: str | os.PathLike) -> PrimeTable:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DomainError(f"{path}: truncated sieve cache")
    magic, version, limit = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise DomainError(f"{path}: bad magic {magic!r}")
    if version != CACHE_VERSION:
        raise DomainError(f"{path}: unsupported cache version {version}")
    bits = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size).copy()
    if bits.size != (limit >> 3) + 1:
        raise DomainError(f"{path}: payload size does not match limit {limit}")
    return PrimeTable.from_bits(limit, bits)


def load_table(limit: int, cache_dir: str | os.PathLike | None = None, **kwargs) -> PrimeTable:
    """Sieve to ``limit``, going through the on-disk cache when a directory is configured."""
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    if not cache_dir:
        return sieve(limit, **kwargs)
    path = cache_path(cache_dir, limit)
    if path.exists():
        try:
            return load_table_file(path)
        except DomainError:
            pass
    table = sieve(limit, **kwargs)
    save_table(table, path)
    return table


# ------------------------------------------------------------ interval counts


def interval_prime_count(lo: float, hi: float, table: PrimeTable) -> int:
    """Number of primes in the closed interval ``[lo, hi]``."""
    ilo = math.ceil(lo)
    ihi = math.floor(hi)
    if ihi < ilo:
        return 0
    if ihi > table.limit:
        raise CapExceeded(f"interval end {ihi} exceeds the sieve limit {table.limit}")
    return table.pi(ihi) - table.pi(ilo - 1)


def gamma_power_bounds(gamma: float, n: int) -> tuple[int, int]:
    """Integer bounds of ``[gamma**n, 2 gamma**n]``, rounded inward."""
    if gamma <= 1:
        raise DomainError("gamma must be > 1")
    x = mpmath.mpf(gamma) ** n
    if not mpmath.isfinite(x) or x > 2**62:
        raise CapExceeded(f"gamma**n = {x} is not representable")
    return int(mpmath.ceil(x)), int(mpmath.floor(2 * x))


def large_interval_constant(gamma: float, n: int, table: PrimeTable) -> float:
    """``c_n(gamma)`` defined by ``#(P cap [g^n, 2 g^n]) = c_n g^n / (n log g)``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    lo, hi = gamma_power_bounds(gamma, n)
    count = interval_prime_count(lo, hi, table)
    return count * n * math.log(gamma) / float(mpmath.mpf(gamma) ** n)


def small_interval_nonempty(x: float, table: PrimeTable) -> bool:
    """True iff some prime lies in ``[0.999 x, x)``."""
    if x <= 0:
        return False
    lo = math.ceil(0.999 * x)
    hi = math.ceil(x) - 1
    if hi > table.limit:
        raise CapExceeded(f"{x} exceeds the sieve limit {table.limit}")
    return hi >= lo and table.pi(hi) - table.pi(lo - 1) > 0


# --------------------------------------------------------- reciprocal squares


@dataclass(frozen=True)
class TailSumResult:
    M: int
    limit: int
    lower: mpmath.mpf
    upper: mpmath.mpf
    normalized: float

    @property
    def midpoint(self) -> mpmath.mpf:
        return (self.lower + self.upper) / 2


def _fixed_point_reciprocal_squares(primes: np.ndarray, one: int) -> int:
    return sum(one // (p * p) for p in primes.tolist())


def prime_square_tail(M: int, table: PrimeTable, precision_bits: int = 80) -> TailSumResult:
    """Bracket for ``sum_{p >= M} 1/p**2``.

    ``lower`` sums the primes ``M <= p <= limit`` (fixed point, rounded down);
    ``upper`` adds the floor slack and ``1/limit``, which bounds
    ``sum_{n > limit} 1/n**2`` and hence the unsieved primes.
    """
    M = int(M)
    if M < 2:
        raise DomainError("M must be >= 2")
    if M > table.limit:
        raise CapExceeded(f"M = {M} exceeds the sieve limit {table.limit}")
    if precision_bits < 53:
        raise DomainError("precision_bits must be >= 53")
    K = max(precision_bits + 64, 192)
    one = 1 << K
    key = ("total", K)
    if key not in table._tail_cache:
        total, count = 0, 0
        for chunk in table.iter_primes(2, table.limit):
            total += _fixed_point_reciprocal_squares(chunk, one)
            count += int(chunk.size)
        table._tail_cache[key] = (total, count)
    total, count = table._tail_cache[key]
    head = table.primes_between(2, M - 1)
    fixed = total - _fixed_point_reciprocal_squares(head, one)
    n_terms = count - int(head.size)
    with mpmath.workprec(precision_bits):
        # directed rounding keeps the bracket valid after conversion
        lower = mpmath.fdiv(fixed, one, rounding="d")
        upper = mpmath.fadd(
            mpmath.fdiv(fixed + n_terms, one, rounding="u"), mpmath.fdiv(1, table.limit, rounding="u"), rounding="u"
        )
        mid = (lower + upper) / 2
        normalized = float(mid * M * mpmath.log(M))
    return TailSumResult(M=M, limit=table.limit, lower=lower, upper=upper, normalized=normalized)
