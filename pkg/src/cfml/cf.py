"""Exact continued-fraction kernel.

All arithmetic is on Python integers and :class:`fractions.Fraction`, so
convergents, cylinder endpoints and the measures of digit-constrained unions
are exact.  A word ``(a_1, ..., a_n)`` fixes the cylinder

    I_n(a_1..a_n) = { h(t) : t in [0, 1) },   h(t) = (p_n + p_{n-1} t) / (q_n + q_{n-1} t),

where ``t = T^n x`` is the tail of the expansion.  Every measure below is a
difference of ``h`` at two values of ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from cfml.errors import DomainError

Rational = Fraction


@dataclass(frozen=True)
class Word:
    """Finite sequence of partial quotients with lazily cached convergents.

    The empty word stands for ``I_0 = [0, 1)``.
    """

    digits: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        digits = tuple(self.digits)
        for a in digits:
            if not isinstance(a, int) or isinstance(a, bool) or a < 1:
                raise DomainError(f"partial quotients must be integers >= 1, got {a!r}")
        object.__setattr__(self, "digits", digits)

    @classmethod
    def of(cls, digits: Iterable[int]) -> "Word":
        return cls(tuple(int(a) for a in digits))

    def __len__(self) -> int:
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __getitem__(self, i):
        return self.digits[i]

    def __add__(self, other: "Word | Sequence[int]") -> "Word":
        return Word(self.digits + tuple(other))

    @cached_property
    def conv(self) -> tuple[tuple[int, int], ...]:
        """``(p_i, q_i)`` for ``i = -1, 0, 1, ..., n`` (index 0 holds ``i = -1``)."""
        pm, qm, p, q = 1, 0, 0, 1
        out = [(pm, qm), (p, q)]
        for a in self.digits:
            pm, qm, p, q = p, q, a * p + pm, a * q + qm
            out.append((p, q))
        return tuple(out)

    def p(self, i: int) -> int:
        return self.conv[i + 1][0]

    def q(self, i: int) -> int:
        return self.conv[i + 1][1]

    @property
    def n(self) -> int:
        return len(self.digits)

    def mobius(self, t: Fraction | int) -> Fraction:
        """``h(t) = (p_n + p_{n-1} t) / (q_n + q_{n-1} t)``."""
        n = self.n
        t = Fraction(t)
        return (self.p(n) + self.p(n - 1) * t) / (self.q(n) + self.q(n - 1) * t)


@dataclass(frozen=True)
class Cylinder:
    word: Word
    lo: Fraction
    hi: Fraction
    closed_left: bool
    length: Fraction

    def __contains__(self, x: Fraction) -> bool:
        if self.closed_left:
            return self.lo <= x < self.hi
        return self.lo < x <= self.hi


def _as_word(w: Word | Sequence[int]) -> Word:
    return w if isinstance(w, Word) else Word.of(w)


def expand(x: Fraction, max_terms: int) -> Word:
    """Partial quotients of a rational ``x`` in (0, 1), at most ``max_terms`` of them.

    Runs the Euclidean algorithm on ``x = num/den``.  Untruncated results are in
    canonical form (no terminal 1 beyond the first position).
    """
    if max_terms < 1:
        raise DomainError("max_terms must be >= 1")
    if isinstance(x, float):
        raise DomainError("expand takes an exact rational; convert floats explicitly (e.g. Fraction.from_float)")
    x = Fraction(x)
    if not 0 < x < 1:
        raise DomainError(f"x must lie in (0, 1), got {x}")
    num, den = x.numerator, x.denominator
    digits: list[int] = []
    while num and len(digits) < max_terms:
        a, r = divmod(den, num)
        digits.append(a)
        den, num = num, r
    if num == 0 and len(digits) >= 2 and digits[-1] == 1:
        digits.pop()
        digits[-1] += 1
    return Word(tuple(digits))


def evaluate(w: Word | Sequence[int]) -> Fraction:
    """The rational ``[a_1, ..., a_n] = p_n / q_n``."""
    w = _as_word(w)
    return Fraction(w.p(w.n), w.q(w.n))


def convergents(w: Word | Sequence[int]) -> list[tuple[int, int]]:
    """``[(p_1, q_1), ..., (p_n, q_n)]``."""
    w = _as_word(w)
    if w.n == 0:
        raise DomainError("convergents of the empty word are undefined")
    return list(w.conv[2:])


def cylinder(w: Word | Sequence[int]) -> Cylinder:
    """Exact n-th order cylinder: ``[p/q, (p+p')/(q+q'))`` for even n, mirrored for odd n."""
    w = _as_word(w)
    n = w.n
    a = w.mobius(0)
    b = w.mobius(1)
    even = n % 2 == 0
    lo, hi = (a, b) if even else (b, a)
    q, qm = w.q(n), w.q(n - 1)
    return Cylinder(word=w, lo=lo, hi=hi, closed_left=even, length=Fraction(1, q * (q + qm)))


def tail_union_measure(w: Word | Sequence[int], M: int) -> Fraction:
    """Lebesgue measure of ``{x in I_n(w) : a_{n+1}(x) >= M}``.

    That set is ``h((0, 1/M])``, so the measure is ``|h(1/M) - h(0)|``, equal to
    ``1 / (q_n (M q_n + q_{n-1}))``.
    """
    if M < 1:
        raise DomainError("M must be >= 1")
    w = _as_word(w)
    return abs(w.mobius(Fraction(1, M)) - w.mobius(0))


def digit_slice_measure(w: Word | Sequence[int], M: int) -> Fraction:
    """Lebesgue measure of ``{x in I_n(w) : a_{n+1}(x) = M}`` = ``|h(1/M) - h(1/(M+1))|``."""
    if M < 1:
        raise DomainError("M must be >= 1")
    w = _as_word(w)
    return abs(w.mobius(Fraction(1, M)) - w.mobius(Fraction(1, M + 1)))


def digit_range_hull(w: Word | Sequence[int], lo_digit: int, hi_digit: int) -> tuple[Fraction, Fraction]:
    """Closed hull of the union of ``I_{n+1}(w, a)`` over ``lo_digit <= a <= hi_digit``.

    Returned as ``(left, right)`` with ``left < right``.
    """
    if not 1 <= lo_digit <= hi_digit:
        raise DomainError("need 1 <= lo_digit <= hi_digit")
    w = _as_word(w)
    e1 = w.mobius(Fraction(1, lo_digit))
    e2 = w.mobius(Fraction(1, hi_digit + 1))
    return (e1, e2) if e1 < e2 else (e2, e1)


def remove_digit(w: Word | Sequence[int], k: int) -> Word:
    """The word with its ``k``-th digit (1-based) deleted."""
    w = _as_word(w)
    if not 1 <= k <= w.n:
        raise DomainError("k out of range")
    return Word(w.digits[: k - 1] + w.digits[k:])
