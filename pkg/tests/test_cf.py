from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cfml import cf
from cfml.cf import Word
from cfml.errors import DomainError

words = st.lists(st.integers(1, 10**6), min_size=1, max_size=40).map(tuple)
small_words = st.lists(st.integers(1, 50), min_size=1, max_size=12).map(tuple)


def naive_value(digits):
    x = Fraction(0)
    for a in reversed(digits):
        x = 1 / (a + x)
    return x


def euclid(num, den):
    out = []
    while num:
        a, r = divmod(den, num)
        out.append(a)
        den, num = num, r
    return out


@pytest.mark.parametrize(
    "x, expected",
    [(Fraction(1, 2), (2,)), (Fraction(2, 5), (2, 2)), (Fraction(113, 355), (3, 7, 16))],
)
def test_expand_examples(x, expected):
    assert cf.expand(x, 10).digits == expected


def test_expand_truncates():
    assert cf.expand(Fraction(113, 355), 2).digits == (3, 7)


def test_expand_folds_trailing_one():
    # 3/4 = [1, 3] and also [1, 2, 1]
    assert cf.expand(Fraction(3, 4), 10).digits == (1, 3)
    assert cf.expand(Fraction(2, 3), 10).digits == (1, 2)


@pytest.mark.parametrize("bad", [Fraction(0), Fraction(1), Fraction(3, 2), Fraction(-1, 3)])
def test_expand_rejects_out_of_range(bad):
    with pytest.raises(DomainError):
        cf.expand(bad, 5)


def test_expand_rejects_float():
    with pytest.raises(DomainError):
        cf.expand(0.25, 5)


def test_word_rejects_non_positive_digits():
    with pytest.raises(DomainError):
        Word((3, 0, 2))


def test_convergents_known():
    assert cf.convergents((3, 7, 16)) == [(1, 3), (7, 22), (113, 355)]


def test_cylinder_known():
    c = cf.cylinder((2,))
    assert (c.lo, c.hi, c.closed_left) == (Fraction(1, 3), Fraction(1, 2), False)
    c = cf.cylinder((2, 3))
    assert (c.lo, c.hi, c.closed_left) == (Fraction(3, 7), Fraction(4, 9), True)
    assert Fraction(3, 7) in c and Fraction(4, 9) not in c


def test_empty_cylinder_is_unit_interval():
    c = cf.cylinder(())
    assert (c.lo, c.hi, c.length) == (0, 1, 1)


def test_measures_known():
    assert cf.tail_union_measure((), 2) == Fraction(1, 2)
    assert cf.digit_slice_measure((), 2) == Fraction(1, 6)
    assert cf.tail_union_measure((3, 7, 16), 5) == Fraction(1, 637935)


@given(words)
def test_evaluate_matches_naive(digits):
    assert cf.evaluate(digits) == naive_value(digits)


@given(words)
def test_determinant_identity(digits):
    w = Word(digits)
    for i in range(0, w.n + 1):
        assert w.p(i - 1) * w.q(i) - w.p(i) * w.q(i - 1) == (-1) ** i


@given(words)
def test_expand_evaluate_roundtrip(digits):
    if len(digits) >= 2 and digits[-1] == 1:
        digits = digits[:-2] + (digits[-2] + 1,)
    x = cf.evaluate(digits)
    if 0 < x < 1:
        assert cf.expand(x, len(digits) + 1).digits == digits


@given(st.integers(1, 10**9), st.integers(2, 10**9))
def test_expand_matches_euclid(a, b):
    num, den = sorted((a, b))
    if num == den:
        return
    x = Fraction(num, den)
    w = cf.expand(x, 200)
    assert cf.evaluate(w) == x
    assert sum(euclid(x.numerator, x.denominator)) == sum(w.digits)


@given(words)
def test_cylinder_length_formula(digits):
    w = Word(digits)
    c = cf.cylinder(w)
    q, qm = w.q(w.n), w.q(w.n - 1)
    assert c.hi - c.lo == c.length == Fraction(1, q * (q + qm))
    assert cf.evaluate(w) == (c.lo if c.closed_left else c.hi)


@given(words, st.integers(1, 10**6))
def test_partition_identity(digits, M):
    c = cf.cylinder(digits)
    total = sum((cf.digit_slice_measure(digits, k) for k in range(1, M)), Fraction(0)) if M < 60 else None
    if total is not None:
        assert total + cf.tail_union_measure(digits, M) == c.length
    assert cf.digit_slice_measure(digits, M) + cf.tail_union_measure(digits, M + 1) == cf.tail_union_measure(digits, M)


@given(words, st.integers(1, 10**6))
def test_tail_union_closed_form(digits, M):
    w = Word(digits)
    q, qm = w.q(w.n), w.q(w.n - 1)
    assert cf.tail_union_measure(w, M) == Fraction(1, q * (M * q + qm))


@given(small_words, st.integers(1, 30))
def test_children_tile_parent(digits, a):
    parent = cf.cylinder(digits)
    child = cf.cylinder(digits + (a,))
    assert parent.lo <= child.lo < child.hi <= parent.hi


@given(words, words)
def test_quasi_multiplicativity(u, v):
    wu, wv, wuv = Word(u), Word(v), Word(u + v)
    prod = wu.q(wu.n) * wv.q(wv.n)
    assert prod <= wuv.q(wuv.n) <= 2 * prod


@settings(max_examples=200)
@given(words, st.data())
def test_digit_removal_bracket(digits, data):
    # (a_k + 1)/2 <= q_n(w) / q_{n-1}(w without a_k) <= a_k + 1
    w = Word(digits)
    k = data.draw(st.integers(1, w.n))
    r = cf.remove_digit(w, k)
    ak = digits[k - 1]
    qn, qr = w.q(w.n), r.q(r.n)
    assert (ak + 1) * qr <= 2 * qn <= 2 * (ak + 1) * qr


def test_digit_removal_upper_bound_uses_removed_digit():
    # the neighbour a_{k+1} is not an upper bound: removing 9 from (9, 1) gives q = 10 > 1 * 1
    w = Word((9, 1))
    r = cf.remove_digit(w, 1)
    assert w.q(2) > w.digits[1] * r.q(1)
    assert w.q(2) <= (w.digits[0] + 1) * r.q(1)


@given(small_words, st.integers(1, 20), st.integers(0, 20))
def test_digit_range_hull(digits, lo, extra):
    hi = lo + extra
    left, right = cf.digit_range_hull(digits, lo, hi)
    cyls = [cf.cylinder(digits + (a,)) for a in range(lo, hi + 1)]
    assert left == min(c.lo for c in cyls)
    assert right == max(c.hi for c in cyls)
