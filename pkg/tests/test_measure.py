from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cfml import cf, measure, sampling
from cfml.errors import DomainError
from cfml.measure import EventKind
from cfml.phi import PhiSpec

SQRT = PhiSpec.power(1, 0.5)


@settings(max_examples=300)
@given(st.lists(st.integers(1, 200), min_size=1, max_size=30), st.data())
def test_event_implication_chain(small_table, digits, data):
    n = data.draw(st.integers(1, len(digits)))
    phi = PhiSpec.power(data.draw(st.floats(1.0, 20.0)), 0.5)
    ep = measure.check_event(digits, EventKind.Eprime_n, phi, n, small_table)
    e = measure.check_event(digits, EventKind.E_n, phi, n, small_table)
    some_large = any(a >= phi(n) for a in digits[:n])
    assert (not ep or e) and (not e or some_large)


def test_check_event_examples(small_table):
    phi = PhiSpec.constant(5)
    assert measure.check_event((7, 1, 11), EventKind.Eprime_n, phi, 3, small_table)
    assert not measure.check_event((8, 1, 11), EventKind.Eprime_n, phi, 3, small_table)
    assert measure.check_event((8, 1, 12), EventKind.E_n, phi, 3, small_table)
    assert measure.check_event((1, 1, 11), EventKind.Fprime_n, phi, 3, small_table)
    with pytest.raises(DomainError):
        measure.check_event((7,), EventKind.E_n, phi, 2, small_table)


def test_sampler_first_digit_law():
    d = sampling.digit_block(11, 0, 3, sampling.BLOCK)
    d = np.concatenate([d, sampling.digit_block(11, 1, 3, sampling.BLOCK)], axis=1)
    n = d.shape[1]
    for k in (1, 2, 3):
        p = 1 / (k * (k + 1))
        freq = np.count_nonzero(d[0] == k) / n
        assert abs(freq - p) < 5 * np.sqrt(p * (1 - p) / n)


def test_sampler_pair_law():
    # P(a_1 = 1, a_2 = 1) = |I_2(1,1)| = 1/6
    blocks = [sampling.digit_block(5, b, 2, sampling.BLOCK) for b in range(4)]
    d = np.concatenate(blocks, axis=1)
    p = float(cf.cylinder((1, 1)).length)
    freq = np.count_nonzero((d[0] == 1) & (d[1] == 1)) / d.shape[1]
    assert abs(freq - p) < 5 * np.sqrt(p * (1 - p) / d.shape[1])


def test_sampler_prefix_consistent():
    a = sampling.digit_block(3, 2, 5, 100)
    b = sampling.digit_block(3, 2, 40, 100)
    assert np.array_equal(a, b[:5])


def test_wilson_interval():
    lo, hi = measure.wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = measure.wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)


def test_mc_measure_deterministic_across_workers(mc_table):
    a = measure.mc_measure("Eprime_n", SQRT, 64, 20_000, seed=9, workers=1, table=mc_table)
    b = measure.mc_measure("Eprime_n", SQRT, 64, 20_000, seed=9, workers=3, table=mc_table)
    assert a == b and a.csv_row() == b.csv_row()


def test_mc_measure_monotone_in_threshold(mc_table):
    hits = [
        measure.mc_measure("E_n", PhiSpec.power(c, 0.5), 16, 8192, seed=4, table=mc_table).hits for c in (1, 2, 4, 8)
    ]
    assert hits == sorted(hits, reverse=True)


def test_mc_measure_rejects_small_threshold(mc_table):
    with pytest.raises(DomainError):
        measure.mc_measure("Eprime_n", SQRT, 1, 100, seed=1, table=mc_table)


def test_first_digit_prime_measure_small_table():
    from cfml.primes import sieve

    t = sieve(10**4)
    lo, hi = measure.first_digit_prime_measure(2, t, exact_below=100)
    head = sum((cf.digit_slice_measure((), p) for p in range(2, 10**4 + 1) if t.is_prime(p)), Fraction(0))
    assert lo <= head <= hi
    assert hi - head <= Fraction(1, 10**4)


def test_fprime1_inside_ci(mc_table):
    lo, hi = measure.first_digit_prime_measure(2, mc_table)
    rep = measure.mc_measure("Fprime_n", PhiSpec.constant(2), 1, 50_000, seed=7, table=mc_table)
    assert rep.ci95[0] <= float(lo) and float(hi) <= rep.ci95[1]


@pytest.mark.parametrize(
    "phi, verdict",
    [
        (PhiSpec.power(1, 2), "convergent"),
        (PhiSpec.power(1, 1), "convergent"),
        (PhiSpec.power(1, 0.5), "divergent"),
        (PhiSpec.power(1, 0.99), "divergent"),
        (PhiSpec.constant(3), "divergent"),
        (PhiSpec.geometric(1, 1.5), "convergent"),
        (PhiSpec.doubly(2, 2), "convergent"),
    ],
)
def test_series_classifier(phi, verdict):
    assert measure.series_classifier(phi).verdict == verdict


def test_series_table_with_bounds():
    tab = PhiSpec.table([n**2 + 1.0 for n in range(1, 500)])
    assert measure.series_classifier(tab).verdict == "inconclusive"
    assert measure.series_classifier(tab, lower_bound=PhiSpec.power(1, 2)).verdict == "convergent"
    with pytest.raises(DomainError):
        measure.series_classifier(tab, upper_bound=PhiSpec.power(1, 0.5))


def test_ce_ratio_workers_and_range(mc_table):
    a = measure.chung_erdos_ratio(SQRT, 128, 10_000, seed=2, workers=1, table=mc_table)
    b = measure.chung_erdos_ratio(SQRT, 128, 10_000, seed=2, workers=4, table=mc_table)
    assert a == b
    assert 0 < a.ratio <= 1


def test_ce_hits_match_event_checker(mc_table):
    digits = sampling.digit_block(1, 0, 40, 300)
    phis = np.array([SQRT(n) for n in range(1, 41)])
    H = measure.hit_matrix(digits, phis, mc_table)
    for j in range(0, 300, 7):
        word = tuple(int(v) for v in digits[:, j])
        for n in range(2, 41):
            assert H[n - 1, j] == measure.check_event(word, EventKind.Eprime_n, SQRT, n, mc_table)
