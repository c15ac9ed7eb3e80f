from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest

from cfml import cantor, cf
from cfml.cantor import CantorParams, Construction
from cfml.errors import CapExceeded, DomainError


def trial_prime(n):
    return n > 1 and all(n % d for d in range(2, math.isqrt(n) + 1))


@pytest.fixture(scope="module")
def toy():
    # N=2, l_1=4: n_1 = 10, m_1 = 8, Bt^{n_1} = 1024
    return Construction(CantorParams(2.0, 2, 2, 0.6, 0.05, (4,)))


@pytest.fixture(scope="module")
def toy_levels(toy):
    return list(cantor.iter_levels(toy, 11))


@pytest.fixture(scope="module")
def tiny():
    # M=2, N=1 instance small enough for a full gap table
    return Construction(CantorParams(2.0, 2, 1, 0.6, 0.05, (4,)))


def test_block_recursion():
    p = CantorParams(2.0, 3, 2, 0.7, 0.1, (4, 6), (1, 0))
    assert p.n_seq == (-2, 11, 27)
    assert (p.m_k(1), p.m_k(2)) == (8, 25)
    assert [p.position_kind(i)[0] for i in range(1, 15)] == ["free"] * 8 + ["filler"] * 3 + ["prime"] * 2 + ["free"]


def test_param_errors():
    with pytest.raises(DomainError):
        CantorParams(2.0, 2, 2, 0.5, 0.01, (4,))
    with pytest.raises(DomainError):
        CantorParams(2.0, 2, 2, 0.6, 0.1, (4,))
    with pytest.raises(DomainError):
        CantorParams(2.0, 2, 2, 0.6, 0.05, (4,), (2,))


def test_validate_warnings():
    _, checks = cantor.validate_params(CantorParams(2.0, 2, 2, 0.6, 0.05, (48,)))
    by = {c.name: c for c in checks}
    assert by["l_1 >= 24 N"].passed
    assert not by["N > max(e^20, 2/delta + 1)"].passed
    _, checks = cantor.validate_params(CantorParams(2.0, 2, 2, 0.6, 0.05, (4,)))
    assert {c.name: c for c in checks}["c_(n_1)(Bt) < 2"].passed


def test_strict_mode_rejects_infeasible():
    with pytest.raises(DomainError):
        cantor.validate_params(CantorParams(2.0, 2, 2, 0.6, 0.05, (4,), audit_mode=False))


def test_prime_set_from_sieve(toy):
    expected = [p for p in range(1024, 2049) if trial_prime(p)]
    assert toy.primes[1].tolist() == expected and len(expected) == 137


def test_level_counts(toy, toy_levels):
    assert toy_levels[1].count == 2**2
    assert toy_levels[7].count == 2**8
    assert toy_levels[9].count == 2**8
    assert toy_levels[10].count == 2**8 * 137
    assert cantor.level_size(toy, 12) == 2**8 * 137**2


def test_admissible_digits(toy_levels):
    lev = toy_levels[10]
    assert set(lev.digits[:, :8].ravel().tolist()) == {1, 2}
    assert set(lev.digits[:, 8:10].ravel().tolist()) == {2}
    assert all(1024 <= a <= 2048 and trial_prime(a) for a in set(lev.digits[:, 10].tolist()))


def test_mass_conservation_and_children(toy_levels):
    prev = None
    for lev in toy_levels:
        with mpmath.workprec(80):
            assert abs(lev.total_mass() - 1) < 1e-15
        if prev is not None:
            assert cantor._child_sum_error(prev, lev) < 1e-15
            assert cantor._nested(prev, lev)
        prev = lev


def test_mass_values(toy, toy_levels):
    # level m_1: product of normalised block factors; prime level divides by #P
    w = (1, 2, 2, 1, 2, 2, 1, 1)
    expected = 1
    with mpmath.workprec(80):
        for j in range(0, 8, 2):
            q = cf.Word(w[j : j + 2]).q(2)
            s = mpmath.mpf(0.6)
            expected *= mpmath.power(2, -(3 * s - 1) * 2) * mpmath.power(q, -2 * s) / toy.u
        assert abs(toy.mass_of(w) / expected - 1) < 1e-20
        assert toy.mass_of(w + (2, 2)) == toy.mass_of(w)
        assert abs(toy.mass_of(w + (2, 2, 1031)) * 137 / toy.mass_of(w) - 1) < 1e-20


def test_u_matches_pressure_sum(toy):
    from cfml.pressure import SnQuery, cylinder_sum

    assert abs(toy.u - cylinder_sum(SnQuery(n=2, M=2, B=2.0), 0.6)) < 1e-20


def test_strict_mass_rejects_small_u():
    con = Construction(CantorParams(2.0, 2, 2, 0.6, 0.05, (4,), audit_mode=False))
    with pytest.raises(DomainError):
        cantor.mass(con, (1, 1))


def test_gap_audit(toy, toy_levels):
    for lev in toy_levels[1:]:
        rep = cantor.gap_audit(toy, lev)
        assert rep.overlaps == 0 and rep.min_ratio >= Fraction(1, 16)


def test_sibling_gap_closed_form(toy, toy_levels):
    # J(w,1) and J(w,2) touch at [w,2]; the gap is the part of I(w,2) with next digit >= M+1
    lev = toy_levels[2]
    left, right = lev.edge_fractions()
    idx = {tuple(int(v) for v in row): i for i, row in enumerate(lev.digits)}
    w = (1, 2)
    a, b = idx[w + (1,)], idx[w + (2,)]
    ends = sorted([(Fraction(*left[a]), Fraction(*right[a])), (Fraction(*left[b]), Fraction(*right[b]))])
    gap = ends[1][0] - ends[0][1]
    assert gap == cf.tail_union_measure(w + (2,), 3)


def test_full_gap_table_tiny(tiny):
    lev = cantor.enumerate_level(tiny, 3)
    rows = cantor.gap_table(tiny, lev)
    assert len(rows) == lev.count - 1 == 7
    assert min(min(r["ratio_left"], r["ratio_right"]) for r in rows) >= 1 / 16


def test_length_bands(toy, toy_levels):
    for lev in toy_levels:
        rep = cantor.length_audit(toy, lev)
        assert rep.in_band, rep
        if rep.level_class == "prime":
            assert rep.prime_span_ok
        else:
            assert rep.generic_scaling_holds


def test_prime_level_breaks_generic_bracket(toy, toy_levels):
    rep = cantor.length_audit(toy, toy_levels[9])
    assert rep.level_class == "prime" and not rep.generic_scaling_holds


def test_holder_profile(toy):
    rows = cantor.holder_audit(toy, 11)
    assert all(math.isfinite(r.max_log_ratio) for r in rows)
    # bigger delta means a smaller exponent and a smaller constant
    lower = [cantor.holder_row(toy, lev, exponent=0.3).max_log_ratio for lev in cantor.iter_levels(toy, 6)]
    assert all(a <= b.max_log_ratio for a, b in zip(lower, rows))


def test_holder_drops_after_prime_block(toy):
    lv = list(cantor.iter_levels(toy, 12, prime_sample=6, seed=3))
    r11, r12 = cantor.holder_row(toy, lv[10]), cantor.holder_row(toy, lv[11])
    assert r12.max_log_ratio < r11.max_log_ratio
    with mpmath.workprec(80):
        assert abs(lv[11].total_mass() - Fraction(36, 137 * 137)) < 1e-15


def test_cap_and_sampling(toy):
    with pytest.raises(CapExceeded):
        cantor.enumerate_level(toy, 12, cap=10**6)
    a = cantor.enumerate_level(toy, 12, prime_sample=4, seed=1)
    b = cantor.enumerate_level(toy, 12, prime_sample=4, seed=1)
    assert a.sampled and (a.digits == b.digits).all()


def test_validate_without_sieve_reach():
    # n_1 = 98 puts P_(n_1) beyond any sieve; the prime check is reported, not fatal
    _, checks = cantor.validate_params(CantorParams(2.0, 2, 2, 0.6, 0.05, (48,)))
    by = {c.name: c for c in checks}
    assert not by["c_(n_1)(Bt) < 2"].passed and "not evaluated" in by["c_(n_1)(Bt) < 2"].detail


def test_audit_report_small(tiny):
    rep = cantor.audit(tiny.params, table=tiny.table)
    s = rep["summary"]
    assert s["mass_ok"] and s["gap_ok"] and s["nested_ok"] and s["multiplicity_ok"]
    assert rep["warnings"] and rep["parameters"]["n_k"] == [5]
