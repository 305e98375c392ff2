"""Product limits, telescoping bounds, and expansion remainder inequalities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funclt import (
    ArraySpec,
    CoefficientLaw,
    ComplexSeq,
    char_expansion_residual,
    complex_product_bound,
    fourier_basis,
    product_limit_check,
    taylor_remainder_bound,
    uniform_grid,
)
from funclt.lemmas import taylor_partial_sum


# ---------------------------------------------------------------------------
# products of (1 + c_{n,m})


def test_zero_rows_have_product_one():
    rows = {n: np.zeros(n) for n in (1, 5, 50)}
    for diag in product_limit_check(rows, 0.0):
        assert diag.product == 1.0
        assert diag.target == 1.0
        assert diag.error == 0.0
        assert diag.max_abs == 0.0


def test_empty_row_is_the_empty_product():
    (diag,) = product_limit_check({0: np.array([])}, 0.0)
    assert diag.product == 1.0
    assert diag.abs_total == 0.0


@pytest.mark.parametrize("lam", [-1.0, -0.5, 0.3])
def test_equal_entries_converge_to_the_exponential(lam):
    rows = {n: np.full(n, lam / n) for n in (100, 1000, 10_000)}
    diags = product_limit_check(rows, lam)
    errors = [d.error for d in diags]
    for d in diags:
        assert abs(d.total - lam) < 1e-12  # row sums hit the limit exactly
        assert d.error <= 10.0 / d.n
    assert errors == sorted(errors, reverse=True)


def test_small_entries_alone_do_not_force_the_limit():
    # Alternating +-1/sqrt(n): entries vanish and the row sums go to 0,
    # but the products go to e^{-1/2}, not e^0 = 1.  The diagnostics expose
    # the failed hypothesis: the absolute row sums blow up.
    rows = {n: np.array([(-1.0) ** j / math.sqrt(n) for j in range(n)]) for n in (100, 400, 1600)}
    diags = product_limit_check(rows, 0.0)
    for d in diags:
        assert abs(d.total) < 1e-12
        assert d.max_abs <= 0.1
        assert d.abs_total == pytest.approx(math.sqrt(d.n), rel=1e-12)
        assert d.error > 0.3  # stays near |e^{-1/2} - 1| ~ 0.39
    assert diags[-1].abs_total > diags[0].abs_total


def test_complex_limit():
    theta = 0.7
    rows = {n: np.full(n, 1j * theta / n) for n in (1000, 10_000)}
    for d in product_limit_check(rows, 1j * theta):
        assert d.error <= 10.0 / d.n


def test_rows_must_be_one_dimensional():
    with pytest.raises(ValueError):
        product_limit_check({2: np.zeros((2, 2))}, 0.0)


# ---------------------------------------------------------------------------
# telescoping product bound


def test_identical_sequences_have_zero_gap():
    z = ComplexSeq(np.array([0.3 + 0.1j, -0.5j, 1.0]), modulus_bound=1.0)
    check = complex_product_bound(z, z)
    assert check.lhs == 0.0
    assert check.holds


def test_single_terms_give_equality():
    z = ComplexSeq(np.array([0.3 + 0.4j]), modulus_bound=1.0)
    w = ComplexSeq(np.array([-0.2 + 0.1j]), modulus_bound=1.0)
    check = complex_product_bound(z, w)
    assert check.lhs == pytest.approx(check.rhs, abs=1e-15)
    assert check.holds


def test_empty_sequences_are_vacuous():
    z = ComplexSeq(np.array([], dtype=complex), modulus_bound=1.0)
    check = complex_product_bound(z, z)
    assert check.lhs == 0.0 and check.rhs == 0.0
    assert check.holds


def test_length_mismatch_rejected():
    z = ComplexSeq(np.array([1.0 + 0j]), modulus_bound=1.0)
    w = ComplexSeq(np.array([1.0 + 0j, 0.5 + 0j]), modulus_bound=1.0)
    with pytest.raises(ValueError):
        complex_product_bound(z, w)


def test_modulus_bound_enforced_at_construction():
    with pytest.raises(ValueError):
        ComplexSeq(np.array([1.5 + 0j]), modulus_bound=1.0)
    with pytest.raises(ValueError):
        ComplexSeq(np.array([0.5 + 0j]), modulus_bound=-1.0)


def test_product_bound_fuzz_unit_disk():
    rng = np.random.default_rng(12)
    for _ in range(300):
        n = int(rng.integers(1, 51))
        r1, r2 = rng.random((2, n))
        th1, th2 = rng.uniform(0, 2 * np.pi, (2, n))
        z = ComplexSeq(r1 * np.exp(1j * th1), modulus_bound=1.0)
        w = ComplexSeq(r2 * np.exp(1j * th2), modulus_bound=1.0)
        assert complex_product_bound(z, w).holds


unit_complex = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(unit_complex, min_size=1, max_size=20), st.data())
def test_product_bound_property(zs, data):
    ws = data.draw(
        st.lists(unit_complex, min_size=len(zs), max_size=len(zs))
    )
    z = ComplexSeq(np.array(zs), modulus_bound=1.0)
    w = ComplexSeq(np.array(ws), modulus_bound=1.0)
    assert complex_product_bound(z, w).holds


# ---------------------------------------------------------------------------
# Taylor remainders of exp(ix)


def test_partial_sum_low_orders():
    x = np.array([0.0, 1.0, -2.0])
    assert np.array_equal(taylor_partial_sum(x, 0), np.ones(3, dtype=complex))
    expected = 1.0 + 1j * x
    assert np.allclose(taylor_partial_sum(x, 1), expected, atol=1e-15)
    with pytest.raises(ValueError):
        taylor_partial_sum(x, -1)


def test_remainder_bound_at_unit_argument():
    check = taylor_remainder_bound(np.array([1.0]), order=2)
    assert check.holds
    assert check.lhs <= 1.0 / 6.0 + 1e-12
    assert check.rhs == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_remainder_bound_zero_argument():
    check = taylor_remainder_bound(np.array([0.0]), order=3)
    assert check.lhs == 0.0 and check.rhs == 0.0
    assert check.holds


@pytest.mark.parametrize("order", range(0, 11))
def test_remainder_bound_sweep(order):
    x = np.linspace(-20.0, 20.0, 4001)
    assert taylor_remainder_bound(x, order).holds


def test_remainder_bound_rejects_nonfinite():
    with pytest.raises(ValueError):
        taylor_remainder_bound(np.array([np.inf]), order=1)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(min_value=-50.0, max_value=50.0), min_size=1, max_size=30),
    st.integers(min_value=0, max_value=8),
)
def test_remainder_bound_property(xs, order):
    assert taylor_remainder_bound(np.array(xs), order).holds


# ---------------------------------------------------------------------------
# expansion of the projection characteristic function


@pytest.fixture(scope="module")
def gauss_j1_spec():
    grid = uniform_grid(32)
    return ArraySpec(
        grid=grid,
        basis=tuple(fourier_basis(grid, 1)),
        coeff_laws=lambda m, j: CoefficientLaw.gaussian(1.0),
    )


def test_expansion_closed_form_matches_gaussian(gauss_j1_spec):
    # <chi, b_1> ~ N(0, 1/n): phi(t) = exp(-u) with u = t^2/(2n), and the
    # residual |exp(-u) - (1 - u)| is computable directly.
    n = 4
    psi = gauss_j1_spec.basis[0]
    points = char_expansion_residual(gauss_j1_spec, n, 1, psi, reps=200, seed=0)
    for p in points:
        u = p.t * p.t / (2.0 * n)
        assert p.phi_closed == pytest.approx(math.exp(-u), abs=1e-12)
        assert p.residual_closed == pytest.approx(abs(math.exp(-u) - (1.0 - u)), abs=1e-12)


def test_expansion_residual_is_second_order(gauss_j1_spec):
    # residual/t^2 must fall by at least 2x per halving of t for the exact
    # characteristic function (it is O(t^2) there, so the drop is ~4x)
    psi = gauss_j1_spec.basis[0]
    points = char_expansion_residual(
        gauss_j1_spec, 2, 1, psi, reps=100, seed=1, t_list=(0.2, 0.1, 0.05, 0.025)
    )
    ratios = [p.ratio_closed for p in points]
    for coarse, fine in zip(ratios, ratios[1:]):
        assert fine * 2.0 <= coarse


def test_expansion_monte_carlo_tracks_closed_form():
    grid = uniform_grid(32)
    spec = ArraySpec(
        grid=grid,
        basis=tuple(fourier_basis(grid, 2)),
        coeff_laws=lambda m, j: CoefficientLaw.rademacher(1.0),
    )
    psi = spec.basis[1]
    points = char_expansion_residual(spec, 4, 1, psi, reps=60_000, seed=2, t_list=(0.5,))
    (p,) = points
    assert abs(p.phi_mc - p.phi_closed) < 0.01
    assert p.residual_mc == pytest.approx(p.residual_closed, abs=0.01)


def test_expansion_without_closed_form_reports_none():
    grid = uniform_grid(16)
    spec = ArraySpec(
        grid=grid,
        basis=tuple(fourier_basis(grid, 1)),
        coeff_laws=lambda m, j: CoefficientLaw.student_t(nu=3.0),
    )
    points = char_expansion_residual(spec, 4, 1, spec.basis[0], reps=500, seed=3)
    assert all(p.phi_closed is None for p in points)
    assert all(p.ratio_closed is None for p in points)
    assert all(np.isfinite(p.residual_mc) for p in points)


def test_expansion_argument_validation(gauss_j1_spec):
    psi = gauss_j1_spec.basis[0]
    with pytest.raises(ValueError):
        char_expansion_residual(gauss_j1_spec, 4, 1, psi, reps=1, seed=0)
    with pytest.raises(ValueError):
        char_expansion_residual(gauss_j1_spec, 4, 1, psi, reps=100, seed=0, t_list=(0.0,))
