import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from hodgeqi import difference_stencil as ds


@pytest.mark.parametrize("k,expected", [
    (1, [1]),
    (2, [1, Fraction(-1, 12)]),
    (3, [1, Fraction(-1, 12), Fraction(1, 90)]),
])
def test_rabut_coefficients(k, expected):
    assert ds.rabut_coefficients(k) == expected


def test_rabut_rejects_zero():
    with pytest.raises(ValueError):
        ds.rabut_coefficients(0)


def test_rabut_matches_arcsin_series():
    # independent oracle: 2 arcsin^2(z) = sum_n (2z)^(2n) / (n^2 binom(2n, n)), which gives
    # sum_i a_i x^(i+1) = -w^2 at x = -4 sin^2(w/2)
    a = ds.rabut_coefficients(12)
    w = 0.7
    x = -4 * math.sin(w / 2) ** 2
    approx = sum(float(c) * x ** (i + 1) for i, c in enumerate(a))
    assert approx == pytest.approx(-w * w, rel=1e-9)


@pytest.mark.parametrize("dim,ell", [(1, 1), (2, 2), (3, 3), (2, 4)])
def test_k1_is_plain_power_of_sum(dim, ell):
    q = ds.build_q(dim, ell, 1)
    expected = {}
    for e in product(range(ell + 1), repeat=dim):
        if sum(e) == ell:
            coeff = math.factorial(ell)
            for n in e:
                coeff //= math.factorial(n)
            expected[e] = Fraction(coeff)
    assert q.terms == expected


def test_q_d1_l1_k2():
    assert ds.build_q(1, 1, 2).terms == {(1,): 1, (2,): Fraction(-1, 12)}


def test_q_d2_l1_k2_has_no_cross_term():
    q = ds.build_q(2, 1, 2)
    assert q.terms == {(1, 0): 1, (0, 1): 1, (2, 0): Fraction(-1, 12), (0, 2): Fraction(-1, 12)}


@pytest.mark.parametrize("dim,ell,k", [(d, l, k) for d in (1, 2, 3) for l in (1, 2, 3) for k in (1, 2, 3) if k <= l])
def test_q_degree_range(dim, ell, k):
    lo, hi = ds.build_q(dim, ell, k).degree_range()
    assert lo == ell and hi <= ell + k - 1


def test_stencil_of_x():
    st = ds.expand_stencil(ds.MultiPoly(1, {(1,): Fraction(1)}))
    assert st.weights == {(-1,): 1, (0,): -2, (1,): 1}


def test_stencil_of_sum_2d():
    st = ds.expand_stencil(ds.MultiPoly(2, {(1, 0): Fraction(1), (0, 1): Fraction(1)}))
    assert st.weights == {(1, 0): 1, (-1, 0): 1, (0, 1): 1, (0, -1): 1, (0, 0): -4}


def test_stencil_of_x_squared():
    st = ds.expand_stencil(ds.MultiPoly(1, {(2,): Fraction(1)}))
    assert st.weights == {(-2,): 1, (-1,): -4, (0,): 6, (1,): -4, (2,): 1}


@pytest.mark.parametrize("dim,ell,k", [(d, l, k) for d in (1, 2, 3) for l in (1, 2, 3, 4) for k in (1, 2, 3, 4)])
def test_stencil_sum_zero_and_symmetric(dim, ell, k):
    # build_q itself does not require k <= ell
    st = ds.expand_stencil(ds.build_q(dim, ell, k))
    assert sum(st.weights.values()) == 0
    for nu, w in st.weights.items():
        assert st.weights[tuple(-v for v in nu)] == w


def test_symbol_limit_at_zero():
    q = ds.build_q(1, 1, 1)
    assert ds.symbol(q, 1, np.array([0.0])) == 1.0
    assert ds.symbol(q, 1, np.array([1e-4])) == pytest.approx(1.0, abs=1e-8)


def test_symbol_at_pi():
    q = ds.build_q(1, 1, 1)
    assert ds.symbol(q, 1, np.array([math.pi])) == pytest.approx(4 / math.pi**2, rel=1e-15)


@pytest.mark.parametrize("dim,ell,k", [(1, 1, 1), (2, 2, 2), (2, 3, 3), (3, 2, 1)])
def test_symbol_vanishes_on_lattice_frequencies(dim, ell, k):
    q = ds.build_q(dim, ell, k)
    rng = np.random.default_rng(0)
    j = rng.integers(-3, 4, (20, dim))
    j = j[np.any(j != 0, axis=1)]
    assert np.max(np.abs(ds.symbol(q, ell, 2 * np.pi * j))) < 1e-30


@pytest.mark.parametrize("dim,ell,k", [(2, 2, 2), (2, 3, 3), (3, 2, 2)])
def test_symbol_matches_stencil_fourier_series(dim, ell, k):
    q = ds.build_q(dim, ell, k)
    st = ds.expand_stencil(q)
    w = np.random.default_rng(1).uniform(-4, 4, (50, dim))
    lhs = ds.symbol(q, ell, w) * np.sum(w * w, axis=1) ** ell * (-1) ** ell
    rhs = st.fourier(w)
    assert np.max(np.abs(rhs.imag)) <= 1e-12
    np.testing.assert_allclose(lhs, rhs.real, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("ell", [1, 2])
def test_stencil_consistency_second_order(ell):
    # Delta^ell of exp(x1 + 2 x2) is 5^ell exp(...)
    st = ds.expand_stencil(ds.build_q(2, ell, 1))
    f = lambda x: np.exp(x[..., 0] + 2 * x[..., 1])
    x0 = np.array([0.1, -0.2])
    exact = 5.0**ell * f(x0)
    errs = []
    for h in (0.04, 0.02, 0.01):
        off = st.offsets_array() * h
        approx = st.weights_array() @ f(x0 + off) / h ** (2 * ell)
        errs.append(abs(approx - exact))
    rate = np.polyfit(np.log([0.04, 0.02, 0.01]), np.log(errs), 1)[0]
    assert rate == pytest.approx(2.0, abs=0.15)
