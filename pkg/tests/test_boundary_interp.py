import math

import numpy as np
import pytest

from hodgeqi.boundary_interp import (
    MAX_D_ORDER, MaternKernel, SingularSystem, eval_interpolant, fill_distance, fit_interpolant,
    kernel_matrix, matern_c8,
)

RNG = np.random.default_rng(11)


def matern_ref(r, eps):
    s = eps * r
    return math.exp(-s) * (105 + 105 * s + 45 * s**2 + 10 * s**3 + s**4) / 105


def phi2d(eps):
    return lambda x: np.vectorize(lambda a, b: matern_ref(math.hypot(a, b), eps))(x[..., 0], x[..., 1])


# -- radial function -----------------------------------------------------------

def test_matern_at_zero_is_one():
    assert matern_c8(0.0, 2.0) == 1.0


def test_matern_at_unit_distance():
    assert matern_c8(1.0, 1.0) == pytest.approx(266 / (105 * math.e), rel=1e-15)
    assert matern_c8(1.0, 1.0) == pytest.approx(0.931961, abs=5e-7)


def test_matern_monotone_decreasing():
    v = matern_c8(np.linspace(0, 10, 200), 1.3)
    assert np.all(np.diff(v) < 0)


def test_radial_derivatives_match_finite_differences():
    # Phi_(n+1) = (1/r) d/dr Phi_n
    kern = MaternKernel(1.7)
    r = np.array([0.3, 0.9, 2.2])
    h = 1e-5
    for n in range(MAX_D_ORDER):
        fd = (kern.radial(n, r + h) - kern.radial(n, r - h)) / (2 * h) / r
        np.testing.assert_allclose(kern.radial(n + 1, r), fd, rtol=1e-6)


def test_radial_order_cap():
    with pytest.raises(ValueError):
        MaternKernel(1.0).radial(MAX_D_ORDER + 1, 0.5)


def test_shape_must_be_positive():
    with pytest.raises(ValueError):
        MaternKernel(0.0)


# -- matrix kernel -------------------------------------------------------------

def _fd_hessian(f, x, h=1e-3):
    H = np.zeros((2, 2))
    e = np.eye(2) * h
    for i in range(2):
        for j in range(2):
            H[i, j] = (f(x + e[i] + e[j]) - f(x + e[i] - e[j]) - f(x - e[i] + e[j]) + f(x - e[i] - e[j])) / (4 * h * h)
    return H


@pytest.mark.parametrize("x", [np.array([0.4, -0.3]), np.array([1.1, 0.7])])
def test_parts_match_hessian_of_phi(x):
    eps = 1.5
    Hs = _fd_hessian(phi2d(eps), x)
    lap = np.trace(Hs)
    kern = MaternKernel(eps)
    np.testing.assert_allclose(kernel_matrix(kern, x, "curl"), -Hs, atol=2e-5)
    np.testing.assert_allclose(kernel_matrix(kern, x, "div"), -lap * np.eye(2) + Hs, atol=2e-5)
    np.testing.assert_allclose(kernel_matrix(kern, x, "full"), -lap * np.eye(2), atol=2e-5)


def test_parts_sum_to_full():
    kern = MaternKernel(2.0)
    z = RNG.uniform(-1, 1, (30, 2))
    for alpha in [(0, 0), (1, 0), (1, 1), (0, 2)]:
        s = kernel_matrix(kern, z, "div", alpha) + kernel_matrix(kern, z, "curl", alpha)
        np.testing.assert_allclose(s, kernel_matrix(kern, z, "full", alpha), atol=1e-12)


def test_full_kernel_at_origin_is_positive_diagonal():
    K = kernel_matrix(MaternKernel(1.0), np.zeros(2), "full")
    assert K[0, 1] == 0.0 and K[0, 0] == K[1, 1] > 0


# -- interpolation -------------------------------------------------------------

def _ring(h=0.1):
    ax = np.arange(0, 1 + 1e-9, h)
    pts = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
    keep = ~np.all((pts > 0.25) & (pts < 0.75), axis=1)
    return pts[keep]


def _field(x):
    return np.stack([np.sin(2 * x[..., 0]) * x[..., 1], np.cos(x[..., 0] + x[..., 1])], -1)


def test_reproduces_data_at_centers():
    c = _ring()
    interp = fit_interpolant(c, _field(c))
    assert np.max(np.abs(eval_interpolant(interp, c) - _field(c))) <= 1e-8


def test_default_shape_is_three_over_fill_distance():
    c = _ring(0.1)
    assert fill_distance(c) == pytest.approx(0.1)
    assert fit_interpolant(c, _field(c)).kernel.eps == pytest.approx(30.0)


def test_single_center():
    c = np.array([[0.3, 0.4]])
    v = np.array([[2.0, -1.0]])
    interp = fit_interpolant(c, v, eps=5.0)
    np.testing.assert_allclose(eval_interpolant(interp, c), v, rtol=1e-14)


def test_div_plus_curl_is_full():
    c = _ring()
    interp = fit_interpolant(c, _field(c), eps=8.0)
    x = RNG.uniform(0, 1, (20, 2))
    s = eval_interpolant(interp, x, "div") + eval_interpolant(interp, x, "curl")
    np.testing.assert_allclose(s, eval_interpolant(interp, x, "full"), atol=1e-10)


def test_parts_are_divergence_and_curl_free():
    c = _ring()
    interp = fit_interpolant(c, _field(c), eps=8.0)
    x = RNG.uniform(0.1, 0.9, (15, 2))
    dx = eval_interpolant(interp, x, "div", (1, 0))
    dy = eval_interpolant(interp, x, "div", (0, 1))
    scale = np.abs(dx).max()
    assert np.max(np.abs(dx[:, 0] + dy[:, 1])) <= 1e-9 * scale
    cx = eval_interpolant(interp, x, "curl", (1, 0))
    cy = eval_interpolant(interp, x, "curl", (0, 1))
    assert np.max(np.abs(cx[:, 1] - cy[:, 0])) <= 1e-9 * np.abs(cx).max()


def test_derivative_matches_finite_difference():
    c = _ring()
    interp = fit_interpolant(c, _field(c), eps=8.0)
    x = np.array([[0.41, 0.57]])
    h = 1e-5
    e = np.array([[h, 0.0]])
    fd = (eval_interpolant(interp, x + e, "div") - eval_interpolant(interp, x - e, "div")) / (2 * h)
    np.testing.assert_allclose(eval_interpolant(interp, x, "div", (1, 0)), fd, rtol=1e-6, atol=1e-8)


def test_derivative_cap():
    c = _ring()
    interp = fit_interpolant(c, _field(c), eps=8.0)
    with pytest.raises(ValueError):
        eval_interpolant(interp, c[:1], "div", (2, 1))


def test_duplicate_centers_are_singular():
    c = np.array([[0.0, 0.0], [0.5, 0.5], [0.0, 0.0]])
    with pytest.raises(SingularSystem):
        fit_interpolant(c, np.ones_like(c), eps=3.0)


def test_nearly_flat_kernel_is_rejected():
    c = _ring(0.05)
    with pytest.raises(SingularSystem) as err:
        fit_interpolant(c, _field(c), eps=1e-3)
    assert err.value.condition > 1e15


def test_mismatched_values_rejected():
    with pytest.raises(ValueError):
        fit_interpolant(np.zeros((3, 2)), np.zeros((3, 3)))


def test_error_in_ring_decreases_with_spacing():
    errs = []
    probe = np.array([[0.05, 0.5], [0.5, 0.93], [0.97, 0.13]])
    for h in (0.1, 0.05, 0.025):
        c = _ring(h)
        interp = fit_interpolant(c, _field(c), eps=8.0)
        errs.append(np.max(np.abs(eval_interpolant(interp, probe) - _field(probe))))
    assert errs[0] > errs[1] > errs[2]
