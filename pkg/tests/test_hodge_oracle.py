import numpy as np
import pytest

from hodgeqi.bench.fields import builtin_field, part_of
from hodgeqi.bench.report import fit_slope
from hodgeqi.hodge_oracle import (
    NonPeriodicGrid, SpectralField, dense_convolution, fft_project, smooth_window,
)
from hodgeqi.lattice_qi import GridField
from hodgeqi.matrix_kernel import KernelSpec, build_kernel

WS = builtin_field("ws_full")
WS_DIV = part_of(WS, "div")
WS_CURL = part_of(WS, "curl")


def rms(a):
    return float(np.sqrt(np.mean(np.square(a))))


def periodic(func, period, n):
    return GridField.sample(func, np.zeros(2), period / n, (n, n))


def test_divergence_free_field_is_unchanged():
    g = periodic(WS_DIV, 1.0, 64)
    assert rms(fft_project(g, "div").values - g.values) <= 1e-12


def test_gradient_field_has_no_div_part():
    g = periodic(WS_CURL, 2.0, 128)
    assert rms(fft_project(g, "div").values) <= 1e-12
    assert rms(fft_project(g, "curl").values - g.values) <= 1e-12


def test_ws_fields_are_analytically_div_and_curl_free():
    # central differences of the closed forms
    x = np.random.default_rng(0).uniform(0, 2, (20, 2))
    h = 1e-5
    e1, e2 = np.array([h, 0]), np.array([0, h])
    div = (WS_DIV(x + e1)[:, 0] - WS_DIV(x - e1)[:, 0] + WS_DIV(x + e2)[:, 1] - WS_DIV(x - e2)[:, 1]) / (2 * h)
    curl = (WS_CURL(x + e1)[:, 1] - WS_CURL(x - e1)[:, 1] - WS_CURL(x + e2)[:, 0] + WS_CURL(x - e2)[:, 0]) / (2 * h)
    assert np.max(np.abs(div)) < 1e-8 and np.max(np.abs(curl)) < 1e-8


def _random_bandlimited(seed, n=32):
    rng = np.random.default_rng(seed)
    hat = np.zeros((n, n, 2), complex)
    hat[:6, :6] = rng.standard_normal((6, 6, 2)) + 1j * rng.standard_normal((6, 6, 2))
    vals = np.real(np.fft.ifftn(hat, axes=(0, 1))) * n * n
    return GridField(np.zeros(2), 1.0 / n, vals)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_complementarity(seed):
    g = _random_bandlimited(seed)
    s = fft_project(g, "div").values + fft_project(g, "curl").values
    np.testing.assert_allclose(s, g.values, atol=1e-12 * np.abs(g.values).max())


@pytest.mark.parametrize("part", ["div", "curl"])
def test_idempotent(part):
    g = _random_bandlimited(3)
    once = fft_project(g, part)
    twice = fft_project(once, part)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-12 * np.abs(once.values).max())


def test_orthogonality():
    g = _random_bandlimited(4)
    d = fft_project(g, "div").values
    c = fft_project(g, "curl").values
    inner = np.sum(d * c)
    assert abs(inner) <= 1e-10 * np.sqrt(np.sum(d * d) * np.sum(c * c))


def test_mean_goes_to_div_part():
    g = GridField(np.zeros(2), 0.25, np.ones((4, 4, 2)) * np.array([2.0, -1.0]))
    np.testing.assert_allclose(fft_project(g, "div").values, g.values)
    np.testing.assert_allclose(fft_project(g, "curl").values, 0.0, atol=1e-15)


def test_spectral_field_conjugate_symmetry():
    g = _random_bandlimited(5, n=16)
    sf = SpectralField.from_grid(g)
    flipped = np.conj(np.roll(sf.coeffs[::-1, ::-1], 1, axis=(0, 1)))
    np.testing.assert_allclose(sf.coeffs, flipped, atol=1e-10)


def test_ragged_grid_rejected():
    with pytest.raises(NonPeriodicGrid):
        fft_project(GridField(np.zeros(2), 0.1, np.zeros((8, 6, 2))), "div")


def test_bad_part_rejected():
    with pytest.raises(ValueError):
        fft_project(GridField(np.zeros(2), 0.1, np.zeros((4, 4, 2))), "harmonic")


# -- window -------------------------------------------------------------------

def test_smooth_window_plateau_and_support():
    c = np.zeros(2)
    assert smooth_window(np.array([0.3, -0.3]), c, 1.0) == 1.0
    assert smooth_window(np.array([1.0, 0.0]), c, 1.0) == 0.0
    v = smooth_window(np.array([[0.5, 0.0], [0.7, 0.0], [0.9, 0.0]]), c, 1.0)
    assert np.all(np.diff(v) < 0) and np.all((v > 0) & (v < 1))


# -- dense convolution ---------------------------------------------------------

def test_convolution_of_zero_is_zero():
    r = dense_convolution(KernelSpec.div(2, 2), 0.2, lambda t: np.zeros(t.shape), np.array([0.3, 0.2]), R=2, M=20)
    assert np.all(r.value == 0.0)


def test_integer_ratio_path_matches_pointwise_path():
    spec = KernelSpec.div(2, 2)
    ev = build_kernel(spec)
    x = np.array([0.3, 0.2])
    a = dense_convolution(spec, 0.2, WS, x, R=2, M=40, kernel=ev)  # ratio 2, lattice path
    assert a.ratio == pytest.approx(2.0)
    b = dense_convolution(spec, 0.2 * (1 + 1e-7), WS, x, R=2, M=40, kernel=ev)  # pointwise path
    np.testing.assert_allclose(a.value, b.value, rtol=1e-5, atol=1e-8)


def test_window_option_validated():
    with pytest.raises(ValueError):
        dense_convolution(KernelSpec.div(2, 2), 0.2, WS, np.zeros(2), R=2, M=20, window="hann")


def test_tail_bound_reported():
    r = dense_convolution(KernelSpec.div(2, 2), 0.2, WS, np.array([0.3, 0.2]), R=4, M=40)
    assert 0 < r.tail_bound < 1


def _sweep(spec, field, exact, x, ev):
    errs = []
    for H in (0.2, 0.1, 0.05):
        r = dense_convolution(spec, H, field, x, R=8, M=int(round(32 / H)), center=np.round(x),
                              kernel=ev, window="smooth")
        errs.append(np.linalg.norm(r.value - exact))
    return errs


def test_div_convolution_rate():
    spec = KernelSpec.div(2, 2)
    x = np.array([0.3, 0.2])
    errs = _sweep(spec, WS, WS_DIV(x), x, build_kernel(spec))
    assert fit_slope([0.2, 0.1, 0.05], errs) == pytest.approx(4.0, abs=0.5)


def test_curl_convolution_of_div_field_vanishes():
    spec = KernelSpec.curl(2, 2)
    x = np.array([0.55, 0.8])
    errs = _sweep(spec, WS_DIV, np.zeros(2), x, build_kernel(spec))
    assert errs[2] < errs[1] < errs[0] and errs[2] < 1e-3


def test_scalar_convolution_rate():
    spec = KernelSpec.scalar(2, 2)
    f = lambda t: np.stack([np.cos(np.pi * t[..., 0]) * np.sin(np.pi * t[..., 1]),
                            np.exp(-np.sum(t**2, -1))], -1)
    x = np.array([0.3, 0.2])
    errs = []
    for H in (0.2, 0.1, 0.05):
        r = dense_convolution(spec, H, f, x, R=6, M=int(round(12 / H)), center=np.zeros(2), window="smooth")
        errs.append(np.linalg.norm(r.value - f(x)))
    assert fit_slope([0.2, 0.1, 0.05], errs) == pytest.approx(4.0, abs=0.5)
