"""Reference Helmholtz-Hodge projections used to cross-check the quasi-interpolants.

``fft_project`` applies the Fourier projectors I - w w^T/|w|^2 and w w^T/|w|^2
to a periodic lattice field.  ``dense_convolution`` is a slow midpoint-rule
evaluation of the scaled kernel convolution at single points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice_qi import GridField
from .matrix_kernel import KernelEvaluator, KernelSpec, build_kernel


class NonPeriodicGrid(ValueError):
    pass


@dataclass
class SpectralField:
    coeffs: np.ndarray  # (*N, d) complex
    period: np.ndarray  # box length per axis

    @property
    def dim(self) -> int:
        return self.coeffs.shape[-1]

    @classmethod
    def from_grid(cls, field: GridField) -> "SpectralField":
        n = np.array(field.extents)
        if np.any(n != n[0]):
            raise NonPeriodicGrid("periodic projection needs the same node count on every axis")
        axes = tuple(range(field.dim))
        coeffs = np.fft.fftn(field.values, axes=axes)
        return cls(coeffs, n * field.spacing)

    def wavenumbers(self) -> np.ndarray:
        n = self.coeffs.shape[:-1]
        ks = [2 * np.pi * np.fft.fftfreq(m, d=L / m) for m, L in zip(n, self.period)]
        return np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)


def fft_project(field: GridField, part: str) -> GridField:
    """Divergence-free (``div``) or curl-free (``curl``) part of a periodic field.

    The field must hold one full period: node i sits at origin + i*h for
    0 <= i < N, and the period is N*h.  The mean goes to the div part.
    """
    if part not in ("div", "curl"):
        raise ValueError("part must be 'div' or 'curl'")
    sf = SpectralField.from_grid(field)
    w = sf.wavenumbers()
    w2 = np.einsum("...i,...i->...", w, w)
    zero = w2 == 0
    inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, w2))
    proj = np.einsum("...i,...j,...->...ij", w, w, inv)  # curl projector; zero at the mean
    curl_hat = np.einsum("...ij,...j->...i", proj, sf.coeffs)
    out_hat = curl_hat if part == "curl" else sf.coeffs - curl_hat
    axes = tuple(range(field.dim))
    vals = np.real(np.fft.ifftn(out_hat, axes=axes))
    return GridField(field.origin.copy(), field.spacing, vals)


@dataclass
class ConvolutionResult:
    value: np.ndarray
    cell: float
    ratio: float  # kernel scale / quadrature cell
    tail_bound: float


def _smooth_step(t):
    e = lambda v: np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)
    return e(1.0 - t) / (e(1.0 - t) + e(t))


def smooth_window(t, center, R: float, plateau: float = 0.4):
    """C-infinity product window: 1 within plateau*R of center, 0 beyond R."""
    u = np.abs(np.asarray(t, dtype=float) - center) / R
    s = np.clip((u - plateau) / (1.0 - plateau), 0.0, 1.0)
    return np.prod(_smooth_step(s), axis=-1)


def dense_convolution(spec: KernelSpec, H: float, field, x, R: float, M: int, center=None,
                      kernel: KernelEvaluator | None = None, window: str = "box",
                      plateau: float = 0.4) -> ConvolutionResult:
    """Midpoint rule for int Psi^H(x - t) f(t) dt over the box center +- R.

    ``field`` maps points of shape (..., d) to vectors of shape (..., d).
    When H is an integer multiple of the cell size the kernel is evaluated
    on one refined lattice; otherwise it is evaluated pointwise.

    The div kernel decays only like |y|^-d, so a sharp cut of a gradient
    field leaks an H-independent bias into the result.  ``window="smooth"``
    multiplies f by a C-infinity taper, which makes that leakage decay
    faster than any power of R for zero-mean oscillatory fields.
    """
    if window not in ("box", "smooth"):
        raise ValueError("window must be 'box' or 'smooth'")
    ev = kernel or build_kernel(spec)
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if M < 2:
        raise ValueError("need at least two quadrature nodes per axis")
    center = x if center is None else np.asarray(center, dtype=float)
    lo = center - R
    cell = 2.0 * R / M
    mids = lo[:, None] + cell * (np.arange(M) + 0.5)[None, :]
    tgrid = np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)
    fvals = field(tgrid)
    if window == "smooth":
        fvals = fvals * smooth_window(tgrid, center, R, plateau)[..., None]
    ratio = H / cell
    n = int(round(ratio))
    if n >= 1 and abs(ratio - n) < 1e-9 * ratio:
        # (x - t)/H at t = lo + cell*(i + 1/2), reversed so the index increases with the argument
        base = ((x - lo) / cell - (M - 0.5)) / n
        kv = ev.lattice_values(base[None, :], (M,) * d, n)[0]
        kv = kv[(slice(None, None, -1),) * d]
    else:
        kv = ev((x - tgrid) / H)
    fv = fvals.reshape(-1, fvals.shape[-1])
    if ev.size == 1:
        # scalar kernel acts componentwise
        val = np.einsum("p,pj->j", kv.reshape(-1), fv)
    else:
        val = np.einsum("pij,pj->i", kv.reshape(-1, d, d), fv)
    val = val * (cell / H) ** d
    # far field of the scalar part decays like |y|^(-d-2k); bound the tail beyond the box
    dist = float(np.min(R - np.abs(x - center)))
    k = spec.k
    tail = float(np.max(np.abs(fvals))) * (H / max(dist, H)) ** (2 * k) if dist > 0 else math.inf
    return ConvolutionResult(val, cell, ratio, tail)
