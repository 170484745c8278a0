"""Two-scale Leray / curl-free quasi-interpolation on an axis-aligned box.

Near the boundary the field is interpolated by a Matern matrix kernel; the
residual g = f - I f is then smoothed with a dilated kernel Psi^H over every
lattice node of the box:

    IQ^part f(x) = I^part f(x) + (h/H)^d sum_j Psi^part((x - jh)/H) g(jh).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary_interp import BoundaryInterpolant, eval_interpolant, fit_interpolant
from .lattice_qi import GridField, _cached_kernel
from .matrix_kernel import KernelSpec


class EmptyRing(ValueError):
    pass


def select_H(h: float, k: int, dim: int, eps: float, C: float) -> float:
    """H = C h^(1/(2k + d - eps))."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if C <= 0 or h <= 0:
        raise ValueError("C and h must be positive")
    return C * h ** (1.0 / (2 * k + dim - eps))


@dataclass
class BoundedConfig:
    omega_lo: tuple = (0.0, 0.0)
    omega_hi: tuple = (1.0, 1.0)
    v_lo: tuple = (0.1, 0.1)
    v_hi: tuple = (0.9, 0.9)
    h: float = 0.1
    ell: int = 2
    k: int = 2
    C: float = 0.05
    eps: float = 1e-3
    shape: float | None = None  # Matern shape; None -> 3 / h
    H: float | None = None  # explicit kernel scale, overrides the H-rule

    def __post_init__(self):
        lo, hi = np.asarray(self.omega_lo, float), np.asarray(self.omega_hi, float)
        vlo, vhi = np.asarray(self.v_lo, float), np.asarray(self.v_hi, float)
        if not (lo.shape == hi.shape == vlo.shape == vhi.shape):
            raise ValueError("box corners must share one dimension")
        if np.any(vlo <= lo) or np.any(vhi >= hi) or np.any(vlo >= vhi):
            raise ValueError("V must lie strictly inside Omega")
        c = min(np.min(vlo - lo), np.min(hi - vhi))
        if not 0 < c < 1:
            raise ValueError("distance between the boundaries of Omega and V must lie in (0, 1)")
        if self.h <= 0:
            raise ValueError("h must be positive")

    @property
    def dim(self) -> int:
        return len(self.omega_lo)

    @property
    def margin(self) -> float:
        return float(min(np.min(np.subtract(self.v_lo, self.omega_lo)),
                         np.min(np.subtract(self.omega_hi, self.v_hi))))

    def kernel_scale(self) -> float:
        if self.H is not None:
            return float(self.H)
        return select_H(self.h, self.k, self.dim, self.eps, self.C)

    def matern_shape(self) -> float:
        return self.shape if self.shape is not None else 3.0 / self.h


def sample_box(func, cfg: BoundedConfig) -> GridField:
    return GridField.on_box(func, cfg.omega_lo, cfg.omega_hi, cfg.h)


def ring_mask(nodes: np.ndarray, cfg: BoundedConfig, tol: float = 1e-12) -> np.ndarray:
    """True for lattice nodes in Omega minus the closed box V."""
    inside = np.all((nodes >= np.asarray(cfg.v_lo) - tol) & (nodes <= np.asarray(cfg.v_hi) + tol), axis=-1)
    return ~inside


@dataclass
class LerayQI:
    cfg: BoundedConfig
    part: str
    H: float
    interp: BoundaryInterpolant
    nodes: np.ndarray  # (N, d) all lattice nodes
    residual: np.ndarray  # (N, d) g = f - I f at the nodes
    chunk: int = 32
    info: dict = field(default_factory=dict)

    def __call__(self, x, alpha=None):
        x = np.asarray(x, dtype=float)
        d = self.cfg.dim
        alpha = tuple(alpha) if alpha is not None else (0,) * d
        pts = x.reshape(-1, d)
        out = eval_interpolant(self.interp, pts, self.part, alpha)
        out = out + self.smoothing_term(pts, alpha)
        return out.reshape(x.shape)

    def smoothing_term(self, pts, alpha=None) -> np.ndarray:
        """(h/H)^d sum_j D^alpha Psi^part((x - jh)/H) g_j, without the interpolant."""
        d = self.cfg.dim
        alpha = tuple(alpha) if alpha is not None else (0,) * d
        spec = KernelSpec.div(self.cfg.ell, self.cfg.k, d) if self.part == "div" else \
            KernelSpec.curl(self.cfg.ell, self.cfg.k, d)
        ev = _cached_kernel(spec)
        pts = np.asarray(pts, dtype=float).reshape(-1, d)
        out = np.zeros_like(pts)
        live = np.any(self.residual != 0.0, axis=1)
        nodes, g = self.nodes[live], self.residual[live]
        if len(nodes) == 0:
            return out
        for a in range(0, len(pts), self.chunk):
            y = (pts[a:a + self.chunk, None, :] - nodes[None, :, :]) / self.H
            K = ev(y, alpha)
            out[a:a + self.chunk] = np.einsum("pnij,nj->pi", K, g)
        scale = (self.cfg.h / self.H) ** d * self.H ** (-sum(alpha))
        return scale * out


def build_leray_qi(data: GridField, cfg: BoundedConfig, part: str = "div") -> LerayQI:
    if part not in ("div", "curl"):
        raise ValueError("part must be 'div' or 'curl'")
    if abs(data.spacing - cfg.h) > 1e-12 * cfg.h:
        raise ValueError("sample spacing differs from cfg.h")
    nodes = data.nodes().reshape(-1, data.dim)
    vals = data.values.reshape(-1, data.dim)
    ring = ring_mask(nodes, cfg)
    if not ring.any():
        raise EmptyRing("no lattice node lies in the boundary ring")
    interp = fit_interpolant(nodes[ring], vals[ring], cfg.matern_shape())
    g = vals - eval_interpolant(interp, nodes, "full")
    info = {"ring_nodes": int(ring.sum()), "nodes": len(nodes), "condition": interp.condition,
            "matern_shape": interp.kernel.eps}
    return LerayQI(cfg, part, cfg.kernel_scale(), interp, nodes, g, info=info)


@dataclass
class Decomposition:
    points: np.ndarray
    div: np.ndarray
    curl: np.ndarray

    @property
    def reconstruction(self) -> np.ndarray:
        return self.div + self.curl


def leray_decompose(data: GridField, cfg: BoundedConfig, points) -> Decomposition:
    points = np.asarray(points, dtype=float)
    qd = build_leray_qi(data, cfg, "div")
    qc = LerayQI(cfg, "curl", qd.H, qd.interp, qd.nodes, qd.residual, info=dict(qd.info))
    div = qd(points)
    curl = qc(points)
    return Decomposition(points, div, curl)


def eval_mesh(lo, hi, n: int, margin: float = 0.0) -> np.ndarray:
    """n^d uniform mesh on [lo + margin, hi - margin]."""
    axes = [np.linspace(a + margin, b - margin, n) for a, b in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
