"""Schoenberg-form quasi-interpolation of vector fields on uniform lattices."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .matrix_kernel import KernelEvaluator, KernelSpec, build_kernel
from .radial_calculus import NonremovableSingularity


class EmptySupport(ValueError):
    pass


class IrregularLattice(ValueError):
    pass


class BoundaryPollutionWarning(UserWarning):
    pass


@dataclass
class GridField:
    """Vector samples f(origin + i*h) for 0 <= i < extents; values has shape (*extents, d)."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        d = self.origin.shape[0]
        if self.values.ndim != d + 1 or self.values.shape[-1] != d:
            raise ValueError(f"values must have shape (*extents, {d}), got {self.values.shape}")

    @property
    def dim(self) -> int:
        return self.origin.shape[0]

    @property
    def extents(self) -> tuple:
        return self.values.shape[:-1]

    def nodes(self) -> np.ndarray:
        axes = [self.origin[s] + self.spacing * np.arange(n) for s, n in enumerate(self.extents)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @classmethod
    def sample(cls, func, origin, spacing: float, extents) -> "GridField":
        origin = np.asarray(origin, dtype=float)
        axes = [origin[s] + spacing * np.arange(n) for s, n in enumerate(extents)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(origin, spacing, func(pts))

    @classmethod
    def on_box(cls, func, lower, upper, spacing: float) -> "GridField":
        """Sample every lattice node origin + i*h inside [lower, upper]."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        extents = [int(math.floor((u - l) / spacing + 1e-9)) + 1 for l, u in zip(lower, upper)]
        return cls.sample(func, lower, spacing, extents)


@dataclass
class Truncation:
    mode: str = "all"
    radius: float | None = None
    tail_tol: float = 1e-10

    def __post_init__(self):
        if self.mode not in ("all", "radius"):
            raise ValueError("truncation mode must be 'all' or 'radius'")

    def radius_for(self, dim: int, k: int) -> float:
        if self.radius is not None:
            r = float(self.radius)
        else:
            r = float(math.ceil(self.tail_tol ** (-1.0 / (dim + 2 * k))))
        if r < 1:
            raise ValueError("truncation radius must be at least one lattice unit")
        return r


@lru_cache(maxsize=None)
def _cached_kernel(spec: KernelSpec) -> KernelEvaluator:
    return build_kernel(spec)


@dataclass
class QuasiInterpolant:
    kernel: KernelEvaluator
    data: GridField
    truncation: Truncation = field(default_factory=Truncation)
    chunk: int = 64
    warnings_log: list = field(default_factory=list)

    def __call__(self, x, alpha=None):
        return evaluate_qi(self, x, alpha)


def _check_hull(qi: QuasiInterpolant, u: np.ndarray) -> None:
    margin = 0.0
    if qi.truncation.mode == "radius":
        margin = qi.truncation.radius_for(qi.data.dim, qi.kernel.spec.k)
    hi = np.array(qi.data.extents) - 1 - margin
    if np.any(u < margin) or np.any(u > hi):
        msg = "evaluation points outside the sample lattice (shrunk by the truncation radius)"
        qi.warnings_log.append(msg)
        warnings.warn(msg, BoundaryPollutionWarning, stacklevel=3)


def evaluate_qi(qi: QuasiInterpolant, x, alpha=None) -> np.ndarray:
    """h^-|alpha| sum_j (D^alpha Psi)(x/h - j) f(jh); returns shape (..., d)."""
    data = qi.data
    d = data.dim
    x = np.asarray(x, dtype=float)
    lead = x.shape[:-1]
    pts = x.reshape(-1, d)
    alpha = tuple(alpha) if alpha is not None else (0,) * d
    h = data.spacing
    u = (pts - data.origin) / h
    _check_hull(qi, u)
    ext = data.extents
    # grid index i' = (N-1) - i  <=>  point u - i
    flipped = data.values[(slice(None, None, -1),) * d]
    base = u - (np.array(ext) - 1)
    radius = None
    if qi.truncation.mode == "radius":
        radius = qi.truncation.radius_for(d, qi.kernel.spec.k)
    out = np.zeros((pts.shape[0], d))
    for start in range(0, pts.shape[0], qi.chunk):
        b = base[start:start + qi.chunk]
        vals = _lattice_values(qi, b, ext, alpha)
        if radius is not None:
            axes = [np.arange(n) for n in ext]
            mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
            z = b.reshape((-1,) + (1,) * d + (d,)) + mesh[None]
            mask = np.linalg.norm(z, axis=-1) <= radius
            if not np.all(mask.reshape(mask.shape[0], -1).any(axis=1)):
                raise EmptySupport("no sample lies inside the truncation ball")
            vals = vals * mask[..., None, None]
        if qi.kernel.size == 1:
            # scalar kernel: Q_h acts componentwise
            out[start:start + qi.chunk] = np.einsum("p...,...j->pj", vals[..., 0, 0], flipped, optimize=True)
        else:
            out[start:start + qi.chunk] = np.einsum("p...ij,...j->pi", vals, flipped, optimize=True)
    scale = h ** (-sum(alpha))
    return (scale * out).reshape(lead + (d,))


def _lattice_values(qi: QuasiInterpolant, base, ext, alpha):
    try:
        return qi.kernel.lattice_values(base, ext, 1, alpha)
    except NonremovableSingularity:
        # an evaluation point sits on a lattice singularity: nudge it deterministically
        eps = 1e-9
        msg = f"evaluation point perturbed by {eps}*h to avoid a nonremovable singularity"
        qi.warnings_log.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=4)
        return qi.kernel.lattice_values(base + eps, ext, 1, alpha)


def make_qi(data: GridField, spec: KernelSpec, truncation: Truncation | None = None) -> QuasiInterpolant:
    return QuasiInterpolant(_cached_kernel(spec), data, truncation or Truncation())


def project_scalar(data: GridField, ell: int, k: int, eval_points, alpha=None, truncation=None):
    """Plain Q_h with the scalar kernel psi, applied to each component."""
    spec = KernelSpec.scalar(ell, k, data.dim)
    return evaluate_qi(make_qi(data, spec, truncation), eval_points, alpha)


def project_div(data: GridField, ell: int, k: int, eval_points, alpha=None, truncation=None):
    spec = KernelSpec.div(ell, k, data.dim)
    return evaluate_qi(make_qi(data, spec, truncation), eval_points, alpha)


def project_curl(data: GridField, ell: int, k: int, eval_points, alpha=None, truncation=None, combo=(0, 0, 1)):
    spec = KernelSpec.curl(ell, k, data.dim, combo)
    return evaluate_qi(make_qi(data, spec, truncation), eval_points, alpha)


# ----------------------------------------------------------------------------
# CSV field format: header x1..xd,f1..fd, one row per node


def write_field_csv(path, points, values, fmt: str = "%.12e") -> None:
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    d = points.shape[-1]
    pts = points.reshape(-1, d)
    vals = values.reshape(-1, values.shape[-1])
    header = [f"x{s + 1}" for s in range(d)] + [f"f{s + 1}" for s in range(vals.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, v in zip(pts, vals):
            w.writerow([fmt % t for t in p] + [fmt % t for t in v])


def read_field_csv(path, rel_tol: float = 1e-9) -> GridField:
    """Load a lattice field; rows may come in any order but must fill a regular grid."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if len(header) % 2:
        raise IrregularLattice("expected columns x1..xd,f1..fd")
    d = len(header) // 2
    arr = np.array(body, dtype=float)
    pts, vals = arr[:, :d], arr[:, d:]
    origin = pts.min(axis=0)
    steps = []
    for s in range(d):
        coords = np.unique(pts[:, s])
        if coords.size < 2:
            raise IrregularLattice(f"axis {s + 1} has a single coordinate")
        diffs = np.diff(coords)
        if np.ptp(diffs) > rel_tol * diffs.mean():
            raise IrregularLattice(f"axis {s + 1} spacing is not uniform")
        steps.append(diffs.mean())
    h = steps[0]
    if any(abs(t - h) > rel_tol * h for t in steps):
        raise IrregularLattice("spacing differs between axes")
    idx = np.rint((pts - origin) / h).astype(int)
    if np.max(np.abs(idx * h + origin - pts)) > rel_tol * max(1.0, np.abs(pts).max()) + 1e-12:
        raise IrregularLattice("nodes do not lie on the lattice")
    extents = tuple(idx.max(axis=0) + 1)
    if len(body) != int(np.prod(extents)):
        raise IrregularLattice("lattice is ragged or has duplicate nodes")
    values = np.full(extents + (d,), np.nan)
    values[tuple(idx.T)] = vals
    if np.isnan(values).any():
        raise IrregularLattice("lattice has missing nodes")
    return GridField(origin, float(h), values)
