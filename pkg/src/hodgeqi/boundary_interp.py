"""Matrix-valued Matern interpolation with a divergence-free / curl-free split.

The full kernel is K = K_div + K_curl with K_div = (-Delta I + grad grad^T) Phi
and K_curl = -grad grad^T Phi, so K = -Delta Phi * I.  The interpolation
system therefore decouples into d scalar systems sharing one matrix.

Derivatives of the radial Phi use the operator D = (1/r) d/dr:
Phi_n = D^n Phi = eps^(2n) exp(-s) P_n(s) with s = eps r, and
d/dx_s [x^m Phi_n] = m_s x^(m - e_s) Phi_n + x^(m + e_s) Phi_(n+1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import Polynomial

MAX_D_ORDER = 4  # Phi_5 is singular at the origin: the C8 Matern has 8 derivatives


class SingularSystem(np.linalg.LinAlgError):
    def __init__(self, msg: str, condition: float = np.inf):
        super().__init__(f"{msg} (condition estimate {condition:.3e})")
        self.condition = condition


@lru_cache(maxsize=None)
def _radial_polys() -> tuple:
    p = Polynomial([105.0, 105.0, 45.0, 10.0, 1.0]) / 105.0
    out = [p]
    for _ in range(MAX_D_ORDER):
        q = p.deriv() - p
        if abs(q.coef[0]) > 1e-12:
            raise ArithmeticError("non-removable 1/s term")
        p = Polynomial(q.coef[1:]) if len(q.coef) > 1 else Polynomial([0.0])
        out.append(p)
    return tuple(out)


@dataclass(frozen=True)
class MaternKernel:
    """C8 Matern radial function e^{-s}(105 + 105 s + 45 s^2 + 10 s^3 + s^4)/105, s = eps r."""

    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("shape parameter must be positive")

    def __call__(self, r):
        return self.radial(0, r)

    def radial(self, n: int, r):
        """Phi_n(r) = ((1/r) d/dr)^n Phi at r."""
        if not 0 <= n <= MAX_D_ORDER:
            raise ValueError(f"D-order {n} outside 0..{MAX_D_ORDER}")
        s = self.eps * np.asarray(r, dtype=float)
        return self.eps ** (2 * n) * np.exp(-s) * _radial_polys()[n](s)


def matern_c8(r, eps: float):
    return MaternKernel(eps)(r)


# ----------------------------------------------------------------------------
# term algebra: {(monomial, n): coeff} meaning sum coeff * x^m * Phi_n


def _diff(terms: dict, s: int) -> dict:
    out: dict = {}
    for (m, n), c in terms.items():
        if m[s]:
            mm = m[:s] + (m[s] - 1,) + m[s + 1:]
            out[(mm, n)] = out.get((mm, n), 0) + c * m[s]
        mp = m[:s] + (m[s] + 1,) + m[s + 1:]
        out[(mp, n + 1)] = out.get((mp, n + 1), 0) + c
    return {k: v for k, v in out.items() if v != 0}


def _apply(terms: dict, alpha) -> dict:
    for s, a in enumerate(alpha):
        for _ in range(a):
            terms = _diff(terms, s)
    return terms


def _add(a: dict, b: dict, sb: int = 1) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + sb * v
    return {k: v for k, v in out.items() if v != 0}


@lru_cache(maxsize=None)
def _part_terms(dim: int, part: str, alpha: tuple) -> tuple:
    """D^alpha of every entry of K_part as term dicts, as a dim x dim tuple."""
    zero = (0,) * dim
    base = {(zero, 0): 1}
    lap: dict = {}
    for s in range(dim):
        e = [0] * dim
        e[s] = 2
        lap = _add(lap, _apply(base, e))
    rows = []
    for i in range(dim):
        row = []
        for j in range(dim):
            e = [0] * dim
            e[i] += 1
            e[j] += 1
            hess = _apply(base, e)
            if part == "full":
                t = {k: -v for k, v in lap.items()} if i == j else {}
            elif part == "div":
                t = _add({k: -v for k, v in lap.items()}, hess) if i == j else hess
            elif part == "curl":
                t = {k: -v for k, v in hess.items()}
            else:
                raise ValueError("part must be full, div or curl")
            t = _apply(t, alpha)
            if any(n > MAX_D_ORDER for (_, n) in t):
                raise ValueError("derivative order exceeds the smoothness of the C8 Matern kernel")
            row.append(t)
        rows.append(tuple(row))
    return tuple(rows)


def _eval_terms(terms: dict, kern: MaternKernel, z: np.ndarray, radial_cache: dict) -> np.ndarray:
    out = np.zeros(z.shape[:-1])
    for (m, n), c in terms.items():
        if n not in radial_cache:
            radial_cache[n] = kern.radial(n, radial_cache["r"])
        v = c * radial_cache[n]
        for s, p in enumerate(m):
            if p:
                v = v * z[..., s] ** p
        out += v
    return out


def kernel_matrix(kern: MaternKernel, z, part: str = "full", alpha=None) -> np.ndarray:
    """D^alpha K_part at difference vectors z (..., d); returns (..., d, d)."""
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    alpha = tuple(alpha) if alpha is not None else (0,) * d
    terms = _part_terms(d, part, alpha)
    cache = {"r": np.sqrt(np.einsum("...i,...i->...", z, z))}
    out = np.empty(z.shape[:-1] + (d, d))
    for i in range(d):
        for j in range(i, d):
            out[..., i, j] = _eval_terms(terms[i][j], kern, z, cache)
            if j != i:
                out[..., j, i] = out[..., i, j]
    return out


@dataclass(frozen=True)
class BoundaryInterpolant:
    centers: np.ndarray  # (N, d)
    coeffs: np.ndarray  # (N, d)
    kernel: MaternKernel
    condition: float
    max_alpha: int = 2

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def fill_distance(centers) -> float:
    """Largest nearest-neighbour distance among the centers (lattice rings: the spacing)."""
    centers = np.asarray(centers, dtype=float)
    if len(centers) < 2:
        return 1.0
    from scipy.spatial import cKDTree

    dist, _ = cKDTree(centers).query(centers, k=2)
    return float(dist[:, 1].max())


def fit_interpolant(centers, values, eps: float | None = None, max_alpha: int = 2) -> BoundaryInterpolant:
    """Solve K(x_i - x_j) c_j = f(x_i) with K = -Delta Phi * I by Cholesky.

    ``eps`` defaults to 3 / fill distance of the centers.
    """
    centers = np.asarray(centers, dtype=float)
    values = np.asarray(values, dtype=float)
    if centers.ndim != 2 or len(centers) < 1:
        raise ValueError("need at least one center")
    if values.shape != centers.shape:
        raise ValueError("values must be one d-vector per center")
    if eps is None:
        eps = 3.0 / fill_distance(centers)
    kern = MaternKernel(eps)
    diff = centers[:, None, :] - centers[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    off = r[~np.eye(len(centers), dtype=bool)]
    if off.size and off.min() == 0.0:
        raise SingularSystem("duplicate centers", np.inf)
    d = centers.shape[1]
    # -Delta Phi = -(d Phi_1 + r^2 Phi_2)
    G = -(d * kern.radial(1, r) + r**2 * kern.radial(2, r))
    anorm = np.abs(G).sum(axis=0).max()
    try:
        cf = sla.cho_factor(G, lower=False, check_finite=True)
    except np.linalg.LinAlgError:
        raise SingularSystem("matrix is not numerically positive definite", np.inf) from None
    rcond, info = sla.lapack.dpocon(cf[0], anorm, uplo="U")
    cond = 1.0 / rcond if rcond > 0 else np.inf
    if info != 0 or cond > 1.0 / np.finfo(float).eps:
        raise SingularSystem("catastrophic conditioning", cond)
    coeffs = sla.cho_solve(cf, values)
    return BoundaryInterpolant(centers, coeffs, kern, cond, max_alpha)


def eval_interpolant(interp: BoundaryInterpolant, x, part: str = "full", alpha=None, chunk: int = 256) -> np.ndarray:
    """sum_j D^alpha K_part(x - x_j) c_j; x has shape (..., d)."""
    x = np.asarray(x, dtype=float)
    d = interp.dim
    alpha = tuple(alpha) if alpha is not None else (0,) * d
    if sum(alpha) > interp.max_alpha:
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds the cap {interp.max_alpha}")
    pts = x.reshape(-1, d)
    out = np.empty_like(pts)
    for a in range(0, len(pts), chunk):
        z = pts[a:a + chunk, None, :] - interp.centers[None, :, :]
        K = kernel_matrix(interp.kernel, z, part, alpha)
        out[a:a + chunk] = np.einsum("pnij,nj->pi", K, interp.coeffs)
    return out.reshape(x.shape)
