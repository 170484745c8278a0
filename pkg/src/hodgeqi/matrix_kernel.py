"""Polyharmonic matrix kernels ``_{eta,beta,gamma}Psi_{l,k}``.

A kernel is the stencil q_{d,l,k}(tilde Delta) applied to a d x d matrix of
differential operators acting on a fundamental solution phi_L:

    Psi = sign * q(tilde Delta) [eta Delta I - beta grad grad^T] (grad grad^T)^gamma phi_L,
    L = l + gamma + max(eta, beta).

When eta = beta = 0 the bracket is the identity.  The operator entries are
built symbolically with :mod:`hodgeqi.radial_calculus`; the stencil is applied
numerically at evaluation time.

Sign convention: phi_L solves Delta^L phi_L = delta, so the plain stencil
q(tilde Delta) phi_l already has Fourier symbol (-1)^l q(-4 sin^2(w/2)) / |w|^(2l),
which is 1 at the origin.  No extra (-1)^l factor is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import mpmath
import numpy as np

from . import difference_stencil as ds
from . import radial_calculus as rc

VARIANT_COMBOS = {
    "div": (1, 1, 0),
    "curl": (0, 0, 1),
    "harmonic": (1, 1, 1),
}

# sign that turns each curl-free combination into the projector omega omega^T / |omega|^2
CURL_SIGNS = {(0, 1, 1): -1, (1, 0, 1): 1, (0, 1, 0): -1, (0, 0, 1): 1}


class DirectionUndefined(ValueError):
    """The Fourier projector has no value at omega = 0."""


@dataclass(frozen=True)
class KernelSpec:
    eta: int
    beta: int
    gamma: int
    ell: int
    k: int
    dim: int
    variant: str = "general"

    def __post_init__(self):
        if self.variant == "scalar":
            if self.dim < 1:
                raise ValueError("dim must be >= 1")
        else:
            if any(v not in (0, 1) for v in (self.eta, self.beta, self.gamma)):
                raise ValueError("eta, beta, gamma must be 0 or 1")
            if self.eta + self.beta + self.gamma == 0:
                raise ValueError("eta + beta + gamma must be nonzero")
            if self.dim < 2:
                raise ValueError("matrix kernels need dim >= 2")
        if not 1 <= self.k <= self.ell:
            raise ValueError(f"need 1 <= k <= ell, got k={self.k}, ell={self.ell}")
        combo = (self.eta, self.beta, self.gamma)
        if self.variant in VARIANT_COMBOS and self.variant != "curl" and combo != VARIANT_COMBOS[self.variant]:
            raise ValueError(f"variant {self.variant!r} requires {VARIANT_COMBOS[self.variant]}")
        if self.variant == "curl" and combo not in CURL_SIGNS:
            raise ValueError(f"{combo} is not a curl-free combination")

    @classmethod
    def div(cls, ell: int, k: int, dim: int = 2) -> "KernelSpec":
        return cls(1, 1, 0, ell, k, dim, "div")

    @classmethod
    def curl(cls, ell: int, k: int, dim: int = 2, combo=(0, 0, 1)) -> "KernelSpec":
        return cls(*combo, ell, k, dim, "curl")

    @classmethod
    def harmonic(cls, ell: int, k: int, dim: int = 2) -> "KernelSpec":
        return cls(1, 1, 1, ell, k, dim, "harmonic")

    @classmethod
    def scalar(cls, ell: int, k: int, dim: int = 2) -> "KernelSpec":
        return cls(0, 0, 0, ell, k, dim, "scalar")

    @property
    def phi_order(self) -> int:
        if self.variant == "scalar":
            return self.ell
        return self.ell + self.gamma + max(self.eta, self.beta)

    @property
    def sign(self) -> int:
        if self.variant == "curl":
            return CURL_SIGNS[(self.eta, self.beta, self.gamma)]
        return 1

    @property
    def size(self) -> int:
        return 1 if self.variant == "scalar" else self.dim


def _unit(dim: int, *axes: int) -> tuple:
    e = [0] * dim
    for a in axes:
        e[a] += 1
    return tuple(e)


def operator_matrix(spec: KernelSpec) -> list[list[dict]]:
    """Entries of the operator matrix as {multi-index: integer coefficient}."""
    d = spec.dim
    if spec.variant == "scalar":
        return [[{(0,) * d: 1}]]
    lap = {_unit(d, s, s): 1 for s in range(d)}

    def bracket(i, j):
        if spec.eta == 0 and spec.beta == 0:
            return {(0,) * d: 1} if i == j else {}
        out: dict = {}
        if spec.eta and i == j:
            for mi, c in lap.items():
                out[mi] = out.get(mi, 0) + c
        if spec.beta:
            mi = _unit(d, i, j)
            out[mi] = out.get(mi, 0) - 1
        return {m: c for m, c in out.items() if c}

    def hess(i, j):
        if spec.gamma:
            return {_unit(d, i, j): 1}
        return {(0,) * d: 1} if i == j else {}

    mat = []
    for i in range(d):
        row = []
        for j in range(d):
            acc: dict = {}
            for kk in range(d):
                for ma, ca in bracket(i, kk).items():
                    for mb, cb in hess(kk, j).items():
                        m = tuple(a + b for a, b in zip(ma, mb))
                        acc[m] = acc.get(m, 0) + ca * cb
            row.append({m: c for m, c in acc.items() if c})
        mat.append(row)
    return mat


class KernelEvaluator:
    """Assembled kernel: stencil, symbolic operator entries, and evaluation."""

    def __init__(self, spec: KernelSpec, max_order: int = rc.MAX_DERIVATIVE_ORDER):
        self.spec = spec
        self.max_order = max_order
        self.q = ds.build_q(spec.dim, spec.ell, spec.k)
        self.stencil = ds.expand_stencil(self.q)
        self.sign = spec.sign
        self.phi = rc.phi_expr(spec.phi_order, spec.dim)
        self.ops = operator_matrix(spec)
        self._offsets = self.stencil.offsets_array()
        self._weights = self.sign * self.stencil.weights_array()
        self._phi_cache: dict = {}
        self._entry_cache: dict = {}
        self.entries = self.entry_exprs()

    @property
    def size(self) -> int:
        return self.spec.size

    def _dphi(self, mi: tuple) -> rc.RadialExpr:
        if mi not in self._phi_cache:
            self._phi_cache[mi] = rc.apply_operator(self.phi, mi, max_order=self.max_order + 4)
        return self._phi_cache[mi]

    def entry_exprs(self, alpha=None) -> tuple:
        """Matrix of RadialExpr for D^alpha of the operator entries (before the stencil)."""
        d = self.spec.dim
        alpha = tuple(alpha) if alpha is not None else (0,) * d
        if len(alpha) != d:
            raise ValueError("alpha must have length dim")
        if sum(alpha) > self.max_order:
            raise ValueError(f"|alpha| = {sum(alpha)} exceeds cap {self.max_order}")
        if alpha in self._entry_cache:
            return self._entry_cache[alpha]
        n = self.size
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                if j < i:
                    row.append(rows[j][i])
                    continue
                e = rc.RadialExpr(d, {}, self.phi.scale)
                for mi, c in self.ops[i][j].items():
                    m = tuple(a + b for a, b in zip(mi, alpha))
                    e = e + self._dphi(m).scaled(c)
                row.append(e)
            rows.append(row)
        out = tuple(tuple(r) for r in rows)
        self._entry_cache[alpha] = out
        return out

    def _unique(self, alpha):
        ent = self.entry_exprs(alpha)
        n = self.size
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        return pairs, [ent[i][j] for i, j in pairs]

    def _assemble(self, vals, pairs, shape):
        n = self.size
        out = np.empty(shape + (n, n))
        for t, (i, j) in enumerate(pairs):
            out[..., i, j] = vals[t]
            out[..., j, i] = vals[t]
        return out

    def operator_values(self, x, alpha=None, origin_tol: float = rc.DEFAULT_ORIGIN_TOL):
        """Operator entries without the stencil, shape (..., n, n)."""
        x = np.asarray(x, dtype=float)
        pairs, exprs = self._unique(alpha)
        vals = rc.evaluate_many(exprs, x, origin_tol)
        return self._assemble(vals, pairs, x.shape[:-1])

    def __call__(self, x, alpha=None, origin_tol: float = rc.DEFAULT_ORIGIN_TOL):
        """sum_nu w_nu (D^alpha entries)(x - nu), shape (..., n, n)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.spec.dim:
            raise ValueError(f"points must have last axis {self.spec.dim}")
        pairs, exprs = self._unique(alpha)
        lead = x.shape[:-1]
        flat = x.reshape(-1, self.spec.dim)
        acc = np.zeros((len(pairs), flat.shape[0]))
        chunk = max(1, 500_000 // max(1, len(self._offsets)))
        for start in range(0, flat.shape[0], chunk):
            pts = flat[start:start + chunk, None, :] - self._offsets[None, :, :]
            vals = rc.evaluate_many(exprs, pts, origin_tol)
            acc[:, start:start + chunk] = vals @ self._weights
        return self._assemble(acc.reshape((len(pairs),) + lead), pairs, lead)

    def lattice_values(self, base, shape, n: int = 1, alpha=None, origin_tol: float = rc.DEFAULT_ORIGIN_TOL):
        """Kernel at base + i/n for every multi-index 0 <= i < shape.

        ``base`` has shape (P, d); the result has shape (P, *shape, m, m).
        Operator entries are evaluated once on the refined lattice and the
        stencil is applied by shifting, since stencil offsets are whole
        multiples of the lattice step.
        """
        base = np.atleast_2d(np.asarray(base, dtype=float))
        d = self.spec.dim
        shape = tuple(int(s) for s in shape)
        if len(shape) != d:
            raise ValueError("shape must have length dim")
        rad = self.stencil.radius()
        pad = [n * r for r in rad]
        ext = tuple(s + 2 * p for s, p in zip(shape, pad))
        axes = [(np.arange(e) - p) / n for e, p in zip(ext, pad)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        pts = base.reshape((-1,) + (1,) * d + (d,)) + mesh[None]
        pairs, exprs = self._unique(alpha)
        kv = rc.evaluate_many(exprs, pts, origin_tol)  # (u, P, *ext)
        acc = np.zeros(kv.shape[:2] + shape)
        for nu, w in zip(self._offsets, self._weights):
            sl = tuple(slice(p - n * v, p - n * v + s) for p, v, s in zip(pad, nu, shape))
            acc += w * kv[(slice(None), slice(None)) + sl]
        return self._assemble(acc, pairs, acc.shape[1:])

    def value_mp(self, x, alpha=None, dps: int = 50) -> np.ndarray:
        """Extended-precision kernel value at one point (avoids far-field cancellation)."""
        pairs, exprs = self._unique(alpha)
        n = self.size
        out = np.empty((n, n))
        with mpmath.workdps(dps):
            for (i, j), e in zip(pairs, exprs):
                acc = mpmath.mpf(0)
                for nu, w in self.stencil.weights.items():
                    # shift in extended precision: a rounded double shift wrecks the cancellation
                    pt = [mpmath.mpf(float(a)) - b for a, b in zip(x, nu)]
                    acc += mpmath.mpf(w.numerator) / w.denominator * rc.evaluate_mp(e, pt, dps)
                out[i, j] = out[j, i] = float(self.sign * acc)
        return out


def build_kernel(spec: KernelSpec) -> KernelEvaluator:
    return KernelEvaluator(spec)


def eval_kernel(ev: KernelEvaluator, x, alpha=None) -> np.ndarray:
    return ev(x, alpha)


_scalar_cache: dict = {}


def eval_scalar_psi(ell: int, k: int, x, alpha=None):
    x = np.asarray(x, dtype=float)
    key = (ell, k, x.shape[-1])
    if key not in _scalar_cache:
        _scalar_cache[key] = KernelEvaluator(KernelSpec.scalar(ell, k, x.shape[-1]))
    return _scalar_cache[key](x, alpha)[..., 0, 0]


def psi_hat(ell: int, k: int, omega):
    omega = np.asarray(omega, dtype=float)
    return ds.symbol(ds.build_q(omega.shape[-1], ell, k), ell, omega)


def kernel_hat(spec: KernelSpec, omega) -> np.ndarray:
    """Fourier transform of the kernel, shape (..., n, n)."""
    omega = np.asarray(omega, dtype=float)
    d = spec.dim
    ph = psi_hat(spec.ell, spec.k, omega)
    if spec.variant == "scalar":
        return ph[..., None, None]
    r2 = np.einsum("...i,...i->...", omega, omega)
    if spec.variant != "harmonic" and np.any(r2 == 0.0):
        raise DirectionUndefined("projector is undefined at omega = 0")
    ops = operator_matrix(spec)
    extra = spec.phi_order - spec.ell
    out = np.zeros(omega.shape[:-1] + (d, d))
    safe = np.where(r2 == 0.0, 1.0, r2)
    for i in range(d):
        for j in range(d):
            acc = np.zeros(omega.shape[:-1])
            for mi, c in ops[i][j].items():
                # d^mi -> (i omega)^mi, even total order 2t gives (-1)^t omega^mi
                t = sum(mi) // 2
                acc = acc + c * (-1) ** t * np.prod(omega ** np.array(mi), axis=-1)
            out[..., i, j] = spec.sign * (-1) ** extra * acc / safe**extra
    return ph[..., None, None] * out


# ----------------------------------------------------------------------------
# Strang-Fix and far-field diagnostics


@dataclass
class StrangFixReport:
    ell: int
    k: int
    dim: int
    origin_error: float  # |mean over a small circle of psi_hat - 1|
    lattice_max: float  # max |psi_hat(2 pi j)|, 1 <= |j|_inf <= j_radius
    derivative_max: float  # max finite-difference |D^a psi_hat(2 pi j)|, |a| <= max_order
    decay_exponent: float | None = None
    thresholds: dict = field(default_factory=lambda: {"origin": 1e-6, "lattice": 1e-14, "derivative": 1e-5})

    @property
    def passed(self) -> bool:
        t = self.thresholds
        return (self.origin_error <= t["origin"] and self.lattice_max <= t["lattice"]
                and self.derivative_max <= t["derivative"])


def _fd_weights(order: int) -> tuple:
    """Second-order central difference weights (offsets in units of the step)."""
    return {
        0: ((0,), (1.0,)),
        1: ((-1, 1), (-0.5, 0.5)),
        2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
        3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    }[order]


def fd_derivative(func, point, alpha, step: float) -> float:
    """Tensor-product central difference of D^alpha func at point (|alpha_s| <= 3)."""
    point = np.asarray(point, dtype=float)
    pts = [point]
    wts = [1.0]
    for s, a in enumerate(alpha):
        offs, ws = _fd_weights(a)
        new_p, new_w = [], []
        for p, w in zip(pts, wts):
            for o, c in zip(offs, ws):
                q = p.copy()
                q[s] += o * step
                new_p.append(q)
                new_w.append(w * c / step**a)
        pts, wts = new_p, new_w
    vals = func(np.array(pts))
    return float(np.dot(wts, vals))


def decay_exponent(ell: int, k: int, dim: int = 2, radii=None, direction=None, dps: int = 50) -> float:
    """Least-squares slope of log|psi(r u)| against log r, in extended precision."""
    radii = np.geomspace(10, 100, 7) if radii is None else np.asarray(radii, dtype=float)
    u = np.ones(dim) if direction is None else np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    ev = KernelEvaluator(KernelSpec.scalar(ell, k, dim))
    vals = [abs(ev.value_mp(r * u, dps=dps)[0, 0]) for r in radii]
    return float(np.polyfit(np.log(radii), np.log(vals), 1)[0])


def check_strang_fix(ell: int, k: int, dim: int = 2, max_order: int = 3, j_radius: int = 3,
                     fd_step: float = 1e-3, origin_radius: float = 1e-3, n_dirs: int = 16,
                     with_decay: bool = False) -> StrangFixReport:
    func = lambda w: psi_hat(ell, k, w)
    theta = 2 * np.pi * (np.arange(n_dirs) + 0.5) / n_dirs
    if dim == 1:
        ring = np.array([[origin_radius], [-origin_radius]])
    else:
        dirs = np.zeros((n_dirs, dim))
        dirs[:, 0], dirs[:, 1] = np.cos(theta), np.sin(theta)
        ring = origin_radius * dirs
    origin_error = float(abs(np.mean(func(ring)) - 1.0))
    js = [j for j in product(range(-j_radius, j_radius + 1), repeat=dim) if max(map(abs, j)) >= 1]
    centers = 2 * np.pi * np.array(js, dtype=float)
    lattice_max = float(np.max(np.abs(func(centers))))
    alphas = [a for a in product(range(max_order + 1), repeat=dim) if 0 < sum(a) <= max_order]
    deriv = 0.0
    for c in centers:
        for a in alphas:
            deriv = max(deriv, abs(fd_derivative(func, c, a, fd_step)))
    dec = decay_exponent(ell, k, dim) if with_decay else None
    return StrangFixReport(ell, k, dim, origin_error, lattice_max, deriv, dec)
