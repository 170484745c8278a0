"""Exact term algebra for polyharmonic fundamental solutions.

Every function handled here is a finite sum of terms

    c * x^m * r^p * (ln r)^q,      r = ||x||, q in {0, 1},

which is closed under partial differentiation.  Coefficients are kept as
exact ``Fraction`` values; a single floating-point ``scale`` shared by all
terms of an expression carries the transcendental constant of the
fundamental solution (a power of pi), so derivative bookkeeping never
rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

DEFAULT_ORIGIN_TOL = 1e-12
MAX_DERIVATIVE_ORDER = 8
MAX_TERMS = 100_000

Key = tuple  # (monomial tuple, rpow, logpow)


class NonremovableSingularity(ArithmeticError):
    """Raised when an expression has no continuous extension at the origin."""


class TermLimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class FundamentalConstants:
    ell: int
    dim: int
    C: float
    D: float
    E: float
    # E = E_rational * pi**pi_power, exactly
    E_rational: Fraction
    pi_power: Fraction


@dataclass(frozen=True)
class RadialTerm:
    coeff: Fraction
    monomial: tuple
    rpow: int
    logpow: int


@dataclass(frozen=True)
class RadialExpr:
    """Sum of radial terms in ``dim`` variables, times a float ``scale``."""

    dim: int
    terms: dict = field(default_factory=dict)
    scale: float = 1.0

    def __post_init__(self):
        for (m, p, q), c in self.terms.items():
            if len(m) != self.dim:
                raise ValueError(f"monomial {m} does not match dim {self.dim}")
            if q not in (0, 1):
                raise ValueError("log power must be 0 or 1")
            if c == 0:
                raise ValueError("zero coefficients must be simplified away")
        if len(self.terms) > MAX_TERMS:
            raise TermLimitExceeded(f"{len(self.terms)} terms exceeds cap {MAX_TERMS}")

    @classmethod
    def from_terms(cls, dim: int, terms: Iterable[RadialTerm], scale: float = 1.0) -> "RadialExpr":
        return cls(dim, _simplify(((t.monomial, t.rpow, t.logpow), t.coeff) for t in terms), scale)

    def term_list(self) -> list[RadialTerm]:
        return [RadialTerm(c, m, p, q) for (m, p, q), c in sorted(self.terms.items())]

    def is_zero(self) -> bool:
        return not self.terms or self.scale == 0.0

    def __add__(self, other: "RadialExpr") -> "RadialExpr":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        if self.scale != other.scale:
            if other.is_zero():
                return self
            if self.is_zero():
                return other
            raise ValueError("cannot add expressions with different scales exactly")
        items = list(self.terms.items()) + list(other.terms.items())
        return RadialExpr(self.dim, _simplify(items), self.scale)

    def scaled(self, c) -> "RadialExpr":
        """Multiply the exact coefficients by the rational ``c``."""
        c = Fraction(c)
        if c == 0:
            return RadialExpr(self.dim, {}, self.scale)
        return RadialExpr(self.dim, {k: v * c for k, v in self.terms.items()}, self.scale)

    def simplify(self) -> "RadialExpr":
        return RadialExpr(self.dim, _simplify(self.terms.items()), self.scale)


def _simplify(items) -> dict:
    out: dict = {}
    for key, c in items:
        out[key] = out.get(key, Fraction(0)) + Fraction(c)
    return {k: v for k, v in out.items() if v != 0}


def _check_params(ell: int, dim: int) -> None:
    if int(ell) != ell or ell < 1:
        raise ValueError(f"ell must be a positive integer, got {ell}")
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim}")


def fundamental_constant(ell: int, dim: int) -> FundamentalConstants:
    """Constants of the fundamental solution of the ell-th iterated Laplacian.

    E = Gamma(d/2) / (2^ell pi^(d/2) (ell-1)! prod_j (2 ell - 2 j - d)), where
    for even ``dim`` the index j = ell - d/2 is left out of the product.
    """
    _check_params(ell, dim)
    # Gamma(d/2) = g_rat * pi^(1/2) for odd d, integer for even d
    if dim % 2 == 0:
        g_rat = Fraction(math.factorial(dim // 2 - 1))
        g_pi = Fraction(0)
    else:
        # Gamma(n + 1/2) = (2n)! / (4^n n!) sqrt(pi)
        n = (dim - 1) // 2
        g_rat = Fraction(math.factorial(2 * n), 4**n * math.factorial(n))
        g_pi = Fraction(1, 2)
    prod = Fraction(1)
    for j in range(ell):
        if dim % 2 == 0 and 2 * j == 2 * ell - dim:
            continue
        prod *= 2 * ell - 2 * j - dim
    e_rat = g_rat / (2**ell * math.factorial(ell - 1) * prod)
    pi_pow = g_pi - Fraction(dim, 2)
    e = float(e_rat) * math.pi ** float(pi_pow)
    if dim % 2:
        return FundamentalConstants(ell, dim, 0.0, e, e, e_rat, pi_pow)
    return FundamentalConstants(ell, dim, e, 0.0, e, e_rat, pi_pow)


def phi_expr(ell: int, dim: int) -> RadialExpr:
    """||x||^(2 ell - d) [C ln||x|| + D] as a one-term expression."""
    fc = fundamental_constant(ell, dim)
    logpow = 1 if dim % 2 == 0 else 0
    key = ((0,) * dim, 2 * ell - dim, logpow)
    return RadialExpr(dim, {key: Fraction(1)}, fc.E)


def differentiate(expr: RadialExpr, axis: int) -> RadialExpr:
    """Partial derivative along ``axis`` (1-based)."""
    d = expr.dim
    if not 1 <= axis <= d:
        raise ValueError(f"axis must lie in 1..{d}, got {axis}")
    s = axis - 1
    out: dict = {}

    def add(key, c):
        out[key] = out.get(key, Fraction(0)) + c

    for (m, p, q), c in expr.terms.items():
        if m[s]:
            mm = m[:s] + (m[s] - 1,) + m[s + 1:]
            add((mm, p, q), c * m[s])
        mp = m[:s] + (m[s] + 1,) + m[s + 1:]
        if p:
            add((mp, p - 2, q), c * p)
        if q:
            add((mp, p - 2, 0), c * q)
    return RadialExpr(d, {k: v for k, v in out.items() if v != 0}, expr.scale)


def apply_operator(expr: RadialExpr, alpha: Sequence[int], max_order: int = MAX_DERIVATIVE_ORDER) -> RadialExpr:
    if len(alpha) != expr.dim:
        raise ValueError("multi-index length must equal dim")
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index entries must be non-negative")
    if sum(alpha) > max_order:
        raise ValueError(f"derivative order {sum(alpha)} exceeds cap {max_order}")
    for s, a in enumerate(alpha):
        for _ in range(a):
            expr = differentiate(expr, s + 1)
    return expr


def laplacian(expr: RadialExpr) -> RadialExpr:
    out = RadialExpr(expr.dim, {}, expr.scale)
    for s in range(expr.dim):
        e = [0] * expr.dim
        e[s] = 2
        out = out + apply_operator(expr, e)
    return out


def _origin_value(expr: RadialExpr) -> float:
    const = Fraction(0)
    directional = []
    for (m, p, q), c in expr.terms.items():
        order = sum(m) + p
        if order > 0:
            continue
        if order < 0 or q:
            raise NonremovableSingularity(
                f"term {c}*x^{m}*r^{p}*ln(r)^{q} has no limit at the origin"
            )
        if any(m):
            directional.append((m, c))
        else:
            const += c
    if directional:
        # degree-zero homogeneous part: a limit exists only if it is constant on the sphere
        dirs = _unit_directions(expr.dim)
        vals = np.zeros(len(dirs))
        for m, c in directional:
            vals += float(c) * np.prod(dirs ** np.array(m), axis=1)
        if np.ptp(vals) > 1e-12 * max(1.0, float(np.max(np.abs(vals)))):
            raise NonremovableSingularity("direction-dependent value at the origin")
        return (float(const) + float(vals[0])) * expr.scale
    return float(const) * expr.scale


def _unit_directions(dim: int, n: int = 16) -> np.ndarray:
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def origin_limit(expr: RadialExpr) -> float:
    """Continuous extension at x = 0, or NonremovableSingularity."""
    return _origin_value(expr)


def evaluate(expr: RadialExpr, point, origin_tol: float = DEFAULT_ORIGIN_TOL):
    """Evaluate at one point (shape (d,)) or a batch (shape (..., d))."""
    return evaluate_many([expr], point, origin_tol)[0]


def evaluate_many(exprs: Sequence[RadialExpr], points, origin_tol: float = DEFAULT_ORIGIN_TOL):
    """Evaluate several expressions over the same points, sharing powers and logs.

    Returns an array of shape (len(exprs), *points.shape[:-1]); a scalar point
    gives shape (len(exprs),).
    """
    pts = np.asarray(points, dtype=float)
    if not exprs:
        return np.zeros((0,) + pts.shape[:-1])
    dim = exprs[0].dim
    if pts.shape[-1] != dim:
        raise ValueError(f"points must have last axis {dim}, got {pts.shape}")
    r2 = np.einsum("...i,...i->...", pts, pts)
    r = np.sqrt(r2)
    near = r <= origin_tol
    any_near = bool(np.any(near))
    if any_near:
        r = np.where(near, 1.0, r)
    logr = None
    xpow: dict = {}
    rpow: dict = {}

    def xp(s, n):
        # iterative on purpose: a self-referencing closure would keep the cache alive in a cycle
        top = max([j for (t, j) in xpow if t == s], default=0)
        for j in range(top + 1, n + 1):
            xpow[(s, j)] = pts[..., s] if j == 1 else xpow[(s, j - 1)] * pts[..., s]
        return xpow[(s, n)]

    def rp(p):
        if p not in rpow:
            rpow[p] = r**p
        return rpow[p]

    out = np.zeros((len(exprs),) + r.shape)
    for i, expr in enumerate(exprs):
        acc = np.zeros(r.shape)
        for (m, p, q), c in expr.terms.items():
            val = float(c) * rp(p) if p else np.full(r.shape, float(c))
            for s, n in enumerate(m):
                if n:
                    val = val * xp(s, n)
            if q:
                if logr is None:
                    logr = np.log(r)
                val = val * logr
            acc += val
        acc *= expr.scale
        if any_near:
            acc = np.where(near, _origin_value(expr) if expr.terms else 0.0, acc)
        out[i] = acc
    return out


def evaluate_mp(expr: RadialExpr, point: Sequence[float], dps: int = 50):
    """Extended-precision evaluation at a single point; returns an ``mpf``."""
    with mpmath.workdps(dps):
        x = [v if isinstance(v, mpmath.mpf) else mpmath.mpf(float(v)) for v in point]
        r = mpmath.sqrt(sum(v * v for v in x))
        if r == 0:
            return _origin_value(expr)
        lr = mpmath.log(r)
        acc = mpmath.mpf(0)
        for (m, p, q), c in expr.terms.items():
            t = mpmath.mpf(c.numerator) / c.denominator * r**p
            for s, n in enumerate(m):
                if n:
                    t *= x[s] ** n
            if q:
                t *= lr
            acc += t
        return acc * mpmath.mpf(expr.scale)
