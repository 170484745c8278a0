"""Rabut's polynomials and the lattice stencils they induce.

``build_q`` returns the truncated polynomial q_{d,l,k}; substituting the
central second difference for every variable (``expand_stencil``) gives a
finite, symmetric stencil with rational weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np


@dataclass(frozen=True)
class MultiPoly:
    dim: int
    terms: dict = field(default_factory=dict)  # exponent tuple -> Fraction

    def degree_range(self) -> tuple[int, int]:
        degs = [sum(e) for e in self.terms]
        return min(degs), max(degs)

    def __call__(self, x):
        """Evaluate at x of shape (..., dim) in floating point."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for e, c in self.terms.items():
            out = out + float(c) * np.prod(x ** np.array(e), axis=-1)
        return out


@dataclass(frozen=True)
class Stencil:
    dim: int
    weights: dict = field(default_factory=dict)  # offset tuple -> Fraction

    def radius(self) -> tuple[int, ...]:
        return tuple(max(abs(v[s]) for v in self.weights) for s in range(self.dim))

    def offsets_array(self) -> np.ndarray:
        return np.array(sorted(self.weights), dtype=int).reshape(-1, self.dim)

    def weights_array(self) -> np.ndarray:
        return np.array([float(self.weights[v]) for v in sorted(self.weights)])

    def fourier(self, omega):
        """sum_nu w_nu exp(-i nu . omega) for omega of shape (..., dim)."""
        omega = np.asarray(omega, dtype=float)
        nu = self.offsets_array()
        phase = np.tensordot(omega, nu.T, axes=([-1], [0]))
        return np.exp(-1j * phase) @ self.weights_array()


def rabut_coefficients(k: int) -> list[Fraction]:
    """a_i = (-1)^i 2 (i!)^2 / (2i+2)!, i = 0..k-1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return [Fraction((-1) ** i * 2 * math.factorial(i) ** 2, math.factorial(2 * i + 2)) for i in range(k)]


def _mul(a: dict, b: dict, max_degree: int) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        da = sum(ea)
        for eb, cb in b.items():
            if da + sum(eb) > max_degree:
                continue
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, Fraction(0)) + ca * cb
    return {e: c for e, c in out.items() if c != 0}


def build_q(dim: int, ell: int, k: int) -> MultiPoly:
    """Truncation of (sum_i a_i sum_s x_s^(i+1))^ell to total degree <= ell+k-1."""
    if min(dim, ell, k) < 1:
        raise ValueError("dim, ell and k must be >= 1")
    max_deg = ell + k - 1
    a = rabut_coefficients(k)
    base: dict = {}
    for i, ai in enumerate(a):
        for s in range(dim):
            e = [0] * dim
            e[s] = i + 1
            base[tuple(e)] = ai
    poly = {(0,) * dim: Fraction(1)}
    for _ in range(ell):
        poly = _mul(poly, base, max_deg)
    return MultiPoly(dim, poly)


def _conv(a: dict, b: dict) -> dict:
    out: dict = {}
    for oa, wa in a.items():
        for ob, wb in b.items():
            o = tuple(x + y for x, y in zip(oa, ob))
            out[o] = out.get(o, Fraction(0)) + wa * wb
    return out


def expand_stencil(q: MultiPoly) -> Stencil:
    """Substitute x_s -> (shift(-e_s) - 2 + shift(e_s)) and collect weights."""
    d = q.dim
    cache: dict = {}

    def axis_power(s: int, n: int) -> dict:
        if (s, n) not in cache:
            if n == 0:
                cache[(s, n)] = {(0,) * d: Fraction(1)}
            else:
                one = {}
                for off, w in ((-1, 1), (0, -2), (1, 1)):
                    v = [0] * d
                    v[s] = off
                    one[tuple(v)] = Fraction(w)
                cache[(s, n)] = _conv(axis_power(s, n - 1), one)
        return cache[(s, n)]

    weights: dict = {}
    for e, c in q.terms.items():
        st = {(0,) * d: c}
        for s, n in enumerate(e):
            if n:
                st = _conv(st, axis_power(s, n))
        for o, w in st.items():
            weights[o] = weights.get(o, Fraction(0)) + w
    return Stencil(d, {o: w for o, w in weights.items() if w != 0})


def symbol(q: MultiPoly, ell: int, omega):
    """Fourier symbol (-1)^ell q(-4 sin^2(omega/2)) / ||omega||^(2 ell), equal to 1 at 0."""
    omega = np.asarray(omega, dtype=float)
    x = -4.0 * np.sin(omega / 2.0) ** 2
    num = (-1) ** ell * q(x)
    r2 = np.einsum("...i,...i->...", omega, omega)
    zero = r2 == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = num / np.where(zero, 1.0, r2) ** ell
    return np.where(zero, 1.0, val)


def all_offsets(radius: tuple[int, ...]):
    return product(*(range(-r, r + 1) for r in radius))
