"""Closed-form test fields with known Helmholtz-Hodge parts.

Whole-space fields (period 2):
    d(x) = [sin(2 pi x2) sin^2(pi x1), -sin(2 pi x1) sin^2(pi x2)]
    c(x) = grad(-cos(pi x1) sin(pi x2))
Bounded-domain fields on [0, 1]^2:
    d(x) = [sin(8 pi x2) sin^2(4 pi x1), -sin(8 pi x1) sin^2(4 pi x2)]
    c(x) = grad(-cos(2 pi x1) sin(2 pi x2))
Only alpha in {0, e1} is available in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

pi = np.pi


class UnknownField(KeyError):
    pass


def _stack(a, b):
    return np.stack([a, b], axis=-1)


def _div_field(a: float):
    # sin(2 a x2) sin^2(a x1) and its mirror
    def f(x):
        x1, x2 = x[..., 0], x[..., 1]
        return _stack(np.sin(2 * a * x2) * np.sin(a * x1) ** 2, -np.sin(2 * a * x1) * np.sin(a * x2) ** 2)

    def f1(x):
        x1, x2 = x[..., 0], x[..., 1]
        return _stack(a * np.sin(2 * a * x2) * np.sin(2 * a * x1), -2 * a * np.cos(2 * a * x1) * np.sin(a * x2) ** 2)

    return f, f1


def _curl_field(b: float):
    # grad(-cos(b x1) sin(b x2))
    def f(x):
        x1, x2 = x[..., 0], x[..., 1]
        return _stack(b * np.sin(b * x1) * np.sin(b * x2), -b * np.cos(b * x1) * np.cos(b * x2))

    def f1(x):
        x1, x2 = x[..., 0], x[..., 1]
        return _stack(b * b * np.cos(b * x1) * np.sin(b * x2), b * b * np.sin(b * x1) * np.cos(b * x2))

    return f, f1


@dataclass(frozen=True)
class BuiltinField:
    name: str
    value: Callable
    dx1: Callable
    div_part: str | None
    curl_part: str | None
    period: float  # common period along both axes
    max_wavenumber: float  # largest |omega| present in the field

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def derivative(self, alpha):
        alpha = tuple(alpha)
        if not any(alpha):
            return self.value
        if alpha == (1, 0):
            return self.dx1
        raise ValueError(f"closed-form derivative {alpha} not available (only alpha = 0 or e1)")


def _sum(f, g):
    return lambda x: f(x) + g(x)


def _build() -> dict:
    ws_d, ws_d1 = _div_field(pi)
    ws_c, ws_c1 = _curl_field(pi)
    bd_d, bd_d1 = _div_field(4 * pi)
    bd_c, bd_c1 = _curl_field(2 * pi)
    ws_w = 2 * pi * np.sqrt(2)
    bd_w = 8 * pi * np.sqrt(2)
    return {
        "ws_div": BuiltinField("ws_div", ws_d, ws_d1, "ws_div", None, 2.0, ws_w),
        "ws_curl": BuiltinField("ws_curl", ws_c, ws_c1, None, "ws_curl", 2.0, pi * np.sqrt(2)),
        "ws_full": BuiltinField("ws_full", _sum(ws_d, ws_c), _sum(ws_d1, ws_c1), "ws_div", "ws_curl", 2.0, ws_w),
        "bd_div": BuiltinField("bd_div", bd_d, bd_d1, "bd_div", None, 0.25, bd_w),
        "bd_curl": BuiltinField("bd_curl", bd_c, bd_c1, None, "bd_curl", 1.0, 2 * pi * np.sqrt(2)),
        "bd_full": BuiltinField("bd_full", _sum(bd_d, bd_c), _sum(bd_d1, bd_c1), "bd_div", "bd_curl", 1.0, bd_w),
    }


_FIELDS = _build()
FIELD_NAMES = tuple(_FIELDS)


def builtin_field(name: str) -> BuiltinField:
    try:
        return _FIELDS[name]
    except KeyError:
        raise UnknownField(f"unknown field {name!r}; choose from {', '.join(FIELD_NAMES)}") from None


def zero_field(x):
    x = np.asarray(x, dtype=float)
    return np.zeros(x.shape)


def part_of(field: BuiltinField, part: str, alpha=(0, 0)):
    """Exact D^alpha of the div or curl part (zero if the field has none)."""
    name = field.div_part if part == "div" else field.curl_part
    if name is None:
        return zero_field
    return _FIELDS[name].derivative(alpha)
