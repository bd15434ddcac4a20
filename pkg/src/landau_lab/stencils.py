"""Second-order finite differences on the trailing three (velocity) axes.

Every stencil is exact on quadratic polynomials, including the one-sided
closures at the truncation boundary, which is what makes the discrete collision
invariants survive exactly in the conservative operators.
"""
from __future__ import annotations

import numpy as np

from . import _accel


def grad(f: np.ndarray, h: float, backend=None) -> np.ndarray:
    """Stacked gradient, shape (3, *f.shape)."""
    return np.stack([_accel.diff_axis(f, h, a, backend) for a in range(3)])


def grad_adjoint(x: np.ndarray, h: float, backend=None) -> np.ndarray:
    """Adjoint of :func:`grad`: maps (3, *s) to s, so sum(grad(f)*x) == sum(f*grad_adjoint(x))."""
    out = _accel.diff_axis_adjoint(x[0], h, 0, backend)
    out += _accel.diff_axis_adjoint(x[1], h, 1, backend)
    out += _accel.diff_axis_adjoint(x[2], h, 2, backend)
    return out


def second_diff(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Pure second derivative along one velocity axis; ends use (2, -5, 4, -1)/h^2."""
    ax = f.ndim - 3 + axis
    g = np.moveaxis(f, ax, -1)
    out = np.empty_like(g)
    out[..., 1:-1] = g[..., 2:] - 2.0 * g[..., 1:-1] + g[..., :-2]
    out[..., 0] = 2.0 * g[..., 0] - 5.0 * g[..., 1] + 4.0 * g[..., 2] - g[..., 3]
    out[..., -1] = 2.0 * g[..., -1] - 5.0 * g[..., -2] + 4.0 * g[..., -3] - g[..., -4]
    return np.moveaxis(out / (h * h), -1, ax)


def hessian(f: np.ndarray, h: float, backend=None) -> np.ndarray:
    """Symmetric Hessian, shape (3, 3, *f.shape); mixed entries are products of first differences."""
    d = grad(f, h, backend)
    out = np.empty((3, 3) + f.shape)
    for a in range(3):
        out[a, a] = second_diff(f, h, a)
        for b in range(a + 1, 3):
            out[a, b] = out[b, a] = _accel.diff_axis(d[a], h, b, backend)
    return out
