"""Seeded random smooth fields and named initial data."""
from __future__ import annotations

import numpy as np

from .phase_space import Field, PhaseGrid
from .projection import project_array

INIT_KINDS = ("zero", "wave", "random")


def band_limited_noise(grid: PhaseGrid, n: int, rng: np.random.Generator, band: int | None = None) -> np.ndarray:
    """``n`` real trigonometric polynomials in v with period 2 rv and |k_i| <= band.

    The coefficients depend only on ``(n, band)`` and the generator state, so the
    same seed yields the same continuum functions on every grid. Shape
    ``(n, nv, nv, nv)``; each sample is normalized to unit max on the grid.
    """
    band = max(1, grid.nv // 4) if band is None else int(band)
    k = np.arange(-band, band + 1)
    m = k.size
    coef = rng.standard_normal((n, m, m, m)) + 1j * rng.standard_normal((n, m, m, m))
    E = np.exp(1j * np.pi * np.outer(k, grid.v_axis) / grid.rv)  # (m, nv)
    out = np.einsum("nabc,ai,bj,ck->nijk", coef, E, E, E, optimize=True).real
    return out / np.max(np.abs(out), axis=(1, 2, 3), keepdims=True)


def random_smooth_fields(grid: PhaseGrid, n: int, seed: int = 0, band: int | None = None,
                         envelope: float = 0.5) -> np.ndarray:
    """Band-limited noise times the Gaussian envelope exp(-envelope |v|^2)."""
    rng = np.random.default_rng(seed)
    env = np.exp(-envelope * np.sum(grid.v ** 2, axis=0))
    return band_limited_noise(grid, n, rng, band) * env


def initial_field(grid: PhaseGrid, kind: str = "wave", amplitude: float = 5e-3, seed: int = 0) -> Field:
    """Initial perturbations with vanishing mass, momentum and energy at every x.

    ``wave``: amplitude * (sin x1 v1 v2 + cos x1 (v1^2 - v2^2)/2) sqrt(mu).
    ``random``: the microscopic part of seeded smooth noise in v modulated by
    seeded Fourier modes in x, rescaled to sup norm ``amplitude``.
    """
    if kind not in INIT_KINDS:
        raise ValueError(f"unknown init kind {kind!r}; expected one of {INIT_KINDS}")
    if kind == "zero" or amplitude == 0:
        return Field.zeros(grid)
    v = grid.v
    sq = np.exp(-0.5 * np.sum(v ** 2, axis=0))
    x1 = grid.x[0]
    xs = x1.reshape(x1.shape + (1, 1, 1))
    if kind == "wave":
        data = (np.sin(xs) * (v[0] * v[1]) + np.cos(xs) * 0.5 * (v[0] ** 2 - v[1] ** 2)) * sq
    else:
        rng = np.random.default_rng(seed)
        prof = band_limited_noise(grid, 2, rng) * sq
        ph = rng.uniform(0, 2 * np.pi, 2)
        data = np.cos(xs + ph[0]) * prof[0] + np.sin(2 * xs + ph[1]) * prof[1]
        data = data - project_array(grid, data)
    data = data * np.ones(grid.shape)
    return Field(grid, amplitude * data / np.max(np.abs(data)))
