"""Weighted norms, the sigma inner product and the running energy functional."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import stencils
from .operators import sigma_mu
from .phase_space import Field, PhaseGrid


def _w2(grid: PhaseGrid, theta: float) -> np.ndarray:
    return (1.0 + grid.speed) ** (2.0 * theta)


def norm_l2_weighted(f: Field, theta: float = 0.0) -> float:
    g = f.grid
    return float(np.sqrt(np.sum(_w2(g, theta) * f.data ** 2) * g.x_volume * g.cell_volume))


def sigma_density(grid: PhaseGrid, f: np.ndarray, h: np.ndarray, theta: float = 0.0) -> np.ndarray:
    """Pointwise integrand w^{2 theta}[sigma^{ij} d_i f d_j h + sigma^{ij} v_i v_j f h]."""
    S = sigma_mu(grid)
    df = stencils.grad(f, grid.dv)
    dh = df if h is f else stencils.grad(h, grid.dv)
    vsv = S.quad(grid.v)
    return _w2(grid, theta) * (S.quad(df, dh) + vsv * f * h)


def inner_sigma_v(grid: PhaseGrid, f: np.ndarray, h: np.ndarray, theta: float = 0.0) -> np.ndarray:
    """Velocity-only sigma inner product at every leading index."""
    return np.sum(sigma_density(grid, f, h, theta), axis=(-3, -2, -1)) * grid.cell_volume


def inner_sigma(f: Field, h: Field, theta: float = 0.0) -> float:
    if f.grid != h.grid:
        raise ValueError("fields live on different grids")
    g = f.grid
    return float(np.sum(inner_sigma_v(g, f.data, h.data, theta)) * g.x_volume)


def norm_sigma_weighted(f: Field, theta: float = 0.0) -> float:
    return float(np.sqrt(max(inner_sigma(f, f, theta), 0.0)))


def norm_sup_weighted(f: Field, theta: float = 0.0) -> float:
    """max over nodes of w^theta |f|."""
    return float(np.max((1.0 + f.grid.speed) ** theta * np.abs(f.data)))


def energy(trajectory, theta: float = 0.0) -> float:
    """Half the terminal squared weighted L^2 norm plus the trapezoid sigma-norm integral.

    ``trajectory`` is a sequence of ``(t, Field)`` pairs or any object with
    ``times`` and ``snapshots`` attributes.
    """
    if hasattr(trajectory, "times"):
        pairs = list(zip(trajectory.times, trajectory.snapshots))
    else:
        pairs = list(trajectory)
    if not pairs:
        raise ValueError("empty trajectory")
    times = np.array([t for t, _ in pairs], dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("trajectory times must be strictly increasing")
    s2 = np.array([norm_sigma_weighted(f, theta) ** 2 for _, f in pairs])
    integral = float(np.sum(0.5 * (s2[1:] + s2[:-1]) * np.diff(times))) if len(pairs) > 1 else 0.0
    return 0.5 * norm_l2_weighted(pairs[-1][1], theta) ** 2 + integral


@dataclass(frozen=True)
class NormReport:
    theta: float
    l2_theta: float
    sigma_theta: float
    sup_theta: float
    energy_theta: float

    def __post_init__(self):
        for k in ("l2_theta", "sigma_theta", "sup_theta", "energy_theta"):
            if not getattr(self, k) >= 0:
                raise ValueError(f"{k} must be nonnegative")


def norm_report(f: Field, theta: float, sigma_integral: float = 0.0) -> NormReport:
    """Snapshot norms; ``sigma_integral`` is the accumulated time integral of the sigma norm squared."""
    l2 = norm_l2_weighted(f, theta)
    return NormReport(theta, l2, norm_sigma_weighted(f, theta), norm_sup_weighted(f, theta),
                      0.5 * l2 * l2 + sigma_integral)
