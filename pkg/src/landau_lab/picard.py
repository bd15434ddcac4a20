"""Outer Picard iteration for the nonlinear problem.

Iterate ``n + 1`` solves the linear problem whose coefficient is iterate ``n``
sampled at the start of every step. Because the coefficient on step ``k`` only
involves earlier times, the map is of Volterra type and the differences between
consecutive iterates shrink like ``(C t)^n / n!``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import stencils
from .evolution import StepperConfig, Trajectory, moments, run_linear
from .norms import norm_l2_weighted, norm_sup_weighted
from .operators import OperatorContext
from .phase_space import Field

DEFAULT_THETA_BAR = -2.0
DEFAULT_EPS0 = 1e-2


class NonContractionError(RuntimeError):
    """Raised when consecutive Picard deltas grow three times in a row."""

    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


@dataclass
class IterationRecord:
    n: int
    delta_l2: np.ndarray = field(repr=False)
    theta_bar: float = DEFAULT_THETA_BAR
    converged: bool = False

    @property
    def delta(self) -> float:
        return float(np.max(self.delta_l2)) if self.delta_l2.size else 0.0


@dataclass(frozen=True)
class InitialDataReport:
    moments: tuple
    moments_ok: bool
    sup_theta: float
    dv_sup_theta: float
    ft_sup_theta: float
    small: bool
    finite: bool


def _x_derivative(grid, data: np.ndarray, axis: int) -> np.ndarray:
    k = np.fft.rfftfreq(grid.nx, 1.0 / grid.nx)
    if grid.nx % 2 == 0:
        k[-1] = 0.0
    shape = [1] * data.ndim
    shape[axis] = k.size
    h = np.fft.rfft(data, axis=axis)
    return np.fft.irfft(1j * k.reshape(shape) * h, n=grid.nx, axis=axis)


def verify_initial_data(f0: Field, theta: float = 0.0, eps0: float = DEFAULT_EPS0,
                        rel_tol: float = 1e-10) -> InitialDataReport:
    """Moment conditions plus the weighted sup norms of f0, D_v f0 and f0t.

    ``f0t = -v . grad_x f0 + Abar_{f0} f0``; the moments are judged against
    ``rel_tol`` times the plain L^2 norm of f0 (absolute when f0 = 0).
    """
    grid = f0.grid
    m = moments(grid, f0.data)
    scale = norm_l2_weighted(f0, 0.0)
    mom_ok = bool(np.all(np.abs(m) <= rel_tol * max(scale, 1e-300))) if scale > 0 else bool(np.all(m == 0))
    w = (1.0 + grid.speed) ** theta
    sup = norm_sup_weighted(f0, theta)
    dv = float(np.max(w * np.sqrt(np.sum(stencils.grad(f0.data, grid.dv) ** 2, axis=0))))
    ctx = OperatorContext(grid, f0)
    ft = ctx.Abar(f0.data)
    for a in range(grid.dim_x):
        ft = ft - grid.v[a] * _x_derivative(grid, f0.data, a)
    ft_sup = float(np.max(w * np.abs(ft)))
    vals = (sup, dv, ft_sup)
    return InitialDataReport(
        moments=(float(m[0]), (float(m[1]), float(m[2]), float(m[3])), float(m[4])),
        moments_ok=mom_ok,
        sup_theta=sup,
        dv_sup_theta=dv,
        ft_sup_theta=ft_sup,
        small=bool(sup <= eps0),
        finite=bool(np.all(np.isfinite(vals))),
    )


def _path(traj: Trajectory):
    return [s.data for s in traj.snapshots]


def picard_solve(f0: Field, config: StepperConfig, tol: float | None = None, max_iter: int = 20,
                 theta: float = 0.0, theta_bar: float = DEFAULT_THETA_BAR,
                 eps0: float = DEFAULT_EPS0, ctx: OperatorContext | None = None):
    """Run the iteration until max_t |f^(n+1) - f^(n)|_{2, theta_bar} < tol.

    Returns ``(trajectory, records)``; the trajectory stores every step.
    Raises ``ValueError`` when f0 is not small, and :class:`NonContractionError`
    when the delta grows three times in a row.
    """
    grid = f0.grid
    sup = norm_sup_weighted(f0, theta)
    if sup > eps0:
        raise ValueError(f"|f0|_inf,theta = {sup:.3g} exceeds eps0 = {eps0:.3g}")
    if tol is None:
        tol = 1e-8 * norm_l2_weighted(f0, theta_bar)
    ctx = ctx or OperatorContext(grid)
    n_steps = config.n_steps
    prev = [f0.data] * (n_steps + 1)  # f^(0)(t) = f0
    records: list[IterationRecord] = []
    traj = None
    growth = 0
    for n in range(1, max_iter + 1):
        path = prev
        traj = run_linear(f0, ctx, config, g_path=lambda k, p=path: p[k], theta=theta, keep_all=True)
        cur = _path(traj)
        delta = np.array([norm_l2_weighted(Field(grid, a - b), theta_bar) for a, b in zip(cur, prev)])
        rec = IterationRecord(n, delta, theta_bar)
        if records and rec.delta > records[-1].delta:
            growth += 1
        else:
            growth = 0
        rec.converged = bool(rec.delta < tol) or rec.delta == 0.0
        records.append(rec)
        if rec.converged:
            break
        if growth >= 3:
            raise NonContractionError(f"Picard deltas grew three times in a row (n={n})", records)
        prev = cur
    return traj, records


def fixed_point_defect(traj: Trajectory, config: StepperConfig, theta_bar: float = DEFAULT_THETA_BAR,
                       ctx: OperatorContext | None = None) -> float:
    """One more linear solve with g = the converged path; returns the max theta_bar-weighted change."""
    grid = traj.grid
    ctx = ctx or OperatorContext(grid)
    path = _path(traj)
    again = run_linear(traj.snapshots[0], ctx, config, g_path=lambda k: path[k], keep_all=True)
    return float(max(norm_l2_weighted(Field(grid, a.data - b), theta_bar)
                     for a, b in zip(again.snapshots, path)))
