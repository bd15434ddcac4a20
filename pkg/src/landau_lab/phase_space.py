"""Discretized phase space: periodic box in x times a truncated velocity cube.

Spatial nodes sit on ``[-pi, pi)`` with spacing ``2 pi / nx``; velocity nodes are
cell centres of ``[-rv, rv]^3`` so that ``v = 0`` is never a node and the grid is
symmetric under ``v -> -v``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

DEFAULT_RV = 5.5


@dataclass(frozen=True)
class PhaseGrid:
    nx: int = 16
    nv: int = 24
    rv: float = DEFAULT_RV
    dim_x: int = 1

    def __post_init__(self):
        if self.nx < 1 or self.nv < 4:
            raise ValueError(f"grid too small: nx={self.nx}, nv={self.nv}")
        if self.dim_x not in (1, 2, 3):
            raise ValueError(f"dim_x must be 1, 2 or 3, got {self.dim_x}")
        if not self.rv > 0:
            raise ValueError(f"rv must be positive, got {self.rv}")

    @property
    def dx(self) -> float:
        return 2 * np.pi / self.nx

    @property
    def dv(self) -> float:
        return 2 * self.rv / self.nv

    @property
    def cell_volume(self) -> float:
        """Velocity quadrature weight (midpoint rule)."""
        return self.dv ** 3

    @property
    def x_volume(self) -> float:
        return self.dx ** self.dim_x

    @property
    def spatial_shape(self) -> tuple[int, ...]:
        return (self.nx,) * self.dim_x

    @property
    def velocity_shape(self) -> tuple[int, int, int]:
        return (self.nv,) * 3

    @property
    def shape(self) -> tuple[int, ...]:
        return self.spatial_shape + self.velocity_shape

    @cached_property
    def x_axis(self) -> np.ndarray:
        return -np.pi + self.dx * np.arange(self.nx)

    @cached_property
    def v_axis(self) -> np.ndarray:
        return -self.rv + self.dv * (np.arange(self.nv) + 0.5)

    @cached_property
    def v(self) -> np.ndarray:
        """Velocity nodes, shape (3, nv, nv, nv)."""
        a = self.v_axis
        out = np.stack(np.meshgrid(a, a, a, indexing="ij"))
        out.setflags(write=False)
        return out

    @cached_property
    def speed(self) -> np.ndarray:
        out = np.sqrt(np.sum(self.v ** 2, axis=0))
        out.setflags(write=False)
        return out

    @cached_property
    def x(self) -> np.ndarray:
        """Spatial nodes, shape (dim_x, nx, ..., nx)."""
        a = self.x_axis
        out = np.stack(np.meshgrid(*([a] * self.dim_x), indexing="ij"))
        out.setflags(write=False)
        return out

    def integrate(self, data: np.ndarray) -> float:
        """Midpoint quadrature over the full phase space."""
        return float(np.sum(data) * self.x_volume * self.cell_volume)

    def integrate_v(self, data: np.ndarray) -> np.ndarray:
        """Quadrature over the three trailing velocity axes."""
        return np.sum(data, axis=(-3, -2, -1)) * self.cell_volume


def _check_finite(data: np.ndarray, what: str):
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass(frozen=True, eq=False)
class VelocityProfile:
    grid: PhaseGrid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.shape != self.grid.velocity_shape:
            raise ValueError(f"profile shape {arr.shape} != {self.grid.velocity_shape}")
        _check_finite(arr, "profile")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __mul__(self, other):
        if isinstance(other, VelocityProfile):
            return VelocityProfile(self.grid, self.data * other.data)
        return VelocityProfile(self.grid, self.data * other)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Field:
    """Sampled perturbation f(x, v); data has shape ``grid.shape``."""

    grid: PhaseGrid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.shape != self.grid.shape:
            raise ValueError(f"field shape {arr.shape} != grid shape {self.grid.shape}")
        _check_finite(arr, "field")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, grid: PhaseGrid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    def _same_grid(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "Field") -> "Field":
        self._same_grid(other)
        return Field(self.grid, self.data + other.data)

    def __sub__(self, other: "Field") -> "Field":
        self._same_grid(other)
        return Field(self.grid, self.data - other.data)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.data)

    def __mul__(self, other) -> "Field":
        if isinstance(other, VelocityProfile):
            return Field(self.grid, self.data * other.data)
        return Field(self.grid, self.data * float(other))

    __rmul__ = __mul__


def maxwellian(grid: PhaseGrid) -> VelocityProfile:
    """mu(v) = exp(-|v|^2) at every velocity node."""
    return VelocityProfile(grid, np.exp(-np.sum(grid.v ** 2, axis=0)))


def weight(grid: PhaseGrid, theta: float) -> VelocityProfile:
    """Polynomial weight (1 + |v|)^theta."""
    return VelocityProfile(grid, (1.0 + grid.speed) ** theta)


def weight_derivatives(grid: PhaseGrid, theta: float):
    """Analytic first and second velocity derivatives of w^theta.

    Returns ``(w, dw, d2w)`` with shapes (nv,)*3, (3, ...) and (3, 3, ...).
    Cell-centred nodes keep |v| > 0, so the formulas are evaluated directly.
    """
    r = grid.speed
    v = grid.v
    base = 1.0 + r
    w = base ** theta
    unit = v / r
    dw = theta * base ** (theta - 1) * unit
    eye = np.eye(3)[:, :, None, None, None]
    outer = unit[:, None] * unit[None, :]
    d2w = (theta * (theta - 1) * base ** (theta - 2) * outer
           + theta * base ** (theta - 1) * (eye - outer) / r)
    return w, dw, d2w


def lift(grid: PhaseGrid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Field:
    """Sample ``fn(x, v)`` at every node.

    ``x`` has shape (dim_x, *spatial, 1, 1, 1) and ``v`` has shape
    (3, 1, ..., 1, nv, nv, nv), so ordinary numpy broadcasting yields the full
    field; x-independent callables may return a velocity-shaped array.
    """
    ones_v = (1, 1, 1)
    x = grid.x.reshape(grid.x.shape + ones_v)
    v = grid.v.reshape((3,) + (1,) * grid.dim_x + grid.velocity_shape)
    vals = np.asarray(fn(x, v), dtype=float)
    return Field(grid, np.broadcast_to(vals, grid.shape))
