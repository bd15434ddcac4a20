"""Macroscopic projection onto the collision invariants and the velocity projector P_v."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .phase_space import Field, PhaseGrid


def project_Pv(v, g) -> np.ndarray:
    """Component of ``g`` along ``v``."""
    v = np.asarray(v, dtype=float)
    g = np.asarray(g, dtype=float)
    n2 = float(v @ v)
    if n2 == 0.0:
        raise ValueError("P_v is undefined at v = 0")
    return (g @ v) / n2 * v


def basis(grid: PhaseGrid) -> np.ndarray:
    """sqrt(mu) * {1, v1, v2, v3, (|v|^2 - 3)/2}, shape (5, nv, nv, nv)."""
    v = grid.v
    r2 = np.sum(v ** 2, axis=0)
    sq = np.exp(-0.5 * r2)
    return np.stack([sq, v[0] * sq, v[1] * sq, v[2] * sq, 0.5 * (r2 - 3.0) * sq])


@lru_cache(maxsize=8)
def _gram(nv: int, rv: float):
    grid = PhaseGrid(nx=1, nv=nv, rv=rv)
    B = basis(grid).reshape(5, -1)
    G = B @ B.T * grid.cell_volume
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e12:
        raise np.linalg.LinAlgError(f"collision-invariant Gram matrix is singular (cond={cond:.3g})")
    Ginv = np.linalg.inv(G)
    G.setflags(write=False)
    Ginv.setflags(write=False)
    return G, Ginv, float(cond)


def gram_matrix(grid: PhaseGrid):
    """(Gram matrix, its inverse, condition number) of the discrete basis."""
    return _gram(grid.nv, float(grid.rv))


@dataclass(frozen=True, eq=False)
class MacroCoefficients:
    a: np.ndarray
    b: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"macro coefficient {name} is not finite")
        if self.b.shape != (3,) + self.a.shape or self.c.shape != self.a.shape:
            raise ValueError("inconsistent macro coefficient shapes")

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.a[None], self.b, self.c[None]])


def _coeffs(grid: PhaseGrid, data: np.ndarray) -> np.ndarray:
    _, Ginv, _ = gram_matrix(grid)
    B = basis(grid)
    moments = np.tensordot(data, B, axes=([-3, -2, -1], [1, 2, 3])) * grid.cell_volume
    return np.moveaxis(moments @ Ginv.T, -1, 0)


def macro_coefficients(f: Field) -> MacroCoefficients:
    """Coefficients (a, b, c) of the L^2_v orthogonal projection at every x-node."""
    k = _coeffs(f.grid, f.data)
    return MacroCoefficients(k[0], k[1:4], k[4])


def project_array(grid: PhaseGrid, data: np.ndarray) -> np.ndarray:
    k = _coeffs(grid, data)
    return np.tensordot(np.moveaxis(k, 0, -1), basis(grid), axes=([-1], [0]))


def apply_P(f: Field) -> Field:
    return Field(f.grid, project_array(f.grid, f.data))


def apply_IminusP(f: Field) -> Field:
    return Field(f.grid, f.data - project_array(f.grid, f.data))
