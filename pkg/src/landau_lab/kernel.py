"""Coulomb kernel, its FFT convolution with velocity densities, and the derived fields.

Convolutions are linear (not circular): each velocity axis is zero-padded to
``2 nv`` and the kernel is tabulated on the integer offsets ``-nv .. nv-1``
in FFT wrap order. The origin cell holds the exact cell average of ``|v|^-1``
projected isotropically, which keeps the quadrature second order despite the
singularity. Derivatives of convolutions are taken spectrally on the padded box.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .phase_space import Field, PhaseGrid, VelocityProfile

# storage order of the six independent entries of a symmetric 3x3 matrix
SYM_INDEX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
_FULL_TO_SYM = np.array([[0, 3, 4], [3, 1, 5], [4, 5, 2]])

# integral of 1/|y| over the unit cube centred at the origin
UNIT_CELL_INV_R = 2.0 * (1.5 * np.log(2.0 + np.sqrt(3.0)) - np.pi / 4.0)


def fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("LANDAU_THREADS", "1")))
    except ValueError:
        return 1


def phi_matrix(v, reg: float = 0.0) -> np.ndarray:
    """Coulomb kernel (I - v v^T/|v|^2)/|v| with |v| floored at ``reg``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError("phi_matrix expects a 3-vector")
    if reg < 0:
        raise ValueError("reg must be nonnegative")
    r = float(np.linalg.norm(v))
    if r == 0.0:
        if reg == 0.0:
            raise ValueError("phi is singular at v = 0; pass reg > 0")
        return (2.0 / 3.0) * np.eye(3) / reg
    return (np.eye(3) - np.outer(v, v) / r ** 2) / max(r, reg)


class KernelTable:
    """Padded-spectrum tabulation of the six kernel entries for one velocity grid."""

    def __init__(self, nv: int, rv: float):
        self.nv = nv
        self.rv = rv
        self.dv = 2.0 * rv / nv
        n2 = 2 * nv
        self.padded = (n2, n2, n2)
        off = np.fft.fftfreq(n2, 1.0 / n2) * self.dv
        M = np.meshgrid(off, off, off, indexing="ij")
        r2 = M[0] ** 2 + M[1] ** 2 + M[2] ** 2
        r2[0, 0, 0] = 1.0
        r = np.sqrt(r2)
        phi = np.empty((6,) + self.padded)
        for c, (i, j) in enumerate(SYM_INDEX):
            phi[c] = ((i == j) - M[i] * M[j] / r2) / r
            phi[c, 0, 0, 0] = (2.0 / 3.0) * UNIT_CELL_INV_R / self.dv if i == j else 0.0
        # offset -nv is never reached by a linear convolution of nv points; clearing
        # those planes makes the table even, so its spectrum is real
        phi[:, nv, :, :] = 0.0
        phi[:, :, nv, :] = 0.0
        phi[:, :, :, nv] = 0.0
        spec = sfft.rfftn(phi, axes=(1, 2, 3)) * self.dv ** 3
        self.phi_hat = np.ascontiguousarray(spec.real)
        k = 2 * np.pi * np.fft.fftfreq(n2, self.dv)
        kr = 2 * np.pi * np.fft.rfftfreq(n2, self.dv)
        k[nv] = 0.0  # Nyquist mode carries no odd derivative
        kr[-1] = 0.0
        self.ik = (1j * k[:, None, None], 1j * k[None, :, None], 1j * kr[None, None, :])

    def forward(self, u: np.ndarray) -> np.ndarray:
        """Zero-padded real transform, pruned axis by axis (zero slabs are never transformed)."""
        n2 = self.padded[0]
        w = fft_workers()
        h = sfft.rfft(u, n=n2, axis=-1, workers=w)
        h = sfft.fft(h, n=n2, axis=-2, workers=w)
        return sfft.fft(h, n=n2, axis=-3, workers=w)

    def backward(self, uh: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`forward`, cropped to the physical block as early as possible."""
        n, n2 = self.nv, self.padded[0]
        w = fft_workers()
        x = sfft.ifft(uh, axis=-3, workers=w)[..., :n, :, :]
        x = sfft.ifft(x, axis=-2, workers=w)[..., :n, :]
        return np.ascontiguousarray(sfft.irfft(x, n=n2, axis=-1, workers=w)[..., :n])

    def entry(self, i: int, j: int) -> np.ndarray:
        return self.phi_hat[_FULL_TO_SYM[i, j]]


@lru_cache(maxsize=8)
def kernel_table(nv: int, rv: float) -> KernelTable:
    return KernelTable(nv, rv)


def _table(grid: PhaseGrid) -> KernelTable:
    return kernel_table(grid.nv, float(grid.rv))


def _raw(u, grid: PhaseGrid | None = None):
    if isinstance(u, (Field, VelocityProfile)):
        if grid is not None and u.grid.velocity_shape != grid.velocity_shape:
            raise ValueError("source and kernel grids differ")
        return u.grid, u.data
    raise TypeError("expected a Field or VelocityProfile")


@dataclass(frozen=True, eq=False)
class SigmaField:
    """Symmetric matrix per node; ``data`` has shape (6, *lead, nv, nv, nv)."""

    grid: PhaseGrid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.shape[0] != 6 or arr.shape[-3:] != self.grid.velocity_shape:
            raise ValueError(f"bad SigmaField shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    def component(self, i: int, j: int) -> np.ndarray:
        return self.data[_FULL_TO_SYM[i, j]]

    def full(self) -> np.ndarray:
        """Dense (3, 3, ...) view assembled from the stored upper triangle."""
        return self.data[_FULL_TO_SYM]

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        """sigma^{ij} vec_j at each node; ``vec`` has shape (3, ...) broadcastable."""
        d = self.data
        return np.stack([
            d[0] * vec[0] + d[3] * vec[1] + d[4] * vec[2],
            d[3] * vec[0] + d[1] * vec[1] + d[5] * vec[2],
            d[4] * vec[0] + d[5] * vec[1] + d[2] * vec[2],
        ])

    def quad(self, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
        """a_i sigma^{ij} b_j at each node."""
        b = a if b is None else b
        s = self.matvec(b)
        return a[0] * s[0] + a[1] * s[1] + a[2] * s[2]

    def trace(self) -> np.ndarray:
        return self.data[0] + self.data[1] + self.data[2]

    def __add__(self, other: "SigmaField") -> "SigmaField":
        return SigmaField(self.grid, self.data + other.data)

    def __mul__(self, s: float) -> "SigmaField":
        return SigmaField(self.grid, self.data * float(s))

    __rmul__ = __mul__

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues, shape (3, ...)."""
        m = np.moveaxis(self.full(), (0, 1), (-2, -1))
        return np.moveaxis(np.linalg.eigvalsh(m), -1, 0)


@dataclass(frozen=True, eq=False)
class DriftField:
    """Vector per node; ``data`` has shape (3, *lead, nv, nv, nv)."""

    grid: PhaseGrid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.shape[0] != 3 or arr.shape[-3:] != self.grid.velocity_shape:
            raise ValueError(f"bad DriftField shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("drift contains non-finite values")
        object.__setattr__(self, "data", arr)


# ---------------------------------------------------------------------------
# raw-array spectral primitives; leading axes are treated as a batch

def sigma_array(grid: PhaseGrid, u: np.ndarray) -> np.ndarray:
    """phi^{ij} * u for the six stored entries, shape (6, *u.shape)."""
    tab = _table(grid)
    uh = tab.forward(u)
    return np.stack([tab.backward(tab.phi_hat[c] * uh) for c in range(6)])


def sigma_and_divergence(grid: PhaseGrid, u: np.ndarray):
    """Return (phi * u, d_i (phi^{ij} * u)) from a single forward transform."""
    tab = _table(grid)
    uh = tab.forward(u)
    sig = np.stack([tab.backward(tab.phi_hat[c] * uh) for c in range(6)])
    div = np.stack([
        tab.backward(sum(tab.ik[i] * tab.entry(i, j) for i in range(3)) * uh)
        for j in range(3)
    ])
    return sig, div


def convolve_vector(grid: PhaseGrid, w: np.ndarray) -> np.ndarray:
    """(phi^{ij} * w_j) for a vector density ``w`` of shape (3, ...)."""
    tab = _table(grid)
    wh = [tab.forward(w[j]) for j in range(3)]
    return np.stack([
        tab.backward(sum(tab.entry(i, j) * wh[j] for j in range(3))) for i in range(3)
    ])


def divergence_of_convolved_vector(grid: PhaseGrid, w: np.ndarray) -> np.ndarray:
    """d_i (phi^{ij} * w_j), spectral derivative on the padded box."""
    tab = _table(grid)
    wh = [tab.forward(w[j]) for j in range(3)]
    acc = sum(tab.ik[i] * tab.entry(i, j) * wh[j] for i in range(3) for j in range(3))
    return tab.backward(acc)


def contraction_array(grid: PhaseGrid, u: np.ndarray) -> np.ndarray:
    """d_i d_j phi^{ij} * u; equals -8 pi u in the continuum."""
    tab = _table(grid)
    uh = tab.forward(u)
    acc = sum(tab.ik[i] * tab.ik[j] * tab.entry(i, j) for i in range(3) for j in range(3))
    return tab.backward(acc * uh)


def spectral_gradient(grid: PhaseGrid, sig: np.ndarray) -> np.ndarray:
    """Spectral first derivatives of already-convolved data, used for consistency tests."""
    tab = _table(grid)
    h = tab.forward(sig)
    return np.stack([tab.backward(tab.ik[a] * h) for a in range(3)])


# ---------------------------------------------------------------------------
# public operations

def convolve_sigma(u) -> SigmaField:
    """sigma_u = phi * u for a Field or VelocityProfile source."""
    grid, data = _raw(u)
    return SigmaField(grid, sigma_array(grid, data))


def sigma_divergence(u) -> np.ndarray:
    """Vector d_i sigma_u^{ij}, shape (3, ...)."""
    grid, data = _raw(u)
    return sigma_and_divergence(grid, data)[1]


def contraction(u) -> np.ndarray:
    grid, data = _raw(u)
    return contraction_array(grid, data)


def drift_a(g: Field) -> DriftField:
    """a_g = -2 sigma_{sqrt(mu) g} v - d_i sigma_{sqrt(mu) g}^{ij}."""
    grid = g.grid
    src = np.sqrt(np.exp(-np.sum(grid.v ** 2, axis=0))) * g.data
    sig, div = sigma_and_divergence(grid, src)
    S = SigmaField(grid, sig)
    return DriftField(grid, -2.0 * S.matvec(grid.v) - div)


def _node_matrix(sigma: SigmaField, node) -> np.ndarray:
    idx = tuple(node)
    return np.array([[sigma.component(i, j)[idx] for j in range(3)] for i in range(3)])


def quadratic_form_D(sigma: SigmaField, nu, node) -> float:
    """nu^T sigma nu at one node (index tuple into the non-component axes)."""
    nu = np.asarray(nu, dtype=float)
    return float(nu @ _node_matrix(sigma, node) @ nu)


def eigen_split(sigma: SigmaField, node, v=None):
    """Split the node matrix into the eigenpair most aligned with v and the rest.

    Returns ``(lambda_parallel, (lambda_perp_1, lambda_perp_2), basis)`` where
    ``basis`` columns are (parallel, perp_1, perp_2) eigenvectors. ``v``
    defaults to the velocity of the node.
    """
    node = tuple(node)
    if v is None:
        v = sigma.grid.v[(slice(None),) + node[-3:]]
    v = np.asarray(v, dtype=float)
    w, Q = np.linalg.eigh(_node_matrix(sigma, node))
    align = np.abs(Q.T @ v) / max(np.linalg.norm(v), 1e-300)
    p = int(np.argmax(align))
    rest = [k for k in range(3) if k != p]
    basis = Q[:, [p] + rest]
    return float(w[p]), (float(w[rest[0]]), float(w[rest[1]])), basis


def eigen_split_field(sigma: SigmaField):
    """Vectorized :func:`eigen_split` over every velocity node of an x-independent field.

    Returns arrays ``(lam_par, lam_perp (2, ...), cosine)`` where ``cosine`` is
    the alignment |e_par . v|/|v| of the selected parallel eigenvector.
    """
    grid = sigma.grid
    m = np.moveaxis(sigma.full(), (0, 1), (-2, -1))
    w, Q = np.linalg.eigh(m)
    vhat = np.moveaxis(grid.v / grid.speed, 0, -1)
    align = np.abs(np.einsum("...ik,...i->...k", Q, vhat))
    p = np.argmax(align, axis=-1)
    lam_par = np.take_along_axis(w, p[..., None], -1)[..., 0]
    cos = np.take_along_axis(align, p[..., None], -1)[..., 0]
    mask = np.ones_like(w, dtype=bool)
    np.put_along_axis(mask, p[..., None], False, -1)
    lam_perp = np.moveaxis(w[mask].reshape(w.shape[:-1] + (2,)), -1, 0)
    return lam_par, lam_perp, cos


def dense_sigma_oracle(grid: PhaseGrid, u: np.ndarray) -> np.ndarray:
    """O(N^2) direct summation with the same cell-averaged origin; for tests on small grids."""
    pts = grid.v.reshape(3, -1).T
    uu = u.reshape(-1)
    out = np.zeros((6, pts.shape[0]))
    diag_origin = (2.0 / 3.0) * UNIT_CELL_INV_R / grid.dv
    for n, p in enumerate(pts):
        d = p[None, :] - pts
        r2 = np.sum(d * d, axis=1)
        self_ = r2 == 0
        r2[self_] = 1.0
        r = np.sqrt(r2)
        for c, (i, j) in enumerate(SYM_INDEX):
            k = ((i == j) - d[:, i] * d[:, j] / r2) / r
            k[self_] = diag_origin if i == j else 0.0
            out[c, n] = np.dot(k, uu)
    return out.reshape((6,) + grid.velocity_shape) * grid.cell_volume
