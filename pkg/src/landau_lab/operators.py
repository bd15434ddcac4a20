"""Linearized Landau operators acting on perturbation fields.

Two discretizations live side by side.

* The *flux* family (``apply_A``, ``apply_K``, ``apply_L``, ``apply_Gamma``)
  writes every operator as ``mu^{-1/2} D^T(flux)`` with ``psi = f / sqrt(mu)``.
  The discrete L is then symmetric, positive semidefinite and annihilates the
  five collision invariants to round-off, so it is what the time stepper uses.
* The *pointwise* family (``apply_A_pointwise`` ... ``apply_Kbar_theta``)
  expands every product rule, with finite differences on ``f`` and spectral
  derivatives on convolutions. Term-by-term bookkeeping makes the algebraic
  rearrangements between the operators hold to round-off, and the weighted
  forms use analytic derivatives of the weight.
"""
from __future__ import annotations

import hashlib
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from . import kernel as kn
from . import stencils
from .phase_space import Field, PhaseGrid, weight_derivatives


class GridMismatch(ValueError):
    pass


@lru_cache(maxsize=8)
def _sigma_mu_cached(nv: int, rv: float) -> np.ndarray:
    grid = PhaseGrid(nx=1, nv=nv, rv=rv)
    mu = np.exp(-np.sum(grid.v ** 2, axis=0))
    out = kn.sigma_array(grid, mu)
    out.setflags(write=False)
    return out


def sigma_mu(grid: PhaseGrid) -> kn.SigmaField:
    """sigma = phi * mu, shared per velocity grid."""
    return kn.SigmaField(grid, _sigma_mu_cached(grid.nv, float(grid.rv)))


def _ddot(S: np.ndarray, H: np.ndarray) -> np.ndarray:
    """sigma^{ij} H_ij with sigma in 6-component storage and H dense (3, 3, ...)."""
    return (S[0] * H[0, 0] + S[1] * H[1, 1] + S[2] * H[2, 2]
            + 2.0 * (S[3] * H[0, 1] + S[4] * H[0, 2] + S[5] * H[1, 2]))


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _align(a: np.ndarray, like: np.ndarray) -> np.ndarray:
    """Insert singleton spatial axes so a component-first velocity array broadcasts against ``like``."""
    return a.reshape(a.shape[:1] + (1,) * (like.ndim - a.ndim) + a.shape[1:])


def _vtimes(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """v_j a as a (3, *a.shape) array, aligning v with the trailing velocity axes."""
    return v.reshape((3,) + (1,) * (a.ndim - 3) + v.shape[1:]) * a


class CoefficientSet:
    """Convolution coefficients generated by a perturbation g (arrays over the field shape).

    sig   = phi * (sqrt(mu) g)                      (6, ...)
    dsig  = d_i sig^{ij}                            (3, ...)
    X     = phi^{ij} * (sqrt(mu) d_i g)             (3, ...)  == dsig + sig v
    Y     = phi^{ij} * (v_i sqrt(mu) d_j g)         (...)     == v . X
    divX  = d_j X_j                                 (...)
    a     = a_g = -sig v - X                        (3, ...)
    """

    def __init__(self, grid: PhaseGrid, g: np.ndarray):
        v = grid.v
        u = np.exp(-0.5 * np.sum(v ** 2, axis=0)) * g
        sig, dsig = kn.sigma_and_divergence(grid, u)
        S = kn.SigmaField(grid, sig)
        sv = S.matvec(v)
        self.sig = sig
        self.dsig = dsig
        self.X = dsig + sv
        self.Y = _dot(v, self.X)
        self.divX = kn.contraction_array(grid, u) + kn.divergence_of_convolved_vector(grid, _vtimes(v, u))
        self.a = -sv - self.X


class OperatorContext:
    """Frozen coefficients for one (grid, g, theta) triple.

    ``g`` may be ``None`` (the linearized problem about the Maxwellian) or a
    Field on ``grid``. All cached tensors are derived lazily and never mutated.
    """

    def __init__(self, grid: PhaseGrid, g: Field | None = None, theta: float = 0.0,
                 backend=None):
        if g is not None and g.grid != grid:
            raise GridMismatch("coefficient field lives on a different grid")
        self.grid = grid
        self.g = g
        self.theta = float(theta)
        self.backend = backend
        v = grid.v
        r2 = np.sum(v ** 2, axis=0)
        self.mu = np.exp(-r2)
        self.sqmu = np.exp(-0.5 * r2)
        self.sigma = sigma_mu(grid)
        self.dsigma = -2.0 * self.sigma.matvec(v)  # d_i sigma^{ij}, exact for mu
        self.vsv = self.sigma.quad(v)
        self.dsigma_i = -2.0 * self.vsv + self.sigma.trace()  # d_i (sigma^{ij} v_j)

    @cached_property
    def key(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.grid, self.theta)).encode())
        if self.g is not None:
            h.update(np.ascontiguousarray(self.g.data).tobytes())
        return h.hexdigest()

    @cached_property
    def coeff(self) -> CoefficientSet | None:
        if self.g is None:
            return None
        return CoefficientSet(self.grid, self.g.data)

    @cached_property
    def g_sup(self) -> float:
        return 0.0 if self.g is None else float(np.max(np.abs(self.g.data)))

    @cached_property
    def sigma_G(self) -> kn.SigmaField:
        if self.coeff is None:
            return self.sigma
        return kn.SigmaField(self.grid, _align(self.sigma.data, self.coeff.sig) + self.coeff.sig)

    @cached_property
    def dsigma_G(self) -> np.ndarray:
        if self.coeff is None:
            return self.dsigma
        return _align(self.dsigma, self.coeff.dsig) + self.coeff.dsig

    @cached_property
    def drift(self) -> np.ndarray:
        if self.coeff is None:
            return np.zeros((3,) + self.grid.velocity_shape)
        return self.coeff.a

    @cached_property
    def weights(self):
        """(w, dw/w, d2w/w) for the context theta."""
        w, dw, d2w = weight_derivatives(self.grid, self.theta)
        return w, dw / w, d2w / w

    def check(self, f: Field):
        if f.grid != self.grid:
            raise GridMismatch("field and context grids differ")
        return f.data

    # -- flux family --------------------------------------------------------

    def _grad(self, a):
        return stencils.grad(a, self.grid.dv, self.backend)

    def _div(self, flux):
        return stencils.grad_adjoint(flux, self.grid.dv, self.backend)

    def A_flux(self, f: np.ndarray) -> np.ndarray:
        Dpsi = self._grad(f / self.sqmu)
        return -self._div(self.mu * self.sigma.matvec(Dpsi)) / self.sqmu

    def K_flux(self, f: np.ndarray) -> np.ndarray:
        Dpsi = self._grad(f / self.sqmu)
        conv = kn.convolve_vector(self.grid, self.mu * Dpsi)
        return self._div(self.mu * conv) / self.sqmu

    def L_flux(self, f: np.ndarray) -> np.ndarray:
        Dpsi = self._grad(f / self.sqmu)
        conv = kn.convolve_vector(self.grid, self.mu * Dpsi)
        return self._div(self.mu * (self.sigma.matvec(Dpsi) - conv)) / self.sqmu

    def Gamma_flux(self, g: np.ndarray, f: np.ndarray) -> np.ndarray:
        G = self.sqmu * g
        H = self.sqmu * f
        sig = kn.SigmaField(self.grid, kn.sigma_array(self.grid, G))
        conv = kn.convolve_vector(self.grid, self._grad(G))
        flux = sig.matvec(self._grad(H)) - conv * H
        return -self._div(flux) / self.sqmu

    def N_flux(self, f: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
        """-L f + Gamma(g, f): the full collision increment of the linear problem."""
        out = -self.L_flux(f)
        if g is not None:
            out += self.Gamma_flux(g, f)
        return out

    @cached_property
    def A_matrix(self) -> sp.csc_matrix:
        """Sparse matrix of :meth:`A_flux` on one velocity block."""
        n = self.grid.nv
        h = self.grid.dv
        d1 = sp.lil_matrix((n, n))
        for k in range(1, n - 1):
            d1[k, k - 1], d1[k, k + 1] = -0.5 / h, 0.5 / h
        d1[0, :3] = np.array([-3.0, 4.0, -1.0]) * 0.5 / h
        d1[n - 1, n - 3:] = np.array([1.0, -4.0, 3.0]) * 0.5 / h
        d1 = d1.tocsr()
        eye = sp.identity(n, format="csr")
        D = [sp.kron(sp.kron(d1, eye), eye), sp.kron(sp.kron(eye, d1), eye),
             sp.kron(sp.kron(eye, eye), d1)]
        M = sp.diags(1.0 / self.sqmu.ravel())
        DM = [(Da @ M).tocsr() for Da in D]
        S = self.sigma
        out = None
        for a in range(3):
            for b in range(3):
                Sab = sp.diags((self.mu * S.component(a, b)).ravel())
                term = DM[a].T @ Sab @ DM[b]
                out = term if out is None else out + term
        return (-out).tocsc()

    # -- pointwise family ---------------------------------------------------

    def hessian(self, f):
        return stencils.hessian(f, self.grid.dv, self.backend)

    def A_pw(self, f):
        d = self._grad(f)
        return (_ddot(self.sigma.data, self.hessian(f)) + _dot(self.dsigma, d)
                - self.vsv * f + self.dsigma_i * f)

    def K_pw(self, f):
        v = self.grid.v
        u = self.sqmu * f
        sig, dsig = kn.sigma_and_divergence(self.grid, u)
        vsv = kn.SigmaField(self.grid, sig).quad(v)
        div_vu = kn.divergence_of_convolved_vector(self.grid, _vtimes(v, u))
        return self.sqmu * (4.0 * vsv + 2.0 * _dot(v, dsig) - 2.0 * div_vu) + 8.0 * np.pi * self.mu * f

    def K1(self, f):
        """Nested form of K: B^i = phi^{ij} * (mu^{1/2}(d_j f + v_j f)), K1 = mu^{1/2}(2 v.B - d_i B^i).

        Inner derivatives are moved onto the kernel spectrally, and d_i B^i keeps
        the full contraction d_ij phi^{ij} * u instead of the -8 pi shortcut.
        """
        v = self.grid.v
        u = self.sqmu * f
        vu = _vtimes(v, u)
        sig, dsig = kn.sigma_and_divergence(self.grid, u)
        B = dsig + 2.0 * kn.SigmaField(self.grid, sig).matvec(v)
        divB = kn.contraction_array(self.grid, u) + 2.0 * kn.divergence_of_convolved_vector(self.grid, vu)
        return self.sqmu * (2.0 * _dot(v, B) - divB)

    def Gamma_pw(self, f, c: CoefficientSet):
        d = self._grad(f)
        v = self.grid.v
        sv = kn.SigmaField(self.grid, c.sig).matvec(v)
        return (_ddot(c.sig, self.hessian(f)) + _dot(c.dsig, d) - _dot(sv, d)
                - c.divX * f - _dot(c.X, d) + c.Y * f)

    def Abar(self, f):
        d = self._grad(f)
        return (_ddot(self.sigma_G.data, self.hessian(f)) + _dot(self.dsigma_G, d)
                + _dot(self.drift, d))

    def Jg(self, f):
        out = -self.vsv * f
        if self.coeff is not None:
            out = out - self.coeff.divX * f + self.coeff.Y * f
        return out

    def Kbar(self, f):
        return self.K_pw(f) + self.dsigma_i * f + self.Jg(f)

    def Abar_theta(self, h):
        _, dw, _ = self.weights
        return self.Abar(h) - 2.0 * self.sigma_G.quad(dw, self._grad(h))

    def Kbar_theta(self, f):
        w, dw, d2w = self.weights
        SG = self.sigma_G
        coef = (2.0 * SG.quad(dw) - _ddot(SG.data, d2w) - _dot(dw, self.dsigma_G)
                - _dot(dw, self.drift))
        return w * self.Kbar(f) + coef * (w * f)


# ---------------------------------------------------------------------------
# Field-level wrappers

def _wrap(ctx: OperatorContext, fn, f: Field) -> Field:
    return Field(ctx.grid, fn(ctx.check(f)))


def apply_A(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.A_flux, f)


def apply_K(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.K_flux, f)


def apply_L(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.L_flux, f)


def apply_Gamma(ctx: OperatorContext, g: Field, f: Field) -> Field:
    gd = ctx.check(g)
    return Field(ctx.grid, ctx.Gamma_flux(gd, ctx.check(f)))


def apply_A_pointwise(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.A_pw, f)


def apply_K_pointwise(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.K_pw, f)


def apply_Gamma_pointwise(ctx: OperatorContext, g: Field, f: Field) -> Field:
    c = ctx.coeff if (ctx.g is not None and g is ctx.g) else CoefficientSet(ctx.grid, ctx.check(g))
    return Field(ctx.grid, ctx.Gamma_pw(ctx.check(f), c))


def apply_Abar(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.Abar, f)


def apply_Kbar(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.Kbar, f)


def apply_Abar_theta(ctx: OperatorContext, h: Field) -> Field:
    return _wrap(ctx, ctx.Abar_theta, h)


def apply_Kbar_theta(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.Kbar_theta, f)


def apply_K1(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.K1, f)


def apply_Jg(ctx: OperatorContext, f: Field) -> Field:
    return _wrap(ctx, ctx.Jg, f)


def sp_decomposition_rhs(ctx: OperatorContext, f: Field) -> Field:
    """Right side of the second-order split used for the regularity theory.

    Returns ``sigma_G : D^2 f + d_i sigma_G^{ij} d_j f + a_g . grad f + K_1 f
    + d_i sigma^i f + J_g f``; by construction this equals ``Abar f + Kbar f``
    once ``K_1`` and the four-convolution ``K`` agree.
    """
    a = ctx.check(f)
    d = ctx._grad(a)
    out = (_ddot(ctx.sigma_G.data, ctx.hessian(a)) + _dot(ctx.dsigma_G, d) + _dot(ctx.drift, d)
           + ctx.K1(a) + ctx.dsigma_i * a + ctx.Jg(a))
    return Field(ctx.grid, out)
