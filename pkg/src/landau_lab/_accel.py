"""Hot inner loops, each with a numba kernel and a pure-numpy twin.

The backend is chosen per call: ``backend="numba"`` / ``"numpy"``, or ``None`` to
follow the ``LANDAU_NUMBA`` environment flag (default on; ``0`` disables).
Both paths are kept bit-compatible up to floating-point summation order and are
cross-checked in the test suite and in ``benchmarks/bench_kernels.py``.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def numba_enabled() -> bool:
    flag = os.environ.get("LANDAU_NUMBA", "1").strip().lower()
    return numba is not None and flag not in ("0", "false", "no", "off")


def _resolve(backend):
    if backend is None:
        return "numba" if numba_enabled() else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and numba is None:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# second-order first derivative along the last axis and its exact adjoint
# interior: centred; ends: one-sided (-3, 4, -1)/2h, exact on quadratics

@_njit
def _d_last_nb(f, h, out):
    B, n1, n2, n = f.shape
    c = 0.5 / h
    for b in range(B):
        for i in range(n1):
            for j in range(n2):
                out[b, i, j, 0] = c * (-3.0 * f[b, i, j, 0] + 4.0 * f[b, i, j, 1] - f[b, i, j, 2])
                for k in range(1, n - 1):
                    out[b, i, j, k] = c * (f[b, i, j, k + 1] - f[b, i, j, k - 1])
                out[b, i, j, n - 1] = c * (3.0 * f[b, i, j, n - 1] - 4.0 * f[b, i, j, n - 2]
                                           + f[b, i, j, n - 3])


@_njit
def _dT_last_nb(x, h, out):
    B, n1, n2, n = x.shape
    c = 0.5 / h
    for b in range(B):
        for i in range(n1):
            for j in range(n2):
                for k in range(n):
                    out[b, i, j, k] = 0.0
                for k in range(1, n - 1):
                    out[b, i, j, k - 1] -= c * x[b, i, j, k]
                    out[b, i, j, k + 1] += c * x[b, i, j, k]
                x0 = x[b, i, j, 0]
                out[b, i, j, 0] -= 3.0 * c * x0
                out[b, i, j, 1] += 4.0 * c * x0
                out[b, i, j, 2] -= c * x0
                xn = x[b, i, j, n - 1]
                out[b, i, j, n - 1] += 3.0 * c * xn
                out[b, i, j, n - 2] -= 4.0 * c * xn
                out[b, i, j, n - 3] += c * xn


def _d_last_np(f, h):
    out = np.empty_like(f)
    c = 0.5 / h
    out[..., 1:-1] = c * (f[..., 2:] - f[..., :-2])
    out[..., 0] = c * (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2])
    out[..., -1] = c * (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3])
    return out


def _dT_last_np(x, h):
    c = 0.5 / h
    out = np.zeros_like(x)
    inner = x[..., 1:-1]
    out[..., :-2] -= c * inner
    out[..., 2:] += c * inner
    x0, xn = x[..., 0], x[..., -1]
    out[..., 0] -= 3.0 * c * x0
    out[..., 1] += 4.0 * c * x0
    out[..., 2] -= c * x0
    out[..., -1] += 3.0 * c * xn
    out[..., -2] -= 4.0 * c * xn
    out[..., -3] += c * xn
    return out


def _as4d(a):
    return a.reshape((-1,) + a.shape[-3:])


def diff_axis(f: np.ndarray, h: float, axis: int, backend=None) -> np.ndarray:
    """First derivative along velocity axis ``axis`` (0, 1, 2 of the trailing three)."""
    be = _resolve(backend)
    ax = f.ndim - 3 + axis
    moved = np.moveaxis(f, ax, -1)
    if be == "numpy":
        res = _d_last_np(moved, h)
    else:
        src = np.ascontiguousarray(_as4d(moved))
        res = np.empty_like(src)
        _d_last_nb(src, h, res)
        res = res.reshape(moved.shape)
    return np.moveaxis(res, -1, ax)


def diff_axis_adjoint(x: np.ndarray, h: float, axis: int, backend=None) -> np.ndarray:
    """Transpose of :func:`diff_axis` with respect to the plain sum inner product."""
    be = _resolve(backend)
    ax = x.ndim - 3 + axis
    moved = np.moveaxis(x, ax, -1)
    if be == "numpy":
        res = _dT_last_np(moved, h)
    else:
        src = np.ascontiguousarray(_as4d(moved))
        res = np.empty_like(src)
        _dT_last_nb(src, h, res)
        res = res.reshape(moved.shape)
    return np.moveaxis(res, -1, ax)


# ---------------------------------------------------------------------------
# Selling decomposition of symmetric positive 3x3 matrices:
# D = sum_k rho_k e_k e_k^T with rho_k >= 0 and integer offsets e_k

_PAIRS = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], dtype=np.int64)
_COMPL = np.array([(2, 3), (1, 3), (1, 2), (0, 3), (0, 2), (0, 1)], dtype=np.int64)


@_njit
def _selling_nb(D, pairs, compl, maxiter, rho, off):
    N = D.shape[0]
    b = np.zeros((4, 3), dtype=np.int64)
    for n in range(N):
        for r in range(4):
            for c in range(3):
                b[r, c] = 0
        b[1, 0] = 1
        b[2, 1] = 1
        b[3, 2] = 1
        b[0, 0] = -1
        b[0, 1] = -1
        b[0, 2] = -1
        tol = 1e-14 * (D[n, 0, 0] + D[n, 1, 1] + D[n, 2, 2])
        for it in range(maxiter):
            hit = -1
            for p in range(6):
                i = pairs[p, 0]
                j = pairs[p, 1]
                s = 0.0
                for a in range(3):
                    for c in range(3):
                        s += b[i, a] * D[n, a, c] * b[j, c]
                if s > tol:
                    hit = p
                    break
            if hit < 0:
                break
            i = pairs[hit, 0]
            k = compl[hit, 0]
            m = compl[hit, 1]
            for a in range(3):
                b[k, a] += b[i, a]
                b[m, a] += b[i, a]
                b[i, a] = -b[i, a]
        for p in range(6):
            i = pairs[p, 0]
            j = pairs[p, 1]
            k = compl[p, 0]
            m = compl[p, 1]
            s = 0.0
            for a in range(3):
                for c in range(3):
                    s += b[i, a] * D[n, a, c] * b[j, c]
            rho[n, p] = max(-s, 0.0)
            off[n, p, 0] = b[k, 1] * b[m, 2] - b[k, 2] * b[m, 1]
            off[n, p, 1] = b[k, 2] * b[m, 0] - b[k, 0] * b[m, 2]
            off[n, p, 2] = b[k, 0] * b[m, 1] - b[k, 1] * b[m, 0]


def _selling_np(D, maxiter):
    N = D.shape[0]
    b = np.zeros((N, 4, 3), dtype=np.int64)
    b[:, 1, 0] = b[:, 2, 1] = b[:, 3, 2] = 1
    b[:, 0, :] = -1
    tol = 1e-14 * np.trace(D, axis1=1, axis2=2)
    I, J = _PAIRS[:, 0], _PAIRS[:, 1]
    for _ in range(maxiter):
        Db = np.einsum("nac,njc->nja", D, b)
        P = np.einsum("nia,nja->nij", b, Db)[:, I, J]
        pos = P > tol[:, None]
        active = pos.any(axis=1)
        if not active.any():
            break
        first = np.argmax(pos, axis=1)
        for p in range(6):
            sel = active & (first == p)
            if not sel.any():
                continue
            i = _PAIRS[p, 0]
            k, m = _COMPL[p]
            bi = b[sel, i, :].copy()
            b[sel, k, :] += bi
            b[sel, m, :] += bi
            b[sel, i, :] = -bi
    Db = np.einsum("nac,njc->nja", D, b)
    P = np.einsum("nia,nja->nij", b, Db)[:, I, J]
    rho = np.maximum(-P, 0.0)
    off = np.cross(b[:, _COMPL[:, 0], :], b[:, _COMPL[:, 1], :])
    return rho, off.astype(np.int64)


def selling_decompose(D: np.ndarray, backend=None, maxiter: int = 500):
    """Decompose each matrix of ``D`` (shape (N, 3, 3)) into six rank-one terms.

    Returns ``rho`` (N, 6) and integer ``offsets`` (N, 6, 3) such that
    ``D[n] == sum_k rho[n, k] * outer(offsets[n, k], offsets[n, k])``.
    """
    D = np.ascontiguousarray(D, dtype=float)
    if _resolve(backend) == "numpy":
        return _selling_np(D, maxiter)
    rho = np.empty((D.shape[0], 6))
    off = np.empty((D.shape[0], 6, 3), dtype=np.int64)
    _selling_nb(D, _PAIRS, _COMPL, maxiter, rho, off)
    return rho, off


# ---------------------------------------------------------------------------
# monotone periodic shift with linear interpolation: out[i] = f(x_i - s_i dx)

@_njit
def _shift_nb(f, s, out):
    nx, M = f.shape
    for m in range(M):
        fl = np.floor(s[m])
        n = int(fl)
        th = s[m] - fl
        for i in range(nx):
            a = (i - n) % nx
            c = (i - n - 1) % nx
            out[i, m] = (1.0 - th) * f[a, m] + th * f[c, m]


def _shift_np(f, s):
    nx = f.shape[0]
    fl = np.floor(s)
    n = fl.astype(np.int64)
    th = s - fl
    i = np.arange(nx)[:, None]
    a = (i - n[None, :]) % nx
    c = (i - n[None, :] - 1) % nx
    cols = np.arange(f.shape[1])[None, :]
    return (1.0 - th) * f[a, cols] + th * f[c, cols]


def periodic_shift(f: np.ndarray, cells: np.ndarray, backend=None) -> np.ndarray:
    """Shift columns of ``f`` (shape (nx, M)) by ``cells`` (shape (M,)) grid cells."""
    f = np.ascontiguousarray(f, dtype=float)
    cells = np.ascontiguousarray(cells, dtype=float)
    if _resolve(backend) == "numpy":
        return _shift_np(f, cells)
    out = np.empty_like(f)
    _shift_nb(f, cells, out)
    return out


# ---------------------------------------------------------------------------
# kinetic gauge: unique rho > 0 with t^2/rho^4 + |x|^2/rho^6 + |v|^2/rho^2 = 1

@_njit
def _gauge_nb(t2, x2, v2, iters, out):
    for n in range(t2.shape[0]):
        m = max(np.sqrt(np.sqrt(t2[n])), x2[n] ** (1.0 / 6.0), np.sqrt(v2[n]))
        if m == 0.0:
            out[n] = 0.0
            continue
        lo = m
        hi = np.sqrt(3.0) * m
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            r2 = mid * mid
            val = t2[n] / (r2 * r2) + x2[n] / (r2 * r2 * r2) + v2[n] / r2
            if val > 1.0:
                lo = mid
            else:
                hi = mid
        out[n] = 0.5 * (lo + hi)


def _gauge_np(t2, x2, v2, iters):
    m = np.maximum.reduce([np.sqrt(np.sqrt(t2)), x2 ** (1.0 / 6.0), np.sqrt(v2)])
    zero = m == 0.0
    m = np.where(zero, 1.0, m)
    lo, hi = m.copy(), np.sqrt(3.0) * m
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        r2 = mid * mid
        val = t2 / (r2 * r2) + x2 / (r2 * r2 * r2) + v2 / r2
        big = val > 1.0
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
    return np.where(zero, 0.0, 0.5 * (lo + hi))


def kinetic_gauge(t2: np.ndarray, x2: np.ndarray, v2: np.ndarray, backend=None,
                  iters: int = 80) -> np.ndarray:
    """Bisection for the kinetic gauge given squared components (1-D arrays)."""
    t2 = np.ascontiguousarray(t2, dtype=float)
    x2 = np.ascontiguousarray(x2, dtype=float)
    v2 = np.ascontiguousarray(v2, dtype=float)
    if _resolve(backend) == "numpy":
        return _gauge_np(t2, x2, v2, iters)
    out = np.empty_like(t2)
    _gauge_nb(t2, x2, v2, iters, out)
    return out
