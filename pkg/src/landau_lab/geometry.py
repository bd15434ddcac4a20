"""Kinetic scaling geometry: cylinders, the Galilean group law, the kinetic gauge,
the anisotropic change of frame and oscillation / Hoelder diagnostics.

Points are triples ``(t, x, v)`` with ``x`` and ``v`` 3-vectors; vectorized
helpers accept arrays with a leading sample axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel

TWO_PI = 2.0 * np.pi


def _split(z):
    t, x, v = z
    return float(t), np.asarray(x, dtype=float), np.asarray(v, dtype=float)


def torus_delta(dx: np.ndarray) -> np.ndarray:
    """Representative of a displacement on the 2 pi torus, in [-pi, pi)."""
    return (np.asarray(dx, dtype=float) + np.pi) % TWO_PI - np.pi


@dataclass(frozen=True)
class KineticCylinder:
    t0: float
    x0: tuple
    v0: tuple
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("cylinder radius must be positive")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        object.__setattr__(self, "v0", tuple(float(c) for c in self.v0))

    def scaled(self, factor: float) -> "KineticCylinder":
        return KineticCylinder(self.t0, self.x0, self.v0, self.R * factor)


def cylinder_contains(Q: KineticCylinder, z, torus: bool = True) -> bool:
    """(t0 - R^2, t0] x B(x0, R^3) x B(v0, R), x measured on the torus by default."""
    t, x, v = _split(z)
    dx = x - np.array(Q.x0)
    if torus:
        dx = torus_delta(dx)
    return bool(Q.t0 - Q.R ** 2 < t <= Q.t0
                and np.linalg.norm(dx) < Q.R ** 3
                and np.linalg.norm(v - np.array(Q.v0)) < Q.R)


def cylinder_contains_many(Q: KineticCylinder, t, x, v, torus: bool = False) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    dx = np.asarray(x, dtype=float) - np.array(Q.x0)
    if torus:
        dx = torus_delta(dx)
    dv = np.asarray(v, dtype=float) - np.array(Q.v0)
    return ((Q.t0 - Q.R ** 2 < t) & (t <= Q.t0)
            & (np.linalg.norm(dx, axis=-1) < Q.R ** 3)
            & (np.linalg.norm(dv, axis=-1) < Q.R))


def group_inverse_compose(zeta, z):
    """(tau, xi, nu)^{-1} o (t, x, v) = (t - tau, x - xi + (t - tau) nu, v - nu)."""
    tau, xi, nu = _split(zeta)
    t, x, v = _split(z)
    return (t - tau, x - xi + (t - tau) * nu, v - nu)


def kinetic_distance_many(t, x, v, backend=None) -> np.ndarray:
    """Vectorized gauge: unique rho > 0 with t^2/rho^4 + |x|^2/rho^6 + |v|^2/rho^2 = 1."""
    t2 = np.asarray(t, dtype=float) ** 2
    x2 = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
    v2 = np.sum(np.asarray(v, dtype=float) ** 2, axis=-1)
    t2, x2, v2 = np.broadcast_arrays(t2, x2, v2)
    shape = t2.shape
    rho = _accel.kinetic_gauge(t2.ravel(), x2.ravel(), v2.ravel(), backend)
    return rho.reshape(shape)


def kinetic_distance(z, backend=None) -> float:
    """Kinetic gauge of a single point; the origin maps to 0."""
    t, x, v = _split(z)
    return float(kinetic_distance_many(np.array([t]), x[None], v[None], backend)[0])


def gauge_residual(z, rho: float) -> float:
    t, x, v = _split(z)
    if rho == 0:
        return 0.0
    return t * t / rho ** 4 + float(x @ x) / rho ** 6 + float(v @ v) / rho ** 2 - 1.0


# ---------------------------------------------------------------------------
# anisotropic frame centred on a moving point

def _rotation_to(v0: np.ndarray) -> np.ndarray:
    """Orthonormal O whose first column is v0/|v0| (Householder reflection)."""
    e = v0 / np.linalg.norm(v0)
    e1 = np.array([1.0, 0.0, 0.0])
    u = e1 - e
    nu = np.linalg.norm(u)
    if nu < 1e-14:
        return np.eye(3)
    u /= nu
    return np.eye(3) - 2.0 * np.outer(u, u)


@dataclass(frozen=True)
class FrameChange:
    t0: float
    x0: tuple
    v0: tuple
    m: float = 10.0

    def __post_init__(self):
        v0 = np.asarray(self.v0, dtype=float)
        if np.linalg.norm(v0) < 0.5:
            raise ValueError("the frame change needs |v0| >= 1/2")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        object.__setattr__(self, "v0", tuple(float(c) for c in v0))

    @property
    def O(self) -> np.ndarray:
        return _rotation_to(np.array(self.v0))

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v0))

    @property
    def D(self) -> np.ndarray:
        s = 1.0 + self.speed
        return np.diag([s ** -1.5, s ** -0.5, s ** -0.5])

    @property
    def N(self) -> int:
        """Shell index with N - 1/2 <= |v0| <= N + 1/2."""
        return max(1, int(np.floor(self.speed + 0.5)))

    def radii(self):
        """(r0, r1, r2) = (2+N)^{-m}, (2+N)^{-2m/3+5/6}, (2+N)^{-4m/9+13/18}."""
        b = 2.0 + self.N
        m = self.m
        return b ** (-m), b ** (-2 * m / 3 + 5 / 6), b ** (-4 * m / 9 + 13 / 18)


def frame_map(fc: FrameChange, z):
    """(t, x, v) -> (t, D^{-1} O^T (x - v0 (t - t0)), D^{-1} O^T (v - v0))."""
    t, x, v = _split(z)
    T, X, V = frame_map_many(fc, np.array([t]), x[None], v[None])
    return float(T[0]), X[0], V[0]


def frame_map_many(fc: FrameChange, t, x, v):
    A = np.linalg.inv(fc.D) @ fc.O.T
    v0 = np.array(fc.v0)
    t = np.asarray(t, dtype=float)
    X = (np.asarray(x, dtype=float) - v0 * (t - fc.t0)[..., None]) @ A.T
    V = (np.asarray(v, dtype=float) - v0) @ A.T
    return t, X, V


def frame_map_inverse(fc: FrameChange, Z):
    t, X, V = _split(Z)
    B = fc.O @ fc.D
    v0 = np.array(fc.v0)
    return t, B @ X + v0 * (t - fc.t0), B @ V + v0


def frame_offsets(fc: FrameChange, dt, dx, dv):
    """Image of a point given by its offsets from the centre, relative to the image of the centre.

    Equivalent to ``frame_map(z) - frame_map(z0)`` but computed without forming
    large absolute coordinates, so tiny cylinders are resolved exactly.
    """
    A = np.linalg.inv(fc.D) @ fc.O.T
    v0 = np.array(fc.v0)
    dx = np.asarray(dx, dtype=float)
    dv = np.asarray(dv, dtype=float)
    dt = np.asarray(dt, dtype=float)
    return dt, (dx - v0 * dt[..., None]) @ A.T, dv @ A.T


def sample_cylinder(Q: KineticCylinder, n: int, rng: np.random.Generator):
    """Uniform offsets (dt, dx, dv) of ``n`` points inside Q (open balls, half-open time)."""
    def ball(radius):
        d = rng.standard_normal((n, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return d * radius * rng.uniform(0, 1, (n, 1)) ** (1 / 3)
    dt = -rng.uniform(0.0, 1.0, n) * Q.R ** 2
    dt = np.where(dt <= -Q.R ** 2, 0.0, dt)
    return dt, ball(Q.R ** 3), ball(Q.R)


def containment_violations(fc: FrameChange, n: int = 500, seed: int = 0):
    """Sampled check of both inclusions of the frame-change lemma.

    Forward: offsets inside Q_{r0} around (t0, x0, v0) must land in Q_{r1}
    around the image centre with zero velocity. Backward: offsets inside
    Q_{128 r1} in the new frame must map back into Q_{128 r2} around the
    original centre. Returns the two violation counts.
    """
    rng = np.random.default_rng(seed)
    r0, r1, r2 = fc.radii()
    Q0 = KineticCylinder(0.0, (0, 0, 0), (0, 0, 0), r0)
    dt, dx, dv = sample_cylinder(Q0, n, rng)
    T, X, V = frame_offsets(fc, dt, dx, dv)
    fwd = int(np.sum(~cylinder_contains_many(KineticCylinder(0.0, (0, 0, 0), (0, 0, 0), r1), T, X, V)))
    Q1 = KineticCylinder(0.0, (0, 0, 0), (0, 0, 0), 128 * r1)
    dT, dX, dV = sample_cylinder(Q1, n, rng)
    B = fc.O @ fc.D
    v0 = np.array(fc.v0)
    dv_back = dV @ B.T
    dx_back = dX @ B.T + v0 * dT[:, None]
    bwd = int(np.sum(~cylinder_contains_many(KineticCylinder(0.0, (0, 0, 0), (0, 0, 0), 128 * r2),
                                              dT, dx_back, dv_back)))
    return fwd, bwd


# ---------------------------------------------------------------------------
# diagnostics on sampled data

def _node_mask(grid, Q: KineticCylinder, t: float):
    if not (Q.t0 - Q.R ** 2 < t <= Q.t0):
        return None
    xs = grid.x.reshape(grid.dim_x, -1).T
    x0 = np.array(Q.x0)[: grid.dim_x]
    dx = torus_delta(xs - x0)
    xin = np.linalg.norm(dx, axis=1) < Q.R ** 3
    vs = grid.v.reshape(3, -1).T
    vin = np.linalg.norm(vs - np.array(Q.v0), axis=1) < Q.R
    return xin[:, None] & vin[None, :]


def oscillation(data, Q: KineticCylinder) -> float:
    """sup - inf over sampled nodes inside Q.

    ``data`` is a Field (taken at time Q.t0) or a trajectory with ``times`` and
    ``snapshots``. Only the first ``dim_x`` spatial coordinates of the centre are
    used on reduced grids.
    """
    if hasattr(data, "times"):
        pairs = list(zip(data.times, data.snapshots))
    else:
        pairs = [(Q.t0, data)]
    lo, hi = np.inf, -np.inf
    for t, f in pairs:
        mask = _node_mask(f.grid, Q, t)
        if mask is None:
            continue
        vals = f.data.reshape(mask.shape)[mask]
        if vals.size:
            lo = min(lo, float(vals.min()))
            hi = max(hi, float(vals.max()))
    if lo == np.inf:
        raise ValueError("cylinder contains no sampled nodes")
    return hi - lo


def holder_quotient(f, z1, z2, alpha: float = 1.0 / 3.0, convention: str = "alpha") -> float:
    """|f(z1) - f(z2)| / |||z2^{-1} o z1|||^beta with beta = alpha or 3 alpha.

    ``f`` is a callable of (t, x, v).
    """
    if convention not in ("alpha", "3alpha"):
        raise ValueError("convention must be 'alpha' or '3alpha'")
    g = group_inverse_compose(z2, z1)
    d = kinetic_distance(g)
    if d == 0.0:
        raise ValueError("coincident points")
    beta = alpha if convention == "alpha" else 3 * alpha
    return abs(f(*z1) - f(*z2)) / d ** beta


def holder_seminorm_sampled(traj, alpha: float = 1.0 / 3.0, n_pairs: int = 4000, seed: int = 0,
                            x_axis: int = 0):
    """Decade-stratified max of Hoelder quotients over random node pairs of a trajectory.

    Returns ``{decade: (max_alpha, max_3alpha)}`` keyed by floor(log10 distance).
    """
    rng = np.random.default_rng(seed)
    grid = traj.grid
    times = np.asarray(traj.times)
    nS = len(times)
    flat = np.stack([s.data.reshape(-1) for s in traj.snapshots])
    nv3 = grid.nv ** 3
    xs = grid.x.reshape(grid.dim_x, -1).T
    vs = grid.v.reshape(3, -1).T
    i = rng.integers(0, flat.shape[1], size=(n_pairs, 2))
    s = rng.integers(0, nS, size=(n_pairs, 2))
    same = (i[:, 0] == i[:, 1]) & (s[:, 0] == s[:, 1])
    i, s = i[~same], s[~same]
    xi, vi = np.divmod(i, nv3)
    x3 = np.zeros((len(i), 2, 3))
    x3[..., :grid.dim_x] = xs[xi]
    dt = times[s[:, 0]] - times[s[:, 1]]
    dx = torus_delta(x3[:, 0] - x3[:, 1]) + dt[:, None] * vs[vi[:, 1]]
    dv = vs[vi[:, 0]] - vs[vi[:, 1]]
    d = kinetic_distance_many(dt, dx, dv)
    num = np.abs(flat[s[:, 0], i[:, 0]] - flat[s[:, 1], i[:, 1]])
    out = {}
    dec = np.floor(np.log10(d)).astype(int)
    for k in np.unique(dec):
        m = dec == k
        out[int(k)] = (float(np.max(num[m] / d[m] ** alpha)), float(np.max(num[m] / d[m] ** (3 * alpha))))
    return out
