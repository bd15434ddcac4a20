"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical kernels; each oracle is a
direct or semi-analytic evaluation of the quantity under test.
"""
import numpy as np
from scipy import integrate, optimize


def direct_sigma(v_axis, u, h):
    """Brute-force sigma_u = sum_w phi(v - w) u(w) h^3 on a small cell-centred grid.

    The origin cell uses the exact cell average of phi, i.e. (2/3) * <1/|v|> on
    the cube of side h times the identity, with <1/|v|> from nested quadrature.
    """
    pts = np.stack(np.meshgrid(v_axis, v_axis, v_axis, indexing="ij"), -1).reshape(-1, 3)
    uu = u.reshape(-1)
    avg_inv_r = cube_mean_inverse_radius(h)
    out = np.zeros((pts.shape[0], 3, 3))
    for n, p in enumerate(pts):
        d = p - pts
        r = np.linalg.norm(d, axis=1)
        m = r > 0
        dh = d[m] / r[m, None]
        k = (np.eye(3)[None] - dh[:, :, None] * dh[:, None, :]) / r[m, None, None]
        out[n] = np.einsum("kij,k->ij", k, uu[m]) * h ** 3
        out[n] += (2.0 / 3.0) * avg_inv_r * np.eye(3) * uu[~m].sum() * h ** 3
    return out.reshape(u.shape + (3, 3))


def cube_mean_inverse_radius(h):
    """Mean of 1/|v| over the cube [-h/2, h/2]^3 (8 x integral over the positive octant)."""
    a = h / 2
    val, _ = integrate.tplquad(lambda z, y, x: 1.0 / np.sqrt(x * x + y * y + z * z + 1e-300),
                               0, a, 0, a, 0, a, epsabs=1e-12, epsrel=1e-10)
    return 8 * val / h ** 3


def radial_potential(r, u_radial):
    """Phi(r) = int |v - w| u(|w|) dw for a radial source, by 1-D quadrature.

    Uses the shell average of |v - w| over |w| = s: ((r+s)^3 - |r-s|^3) / (3 r s).
    """
    def integrand(s):
        return 2 * np.pi * s * u_radial(s) * ((r + s) ** 3 - abs(r - s) ** 3) / (3 * r)
    val, _ = integrate.quad(integrand, 0, 12.0, points=[r], limit=200, epsabs=1e-14, epsrel=1e-13)
    return val


def maxwellian_sigma_eigs(r, h=1e-3):
    """Continuum eigenvalues of sigma_mu at speed r for mu = exp(-|v|^2).

    sigma = Hessian of Phi, so lambda_par = Phi''(r) and lambda_perp = Phi'(r)/r;
    derivatives by fourth-order central differences.
    """
    mu = lambda s: np.exp(-s * s)
    P = lambda x: radial_potential(x, mu)
    f = [P(r + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    return d2, d1 / r


def kinetic_gauge_brentq(t, x, v):
    """Root of t^2/rho^4 + |x|^2/rho^6 + |v|^2/rho^2 = 1 by Brent's method."""
    t2, x2, v2 = t * t, float(np.dot(x, x)), float(np.dot(v, v))
    if t2 + x2 + v2 == 0:
        return 0.0
    F = lambda rho: t2 / rho ** 4 + x2 / rho ** 6 + v2 / rho ** 2 - 1.0
    hi = 1.0
    while F(hi) > 0:
        hi *= 2
    lo = hi / 2
    while F(lo) < 0:
        lo /= 2
    return optimize.brentq(F, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def lstsq_projection(v_axis, f):
    """Orthogonal projection of f(v) onto span{sqrt(mu), v sqrt(mu), |v|^2 sqrt(mu)} by least squares."""
    V = np.stack(np.meshgrid(v_axis, v_axis, v_axis, indexing="ij"))
    r2 = np.sum(V ** 2, axis=0)
    sq = np.exp(-0.5 * r2)
    B = np.stack([sq, V[0] * sq, V[1] * sq, V[2] * sq, r2 * sq]).reshape(5, -1).T
    coef, *_ = np.linalg.lstsq(B, f.reshape(-1), rcond=None)
    return (B @ coef).reshape(f.shape)


def exact_shift(f_hat_k, k, v, t):
    """Fourier mode of the free-transport solution: f_k(t) = f_k(0) exp(-i k v t)."""
    return f_hat_k * np.exp(-1j * k * v * t)
