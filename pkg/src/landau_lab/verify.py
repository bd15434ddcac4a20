"""Named verification suites with machine-readable results.

Every suite takes a :class:`SuiteSettings` and returns a list of
:class:`CheckResult`. Results depend only on the settings (including the seed),
so two runs agree bit for bit. Constant-free inequalities are checked by the
envelope protocol: report the fitted constant ``C = max X / Y`` and pass when it
is finite and changes by at most 2x under grid refinement.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from . import kernel as kn
from . import stencils
from .evolution import (BlowUpError, DriftDiffusionStepper, StepperConfig, Trajectory, barrier_scan,
                        interior_mask, run_linear)
from .norms import inner_sigma_v, norm_l2_weighted, norm_sigma_weighted, norm_sup_weighted
from .operators import OperatorContext, sigma_mu, sp_decomposition_rhs
from .phase_space import Field, PhaseGrid
from .picard import NonContractionError, picard_solve
from .projection import project_array
from .samples import initial_field, random_smooth_fields

STATUSES = ("pass", "fail", "n/a")


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    fitted_constants: dict = field(default_factory=dict)
    tolerance: float | None = None
    provenance: str = ""
    witness: dict | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}")
        if self.status == "fail" and not self.witness:
            raise ValueError("a failed check must carry a witness")

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "fitted_constants": {k: _plain(v) for k, v in sorted(self.fitted_constants.items())},
            "tolerance": self.tolerance,
            "provenance": self.provenance,
            "witness": None if self.witness is None else {k: _plain(v) for k, v in sorted(self.witness.items())},
        }


def _plain(x):
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(y) for y in np.asarray(x).tolist()] if isinstance(x, np.ndarray) else [_plain(y) for y in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _check(name, ok, constants, tol, prov, witness=None):
    status = "pass" if ok else "fail"
    if not ok and not witness:
        witness = {"reason": "threshold exceeded"}
    return CheckResult(name, status, constants, tol, prov, witness if not ok else None)


@dataclass(frozen=True)
class SuiteSettings:
    nx: int = 16
    nv: int = 24
    rv: float = 5.5
    dim_x: int = 1
    theta: float = 0.0
    epsilon: float = 0.1
    seed: int = 0
    samples: int = 100
    dt: float = 0.02
    t_end: float = 1.0
    scheme: str = "lie"
    init_kind: str = "wave"
    amplitude: float = 5e-3

    @property
    def grid(self) -> PhaseGrid:
        return PhaseGrid(self.nx, self.nv, self.rv, self.dim_x)

    def vgrid(self, nv: int | None = None) -> PhaseGrid:
        """Single x-node grid for velocity-only checks."""
        return PhaseGrid(1, nv or self.nv, self.rv, 1)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    nb = float(np.linalg.norm(b))
    na = float(np.linalg.norm(a))
    if nb == 0.0:
        return 0.0 if na == 0.0 else np.inf
    return na / nb


def _worst(err: np.ndarray) -> dict:
    idx = np.unravel_index(int(np.argmax(np.abs(err))), err.shape)
    return {"node": [int(i) for i in idx], "value": float(np.abs(err)[idx])}


def _smooth_g(grid: PhaseGrid, sup: float, seed: int) -> Field:
    """x-dependent smooth coefficient field with sup norm exactly ``sup``."""
    if sup == 0:
        return Field.zeros(grid)
    rng = np.random.default_rng(seed)
    v = random_smooth_fields(grid, 1, int(rng.integers(2 ** 31)), envelope=0.25)[0]
    x1 = grid.x[0]
    ph = rng.uniform(0, 2 * np.pi)
    data = (0.6 + 0.4 * np.cos(x1 + ph)).reshape(x1.shape + (1, 1, 1)) * v
    return Field(grid, sup * data / np.max(np.abs(data)))


# ---------------------------------------------------------------------------
# operator identities

INVARIANT_POLYS = ("1", "v1", "|v|^2")


def _poly(grid: PhaseGrid, name: str) -> np.ndarray:
    v = grid.v
    return {"1": np.ones(grid.velocity_shape), "v1": v[0], "|v|^2": np.sum(v ** 2, axis=0)}[name]


def minus_8pi_errors(nv: int, rv: float = 5.5) -> dict:
    """Relative L^2 error of d_ij phi^ij * (sqrt(mu) f) against -8 pi sqrt(mu) f for f = sqrt(mu) p."""
    grid = PhaseGrid(1, nv, rv, 1)
    mu = np.exp(-np.sum(grid.v ** 2, axis=0))
    out = {}
    for p in INVARIANT_POLYS:
        u = mu * _poly(grid, p)
        out[p] = _rel(kn.contraction_array(grid, u) + 8.0 * np.pi * u, 8.0 * np.pi * u)
    return out


def _identity_fields(grid: PhaseGrid, seed: int, zero: bool = False):
    if zero:
        return Field.zeros(grid), np.zeros(grid.shape)
    v = grid.v
    x1 = grid.x[0].reshape(grid.x[0].shape + (1, 1, 1))
    g = _smooth_g(grid, 0.01, seed)
    f = np.cos(x1) * (1.0 + v[0] + v[1] ** 2) * np.exp(-0.4 * np.sum(v ** 2, axis=0))
    return g, f


def theta_conjugation_error(grid: PhaseGrid, theta: float, seed: int = 0, zero: bool = False):
    g, f = _identity_fields(grid, seed, zero)
    ctx = OperatorContext(grid, g, theta=theta)
    w = ctx.weights[0]
    lhs = w * (ctx.Abar(f) + ctx.Kbar(f))
    rhs = ctx.Abar_theta(w * f) + ctx.Kbar_theta(f)
    return _rel(lhs - rhs, lhs), lhs - rhs


def suite_operator_identities(s: SuiteSettings, zero_fields: bool = False) -> list[CheckResult]:
    out = []
    # contraction of the Coulomb kernel
    errs = minus_8pi_errors(s.nv, s.rv)
    worst = max(errs, key=errs.get)
    out.append(_check("minus_8pi_identity", errs[worst] <= 0.02,
                      {f"rel_err[{k}]": e for k, e in errs.items()}, 0.02,
                      "contraction of the Hessian of the Coulomb kernel",
                      {"field": worst, "rel_err": errs[worst], "nv": s.nv}))

    grid = PhaseGrid(min(s.nx, 4), s.nv, s.rv, 1)
    g, f = _identity_fields(grid, s.seed, zero_fields)
    ctx = OperatorContext(grid, g, theta=s.theta)
    c = ctx.coeff
    lhs = ctx.Abar(f) + ctx.Kbar(f)
    rhs = ctx.A_pw(f) + ctx.K_pw(f) + ctx.Gamma_pw(f, c)
    e = _rel(lhs - rhs, lhs) if np.any(lhs) else float(np.max(np.abs(rhs)))
    out.append(_check("rearrangement", e <= 1e-8, {"rel_err": e}, 1e-8,
                      "Abar f + Kbar f = A f + K f + Gamma(g, f)", _worst(lhs - rhs)))

    kp = ctx.K_pw(f)
    k1 = ctx.K1(f)
    u = ctx.sqmu * f
    resid = k1 - kp + ctx.sqmu * (kn.contraction_array(grid, u) + 8.0 * np.pi * u)
    e1 = _rel(resid, kp) if np.any(kp) else 0.0
    out.append(_check("K1_vs_K", e1 <= 1e-10,
                      {"rel_err": e1, "raw_rel_diff": _rel(k1 - kp, kp) if np.any(kp) else 0.0},
                      1e-10, "nested and expanded assembly of K", _worst(resid)))

    sp_rhs = sp_decomposition_rhs(ctx, Field(grid, f)).data
    target = lhs - kp + k1
    e2 = _rel(sp_rhs - target, lhs) if np.any(lhs) else float(np.max(np.abs(sp_rhs)))
    out.append(_check("sp_decomposition", e2 <= 1e-8, {"rel_err": e2}, 1e-8,
                      "second-order split of Abar + Kbar", _worst(sp_rhs - target)))

    e3, diff = theta_conjugation_error(grid, s.theta, s.seed, zero_fields)
    out.append(_check("theta_conjugation", e3 <= 1e-8, {"rel_err": e3, "theta": s.theta}, 1e-8,
                      "weighted conjugation of Abar + Kbar", _worst(diff)))

    # the conjugation identity only holds up to discretization error for theta != 0
    th = s.theta if s.theta != 0 else 1.0
    levels = (16, 24, 32)
    errs3 = [theta_conjugation_error(PhaseGrid(2, n, s.rv, 1), th, s.seed, zero_fields)[0] for n in levels]
    if zero_fields or errs3[0] == 0.0:
        order = np.inf
    else:
        order = float(np.polyfit(np.log([2 * s.rv / n for n in levels]), np.log(errs3), 1)[0])
    ok = bool(np.all(np.diff(errs3) <= 0) and order >= 1.0)
    out.append(_check("theta_conjugation_refinement", ok,
                      {**{f"rel_err[nv={n}]": e for n, e in zip(levels, errs3)}, "order": order, "theta": th},
                      1.0, "weighted conjugation, consistency under refinement",
                      {"errors": errs3, "order": order}))
    return out


# ---------------------------------------------------------------------------
# spectral structure of sigma

def _fit_exponent(r: np.ndarray, lam: np.ndarray) -> tuple[float, float]:
    """Slopes of log lam against log r and against log(1 + r)."""
    return (float(np.polyfit(np.log(r), np.log(lam), 1)[0]),
            float(np.polyfit(np.log1p(r), np.log(lam), 1)[0]))


def _node_eigs(S: kn.SigmaField) -> np.ndarray:
    m = np.moveaxis(S.full(), (0, 1), (-2, -1))
    return np.linalg.eigvalsh(m)


def suite_spectral_bounds(s: SuiteSettings, g: Field | None = None) -> list[CheckResult]:
    grid = g.grid if g is not None else s.vgrid()
    gsup = 0.0 if g is None else norm_sup_weighted(g, 0.0)
    prov = "eigenvalue structure of sigma_G"
    names = ("exponents", "alignment", "two_sided", "envelope", "envelope_vs_unperturbed")
    if gsup > s.epsilon:
        return [CheckResult(f"spectral_{n}", "n/a", {"g_sup": gsup}, s.epsilon, prov) for n in names]
    ctx = OperatorContext(grid, g)
    S0 = sigma_mu(grid)
    SG = ctx.sigma_G
    r = grid.speed
    band = (r >= 1.0) & (r <= grid.rv - 1.0)
    out = []

    lam_par, lam_perp, cos = kn.eigen_split_field(SG) if SG.data.ndim == 4 else _split_lead(SG)
    rb = np.broadcast_to(r, lam_par.shape)
    bb = np.broadcast_to(band, lam_par.shape)
    p_log, p_log1p = _fit_exponent(rb[bb], lam_par[bb])
    bp = np.broadcast_to(band, lam_perp.shape)
    q_log, q_log1p = _fit_exponent(np.broadcast_to(r, lam_perp.shape)[bp], lam_perp[bp])
    ok = abs(p_log + 3.0) <= 0.3 and abs(q_log + 1.0) <= 0.3
    out.append(_check("spectral_exponents", ok,
                      {"parallel": p_log, "perpendicular": q_log,
                       "parallel_log1p": p_log1p, "perpendicular_log1p": q_log1p, "g_sup": gsup},
                      0.3, prov, {"parallel": p_log, "perpendicular": q_log}))
    cmin = float(np.min(cos[bb]))
    out.append(_check("spectral_alignment", cmin >= 0.999, {"min_cosine": cmin}, 0.999, prov,
                      {"min_cosine": cmin}))

    e0 = _node_eigs(S0)
    eG = _node_eigs(SG)
    lo = eG[..., 0] / e0[..., 0]
    hi = eG[..., 2] / e0[..., 2]
    ratios = np.concatenate([lo.ravel(), hi.ravel()])
    rmin, rmax = float(np.min(ratios)), float(np.max(ratios))
    out.append(_check("spectral_two_sided", rmin >= 0.5 and rmax <= 2.0,
                      {"min_ratio": rmin, "max_ratio": rmax, "g_sup": gsup}, 2.0, prov,
                      {"min_ratio": rmin, "max_ratio": rmax}))

    def envelope(e):
        low = np.max((1.0 + r) ** -3 / e[..., 0])
        high = np.max(e[..., 2] / (1.0 + r) ** -1)
        return float(max(low, high, 1.0))

    C = envelope(eG)
    C0 = envelope(e0)
    out.append(_check("spectral_envelope", np.isfinite(C) and float(np.min(eG)) > 0,
                      {"C": C, "min_eigenvalue": float(np.min(eG))}, None, prov,
                      {"min_eigenvalue": float(np.min(eG))}))
    change = abs(C / C0 - 1.0)
    if gsup <= 0.01 * s.epsilon:
        out.append(_check("envelope_vs_unperturbed", change <= 0.05, {"C": C, "C0": C0, "rel_change": change},
                          0.05, prov, {"rel_change": change}))
    else:
        out.append(CheckResult("envelope_vs_unperturbed", "n/a", {"C": C, "C0": C0, "rel_change": change},
                               0.05, prov))
    return out


def _split_lead(S: kn.SigmaField):
    """eigen_split_field over fields with leading x axes."""
    lead = S.data.shape[1:-3]
    flat = S.data.reshape((6, -1) + S.grid.velocity_shape)
    parts = [kn.eigen_split_field(kn.SigmaField(S.grid, flat[:, k])) for k in range(flat.shape[1])]
    lam_par = np.stack([p[0] for p in parts]).reshape(lead + S.grid.velocity_shape)
    lam_perp = np.stack([p[1] for p in parts], axis=1).reshape((2,) + lead + S.grid.velocity_shape)
    cos = np.stack([p[2] for p in parts]).reshape(lead + S.grid.velocity_shape)
    return lam_par, lam_perp, cos


# ---------------------------------------------------------------------------
# coercivity

def rayleigh_ratios(grid: PhaseGrid, samples: int, seed: int, band: int | None = None, chunk: int = 10,
                    skip_tol: float = 1e-10):
    """<L f, f> / |(I - P) f|_sigma^2 for seeded band-limited fields; null-space samples give nan."""
    ctx = OperatorContext(grid)
    fields = random_smooth_fields(grid, samples, seed, band)
    out = np.empty(samples)
    for a in range(0, samples, chunk):
        f = fields[a:a + chunk]
        Lf = ctx.L_flux(f)
        num = np.sum(Lf * f, axis=(1, 2, 3)) * grid.cell_volume
        micro = f - project_array(grid, f)
        den = inner_sigma_v(grid, micro, micro)
        full = inner_sigma_v(grid, f, f)
        out[a:a + chunk] = np.where(den > skip_tol * full, num / np.where(den > 0, den, 1.0), np.nan)
    return out


def suite_coercivity(s: SuiteSettings, samples: int | None = None) -> list[CheckResult]:
    n = samples or s.samples
    coarse, fine = (16, 24) if s.nv >= 24 else (max(8, s.nv - 8), s.nv)
    d = {}
    for nv in (coarse, fine):
        rr = rayleigh_ratios(s.vgrid(nv), n, s.seed, band=coarse // 4)
        d[nv] = (float(np.nanmin(rr)), int(np.nanargmin(rr)), int(np.sum(np.isnan(rr))))
    lo, hi = sorted((d[coarse][0], d[fine][0]))
    change = hi / lo if lo > 0 else np.inf
    ok = d[fine][0] > 1e-6 and change <= 2.0
    return [_check("coercivity", ok,
                   {f"delta_hat[nv={coarse}]": d[coarse][0], f"delta_hat[nv={fine}]": d[fine][0],
                    "refinement_ratio": change, "skipped": d[fine][2]},
                   1e-6, "coercivity of L on the microscopic part",
                   {"sample": d[fine][1], "delta_hat": d[fine][0], "refinement_ratio": change})]


# ---------------------------------------------------------------------------
# decay and energy

def decay_slope(traj: Trajectory, k: float = 2.0, t_min: float = 1.0, t_max: float = 20.0):
    t = np.asarray(traj.times)
    n = np.array([r.l2_theta for r in traj.reports])
    m = (t >= t_min) & (t <= t_max) & (n > 0)
    if np.sum(m) < 3:
        return None
    return float(np.polyfit(np.log1p(t[m] / k), np.log(n[m]), 1)[0])


def energy_constant(traj: Trajectory) -> float:
    e = np.array([r.energy_theta for r in traj.reports])
    return float(np.max(e) / e[0]) if e[0] > 0 else 0.0


def suite_decay(traj: Trajectory, k: float = 2.0) -> list[CheckResult]:
    reports = traj.reports
    if all(r.l2_theta == 0 for r in reports):
        return [CheckResult(n, "pass", {}, None, "trivial: zero trajectory")
                for n in ("decay_rate", "energy_bound", "sup_trend")]
    out = []
    slope = decay_slope(traj, k)
    prov = "algebraic decay of the weighted L2 norm"
    if slope is None:
        out.append(CheckResult("decay_rate", "n/a", {"t_end": float(traj.times[-1])}, -k / 2 + 0.5, prov))
    else:
        out.append(_check("decay_rate", slope <= -k / 2 + 0.5, {"slope": slope, "k": k}, -k / 2 + 0.5, prov,
                          {"slope": slope}))
    C = energy_constant(traj)
    e = np.array([r.energy_theta for r in reports])
    out.append(_check("energy_bound", np.isfinite(C), {"C_hat": C, "E0": float(e[0]), "E_end": float(e[-1])},
                      None, "energy bounded by a multiple of its initial value", {"C_hat": C}))
    sup = np.array([r.sup_theta for r in reports])
    t = np.asarray(traj.times)
    trend = float(np.polyfit(t, np.log(np.maximum(sup, 1e-300)), 1)[0]) if len(t) > 2 else 0.0
    out.append(_check("sup_trend", float(np.max(sup)) <= 2.0 * sup[0] and np.isfinite(trend),
                      {"log_sup_slope": trend, "max_over_initial": float(np.max(sup) / sup[0])}, 2.0,
                      "weighted sup norm stays bounded", {"max_over_initial": float(np.max(sup) / sup[0])}))
    return out


def energy_slack(traj: Trajectory, ctx: OperatorContext) -> float:
    """max_t |1/2 |f(t)|^2 + int_0^t <L f, f> - 1/2 |f0|^2| along a g = 0, theta = 0 trajectory.

    The dissipation is integrated with the trapezoid rule over the stored snapshots.
    """
    grid = traj.grid
    vol = grid.x_volume * grid.cell_volume
    t = np.asarray(traj.times)
    d = np.array([float(np.sum(ctx.L_flux(s.data) * s.data) * vol) for s in traj.snapshots])
    half = np.array([0.5 * float(np.sum(s.data ** 2) * vol) for s in traj.snapshots])
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(t))])
    return float(np.max(np.abs(half + integral - half[0])))


# ---------------------------------------------------------------------------
# nonlinear estimates

def trilinear_ratios(grid: PhaseGrid, samples: int, seed: int, theta: float = 0.0, band: int | None = None):
    """Sample maxima of the two trilinear quotients for Gamma."""
    ctx = OperatorContext(grid)
    fields = random_smooth_fields(grid, 3 * samples, seed, band)
    w2 = (1.0 + grid.speed) ** (2.0 * theta)
    r1, r2 = [], []
    for n in range(samples):
        g1, g2, g3 = fields[3 * n], fields[3 * n + 1], fields[3 * n + 2]
        lhs = abs(float(np.sum(w2 * ctx.Gamma_flux(g1, g2) * g3) * grid.cell_volume))
        F = [Field(grid, a[None]) for a in (g1, g2, g3)]
        s2 = norm_sigma_weighted(F[1], theta)
        s3 = norm_sigma_weighted(F[2], theta)
        sup1 = norm_sup_weighted(F[0])
        sup2 = norm_sup_weighted(F[1]) + float(np.max(np.sqrt(np.sum(stencils.grad(g2, grid.dv) ** 2, axis=0))))
        m1 = min(norm_l2_weighted(F[0], theta), norm_sigma_weighted(F[0], theta))
        r1.append(lhs / (sup1 * s2 * s3))
        r2.append(lhs / (m1 * sup2 * s3))
    return float(np.max(r1)), float(np.max(r2))


def suite_nonlinear_bounds(s: SuiteSettings, samples: int | None = None) -> list[CheckResult]:
    n = min(samples or s.samples, 20)
    coarse, fine = (16, 24) if s.nv >= 24 else (max(8, s.nv - 8), s.nv)
    a = trilinear_ratios(s.vgrid(coarse), n, s.seed, s.theta, coarse // 4)
    b = trilinear_ratios(s.vgrid(fine), n, s.seed, s.theta, coarse // 4)
    out = []
    for i, name in enumerate(("trilinear_sup_sigma_sigma", "trilinear_l2_w1inf_sigma")):
        ch = max(a[i], b[i]) / min(a[i], b[i])
        ok = bool(np.isfinite(a[i]) and np.isfinite(b[i]) and ch <= 2.0)
        out.append(_check(name, ok, {f"C_hat[nv={coarse}]": a[i], f"C_hat[nv={fine}]": b[i],
                                     "refinement_ratio": ch}, 2.0,
                          "trilinear estimate for Gamma", {"refinement_ratio": ch}))
    # homogeneity of the first quotient under (2 g1, 3 g2, 5 g3)
    grid = s.vgrid(min(s.nv, 16))
    ctx = OperatorContext(grid)
    g1, g2, g3 = random_smooth_fields(grid, 3, s.seed + 1)

    def q(a1, a2, a3):
        lhs = abs(float(np.sum(ctx.Gamma_flux(a1, a2) * a3) * grid.cell_volume))
        return lhs / (float(np.max(np.abs(a1))) * norm_sigma_weighted(Field(grid, a2[None]))
                      * norm_sigma_weighted(Field(grid, a3[None])))

    h = abs(q(2 * g1, 3 * g2, 5 * g3) / q(g1, g2, g3) - 1.0)
    out.append(_check("trilinear_homogeneity", h <= 1e-10, {"rel_change": h}, 1e-10,
                      "homogeneity of the trilinear quotient", {"rel_change": h}))
    return out


# ---------------------------------------------------------------------------
# maximum principle, barrier, conservation

def max_principle_runs(s: SuiteSettings, theta: float, runs: int = 20, n_steps: int = 5,
                       dt: float | None = None):
    """Sup-norm growth max_t |h(t)|_inf / |h0|_inf over seeded random h0."""
    grid = s.grid
    g = _smooth_g(grid, 0.5 * s.epsilon, s.seed + 17)
    ctx = OperatorContext(grid, g, theta=theta)
    st = DriftDiffusionStepper(ctx, dt or s.dt)
    rng = np.random.default_rng(s.seed + int(10 * theta))
    worst, arg = 0.0, -1
    for k in range(runs):
        env = np.exp(-rng.uniform(0.05, 0.5) * np.sum(grid.v ** 2, axis=0))
        h = rng.uniform(-1.0, 1.0, grid.shape) * env
        h0 = float(np.max(np.abs(h)))
        top = h0
        for _ in range(n_steps):
            h = st.step(h)
            top = max(top, float(np.max(np.abs(h))))
        if top / h0 > worst:
            worst, arg = top / h0, k
    return worst, arg, norm_sup_weighted(g)


def suite_max_principle(s: SuiteSettings, runs: int = 20, n_steps: int = 5) -> list[CheckResult]:
    out = []
    for th in (0.0, 1.0, 2.0):
        worst, arg, gs = max_principle_runs(s, th, runs, n_steps)
        out.append(_check(f"max_principle[theta={th:g}]", worst <= 1.0 + 1e-6,
                          {"max_growth": worst, "g_sup": gs}, 1e-6,
                          "maximum principle for the weighted drift-diffusion flow",
                          {"sample": arg, "max_growth": worst}))
    return out


def suite_barrier(s: SuiteSettings) -> list[CheckResult]:
    grid = s.grid
    g = _smooth_g(grid, 0.5 * s.epsilon, s.seed + 17)
    out = []
    for th in (0.0, 1.0, 2.0):
        ctx = OperatorContext(grid, g, theta=th)
        k0, res = barrier_scan(ctx)
        out.append(_check(f"barrier[theta={th:g}]", k0 is not None,
                          {"k0": -1.0 if k0 is None else k0, "min_residual": res,
                           "interior_nodes": int(np.sum(interior_mask(grid)))},
                          None, "supersolution e^{kt}(1+|v|^2)", {"min_residual": res}))
    return out


def conservation_run(s: SuiteSettings, n_steps: int | None = None):
    grid = s.grid
    f0 = initial_field(grid, s.init_kind, s.amplitude, s.seed)
    steps = n_steps or max(1, int(round(s.t_end / s.dt)))
    cfg = StepperConfig(dt=s.dt, t_end=steps * s.dt, scheme=s.scheme)
    traj = run_linear(f0, OperatorContext(grid), cfg, theta=s.theta)
    return f0, traj


def suite_conservation(s: SuiteSettings, n_steps: int | None = None) -> list[CheckResult]:
    f0, traj = conservation_run(s, n_steps)
    scale = norm_l2_weighted(f0, 0.0)
    step = float(np.max(np.abs(traj.step_drift))) if traj.step_drift else 0.0
    cum = float(np.max(np.abs(traj.moment_drift)))
    ok = step <= 1e-8 * scale and cum <= 1e-5 * max(scale, 1e-300) if scale > 0 else step == 0
    k = int(np.argmax(np.max(np.abs(np.asarray(traj.step_drift)), axis=1))) if traj.step_drift else 0
    return [_check("conservation", ok, {"max_step_drift": step, "cumulative_drift": cum, "l2_f0": scale},
                   1e-8, "conservation of mass, momentum and energy", {"step": k, "drift": step})]


# ---------------------------------------------------------------------------
# geometry

def suite_geometry(s: SuiteSettings) -> list[CheckResult]:
    rng = np.random.default_rng(s.seed)
    prov = "kinetic scaling geometry"
    out = []
    pts = [(rng.uniform(-2, 2), rng.uniform(-2, 2, 3), rng.uniform(-2, 2, 3)) for _ in range(50)]
    res = max(abs(geo.gauge_residual(z, geo.kinetic_distance(z))) for z in pts)
    out.append(_check("gauge_residual", res <= 1e-12, {"max_residual": res}, 1e-12, prov, {"residual": res}))
    sc = 0.0
    for z in pts:
        d = geo.kinetic_distance(z)
        for r in (0.5, 2.0, 10.0):
            zr = (r * r * z[0], r ** 3 * z[1], r * z[2])
            sc = max(sc, abs(geo.kinetic_distance(zr) / (r * d) - 1.0))
    out.append(_check("gauge_scaling", sc <= 1e-10, {"max_rel_err": sc}, 1e-10, prov, {"rel_err": sc}))
    v0 = rng.standard_normal(3)
    v0 *= 3.0 / np.linalg.norm(v0)
    fc = geo.FrameChange(0.0, tuple(rng.uniform(-1, 1, 3)), tuple(v0), m=10)
    fwd, bwd = geo.containment_violations(fc, 500, s.seed)
    out.append(_check("frame_containment", fwd == 0 and bwd == 0,
                      {"forward_violations": fwd, "backward_violations": bwd, "N": fc.N, "m": fc.m},
                      0.0, prov, {"forward": fwd, "backward": bwd}))
    orth = float(np.max(np.abs(fc.O.T @ fc.O - np.eye(3))))
    z = pts[0]
    back = geo.frame_map_inverse(fc, geo.frame_map(fc, z))
    rt = max(abs(back[0] - z[0]), float(np.max(np.abs(back[1] - z[1]))), float(np.max(np.abs(back[2] - z[2]))))
    out.append(_check("frame_round_trip", orth <= 1e-12 and rt <= 1e-12,
                      {"orthogonality": orth, "round_trip": rt}, 1e-12, prov, {"round_trip": rt}))
    return out


# ---------------------------------------------------------------------------
# empirical smallness thresholds

SCAN_AMPLITUDES = (1e-3, 1e-2, 1e-1, 0.3, 1.0, 3.0)


def _picard_outcome(grid: PhaseGrid, amp: float, s: SuiteSettings, n_steps: int):
    f0 = initial_field(grid, s.init_kind, amp, s.seed)
    cfg = StepperConfig(dt=s.dt, t_end=n_steps * s.dt, scheme=s.scheme)
    try:
        _, recs = picard_solve(f0, cfg, max_iter=10, eps0=np.inf)
    except (NonContractionError, BlowUpError):
        return False, -1
    return recs[-1].converged, len(recs)


def smallness_scan(s: SuiteSettings, amplitudes=SCAN_AMPLITUDES, n_steps: int = 20, runs: int = 5):
    """Sweep the perturbation size and record where contraction or the max principle first fails.

    For each amplitude: Picard convergence within 10 iterations on a short
    horizon (data of that sup norm), the sup-norm growth of the h-flow with a
    coefficient g of that sup norm (theta = 0, 1, 2), and the smallest
    eigenvalue ratio of sigma_G to sigma_mu. The monotone h-flow scheme keeps a
    discrete maximum principle for any g, so the max-principle threshold is the
    first amplitude with growth above 1 + 1e-6 or with sigma_G no longer
    positive definite.
    """
    grid = PhaseGrid(min(s.nx, 8), min(s.nv, 16), s.rv, 1)
    small = SuiteSettings(nx=grid.nx, nv=grid.nv, rv=s.rv, seed=s.seed, dt=s.dt, scheme=s.scheme,
                          init_kind=s.init_kind)
    e0 = _node_eigs(sigma_mu(grid))[..., 0]
    rows, picard_fail, mp_fail = [], None, None
    for amp in amplitudes:
        conv, iters = _picard_outcome(grid, amp, small, n_steps)
        growth = max(max_principle_runs(replace(small, epsilon=2.0 * amp), th, runs, 2)[0]
                     for th in (0.0, 1.0, 2.0))
        sG = OperatorContext(grid, _smooth_g(grid, amp, s.seed + 17)).sigma_G
        ratio = float(np.min(_node_eigs(sG)[..., 0] / e0))
        rows.append({"amplitude": amp, "picard_converged": conv, "picard_iterations": iters,
                     "max_growth": growth, "min_eig_ratio": ratio})
        if picard_fail is None and not conv:
            picard_fail = amp
        if mp_fail is None and not (growth <= 1.0 + 1e-6 and ratio > 0):
            mp_fail = amp
    return {"rows": rows, "contraction_threshold": picard_fail, "max_principle_threshold": mp_fail,
            "grid": [grid.nx, grid.nv]}


def suite_thresholds(s: SuiteSettings) -> list[CheckResult]:
    scan = smallness_scan(s)
    consts = {"contraction_threshold": scan["contraction_threshold"],
              "max_principle_threshold": scan["max_principle_threshold"]}
    for r in scan["rows"]:
        a = r["amplitude"]
        consts[f"picard_iterations[{a:g}]"] = r["picard_iterations"]
        consts[f"max_growth[{a:g}]"] = r["max_growth"]
        consts[f"min_eig_ratio[{a:g}]"] = r["min_eig_ratio"]
    # a report, not a pass/fail criterion: the thresholds are measured, not predicted
    return [CheckResult("smallness_thresholds", "n/a", consts, None,
                        "empirical size of the smallness constants")]


# ---------------------------------------------------------------------------
# registry

def _decay_from_settings(s: SuiteSettings):
    _, traj = conservation_run(s)
    return suite_decay(traj)


SUITES = {
    "identities": suite_operator_identities,
    "spectral": suite_spectral_bounds,
    "coercivity": suite_coercivity,
    "decay": _decay_from_settings,
    "nonlinear": suite_nonlinear_bounds,
    "max_principle": suite_max_principle,
    "barrier": suite_barrier,
    "conservation": suite_conservation,
    "geometry": suite_geometry,
    "thresholds": suite_thresholds,
}


def suite_names() -> list[str]:
    return list(SUITES)


def run_suites(names, settings: SuiteSettings) -> list[CheckResult]:
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s) {unknown}; available: {suite_names()}")
    out = []
    for n in names:
        out.extend(SUITES[n](settings))
    return out

