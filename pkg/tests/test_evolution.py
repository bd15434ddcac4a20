import numpy as np
import pytest

from landau_lab import evolution as ev
from landau_lab.operators import OperatorContext
from landau_lab.phase_space import Field, PhaseGrid
from landau_lab.samples import initial_field, random_smooth_fields

from oracles import exact_shift

SMALL = PhaseGrid(nx=4, nv=12)


@pytest.fixture(scope="module")
def ctx_small():
    return OperatorContext(SMALL)


def test_transport_matches_exact_mode_shift():
    g = PhaseGrid(nx=8, nv=6)
    k, dt = 2, 0.37
    x = g.x[0].reshape(8, 1, 1, 1)
    v1 = g.v[0]
    prof = np.exp(-0.5 * g.speed ** 2)
    f0 = np.cos(k * x) * prof
    got = ev.transport(g, f0, dt)
    ref = np.real(exact_shift(np.exp(1j * k * x), k, v1, dt)) * prof
    np.testing.assert_allclose(got, ref, atol=1e-13)


def test_transport_is_an_isometry_and_group():
    rng = np.random.default_rng(0)
    h = np.fft.rfft(rng.standard_normal(SMALL.shape), axis=0)
    h[-1] = 0  # the Nyquist mode is projected to stay real, which breaks the group law
    f = np.fft.irfft(h, n=SMALL.nx, axis=0)
    a = ev.transport(SMALL, ev.transport(SMALL, f, 0.3), 0.4)
    b = ev.transport(SMALL, f, 0.7)
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert np.linalg.norm(ev.transport(SMALL, f, 0.2)) <= np.linalg.norm(f) * (1 + 1e-13)


def test_monotone_transport_preserves_bounds_and_mass():
    rng = np.random.default_rng(1)
    f = rng.uniform(-1, 1, SMALL.shape)
    out = ev.transport_monotone(SMALL, f, 0.3)
    assert out.max() <= f.max() + 1e-15 and out.min() >= f.min() - 1e-15
    np.testing.assert_allclose(out.sum(axis=0), f.sum(axis=0), atol=1e-12)


def test_stepper_config_validation():
    with pytest.raises(ValueError):
        ev.StepperConfig(dt=0)
    with pytest.raises(ValueError):
        ev.StepperConfig(scheme="rk4")
    with pytest.raises(ValueError):
        ev.StepperConfig(diffusion_solver="gmres")
    with pytest.raises(ValueError):
        ev.StepperConfig(tol=1e-6)
    assert ev.StepperConfig(dt=0.1, t_end=1.0).n_steps == 10


@pytest.mark.parametrize("scheme", ["lie", "strang"])
def test_linear_run_conserves_moments(ctx_small, scheme):
    f0 = initial_field(SMALL, "random", 1e-2, seed=3)
    cfg = ev.StepperConfig(dt=0.05, t_end=0.25, scheme=scheme)
    traj = ev.run_linear(f0, ctx_small, cfg, keep_all=True)
    ref = np.linalg.norm(f0.data)
    assert np.max(np.abs(traj.step_drift)) <= 1e-12 * ref
    assert traj.l2_plain[-1] < traj.l2_plain[0]
    assert len(traj.times) == 6


def test_zero_initial_data_stays_zero(ctx_small):
    traj = ev.run_linear(Field.zeros(SMALL), ctx_small, ev.StepperConfig(dt=0.05, t_end=0.1))
    assert np.all(traj.final.data == 0)


def test_direct_and_cg_solvers_agree(ctx_small):
    f0 = initial_field(SMALL, "wave", 1e-2).data
    a = ev.LinearLandauStepper(ctx_small, ev.StepperConfig(dt=0.05)).step(f0)
    b = ev.LinearLandauStepper(ctx_small, ev.StepperConfig(dt=0.05, diffusion_solver="direct")).step(f0)
    np.testing.assert_allclose(a, b, atol=1e-9 * np.max(np.abs(f0)))


def test_time_refinement_first_order(ctx_small):
    f0 = initial_field(SMALL, "wave", 1e-2)

    def final(dt):
        return ev.run_linear(f0, ctx_small, ev.StepperConfig(dt=dt, t_end=0.4)).final.data

    ref = final(0.0125)
    e1 = np.linalg.norm(final(0.1) - ref)
    e2 = np.linalg.norm(final(0.05) - ref)
    assert e1 / e2 >= 1.8


def test_blowup_guard(ctx_small, monkeypatch):
    monkeypatch.setattr(ev, "BLOWUP_FACTOR", 1e-6)
    f0 = initial_field(SMALL, "wave", 1e-2)
    with pytest.raises(ev.BlowUpError):
        ev.run_linear(f0, ctx_small, ev.StepperConfig(dt=0.05, t_end=0.1))


def test_positivity_examples():
    g = PhaseGrid(nx=2, nv=8)
    assert ev.positivity_check(Field.zeros(g)).passed
    sq = np.exp(-0.5 * g.speed ** 2)
    bad = ev.positivity_check(Field(g, np.broadcast_to(-2 * sq, g.shape)))
    assert not bad.passed and bad.min_F < 0
    half = ev.positivity_check(Field(g, np.broadcast_to(-0.5 * sq, g.shape)))
    assert half.passed and half.min_F > 0


def test_moments_of_invariants():
    g = PhaseGrid(nx=2, nv=24)
    psi = ev.invariant_profiles(g)
    m = ev.moments(g, np.broadcast_to(psi[0], g.shape))
    assert m[0] == pytest.approx(2 * np.pi * np.pi ** 1.5, rel=1e-8)
    np.testing.assert_allclose(m[1:4], 0, atol=1e-12)
    assert m[4] == pytest.approx(2 * np.pi * 1.5 * np.pi ** 1.5, rel=1e-7)


def test_trajectory_rejects_non_increasing_times(ctx_small):
    traj = ev.run_linear(Field.zeros(SMALL), ctx_small, ev.StepperConfig(dt=0.05, t_end=0.05))
    with pytest.raises(ValueError):
        traj.append(0.0, traj.final, traj.reports[-1], np.zeros(5), 0.0)


# -- drift-diffusion h-flow ----------------------------------------------------

DD = PhaseGrid(nx=2, nv=8)


def test_drift_diffusion_constant_is_stationary():
    ctx = OperatorContext(DD)
    h = Field(DD, np.full(DD.shape, 0.7))
    out = ev.step_drift_diffusion(h, ctx, 0.1)
    np.testing.assert_allclose(out.data, 0.7, atol=1e-12)


def test_drift_diffusion_conserves_mass_without_weight():
    ctx = OperatorContext(DD)
    h0 = Field(DD, np.random.default_rng(2).uniform(0, 1, DD.shape))
    _, h1 = ev.run_drift_diffusion(h0, ctx, 0.1, 3)
    assert h1.data.sum() == pytest.approx(h0.data.sum(), rel=1e-10)


@pytest.mark.parametrize("theta", [0.0, 2.0])
def test_drift_diffusion_sup_non_increasing(theta):
    g = Field(DD, 0.05 * np.stack([random_smooth_fields(DD, 1, s)[0] for s in (4, 5)]))
    ctx = OperatorContext(DD, g, theta=theta)
    h0 = Field(DD, np.random.default_rng(6).uniform(-1, 1, DD.shape))
    sups, _ = ev.run_drift_diffusion(h0, ctx, 0.05, 4)
    assert np.all(np.diff(sups) <= 1e-12 * sups[0])


def test_drift_diffusion_matrix_is_m_matrix():
    op = ev.DriftDiffusionOperator(OperatorContext(DD))
    M = op.mats[0].tocoo()
    off = M.row != M.col
    assert np.all(M.data[off] >= 0)
    np.testing.assert_allclose(np.asarray(op.mats[0].sum(axis=1)).ravel(), 0, atol=1e-10)


def test_barrier_scan_and_residual():
    ctx = OperatorContext(PhaseGrid(nx=1, nv=12), theta=1.0)
    k0, rmin = ev.barrier_scan(ctx)
    assert k0 is not None and rmin >= 0
    assert ev.barrier_value(0.0, [1.0, 2.0, 2.0], 3.0) == 10.0
    assert ev.barrier_value(1.0, [0, 0, 0], np.log(2)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        ev.barrier_residual(ctx, 0.0)
