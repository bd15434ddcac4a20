import numpy as np
import pytest
from hypothesis import given, strategies as st

from landau_lab import geometry as geo
from landau_lab.evolution import Trajectory
from landau_lab.phase_space import Field, PhaseGrid

from oracles import kinetic_gauge_brentq

coord = st.floats(-50, 50, allow_nan=False)
vec = st.tuples(coord, coord, coord)


def test_gauge_examples():
    assert geo.kinetic_distance((0.0, (0, 0, 0), (0, 0, 0))) == 0.0
    assert geo.kinetic_distance((0.0, (0, 0, 0), (3.0, 4.0, 0))) == pytest.approx(5.0, rel=1e-14)
    assert geo.kinetic_distance((16.0, (0, 0, 0), (0, 0, 0))) == pytest.approx(4.0, rel=1e-14)
    assert geo.kinetic_distance((0.0, (8.0, 0, 0), (0, 0, 0))) == pytest.approx(2.0, rel=1e-14)


@given(st.floats(-50, 50), vec, vec)
def test_gauge_matches_brent_and_solves_equation(t, x, v):
    z = (t, x, v)
    rho = geo.kinetic_distance(z)
    ref = kinetic_gauge_brentq(t, np.array(x), np.array(v))
    assert rho == pytest.approx(ref, rel=1e-12, abs=0)
    if rho > 0:
        assert abs(geo.gauge_residual(z, rho)) <= 1e-12


@given(st.floats(-5, 5), vec, vec, st.floats(1e-3, 1e3))
def test_gauge_scaling(t, x, v, lam):
    rho = geo.kinetic_distance((t, x, v))
    scaled = geo.kinetic_distance((lam ** 2 * t, lam ** 3 * np.array(x), lam * np.array(v)))
    assert scaled == pytest.approx(lam * rho, rel=1e-10, abs=1e-300)


def test_backends_agree():
    rng = np.random.default_rng(0)
    t, x, v = rng.normal(size=200), rng.normal(size=(200, 3)), rng.normal(size=(200, 3))
    a = geo.kinetic_distance_many(t, x, v, backend="numpy")
    b = geo.kinetic_distance_many(t, x, v, backend="numba")
    np.testing.assert_allclose(a, b, rtol=1e-14)


@given(st.floats(-3, 3), vec, vec)
def test_group_law_inverse(t, x, v):
    z = (t, x, v)
    e = geo.group_inverse_compose(z, z)
    assert e[0] == 0
    np.testing.assert_allclose(e[1], 0, atol=1e-12)
    np.testing.assert_allclose(e[2], 0, atol=1e-12)


def test_cylinder_membership():
    Q = geo.KineticCylinder(1.0, (0, 0, 0), (0, 0, 0), 1.0)
    assert geo.cylinder_contains(Q, (1.0, (0, 0, 0), (0, 0, 0)))
    assert not geo.cylinder_contains(Q, (0.0, (0, 0, 0), (0, 0, 0)))  # half-open in time
    assert not geo.cylinder_contains(Q, (1.5, (0, 0, 0), (0, 0, 0)))
    assert not geo.cylinder_contains(Q, (0.5, (0, 0, 0), (1.0, 0, 0)))
    near_pi = geo.KineticCylinder(0.0, (np.pi - 0.1, 0, 0), (0, 0, 0), 0.7)
    assert geo.cylinder_contains(near_pi, (0.0, (-np.pi + 0.1, 0, 0), (0, 0, 0)))
    assert not geo.cylinder_contains(near_pi, (0.0, (-np.pi + 0.1, 0, 0), (0, 0, 0)), torus=False)
    with pytest.raises(ValueError):
        geo.KineticCylinder(0.0, (0, 0, 0), (0, 0, 0), 0.0)


def test_sampled_points_lie_in_cylinder():
    Q = geo.KineticCylinder(0.0, (0, 0, 0), (0, 0, 0), 0.3)
    dt, dx, dv = geo.sample_cylinder(Q, 1000, np.random.default_rng(1))
    assert np.all(geo.cylinder_contains_many(Q, dt, dx, dv))


@pytest.mark.parametrize("v0", [(3.0, 0, 0), (0.0, 2.2, 2.2), (-1.0, 1.0, -2.5)])
def test_frame_map_round_trip_and_rotation(v0):
    fc = geo.FrameChange(0.5, (0.1, -0.2, 0.3), v0)
    O = fc.O
    np.testing.assert_allclose(O.T @ O, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(O[:, 0], np.array(v0) / np.linalg.norm(v0), atol=1e-14)
    z = (0.7, np.array([0.4, 0.5, -0.6]), np.array([1.0, 2.0, 3.0]))
    back = geo.frame_map_inverse(fc, geo.frame_map(fc, z))
    np.testing.assert_allclose(back[1], z[1], atol=1e-12)
    np.testing.assert_allclose(back[2], z[2], atol=1e-12)


def test_frame_change_shell_index_and_radii():
    fc = geo.FrameChange(0.0, (0, 0, 0), (3.0, 0, 0), m=10)
    assert fc.N == 3
    r0, r1, r2 = fc.radii()
    assert r0 == pytest.approx(5.0 ** -10)
    assert r0 < r1 < r2
    with pytest.raises(ValueError):
        geo.FrameChange(0.0, (0, 0, 0), (0.1, 0, 0))


@pytest.mark.parametrize("v0", [(3.0, 0, 0), (1.8, 1.7, 0.9), (0, 0, -2.7)])
def test_containments_hold(v0):
    fc = geo.FrameChange(0.0, (0, 0, 0), v0, m=10)
    assert fc.N == 3
    assert geo.containment_violations(fc, n=500, seed=2) == (0, 0)


def test_oscillation_and_holder():
    g = PhaseGrid(nx=8, nv=6)
    f = Field(g, np.broadcast_to(g.v[0], g.shape))
    Q = geo.KineticCylinder(0.0, (0, 0, 0), (0, 0, 0), 2.0)
    inside = np.abs(g.v_axis) < 2.0
    assert geo.oscillation(f, Q) == pytest.approx(2 * np.max(g.v_axis[inside]))
    with pytest.raises(ValueError):
        geo.oscillation(f, geo.KineticCylinder(0.0, (0, 0, 0), (100, 0, 0), 1.0))
    fn = lambda t, x, v: float(np.asarray(v)[0])
    q = geo.holder_quotient(fn, (0.0, (0, 0, 0), (1.0, 0, 0)), (0.0, (0, 0, 0), (0, 0, 0)))
    assert q == pytest.approx(1.0)
    q3 = geo.holder_quotient(fn, (0.0, (0, 0, 0), (8.0, 0, 0)), (0.0, (0, 0, 0), (0, 0, 0)), convention="3alpha")
    assert q3 == pytest.approx(1.0)
    with pytest.raises(ValueError):
        geo.holder_quotient(fn, (0.0, (0, 0, 0), (0, 0, 0)), (0.0, (0, 0, 0), (0, 0, 0)))


def test_holder_seminorm_of_constant_is_zero():
    g = PhaseGrid(nx=4, nv=6)
    traj = Trajectory(g)
    for t in (0.0, 0.5):
        traj.times.append(t)
        traj.snapshots.append(Field(g, np.full(g.shape, 2.0)))
    out = geo.holder_seminorm_sampled(traj, n_pairs=300)
    assert out and all(a == 0 and b == 0 for a, b in out.values())
