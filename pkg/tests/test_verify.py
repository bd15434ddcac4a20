import json

import numpy as np
import pytest

from landau_lab import verify as vf
from landau_lab.evolution import StepperConfig, run_linear
from landau_lab.operators import OperatorContext
from landau_lab.persist import dumps_json
from landau_lab.phase_space import Field, PhaseGrid
from landau_lab.samples import initial_field


def test_check_result_contract():
    with pytest.raises(ValueError):
        vf.CheckResult("x", "maybe")
    with pytest.raises(ValueError):
        vf.CheckResult("x", "fail")
    r = vf.CheckResult("x", "fail", {"c": np.float64(1.5), "n": np.int64(3)}, 0.1, "p", {"node": (1, 2)})
    d = json.loads(dumps_json(r.to_dict()))
    assert d["fitted_constants"] == {"c": 1.5, "n": 3} and d["witness"] == {"node": [1, 2]}
    assert not r.passed and vf.CheckResult("y", "n/a").passed


def test_geometry_suite_passes():
    res = vf.suite_geometry(vf.SuiteSettings())
    assert [r.status for r in res] == ["pass"] * 4


def test_identity_suite_passes():
    res = vf.suite_operator_identities(vf.SuiteSettings(nx=2, nv=24))
    bad = [r for r in res if r.status != "pass"]
    assert not bad, [r.to_dict() for r in bad]
    ref = {r.name: r.fitted_constants for r in res}["theta_conjugation_refinement"]
    assert ref["order"] >= 1.0


def test_identity_suite_on_zero_fields():
    res = vf.suite_operator_identities(vf.SuiteSettings(nx=2, nv=24), zero_fields=True)
    assert all(r.status == "pass" for r in res)


def test_spectral_suite_unperturbed_and_large_g():
    s = vf.SuiteSettings()
    res = {r.name: r for r in vf.suite_spectral_bounds(s)}
    assert all(r.status == "pass" for r in res.values())
    c = res["spectral_exponents"].fitted_constants
    assert abs(c["parallel"] + 3) <= 0.3 and abs(c["perpendicular"] + 1) <= 0.3
    grid = PhaseGrid(2, 12)
    big = Field(grid, np.full(grid.shape, 0.5))
    assert all(r.status == "n/a" for r in vf.suite_spectral_bounds(s, big))


def test_small_grid_barrier_and_conservation():
    s = vf.SuiteSettings(nx=4, nv=12, t_end=0.1, dt=0.05)
    assert all(r.passed for r in vf.suite_barrier(s))
    assert all(r.passed for r in vf.suite_conservation(s))


def test_decay_suite_zero_trajectory_is_trivial():
    grid = PhaseGrid(2, 8)
    traj = run_linear(Field.zeros(grid), OperatorContext(grid), StepperConfig(dt=0.1, t_end=0.3))
    res = vf.suite_decay(traj)
    assert all(r.status == "pass" for r in res)


def test_energy_slack_first_order_in_dt():
    grid = PhaseGrid(4, 12)
    ctx = OperatorContext(grid)
    f0 = initial_field(grid, "wave", 5e-3)
    slack = [vf.energy_slack(run_linear(f0, ctx, StepperConfig(dt=dt, t_end=0.4), keep_all=True), ctx)
             for dt in (0.04, 0.02)]
    assert slack[0] / slack[1] >= 1.8


def test_run_suites_rejects_unknown():
    with pytest.raises(KeyError):
        vf.run_suites(["nope"], vf.SuiteSettings())
    assert "geometry" in vf.suite_names()


def test_smallness_scan_reports_thresholds():
    s = vf.SuiteSettings(nx=4, nv=8, dt=0.05)
    scan = vf.smallness_scan(s, amplitudes=(1e-3, 10.0), n_steps=3, runs=1)
    small, big = scan["rows"]
    assert small["picard_converged"] and small["max_growth"] <= 1 + 1e-12 and small["min_eig_ratio"] > 0.99
    assert big["min_eig_ratio"] < 0 and scan["max_principle_threshold"] == 10.0
