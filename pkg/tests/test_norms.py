import numpy as np
import pytest
from hypothesis import given, strategies as st

from landau_lab.norms import (NormReport, energy, inner_sigma, norm_l2_weighted, norm_report,
                              norm_sigma_weighted, norm_sup_weighted)
from landau_lab.operators import OperatorContext
from landau_lab.phase_space import Field, PhaseGrid, maxwellian
from landau_lab.projection import apply_IminusP

GRID = PhaseGrid(nx=2, nv=12)


def _field(seed, grid=GRID):
    rng = np.random.default_rng(seed)
    return Field(grid, rng.standard_normal(grid.shape) * np.exp(-0.4 * grid.speed ** 2))


def test_l2_of_sqrt_maxwellian():
    g = PhaseGrid(nx=4, nv=32)
    f = Field(g, np.broadcast_to(np.exp(-0.5 * g.speed ** 2), g.shape))
    # int over the torus of int mu dv = 2 pi * pi^{3/2}
    assert norm_l2_weighted(f) ** 2 == pytest.approx(2 * np.pi * np.pi ** 1.5, rel=1e-8)


def test_sup_norm_example():
    g = PhaseGrid(nx=1, nv=4, rv=2.0)
    data = np.zeros(g.shape)
    data[0, 0, 0, 0] = -2.0
    f = Field(g, data)
    r = np.sqrt(3 * 1.5 ** 2)
    assert norm_sup_weighted(f, 0) == 2.0
    assert norm_sup_weighted(f, 2) == pytest.approx(2 * (1 + r) ** 2)


@given(st.one_of(st.just(0.0), st.floats(1e-6, 3), st.floats(-3, -1e-6)), st.integers(0, 2 ** 31))
def test_norms_homogeneous(c, seed):
    f = _field(seed)
    cf = Field(GRID, c * f.data)
    for fn in (norm_l2_weighted, norm_sigma_weighted, norm_sup_weighted):
        assert fn(cf, 1.0) == pytest.approx(abs(c) * fn(f, 1.0), rel=1e-12)


def test_sigma_inner_product_symmetric_and_monotone_in_weight():
    f, h = _field(1), _field(2)
    assert inner_sigma(f, h) == pytest.approx(inner_sigma(h, f), rel=1e-12)
    assert norm_sigma_weighted(f, 1.0) >= norm_sigma_weighted(f, 0.0)


def test_sigma_norm_dominated_by_dissipation_on_micro_part():
    # <L f, f> is bounded by a multiple of the sigma norm (upper half of the equivalence)
    g = PhaseGrid(nx=1, nv=12)
    ctx = OperatorContext(g)
    for seed in range(5):
        f = apply_IminusP(_field(seed, g))
        dis = np.sum(ctx.L_flux(f.data) * f.data) * g.cell_volume * g.x_volume
        assert 0 <= dis <= 4 * norm_sigma_weighted(f) ** 2


def test_energy_of_constant_trajectory():
    f = _field(3)
    traj = [(0.0, f), (0.5, f), (1.5, f)]
    expected = 0.5 * norm_l2_weighted(f) ** 2 + 1.5 * norm_sigma_weighted(f) ** 2
    assert energy(traj) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        energy([])
    with pytest.raises(ValueError):
        energy([(1.0, f), (0.5, f)])


def test_norm_report():
    f = _field(4)
    r = norm_report(f, 1.0, sigma_integral=0.25)
    assert r.energy_theta == pytest.approx(0.5 * r.l2_theta ** 2 + 0.25)
    with pytest.raises(ValueError):
        NormReport(0.0, -1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        inner_sigma(f, Field.zeros(PhaseGrid(nx=2, nv=10)))


def test_maxwellian_field_norm_is_finite():
    g = PhaseGrid(nx=1, nv=12)
    mu = maxwellian(g)
    f = Field(g, mu.data[None])
    assert np.isfinite(norm_sigma_weighted(f, 2.0))
