import numpy as np
import pytest

from runtumble.grid import (Field, PhaseGrid, WeightedNorm, moments, norm,
                            project_pi)
from runtumble.model import ModelParams, moment_constant


def test_cell_centers(small_grid):
    g = small_grid
    assert g.x[0] == pytest.approx(-g.x_max + g.dx / 2)
    assert g.x[-1] == pytest.approx(g.x_max - g.dx / 2)
    # v = 0 on a cell edge, never a center
    assert np.min(np.abs(g.v)) == pytest.approx(g.dv / 2)


def test_nv_must_be_even():
    with pytest.raises(AssertionError):
        PhaseGrid(10.0, 5.0, 20, 15)


def test_discrete_maxwellian_unit_mass(small_grid, params):
    M = small_grid.discrete_maxwellian(params)
    assert M.sum() * small_grid.dv == pytest.approx(1.0, abs=1e-14)
    # grid symmetry + odd psi: the discrete Lambda-average is exactly 1
    lam = 1.0 + params.chi * params.psi(np.outer(small_grid.x, small_grid.v))
    assert np.allclose((lam * M[None, :]).sum(axis=1) * small_grid.dv, 1.0,
                       atol=1e-13)


def test_field_mass_equals_l1_for_nonnegative(small_grid, rng):
    f = Field(small_grid, rng.random((small_grid.nx, small_grid.nv)))
    assert f.mass() == pytest.approx(norm(f, WeightedNorm("L1")))


def test_field_rejects_nonfinite(small_grid):
    vals = np.zeros((small_grid.nx, small_grid.nv))
    vals[0, 0] = np.nan
    with pytest.raises(AssertionError):
        Field(small_grid, vals)


def test_moments_product_state(small_grid, params):
    g = small_grid
    M = g.discrete_maxwellian(params)
    rho_profile = np.exp(-np.abs(g.x))
    f = Field(g, rho_profile[:, None] * M[None, :])
    mom = moments(f, params)
    assert np.allclose(mom.rho, rho_profile, rtol=1e-12)
    assert np.allclose(mom.flux, 0.0, atol=1e-15)
    # discrete second moment of M against the analytic c2/c0
    c2_over_c0 = moment_constant(2, params) / moment_constant(0, params)
    # midpoint quadrature of v^2 M on dv = 1/3: ~1% discretization error
    assert np.allclose(mom.p2 / mom.rho, c2_over_c0, rtol=2e-2)


def test_project_pi_idempotent(small_grid, params, G_small, rng):
    f = Field(small_grid, rng.random((small_grid.nx, small_grid.nv))
              * G_small.values)
    pf = project_pi(f, G_small)
    ppf = project_pi(pf, G_small)
    assert np.allclose(pf.values, ppf.values, rtol=1e-12)
    assert pf.mass() == pytest.approx(f.mass(), rel=1e-12)


def test_weighted_norms(small_grid, G_small, rng):
    f = Field(small_grid, rng.random((small_grid.nx, small_grid.nv))
              * G_small.values)
    l2 = norm(f, WeightedNorm("L2/G", G=G_small))
    linf = norm(f, WeightedNorm("Linf/G", G=G_small))
    assert l2 > 0 and linf > 0
    assert norm(2.0 * f, WeightedNorm("L2/G", G=G_small)) == \
        pytest.approx(2 * l2)
    with pytest.raises(ValueError):
        norm(f, WeightedNorm("L3"))
