import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from runtumble.model import (ModelParams, SignPsi, TablePsi, TanhPsi,
                             jbracket, maxwellian, moment_constant,
                             psi_product, tumbling_rate, velocity_cut,
                             zeta_lower_bound)


def test_moment_constants_gamma_one(params):
    # closed forms for gamma = 1, d = 1
    assert moment_constant(0, params) == pytest.approx(2.0)
    assert moment_constant(1, params) == pytest.approx(2.0)
    assert moment_constant(2, params) == pytest.approx(4.0)
    assert moment_constant(4, params) == pytest.approx(48.0)


def test_moment_constant_matches_quadrature():
    for gamma in (0.5, 1.0, 2.0):
        p = ModelParams(gamma=gamma, chi=0.5)
        for k in (0, 2):
            val, _ = integrate.quad(
                lambda v: 2 * v**k * np.exp(-v**gamma / gamma), 0, np.inf)
            assert moment_constant(k, p) == pytest.approx(val, rel=1e-10)


def test_moment_constant_overflow():
    p = ModelParams(gamma=0.01, chi=0.5)
    with pytest.raises(OverflowError):
        moment_constant(40, p)


def test_maxwellian_normalized(params):
    val, _ = integrate.quad(lambda v: maxwellian(v, params), -np.inf, np.inf)
    assert val == pytest.approx(1.0, rel=1e-10)
    assert maxwellian(0.0, params) == pytest.approx(0.5)


def test_tumbling_rate_bounds(params, rng):
    z = rng.standard_normal(1000) * 5
    lam = tumbling_rate(z, params)
    assert np.all(lam >= 1 - params.chi - 1e-15)
    assert np.all(lam <= 1 + params.chi + 1e-15)


def test_psi_product_nonnegative(rng):
    for psi in (SignPsi(), TanhPsi(scale=10.0)):
        p = ModelParams(chi=0.5, psi=psi)
        z = rng.standard_normal(500) * 3
        assert np.all(psi_product(z, p) >= 0)


def test_table_psi_odd_and_clamped():
    psi = TablePsi([0.5, 1.0, 2.0], [0.2, 0.6, 1.0])
    assert psi(0.0) == 0.0
    assert psi(-1.0) == -psi(1.0)
    assert psi(100.0) == 1.0  # clamped beyond the last sample
    z = np.linspace(0, 5, 200)
    assert np.all(np.diff(psi(z)) >= -1e-12)


def test_table_psi_rejects_decreasing():
    with pytest.raises(AssertionError):
        TablePsi([0.0, 1.0, 2.0], [0.5, 0.2, 0.9])


def test_model_params_validation():
    with pytest.raises(AssertionError):
        ModelParams(gamma=-1.0, chi=0.5)
    with pytest.raises(AssertionError):
        ModelParams(gamma=1.0, chi=1.5)


@given(st.floats(-1e6, 1e6))
def test_jbracket_dominates(x):
    b = float(jbracket(x))
    assert b >= 1.0 and b >= abs(x)
    assert b <= 1.0 + abs(x)


def test_velocity_cut_tail_mass(params):
    V = velocity_cut(params, tail_mass=1e-10)
    tail, _ = integrate.quad(lambda v: maxwellian(v, params), V, np.inf)
    assert 2 * tail <= 1e-10


def test_zeta_lower_bound_sign_profile(params):
    # for psi = sign and |x| = 1 the average is c1/c0 * |x|/jbracket(x) = 1/(2 sqrt 2) * 2
    val = zeta_lower_bound(params, [1.0])
    assert val == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-6)
    # farther out the alignment factor grows toward c1/c0 = 1
    far = zeta_lower_bound(params, [50.0])
    assert far > val
    assert far == pytest.approx(1.0, rel=1e-3)


def test_zeta_lower_bound_requires_far_sample(params):
    with pytest.raises(AssertionError):
        zeta_lower_bound(params, [0.5])
