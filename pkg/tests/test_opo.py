import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitsq.opo import InfeasibleTargetError, OpoParams, _grid_search, calibrate_opo, opo_levels, opo_spectrum
from eitsq.spectral import FrequencyGrid, PairCovariance, check_physical, from_db, to_db

GRID = FrequencyGrid(200, 0.1e6)


def test_x_zero_is_vacuum():
    spec = opo_spectrum(OpoParams(0.0), GRID)
    assert not spec.n_plus.any() and not spec.m.any()
    assert spec.carrier.n0 == 0 and spec.carrier.m0 == 0


def test_half_threshold_on_resonance():
    sm, sp = opo_levels(OpoParams(0.5, 5e6, 1.0), 0.0)
    assert sm == pytest.approx(1 - 2 / 2.25, rel=1e-12)
    assert sp == pytest.approx(9.0, rel=1e-12)
    assert to_db(sm) == pytest.approx(-9.54, abs=5e-3)
    assert to_db(sp) == pytest.approx(9.54, abs=5e-3)


def test_far_sidebands_are_vacuum():
    sm, sp = opo_levels(OpoParams(0.8, 5e6, 0.9), 1e12)
    assert sm == pytest.approx(1.0, abs=1e-9) and sp == pytest.approx(1.0, abs=1e-9)


def test_spectrum_records_match_levels():
    p = OpoParams(0.4, 5e6, 0.7)
    spec = opo_spectrum(p, GRID)
    sm, sp = opo_levels(p, GRID.detunings)
    assert spec.n_plus == pytest.approx((sp + sm - 2) / 4)
    assert spec.m.real == pytest.approx((sm - sp) / 4)
    assert np.all(spec.m.real <= 0) and not spec.m.imag.any()
    assert spec.carrier.n0 == spec.n_plus[0] and spec.carrier.m0 == spec.m[0]


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 0.99), st.floats(0.01, 1.0))
def test_invariants(x, eta):
    p = OpoParams(x, 5e6, eta)
    spec = opo_spectrum(p, GRID)
    assert all(check_physical(PairCovariance(a, b, c)) for a, b, c in zip(spec.n_plus[::20], spec.n_minus[::20], spec.m[::20]))
    sm, sp = opo_levels(p, GRID.detunings)
    assert np.all(np.diff(sm) >= -1e-15) and np.all(np.diff(sp) <= 1e-15)
    prod = sm * sp
    if eta == 1.0:
        assert prod == pytest.approx(np.ones_like(prod), rel=1e-12)
    elif x > 0.01 and eta < 1 - 1e-6:
        assert np.all(prod > 1)


def test_loss_lifts_product_above_one():
    # (1 - eta A)(1 + eta B) is concave in eta and equals 1 at eta = 0 and 1
    etas = np.linspace(0.01, 0.99, 99)
    prods = np.array([np.prod(opo_levels(OpoParams(0.6, 5e6, eta), 1e6)) for eta in etas])
    assert np.all(prods > 1)
    assert np.all(np.diff(prods, 2) < 0)


def test_calibration_reproduces_targets():
    p = calibrate_opo(-1.60, 3.71, 1e6, 5e6)
    sm, sp = opo_levels(p, 1e6)
    assert to_db(sm) == pytest.approx(-1.60, abs=0.02)
    assert to_db(sp) == pytest.approx(3.71, abs=0.02)
    assert p.x == pytest.approx(0.3696, abs=1e-4)
    assert p.eta_esc == pytest.approx(0.3994, abs=1e-4)


def test_calibration_agrees_with_grid_search_oracle():
    sm, sp = from_db(-1.60), from_db(3.71)
    x, eta, resid = _grid_search(sm, sp, (1e6 / 5e6) ** 2, nx=1000, neta=1000)
    p = calibrate_opo(-1.60, 3.71)
    assert resid < 0.02
    assert p.x == pytest.approx(x, abs=2e-3)
    assert p.eta_esc == pytest.approx(eta, abs=2e-3)


def test_calibration_is_deterministic():
    assert calibrate_opo(-1.60, 3.71) == calibrate_opo(-1.60, 3.71)


@pytest.mark.parametrize("sqz, anti", [(-3.0103, 3.0103), (-4.0, 3.0), (1.0, 3.0), (-1.0, -0.5)])
def test_infeasible_targets(sqz, anti):
    with pytest.raises(InfeasibleTargetError):
        calibrate_opo(sqz, anti)


def test_symmetric_targets_are_outside_the_model():
    # independent scan: no (x, eta) pair reproduces symmetric dB levels
    xs = np.linspace(1e-4, 0.999, 600)[:, None]
    etas = np.linspace(1e-3, 1.0, 600)[None, :]
    om2 = 0.04
    sm = 1 - etas * 4 * xs / ((1 + xs) ** 2 + om2)
    sp = 1 + etas * 4 * xs / ((1 - xs) ** 2 + om2)
    assert np.all(sm * sp >= 1 - 1e-12)
    assert np.all(-to_db(sm) <= to_db(sp) + 1e-12)


def test_vacuum_limit_targets():
    p = calibrate_opo(-0.0001, 0.0001 * 1.0001)
    assert p.x < 1e-3


@pytest.mark.parametrize("kw", [dict(x=1.0), dict(x=-0.1), dict(x=0.5, eta_esc=0.0), dict(x=0.5, gamma_hwhm=0.0)])
def test_params_validated(kw):
    with pytest.raises(ValueError):
        OpoParams(**kw)
