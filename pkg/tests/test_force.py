import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermocasimir import force as fc
from thermocasimir import loops as lo
from thermocasimir.errors import ParameterError


def test_zeta3_quadrature_vs_series_oracle():
    quad_val = fc.zeta3_quadrature()
    series_val = fc.zeta3_series_oracle()
    assert abs(quad_val - series_val) < 1e-10
    assert series_val == pytest.approx(0.60102845157, abs=1e-11)


def test_force_integrand_regular_at_origin():
    # q^2 e^{-q} / sinh q = q (1 - q + ...): finite, tends to q
    q = np.array([1e-10, 1e-6, 1e-3])
    vals = fc._force_integrand(q)
    assert np.all(np.abs(vals / q - 1.0) < 2.0 * q + 1e-12)


def test_leading_force_reference_value():
    th = lo.ThermoState(beta=1.0)
    val = fc.leading_force(th, 10.0)
    assert val == pytest.approx(-4.7830e-5, rel=5e-4)
    assert val == -fc.ZETA3 / (8.0 * np.pi * 1000.0)


def test_leading_force_pure_cubic_scaling():
    th = lo.ThermoState(beta=0.7)
    assert fc.leading_force(th, 20.0) / fc.leading_force(th, 10.0) == 0.125


@settings(max_examples=40, deadline=None)
@given(hbar=st.floats(1e-3, 1e3), c=st.floats(1e-3, 1e3))
def test_leading_force_universality(hbar, c):
    # hbar and c never enter: bit-identical output across microscopic knobs
    d = 37.0
    ref = fc.leading_force(lo.ThermoState(beta=2.0), d)
    val = fc.leading_force(lo.ThermoState(beta=2.0, hbar=hbar, c=c), d)
    assert val == ref


def test_leading_force_parameter_errors():
    with pytest.raises(ParameterError):
        fc.leading_force(lo.ThermoState(beta=1.0), -1.0)


def test_regime_classification():
    th = lo.ThermoState(beta=1.0, hbar=1.0, c=1.0)   # lambda_ph = 1
    assert fc.ForceRegimeParams.from_state(th, 100.0).label == "high-T/large-d"
    assert fc.ForceRegimeParams.from_state(th, 0.01).label == "low-T/small-d"
    assert fc.ForceRegimeParams.from_state(th, 1.0).label == "crossover"


def test_lifshitz_high_temperature_values():
    th = lo.ThermoState(beta=2.0, hbar=0.01, c=1.0)
    d = 500.0
    r1 = fc.lifshitz_reference(th, d, "rTE1", "high-T/large-d")
    r0 = fc.lifshitz_reference(th, d, "rTE0", "high-T/large-d")
    assert r1 / r0 == 2.0
    assert r0 == fc.leading_force(th, d)
    assert r1 < 0.0 and r0 < 0.0


def test_lifshitz_low_temperature_values():
    th = lo.ThermoState(beta=1.0, hbar=1.0, c=100.0)   # lambda_ph = 100
    d = 1.0
    r1 = fc.lifshitz_reference(th, d, "rTE1", "low-T/small-d")
    r0 = fc.lifshitz_reference(th, d, "rTE0", "low-T/small-d")
    casimir = -np.pi**2 * th.hbar * th.c / 240.0
    assert r1 == casimir
    correction = r0 - r1
    assert correction == pytest.approx(fc.ZETA3 / (8.0 * np.pi), rel=1e-12)
    assert correction > 0.0          # the explicitly repulsive piece
    assert r1 < 0.0 and r0 < 0.0     # dominant term shared, both attractive


def test_lifshitz_regime_mismatch_warns():
    th = lo.ThermoState(beta=1.0, hbar=1.0, c=1.0)
    with pytest.warns(UserWarning):
        fc.lifshitz_reference(th, 1000.0, "rTE1", "low-T/small-d")
    with pytest.raises(ParameterError):
        fc.lifshitz_reference(th, 1000.0, "bogus", "high-T/large-d")


def test_assemble_force_unit_brackets_reproduce_universal_law():
    th = lo.ThermoState(beta=1.0, hbar=0.02, c=100.0)
    fb = fc.assemble_force(th, 150.0, -1.0, -1.0, {"a": 0.0, "b": 0.0})
    assert fb.f_assembled == pytest.approx(fb.f_leading, rel=1e-14)
    assert fb.f_leading < 0.0
    assert fb.certified


def test_assemble_force_certification_gate():
    th = lo.ThermoState(beta=1.0, hbar=0.02, c=100.0)
    fb = fc.assemble_force(th, 150.0, -0.9, -1.0, {"a": 0.1, "b": 0.0},
                           residual_tolerance=1e-2)
    assert not fb.certified
    assert fb.notes


def test_assemble_force_magnetic_remainder_is_bound_only():
    th = lo.ThermoState(beta=1.0, hbar=0.02, c=100.0)
    fb = fc.assemble_force(th, 100.0, -1.0, -1.0, {"a": 0.0}, wab_scale=3.0)
    assert fb.f_capacitor_mag_bound["exponent"] == -5
    assert fb.f_capacitor_mag_bound["bound_at_d"] == pytest.approx(3.0 / 100.0**5)
    # the bound never contaminates the assembled value
    assert fb.f_assembled == pytest.approx(fb.f_leading, rel=1e-14)


def test_assemble_force_json_keys():
    th = lo.ThermoState(beta=1.0, hbar=0.02, c=100.0)
    fb = fc.assemble_force(th, 100.0, -1.0, -1.0, {"a": 0.0})
    blob = fb.to_json_dict()
    for key in ("f_leading", "capacitor_el", "capacitor_mag_exponent",
                "lifshitz", "residuals", "f_assembled"):
        assert key in blob
    assert set(blob["lifshitz"]) >= {"eq2", "eq3", "eq4", "eq5"}
    assert blob["lifshitz"]["eq4"] / blob["lifshitz"]["eq5"] == 2.0


def test_capacitor_force_neutral_and_charged():
    el, expo = fc.capacitor_force(0.0, 0.0)
    assert el == 0.0 and expo is None
    el, _ = fc.capacitor_force(1.0, -1.0)
    assert el == pytest.approx(-2.0 * np.pi)
    assert el < 0.0     # attractive, separation-independent


def test_capacitor_force_magnetic_exponent_fit():
    x = np.geomspace(5.0, 50.0, 12)
    decay = {"x_values": x, "m_values": 3.0 * x**-6.0}
    _, expo = fc.capacitor_force(0.0, 0.0, magnetic_decay=decay)
    assert expo == pytest.approx(6.0, rel=1e-10)
    assert expo > 4.0


def test_fit_loglog_slope_recovers_power():
    x = np.geomspace(1.0, 100.0, 8)
    slope, err = fc.fit_loglog_slope(x, 2.0 * x**-2.5)
    assert slope == pytest.approx(-2.5, abs=1e-12)
    assert err < 1e-12
