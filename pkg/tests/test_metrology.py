import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dissipative_cavity import metrology
from dissipative_cavity.core import CavitySystem
from dissipative_cavity.errors import NoCoupling, ZeroSignalTransfer

REF = CavitySystem(gamma1=1.0, gamma2=1.0, g_gamma0=1.0)
rates = st.floats(0.05, 20.0)


def test_imprecision_reference():
    assert metrology.imprecision_psd(REF, 0.0) == pytest.approx(0.25, rel=1e-15)
    assert metrology.imprecision_psd(REF.replace(g_gamma0=2.0), 0.0) == pytest.approx(0.25 / 4, rel=1e-15)


def test_imprecision_engine_reference_point():
    s = REF.replace(gamma2=3.0)
    closed = metrology.imprecision_psd(s, 0.7)
    engine, theta = metrology.engine_imprecision(s, 0.7)
    assert engine == pytest.approx(closed, rel=1e-10)
    assert theta == pytest.approx(0.0, abs=1e-12) or theta == pytest.approx(math.pi, abs=1e-12)


def test_imprecision_needs_dissipative_coupling():
    with pytest.raises(ZeroSignalTransfer):
        metrology.imprecision_psd(REF.replace(g_gamma0=0.0), 0.0)


def test_backaction_values():
    assert metrology.backaction_psd(REF) == pytest.approx(1.0)
    assert metrology.backaction_psd(REF.replace(g_gamma0=0.0)) == 0.0
    assert metrology.backaction_psd(REF.replace(g_omega0=1.0)) == pytest.approx(3.0)


@given(rates, rates, st.floats(0.0, 10.0), st.floats(0.01, 5.0))
@settings(max_examples=200, deadline=None)
def test_engine_reproduces_closed_forms(g1, g2, w, g):
    s = CavitySystem(gamma1=g1, gamma2=g2, g_gamma0=g)
    imp, _ = metrology.engine_imprecision(s, w)
    assert imp == pytest.approx(metrology.imprecision_psd(s, w), rel=1e-10)
    assert metrology.engine_backaction(s, w) == pytest.approx(metrology.backaction_psd(s, w), rel=1e-10)


@pytest.mark.parametrize(
    "gamma2, omega, expected", [(1.0, 0.0, 1.0), (1.0, 0.5, 1.25), (2.0, 0.0, 1.125)]
)
def test_product_reference_points(gamma2, omega, expected):
    s = REF.replace(gamma2=gamma2)
    assert metrology.ba_imp_product(s, omega).value_norm == pytest.approx(expected, rel=1e-14)
    assert metrology.ba_imp_product_engine(s, omega).value_norm == pytest.approx(expected, rel=1e-10)


def test_mixed_product_reference_points():
    assert metrology.mixed_product(1.0, 1.0) == 1.5
    assert metrology.mixed_product(1.0, 1e6) == pytest.approx(2.0, abs=1e-11)
    with pytest.raises(NoCoupling):
        metrology.mixed_product(0.0, 0.0)


def test_mixed_product_engine_bad_cavity_limit():
    for xi in (0.0, 0.5, 1.0, 3.0):
        s = REF.replace(g_gamma0=0.01, g_omega0=0.01 * xi)
        engine = metrology.ba_imp_product_engine(s, 0.0).value_norm
        assert engine == pytest.approx((1 + 2 * xi**2) / (1 + xi**2), rel=1e-10)


def test_mixed_product_monotone():
    xi = np.linspace(0, 20, 400)
    vals = np.array([metrology.mixed_product(1.0, x) for x in xi])
    assert np.all(np.diff(vals) > 0)
    assert vals[0] == 1.0 and vals[-1] < 2.0


@given(rates, rates, st.floats(-3, 3), st.floats(0.0, 5.0), st.floats(0.05, 3.0), st.floats(0.0, 3.0))
@settings(max_examples=150, deadline=None)
def test_heisenberg_floor(g1, g2, delta, w, gg, gw):
    s = CavitySystem(gamma1=g1, gamma2=g2, detuning=delta, g_gamma0=gg, g_omega0=gw)
    assert metrology.ba_imp_product_engine(s, w).value_norm >= 1.0 - 1e-9


def test_floor_reached_only_at_critical_coupling():
    assert metrology.ba_imp_product(REF, 0.0).value_norm == 1.0
    for s, w in ((REF.replace(gamma2=1.01), 0.0), (REF, 0.01), (REF.replace(g_omega0=0.01), 0.0)):
        assert metrology.ba_imp_product(s, w).value_norm > 1.0


def test_fig2a_minimum_at_matched_ports():
    g2 = np.logspace(-1, 1, 401)
    vals = [metrology.ba_imp_product(REF.replace(gamma2=x), 0.0).value_norm for x in g2]
    i = int(np.argmin(vals))
    assert g2[i] == pytest.approx(1.0) and vals[i] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("g_omega0, expected", [(0.0, 0.0), (1.0, math.pi / 4)])
def test_optimal_angle(g_omega0, expected):
    assert metrology.optimal_homodyne_angle(REF.replace(g_omega0=g_omega0)) == pytest.approx(expected)


def test_optimal_angle_pure_dispersive_and_none():
    assert metrology.optimal_homodyne_angle(REF.replace(g_gamma0=0.0, g_omega0=1.0)) == pytest.approx(math.pi / 2)
    with pytest.raises(NoCoupling):
        metrology.optimal_homodyne_angle(REF.replace(g_gamma0=0.0))


def test_optimal_angle_matches_engine_search():
    s = REF.replace(g_gamma0=0.01, g_omega0=0.013)
    _, theta = metrology.engine_imprecision(s, 0.0)
    assert theta == pytest.approx(metrology.optimal_homodyne_angle(s), abs=1e-8)


def test_wasted_information_values():
    assert metrology.wasted_information(REF, 0.0) == 0.0
    assert abs(metrology.wasted_information(REF.replace(gamma2=2.0), 0.0)) == pytest.approx(2 / (3 * math.sqrt(2)))
    assert metrology.wasted_information(REF.replace(g_gamma0=0.0, gamma2=3.0), 0.4) == 0.0


@given(rates, rates, st.floats(0.0, 5.0))
@settings(max_examples=100, deadline=None)
def test_wasted_information_zero_only_at_critical_point(g1, g2, w):
    val = abs(metrology.wasted_information(CavitySystem(gamma1=g1, gamma2=g2, g_gamma0=1.0), w))
    if g1 == g2 and w == 0.0:
        assert val == 0.0
    else:
        assert val > 0.0


def test_transmittance_sensitivity():
    assert metrology.transmittance_sensitivity(1.0, 1.0) == 0.0
    assert metrology.transmittance_sensitivity(1.0, 4.0) == pytest.approx(-0.06, rel=1e-14)
    assert metrology.transmittance_sensitivity(1.0, 0.5) > 0.0
    h = 1e-6
    fd = (metrology.transmittance(1.0, 2.0 + h) - metrology.transmittance(1.0, 2.0 - h)) / (2 * h)
    assert metrology.transmittance_sensitivity(1.0, 2.0) == pytest.approx(fd, rel=1e-8)
    assert metrology.transmittance(1.0, 1.0) == 1.0
