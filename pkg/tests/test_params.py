import math

import numpy as np
import pytest
from scipy.constants import hbar

from oracles import cubic_roots_numpy
from sideband_si.errors import NoPhysicalRoot, ParameterError
from sideband_si.params import (
    DimGroups,
    DriveParams,
    OmParams,
    _photon_roots,
    dimensionless_groups,
    hz_to_rad,
    mean_displacement,
    photon_cubic_residual,
    real_cubic_roots,
    resolution_class,
    resonant_detuning,
    steady_state_photon,
)


def test_rejects_bad_rates():
    with pytest.raises(ParameterError):
        OmParams(0.0, 0.1, 0.01)
    with pytest.raises(ParameterError):
        OmParams(1.0, -0.1, 0.01)
    with pytest.raises(ParameterError):
        OmParams(1.0, 0.1, -1e-3)
    with pytest.raises(ParameterError):
        OmParams(1.0, 0.1, 1e-3, coupling=-1.0)
    with pytest.raises(ParameterError):
        OmParams(1.0, float("nan"), 1e-3)
    OmParams(1.0, 0.1, 0.0)  # lossless mechanics is allowed for simulation


def test_groups_example():
    g = dimensionless_groups(OmParams(1.0, 0.1, 0.01, coupling=1e-3))
    assert g.alpha == pytest.approx(4e-6 / 1e-4, rel=1e-14)
    assert g.beta == pytest.approx(2e-6, rel=1e-14)
    assert g.theta == pytest.approx(0.055, rel=1e-14)
    assert g.psi == pytest.approx(5e-5, rel=1e-14)


def test_groups_reject_undamped_and_negative():
    with pytest.raises(ParameterError):
        dimensionless_groups(OmParams(1.0, 0.1, 0.0, 1e-3))
    with pytest.raises(ParameterError):
        DimGroups(-1.0, 1.0, 0.1, 0.1)


def test_resolution_classes():
    assert resolution_class(OmParams(1.0, 0.1, 1e-3)) == "resolved"
    assert resolution_class(OmParams(1.0, 0.5, 1e-3)) == "Doppler"
    assert resolution_class(OmParams(1.0, 2.0, 1e-3)) == "unresolved"


def test_mean_displacement_static_balance():
    p = OmParams(1.3, 0.1, 0.02, coupling=0.01)
    b0, x0 = mean_displacement(p, 50.0)
    # db/dt = (-i Omega - Gamma/2) b + i g0 n = 0
    assert abs((-1j * p.mech_freq - 0.5 * p.mech_decay) * b0 + 1j * p.coupling * 50.0) < 1e-15
    assert x0 == pytest.approx(2 * b0.real, rel=1e-14)
    assert mean_displacement(p, 0.0) == (0j, 0.0)


def test_hz_conversion():
    assert hz_to_rad(1.0) == pytest.approx(2 * math.pi)


def test_zero_power_has_zero_photons():
    p = OmParams(1.0, 0.1, 1e-3, coupling=1e-3)
    ss = steady_state_photon(p, DriveParams(0.0, 1.0))
    assert ss.roots == (0.0,) and not ss.bistable


def test_linear_cavity_single_root():
    p = OmParams(1.0, 0.1, 1e-3, coupling=0.0, detuning=0.03)
    d = DriveParams(1e-15, 2e15)
    F = d.photon_flux_rate(p.optical_decay)
    assert F == pytest.approx(0.1 * 1e-15 / (hbar * 2e15))
    ss = steady_state_photon(p, d)
    assert ss.roots == pytest.approx((F / (0.0025 + 0.0009),), rel=1e-12)


def test_bistable_window_against_numpy_roots():
    p = OmParams(1.0, 0.1, 1e-3, coupling=1e-3, detuning=-1.0)
    F = 1e6 * 0.02
    ss = _photon_roots(p, F)
    ref = cubic_roots_numpy(ss.coefficients)
    assert ss.bistable
    assert np.allclose(ss.roots, ref, rtol=1e-9)
    for n in ss.roots:
        assert abs(photon_cubic_residual(p, F, n)) < 1e-9 * F


def test_cubic_degenerate_leading_terms():
    assert real_cubic_roots(0, 0, 2, -4) == [2.0]
    assert real_cubic_roots(0, 1, -3, 2) == pytest.approx([1.0, 2.0])
    assert real_cubic_roots(0, 1, 0, 1) == []
    assert real_cubic_roots(1, -6, 11, -6) == pytest.approx([1.0, 2.0, 3.0], rel=1e-14)
    assert real_cubic_roots(1, 0, 0, -8) == pytest.approx([2.0])


def test_no_physical_root():
    # negative-drive cubic has only negative real roots
    p = OmParams(1.0, 0.1, 1e-3, coupling=1e-3)
    with pytest.raises(NoPhysicalRoot):
        _photon_roots(p, -1.0)


def test_resonant_detuning_cancels_pull():
    p = OmParams(1.0, 0.1, 1e-3, coupling=1e-3)
    n = 1e5
    q = p.replace(detuning=resonant_detuning(p, n))
    F = n * 0.25 * q.optical_decay**2
    assert max(_photon_roots(q, F).roots) == pytest.approx(n, rel=1e-9)


def test_scaled_keeps_groups():
    p = OmParams(1.0, 0.1, 1e-3, coupling=1e-3, detuning=0.2)
    a, b = dimensionless_groups(p), dimensionless_groups(p.scaled(7.5))
    for k in ("alpha", "beta", "theta", "psi"):
        assert getattr(a, k) == pytest.approx(getattr(b, k), rel=1e-13)
