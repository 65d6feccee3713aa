"""Mie coefficients and cross-sections: limits, invariants, regressions."""

import math
import warnings

import numpy as np
import pytest

from miepress.constants import C_LIGHT
from miepress.mie import (MaterialSpec, SphereTarget, ConfigError,
                          TruncationWarning, truncation_order,
                          mie_coefficients, mie_coefficients_direct,
                          cross_sections, sphere_cross_sections)

OMEGA_1550 = 2.0 * math.pi * C_LIGHT / 1550e-9
K_1550 = OMEGA_1550 / C_LIGHT


def make_target(x, eps, omega=OMEGA_1550):
    k = omega / C_LIGHT
    return SphereTarget(x / k, MaterialSpec(epsilon=eps))


# ---------------------------------------------------------------------------
# truncation policy

def test_truncation_policies():
    assert truncation_order(10.0, "auto") == math.ceil(10.0 + 4 * 10.0 ** (1 / 3) + 2)
    assert truncation_order(5.0, "fixed:37") == 37
    assert truncation_order(5.0, 37) == 37
    assert truncation_order(1e-4, "auto") >= 1
    with pytest.raises(ConfigError):
        truncation_order(-1.0, "auto")
    with pytest.raises(ConfigError):
        truncation_order(1.0, "fixed:0")
    with pytest.raises(ConfigError):
        truncation_order(1.0, "nonsense")


# ---------------------------------------------------------------------------
# coefficient limits and identities

def test_rayleigh_dipole_limit():
    # a_1 -> -i (2 x^3 / 3) (eps - 1)/(eps + 2) as x -> 0, with an O(x^5)
    # relative correction, so 0.1% headroom at x = 0.01 is generous
    eps = 2.25
    x = 0.01
    sol = mie_coefficients(make_target(x, eps), OMEGA_1550, 3)
    a1_ref = -1j * (2.0 * x ** 3 / 3.0) * (eps - 1.0) / (eps + 2.0)
    assert abs(sol.a_coeffs[0] - a1_ref) / abs(a1_ref) < 1e-3
    # the magnetic dipole is down by another factor x^2
    assert abs(sol.b_coeffs[0]) < 0.01 * abs(sol.a_coeffs[0])


def test_rayleigh_scattering_cross_section():
    # sigma_sca -> (8 pi / 3 k^2) x^6 |(eps-1)/(eps+2)|^2
    eps = 2.25
    for x in (0.01, 0.005):
        cs = cross_sections(mie_coefficients(make_target(x, eps), OMEGA_1550, 3))
        ref = (8.0 * math.pi / (3.0 * K_1550 ** 2)) * x ** 6 \
            * abs((eps - 1.0) / (eps + 2.0)) ** 2
        assert abs(cs.sigma_sca - ref) / ref < 1e-3


def test_vacuum_sphere_is_transparent():
    sol = mie_coefficients(make_target(2.0, 1.0), OMEGA_1550, 10)
    assert np.all(sol.a_coeffs == 0)
    assert np.all(sol.b_coeffs == 0)


@pytest.mark.parametrize("eps", [2.25, 12.11])
@pytest.mark.parametrize("x", [0.5, 2.0, 40.5])
def test_lossless_unitarity(eps, x):
    # without absorption each coefficient lies on the circle |2c - 1| = 1
    sol = mie_coefficients(make_target(x, eps), OMEGA_1550,
                           truncation_order(x, "auto"))
    assert np.max(np.abs(np.abs(2 * sol.a_coeffs - 1.0) - 1.0)) < 1e-10
    assert np.max(np.abs(np.abs(2 * sol.b_coeffs - 1.0) - 1.0)) < 1e-10


@pytest.mark.parametrize("eps", [2.25, 12.11 + 0.1j, 1.5 + 2.0j])
@pytest.mark.parametrize("x", [0.5, 3.0, 8.0])
def test_formulations_agree(eps, x):
    n_trunc = truncation_order(x, "auto")
    tgt = make_target(x, eps)
    s1 = mie_coefficients(tgt, OMEGA_1550, n_trunc)
    s2 = mie_coefficients_direct(tgt, OMEGA_1550, n_trunc)
    assert np.max(np.abs(s1.a_coeffs - s2.a_coeffs)) < 1e-12
    assert np.max(np.abs(s1.b_coeffs - s2.b_coeffs)) < 1e-12


def test_strong_absorption_stays_finite():
    # direct quotients would overflow here; the log-derivative route must not
    sol = mie_coefficients(make_target(30.0, 2.0 + 150.0j), OMEGA_1550,
                           truncation_order(30.0, "auto"))
    assert np.all(np.isfinite(sol.a_coeffs))
    assert np.all(np.abs(sol.a_coeffs) <= 1.0 + 1e-12)


def test_overflow_orders_are_zeroed():
    # fixed large truncation at small size parameter: tail coefficients are
    # below double precision and must come back as exact zeros, not NaN
    sol = mie_coefficients(make_target(0.81, 12.11 + 0.1j), OMEGA_1550, 200)
    assert np.all(np.isfinite(sol.a_coeffs))
    assert sol.a_coeffs[-1] == 0.0 and sol.b_coeffs[-1] == 0.0
    assert abs(sol.a_coeffs[0]) > 0


# ---------------------------------------------------------------------------
# cross-sections

def test_cross_section_invariants_lossy():
    cs = sphere_cross_sections(make_target(5.0, 12.11 + 0.1j), OMEGA_1550)
    assert cs.sigma_ext > cs.sigma_sca > 0
    assert cs.sigma_abs > 0
    assert cs.sigma_pr > 0
    assert abs((cs.sigma_ext - cs.sigma_sca) - cs.sigma_abs) < 1e-25
    assert abs((cs.sigma_ext - cs.sigma_asym) - cs.sigma_pr) < 1e-25


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 5.0, 40.5])
@pytest.mark.parametrize("eps", [2.25, 12.11])
def test_optical_theorem_transparent_limit(x, eps):
    cs = sphere_cross_sections(make_target(x, eps), OMEGA_1550)
    assert abs(cs.sigma_ext - cs.sigma_sca) / cs.sigma_ext < 1e-10


def test_truncation_stability():
    # auto order vs auto + 10 should agree far below any physics tolerance
    tgt = make_target(7.0, 12.11 + 0.1j)
    n_auto = truncation_order(7.0, "auto")
    c1 = cross_sections(mie_coefficients(tgt, OMEGA_1550, n_auto))
    c2 = cross_sections(mie_coefficients(tgt, OMEGA_1550, n_auto + 10))
    assert abs(c1.sigma_pr - c2.sigma_pr) / c2.sigma_pr < 1e-12


def test_tail_warning_on_under_truncation():
    sol = mie_coefficients(make_target(5.0, 12.11 + 0.1j), OMEGA_1550, 3)
    with pytest.warns(TruncationWarning):
        cross_sections(sol)


def test_radiation_pressure_regression_10um():
    # frozen full-precision value for the 10 um / 1550 nm / N = 200 setup
    tgt = SphereTarget(10e-6, MaterialSpec(epsilon=12.11 + 0.1j))
    cs = cross_sections(mie_coefficients(tgt, OMEGA_1550, 200))
    assert cs.sigma_pr == pytest.approx(3.3494290868549707e-10, rel=1e-12)
    assert cs.sigma_pr >= 320e-12  # >= 320 um^2


# ---------------------------------------------------------------------------
# material handling

def test_material_spec_validation():
    with pytest.raises(ConfigError):
        MaterialSpec()
    with pytest.raises(ConfigError):
        MaterialSpec(epsilon=2.0, table=np.zeros((2, 3)))
    with pytest.raises(ConfigError):
        MaterialSpec(epsilon=2.0 - 0.1j)
    with pytest.raises(ConfigError):
        MaterialSpec(table=[[1.0, 2.0], [2.0, 3.0]])
    with pytest.raises(ConfigError):
        MaterialSpec(table=[[2.0, 2.0, 0.0], [1.0, 3.0, 0.0]])
    with pytest.raises(ConfigError):
        MaterialSpec(table=[[1.0, 2.0, -0.1], [2.0, 3.0, 0.0]])


def test_dispersion_interpolation_and_extrapolation():
    table = [[1.0e15, 2.0, 0.0], [2.0e15, 4.0, 0.2]]
    mat = MaterialSpec(table=table)
    assert mat.permittivity(1.5e15) == pytest.approx(3.0 + 0.1j)
    with pytest.warns(UserWarning, match="extrapolated"):
        mat.permittivity(0.5e15)


def test_sphere_target_validation():
    with pytest.raises(ConfigError):
        SphereTarget(0.0, MaterialSpec(epsilon=2.25))
    with pytest.raises(ConfigError):
        mie_coefficients(make_target(1.0, 2.25), OMEGA_1550, 0)
