"""Riccati-Bessel recurrences against extended-precision references."""

import math

import mpmath
import numpy as np
import pytest

from miepress.bessel import (RiccatiTable, riccati_psi, riccati_xi,
                             log_derivative, BesselDomainError,
                             BesselRangeError, IM_Z_CUTOFF)

mpmath.mp.dps = 40


def mp_psi(n, z):
    z = mpmath.mpmathify(z)
    return complex(mpmath.sqrt(mpmath.pi * z / 2) * mpmath.besselj(n + mpmath.mpf(1) / 2, z))


def mp_chi(n, x):
    x = mpmath.mpf(x)
    return float(-mpmath.sqrt(mpmath.pi * x / 2) * mpmath.bessely(n + mpmath.mpf(1) / 2, x))


@pytest.mark.parametrize("z", [0.05, 1.0, 7.3, 100.0,
                               2.0 + 0.5j, 0.3 - 0.2j, 141.0 * (3.48 + 0.014j)])
def test_psi_matches_extended_precision(z):
    n_max = 25
    t = riccati_psi(n_max, z)
    # conditioning degrades linearly with the recurrence length ~ |z|
    tol = 1e-13 * max(10.0, abs(z))
    for n in (0, 1, 2, 5, 12, 25):
        ref = mp_psi(n, z)
        scale = max(abs(ref), 1e-300)
        assert abs(t.psi[n] - ref) / scale < tol


def test_psi_prime_identity_and_reference():
    # psi'_n = psi_{n-1} - (n/z) psi_n must hold exactly by construction,
    # and the values themselves must agree with the differentiated reference
    z = 3.7 + 0.9j
    t = riccati_psi(12, z)
    for n in (1, 4, 12):
        ref = mp_psi(n - 1, z) - (n / z) * mp_psi(n, z)
        assert abs(t.psi_prime[n] - ref) / abs(ref) < 1e-12


def test_psi_frozen_values():
    # spot values from 40-digit arithmetic, frozen so the test does not
    # depend on mpmath being importable in reduced environments
    t = riccati_psi(5, 2.0)
    assert t.psi[0] == pytest.approx(0.9092974268256817, rel=1e-14)
    assert t.psi[1] == pytest.approx(0.8707955499599832, rel=1e-14)
    assert t.psi[5] == pytest.approx(0.0052703395404882347, rel=1e-13)


def test_psi_near_sin_zero_argument():
    # sin z ~ 0 at z = pi: the normalization must fall back to psi_1
    z = math.pi * (1.0 + 1e-13)
    t = riccati_psi(8, z)
    for n in (1, 3, 8):
        ref = mp_psi(n, z)
        assert abs(t.psi[n] - ref) / abs(ref) < 1e-11


@pytest.mark.parametrize("x", [0.3, 2.0, 15.0])
def test_chi_part_matches_extended_precision(x):
    n_max = 12
    t = riccati_xi(n_max, x)
    for n in (0, 1, 6, 12):
        chi = float((1j * (t.xi[n] - t.psi[n])).real)  # xi = psi - i chi
        ref = mp_chi(n, x)
        assert abs(chi - ref) / abs(ref) < 1e-12


def test_xi_seed_closed_form():
    x = 1.7
    t = riccati_xi(3, x)
    assert t.xi[0] == pytest.approx(-1j * np.exp(1j * x), rel=1e-14)
    # xi_0(pi) = -i e^{i pi} = i, xi_1(1) = -e^{i}(1 + i) from h1_1
    assert riccati_xi(1, math.pi).xi[0] == pytest.approx(1j, abs=1e-15)
    assert riccati_xi(1, 1.0).xi[1] == pytest.approx(-np.exp(1j) * (1 + 1j),
                                                    rel=1e-14)


def test_wronskian_sweep():
    # psi xi' - psi' xi = -i for every order and argument
    worst = 0.0
    for x in np.logspace(-3, 2, 30):
        n_max = max(3, int(x + 4 * x ** (1 / 3) + 2))
        t = riccati_xi(n_max, x)
        stop = t.xi_valid_max + 1
        w = t.psi[:stop] * t.xi_prime[:stop] - t.psi_prime[:stop] * t.xi[:stop]
        worst = max(worst, float(np.max(np.abs(w - 1j))))
    assert worst < 1e-10


def test_xi_overflow_clamp():
    # for n >> x the irregular part saturates double precision; the table
    # must report the last finite order instead of propagating inf/nan
    t = riccati_xi(200, 0.81)
    assert t.xi_valid_max < 200
    assert np.all(np.isfinite(t.xi[:t.xi_valid_max + 1]))
    assert np.all(np.isinf(t.xi[t.xi_valid_max + 1:].real)
                  | np.isinf(t.xi[t.xi_valid_max + 1:].imag))
    # a large argument keeps every requested order
    assert riccati_xi(200, 141.0).xi_valid_max == 200


def test_log_derivative_matches_quotient():
    for z in (1.3 + 0.4j, 8.0 + 2.0j, 25.0 * (3.48 + 0.014j)):
        d = log_derivative(20, z)
        for n in (1, 7, 20):
            ref = (mp_psi(n - 1, z) - (n / z) * mp_psi(n, z)) / mp_psi(n, z)
            assert abs(d[n] - ref) / abs(ref) < 1e-11


def test_log_derivative_interior_worst_case():
    # the largest interior argument of the preset radius sweep:
    # z = m x at a = 10 um, 1550 nm, eps = 12.11 + 0.1i, order 200
    z = 141.0 * (3.48 + 0.014j)
    d = log_derivative(200, z)
    assert np.all(np.isfinite(d))
    for n in (1, 100, 200):
        ref = (mp_psi(n - 1, z) - (n / z) * mp_psi(n, z)) / mp_psi(n, z)
        assert abs(d[n] - ref) / abs(ref) < 1e-10


def test_log_derivative_bounded_for_strong_absorption():
    # raw psi_n overflows here; D_n must stay finite and O(1)
    z = 5.0 + 400.0j
    d = log_derivative(10, z)
    assert np.all(np.isfinite(d))
    assert np.max(np.abs(d)) < 10.0


def test_domain_errors():
    with pytest.raises(BesselDomainError):
        riccati_psi(-1, 1.0)
    with pytest.raises(BesselDomainError):
        riccati_psi(5, 0.0)
    with pytest.raises(BesselDomainError):
        riccati_xi(5, -2.0)
    with pytest.raises(BesselDomainError):
        log_derivative(0, 1.0)
    with pytest.raises(BesselRangeError):
        riccati_psi(5, 1.0 + (IM_Z_CUTOFF + 1.0) * 1j)


def test_downward_recurrence_consistency():
    # the three-term recurrence psi_{n+1} = ((2n+1)/z) psi_n - psi_{n-1}
    # must be satisfied by the returned table itself
    z = 4.2 + 0.3j
    t = riccati_psi(15, z)
    n = np.arange(1, 15)
    resid = np.abs((2 * n + 1) / z * t.psi[1:-1] - t.psi[:-2] - t.psi[2:])
    assert np.max(resid / np.maximum(np.abs(t.psi[2:]), 1e-30)) < 1e-10
