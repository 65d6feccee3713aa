"""Mie coefficients and optical cross-sections for a homogeneous lossy sphere.

Coefficients a_n (TM) and b_n (TE) are evaluated through the
logarithmic-derivative formulation, which stays bounded for strongly
absorbing interiors where the raw Riccati-Bessel quotients overflow.
The direct quotient form (with its 1/eps prefactor, nonmagnetic
convention) is also provided for cross-checking at moderate size
parameters.

Cross-sections (SI, m^2):

    sigma_ext  = (2 pi / k^2) sum (2n+1) [Re a_n + Re b_n]
    sigma_sca  = (2 pi / k^2) sum (2n+1) [|a_n|^2 + |b_n|^2]
    sigma_asym = (4 pi / k^2) sum { n(n+2)/(n+1) Re[a_n a*_{n+1} + b_n b*_{n+1}]
                                    + (2n+1)/(n(n+1)) Re[a_n b*_n] }
    sigma_abs  = sigma_ext - sigma_sca
    sigma_pr   = sigma_ext - sigma_asym
"""

from dataclasses import dataclass, field
import cmath
import math
import warnings

import numpy as np

from .bessel import riccati_psi, riccati_xi, log_derivative, BesselRangeError
from .constants import C_LIGHT


class ConfigError(ValueError):
    """Invalid physical or numerical configuration."""


class TruncationWarning(UserWarning):
    """Series tail not yet below the requested relative tolerance."""


@dataclass
class MaterialSpec:
    """Complex relative permittivity, constant or tabulated over frequency.

    For tabulated data, ``table`` is an (N, 3)-like array of rows
    (omega [rad/s], Re eps, Im eps) with strictly increasing frequencies;
    evaluation interpolates Re and Im linearly and warns on extrapolation.
    """

    epsilon: complex | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if (self.epsilon is None) == (self.table is None):
            raise ConfigError("MaterialSpec needs exactly one of epsilon or table")
        if self.table is not None:
            self.table = np.asarray(self.table, dtype=float)
            if self.table.ndim != 2 or self.table.shape[1] != 3:
                raise ConfigError("dispersion table must have rows (omega, Re eps, Im eps)")
            if np.any(np.diff(self.table[:, 0]) <= 0):
                raise ConfigError("dispersion table frequencies must be strictly increasing")
            if np.any(self.table[:, 2] < 0):
                raise ConfigError("passivity violated: Im eps < 0 in dispersion table")
        elif complex(self.epsilon).imag < 0:
            raise ConfigError(f"passivity violated: Im eps = {complex(self.epsilon).imag} < 0")

    def permittivity(self, omega):
        if self.epsilon is not None:
            return complex(self.epsilon)
        w = self.table[:, 0]
        if omega < w[0] or omega > w[-1]:
            warnings.warn(
                f"permittivity extrapolated at omega = {omega:g} rad/s "
                f"(table covers [{w[0]:g}, {w[-1]:g}])", UserWarning)
        re = np.interp(omega, w, self.table[:, 1])
        im = np.interp(omega, w, self.table[:, 2])
        return complex(re, im)


@dataclass
class SphereTarget:
    """Homogeneous nonmagnetic sphere of radius a [m]."""

    radius: float
    material: MaterialSpec

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError(f"sphere radius must be positive, got {self.radius}")


@dataclass
class MieSolution:
    """Truncated Mie coefficients with the parameters that produced them."""

    omega: float            # rad/s
    k: float                # vacuum wavenumber, 1/m
    size_parameter: float   # x = k a
    interior_argument: complex  # z = k a sqrt(eps)
    epsilon: complex
    n_trunc: int
    a_coeffs: np.ndarray    # index n-1 holds order n
    b_coeffs: np.ndarray


@dataclass
class CrossSections:
    """The five scalar optical cross-sections at one frequency [m^2]."""

    omega: float
    sigma_ext: float
    sigma_sca: float
    sigma_abs: float
    sigma_asym: float
    sigma_pr: float


def truncation_order(x, policy="auto"):
    """Multipole truncation order for size parameter x.

    policy "auto" applies the Wiscombe rule N = ceil(x + 4 x^(1/3) + 2);
    policy "fixed:N" (or an integer) returns N verbatim.  Never below 1.
    """
    if x <= 0:
        raise ConfigError(f"size parameter must be positive, got {x}")
    if policy == "auto":
        return max(1, int(math.ceil(x + 4.0 * x ** (1.0 / 3.0) + 2.0)))
    if isinstance(policy, str) and policy.startswith("fixed:"):
        policy = int(policy.split(":", 1)[1])
    if isinstance(policy, int):
        if policy < 1:
            raise ConfigError(f"fixed truncation order must be >= 1, got {policy}")
        return policy
    raise ConfigError(f"unknown truncation policy: {policy!r}")


def _interior_root(eps):
    """Principal sqrt(eps) with Im >= 0 (decaying interior wave)."""
    m = cmath.sqrt(eps)
    if m.imag < 0:
        m = -m
    return m


def mie_coefficients(target, omega, n_trunc):
    """Mie coefficients a_n, b_n of a sphere at angular frequency omega.

    Uses the logarithmic derivative D_n(z) of the interior Riccati-Bessel
    function, so arbitrary absorption is handled without overflow:

        a_n = [(D_n/m + n/x) psi_n(x) - psi_{n-1}(x)]
              / [(D_n/m + n/x) xi_n(x) - xi_{n-1}(x)]
        b_n = [(m D_n + n/x) psi_n(x) - psi_{n-1}(x)]
              / [(m D_n + n/x) xi_n(x) - xi_{n-1}(x)]

    with m = sqrt(eps).  Algebraically identical to the 1/eps quotient
    form (see ``mie_coefficients_direct``).
    """
    if n_trunc < 1:
        raise ConfigError(f"n_trunc must be >= 1, got {n_trunc}")
    eps = target.material.permittivity(omega)
    if eps.imag < 0:
        raise ConfigError(f"passivity violated at omega = {omega:g}: Im eps < 0")
    k = omega / C_LIGHT
    x = k * target.radius
    m = _interior_root(eps)
    z = m * x

    a = np.zeros(n_trunc, dtype=complex)
    b = np.zeros(n_trunc, dtype=complex)
    if eps != 1.0:
        try:
            d = log_derivative(n_trunc, z)
        except BesselRangeError as exc:
            raise BesselRangeError(f"mie_coefficients at z = {z}: {exc}") from exc
        ext = riccati_xi(n_trunc, x)
        # beyond xi_valid_max the chi part of xi saturates double precision,
        # which means |a_n|, |b_n| < 1e-250 there: exact zeros are correct
        n_eff = min(n_trunc, ext.xi_valid_max)
        psi, xi = ext.psi[:n_eff + 1], ext.xi[:n_eff + 1]
        n_arr = np.arange(1, n_eff + 1)
        da = d[1:n_eff + 1] / m + n_arr / x
        db = d[1:n_eff + 1] * m + n_arr / x
        a[:n_eff] = (da * psi[1:] - psi[:-1]) / (da * xi[1:] - xi[:-1])
        b[:n_eff] = (db * psi[1:] - psi[:-1]) / (db * xi[1:] - xi[:-1])

    return MieSolution(omega=omega, k=k, size_parameter=x, interior_argument=z,
                       epsilon=eps, n_trunc=n_trunc, a_coeffs=a, b_coeffs=b)


def mie_coefficients_direct(target, omega, n_trunc):
    """Mie coefficients from the raw quotient form with 1/eps prefactors.

    Numerically fragile for large Im(z); intended as a cross-check of
    ``mie_coefficients`` at moderate size parameters.
    """
    if n_trunc < 1:
        raise ConfigError(f"n_trunc must be >= 1, got {n_trunc}")
    eps = target.material.permittivity(omega)
    k = omega / C_LIGHT
    x = k * target.radius
    m = _interior_root(eps)
    z = m * x

    a = np.zeros(n_trunc, dtype=complex)
    b = np.zeros(n_trunc, dtype=complex)
    if eps != 1.0:
        interior = riccati_psi(n_trunc, z)
        ext = riccati_xi(n_trunc, x)
        n_eff = min(n_trunc, ext.xi_valid_max)
        # j_n(z) = psi_n(z)/z, h1_n(x) = xi_n(x)/x; d/da[a j_n(k a)] = psi'_n
        jz = interior.psi[1:n_eff + 1] / z
        dpz = interior.psi_prime[1:n_eff + 1]
        jx = ext.psi[1:n_eff + 1] / x
        dpx = ext.psi_prime[1:n_eff + 1]
        hx = ext.xi[1:n_eff + 1] / x
        dhx = ext.xi_prime[1:n_eff + 1]
        a[:n_eff] = (jz * dpx - jx * dpz / eps) / (jz * dhx - hx * dpz / eps)
        b[:n_eff] = (jz * dpx - jx * dpz) / (jz * dhx - hx * dpz)

    return MieSolution(omega=omega, k=k, size_parameter=x, interior_argument=z,
                       epsilon=eps, n_trunc=n_trunc, a_coeffs=a, b_coeffs=b)


def _kahan_sum(terms):
    """Compensated summation in ascending order."""
    s = 0.0
    c = 0.0
    for t in terms:
        y = t - c
        tmp = s + y
        c = (tmp - s) - y
        s = tmp
    return s


def cross_sections(sol, tail_tol=1e-8):
    """The five optical cross-sections from a MieSolution.

    Warns (TruncationWarning) if the last series term is not below
    ``tail_tol`` relative to the accumulated sum.
    """
    a, b = sol.a_coeffs, sol.b_coeffs
    n = np.arange(1, sol.n_trunc + 1, dtype=float)
    pref = 2.0 * math.pi / sol.k ** 2

    ext_terms = (2 * n + 1) * (a.real + b.real)
    sca_terms = (2 * n + 1) * (np.abs(a) ** 2 + np.abs(b) ** 2)
    asym_terms = np.zeros(sol.n_trunc)
    asym_terms[:-1] = (n[:-1] * (n[:-1] + 2) / (n[:-1] + 1)
                       * (a[:-1] * np.conj(a[1:]) + b[:-1] * np.conj(b[1:])).real)
    asym_terms += (2 * n + 1) / (n * (n + 1)) * (a * np.conj(b)).real

    sigma_ext = pref * _kahan_sum(ext_terms)
    sigma_sca = pref * _kahan_sum(sca_terms)
    sigma_asym = 2.0 * pref * _kahan_sum(asym_terms)

    if sigma_ext > 0:
        tail = abs(ext_terms[-1]) + abs(sca_terms[-1]) + 2 * abs(asym_terms[-1])
        if tail * pref > tail_tol * abs(sigma_ext):
            warnings.warn(
                f"Mie series tail {tail * pref:.3e} above {tail_tol:g} x sigma_ext "
                f"at x = {sol.size_parameter:g}, n_trunc = {sol.n_trunc}",
                TruncationWarning)

    return CrossSections(omega=sol.omega,
                         sigma_ext=sigma_ext,
                         sigma_sca=sigma_sca,
                         sigma_abs=sigma_ext - sigma_sca,
                         sigma_asym=sigma_asym,
                         sigma_pr=sigma_ext - sigma_asym)


def sphere_cross_sections(target, omega, policy="auto"):
    """Convenience: coefficients + cross-sections in one call."""
    k = omega / C_LIGHT
    n_trunc = truncation_order(k * target.radius, policy)
    return cross_sections(mie_coefficients(target, omega, n_trunc))
