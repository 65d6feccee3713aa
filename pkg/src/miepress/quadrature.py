"""Quadrature grids over the unit sphere of directions and over frequency.

Directions use a product rule: Gauss-Legendre in cos(theta) times a
uniform (trapezoidal, periodic) rule in phi, exact for spherical
harmonics up to degree min(2 N_theta - 1, N_phi - 1).  Frequencies use
Gauss-Legendre on a finite band.
"""

from dataclasses import dataclass

import numpy as np

from .mie import ConfigError


class AccuracyError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""


@dataclass
class DirectionGrid:
    """Unit-sphere quadrature: nodes (N, 3), positive weights summing to 4 pi."""

    nodes: np.ndarray
    weights: np.ndarray
    n_theta: int
    n_phi: int
    scheme: str = "gauss_legendre_x_uniform_phi"


@dataclass
class SpectralGrid:
    """Gauss-Legendre frequency grid on [omega_min, omega_max] [rad/s]."""

    nodes: np.ndarray
    weights: np.ndarray
    omega_min: float
    omega_max: float
    scheme: str = "gauss_legendre"


def build_direction_grid(n_theta=64, n_phi=128):
    if n_theta < 2 or n_phi < 4:
        raise ConfigError(f"degenerate direction grid ({n_theta}, {n_phi})")
    mu, w_mu = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    w_phi = 2.0 * np.pi / n_phi

    sin_t = np.sqrt(1.0 - mu ** 2)
    nodes = np.empty((n_theta * n_phi, 3))
    weights = np.empty(n_theta * n_phi)
    idx = 0
    for i in range(n_theta):
        nodes[idx:idx + n_phi, 0] = sin_t[i] * np.cos(phi)
        nodes[idx:idx + n_phi, 1] = sin_t[i] * np.sin(phi)
        nodes[idx:idx + n_phi, 2] = mu[i]
        weights[idx:idx + n_phi] = w_mu[i] * w_phi
        idx += n_phi
    return DirectionGrid(nodes=nodes, weights=weights, n_theta=n_theta, n_phi=n_phi)


def integrate_direction(grid, f):
    """Integrate f(n) over the unit sphere; f maps a direction to a scalar
    or array, or accepts the whole (N, 3) node block at once."""
    try:
        vals = np.asarray(f(grid.nodes))
        if vals.shape[0] != grid.nodes.shape[0]:
            raise TypeError
    except TypeError:
        vals = np.asarray([f(n) for n in grid.nodes])
    return np.tensordot(grid.weights, vals, axes=(0, 0))


def self_convergence(f, n_theta=64, n_phi=128):
    """Integral on (n_theta, n_phi) and the relative change when the grid
    is doubled, as a convergence estimate for smooth integrands."""
    coarse = integrate_direction(build_direction_grid(n_theta, n_phi), f)
    fine = integrate_direction(build_direction_grid(2 * n_theta, 2 * n_phi), f)
    scale = np.max(np.abs(fine))
    resid = np.max(np.abs(fine - coarse)) / scale if scale > 0 else 0.0
    return fine, resid


def build_spectral_grid(omega_min, omega_max, n_nodes):
    if not (0 < omega_min < omega_max):
        raise ConfigError(f"bad spectral band [{omega_min}, {omega_max}]")
    if n_nodes < 1:
        raise ConfigError(f"n_nodes must be >= 1, got {n_nodes}")
    u, w = np.polynomial.legendre.leggauss(n_nodes)
    half = 0.5 * (omega_max - omega_min)
    mid = 0.5 * (omega_max + omega_min)
    return SpectralGrid(nodes=mid + half * u, weights=half * w,
                        omega_min=omega_min, omega_max=omega_max)
