"""Mie optical cross-sections and optomechanical forces from structured
squeezed-vacuum illumination."""

from .constants import HBAR, C_LIGHT, K_BOLTZMANN
from .bessel import (RiccatiTable, riccati_psi, riccati_xi, log_derivative,
                     BesselDomainError, BesselRangeError)
from .mie import (MaterialSpec, SphereTarget, MieSolution, CrossSections,
                  ConfigError, TruncationWarning, truncation_order,
                  mie_coefficients, mie_coefficients_direct, cross_sections,
                  sphere_cross_sections)
from .quadrature import (DirectionGrid, SpectralGrid, AccuracyError,
                         build_direction_grid, integrate_direction,
                         self_convergence, build_spectral_grid)
from .dyadic import (vector_spherical_harmonic, vsh_tables, assemble_dyadic,
                     forward_trace_extinction, scattered_intensity,
                     trace_cross_sections, MomentumTransferEvaluator)
from .force import (SqueezingProfile, ThermalState, ForceResult, DomainError,
                    quantum_pressure, radiation_pressure_functional,
                    total_force, narrowband_force_estimate,
                    squeezing_parameter_from_db)

__version__ = "0.1.0"
