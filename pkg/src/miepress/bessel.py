"""Riccati-Bessel functions psi_n, xi_n and logarithmic derivatives.

psi_n(z) = z j_n(z) is evaluated by downward (Miller-type) recurrence,
normalized by the exact psi_0 = sin z; upward recurrence is unstable for
j_n and is never used here.  xi_n(x) = x h1_n(x) is built from psi_n and
chi_n = -x y_n(x), where chi_n follows the (stable) upward recurrence.
Derivatives always come from the exact identity
psi'_n = psi_{n-1} - (n/z) psi_n, never from finite differences.

For strongly absorbing interior arguments (large Im z) the raw psi_n
overflow like e^{|Im z|}; callers needing Mie coefficients in that regime
should use ``log_derivative`` instead, which stays bounded.
"""

from dataclasses import dataclass
import cmath
import math

import numpy as np

# e^{|Im z|} must stay below the double-precision overflow threshold
IM_Z_CUTOFF = 700.0

# magnitude at which the unnormalized downward recurrence is rescaled
_RESCALE_THRESHOLD = 1e250


class BesselDomainError(ValueError):
    """Invalid argument (zero, negative, or out of the supported domain)."""


class BesselRangeError(OverflowError):
    """Evaluation would overflow double precision."""


@dataclass
class RiccatiTable:
    """psi_n (and, for real arguments, xi_n) for n = 0..order_max.

    xi_valid_max marks the highest order at which xi is finite: for
    n >> x the irregular part chi_n grows like (2n-1)!!/x^n and saturates
    double precision; beyond that order xi is +-inf and the corresponding
    Mie coefficients are zero to double precision.
    """

    order_max: int
    argument: complex
    psi: np.ndarray
    psi_prime: np.ndarray
    xi: np.ndarray | None = None
    xi_prime: np.ndarray | None = None
    xi_valid_max: int | None = None


def _start_order(n_max, z):
    # the seed error of a downward recurrence only starts to decay once the
    # order exceeds |z|, so the buffer of 15 orders must sit above both
    return n_max + int(math.ceil(abs(z))) + 15


def riccati_psi(n_max, z):
    """Riccati-Bessel psi_n(z) = z j_n(z) and psi'_n for n = 0..n_max.

    Parameters
    ----------
    n_max : int
        Highest order, >= 0.
    z : complex
        Nonzero argument with |Im z| < IM_Z_CUTOFF.

    Returns
    -------
    RiccatiTable with psi and psi_prime filled (xi left as None).
    """
    if n_max < 0:
        raise BesselDomainError(f"n_max must be >= 0, got {n_max}")
    z = complex(z)
    if z == 0:
        raise BesselDomainError("riccati_psi: zero argument")
    if abs(z.imag) > IM_Z_CUTOFF:
        raise BesselRangeError(
            f"riccati_psi: e^|Im z| overflows for z = {z} (|Im z| > {IM_Z_CUTOFF})")

    n_start = _start_order(n_max, z)
    # downward recurrence psi_{n-1} = ((2n+1)/z) psi_n - psi_{n+1} on an
    # unnormalized solution, rescaled when it grows too large
    p_hi = 0.0 + 0.0j          # ~ psi_{n_start+1}
    p_lo = 1e-30 + 0.0j        # ~ psi_{n_start}
    table = np.zeros(n_max + 2, dtype=complex)
    for n in range(n_start, 0, -1):
        p_new = (2 * n + 1) / z * p_lo - p_hi
        p_hi, p_lo = p_lo, p_new
        if n - 1 <= n_max + 1:
            table[n - 1] = p_new
        if abs(p_lo) > _RESCALE_THRESHOLD:
            scale = 1.0 / abs(p_lo)
            p_hi *= scale
            p_lo *= scale
            table *= scale

    # normalize against whichever closed form is better conditioned
    # (sin z and psi_1 = sin z / z - cos z cannot both be near zero)
    psi0 = cmath.sin(z)
    psi1 = cmath.sin(z) / z - cmath.cos(z)
    if abs(psi0) >= abs(psi1):
        norm = psi0 / table[0]
    else:
        norm = psi1 / table[1]
    psi = table[: n_max + 1] * norm
    psi[0] = psi0  # exact by definition

    psi_prime = np.empty_like(psi)
    psi_prime[0] = cmath.cos(z)
    n_arr = np.arange(1, n_max + 1)
    psi_prime[1:] = psi[:-1] - (n_arr / z) * psi[1:]
    return RiccatiTable(order_max=n_max, argument=z, psi=psi, psi_prime=psi_prime)


def riccati_xi(n_max, x):
    """Riccati-Bessel xi_n(x) = x h1_n(x) for real x > 0, plus the psi part.

    chi_n = -x y_n(x) is generated by upward recurrence (stable for the
    irregular solution); xi_n = psi_n - i chi_n, so xi_0 = -i e^{ix}.
    """
    if n_max < 0:
        raise BesselDomainError(f"n_max must be >= 0, got {n_max}")
    x = float(x)
    if x <= 0:
        raise BesselDomainError(f"riccati_xi: argument must be positive, got {x}")

    psi_table = riccati_psi(n_max, x)
    chi = np.full(n_max + 1, np.inf)
    chi[0] = math.cos(x)
    if n_max >= 1:
        chi[1] = math.cos(x) / x + math.sin(x)
    valid_max = min(n_max, 1)
    for n in range(1, n_max):
        nxt = (2 * n + 1) / x * chi[n] - chi[n - 1]
        if abs(nxt) > _RESCALE_THRESHOLD:
            break
        chi[n + 1] = nxt
        valid_max = n + 1

    chi_prime = np.full_like(chi, np.inf)
    chi_prime[0] = -math.sin(x)
    if valid_max >= 1:
        n_arr = np.arange(1, valid_max + 1)
        chi_prime[1:valid_max + 1] = (chi[:valid_max]
                                      - (n_arr / x) * chi[1:valid_max + 1])

    xi = np.full(n_max + 1, np.inf, dtype=complex)
    xi_prime = np.full(n_max + 1, np.inf, dtype=complex)
    xi[:valid_max + 1] = psi_table.psi[:valid_max + 1] - 1j * chi[:valid_max + 1]
    xi_prime[:valid_max + 1] = (psi_table.psi_prime[:valid_max + 1]
                                - 1j * chi_prime[:valid_max + 1])
    return RiccatiTable(order_max=n_max, argument=complex(x),
                        psi=psi_table.psi, psi_prime=psi_table.psi_prime,
                        xi=xi, xi_prime=xi_prime, xi_valid_max=valid_max)


def log_derivative(n_max, z):
    """D_n(z) = psi'_n(z)/psi_n(z) for n = 0..n_max by downward recurrence.

    Seeded with D = 0 at n_start >= n_max + 15; bounded even when psi_n
    itself would overflow (large Im z), which is exactly the regime where
    the Mie quotients need it.
    """
    if n_max < 1:
        raise BesselDomainError(f"n_max must be >= 1, got {n_max}")
    z = complex(z)
    if z == 0:
        raise BesselDomainError("log_derivative: zero argument")

    n_start = _start_order(n_max, z)
    d = np.zeros(n_max + 1, dtype=complex)
    d_cur = 0.0 + 0.0j
    for n in range(n_start, 0, -1):
        d_cur = n / z - 1.0 / (d_cur + n / z)
        if n - 1 <= n_max:
            d[n - 1] = d_cur
    return d
