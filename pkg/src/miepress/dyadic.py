"""Far-field scattering dyadic of a sphere from vector spherical harmonics.

The dyadic maps incident polarization (plane wave from direction n) to
scattered polarization along direction m and is transverse on both sides:

    S(m|n) = (4 pi i / k) sum_{l>=1} sum_{|u|<=l}
             [ a_l (m x X_lu(m)) (n x X_lu*(n)) + b_l X_lu(m) X_lu*(n) ]

X_lu = L Y_lu / sqrt(l(l+1)) with unit norm on the sphere.  Phase
convention: Condon-Shortley harmonics, Y_lu = P~_l^u(cos th) e^{i u ph}
with P~ fully normalized; all traces are convention independent.

Associated Legendre values use the stable m-then-l upward recurrence in
fully normalized form, and the pole-sensitive combinations
u Y / sin(th) and dY/d(th) are built from the sin(th)-scaled functions,
so poles need no epsilon offsets.
"""

import math

import numpy as np

from .mie import ConfigError, cross_sections as series_cross_sections, CrossSections
from .quadrature import build_direction_grid, AccuracyError


def _angular_functions(n_max, cos_t, sin_t):
    """pi[l, u] = u * P~_l^u / sin(th) and tau[l, u] = d P~_l^u / d(th)
    for l = 1..n_max, u = 0..n_max, vectorized over direction arrays.

    cos_t, sin_t are 1-D arrays of equal length M; returns two real
    arrays of shape (M, n_max, n_max + 1) (index l-1, u).
    """
    M = len(cos_t)
    # scaled[l, u] = P~_l^u / sin(th) for u >= 1 (finite at poles)
    scaled = np.zeros((M, n_max + 1, n_max + 1))
    pbar0 = np.zeros((M, n_max + 1))  # P~_l^0

    pbar0[:, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    if n_max >= 1:
        pbar0[:, 1] = math.sqrt(3.0) * cos_t * pbar0[:, 0]
    for l in range(2, n_max + 1):
        a = math.sqrt((2 * l - 1) * (2 * l + 1)) / l
        b = math.sqrt((2 * l + 1) / (2 * l - 3)) * (l - 1) / l
        pbar0[:, l] = a * cos_t * pbar0[:, l - 1] - b * pbar0[:, l - 2]

    if n_max >= 1:
        scaled[:, 1, 1] = -math.sqrt(3.0 / (8.0 * math.pi))
    for u in range(2, n_max + 1):
        scaled[:, u, u] = (-math.sqrt((2 * u + 1) / (2.0 * u))
                           * sin_t * scaled[:, u - 1, u - 1])
    for u in range(1, n_max + 1):
        if u + 1 <= n_max:
            scaled[:, u + 1, u] = math.sqrt(2 * u + 3) * cos_t * scaled[:, u, u]
        for l in range(u + 2, n_max + 1):
            a = math.sqrt((2 * l - 1) * (2 * l + 1) / ((l - u) * (l + u)))
            b = math.sqrt((2 * l + 1) * (l - 1 - u) * (l - 1 + u)
                          / ((2 * l - 3) * (l - u) * (l + u)))
            scaled[:, l, u] = a * cos_t * scaled[:, l - 1, u] - b * scaled[:, l - 2, u]

    pi_lu = np.zeros((M, n_max, n_max + 1))
    tau_lu = np.zeros((M, n_max, n_max + 1))
    for l in range(1, n_max + 1):
        # u = 0: pi = 0; tau_l0 = sqrt(l(l+1)) sin(th) * (P~_l^1 / sin(th))
        tau_lu[:, l - 1, 0] = math.sqrt(l * (l + 1.0)) * sin_t * scaled[:, l, 1]
        for u in range(1, l + 1):
            pi_lu[:, l - 1, u] = u * scaled[:, l, u]
            e = math.sqrt((l * l - u * u) * (2 * l + 1.0) / (2 * l - 1.0))
            prev = scaled[:, l - 1, u] if l - 1 >= u else 0.0
            tau_lu[:, l - 1, u] = l * cos_t * scaled[:, l, u] - e * prev
    return pi_lu, tau_lu


def vsh_tables(n_max, dirs):
    """X_lu at each direction, shape (M, n_max, 2 n_max + 1, 3), complex,
    indexed [node, l-1, u + n_max, xyz] in Cartesian components."""
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    M = dirs.shape[0]
    cos_t = np.clip(dirs[:, 2], -1.0, 1.0)
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t ** 2))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])

    pi_lu, tau_lu = _angular_functions(n_max, cos_t, sin_t)

    # spherical unit vectors in the fixed Cartesian frame
    theta_hat = np.stack([cos_t * np.cos(phi), cos_t * np.sin(phi), -sin_t], axis=-1)
    phi_hat = np.stack([-np.sin(phi), np.cos(phi), np.zeros(M)], axis=-1)

    out = np.zeros((M, n_max, 2 * n_max + 1, 3), dtype=complex)
    eiphi = np.exp(1j * phi)
    for l in range(1, n_max + 1):
        norm = 1.0 / math.sqrt(l * (l + 1.0))
        for u in range(0, l + 1):
            ang = (-pi_lu[:, l - 1, u, None] * theta_hat
                   - 1j * tau_lu[:, l - 1, u, None] * phi_hat)
            x_pos = norm * ang * (eiphi ** u)[:, None]
            out[:, l - 1, n_max + u] = x_pos
            if u > 0:
                # X_{l,-u} = (-1)^(u+1) conj(X_{l,u})
                out[:, l - 1, n_max - u] = ((-1) ** (u + 1)) * np.conj(x_pos)
    return out


def vector_spherical_harmonic(n, m, direction):
    """Single X_nm(direction) as a complex Cartesian 3-vector."""
    if n < 1 or abs(m) > n:
        raise ConfigError(f"invalid vector harmonic indices (n={n}, m={m})")
    table = vsh_tables(n, np.asarray(direction, dtype=float))
    return table[0, n - 1, n + m]


def _dyadic_from_tables(sol, x_out, x_in_conj, cross_out, cross_in_conj):
    pref = 4.0 * math.pi * 1j / sol.k
    te = np.einsum("l,clui,luj->cij", sol.b_coeffs, x_out, x_in_conj)
    tm = np.einsum("l,clui,luj->cij", sol.a_coeffs, cross_out, cross_in_conj)
    return pref * (tm + te)


def assemble_dyadic(sol, out_dir, in_dir):
    """Scattering dyadic S(out_dir | in_dir), complex 3x3 [m]."""
    out_dir = np.asarray(out_dir, dtype=float)
    in_dir = np.asarray(in_dir, dtype=float)
    n_max = sol.n_trunc
    x_out = vsh_tables(n_max, out_dir)
    x_in = vsh_tables(n_max, in_dir)
    cross_out = np.cross(out_dir[None, None, None, :], x_out)
    cross_in = np.cross(in_dir[None, None, None, :], x_in)
    return _dyadic_from_tables(sol, x_out, np.conj(x_in[0]),
                               cross_out, np.conj(cross_in[0]))[0]


def forward_trace_extinction(sol, in_dir=(0.0, 0.0, 1.0)):
    """sigma_ext from the generalized optical theorem:
    2 sigma_ext = (4 pi / k) Im tr S(n|n)."""
    s = assemble_dyadic(sol, in_dir, in_dir)
    return 0.5 * (4.0 * math.pi / sol.k) * np.trace(s).imag


def scattered_intensity(sol, out_dirs, in_dir, chunk=512):
    """tr[S(m|n) . S^T*(m|n)] (unpolarized differential intensity, summed
    over both polarizations) at each outgoing direction m."""
    out_dirs = np.atleast_2d(np.asarray(out_dirs, dtype=float))
    in_dir = np.asarray(in_dir, dtype=float)
    n_max = sol.n_trunc
    x_in = vsh_tables(n_max, in_dir)
    cross_in = np.cross(in_dir[None, None, None, :], x_in)
    x_in_c = np.conj(x_in[0])
    cross_in_c = np.conj(cross_in[0])

    vals = np.empty(out_dirs.shape[0])
    for lo in range(0, out_dirs.shape[0], chunk):
        block = out_dirs[lo:lo + chunk]
        x_out = vsh_tables(n_max, block)
        cross_out = np.cross(block[:, None, None, :], x_out)
        s = _dyadic_from_tables(sol, x_out, x_in_c, cross_out, cross_in_c)
        vals[lo:lo + chunk] = np.sum(np.abs(s) ** 2, axis=(1, 2))
    return vals


class MomentumTransferEvaluator:
    """Momentum-transfer vector n 2 sigma_ext - int do_m m tr[S S^T*] for
    many incidence directions against one fixed outgoing grid.

    Precomputes the outgoing-side harmonic tables once, so sweeping the
    incidence direction costs only one single-direction table per call.
    """

    def __init__(self, sol, out_grid=None):
        self.sol = sol
        if out_grid is None:
            out_grid = build_direction_grid(max(2 * sol.n_trunc + 2, 16),
                                            max(4 * sol.n_trunc + 4, 32))
        self.grid = out_grid
        n_modes = sol.n_trunc * (2 * sol.n_trunc + 1)
        x_out = vsh_tables(sol.n_trunc, out_grid.nodes)
        cross_out = np.cross(out_grid.nodes[:, None, None, :], x_out)
        # fold the TE/TM coefficients into flattened outgoing tables
        m = len(out_grid.nodes)
        self._bx_out = (sol.b_coeffs[None, :, None, None]
                        * x_out).reshape(m, n_modes, 3)
        self._ac_out = (sol.a_coeffs[None, :, None, None]
                        * cross_out).reshape(m, n_modes, 3)

    def vector(self, in_dir):
        in_dir = np.asarray(in_dir, dtype=float)
        sol = self.sol
        n_modes = sol.n_trunc * (2 * sol.n_trunc + 1)
        x_in = vsh_tables(sol.n_trunc, in_dir)[0]
        cross_in = np.cross(in_dir[None, None, :], x_in)
        pref = 4.0 * math.pi * 1j / sol.k
        s = pref * (np.tensordot(self._ac_out, np.conj(cross_in).reshape(n_modes, 3),
                                 axes=(1, 0))
                    + np.tensordot(self._bx_out, np.conj(x_in).reshape(n_modes, 3),
                                   axes=(1, 0)))
        intens = np.sum(np.abs(s) ** 2, axis=(1, 2))
        reradiated = (self.grid.weights * intens) @ self.grid.nodes

        s_fwd = assemble_dyadic(sol, in_dir, in_dir)
        two_ext = (4.0 * math.pi / sol.k) * np.trace(s_fwd).imag
        return two_ext * in_dir - reradiated


def trace_cross_sections(sol, grid=None, in_dir=(0.0, 0.0, 1.0), tol=1e-8,
                         max_refine=2):
    """Cross-sections by quadrature of dyadic traces (independent of the
    series route in mie):

        2 sigma_sca  = int do_m tr[S . S^T*]
        2 sigma_asym = int do_m (n . m) tr[S . S^T*]

    sigma_ext comes from the forward trace.  The grid is doubled until the
    self-convergence residual drops below ``tol`` (AccuracyError if it
    never does).
    """
    in_dir = np.asarray(in_dir, dtype=float)
    sigma_ext = forward_trace_extinction(sol, in_dir)

    n_theta = grid.n_theta if grid is not None else max(2 * sol.n_trunc + 2, 16)
    n_phi = grid.n_phi if grid is not None else 2 * n_theta
    prev = None
    for _ in range(max_refine + 1):
        g = build_direction_grid(n_theta, n_phi)
        intens = scattered_intensity(sol, g.nodes, in_dir)
        sigma_sca = 0.5 * np.dot(g.weights, intens)
        sigma_asym = 0.5 * np.dot(g.weights, intens * (g.nodes @ in_dir))
        cur = (sigma_sca, sigma_asym)
        if prev is not None:
            resid = max(abs(cur[0] - prev[0]), abs(cur[1] - prev[1])) / max(cur[0], 1e-300)
            if resid < tol:
                break
        prev = cur
        n_theta *= 2
        n_phi *= 2
    else:
        raise AccuracyError(
            f"trace quadrature not converged below {tol:g} (residual {resid:g})")

    return CrossSections(omega=sol.omega, sigma_ext=sigma_ext,
                         sigma_sca=sigma_sca,
                         sigma_abs=sigma_ext - sigma_sca,
                         sigma_asym=sigma_asym,
                         sigma_pr=sigma_ext - sigma_asym)
