"""Batch command-line front-end: sweeps, certification, CSV emission.

Commands:
  cross-sections   radius/frequency sweep of the five Mie cross-sections
  force            sweep of the squeezed-vacuum force with diagnostics
  certify          run the numerical identity suite, exit 0 iff all pass
  fig1             preset radius sweep (silicon-like sphere at 1550 nm)

Configuration comes from a TOML file (--config) with flag overrides;
flags win.  All output CSVs are RFC-4180 with '.' decimals, 17
significant digits, and a '#'-prefixed provenance block echoing every
config value.  Exit codes: 0 success, 2 config error, 3 numeric or
accuracy error, 4 certification failure.
"""

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .constants import C_LIGHT
from .bessel import riccati_xi, BesselRangeError
from .mie import (ConfigError, MaterialSpec, SphereTarget, mie_coefficients,
                  mie_coefficients_direct, cross_sections, truncation_order)
from .quadrature import build_direction_grid, integrate_direction, AccuracyError
from .dyadic import assemble_dyadic, trace_cross_sections
from .force import (SqueezingProfile, ThermalState, total_force,
                    quantum_pressure, squeezing_parameter_from_db, DomainError)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CERTIFY = 4

_FMT = "{:.16e}"  # 17 significant digits, lossless double round-trip


# --------------------------------------------------------------------------
# configuration

FIG1_PRESET = {
    "target": {"radius_min_um": 0.2, "radius_max_um": 10.0, "count": 400,
               "spacing": "log"},
    "material": {"epsilon_re": 12.11, "epsilon_im": 0.1},
    "illumination": {"wavelength_nm": 1550.0, "squeeze_db": 6.0,
                     "axis": [0.0, 0.0, 1.0],
                     "angular": "top_hat_cap", "solid_angle_sr": 1.0,
                     "spectral": "delta_band", "bandwidth": 2.5e12,
                     "bandwidth_unit": "hz"},
    "thermal": {"T_em_K": 300.0},
    "numerics": {"truncation": "fixed:200"},
}


def load_config(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}")


def _merge(base, override):
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in base.items()}
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k].update(v)
        else:
            out[k] = v
    return out


def parse_material(cfg):
    sec = cfg.get("material", {})
    if "table" in sec:
        return MaterialSpec(table=load_dispersion_table(sec["table"]))
    if "epsilon_re" not in sec:
        raise ConfigError("material: need epsilon_re/epsilon_im or table")
    return MaterialSpec(epsilon=complex(sec["epsilon_re"], sec.get("epsilon_im", 0.0)))


def load_dispersion_table(path):
    """Two-column-plus frequency table: 'omega_rad_s re im' or
    'lambda_nm re im' per line, '#' comments allowed."""
    rows = []
    with open(path) as fh:
        header = None
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if header is None and not _is_number(parts[0]):
                header = parts
                continue
            if len(parts) != 3:
                raise ConfigError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            rows.append([float(p) for p in parts])
    if not rows:
        raise ConfigError(f"{path}: empty dispersion table")
    arr = np.asarray(rows)
    unit = (header[0].lower() if header else "omega_rad_s")
    if unit.startswith("lambda") or unit.endswith("nm"):
        arr[:, 0] = 2.0 * math.pi * C_LIGHT / (arr[:, 0] * 1e-9)
        arr = arr[np.argsort(arr[:, 0])]
    return arr


def _is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def parse_radii(cfg):
    sec = cfg.get("target", {})
    if "radius_um" in sec:
        return np.array([float(sec["radius_um"]) * 1e-6])
    try:
        lo = float(sec["radius_min_um"]) * 1e-6
        hi = float(sec["radius_max_um"]) * 1e-6
        count = int(sec["count"])
    except KeyError as exc:
        raise ConfigError(f"target: missing field {exc}")
    if not (0 < lo < hi) or count < 1:
        raise ConfigError("target: need 0 < radius_min_um < radius_max_um, count >= 1")
    if sec.get("spacing", "log") == "log":
        return np.logspace(math.log10(lo), math.log10(hi), count)
    return np.linspace(lo, hi, count)


def parse_omega0(cfg):
    sec = cfg.get("illumination", {})
    if "omega0_rad_s" in sec:
        return float(sec["omega0_rad_s"])
    if "wavelength_nm" in sec:
        return 2.0 * math.pi * C_LIGHT / (float(sec["wavelength_nm"]) * 1e-9)
    raise ConfigError("illumination: need wavelength_nm or omega0_rad_s")


def parse_squeezing(cfg, bandwidth_unit=None):
    sec = cfg.get("illumination", {})
    omega0 = parse_omega0(cfg)
    if "r0" in sec:
        r0 = float(sec["r0"])
    elif "squeeze_db" in sec:
        r0 = squeezing_parameter_from_db(float(sec["squeeze_db"]))
    else:
        raise ConfigError("illumination: need r0 or squeeze_db")

    angular = sec.get("angular", "isotropic")
    if angular == "isotropic":
        ang = "isotropic"
    elif angular in ("gaussian_cap", "top_hat_cap"):
        if angular == "top_hat_cap" and "solid_angle_sr" in sec:
            cap = float(sec["solid_angle_sr"])
            if not (0 < cap < 4 * math.pi):
                raise ConfigError("illumination: solid_angle_sr out of (0, 4 pi)")
            ang = ("top_hat_cap", math.acos(1.0 - cap / (2.0 * math.pi)))
        else:
            try:
                ang = (angular, float(sec["angular_param_rad"]))
            except KeyError:
                raise ConfigError(f"illumination: {angular} needs angular_param_rad")
    else:
        raise ConfigError(f"illumination: unknown angular envelope {angular!r}")

    spectral = sec.get("spectral", "delta_band")
    if "bandwidth" not in sec:
        raise ConfigError("illumination: spectral envelope needs bandwidth")
    unit = bandwidth_unit or sec.get("bandwidth_unit")
    if unit is None:
        raise ConfigError("illumination: bandwidth_unit (rad_s|hz) is mandatory")
    bw = float(sec["bandwidth"])
    if unit == "hz":
        bw *= 2.0 * math.pi
    elif unit != "rad_s":
        raise ConfigError(f"illumination: unknown bandwidth_unit {unit!r}")
    if spectral not in ("delta_band", "gaussian"):
        raise ConfigError(f"illumination: unknown spectral envelope {spectral!r}")

    return SqueezingProfile(r0=r0, axis=sec.get("axis", [0.0, 0.0, 1.0]),
                            angular_envelope=ang,
                            spectral_envelope=(spectral, omega0, bw))


def parse_truncation(cfg, override=None):
    policy = override or cfg.get("numerics", {}).get("truncation", "auto")
    if policy != "auto" and not (isinstance(policy, str) and policy.startswith("fixed:")):
        raise ConfigError(f"numerics: unknown truncation policy {policy!r}")
    return policy


# --------------------------------------------------------------------------
# CSV output

def provenance_lines(cfg, extra=None):
    lines = []
    for section in sorted(cfg):
        val = cfg[section]
        if isinstance(val, dict):
            for key in sorted(val):
                lines.append(f"# {section}.{key} = {val[key]!r}")
        else:
            lines.append(f"# {section} = {val!r}")
    for key, val in (extra or {}).items():
        lines.append(f"# {key} = {val!r}")
    return lines


def write_csv(path, header, rows, comments):
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        for line in comments:
            out.write(line + "\r\n")
        out.write(",".join(header) + "\r\n")
        for row in rows:
            out.write(",".join(_FMT.format(v) if isinstance(v, float) else str(v)
                               for v in row) + "\r\n")
    finally:
        if out is not sys.stdout:
            out.close()


# --------------------------------------------------------------------------
# sweep workers (module level for process pools)

def _xs_row(args):
    radius, eps_or_table, omega, policy = args
    material = (MaterialSpec(table=eps_or_table) if isinstance(eps_or_table, np.ndarray)
                else MaterialSpec(epsilon=eps_or_table))
    target = SphereTarget(radius, material)
    k = omega / C_LIGHT
    n_trunc = truncation_order(k * radius, policy)
    cs = cross_sections(mie_coefficients(target, omega, n_trunc))
    return (radius, k * radius, cs.sigma_ext, cs.sigma_sca, cs.sigma_abs,
            cs.sigma_asym, cs.sigma_pr)


def _sweep(worker, jobs, threads):
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, jobs, chunksize=8))
    return [worker(j) for j in jobs]


def default_threads():
    env = os.environ.get("MIEPRESS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"MIEPRESS_THREADS must be an integer, got {env!r}")
    return 1


# --------------------------------------------------------------------------
# commands

def cmd_cross_sections(cfg, args):
    radii = parse_radii(cfg)
    material = parse_material(cfg)
    omega = parse_omega0(cfg)
    policy = parse_truncation(cfg, args.truncation)
    payload = material.table if material.table is not None else material.epsilon
    rows = _sweep(_xs_row, [(a, payload, omega, policy) for a in radii], args.threads)
    header = ["a_m", "x", "sigma_ext_m2", "sigma_sca_m2", "sigma_abs_m2",
              "sigma_asym_m2", "sigma_pr_m2"]
    write_csv(args.out, header, rows,
              provenance_lines(cfg, {"command": "cross-sections",
                                     "truncation": policy, "threads": args.threads}))
    return EXIT_OK


def cmd_force(cfg, args):
    radii = parse_radii(cfg)
    material = parse_material(cfg)
    squeeze = parse_squeezing(cfg, args.bandwidth_unit)
    thermal = ThermalState(float(cfg.get("thermal", {}).get("T_em_K", 0.0)))
    policy = parse_truncation(cfg, args.truncation)
    num = cfg.get("numerics", {})
    dgrid = build_direction_grid(int(num.get("n_theta", 64)), int(num.get("n_phi", 128)))
    mode = num.get("mode", "sphere_reduced")
    n_spectral = int(num.get("n_spectral", 8))

    rows = []
    for a in radii:
        res = total_force(SphereTarget(a, material), squeeze, thermal,
                          dgrid=dgrid, mode=mode, truncation=policy,
                          n_spectral=n_spectral)
        rows.append((a, *res.total, *res.drive, *res.recoil,
                     res.sigma_pr_at_omega0, res.P_sq,
                     res.diagnostics["recoil_residual"]))
    header = ["a_m", "F_total_x_N", "F_total_y_N", "F_total_z_N",
              "F_drive_x_N", "F_drive_y_N", "F_drive_z_N",
              "F_recoil_x_N", "F_recoil_y_N", "F_recoil_z_N",
              "sigma_pr_at_omega0_m2", "P_sq_N_m2", "recoil_residual"]
    write_csv(args.out, header, rows,
              provenance_lines(cfg, {"command": "force", "mode": mode,
                                     "truncation": policy, "threads": args.threads}))
    return EXIT_OK


def cmd_fig1(cfg, args):
    merged = _merge(FIG1_PRESET, cfg)
    radii = parse_radii(merged)
    material = parse_material(merged)
    omega = parse_omega0(merged)
    squeeze = parse_squeezing(merged, args.bandwidth_unit)
    policy = parse_truncation(merged, args.truncation)
    p_sq = quantum_pressure(squeeze)

    payload = material.table if material.table is not None else material.epsilon
    rows = _sweep(_xs_row, [(a, payload, omega, policy) for a in radii], args.threads)
    out_rows = [(a, x, s_pr, s_pr * p_sq) for (a, x, _, _, _, _, s_pr) in rows]
    header = ["a_m", "x", "sigma_pr_m2", "F_N"]
    write_csv(args.out, header, out_rows,
              provenance_lines(merged, {"command": "fig1", "P_sq_N_m2": p_sq,
                                        "truncation": policy, "threads": args.threads}))
    return EXIT_OK


# --------------------------------------------------------------------------
# certification

def run_certification(cfg, stream=None):
    """Run the numerical identity suite; returns the list of failures."""
    if stream is None:
        stream = sys.stdout
    num = cfg.get("numerics", {})
    policy = parse_truncation(cfg)
    margin = int(num.get("truncation_margin", 5))
    x_values = [float(x) for x in num.get("x_values", [0.5, 1.0, 2.0, 5.0])]
    materials = {"lossless": complex(2.25, 0.0), "lossy": complex(12.11, 0.1)}
    omega = parse_omega0(cfg) if "illumination" in cfg else \
        2.0 * math.pi * C_LIGHT / 1550e-9
    k = omega / C_LIGHT
    rng = np.random.default_rng(int(num.get("seed", 20240601)))
    checks = []

    def record(name, residual, tol):
        checks.append((name, residual, tol, residual < tol))

    # Wronskian sweep
    worst = 0.0
    for x in np.logspace(-3, 2, 24):
        n_max = truncation_order(x, "auto")
        t = riccati_xi(n_max, x)
        worst = max(worst, float(np.max(np.abs(
            t.psi * t.xi_prime - t.psi_prime * t.xi - 1j))))
    record("wronskian_sweep", worst, 1e-10)

    def order(x):
        return (truncation_order(x, policy) if policy != "auto"
                else truncation_order(x, "auto") + margin)

    # lossless unitarity + optical theorem
    worst_u, worst_o = 0.0, 0.0
    for x in x_values:
        sol = mie_coefficients(SphereTarget(x / k, MaterialSpec(epsilon=materials["lossless"])),
                               omega, order(x))
        worst_u = max(worst_u,
                      float(np.max(np.abs(np.abs(2 * sol.a_coeffs - 1) - 1))),
                      float(np.max(np.abs(np.abs(2 * sol.b_coeffs - 1) - 1))))
        cs = cross_sections(sol)
        worst_o = max(worst_o, abs(cs.sigma_ext - cs.sigma_sca) / cs.sigma_ext)
    record("lossless_unitarity", worst_u, 1e-9)
    record("optical_theorem_transparent", worst_o, 1e-10)

    # coefficient formulations agree
    worst = 0.0
    for x in x_values:
        for eps in materials.values():
            tgt = SphereTarget(x / k, MaterialSpec(epsilon=eps))
            s1 = mie_coefficients(tgt, omega, order(x))
            s2 = mie_coefficients_direct(tgt, omega, order(x))
            worst = max(worst, float(np.max(np.abs(s1.a_coeffs - s2.a_coeffs))),
                        float(np.max(np.abs(s1.b_coeffs - s2.b_coeffs))))
    record("coefficient_formulations", worst, 1e-10)

    # reciprocity + transversality at random direction pairs, x = 2
    sol = mie_coefficients(SphereTarget(2.0 / k, MaterialSpec(epsilon=materials["lossy"])),
                           omega, order(2.0))
    worst_r, worst_t = 0.0, 0.0
    for _ in range(int(num.get("n_direction_pairs", 100))):
        m_dir = rng.normal(size=3)
        n_dir = rng.normal(size=3)
        m_dir /= np.linalg.norm(m_dir)
        n_dir /= np.linalg.norm(n_dir)
        s = assemble_dyadic(sol, m_dir, n_dir)
        s_rev = assemble_dyadic(sol, -n_dir, -m_dir)
        nrm = np.linalg.norm(s)
        worst_r = max(worst_r, np.linalg.norm(s.T - s_rev) / nrm)
        worst_t = max(worst_t, np.linalg.norm(m_dir @ s) / nrm,
                      np.linalg.norm(s @ n_dir) / nrm)
    record("reciprocity", worst_r, 1e-10)
    record("transversality", worst_t, 1e-10)

    # trace mappings vs a converged analytic series (catches under-truncation)
    worst = 0.0
    for x in x_values:
        for eps in materials.values():
            tgt = SphereTarget(x / k, MaterialSpec(epsilon=eps))
            sol = mie_coefficients(tgt, omega, order(x))
            n_ref = max(order(x), truncation_order(x, "auto") + margin)
            cs_series = cross_sections(mie_coefficients(tgt, omega, n_ref))
            try:
                cs_trace = trace_cross_sections(sol)
            except AccuracyError as exc:
                record(f"trace_mapping_x{x:g}", math.inf, 1e-6)
                continue
            worst = max(worst,
                        abs(cs_trace.sigma_ext - cs_series.sigma_ext) / cs_series.sigma_ext,
                        abs(cs_trace.sigma_sca - cs_series.sigma_sca) / cs_series.sigma_sca,
                        abs(cs_trace.sigma_asym - cs_series.sigma_asym)
                        / max(abs(cs_series.sigma_asym), 1e-300))
    record("trace_mappings", worst, 1e-6)

    # isotropic null: int do n = 0 on the direction grid
    grid = build_direction_grid(int(num.get("n_theta", 64)), int(num.get("n_phi", 128)))
    record("isotropic_null", float(np.linalg.norm(integrate_direction(grid, lambda n: n))),
           1e-12)

    failures = []
    for name, residual, tol, ok in checks:
        status = "PASS" if ok else "FAIL"
        stream.write(f"{status} {name}: residual {residual:.3e} vs tol {tol:g}\n")
        if not ok:
            failures.append({"check": name, "residual": residual, "tolerance": tol})
    return failures


def cmd_certify(cfg, args):
    failures = run_certification(cfg)
    if failures:
        import json
        sys.stderr.write(json.dumps({"failures": failures}) + "\n")
        return EXIT_CERTIFY
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="miepress",
        description="Mie cross-sections and squeezed-vacuum optomechanical forces")
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--out", help="output CSV path (default: stdout)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: $MIEPRESS_THREADS or 1)")
    parser.add_argument("--bandwidth-unit", choices=["rad_s", "hz"], default=None,
                        help="unit of illumination.bandwidth (overrides config)")
    parser.add_argument("--truncation", default=None,
                        help="truncation policy: auto or fixed:N (overrides config)")
    parser.add_argument("command",
                        choices=["cross-sections", "force", "certify", "fig1"])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.threads is None:
            args.threads = default_threads()
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        handler = {"cross-sections": cmd_cross_sections,
                   "force": cmd_force,
                   "certify": cmd_certify,
                   "fig1": cmd_fig1}[args.command]
        return handler(cfg, args)
    except (ConfigError, DomainError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (BesselRangeError, AccuracyError, FloatingPointError) as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
