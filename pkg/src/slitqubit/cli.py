"""Command-line interface: ``slitqubit <command> [options]``.

Exit codes: 0 success, 1 numeric or validation failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from .errors import SlitQubitError
from .forward import (
    aperture_width,
    detection_probability,
    simulate_conditional_scans,
    simulate_scan,
)
from .io import (
    ConfigError,
    parse_length,
    read_density,
    read_geometry,
    read_scan,
    read_table,
    write_report,
    write_scan,
    write_trajectory,
)
from .optics import OpticalGeometry
from .povm import bloch_trajectory, central_window, completeness_defect, lobe_width
from .quantum import check_density, depolarize, fidelity, ket, psi_slits
from .tomography import (
    octahedral_points,
    pattern_invert,
    pauli_reconstruct,
    reconstruct_from_scans,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument helpers


def load_geometry(args) -> OpticalGeometry:
    overrides = {"z": args.z} if getattr(args, "z", None) else {}
    if args.geometry:
        return read_geometry(args.geometry, overrides)
    g = fixtures.reference_geometry()
    if overrides:
        g = g.with_z(parse_length(overrides["z"], g.focal_length))
    return g


def load_state(spec: str) -> np.ndarray:
    """Fixture name, preset, ket label or path to a density-matrix file."""
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        rho = read_density(path)
        try:
            return check_density(rho)
        except ValueError as exc:
            raise SlitQubitError(f"{spec}: {exc}") from exc
    try:
        return fixtures.named_state(spec)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None


def target_ket(name: str) -> np.ndarray:
    key = name.lower()
    if key in ("psi-slits", "psi_slits"):
        return psi_slits()
    try:
        return ket(key)
    except ValueError:
        raise ConfigError(f"unknown target state {name!r}") from None


def load_table(spec: str) -> np.ndarray:
    if Path(spec).exists():
        return read_table(spec)
    try:
        return fixtures.named_table(spec)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None


def scan_grid(args, g: OpticalGeometry) -> np.ndarray:
    """Uniform grid from ``--window`` (half-width) and ``--step``."""
    f = g.focal_length
    if args.window:
        half = parse_length(args.window, f)
        lo, hi = -half, half
    else:
        lo, hi = central_window(g, 3.0)
    step = parse_length(args.step, f) if args.step else lobe_width(g) / 20
    if step <= 0 or hi <= lo:
        raise ConfigError("window and step must be positive")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + np.arange(n) * step


def detector_width(args, g: OpticalGeometry) -> float:
    return parse_length(args.detector_width, g.focal_length) if args.detector_width else 0.0


def _outpath(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


# --------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    g = load_geometry(args)
    rho = load_state(args.state)
    if args.depolarize:
        rho = depolarize(rho, args.depolarize)
    xs = scan_grid(args, g)
    width = detector_width(args, g)
    out = _outpath(args, "scan.csv")
    print(f"seed: {args.seed}")
    if rho.shape == (2, 2):
        signal = float(np.sum(detection_probability(rho, g, xs, args.model, width)))
        per_point = args.shots / (signal * aperture_width(xs, width))
        scan = simulate_scan(rho, g, xs, per_point, width, args.accidental_rate, args.seed, args.model)
        write_scan(out, scan)
        print(f"wrote {out}")
        return EXIT_OK
    if rho.shape != (4, 4):
        raise ConfigError(f"cannot simulate a state of dimension {rho.shape[0]}")
    if not args.arm_b_x:
        raise UsageError("a two-arm state needs --arm-b-x (positions or 'octahedral')")
    if args.arm_b_x == "octahedral":
        xb = list(octahedral_points(g, args.model).values())
    else:
        xb = [parse_length(v, g.focal_length) for v in args.arm_b_x.split(",")]
    scans = simulate_conditional_scans(
        rho, g, g, xb, xs, args.shots, width, args.accidental_rate, args.seed, args.model
    )
    paths = [out] if len(scans) == 1 else [out.with_name(f"{out.stem}-{i}{out.suffix}") for i in range(len(scans))]
    for p, s in zip(paths, scans):
        write_scan(p, s)
        print(f"wrote {p}  (arm B at x = {s.metadata['arm_b_x']!r} m)")
    return EXIT_OK


def _print_matrix(name: str, rho: np.ndarray) -> None:
    print(f"{name}:")
    for row in rho:
        print("  " + "  ".join(f"{v.real:+.4f}{v.imag:+.4f}i" for v in row))


def cmd_reconstruct(args) -> int:
    report: dict = {"mode": args.mode, "target": args.target}
    if args.mode == "pauli":
        if args.inputs:
            raise UsageError("reconstruct pauli takes --table, not scan files")
        table = load_table(args.table or "table1b")
        rec = pauli_reconstruct(table)
    else:
        if not args.inputs:
            raise UsageError(f"reconstruct {args.mode} needs at least one scan file")
        g = load_geometry(args) if (args.geometry or args.z) else None
        scans = [read_scan(p, g) for p in args.inputs]
        if args.mode == "pattern":
            if len(scans) != 1:
                raise UsageError("reconstruct pattern takes exactly one scan")
            inv = pattern_invert(scans[0])
            rec = None
            report.update(
                raw=inv.rho,
                population_difference=inv.delta,
                coherence=complex(inv.coherence),
                beta=inv.beta,
            )
            _print_matrix("rho", inv.rho)
        else:
            res = reconstruct_from_scans(scans, fit_background=args.fit_background)
            rec = res
            report.update(
                residuals=[f.residual for f in res.fits],
                weights=res.weights,
                arm_b_x=res.frame.points,
                frame_condition=res.frame.condition_number,
            )
    if rec is not None:
        report.update(raw=rec.raw, projected=rec.projected)
        _print_matrix("raw", rec.raw)
        psi = target_ket(args.target)
        if psi.size == rec.raw.shape[0]:
            f_raw, f_proj = fidelity(rec.raw, psi), fidelity(rec.projected, psi)
            report.update(fidelity_raw=f_raw, fidelity_projected=f_proj)
            print(f"fidelity vs {args.target}: {f_raw:.3f} (raw), {f_proj:.3f} (projected)")
    out = _outpath(args, f"reconstruct-{args.mode}.json")
    write_report(out, report)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_trajectory(args) -> int:
    g = load_geometry(args)
    xs = scan_grid(args, g)
    traj = bloch_trajectory(g, xs, args.model)
    out = _outpath(args, "trajectory.csv")
    write_trajectory(out, traj)
    print(f"wrote {out} ({len(traj)} points, {traj.dropped.size} dropped)")
    return EXIT_OK


def cmd_fidelity(args) -> int:
    rho = load_state(args.state)
    value = fidelity(rho, target_ket(args.target))
    print(f"{value:.6f}")
    return EXIT_OK


def run_validation(out=None) -> bool:
    """Regression checks against the embedded published data."""
    out = sys.stdout if out is None else out
    checks = []
    rec = pauli_reconstruct(fixtures.TABLE_1B)
    dev = float(np.max(np.abs(rec.raw - fixtures.RHO_PAULI)))
    f_p = fidelity(rec.raw, psi_slits())
    checks.append(("setting table -> matrix, max deviation", dev, dev <= 0.005))
    checks.append(("setting table fidelity", f_p, abs(f_p - fixtures.FIDELITY_PAULI) <= 0.002))
    f_s = fidelity(fixtures.RHO_SCANS, psi_slits())
    checks.append(("scan matrix fidelity", f_s, abs(f_s - fixtures.FIDELITY_SCANS) <= 0.001))
    g = fixtures.reference_geometry()
    lobe = lobe_width(g)
    defect = completeness_defect(g, (-20 * lobe, 20 * lobe), lobe / 50)
    checks.append(("completeness defect, 20 lobes", defect, defect < 1e-2))
    ok = True
    for name, value, passed in checks:
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.3f}" if value >= 1e-3
              else f"{'PASS' if passed else 'FAIL'}  {name}: {value:.3g}", file=out)
    return ok


def cmd_validate(args) -> int:
    return EXIT_OK if run_validation() else EXIT_FAIL


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slitqubit", description="Spatial slit-qubit simulation and tomography.")
    sub = p.add_subparsers(dest="command", required=True)

    def optics_flags(sp):
        sp.add_argument("--geometry", help="geometry config file (default: built-in setup)")
        sp.add_argument("--z", help="lens-to-detector distance override, e.g. 1.8f or 90mm")
        sp.add_argument("--model", choices=("sinc", "fresnel"), default="sinc")

    def grid_flags(sp):
        sp.add_argument("--window", help="half-width of the scan window, e.g. 1.5mm")
        sp.add_argument("--step", help="scan step, e.g. 5um")

    s = sub.add_parser("simulate", help="simulate a Poisson-sampled scan")
    optics_flags(s)
    grid_flags(s)
    s.add_argument("--state", required=True, help="fixture name, psi-slits, ket label or matrix file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--shots", type=float, default=1e4, help="mean signal counts per scan")
    s.add_argument("--detector-width", help="detector aperture width, e.g. 20um")
    s.add_argument("--accidental-rate", type=float, default=0.0, help="flat background counts per point")
    s.add_argument("--depolarize", type=float, default=0.0, help="depolarizing probability applied first")
    s.add_argument("--arm-b-x", help="arm-B positions (comma separated) or 'octahedral'")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reconstruct", help="reconstruct a density matrix")
    r.add_argument("mode", choices=("pauli", "scan", "pattern"))
    r.add_argument("inputs", nargs="*", help="scan CSV files (scan and pattern modes)")
    r.add_argument("--table", help="setting table: fixture name or CSV path")
    r.add_argument("--geometry")
    r.add_argument("--z")
    r.add_argument("--target", default="psi-slits")
    r.add_argument("--fit-background", action="store_true")
    r.add_argument("--out")
    r.set_defaults(func=cmd_reconstruct)

    t = sub.add_parser("trajectory", help="Bloch trajectory of the projection states")
    optics_flags(t)
    grid_flags(t)
    t.add_argument("--out")
    t.set_defaults(func=cmd_trajectory)

    f = sub.add_parser("fidelity", help="fidelity of a state against a pure target")
    f.add_argument("--state", required=True)
    f.add_argument("--target", default="psi-slits")
    f.set_defaults(func=cmd_fidelity)

    v = sub.add_parser("validate", help="check the embedded reference data")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SlitQubitError, ValueError, ArithmeticError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
