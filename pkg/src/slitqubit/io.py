"""File formats: geometry configs, density matrices, scans, tables and reports.

Floats are written with ``repr`` so every value round-trips exactly (17
significant digits). Every matrix file records its basis order explicitly.
"""

from __future__ import annotations

import csv
import json
import re
from decimal import Decimal
from pathlib import Path

import numpy as np

from .errors import SlitQubitError
from .forward import ScanRecord
from .optics import OpticalGeometry
from .quantum import BASIS_1Q, BASIS_2Q

# decimal exponents, so "40 um" parses to the same float as 40e-6
UNITS = {"m": 0, "cm": -2, "mm": -3, "um": -6, "µm": -6, "μm": -6, "nm": -9}
GEOMETRY_KEYS = ("lambda", "slit_width", "slit_offsets", "focal_length", "L", "z")
TABLE_LABELS = ("|l>", "|r>", "|l>+|r>", "|l>-|r>", "|l>+i|r>", "|l>-i|r>")
_SHORT_LABELS = ("l", "r", "+", "-", "+i", "-i")

_LENGTH_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zµμ]*)\s*$")


class ConfigError(SlitQubitError, ValueError):
    """A configuration file or argument is missing a key or malformed."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


def _fmt(v) -> str:
    return repr(float(v))


def parse_length(text: str, focal_length: float | None = None) -> float:
    """Parse ``'40 um'``, ``'1.8f'`` or ``'0.05 m'`` into meters.

    A unit is mandatory except for zero; the ``f`` suffix scales the focal
    length.
    """
    text = str(text).strip()
    if text == "f":
        text = "1f"
    m = _LENGTH_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse length {text!r}")
    number, unit = m.group(1), m.group(2)
    value = float(number)
    if unit == "f":
        if focal_length is None:
            raise ConfigError(f"{text!r} is relative to f but no focal length is known")
        return value * focal_length
    if not unit and value == 0:
        return 0.0
    if unit not in UNITS:
        raise ConfigError(f"length {text!r} needs a unit ({', '.join(UNITS)} or f)")
    return float(Decimal(number).scaleb(UNITS[unit]))


def read_geometry(path, overrides: dict | None = None) -> OpticalGeometry:
    """Load a ``key = value unit`` geometry file.

    ``overrides`` maps keys to raw strings (e.g. ``{"z": "1.8f"}``) and
    takes precedence over the file.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read geometry file {path}: {exc}") from exc
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    raw.update(overrides or {})
    return geometry_from_strings(raw)


def geometry_from_strings(raw: dict) -> OpticalGeometry:
    for key in GEOMETRY_KEYS:
        if key not in raw:
            raise ConfigError(f"missing geometry key: {key}", key=key)
    f = parse_length(raw["focal_length"])
    offsets = tuple(parse_length(v, f) for v in raw["slit_offsets"].split(","))
    return OpticalGeometry(
        wavelength=parse_length(raw["lambda"]),
        slit_width=parse_length(raw["slit_width"], f),
        slit_offsets=offsets,
        focal_length=f,
        slit_to_lens=parse_length(raw["L"], f),
        lens_to_detector=parse_length(raw["z"], f),
    )


def format_geometry(g: OpticalGeometry) -> str:
    lines = [
        f"lambda = {_fmt(g.wavelength)} m",
        f"slit_width = {_fmt(g.slit_width)} m",
        "slit_offsets = " + ", ".join(f"{_fmt(r)} m" for r in g.slit_offsets),
        f"focal_length = {_fmt(g.focal_length)} m",
        f"L = {_fmt(g.slit_to_lens)} m",
        f"z = {_fmt(g.lens_to_detector)} m",
    ]
    return "\n".join(lines) + "\n"


def write_geometry(path, g: OpticalGeometry) -> None:
    Path(path).write_text(format_geometry(g), encoding="utf-8")


def geometry_to_dict(g: OpticalGeometry) -> dict:
    return {
        "wavelength_m": g.wavelength,
        "slit_width_m": g.slit_width,
        "slit_offsets_m": list(g.slit_offsets),
        "focal_length_m": g.focal_length,
        "slit_to_lens_m": g.slit_to_lens,
        "lens_to_detector_m": g.lens_to_detector,
    }


def geometry_from_dict(d: dict) -> OpticalGeometry:
    return OpticalGeometry(
        d["wavelength_m"],
        d["slit_width_m"],
        tuple(d["slit_offsets_m"]),
        d["focal_length_m"],
        d["slit_to_lens_m"],
        d["lens_to_detector_m"],
    )


# --------------------------------------------------------------------------
# density matrices


def basis_label(dim: int) -> str:
    if dim == 2:
        return ",".join(BASIS_1Q)
    if dim == 4:
        return ",".join(BASIS_2Q)
    return ",".join(str(i) for i in range(dim))


def matrix_to_dict(rho: np.ndarray) -> dict:
    rho = np.asarray(rho, dtype=complex)
    return {
        "dim": int(rho.shape[0]),
        "basis": basis_label(rho.shape[0]),
        "real": [[float(v) for v in row] for row in rho.real],
        "imag": [[float(v) for v in row] for row in rho.imag],
    }


def matrix_from_dict(d: dict) -> np.ndarray:
    dim = int(d["dim"])
    if d.get("basis") != basis_label(dim):
        raise ConfigError(f"matrix basis {d.get('basis')!r} differs from {basis_label(dim)!r}")
    rho = np.array(d["real"], dtype=float) + 1j * np.array(d["imag"], dtype=float)
    if rho.shape != (dim, dim):
        raise ConfigError(f"matrix arrays have shape {rho.shape}, expected {(dim, dim)}")
    return rho


def write_density(path, rho: np.ndarray) -> None:
    Path(path).write_text(json.dumps(matrix_to_dict(rho), indent=1) + "\n", encoding="utf-8")


def read_density(path) -> np.ndarray:
    try:
        return matrix_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot read density matrix {path}: {exc}") from exc


# --------------------------------------------------------------------------
# scans


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_scan(path, scan: ScanRecord) -> None:
    """Write ``x_m,value`` CSV plus a JSON metadata sidecar."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_m", "value"])
        for x, v in zip(scan.x, scan.values):
            w.writerow([_fmt(x), str(int(v)) if scan.kind == "counts" else _fmt(v)])
    meta = {
        "geometry": geometry_to_dict(scan.geometry),
        "kind": scan.kind,
        "total_shots": scan.total_shots,
        "seed": scan.seed,
        "detector_width_m": scan.detector_width,
        "accidental_rate": scan.accidental_rate,
    }
    extra = dict(scan.metadata)
    if "arm_b_geometry" in extra:
        extra["arm_b_geometry"] = geometry_to_dict(extra["arm_b_geometry"])
    meta["extra"] = extra
    sidecar_path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def read_scan(path, geometry: OpticalGeometry | None = None) -> ScanRecord:
    """Read a scan CSV; geometry comes from the sidecar unless given."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read scan {path}: {exc}") from exc
    if not rows or rows[0] != ["x_m", "value"]:
        raise ConfigError(f"{path}: expected header 'x_m,value'")
    x = np.array([float(r[0]) for r in rows[1:]])
    vals = [r[1] for r in rows[1:]]
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
    kind = meta.get("kind", "counts")
    values = np.array([int(v) for v in vals]) if kind == "counts" else np.array([float(v) for v in vals])
    if geometry is None:
        if "geometry" not in meta:
            raise ConfigError(f"{path}: no geometry given and no sidecar found")
        geometry = geometry_from_dict(meta["geometry"])
    extra = dict(meta.get("extra", {}))
    if "arm_b_geometry" in extra:
        extra["arm_b_geometry"] = geometry_from_dict(extra["arm_b_geometry"])
    return ScanRecord(
        geometry=geometry,
        x=x,
        values=values,
        kind=kind,
        total_shots=meta.get("total_shots"),
        seed=meta.get("seed"),
        detector_width=meta.get("detector_width_m", 0.0),
        accidental_rate=meta.get("accidental_rate", 0.0),
        metadata=extra,
    )


# --------------------------------------------------------------------------
# setting tables, trajectories, reports


def write_table(path, table) -> None:
    t = np.asarray(table)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["B\\A", *TABLE_LABELS])
        for label, row in zip(TABLE_LABELS, t):
            w.writerow([label, *(_fmt(v) for v in row)])


def _label_index(label: str) -> int:
    label = label.strip().replace("⟩", ">").replace("−", "-").replace(" ", "")
    if label in TABLE_LABELS:
        return TABLE_LABELS.index(label)
    if label in _SHORT_LABELS:
        return _SHORT_LABELS.index(label)
    raise ConfigError(f"unknown setting label {label!r}")


def read_table(path) -> np.ndarray:
    """Read a 6x6 setting table; rows and columns are reordered by their labels."""
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc
    if len(rows) != 7 or any(len(r) != 7 for r in rows):
        raise ConfigError(f"{path}: expected a 7x7 CSV (labels plus 6x6 values)")
    cols = [_label_index(c) for c in rows[0][1:]]
    out = np.empty((6, 6))
    for r in rows[1:]:
        i = _label_index(r[0])
        for j, v in zip(cols, r[1:]):
            out[i, j] = float(v)
    return out


def write_trajectory(path, traj) -> None:
    """CSV with columns x_m, bx, by, bz and the unwrapped azimuth."""
    az = traj.azimuth
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_m", "bx", "by", "bz", "azimuth_rad"])
        for x, p, a in zip(traj.x, traj.points, az):
            w.writerow([_fmt(x), *(_fmt(v) for v in p), _fmt(a)])


def read_trajectory(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


def write_report(path, report: dict) -> None:
    """Write a reconstruction report as JSON; matrices are stored as real/imag pairs."""

    def encode(v):
        if isinstance(v, np.ndarray) and v.ndim == 2:
            return matrix_to_dict(v)
        if isinstance(v, np.ndarray):
            return [encode(u) for u in v]
        if isinstance(v, dict):
            return {k: encode(u) for k, u in v.items()}
        if isinstance(v, (list, tuple)):
            return [encode(u) for u in v]
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        if isinstance(v, complex):
            return {"re": v.real, "im": v.imag}
        return v

    Path(path).write_text(json.dumps(encode(report), indent=1) + "\n", encoding="utf-8")
