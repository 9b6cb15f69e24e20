"""Density-matrix reconstruction from slit-qubit measurements.

Three routes are provided:

* ``pauli_reconstruct`` inverts a 6x6 table of Pauli-eigenstate coincidence
  probabilities;
* ``pattern_invert`` reads a single qubit directly off one intermediate-plane
  detection pattern by projecting it onto the population and coherence
  patterns;
* ``fit_conditional`` fits conditional scans, and ``build_dual_frame`` with
  ``reconstruct_two_qubit`` assembles the two-qubit state from them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import FitError, GeometryError, RankDeficientFrame, TomographyError
from .forward import ScanRecord, averaged_effects
from .optics import OpticalGeometry, envelope_scale, envelope_shift, sinc
from .povm import bloch_trajectory, central_window, measurement_effect
from .quantum import (
    PAULI_BASIS,
    density_from_bloch,
    hermitize,
    is_hermitian,
    project_physical,
    tensor,
)

SETTINGS = ("l", "r", "+", "-", "+i", "-i")
# setting pairs (eigenvalue +1 first) in Pauli-axis order z, x, y
_AXIS_BLOCKS = {"z": 0, "x": 1, "y": 2}
_SIGNS = np.array([1.0, -1.0])


class Reconstruction(NamedTuple):
    raw: np.ndarray
    projected: np.ndarray


# --------------------------------------------------------------------------
# Pauli-setting linear inversion


def _block(table: np.ndarray, axis_a: str, axis_b: str) -> np.ndarray:
    ia, ib = _AXIS_BLOCKS[axis_a], _AXIS_BLOCKS[axis_b]
    return table[2 * ib : 2 * ib + 2, 2 * ia : 2 * ia + 2]


def check_setting_table(table, block_tol: float = 0.02) -> np.ndarray:
    """Validate a 6x6 table indexed ``[arm-B setting, arm-A setting]``."""
    t = np.asarray(table, dtype=float)
    if t.shape != (6, 6):
        raise TomographyError(f"setting table must be 6x6, got {t.shape}")
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise TomographyError("setting table entries must lie in [0, 1]")
    for a in "zxy":
        for b in "zxy":
            s = _block(t, a, b).sum()
            if abs(s - 1) > block_tol:
                raise TomographyError(f"block (A={a}, B={b}) sums to {s:.4f}, not 1")
    return t


def pauli_expectations(table) -> np.ndarray:
    """4x4 array E[i, j] = <s_i (x) s_j> with index order (I, x, y, z).

    Correlations are signed sums over one block; single-arm averages are
    marginal differences averaged over the three blocks of the other arm.
    """
    t = check_setting_table(table)
    order = {"x": 1, "y": 2, "z": 3}
    E = np.zeros((4, 4))
    E[0, 0] = 1.0
    for a, i in order.items():
        for b, j in order.items():
            E[i, j] = _SIGNS @ _block(t, a, b).T @ _SIGNS
    for a, i in order.items():
        E[i, 0] = np.mean([_block(t, a, b).sum(axis=0) @ _SIGNS for b in "zxy"])
        E[0, i] = np.mean([_block(t, b, a).sum(axis=1) @ _SIGNS for b in "zxy"])
    return E


def pauli_reconstruct(table) -> Reconstruction:
    """Two-qubit state from a Pauli-setting probability table.

    Returns the raw linear inversion and its projection onto the physical
    states.
    """
    E = pauli_expectations(table)
    rho = sum(
        E[i, j] * tensor(PAULI_BASIS[i], PAULI_BASIS[j]) for i in range(4) for j in range(4)
    ) / 4
    rho = hermitize(rho)
    return Reconstruction(rho, project_physical(rho))


def ideal_setting_table(rho_ab: np.ndarray) -> np.ndarray:
    """Exact 6x6 probability table of a two-qubit state."""
    from .quantum import density, ket

    rho_ab = np.asarray(rho_ab, dtype=complex)
    t = np.empty((6, 6))
    for ib, sb in enumerate(SETTINGS):
        for ia, sa in enumerate(SETTINGS):
            proj = tensor(density(ket(sa)), density(ket(sb)))
            t[ib, ia] = np.trace(proj @ rho_ab).real
    return t


# --------------------------------------------------------------------------
# single-scan pattern inversion


def overlap_coefficient(delta_phi: float) -> float:
    """beta = 3 (1 - sinc(2 dphi)) / (2 dphi**2); tends to 1 as dphi -> 0."""
    if abs(delta_phi) < 1e-4:
        return 1.0 - 0.2 * delta_phi**2
    return 3 / (2 * delta_phi**2) * (1 - float(sinc(2 * delta_phi)))


@dataclass(frozen=True)
class PatternInversion:
    delta: float  # rho_ll - rho_rr
    coherence: complex  # rho_lr
    beta: float

    @property
    def rho(self) -> np.ndarray:
        rll = (1 + self.delta) / 2
        return np.array(
            [[rll, self.coherence], [np.conj(self.coherence), 1 - rll]], dtype=complex
        )


def scan_density(scan: ScanRecord) -> np.ndarray:
    """Detection density of a scan; counts are normalized to unit area."""
    vals = np.asarray(scan.values, dtype=float)
    if scan.kind == "probability-density":
        return vals
    area = np.trapezoid(vals, scan.x)
    if area <= 0:
        raise TomographyError("scan contains no counts")
    return vals / area


def pattern_invert(scan: ScanRecord, g: OpticalGeometry | None = None) -> PatternInversion:
    """Population difference and coherence of a qubit from one detection pattern.

    Raises:
        GeometryError: the geometry is too close to the focal plane
            (|1 - beta| < 0.05) for the population formula.
        TomographyError: the scan does not cover the central lobes or
            does not resolve the fringes.
    """
    g = scan.geometry if g is None else g
    if g.n_slits != 2:
        raise GeometryError("pattern inversion is implemented for double slits only")
    K = envelope_scale(g)
    dphi = envelope_shift(g)
    beta = overlap_coefficient(dphi)
    if abs(1 - beta) < 0.05:
        raise GeometryError(
            f"beta = {beta:.3f} is too close to 1 (focal-plane limit): the population "
            "difference is singular here; use fit_conditional instead"
        )
    lo, hi = central_window(g, 2.0)
    if scan.x[0] > lo or scan.x[-1] < hi:
        raise TomographyError(
            f"scan window [{scan.x[0]:.3e}, {scan.x[-1]:.3e}] m does not cover the "
            f"central three lobes [{lo:.3e}, {hi:.3e}] m"
        )
    ratio = g.slit_separation / g.slit_width
    fringe = np.pi / (ratio * K)
    if np.max(np.diff(scan.x)) > fringe / 4:
        raise TomographyError("scan step does not resolve the interference fringes")

    p = scan_density(scan)
    u = K * scan.x
    s_l = sinc(u - dphi / 2)
    s_r = sinc(u + dphi / 2)
    delta = 3 / (2 * (1 - beta)) * np.trapezoid((s_l**2 - s_r**2) * p, scan.x)
    # Tr[rho M] carries rho_lr with phi_l conj(phi_r) ~ exp(+2i (d/a) K x)
    coh = 3 / (2 * beta) * np.trapezoid(np.exp(-2j * ratio * u) * s_l * s_r * p, scan.x)
    return PatternInversion(float(delta), complex(coh), beta)


# --------------------------------------------------------------------------
# least-squares conditional fits


def rho_from_cholesky(t: np.ndarray) -> np.ndarray:
    """rho = T^dag T / Tr with T = [[t0, 0], [t2 + i t3, t1]]."""
    T = np.array([[t[0], 0], [t[2] + 1j * t[3], t[1]]], dtype=complex)
    rho = T.conj().T @ T
    return rho / np.trace(rho).real


def cholesky_from_rho(rho: np.ndarray) -> np.ndarray:
    """Inverse of ``rho_from_cholesky`` for a full-rank qubit state."""
    J = np.eye(2)[::-1]
    low = np.linalg.cholesky(J @ rho @ J)
    T = (J @ low @ J).conj().T
    return np.array([T[0, 0].real, T[1, 1].real, T[1, 0].real, T[1, 0].imag])


def _starts() -> list[np.ndarray]:
    pts = [np.zeros(3)] + [
        0.5 * np.array([sx, sy, sz]) for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)
    ]
    return [cholesky_from_rho(density_from_bloch(b)) for b in pts]


MULTI_STARTS = tuple(_starts())


@dataclass(frozen=True)
class ConditionalFit:
    rho: np.ndarray
    slit_to_lens: float
    amplitude: float
    background: float
    residual: float  # sum of squared (weighted) residuals
    signal_total: float  # fitted background-free counts summed over the scan
    start_index: int
    model_counts: np.ndarray = field(repr=False)


def _pattern_basis(g, x, model, width) -> np.ndarray:
    """Columns P_k(x) = Tr[M(x) s_k] / 2 so that P = sum_k c_k P_k for rho = sum c_k s_k / 2."""
    eff = averaged_effects(g, x, model, width)
    return np.stack([np.einsum("xij,ji->x", eff, s).real / 2 for s in PAULI_BASIS], axis=1)


def _linear_scale(pattern, counts, weights, fit_background):
    cols = [pattern] + ([np.ones_like(pattern)] if fit_background else [])
    A = np.stack(cols, axis=1) * weights[:, None]
    coef, *_ = np.linalg.lstsq(A, counts * weights, rcond=None)
    amp = float(coef[0])
    bkg = float(coef[1]) if fit_background else 0.0
    return amp, bkg


def conditional_residual(
    scan: ScanRecord,
    rho: np.ndarray,
    g: OpticalGeometry | None = None,
    model: str = "sinc",
    weighted: bool = False,
    fit_background: bool = False,
) -> float:
    """Least-squares residual of ``rho`` against a scan, amplitude optimized."""
    g = scan.geometry if g is None else g
    counts = np.asarray(scan.values, dtype=float)
    w = 1 / np.sqrt(counts + 1) if weighted else np.ones_like(counts)
    basis = _pattern_basis(g, scan.x, model, scan.detector_width)
    coeffs = np.array([np.trace(rho @ s).real for s in PAULI_BASIS])
    pat = basis @ coeffs
    amp, bkg = _linear_scale(pat, counts, w, fit_background)
    return float(np.sum((w * (counts - amp * pat - bkg)) ** 2))


def fit_conditional(
    scan: ScanRecord,
    g: OpticalGeometry | None = None,
    fit_L: bool = False,
    *,
    model: str = "sinc",
    weighted: bool = False,
    fit_background: bool = False,
    max_nfev: int = 2000,
) -> ConditionalFit:
    """Least-squares fit of a physical qubit state to one counts scan.

    The state is parametrized as ``T^dag T / Tr`` and the amplitude (and
    optional flat background) enter linearly and are solved exactly for every
    trial state. Nine fixed Bloch-sphere starts are tried; the lowest
    residual wins, ties going to the earlier start.
    """
    g = scan.geometry if g is None else g
    if scan.kind != "counts":
        raise FitError("fit_conditional needs a counts scan")
    if len(scan) < 30:
        raise FitError(f"need at least 30 samples, got {len(scan)}")
    counts = np.asarray(scan.values, dtype=float)
    if np.all(counts == counts[0]):
        raise FitError("degenerate scan: all counts are equal")
    w = 1 / np.sqrt(counts + 1) if weighted else np.ones_like(counts)
    width = scan.detector_width
    L0 = g.slit_to_lens
    fixed_basis = None if fit_L else _pattern_basis(g, scan.x, model, width)

    def model_parts(params):
        rho = rho_from_cholesky(params[:4])
        if fit_L:
            basis = _pattern_basis(g.with_slit_to_lens(L0 * np.exp(params[4])), scan.x, model, width)
        else:
            basis = fixed_basis
        coeffs = np.array([np.trace(rho @ s).real for s in PAULI_BASIS])
        pat = basis @ coeffs
        amp, bkg = _linear_scale(pat, counts, w, fit_background)
        return rho, pat, amp, bkg

    def resid(params):
        _, pat, amp, bkg = model_parts(params)
        return w * (counts - amp * pat - bkg) / np.sqrt(max(counts.max(), 1.0))

    best = None
    for idx, start in enumerate(MULTI_STARTS):
        x0 = np.append(start, 0.0) if fit_L else start
        try:
            res = least_squares(resid, x0, method="trf", max_nfev=max_nfev, x_scale="jac")
        except (ValueError, np.linalg.LinAlgError, GeometryError):
            continue
        if res.status <= 0 or not np.all(np.isfinite(res.x)):
            continue
        if best is None or res.cost < best[1].cost:
            best = (idx, res)
    if best is None:
        raise FitError("least-squares fit did not converge from any start")

    idx, res = best
    rho, pat, amp, bkg = model_parts(res.x)
    L = L0 * float(np.exp(res.x[4])) if fit_L else L0
    model_counts = amp * pat + bkg
    return ConditionalFit(
        rho=hermitize(rho),
        slit_to_lens=L,
        amplitude=amp,
        background=bkg,
        residual=float(np.sum((w * (counts - model_counts)) ** 2)),
        signal_total=float(np.sum(amp * pat)),
        start_index=idx,
        model_counts=model_counts,
    )


# --------------------------------------------------------------------------
# dual frame and two-qubit assembly


@dataclass(frozen=True)
class DualFrame:
    points: np.ndarray
    effects: np.ndarray  # (n, 2, 2)
    lambdas: np.ndarray  # (n, 2, 2)
    frame_matrix: np.ndarray  # T[i, j] = Tr[M_i s_j]
    condition_number: float

    def __len__(self):
        return self.points.size

    def reconstruct(self, probabilities) -> np.ndarray:
        """sum_i P(x_i) Lambda_i for a single qubit."""
        p = np.asarray(probabilities, dtype=float)
        return np.einsum("i,ijk->jk", p, self.lambdas)


def build_dual_frame(
    g: OpticalGeometry, points: Sequence[float], model: str = "sinc", max_condition: float = 1e8
) -> DualFrame:
    """Reconstruction operators for measurements at ``points``.

    ``Lambda_i = sum_j pinv(T)[j, i] s_j`` so that
    ``sum_i Tr[M_i s] Lambda_i = s`` for every Pauli operator ``s``.

    Raises:
        RankDeficientFrame: fewer than four points, or effects that do not
            span the operator space.
    """
    pts = np.asarray(points, dtype=float)
    if g.n_slits != 2:
        raise GeometryError("dual frames are implemented for qubits only")
    if pts.size < 4:
        raise RankDeficientFrame(f"{pts.size} points cannot span the 4-dimensional operator space")
    effects = measurement_effect(g, pts, model)
    T = np.einsum("xij,kji->xk", effects, np.array(PAULI_BASIS)).real
    sv = np.linalg.svd(T, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if cond > max_condition:
        raise RankDeficientFrame(f"measurement effects are rank deficient (condition {cond:.3g})")
    pinv = np.linalg.pinv(T)
    lambdas = np.einsum("ji,jkl->ikl", pinv, np.array(PAULI_BASIS))
    return DualFrame(pts, effects, lambdas, T, cond)


def reconstruct_two_qubit(conditionals: Sequence[np.ndarray], frame: DualFrame) -> Reconstruction:
    """rho_AB = sum_i rho_A(x_i) (x) Lambda_i, Hermitized and scaled to unit trace."""
    if len(conditionals) != len(frame):
        raise TomographyError(
            f"{len(conditionals)} conditional states for a frame of {len(frame)} points"
        )
    rho = sum(tensor(np.asarray(c, dtype=complex), lam) for c, lam in zip(conditionals, frame.lambdas))
    rho = hermitize(rho)
    tr = np.trace(rho).real
    if not tr > 0:
        raise TomographyError("reconstructed matrix has non-positive trace")
    rho = rho / tr
    return Reconstruction(rho, project_physical(rho))


@dataclass(frozen=True)
class ScanReconstruction:
    raw: np.ndarray
    projected: np.ndarray
    fits: list
    weights: np.ndarray
    frame: DualFrame


def reconstruct_from_scans(
    scans: Sequence[ScanRecord],
    g_b: OpticalGeometry | None = None,
    *,
    model: str = "sinc",
    fit_L: bool = False,
    weighted: bool = False,
    fit_background: bool = False,
) -> ScanReconstruction:
    """Fit every conditional scan and combine them through the arm-B dual frame.

    Each conditional state is weighted by its fitted background-free total
    over the grand total across scans. Arm-B positions and geometry come
    from each scan's ``metadata`` (``arm_b_x``, ``arm_b_geometry``).
    """
    try:
        xb = [float(s.metadata["arm_b_x"]) for s in scans]
    except KeyError:
        raise TomographyError("every scan needs an 'arm_b_x' entry in its metadata") from None
    if g_b is None:
        g_b = scans[0].metadata.get("arm_b_geometry", scans[0].geometry)
    frame = build_dual_frame(g_b, xb, model)
    fits = [
        fit_conditional(s, fit_L=fit_L, model=model, weighted=weighted, fit_background=fit_background)
        for s in scans
    ]
    totals = np.array([f.signal_total for f in fits])
    weights = totals / totals.sum()
    conds = [wt * f.rho for wt, f in zip(weights, fits)]
    rec = reconstruct_two_qubit(conds, frame)
    return ScanReconstruction(rec.raw, rec.projected, fits, weights, frame)


OCTAHEDRON = {
    "+z": (0, 0, 1),
    "-z": (0, 0, -1),
    "+x": (1, 0, 0),
    "-x": (-1, 0, 0),
    "+y": (0, 1, 0),
    "-y": (0, -1, 0),
}


def inner_window(g: OpticalGeometry) -> tuple[float, float]:
    """Positions between the innermost envelope zeros of the two slits.

    Inside this window both amplitudes are appreciable except at its edges,
    where one of them vanishes and the projection state sits on a pole.
    """
    K = envelope_scale(g)
    dphi = envelope_shift(g)
    if not 0 < dphi < 2 * np.pi:
        return central_window(g, 2.0)
    half = (np.pi - dphi / 2) / K
    return (-half, half)


def octahedral_points(g: OpticalGeometry, model: str = "sinc", samples: int = 20001) -> dict:
    """Detector positions whose projection states best match the six octahedron vertices.

    The search is a dense grid over ``inner_window`` followed by a bounded
    local refinement; restricting it to the inner window keeps the detection
    probabilities of the six points comparable.
    """
    lo, hi = inner_window(g)
    xs = np.linspace(lo, hi, samples)
    traj = bloch_trajectory(g, xs, model)
    step = xs[1] - xs[0]
    out = {}
    for name, target in OCTAHEDRON.items():
        t = np.asarray(target, dtype=float)
        i = int(np.argmax(traj.points @ t))
        x0 = traj.x[i]

        def neg_overlap(x):
            b = bloch_trajectory(g, [x], model).points
            return -float(b[0] @ t) if b.size else 1.0

        bounds = (max(lo, x0 - step), min(hi, x0 + step))
        res = minimize_scalar(neg_overlap, bounds=bounds, method="bounded", options={"xatol": 1e-12})
        out[name] = float(res.x) if res.fun <= neg_overlap(x0) else float(x0)
    return out


def is_valid_density(rho: np.ndarray, tol: float = 1e-9) -> bool:
    return (
        is_hermitian(rho, 1e-9)
        and abs(np.trace(rho).real - 1) < tol
        and np.linalg.eigvalsh(rho).min() > -tol
    )
