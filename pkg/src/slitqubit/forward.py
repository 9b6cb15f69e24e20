"""Forward model: detection patterns, post-selected states and simulated scans."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DimensionError, GeometryError
from .optics import OpticalGeometry, slit_amplitude
from .povm import measurement_state
from .quantum import condition

# Gauss-Legendre nodes used to average a pattern over the detector aperture
_APERTURE_ORDER = 16


@lru_cache(maxsize=None)
def _aperture_rule(order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    return t / 2, w / 2


def _check_dim(rho: np.ndarray, n: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (n, n):
        raise DimensionError(f"state of shape {rho.shape} does not match {n} slits")
    return rho


def averaged_effects(
    g: OpticalGeometry, x, model: str = "sinc", detector_width: float = 0.0
) -> np.ndarray:
    """Effects M(x) averaged over a top-hat aperture, shape ``(len(x), N, N)``.

    A zero width gives the point effects themselves.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if detector_width <= 0:
        m = measurement_state(g, xs, model)
        return m[:, :, None] * m[:, None, :].conj()
    t, w = _aperture_rule(_APERTURE_ORDER)
    pts = xs[:, None] + detector_width * t[None, :]
    m = measurement_state(g, pts.ravel(), model).reshape(*pts.shape, g.n_slits)
    return np.einsum("q,xqi,xqj->xij", w, m, m.conj())


def detection_probability(
    rho: np.ndarray,
    g: OpticalGeometry,
    x,
    model: str = "sinc",
    detector_width: float = 0.0,
) -> np.ndarray:
    """Detection density Tr[rho M(x)] in 1/m.

    With ``detector_width > 0`` the density is averaged over a top-hat
    aperture of that width centred on each ``x``. Small negative round-off
    is clipped to zero.
    """
    rho = _check_dim(rho, g.n_slits)
    scalar = np.ndim(x) == 0
    eff = averaged_effects(g, x, model, detector_width)
    p = np.clip(np.einsum("xij,ji->x", eff, rho).real, 0.0, None)
    return float(p[0]) if scalar else p


def joint_probability(
    rho_ab: np.ndarray,
    g_a: OpticalGeometry,
    x_a,
    g_b: OpticalGeometry,
    x_b,
    model: str = "sinc",
) -> np.ndarray:
    """Coincidence density Tr[(M_A(x_a) (x) M_B(x_b)) rho_AB] in 1/m**2.

    ``x_a`` and ``x_b`` broadcast against each other.
    """
    n_a, n_b = g_a.n_slits, g_b.n_slits
    rho_ab = _check_dim(rho_ab, n_a * n_b)
    xa, xb = np.broadcast_arrays(np.asarray(x_a, dtype=float), np.asarray(x_b, dtype=float))
    shape = xa.shape
    ma = measurement_state(g_a, xa.ravel(), model)
    mb = measurement_state(g_b, xb.ravel(), model)
    v = (ma[:, :, None] * mb[:, None, :]).reshape(-1, n_a * n_b)
    p = np.einsum("xi,ij,xj->x", v.conj(), rho_ab, v).real
    p = np.clip(p, 0.0, None).reshape(shape)
    return float(p) if p.ndim == 0 else p


def prepared_state(psi_ab: np.ndarray, g_b: OpticalGeometry, x_b: float, model: str = "sinc") -> np.ndarray:
    """Non-normalized state left in arm A after detecting arm B at ``x_b``."""
    n = g_b.n_slits
    psi = np.asarray(psi_ab, dtype=complex)
    if psi.size != n * n:
        raise DimensionError(f"two-arm state of size {psi.size} does not match {n} slits")
    m = measurement_state(g_b, float(x_b), model)
    return psi.reshape(n, n) @ m.conj()


def conditional_state(rho_ab: np.ndarray, g_b: OpticalGeometry, x_b: float, model: str = "sinc") -> np.ndarray:
    """Non-normalized conditional density matrix of arm A; trace is P_B(x_b)."""
    return condition(rho_ab, measurement_state(g_b, float(x_b), model), "B")


def fringe_visibility(pattern: np.ndarray) -> float:
    """(max - min)/(max + min) over the given samples."""
    hi, lo = float(np.max(pattern)), float(np.min(pattern))
    return 0.0 if hi + lo == 0 else (hi - lo) / (hi + lo)


@dataclass
class ScanRecord:
    """One detector sweep: ordered positions and a count or density per position."""

    geometry: OpticalGeometry
    x: np.ndarray
    values: np.ndarray
    kind: str = "counts"
    total_shots: int | None = None
    seed: int | None = None
    detector_width: float = 0.0
    accidental_rate: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values)
        if self.kind not in ("counts", "probability-density"):
            raise ValueError(f"unknown scan kind {self.kind!r}")
        if self.x.shape != self.values.shape or self.x.ndim != 1:
            raise ValueError("positions and values must be 1-D arrays of equal length")
        if self.x.size > 1 and np.any(np.diff(self.x) <= 0):
            raise ValueError("scan positions must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("scan values must be non-negative")
        if self.kind == "counts" and not np.all(np.mod(self.values, 1) == 0):
            raise ValueError("counts must be integers")

    def __len__(self):
        return self.x.size

    @property
    def step(self) -> float:
        return float(np.mean(np.diff(self.x))) if self.x.size > 1 else 0.0


def aperture_width(x_grid: np.ndarray, detector_width: float) -> float:
    """Acceptance width of one detector position (grid step for a point detector)."""
    if detector_width > 0:
        return float(detector_width)
    if np.size(x_grid) < 2:
        raise ValueError("a point detector needs at least two grid positions")
    return float(np.mean(np.diff(x_grid)))


def expected_counts(
    rho: np.ndarray,
    g: OpticalGeometry,
    x_grid,
    shots_per_point: float,
    detector_width: float = 0.0,
    accidental_rate: float = 0.0,
    model: str = "sinc",
) -> np.ndarray:
    """Mean counts: exposure x detection probability in the aperture + background.

    ``rho`` may be non-normalized (a conditional state); its trace then sets
    the overall signal level.
    """
    xs = np.asarray(x_grid, dtype=float)
    width = aperture_width(xs, detector_width)
    p = detection_probability(rho, g, xs, model, detector_width)
    return shots_per_point * p * width + accidental_rate


def _seed_int(seed) -> int:
    return int(seed) & (2**64 - 1)


def poisson_draws(lam: np.ndarray, seed: int, stream: tuple[int, ...] = ()) -> np.ndarray:
    """One Poisson variate per entry from a Philox stream keyed by (seed, *stream, index).

    The draw at a given index does not depend on how the array is
    partitioned.
    """
    lam = np.asarray(lam, dtype=float)
    out = np.empty(lam.shape, dtype=np.int64)
    flat = lam.ravel()
    for i, mu in enumerate(flat):
        ss = np.random.SeedSequence(_seed_int(seed), spawn_key=(*stream, i))
        out.flat[i] = np.random.Generator(np.random.Philox(ss)).poisson(mu)
    return out


def simulate_scan(
    rho: np.ndarray,
    g: OpticalGeometry,
    x_grid,
    shots_per_point: float,
    detector_width: float = 0.0,
    accidental_rate: float = 0.0,
    seed: int = 0,
    model: str = "sinc",
    stream: tuple[int, ...] = (),
) -> ScanRecord:
    """Poisson-sampled coincidence scan of ``rho`` over ``x_grid``.

    The mean at each position is ``shots_per_point`` times the probability of
    a detection within the aperture, plus a flat ``accidental_rate``.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.size == 0:
        raise ValueError("empty scan grid")
    if shots_per_point <= 0:
        raise ValueError("shots_per_point must be positive")
    lam = expected_counts(rho, g, xs, shots_per_point, detector_width, accidental_rate, model)
    counts = poisson_draws(lam, seed, stream)
    return ScanRecord(
        geometry=g,
        x=xs,
        values=counts,
        kind="counts",
        total_shots=int(round(shots_per_point)),
        seed=int(seed),
        detector_width=float(detector_width),
        accidental_rate=float(accidental_rate),
    )


def simulate_conditional_scans(
    rho_ab: np.ndarray,
    g_a: OpticalGeometry,
    g_b: OpticalGeometry,
    x_b_points,
    x_grid,
    coincidences_per_scan: float,
    detector_width: float = 0.0,
    accidental_rate: float = 0.0,
    seed: int = 0,
    model: str = "sinc",
) -> list[ScanRecord]:
    """Scan arm A once per fixed arm-B position, all with the same exposure.

    The common exposure is chosen so that the mean signal per scan equals
    ``coincidences_per_scan``; individual scans keep their relative weights
    P_B(x_b), which the two-qubit reconstruction needs.
    """
    xs = np.asarray(x_grid, dtype=float)
    conds = [conditional_state(rho_ab, g_b, xb, model) for xb in x_b_points]
    width = aperture_width(xs, detector_width)
    signal = [
        float(np.sum(detection_probability(c, g_a, xs, model, detector_width)) * width)
        for c in conds
    ]
    exposure = coincidences_per_scan / np.mean(signal)
    scans = []
    for i, (xb, c) in enumerate(zip(x_b_points, conds)):
        rec = simulate_scan(
            c, g_a, xs, exposure, detector_width, accidental_rate, seed, model, stream=(i,)
        )
        rec.metadata.update({"arm_b_x": float(xb), "arm_b_geometry": g_b})
        scans.append(rec)
    return scans


def normalize_block(raw, efficiency_ratio=1.0) -> np.ndarray:
    """Turn a 2x2 block of raw counts into probabilities.

    The block is indexed ``[arm-B setting, arm-A setting]`` with the on-axis
    setting first. Counts taken at the off-axis setting of an arm are
    multiplied by that arm's efficiency ratio; ``efficiency_ratio`` is either
    one number for both arms or a pair ``(ratio_a, ratio_b)``.
    """
    block = np.asarray(raw, dtype=float)
    if block.shape != (2, 2):
        raise ValueError("expected a 2x2 block of counts")
    if np.any(block < 0) or not np.any(block > 0):
        raise ValueError("block must contain non-negative counts with at least one positive")
    ratio_a, ratio_b = np.broadcast_to(np.asarray(efficiency_ratio, dtype=float), (2,))
    scale = np.outer([1.0, ratio_b], [1.0, ratio_a])
    corrected = block * scale
    return corrected / corrected.sum()


def recover_efficiency_ratio(raw, normalized, bounds=(0.5, 2.0)) -> float:
    """Common efficiency ratio that best maps ``raw`` onto ``normalized`` (least squares)."""
    target = np.asarray(normalized, dtype=float)

    def loss(c):
        return float(np.sum((normalize_block(raw, c) - target) ** 2))

    res = minimize_scalar(loss, bounds=bounds, method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def envelope_efficiency_ratio(g: OpticalGeometry, x_on: float, x_off: float) -> float:
    """Ratio of the single-slit intensity envelope at ``x_on`` to that at ``x_off``.

    This is the factor by which counts at the off-axis position are scaled up
    to compensate for the falling diffraction envelope.
    """
    if g.n_slits < 1:
        raise GeometryError("geometry has no slits")

    def envelope(x):
        return float(np.mean([abs(slit_amplitude(g, r, x)) ** 2 for r in g.slit_offsets]))

    return envelope(x_on) / envelope(x_off)
