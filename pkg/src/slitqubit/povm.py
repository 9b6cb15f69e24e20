"""Position-indexed measurement effects of a multi-slit qudit.

A point detector at transverse position ``x`` projects the slit qudit onto
the non-normalized state ``|m(x)> = sum_n conj(phi_n(x)) |n>``, where
``phi_n`` is the amplitude of slit ``n`` in the detector plane. The effects
``M(x) = |m(x)><m(x)|`` integrate to the identity over the whole plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .optics import OpticalGeometry, envelope_scale, slit_amplitude
from .quantum import BlochPoint, bloch_of


def measurement_state(g: OpticalGeometry, x, model: str = "sinc") -> np.ndarray:
    """Projection state(s) for detector position(s) ``x``.

    Returns shape ``(N,)`` for scalar ``x`` and ``(len(x), N)`` otherwise.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    amps = np.stack([slit_amplitude(g, r, xs, model) for r in g.slit_offsets], axis=-1)
    states = amps.conj()
    return states[0] if scalar else states


def measurement_effect(g: OpticalGeometry, x, model: str = "sinc") -> np.ndarray:
    """Rank-one effect(s) M(x), shape ``(N, N)`` or ``(len(x), N, N)``."""
    m = measurement_state(g, x, model)
    return m[..., :, None] * m[..., None, :].conj()


def focal_plane_state(g: OpticalGeometry, x, model: str = "sinc") -> np.ndarray:
    """Projection state with the detector moved to the focal plane of ``g``.

    All slit envelopes coincide there; neighbouring slits differ by the
    phase ``exp(-2j pi d x / (lambda f))`` and the fringe period is
    ``lambda f / d``.
    """
    return measurement_state(g.with_z(g.focal_length), x, model)


def fringe_period(g: OpticalGeometry) -> float:
    """Focal-plane fringe period lambda f / d."""
    return g.wavelength * g.focal_length / g.slit_separation


def lobe_width(g: OpticalGeometry) -> float:
    """Side-lobe width pi/K of the single-slit envelope."""
    return np.pi / envelope_scale(g)


def lobe_grid(g: OpticalGeometry, n_lobes: float, points_per_lobe: int) -> np.ndarray:
    """Uniform grid over ``[-n_lobes, n_lobes)`` side-lobe widths."""
    lobe = lobe_width(g)
    n = int(round(2 * n_lobes * points_per_lobe))
    return -n_lobes * lobe + np.arange(n) * (lobe / points_per_lobe)


def completeness_defect(
    g: OpticalGeometry,
    x_window: tuple[float, float],
    step: float,
    model: str = "sinc",
) -> float:
    """Spectral norm of ``sum_i M(x_i) dx - 1`` with rectangle-rule weights.

    The window ``[lo, hi)`` is split into cells of width ``step`` (a last
    partial cell is dropped) and the effect is sampled at each cell's left
    edge, so halving ``step`` nests the old grid inside the new one.
    """
    lo, hi = x_window
    if not hi > lo or step <= 0:
        raise ValueError("window must be increasing and step positive")
    n = int(np.floor((hi - lo) / step + 1e-9))
    xs = lo + np.arange(n) * step
    m = measurement_state(g, xs, model)
    dim = g.n_slits
    total = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        for k in range(dim):
            prod = m[:, j] * m[:, k].conj()
            total[j, k] = complex(math.fsum(prod.real), math.fsum(prod.imag)) * step
    return float(np.linalg.norm(total - np.eye(dim), ord=2))


@dataclass(frozen=True)
class Trajectory:
    """Bloch coordinates of normalized projection states along a scan."""

    x: np.ndarray
    points: np.ndarray  # (n, 3) of bx, by, bz
    dropped: np.ndarray  # positions where both amplitudes vanish

    @property
    def azimuth(self) -> np.ndarray:
        """Unwrapped azimuth arctan2(by, bx)."""
        return np.unwrap(np.arctan2(self.points[:, 1], self.points[:, 0]))

    def __iter__(self):
        for x, p in zip(self.x, self.points):
            yield float(x), BlochPoint(*map(float, p))

    def __len__(self):
        return self.x.size


def bloch_trajectory(
    g: OpticalGeometry, x_samples, model: str = "sinc", degenerate_tol: float = 1e-12
) -> Trajectory:
    """Trace the Bloch vector of ``|m(x)>`` over the sampled positions.

    Samples where both amplitudes fall below ``degenerate_tol * sqrt(K/pi)``
    are dropped and reported in ``Trajectory.dropped``.
    """
    if g.n_slits != 2:
        raise GeometryError("Bloch trajectories are defined for double slits only")
    xs = np.asarray(x_samples, dtype=float)
    m = measurement_state(g, xs, model)
    scale = np.sqrt(envelope_scale(g) / np.pi) if not g.is_image_plane else 1.0
    ok = np.max(np.abs(m), axis=1) > degenerate_tol * scale
    pts = np.array([bloch_of(v) for v in m[ok]]).reshape(-1, 3)
    return Trajectory(x=xs[ok], points=pts, dropped=xs[~ok])


def central_window(g: OpticalGeometry, n_lobes: float = 2.0) -> tuple[float, float]:
    """Window spanning both slit images plus ``n_lobes`` side lobes beyond them."""
    K = envelope_scale(g)
    half = abs(g.magnification) * (g.slit_offsets[-1] - g.slit_offsets[0]) / 2
    return (-half - n_lobes * np.pi / K, half + n_lobes * np.pi / K)
