"""Single-slit amplitudes behind a lens and the geometric scales they depend on.

All lengths are in meters. The detector plane sits a distance ``z`` behind
a lens of focal length ``f``, which is itself ``L`` behind the slit plane.
Between the focal plane (``z = f``) and the image plane the field equals a
free-space Fresnel pattern at the effective distance

    R = (L f + z f - L z) / (z - f)

shrunk by the factor ``(z - f) / f``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import FocalPlaneSingularity, GeometryError, ImagePlaneSingularity, QuadratureError

# relative tolerance used to decide that z sits exactly on a special plane
_PLANE_RTOL = 1e-12


@dataclass(frozen=True)
class OpticalGeometry:
    """One arm of the setup: slits, lens and detector plane."""

    wavelength: float
    slit_width: float
    slit_offsets: tuple[float, ...]
    focal_length: float
    slit_to_lens: float
    lens_to_detector: float

    def __post_init__(self):
        object.__setattr__(self, "slit_offsets", tuple(float(r) for r in self.slit_offsets))
        if self.wavelength <= 0 or self.slit_width <= 0 or self.focal_length <= 0:
            raise GeometryError("wavelength, slit width and focal length must be positive")
        if not self.slit_offsets:
            raise GeometryError("at least one slit offset is required")
        if any(b <= a for a, b in zip(self.slit_offsets, self.slit_offsets[1:])):
            raise GeometryError("slit offsets must be strictly increasing")
        if self.slit_to_lens <= self.focal_length:
            raise GeometryError("slits must sit beyond the front focal length (L > f)")
        f, z = self.focal_length, self.lens_to_detector
        if z < f * (1 - _PLANE_RTOL) or z > self.image_distance * (1 + _PLANE_RTOL):
            raise GeometryError(
                f"detector distance z={z!r} must lie between the focal plane {f!r} "
                f"and the image plane {self.image_distance!r}"
            )

    @classmethod
    def double_slit(
        cls,
        wavelength: float,
        slit_width: float,
        separation: float,
        focal_length: float,
        slit_to_lens: float,
        lens_to_detector: float,
    ) -> OpticalGeometry:
        return cls(
            wavelength,
            slit_width,
            (-separation / 2, separation / 2),
            focal_length,
            slit_to_lens,
            lens_to_detector,
        )

    def with_z(self, z: float) -> OpticalGeometry:
        return replace(self, lens_to_detector=float(z))

    def with_slit_to_lens(self, L: float) -> OpticalGeometry:
        return replace(self, slit_to_lens=float(L))

    @property
    def n_slits(self) -> int:
        return len(self.slit_offsets)

    @property
    def slit_separation(self) -> float:
        """Centre-to-centre pitch (mean spacing for more than two slits)."""
        if self.n_slits < 2:
            return 0.0
        return (self.slit_offsets[-1] - self.slit_offsets[0]) / (self.n_slits - 1)

    @property
    def image_distance(self) -> float:
        L, f = self.slit_to_lens, self.focal_length
        return L * f / (L - f)

    @property
    def magnification(self) -> float:
        """Scale factor (z - f)/f applied to the slit-plane coordinates."""
        return (self.lens_to_detector - self.focal_length) / self.focal_length

    @property
    def is_focal_plane(self) -> bool:
        return abs(self.lens_to_detector - self.focal_length) <= _PLANE_RTOL * self.focal_length

    @property
    def is_image_plane(self) -> bool:
        return abs(self.lens_to_detector - self.image_distance) <= _PLANE_RTOL * self.image_distance

    def image_center(self, r_n: float) -> float:
        """Detector coordinate at which slit ``r_n`` is centred."""
        return -self.magnification * r_n


@dataclass(frozen=True)
class DerivedScales:
    R: float
    K: float
    delta_phi: float
    magnification: float

    @property
    def lobe(self) -> float:
        """Width pi/K of one side lobe of the single-slit envelope."""
        return np.pi / self.K


def effective_length(g: OpticalGeometry) -> float:
    if g.is_focal_plane:
        raise FocalPlaneSingularity("effective length R diverges in the focal plane")
    L, f, z = g.slit_to_lens, g.focal_length, g.lens_to_detector
    R = (L * f + z * f - L * z) / (z - f)
    return 0.0 if g.is_image_plane else R


def envelope_scale(g: OpticalGeometry) -> float:
    """K = pi a f / (lambda R (z - f)), finite in the focal plane.

    ``R (z - f)`` equals ``L f + z f - L z`` which tends to ``f**2`` at ``z = f``,
    so the product form is used directly.
    """
    if g.is_image_plane:
        raise ImagePlaneSingularity("envelope scale K diverges in the image plane")
    L, f, z = g.slit_to_lens, g.focal_length, g.lens_to_detector
    return np.pi * g.slit_width * f / (g.wavelength * (L * f + z * f - L * z))


def envelope_shift(g: OpticalGeometry) -> float:
    """Delta phi = (z - f) K d / f; zero in the focal plane."""
    return g.magnification * envelope_scale(g) * g.slit_separation


def derive_scales(g: OpticalGeometry) -> DerivedScales:
    """R, K, delta phi and magnification for an intermediate detector plane.

    Raises:
        FocalPlaneSingularity: z = f, where R is infinite.
        ImagePlaneSingularity: R = 0, where K is infinite.
    """
    R = effective_length(g)
    if R == 0.0:
        raise ImagePlaneSingularity("R = 0 in the image plane")
    K = envelope_scale(g)
    return DerivedScales(R=R, K=K, delta_phi=envelope_shift(g), magnification=g.magnification)


def z_from_effective_length(R: float, focal_length: float, slit_to_lens: float) -> float:
    """Invert R(z) for the detector distance."""
    f, L = focal_length, slit_to_lens
    return f * (R + L) / (R + L - f)


def sinc(u):
    """Unnormalized sinc, sin(u)/u, exact at u = 0."""
    return np.sinc(np.asarray(u) / np.pi)


def sinc_amplitude(g: OpticalGeometry, r_n: float, x) -> np.ndarray:
    """Far-field (sinc) approximation to the single-slit amplitude.

    Valid for R > a**2/lambda; in the focal plane this is the exact
    Fraunhofer pattern.
    """
    K = envelope_scale(g)
    x = np.asarray(x, dtype=float)
    phase = np.exp(-1j * (2 * r_n / g.slit_width) * K * x)
    return np.sqrt(K / np.pi) * phase * sinc(K * (x + g.magnification * r_n))


def image_plane_amplitude(g: OpticalGeometry, r_n: float, x) -> np.ndarray:
    """Geometric slit image: a top-hat of width a*M centred on the image of ``r_n``."""
    if not g.is_image_plane:
        raise GeometryError("image-plane amplitude requested away from the image plane")
    x = np.asarray(x, dtype=float)
    width = g.slit_width * g.magnification
    inside = np.abs(x - g.image_center(r_n)) <= width / 2
    return np.where(inside, 1 / np.sqrt(width), 0.0).astype(complex)


@lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panel_rule(lo: float, hi: float, panels: int, order: int):
    t, w = _gauss_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def fresnel_amplitude(
    g: OpticalGeometry,
    r_n: float,
    x,
    *,
    rtol: float = 1e-9,
    max_level: int = 12,
    order: int = 20,
) -> np.ndarray:
    """Single-slit amplitude from direct quadrature of the Fresnel integral.

    The integral over the slit is evaluated with composite Gauss-Legendre
    rules on 1, 2, 4, ... panels; each x is accepted once two successive
    levels agree to ``rtol`` (relative to the largest possible value, the
    slit width).

    Raises:
        QuadratureError: tolerance not met after ``max_level`` bisections.
    """
    R = effective_length(g)
    if R == 0.0:
        raise ImagePlaneSingularity("Fresnel propagation is degenerate in the image plane")
    lam, a, f = g.wavelength, g.slit_width, g.focal_length
    L, z = g.slit_to_lens, g.lens_to_detector
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lin = 2 * np.pi * f / (lam * R * (z - f))

    def integral(xs, panels):
        u, w = _panel_rule(-a / 2, a / 2, panels, order)
        u = u + r_n
        base = w * np.exp(-1j * np.pi / (lam * R) * u**2)
        out = np.empty(xs.size, dtype=complex)
        for s in range(0, xs.size, 512):
            chunk = xs[s : s + 512]
            out[s : s + 512] = np.exp(-1j * lin * np.outer(chunk, u)) @ base
        return out

    result = integral(x, 1)
    todo = np.arange(x.size)
    for level in range(1, max_level + 1):
        finer = integral(x[todo], 2**level)
        done = np.abs(finer - result[todo]) <= rtol * a
        result[todo] = finer
        todo = todo[~done]
        if todo.size == 0:
            break
    else:
        raise QuadratureError(
            f"Fresnel quadrature missed rtol={rtol} at {todo.size} points "
            f"after {max_level} levels"
        )

    pref = np.sqrt(f / (lam * R * a * (z - f)))
    chirp = np.exp(-1j * np.pi / (lam * R) * (L - f) / (z - f) * x**2)
    return pref * chirp * result


def slit_amplitude(g: OpticalGeometry, r_n: float, x, model: str = "sinc") -> np.ndarray:
    """Dispatch to the requested amplitude model, branching on special planes."""
    if g.is_image_plane:
        return image_plane_amplitude(g, r_n, x)
    if model == "sinc" or g.is_focal_plane:
        return sinc_amplitude(g, r_n, x)
    if model == "fresnel":
        return fresnel_amplitude(g, r_n, x)
    raise ValueError(f"unknown amplitude model {model!r}")
