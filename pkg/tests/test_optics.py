import numpy as np
import pytest
from scipy.integrate import quad

from slitqubit.errors import FocalPlaneSingularity, GeometryError, ImagePlaneSingularity
from slitqubit.fixtures import reference_geometry
from slitqubit.optics import (
    OpticalGeometry,
    derive_scales,
    effective_length,
    envelope_scale,
    fresnel_amplitude,
    sinc_amplitude,
    slit_amplitude,
    z_from_effective_length,
)

F = 50e-3


class TestGeometry:
    def test_rejects_unsorted_offsets(self):
        with pytest.raises(GeometryError):
            OpticalGeometry(810e-9, 40e-6, (75e-6, -75e-6), F, 2 * F, 1.8 * F)

    def test_rejects_detector_beyond_image(self):
        with pytest.raises(GeometryError):
            reference_geometry(2.1 * F)

    def test_special_planes(self):
        assert reference_geometry(F).is_focal_plane
        assert reference_geometry(2 * F).is_image_plane
        assert reference_geometry().magnification == pytest.approx(0.8)


class TestScales:
    def test_effective_length(self, geom):
        assert effective_length(geom) == pytest.approx(12.5e-3, rel=1e-12)

    def test_reference_scales(self, geom):
        s = derive_scales(geom)
        # K = pi a / (lambda R M) by hand: pi * 40e-6 / (810e-9 * 12.5e-3 * 0.8)
        assert s.K == pytest.approx(np.pi * 40e-6 / (810e-9 * 12.5e-3 * 0.8), rel=1e-12)
        assert s.K == pytest.approx(1.551e4, rel=1e-3)
        assert s.delta_phi == pytest.approx(1.862, abs=1e-3)

    def test_image_plane_singular(self):
        with pytest.raises(ImagePlaneSingularity):
            envelope_scale(reference_geometry(2 * F))

    def test_focal_plane(self, focal):
        with pytest.raises(FocalPlaneSingularity):
            effective_length(focal)
        assert envelope_scale(focal) == pytest.approx(np.pi * 40e-6 / (810e-9 * F))

    def test_invert_effective_length(self, geom):
        assert z_from_effective_length(12.5e-3, F, 2 * F) == pytest.approx(1.8 * F)


class TestSincAmplitude:
    def test_peak_at_image_centre(self, geom):
        r = geom.slit_offsets[0]
        x0 = geom.image_center(r)
        assert abs(sinc_amplitude(geom, r, x0)) == pytest.approx(np.sqrt(envelope_scale(geom) / np.pi))

    def test_first_zero(self, geom):
        r = geom.slit_offsets[1]
        x = geom.image_center(r) + np.pi / envelope_scale(geom)
        assert abs(sinc_amplitude(geom, r, x)) < 1e-12

    def test_normalized(self, geom):
        r = geom.slit_offsets[0]
        K = envelope_scale(geom)
        c = geom.image_center(r)
        val, _ = quad(lambda x: abs(sinc_amplitude(geom, r, x)) ** 2, c - 2000 / K, c + 2000 / K, limit=4000)
        assert val == pytest.approx(1.0, abs=1e-3)


class TestFresnel:
    def test_matches_sinc_in_far_field(self, geom):
        r = geom.slit_offsets[0]
        K = envelope_scale(geom)
        x = np.linspace(-3 * np.pi / K, 3 * np.pi / K, 301)
        fr = np.abs(fresnel_amplitude(geom, r, x)) ** 2
        sc = np.abs(sinc_amplitude(geom, r, x)) ** 2
        assert np.linalg.norm(fr - sc) / np.linalg.norm(sc) < 0.05

    def test_centered_slit_symmetry(self, geom):
        x = np.linspace(10e-6, 500e-6, 20)
        a = fresnel_amplitude(geom, 0.0, x)
        b = fresnel_amplitude(geom, 0.0, -x)
        np.testing.assert_allclose(np.abs(a), np.abs(b), rtol=1e-9)

    def test_power_in_twenty_lobes(self, geom):
        # the sinc tail beyond 20 lobes carries about 1/(20 pi^2) of the power
        r = geom.slit_offsets[0]
        K = envelope_scale(geom)
        c = geom.image_center(r)
        x = np.linspace(c - 20 * np.pi / K, c + 20 * np.pi / K, 8001)
        power = np.trapezoid(np.abs(fresnel_amplitude(geom, r, x)) ** 2, x)
        assert power == pytest.approx(1 - 1 / (20 * np.pi**2), abs=1e-3)

    def test_dispatch(self, geom):
        x = np.array([0.0, 1e-4])
        np.testing.assert_allclose(slit_amplitude(geom, 75e-6, x), sinc_amplitude(geom, 75e-6, x))
        with pytest.raises(ValueError):
            slit_amplitude(geom, 75e-6, x, model="gaussian")

    def test_image_plane_top_hat(self):
        g = reference_geometry(2 * F)
        amp = slit_amplitude(g, -75e-6, np.array([75e-6, 0.0]))
        assert abs(amp[0]) ** 2 == pytest.approx(1 / 40e-6)
        assert amp[1] == 0
