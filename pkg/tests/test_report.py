import numpy as np
import pytest

from minkiso.corpus import corpus
from minkiso.errors import FHInapplicable, RadiusTooLarge, TimelikeHViolation, Unsupported
from minkiso.mink import Signature
from minkiso.report import (
    GeodesicDisk,
    _thm1_density,
    check_thm1,
    check_thm2,
    fiala_huber_compare,
    geodesic_ball_expansion,
    geodesic_disk,
    identity_check,
)
from minkiso.surface import mesh_from_parametric, volume

PI = np.pi


class TestThm1:
    def test_flat_equality(self):
        r = check_thm1(corpus("flat-disk"))
        assert r.lhs == pytest.approx(PI, rel=1e-12)
        assert r.rhs == pytest.approx(PI, rel=1e-12)
        assert r.ratio == pytest.approx(1.0, abs=1e-12) and r.passed

    @pytest.mark.parametrize("beta", [0.2, 0.5, 0.8, 1.2])
    def test_boosted_ratio(self, beta):
        r = check_thm1(corpus("boosted-disk", {"beta": beta}))
        assert r.tau == pytest.approx(np.cosh(beta), rel=1e-12)
        assert r.ratio == pytest.approx(np.exp(-2 * beta), rel=1e-9)
        assert r.passed

    def test_catenoid_strict(self):
        r = check_thm1(corpus("elliptic-catenoid"))
        assert 0 < r.ratio < 1 and r.integral_f > 0

    def test_routes_to_thm2(self):
        assert check_thm1(corpus("sphere-cap")).theorem == "thm2"

    def test_timelike_H_rejected(self):
        sig = Signature(3, 1)
        H = np.array([[0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.5]])
        with pytest.raises(TimelikeHViolation):
            _thm1_density(sig, H)
        f, clamp = _thm1_density(sig, H[:1])
        assert f[0] == 1.0 and clamp == 0.0

    def test_mesh_backend(self):
        M = mesh_from_parametric(corpus("flat-disk"), 32)
        r = check_thm1(M)
        assert r.slack == pytest.approx(5 * M.mesh_size())
        assert r.surface == "flat-disk"
        assert abs(r.ratio - 1) < r.slack and r.passed

    def test_mesh_slack_shrinks(self):
        s = [check_thm1(mesh_from_parametric(corpus("elliptic-catenoid"), n)).slack
             for n in (16, 32)]
        assert s[1] < 0.6 * s[0]

    def test_as_dict(self):
        d = check_thm1(corpus("flat-disk")).as_dict()
        assert d["theorem"] == "thm1" and "c_thm1" in d["constants"]


class TestThm2:
    def test_flat_codim(self):
        # tau = 1, m = 1, k = 2: constant 3 / (8 pi), rhs = 3 pi / 2
        r = check_thm2(corpus("flat-disk", {"m": 1}))
        assert r.lhs == pytest.approx(PI, rel=1e-12)
        assert r.rhs == pytest.approx(1.5 * PI, rel=1e-12)
        assert r.ratio == pytest.approx(2 / 3, rel=1e-12)

    def test_sphere_cap_density(self):
        S = corpus("sphere-cap")
        r = check_thm2(S)
        # unit sphere: |H| = 2 and tau = 1, so the density integrates to twice the area
        assert r.integral_f == pytest.approx(2 * volume(S, 64, 4), rel=1e-7)
        assert r.extras["identity_ok"] and r.passed

    def test_needs_codimension(self):
        with pytest.raises(Unsupported):
            check_thm2(corpus("flat-disk"))

    def test_identity(self):
        assert identity_check(np.linspace(1, 50, 1000)) < 1e-12


class TestFialaHuber:
    def test_flat(self):
        c = fiala_huber_compare(corpus("flat-disk"))
        assert c.rhs_fh == pytest.approx(PI, rel=1e-12)
        assert c.rhs_thm1 == pytest.approx(PI, rel=1e-12)
        assert c.total_K == 0 and not c.euclidean_fails and c.holds

    def test_catenoid_disk(self):
        S = corpus("elliptic-catenoid", {"r0": 0.25})
        c = fiala_huber_compare(geodesic_disk(S, [0.8, 0.0], 0.2))
        assert c.euclidean_fails and c.holds
        assert c.lhs_A < c.rhs_fh < c.rhs_thm1

    def test_sphere_cap(self):
        S = corpus("sphere-cap")
        c = fiala_huber_compare(S)
        # total curvature of a unit cap equals its area
        assert c.total_K == pytest.approx(c.lhs_A, rel=1e-7)
        assert c.lhs_A <= c.rhs_fh and c.euclidean_fails
        assert c.rhs_thm1 is None and c.holds
        # defect 4 pi - L^2 / rhs_fh = 2 int K = 2 area
        defect = 4 * PI * (1 - c.euclidean_rhs / c.rhs_fh)
        assert defect == pytest.approx(2 * c.lhs_A, rel=1e-7)

    def test_negative_curvature(self):
        d = geodesic_disk(corpus("euclidean-catenoid"), [0.0, 0.0], 0.2)
        assert d.min_K < 0
        with pytest.raises(FHInapplicable):
            fiala_huber_compare(d)

    def test_total_curvature_too_large(self):
        d = GeodesicDisk(np.zeros(2), 1.0, 1.0, 1.0, 2 * PI, 1.0, 0.5)
        with pytest.raises(FHInapplicable):
            fiala_huber_compare(d)

    def test_band_rejected(self):
        with pytest.raises(Unsupported):
            fiala_huber_compare(corpus("euclidean-catenoid"))


class TestGeodesic:
    def test_flat_disk(self):
        d = geodesic_disk(corpus("flat-disk"), [0.1, -0.2], 0.3)
        assert d.area == pytest.approx(PI * 0.09, rel=1e-8)
        assert d.length == pytest.approx(2 * PI * 0.3, rel=1e-10)

    def test_flat_expansion(self):
        e = geodesic_ball_expansion(corpus("flat-disk"), [0.1, 0.2])
        assert e.K_p == 0 and abs(e.coefficient) < 1e-3

    def test_sphere_expansion(self):
        e = geodesic_ball_expansion(corpus("sphere-cap", {"angle": 1.0}), [0.0, 0.0])
        assert e.K_p == pytest.approx(1.0, rel=1e-6)
        assert e.relative_error < 1e-3

    def test_sphere_disk_area(self):
        # geodesic disk of radius rho on the unit sphere: 2 pi (1 - cos rho)
        d = geodesic_disk(corpus("sphere-cap", {"angle": 1.0}), [0.0, 0.0], 0.5)
        assert d.area == pytest.approx(2 * PI * (1 - np.cos(0.5)), rel=1e-6)
        assert d.length == pytest.approx(2 * PI * np.sin(0.5), rel=1e-6)

    def test_radius_too_large(self):
        with pytest.raises(RadiusTooLarge):
            geodesic_disk(corpus("flat-disk"), [0.5, 0.0], 0.6)
        with pytest.raises(RadiusTooLarge):
            geodesic_ball_expansion(corpus("flat-disk"), [1.0, 0.0])
