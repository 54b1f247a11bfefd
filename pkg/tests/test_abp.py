import json

import numpy as np
import pytest

from minkiso import abp
from minkiso.abp import (
    AbpContext,
    NormalPoint,
    amgm_bound_check,
    classify,
    in_region_D,
    jacobian_det,
    jacobian_det_fd,
    phi,
    sample_region,
    surjectivity_check,
)
from minkiso.constants import measure_constant
from minkiso.corpus import corpus
from minkiso.errors import BoundViolation, SurjectivityViolation
from minkiso.surface import mesh_from_parametric, slope_field

# 1 - cosh(0.8) * 0.5 - sinh(0.8) * 0.2
D_MARGIN_BOOSTED = 0.15366133041005303


@pytest.fixture(scope="module")
def flat(ctx_factory):
    return ctx_factory("flat")


@pytest.fixture(scope="module")
def boosted(ctx_factory):
    return ctx_factory("boosted")


@pytest.fixture(scope="module")
def catenoid(ctx_factory):
    return ctx_factory("catenoid")


@pytest.fixture(scope="module")
def cap(ctx_factory):
    return ctx_factory("sphere-cap")


class TestContext:
    def test_tau_matches_slope(self, catenoid, boosted):
        assert catenoid.tau == slope_field(catenoid.twin).tau
        assert boosted.tau == pytest.approx(np.cosh(0.8), rel=1e-12)

    @pytest.mark.parametrize("key", ["catenoid", "euclidean-catenoid", "sphere-cap"])
    def test_normal_frames(self, ctx_factory, key):
        ctx = ctx_factory(key)
        P = ctx.twin.domain.sample_uniform(np.random.default_rng(0), 200)
        loc = ctx.local(P)
        sig = ctx.sig
        for fr, sgn in ((loc.n_plus, 1.0), (loc.n_minus, -1.0)):
            G = sig.inner(fr[:, :, None, :], fr[:, None, :, :])
            np.testing.assert_allclose(G, np.broadcast_to(sgn * np.eye(fr.shape[1]), G.shape),
                                       atol=1e-10)
            np.testing.assert_allclose(sig.inner(fr[:, :, None, :], loc.tangent[:, None]),
                                       0, atol=1e-10)
        W = np.concatenate([loc.tangent, loc.n_plus, loc.n_minus], axis=1)
        if ctx.m:
            assert np.all(np.linalg.det(W) > 0)

    def test_name(self, catenoid):
        assert catenoid.name == "elliptic-catenoid"


class TestPhi:
    def test_flat_identity(self, flat):
        P = np.array([0.3, -0.4])
        p = flat.normal_point(y_minus=[0.0, 0.0], P=P)
        np.testing.assert_allclose(phi(flat, p), [0.3, -0.4, 0, 0], atol=1e-10)

    def test_affine_in_y(self, catenoid):
        P = np.array([1.1, 2.0])
        p0 = catenoid.normal_point(y_minus=[0.2, -0.1], P=P)
        p1 = catenoid.normal_point(y_minus=[0.5, 0.3], P=P)
        np.testing.assert_allclose(phi(catenoid, p1) - phi(catenoid, p0), p1.y - p0.y,
                                   atol=1e-14)

    def test_normal_points_orthogonal(self, catenoid):
        rng = np.random.default_rng(3)
        for P in catenoid.twin.domain.sample_uniform(rng, 10):
            w = rng.standard_normal(4)
            p = catenoid.normal_point_from_vector(w, P=P)
            loc = catenoid.local(P[None])
            assert np.abs(catenoid.sig.inner(p.y[None], loc.tangent[0])).max() < 1e-9
            r = phi(catenoid, p) - loc.grad[0]
            assert np.abs(catenoid.sig.inner(r[None], loc.tangent[0])).max() < 1e-9


class TestRegions:
    def test_D_slope_one(self, flat):
        assert in_region_D(flat, [0.5, 0, 40.0, -3.0])

    def test_D_boosted(self, boosted):
        xi = np.array([0.5, 0, 0.2, 0])
        assert boosted.d_margin(xi) == pytest.approx(D_MARGIN_BOOSTED, rel=1e-12)
        assert in_region_D(boosted, xi)

    def test_D_strict(self, boosted):
        assert not in_region_D(boosted, [1.0 / np.cosh(0.8), 0, 0, 0])

    def test_flat_centre(self, flat):
        fl = classify(flat, flat.normal_point(y_minus=[0.1, 0.05], P=[0.05, 0.0]))
        assert fl.in_A and fl.in_Omega and fl.in_U and fl.in_D
        assert fl.hessian_min_eig == pytest.approx(1.0, abs=1e-8)

    def test_nesting(self, catenoid):
        rng = abp._rng(7, 0)
        P, y, loc = abp.sample_normal_points(catenoid, rng, 20_000, r_max=3.0)
        fl = catenoid.batch_flags(loc, y)
        assert np.all(~fl["in_A"] | fl["in_Omega"])
        assert np.all(~fl["in_Omega"] | (fl["in_U"] & fl["in_D"]))
        assert fl["in_A"].any() and (~fl["in_Omega"]).any()
        # forward inclusion: images of A-points lie in D
        assert np.all(catenoid.d_margin(fl["phi"][fl["in_A"]]) > 0)

    def test_outside_U(self, catenoid):
        loc = catenoid.local(catenoid.twin.domain.grid(24))
        g = np.sqrt(np.clip(catenoid.sig.inner(loc.grad, loc.grad), 0, None))
        i = int(np.argmax(g))
        if g[i] < catenoid.c0:
            pytest.skip("gradient below c0 everywhere")
        fl = classify(catenoid, NormalPoint(np.zeros(4), loc.geo.P[i]))
        assert not fl.in_U and not fl.in_Omega and not fl.in_A


class TestJacobian:
    def test_flat_is_one(self, flat):
        p = flat.normal_point(y_minus=[0.3, -0.2], P=[0.1, 0.4])
        assert jacobian_det(flat, p) == pytest.approx(1.0, abs=1e-9)
        assert jacobian_det_fd(flat, p) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("key", ["catenoid", "sphere-cap"])
    def test_fd_agreement(self, ctx_factory, key):
        ctx = ctx_factory(key)
        P, y, _ = sample_region(ctx, 10, "Omega", seed=11)
        for Pi, yi in zip(P, y):
            p = NormalPoint(yi, Pi)
            a, b = jacobian_det(ctx, p), jacobian_det_fd(ctx, p)
            assert a == pytest.approx(b, rel=1e-4, abs=1e-8)

    def test_nonnegative_on_A(self, catenoid):
        P, y, _ = sample_region(catenoid, 500, "A", seed=2)
        det, _, _ = abp.amgm_batch(catenoid, catenoid.local(P), y)
        assert det.min() >= -1e-9


class TestAmgm:
    def test_flat_equality(self, flat):
        lhs, rhs, sc = amgm_bound_check(flat, flat.normal_point(y_minus=[0.2, 0.1], P=[0.3, 0.3]))
        assert lhs == pytest.approx(1.0, abs=1e-9) and rhs == pytest.approx(1.0, abs=1e-9)
        assert sc == pytest.approx(2.0, abs=1e-9)

    def test_strict_for_unequal_eigenvalues(self, catenoid):
        P, y, _ = sample_region(catenoid, 50, "A", seed=5)
        det, bound, _ = abp.amgm_batch(catenoid, catenoid.local(P), y)
        assert np.all(det < bound)

    def test_violation_raised(self, cap):
        # a large normal component along H drives the trace scalar negative
        P = np.array([0.1, 0.0])
        loc = cap.local(P[None])
        h = loc.H[0] / np.linalg.norm(loc.H[0])
        p = cap.normal_point_from_vector(5.0 * h, P=P)
        with pytest.raises(BoundViolation):
            amgm_bound_check(cap, p)


class TestSurjectivity:
    def test_flat_example(self, flat):
        x, y, d = surjectivity_check(flat, [0.3, 0, 0.7, 0])
        np.testing.assert_allclose(x, [0.3, 0.0], atol=1e-6)
        np.testing.assert_allclose(y, [0, 0, 0.7, 0], atol=1e-6)
        assert d["residual"] < 1e-6 and d["passed"]

    def test_zero(self, flat):
        x, y, d = surjectivity_check(flat, np.zeros(4))
        np.testing.assert_allclose(x, 0, atol=1e-6)
        np.testing.assert_allclose(y, 0, atol=1e-6)

    def test_catenoid_batch(self, catenoid):
        xis = abp.sample_D(catenoid, abp._rng(1, 1), 50)
        for xi in xis:
            _, _, d = surjectivity_check(catenoid, xi)
            assert d["passed"] and d["hessian_min_eig"] > -1e-6

    def test_outside_D_hits_boundary(self, flat):
        with pytest.raises(SurjectivityViolation):
            surjectivity_check(flat, [3.0, 0, 0, 0])

    def test_boundary_flux(self, catenoid):
        xis = abp.sample_D(catenoid, abp._rng(0, 2), 50)
        worst, ok, ferr = abp.boundary_flux_check(catenoid, xis)
        assert ok and ferr < 1e-2


class TestSampling:
    def test_reproducible(self, catenoid):
        a = sample_region(catenoid, 100, "A", seed=9)
        b = sample_region(catenoid, 100, "A", seed=9)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
        c = sample_region(catenoid, 100, "A", seed=10)
        assert not np.array_equal(a[0], c[0])

    def test_D_samples(self, boosted):
        xi = abp.sample_D(boosted, abp._rng(0, 0), 1000)
        assert len(xi) == 1000 and np.all(boosted.d_margin(xi) > 0)


class TestMeasure:
    def test_flat_constant(self, flat):
        est = abp.measure_estimate_check(flat, n_samples=20_000)
        assert est.lhs_analytic == pytest.approx(np.pi**2, rel=1e-14)
        assert est.passed and est.rhs_mc == pytest.approx(np.pi**2, rel=1e-9)

    def test_scaling_in_c0(self):
        assert measure_constant(2, 0, 2, 2.0, 1.3) / measure_constant(2, 0, 2, 1.0, 1.3) == \
            pytest.approx(4.0)

    def test_catenoid(self, catenoid):
        est = abp.measure_estimate_check(catenoid, n_samples=50_000, seed=1)
        assert est.passed


class TestMeshBackend:
    @pytest.fixture(scope="class")
    @staticmethod
    def ctx():
        mesh = mesh_from_parametric(corpus("flat-disk"), 24)
        mesh.source, mesh.params = None, None
        return AbpContext.from_mesh(mesh)

    def test_vertex_hessian(self, ctx):
        # recovery degrades at the chart pole (thin triangle fan) and next to the rim
        v = np.flatnonzero(~ctx.surface.boundary_vertex_mask)
        loc = ctx.local_vertices(v)
        err = np.abs(loc.hess - np.eye(2)).max(axis=(1, 2))
        r = np.linalg.norm(ctx.surface.vertices[v, :2], axis=1)
        assert np.median(err) < 1e-2
        assert err[(r > 0.3) & (r < 0.8)].max() < 0.02

    def test_boundary_vertex_indeterminate(self, ctx):
        b = int(np.flatnonzero(ctx.surface.boundary_vertex_mask)[0])
        fl = classify(ctx, NormalPoint(np.zeros(4), vertex=b))
        assert fl.in_A is None

    def test_surjectivity(self, ctx):
        xis = abp.sample_D(ctx, abp._rng(0, 0), 100)
        ds = [surjectivity_check(ctx, xi, raise_on_fail=False)[2] for xi in xis]
        assert np.mean([d["passed"] for d in ds]) >= 0.99


def test_diagnostic_json():
    d = abp.Diagnostic("jacobian", "flat-disk", {"seed": 1}, True, [0.1, 0.2], 1e-9,
                       {"v": np.float64(2.0)})
    rec = json.loads(d.to_json())
    assert rec["check"] == "jacobian" and rec["passed"] is True and rec["extra"]["v"] == 2.0
    assert set(rec) == {"check", "surface", "parameters", "passed", "worst_location",
                        "residual", "extra"}
