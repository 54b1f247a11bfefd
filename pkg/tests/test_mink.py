import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from minkiso.errors import SignatureMismatch
from minkiso.mink import (
    CausalClass,
    MinkVec,
    Signature,
    block_isometry,
    boost,
    causal_class,
    mink_inner,
    mink_sq,
    proj_s,
    proj_t,
    spatial_norm,
    temporal_norm,
)

R11 = Signature(1, 1)
R21 = Signature(2, 1)
R22 = Signature(2, 2)


def vec(*c, sig):
    return MinkVec(np.array(c, dtype=float), sig)


class TestInner:
    def test_spatial_unit(self):
        assert mink_inner(vec(1, 0, sig=R11), vec(1, 0, sig=R11)) == 1.0

    def test_temporal_unit_is_negative(self):
        assert mink_inner(vec(0, 1, sig=R11), vec(0, 1, sig=R11)) == -1.0

    def test_boosted_unit(self):
        b = 0.5
        u = vec(np.cosh(b), np.sinh(b), sig=R11)
        assert mink_inner(u, u) == pytest.approx(1.0, abs=1e-15)

    def test_signature_mismatch(self):
        with pytest.raises(SignatureMismatch):
            mink_inner(vec(1, 0, sig=R11), vec(1, 0, 0, sig=R21))

    def test_bad_signature(self):
        with pytest.raises(ValueError):
            Signature(0, 2)
        with pytest.raises(ValueError):
            Signature(2, -1)


class TestProjections:
    def test_split(self):
        v = vec(3, 4, 5, sig=R21)
        np.testing.assert_array_equal(proj_s(v).coords, [3, 4, 0])
        np.testing.assert_array_equal(proj_t(v).coords, [0, 0, 5])

    def test_zero(self):
        z = vec(0, 0, 0, sig=R21)
        assert not proj_s(z).coords.any() and not proj_t(z).coords.any()

    def test_temporal_norm(self):
        assert temporal_norm(vec(0, 0, 3, 4, sig=R22)) == 5.0
        assert spatial_norm(vec(3, 4, 1, 1, sig=R22)) == 5.0


class TestCausal:
    def test_spacelike(self):
        assert causal_class(vec(1, 0, sig=R11), 1e-12) is CausalClass.SPACELIKE

    def test_null(self):
        assert causal_class(vec(1, 1, sig=R11), 1e-12) is CausalClass.NULL

    def test_timelike(self):
        assert causal_class(vec(np.sinh(1), np.cosh(1), sig=R11), 1e-12) is CausalClass.TIMELIKE

    def test_negative_tol(self):
        with pytest.raises(ValueError):
            causal_class(vec(1, 0, sig=R11), -1.0)


coords = arrays(np.float64, 5, elements=st.floats(-1e3, 1e3))
SIG = Signature(3, 2)


@settings(max_examples=200, deadline=None)
@given(coords, coords, coords, st.floats(-10, 10))
def test_bilinear_symmetric(a, b, c, s):
    u, v, w = (MinkVec(x, SIG) for x in (a, b, c))
    scale = 1.0 + np.abs(a) @ np.abs(b) + np.abs(c) @ np.abs(b) * (1 + abs(s))
    assert mink_inner(u, v) == pytest.approx(mink_inner(v, u), abs=1e-12 * scale)
    lhs = mink_inner(u * s + w, v)
    rhs = s * mink_inner(u, v) + mink_inner(w, v)
    assert lhs == pytest.approx(rhs, abs=1e-12 * scale)


@settings(max_examples=200, deadline=None)
@given(coords)
def test_norm_split_identity(a):
    v = MinkVec(a, SIG)
    q = spatial_norm(v) ** 2 - temporal_norm(v) ** 2
    assert mink_sq(v) == pytest.approx(q, rel=1e-12, abs=1e-12 * (a @ a))
    np.testing.assert_array_equal((proj_s(v) + proj_t(v)).coords, a)
    assert not proj_s(proj_t(v)).coords.any()


def _orth(rng, d):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q


@pytest.mark.parametrize("seed", range(5))
def test_block_isometry_invariance(seed):
    rng = np.random.default_rng(seed)
    A = block_isometry(SIG, _orth(rng, 3), _orth(rng, 2))
    u, v = rng.standard_normal((2, 5))
    assert SIG.inner(A @ u, A @ v) == pytest.approx(SIG.inner(u, v), abs=1e-10)


def test_boost_is_isometry():
    B = boost(R22, 0.7, 1, 1)
    np.testing.assert_allclose(B.T @ np.diag(R22.metric) @ B, np.diag(R22.metric), atol=1e-14)
