import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minkiso.constants import (
    TheoremConstants,
    ball_volume,
    density_identity_gap,
    measure_constant,
    sphere_area,
    thm1_constant,
    thm2_constant,
)
from minkiso.errors import Unsupported

# frozen closed forms
INV_4PI = 0.07957747154594767  # 1 / (4 pi)
E_OVER_4PI = 0.21631399485806627  # e / (4 pi): slope factor e^{1/2} squared
THREE_OVER_8PI = 0.1193662073189215  # vol(B^1) / (4 vol(B^3))
PI_SQ = 9.869604401089358


def test_ball_volumes():
    assert ball_volume(0) == 1.0
    assert ball_volume(2) == pytest.approx(np.pi, rel=1e-15)
    assert ball_volume(3) == pytest.approx(4 * np.pi / 3, rel=1e-15)
    assert sphere_area(2) == pytest.approx(2 * np.pi)
    assert sphere_area(1) == 2.0
    with pytest.raises(ValueError):
        ball_volume(-1)


def test_thm1_sharp_euclidean():
    assert thm1_constant(2, 2, 1.0) == pytest.approx(INV_4PI, rel=1e-15)


def test_thm1_slope_dependence():
    assert thm1_constant(2, 2, np.cosh(0.5)) == pytest.approx(E_OVER_4PI, rel=1e-14)


def test_thm2_value():
    assert thm2_constant(2, 1, 2, 1.0) == pytest.approx(THREE_OVER_8PI, rel=1e-15)


def test_measure_constant_flat():
    assert measure_constant(2, 0, 2, 1.0, 1.0) == pytest.approx(PI_SQ, rel=1e-15)


def test_measure_constant_scaling():
    e = 2 + 1 + 3 - 2
    ratio = measure_constant(2, 1, 3, 2.0, 1.3) / measure_constant(2, 1, 3, 1.0, 1.3)
    assert ratio == pytest.approx(2.0**e, rel=1e-13)


def test_k_below_two():
    with pytest.raises(Unsupported):
        thm1_constant(2, 1, 1.0)
    with pytest.raises(Unsupported):
        thm2_constant(2, 1, 1, 1.0)
    with pytest.raises(ValueError):
        thm2_constant(2, 0, 2, 1.0)
    with pytest.raises(ValueError):
        thm1_constant(2, 2, 0.9)


def test_identity_random_taus():
    tau = np.random.default_rng(0).uniform(1.0, 50.0, 10_000)
    assert np.max(np.abs(density_identity_gap(tau))) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 20.0), st.floats(0.0, 5.0), st.integers(2, 4), st.integers(2, 3))
def test_thm1_monotone_in_tau(t, dt, n, k):
    assert thm1_constant(n, k, t + dt) >= thm1_constant(n, k, t)


def test_theorem_constants_build():
    tc = TheoremConstants.build(2, 0, 2, 1.0)
    assert tc.c_thm2 is None and tc.c_thm1 == pytest.approx(INV_4PI)
    tc = TheoremConstants.build(2, 1, 2, 1.0)
    assert tc.c_thm2 == pytest.approx(THREE_OVER_8PI)
