import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfcrb.geometry import (GeometryError, build_channels, element_distance, fa_position_polar,
                            far_field_steering, near_field_steering, path_gain)
from nfcrb.oracle import derivative_errors

from conftest import make_config


def test_element_distance_law_of_cosines():
    assert element_distance(20.0, math.pi / 6, 10, 0.015) == pytest.approx(19.87024, abs=1e-5)


def test_element_distance_at_origin_is_range():
    assert element_distance(7.5, 1.1, 0, 0.015) == 7.5


def test_fa_position_polar_reference_point():
    r, t = fa_position_polar(20.0, math.pi / 6, 1, 0.01)
    assert r == pytest.approx(19.99134, abs=1e-5)
    assert t == pytest.approx(0.52385, abs=1e-5)


def test_fa_position_centre_is_identity():
    assert fa_position_polar(12.0, 0.7, 0, 0.01) == pytest.approx((12.0, 0.7))


@given(st.floats(2.0, 80.0), st.floats(0.05, math.pi - 0.05), st.integers(-3, 3))
def test_fa_position_matches_cartesian(r0, t0, q):
    d1 = 0.01
    r, t = fa_position_polar(r0, t0, q, d1)
    x, y = r0 * math.cos(t0) - q * d1, r0 * math.sin(t0)
    assert r == pytest.approx(math.hypot(x, y), rel=1e-12)
    assert t == pytest.approx(math.atan2(y, x), abs=1e-9)


def test_fa_position_rejects_reaching_origin():
    with pytest.raises(GeometryError):
        fa_position_polar(0.005, 0.3, 1, 0.01)


def test_range_must_be_positive():
    with pytest.raises(GeometryError):
        element_distance(0.0, 0.3, 1, 0.01)


def test_far_field_reference_entry():
    cfg = make_config(M=3)
    b = far_field_steering(math.pi / 6, cfg)
    assert b[2] == pytest.approx(np.exp(1j * math.pi * math.cos(math.pi / 6)))
    assert b[1] == 1.0


def test_path_gain_values():
    assert abs(path_gain(1.0, 30.0)) == pytest.approx(10 ** -1.5)
    assert -20 * math.log10(abs(path_gain(20.0, 30.0))) == pytest.approx(56.0206, abs=1e-4)
    with pytest.raises(ValueError):
        path_gain(0.5, 30.0)


@settings(max_examples=50)
@given(st.floats(1.0, 100.0), st.floats(0.0, math.pi))
def test_near_field_steering_unit_modulus(r, theta):
    cfg = make_config(N=33)
    a = near_field_steering(r, theta, cfg)
    assert np.allclose(np.abs(a), 1.0, atol=1e-12)
    assert a[16] == pytest.approx(1.0)


def test_near_field_tends_to_far_field():
    cfg = make_config(N=9)
    theta = 1.0
    a = near_field_steering(1e7, theta, cfg)
    n = np.arange(-4, 5)
    ff = np.exp(2j * np.pi / cfg.wavelength * n * cfg.stars_spacing * np.cos(theta))
    assert np.allclose(a, ff, atol=1e-6)


def test_derivatives_against_finite_differences(rng):
    cfg = make_config(N=33)
    for _ in range(10):
        r, t = rng.uniform(2.0, 60.0), rng.uniform(0.2, math.pi - 0.2)
        assert max(derivative_errors(r, t, cfg).values()) < 1e-5


def test_channels_structure():
    cfg = make_config(N=9, M=5, K=2)
    ch = build_channels(cfg)
    assert ch.H_br.shape == (9, 5)
    assert np.linalg.matrix_rank(ch.H_br, tol=1e-9 * np.abs(ch.H_br).max()) == 1
    assert ch.h_ru.shape == (2, 9)
    assert ch.G.shape == (3, 9, 9)
    for G in ch.G:
        assert np.allclose(G, G.T)
    r, t = ch.fa_polar[ch.center]
    assert (r, t) == pytest.approx((cfg.target_range, cfg.target_angle))


def test_config_rejects_even_array():
    with pytest.raises(ValueError):
        make_config(N=8)


def test_config_rejects_user_inside_aperture():
    with pytest.raises(GeometryError):
        make_config(N=201, K=1, user_placements=((1.0, 0.5),))


def test_rayleigh_distance_full_scale():
    cfg = make_config(N=201, M=11)
    assert 588 <= cfg.rayleigh_distance <= 612
