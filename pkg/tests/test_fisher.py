import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfcrb.design import StarsProfile
from nfcrb.fisher import (FimBlocks, UnidentifiableTargetError, crb_from_fim, crb_trace_objective,
                          fim_blocks, schur_information)
from nfcrb.geometry import build_channels
from nfcrb.oracle import fim_numeric

from conftest import make_config


def _blocks(J):
    J = np.asarray(J, dtype=float)
    return FimBlocks(J[:2, :2], J[:2, 2:], J[2:, 2:], 0, 1.0, 1)


def _random_inputs(rng, cfg):
    N, M = cfg.num_stars_elements, cfg.num_bs_antennas
    stars = StarsProfile.from_parts(rng.random(N), 2 * np.pi * rng.random(N), 2 * np.pi * rng.random(N))
    A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    Rx = A @ A.conj().T
    return stars, Rx * cfg.power_budget / np.trace(Rx).real


def test_decoupled_fim():
    res = crb_from_fim(_blocks(np.diag([4.0, 9.0, 1.0, 1.0])))
    assert np.allclose(res.crb, np.diag([0.25, 1 / 9]))
    assert res.rcrb_range == pytest.approx(0.5)
    assert res.trace == pytest.approx(0.25 + 1 / 9)


def test_crb_matches_full_inverse(rng):
    for _ in range(20):
        A = rng.standard_normal((4, 4))
        J = A @ A.T + 0.1 * np.eye(4)
        assert np.allclose(crb_from_fim(_blocks(J)).crb, np.linalg.inv(J)[:2, :2], rtol=1e-9)


def test_badly_scaled_fim_inverts_accurately():
    D = np.diag([1e9, 1e-3, 1.0, 1.0])
    J = D @ np.array([[2, .5, .1, 0], [.5, 2, 0, .1], [.1, 0, 1, 0], [0, .1, 0, 1.]]) @ D
    assert np.allclose(crb_from_fim(_blocks(J)).crb, np.linalg.inv(J)[:2, :2], rtol=1e-8)


def test_singular_gain_block_raises():
    J = np.diag([1.0, 1.0, 1.0, 0.0])
    with pytest.raises(UnidentifiableTargetError):
        schur_information(_blocks(J))


def test_collinear_position_information_raises():
    J = np.eye(4)
    J[:2, :2] = [[1.0, 1.0], [1.0, 1.0]]
    with pytest.raises(UnidentifiableTargetError) as err:
        crb_from_fim(_blocks(J))
    assert err.value.direction is not None


def test_trace_objective():
    assert crb_trace_objective(np.diag([2.0, 4.0])) == pytest.approx(0.75)
    with pytest.raises(np.linalg.LinAlgError):
        crb_trace_objective(np.zeros((2, 2)))


def test_closed_form_matches_numeric(rng):
    for N, M, Q in ((3, 1, 1), (5, 3, 3), (9, 5, 3)):
        cfg = make_config(N=N, M=M, Q=Q, random_gain_phase=True, seed=int(rng.integers(100)))
        ch = build_channels(cfg)
        stars, Rx = _random_inputs(rng, cfg)
        for q in range(-(Q // 2), Q // 2 + 1):
            J = fim_blocks(ch, stars, Rx, q, cfg).full()
            Jn = fim_numeric(ch, stars, Rx, q, cfg)
            assert np.linalg.norm(J - Jn) / np.linalg.norm(Jn) < 1e-4
            assert np.linalg.eigvalsh(J).min() >= -1e-8 * np.linalg.norm(J)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
def test_crb_scales_inversely_with_power(seed, factor):
    rng = np.random.default_rng(seed)
    cfg = make_config(N=5, M=3)
    ch = build_channels(cfg)
    stars, Rx = _random_inputs(rng, cfg)
    a = crb_from_fim(fim_blocks(ch, stars, Rx, 0, cfg)).crb
    b = crb_from_fim(fim_blocks(ch, stars, factor * Rx, 0, cfg)).crb
    assert np.allclose(b * factor, a, rtol=1e-8)


def test_crb_scales_with_noise_and_block_length(rng):
    cfg = make_config(N=5, M=3)
    ch = build_channels(cfg)
    stars, Rx = _random_inputs(rng, cfg)
    a = crb_from_fim(fim_blocks(ch, stars, Rx, 0, cfg)).crb
    noisy = make_config(N=5, M=3, noise_sensing_db=-100.0, coherence_block=200)
    b = crb_from_fim(fim_blocks(build_channels(noisy), stars, Rx, 0, noisy)).crb
    assert np.allclose(b, 5.0 * a, rtol=1e-9)


def test_more_illumination_never_hurts(rng):
    cfg = make_config(N=9, M=5)
    ch = build_channels(cfg)
    stars, Rx = _random_inputs(rng, cfg)
    v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    a = crb_from_fim(fim_blocks(ch, stars, Rx, 0, cfg)).crb
    b = crb_from_fim(fim_blocks(ch, stars, Rx + np.outer(v, v.conj()), 0, cfg)).crb
    assert np.linalg.eigvalsh(a - b).min() >= -1e-12 * np.abs(a).max()


def test_rejects_non_psd_covariance():
    cfg = make_config(N=5, M=3)
    ch = build_channels(cfg)
    stars = StarsProfile.from_parts(np.full(5, 0.5), np.zeros(5), np.zeros(5))
    with pytest.raises(ValueError):
        fim_blocks(ch, stars, -np.eye(3), 0, cfg)
    with pytest.raises(ValueError):
        fim_blocks(ch, stars, np.eye(3), 5, cfg)


def test_zero_reflection_is_unidentifiable():
    cfg = make_config(N=5, M=3)
    ch = build_channels(cfg)
    stars = StarsProfile.from_parts(np.ones(5), np.zeros(5), np.zeros(5))
    with pytest.raises(UnidentifiableTargetError):
        crb_from_fim(fim_blocks(ch, stars, np.eye(3), 0, cfg))
