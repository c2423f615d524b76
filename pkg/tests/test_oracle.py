import warnings

import numpy as np
import pytest

from nfcrb.geometry import build_channels, near_field_steering
from nfcrb.oracle import (EchoTemplate, GridBoundaryWarning, MonteCarloSpec, SearchResult,
                          mle_grid_estimate, monte_carlo_mse, random_feasible_search, signal_factor)
from nfcrb.optimizer import initial_state

from conftest import make_config


def test_signal_factor_reproduces_covariance(rng):
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    Rx = A @ A.conj().T
    X = signal_factor(Rx, 50)
    assert np.allclose(X @ X.conj().T / 50, Rx)


def test_noiseless_echo_is_located_exactly():
    cfg = make_config(N=9, M=3)
    ch = build_channels(cfg)
    st = initial_state(ch, cfg)
    Z = (st.stars.o_r[:, None] * ch.H_br) @ signal_factor(st.design.Rx, cfg.coherence_block)
    r, t = 20.0, 0.6
    a = near_field_steering(r, t, cfg)
    echo = (0.3 - 0.2j) * np.outer(a, a @ Z)
    spec = MonteCarloSpec(1, 1.0, (19.0, 21.0, 21), (0.5, 0.7, 21))
    assert mle_grid_estimate(echo, EchoTemplate(Z, cfg), spec) == pytest.approx((r, t))


def test_boundary_maximum_warns():
    cfg = make_config(N=9, M=3)
    ch = build_channels(cfg)
    st = initial_state(ch, cfg)
    Z = (st.stars.o_r[:, None] * ch.H_br) @ signal_factor(st.design.Rx, cfg.coherence_block)
    a = near_field_steering(25.0, 0.6, cfg)
    spec = MonteCarloSpec(1, 1.0, (19.0, 21.0, 5), (0.5, 0.7, 5))
    with pytest.warns(GridBoundaryWarning):
        mle_grid_estimate(np.outer(a, a @ Z), EchoTemplate(Z, cfg), spec)


def test_zero_trials_is_inconclusive():
    cfg = make_config(N=5, M=3)
    ch = build_channels(cfg)
    st = initial_state(ch, cfg)
    res = monte_carlo_mse(ch, st.stars, st.design.Rx, 0, cfg, MonteCarloSpec(0, 1e-11, (19, 21, 3), (0.5, 0.6, 3)))
    assert res.inconclusive and res.trials == 0


def test_monte_carlo_is_reproducible():
    cfg = make_config(N=5, M=3)
    ch = build_channels(cfg)
    st = initial_state(ch, cfg)
    spec = MonteCarloSpec(5, 1e-11, (19.9, 20.1, 11), (0.5, 0.55, 11), seed=9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = monte_carlo_mse(ch, st.stars, st.design.Rx, 0, cfg, spec)
        b = monte_carlo_mse(ch, st.stars, st.design.Rx, 0, cfg, spec)
    assert np.array_equal(a.mse, b.mse)


def test_random_search_tracks_best_feasible():
    def sampler(rng, n):
        x = rng.uniform(-1, 1, n)
        return x**2, x > 0.5

    res = random_feasible_search(sampler, 10_000, seed=1)
    assert res.drawn == 10_000
    assert 0.25 <= res.best < 0.251
    assert not res.inconclusive


def test_random_search_without_feasible_samples():
    res = random_feasible_search(lambda rng, n: (np.ones(n), np.zeros(n, bool)), 100)
    assert res.inconclusive and res.best is None
    assert SearchResult(None, 0, 0).inconclusive


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        MonteCarloSpec(1, 1.0, (0, 1, 1), (0, 1, 3))
