"""Brute-force reference computations used to validate the closed forms and the solvers.

Nothing here calls the optimizer except through the objective evaluators
(:func:`augmented_objective` and the CRB of a fixed illumination).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .design import StarsProfile, TransmitDesign, user_sinr
from .fisher import crb_from_fim, fim_blocks
from .geometry import ChannelSet, SystemConfig, near_field_steering, near_field_steering_derivatives


class StepSizeError(ArithmeticError):
    """Finite differences changed by more than expected when the step was halved."""


def signal_factor(Rx: np.ndarray, T: int) -> np.ndarray:
    """Deterministic ``X`` with ``X X^H = T Rx`` (scaled eigenvectors)."""
    w, V = np.linalg.eigh(0.5 * (Rx + Rx.conj().T))
    return V * np.sqrt(np.clip(w, 0.0, None) * T)


# --- finite-difference derivative checks -----------------------------------

def _rel(a, b):
    scale = np.linalg.norm(a)
    return float(np.linalg.norm(a - b) / scale) if scale > 0 else float(np.linalg.norm(b))


def derivative_errors(r: float, theta: float, cfg: SystemConfig, dr=None, dtheta=1e-7) -> dict:
    """Relative error of the analytic steering and round-trip derivatives against central differences."""
    dr = 1e-6 * r if dr is None else dr
    a, da_dr, da_dth = near_field_steering_derivatives(r, theta, cfg)
    ap, am = near_field_steering(r + dr, theta, cfg), near_field_steering(r - dr, theta, cfg)
    bp, bm = near_field_steering(r, theta + dtheta, cfg), near_field_steering(r, theta - dtheta, cfg)
    fd_r = (ap - am) / (2 * dr)
    fd_t = (bp - bm) / (2 * dtheta)
    Gd_r = np.outer(da_dr, a) + np.outer(a, da_dr)
    Gd_t = np.outer(da_dth, a) + np.outer(a, da_dth)
    fdG_r = (np.outer(ap, ap) - np.outer(am, am)) / (2 * dr)
    fdG_t = (np.outer(bp, bp) - np.outer(bm, bm)) / (2 * dtheta)
    return {"da_dr": _rel(da_dr, fd_r), "da_dtheta": _rel(da_dth, fd_t),
            "dG_dr": _rel(Gd_r, fdG_r), "dG_dtheta": _rel(Gd_t, fdG_t)}


# --- numeric FIM -----------------------------------------------------------

def _observation_mean(xi, Z, cfg):
    r, theta, br, bi = xi
    a = near_field_steering(r, theta, cfg)
    return ((br + 1j * bi) * np.outer(a, a @ Z)).reshape(-1)


def fim_numeric(channels: ChannelSet, stars: StarsProfile, Rx: np.ndarray, q: int,
                cfg: SystemConfig, step_sizes=None) -> np.ndarray:
    """FIM of ``xi = (r_q, theta_q, Re beta_q, Im beta_q)`` by central differences of the echo mean.

    The mean is ``vec(beta G(r, theta) Phi_r H_br X)`` with ``X X^H = T Rx``.
    """
    r, theta = channels.fa_polar[q + channels.center]
    beta = channels.beta_fa[q + channels.center]
    xi0 = np.array([r, theta, beta.real, beta.imag])
    Z = (stars.o_r[:, None] * channels.H_br) @ signal_factor(Rx, cfg.coherence_block)
    if step_sizes is None:
        step_sizes = np.array([1e-6 * r, 1e-7, 1e-6 * max(abs(beta), 1e-300), 1e-6 * max(abs(beta), 1e-300)])
    step_sizes = np.asarray(step_sizes, dtype=float)

    def jac(h):
        cols = []
        for i in range(4):
            e = np.zeros(4)
            e[i] = h[i]
            cols.append((_observation_mean(xi0 + e, Z, cfg) - _observation_mean(xi0 - e, Z, cfg)) / (2 * h[i]))
        return np.column_stack(cols)

    D = jac(step_sizes)
    D2 = jac(step_sizes / 2)
    scale = np.linalg.norm(D, axis=0)
    drift = np.linalg.norm(D - D2, axis=0)
    if np.any(drift > 1e-3 * np.maximum(scale, 1e-300)):
        raise StepSizeError(f"finite differences unstable under step halving: {drift / np.maximum(scale, 1e-300)}")
    J = 2.0 / cfg.noise_sensing * np.real(D.conj().T @ D)
    return 0.5 * (J + J.T)


# --- grid maximum likelihood --------------------------------------------------

@dataclass(frozen=True)
class MonteCarloSpec:
    num_trials: int
    noise: float
    range_window: tuple[float, float, int]
    angle_window: tuple[float, float, int]
    seed: int = 0

    def __post_init__(self):
        if self.range_window[2] < 2 or self.angle_window[2] < 2:
            raise ValueError("grid needs at least two steps per axis")
        if self.num_trials < 0:
            raise ValueError("trial count must be non-negative")

    def grid(self):
        return (np.linspace(*self.range_window[:2], self.range_window[2]),
                np.linspace(*self.angle_window[:2], self.angle_window[2]))


@dataclass(frozen=True)
class EchoTemplate:
    """Known part of the echo: ``Z = Phi_r H_br X`` (N x L) and the array geometry."""

    Z: np.ndarray
    cfg: SystemConfig


class GridBoundaryWarning(UserWarning):
    pass


def _grid_steering(ranges, angles, cfg):
    return np.array([[near_field_steering(r, t, cfg) for t in angles] for r in ranges])


def mle_grid_estimate(echo: np.ndarray, template: EchoTemplate, spec: MonteCarloSpec,
                      steering=None) -> tuple[float, float]:
    """Concentrated-likelihood grid search with the complex gain profiled out by least squares.

    For a candidate mean ``beta a a^T Z`` the profiled statistic is
    ``|<a a^T Z, Y>|^2 / ||a a^T Z||^2``.
    """
    ranges, angles = spec.grid()
    A = _grid_steering(ranges, angles, template.cfg) if steering is None else steering
    R, Th, N = A.shape
    A2 = A.reshape(-1, N)
    zs = A2 @ template.Z                       # (G, L): a^T Z
    proj = A2.conj() @ echo                   # (G, L): a^H Y
    num = np.abs(np.einsum("gl,gl->g", proj, zs.conj())) ** 2
    den = N * np.einsum("gl,gl->g", zs, zs.conj()).real
    stat = np.where(den > 0, num / np.where(den > 0, den, 1.0), -np.inf)
    i, j = np.unravel_index(int(np.argmax(stat)), (R, Th))
    if i in (0, R - 1) or j in (0, Th - 1):
        warnings.warn("grid maximum sits on the search boundary", GridBoundaryWarning, stacklevel=2)
    return float(ranges[i]), float(angles[j])


@dataclass(frozen=True)
class MonteCarloResult:
    mse: np.ndarray            # (range, angle)
    stderr: np.ndarray         # standard error of each MSE estimate
    crb: np.ndarray            # CRB diagonal
    trials: int
    inconclusive: bool = False


def monte_carlo_mse(channels: ChannelSet, stars: StarsProfile, Rx: np.ndarray, q: int,
                    cfg: SystemConfig, spec: MonteCarloSpec) -> MonteCarloResult:
    """MSE of the grid MLE over independent noisy echoes, next to the CRB at the same noise level."""
    from dataclasses import replace

    cfg_mc = replace(cfg, noise_sensing_db=10.0 * math.log10(spec.noise))
    crb = np.diag(crb_from_fim(fim_blocks(channels, stars, Rx, q, cfg_mc)).crb)
    if spec.num_trials == 0:
        return MonteCarloResult(np.full(2, np.nan), np.full(2, np.nan), crb, 0, True)
    r, theta = channels.fa_polar[q + channels.center]
    beta = channels.beta_fa[q + channels.center]
    Z = (stars.o_r[:, None] * channels.H_br) @ signal_factor(Rx, cfg.coherence_block)
    a = channels.steering_fa[q + channels.center]
    mean = beta * np.outer(a, a @ Z)
    template = EchoTemplate(Z, cfg)
    ranges, angles = spec.grid()
    steering = _grid_steering(ranges, angles, cfg)
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.num_trials)
    err = np.empty((spec.num_trials, 2))
    for t, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        noise = np.sqrt(spec.noise / 2) * (rng.standard_normal(mean.shape) + 1j * rng.standard_normal(mean.shape))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GridBoundaryWarning)
            r_hat, t_hat = mle_grid_estimate(mean + noise, template, spec, steering)
        err[t] = (r_hat - r, t_hat - theta)
    sq = err**2
    mse = sq.mean(axis=0)
    stderr = sq.std(axis=0, ddof=1) / np.sqrt(spec.num_trials) if spec.num_trials > 1 else np.full(2, np.inf)
    return MonteCarloResult(mse, stderr, crb, spec.num_trials)


# --- random feasible search ---------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    best: float | None
    accepted: int
    drawn: int

    @property
    def inconclusive(self) -> bool:
        return self.accepted == 0


def random_feasible_search(sampler, samples: int, seed: int = 0, batch: int = 2000) -> SearchResult:
    """Best objective over ``samples`` random draws.

    ``sampler(rng, n)`` returns ``(objectives, feasible)`` arrays of length ``n``.
    Zero accepted samples make the result inconclusive rather than a failure.
    """
    rng = np.random.default_rng(seed)
    best, accepted, drawn = None, 0, 0
    while drawn < samples:
        n = min(batch, samples - drawn)
        obj, ok = sampler(rng, n)
        obj = np.asarray(obj, dtype=float)
        ok = np.asarray(ok, dtype=bool) & np.isfinite(obj)
        drawn += n
        if ok.any():
            accepted += int(ok.sum())
            m = float(obj[ok].min())
            best = m if best is None else min(best, m)
    return SearchResult(best, accepted, drawn)


def _crn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _batch_crb_trace(J):
    """Trace of the Schur-complement inverse for a batch of 4 x 4 FIMs; inf where singular."""
    J11, J12, J22 = J[:, :2, :2], J[:, :2, 2:], J[:, 2:, 2:]
    with np.errstate(all="ignore"):
        det22 = J22[:, 0, 0] * J22[:, 1, 1] - J22[:, 0, 1] * J22[:, 1, 0]
        inv22 = np.stack([np.stack([J22[:, 1, 1], -J22[:, 0, 1]], -1),
                          np.stack([-J22[:, 1, 0], J22[:, 0, 0]], -1)], -2) / det22[:, None, None]
        S = J11 - J12 @ inv22 @ np.swapaxes(J12, 1, 2)
        det = S[:, 0, 0] * S[:, 1, 1] - S[:, 0, 1] * S[:, 1, 0]
        tr = (S[:, 0, 0] + S[:, 1, 1]) / det
    bad = ~(det > 1e-12 * np.abs(S[:, 0, 0] * S[:, 1, 1])) | ~(det22 > 0) | ~np.isfinite(tr)
    return np.where(bad, np.inf, tr)


def _fim_kernels_raw(channels, q, cfg):
    # independent assembly of the linear map Lam -> J from the channel derivatives
    i = q + channels.center
    beta = channels.beta_fa[i]
    D = [channels.dG_dr[i], channels.dG_dtheta[i], channels.G_unit[i], channels.G_unit[i]]
    base = [beta, beta, 1.0, 1j]
    c = 2.0 * cfg.coherence_block / cfg.noise_sensing
    return [[(c * np.conj(base[l]) * base[p], D[l].conj().T @ D[p]) for p in range(4)] for l in range(4)]


def sub1_sampler(state, channels: ChannelSet, cfg: SystemConfig):
    """Random transmit designs for the transmit/auxiliary block.

    Draws ``W`` and a random-rank ``R0``, rescales to a random fraction of the
    budget (biased towards full power) and keeps draws meeting every SINR
    target.  For each draw ``U`` is set to the Schur complement (the best
    feasible value) and ``Lam`` to the product or to the product shifted by
    ``-rho Gamma``; the smaller objective is reported.
    """
    K = cfg.num_users
    N, M = channels.H_br.shape
    P = cfg.power_budget
    Km = state.stars.o_r[:, None] * channels.H_br
    kernels = _fim_kernels_raw(channels, state.q, cfg)
    B = np.array([[Km.conj().T @ A @ Km for (_, A) in row] for row in kernels])      # Tr(A Km Rx Km^H) = Tr(B Rx)
    coef = np.array([[c for (c, _) in row] for row in kernels])
    G = state.Gamma
    shift = np.array([[np.trace(A @ G) for (_, A) in row] for row in kernels])
    rho = state.rho
    gamma_pen = 0.5 * rho * float(np.vdot(G, G).real)

    def sample(rng, n):
        W = _crn(rng, n, M, K)
        rank = rng.integers(0, M + 1, size=n)
        F = _crn(rng, n, M, M) * (np.arange(M)[None, None, :] < rank[:, None, None])
        Rx = W @ np.conj(np.swapaxes(W, 1, 2)) + F @ np.conj(np.swapaxes(F, 1, 2))
        power = np.real(np.trace(Rx, axis1=1, axis2=2))
        frac = 1.0 - rng.random(n) ** 4
        s = np.where(power > 0, P * frac / np.where(power > 0, power, 1.0), 0.0)
        W = W * np.sqrt(s)[:, None, None]
        Rx = Rx * s[:, None, None]
        if K:
            h = (channels.h_ru.conj() * state.stars.o_t) @ channels.H_br           # (K, M)
            gains = np.abs(np.einsum("km,nmi->nki", h, W)) ** 2
            sig = np.einsum("nkk->nk", gains)
            total = np.real(np.einsum("km,nmj,kj->nk", h, Rx, h.conj()))
            sinr = sig / (total - sig + cfg.noise_user)
            ok = np.all(sinr >= np.asarray(cfg.sinr_thresholds), axis=1)
        else:
            ok = np.ones(n, dtype=bool)
        tr = np.einsum("lpij,nji->nlp", B, Rx)
        J_prod = np.real(coef * tr)
        J_shift = np.real(coef * (tr - rho * shift))
        t_prod = _batch_crb_trace(0.5 * (J_prod + np.swapaxes(J_prod, 1, 2))) + gamma_pen
        t_shift = _batch_crb_trace(0.5 * (J_shift + np.swapaxes(J_shift, 1, 2)))
        return np.minimum(t_prod, t_shift), ok

    return sample


def sub2_sampler(state, channels: ChannelSet, cfg: SystemConfig, chunk: int = 500):
    """Random STARS profiles (uniform amplitudes and phases) with the transmit design fixed."""
    from .fisher import crb_trace_objective

    N = channels.H_br.shape[0]
    design: TransmitDesign = state.design
    Kfull = channels.H_br @ design.Rx @ channels.H_br.conj().T
    target = state.Lam + state.rho * state.Gamma
    const = crb_trace_objective(state.U)
    K = cfg.num_users
    h_cas = [channels.h_ru[k].conj()[:, None] * channels.H_br for k in range(K)]     # diag(h^*) H_br

    def sample(rng, n):
        a_r = rng.random((n, N))
        o_r = a_r * np.exp(2j * np.pi * rng.random((n, N)))
        o_t = np.sqrt(1.0 - a_r**2) * np.exp(2j * np.pi * rng.random((n, N)))
        obj = np.empty(n)
        for s in range(0, n, chunk):
            orr = o_r[s:s + chunk]
            prod = orr[:, :, None] * Kfull[None] * orr.conj()[:, None, :]
            diff = target[None] - prod
            obj[s:s + chunk] = const + np.einsum("nij,nij->n", diff, diff.conj()).real / (2 * state.rho)
        if K:
            ok = np.ones(n, dtype=bool)
            for k in range(K):
                e = o_t @ h_cas[k]                                   # (n, M) effective channel rows
                gains = np.abs(e @ design.W) ** 2
                sig = gains[:, k]
                interf = gains.sum(axis=1) - sig + np.real(np.einsum("nm,mj,nj->n", e, design.R0, e.conj()))
                ok &= sig / (interf + cfg.noise_user) >= cfg.sinr_thresholds[k]
        else:
            ok = np.ones(n, dtype=bool)
        return obj, ok

    return sample


def check_sinr(channels, stars, design, cfg) -> np.ndarray:
    """SINR margin ``SINR_k - gamma_k`` per user."""
    return user_sinr(channels, stars, design, cfg) - np.asarray(cfg.sinr_thresholds)
