"""Penalty dual decomposition with block coordinate descent for CRB minimisation.

The consensus equality ``Lam == Phi_r H_br Rx H_br^H Phi_r^H`` is moved into an
augmented objective

    Tr(U^-1) + 1/(2 rho) * ||Lam - Phi_r H_br Rx H_br^H Phi_r^H + rho Gamma||_F^2

which the inner loop decreases block by block (transmit/auxiliary block, STARS
block, antenna position block).  The outer loop either ascends the dual
``Gamma`` or shrinks ``rho`` depending on how much the violation dropped.

Every conic subproblem is built in scaled units (powers relative to ``P``,
``Lam`` relative to ``|beta_s|^2 M P``, the FIM relative to its own diagonal)
so that interior-point tolerances mean the same thing across scenarios.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import conic
from .conic import Affine, ConicProgram, SolverTolerances, bmat
from .design import ApvState, StarsProfile, TransmitDesign, effective_channels, illumination, user_sinr
from .fisher import (CrbResult, FimBlocks, UnidentifiableTargetError, crb_from_fim, crb_trace_objective,
                     fim_blocks, fim_from_illumination, fim_kernels, schur_information)
from .geometry import ChannelSet, SystemConfig

log = logging.getLogger(__name__)

SINR_TOL = 1e-6
POWER_TOL = 1e-6


class SubproblemInfeasible(RuntimeError):
    """A convex subproblem has an empty feasible set."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class SubproblemFailure(RuntimeError):
    """The conic solver stopped without a usable point."""


@dataclass(frozen=True)
class PddSettings:
    rho0: float | None = None     # None: scale-aware start, see initial_penalty()
    shrink: float = 0.6
    outer_tol: float = 1e-5
    max_outer: int = 50
    inner_tol: float = 1e-4
    max_inner: int = 30
    randomizations: int = 100
    eta_factor: float = 0.99
    solver: SolverTolerances = field(default_factory=SolverTolerances)

    def __post_init__(self):
        if self.rho0 is not None and not self.rho0 > 0:
            raise ValueError("initial penalty must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("penalty shrink factor must lie in (0, 1)")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")


@dataclass
class PddState:
    U: np.ndarray
    Lam: np.ndarray
    Gamma: np.ndarray
    rho: float
    design: TransmitDesign
    stars: StarsProfile
    apv: ApvState
    z: float = 0.6
    eta: float = np.inf
    outer_iter: int = 0
    inner_iter: int = 0
    history: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def q(self) -> int:
        return self.apv.active

    def copy(self) -> PddState:
        return replace(self, history=list(self.history), flags=list(self.flags))


@dataclass
class OptimizationReport:
    status: str
    state: PddState | None
    crb: CrbResult | None
    sinr: np.ndarray
    outer_iters: int
    inner_iters: int
    final_violation: float
    objective_trace: list
    violation_trace: list
    rho_trace: list
    message: str = ""

    @property
    def design(self):
        return self.state.design if self.state else None

    @property
    def stars(self):
        return self.state.stars if self.state else None

    @property
    def apv(self):
        return self.state.apv if self.state else None


# --- objective evaluation --------------------------------------------------

def consensus_product(channels: ChannelSet, stars: StarsProfile, Rx: np.ndarray) -> np.ndarray:
    return illumination(channels, stars, Rx)


def consensus_residual(state: PddState, channels: ChannelSet) -> np.ndarray:
    return state.Lam - consensus_product(channels, state.stars, state.design.Rx)


def augmented_objective(state: PddState, channels: ChannelSet) -> float:
    """``Tr(U^-1) + ||Lam - product + rho Gamma||_F^2 / (2 rho)``."""
    if not state.rho > 0:
        raise ValueError("penalty must be positive")
    r = consensus_residual(state, channels) + state.rho * state.Gamma
    return crb_trace_objective(state.U) + float(np.vdot(r, r).real) / (2.0 * state.rho)


def constraint_violation(state: PddState, channels: ChannelSet) -> float:
    """Largest absolute entry of the consensus residual."""
    return float(np.abs(consensus_residual(state, channels)).max(initial=0.0))


def sinr_feasible(channels, stars, design, cfg, tol=SINR_TOL) -> bool:
    if cfg.num_users == 0:
        return True
    return bool(np.all(user_sinr(channels, stars, design, cfg) >= np.asarray(cfg.sinr_thresholds) - tol))


# --- scaling helpers -------------------------------------------------------

def _lam_ref(channels: ChannelSet, cfg: SystemConfig) -> float:
    M = channels.H_br.shape[1]
    ref = abs(channels.beta_s) ** 2 * M * cfg.power_budget
    return ref if ref > 0 else 1.0


def _fim_scale(channels, Lam, q, cfg, lam_ref):
    """Per-parameter scale ``sqrt(J_ii)``; falls back to a reference illumination."""
    J = fim_from_illumination(channels, Lam, q, cfg).full()
    d = np.sqrt(np.clip(np.diag(J), 0.0, None))
    if np.any(d <= 1e-30 * max(d.max(initial=0.0), 1e-300)):
        N = channels.H_br.shape[0]
        J = fim_from_illumination(channels, lam_ref * np.eye(N) / N, q, cfg).full()
        d = np.where(d > 0, d, np.sqrt(np.clip(np.diag(J), 0.0, None)))
    return np.where(d > 0, d, 1.0)


def _fim_affine(channels, Lam_expr: Affine, q, cfg, scale, lam_ref):
    """Scaled FIM ``S J(lam_ref * Lam_expr) S`` as a real 4 x 4 affine expression."""
    coef, A = fim_kernels(channels, q, cfg)
    entries = [[None] * 4 for _ in range(4)]
    for l in range(4):
        for p in range(l, 4):
            w = lam_ref * coef[l, p] / (scale[l] * scale[p])
            # Re(w Tr(A Lam)) with Tr(A Lam) = <A^H, Lam>
            e = (Lam_expr.inner(A[l, p].conj().T) * w).real()
            entries[l][p] = e
            entries[p][l] = e
    return bmat(entries)


def _check(sol, what):
    if sol.status == "infeasible":
        raise SubproblemInfeasible(f"{what} is infeasible", sol.certificate)
    if not sol.ok:
        raise SubproblemFailure(f"{what}: solver returned {sol.status} ({sol.residuals})")


def _psd_part(X):
    X = 0.5 * (X + X.conj().T)
    w, V = np.linalg.eigh(X)
    return (V * np.clip(w, 0.0, None)) @ V.conj().T


# --- transmit / auxiliary block ----------------------------------------------

@dataclass
class Sub1Result:
    U: np.ndarray
    Lam: np.ndarray
    Rx: np.ndarray
    Omega: list
    design: TransmitDesign
    solver_objective: float
    solution: conic.ConicSolution


def user_directions(channels: ChannelSet, stars: StarsProfile) -> np.ndarray:
    """Columns ``c_k = (h_ru,k^H Phi_t H_br)^H``, shape (M, K)."""
    return effective_channels(channels, stars).conj().T


def build_sub1(state: PddState, channels: ChannelSet, cfg: SystemConfig):
    """SDP over ``U, Lam, Rx, Omega_k`` with the STARS profile and APV fixed.

    Returns the program and the scale factors needed to map the solution back.
    """
    if cfg.power_budget <= 0:
        raise SubproblemInfeasible("zero power budget leaves the target unilluminated")
    q = state.q
    N, M = channels.H_br.shape
    P = cfg.power_budget
    lam_ref = _lam_ref(channels, cfg)
    scale = _fim_scale(channels, state.Lam, q, cfg, lam_ref)
    obj_ref = _objective_ref(state, channels)

    prog = ConicProgram()
    Ut = prog.symmetric("U", 2)
    Lt = prog.hermitian("Lam", N)
    Rt = prog.hermitian("Rx", M, psd=True)
    C = user_directions(channels, state.stars)
    Om = [prog.hermitian(f"Omega{k}", M, psd=True) for k in range(cfg.num_users)]

    J = _fim_affine(channels, Lt, q, cfg, scale, lam_ref)
    prog.add_psd(J - bmat([[Ut, np.zeros((2, 2))], [np.zeros((2, 2)), np.zeros((2, 2))]]))
    Wt = conic.trace_inverse_epigraph(prog, Ut, "W")

    Kmat = state.stars.o_r[:, None] * channels.H_br
    prod_t = (Kmat * (P / lam_ref)) @ Rt @ Kmat.conj().T
    resid = Lt - prod_t + state.rho * state.Gamma / lam_ref
    s = conic.squared_norm_epigraph(prog, resid, "s")

    prog.add_nonneg(1.0 - Rt.trace().real())
    rest = Rt
    for O in Om:
        rest = rest - O
    if Om:
        prog.add_psd(rest)
    noise = cfg.noise_user
    for k, O in enumerate(Om):
        c = C[:, k]
        g = cfg.sinr_thresholds[k]
        cc = np.outer(c, c.conj())
        norm = noise + P * float(np.vdot(c, c).real)
        expr = (O.inner(cc).real() * ((1 + g) * P) - Rt.inner(cc).real() * (g * P) - g * noise) / norm
        prog.add_nonneg(expr)

    crb_w = 1.0 / scale[:2] ** 2
    penalty_w = lam_ref**2 / (2.0 * state.rho)
    prog.minimize((Wt[0, 0] * crb_w[0] + Wt[1, 1] * crb_w[1] + s * penalty_w) / obj_ref)
    return prog, dict(scale=scale, lam_ref=lam_ref, P=P, obj_ref=obj_ref)


def _objective_ref(state, channels):
    try:
        ref = augmented_objective(state, channels)
    except np.linalg.LinAlgError:
        ref = 1.0
    return ref if np.isfinite(ref) and ref > 0 else 1.0


def clean_transmit(Rx, Omega, P):
    """Project the relaxed solution onto ``Omega_k >= 0``, ``Rx - sum Omega_k >= 0``, ``Tr(Rx) <= P``."""
    Omega = [_psd_part(O) for O in Omega]
    S = sum(Omega) if Omega else np.zeros_like(Rx)
    R0 = _psd_part(Rx - S)
    total = np.real(np.trace(S + R0))
    if total > P:
        spare = np.real(np.trace(R0))
        excess = total - P
        if spare >= excess and spare > 0:
            R0 = R0 * (1.0 - excess / spare)
        else:
            factor = P / total
            Omega = [O * factor for O in Omega]
            R0 = R0 * factor
            S = S * factor
    return S + R0, Omega


def rank_one_recovery(Rx: np.ndarray, Omega, directions: np.ndarray) -> TransmitDesign:
    """Rank-one beamformers ``w_k = Omega_k c_k / sqrt(c_k^H Omega_k c_k)`` and ``R0 = Rx - W W^H``."""
    M = Rx.shape[0]
    cols = []
    for k, O in enumerate(Omega):
        c = directions[:, k]
        v = O @ c
        gain = float(np.real(np.vdot(c, v)))
        cols.append(v / np.sqrt(gain) if gain > 0 else np.zeros(M, dtype=complex))
    W = np.column_stack(cols) if cols else np.zeros((M, 0), dtype=complex)
    R0 = Rx - W @ W.conj().T
    return TransmitDesign(W, 0.5 * (R0 + R0.conj().T))


def solve_sub1(state: PddState, channels: ChannelSet, cfg: SystemConfig,
               tol: SolverTolerances | None = None) -> Sub1Result:
    prog, sc = build_sub1(state, channels, cfg)
    sol = conic.solve(prog, tol)
    _check(sol, "transmit subproblem")
    P, lam_ref = sc["P"], sc["lam_ref"]
    Rx = P * sol["Rx"]
    Omega = [P * sol[f"Omega{k}"] for k in range(cfg.num_users)]
    Rx, Omega = clean_transmit(Rx, Omega, P)
    design = rank_one_recovery(Rx, Omega, user_directions(channels, state.stars))
    Lam = lam_ref * sol["Lam"]
    Lam = 0.5 * (Lam + Lam.conj().T)
    d = sc["scale"][:2]
    U = np.outer(d, d) * np.real(sol["U"])
    try:
        # the tight choice for the solved Lam; never worse than the solver's U
        U = schur_information(fim_from_illumination(channels, Lam, state.q, cfg))
    except UnidentifiableTargetError:
        pass
    true_obj = sol.objective * sc["obj_ref"]
    return Sub1Result(0.5 * (U + U.T), Lam, Rx, Omega, design, true_obj, sol)


# --- STARS block -------------------------------------------------------------

@dataclass
class Sub2Result:
    stars: StarsProfile
    Phi_t: np.ndarray
    Phi_r: np.ndarray
    bound: float
    extracted_objective: float
    feasible: bool
    solution: conic.ConicSolution


def _sinr_quadratics(channels, design, cfg):
    """Matrices ``C_k`` with ``o_t^T ... o_t^* = Tr(C_k^H Phi_t)``: SINR_k >= g  <=>  <C_k, Phi_t> >= g sigma^2."""
    out = []
    Rx = design.Rx
    for k in range(cfg.num_users):
        B = channels.h_ru[k].conj()[:, None] * channels.H_br
        w = design.W[:, k]
        g = cfg.sinr_thresholds[k]
        S = (1.0 + g) * np.outer(w, w.conj()) - g * Rx
        out.append(np.conj(B @ S @ B.conj().T))
    return out


def build_sub2(state: PddState, channels: ChannelSet, cfg: SystemConfig):
    N = channels.H_br.shape[0]
    lam_ref = _lam_ref(channels, cfg)
    prog = ConicProgram()
    Pt = prog.hermitian("Phi_t", N, psd=True)
    Pr = prog.hermitian("Phi_r", N, psd=True)
    prog.add_eq(Pt.diag() + Pr.diag() - 1.0)
    noise = cfg.noise_user
    for k, Ck in enumerate(_sinr_quadratics(channels, state.design, cfg)):
        g = cfg.sinr_thresholds[k]
        norm = noise + np.abs(Ck).sum()
        prog.add_nonneg((Pt.inner(Ck.conj().T).real() - g * noise) / norm)
    Kfull = channels.H_br @ state.design.Rx @ channels.H_br.conj().T
    target = (state.Lam + state.rho * state.Gamma) / lam_ref
    # only the penalty depends on this block, so minimising the plain norm gives the same
    # minimiser as the squared norm and is far better conditioned for the splitting solver
    t = prog.scalar("t", nonneg=True)
    prog.add_soc((Pr * (Kfull / lam_ref) - target).vec(), t)
    prog.minimize(t)
    return prog, dict(lam_ref=lam_ref)


def extract_profile(Phi_t, Phi_r, phases_t=None, phases_r=None) -> StarsProfile:
    """Rank-one profile: amplitudes from the diagonals, phases from the leading eigenvectors."""
    def lead(X):
        w, V = np.linalg.eigh(0.5 * (X + X.conj().T))
        return V[:, -1]

    a_r = np.sqrt(np.clip(np.real(np.diag(Phi_r)), 0.0, 1.0))
    pt = np.angle(lead(Phi_t)) if phases_t is None else phases_t
    pr = np.angle(lead(Phi_r)) if phases_r is None else phases_r
    o_r = a_r * np.exp(1j * pr)
    a_t = np.sqrt(np.clip(1.0 - a_r**2, 0.0, 1.0))
    return StarsProfile(a_t * np.exp(1j * pt), o_r)


def _gaussian_candidates(Phi_t, Phi_r, count, rng):
    """Phase draws from ``CN(0, Phi)``; amplitudes come from the diagonal in :func:`extract_profile`."""
    def factor(X):
        w, V = np.linalg.eigh(0.5 * (X + X.conj().T))
        return V * np.sqrt(np.clip(w, 0.0, None))

    Lt, Lr = factor(Phi_t), factor(Phi_r)
    N = Phi_t.shape[0]
    for _ in range(count):
        zt = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / np.sqrt(2)
        zr = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / np.sqrt(2)
        yield np.angle(Lt @ zt), np.angle(Lr @ zr)


def solve_sub2(state: PddState, channels: ChannelSet, cfg: SystemConfig,
               tol: SolverTolerances | None = None, randomizations: int = 100,
               rng: np.random.Generator | None = None) -> Sub2Result:
    prog, sc = build_sub2(state, channels, cfg)
    sol = conic.solve(prog, tol)
    _check(sol, "STARS subproblem")
    Phi_t, Phi_r = sol["Phi_t"], sol["Phi_r"]
    const = crb_trace_objective(state.U)
    bound = const + (sc["lam_ref"] * float(np.real(sol["t"]).item())) ** 2 / (2.0 * state.rho)
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)

    def score(stars):
        trial = replace(state, stars=stars)
        ok = sinr_feasible(channels, stars, state.design, cfg)
        return ok, augmented_objective(trial, channels)

    best = extract_profile(Phi_t, Phi_r)
    best_ok, best_obj = score(best)
    for pt, pr in _gaussian_candidates(Phi_t, Phi_r, randomizations, rng):
        cand = extract_profile(Phi_t, Phi_r, pt, pr)
        ok, obj = score(cand)
        if (ok and not best_ok) or (ok == best_ok and obj < best_obj):
            best, best_ok, best_obj = cand, ok, obj
    return Sub2Result(best, Phi_t, Phi_r, bound, best_obj, best_ok, sol)


# --- antenna position block -------------------------------------------------

@dataclass
class Sub3Result:
    apv: ApvState
    relaxed: np.ndarray
    rounded: int
    traces: np.ndarray     # Tr(CRB_q(Lam)) per signed position, inf when unidentifiable


def position_traces(channels: ChannelSet, Lam: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    Q = channels.num_positions
    out = np.full(Q, np.inf)
    for i in range(Q):
        try:
            out[i] = crb_from_fim(fim_from_illumination(channels, Lam, i - Q // 2, cfg)).trace
        except UnidentifiableTargetError:
            pass
    return out


def solve_sub3(state: PddState, channels: ChannelSet, cfg: SystemConfig,
               tol: SolverTolerances | None = None) -> Sub3Result:
    """Max-slack relaxation of the position choice, argmax rounding, then exhaustive check."""
    Q = channels.num_positions
    traces = position_traces(channels, state.Lam, cfg)
    if Q == 1:
        return Sub3Result(ApvState(np.ones(1)), np.ones(1), 0, traces)
    lam_ref = _lam_ref(channels, cfg)
    scale = _fim_scale(channels, state.Lam, state.q, cfg, lam_ref)
    Sinv = np.diag(1.0 / scale)
    prog = ConicProgram()
    u = [prog.scalar(f"u{i}", nonneg=True) for i in range(Q)]
    t = prog.scalar("t")
    total = None
    for i in range(Q):
        B = fim_from_illumination(channels, state.Lam, i - Q // 2, cfg).full()
        B[:2, :2] -= state.U
        term = u[i].broadcast(Sinv @ B @ Sinv)
        total = term if total is None else total + term
        prog.add_nonneg(1.0 - u[i])
    prog.add_eq(sum(u[1:], u[0]) - 1.0)
    prog.add_psd(total - t.broadcast(np.eye(4)))
    prog.minimize(-t)
    sol = conic.solve(prog, tol)
    if sol.ok:
        relaxed = np.array([float(sol[f"u{i}"].real.item()) for i in range(Q)])
    else:
        relaxed = np.zeros(Q)
        relaxed[state.q + Q // 2] = 1.0
    rounded = int(np.argmax(relaxed))
    best = int(np.argmin(traces))
    choice = best if traces[best] <= traces[rounded] else rounded
    if not np.isfinite(traces[choice]):
        choice = state.q + Q // 2
    return Sub3Result(ApvState.one_hot(choice - Q // 2, Q), relaxed, rounded - Q // 2, traces)


# --- inner and outer loops --------------------------------------------------

def bcd_iterate(state: PddState, channels: ChannelSet, cfg: SystemConfig,
                settings: PddSettings | None = None, rng=None) -> PddState:
    """One pass over the three blocks; a block update that raises the objective is discarded."""
    settings = settings or PddSettings()
    tol = settings.solver
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    cur = state.copy()
    cur_obj = augmented_objective(cur, channels)
    cur_ok = sinr_feasible(channels, cur.stars, cur.design, cfg)

    def offer(candidate, label):
        nonlocal cur, cur_obj, cur_ok
        obj = augmented_objective(candidate, channels)
        ok = sinr_feasible(channels, candidate.stars, candidate.design, cfg)
        if (ok and not cur_ok) or (ok == cur_ok and obj <= cur_obj):
            cur, cur_obj, cur_ok = candidate, obj, ok
        else:
            cur.flags.append(f"rejected {label} at outer {cur.outer_iter} pass {cur.inner_iter}")

    try:
        r1 = solve_sub1(cur, channels, cfg, tol)
        offer(replace(cur, U=r1.U, Lam=r1.Lam, design=r1.design), "transmit block")
    except SubproblemFailure as exc:
        cur.flags.append(f"transmit block skipped: {exc}")

    try:
        r2 = solve_sub2(cur, channels, cfg, tol, settings.randomizations, rng)
        offer(replace(cur, stars=r2.stars), "STARS block")
    except (SubproblemFailure, SubproblemInfeasible) as exc:
        # only reachable when the transmit block was not accepted; keep the current profile
        cur.flags.append(f"STARS block skipped: {exc}")

    r3 = solve_sub3(cur, channels, cfg, tol)
    if r3.apv.active != cur.q:
        try:
            U_new = schur_information(fim_from_illumination(channels, cur.Lam, r3.apv.active, cfg))
            offer(replace(cur, apv=r3.apv, U=U_new), "position block")
        except UnidentifiableTargetError:
            cur.flags.append("position block left the target unidentifiable")

    cur.inner_iter += 1
    cur.history.append(cur_obj)
    return cur


def initial_state(channels: ChannelSet, cfg: SystemConfig, settings: PddSettings | None = None,
                  stars: StarsProfile | None = None) -> PddState:
    """Matched-filter start: half the power to the users, half spread isotropically."""
    settings = settings or PddSettings()
    N, M = channels.H_br.shape
    K = cfg.num_users
    P = cfg.power_budget
    rng = np.random.default_rng(cfg.rng_seed)
    if stars is None:
        amp = np.full(N, 1.0 / np.sqrt(2.0))
        stars = StarsProfile(amp * np.exp(2j * np.pi * rng.random(N)),
                             amp * np.exp(2j * np.pi * rng.random(N)))
    C = user_directions(channels, stars)
    cols = []
    for k in range(K):
        c = C[:, k]
        nrm = np.linalg.norm(c)
        cols.append(c / nrm * np.sqrt(P / (2 * K)) if nrm > 0 else np.zeros(M, dtype=complex))
    W = np.column_stack(cols) if cols else np.zeros((M, 0), dtype=complex)
    R0 = (P / (2 * M) if K else P / M) * np.eye(M, dtype=complex)
    design = TransmitDesign(W, R0)
    Q = channels.num_positions
    apv = ApvState.one_hot(0, Q)
    Lam = consensus_product(channels, stars, design.Rx)
    try:
        U = 0.5 * schur_information(fim_from_illumination(channels, Lam, 0, cfg))
    except UnidentifiableTargetError:
        U = np.eye(2)
    state = PddState(U=U, Lam=Lam, Gamma=np.zeros((N, N), dtype=complex), rho=1.0,
                     design=design, stars=stars, apv=apv, z=settings.shrink)
    state.rho = settings.rho0 if settings.rho0 is not None else initial_penalty(state, channels, cfg)
    return state


def initial_penalty(state: PddState, channels: ChannelSet, cfg: SystemConfig) -> float:
    """Penalty at which a residual of ``|beta_s|^2 M P`` per entry costs as much as the CRB term.

    A unit penalty is meaningless in SI units (the illumination entries are
    many orders of magnitude below one), so the start is tied to the problem scale.
    Smaller starts let the multipliers grow without bound before the residual closes.
    """
    N = channels.H_br.shape[0]
    try:
        crb = crb_trace_objective(state.U)
    except np.linalg.LinAlgError:
        return 1.0
    return _lam_ref(channels, cfg) ** 2 * N * N / (2.0 * crb)


def cophased_stars(channels: ChannelSet, cfg: SystemConfig) -> StarsProfile:
    """Equal split with transmission phases aligned to the sum of the users' cascaded channels."""
    N = channels.H_br.shape[0]
    amp = np.full(N, 1.0 / np.sqrt(2.0))
    b = channels.H_br[:, 0]
    g = (channels.h_ru.conj() * b).sum(axis=0) if cfg.num_users else np.ones(N)
    rng = np.random.default_rng(cfg.rng_seed)
    return StarsProfile(amp * np.exp(-1j * np.angle(g)), amp * np.exp(2j * np.pi * rng.random(N)))


def final_crb(state: PddState, channels: ChannelSet, cfg: SystemConfig) -> CrbResult:
    return crb_from_fim(fim_blocks(channels, state.stars, state.design.Rx, state.q, cfg))


def pdd_run(cfg: SystemConfig, channels: ChannelSet, init: PddState | None = None,
            settings: PddSettings | None = None) -> OptimizationReport:
    """Outer penalty/dual loop around the inner block coordinate descent."""
    settings = settings or PddSettings()
    rng = np.random.default_rng(cfg.rng_seed)
    empty = np.zeros(0)
    if cfg.power_budget <= 0:
        return OptimizationReport("infeasible", None, None, empty, 0, 0, np.inf, [], [], [],
                                  "zero power budget: the target is not illuminated")
    state = init if init is not None else initial_state(channels, cfg, settings)
    obj_trace, viol_trace, rho_trace = [], [], []
    total_inner = 0
    status = "stalled"
    lam_ref = _lam_ref(channels, cfg)
    h = constraint_violation(state, channels) / lam_ref
    try:
        for t in range(settings.max_outer):
            state.outer_iter = t + 1
            state.history = []
            prev = None
            for _ in range(settings.max_inner):
                try:
                    state = bcd_iterate(state, channels, cfg, settings, rng)
                except SubproblemInfeasible:
                    if t == 0 and total_inner == 0 and init is None \
                            and "rephased start" not in state.flags:
                        # random transmission phases may not reach the users; retry co-phased
                        state = initial_state(channels, cfg, settings, cophased_stars(channels, cfg))
                        state.outer_iter = 1
                        state.flags.append("rephased start")
                        continue
                    raise
                total_inner += 1
                cur = state.history[-1]
                if prev is not None and prev - cur <= settings.inner_tol * abs(prev):
                    break
                prev = cur
            obj_trace.append(list(state.history))
            # measured in units of |beta_s|^2 M P so the tolerance is scenario independent
            h = constraint_violation(state, channels) / lam_ref
            viol_trace.append(h)
            rho_trace.append(state.rho)
            log.debug("outer %d: h=%.3e rho=%.3e |Gamma|=%.3e obj=%.6e", t + 1, h, state.rho,
                      np.linalg.norm(state.Gamma), state.history[-1])
            if h < settings.outer_tol and sinr_feasible(channels, state.stars, state.design, cfg):
                status = "converged"
                break
            if h <= state.eta:
                state.Gamma = state.Gamma + consensus_residual(state, channels) / state.rho
            else:
                state.rho *= state.z
            state.eta = settings.eta_factor * h
    except SubproblemInfeasible as exc:
        return OptimizationReport("infeasible", state, None, empty, state.outer_iter, total_inner,
                                  h, obj_trace, viol_trace, rho_trace, str(exc))
    try:
        crb = final_crb(state, channels, cfg)
    except UnidentifiableTargetError as exc:
        return OptimizationReport("stalled", state, None, empty, state.outer_iter, total_inner, h,
                                  obj_trace, viol_trace, rho_trace, str(exc))
    sinr = user_sinr(channels, state.stars, state.design, cfg)
    if status == "converged" and state.design.power > cfg.power_budget * (1 + POWER_TOL) + POWER_TOL:
        status = "stalled"
    return OptimizationReport(status, state, crb, sinr, state.outer_iter, total_inner, h,
                              obj_trace, viol_trace, rho_trace)
