"""Closed-form Fisher information and Cramér-Rao bound for the target position.

The unknowns are ``xi = [r_q, theta_q, Re(beta_q), Im(beta_q)]``.  Every FIM
entry has the form ``Re{c_ij * Tr(A_ij @ Lam)}`` where ``Lam`` is the
illumination covariance ``Phi_r H_br Rx H_br^H Phi_r^H``, so the FIM is linear
in ``Lam``; :func:`fim_kernels` exposes that linear map for the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import StarsProfile, illumination
from .geometry import ChannelSet, SystemConfig

PSD_TOL = 1e-9


class UnidentifiableTargetError(np.linalg.LinAlgError):
    """The FIM (or its Schur complement) is singular.

    ``direction`` is the eigenvector of the near-null eigenvalue.
    """

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


@dataclass(frozen=True)
class FimBlocks:
    J11: np.ndarray     # (r, theta) x (r, theta)
    J12: np.ndarray     # (r, theta) x (beta_r, beta_i)
    J22: np.ndarray     # (beta_r, beta_i) x (beta_r, beta_i)
    q_index: int
    noise: float
    block_length: int

    def full(self) -> np.ndarray:
        return np.block([[self.J11, self.J12], [self.J12.T, self.J22]])


@dataclass(frozen=True)
class CrbResult:
    crb: np.ndarray

    @property
    def rcrb_range(self) -> float:
        return float(np.sqrt(self.crb[0, 0]))

    @property
    def rcrb_angle(self) -> float:
        return float(np.sqrt(self.crb[1, 1]))

    @property
    def trace(self) -> float:
        return float(np.trace(self.crb))


def fim_kernels(channels: ChannelSet, q: int, cfg: SystemConfig):
    """Linear map ``Lam -> J``: returns ``(coef, A)`` with ``J_ij = Re(coef[i,j] Tr(A[i,j] Lam))``.

    ``coef`` is (4, 4) complex and ``A`` is (4, 4, N, N).
    """
    i = q + channels.center
    beta = channels.beta_fa[i]
    scale = 2.0 * cfg.coherence_block / cfg.noise_sensing
    derivs = [channels.dG_dr[i], channels.dG_dtheta[i], channels.G_unit[i], channels.G_unit[i]]
    base = np.array([beta, beta, 1.0, 1j])  # dv/dxi = base[i] * vec(derivs[i] Phi_r H_br X)
    N = channels.G.shape[1]
    A = np.empty((4, 4, N, N), dtype=complex)
    coef = np.empty((4, 4), dtype=complex)
    for l in range(4):
        for p in range(4):
            # Tr((D_l K X)^H D_p K X) = T Tr(D_l^H D_p Lam)
            A[l, p] = derivs[l].conj().T @ derivs[p]
            coef[l, p] = scale * np.conj(base[l]) * base[p]
    return coef, A


def fim_from_illumination(channels: ChannelSet, Lam: np.ndarray, q: int,
                          cfg: SystemConfig) -> FimBlocks:
    """FIM blocks for position ``q`` given the illumination covariance ``Lam``."""
    coef, A = fim_kernels(channels, q, cfg)
    traces = np.einsum("lpij,ji->lp", A, Lam)
    J = np.real(coef * traces)
    J = 0.5 * (J + J.T)
    return FimBlocks(J[:2, :2], J[:2, 2:], J[2:, 2:], q, cfg.noise_sensing, cfg.coherence_block)


def _check_psd(Rx):
    if not np.allclose(Rx, Rx.conj().T, atol=1e-12 * max(1.0, np.abs(Rx).max())):
        raise ValueError("transmit covariance is not Hermitian")
    scale = max(1.0, np.linalg.norm(Rx, 2))
    if np.linalg.eigvalsh(Rx).min() < -PSD_TOL * scale:
        raise ValueError("transmit covariance is not positive semidefinite")


def fim_blocks(channels: ChannelSet, stars: StarsProfile, Rx: np.ndarray, q: int,
               cfg: SystemConfig) -> FimBlocks:
    """Closed-form FIM for the FA at signed position ``q`` under transmit covariance ``Rx``."""
    Rx = np.asarray(Rx)
    M = channels.H_br.shape[1]
    if Rx.shape != (M, M):
        raise ValueError(f"Rx must be {M}x{M}, got {Rx.shape}")
    if not -channels.center <= q <= channels.center:
        raise ValueError(f"position {q} outside the movable range")
    _check_psd(Rx)
    return fim_from_illumination(channels, illumination(channels, stars, Rx), q, cfg)


def schur_information(blocks: FimBlocks) -> np.ndarray:
    """Equivalent information ``J11 - J12 J22^-1 J12^T`` for ``(r, theta)``."""
    d = np.diag(blocks.J22)
    scale = max(np.abs(blocks.J22).max(), 1e-300)
    if np.any(d <= 1e-14 * scale) or np.linalg.cond(blocks.J22) > 1e14:
        w, v = np.linalg.eigh(blocks.J22)
        raise UnidentifiableTargetError("gain information matrix is singular", v[:, 0])
    S = blocks.J11 - blocks.J12 @ np.linalg.solve(blocks.J22, blocks.J12.T)
    return 0.5 * (S + S.T)


def crb_from_fim(blocks: FimBlocks) -> CrbResult:
    """CRB of ``(r_q, theta_q)`` from the Schur complement of the FIM."""
    S = schur_information(blocks)
    # diagonal scaling keeps the range/angle disparity out of the test
    s = np.sqrt(np.abs(np.diag(S)))
    if np.any(s == 0):
        raise UnidentifiableTargetError("no information on the target position", (s == 0).astype(float))
    Sn = S / np.outer(s, s)
    w, v = np.linalg.eigh(Sn)
    if w[0] <= 1e-12:
        raise UnidentifiableTargetError("range and angle are not jointly identifiable", v[:, 0])
    crb = np.linalg.inv(Sn) / np.outer(s, s)
    return CrbResult(0.5 * (crb + crb.T))


def crb_trace_objective(U: np.ndarray) -> float:
    """``Tr(U^-1)`` for a positive definite 2 x 2 matrix."""
    U = 0.5 * (np.asarray(U) + np.asarray(U).conj().T)
    s = np.sqrt(np.abs(np.real(np.diag(U))))
    if np.any(s == 0):
        raise np.linalg.LinAlgError("U is singular")
    Un = U / np.outer(s, s)
    if np.linalg.eigvalsh(Un).min() <= 1e-14:
        raise np.linalg.LinAlgError("U is not positive definite")
    return float(np.real(np.trace(np.linalg.inv(Un) / np.outer(s, s))))
