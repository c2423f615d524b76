"""Design variables: transmit beamformers/covariance, STARS coefficients and the APV."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ChannelSet, SystemConfig

COUPLING_TOL = 1e-8


@dataclass(frozen=True)
class TransmitDesign:
    """Communication beamformers ``W`` (M x K) and sensing covariance ``R0`` (M x M)."""

    W: np.ndarray
    R0: np.ndarray

    @property
    def Rx(self) -> np.ndarray:
        return self.W @ self.W.conj().T + self.R0

    @property
    def power(self) -> float:
        return float(np.real(np.trace(self.Rx)))


@dataclass(frozen=True)
class StarsProfile:
    """Transmission and reflection coefficients of the STARS elements.

    Every element satisfies ``|o_t[n]|**2 + |o_r[n]|**2 == 1``.
    """

    o_t: np.ndarray
    o_r: np.ndarray

    def __post_init__(self):
        err = np.max(np.abs(np.abs(self.o_t) ** 2 + np.abs(self.o_r) ** 2 - 1.0))
        if err > COUPLING_TOL:
            raise ValueError(f"amplitude coupling violated by {err:.3e}")

    @classmethod
    def from_parts(cls, t_amplitude, t_phase, r_phase):
        """Build a profile whose reflection amplitude completes the coupling."""
        t_amplitude = np.clip(np.asarray(t_amplitude, dtype=float), 0.0, 1.0)
        r_amplitude = np.sqrt(1.0 - t_amplitude**2)
        return cls(t_amplitude * np.exp(1j * np.asarray(t_phase)),
                   r_amplitude * np.exp(1j * np.asarray(r_phase)))

    @property
    def Phi_t(self) -> np.ndarray:
        return np.diag(self.o_t)

    @property
    def Phi_r(self) -> np.ndarray:
        return np.diag(self.o_r)


@dataclass(frozen=True)
class ApvState:
    """Antenna position vector; ``u[i]`` refers to signed position ``i - Q//2``."""

    u: np.ndarray
    relaxed: bool = False

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if abs(u.sum() - 1.0) > 1e-8 or np.any(u < -1e-9) or np.any(u > 1 + 1e-9):
            raise ValueError("APV entries must lie in [0, 1] and sum to one")
        if not self.relaxed and np.count_nonzero(u) != 1:
            raise ValueError("integral APV must be one-hot")

    @classmethod
    def one_hot(cls, q: int, num_positions: int) -> ApvState:
        u = np.zeros(num_positions)
        u[q + num_positions // 2] = 1.0
        return cls(u)

    @property
    def active(self) -> int:
        """Signed index of the active (or, when relaxed, the heaviest) position."""
        return int(np.argmax(self.u)) - len(self.u) // 2


def effective_channels(channels: ChannelSet, stars: StarsProfile) -> np.ndarray:
    """Rows ``h_ru,k^H Phi_t H_br`` of the BS-to-user cascaded channels, shape (K, M)."""
    return (channels.h_ru.conj() * stars.o_t) @ channels.H_br


def user_sinr(channels: ChannelSet, stars: StarsProfile, design: TransmitDesign,
              cfg: SystemConfig) -> np.ndarray:
    """Per-user SINR with the sensing signal treated as interference."""
    h = effective_channels(channels, stars)
    if h.shape[0] == 0:
        return np.zeros(0)
    gains = np.abs(h @ design.W) ** 2                       # (K, K): user k, stream i
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    sensing = np.real(np.einsum("km,mn,kn->k", h, design.R0, h.conj()))
    return signal / (interference + sensing + cfg.noise_user)


def illumination(channels: ChannelSet, stars: StarsProfile, Rx: np.ndarray) -> np.ndarray:
    """``Phi_r H_br Rx H_br^H Phi_r^H``, the covariance seen by the target side."""
    K = stars.o_r[:, None] * channels.H_br
    return K @ Rx @ K.conj().T
