"""Array geometry, steering vectors and the line-of-sight channel families.

All angles are in radians and all lengths in meters.  Element indices are
centred: an array with ``N = 2*Ñ + 1`` elements is indexed ``-Ñ..Ñ`` and the
element ``n = 0`` sits at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """A placement falls inside (or onto) the array it is measured from."""


@dataclass(frozen=True)
class SystemConfig:
    """Physical and scenario parameters of the FA-aided near-field ISAC system.

    Powers are linear (watts); the ``*_db`` fields keep the dB values used by
    the channel model and are converted on access.
    """

    num_bs_antennas: int
    num_stars_elements: int
    num_fa_positions: int
    wavelength: float
    stars_spacing: float
    bs_spacing: float
    fa_spacing: float
    bs_range: float
    bs_angle: float
    target_range: float
    target_angle: float
    user_placements: tuple[tuple[float, float], ...]
    pathloss_ref_db: float
    noise_user_db: float
    noise_sensing_db: float
    coherence_block: int
    power_budget: float
    sinr_thresholds: tuple[float, ...]
    rng_seed: int = 0
    random_gain_phase: bool = False

    def __post_init__(self):
        for name in ("num_bs_antennas", "num_stars_elements", "num_fa_positions"):
            value = getattr(self, name)
            if int(value) != value or value < 1 or value % 2 == 0:
                raise ValueError(f"{name} must be an odd positive integer, got {value}")
        for name in ("wavelength", "stars_spacing", "bs_spacing", "fa_spacing",
                     "bs_range", "target_range"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.power_budget < 0:
            raise ValueError("power_budget must be non-negative")
        if self.coherence_block < 1:
            raise ValueError("coherence_block must be at least 1")
        if len(self.sinr_thresholds) != len(self.user_placements):
            raise ValueError("need one SINR threshold per user")
        if any(g < 0 for g in self.sinr_thresholds):
            raise ValueError("SINR thresholds must be non-negative")
        half = self.half_aperture
        for k, (r, _) in enumerate(self.user_placements):
            if not r > half:
                raise GeometryError(f"user {k} at {r} m lies within the STARS half-aperture {half} m")
        if not self.target_range > half + self.fa_spacing * (self.num_fa_positions // 2):
            raise GeometryError("target lies within the STARS half-aperture")

    @property
    def num_users(self) -> int:
        return len(self.user_placements)

    @property
    def half_aperture(self) -> float:
        return 0.5 * (self.num_stars_elements - 1) * self.stars_spacing

    @property
    def aperture(self) -> float:
        return (self.num_stars_elements - 1) * self.stars_spacing

    @property
    def rayleigh_distance(self) -> float:
        return 2.0 * self.aperture**2 / self.wavelength

    @property
    def noise_user(self) -> float:
        return float(db_to_linear(self.noise_user_db))

    @property
    def noise_sensing(self) -> float:
        return float(db_to_linear(self.noise_sensing_db))


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


def centred_indices(count: int) -> np.ndarray:
    half = count // 2
    return np.arange(-half, half + 1)


def _path_difference(r, theta, n, d):
    # r_n - r without the cancellation of sqrt(...) - r
    n = np.asarray(n, dtype=float)
    r_n = element_distance(r, theta, n, d)
    return (n * n * d * d - 2.0 * r * n * d * np.cos(theta)) / (r_n + r), r_n


def element_distance(r, theta, n, d):
    """Distance from array element ``n`` to a point at polar ``(r, theta)``."""
    if not r > 0:
        raise GeometryError(f"range must be positive, got {r}")
    n = np.asarray(n, dtype=float)
    sq = r * r + n * n * d * d - 2.0 * r * n * d * np.cos(theta)
    if np.any(sq <= 0):
        raise GeometryError("placement coincides with an array element")
    out = np.sqrt(sq)
    return float(out) if out.ndim == 0 else out


def fa_position_polar(r0: float, theta0: float, q: int, d1: float) -> tuple[float, float]:
    """Polar coordinates of movable position ``q`` of the fluid antenna.

    The positions lie on a line through the MP-array centre ``(r0, theta0)``
    parallel to the STARS axis.  ``arcsin`` returns the acute branch; the
    obtuse branch is taken when the position sits behind the array normal so
    the result matches ``atan2`` everywhere.  The ``arcsin`` argument is
    clamped to [-1, 1] against rounding.
    """
    if abs(q * d1) >= r0:
        raise GeometryError("movable position reaches the STARS centre")
    sq = r0 * r0 + q * q * d1 * d1 - 2.0 * r0 * q * d1 * math.cos(theta0)
    if sq <= 0:
        raise GeometryError("movable position coincides with the STARS centre")
    r_q = math.sqrt(sq)
    theta_q = math.asin(max(-1.0, min(1.0, r0 * math.sin(theta0) / r_q)))
    if r0 * math.cos(theta0) - q * d1 < 0:
        theta_q = math.pi - theta_q
    return r_q, theta_q


def near_field_steering(r, theta, cfg: SystemConfig) -> np.ndarray:
    """Spherical-wave steering vector ``exp(-j 2π/λ (r_n - r))`` of the STARS."""
    n = centred_indices(cfg.num_stars_elements)
    diff, _ = _path_difference(r, theta, n, cfg.stars_spacing)
    return np.exp(-2j * np.pi / cfg.wavelength * diff)


def near_field_steering_derivatives(r, theta, cfg: SystemConfig):
    """Return ``(a, da/dr, da/dtheta)`` for the near-field steering vector."""
    n = centred_indices(cfg.num_stars_elements).astype(float)
    d = cfg.stars_spacing
    k = 2.0 * np.pi / cfg.wavelength
    diff, r_n = _path_difference(r, theta, n, d)
    a = np.exp(-1j * k * diff)
    # d(r_n - r)/dr = (r - n d cos)/r_n - 1, rewritten to avoid cancellation
    along = r - n * d * np.cos(theta)
    ddiff_dr = -(n * d * np.sin(theta)) ** 2 / (r_n * (along + r_n))
    ddiff_dtheta = r * n * d * np.sin(theta) / r_n
    return a, -1j * k * ddiff_dr * a, -1j * k * ddiff_dtheta * a


def _far_field(theta, count, spacing, wavelength):
    m = centred_indices(count)
    return np.exp(2j * np.pi / wavelength * m * spacing * np.cos(theta))


def far_field_steering(theta_s, cfg: SystemConfig) -> np.ndarray:
    """Planar-wave steering vector of the BS array (length ``M``)."""
    return _far_field(theta_s, cfg.num_bs_antennas, cfg.bs_spacing, cfg.wavelength)


def stars_far_field_steering(theta_s, cfg: SystemConfig) -> np.ndarray:
    """Planar-wave steering vector of the STARS towards the BS (length ``N``)."""
    return _far_field(theta_s, cfg.num_stars_elements, cfg.stars_spacing, cfg.wavelength)


def path_gain(distance: float, beta0_db: float, phase: float = 0.0) -> complex:
    """Complex amplitude gain for a path loss of ``beta0_db + 20 log10(distance)`` dB."""
    if distance < 1.0:
        raise ValueError(f"path-loss model is defined for distance >= 1 m, got {distance}")
    loss_db = beta0_db + 20.0 * math.log10(distance)
    return 10.0 ** (-loss_db / 20.0) * complex(math.cos(phase), math.sin(phase))


@dataclass(frozen=True)
class ChannelSet:
    """All channels of one scenario.

    ``G[q]``, ``G_unit[q]``, ``dG_dr[q]`` and ``dG_dtheta[q]`` are indexed by
    the array position ``q + Q//2``; ``fa_polar`` holds ``(r_q, theta_q)``.
    """

    H_br: np.ndarray
    h_ru: np.ndarray            # (K, N)
    G: np.ndarray               # (Q, N, N)
    G_unit: np.ndarray          # (Q, N, N), a a^T
    dG_dr: np.ndarray
    dG_dtheta: np.ndarray
    fa_polar: tuple[tuple[float, float], ...]
    beta_s: complex
    beta_users: np.ndarray      # (K,)
    beta_fa: np.ndarray         # (Q,)
    steering_fa: np.ndarray = field(repr=False)  # (Q, N)

    @property
    def num_positions(self) -> int:
        return self.G.shape[0]

    @property
    def center(self) -> int:
        return self.G.shape[0] // 2


def build_channels(cfg: SystemConfig) -> ChannelSet:
    """Construct ``H_br``, the user channels and the per-position round-trip channels."""
    rng = np.random.default_rng(cfg.rng_seed)
    Q = cfg.num_fa_positions
    K = cfg.num_users

    def gain(distance):
        phase = rng.uniform(0, 2 * np.pi) if cfg.random_gain_phase else 0.0
        return path_gain(distance, cfg.pathloss_ref_db, phase)

    beta_s = gain(cfg.bs_range)
    H_br = beta_s * np.outer(stars_far_field_steering(cfg.bs_angle, cfg),
                             far_field_steering(cfg.bs_angle, cfg))

    beta_users = np.array([gain(r) for r, _ in cfg.user_placements], dtype=complex)
    h_ru = np.array([b * near_field_steering(r, th, cfg)
                     for b, (r, th) in zip(beta_users, cfg.user_placements)],
                    dtype=complex).reshape(K, cfg.num_stars_elements)

    polar, betas, steer, G_unit, dG_dr, dG_dth = [], [], [], [], [], []
    for q in centred_indices(Q):
        r_q, th_q = fa_position_polar(cfg.target_range, cfg.target_angle, int(q), cfg.fa_spacing)
        a, da_dr, da_dth = near_field_steering_derivatives(r_q, th_q, cfg)
        polar.append((r_q, th_q))
        betas.append(gain(r_q))
        steer.append(a)
        G_unit.append(np.outer(a, a))
        dG_dr.append(np.outer(da_dr, a) + np.outer(a, da_dr))
        dG_dth.append(np.outer(da_dth, a) + np.outer(a, da_dth))
    beta_fa = np.array(betas)
    G_unit = np.array(G_unit)
    return ChannelSet(
        H_br=H_br,
        h_ru=h_ru,
        G=beta_fa[:, None, None] * G_unit,
        G_unit=G_unit,
        dG_dr=np.array(dG_dr),
        dG_dtheta=np.array(dG_dth),
        fa_polar=tuple(polar),
        beta_s=beta_s,
        beta_users=beta_users,
        beta_fa=beta_fa,
        steering_fa=np.array(steer),
    )
