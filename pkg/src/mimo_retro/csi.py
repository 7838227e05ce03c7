"""
CSI acquisition: downlink pilot training, analog feedback to the base
station, overheard feedback between users, and the cross estimates a
user forms of what the base station knows.

Every estimate of a given (user, slot) channel is derived from the same
pilot observation ``s = sqrt(beta1 P) h + v``; callers thread that
observation through :func:`feedback_to_bs` and :func:`feedback_to_peer`
so the error terms carry the right dependence.

Vectors may carry leading batch dimensions; the last axis is the antenna
axis.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import crandn

__all__ = [
    "BS",
    "EstimateKind",
    "TrainingConfig",
    "CsiEstimate",
    "training_error_variance",
    "bs_feedback_noise_variance",
    "bs_feedback_error_variance",
    "peer_feedback_noise_variance",
    "peer_feedback_error_variance",
    "cross_gain",
    "cross_error_variance_self",
    "cross_error_variance_peer",
    "downlink_train",
    "feedback_to_bs",
    "feedback_to_peer",
    "cross_estimate",
]

#: owner id used for estimates held by the base station
BS = -1


class EstimateKind(enum.Enum):
    SELF_TRAINING = "self_training"
    BS_FEEDBACK = "bs_feedback"
    PEER_OVERHEARD = "peer_overheard"
    CROSS_FROM_SELF = "cross_from_self"
    CROSS_FROM_PEER = "cross_from_peer"


@dataclass(frozen=True)
class TrainingConfig:
    """
    Training and feedback parameters.

    Parameters
    ----------
    beta1 : float
        Downlink pilot symbols per antenna (at least 1).
    beta_f : float
        Feedback symbols per antenna.
    P : float
        Downlink (and user-to-BS feedback) power.
    P1 : float
        Power of the user-to-user feedback link.
    N0 : float
        Noise spectral density.
    M : int
        Transmit antennas.
    """
    beta1: float = 2.0
    beta_f: float = 2.0
    P: float = 10.0
    P1: float = 10.0
    N0: float = 1.0
    M: int = 2

    def __post_init__(self) -> None:
        if self.beta1 < 1:
            raise ValueError(f"beta1 must be >= 1, got {self.beta1}")
        for name in ("beta_f", "P", "P1", "N0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")


@dataclass
class CsiEstimate:
    """
    A channel estimate together with its per-component error variance.

    For SELF_TRAINING, BS_FEEDBACK and PEER_OVERHEARD the error is taken
    with respect to the true channel. The two CROSS kinds estimate the
    base station's feedback estimate, so their error variance refers to
    that quantity.
    """
    vector: np.ndarray
    error_variance: float
    kind: EstimateKind
    slot_index: int = 0
    owner: int = 0
    subject: int = 0


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------
def training_error_variance(cfg: TrainingConfig) -> float:
    return 1.0 / (1.0 + cfg.beta1 * cfg.P / cfg.N0)


def _feedback_noise(cfg: TrainingConfig, power: float) -> float:
    return cfg.N0 * (1.0 + (cfg.beta_f * power / cfg.N0) / (1.0 + cfg.beta1 * cfg.P / cfg.N0))


def _feedback_gain_sq(cfg: TrainingConfig, power: float) -> float:
    # squared coefficient of h in the feedback observation
    return cfg.beta_f * power * cfg.beta1 * cfg.P / (cfg.beta1 * cfg.P + cfg.N0)


def bs_feedback_noise_variance(cfg: TrainingConfig) -> float:
    return _feedback_noise(cfg, cfg.P)


def bs_feedback_error_variance(cfg: TrainingConfig) -> float:
    w = bs_feedback_noise_variance(cfg)
    return w / (w + _feedback_gain_sq(cfg, cfg.P))


def peer_feedback_noise_variance(cfg: TrainingConfig) -> float:
    return _feedback_noise(cfg, cfg.P1)


def peer_feedback_error_variance(cfg: TrainingConfig) -> float:
    x = peer_feedback_noise_variance(cfg)
    return x / (x + _feedback_gain_sq(cfg, cfg.P1))


def cross_gain(cfg: TrainingConfig) -> float:
    """Scaling ``gamma`` mapping a user's estimate to its MMSE guess of the BS estimate."""
    return cfg.beta_f * cfg.P / (cfg.beta_f * cfg.P + cfg.N0)


def cross_error_variance_self(cfg: TrainingConfig) -> float:
    g = cross_gain(cfg)
    return g * (cfg.beta1 * cfg.P / (cfg.beta1 * cfg.P + cfg.N0)) * (1.0 - g)


def cross_error_variance_peer(cfg: TrainingConfig) -> float:
    g = cross_gain(cfg)
    g1 = cfg.beta_f * cfg.P1 / (cfg.beta_f * cfg.P1 + cfg.N0)
    return g * (cfg.beta1 * cfg.P / (cfg.beta1 * cfg.P + cfg.N0)) * (1.0 - g * g1)


# ---------------------------------------------------------------------------
# estimation chain
# ---------------------------------------------------------------------------
def downlink_train(h_true: np.ndarray, cfg: TrainingConfig, rng: np.random.Generator,
                   slot_index: int = 0, user: int = 0) -> tuple[np.ndarray, CsiEstimate]:
    """
    Pilot observation and the user's MMSE estimate of its own channel.

    Works for any vector length, which covers the single-antenna
    training of the round-2 scalar channel.

    Returns
    -------
    pilot_obs : np.ndarray
        ``sqrt(beta1 P) h + v`` with ``v ~ CN(0, N0 I)``.
    estimate : CsiEstimate
        ``sqrt(beta1 P) / (N0 + beta1 P) * pilot_obs``.
    """
    h_true = np.asarray(h_true, dtype=complex)
    amp = np.sqrt(cfg.beta1 * cfg.P)
    s = amp * h_true + np.sqrt(cfg.N0) * crandn(rng, *h_true.shape)
    h_tilde = amp / (cfg.N0 + cfg.beta1 * cfg.P) * s
    est = CsiEstimate(h_tilde, training_error_variance(cfg), EstimateKind.SELF_TRAINING,
                      slot_index, owner=user, subject=user)
    return s, est


def _analog_feedback(pilot_obs: np.ndarray, cfg: TrainingConfig, power: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, float]:
    scale = np.sqrt(cfg.beta_f * power) / np.sqrt(cfg.beta1 * cfg.P + cfg.N0)
    g = scale * pilot_obs + np.sqrt(cfg.N0) * crandn(rng, *np.shape(pilot_obs))
    c2 = _feedback_gain_sq(cfg, power)
    w2 = _feedback_noise(cfg, power)
    # MMSE estimate of h from g = c h + w
    return np.sqrt(c2) / (c2 + w2) * g, w2 / (w2 + c2)


def feedback_to_bs(pilot_obs: np.ndarray, cfg: TrainingConfig, rng: np.random.Generator,
                   slot_index: int = 0, subject: int = 0) -> CsiEstimate:
    """BS estimate from the analog feedback of ``pilot_obs`` over an unfaded AWGN link."""
    vec, var = _analog_feedback(np.asarray(pilot_obs, dtype=complex), cfg, cfg.P, rng)
    return CsiEstimate(vec, var, EstimateKind.BS_FEEDBACK, slot_index, owner=BS, subject=subject)


def feedback_to_peer(pilot_obs: np.ndarray, cfg: TrainingConfig, rng: np.random.Generator,
                     slot_index: int = 0, subject: int = 0, listener: int = 1) -> CsiEstimate:
    """Estimate formed by another user overhearing the same feedback at power ``P1``."""
    vec, var = _analog_feedback(np.asarray(pilot_obs, dtype=complex), cfg, cfg.P1, rng)
    return CsiEstimate(vec, var, EstimateKind.PEER_OVERHEARD, slot_index,
                       owner=listener, subject=subject)


def cross_estimate(source: CsiEstimate, cfg: TrainingConfig) -> tuple[CsiEstimate, float, float]:
    """
    MMSE estimate of the base station's feedback estimate given a user-side estimate.

    Parameters
    ----------
    source : CsiEstimate
        A SELF_TRAINING or PEER_OVERHEARD estimate.

    Returns
    -------
    check : CsiEstimate
        ``gamma * source.vector``.
    gamma : float
    zeta_variance : float
        Per-component variance of the residual between the BS estimate
        and ``check``.
    """
    g = cross_gain(cfg)
    if source.kind is EstimateKind.SELF_TRAINING:
        kind, var = EstimateKind.CROSS_FROM_SELF, cross_error_variance_self(cfg)
    elif source.kind is EstimateKind.PEER_OVERHEARD:
        kind, var = EstimateKind.CROSS_FROM_PEER, cross_error_variance_peer(cfg)
    else:
        raise TypeError(f"cross estimates are formed from self-training or overheard "
                        f"estimates, not {source.kind.value}")
    check = CsiEstimate(g * source.vector, var, kind, source.slot_index,
                        owner=source.owner, subject=source.subject)
    return check, g, var
