"""
Linear zero-forcing beamforming with delayed, possibly trained CSIT.

The CSIT pipeline estimates the channel in a pilot slot (perfectly, or by
training plus analog feedback), then the true channel ages by
``delay`` Gauss-Markov steps before the data slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import csi
from ._linalg import NumericError, hermitian
from .channel import ChannelMatrix, DimensionError, GaussMarkovModel, evolve, sample_iid
from .csi import TrainingConfig

__all__ = ["SingularChannelError", "ZfPrecoder", "zf_precoder", "lzfb_rate", "simulate_lzfb"]

_COND_LIMIT = 1e12


class SingularChannelError(NumericError):
    """The CSIT matrix has (numerically) deficient column rank."""


@dataclass
class ZfPrecoder:
    """
    Unit-norm beamforming columns; column ``k`` serves user ``k``.

    ``columns`` has shape ``(..., M, K)``.
    """
    columns: np.ndarray
    source_estimate_slot: int = 0
    transmit_slot: int = 0

    @property
    def K(self) -> int:
        return self.columns.shape[-1]


def zf_precoder(H_hat: ChannelMatrix, transmit_slot: Optional[int] = None) -> ZfPrecoder:
    """
    Zero-forcing precoder ``W ~ H (H^H H)^{-1}`` with normalized columns.

    Raises
    ------
    DimensionError
        If there are more users than antennas.
    SingularChannelError
        If ``H_hat`` is rank deficient.
    """
    if H_hat.K > H_hat.M:
        raise DimensionError(f"zero-forcing needs K <= M, got K={H_hat.K}, M={H_hat.M}")
    H = H_hat.entries
    gram = hermitian(H) @ H
    if np.any(np.linalg.cond(gram) > _COND_LIMIT):
        raise SingularChannelError("CSIT matrix is rank deficient")
    W = H @ np.linalg.inv(gram)
    W = W / np.linalg.norm(W, axis=-2, keepdims=True)
    slot = H_hat.slot_index if transmit_slot is None else transmit_slot
    return ZfPrecoder(W, H_hat.slot_index, slot)


def lzfb_rate(H_true: ChannelMatrix, precoder: ZfPrecoder, P: float, N0: float = 1.0) -> np.ndarray:
    """
    Per-user rates with equal power ``P/K`` per stream and interference
    treated as noise. Shape ``(..., K)``.
    """
    if H_true.entries.shape[-2:] != precoder.columns.shape[-2:]:
        raise DimensionError(
            f"channel {H_true.entries.shape[-2:]} and precoder {precoder.columns.shape[-2:]} differ")
    K = precoder.K
    # G[..., k, j] = h_k^H w_j
    G = np.abs(hermitian(H_true.entries) @ precoder.columns) ** 2
    signal = np.diagonal(G, axis1=-2, axis2=-1)
    interference = G.sum(axis=-1) - signal
    q = P / K
    return np.log2(1.0 + q * signal / (N0 + q * interference))


def simulate_lzfb(M: int, rng: np.random.Generator, size: Sequence[int], P: float,
                  rho_step: float = 1.0, delay: int = 1, cfg: Optional[TrainingConfig] = None,
                  N0: float = 1.0) -> np.ndarray:
    """
    Sum rates of ``K = M`` users for a batch of channel draws.

    Parameters
    ----------
    rho_step : float
        Per-slot Gauss-Markov coefficient; the pilot-to-data correlation
        is ``rho_step ** delay``.
    cfg : TrainingConfig, optional
        When given, CSIT is the BS feedback estimate built from downlink
        training; otherwise the pilot-slot channel is known exactly.
    """
    H_pilot = sample_iid(M, M, rng, size)
    if cfg is None:
        H_hat = H_pilot
    else:
        s, _ = csi.downlink_train(np.swapaxes(H_pilot.entries, -1, -2), cfg, rng)
        est = csi.feedback_to_bs(s, cfg, rng)
        H_hat = ChannelMatrix(np.swapaxes(est.vector, -1, -2), 0)
    H_true = evolve(H_pilot, GaussMarkovModel(rho_step, M, M), rng, steps=delay)
    W = zf_precoder(H_hat, transmit_slot=H_true.slot_index)
    return lzfb_rate(H_true, W, P, N0).sum(axis=-1)
