"""
Block-fading channel realizations.

Entries are i.i.d. CN(0, 1). Temporal evolution between slots follows a
first-order Gauss-Markov recursion

    H[t+1] = rho_step * H[t] + sqrt(1 - rho_step**2) * W[t+1]

so that the correlation between slots ``d`` apart is ``rho_step**d``.

All functions accept arrays with leading batch dimensions; the last two
axes of a channel matrix are (transmit antennas, users).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "DimensionError",
    "ChannelMatrix",
    "GaussMarkovModel",
    "make_rng",
    "crandn",
    "sample_iid",
    "evolve",
    "correlation",
    "rho_step_for_delay",
    "trajectory",
]

Key = Union[int, str]


class DimensionError(ValueError):
    """Raised when array shapes do not match the declared dimensions."""


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"stream keys must be non-negative, got {key}")
    return int(key)


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    """
    Return an independent random stream for ``(seed, *keys)``.

    The same arguments always give the same stream, and distinct key
    tuples give statistically independent streams. String keys are
    hashed with CRC32 so that scheme labels can be used directly.
    """
    entropy = [_key_to_int(seed)] + [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Draw i.i.d. CN(0, 1) samples (real and imaginary parts of variance 1/2)."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


@dataclass
class ChannelMatrix:
    """
    Fading coefficients of one slot.

    ``entries[..., :, k]`` is the channel vector of user ``k``; the
    received signal of user ``k`` is ``h_k^H x + v_k``.
    """
    entries: np.ndarray
    slot_index: int = 0

    def __post_init__(self) -> None:
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim < 2:
            raise DimensionError(
                f"channel matrix needs at least 2 dimensions, got shape {self.entries.shape}")
        if self.M < 1 or self.K < 1:
            raise DimensionError(f"invalid channel dimensions M={self.M}, K={self.K}")
        if self.slot_index < 0:
            raise ValueError("slot_index must be non-negative")

    @property
    def M(self) -> int:
        return self.entries.shape[-2]

    @property
    def K(self) -> int:
        return self.entries.shape[-1]

    def user(self, k: int) -> np.ndarray:
        """Channel vector(s) of user ``k``, shape ``(..., M)``."""
        return self.entries[..., :, k]


@dataclass
class GaussMarkovModel:
    rho_step: float
    M: int
    K: int
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho_step <= 1.0:
            raise ValueError(f"rho_step must lie in [0, 1], got {self.rho_step}")
        if self.M < 1 or self.K < 1:
            raise DimensionError(f"invalid channel dimensions M={self.M}, K={self.K}")


def sample_iid(M: int, K: int, rng: np.random.Generator, size: Sequence[int] = (),
               slot_index: int = 0) -> ChannelMatrix:
    """
    Draw a channel matrix with i.i.d. CN(0, 1) entries.

    Parameters
    ----------
    M, K : int
        Transmit antennas and users.
    rng : np.random.Generator
        Random stream.
    size : sequence of int
        Optional leading batch shape.
    slot_index : int
        Slot label stored on the result.
    """
    if M < 1 or K < 1:
        raise DimensionError(f"invalid channel dimensions M={M}, K={K}")
    return ChannelMatrix(crandn(rng, *tuple(size), M, K), slot_index)


def evolve(H: ChannelMatrix, model: GaussMarkovModel, rng: np.random.Generator,
           steps: int = 1) -> ChannelMatrix:
    """Advance ``H`` by ``steps`` slots of the Gauss-Markov recursion."""
    if (H.M, H.K) != (model.M, model.K):
        raise DimensionError(
            f"channel is {H.M}x{H.K} but model is {model.M}x{model.K}")
    rho = model.rho_step
    entries = H.entries
    for _ in range(steps):
        if rho == 1.0:
            # no innovation; keep the stream position consistent anyway
            crandn(rng, *entries.shape)
            continue
        w = crandn(rng, *entries.shape)
        entries = rho * entries + np.sqrt(1.0 - rho * rho) * w
    return ChannelMatrix(entries, H.slot_index + steps)


def correlation(model: GaussMarkovModel, delay: int) -> float:
    """Delay correlation ``rho(d) = rho_step**d``."""
    if delay < 0:
        raise ValueError("delay must be non-negative")
    return float(model.rho_step ** delay)


def rho_step_for_delay(rho: float, delay: int) -> float:
    """Per-slot coefficient giving an end-to-end correlation ``rho`` after ``delay`` slots."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    if delay < 1:
        raise ValueError("delay must be at least one slot")
    return float(rho ** (1.0 / delay))


def trajectory(model: GaussMarkovModel, n_slots: int,
               size: Sequence[int] = ()) -> list[ChannelMatrix]:
    """
    Channel realizations for slots ``0 .. n_slots-1``.

    Slot 0 and every innovation draw ``t`` use their own sub-stream
    ``make_rng(model.rng_seed, t)``, so a slot's realization does not
    depend on how many other quantities were sampled beforehand.
    """
    H = ChannelMatrix(crandn(make_rng(model.rng_seed, 0), *tuple(size), model.M, model.K), 0)
    out = [H]
    for t in range(1, n_slots):
        H = evolve(H, model, make_rng(model.rng_seed, t))
        out.append(H)
    return out
