"""Rate curves, confidence intervals and empirical DoF."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = ["CurvePoint", "RateCurve", "summarize", "measure_dof", "snr_to_power"]

_Z95 = 1.959963984540054


def snr_to_power(snr_dB: float) -> float:
    """Transmit power for ``N0 = 1``."""
    return float(10.0 ** (snr_dB / 10.0))


@dataclass(frozen=True)
class CurvePoint:
    snr_dB: float
    mean: float
    ci95: Optional[float]
    samples: int


@dataclass
class RateCurve:
    """
    Mean sum rate of one scheme over an SNR grid.

    ``rho`` is ``None`` for schemes that do not depend on a delay
    correlation (the schedulers). ``ci95`` of a point is ``None`` when it
    rests on a single sample.
    """
    scheme: str
    rho: Optional[float]
    points: list[CurvePoint] = field(default_factory=list)
    fingerprint: str = ""

    def __post_init__(self) -> None:
        self.points = sorted(self.points, key=lambda p: p.snr_dB)

    @property
    def snr_dB(self) -> np.ndarray:
        return np.array([p.snr_dB for p in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.mean for p in self.points])

    def point(self, snr_dB: float) -> CurvePoint:
        for p in self.points:
            if math.isclose(p.snr_dB, snr_dB, rel_tol=0.0, abs_tol=1e-9):
                return p
        raise LookupError(f"{snr_dB} dB is not on the grid of curve {self.label}")

    def rate_at(self, snr_dB: float) -> float:
        return self.point(snr_dB).mean

    @property
    def label(self) -> str:
        return self.scheme if self.rho is None else f"{self.scheme}@rho={self.rho:g}"


def summarize(samples: Sequence[float]) -> tuple[float, Optional[float]]:
    """Sample mean and normal-approximation 95% half-width (``None`` for one sample)."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples to summarize")
    mean = float(x.mean())
    if x.size == 1:
        return mean, None
    return mean, float(_Z95 * x.std(ddof=1) / np.sqrt(x.size))


def measure_dof(curve: RateCurve, snr_lo_dB: float, snr_hi_dB: float) -> float:
    """
    Empirical pre-log ``(R(hi) - R(lo)) / log2(P_hi / P_lo)``.

    Raises
    ------
    LookupError
        If either SNR is not on the curve's grid.
    ValueError
        If ``snr_hi_dB <= snr_lo_dB``.
    """
    if not snr_hi_dB > snr_lo_dB:
        raise ValueError(f"need hi > lo, got lo={snr_lo_dB}, hi={snr_hi_dB}")
    lo = curve.rate_at(snr_lo_dB)
    hi = curve.rate_at(snr_hi_dB)
    return (hi - lo) / ((snr_hi_dB - snr_lo_dB) / 10.0 * math.log2(10.0))
