"""Small numerical helpers shared by the rate computations."""

from __future__ import annotations

import numpy as np

LN2 = np.log(2.0)


class NumericError(ArithmeticError):
    """A quantity that must be finite / positive definite was not."""


def hermitian(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def log2det(a: np.ndarray) -> np.ndarray:
    """log2 of the determinant of (a batch of) Hermitian positive definite matrices."""
    sign, logabs = np.linalg.slogdet(a)
    if np.any(np.real(sign) <= 0) or not np.all(np.isfinite(logabs)):
        raise NumericError("log-det argument is not positive definite")
    return logabs / LN2


def gram(rows: np.ndarray) -> np.ndarray:
    """``rows @ rows^H`` over the last two axes."""
    return rows @ hermitian(rows)


def mutual_information(rows: np.ndarray, noise_cov: np.ndarray, snr_per_stream: float) -> np.ndarray:
    """
    ``log2 det(I + noise_cov^{-1} rows rows^H snr_per_stream)`` in bits.

    Evaluated as a difference of two log-dets of Hermitian matrices so
    that a non-diagonal noise covariance is handled without inverting it.
    """
    return log2det(noise_cov + gram(rows) * snr_per_stream) - log2det(noise_cov)
