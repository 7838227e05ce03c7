"""
Scheduling decisions: the MAT-session max-weight rule over a fixed
round-1 buffer, and the packet-centric eavesdropper choices.

Users and buffer slots are 0-based here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Optional

import numpy as np
from scipy import integrate, special

from .._linalg import log2det
from ..channel import crandn
from .queues import VirtualQueueState

__all__ = [
    "Round1Buffer",
    "fresh_packet_rate",
    "own_rate",
    "expected_session_rate",
    "session_rate_table",
    "mat_session_schedule",
    "select_eavesdroppers",
    "packet_centric_select",
    "select_round3_eavesdropper",
]


def own_rate(h: np.ndarray, P: float, N0: float = 1.0) -> np.ndarray:
    """Round-1-only rate ``log2(1 + P/(M N0) ||h||^2)`` of a packet."""
    M = h.shape[-1]
    return np.log2(1.0 + P / (M * N0) * np.sum(np.abs(h) ** 2, axis=-1))


@lru_cache(maxsize=256)
def fresh_packet_rate(P: float, N0: float = 1.0, M: int = 2) -> float:
    """
    ``E log2(1 + P/(M N0) ||h||^2)`` for ``h ~ CN(0, I_M)``.

    ``||h||^2`` is Gamma(M, 1) distributed; the expectation is a 1-D
    quadrature.
    """
    c = P / (M * N0)
    log_gamma_m = special.gammaln(M)

    def integrand(x: float) -> float:
        return np.log2(1.0 + c * x) * np.exp((M - 1) * np.log(x) - x - log_gamma_m) if x > 0 else 0.0

    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=200)
    return float(val)


@dataclass
class Round1Buffer:
    """
    ``N`` stored round-1 packets per user with the CSIT of every user in
    their slots.

    ``channels[m, i, n]`` is ``h_n[t_m(i)]``, user ``n``'s channel during
    the slot that carried packet ``i`` of user ``m``.
    """
    channels: np.ndarray      # (L, N, L, M) complex
    slots: np.ndarray         # (L, N) int
    packet_ids: np.ndarray    # (L, N) int

    def __post_init__(self) -> None:
        c = self.channels
        if c.ndim != 4 or c.shape[0] != c.shape[2]:
            raise ValueError(f"buffer channels must have shape (L, N, L, M), got {c.shape}")
        if self.slots.shape != c.shape[:2] or self.packet_ids.shape != c.shape[:2]:
            raise ValueError("slots and packet_ids must have shape (L, N)")

    @property
    def L(self) -> int:
        return self.channels.shape[0]

    @property
    def N(self) -> int:
        return self.channels.shape[1]

    @property
    def M(self) -> int:
        return self.channels.shape[3]

    @classmethod
    def fresh(cls, L: int, N: int, M: int, rng: np.random.Generator) -> "Round1Buffer":
        """A full buffer of ``L*N`` packets sent in slots ``0 .. L*N-1``."""
        if L < 2 or N < 1 or M < 1:
            raise ValueError(f"need L >= 2, N >= 1, M >= 1, got L={L}, N={N}, M={M}")
        ids = np.arange(L * N).reshape(L, N)
        return cls(crandn(rng, L, N, L, M), ids.copy(), ids.copy())

    def own(self) -> np.ndarray:
        """``h_m[t_m(i)]`` for every entry, shape ``(L, N, M)``."""
        L = self.L
        return self.channels[np.arange(L), :, np.arange(L)]

    def replace(self, m: int, i: int, channels: np.ndarray, slot: int, packet_id: int) -> None:
        """Overwrite entry ``(m, i)`` with a fresh round-1 packet."""
        self.channels[m, i] = channels
        self.slots[m, i] = slot
        self.packet_ids[m, i] = packet_id


def _check_entry(buffer: Round1Buffer, m: int, i: int) -> None:
    if not (0 <= m < buffer.L and 0 <= i < buffer.N):
        raise IndexError(f"no buffer entry ({m}, {i}) in a {buffer.L}x{buffer.N} buffer")


def _session_coeffs(a: np.ndarray, b: np.ndarray, q: float, N0: float) -> tuple[np.ndarray, np.ndarray]:
    """
    ``(c0, c1)`` with ``det(I + K^{-1} H H^H q) = (c0 + g c1) / (1 + g)`` for
    rows ``H = [a; c b]``, ``|c|^2 = g`` and ``K = diag(N0, N0 (1 + g))``.
    """
    na = np.sum(np.abs(a) ** 2, axis=-1) / N0
    nb = np.sum(np.abs(b) ** 2, axis=-1) / N0
    ab = np.abs(np.sum(np.conj(a) * b, axis=-1)) ** 2 / (N0 * N0)
    c0 = 1.0 + q * na
    return c0, c0 * (1.0 + q * nb) - q * q * ab


def expected_session_rate(m: int, i: int, n: int, j: int, buffer: Round1Buffer, P: float,
                          N0: float = 1.0, f_samples: int = 200,
                          rng: Optional[np.random.Generator] = None,
                          f: Optional[np.ndarray] = None) -> float:
    """
    Monte Carlo estimate of user ``m``'s rate if packet ``(m, i)`` is
    paired with packet ``(n, j)`` in a MAT session.

    The session channel of user ``m`` has rows ``h_m[t_m(i)]`` and
    ``sqrt(M) f / sqrt(S) h_n[t_m(i)]`` with noise covariance
    ``diag(N0, N0 (1 + M |f|^2 / S))``, where ``S`` sums the squared
    norms of both eavesdropper channels and ``f ~ CN(0, 1)`` is the
    unknown round-2 channel. ``f`` may be passed to share draws between
    candidates; otherwise ``f_samples`` draws are taken from ``rng``.

    If both eavesdropper channels vanish the session degenerates to the
    round-1 observation alone.
    """
    _check_entry(buffer, m, i)
    _check_entry(buffer, n, j)
    if m == n:
        raise ValueError("a MAT session pairs packets of two different users")
    if f is None:
        if rng is None:
            raise ValueError("pass either f samples or a random stream")
        f = crandn(rng, f_samples)
    h_own = buffer.channels[m, i, m]
    e_m = buffer.channels[m, i, n]
    e_n = buffer.channels[n, j, m]
    S = np.sum(np.abs(e_m) ** 2) + np.sum(np.abs(e_n) ** 2)
    if S == 0:
        return float(own_rate(h_own, P, N0))
    M = buffer.M
    rows = np.zeros((len(f), 2, M), dtype=complex)
    rows[:, 0] = np.conj(h_own)
    rows[:, 1] = (np.sqrt(M) * f / np.sqrt(S))[:, None] * np.conj(e_m)
    cov = np.zeros((len(f), 2, 2))
    cov[:, 0, 0] = N0
    cov[:, 1, 1] = N0 * (1.0 + M * np.abs(f) ** 2 / S)
    q = P / M
    vals = log2det(cov + rows @ np.conj(np.swapaxes(rows, -1, -2)) * q) - log2det(cov)
    return float(np.mean(vals))


def _candidates(L: int, N: int) -> tuple[np.ndarray, ...]:
    """All ``(m, i, n, j)`` with ``m < n`` in lexicographic order."""
    m_idx, n_idx = np.triu_indices(L, 1)
    mm = np.repeat(m_idx, N * N)
    nn = np.repeat(n_idx, N * N)
    ii = np.tile(np.repeat(np.arange(N), N), m_idx.size)
    jj = np.tile(np.tile(np.arange(N), N), m_idx.size)
    return mm, ii, nn, jj


def session_rate_table(buffer: Round1Buffer, P: float, f: np.ndarray,
                       N0: float = 1.0) -> tuple[tuple[np.ndarray, ...], np.ndarray, np.ndarray]:
    """
    Expected session rates of both users for every candidate session,
    sharing the ``f`` draws across candidates.

    Returns the candidate index arrays ``(m, i, n, j)`` and the rates
    ``R_m`` and ``R_n``, each of length ``L (L-1) N^2 / 2``.
    """
    L, N, M = buffer.L, buffer.N, buffer.M
    mm, ii, nn, jj = _candidates(L, N)
    ch = buffer.channels
    own_m, own_n = ch[mm, ii, mm], ch[nn, jj, nn]
    e_m, e_n = ch[mm, ii, nn], ch[nn, jj, mm]
    S = np.sum(np.abs(e_m) ** 2, axis=-1) + np.sum(np.abs(e_n) ** 2, axis=-1)
    q = P / M
    f2 = np.abs(np.asarray(f)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (M / S)[:, None] * f2[None, :]
        shared = np.log2(1.0 + g).mean(axis=1)
        c0, c1 = _session_coeffs(own_m, e_m, q, N0)
        Rm = np.log2(c0[:, None] + g * c1[:, None]).mean(axis=1) - shared
        c0, c1 = _session_coeffs(own_n, e_n, q, N0)
        Rn = np.log2(c0[:, None] + g * c1[:, None]).mean(axis=1) - shared
    degenerate = S == 0
    if np.any(degenerate):
        Rm[degenerate] = own_rate(own_m[degenerate], P, N0)
        Rn[degenerate] = own_rate(own_n[degenerate], P, N0)
    return (mm, ii, nn, jj), Rm, Rn


def mat_session_schedule(buffer: Round1Buffer, queues: VirtualQueueState, P: float,
                         N0: float = 1.0, f_samples: int = 200,
                         rng: Optional[np.random.Generator] = None,
                         f: Optional[np.ndarray] = None) -> tuple[int, int, int, int]:
    """
    Max-weight choice of the next MAT session.

    Maximizes ``Q_m dR_{m,i}(n,j) + Q_n dR_{n,j}(m,i)`` over all packet
    pairs of distinct users, with ``dR_{m,i}(n,j) = Rbar_{m,i}(n,j) -
    R_{m,i} + Rbar_m``: the session rate, minus the round-1-only rate
    the packet already holds, plus the expected rate of the fresh packet
    that replaces it. Ties go to the lexicographically smallest
    ``(m, i, n, j)``.
    """
    if queues.L != buffer.L:
        raise ValueError(f"{queues.L} virtual queues for {buffer.L} users")
    if f is None:
        if rng is None:
            raise ValueError("pass either f samples or a random stream")
        f = crandn(rng, f_samples)
    (mm, ii, nn, jj), Rm, Rn = session_rate_table(buffer, P, f, N0)
    R1 = own_rate(buffer.own(), P, N0)
    fresh = fresh_packet_rate(P, N0, buffer.M)
    obj = (queues.Q[mm] * (Rm - R1[mm, ii] + fresh)
           + queues.Q[nn] * (Rn - R1[nn, jj] + fresh))
    k = int(np.argmax(obj))
    return int(mm[k]), int(ii[k]), int(nn[k]), int(jj[k])


def _normalized(h: np.ndarray) -> np.ndarray:
    return h / np.sqrt(1.0 + np.sum(np.abs(h) ** 2, axis=-1, keepdims=True))


def select_eavesdroppers(H: np.ndarray, m: int, count: int, P: float, N0: float = 1.0,
                         candidates: Optional[np.ndarray] = None) -> tuple[int, ...]:
    """
    Eavesdropper set for a round-1 packet of user ``m``.

    ``H[n]`` is user ``n``'s channel in the packet's slot. Chooses the
    ``count`` users ``n != m`` maximizing ``log2 det(I + Ht Ht^H P/(M N0))``
    with ``Ht`` stacking ``h_m`` over the normalized rows
    ``h_n / sqrt(1 + ||h_n||^2)``. Ties go to the first set in
    lexicographic order.
    """
    L, M = H.shape
    if candidates is None:
        candidates = np.array([n for n in range(L) if n != m])
    if len(candidates) < count:
        raise ValueError(f"need {count} eavesdroppers, only {len(candidates)} users available")
    sets = np.array(list(combinations(candidates, count)), dtype=int)
    rows = np.empty((len(sets), count + 1, M), dtype=complex)
    rows[:, 0] = H[m]
    rows[:, 1:] = _normalized(H[sets])
    gram = rows @ np.conj(np.swapaxes(rows, -1, -2))
    score = log2det(np.eye(count + 1) + gram * P / (M * N0))
    return tuple(int(u) for u in sets[int(np.argmax(score))])


def packet_centric_select(m: int, i: int, buffer: Round1Buffer, P: float, N0: float = 1.0) -> int:
    """Single eavesdropper for buffered packet ``(m, i)`` (two-user scheme)."""
    if buffer.L < 2:
        raise ValueError("packet-centric selection needs at least two users")
    _check_entry(buffer, m, i)
    return select_eavesdroppers(buffer.channels[m, i], m, 1, P, N0)[0]


def select_round3_eavesdropper(G: np.ndarray, pair: tuple[int, int], P: float,
                               N0: float = 1.0) -> int:
    """
    Eavesdropper for a degree-2 message intended for ``pair``.

    ``G[u]`` is user ``u``'s channel on the antennas carrying the
    message. Maximizes the sum over both intended users of
    ``log2 det(I + G_u G_u^H P/(d N0))``, ``G_u`` stacking ``g_u`` over
    ``g_q / sqrt(1 + ||g_q||^2)`` and ``d`` the message dimension.
    """
    L, d = G.shape
    cand = np.array([q for q in range(L) if q not in pair])
    if cand.size == 0:
        raise ValueError("no user left to eavesdrop")
    gq = _normalized(G[cand])
    score = np.zeros(cand.size)
    for u in pair:
        rows = np.empty((cand.size, 2, d), dtype=complex)
        rows[:, 0] = G[u]
        rows[:, 1] = gq
        gram = rows @ np.conj(np.swapaxes(rows, -1, -2))
        score += log2det(np.eye(2) + gram * P / (d * N0))
    return int(cand[int(np.argmax(score))])
