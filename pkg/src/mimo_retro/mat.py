"""
Two-user retrospective interference alignment (MAT) with outdated CSIT.

Session layout (users and slots are labelled 1 and 2 as in the protocol
description):

* slots 1 and 2 carry the 2-dimensional messages ``x1`` and ``x2``;
* slot 3 carries ``alpha * (h1[2]^H x2 + h2[1]^H x1)`` on antenna 1;
* user 1 cancels ``alpha h1[3] y1[2]`` from ``y1[3]`` and sees a 2x2
  channel for ``x1`` (user 2 symmetrically).

Per-user rates are mutual informations divided by the 3 slots of the
session, so the high-SNR sum-rate slope is 4/3.

Also provides the achievable-rate lower bound under downlink training and
analog feedback, and exact slot/DoF accounting for K-user R-round schemes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Optional, Sequence

import numpy as np

from . import csi
from ._linalg import hermitian, log2det, mutual_information
from .channel import ChannelMatrix, DimensionError, GaussMarkovModel, crandn, evolve, sample_iid
from .csi import CsiEstimate, EstimateKind, TrainingConfig

__all__ = [
    "ALPHA",
    "SLOTS_PER_SESSION",
    "MatSessionRecord",
    "RateBoundTerms",
    "SessionTrace",
    "SlotAccounting",
    "sample_session",
    "simulate_round1",
    "form_round2_message",
    "transmit_session",
    "cancel_interference",
    "effective_channel_perfect",
    "perfect_rate",
    "rate_bound_terms",
    "rate_lower_bound",
    "trained_rate",
    "slot_accounting",
]

ALPHA = 1.0 / np.sqrt(2.0)
SLOTS_PER_SESSION = 3

EstimateKey = tuple[EstimateKind, int, int, int]  # (kind, owner, subject, slot)


def _other(user: int) -> int:
    if user not in (1, 2):
        raise ValueError(f"user must be 1 or 2, got {user}")
    return 3 - user


@dataclass
class MatSessionRecord:
    """
    Everything needed to evaluate one (or a batch of) 2-user MAT sessions.

    ``channels[(n, j)]`` is user ``n``'s vector channel in slot ``j`` for
    ``j in (1, 2)`` with shape ``(..., M)``; ``channels[(n, 3)]`` is the
    scalar round-2 channel with shape ``(...)``. ``estimates`` is empty
    in perfect-CSI mode.
    """
    channels: dict[tuple[int, int], np.ndarray]
    M: int
    alpha: float = ALPHA
    cfg: Optional[TrainingConfig] = None
    estimates: dict[EstimateKey, CsiEstimate] = field(default_factory=dict)

    def h(self, user: int, slot: int) -> np.ndarray:
        return self.channels[(user, slot)]

    def estimate(self, kind: EstimateKind, owner: int, subject: int, slot: int) -> CsiEstimate:
        try:
            return self.estimates[(kind, owner, subject, slot)]
        except KeyError:
            raise LookupError(
                f"session has no {kind.value} estimate of user {subject} slot {slot} "
                f"held by {owner}") from None

    def add(self, est: CsiEstimate) -> None:
        self.estimates[(est.kind, est.owner, est.subject, est.slot_index)] = est


@dataclass
class RateBoundTerms:
    A: np.ndarray
    B: np.ndarray
    I_A: np.ndarray
    I_B: np.ndarray
    N_MAT: np.ndarray


@dataclass
class SessionTrace:
    x: dict[int, np.ndarray]
    y: dict[tuple[int, int], np.ndarray]


@dataclass(frozen=True)
class SlotAccounting:
    slots_per_round: tuple[int, ...]
    total_slots: int
    total_symbols: int
    dof: Fraction


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------
def sample_session(M: int, rng: np.random.Generator, size: Sequence[int] = (),
                   cfg: Optional[TrainingConfig] = None, rho_step: float = 0.0,
                   slot_spacing: int = 1, alpha: float = ALPHA) -> MatSessionRecord:
    """
    Draw the channels of a session and, when ``cfg`` is given, the full
    set of training / feedback estimates the two users and the BS hold.

    The two round-1 slots are adjacent and the round-2 slot comes
    ``slot_spacing`` slots after the second one; channels evolve between
    slots by the Gauss-Markov recursion with coefficient ``rho_step``.
    """
    if M < 1:
        raise DimensionError("M must be >= 1")
    if slot_spacing < 1:
        raise ValueError("slot_spacing must be at least one slot")
    model = GaussMarkovModel(rho_step, M, 2)
    size = tuple(size)
    H1 = sample_iid(M, 2, rng, size, slot_index=1)
    H2 = evolve(H1, model, rng)
    H3 = evolve(H2, model, rng, steps=slot_spacing)
    channels = {}
    for n in (1, 2):
        channels[(n, 1)] = H1.user(n - 1)
        channels[(n, 2)] = H2.user(n - 1)
        channels[(n, 3)] = H3.entries[..., 0, n - 1]
    rec = MatSessionRecord(channels, M, alpha, cfg)
    if cfg is not None:
        _attach_estimates(rec, cfg, rng)
    return rec


def _attach_estimates(rec: MatSessionRecord, cfg: TrainingConfig, rng: np.random.Generator) -> None:
    pilots = {}
    for n in (1, 2):
        for j in (1, 2):
            s, est = csi.downlink_train(rec.h(n, j), cfg, rng, slot_index=j, user=n)
            pilots[(n, j)] = s
            rec.add(est)
        # round-2 scalar channel, trained on a single antenna
        _, est3 = csi.downlink_train(rec.h(n, 3)[..., None], cfg, rng, slot_index=3, user=n)
        est3.vector = est3.vector[..., 0]
        rec.add(est3)
    # eavesdropper channels h1[2] and h2[1] are fed back to the BS and overheard
    for n, j in ((1, 2), (2, 1)):
        s = pilots[(n, j)]
        rec.add(csi.feedback_to_bs(s, cfg, rng, slot_index=j, subject=n))
        peer = csi.feedback_to_peer(s, cfg, rng, slot_index=j, subject=n, listener=_other(n))
        rec.add(peer)
        rec.add(csi.cross_estimate(peer, cfg)[0])
        own = rec.estimate(EstimateKind.SELF_TRAINING, n, n, j)
        rec.add(csi.cross_estimate(own, cfg)[0])


# ---------------------------------------------------------------------------
# signal level
# ---------------------------------------------------------------------------
def simulate_round1(x: np.ndarray, H: ChannelMatrix, N0: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Observations ``y_n = h_n^H x + v_n`` of all ``K`` users, shape ``(..., K)``."""
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != H.M:
        raise DimensionError(f"symbol has {x.shape[-1]} entries, channel has M={H.M}")
    z = np.einsum("...mk,...m->...k", np.conj(H.entries), x)
    return z + np.sqrt(N0) * crandn(rng, *z.shape)


def form_round2_message(csit_1: np.ndarray, csit_2: np.ndarray,
                        x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """
    Unscaled round-2 symbol ``csit_1^H x2 + csit_2^H x1``.

    ``csit_1`` is the BS's version of user 1's slot-2 channel and
    ``csit_2`` that of user 2's slot-1 channel.
    """
    return (np.sum(np.conj(csit_1) * x2, axis=-1)
            + np.sum(np.conj(csit_2) * x1, axis=-1))


def transmit_session(rec: MatSessionRecord, P: float, N0: float, rng: np.random.Generator,
                     x1: Optional[np.ndarray] = None, x2: Optional[np.ndarray] = None
                     ) -> SessionTrace:
    """
    Run the three slots of a session at signal level.

    Gaussian symbols ``CN(0, P/M I)`` are drawn unless given. The round-2
    message is built from the BS feedback estimates when the record is
    in trained mode, otherwise from the true eavesdropper channels.
    """
    shape = rec.h(1, 1).shape
    if x1 is None:
        x1 = np.sqrt(P / rec.M) * crandn(rng, *shape)
    if x2 is None:
        x2 = np.sqrt(P / rec.M) * crandn(rng, *shape)
    if rec.cfg is None:
        c1, c2 = rec.h(1, 2), rec.h(2, 1)
    else:
        c1 = rec.estimate(EstimateKind.BS_FEEDBACK, csi.BS, 1, 2).vector
        c2 = rec.estimate(EstimateKind.BS_FEEDBACK, csi.BS, 2, 1).vector
    x12 = form_round2_message(c1, c2, x1, x2)
    x3 = np.zeros(shape, dtype=complex)
    x3[..., 0] = rec.alpha * x12
    y = {}
    for j, xj in ((1, x1), (2, x2)):
        H = ChannelMatrix(np.stack([rec.h(1, j), rec.h(2, j)], axis=-1), j)
        obs = simulate_round1(xj, H, N0, rng)
        y[(1, j)], y[(2, j)] = obs[..., 0], obs[..., 1]
    for n in (1, 2):
        y[(n, 3)] = rec.alpha * rec.h(n, 3) * x12 + np.sqrt(N0) * crandn(rng, *x12.shape)
    return SessionTrace({1: x1, 2: x2, 3: x3}, y)


def cancel_interference(trace: SessionTrace, rec: MatSessionRecord, user: int) -> np.ndarray:
    """
    User-side interference cancellation.

    Returns ``[y_u[u], y_u[3] - alpha * c * y_u[o]]`` where ``o`` is the
    other user's round-1 slot and ``c`` is the true slot-3 channel
    (perfect mode) or ``gamma`` times its training estimate.
    """
    o = _other(user)
    if rec.cfg is None:
        c = rec.h(user, 3)
    else:
        c = csi.cross_gain(rec.cfg) * rec.estimate(EstimateKind.SELF_TRAINING, user, user, 3).vector
    return np.stack([trace.y[(user, user)],
                     trace.y[(user, 3)] - rec.alpha * c * trace.y[(user, o)]], axis=-1)


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------
def effective_channel_perfect(rec: MatSessionRecord, user: int,
                              N0: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """
    Equivalent 2-row channel seen by ``user`` after cancellation, and the
    (diagonal) covariance of the cancelled noise.
    """
    o = _other(user)
    g = rec.alpha * rec.h(user, 3)
    rows = np.stack([np.conj(rec.h(user, user)),
                     g[..., None] * np.conj(rec.h(o, user))], axis=-2)
    cov = np.zeros(g.shape + (2, 2))
    cov[..., 0, 0] = N0
    cov[..., 1, 1] = N0 * (1.0 + np.abs(g) ** 2)
    return rows, cov


def perfect_rate(rec: MatSessionRecord, user: int, P: float, N0: float = 1.0) -> np.ndarray:
    """Per-user rate in bits per channel use with perfect outdated CSI."""
    rows, cov = effective_channel_perfect(rec, user, N0)
    return mutual_information(rows, cov, P / rec.M) / SLOTS_PER_SESSION


def rate_bound_terms(rec: MatSessionRecord, user: int = 1) -> RateBoundTerms:
    """Matrices of the training/feedback rate bound for ``user``."""
    cfg = rec.cfg
    if cfg is None:
        raise LookupError("rate bound terms need a session sampled with a TrainingConfig")
    o = _other(user)
    M, a = rec.M, rec.alpha
    gamma = csi.cross_gain(cfg)
    s1 = csi.training_error_variance(cfg)
    sa = csi.cross_error_variance_self(cfg)
    sb = csi.cross_error_variance_peer(cfg)
    t_own = rec.estimate(EstimateKind.SELF_TRAINING, user, user, user).vector
    t3 = rec.estimate(EstimateKind.SELF_TRAINING, user, user, 3).vector
    # own channel during the other user's slot, and the other user's eavesdropper channel
    t_eaves = rec.estimate(EstimateKind.SELF_TRAINING, user, user, o).vector
    chk_own = rec.estimate(EstimateKind.CROSS_FROM_SELF, user, user, o).vector
    chk_peer = rec.estimate(EstimateKind.CROSS_FROM_PEER, user, o, user).vector

    g = a * t3
    A = np.stack([np.conj(t_own), g[..., None] * np.conj(chk_peer)], axis=-2)
    B = np.stack([np.zeros_like(t_own),
                  g[..., None] * (np.conj(chk_own) - gamma * np.conj(t_eaves))], axis=-2)
    shape = t3.shape
    I_A = np.zeros(shape + (2, 2))
    I_B = np.zeros(shape + (2, 2))
    N = np.zeros(shape + (2, 2))
    t3sq = np.abs(t3) ** 2
    I_A[..., 0, 0] = M * s1
    I_A[..., 1, 1] = a * a * (s1 * (M * sb + np.sum(np.abs(chk_peer) ** 2, axis=-1))
                              + M * t3sq * sb)
    I_B[..., 1, 1] = a * a * (s1 * (M * sa + np.sum(np.abs(chk_own) ** 2, axis=-1))
                              + M * t3sq * (sa + gamma * gamma * s1))
    N[..., 0, 0] = cfg.N0
    N[..., 1, 1] = cfg.N0 * (1.0 + np.abs(a * gamma * t3) ** 2)
    return RateBoundTerms(A, B, I_A, I_B, N)


def rate_lower_bound(terms: RateBoundTerms, P: float, M: int) -> np.ndarray:
    """
    Per-user achievable rate lower bound (bits per channel use) for one
    realization of the bound terms; average over sessions for the
    ergodic value.
    """
    q = P / M
    interf = (terms.B @ hermitian(terms.B) + terms.I_A + terms.I_B) * q
    total = terms.A @ hermitian(terms.A) * q + interf
    return (log2det(terms.N_MAT + total) - log2det(terms.N_MAT + interf)) / SLOTS_PER_SESSION


def trained_rate(rec: MatSessionRecord, user: int, P: Optional[float] = None) -> np.ndarray:
    """Lower bound of ``user``'s rate for a trained session (``P`` defaults to the config's)."""
    if rec.cfg is None:
        raise LookupError("trained_rate needs a session sampled with a TrainingConfig")
    return rate_lower_bound(rate_bound_terms(rec, user), rec.cfg.P if P is None else P, rec.M)


# ---------------------------------------------------------------------------
# slot accounting
# ---------------------------------------------------------------------------
def slot_accounting(K: int, R: int, Q: Optional[int] = None) -> SlotAccounting:
    """
    Slots and symbols of a K-user R-round scheme with ``Q`` round-1 slots.

    Rounds ``r < R`` use ``Q/r`` slots and the last round uses
    ``Q (K + 1 - R) / R``; each round-1 slot carries ``K`` symbols.
    ``Q`` defaults to ``K!``.
    """
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    if not 2 <= R <= K:
        raise ValueError(f"R must lie in [2, K], got R={R}, K={K}")
    if Q is None:
        Q = factorial(K)
    if Q < 1:
        raise ValueError(f"Q must be a positive integer, got {Q}")
    counts = [Fraction(Q, r) for r in range(1, R)]
    counts.append(Fraction(Q * (K + 1 - R), R))
    if any(c.denominator != 1 for c in counts):
        raise ValueError(f"Q={Q} gives a non-integral slot count for K={K}, R={R}: "
                         f"{[str(c) for c in counts]}")
    slots = tuple(int(c) for c in counts)
    total = sum(slots)
    symbols = K * Q
    return SlotAccounting(slots, total, symbols, Fraction(symbols, total))
