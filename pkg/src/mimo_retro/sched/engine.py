"""
Frame-by-frame simulation of the scheduled (and unscheduled) schemes.

Modes
-----
mat_session
    Two-user MAT sessions chosen by the max-weight rule over a fixed
    round-1 buffer.
packet_centric_2u, packet_centric_3u_2r, packet_centric_3u_3r
    Round-1 packets go to users in round-robin order; eavesdroppers are
    chosen per packet and pairing queues build the later-round messages.
    With ``L = K`` every choice is forced and the mode reduces to the
    plain (unscheduled) MAT scheme.

All rates use perfect outdated CSIT and fresh i.i.d. channels in every
slot. Each packet is decoded from its own round-1 observation plus the
eavesdropper looks recovered by interference cancellation; the noise of
every look is tracked as a linear combination of per-(user, slot) noise
samples, so correlations created by the cancellation steps enter the
rate exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .._linalg import NumericError, log2det
from ..channel import crandn
from ..mat import slot_accounting
from .queues import CombinedMessage, PairingQueue, SubMessage, VirtualQueueState, virtual_queue_update
from .selection import (Round1Buffer, mat_session_schedule, select_eavesdroppers,
                        select_round3_eavesdropper)

__all__ = [
    "MODES",
    "SchedulerConfig",
    "SchedulerState",
    "FrameResult",
    "RunResult",
    "init_state",
    "mode_dims",
    "run_scheduled_frame",
    "simulate",
]

MODES = ("mat_session", "packet_centric_2u", "packet_centric_3u_2r", "packet_centric_3u_3r")
_KR = {
    "mat_session": (2, 2),
    "packet_centric_2u": (2, 2),
    "packet_centric_3u_2r": (3, 2),
    "packet_centric_3u_3r": (3, 3),
}

NoiseMap = dict[tuple[int, int], complex]


def mode_dims(mode: str) -> tuple[int, int]:
    """Users served per session ``K`` and rounds ``R`` of a mode."""
    try:
        return _KR[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}") from None
# round-3 combining vectors; any two columns are linearly independent
_OMEGA = np.exp(2j * np.pi / 3)
_KAPPA = np.array([[1.0, 1.0, 1.0], [1.0, _OMEGA, _OMEGA ** 2]])


def _add(acc: NoiseMap, other: NoiseMap, scale: complex = 1.0) -> NoiseMap:
    for key, c in other.items():
        acc[key] = acc.get(key, 0.0) + scale * c
    return acc


@dataclass(frozen=True)
class SchedulerConfig:
    """
    Parameters
    ----------
    mode : str
        One of :data:`MODES`.
    L : int
        Users in the system.
    P, N0 : float
        Transmit power and noise level.
    N : int
        Buffered round-1 packets per user (``mat_session`` only).
    f_samples : int
        Draws of the unknown round-2 channel per scheduling decision.
    initial_backlog : float
        Starting virtual-queue backlog of every user.
    """
    mode: str
    L: int
    P: float
    N0: float = 1.0
    N: int = 2
    f_samples: int = 200
    initial_backlog: float = 100.0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.L < self.K:
            raise ValueError(f"mode {self.mode} needs L >= {self.K}, got L={self.L}")
        if self.N < 1 or self.f_samples < 1:
            raise ValueError("N and f_samples must be positive")
        if not (self.P > 0 and self.N0 > 0):
            raise ValueError("P and N0 must be positive")
        if self.initial_backlog < 0:
            raise ValueError("initial_backlog must be non-negative")

    @property
    def K(self) -> int:
        return _KR[self.mode][0]

    @property
    def R(self) -> int:
        return _KR[self.mode][1]

    @property
    def M(self) -> int:
        return self.K

    @property
    def slots_per_packet(self) -> Fraction:
        acc = slot_accounting(self.K, self.R)
        return Fraction(acc.total_slots, acc.total_symbols // self.K)


@dataclass
class _Packet:
    owner: int
    slot: int
    rows: list[np.ndarray]
    noise: list[NoiseMap]


@dataclass
class _Degree2:
    """A two-dimensional degree-2 message of the three-round scheme."""
    ident: int
    msg: CombinedMessage
    scale: float
    G: np.ndarray             # (L, 2) channels of all users in its slot
    slot: int
    eavesdropper: int
    first: dict[int, tuple[np.ndarray, NoiseMap]]
    norms: np.ndarray         # per element, sum of squared eavesdropper norms


@dataclass
class SchedulerState:
    cfg: SchedulerConfig
    queues: VirtualQueueState
    slot: int = 0
    next_packet: int = 0
    next_user: int = 0
    buffer: Optional[Round1Buffer] = None
    packets: dict[int, _Packet] = field(default_factory=dict)
    pairs: dict[tuple[int, ...], PairingQueue] = field(default_factory=dict)
    triples: dict[tuple[int, ...], PairingQueue] = field(default_factory=dict)
    degree2: dict[int, _Degree2] = field(default_factory=dict)
    next_degree2: int = 0

    def new_slot(self) -> int:
        self.slot += 1
        return self.slot - 1

    def new_packet(self) -> int:
        self.next_packet += 1
        return self.next_packet - 1

    def pair_queue(self, key: tuple[int, ...]) -> PairingQueue:
        key = tuple(sorted(key))
        if key not in self.pairs:
            self.pairs[key] = PairingQueue(key, width=self.cfg.R - 1)
        return self.pairs[key]

    def triple_queue(self, key: tuple[int, ...]) -> PairingQueue:
        key = tuple(sorted(key))
        if key not in self.triples:
            self.triples[key] = PairingQueue(key, width=1)
        return self.triples[key]

    @property
    def pending_packets(self) -> int:
        return len(self.packets)


@dataclass
class FrameResult:
    """
    Outcome of one frame.

    ``served[u]`` is the mutual information (bits per symbol period of
    the packet) delivered to user ``u`` by packets completed in the
    frame; ``packet_rates`` lists the completed packets' contributions
    ``I / slots_per_packet`` whose mean is the sum rate.
    """
    served: np.ndarray
    packet_rates: list[float]
    slots: int


@dataclass
class RunResult:
    mode: str
    sum_rate: float
    samples: np.ndarray
    served: np.ndarray
    frames: int
    slots: int
    pending: int


def init_state(cfg: SchedulerConfig, rng: np.random.Generator) -> SchedulerState:
    state = SchedulerState(cfg, VirtualQueueState.uniform(cfg.L, cfg.initial_backlog))
    if cfg.mode == "mat_session":
        state.buffer = Round1Buffer.fresh(cfg.L, cfg.N, cfg.M, rng)
        state.slot = state.next_packet = cfg.L * cfg.N
    return state


def _packet_mi(pk: _Packet, P: float, N0: float, M: int) -> float:
    keys = sorted({k for nm in pk.noise for k in nm})
    index = {k: c for c, k in enumerate(keys)}
    C = np.zeros((len(pk.noise), len(keys)), dtype=complex)
    for r, nm in enumerate(pk.noise):
        for k, c in nm.items():
            C[r, index[k]] = c
    cov = N0 * (C @ C.conj().T)
    rows = np.array(pk.rows)
    return float(log2det(cov + rows @ rows.conj().T * (P / M)) - log2det(cov))


def _attach(state: SchedulerState, pid: int, row: np.ndarray, noise: NoiseMap,
            served: np.ndarray, rates: list[float]) -> None:
    pk = state.packets[pid]
    pk.rows.append(row)
    pk.noise.append(noise)
    cfg = state.cfg
    if len(pk.rows) == cfg.K:
        mi = _packet_mi(pk, cfg.P, cfg.N0, cfg.M)
        served[pk.owner] += mi
        rates.append(mi / float(cfg.slots_per_packet))
        del state.packets[pid]


def _round1(state: SchedulerState, rng: np.random.Generator) -> list[tuple[int, ...]]:
    cfg = state.cfg
    m = state.next_user
    state.next_user = (m + 1) % cfg.L
    t = state.new_slot()
    H = crandn(rng, cfg.L, cfg.M)
    pid = state.new_packet()
    state.packets[pid] = _Packet(m, t, [np.conj(H[m])], [{(m, t): 1.0}])
    keys = []
    for e in select_eavesdroppers(H, m, cfg.K - 1, cfg.P, cfg.N0):
        q = state.pair_queue((m, e))
        q.enqueue(SubMessage(pid, e, H[e], t))
        keys.append(q.key)
    return keys


def _send_scalar_degree2(state: SchedulerState, msg: CombinedMessage, rng: np.random.Generator,
                         served: np.ndarray, rates: list[float]) -> None:
    """Final-round degree-2 message sent on antenna 1; both users complete a look."""
    cfg = state.cfg
    t = state.new_slot()
    G = crandn(rng, cfg.L, cfg.M)
    subs = [s for u in msg.key for s in msg.parts[u]]
    a = np.sqrt(cfg.M / sum(np.sum(np.abs(s.channel) ** 2) for s in subs))
    for u in msg.key:
        v = msg.key[0] if u == msg.key[1] else msg.key[1]
        mine, theirs = msg.parts[v][0], msg.parts[u][0]
        c = a * np.conj(G[u, 0])
        _attach(state, mine.source, c * np.conj(mine.channel),
                {(u, t): 1.0, (u, theirs.slot_index): -c}, served, rates)


def _send_vector_degree2(state: SchedulerState, msg: CombinedMessage, rng: np.random.Generator
                         ) -> tuple[int, ...]:
    """Two-dimensional degree-2 message of the three-round scheme (antennas 1 and 2)."""
    cfg = state.cfg
    t = state.new_slot()
    G = crandn(rng, cfg.L, cfg.M)[:, :2]
    u0, u1 = msg.key
    norms = np.array([sum(np.sum(np.abs(msg.parts[u][k].channel) ** 2) for u in msg.key)
                      for k in range(2)])
    a = np.sqrt(cfg.M / norms.sum())
    first = {}
    for u in msg.key:
        theirs = msg.parts[u]
        noise: NoiseMap = {(u, t): 1.0}
        for k in range(2):
            _add(noise, {(u, theirs[k].slot_index): -a * np.conj(G[u, k])})
        first[u] = (a * np.conj(G[u]), noise)
    q = select_round3_eavesdropper(G, (u0, u1), cfg.P, cfg.N0)
    did = state.next_degree2
    state.next_degree2 += 1
    state.degree2[did] = _Degree2(did, msg, a, G, t, q, first, norms)
    tq = state.triple_queue((u0, u1, q))
    tq.enqueue(SubMessage(did, q, G[q], t))
    return tq.key


def _resolve_degree2(state: SchedulerState, d: _Degree2, u: int, coef: np.ndarray,
                     noise: NoiseMap, served: np.ndarray, rates: list[float]) -> None:
    """Combine user ``u``'s two equations for ``d`` and hand the looks to the packets."""
    v = d.msg.key[0] if u == d.msg.key[1] else d.msg.key[1]
    c1, n1 = d.first[u]
    A = np.array([c1, coef])
    try:
        inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError("degree-2 message equations are singular") from exc
    for k, sub in enumerate(d.msg.parts[v]):
        nk: NoiseMap = {}
        _add(nk, n1, inv[k, 0])
        _add(nk, noise, inv[k, 1])
        _attach(state, sub.source, np.conj(sub.channel), nk, served, rates)


def _send_degree3(state: SchedulerState, msg: CombinedMessage, rng: np.random.Generator,
                  served: np.ndarray, rates: list[float]) -> None:
    """Degree-3 message: two scalar slots, each a fixed combination of the three elements."""
    cfg = state.cfg
    key = msg.key
    d = [state.degree2[msg.parts[w][0].source] for w in key]
    var = [dk.scale ** 2 * np.sum(np.abs(dk.G[w]) ** 2 * dk.norms) / cfg.M
           for w, dk in zip(key, d)]
    b = 1.0 / np.sqrt(sum(var))
    slots = [state.new_slot(), state.new_slot()]
    c = np.stack([crandn(rng, cfg.L, cfg.M)[:, 0] for _ in slots])
    for iu, u in enumerate(key):
        others = [iw for iw in range(3) if iw != iu]
        A = np.empty((2, 2), dtype=complex)
        eq_noise = []
        for s, ts in enumerate(slots):
            gain = np.conj(c[s, u]) * b
            A[s] = gain * _KAPPA[s, others]
            # u knows its own element only through its noisy round-2 observation
            eq_noise.append({(u, ts): 1.0, (u, d[iu].slot): -gain * _KAPPA[s, iu]})
        inv = np.linalg.inv(A)
        for r, iw in enumerate(others):
            dw = d[iw]
            w = key[iw]
            noise: NoiseMap = {}
            _add(noise, eq_noise[0], inv[r, 0])
            _add(noise, eq_noise[1], inv[r, 1])
            # strip the part of w's observation that u already knows
            theirs = dw.msg.parts[u]
            for k in range(2):
                _add(noise, {(u, theirs[k].slot_index): -dw.scale * np.conj(dw.G[w, k])})
            _resolve_degree2(state, dw, u, dw.scale * np.conj(dw.G[w]), noise, served, rates)
    for dk in d:
        del state.degree2[dk.ident]


def _packet_centric_frame(state: SchedulerState, rng: np.random.Generator,
                          served: np.ndarray, rates: list[float]) -> None:
    cfg = state.cfg
    for key in _round1(state, rng):
        pq = state.pairs[key]
        while (msg := pq.combine()) is not None:
            pq.output.popleft()
            if cfg.R == 2:
                _send_scalar_degree2(state, msg, rng, served, rates)
                continue
            tkey = _send_vector_degree2(state, msg, rng)
            tq = state.triples[tkey]
            while (m3 := tq.combine()) is not None:
                tq.output.popleft()
                _send_degree3(state, m3, rng, served, rates)


def _session_mi(h_own: np.ndarray, e: np.ndarray, f: complex, S: float, P: float,
                N0: float) -> float:
    M = h_own.size
    c = np.sqrt(M / S) * f
    rows = np.array([np.conj(h_own), c * np.conj(e)])
    cov = np.diag([N0, N0 * (1.0 + abs(c) ** 2)])
    return float(log2det(cov + rows @ rows.conj().T * (P / M)) - log2det(cov))


def _mat_session_frame(state: SchedulerState, rng: np.random.Generator,
                       served: np.ndarray, rates: list[float]) -> None:
    cfg = state.cfg
    buf = state.buffer
    m, i, n, j = mat_session_schedule(buf, state.queues, cfg.P, cfg.N0,
                                      f=crandn(rng, cfg.f_samples))
    e_m, e_n = buf.channels[m, i, n], buf.channels[n, j, m]
    S = float(np.sum(np.abs(e_m) ** 2) + np.sum(np.abs(e_n) ** 2))
    f = crandn(rng, 2)
    state.new_slot()
    spp = float(cfg.slots_per_packet)
    for u, k, e, fu in ((m, i, e_m, f[0]), (n, j, e_n, f[1])):
        if S > 0:
            mi = _session_mi(buf.channels[u, k, u], e, fu, S, cfg.P, cfg.N0)
        else:
            mi = float(np.log2(1.0 + cfg.P / (cfg.M * cfg.N0) * np.sum(np.abs(buf.channels[u, k, u]) ** 2)))
        served[u] += mi
        rates.append(mi / spp)
    for u, k in ((m, i), (n, j)):
        buf.replace(u, k, crandn(rng, cfg.L, cfg.M), state.new_slot(), state.new_packet())


def run_scheduled_frame(state: SchedulerState, rng: np.random.Generator) -> FrameResult:
    """
    Run one frame in place and update the virtual queues.

    A ``mat_session`` frame is one session plus the two fresh round-1
    packets that refill the buffer. A packet-centric frame is one round-1
    packet followed by every later-round message it makes ready.
    """
    cfg = state.cfg
    served = np.zeros(cfg.L)
    rates: list[float] = []
    start = state.slot
    if cfg.mode == "mat_session":
        _mat_session_frame(state, rng, served, rates)
    else:
        _packet_centric_frame(state, rng, served, rates)
    state.queues = virtual_queue_update(state.queues, served)
    return FrameResult(served, rates, state.slot - start)


def simulate(cfg: SchedulerConfig, rng: np.random.Generator, packets: int,
             max_frames: Optional[int] = None) -> RunResult:
    """
    Run frames until ``packets`` packets have been decoded.

    The sum rate is the mean per-packet contribution, i.e. the delivered
    mutual information divided by the slots the scheme spends per packet.
    """
    if packets < 1:
        raise ValueError("packets must be >= 1")
    state = init_state(cfg, rng)
    if max_frames is None:
        max_frames = 200 * packets
    rates: list[float] = []
    served = np.zeros(cfg.L)
    frames = 0
    while len(rates) < packets:
        if frames >= max_frames:
            raise RuntimeError(f"only {len(rates)} of {packets} packets decoded after {frames} frames")
        res = run_scheduled_frame(state, rng)
        rates.extend(res.packet_rates)
        served += res.served
        frames += 1
    samples = np.array(rates[:packets])
    return RunResult(cfg.mode, float(samples.mean()), samples, served, frames, state.slot,
                     state.pending_packets)
