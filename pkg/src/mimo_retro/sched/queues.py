"""Virtual queues and the pairing queues of the packet-centric scheduler."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "VirtualQueueState",
    "virtual_queue_update",
    "SubMessage",
    "CombinedMessage",
    "PairingQueue",
]


@dataclass
class VirtualQueueState:
    """
    Backlogs ``Q_m`` acting as stochastic Lagrange multipliers.

    ``arrival_rate`` fixes a constant virtual arrival per frame; when it is
    ``None`` the arrival is the running-average sum rate divided by the
    number of users.
    """
    Q: np.ndarray
    arrival_rate: Optional[float] = None
    served_total: np.ndarray = field(default=None)  # type: ignore[assignment]
    sum_rate_avg: float = 0.0
    frames: int = 0

    def __post_init__(self) -> None:
        self.Q = np.asarray(self.Q, dtype=float).copy()
        if np.any(self.Q < 0):
            raise ValueError("virtual queue backlogs must be non-negative")
        if self.served_total is None:
            self.served_total = np.zeros_like(self.Q)

    @classmethod
    def uniform(cls, L: int, backlog: float = 1.0, arrival_rate: Optional[float] = None):
        return cls(np.full(L, float(backlog)), arrival_rate)

    @property
    def L(self) -> int:
        return self.Q.size

    def arrivals(self) -> np.ndarray:
        if self.arrival_rate is not None:
            return np.full(self.L, self.arrival_rate)
        return np.full(self.L, self.sum_rate_avg / self.L)


def virtual_queue_update(queues: VirtualQueueState, served: Sequence[float]) -> VirtualQueueState:
    """
    One step of ``Q_m <- max(Q_m + a_m - served_m, 0)``.

    The running average used for the default arrivals includes this
    frame's service. Returns a new state; the input is left untouched.
    """
    served = np.asarray(served, dtype=float)
    if served.shape != queues.Q.shape:
        raise ValueError(f"expected {queues.L} served rates, got shape {served.shape}")
    if np.any(served < 0) or not np.all(np.isfinite(served)):
        raise ValueError("served rates must be finite and non-negative")
    frames = queues.frames + 1
    avg = queues.sum_rate_avg + (served.sum() - queues.sum_rate_avg) / frames
    new = VirtualQueueState(queues.Q, queues.arrival_rate, queues.served_total + served, avg, frames)
    new.Q = np.maximum(queues.Q + new.arrivals() - served, 0.0)
    return new


@dataclass
class SubMessage:
    """
    An eavesdropped observation waiting in a pairing-queue lane.

    Attributes
    ----------
    source : hashable
        Id of the message that was overheard (a packet id in round 1, a
        degree-2 message id in round 2).
    eavesdropper : int
        User that overheard it; selects the lane.
    channel : np.ndarray
        Eavesdropper channel during the overheard slot.
    slot_index : int
    payload : any
        Free slot for the caller's bookkeeping.
    """
    source: Hashable
    eavesdropper: int
    channel: np.ndarray
    slot_index: int = 0
    payload: Any = None


@dataclass
class CombinedMessage:
    """
    A degree-2 or degree-3 message assembled from one or more sub-messages per lane.

    ``parts[u]`` lists the sub-messages taken from the lane of eavesdropper ``u``.
    """
    key: tuple[int, ...]
    degree: int
    parts: dict[int, list[SubMessage]]

    @property
    def sources(self) -> list[Hashable]:
        return [s.source for u in self.key for s in self.parts[u]]

    def observations(self, values: Mapping[Hashable, np.ndarray]) -> np.ndarray:
        """
        Noiseless eavesdropped observations regenerated at the BS.

        ``values[source]`` is the transmitted vector of each source
        message. Returns shape ``(lanes, width)`` with entry ``[l, k] =
        channel^H value`` for the ``k``-th item of lane ``l``.
        """
        return np.array([[np.vdot(s.channel, values[s.source]) for s in self.parts[u]]
                         for u in self.key])

    def symbol(self, values: Mapping[Hashable, np.ndarray]) -> np.ndarray:
        """
        The message to transmit: lanes are summed for degree 2 and
        stacked for degree 3. Returns shape ``(width,)`` or ``(3 * width,)``.
        """
        obs = self.observations(values)
        if self.degree == 2:
            return obs.sum(axis=0)
        return obs.ravel()


class PairingQueue:
    """
    FIFO lanes, one per member user, that emit a combined message once
    every lane holds ``width`` items.

    Parameters
    ----------
    key : tuple of int
        Member users (2 for degree-2 messages, 3 for degree-3).
    width : int
        Items taken per lane per combined message.
    """

    def __init__(self, key: Sequence[int], width: int = 1):
        key = tuple(sorted(int(u) for u in key))
        if len(key) not in (2, 3) or len(set(key)) != len(key):
            raise ValueError(f"pairing queue key must hold 2 or 3 distinct users, got {key}")
        if width < 1:
            raise ValueError("width must be >= 1")
        self.key = key
        self.width = width
        self.lanes: dict[int, deque[SubMessage]] = {u: deque() for u in key}
        self.enqueued = {u: 0 for u in key}
        self.consumed = {u: 0 for u in key}
        self.output: deque[CombinedMessage] = deque()

    @property
    def degree(self) -> int:
        return len(self.key)

    def pending(self, user: int) -> int:
        return len(self.lanes[user])

    def enqueue(self, sub: SubMessage) -> None:
        if sub.eavesdropper not in self.lanes:
            raise KeyError(f"user {sub.eavesdropper} has no lane in queue {self.key}")
        self.lanes[sub.eavesdropper].append(sub)
        self.enqueued[sub.eavesdropper] += 1

    def ready(self) -> bool:
        return all(len(lane) >= self.width for lane in self.lanes.values())

    def combine(self) -> Optional[CombinedMessage]:
        """Pop ``width`` items from every lane, or return ``None`` if any lane is short."""
        if not self.ready():
            return None
        parts = {}
        for u, lane in self.lanes.items():
            parts[u] = [lane.popleft() for _ in range(self.width)]
            self.consumed[u] += self.width
        msg = CombinedMessage(self.key, self.degree, parts)
        self.output.append(msg)
        return msg

    def conserved(self) -> bool:
        return all(self.enqueued[u] == self.consumed[u] + len(self.lanes[u]) for u in self.key)
