"""Schedulers for multi-round schemes with outdated CSIT."""

from .engine import (MODES, FrameResult, RunResult, SchedulerConfig, SchedulerState, init_state,
                     mode_dims, run_scheduled_frame, simulate)
from .queues import (CombinedMessage, PairingQueue, SubMessage, VirtualQueueState,
                     virtual_queue_update)
from .selection import (Round1Buffer, expected_session_rate, fresh_packet_rate, mat_session_schedule,
                        own_rate, packet_centric_select, select_eavesdroppers,
                        select_round3_eavesdropper, session_rate_table)

__all__ = [
    "MODES",
    "CombinedMessage",
    "FrameResult",
    "PairingQueue",
    "Round1Buffer",
    "RunResult",
    "SchedulerConfig",
    "SchedulerState",
    "SubMessage",
    "VirtualQueueState",
    "expected_session_rate",
    "fresh_packet_rate",
    "init_state",
    "mode_dims",
    "mat_session_schedule",
    "own_rate",
    "packet_centric_select",
    "run_scheduled_frame",
    "select_eavesdroppers",
    "select_round3_eavesdropper",
    "session_rate_table",
    "simulate",
]
