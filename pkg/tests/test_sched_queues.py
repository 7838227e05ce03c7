import numpy as np
import pytest
from hypothesis import given, strategies as st

from mimo_retro.sched import PairingQueue, SubMessage, VirtualQueueState, virtual_queue_update


def test_update_rule_with_fixed_arrivals():
    q = VirtualQueueState(np.array([1.0, 0.5, 3.0]), arrival_rate=1.0)
    new = virtual_queue_update(q, [0.5, 2.0, 1.0])
    assert np.allclose(new.Q, [1.5, 0.0, 3.0])
    assert np.allclose(q.Q, [1.0, 0.5, 3.0])  # input untouched
    assert np.allclose(new.served_total, [0.5, 2.0, 1.0])
    assert new.frames == 1


def test_default_arrivals_track_average_sum_rate():
    q = VirtualQueueState.uniform(2, backlog=0.0)
    q = virtual_queue_update(q, [2.0, 0.0])
    assert q.sum_rate_avg == pytest.approx(2.0)
    # arrivals of 1.0 per user, user 0 served 2.0
    assert np.allclose(q.Q, [0.0, 1.0])
    q = virtual_queue_update(q, [0.0, 4.0])
    assert q.sum_rate_avg == pytest.approx(3.0)


@pytest.mark.parametrize("served", [[-1.0, 0.0], [np.nan, 0.0], [0.0]])
def test_update_rejects_bad_service(served):
    with pytest.raises(ValueError):
        virtual_queue_update(VirtualQueueState.uniform(2), served)


def test_negative_backlog_rejected():
    with pytest.raises(ValueError):
        VirtualQueueState(np.array([-1.0]))


@given(st.lists(st.lists(st.floats(0, 10), min_size=3, max_size=3), min_size=1, max_size=30))
def test_queues_stay_nonnegative(frames):
    q = VirtualQueueState.uniform(3, 1.0)
    total = np.zeros(3)
    for s in frames:
        q = virtual_queue_update(q, s)
        total += s
        assert np.all(q.Q >= 0)
    assert np.allclose(q.served_total, total)


def _sub(src, eav):
    return SubMessage(src, eav, np.array([1.0 + 0j, 2.0]))


@given(st.lists(st.sampled_from([0, 1]), max_size=60), st.integers(1, 3))
def test_pairing_queue_conservation(lanes, width):
    pq = PairingQueue((1, 0), width)
    assert pq.key == (0, 1)
    emitted = 0
    for k, u in enumerate(lanes):
        pq.enqueue(_sub(k, u))
        while pq.combine() is not None:
            emitted += 1
        assert pq.conserved()
    counts = [lanes.count(0), lanes.count(1)]
    assert emitted == min(counts) // width
    assert len(pq.output) == emitted
    for u in (0, 1):
        assert pq.pending(u) == counts[u] - emitted * width


def test_pairing_queue_fifo_and_validation():
    pq = PairingQueue((0, 2))
    with pytest.raises(KeyError):
        pq.enqueue(_sub("x", 1))
    for k in range(2):
        pq.enqueue(_sub(f"a{k}", 0))
    assert pq.combine() is None
    pq.enqueue(_sub("b0", 2))
    msg = pq.combine()
    assert msg.sources == ["a0", "b0"]
    assert pq.pending(0) == 1
    with pytest.raises(ValueError):
        PairingQueue((0, 0))
    with pytest.raises(ValueError):
        PairingQueue((0, 1), width=0)


def test_combined_message_symbols():
    ch = {0: np.array([1.0 + 0j, 0.0]), 1: np.array([0.0, 1.0j]), 2: np.array([1.0, 1.0 + 0j])}
    values = {"p": np.array([2.0, 3.0 + 0j]), "q": np.array([1.0, -1.0 + 0j]), "r": np.array([1.0, 1.0 + 0j])}
    pq = PairingQueue((0, 1))
    pq.enqueue(SubMessage("p", 0, ch[0]))
    pq.enqueue(SubMessage("q", 1, ch[1]))
    msg = pq.combine()
    # vdot conjugates the channel: h^H x
    assert msg.symbol(values) == pytest.approx([2.0 + 1.0j])
    tq = PairingQueue((0, 1, 2))
    for u, src in ((0, "p"), (1, "q"), (2, "r")):
        tq.enqueue(SubMessage(src, u, ch[u]))
    m3 = tq.combine()
    assert m3.degree == 3
    assert np.allclose(m3.symbol(values), [2.0, 1.0j, 2.0])
