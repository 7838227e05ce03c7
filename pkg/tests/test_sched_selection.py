import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from mimo_retro.channel import crandn, make_rng
from mimo_retro.sched import (Round1Buffer, VirtualQueueState, expected_session_rate,
                              fresh_packet_rate, mat_session_schedule, own_rate,
                              packet_centric_select, select_eavesdroppers,
                              select_round3_eavesdropper, session_rate_table)


def e_ln1p_exp(k):
    """E ln(1 + k X) for X ~ Exp(1)."""
    return math.exp(1 / k) * special.exp1(1 / k)


def exact_session_rate(h, e_own, e_other, P, N0=1.0):
    M = h.size
    S = np.vdot(e_own, e_own).real + np.vdot(e_other, e_other).real
    q = P / M
    na, nb = np.vdot(h, h).real / N0, np.vdot(e_own, e_own).real / N0
    ab = abs(np.vdot(h, e_own)) ** 2 / N0 ** 2
    c0 = 1 + q * na
    c1 = c0 * (1 + q * nb) - q * q * ab
    k = M / S
    return (math.log(c0) + e_ln1p_exp(k * c1 / c0) - e_ln1p_exp(k)) / math.log(2)


def test_own_rate():
    h = np.array([1.0 + 1j, 0.0])
    assert own_rate(h, 4.0) == pytest.approx(np.log2(1 + 4.0 / 2 * 2))


@pytest.mark.parametrize("P", [1.0, 10.0, 1000.0])
def test_fresh_rate_closed_form(P):
    c = P / 2
    exact = (1 + (1 - 1 / c) * e_ln1p_exp(c)) / math.log(2)
    assert fresh_packet_rate(P) == pytest.approx(exact, rel=1e-7)


def test_fresh_rate_single_antenna_is_exponential_case():
    assert fresh_packet_rate(10.0, M=1) == pytest.approx(e_ln1p_exp(10.0) / math.log(2), rel=1e-7)


@pytest.mark.parametrize("P", [3.0, 100.0])
def test_expected_session_rate_matches_exact_expectation(P):
    rng = make_rng(1, P)
    buf = Round1Buffer.fresh(3, 2, 2, rng)
    ch = buf.channels
    exact = exact_session_rate(ch[0, 1, 0], ch[0, 1, 2], ch[2, 0, 0], P)
    est = expected_session_rate(0, 1, 2, 0, buf, P, f_samples=400_000, rng=rng)
    assert est == pytest.approx(exact, abs=0.01)


def test_rate_table_agrees_with_direct_evaluation():
    rng = make_rng(2)
    buf = Round1Buffer.fresh(4, 2, 2, rng)
    f = crandn(rng, 50)
    (mm, ii, nn, jj), Rm, Rn = session_rate_table(buf, 30.0, f)
    assert mm.size == 4 * 3 // 2 * 4
    assert np.all(mm < nn)
    for k in range(mm.size):
        m, i, n, j = mm[k], ii[k], nn[k], jj[k]
        assert Rm[k] == pytest.approx(expected_session_rate(m, i, n, j, buf, 30.0, f=f), rel=1e-10)
        assert Rn[k] == pytest.approx(expected_session_rate(n, j, m, i, buf, 30.0, f=f), rel=1e-10)


def test_session_degenerates_without_eavesdropped_energy():
    rng = make_rng(3)
    buf = Round1Buffer.fresh(2, 1, 2, rng)
    buf.channels[0, 0, 1] = 0
    buf.channels[1, 0, 0] = 0
    f = crandn(rng, 10)
    assert expected_session_rate(0, 0, 1, 0, buf, 10.0, f=f) == pytest.approx(
        own_rate(buf.channels[0, 0, 0], 10.0))
    _, Rm, Rn = session_rate_table(buf, 10.0, f)
    assert Rm[0] == pytest.approx(own_rate(buf.channels[0, 0, 0], 10.0))
    assert np.isfinite(Rn[0])


def test_session_rate_argument_checks():
    buf = Round1Buffer.fresh(3, 1, 2, make_rng(4))
    with pytest.raises(ValueError):
        expected_session_rate(1, 0, 1, 0, buf, 10.0, f=np.ones(3))
    with pytest.raises(IndexError):
        expected_session_rate(0, 1, 1, 0, buf, 10.0, f=np.ones(3))
    with pytest.raises(ValueError):
        expected_session_rate(0, 0, 1, 0, buf, 10.0)


def brute_schedule(buf, Q, P, f):
    fresh = fresh_packet_rate(P, 1.0, buf.M)
    best, arg = -np.inf, None
    R1 = own_rate(buf.own(), P)
    for m, n in itertools.combinations(range(buf.L), 2):
        for i, j in itertools.product(range(buf.N), repeat=2):
            rm = expected_session_rate(m, i, n, j, buf, P, f=f)
            rn = expected_session_rate(n, j, m, i, buf, P, f=f)
            obj = Q[m] * (rm - R1[m, i] + fresh) + Q[n] * (rn - R1[n, j] + fresh)
            if obj > best:
                best, arg = obj, (m, i, n, j)
    return arg


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32))
def test_schedule_matches_brute_force_over_24_candidates(seed):
    # L=4, N=2: 6 user pairs x 4 packet pairs
    rng = make_rng(seed)
    buf = Round1Buffer.fresh(4, 2, 2, rng)
    Q = rng.uniform(0, 50, 4)
    f = crandn(rng, 32)
    P = float(10 ** rng.uniform(0, 3))
    assert mat_session_schedule(buf, VirtualQueueState(Q), P, f=f) == brute_schedule(buf, Q, P, f)


def test_schedule_prefers_heavily_backlogged_user():
    rng = make_rng(5)
    buf = Round1Buffer.fresh(5, 1, 2, rng)
    Q = np.array([0.0, 0.0, 0.0, 1e6, 0.0])
    m, _, n, _ = mat_session_schedule(buf, VirtualQueueState(Q), 100.0, rng=rng)
    assert 3 in (m, n)


def test_schedule_validates_queue_count():
    buf = Round1Buffer.fresh(3, 1, 2, make_rng(6))
    with pytest.raises(ValueError):
        mat_session_schedule(buf, VirtualQueueState.uniform(4), 10.0, f=np.ones(2))


def brute_eavesdroppers(H, m, count, P):
    M = H.shape[1]
    best, arg = -np.inf, None
    for s in itertools.combinations([n for n in range(H.shape[0]) if n != m], count):
        rows = [H[m]] + [H[n] / math.sqrt(1 + np.vdot(H[n], H[n]).real) for n in s]
        A = np.array(rows)
        val = np.linalg.det(np.eye(count + 1) + P / M * A @ A.conj().T).real
        if val > best:
            best, arg = val, s
    return arg


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32), count=st.integers(1, 2))
def test_eavesdroppers_match_oracle_over_19_candidates(seed, count):
    rng = make_rng(seed)
    M = count + 1
    H = crandn(rng, 20, M)
    m = int(rng.integers(20))
    assert select_eavesdroppers(H, m, count, 50.0) == brute_eavesdroppers(H, m, count, 50.0)


def test_orthogonal_eavesdropper_beats_colinear():
    H = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 2.0]], dtype=complex)
    assert select_eavesdroppers(H, 0, 1, 10.0) == (2,)


def test_packet_centric_select_and_errors():
    rng = make_rng(7)
    buf = Round1Buffer.fresh(6, 2, 2, rng)
    got = packet_centric_select(3, 1, buf, 20.0)
    assert got == brute_eavesdroppers(buf.channels[3, 1], 3, 1, 20.0)[0]
    with pytest.raises(IndexError):
        packet_centric_select(6, 0, buf, 20.0)
    with pytest.raises(ValueError):
        select_eavesdroppers(crandn(rng, 2, 2), 0, 2, 1.0)


def test_round3_eavesdropper():
    G = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.5, 0.0]], dtype=complex)
    q = select_round3_eavesdropper(G, (0, 1), 10.0)
    assert q not in (0, 1)
    # (1, 1) is the only candidate not aligned with either intended user
    assert q == 3
    with pytest.raises(ValueError):
        select_round3_eavesdropper(G[:2], (0, 1), 10.0)


def test_buffer_shape_checks_and_replace():
    with pytest.raises(ValueError):
        Round1Buffer(np.zeros((2, 1, 3, 2), complex), np.zeros((2, 1), int), np.zeros((2, 1), int))
    with pytest.raises(ValueError):
        Round1Buffer.fresh(1, 1, 2, make_rng(0))
    buf = Round1Buffer.fresh(3, 2, 2, make_rng(8))
    new = np.ones((3, 2), complex)
    buf.replace(1, 0, new, 99, 42)
    assert np.array_equal(buf.channels[1, 0], new)
    assert (buf.slots[1, 0], buf.packet_ids[1, 0]) == (99, 42)
    assert np.array_equal(buf.own()[1, 0], new[1])
