import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiord.graph import DirectedGraph, directed_ring, is_quasi_strongly_connected, union
from hiord.scenarios import example1_graphs, ring_pieces
from hiord.switching import (
    DiscreteSwitchingSignal,
    SignalError,
    SwitchingSignal,
    discrete_verify_ujqsc,
    ujqsc_windows,
    verify_ujqsc,
)

from test_graph import closure_centers


def example1_signal():
    return SwitchingSignal.periodic(example1_graphs(), slot=0.1)


def brute_force_ujqsc(sig, T, horizon, step=1e-3):
    # dense window starts; each window sampled on a fine grid
    for t in np.arange(0.0, horizon - T + 1e-12, step):
        pts = np.arange(t, t + T - 1e-9, step / 4)
        idx = {sig.index_at(float(s)) for s in pts}
        if not closure_centers(union([sig.graphs[k] for k in idx])):
            return False
    return True


def test_index_at_example1_rule():
    sig = example1_signal()
    assert sig.index_at(0.05) == 0
    assert sig.index_at(0.1) == 1
    assert sig.index_at(0.2) == 2
    assert sig.index_at(0.3) == 0
    # float drift near a boundary snaps to the boundary
    assert sig.index_at(0.1 + 0.2 - 0.3 + 0.3) == 0


def test_constant_signal_same_graph():
    g = directed_ring(3)
    sig = SwitchingSignal.constant(g)
    assert all(sig.graph_at(t) == g for t in (0.0, 1.7, 1e4))
    assert sig.switch_times_in(0.0, 100.0) == []


def test_explicit_schedule_right_continuous():
    gs = example1_graphs()
    sig = SwitchingSignal.explicit(gs[:2], [0.0, 0.25], [0, 1], horizon=1.0)
    assert sig.index_at(0.2499) == 0
    assert sig.index_at(0.25) == 1
    assert sig.dwell_time == 0.25
    with pytest.raises(SignalError):
        sig.index_at(1.5)


def test_switch_times_in():
    sig = example1_signal()
    assert np.allclose(sig.switch_times_in(0.0, 0.35), [0.1, 0.2, 0.3])
    assert sig.switch_times_in(0.2, 0.2) == []


@pytest.mark.parametrize("kw", [
    dict(slot=0.0, cycle=(0,)),
    dict(slot=0.1, cycle=()),
    dict(slot=0.1, cycle=(3,)),
])
def test_invalid_periodic_rules(kw):
    with pytest.raises(SignalError):
        SwitchingSignal(example1_graphs(), **kw)


def test_invalid_explicit_schedules():
    gs = example1_graphs()
    with pytest.raises(SignalError):
        SwitchingSignal.explicit(gs, [0.1], [0], 1.0)
    with pytest.raises(SignalError):
        SwitchingSignal.explicit(gs, [0.0, 0.5, 0.4], [0, 1, 2], 1.0)
    with pytest.raises(SignalError):
        SwitchingSignal(gs, times=(0.0,), indices=(0,))


def test_mismatched_graph_sizes_rejected():
    with pytest.raises(SignalError):
        SwitchingSignal.periodic([DirectedGraph(2), DirectedGraph(3)], 0.1)


def test_example1_ujqsc_at_03():
    assert verify_ujqsc(example1_signal(), 0.3)


def test_example1_not_ujqsc_at_slot_length():
    assert not verify_ujqsc(example1_signal(), 0.1)


def test_pairwise_unions_of_example1_have_centers():
    # any window longer than one slot straddles a switch and so contains two
    # consecutive graphs; every consecutive pair already has a center
    g1, g2, g3 = example1_graphs()
    for pair, expect in (((g1, g2), {2}), ((g2, g3), {4}), ((g3, g1), {0})):
        assert is_quasi_strongly_connected(union(pair))[1] == expect


@pytest.mark.parametrize("T", [0.05, 0.1, 0.1001, 0.15, 0.2, 0.3])
def test_window_enumeration_matches_brute_force(T):
    sig = example1_signal()
    assert verify_ujqsc(sig, T) == brute_force_ujqsc(sig, T, horizon=0.3 + T + 0.1)


def test_frozen_g1_never_ujqsc():
    sig = SwitchingSignal.constant(example1_graphs()[0])
    assert not any(verify_ujqsc(sig, T) for T in (0.05, 0.3, 1.0, 50.0))


def test_constant_spanning_tree_always_ujqsc():
    tree = DirectedGraph.from_edges(4, [(1, 0), (2, 0), (3, 1)])
    sig = SwitchingSignal.constant(tree)
    assert all(verify_ujqsc(sig, T) for T in (0.01, 1.0, 10.0))


def test_window_table_rows():
    rows = ujqsc_windows(example1_signal(), 0.3)
    assert rows
    for start, end, idx, cs in rows:
        assert math.isclose(end - start, 0.3)
        assert set(idx) <= {0, 1, 2}
    assert all(cs for *_, cs in rows)


def test_explicit_schedule_certified_only_to_horizon():
    gs = example1_graphs()
    sig = SwitchingSignal.explicit(gs, [0.0, 0.1, 0.2, 0.3], [0, 1, 2, 0], horizon=0.4)
    assert verify_ujqsc(sig, 0.3)
    # extending the horizon exposes a stretch holding G1 alone for 0.3 s
    longer = SwitchingSignal.explicit(gs, [0.0, 0.1, 0.2, 0.3], [0, 1, 2, 0], horizon=0.6)
    assert not verify_ujqsc(longer, 0.3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.5))
def test_ujqsc_monotone_in_window(seed, slot):
    rng = np.random.default_rng(seed)
    gs = []
    for _ in range(3):
        edges = [(i, j) for i in range(4) for j in range(4) if i != j and rng.random() < 0.2]
        gs.append(DirectedGraph.from_edges(4, edges))
    sig = SwitchingSignal.periodic(gs, slot)
    verdicts = [verify_ujqsc(sig, T) for T in (0.1, 0.3, 0.6, 1.2, 2.4)]
    assert all(b for a, b in zip(verdicts, verdicts[1:]) if a)


def test_discrete_ring_pieces_window():
    sig = DiscreteSwitchingSignal.periodic(ring_pieces(4))
    assert discrete_verify_ujqsc(sig, 3)
    # three consecutive ring edges form a path, which has a center
    assert discrete_verify_ujqsc(sig, 2)
    assert not discrete_verify_ujqsc(sig, 1)


def test_discrete_disconnected_graph_repeated():
    sig = DiscreteSwitchingSignal.periodic([DirectedGraph(3)])
    assert not discrete_verify_ujqsc(sig, 5)


def test_discrete_window_zero_strong_graph():
    sig = DiscreteSwitchingSignal.periodic([directed_ring(4)])
    assert discrete_verify_ujqsc(sig, 0)


def test_discrete_signal_indexing():
    sig = DiscreteSwitchingSignal.explicit(ring_pieces(3), [0, 2, 1])
    assert [sig.index_at(k) for k in range(3)] == [0, 2, 1]
    assert sig.length == 3
    with pytest.raises(SignalError):
        sig.index_at(3)
    with pytest.raises(SignalError):
        sig.index_at(-1)
