import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiord.analysis import is_stochastic
from hiord.gains import GainError, make_continuous_gains, make_discrete_gains, place_observer_gain
from hiord.graph import DirectedGraph, laplacian
from hiord.lti import Polynomial, integrator_chain, mat_exp, to_controllable_canonical
from hiord.protocols import (
    closed_loop_matrix,
    discrete_block,
    discrete_observer_step,
    general_lti_block,
    network_matrix,
    observer_rhs,
    output_feedback_block,
    reduce,
    s_matrix,
    state_feedback_block,
    u_discrete,
    u_general_lti,
    u_output_feedback,
    u_state_feedback,
)
from hiord.scenarios import EXAMPLE2_K3, AircraftParams

from conftest import digraphs

seeds = st.integers(0, 2**32 - 1)


def test_no_neighbors_is_pure_feedback():
    g = DirectedGraph(3)
    gs = make_continuous_gains((1, 3, 3))
    X = np.arange(12.0).reshape(3, 4)
    assert u_state_feedback(1, X, g, gs) == pytest.approx(gs.K1 @ X[1])


def test_equal_states_no_coupling():
    g = DirectedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
    gs = make_continuous_gains((2.0, 1.0))
    X = np.tile([0.3, -1.0, 2.0], (3, 1))
    for i in range(3):
        assert u_state_feedback(i, X, g, gs) == pytest.approx(gs.K1 @ X[i])


def test_two_agent_hand_value():
    g = DirectedGraph.from_edges(2, [(1, 0, 1.0)])
    gs = make_continuous_gains((1.0,))
    X = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert u_state_feedback(1, X, g, gs) == pytest.approx(1.0)


def test_closed_loop_empty_graph_block_diagonal():
    gs = make_continuous_gains((1, 3, 3))
    M = closed_loop_matrix(DirectedGraph(2), gs)
    sys = integrator_chain(4)
    blk = sys.A + sys.B @ gs.K1[None, :]
    np.testing.assert_array_equal(M, np.kron(np.eye(2), blk))


def test_closed_loop_two_agent_path_by_hand():
    gs = make_continuous_gains((2.0,))
    g = DirectedGraph.from_edges(2, [(1, 0, 1.0)])
    # agent 1: x' = (v, -2v); agent 2 adds -(K2 (x2 - x1)) = -(2 dp + dv)
    expect = np.array([
        [0, 1, 0, 0],
        [0, -2, 0, 0],
        [0, 0, 0, 1],
        [2, 1, -2, -3],
    ], dtype=float)
    np.testing.assert_array_equal(closed_loop_matrix(g, gs), expect)


@settings(max_examples=50)
@given(digraphs(max_nodes=5), seeds)
def test_closed_loop_equals_agentwise_law(g, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    gs = make_continuous_gains(rng.normal(size=m - 1))
    X = rng.normal(size=(g.n_nodes, m))
    sys = integrator_chain(m)
    ref = np.concatenate([sys.A @ X[i] + sys.B[:, 0] * u_state_feedback(i, X, g, gs) for i in range(g.n_nodes)])
    np.testing.assert_allclose(closed_loop_matrix(g, gs) @ X.ravel(), ref, atol=1e-10)
    blk = state_feedback_block(gs)
    np.testing.assert_allclose(network_matrix(blk, g), closed_loop_matrix(g, gs), atol=1e-14)


@settings(max_examples=50)
@given(digraphs(max_nodes=5), seeds)
def test_reduction_identity(g, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    gs = make_continuous_gains(rng.normal(size=m - 1))
    IK2 = np.kron(np.eye(g.n_nodes), gs.K2[None, :])
    M = closed_loop_matrix(g, gs)
    np.testing.assert_allclose(IK2 @ M, -laplacian(g) @ IK2, atol=1e-12)


def test_observer_zero_error_reduces_to_plant():
    sys = integrator_chain(3)
    K3 = np.array([-1.0, 2.0, 0.5])
    s = np.array([0.2, -0.4, 1.1])
    y = float((sys.C @ s)[0])
    np.testing.assert_allclose(observer_rhs(s, 0.7, y, sys.A, sys.B, sys.C, K3), sys.A @ s + sys.B[:, 0] * 0.7)


def test_observer_error_closed_form():
    # single agent: e = x - s obeys e' = (A + K C) e
    sys = integrator_chain(2)
    K = place_observer_gain(sys.A, sys.C, Polynomial((1.0, 2.0)))
    gs = make_continuous_gains((1.0,), K3=K.ravel())
    blk = output_feedback_block(gs)
    y0 = np.array([1.0, -0.5, 0.0, 0.0])
    e0 = y0[:2] - y0[2:]
    for t in (0.5, 2.0, 6.0):
        Y = mat_exp(blk.drift, t) @ y0
        e = Y[:2] - Y[2:]
        np.testing.assert_allclose(e, mat_exp(sys.A + K @ sys.C.reshape(1, -1), t) @ e0, atol=1e-12)
    assert np.abs(e).max() < np.abs(e0).max()


@settings(max_examples=30)
@given(digraphs(min_nodes=2, max_nodes=4), seeds)
def test_output_feedback_block_matches_agentwise(g, seed):
    rng = np.random.default_rng(seed)
    m = 3
    sys = integrator_chain(m)
    gs = make_continuous_gains((1.0, 2.0), K3=rng.normal(size=m))
    blk = output_feedback_block(gs)
    N = g.n_nodes
    X, S = rng.normal(size=(N, m)), rng.normal(size=(N, m))
    got = (network_matrix(blk, g) @ np.hstack([X, S]).ravel()).reshape(N, 2 * m)
    for i in range(N):
        u = u_output_feedback(i, S, g, gs)
        np.testing.assert_allclose(got[i, :m], sys.A @ X[i] + sys.B[:, 0] * u, atol=1e-10)
        y = float((sys.C @ X[i])[0])
        np.testing.assert_allclose(got[i, m:], observer_rhs(S[i], u, y, sys.A, sys.B, sys.C, gs.K3), atol=1e-10)


@settings(max_examples=30)
@given(digraphs(min_nodes=2, max_nodes=4), seeds)
def test_general_lti_block_matches_agentwise(g, seed):
    rng = np.random.default_rng(seed)
    sys = AircraftParams().system()
    canon = to_controllable_canonical(sys)
    gs = make_continuous_gains((1, 3, 3), K3=EXAMPLE2_K3)
    blk = general_lti_block(sys, gs, canon)
    N = g.n_nodes
    X, S = rng.normal(size=(N, 4)), rng.normal(size=(N, 4))
    got = (network_matrix(blk, g) @ np.hstack([X, S]).ravel()).reshape(N, 8)
    for i in range(N):
        u = u_general_lti(i, S, g, gs, canon)
        np.testing.assert_allclose(got[i, :4], sys.A @ X[i] + sys.B[:, 0] * u, atol=1e-9)
        y = float((sys.C @ X[i])[0])
        np.testing.assert_allclose(got[i, 4:], observer_rhs(S[i], u, y, sys.A, sys.B, sys.C, gs.K3), atol=1e-9)


def test_general_lti_chain_plant_equals_output_feedback():
    gs = make_continuous_gains((1, 3, 3), K3=(-8.0, -24.0, -32.0, -16.0))
    chain = integrator_chain(4)
    a = general_lti_block(chain, gs, to_controllable_canonical(chain))
    b = output_feedback_block(gs)
    np.testing.assert_allclose(a.drift, b.drift, atol=1e-14)
    np.testing.assert_allclose(a.coupling, b.coupling, atol=1e-14)


def test_general_lti_zero_control_on_kernel():
    sys = AircraftParams().system()
    canon = to_controllable_canonical(sys)
    gs = make_continuous_gains((1, 3, 3), K3=EXAMPLE2_K3)
    row = (gs.K1 - canon.a) @ canon.T
    # any common observer state orthogonal to that row gives zero input
    v = np.linalg.svd(row[None, :])[2][-1]
    S = np.tile(v, (3, 1))
    g = DirectedGraph.from_edges(3, [(1, 0), (2, 1)])
    assert all(abs(u_general_lti(i, S, g, gs, canon)) < 1e-12 for i in range(3))


@given(digraphs())
def test_i_minus_s_stochastic_positive_diagonal(g):
    P = np.eye(g.n_nodes) - s_matrix(g)
    assert is_stochastic(P)
    assert np.all(np.diag(P) > 0)


def test_two_agent_s_matrix_by_hand():
    g = DirectedGraph.from_edges(2, [(0, 1), (1, 0)])
    np.testing.assert_allclose(np.eye(2) - s_matrix(g), [[0.5, 0.5], [0.5, 0.5]])


def test_isolated_discrete_agent():
    gs = make_discrete_gains((1 / 8, 3 / 4, 3 / 2), K6=(-2.0, -1.5, -0.5, -1 / 16))
    Z = np.array([[1.0, 2.0, 3.0, 4.0]])
    assert u_discrete(0, Z, DirectedGraph(1), gs) == pytest.approx(gs.K4 @ Z[0])


@settings(max_examples=30)
@given(digraphs(min_nodes=2, max_nodes=4), seeds)
def test_discrete_block_matches_agentwise(g, seed):
    rng = np.random.default_rng(seed)
    sys = integrator_chain(4)
    gs = make_discrete_gains((1 / 8, 3 / 4, 3 / 2), K6=(-2.0, -1.5, -0.5, -1 / 16))
    blk = discrete_block(gs)
    N = g.n_nodes
    X, Z = rng.normal(size=(N, 4)), rng.normal(size=(N, 4))
    got = (network_matrix(blk, g) @ np.hstack([X, Z]).ravel()).reshape(N, 8)
    for i in range(N):
        u = u_discrete(i, Z, g, gs)
        np.testing.assert_allclose(got[i, :4], sys.A @ X[i] + sys.B[:, 0] * u, atol=1e-10)
        y = float((sys.C @ X[i])[0])
        np.testing.assert_allclose(got[i, 4:], discrete_observer_step(Z[i], u, y, sys.A, sys.B, sys.C, gs.K6), atol=1e-10)


def test_reduce():
    a1 = 2.0
    K2 = make_continuous_gains((a1, 1.0)).K2
    X = np.tile([1.5 / a1, 0.0, 0.0], (4, 1))
    np.testing.assert_allclose(reduce(X, K2), 1.5)
    assert reduce(np.array([3.0, 4.0]), (1.0, 1.0))[0] == 7.0
    assert reduce(np.array([3.0, 4.0, 1.0, 1.0]), (2.0, 1.0)).tolist() == [10.0, 3.0]


def test_missing_observer_gain_rejected():
    gs = make_continuous_gains((1, 3, 3))
    with pytest.raises(GainError):
        output_feedback_block(gs)
    with pytest.raises(GainError):
        u_output_feedback(0, np.zeros((1, 4)), DirectedGraph(1), gs)
    with pytest.raises(GainError):
        discrete_block(make_discrete_gains((0.5,)))


def test_bad_agent_index():
    gs = make_continuous_gains((1.0,))
    with pytest.raises(IndexError):
        u_state_feedback(5, np.zeros((2, 2)), DirectedGraph(2), gs)
    with pytest.raises(ValueError):
        u_state_feedback(0, np.zeros((3, 2)), DirectedGraph(2), gs)
