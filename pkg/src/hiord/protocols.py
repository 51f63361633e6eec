"""Consensus control laws and their closed-loop assemblies.

Every protocol here gives per-agent dynamics of the same shape::

    y_i' = P y_i + Q * sum_j w_ij (y_j - y_i)        (continuous)
    y_i[k+1] = P y_i[k] + Q * sum_j w_ij (y_j - y_i)  (discrete)

where ``y_i`` is the agent state, optionally stacked with its observer
state, and ``w_ij`` are edge weights (normalised by ``1 + in-degree`` in
the discrete case).  :class:`AgentBlock` captures ``P`` and ``Q`` plus the
rows needed to recover the scalar input, and the simulation kernels work
from it alone.  The per-agent functions (``u_state_feedback`` and friends)
are the reference semantics the blocks are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gains import ContinuousGainSet, DiscreteGainSet, GainError
from .graph import DirectedGraph, laplacian
from .lti import CanonicalForm, LTISystem, integrator_chain

__all__ = [
    "AgentBlock",
    "u_state_feedback",
    "closed_loop_matrix",
    "u_output_feedback",
    "observer_rhs",
    "u_general_lti",
    "u_discrete",
    "discrete_observer_step",
    "s_matrix",
    "reduce",
    "state_feedback_block",
    "output_feedback_block",
    "general_lti_block",
    "discrete_block",
    "network_matrix",
]


def _rows(states) -> np.ndarray:
    return np.atleast_2d(np.asarray(states, dtype=float))


def _coupling(i: int, states: np.ndarray, g: DirectedGraph, normalise: bool = False) -> np.ndarray:
    """``sum_j w_ij (s_i - s_j)`` over the receiver adjacency list of ``i``."""
    acc = np.zeros(states.shape[1])
    deg = 0.0
    for j, w in g.neighbors(i):
        acc += w * (states[i] - states[j])
        deg += w
    return acc / (1.0 + deg) if normalise else acc


def _check_index(i, states, g):
    if states.shape[0] != g.n_nodes:
        raise ValueError(f"expected {g.n_nodes} agent states, got {states.shape[0]}")
    if not 0 <= i < g.n_nodes:
        raise IndexError(f"agent index {i} out of range")


def u_state_feedback(i: int, states, g: DirectedGraph, gains: ContinuousGainSet) -> float:
    """``K1 x_i - sum_j a_ij K2 (x_i - x_j)``."""
    X = _rows(states)
    _check_index(i, X, g)
    return float(gains.K1 @ X[i] - gains.K2 @ _coupling(i, X, g))


def closed_loop_matrix(g: DirectedGraph, gains: ContinuousGainSet, sys: LTISystem | None = None) -> np.ndarray:
    """``I_N (x) (A + B K1) - L (x) (B K2)`` for the integrator chain."""
    sys = sys or integrator_chain(gains.m)
    BK1 = sys.B @ gains.K1[None, :]
    BK2 = sys.B @ gains.K2[None, :]
    return np.kron(np.eye(g.n_nodes), sys.A + BK1) - np.kron(laplacian(g), BK2)


def u_output_feedback(i: int, observers, g: DirectedGraph, gains: ContinuousGainSet) -> float:
    """State-feedback law evaluated on observer estimates ``s`` instead of ``x``."""
    if gains.K3 is None:
        raise GainError("output feedback needs an observer gain K3")
    return u_state_feedback(i, observers, g, gains)


def observer_rhs(s_i, u_i: float, y_i: float, A, B, C, K3) -> np.ndarray:
    """``(A + K3 C) s + B u - K3 y``."""
    if K3 is None:
        raise GainError("observer needs a gain K3")
    s_i = np.asarray(s_i, dtype=float)
    K3 = np.asarray(K3, dtype=float).reshape(-1)
    C = np.asarray(C, dtype=float).reshape(-1)
    B = np.asarray(B, dtype=float).reshape(-1)
    return np.asarray(A) @ s_i + K3 * (C @ s_i) + B * u_i - K3 * y_i


def u_general_lti(i: int, observers, g: DirectedGraph, gains: ContinuousGainSet, canon: CanonicalForm) -> float:
    """General-LTI law acting in canonical coordinates ``w = T s``.

    ``u_i = -a^T w_i + K1 w_i - sum_j a_ij K2 (w_i - w_j)``, which in
    canonical coordinates cancels the plant's last row and leaves the
    integrator-chain protocol.
    """
    S = _rows(observers)
    _check_index(i, S, g)
    if S.shape[1] != canon.T.shape[0]:
        raise ValueError(f"observer dimension {S.shape[1]} does not match T {canon.T.shape}")
    W = S @ canon.T.T
    return float((gains.K1 - canon.a) @ W[i] - gains.K2 @ _coupling(i, W, g))


def u_discrete(i: int, observers, g: DirectedGraph, gains: DiscreteGainSet) -> float:
    """``K4 z_i - (1 + d_i)^-1 sum_j a_ij K5 (z_i - z_j)``."""
    Z = _rows(observers)
    _check_index(i, Z, g)
    return float(gains.K4 @ Z[i] - gains.K5 @ _coupling(i, Z, g, normalise=True))


def discrete_observer_step(z_i, u_i: float, y_i: float, A, B, C, K6) -> np.ndarray:
    """``(A + K6 C) z + B u - K6 y``."""
    if K6 is None:
        raise GainError("discrete observer needs a gain K6")
    return observer_rhs(z_i, u_i, y_i, A, B, C, K6)


def s_matrix(g: DirectedGraph) -> np.ndarray:
    """Row-normalised Laplacian: ``L[i, :] / (1 + d_i)``."""
    L = laplacian(g)
    return L / (1.0 + np.diag(L))[:, None]


def reduce(states, K) -> np.ndarray:
    """Per-agent projection ``K x_i``; accepts stacked ``(N*m,)`` or ``(N, m)`` input."""
    K = np.asarray(K, dtype=float).reshape(-1)
    X = np.asarray(states, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, K.size)
    return X[..., : K.size] @ K


@dataclass(frozen=True)
class AgentBlock:
    """Per-agent linear dynamics ``(P, Q)`` and input rows.

    ``u_i = u_state . y_i + u_coupling . sum_j w_ij (y_j - y_i)``.  The
    first ``plant_dim`` entries of ``y_i`` are the plant state; the rest, if
    any, the observer.
    """

    drift: np.ndarray
    coupling: np.ndarray
    u_state: np.ndarray
    u_coupling: np.ndarray
    plant_dim: int
    discrete: bool = False

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @property
    def has_observer(self) -> bool:
        return self.dim > self.plant_dim


def state_feedback_block(gains: ContinuousGainSet) -> AgentBlock:
    sys = integrator_chain(gains.m)
    B = sys.B
    return AgentBlock(
        drift=sys.A + B @ gains.K1[None, :],
        coupling=B @ gains.K2[None, :],
        u_state=gains.K1.copy(),
        u_coupling=gains.K2.copy(),
        plant_dim=gains.m,
    )


def _observer_block(sys: LTISystem, F1, F2, L_obs, discrete=False) -> AgentBlock:
    """Plant + observer stacked as ``(x, s)`` with ``u = F1 s + F2 sum w (s_j - s_i)``."""
    A, B, C = sys.A, sys.B, sys.C
    m = sys.order
    F1 = np.asarray(F1, dtype=float).reshape(1, m)
    F2 = np.asarray(F2, dtype=float).reshape(1, m)
    K = np.asarray(L_obs, dtype=float).reshape(m, 1)
    Z = np.zeros((m, m))
    drift = np.block([[A, B @ F1], [-K @ C, A + K @ C + B @ F1]])
    coupling = np.block([[Z, B @ F2], [Z, B @ F2]])
    return AgentBlock(
        drift=drift,
        coupling=coupling,
        u_state=np.concatenate([np.zeros(m), F1[0]]),
        u_coupling=np.concatenate([np.zeros(m), F2[0]]),
        plant_dim=m,
        discrete=discrete,
    )


def output_feedback_block(gains: ContinuousGainSet, C=None) -> AgentBlock:
    if gains.K3 is None:
        raise GainError("output feedback needs an observer gain K3")
    sys = integrator_chain(gains.m, C)
    return _observer_block(sys, gains.K1, gains.K2, gains.K3)


def general_lti_block(sys: LTISystem, gains: ContinuousGainSet, canon: CanonicalForm) -> AgentBlock:
    if gains.K3 is None:
        raise GainError("general-LTI protocol needs an observer gain K3")
    if gains.m != sys.order:
        raise ValueError(f"gain order {gains.m} does not match plant order {sys.order}")
    F1 = (gains.K1 - canon.a) @ canon.T
    F2 = gains.K2 @ canon.T
    return _observer_block(sys, F1, F2, gains.K3)


def discrete_block(gains: DiscreteGainSet, C=None) -> AgentBlock:
    if gains.K6 is None:
        raise GainError("discrete protocol needs an observer gain K6")
    sys = integrator_chain(gains.m, C)
    return _observer_block(sys, gains.K4, gains.K5, gains.K6, discrete=True)


def network_matrix(block: AgentBlock, g: DirectedGraph) -> np.ndarray:
    """Dense stacked dynamics ``I (x) P - L (x) Q`` (``S`` in place of ``L`` when discrete).

    Reference form for cross-validation; the simulator never builds it.
    """
    L = s_matrix(g) if block.discrete else laplacian(g)
    return np.kron(np.eye(g.n_nodes), block.drift) - np.kron(L, block.coupling)
