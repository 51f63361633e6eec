"""Stochastic matrices, ergodicity coefficients and transition products.

These are the numerical counterparts of the contraction arguments behind
the consensus results: products of ``exp(-L dt)`` (continuous) or
``I - S[k]`` (discrete) are row-stochastic, and the ergodicity coefficient
bounds how fast they shrink disagreement.
"""

from __future__ import annotations

import numpy as np

from .constants import STOCHASTIC_CLIP_TOL, STOCHASTIC_TOL
from .graph import laplacian
from .lti import mat_exp
from .protocols import s_matrix
from .switching import TIME_EPS, DiscreteSwitchingSignal, SwitchingSignal

__all__ = [
    "AnalysisError",
    "is_stochastic",
    "ergodicity_coefficient",
    "disagreement",
    "discrete_transition",
    "continuous_transition",
]


class AnalysisError(ValueError):
    pass


def is_stochastic(M, tol: float = STOCHASTIC_TOL) -> bool:
    """Entries ``>= -tol`` and every row sum within ``tol`` of one."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise AnalysisError(f"expected a square matrix, got shape {M.shape}")
    return bool(np.all(M >= -tol) and np.all(np.abs(M.sum(axis=1) - 1.0) <= tol))


def _clean(P, tol: float) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if not is_stochastic(P, tol):
        raise AnalysisError("matrix is not row-stochastic within tolerance")
    if np.any(P < -STOCHASTIC_CLIP_TOL):
        raise AnalysisError("negative entries beyond the clipping tolerance")
    P = np.clip(P, 0.0, None)
    return P / P.sum(axis=1, keepdims=True)


def ergodicity_coefficient(P, tol: float = STOCHASTIC_TOL) -> float:
    """``0.5 * max_{i,j} sum_s |P_is - P_js|``, in ``[0, 1]``.

    Round-off dirt (tiny negative entries, row sums off by ``tol``) is
    cleaned by clipping and renormalising; anything worse raises.
    """
    P = _clean(P, tol)
    diff = np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2)
    return float(min(1.0, 0.5 * diff.max()))


def disagreement(p) -> float:
    """``max_i p_i - min_i p_i``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0:
        raise AnalysisError("disagreement of an empty vector")
    return float(p.max() - p.min())


def discrete_transition(sig: DiscreteSwitchingSignal, i: int, j: int) -> np.ndarray:
    """``(I - S[j-1]) ... (I - S[i])``; the identity when ``i == j``."""
    if i > j:
        raise AnalysisError(f"transition needs i <= j, got i={i}, j={j}")
    n = sig.n_nodes
    cache = {}
    Phi = np.eye(n)
    for k in range(i, j):
        g = sig.index_at(k)
        if g not in cache:
            cache[g] = np.eye(n) - s_matrix(sig.graphs[g])
        Phi = cache[g] @ Phi
    return Phi


def continuous_transition(sig: SwitchingSignal, t: float, s: float) -> np.ndarray:
    """``Phi(t, s)``: ordered product of ``exp(-L_k * len_k)`` over the segments of ``[s, t]``.

    The leftmost factor belongs to the latest segment.
    """
    if s > t:
        raise AnalysisError(f"transition needs s <= t, got s={s}, t={t}")
    n = sig.n_nodes
    Phi = np.eye(n)
    if t - s <= TIME_EPS:
        return Phi
    marks = [s] + sig.switch_times_in(s, t) + [t]
    for a, b in zip(marks, marks[1:]):
        L = laplacian(sig.graph_at(a))
        Phi = mat_exp(-L, b - a) @ Phi
    return Phi
