"""Protocol gain construction, stability tests and observer placement."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import lti
from .constants import OBSERVABILITY_COND_WARN, PLACEMENT_TOL
from .lti import Polynomial

__all__ = [
    "ContinuousGainSet",
    "DiscreteGainSet",
    "GainError",
    "make_continuous_gains",
    "make_discrete_gains",
    "default_continuous_coeffs",
    "default_discrete_coeffs",
    "default_observer_poly",
    "is_hurwitz",
    "is_schur",
    "place_observer_gain",
]


class GainError(ValueError):
    pass


@dataclass(frozen=True)
class ContinuousGainSet:
    """``K1 = (0, -a1, ..., -a_{m-1})`` and ``K2 = (a1, ..., a_{m-1}, 1)``.

    ``K3`` (column, optional) is the observer gain for output feedback.
    """

    a: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K3: np.ndarray | None = None

    @property
    def m(self) -> int:
        return len(self.K2)

    @property
    def poly(self) -> Polynomial:
        return Polynomial(tuple(self.a))

    def with_observer(self, K3) -> "ContinuousGainSet":
        K3 = np.asarray(K3, dtype=float).reshape(-1)
        if K3.size != self.m:
            raise GainError(f"K3 must have {self.m} entries, got {K3.size}")
        return ContinuousGainSet(self.a, self.K1, self.K2, K3)


@dataclass(frozen=True)
class DiscreteGainSet:
    """``K4 = (b1, b2-b1, ..., 1-b_{m-1})``, ``K5 = (b1, ..., b_{m-1}, 1)``, observer ``K6``."""

    b: np.ndarray
    K4: np.ndarray
    K5: np.ndarray
    K6: np.ndarray | None = None

    @property
    def m(self) -> int:
        return len(self.K5)

    @property
    def poly(self) -> Polynomial:
        return Polynomial(tuple(self.b))

    def with_observer(self, K6) -> "DiscreteGainSet":
        K6 = np.asarray(K6, dtype=float).reshape(-1)
        if K6.size != self.m:
            raise GainError(f"K6 must have {self.m} entries, got {K6.size}")
        return DiscreteGainSet(self.b, self.K4, self.K5, K6)


def make_continuous_gains(a, K3=None) -> ContinuousGainSet:
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size < 1:
        raise GainError("need at least one coefficient (agent order m >= 2)")
    K1 = np.concatenate([[0.0], -a])
    K2 = np.concatenate([a, [1.0]])
    g = ContinuousGainSet(a, K1, K2)
    return g if K3 is None else g.with_observer(K3)


def make_discrete_gains(b, K6=None) -> DiscreteGainSet:
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size < 1:
        raise GainError("need at least one coefficient (agent order m >= 2)")
    K5 = np.concatenate([b, [1.0]])
    K4 = np.diff(np.concatenate([[0.0], K5]))
    g = DiscreteGainSet(b, K4, K5)
    return g if K6 is None else g.with_observer(K6)


def default_continuous_coeffs(m: int) -> np.ndarray:
    """Coefficients of ``(s + 1)^(m-1)``, lowest order first."""
    return np.asarray(Polynomial.binomial(m - 1, -1.0).coeffs)


def default_discrete_coeffs(m: int) -> np.ndarray:
    """Coefficients of ``(s + 1/2)^(m-1)``, lowest order first."""
    return np.asarray(Polynomial.binomial(m - 1, -0.5).coeffs)


def default_observer_poly(m: int, discrete: bool = False) -> Polynomial:
    return Polynomial.binomial(m, -0.25 if discrete else -2.0)


def _routh_first_column(full):
    """First column of the Routh array (leading coefficient positive).

    ``None`` marks a non-positive or non-finite pivot: the row already shows
    a sign change or a root on the axis, so the rest is not needed.
    """
    n = len(full) - 1
    r0 = [float(v) for v in full[0::2]]
    r1 = [float(v) for v in full[1::2]]
    r1 += [0.0] * (len(r0) - len(r1))
    col = [r0[0], r1[0]] if n >= 1 else [r0[0]]
    for _ in range(n - 1):
        if not (r1[0] > 0 and math.isfinite(r1[0])):
            return None
        nxt = [r0[k + 1] - r0[0] * r1[k + 1] / r1[0] for k in range(len(r0) - 1)]
        nxt.append(0.0)
        r0, r1 = r1, nxt
        col.append(r1[0])
    return col


def is_hurwitz(p: Polynomial) -> bool:
    """Routh-Hurwitz: every root strictly in the open left half-plane.

    A zero pivot means a root on or right of the imaginary axis, so the
    verdict is ``False`` rather than an epsilon perturbation.
    """
    if p.degree < 1:
        raise GainError("stability of a constant polynomial is undefined")
    col = _routh_first_column(list(p.highest_first()))
    return col is not None and all(c > 0 for c in col)


def is_schur(p: Polynomial) -> bool:
    """Schur-Cohn/Jury reduction: every root strictly inside the unit circle.

    Each step needs ``|a_0 / a_n| < 1``; equality (a root on the circle or a
    degenerate row) yields ``False``.
    """
    if p.degree < 1:
        raise GainError("stability of a constant polynomial is undefined")
    c = np.asarray(p.highest_first()[::-1], dtype=float)  # a_0 .. a_n
    while len(c) > 1:
        k = c[0] / c[-1]
        if not abs(k) < 1:
            return False
        # (a_n p(z) - a_0 z^n p(1/z)) / z, degree n-1
        c = (c[-1] * c - c[0] * c[::-1])[1:]
    return True


def place_observer_gain(A, C, desired: Polynomial) -> np.ndarray:
    """Observer gain ``K`` (column) with ``char_poly(A + K C) == desired``.

    Ackermann's formula on the dual pair ``(A^T, C^T)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m = A.shape[0]
    C = np.asarray(C, dtype=float).reshape(1, m)
    if desired.degree != m:
        raise GainError(f"desired polynomial must have degree {m}, got {desired.degree}")
    if not lti.is_observable_pair(A, C):
        raise GainError("pair (A, C) is not observable; poles cannot be placed")
    Wo = lti.observability_matrix(A, C)
    cond = np.linalg.cond(Wo)
    e_m = np.zeros(m)
    e_m[-1] = 1.0
    k = np.linalg.solve(Wo, e_m) @ desired.matrix_eval(A).T
    # k solves the dual problem: eig(A^T - C^T k) placed, i.e. K = -k^T
    K = -np.asarray(k).reshape(m, 1)
    got = lti.char_poly(A + K @ C)
    resid = np.max(np.abs(np.asarray(got.coeffs) - np.asarray(desired.coeffs)))
    if cond > OBSERVABILITY_COND_WARN or resid > PLACEMENT_TOL * max(1.0, np.abs(desired.coeffs).max()):
        warnings.warn(
            f"observer placement ill-conditioned (cond {cond:.3g}, coefficient residual {resid:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return K
