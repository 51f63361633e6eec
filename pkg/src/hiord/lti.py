"""Dense linear-systems toolkit for single-input, single-output agents.

Sizes are small by design (state dimension up to ~10), so everything is
plain dense numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import CANONICAL_TOL, RANK_TOL

__all__ = [
    "Polynomial",
    "LTISystem",
    "CanonicalForm",
    "LTIError",
    "mat_exp",
    "char_poly",
    "poly_roots",
    "integrator_chain",
    "controllability_matrix",
    "observability_matrix",
    "is_controllable",
    "is_observable_pair",
    "is_detectable_pair",
    "to_controllable_canonical",
    "matrix_rank",
]


class LTIError(ValueError):
    pass


def _square(M, name="matrix") -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise LTIError(f"{name} must be square, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class Polynomial:
    """Monic polynomial ``s^d + c[d-1] s^(d-1) + ... + c[0]``.

    ``coeffs`` holds ``c[0] .. c[d-1]`` (lowest order first); the leading one
    is implicit.  With this layout the gain coefficient vector ``a`` of the
    continuous protocol *is* its characteristic polynomial:
    ``Polynomial(a)`` is ``s^(m-1) + a[m-2] s^(m-2) + ... + a[0]``.
    """

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @classmethod
    def from_highest_first(cls, full) -> "Polynomial":
        """From ``[p_d, p_(d-1), ..., p_0]`` (numpy ``poly`` order); normalised to monic."""
        full = np.asarray(full, dtype=float)
        if full.size == 0 or full[0] == 0:
            raise LTIError("leading coefficient must be non-zero")
        full = full / full[0]
        return cls(tuple(full[:0:-1]))

    @classmethod
    def from_roots(cls, roots) -> "Polynomial":
        return cls.from_highest_first(np.real_if_close(np.poly(np.asarray(roots)), tol=1e6))

    @classmethod
    def binomial(cls, degree: int, root: float) -> "Polynomial":
        """``(s - root)^degree``."""
        return cls.from_roots([root] * degree)

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def highest_first(self) -> np.ndarray:
        return np.concatenate([[1.0], np.asarray(self.coeffs[::-1], dtype=float)])

    def __call__(self, s):
        return np.polyval(self.highest_first(), s)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial.from_highest_first(np.polymul(self.highest_first(), other.highest_first()))

    def matrix_eval(self, M) -> np.ndarray:
        """Evaluate at a square matrix (Horner)."""
        M = _square(M)
        out = np.eye(M.shape[0])
        for c in self.coeffs[::-1]:
            out = out @ M + c * np.eye(M.shape[0])
        return out


# Pade(13) numerator coefficients and the scaling threshold for degree 13.
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def mat_exp(M, t: float = 1.0) -> np.ndarray:
    """``exp(M t)`` by scaling and squaring with the degree-13 diagonal Pade approximant."""
    A = _square(M) * t
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    if norm == 0:
        return np.eye(n)
    s = max(0, int(math.ceil(math.log2(norm / _THETA13)))) if norm > _THETA13 else 0
    A = A / (2.0 ** s)
    b = _PADE13
    I = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    return E


def char_poly(M) -> Polynomial:
    """``det(sI - M)`` by the Faddeev-LeVerrier recursion."""
    A = _square(M)
    n = A.shape[0]
    coeffs = [0.0] * n
    Mk = np.zeros_like(A)
    c = 1.0
    for k in range(1, n + 1):
        Mk = A @ Mk + c * np.eye(n)
        c = -np.trace(A @ Mk) / k
        coeffs[n - k] = c
    return Polynomial(tuple(coeffs))


def poly_roots(p: Polynomial) -> np.ndarray:
    """All roots, as eigenvalues of the companion matrix."""
    if p.degree < 1:
        raise LTIError("a degree-0 polynomial has no roots")
    d = p.degree
    comp = np.zeros((d, d))
    comp[:-1, 1:] = np.eye(d - 1)
    comp[-1, :] = -np.asarray(p.coeffs)
    return np.linalg.eigvals(comp)


@dataclass(frozen=True)
class LTISystem:
    """Single-input single-output plant ``x' = A x + B u, y = C x``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = _square(self.A, "A")
        m = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(-1, 1)
        C = np.asarray(self.C, dtype=float).reshape(1, -1)
        if B.shape[0] != m or C.shape[1] != m:
            raise LTIError(f"inconsistent shapes A{A.shape} B{B.shape} C{C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def order(self) -> int:
        return self.A.shape[0]


def integrator_chain(m: int, C=None) -> LTISystem:
    """Chain of ``m`` integrators; output defaults to the first state."""
    if m < 1:
        raise LTIError("order must be at least 1")
    A = np.eye(m, k=1)
    B = np.zeros((m, 1))
    B[-1, 0] = 1.0
    if C is None:
        C = np.eye(1, m)
    return LTISystem(A, B, C)


def matrix_rank(M, rel_tol: float = RANK_TOL) -> int:
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def controllability_matrix(sys: LTISystem) -> np.ndarray:
    """``[B, AB, ..., A^(m-1) B]``."""
    cols = [sys.B[:, 0]]
    for _ in range(sys.order - 1):
        cols.append(sys.A @ cols[-1])
    return np.column_stack(cols)


def observability_matrix(A, C) -> np.ndarray:
    A = _square(A, "A")
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    rows = [C]
    for _ in range(A.shape[0] - 1):
        rows.append(rows[-1] @ A)
    return np.vstack(rows)


def is_controllable(sys: LTISystem) -> bool:
    W = controllability_matrix(sys)
    if not np.any(W):
        return False
    return matrix_rank(W) == sys.order


def _pbh_ok(A, C, lam) -> bool:
    m = A.shape[0]
    stacked = np.vstack([lam * np.eye(m) - A, C.astype(complex)])
    sv = np.linalg.svd(stacked, compute_uv=False)
    scale = max(1.0, np.linalg.norm(A, 2))
    return bool(sv[-1] > RANK_TOL * scale)


def is_observable_pair(A, C) -> bool:
    A = _square(A, "A")
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    return all(_pbh_ok(A, C, lam) for lam in np.linalg.eigvals(A))


def is_detectable_pair(A, C) -> bool:
    """PBH rank test at every eigenvalue with non-negative real part."""
    A = _square(A, "A")
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    return all(_pbh_ok(A, C, lam) for lam in np.linalg.eigvals(A) if lam.real >= -RANK_TOL)


@dataclass(frozen=True)
class CanonicalForm:
    """Controllable canonical coordinates ``w = T x``.

    ``T A T^-1`` has ones on the superdiagonal and ``a`` in its last row
    (not negated), and ``T B = e_m``.  The characteristic polynomial of ``A``
    is therefore ``s^m - a[m-1] s^(m-1) - ... - a[0]``.
    """

    T: np.ndarray
    T_inv: np.ndarray
    a: np.ndarray

    def residual(self, sys: LTISystem) -> float:
        m = sys.order
        target = np.eye(m, k=1)
        target[-1, :] = self.a
        e_m = np.zeros((m, 1))
        e_m[-1, 0] = 1.0
        return max(np.abs(self.T @ sys.A @ self.T_inv - target).max(),
                   np.abs(self.T @ sys.B - e_m).max())


def to_controllable_canonical(sys: LTISystem) -> CanonicalForm:
    """Stack ``q, qA, ..., qA^(m-1)`` where ``q`` is the last row of the inverse
    controllability matrix."""
    if not is_controllable(sys):
        raise LTIError("pair (A, B) is not controllable")
    W = controllability_matrix(sys)
    q = np.linalg.solve(W.T, np.eye(sys.order)[-1])
    rows = [q]
    for _ in range(sys.order - 1):
        rows.append(rows[-1] @ sys.A)
    T = np.vstack(rows)
    T_inv = np.linalg.inv(T)
    a = (T @ sys.A @ T_inv)[-1, :].copy()
    canon = CanonicalForm(T, T_inv, a)
    res = canon.residual(sys)
    if res > CANONICAL_TOL * max(1.0, np.abs(sys.A).max()):
        raise LTIError(f"canonical transformation ill-conditioned (residual {res:.3g})")
    return canon
