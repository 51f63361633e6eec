"""Deterministic simulation of consensus scenarios and numerical oracles.

Continuous scenarios are integrated with classical fixed-step RK4 on a
grid that has every switch instant as a step boundary, so the topology is
constant inside each step.  Discrete scenarios iterate the exact
recursion.  Both run through the kernels selected in :mod:`hiord._backend`.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .constants import (
    CONSENSUS_TOL,
    CONSENSUS_WINDOW_FRACTION,
    DEFAULT_DT,
    DIVERGENCE_GUARD,
)
from .gains import ContinuousGainSet, DiscreteGainSet
from .graph import is_balanced, laplacian
from .lti import CanonicalForm, LTISystem, to_controllable_canonical
from .protocols import (
    AgentBlock,
    discrete_block,
    general_lti_block,
    output_feedback_block,
    s_matrix,
    state_feedback_block,
)
from .switching import TIME_EPS, DiscreteSwitchingSignal, SwitchingSignal

__all__ = [
    "KINDS",
    "Scenario",
    "Trajectory",
    "ConsensusResult",
    "ScenarioError",
    "DivergenceError",
    "build_block",
    "step_grid",
    "simulate",
    "simulate_continuous",
    "simulate_discrete",
    "simulate_many",
    "disagreement_series",
    "detect_consensus",
    "predict_balanced_consensus",
    "monotone_envelope_violation",
    "reduction_residual",
    "fit_decay_rate",
    "growth_rate",
    "lemma1_oracle",
    "lemma3_oracle",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

KINDS = ("state-feedback", "output-feedback", "general-lti", "discrete")


class ScenarioError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Raised by the oracles when the state exceeds the divergence guard."""


@dataclass(frozen=True, eq=False)
class Scenario:
    """One simulation setup.

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    gains : ContinuousGainSet or DiscreteGainSet
    signal : SwitchingSignal or DiscreteSwitchingSignal
    x0 : array, shape (N, m)
        Initial plant states.
    s0 : array, shape (N, m), optional
        Initial observer states; required for observer-based kinds.
    duration : float
        Simulated seconds (continuous kinds).
    steps : int
        Number of steps (discrete kind).
    dt : float
        Nominal RK4 step; shortened where needed to land on switch times.
    plant : LTISystem, optional
        Plant for ``general-lti``; supplies ``C`` for the other observer kinds.
    canon : CanonicalForm, optional
        Canonical form of ``plant``; computed when omitted.
    decimate : int
        Keep every ``decimate``-th sample (the final sample is always kept).
    guard : float
        Divergence threshold on the max-abs state.
    name : str
    meta : dict
        Free-form annotations (e.g. physical parameters of an example).
    """

    kind: str
    gains: ContinuousGainSet | DiscreteGainSet
    signal: SwitchingSignal | DiscreteSwitchingSignal
    x0: np.ndarray
    s0: np.ndarray | None = None
    duration: float = 0.0
    steps: int = 0
    dt: float = DEFAULT_DT
    plant: LTISystem | None = None
    canon: CanonicalForm | None = None
    decimate: int = 1
    guard: float = DIVERGENCE_GUARD
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")
        discrete = self.kind == "discrete"
        if discrete != isinstance(self.gains, DiscreteGainSet):
            raise ScenarioError(f"kind {self.kind!r} does not match gain set {type(self.gains).__name__}")
        if discrete != isinstance(self.signal, DiscreteSwitchingSignal):
            raise ScenarioError(f"kind {self.kind!r} does not match signal {type(self.signal).__name__}")
        x0 = np.array(self.x0, dtype=float, ndmin=2)
        N, m = self.signal.n_nodes, self.gains.m
        if x0.shape != (N, m):
            raise ScenarioError(f"x0 must have shape ({N}, {m}), got {x0.shape}")
        object.__setattr__(self, "x0", x0)
        if self.kind != "state-feedback":
            if self.s0 is None:
                raise ScenarioError(f"kind {self.kind!r} needs initial observer states s0")
            s0 = np.array(self.s0, dtype=float, ndmin=2)
            if s0.shape != (N, m):
                raise ScenarioError(f"s0 must have shape ({N}, {m}), got {s0.shape}")
            object.__setattr__(self, "s0", s0)
        if self.kind == "general-lti" and self.plant is None:
            raise ScenarioError("general-lti scenarios need a plant")
        if self.plant is not None and self.plant.order != m:
            raise ScenarioError(f"plant order {self.plant.order} does not match gain order {m}")
        if not self.dt > 0:
            raise ScenarioError(f"dt must be positive, got {self.dt}")
        if self.decimate < 1:
            raise ScenarioError(f"decimate must be >= 1, got {self.decimate}")
        if discrete:
            if self.steps < 1:
                raise ScenarioError("discrete scenarios need steps >= 1")
        else:
            if not self.duration > 0:
                raise ScenarioError("continuous scenarios need a positive duration")
            if self.duration > self.signal.horizon + TIME_EPS:
                raise ScenarioError(f"duration {self.duration} exceeds the signal horizon {self.signal.horizon}")
            if _switches(self.signal) and self.dt > self.signal.dwell_time + TIME_EPS:
                raise ScenarioError(f"dt {self.dt} exceeds the dwell time {self.signal.dwell_time}")

    @property
    def n_agents(self) -> int:
        return self.signal.n_nodes

    @property
    def m(self) -> int:
        return self.gains.m

    @property
    def discrete(self) -> bool:
        return self.kind == "discrete"

    @property
    def reducer(self) -> np.ndarray:
        """Row vector mapping a plant state to its reduced first-order value."""
        if self.discrete:
            return self.gains.K5
        if self.kind == "general-lti":
            return self.gains.K2 @ self._canon().T
        return self.gains.K2

    def _canon(self) -> CanonicalForm:
        return self.canon if self.canon is not None else to_controllable_canonical(self.plant)

    def replace(self, **changes) -> "Scenario":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return Scenario(**kw)


def _switches(sig: SwitchingSignal) -> bool:
    if sig.is_periodic:
        return len(set(sig.cycle)) > 1
    return len(sig.times) > 1


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled simulation output.

    ``states`` and ``observers`` have shape ``(samples, N, m)``; ``controls``
    has shape ``(samples, N)``.  ``graph_index`` is the (zero-based) graph
    active from each sample onward.  ``diverged_at`` is the first time (or
    step) at which the guard tripped, else ``None``.
    """

    times: np.ndarray
    graph_index: np.ndarray
    states: np.ndarray
    observers: np.ndarray | None = None
    controls: np.ndarray | None = None
    diverged_at: float | None = None
    discrete: bool = False

    @property
    def n_samples(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None


def build_block(sc: Scenario) -> AgentBlock:
    if sc.kind == "state-feedback":
        return state_feedback_block(sc.gains)
    C = sc.plant.C if sc.plant is not None else None
    if sc.kind == "output-feedback":
        return output_feedback_block(sc.gains, C)
    if sc.kind == "general-lti":
        return general_lti_block(sc.plant, sc.gains, sc._canon())
    return discrete_block(sc.gains, C)


def _csr(graphs: Sequence, normalise: bool):
    """Stack receiver adjacency lists of every graph into one CSR layout."""
    n = graphs[0].n_nodes
    ptr = np.zeros((len(graphs), n + 1), dtype=np.intp)
    idx, wts = [], []
    for g, graph in enumerate(graphs):
        ptr[g, 0] = len(idx)
        for i in range(n):
            nb = graph.neighbors(i)
            scale = 1.0 / (1.0 + sum(w for _, w in nb)) if normalise else 1.0
            for j, w in nb:
                idx.append(j)
                wts.append(w * scale)
            ptr[g, i + 1] = len(idx)
    return ptr, np.asarray(idx, dtype=np.intp), np.asarray(wts, dtype=float)


def step_grid(sig: SwitchingSignal, duration: float, dt: float):
    """Step start times, lengths and active graph indices.

    Each inter-switch segment is split into ``ceil(len / dt)`` equal steps,
    so switch instants are always step boundaries.  Returns
    ``(times, h, graph)`` where ``times`` has one more entry than ``h``.
    """
    marks = [0.0] + sig.switch_times_in(0.0, duration) + [float(duration)]
    times, hs, gidx = [0.0], [], []
    for a, b in zip(marks, marks[1:]):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        h = (b - a) / n
        g = sig.index_at(a)
        for k in range(1, n + 1):
            times.append(a + k * h if k < n else b)
        hs.extend([h] * n)
        gidx.extend([g] * n)
    return np.asarray(times), np.asarray(hs), np.asarray(gidx, dtype=np.intp)


def _store_mask(n_steps: int, decimate: int) -> np.ndarray:
    mask = np.zeros(n_steps + 1, dtype=np.uint8)
    mask[::decimate] = 1
    mask[-1] = 1
    return mask


def _initial(sc: Scenario) -> np.ndarray:
    if sc.kind == "state-feedback":
        return sc.x0.copy()
    return np.hstack([sc.x0, sc.s0])


def _controls(block: AgentBlock, Y: np.ndarray, gidx: np.ndarray, graphs, discrete: bool) -> np.ndarray:
    u = np.empty(Y.shape[:2])
    for g in np.unique(gidx):
        sel = gidx == g
        M = s_matrix(graphs[g]) if discrete else laplacian(graphs[g])
        coupling = -np.einsum("ij,sjk->sik", M, Y[sel])
        u[sel] = Y[sel] @ block.u_state + coupling @ block.u_coupling
    return u


def _package(sc: Scenario, block: AgentBlock, samples, sample_times, sample_graph, bad) -> Trajectory:
    Y = np.asarray(samples)
    m = sc.m
    controls = _controls(block, Y, sample_graph, sc.signal.graphs, sc.discrete)
    return Trajectory(
        times=sample_times,
        graph_index=sample_graph,
        states=Y[:, :, :m].copy(),
        observers=Y[:, :, m:].copy() if block.has_observer else None,
        controls=controls,
        diverged_at=bad,
        discrete=sc.discrete,
    )


def simulate_continuous(sc: Scenario, backend: str | None = None) -> Trajectory:
    """RK4 integration of a continuous scenario."""
    if sc.discrete:
        raise ScenarioError("use simulate_discrete for discrete scenarios")
    block = build_block(sc)
    kern = _backend.get(backend)
    times, hs, gidx = step_grid(sc.signal, sc.duration, sc.dt)
    ptr, idx, wts = _csr(sc.signal.graphs, normalise=False)
    mask = _store_mask(len(hs), sc.decimate)
    samples, bad_step = kern.rk4_network(
        np.ascontiguousarray(block.drift), np.ascontiguousarray(block.coupling),
        ptr, idx, wts, gidx, hs, _initial(sc), mask, float(sc.guard),
    )
    kept = np.flatnonzero(mask)
    bad = None
    if bad_step >= 0:
        kept = np.append(kept[kept < bad_step], bad_step)
        bad = float(times[bad_step])
    # graph active from each sample onward (right-continuous); the last
    # sample has no step after it, so ask the signal directly
    after = np.append(gidx, sc.signal.index_at(times[-1]))
    return _package(sc, block, samples, times[kept], after[kept], bad)


def simulate_discrete(sc: Scenario, backend: str | None = None) -> Trajectory:
    """Exact iteration of a discrete scenario."""
    if not sc.discrete:
        raise ScenarioError("use simulate_continuous for continuous scenarios")
    block = build_block(sc)
    kern = _backend.get(backend)
    n = sc.steps
    gidx = np.asarray([sc.signal.index_at(k) for k in range(n + 1)], dtype=np.intp)
    ptr, idx, wts = _csr(sc.signal.graphs, normalise=True)
    mask = _store_mask(n, sc.decimate)
    samples, bad_step = kern.map_network(
        np.ascontiguousarray(block.drift), np.ascontiguousarray(block.coupling),
        ptr, idx, wts, gidx[:n], _initial(sc), mask, float(sc.guard),
    )
    kept = np.flatnonzero(mask)
    bad = None
    if bad_step >= 0:
        kept = np.append(kept[kept < bad_step], bad_step)
        bad = float(bad_step)
    return _package(sc, block, samples, kept.astype(float), gidx[kept], bad)


def simulate(sc: Scenario, backend: str | None = None) -> Trajectory:
    return simulate_discrete(sc, backend) if sc.discrete else simulate_continuous(sc, backend)


def simulate_many(scenarios: Sequence[Scenario], workers: int | None = None) -> list:
    """Run independent scenarios in worker processes; results keep input order."""
    scenarios = list(scenarios)
    if workers == 1 or len(scenarios) <= 1:
        return [simulate(sc) for sc in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(simulate, scenarios))


# ---------------------------------------------------------------- analysis

def disagreement_series(tr: Trajectory, reducer=None, observers: bool = False) -> np.ndarray:
    """Per-sample ``max - min`` across agents.

    With ``reducer`` (a row vector) the reduced scalar states are compared
    and the result has shape ``(samples,)``; otherwise each state component
    is compared separately, giving ``(samples, m)``.
    """
    X = tr.observers if observers else tr.states
    if X is None:
        raise ValueError("trajectory has no observer states")
    if reducer is not None:
        r = X @ np.asarray(reducer, dtype=float).reshape(-1)
        return r.max(axis=1) - r.min(axis=1)
    return X.max(axis=1) - X.min(axis=1)


@dataclass(frozen=True)
class ConsensusResult:
    x_star: np.ndarray
    settle_time: float
    spread: float


def detect_consensus(tr: Trajectory, tol: float = CONSENSUS_TOL, window: float = CONSENSUS_WINDOW_FRACTION):
    """Consensus verdict for a trajectory, or ``None``.

    A sample is settled when every pair of agents agrees within ``tol``
    (infinity norm) and every agent is within ``tol`` of its final state.
    The settle time is the earliest sample after which all samples are
    settled; consensus requires that to cover at least the trailing
    ``window`` fraction of the run.  ``x*`` is the mean final state.
    """
    if tr.diverged or tr.n_samples == 0:
        return None
    X = tr.states
    if not np.all(np.isfinite(X)):
        return None
    spread = (X.max(axis=1) - X.min(axis=1)).max(axis=1)
    movement = np.abs(X - X[-1]).max(axis=(1, 2))
    ok = (spread < tol) & (movement < tol)
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    first = 0 if bad.size == 0 else bad[-1] + 1
    t0, t1 = tr.times[0], tr.times[-1]
    settle = float(tr.times[first])
    if tr.n_samples > 1 and t1 - settle < window * (t1 - t0) - TIME_EPS:
        return None
    return ConsensusResult(X[-1].mean(axis=0), settle, float(spread[-1]))


def predict_balanced_consensus(x0, gains: ContinuousGainSet, signal: SwitchingSignal | None = None) -> np.ndarray:
    """``((1 / (a1 N)) sum_i K2 x_i(0), 0, ..., 0)`` for balanced topologies."""
    X = np.array(x0, dtype=float, ndmin=2)
    if signal is not None:
        used = signal.cycle if signal.is_periodic else signal.indices
        if not all(is_balanced(signal.graphs[k]) for k in set(used)):
            raise ScenarioError("prediction requires every graph in the signal to be balanced")
    a1 = gains.a[0]
    if a1 == 0:
        raise ScenarioError("a1 = 0: the consensus formula is undefined")
    out = np.zeros(gains.m)
    out[0] = float(np.mean(X @ gains.K2)) / a1
    return out


def _reduced(tr: Trajectory, K, observers: bool) -> np.ndarray:
    X = tr.observers if observers else tr.states
    return X @ np.asarray(K, dtype=float).reshape(-1)


def monotone_envelope_violation(tr: Trajectory, K, observers: bool = False) -> float:
    """Largest increase of ``max_i K x_i`` or decrease of ``min_i K x_i`` between samples."""
    r = _reduced(tr, K, observers)
    hi, lo = r.max(axis=1), r.min(axis=1)
    if len(r) < 2:
        return 0.0
    return float(max(np.max(np.diff(hi)), np.max(-np.diff(lo)), 0.0))


def reduction_residual(tr: Trajectory, gains, signal: SwitchingSignal, K=None,
                       observers: bool = False, order: int = 4) -> float:
    """``max || dXbar/dt + L(t) Xbar ||_inf`` over interior samples.

    ``dXbar/dt`` is a central finite difference of the given ``order``
    (2: three-point, 4: five-point) on a uniformly spaced stencil; samples
    whose stencil touches a topology switch are skipped.  ``K`` defaults to
    ``gains.K2``.
    """
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    K = gains.K2 if K is None else K
    r = _reduced(tr, K, observers)
    t, g = tr.times, tr.graph_index
    half = order // 2
    if len(t) < 2 * half + 1:
        return 0.0
    lap = {k: laplacian(signal.graphs[k]) for k in np.unique(g)}
    worst = 0.0
    for k in range(half, len(t) - half):
        span = slice(k - half, k + half + 1)
        if np.any(g[span] != g[k]):
            continue
        steps = np.diff(t[span])
        h = steps.mean()
        if np.ptp(steps) > 1e-9 * h:
            continue
        if order == 2:
            d = (r[k + 1] - r[k - 1]) / (2 * h)
        else:
            d = (r[k - 2] - 8 * r[k - 1] + 8 * r[k + 1] - r[k + 2]) / (12 * h)
        worst = max(worst, float(np.max(np.abs(d + lap[g[k]] @ r[k]))))
    return worst


def growth_rate(tr: Trajectory) -> float:
    """Fitted exponential rate of ``max |x|`` over the second half of the run."""
    mags = np.abs(tr.states).max(axis=(1, 2))
    half = tr.n_samples // 2
    t, v = tr.times[half:], mags[half:]
    if len(t) < 2 or np.any(v <= 0):
        return 0.0
    return float(np.polyfit(t, np.log(v), 1)[0])


def fit_decay_rate(times, values, floor: float = 0.0, t_min: float | None = None, t_max: float | None = None) -> float:
    """Least-squares slope of ``log(values)`` against time.

    Only points with ``values > floor`` inside ``[t_min, t_max]`` are used;
    a negative slope is a decay rate.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = v > max(floor, 0.0)
    if t_min is not None:
        sel &= t >= t_min
    if t_max is not None:
        sel &= t <= t_max
    if np.count_nonzero(sel) < 2:
        raise ValueError("not enough points above the floor to fit a rate")
    slope, _ = np.polyfit(t[sel], np.log(v[sel]), 1)
    return float(slope)


# ----------------------------------------------------------------- oracles

@dataclass(frozen=True)
class OracleResult:
    final: np.ndarray
    limit: np.ndarray

    @property
    def error(self) -> float:
        return float(np.max(np.abs(self.final - self.limit)))


def lemma1_oracle(a, f: Callable[[float], float], f_star: float, initial, t_end: float,
                  dt: float = DEFAULT_DT, guard: float = DIVERGENCE_GUARD) -> OracleResult:
    """Integrate ``r^(m-1) + a_{m-1} r^(m-2) + ... + a_1 r = f(t)``.

    Returns the final ``(r, r', ..., r^(m-2))`` alongside the predicted
    limit ``(f*/a_1, 0, ..., 0)``.  Raises :class:`DivergenceError` when
    ``|r|`` exceeds ``guard``.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    d = a.size
    r = np.array(initial, dtype=float).reshape(-1)
    if r.size != d:
        raise ValueError(f"need {d} initial values, got {r.size}")
    # companion form of the ODE
    F = np.zeros((d, d))
    F[:-1, 1:] = np.eye(d - 1)
    F[-1] = -a
    e = np.zeros(d)
    e[-1] = 1.0

    def rhs(t, v):
        return F @ v + e * f(t)

    n = max(1, math.ceil(t_end / dt - 1e-9))
    h = t_end / n
    for k in range(n):
        t = k * h
        k1 = rhs(t, r)
        k2 = rhs(t + 0.5 * h, r + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, r + 0.5 * h * k2)
        k4 = rhs(t + h, r + h * k3)
        r = r + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(r)) or np.max(np.abs(r)) > guard:
            raise DivergenceError(f"lemma-1 ODE diverged at t = {t + h:.6g}")
    limit = np.zeros(d)
    limit[0] = f_star / a[0] if a[0] != 0 else math.nan
    return OracleResult(r, limit)


def lemma3_oracle(b, f: Callable[[int], float], f_star: float, initial, k_end: int,
                  guard: float = DIVERGENCE_GUARD) -> OracleResult:
    """Iterate ``r[k+m-1] + b_{m-1} r[k+m-2] + ... + b_1 r[k] = f[k]``.

    Returns ``r[k_end]`` alongside the predicted limit ``f* / (1 + sum b)``.
    Raises :class:`DivergenceError` when ``|r|`` exceeds ``guard``.
    """
    b = np.asarray(b, dtype=float).reshape(-1)
    d = b.size
    hist = [float(v) for v in np.asarray(initial, dtype=float).reshape(-1)]
    if len(hist) != d:
        raise ValueError(f"need {d} initial values, got {len(hist)}")
    k = 0
    while k + d <= k_end:
        nxt = f(k) - sum(b[j] * hist[k + j] for j in range(d))
        if not math.isfinite(nxt) or abs(nxt) > guard:
            raise DivergenceError(f"lemma-3 recursion diverged at k = {k + d}")
        hist.append(nxt)
        k += 1
    return OracleResult(np.array([hist[k_end]]), np.array([f_star / (1.0 + b.sum())]))


# --------------------------------------------------------------------- csv

def _csv_header(N: int, m: int, with_obs: bool) -> list:
    head = ["time", "graph"] + [f"x_{i}_{c}" for i in range(1, N + 1) for c in range(1, m + 1)]
    if with_obs:
        head += [f"s_{i}_{c}" for i in range(1, N + 1) for c in range(1, m + 1)]
    return head


def write_trajectory_csv(tr: Trajectory, path) -> None:
    """One row per sample: time, graph (1-based), states, then observers."""
    S, N, m = tr.states.shape
    with_obs = tr.observers is not None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_csv_header(N, m, with_obs))
        for k in range(S):
            row = [f"{tr.times[k]:.17g}", str(int(tr.graph_index[k]) + 1)]
            row += [f"{v:.17g}" for v in tr.states[k].reshape(-1)]
            if with_obs:
                row += [f"{v:.17g}" for v in tr.observers[k].reshape(-1)]
            w.writerow(row)


def read_trajectory_csv(path, discrete: bool = False) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    xs = [h for h in head if h.startswith("x_")]
    N = max(int(h.split("_")[1]) for h in xs)
    m = max(int(h.split("_")[2]) for h in xs)
    with_obs = any(h.startswith("s_") for h in head)
    data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), -1)
    states = data[:, 2 : 2 + N * m].reshape(-1, N, m)
    obs = data[:, 2 + N * m :].reshape(-1, N, m) if with_obs else None
    return Trajectory(
        times=data[:, 0].copy(),
        graph_index=data[:, 1].astype(np.intp) - 1,
        states=states,
        observers=obs,
        discrete=discrete,
    )

