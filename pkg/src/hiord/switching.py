"""Piecewise-constant topology signals and joint-connectivity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .graph import DirectedGraph, is_quasi_strongly_connected, union

__all__ = [
    "SwitchingSignal",
    "DiscreteSwitchingSignal",
    "SignalError",
    "graph_at",
    "switch_times_in",
    "verify_ujqsc",
    "ujqsc_windows",
    "discrete_verify_ujqsc",
]

# Two instants closer than this are treated as the same instant.
TIME_EPS = 1e-9


class SignalError(ValueError):
    pass


def _snap_floor(x: float) -> int:
    """floor(x), except values within TIME_EPS below an integer round up."""
    r = round(x)
    if abs(x - r) <= TIME_EPS * max(1.0, abs(x)):
        return int(r)
    return math.floor(x)


def _check_graphs(graphs: Sequence[DirectedGraph]) -> tuple:
    graphs = tuple(graphs)
    if not graphs:
        raise SignalError("a switching signal needs at least one graph")
    n = graphs[0].n_nodes
    if any(g.n_nodes != n for g in graphs):
        raise SignalError("all graphs in a switching signal must share one node count")
    return graphs


@dataclass(frozen=True)
class SwitchingSignal:
    """Continuous-time switching signal over a finite family of graphs.

    Use :meth:`periodic`, :meth:`explicit` or :meth:`constant` to build one.
    Graph indices are zero-based.  The active graph on ``[t_k, t_{k+1})`` is
    the one selected at ``t_k`` (right-continuous).
    """

    graphs: tuple
    slot: float | None = None
    cycle: tuple | None = None
    times: tuple | None = None
    indices: tuple | None = None
    horizon: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "graphs", _check_graphs(self.graphs))
        if not self.horizon > 0:
            raise SignalError(f"horizon must be positive, got {self.horizon}")
        periodic = self.slot is not None
        if periodic == (self.times is not None):
            raise SignalError("give either a periodic rule or an explicit schedule")
        if periodic:
            if not self.slot > 0:
                raise SignalError(f"slot length must be positive, got {self.slot}")
            if not self.cycle:
                raise SignalError("periodic rule needs a non-empty cycle")
            used = self.cycle
        else:
            if math.isinf(self.horizon):
                raise SignalError("explicit schedules need a finite horizon")
            if len(self.times) != len(self.indices) or not self.times:
                raise SignalError("times and indices must be non-empty and of equal length")
            if self.times[0] != 0:
                raise SignalError("an explicit schedule must start at t = 0")
            if any(b <= a for a, b in zip(self.times, self.times[1:])):
                raise SignalError("switch times must be strictly increasing")
            if self.times[-1] >= self.horizon:
                raise SignalError("last switch time must lie before the horizon")
            used = self.indices
        for k in used:
            if not 0 <= k < len(self.graphs):
                raise SignalError(f"graph index {k} out of range (have {len(self.graphs)} graphs)")

    @classmethod
    def periodic(cls, graphs, slot, cycle=None, horizon=math.inf):
        """Cycle through ``cycle`` (default ``0..K-1``), holding each for ``slot`` seconds."""
        graphs = tuple(graphs)
        cycle = tuple(range(len(graphs))) if cycle is None else tuple(int(c) for c in cycle)
        return cls(graphs, slot=float(slot), cycle=cycle, horizon=horizon)

    @classmethod
    def explicit(cls, graphs, times, indices, horizon):
        return cls(tuple(graphs), times=tuple(float(t) for t in times),
                   indices=tuple(int(i) for i in indices), horizon=float(horizon))

    @classmethod
    def constant(cls, graph, horizon=math.inf):
        return cls((graph,), slot=1.0, cycle=(0,), horizon=horizon)

    @property
    def n_nodes(self) -> int:
        return self.graphs[0].n_nodes

    @property
    def is_periodic(self) -> bool:
        return self.slot is not None

    @property
    def period(self) -> float:
        if not self.is_periodic:
            raise SignalError("explicit schedules have no period")
        return self.slot * len(self.cycle)

    @property
    def dwell_time(self) -> float:
        """Smallest gap between consecutive switch instants."""
        if self.is_periodic:
            return self.slot
        gaps = [b - a for a, b in zip(self.times, self.times[1:])]
        return min(gaps) if gaps else self.horizon

    def _check_time(self, t):
        if t < -TIME_EPS or t > self.horizon + TIME_EPS:
            raise SignalError(f"time {t} outside [0, {self.horizon}]")

    def index_at(self, t: float) -> int:
        self._check_time(t)
        if self.is_periodic:
            return self.cycle[_snap_floor(t / self.slot) % len(self.cycle)]
        k = 0
        for n, tk in enumerate(self.times):
            if tk <= t + TIME_EPS:
                k = n
        return self.indices[k]

    def graph_at(self, t: float) -> DirectedGraph:
        return self.graphs[self.index_at(t)]

    def switch_times_in(self, t0: float, t1: float) -> list:
        """Switch instants strictly inside ``(t0, t1)``."""
        if t1 < t0:
            raise SignalError(f"empty interval ({t0}, {t1})")
        if self.is_periodic:
            if len(self.cycle) == 1:
                return []
            k0 = _snap_floor(t0 / self.slot) + 1
            out = []
            k = k0
            while True:
                tk = k * self.slot
                if tk >= t1 - TIME_EPS:
                    break
                if tk > t0 + TIME_EPS:
                    out.append(tk)
                k += 1
            return out
        return [tk for tk in self.times[1:] if t0 + TIME_EPS < tk < t1 - TIME_EPS]

    def indices_on(self, t0: float, t1: float) -> set:
        """Graph indices active somewhere on ``[t0, t1)``."""
        active = {self.index_at(t0)}
        active.update(self.index_at(tk) for tk in self.switch_times_in(t0, t1))
        return active

    def union_on(self, t0: float, t1: float) -> DirectedGraph:
        return union([self.graphs[k] for k in sorted(self.indices_on(t0, t1))])


def graph_at(sig: SwitchingSignal, t: float) -> DirectedGraph:
    return sig.graph_at(t)


def switch_times_in(sig: SwitchingSignal, t0: float, t1: float) -> list:
    return sig.switch_times_in(t0, t1)


def _window_starts(sig: SwitchingSignal, T: float, horizon: float) -> list:
    if sig.is_periodic:
        events = [k * sig.slot for k in range(_snap_floor(horizon / sig.slot) + 1)]
    else:
        events = list(sig.times)
    starts = {0.0}
    starts.update(events)
    starts.update(tk - T for tk in events if tk - T > 0)
    return sorted(t for t in starts if t + T <= horizon + TIME_EPS)


def ujqsc_windows(sig: SwitchingSignal, T: float, horizon: float | None = None) -> list:
    """Per-window table ``(start, end, active indices, centers)``.

    Only the finitely many window starts at which the active set can change
    are inspected: ``0``, every switch time ``t_k`` and every ``t_k - T``.
    Periodic signals are inspected over one period plus a window, which is
    complete; explicit schedules are only certified up to ``horizon``.
    """
    if not T > 0:
        raise SignalError(f"window length must be positive, got {T}")
    if horizon is None:
        horizon = sig.horizon
    if sig.is_periodic:
        horizon = min(horizon, sig.period + T + sig.slot)
    if T > horizon + TIME_EPS:
        raise SignalError(f"window {T} longer than the inspected horizon {horizon}")
    rows = []
    for t in _window_starts(sig, T, horizon):
        idx = sig.indices_on(t, t + T)
        _, c = is_quasi_strongly_connected(union([sig.graphs[k] for k in sorted(idx)]))
        rows.append((t, t + T, tuple(sorted(idx)), c))
    return rows


def verify_ujqsc(sig: SwitchingSignal, T: float, horizon: float | None = None) -> bool:
    """Every window union ``[t, t + T)`` within the horizon has a center node."""
    return all(c for *_, c in ujqsc_windows(sig, T, horizon))


@dataclass(frozen=True)
class DiscreteSwitchingSignal:
    """Step-indexed switching: ``cycle`` repeats forever, ``indices`` is a finite list."""

    graphs: tuple
    cycle: tuple | None = None
    indices: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "graphs", _check_graphs(self.graphs))
        if (self.cycle is None) == (self.indices is None):
            raise SignalError("give exactly one of cycle or indices")
        used = self.cycle if self.cycle is not None else self.indices
        if not used:
            raise SignalError("empty step rule")
        for k in used:
            if not 0 <= k < len(self.graphs):
                raise SignalError(f"graph index {k} out of range (have {len(self.graphs)} graphs)")

    @classmethod
    def periodic(cls, graphs, cycle=None):
        graphs = tuple(graphs)
        cycle = tuple(range(len(graphs))) if cycle is None else tuple(int(c) for c in cycle)
        return cls(graphs, cycle=cycle)

    @classmethod
    def explicit(cls, graphs, indices):
        return cls(tuple(graphs), indices=tuple(int(i) for i in indices))

    @property
    def n_nodes(self) -> int:
        return self.graphs[0].n_nodes

    @property
    def length(self) -> float:
        """Number of defined steps (infinite for periodic rules)."""
        return math.inf if self.cycle is not None else len(self.indices)

    def index_at(self, k: int) -> int:
        if k < 0:
            raise SignalError(f"negative step {k}")
        if self.cycle is not None:
            return self.cycle[k % len(self.cycle)]
        if k >= len(self.indices):
            raise SignalError(f"step {k} beyond the explicit schedule ({len(self.indices)} steps)")
        return self.indices[k]

    def graph_at(self, k: int) -> DirectedGraph:
        return self.graphs[self.index_at(k)]


def discrete_verify_ujqsc(sig: DiscreteSwitchingSignal, M: int, horizon: int | None = None) -> bool:
    """Every union over steps ``k..k+M`` with ``k + M < horizon`` has a center.

    For periodic rules the default horizon spans one period plus a window,
    which covers every distinct window.
    """
    if M < 0:
        raise SignalError(f"window length M must be non-negative, got {M}")
    if horizon is None:
        horizon = len(sig.cycle) + M + 1 if sig.cycle is not None else len(sig.indices)
    if sig.cycle is not None:
        horizon = min(horizon, len(sig.cycle) + M + 1)
    for k in range(0, horizon - M):
        g = union([sig.graph_at(s) for s in range(k, k + M + 1)])
        if not is_quasi_strongly_connected(g)[0]:
            return False
    return True
