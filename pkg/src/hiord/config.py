"""TOML scenario files.

Schema (all graph and agent indices are 1-based)::

    kind = "state-feedback"   # output-feedback | general-lti | discrete
    n_agents = 5
    order = 4
    dt = 0.001                # continuous kinds
    duration = 60.0
    steps = 400               # discrete kind
    decimate = 1
    window = 0.3              # UJQSC window: seconds, or steps when discrete

    [gains]
    a = [1, 3, 3]             # continuous; discrete uses b
    K3 = [..]                 # optional observer gain (K6 when discrete)
    observer_poles = [-2, -2, -2, -2]   # used when K3/K6 is absent

    [plant]                   # optional; required for general-lti
    A = [[..], ..]
    B = [..]
    C = [..]

    [[graphs]]
    edges = ["2 <- 1", "4 <- 1 : 0.5"]

    [schedule]                # optional with a single graph (held constant)
    periodic = { slot = 0.1, cycle = [1, 2, 3] }
    # explicit = { times = [0, 0.25], indices = [1, 2], horizon = 10 }
    # discrete: periodic = { cycle = [..] } or explicit = { indices = [..] }

    [initial]
    x = [[..], ..]            # or: seed = 0, uniform = [-5, 5]
    s = [[..], ..]            # observer kinds; defaults to zeros
"""

from __future__ import annotations

import re
import sys

import numpy as np

from .engine import Scenario
from .gains import (
    default_observer_poly,
    make_continuous_gains,
    make_discrete_gains,
    place_observer_gain,
)
from .graph import GraphError, parse_graph
from .lti import LTISystem, Polynomial, integrator_chain
from .switching import DiscreteSwitchingSignal, SwitchingSignal

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ["ConfigError", "load_config", "parse_config", "scenario_from_dict", "window_from_dict"]


class ConfigError(ValueError):
    """Invalid scenario file; ``line``/``col`` locate the problem when known."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + where)


def _locate(text: str, needle: str):
    """1-based (line, column) of the first occurrence of ``needle``."""
    if not text or not needle:
        return None, None
    pos = text.find(needle)
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _key_pos(text: str, key: str):
    m = re.search(rf"^\s*{re.escape(key)}\s*=", text or "", flags=re.M)
    if not m:
        return _locate(text, key)
    return _locate(text, m.group(0).strip())


def parse_config(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(exc))
        raise ConfigError(f"TOML syntax error: {msg}", line, col) from None


def load_config(path, overrides: dict | None = None) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    data = parse_config(text)
    if overrides:
        data = _merge_overrides(data, overrides)
    return scenario_from_dict(data, text=text, name=str(path))


def _merge_overrides(data: dict, overrides: dict) -> dict:
    data = dict(data)
    gains = dict(data.get("gains", {}))
    initial = dict(data.get("initial", {}))
    for key, value in overrides.items():
        if key in ("a", "b", "K3", "K6"):
            gains[key] = value
        elif key == "seed":
            initial["seed"] = value
        else:
            data[key] = value
    data["gains"] = gains
    data["initial"] = initial
    return data


def _need(d: dict, key: str, text: str, where: str = ""):
    if key not in d:
        raise ConfigError(f"missing required key {where + key!r}")
    return d[key]


def _array(value, key: str, text: str, shape=None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must be numeric", *_key_pos(text, key)) from None
    if shape is not None and arr.shape != shape:
        raise ConfigError(f"{key!r} must have shape {shape}, got {arr.shape}", *_key_pos(text, key))
    return arr


def _graphs(data: dict, n: int, text: str) -> tuple:
    entries = _need(data, "graphs", text)
    if not isinstance(entries, list) or not entries:
        raise ConfigError("'graphs' must be a non-empty array of tables", *_key_pos(text, "graphs"))
    out = []
    for entry in entries:
        edges = entry.get("edges", [])
        try:
            out.append(parse_graph(n, edges))
        except GraphError as exc:
            bad = next((e for e in edges if _bad_literal(n, e)), None)
            raise ConfigError(f"invalid graph: {exc}", *_locate(text, bad)) from None
    return tuple(out)


def _bad_literal(n: int, literal: str) -> bool:
    try:
        parse_graph(n, [literal])
    except GraphError:
        return True
    return False


def _indices(seq, n_graphs: int, key: str, text: str) -> list:
    out = []
    for v in seq:
        if not isinstance(v, int) or not 1 <= v <= n_graphs:
            raise ConfigError(f"{key!r} entries must be graph numbers 1..{n_graphs}, got {v!r}", *_key_pos(text, key))
        out.append(v - 1)
    return out


def _signal(data: dict, graphs: tuple, discrete: bool, text: str):
    if "schedule" not in data:
        if len(graphs) > 1:
            raise ConfigError("several graphs need a [schedule]", *_key_pos(text, "graphs"))
        if discrete:
            return DiscreteSwitchingSignal.periodic(graphs)
        return SwitchingSignal.constant(graphs[0])
    sched = data["schedule"]
    if ("periodic" in sched) == ("explicit" in sched):
        raise ConfigError("[schedule] needs exactly one of 'periodic' or 'explicit'", *_key_pos(text, "schedule"))
    if "periodic" in sched:
        rule = sched["periodic"]
        cycle = _indices(rule.get("cycle", range(1, len(graphs) + 1)), len(graphs), "cycle", text)
        if discrete:
            return DiscreteSwitchingSignal.periodic(graphs, cycle)
        slot = rule.get("slot")
        if slot is None:
            raise ConfigError("periodic schedule needs 'slot' (seconds)", *_key_pos(text, "periodic"))
        return SwitchingSignal.periodic(graphs, float(slot), cycle, horizon=float(rule.get("horizon", float("inf"))))
    rule = sched["explicit"]
    idx = _indices(_need(rule, "indices", text, "schedule.explicit."), len(graphs), "indices", text)
    if discrete:
        return DiscreteSwitchingSignal.explicit(graphs, idx)
    times = _need(rule, "times", text, "schedule.explicit.")
    horizon = rule.get("horizon", data.get("duration"))
    if horizon is None:
        raise ConfigError("explicit schedule needs 'horizon' or a top-level 'duration'", *_key_pos(text, "explicit"))
    return SwitchingSignal.explicit(graphs, times, idx, float(horizon))


def _plant(data: dict, m: int, text: str) -> LTISystem | None:
    if "plant" not in data:
        return None
    p = data["plant"]
    if "A" not in p:
        chain = integrator_chain(m)
        C = _array(p.get("C", chain.C), "C", text).reshape(-1)
        return integrator_chain(m, C)
    return LTISystem(
        _array(p["A"], "A", text, (m, m)),
        _array(_need(p, "B", text, "plant."), "B", text).reshape(-1),
        _array(_need(p, "C", text, "plant."), "C", text).reshape(-1),
    )


def _observer_gain(g: dict, key: str, plant: LTISystem, discrete: bool, text: str):
    m = plant.order
    if key in g:
        return _array(g[key], key, text).reshape(-1)
    if "observer_poles" in g:
        poly = Polynomial.from_roots(_array(g["observer_poles"], "observer_poles", text).reshape(-1))
    else:
        poly = default_observer_poly(m, discrete)
    return place_observer_gain(plant.A, plant.C, poly).reshape(-1)


def _initial_block(init: dict, key: str, shape, text: str, default_zero: bool):
    if key in init:
        return _array(init[key], key, text, shape)
    if "uniform" in init:
        lo, hi = init["uniform"]
        rng = np.random.default_rng(int(init.get("seed", 0)) + (0 if key == "x" else 1))
        return rng.uniform(lo, hi, size=shape) if key == "x" else np.zeros(shape)
    if default_zero:
        return np.zeros(shape)
    raise ConfigError(f"[initial] needs '{key}' or 'uniform'", *_key_pos(text, "initial"))


def scenario_from_dict(data: dict, text: str = "", name: str = "") -> Scenario:
    """Build a :class:`Scenario` from a parsed config tree."""
    kind = data.get("kind", "state-feedback")
    discrete = kind == "discrete"
    n = int(_need(data, "n_agents", text))
    m = int(_need(data, "order", text))
    graphs = _graphs(data, n, text)
    signal = _signal(data, graphs, discrete, text)
    plant = _plant(data, m, text)
    g = data.get("gains", {})
    try:
        if discrete:
            plant = plant or integrator_chain(m)
            b = _array(_need(g, "b", text, "gains."), "b", text).reshape(-1)
            gains = make_discrete_gains(b, _observer_gain(g, "K6", plant, True, text))
        else:
            a = _array(_need(g, "a", text, "gains."), "a", text).reshape(-1)
            K3 = None
            if kind != "state-feedback":
                plant = plant or integrator_chain(m)
                K3 = _observer_gain(g, "K3", plant, False, text)
            gains = make_continuous_gains(a, K3)
        init = data.get("initial", {})
        x0 = _initial_block(init, "x", (n, m), text, default_zero=False)
        s0 = None if kind == "state-feedback" else _initial_block(init, "s", (n, m), text, default_zero=True)
        kw = dict(
            kind=kind, gains=gains, signal=signal, x0=x0, s0=s0, plant=plant,
            decimate=int(data.get("decimate", 1)), name=data.get("name", name),
        )
        if "dt" in data:
            kw["dt"] = float(data["dt"])
        if discrete:
            kw["steps"] = int(_need(data, "steps", text))
        else:
            kw["duration"] = float(_need(data, "duration", text))
        if "guard" in data:
            kw["guard"] = float(data["guard"])
        return Scenario(**kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def window_from_dict(data: dict):
    return data.get("window")
