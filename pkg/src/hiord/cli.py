"""Command-line front end.

::

    hiord run <name|path> [...] [--dt DT] [--duration S] [--steps K] [--seed N]
              [--tol TOL] [--out DIR] [--override key=value ...]
    hiord check <suite|all> [--seed N]
    hiord verify-topology <name|path> --window T

``run`` writes ``trajectory.csv``, ``summary.json`` and a ``plot/`` folder
(two-column data files plus a gnuplot script) into ``<out>/<scenario>/``.
The output root defaults to ``$HIORD_OUT`` or ``./hiord_out``.

Exit status of ``run``: 0 consensus, 1 no consensus, 2 divergence (guard
tripped, or sustained exponential growth), 3 bad input.  ``check`` and ``verify-topology`` exit 0 on success
and 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import _backend, checks, engine, scenarios
from .config import ConfigError, load_config, parse_config
from .constants import CONSENSUS_TOL, EQUILIBRIUM_TOL, MONOTONE_TOL, RESIDUAL_TOL
from .gains import make_continuous_gains, make_discrete_gains
from .switching import (
    DiscreteSwitchingSignal,
    discrete_verify_ujqsc,
    ujqsc_windows,
)

EXIT_OK, EXIT_NO_CONSENSUS, EXIT_DIVERGED, EXIT_BAD_INPUT = 0, 1, 2, 3
PLOT_POINTS = 2000
# a run still inside the guard is reported as diverging when max |x| grows
# exponentially over its second half and has outgrown its start by this factor
GROWTH_RATE = 1e-3
GROWTH_FACTOR = 1e3


# ------------------------------------------------------------------ inputs

def _parse_override(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"override must look like key=value, got {text!r}")
    key, value = text.split("=", 1)
    value = value.strip().strip('"').strip("'")
    if "," in value:
        return key.strip(), [float(v) for v in value.split(",") if v.strip()]
    try:
        return key.strip(), int(value)
    except ValueError:
        pass
    try:
        return key.strip(), float(value)
    except ValueError:
        return key.strip(), value


def _apply_overrides(sc: engine.Scenario, ov: dict) -> engine.Scenario:
    changes = {}
    g = sc.gains
    if "a" in ov or "K3" in ov:
        if sc.discrete:
            raise ValueError("'a'/'K3' apply to continuous scenarios; use 'b'/'K6'")
        g = make_continuous_gains(ov.get("a", g.a), ov.get("K3", g.K3))
    if "b" in ov or "K6" in ov:
        if not sc.discrete:
            raise ValueError("'b'/'K6' apply to discrete scenarios; use 'a'/'K3'")
        g = make_discrete_gains(ov.get("b", g.b), ov.get("K6", g.K6))
    if g is not sc.gains:
        changes["gains"] = g
    for key, cast in (("dt", float), ("duration", float), ("steps", int), ("decimate", int), ("guard", float)):
        if key in ov:
            changes[key] = cast(ov[key])
    unknown = set(ov) - {"a", "K3", "b", "K6", "dt", "duration", "steps", "decimate", "guard", "seed"}
    if unknown:
        raise ValueError(f"unknown override key(s): {sorted(unknown)}")
    return sc.replace(**changes) if changes else sc


def _collect_overrides(args) -> dict:
    ov = dict(args.override or [])
    for key in ("dt", "duration", "steps", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            ov[key] = val
    return ov


def load_scenario(source: str, overrides: dict | None = None) -> engine.Scenario:
    """Built-in name or TOML path, with overrides applied."""
    ov = dict(overrides or {})
    if source in scenarios.BUILTINS:
        kw = {}
        if "seed" in ov and source in ("example3", "balanced-rings"):
            kw["seed"] = int(ov["seed"])
        sc = scenarios.builtin(source, **kw)
        return _apply_overrides(sc, ov)
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(f"no built-in scenario or file named {source!r} (built-ins: {sorted(scenarios.BUILTINS)})")
    seed = ov.pop("seed", None)
    sc = load_config(path, {"seed": seed} if seed is not None else None)
    return _apply_overrides(sc, ov)


def _out_root(args) -> Path:
    return Path(args.out or os.environ.get("HIORD_OUT") or "hiord_out")


# ----------------------------------------------------------------- outputs

def _summary(sc: engine.Scenario, tr: engine.Trajectory, tol: float) -> dict:
    res = engine.detect_consensus(tr, tol=tol)
    grow = engine.growth_rate(tr)
    start = float(np.max(np.abs(tr.states[0]))) or 1.0
    red = engine.disagreement_series(tr, sc.reducer)
    comp = engine.disagreement_series(tr)
    out = {
        "scenario": sc.name,
        "kind": sc.kind,
        "backend": _backend.NAME,
        "n_agents": sc.n_agents,
        "order": sc.m,
        "dt": None if sc.discrete else sc.dt,
        "duration": None if sc.discrete else sc.duration,
        "steps": sc.steps if sc.discrete else None,
        "samples": tr.n_samples,
        "diverged": tr.diverged,
        "diverged_at": tr.diverged_at,
        "tolerance": tol,
        "consensus": res is not None,
        "x_star": None if res is None else [float(v) for v in res.x_star],
        "settle_time": None if res is None else res.settle_time,
        "final_state_spread": [float(v) for v in comp[-1]],
        "reduced_disagreement_initial": float(red[0]),
        "reduced_disagreement_final": float(red[-1]),
        "max_abs_state": float(np.max(np.abs(tr.states[-1]))),
        "growth_rate": grow,
        "diverging": tr.diverged or (grow > GROWTH_RATE and float(np.max(np.abs(tr.states[-1]))) > GROWTH_FACTOR * start),
        "checks": {},
    }
    if tr.observers is not None:
        out["observer_error_final"] = float(np.max(np.abs(tr.states[-1] - tr.observers[-1])))
    if not sc.discrete and sc.kind == "state-feedback" and not tr.diverged:
        res_r = engine.reduction_residual(tr, sc.gains, sc.signal) if sc.decimate == 1 else None
        mono = engine.monotone_envelope_violation(tr, sc.gains.K2)
        out["checks"]["monotone_envelopes"] = {"value": mono, "threshold": MONOTONE_TOL, "passed": mono < MONOTONE_TOL}
        if res_r is not None:
            out["checks"]["reduction_residual"] = {"value": res_r, "threshold": RESIDUAL_TOL, "passed": res_r < RESIDUAL_TOL}
    robot = sc.meta.get("robot")
    if robot is not None:
        q1, q2 = scenarios.robot_joint_limits(tr, robot)
        q1f, q2f = float(np.mean(q1[-1])), float(np.mean(q2[-1]))
        gap = float(np.max(np.abs(q2[-1] - q1[-1] - robot.mgl / robot.k * np.sin(q1[-1]))))
        out["joints"] = {"q1_star": q1f, "q2_star": q2f}
        out["checks"]["equilibrium_identity"] = {"value": gap, "threshold": EQUILIBRIUM_TOL, "passed": gap < EQUILIBRIUM_TOL}
    return out


def _write_plot_data(sc, tr: engine.Trajectory, folder: Path) -> None:
    folder.mkdir(parents=True, exist_ok=True)
    stride = max(1, tr.n_samples // PLOT_POINTS)
    idx = np.r_[np.arange(0, tr.n_samples, stride), tr.n_samples - 1]
    idx = np.unique(idx)
    series = [("x", tr.states)]
    if tr.observers is not None:
        series.append(("s", tr.observers))
    files = []
    for tag, arr in series:
        for i in range(arr.shape[1]):
            for c in range(arr.shape[2]):
                name = f"{tag}_{i + 1}_{c + 1}.dat"
                np.savetxt(folder / name, np.column_stack([tr.times[idx], arr[idx, i, c]]), fmt="%.10g")
                files.append((tag, i, c, name))
    lines = ["# gnuplot script: gnuplot -p plot.gp", "set key outside", f"set xlabel '{'step' if tr.discrete else 'time (s)'}'"]
    for tag, arr in series:
        for c in range(arr.shape[2]):
            lines.append(f"set title '{tag} component {c + 1}'")
            plots = [f"'{n}' using 1:2 with lines title 'agent {i + 1}'" for t, i, cc, n in files if t == tag and cc == c]
            lines.append("plot " + ", \\\n     ".join(plots))
            lines.append("pause -1")
    (folder / "plot.gp").write_text("\n".join(lines) + "\n")


def _run_one(sc: engine.Scenario, tr: engine.Trajectory, out_dir: Path, tol: float) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    engine.write_trajectory_csv(tr, out_dir / "trajectory.csv")
    summary = _summary(sc, tr, tol)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _write_plot_data(sc, tr, out_dir / "plot")
    name = sc.name or "scenario"
    if tr.diverged:
        unit = "step" if sc.discrete else "t ="
        print(f"{name}: DIVERGED at {unit} {tr.diverged_at:g} (max |x| > {sc.guard:g}); consensus false -> {out_dir}")
        return EXIT_DIVERGED
    if summary["consensus"]:
        xs = ", ".join(f"{v:.6g}" for v in summary["x_star"])
        extra = ""
        if "joints" in summary:
            extra = f"; q1* = {summary['joints']['q1_star']:.4f}, q2* = {summary['joints']['q2_star']:.4f}"
        print(f"{name}: consensus true, x* = ({xs}), settle {summary['settle_time']:.4g}{extra} -> {out_dir}")
        return EXIT_OK
    if summary["diverging"]:
        print(f"{name}: consensus false (diverging: max |x| = {summary['max_abs_state']:.3g}, "
              f"growth rate {summary['growth_rate']:.3g}/s) -> {out_dir}")
        return EXIT_DIVERGED
    print(f"{name}: consensus false (final spread {max(summary['final_state_spread']):.3g}) -> {out_dir}")
    return EXIT_NO_CONSENSUS


# ---------------------------------------------------------------- commands

def cmd_run(args) -> int:
    ov = _collect_overrides(args)
    try:
        scs = [load_scenario(src, ov) for src in args.sources]
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    trs = engine.simulate_many(scs, workers=args.workers)
    root = _out_root(args)
    codes = []
    for src, sc, tr in zip(args.sources, scs, trs):
        label = sc.name if sc.name in scenarios.BUILTINS else Path(src).stem
        codes.append(_run_one(sc, tr, root / label, args.tol))
    return max(codes)


def cmd_check(args) -> int:
    try:
        results = checks.run_suite(args.suite, seed=args.seed or 0)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_BAD_INPUT
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.suite}: {r.name}" + (f" ({r.detail})" if r.detail else ""))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def _topology_source(source: str):
    """Signal and configured window from a built-in name or a config file."""
    if source in scenarios.BUILTINS:
        return scenarios.builtin(source).signal, None
    text = Path(source).read_text(encoding="utf-8")
    data = parse_config(text)
    return load_config(source).signal, data.get("window")


def _fmt_nodes(nodes) -> str:
    return "{" + ",".join(str(v + 1) for v in sorted(nodes)) + "}" if nodes else "-"


def cmd_verify_topology(args) -> int:
    try:
        sig, window = _topology_source(args.source)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    T = args.window if args.window is not None else window
    if T is None:
        print("error: no window given (use --window or set 'window' in the config)", file=sys.stderr)
        return EXIT_BAD_INPUT
    if isinstance(sig, DiscreteSwitchingSignal):
        M = int(T)
        ok = discrete_verify_ujqsc(sig, M)
        print(f"discrete window M = {M}: UJQSC {'true' if ok else 'false'}")
        return 0 if ok else 1
    rows = ujqsc_windows(sig, float(T))
    print(f"{'start':>10} {'end':>10}  {'graphs':<12} centers")
    for start, end, idx, cs in rows:
        print(f"{start:10.4f} {end:10.4f}  {_fmt_nodes(idx):<12} {_fmt_nodes(cs)}")
    ok = all(cs for *_, cs in rows)
    scope = "complete (periodic)" if sig.is_periodic else f"horizon-limited to {sig.horizon:g} s"
    print(f"window T = {float(T):g}: UJQSC {'true' if ok else 'false'} [{scope}]")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hiord", description="High-order consensus simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate built-in scenarios or config files")
    r.add_argument("sources", nargs="+", metavar="name|path")
    r.add_argument("--dt", type=float)
    r.add_argument("--duration", type=float)
    r.add_argument("--steps", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--tol", type=float, default=CONSENSUS_TOL)
    r.add_argument("--out")
    r.add_argument("--workers", type=int, default=None, help="processes for multi-scenario runs")
    r.add_argument("--override", action="append", type=_parse_override, metavar="key=value",
                   help="override a scenario field, e.g. a=\"-1,3,3\"")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="run invariant suites")
    c.add_argument("suite", choices=sorted(checks.SUITES) + ["all"])
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("verify-topology", help="UJQSC window table for a switching signal")
    v.add_argument("source", metavar="name|path")
    v.add_argument("--window", type=float)
    v.set_defaults(func=cmd_verify_topology)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
