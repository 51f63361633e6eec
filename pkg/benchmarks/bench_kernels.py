"""Compare the compiled and numpy simulation kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each case is simulated with both backends; the table lists the best wall
time of ``--repeat`` runs, the speed-up and the largest state difference.
"""

import argparse
import time

import numpy as np

from hiord import _backend, engine, scenarios
from hiord.gains import default_continuous_coeffs, make_continuous_gains
from hiord.graph import directed_ring
from hiord.switching import SwitchingSignal


def big_ring(n_agents=200, m=4, duration=5.0):
    rng = np.random.default_rng(0)
    graphs = (directed_ring(n_agents), directed_ring(n_agents, reverse=True))
    return engine.Scenario(
        kind="state-feedback",
        gains=make_continuous_gains(default_continuous_coeffs(m)),
        signal=SwitchingSignal.periodic(graphs, slot=0.5),
        x0=rng.uniform(-5, 5, (n_agents, m)),
        duration=duration,
        decimate=100,
        name=f"ring N={n_agents}",
    )


def cases(quick):
    dur = 10.0 if quick else 60.0
    return [
        ("example1", scenarios.example1_scenario(duration=dur, decimate=10)),
        ("example2", scenarios.example2_scenario(duration=dur, decimate=10)),
        ("example3", scenarios.example3_scenario(steps=400)),
        ("ring N=200", big_ring(duration=1.0 if quick else 5.0)),
    ]


def best_time(sc, backend, repeat):
    best, tr = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        tr = engine.simulate(sc, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, tr


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="shorter horizons")
    args = ap.parse_args()
    try:
        _backend.get("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'case':<12} {'python [s]':>11} {'cython [s]':>11} {'speed-up':>9} {'max |diff|':>11}")
    for name, sc in cases(args.quick):
        tp, a = best_time(sc, "python", args.repeat)
        tc, b = best_time(sc, "cython", args.repeat)
        diff = float(np.abs(a.states - b.states).max())
        print(f"{name:<12} {tp:11.3f} {tc:11.3f} {tp / tc:8.1f}x {diff:11.1e}")


if __name__ == "__main__":
    main()
