"""Invariant suites run by ``hiord check``.

Each suite is a function returning a list of :class:`CheckResult`; they are
randomised but seeded, and sized to finish in seconds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import analysis, engine, gains, graph, lti, protocols, scenarios, switching

__all__ = ["CheckResult", "SUITES", "run_suite", "random_graph", "random_stochastic"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def random_graph(rng, n: int, density: float = 0.4, weighted: bool = False) -> graph.DirectedGraph:
    edges = []
    for i, j in itertools.permutations(range(n), 2):
        if rng.random() < density:
            edges.append((i, j, float(rng.uniform(0.1, 3.0)) if weighted else 1.0))
    return graph.DirectedGraph.from_edges(n, edges)


def random_stochastic(rng, n: int) -> np.ndarray:
    P = rng.random((n, n)) * (rng.random((n, n)) < 0.7)
    P[np.arange(n), rng.integers(0, n, n)] += 1e-3
    return P / P.sum(axis=1, keepdims=True)


def _closure_centers(g: graph.DirectedGraph) -> set:
    """Centers via Warshall transitive closure (independent of BFS)."""
    n = g.n_nodes
    R = np.eye(n, dtype=bool)
    for (i, j), _ in g.edges.items():
        R[j, i] = True  # information flows j -> i
    for k in range(n):
        R |= R[:, [k]] & R[[k], :]
    return {v for v in range(n) if R[v].all()}


def _ok(results, suite, name, cond, detail=""):
    results.append(CheckResult(suite, name, bool(cond), detail))


def check_graph(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out, bad_rows, bad_qsc, bad_sc = [], 0, 0, 0
    for _ in range(2000):
        n = int(rng.integers(1, 6))
        g = random_graph(rng, n, float(rng.uniform(0, 0.4)), weighted=True)
        bad_rows += np.abs(graph.laplacian(g).sum(axis=1)).max() > 1e-12
        ok, cs = graph.is_quasi_strongly_connected(g)
        bad_qsc += (cs != _closure_centers(g)) or (ok != bool(cs))
        bad_sc += graph.is_strongly_connected(g) and not ok
    _ok(out, "graph", "laplacian rows sum to zero", bad_rows == 0, f"{bad_rows} failures")
    _ok(out, "graph", "centers match transitive closure", bad_qsc == 0, f"{bad_qsc} disagreements")
    _ok(out, "graph", "strong implies quasi-strong", bad_sc == 0, f"{bad_sc} violations")
    g1, g2 = random_graph(rng, 5, weighted=True), random_graph(rng, 5, weighted=True)
    _ok(out, "graph", "union commutative", graph.union([g1, g2]) == graph.union([g2, g1]))
    return out


def check_switching(seed: int = 0) -> list:
    out = []
    sig = switching.SwitchingSignal.periodic(scenarios.example1_graphs(), slot=0.1)
    _ok(out, "switching", "example1 UJQSC at T=0.3", switching.verify_ujqsc(sig, 0.3))
    _ok(out, "switching", "example1 not UJQSC at T=0.1", not switching.verify_ujqsc(sig, 0.1))
    frozen = switching.SwitchingSignal.constant(scenarios.example1_graphs()[0])
    _ok(out, "switching", "frozen G1 never UJQSC", not any(switching.verify_ujqsc(frozen, T) for T in (0.1, 1, 10)))
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(100):
        gs = [random_graph(rng, 4, 0.25) for _ in range(3)]
        s = switching.SwitchingSignal.periodic(gs, slot=float(rng.uniform(0.05, 0.5)))
        verdicts = [switching.verify_ujqsc(s, T) for T in (0.1, 0.3, 0.6, 1.2, 2.4)]
        bad += any(a and not b for a, b in zip(verdicts, verdicts[1:]))
    _ok(out, "switching", "UJQSC monotone in T", bad == 0, f"{bad} violations")
    return out


def check_lti(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out, semigroup, roots, canon = [], 0.0, 0.0, 0.0
    for _ in range(50):
        m = int(rng.integers(2, 6))
        M = rng.normal(size=(m, m))
        t, s = rng.uniform(0, 1, 2)
        semigroup = max(semigroup, np.abs(lti.mat_exp(M, t + s) - lti.mat_exp(M, t) @ lti.mat_exp(M, s)).max())
        p = lti.char_poly(M)
        r = lti.poly_roots(p)
        roots = max(roots, max(abs(p(z)) / (1 + abs(z) ** p.degree) for z in r))
        sys = lti.LTISystem(M, rng.normal(size=m), rng.normal(size=m))
        if lti.is_controllable(sys):
            canon = max(canon, lti.to_controllable_canonical(sys).residual(sys))
    _ok(out, "lti", "mat_exp semigroup", semigroup < 1e-8, f"max err {semigroup:.2e}")
    _ok(out, "lti", "char_poly vanishes at roots", roots < 1e-8, f"max residual {roots:.2e}")
    _ok(out, "lti", "canonical form invariants", canon < 1e-9, f"max residual {canon:.2e}")
    return out


def check_gains(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out, ident, hur, sch = [], 0.0, 0, 0
    for _ in range(100):
        m = int(rng.integers(2, 9))
        A, B = lti.integrator_chain(m).A, lti.integrator_chain(m).B
        c = gains.make_continuous_gains(rng.normal(size=m - 1))
        d = gains.make_discrete_gains(rng.normal(size=m - 1))
        ident = max(ident,
                    np.abs(c.K2 @ (A + B @ c.K1[None, :])).max(),
                    abs(float(c.K2 @ B[:, 0]) - 1),
                    np.abs(d.K5 @ (A + B @ d.K4[None, :]) - d.K5).max())
    for _ in range(300):
        deg = int(rng.integers(1, 7))
        p = lti.Polynomial(tuple(rng.normal(size=deg) * rng.choice([0.3, 1, 3])))
        r = lti.poly_roots(p)
        hur += gains.is_hurwitz(p) != bool(np.max(r.real) < 0)
        sch += gains.is_schur(p) != bool(np.max(np.abs(r)) < 1)
    _ok(out, "gains", "gain identities", ident < 1e-12, f"max err {ident:.2e}")
    _ok(out, "gains", "Routh agrees with roots", hur == 0, f"{hur} disagreements")
    _ok(out, "gains", "Jury agrees with roots", sch == 0, f"{sch} disagreements")
    return out


def check_protocols(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out, red, agent, stoch = [], 0.0, 0.0, 0
    for _ in range(50):
        n, m = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        g = random_graph(rng, n, weighted=True)
        gs = gains.make_continuous_gains(rng.normal(size=m - 1))
        M = protocols.closed_loop_matrix(g, gs)
        I_K2 = np.kron(np.eye(n), gs.K2[None, :])
        red = max(red, np.abs(I_K2 @ M + graph.laplacian(g) @ I_K2).max())
        X = rng.normal(size=(n, m))
        sys = lti.integrator_chain(m)
        ref = np.concatenate([sys.A @ X[i] + sys.B[:, 0] * protocols.u_state_feedback(i, X, g, gs) for i in range(n)])
        agent = max(agent, np.abs(M @ X.reshape(-1) - ref).max())
        P = np.eye(n) - protocols.s_matrix(g)
        stoch += not (analysis.is_stochastic(P) and np.all(np.diag(P) > 0))
    _ok(out, "protocols", "reduction identity", red < 1e-12, f"max err {red:.2e}")
    _ok(out, "protocols", "closed loop equals agentwise law", agent < 1e-10, f"max err {agent:.2e}")
    _ok(out, "protocols", "I - S stochastic with positive diagonal", stoch == 0, f"{stoch} failures")
    return out


def check_analysis(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out, nonstoch, contr, sub = [], 0, 0, 0
    for _ in range(50):
        g = random_graph(rng, int(rng.integers(2, 7)), weighted=True)
        for delta in (0.01, 0.1, 1.0):
            nonstoch += not analysis.is_stochastic(lti.mat_exp(-graph.laplacian(g), delta))
    for _ in range(2000):
        n = int(rng.integers(2, 7))
        P, Q = random_stochastic(rng, n), random_stochastic(rng, n)
        r = rng.normal(size=n)
        contr += analysis.disagreement(P @ r) > analysis.ergodicity_coefficient(P) * analysis.disagreement(r) + 1e-12
        sub += analysis.ergodicity_coefficient(P @ Q) > analysis.ergodicity_coefficient(P) * analysis.ergodicity_coefficient(Q) + 1e-12
    _ok(out, "analysis", "exp(-L dt) stochastic", nonstoch == 0, f"{nonstoch} failures")
    _ok(out, "analysis", "disagreement contraction", contr == 0, f"{contr} violations")
    _ok(out, "analysis", "tau submultiplicative", sub == 0, f"{sub} violations")
    return out


def check_engine(seed: int = 0) -> list:
    out = []
    r1 = engine.lemma1_oracle((1, 3, 3), lambda t: 2 + math.exp(-t), 2.0, (0.5, -1.0, 0.3), 40.0)
    _ok(out, "engine", "lemma-1 limit", r1.error < 1e-4, f"err {r1.error:.2e}")
    r3 = engine.lemma3_oracle((1 / 8, 3 / 4, 3 / 2), lambda k: 1.0, 1.0, (0.3, -0.2, 0.9), 200)
    _ok(out, "engine", "lemma-3 limit", r3.error < 1e-6, f"err {r3.error:.2e}")
    sc = scenarios.example1_scenario(duration=5.0)
    a, b = engine.simulate(sc), engine.simulate(sc)
    _ok(out, "engine", "deterministic", np.array_equal(a.states, b.states))
    res = engine.reduction_residual(a, sc.gains, sc.signal)
    _ok(out, "engine", "reduction residual", res < 1e-4, f"{res:.2e}")
    mono = engine.monotone_envelope_violation(a, sc.gains.K2)
    _ok(out, "engine", "monotone envelopes", mono < 1e-9, f"{mono:.2e}")
    return out


def check_scenarios(seed: int = 0) -> list:
    out = []
    p = scenarios.FlexibleJointParams()
    tr = engine.simulate(scenarios.example1_scenario())
    q1, q2 = scenarios.robot_joint_limits(tr, p)
    gap = float(np.max(np.abs(q2[-1] - q1[-1] - p.mgl / p.k * np.sin(q1[-1]))))
    _ok(out, "scenarios", "example1 equilibrium identity", gap < 1e-3, f"{gap:.2e}")
    tr3 = engine.simulate(scenarios.example3_scenario(seed))
    spread = float(engine.disagreement_series(tr3)[-1].max())
    _ok(out, "scenarios", "example3 agreement", spread < 1e-6, f"{spread:.2e}")
    return out


SUITES = {
    "graph": check_graph,
    "switching": check_switching,
    "lti": check_lti,
    "gains": check_gains,
    "protocols": check_protocols,
    "analysis": check_analysis,
    "engine": check_engine,
    "scenarios": check_scenarios,
}


def run_suite(name: str, seed: int = 0) -> list:
    if name == "all":
        return [r for fn in SUITES.values() for r in fn(seed)]
    try:
        return SUITES[name](seed)
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'") from None
