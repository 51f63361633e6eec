"""Built-in example scenarios and their physical plants.

``example1``
    Five single-link flexible-joint robots, feedback-linearised into
    fourth-order integrator chains, under state feedback.  Angles are in
    radians.
``example2``
    Four aircraft (vertical-motion model) under the general-LTI protocol
    with attitude-only measurements.
``example3``
    Four discrete-time fourth-order integrators with position output.

Examples 2 and 3 switch among four single-edge graphs that together form
a directed ring 1 -> 2 -> 3 -> 4 -> 1.  The topologies are a reconstruction:
only their joint connectivity is pinned down, not the individual edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Scenario, Trajectory, step_grid
from .gains import default_continuous_coeffs, make_continuous_gains, make_discrete_gains
from .graph import DirectedGraph, directed_ring, laplacian, parse_graph
from .lti import LTISystem
from .switching import DiscreteSwitchingSignal, SwitchingSignal

__all__ = [
    "FlexibleJointParams",
    "AircraftParams",
    "robot_rhs",
    "fl_state",
    "fl_inverse",
    "fl_control",
    "simulate_robot_network",
    "robot_joint_limits",
    "example1_graphs",
    "ring_pieces",
    "example1_scenario",
    "example2_scenario",
    "example3_scenario",
    "necessity_scenario",
    "balanced_rings_scenario",
    "BUILTINS",
    "builtin",
    "EXAMPLE1_Q0",
    "EXAMPLE2_K3",
    "EXAMPLE2_T_INV",
    "EXAMPLE3_K6",
]

# (q_{i,1}, q_{i,2}) for i = 1..5, radians
EXAMPLE1_Q0 = ((2.5, 1.5), (1.9, 3.14), (-2.4, -2.6), (1.57, -1.5), (-3.14, 0.0))
EXAMPLE2_K3 = (1 / 3, -2 / 3, -6.0, -7.0)
EXAMPLE2_T_INV = ((0, 0, 3, 0), (0, 0, 0, 3), (14, -4, -1, 0), (0, 14, -4, -1))
EXAMPLE2_X0 = ((0, 0, 8000, 0), (0, 0, 6500, 0), (0, 0, 7000, 0), (0, 0, 5000, 0))
EXAMPLE2_S0 = ((0, 0, 10000, 0), (0, 0, 7000, 0), (0, 0, 6000, 0), (0, 0, 4000, 0))
EXAMPLE3_K6 = (-2.0, -1.5, -0.5, -1 / 16)


@dataclass(frozen=True)
class FlexibleJointParams:
    """Link inertia ``I``, actuator inertia ``J``, link mass ``M``, gravity ``g``,
    centre-of-mass distance ``L`` and joint stiffness ``k``."""

    I: float = 1.0
    J: float = 3.2
    M: float = 1.5
    g: float = 9.8
    L: float = 0.8
    k: float = 2.5

    def __post_init__(self):
        for name in ("I", "J", "M", "g", "L", "k"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def mgl(self) -> float:
        return self.M * self.g * self.L


@dataclass(frozen=True)
class AircraftParams:
    """Vertical-motion aircraft model: inertia ``J``, mass ``m``, friction ``b``,
    elevator and wing lift slopes ``C_ZE``, ``C_ZW``, lever arms ``l``, ``d``."""

    J: float = 1.0
    m: float = 1.0
    b: float = 4.0
    C_ZE: float = 1.0
    C_ZW: float = 5.0
    l: float = 3.0
    d: float = 0.2

    def system(self) -> LTISystem:
        """State ``(alpha, alpha', h, h')``, input elevator angle, output ``h``."""
        A = np.array([
            [0.0, 1.0, 0.0, 0.0],
            [-(self.C_ZE * self.l + self.C_ZW * self.d) / self.J, -self.b / self.J, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [(self.C_ZE + self.C_ZW) / self.m, 0.0, 0.0, 0.0],
        ])
        B = np.array([0.0, self.C_ZE * self.l / self.J, 0.0, -self.C_ZE / self.m])
        C = np.array([0.0, 0.0, 1.0, 0.0])
        return LTISystem(A, B, C)


# ------------------------------------------------------------ robot maps

def robot_rhs(q1, q2, dq1, dq2, tau, p: FlexibleJointParams):
    """Joint accelerations ``(q1'', q2'')``."""
    spring = p.k * (q1 - q2)
    ddq1 = (-p.mgl * np.sin(q1) - spring) / p.I
    ddq2 = (tau + spring) / p.J
    return ddq1, ddq2


def fl_state(q1, dq1, q2, dq2, p: FlexibleJointParams) -> np.ndarray:
    """Linearising coordinates ``(q1, q1', q1'', q1''')``; stacks along the last axis."""
    q1, dq1, q2, dq2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (q1, dq1, q2, dq2)))
    x3 = -p.mgl * np.sin(q1) / p.I - p.k * (q1 - q2) / p.I
    x4 = -p.mgl * dq1 * np.cos(q1) / p.I - p.k * (dq1 - dq2) / p.I
    return np.stack([q1, dq1, x3, x4], axis=-1)


def fl_inverse(x, p: FlexibleJointParams):
    """Inverse of :func:`fl_state`: returns ``(q1, dq1, q2, dq2)``."""
    x = np.asarray(x, dtype=float)
    q1, dq1, x3, x4 = (x[..., c] for c in range(4))
    q2 = q1 + (p.I * x3 + p.mgl * np.sin(q1)) / p.k
    dq2 = dq1 + (p.I * x4 + p.mgl * dq1 * np.cos(q1)) / p.k
    return q1, dq1, q2, dq2


def fl_control(u, q1, dq1, q2, dq2, p: FlexibleJointParams):
    """Torque that makes ``d/dt fl_state(...)[3] == u``.

    Derived by differentiating the fourth linearising coordinate along the
    joint dynamics; the spring term enters with a minus sign.
    """
    A = p.mgl / p.I
    c, s = np.cos(q1), np.sin(q1)
    spring = p.k / p.I * (q1 - q2)
    inner = u - A * s * (dq1**2 + A * c + p.k / p.I) - spring * (p.k / p.I + p.k / p.J + A * c)
    return p.I * p.J / p.k * inner


def simulate_robot_network(q0, gains, signal: SwitchingSignal, duration: float, dt: float = 1e-3,
                           p: FlexibleJointParams | None = None, sample_every: int = 1):
    """Integrate the nonlinear joints under ``fl_control`` of the state-feedback law.

    ``q0`` has rows ``(q1, q2)`` (zero initial rates).  Returns the sample
    times and an array of shape ``(samples, N, 4)`` holding
    ``(q1, dq1, q2, dq2)`` per robot.
    """
    p = p or FlexibleJointParams()
    q0 = np.asarray(q0, dtype=float)
    N = q0.shape[0]
    y = np.zeros((N, 4))
    y[:, 0], y[:, 2] = q0[:, 0], q0[:, 1]
    laps = [laplacian(g) for g in signal.graphs]

    def f(v, L):
        q1, dq1, q2, dq2 = v.T
        x = fl_state(q1, dq1, q2, dq2, p)
        u = x @ gains.K1 - (L @ x) @ gains.K2
        tau = fl_control(u, q1, dq1, q2, dq2, p)
        ddq1, ddq2 = robot_rhs(q1, q2, dq1, dq2, tau, p)
        return np.stack([dq1, ddq1, dq2, ddq2], axis=1)

    times, hs, gidx = step_grid(signal, duration, dt)
    out_t, out_y = [0.0], [y.copy()]
    for n, (h, g) in enumerate(zip(hs, gidx)):
        L = laps[g]
        k1 = f(y, L)
        k2 = f(y + 0.5 * h * k1, L)
        k3 = f(y + 0.5 * h * k2, L)
        k4 = f(y + h * k3, L)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if (n + 1) % sample_every == 0 or n + 1 == len(hs):
            out_t.append(times[n + 1])
            out_y.append(y.copy())
    return np.asarray(out_t), np.asarray(out_y)


# -------------------------------------------------------------- topologies

def example1_graphs() -> tuple:
    return (
        parse_graph(5, ["2 <- 1", "4 <- 1", "5 <- 3"]),
        parse_graph(5, ["1 <- 5", "2 <- 3", "2 <- 4"]),
        parse_graph(5, ["3 <- 2", "3 <- 4", "4 <- 5"]),
    )


def ring_pieces(n: int = 4) -> tuple:
    """The directed ring ``1 -> 2 -> ... -> n -> 1`` split into single-edge graphs."""
    return tuple(DirectedGraph.from_edges(n, [((i + 1) % n, i)]) for i in range(n))


# ---------------------------------------------------------------- examples

def example1_scenario(duration: float = 60.0, dt: float = 1e-3, a=(1.0, 3.0, 3.0),
                      p: FlexibleJointParams | None = None, decimate: int = 1) -> Scenario:
    p = p or FlexibleJointParams()
    q = np.asarray(EXAMPLE1_Q0)
    x0 = fl_state(q[:, 0], 0.0, q[:, 1], 0.0, p)
    return Scenario(
        kind="state-feedback",
        gains=make_continuous_gains(a),
        signal=SwitchingSignal.periodic(example1_graphs(), slot=0.1),
        x0=x0,
        duration=duration,
        dt=dt,
        decimate=decimate,
        name="example1",
        meta={"robot": p, "q0": EXAMPLE1_Q0},
    )


def example2_scenario(duration: float = 100.0, dt: float = 1e-3, decimate: int = 1,
                      K3=EXAMPLE2_K3, a=(1.0, 3.0, 3.0)) -> Scenario:
    plant = AircraftParams().system()
    return Scenario(
        kind="general-lti",
        gains=make_continuous_gains(a, K3=K3),
        signal=SwitchingSignal.periodic(ring_pieces(4), slot=0.1),
        x0=np.asarray(EXAMPLE2_X0, dtype=float),
        s0=np.asarray(EXAMPLE2_S0, dtype=float),
        duration=duration,
        dt=dt,
        plant=plant,
        decimate=decimate,
        name="example2",
        meta={"aircraft": AircraftParams()},
    )


def example3_scenario(seed: int = 0, steps: int = 400, K6=EXAMPLE3_K6, b=(1 / 8, 3 / 4, 3 / 2)) -> Scenario:
    """Initial states uniform on ``[-5, 5]^4`` from ``numpy.random.default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    return Scenario(
        kind="discrete",
        gains=make_discrete_gains(b, K6=K6),
        signal=DiscreteSwitchingSignal.periodic(ring_pieces(4)),
        x0=rng.uniform(-5.0, 5.0, size=(4, 4)),
        s0=np.zeros((4, 4)),
        steps=steps,
        name="example3",
        meta={"seed": seed},
    )


def necessity_scenario(duration: float = 200.0, dt: float = 1e-3, decimate: int = 10) -> Scenario:
    """Example 1 with ``a = (-1, 3, 3)``, whose polynomial has a right-half-plane root."""
    sc = example1_scenario(duration=duration, dt=dt, a=(-1.0, 3.0, 3.0), decimate=decimate)
    return sc.replace(name="necessity")


def balanced_rings_scenario(seed: int = 0, n_agents: int = 5, m: int = 3, duration: float = 60.0,
                            dt: float = 1e-3, slot: float = 0.5, decimate: int = 1) -> Scenario:
    """Alternate a directed ring and its reverse (both balanced); random initials."""
    rng = np.random.default_rng(seed)
    graphs = (directed_ring(n_agents), directed_ring(n_agents, reverse=True))
    return Scenario(
        kind="state-feedback",
        gains=make_continuous_gains(default_continuous_coeffs(m)),
        signal=SwitchingSignal.periodic(graphs, slot=slot),
        x0=rng.uniform(-5.0, 5.0, size=(n_agents, m)),
        duration=duration,
        dt=dt,
        decimate=decimate,
        name="balanced-rings",
        meta={"seed": seed},
    )


def robot_joint_limits(tr: Trajectory, p: FlexibleJointParams | None = None):
    """Map a linearised-coordinate trajectory back to joint angles ``(q1, q2)``."""
    p = p or FlexibleJointParams()
    q1, _, q2, _ = fl_inverse(tr.states, p)
    return q1, q2


BUILTINS = {
    "example1": example1_scenario,
    "example2": example2_scenario,
    "example3": example3_scenario,
    "necessity": necessity_scenario,
    "balanced-rings": balanced_rings_scenario,
}


def builtin(name: str, **kwargs) -> Scenario:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown built-in scenario {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**kwargs)
