"""Consensus of high-order integrator and general linear agents over switching digraphs."""

from . import analysis, engine, gains, graph, lti, protocols, scenarios, switching
from ._backend import NAME as BACKEND
from .engine import Scenario, Trajectory, detect_consensus, simulate
from .gains import make_continuous_gains, make_discrete_gains
from .graph import DirectedGraph, laplacian
from .switching import DiscreteSwitchingSignal, SwitchingSignal

__all__ = [
    "BACKEND",
    "DirectedGraph",
    "DiscreteSwitchingSignal",
    "Scenario",
    "SwitchingSignal",
    "Trajectory",
    "analysis",
    "detect_consensus",
    "engine",
    "gains",
    "graph",
    "laplacian",
    "lti",
    "make_continuous_gains",
    "make_discrete_gains",
    "protocols",
    "scenarios",
    "simulate",
    "switching",
]

__version__ = "0.1.0"
