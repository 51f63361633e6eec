import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from hiord.graph import DirectedGraph


@st.composite
def digraphs(draw, min_nodes=1, max_nodes=6, weighted=True):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = list(itertools.permutations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    if weighted:
        ws = draw(st.lists(st.floats(0.1, 5.0), min_size=len(chosen), max_size=len(chosen)))
    else:
        ws = [1.0] * len(chosen)
    return DirectedGraph.from_edges(n, [(i, j, w) for (i, j), w in zip(chosen, ws)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
