import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiord import _backend
from hiord.engine import simulate
from hiord.scenarios import example1_scenario, example3_scenario, necessity_scenario

from conftest import digraphs

try:
    _backend.get("cython")
    HAVE_CYTHON = True
except ImportError:
    HAVE_CYTHON = False

needs_cython = pytest.mark.skipif(not HAVE_CYTHON, reason="compiled extension not built")


def csr(graphs):
    n = graphs[0].n_nodes
    ptr = np.zeros((len(graphs), n + 1), dtype=np.intp)
    idx, wts = [], []
    for g, graph in enumerate(graphs):
        ptr[g, 0] = len(idx)
        for i in range(n):
            for j, w in graph.neighbors(i):
                idx.append(j)
                wts.append(w)
            ptr[g, i + 1] = len(idx)
    return ptr, np.asarray(idx, dtype=np.intp), np.asarray(wts)


@needs_cython
@settings(max_examples=40, deadline=None)
@given(st.lists(digraphs(min_nodes=4, max_nodes=4), min_size=1, max_size=3), st.integers(0, 2**32 - 1))
def test_rk4_backends_agree(graphs, seed):
    rng = np.random.default_rng(seed)
    d, N, steps = 3, 4, 50
    P, Q = rng.normal(size=(d, d)), rng.normal(size=(d, d))
    ptr, idx, wts = csr(graphs)
    g = rng.integers(0, len(graphs), steps).astype(np.intp)
    h = rng.uniform(1e-3, 2e-2, steps)
    y0 = rng.normal(size=(N, d))
    store = np.ones(steps + 1, dtype=np.uint8)
    a = _backend.get("python").rk4_network(P, Q, ptr, idx, wts, g, h, y0, store, 1e12)
    b = _backend.get("cython").rk4_network(P, Q, ptr, idx, wts, g, h, y0, store, 1e12)
    assert a[1] == b[1]
    # the two kernels sum neighbours in different orders
    np.testing.assert_allclose(a[0], b[0], rtol=1e-10, atol=1e-12 * np.abs(a[0]).max())


@needs_cython
@settings(max_examples=40, deadline=None)
@given(st.lists(digraphs(min_nodes=4, max_nodes=4), min_size=1, max_size=3), st.integers(0, 2**32 - 1))
def test_map_backends_agree(graphs, seed):
    rng = np.random.default_rng(seed)
    d, N, steps = 3, 4, 30
    P, Q = rng.normal(size=(d, d)) * 0.5, rng.normal(size=(d, d)) * 0.5
    ptr, idx, wts = csr(graphs)
    g = rng.integers(0, len(graphs), steps).astype(np.intp)
    y0 = rng.normal(size=(N, d))
    store = (rng.random(steps + 1) < 0.5).astype(np.uint8)
    store[-1] = 1
    a = _backend.get("python").map_network(P, Q, ptr, idx, wts, g, y0, store, 1e12)
    b = _backend.get("cython").map_network(P, Q, ptr, idx, wts, g, y0, store, 1e12)
    assert a[1] == b[1]
    # the two kernels sum neighbours in different orders
    np.testing.assert_allclose(a[0], b[0], rtol=1e-10, atol=1e-12 * np.abs(a[0]).max())


@needs_cython
@pytest.mark.parametrize("factory", [
    lambda: example1_scenario(duration=3.0),
    lambda: example3_scenario(seed=5),
    lambda: necessity_scenario(duration=120.0, dt=1e-2, decimate=1),
])
def test_scenarios_identical_across_backends(factory):
    sc = factory()
    a, b = simulate(sc, backend="python"), simulate(sc, backend="cython")
    assert a.diverged_at == b.diverged_at
    np.testing.assert_allclose(a.states, b.states, rtol=1e-11, atol=1e-11)
    np.testing.assert_array_equal(a.times, b.times)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get("fortran")


def test_pure_python_switch():
    env = dict(os.environ, HIORD_PURE_PYTHON="1")
    code = "import hiord; print(hiord.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_cython
def test_compiled_backend_selected_by_default():
    env = {k: v for k, v in os.environ.items() if k != "HIORD_PURE_PYTHON"}
    code = "import hiord; print(hiord.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"
