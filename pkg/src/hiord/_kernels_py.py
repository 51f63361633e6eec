"""Pure-Python (numpy) reference kernels.

Same signatures and semantics as the compiled ``_kernels`` extension; used
when the extension is unavailable or ``HIORD_PURE_PYTHON=1`` is set.

Graphs arrive in stacked CSR form: row ``i`` of graph ``g`` owns edges
``ptr[g, i]:ptr[g, i + 1]`` of ``idx`` (senders) and ``wts`` (weights).
"""

import numpy as np


def _dense_adjacency(ptr, idx, wts, n_agents):
    mats = []
    for g in range(ptr.shape[0]):
        W = np.zeros((n_agents, n_agents))
        for i in range(n_agents):
            for e in range(ptr[g, i], ptr[g, i + 1]):
                W[i, idx[e]] += wts[e]
        mats.append((W, W.sum(axis=1)[:, None]))
    return mats


def _diverged(y, guard):
    return not np.all(np.isfinite(y)) or np.max(np.abs(y)) > guard


def rk4_network(drift, coupling, ptr, idx, wts, step_graph, step_h, y0, store, guard):
    """Fixed-step classical RK4; the graph is held constant within a step."""
    y = np.array(y0, dtype=float)
    n_agents = y.shape[0]
    adj = _dense_adjacency(ptr, idx, wts, n_agents)
    Pt = np.ascontiguousarray(drift.T)
    Qt = np.ascontiguousarray(coupling.T)
    out = np.empty((int(np.count_nonzero(store)) + 1, n_agents, y.shape[1]))
    n_out = 0
    if store[0]:
        out[0] = y
        n_out = 1
    for s in range(step_graph.shape[0]):
        W, d = adj[step_graph[s]]
        h = step_h[s]

        def f(v):
            return v @ Pt + (W @ v - d * v) @ Qt

        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if _diverged(y, guard):
            out[n_out] = y
            return out[: n_out + 1], s + 1
        if store[s + 1]:
            out[n_out] = y
            n_out += 1
    return out[:n_out], -1


def map_network(drift, coupling, ptr, idx, wts, step_graph, y0, store, guard):
    """Iterate ``y <- P y + Q sum_j w_ij (y_j - y_i)`` once per step."""
    y = np.array(y0, dtype=float)
    n_agents = y.shape[0]
    adj = _dense_adjacency(ptr, idx, wts, n_agents)
    Pt = np.ascontiguousarray(drift.T)
    Qt = np.ascontiguousarray(coupling.T)
    out = np.empty((int(np.count_nonzero(store)) + 1, n_agents, y.shape[1]))
    n_out = 0
    if store[0]:
        out[0] = y
        n_out = 1
    for s in range(step_graph.shape[0]):
        W, d = adj[step_graph[s]]
        y = y @ Pt + (W @ y - d * y) @ Qt
        if _diverged(y, guard):
            out[n_out] = y
            return out[: n_out + 1], s + 1
        if store[s + 1]:
            out[n_out] = y
            n_out += 1
    return out[:n_out], -1
