# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for networked linear agent dynamics.

Mirrors ``_kernels_py`` exactly; neighbour sums walk the receiver
adjacency lists instead of multiplying a dense Laplacian.
"""

import numpy as np
from libc.math cimport fabs, isfinite


cdef void _field(const double[:, ::1] y, double[:, ::1] out,
                 const double[:, ::1] P, const double[:, ::1] Q,
                 const Py_ssize_t[:, ::1] ptr, Py_ssize_t g,
                 const Py_ssize_t[::1] idx, const double[::1] wts,
                 double[::1] c) noexcept nogil:
    cdef Py_ssize_t N = y.shape[0], n = y.shape[1]
    cdef Py_ssize_t i, j, e, a, b
    cdef double w, acc
    for i in range(N):
        for a in range(n):
            c[a] = 0.0
        for e in range(ptr[g, i], ptr[g, i + 1]):
            j = idx[e]
            w = wts[e]
            for a in range(n):
                c[a] += w * (y[j, a] - y[i, a])
        for a in range(n):
            acc = 0.0
            for b in range(n):
                acc += P[a, b] * y[i, b] + Q[a, b] * c[b]
            out[i, a] = acc


cdef bint _bad(const double[:, ::1] y, double guard) noexcept nogil:
    cdef Py_ssize_t i, a
    cdef double v
    for i in range(y.shape[0]):
        for a in range(y.shape[1]):
            v = y[i, a]
            if not isfinite(v) or fabs(v) > guard:
                return True
    return False


def rk4_network(drift, coupling, ptr, idx, wts, step_graph, step_h, y0, store, double guard):
    cdef const double[:, ::1] P = np.ascontiguousarray(drift, dtype=np.float64)
    cdef const double[:, ::1] Q = np.ascontiguousarray(coupling, dtype=np.float64)
    cdef const Py_ssize_t[:, ::1] ptr_v = np.ascontiguousarray(ptr, dtype=np.intp)
    cdef const Py_ssize_t[::1] idx_v = np.ascontiguousarray(idx, dtype=np.intp)
    cdef const double[::1] w_v = np.ascontiguousarray(wts, dtype=np.float64)
    cdef const Py_ssize_t[::1] sg = np.ascontiguousarray(step_graph, dtype=np.intp)
    cdef const double[::1] sh = np.ascontiguousarray(step_h, dtype=np.float64)
    cdef const unsigned char[::1] keep = np.ascontiguousarray(store, dtype=np.uint8)

    y_arr = np.array(y0, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] y = y_arr
    cdef Py_ssize_t N = y.shape[0], n = y.shape[1]
    cdef double[:, ::1] k1 = np.empty((N, n)), k2 = np.empty((N, n))
    cdef double[:, ::1] k3 = np.empty((N, n)), k4 = np.empty((N, n))
    cdef double[:, ::1] tmp = np.empty((N, n))
    cdef double[::1] c = np.empty(n)

    out_arr = np.empty((int(np.count_nonzero(store)) + 1, N, n))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t n_out = 0, s, i, a, g, n_steps = sg.shape[0]
    cdef Py_ssize_t bad_step = -1
    cdef double h

    if keep[0]:
        out[0, :, :] = y
        n_out = 1
    with nogil:
        for s in range(n_steps):
            g = sg[s]
            h = sh[s]
            _field(y, k1, P, Q, ptr_v, g, idx_v, w_v, c)
            for i in range(N):
                for a in range(n):
                    tmp[i, a] = y[i, a] + 0.5 * h * k1[i, a]
            _field(tmp, k2, P, Q, ptr_v, g, idx_v, w_v, c)
            for i in range(N):
                for a in range(n):
                    tmp[i, a] = y[i, a] + 0.5 * h * k2[i, a]
            _field(tmp, k3, P, Q, ptr_v, g, idx_v, w_v, c)
            for i in range(N):
                for a in range(n):
                    tmp[i, a] = y[i, a] + h * k3[i, a]
            _field(tmp, k4, P, Q, ptr_v, g, idx_v, w_v, c)
            for i in range(N):
                for a in range(n):
                    y[i, a] = y[i, a] + (h / 6.0) * (k1[i, a] + 2.0 * k2[i, a] + 2.0 * k3[i, a] + k4[i, a])
            if _bad(y, guard):
                out[n_out, :, :] = y
                n_out += 1
                bad_step = s + 1
                break
            if keep[s + 1]:
                out[n_out, :, :] = y
                n_out += 1
    return out_arr[:n_out], bad_step


def map_network(drift, coupling, ptr, idx, wts, step_graph, y0, store, double guard):
    cdef const double[:, ::1] P = np.ascontiguousarray(drift, dtype=np.float64)
    cdef const double[:, ::1] Q = np.ascontiguousarray(coupling, dtype=np.float64)
    cdef const Py_ssize_t[:, ::1] ptr_v = np.ascontiguousarray(ptr, dtype=np.intp)
    cdef const Py_ssize_t[::1] idx_v = np.ascontiguousarray(idx, dtype=np.intp)
    cdef const double[::1] w_v = np.ascontiguousarray(wts, dtype=np.float64)
    cdef const Py_ssize_t[::1] sg = np.ascontiguousarray(step_graph, dtype=np.intp)
    cdef const unsigned char[::1] keep = np.ascontiguousarray(store, dtype=np.uint8)

    y_arr = np.array(y0, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] y = y_arr
    cdef Py_ssize_t N = y.shape[0], n = y.shape[1]
    cdef double[:, ::1] nxt = np.empty((N, n))
    cdef double[::1] c = np.empty(n)

    out_arr = np.empty((int(np.count_nonzero(store)) + 1, N, n))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t n_out = 0, s, g, n_steps = sg.shape[0]
    cdef Py_ssize_t bad_step = -1

    if keep[0]:
        out[0, :, :] = y
        n_out = 1
    with nogil:
        for s in range(n_steps):
            g = sg[s]
            _field(y, nxt, P, Q, ptr_v, g, idx_v, w_v, c)
            y[:, :] = nxt
            if _bad(y, guard):
                out[n_out, :, :] = y
                n_out += 1
                bad_step = s + 1
                break
            if keep[s + 1]:
                out[n_out, :, :] = y
                n_out += 1
    return out_arr[:n_out], bad_step
