# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled self-avoiding walk kernel; see ``_walk_py.walk`` for the contract."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def walk(const double[:, ::1] W, const double[::1] deg, Py_ssize_t start,
         const double[:, ::1] E, Py_ssize_t max_len, double vol_total):
    cdef Py_ssize_t n = W.shape[0]
    if max_len > n - 1:
        max_len = n - 1
    visited_arr = np.zeros(n, dtype=np.uint8)
    path_arr = np.empty(max_len, dtype=np.int64)
    in_set_arr = np.array(W[start], dtype=np.float64)
    trace_arr = np.full(max_len, np.nan)
    cdef double[::1] trace = trace_arr
    cdef unsigned char[::1] visited = visited_arr
    cdef long long[::1] path = path_arr
    cdef double[::1] in_set = in_set_arr
    cdef Py_ssize_t step, j, nxt, cur = start
    cdef double best, key, vol, cut, denom

    with nogil:
        path[0] = start
        visited[start] = 1
        vol = deg[start]
        cut = deg[start]
        for step in range(1, max_len):
            nxt = -1
            best = INFINITY
            for j in range(n):
                if not visited[j] and W[cur, j] > 0.0:
                    key = E[step, j] / W[cur, j]
                    if key < best:
                        best = key
                        nxt = j
            if nxt < 0:
                for j in range(n):
                    if not visited[j] and (nxt < 0 or E[step, j] < best):
                        best = E[step, j]
                        nxt = j
            visited[nxt] = 1
            path[step] = nxt
            cut = cut + deg[nxt] - 2.0 * in_set[nxt]
            vol = vol + deg[nxt]
            for j in range(n):
                in_set[j] = in_set[j] + W[nxt, j]
            denom = vol if vol < vol_total - vol else vol_total - vol
            if denom > 0.0:
                trace[step] = 1.0 - cut / denom
            cur = nxt
    return path_arr, trace_arr
