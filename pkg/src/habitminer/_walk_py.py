"""NumPy implementation of the self-avoiding walk kernel.

Arithmetic order mirrors ``_walk_ext.pyx`` so both backends agree bit for bit.
"""

import numpy as np


def walk(W, deg, start, E, max_len, vol_total):
    """Grow a visited set by a weight-proportional self-avoiding walk.

    Each step is an exponential race: with ``E[step]`` holding Exp(1) draws,
    the unvisited node minimizing ``E[step, v] / W[cur, v]`` is taken, which
    picks v with probability proportional to its weight. When no unvisited
    node has positive weight the smallest ``E[step, v]`` wins.

    Returns ``(path, cq)``: the visited nodes in order and, at position i,
    1 - conductance of the first i + 1 nodes (NaN where undefined).
    """
    n = W.shape[0]
    max_len = min(max_len, n - 1)
    visited = np.zeros(n, dtype=bool)
    path = np.empty(max_len, dtype=np.int64)
    path[0] = start
    visited[start] = True
    in_set = W[start].copy()
    vol = deg[start]
    cut = deg[start]
    cur = start
    trace = np.full(max_len, np.nan)
    with np.errstate(divide="ignore", over="ignore"):
        for step in range(1, max_len):
            row = W[cur]
            live = ~visited & (row > 0.0)
            key = np.full(n, np.inf)
            key[live] = E[step, live] / row[live]
            nxt = int(np.argmin(key))
            if key[nxt] == np.inf:
                key = np.where(visited, np.inf, E[step])
                nxt = int(np.argmin(key))
            visited[nxt] = True
            path[step] = nxt
            cut = cut + deg[nxt] - 2.0 * in_set[nxt]
            vol = vol + deg[nxt]
            in_set += W[nxt]
            denom = min(vol, vol_total - vol)
            if denom > 0.0:
                trace[step] = 1.0 - cut / denom
            cur = nxt
    return path, trace
