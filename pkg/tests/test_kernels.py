import os
import subprocess
import sys

import numpy as np
import pytest

from habitminer import _walk_py, kernels
from habitminer.engine import ConductanceError, cluster_quality
from habitminer.graph import graph_from_weights

from oracles import conductance_cq

needs_ext = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernel not built")


def _random_graph(rng, n, zero_frac=0.0):
    W = rng.random((n, n))
    W = (W + W.T) / 2
    if zero_frac:
        W[rng.random((n, n)) < zero_frac] = 0.0
        W = np.minimum(W, W.T)
    np.fill_diagonal(W, 0.0)
    return graph_from_weights(W)


def _run(fn, g, start, E, L):
    return fn(g.weights, g.degrees, start, E, L, g.volume)


def test_walk_is_self_avoiding_and_starts_at_start():
    rng = np.random.default_rng(1)
    g = _random_graph(rng, 30)
    E = rng.standard_exponential((29, 30))
    path, trace = _run(_walk_py.walk, g, 7, E, 29)
    assert path[0] == 7
    assert len(set(path.tolist())) == 29
    assert np.isnan(trace[0]) or trace[0] <= 1


def test_trace_matches_conductance_oracle():
    rng = np.random.default_rng(2)
    g = _random_graph(rng, 12)
    E = rng.standard_exponential((11, 12))
    path, trace = _run(_walk_py.walk, g, 0, E, 11)
    for i in range(1, 11):
        assert trace[i] == pytest.approx(conductance_cq(g.weights, path[: i + 1]), abs=1e-12)


def test_step_probabilities_follow_weights():
    W = np.array([[0, 1, 2, 5], [1, 0, 1, 1], [2, 1, 0, 1], [5, 1, 1, 0]], dtype=float)
    g = graph_from_weights(W)
    rng = np.random.default_rng(3)
    trials = 20000
    E = rng.standard_exponential((trials, 2, 4))
    firsts = np.array([_run(_walk_py.walk, g, 0, E[t], 2)[0][1] for t in range(trials)])
    freq = np.bincount(firsts, minlength=4)[1:] / trials
    assert np.allclose(freq, [1 / 8, 2 / 8, 5 / 8], atol=0.015)


def test_disconnected_walk_jumps_to_unvisited():
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 0] = 1.0
    W[2, 3] = W[3, 2] = 1.0
    g = graph_from_weights(W)
    E = np.random.default_rng(0).standard_exponential((3, 4))
    path, _ = _run(_walk_py.walk, g, 0, E, 3)
    assert path[1] == 1
    assert path[2] in (2, 3)


@needs_ext
@pytest.mark.parametrize("seed", range(8))
def test_backends_agree_bit_for_bit(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 60))
    g = _random_graph(rng, n, zero_frac=0.3 if seed % 2 else 0.0)
    E = rng.standard_exponential((n - 1, n))
    start = int(rng.integers(n))
    p1, t1 = _run(_walk_py.walk, g, start, E, n - 1)
    p2, t2 = _run(kernels.BACKENDS["cython"], g, start, E, n - 1)
    assert np.array_equal(p1, p2)
    assert np.array_equal(t1, t2, equal_nan=True)


def test_backend_env_override():
    code = "from habitminer import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, HABITMINER_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env["HABITMINER_BACKEND"] = "fortran"
    bad = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert bad.returncode != 0 and "fortran" in bad.stderr


def test_default_backend_prefers_compiled():
    if os.environ.get("HABITMINER_BACKEND"):
        pytest.skip("backend forced by environment")
    expected = "cython" if "cython" in kernels.BACKENDS else "python"
    assert kernels.BACKEND == expected


def test_cluster_quality_rejects_trivial_sets():
    g = _random_graph(np.random.default_rng(0), 5)
    with pytest.raises(ConductanceError):
        cluster_quality([], g)
    with pytest.raises(ConductanceError):
        cluster_quality(range(5), g)
