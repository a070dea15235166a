"""Time the compiled and NumPy walk kernels on benchmark-sized graphs.

    python3 benchmarks/bench_walk.py --size 100 --noise 100 --walks 200

Both backends receive the same race draws, so the script also checks that
they return identical paths and traces.
"""

import argparse
import time

import numpy as np

from habitminer import kernels
from habitminer.dissimilarity import ParameterConfig
from habitminer.graph import build_graph
from habitminer.synthgen import benchmark


def time_backend(fn, graph, starts, races, steps):
    out = []
    t = time.perf_counter()
    for s, E in zip(starts, races):
        out.append(fn(graph.weights, graph.degrees, int(s), E, steps, graph.volume))
    return time.perf_counter() - t, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=100, help="records per planted pattern")
    parser.add_argument("--noise", type=int, default=100)
    parser.add_argument("--walks", type=int, default=200)
    parser.add_argument("--tau", type=float, default=5.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    ds, _ = benchmark(args.seed, size=args.size, noise=args.noise)
    graph = build_graph(ds, ParameterConfig.from_string("110100"), args.tau)
    n = graph.n
    steps = max(5, n // 4)
    rng = np.random.default_rng(args.seed)
    starts = rng.integers(n, size=args.walks)
    races = [rng.standard_exponential((steps, n)) for _ in range(args.walks)]

    print(f"graph: {n} nodes, walk length {steps}, {args.walks} walks")
    results = {}
    for name, fn in sorted(kernels.BACKENDS.items()):
        seconds, out = time_backend(fn, graph, starts, races, steps)
        results[name] = out
        print(f"{name:>7}: {seconds:8.3f} s total, {1e3 * seconds / args.walks:8.3f} ms per walk")
    if len(results) == 2:
        same = all(
            np.array_equal(p1, p2) and np.array_equal(t1, t2, equal_nan=True)
            for (p1, t1), (p2, t2) in zip(results["python"], results["cython"])
        )
        print("identical outputs:", same)
    else:
        print("compiled kernel not built; only the NumPy backend was timed")


if __name__ == "__main__":
    main()
