"""Similarity graphs over a dataset and the tau_exp sweep heuristic."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dissimilarity import ParameterConfig, composite_matrix, sample_pc
from .ingest import Dataset

log = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-12


class GraphTooSmallError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Complete graph with weights exp(-d * tau_exp); the diagonal holds no self-loops."""

    weights: np.ndarray
    degrees: np.ndarray
    pc: ParameterConfig | None
    tau_exp: float

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def volume(self) -> float:
        return float(self.degrees.sum())


def weights_from_dissimilarity(D: np.ndarray, tau_exp: float, floor: float = WEIGHT_FLOOR) -> np.ndarray:
    W = np.exp(-tau_exp * D)
    if floor:
        np.maximum(W, floor, out=W)
    np.fill_diagonal(W, 0.0)
    return W


def graph_from_weights(W: np.ndarray, pc=None, tau_exp: float = 1.0) -> WeightedGraph:
    W = np.ascontiguousarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("weight matrix must be square")
    if W.shape[0] < 2:
        raise GraphTooSmallError("a graph needs at least two nodes")
    deg = W.sum(axis=1)
    W.setflags(write=False)
    deg.setflags(write=False)
    return WeightedGraph(W, deg, pc, tau_exp)


def build_graph(dataset: Dataset, pc: ParameterConfig, tau_exp: float, floor: float = WEIGHT_FLOOR) -> WeightedGraph:
    if tau_exp <= 0:
        raise ValueError("tau_exp must be positive")
    if len(dataset) < 2:
        raise GraphTooSmallError("a graph needs at least two nodes")
    D = composite_matrix(dataset.section_dissimilarities(), pc)
    return graph_from_weights(weights_from_dissimilarity(D, tau_exp, floor), pc, tau_exp)


@dataclass(frozen=True)
class SweepCurve:
    tau: tuple[float, ...]
    mean_cq: tuple[float, ...]
    mean_size: tuple[float, ...]
    accepted: tuple[int, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.tau, self.tau[1:])):
            raise ValueError("tau values must be strictly increasing")

    def __len__(self) -> int:
        return len(self.tau)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["tau_exp", "mean_cq", "mean_size"])
            for t, c, s in zip(self.tau, self.mean_cq, self.mean_size):
                writer.writerow([repr(float(t)), repr(float(c)), repr(float(s))])


def sweep_tau(
    dataset: Dataset,
    lo: float = 1.0,
    hi: float = 120.0,
    step: float = 1.0,
    walks_per_value: int = 150,
    *,
    tau_cq: float = 0.8,
    min_size: int = 5,
    max_walk_length: int | None = None,
    seed: int = 0,
) -> SweepCurve:
    """Run walks for every tau in [lo, hi] and average the accepted clusters.

    The same walks (configuration, start node and random stream) are replayed
    at every tau, so differences between points reflect tau alone.
    """
    from .engine import random_walk

    if lo < 1 or step <= 0 or hi < lo:
        raise ValueError("need 1 <= lo <= hi and step > 0")
    n = len(dataset)
    L = max_walk_length or max(min_size, n // 4)
    taus = np.arange(lo, hi + 1e-9, step)
    rng = np.random.default_rng(seed)
    pcs = [sample_pc(rng) for _ in range(walks_per_value)]
    starts = rng.integers(n, size=walks_per_value)
    walk_seeds = rng.integers(2**63, size=walks_per_value)
    out_t, out_c, out_s, out_n = [], [], [], []
    for tau in taus:
        cqs, sizes = [], []
        for pc in sorted(set(pcs)):
            graph = build_graph(dataset, pc, float(tau))
            for w, wpc in enumerate(pcs):
                if wpc != pc:
                    continue
                walk_rng = np.random.default_rng(int(walk_seeds[w]))
                cluster = random_walk(graph, int(starts[w]), L, tau_cq, min_size, walk_rng)
                if cluster is not None:
                    cqs.append(cluster.cq)
                    sizes.append(len(cluster.members))
        if cqs:
            out_t.append(float(tau))
            out_c.append(float(np.mean(cqs)))
            out_s.append(float(np.mean(sizes)))
            out_n.append(len(cqs))
    if not out_t:
        log.warning("no cluster accepted at any tau_exp in [%s, %s]", lo, hi)
    return SweepCurve(tuple(out_t), tuple(out_c), tuple(out_s), tuple(out_n))


def pick_tau(curve: SweepCurve, rel_tol: float = 0.02, window: int = 3) -> float:
    """Smallest tau from which size stops decreasing and CQ stops increasing.

    Over ``window`` consecutive points, each step may shrink the mean size or
    raise the mean CQ by at most ``rel_tol`` (relative). Without such a
    window the midpoint of the swept range is returned.
    """
    if len(curve) == 0:
        raise ValueError("empty sweep curve")
    t, c, s = curve.tau, curve.mean_cq, curve.mean_size
    if len(curve) < window:
        log.warning("sweep curve shorter than the plateau window; using the range midpoint")
        return _midpoint(t)
    for i in range(len(curve) - window + 1):
        ok = True
        for j in range(i, i + window - 1):
            if s[j + 1] < s[j] * (1 - rel_tol) or c[j + 1] > c[j] * (1 + rel_tol):
                ok = False
                break
        if ok:
            return float(t[i])
    log.warning("no plateau found in the sweep; using the range midpoint")
    return _midpoint(t)


def _midpoint(t: Sequence[float]) -> float:
    return float((t[0] + t[-1]) / 2)
