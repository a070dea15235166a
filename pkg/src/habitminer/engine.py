"""LD-ABCD: agents walking per-configuration graphs, conductance-based
acceptance, and aggregation of near-duplicate clusters into meta-clusters."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .dissimilarity import VALID_PCS, ParameterConfig, PCExhausted, sample_pc
from .graph import SweepCurve, WeightedGraph, build_graph, pick_tau, sweep_tau
from .ingest import Dataset

log = logging.getLogger(__name__)


class ConductanceError(ValueError):
    """Conductance is undefined for the empty set and for the whole vertex set."""


class DatasetTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class Cluster:
    members: tuple[int, ...]
    pc: ParameterConfig
    cq: float
    tau_exp: float


@dataclass(frozen=True)
class PCScore:
    pc: ParameterConfig
    cq: float


@dataclass
class MetaCluster:
    membership: np.ndarray
    pc_list: list[PCScore]
    n_sources: int
    theta: float

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.membership))

    @property
    def size(self) -> int:
        return int(self.membership.sum())

    @property
    def best_cq(self) -> float:
        return self.pc_list[0].cq

    @property
    def top_pc(self) -> ParameterConfig:
        return self.pc_list[0].pc

    def to_json(self) -> dict:
        return {
            "members": list(self.members),
            "pcs": [{"bits": str(s.pc), "cq": s.cq} for s in self.pc_list],
            "size": self.size,
        }


@dataclass
class EngineConfig:
    tau_cq: float = 0.8
    theta: float = 0.2
    tau_exp: float | str = "auto"
    n_agents: int = 8
    walks_per_pc: int = 20
    max_walk_length: int | None = None
    min_cluster_size: int = 5
    cq_slack: float = 1e-3
    max_pcs_per_agent: int | None = None
    seed: int = 0
    sweep_range: tuple[float, float] = (1.0, 120.0)
    sweep_step: float = 1.0
    sweep_walks: int = 150
    sweep_seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        if not 0 < self.tau_cq < 1:
            raise ValueError("tau_cq must lie in (0, 1)")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.tau_exp != "auto" and not float(self.tau_exp) > 0:
            raise ValueError("tau_exp must be positive or 'auto'")
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be at least 2")
        if self.n_agents < 1 or self.walks_per_pc < 0:
            raise ValueError("need at least one agent and a non-negative walk count")

    def walk_length(self, n: int) -> int:
        L = self.max_walk_length if self.max_walk_length is not None else n // 4
        return max(self.min_cluster_size, min(L, n - 1))


def cluster_quality(members, graph: WeightedGraph) -> float:
    """1 - conductance of the node set, with conductance cut / min(vol(S), vol(V - S))."""
    mask = np.zeros(graph.n, dtype=bool)
    mask[np.asarray(list(members), dtype=np.int64)] = True
    k = int(mask.sum())
    if k == 0 or k == graph.n:
        raise ConductanceError("conductance needs a proper non-empty subset")
    W = graph.weights
    cut = float(W[np.ix_(mask, ~mask)].sum())
    vol_s = float(graph.degrees[mask].sum())
    vol_rest = float(graph.degrees[~mask].sum())
    denom = min(vol_s, vol_rest)
    if denom <= 0.0:
        return 0.0
    return 1.0 - cut / denom


def select_prefix(trace: np.ndarray, tau_cq: float, min_size: int, slack: float = 1e-3) -> int:
    """Length of the accepted prefix of a walk, 0 when none qualifies.

    Among prefixes with at least ``min_size`` nodes and CQ >= ``tau_cq``, the
    earliest one whose CQ is within ``slack`` of the best is taken. Appending
    nodes of near-zero degree leaves the conductance almost unchanged, so the
    plain maximum tends to drift onto padded versions of the same cluster.
    """
    cq = np.where(np.isnan(trace), -np.inf, trace)
    cq[: min_size - 1] = -np.inf
    best = cq.max(initial=-np.inf)
    if best < tau_cq:
        return 0
    ok = np.flatnonzero((cq >= tau_cq) & (cq >= best - slack))
    if ok[-1] == len(cq) - 1:
        # still improving when the walk was cut off: the cluster is not closed
        return 0
    return int(ok[0]) + 1


def random_walk(
    graph: WeightedGraph,
    start: int,
    max_len: int,
    tau_cq: float,
    min_size: int,
    rng: np.random.Generator,
    slack: float = 1e-3,
) -> Cluster | None:
    """Walk from ``start`` and return the accepted visited prefix, if any."""
    if not 0 <= start < graph.n:
        raise IndexError(f"start node {start} outside the graph")
    if max_len < min_size or min_size < 2:
        raise ValueError("need max_len >= min_size >= 2")
    steps = min(max_len, graph.n - 1)
    race = rng.standard_exponential((steps, graph.n))
    path, trace = kernels.walk(graph.weights, graph.degrees, int(start), race, steps, graph.volume)
    length = select_prefix(trace, tau_cq, min_size, slack)
    if length == 0:
        return None
    members = tuple(sorted(int(i) for i in path[:length]))
    # the kernel updates the cut incrementally; re-check on the exact formula
    cq = cluster_quality(members, graph)
    if cq < tau_cq:
        return None
    return Cluster(members, graph.pc, cq, graph.tau_exp)


def run_agent(
    dataset: Dataset,
    config: EngineConfig,
    tau_exp: float,
    rng: np.random.Generator,
    pcs: Sequence[ParameterConfig] = VALID_PCS,
) -> list[Cluster]:
    """One agent: draw unused configurations, build each graph and walk it.

    Stops when the configuration space (``pcs``) is exhausted or after
    ``config.max_pcs_per_agent`` configurations.
    """
    n = len(dataset)
    L = config.walk_length(n)
    tabu = set(VALID_PCS) - set(pcs)
    found: list[Cluster] = []
    used = 0
    while config.max_pcs_per_agent is None or used < config.max_pcs_per_agent:
        try:
            pc = sample_pc(rng, tabu)
        except PCExhausted:
            break
        tabu.add(pc)
        used += 1
        graph = build_graph(dataset, pc, tau_exp)
        for _ in range(config.walks_per_pc):
            start = int(rng.integers(n))
            cluster = random_walk(graph, start, L, config.tau_cq, config.min_cluster_size, rng, config.cq_slack)
            if cluster is not None:
                found.append(cluster)
    return found


def jaccard_distance(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return 1.0 - np.count_nonzero(a & b) / union


def _canonical_order(clusters: Sequence[Cluster]) -> list[Cluster]:
    return sorted(clusters, key=lambda c: (-c.cq, -len(c.members), c.members, c.pc.bits))


def merge_into_metaclusters(
    clusters: Sequence[Cluster],
    theta: float,
    n: int,
    graph_for=None,
) -> list[MetaCluster]:
    """Greedy aggregation of accepted clusters into meta-clusters.

    Clusters are visited best-CQ first. Each joins the first meta-cluster whose
    founding cluster lies within Jaccard distance ``theta``, otherwise it founds
    a new one. A meta-cluster keeps the elements present in more than half of
    its clusters; each contributing configuration is re-scored on that final
    membership through ``graph_for(pc)``. Without ``graph_for`` the best CQ seen
    for the configuration among the constituents is kept.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if not clusters:
        return []
    founders = np.zeros((0, n), dtype=np.int32)
    founder_sizes = np.zeros(0, dtype=np.int64)
    groups: list[list[Cluster]] = []
    # founders are only appended, so an identical member set always lands in the same group
    seen: dict[tuple[int, ...], int] = {}
    for c in _canonical_order(clusters):
        idx = seen.get(c.members)
        if idx is None:
            mask = np.zeros(n, dtype=np.int32)
            mask[list(c.members)] = 1
            inter = founders @ mask
            union = founder_sizes + len(c.members) - inter
            hits = np.flatnonzero(1.0 - inter / union <= theta)
            if hits.size:
                idx = int(hits[0])
            else:
                idx = len(groups)
                founders = np.vstack([founders, mask])
                founder_sizes = np.append(founder_sizes, len(c.members))
                groups.append([])
            seen[c.members] = idx
        groups[idx].append(c)

    pending = []
    for group in groups:
        counts = np.zeros(n, dtype=np.int64)
        for c in group:
            counts[list(c.members)] += 1
        membership = 2 * counts > len(group)
        if membership.sum() < 2:
            membership = founders[len(pending)].astype(bool)
        pending.append((membership, group))

    scores: list[dict[ParameterConfig, float]] = [dict() for _ in pending]
    pcs = sorted({c.pc for _, g in pending for c in g})
    for pc in pcs:
        graph = graph_for(pc) if graph_for is not None else None
        for i, (membership, group) in enumerate(pending):
            contributing = [c for c in group if c.pc == pc]
            if not contributing:
                continue
            if graph is None:
                scores[i][pc] = max(c.cq for c in contributing)
            elif membership.all():
                scores[i][pc] = 0.0
            else:
                scores[i][pc] = cluster_quality(np.flatnonzero(membership), graph)

    out = []
    for (membership, group), sc in zip(pending, scores):
        pc_list = sorted((PCScore(pc, cq) for pc, cq in sc.items()), key=lambda s: (-s.cq, s.pc.bits))
        membership.setflags(write=False)
        out.append(MetaCluster(membership, pc_list, len(group), theta))
    return out


def _sort_key(mc: MetaCluster):
    members = mc.members
    return (-mc.best_cq, -mc.size, members[0] if members else -1)


def sort_metaclusters(mcs: Sequence[MetaCluster]) -> list[MetaCluster]:
    return sorted(mcs, key=_sort_key)


def engine_threads(config: EngineConfig) -> int:
    if config.threads:
        return config.threads
    env = os.environ.get("HABITMINER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class EngineResult:
    metaclusters: list[MetaCluster]
    clusters: list[Cluster]
    tau_exp: float
    sweep: SweepCurve | None = None
    config: EngineConfig = field(default_factory=EngineConfig)

    def to_json(self) -> dict:
        return {
            "tau_exp": self.tau_exp,
            "n_clusters": len(self.clusters),
            "metaclusters": [mc.to_json() for mc in self.metaclusters],
        }


def resolve_tau(dataset: Dataset, config: EngineConfig) -> tuple[float, SweepCurve | None]:
    if config.tau_exp != "auto":
        return float(config.tau_exp), None
    lo, hi = config.sweep_range
    curve = sweep_tau(
        dataset, lo, hi, config.sweep_step, config.sweep_walks,
        tau_cq=config.tau_cq, min_size=config.min_cluster_size,
        max_walk_length=config.walk_length(len(dataset)), seed=config.sweep_seed,
    )
    if len(curve) == 0:
        log.warning("empty sweep; falling back to the range midpoint")
        return (lo + hi) / 2, curve
    return pick_tau(curve), curve


def run_engine(dataset: Dataset, config: EngineConfig | None = None) -> EngineResult:
    """Run all agents, merge their clusters and return sorted meta-clusters."""
    config = config or EngineConfig()
    n = len(dataset)
    if n < max(config.min_cluster_size, 3):
        raise DatasetTooSmallError(f"dataset of {n} records is smaller than the minimum cluster size")
    tau, curve = resolve_tau(dataset, config)

    seeds = np.random.SeedSequence(config.seed).spawn(config.n_agents)
    rngs = [np.random.default_rng(s) for s in seeds]
    workers = min(engine_threads(config), config.n_agents)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_agent, dataset, config, tau, r) for r in rngs]
            contributions = [f.result() for f in futures]
    else:
        contributions = [run_agent(dataset, config, tau, r) for r in rngs]
    clusters = [c for part in contributions for c in part]

    def graph_for(pc):
        return build_graph(dataset, pc, tau)

    mcs = merge_into_metaclusters(clusters, config.theta, n, graph_for)
    return EngineResult(sort_metaclusters(mcs), clusters, tau, curve, config)
