"""PROCLUS projected clustering over the per-section dissimilarities.

Distances are always taken section by section: the "dimensions" of a medoid
are the sections whose dissimilarities are averaged when points are compared
to it (the Manhattan segmental distance).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ingest import SECTION_NAMES, Dataset

log = logging.getLogger(__name__)


class ProclusTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class ProclusConfig:
    k: int = 4
    l: int = 5
    min_dev: float = 0.1
    a: int = 10
    b: int = 3
    max_stale: int = 20
    max_iter: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if not 2 <= self.l <= len(SECTION_NAMES):
            raise ValueError(f"l must lie in [2, {len(SECTION_NAMES)}]")
        if not 0 < self.min_dev < 1:
            raise ValueError("min_dev must lie in (0, 1)")
        if self.a < self.b or self.b < 1:
            raise ValueError("need a >= b >= 1")
        if self.max_stale < 1 or self.max_iter < 1:
            raise ValueError("iteration limits must be positive")


@dataclass(frozen=True)
class ProclusCluster:
    medoid: int
    members: tuple[int, ...]
    dims: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "medoid": self.medoid,
            "members": list(self.members),
            "dims": [SECTION_NAMES[d] for d in self.dims],
        }


@dataclass
class ProclusResult:
    clusters: list[ProclusCluster]
    outliers: tuple[int, ...]
    assignment: np.ndarray
    objective: float
    iterations: int
    seed: int = 0
    history: list[float] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def outlier_fraction(self) -> float:
        return len(self.outliers) / self.n if self.n else 0.0

    @property
    def medoids(self) -> list[int]:
        return [c.medoid for c in self.clusters]

    @property
    def dims(self) -> list[tuple[int, ...]]:
        return [c.dims for c in self.clusters]

    def to_json(self) -> dict:
        return {
            "clusters": [c.to_json() for c in self.clusters],
            "outliers": list(self.outliers),
        }


def _sections(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.section_dissimilarities()
    S = np.asarray(data, dtype=np.float64)
    if S.ndim != 3 or S.shape[1] != S.shape[2]:
        raise ValueError("expected a (sections, N, N) dissimilarity stack")
    return S


def initialize(data, config: ProclusConfig, rng: np.random.Generator) -> np.ndarray:
    """Candidate medoid pool: a random sample thinned by farthest-first traversal.

    The sample holds ``a*k`` points (all of them on small data); ``b*k``
    candidates are then chosen greedily, each maximizing its distance to
    those already picked under the all-sections composite. Ties go to the
    lowest dataset index.
    """
    S = _sections(data)
    n = S.shape[1]
    pool_size = config.b * config.k
    if n < pool_size:
        raise ProclusTooSmallError(f"need at least {pool_size} points, got {n}")
    sample = np.sort(rng.choice(n, size=min(n, config.a * config.k), replace=False))
    if len(sample) == pool_size:
        return sample
    D = S.sum(axis=0)[np.ix_(sample, sample)]
    chosen = [int(rng.integers(len(sample)))]
    nearest = D[chosen[0]].copy()
    nearest[chosen[0]] = -np.inf
    while len(chosen) < pool_size:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        np.minimum(nearest, D[nxt], out=nearest)
        nearest[chosen] = -np.inf
    return np.sort(sample[chosen])


def neighborhoods(S: np.ndarray, medoids) -> list[np.ndarray]:
    """Points within each medoid's distance to its nearest fellow medoid (all sections)."""
    medoids = np.asarray(medoids)
    D = S.sum(axis=0)[medoids]
    if len(medoids) == 1:
        return [np.arange(S.shape[1])]
    out = []
    for i in range(len(medoids)):
        others = np.delete(D[i, medoids], i)
        out.append(np.flatnonzero(D[i] <= others.min()))
    return out


def find_dimensions(S: np.ndarray, medoids, groups, l: int) -> list[tuple[int, ...]]:
    """Pick k*l (medoid, section) pairs with the tightest spread, at least two per medoid.

    For medoid i, X[i, j] is the mean section-j dissimilarity from the medoid
    to the points of ``groups[i]``. Rows are standardized to Z scores (raw
    means when a row has no spread) and the lowest scores are taken
    globally after seeding every medoid with its own two best sections.
    """
    s = S.shape[0]
    k = len(medoids)
    X = np.empty((k, s))
    for i, (m, g) in enumerate(zip(medoids, groups)):
        g = np.asarray(g, dtype=np.int64)
        if g.size == 0:
            g = np.asarray([m])
        X[i] = S[:, m, g].mean(axis=1)
    Z = np.empty_like(X)
    for i in range(k):
        sigma = X[i].std(ddof=1) if s > 1 else 0.0
        Z[i] = (X[i] - X[i].mean()) / sigma if sigma > 0 else X[i]
    picked = np.zeros((k, s), dtype=bool)
    for i in range(k):
        for j in np.argsort(Z[i], kind="stable")[:2]:
            picked[i, j] = True
    remaining = k * l - 2 * k
    for flat in np.argsort(Z, axis=None, kind="stable"):
        if remaining <= 0:
            break
        i, j = divmod(int(flat), s)
        if not picked[i, j]:
            picked[i, j] = True
            remaining -= 1
    return [tuple(int(j) for j in np.flatnonzero(row)) for row in picked]


def segmental_distances(S: np.ndarray, medoids, dims) -> np.ndarray:
    """(k, N) mean dissimilarity to each medoid over that medoid's sections."""
    return np.stack([S[list(d), m, :].mean(axis=0) for m, d in zip(medoids, dims)])


def assign_points(S: np.ndarray, medoids, dims) -> tuple[np.ndarray, np.ndarray]:
    """Nearest medoid by segmental distance, ties to the lowest medoid position."""
    dist = segmental_distances(S, medoids, dims)
    return np.argmin(dist, axis=0), dist


def _objective(dist: np.ndarray, assignment: np.ndarray) -> float:
    return float(dist[assignment, np.arange(dist.shape[1])].sum())


def _bad_medoids(assignment: np.ndarray, k: int, min_dev: float) -> list[int]:
    sizes = np.bincount(assignment, minlength=k)
    n = len(assignment)
    bad = {int(np.argmin(sizes))}
    bad.update(int(i) for i in np.flatnonzero(sizes < (n / k) * min_dev))
    return sorted(bad)


def iterate(data, config: ProclusConfig, pool, rng: np.random.Generator):
    """Hill-climb over medoid sets drawn from ``pool``.

    Returns (medoids, dims, assignment, objective, iterations, history) for
    the best set seen; stops after ``max_stale`` iterations without
    improvement or ``max_iter`` in total.
    """
    S = _sections(data)
    k = config.k
    pool = np.asarray(pool)
    current = np.sort(rng.choice(pool, size=k, replace=False))
    best = None
    stale = 0
    history = []
    it = 0
    while it < config.max_iter and stale < config.max_stale:
        it += 1
        dims = find_dimensions(S, current, neighborhoods(S, current), config.l)
        assignment, dist = assign_points(S, current, dims)
        obj = _objective(dist, assignment)
        if best is None or obj < best[3]:
            best = (current.copy(), dims, assignment, obj)
            stale = 0
        else:
            stale += 1
        history.append(best[3])
        medoids = best[0].copy()
        spare = np.setdiff1d(pool, medoids)
        bad = _bad_medoids(best[2], k, config.min_dev)[: len(spare)]
        if bad:
            medoids[bad] = rng.choice(spare, size=len(bad), replace=False)
        current = medoids
    medoids, dims, assignment, obj = best
    return medoids, dims, assignment, obj, it, history


def refine(data, medoids, dims, assignment, objective):
    """Recompute dimensions on the clusters, reassign once, then mark outliers.

    The refined assignment is kept only if it does not worsen the objective.
    A point is an outlier when its distance to its medoid exceeds the
    smallest distance, over that medoid's sections, from the medoid to any
    other medoid.
    """
    S = _sections(data)
    k = len(medoids)
    groups = [np.union1d(np.flatnonzero(assignment == i), [medoids[i]]) for i in range(k)]
    new_dims = find_dimensions(S, medoids, groups, len(sum(dims, ())) // k)
    new_assignment, new_dist = assign_points(S, medoids, new_dims)
    new_obj = _objective(new_dist, new_assignment)
    if new_obj <= objective:
        dims, assignment, objective = new_dims, new_assignment, new_obj
        dist = new_dist
    else:
        dist = segmental_distances(S, medoids, dims)
    spheres = np.full(k, np.inf)
    for i in range(k):
        others = [medoids[j] for j in range(k) if j != i]
        if others:
            spheres[i] = dist[i, others].min()
    own = dist[assignment, np.arange(S.shape[1])]
    outlier = own > spheres[assignment]
    return dims, assignment, objective, outlier


def run_proclus(data, config: ProclusConfig = ProclusConfig()) -> ProclusResult:
    S = _sections(data)
    rng = np.random.default_rng(config.seed)
    pool = initialize(S, config, rng)
    medoids, dims, assignment, obj, iterations, history = iterate(S, config, pool, rng)
    dims, assignment, obj, outlier = refine(S, medoids, dims, assignment, obj)
    clusters = [
        ProclusCluster(int(m), tuple(int(x) for x in np.flatnonzero((assignment == i) & ~outlier)), tuple(d))
        for i, (m, d) in enumerate(zip(medoids, dims))
    ]
    outliers = tuple(int(x) for x in np.flatnonzero(outlier))
    return ProclusResult(clusters, outliers, assignment, obj, iterations, config.seed, history)


def proclus_runs(data, config: ProclusConfig, runs: int) -> list[ProclusResult]:
    """Independent runs seeded ``config.seed``, ``config.seed + 1``, ..."""
    S = _sections(data)
    base = config.seed
    out = []
    for r in range(runs):
        cfg = ProclusConfig(config.k, config.l, config.min_dev, config.a, config.b,
                            config.max_stale, config.max_iter, base + r)
        out.append(run_proclus(S, cfg))
    return out
