"""Post-processing of clustering results: PCA of meta-cluster memberships,
dense-region detection, cross-run pairing and stability statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class Projection3:
    scores: np.ndarray
    cq: np.ndarray
    explained: np.ndarray
    loadings: np.ndarray
    truncated: bool = False
    quality: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.scores.shape[0]


def membership_matrix(metaclusters, n: int | None = None) -> np.ndarray:
    rows = [np.asarray(mc.membership, dtype=bool) for mc in metaclusters]
    if not rows:
        return np.zeros((0, n or 0), dtype=bool)
    return np.vstack(rows)


def pca3(C: np.ndarray, cq: Sequence[float] | None = None, n_components: int = 3) -> Projection3:
    """Scores of the rows of ``C`` on its leading principal components.

    Columns are mean-centred and the eigenproblem is solved on the small
    M x M Gram matrix, which shares its non-zero spectrum with the N x N
    covariance. Each component's sign makes its largest-magnitude loading
    positive. With fewer than three rows the available components are
    returned and ``truncated`` is set.

    ``quality`` is the squared cosine of each row: the share of its centred
    squared norm kept by the projection (1 for rows at the mean).
    """
    A = np.asarray(C, dtype=np.float64)
    m = A.shape[0]
    cq = np.zeros(m) if cq is None else np.asarray(cq, dtype=np.float64)
    if m == 0:
        return Projection3(np.zeros((0, 0)), cq, np.zeros(0), np.zeros((A.shape[1], 0)), True, np.zeros(0))
    Ac = A - A.mean(axis=0)
    gram = Ac @ Ac.T
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    k = min(n_components, m)
    truncated = m < n_components
    scale = np.sqrt(evals[:k])
    tol = max(evals[0], 1.0) * 1e-12 if evals.size else 0.0
    loadings = np.zeros((A.shape[1], k))
    for c in range(k):
        if evals[c] > tol:
            loadings[:, c] = Ac.T @ evecs[:, c] / scale[c]
    for c in range(k):
        col = loadings[:, c]
        if col.any() and col[np.argmax(np.abs(col))] < 0:
            loadings[:, c] = -col
    scores = Ac @ loadings
    total = evals.sum()
    explained = evals[:k] / total if total > 0 else np.zeros(k)
    norms = (Ac**2).sum(axis=1)
    kept = (scores**2).sum(axis=1)
    quality = np.where(norms > 1e-12, kept / np.where(norms > 1e-12, norms, 1.0), 1.0)
    return Projection3(scores, cq, explained, loadings, truncated, np.minimum(quality, 1.0))


@dataclass
class DenseRegion:
    members: tuple[int, ...]
    representative: int
    centroid: np.ndarray


def find_dense_regions(
    proj: Projection3,
    radius: float = 0.5,
    min_size: int = 3,
    min_fraction: float = 0.05,
    min_quality: float = 0.35,
) -> list[DenseRegion]:
    """Greedy mode seeking in the per-axis standardized score space.

    Only points whose projection quality reaches ``min_quality`` take part:
    rows that are nearly orthogonal to the three components all collapse
    onto the origin and would otherwise look like a dense cloud.

    The point with the most neighbours within ``radius`` (ties: lowest index)
    seeds a region made of that neighbourhood; the region is removed and the
    search repeats until the best neighbourhood holds fewer than
    ``max(min_size, ceil(min_fraction * M))`` points, so that specks of a few
    points do not count as regions in large projections. A region's
    representative is its highest-CQ member.
    """
    S = np.asarray(proj.scores, dtype=np.float64)
    m = S.shape[0]
    if m == 0:
        return []
    floor = max(min_size, int(np.ceil(min_fraction * m)))
    std = S.std(axis=0)
    Z = np.where(std > 0, (S - S.mean(axis=0)) / np.where(std > 0, std, 1.0), 0.0)
    dist = np.sqrt(((Z[:, None, :] - Z[None, :, :]) ** 2).sum(axis=-1))
    near = dist <= radius
    alive = np.ones(m, dtype=bool) if proj.quality is None else proj.quality >= min_quality
    near &= alive[:, None]
    regions = []
    while alive.any():
        counts = (near & alive[None, :]).sum(axis=1)
        counts[~alive] = -1
        seed = int(np.argmax(counts))
        if counts[seed] < floor:
            break
        members = np.flatnonzero(near[seed] & alive)
        cqs = proj.cq[members]
        rep = int(members[int(np.argmax(cqs))])
        regions.append(DenseRegion(tuple(int(i) for i in members), rep, S[members].mean(axis=0)))
        alive[members] = False
    return regions


def _as_set(c) -> set:
    if hasattr(c, "members"):
        c = c.members
    return set(int(i) for i in c)


def jaccard(a: Iterable[int], b: Iterable[int]) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


@dataclass
class Pairing:
    pairs: list[tuple[int, int, float]]
    unmatched_a: list[int]
    unmatched_b: list[int]

    @property
    def mean_overlap(self) -> float:
        return float(np.mean([p[2] for p in self.pairs])) if self.pairs else 0.0


def best_match_pairing(run_a: Sequence, run_b: Sequence) -> Pairing:
    """Best Match First: repeatedly pair the remaining clusters with the highest Jaccard.

    Ties go to the lowest (a, b) index pair. Clusters may be member
    collections or objects with a ``members`` attribute.
    """
    A = [_as_set(c) for c in run_a]
    B = [_as_set(c) for c in run_b]
    table = np.array([[jaccard(a, b) for b in B] for a in A]).reshape(len(A), len(B))
    free_a, free_b = set(range(len(A))), set(range(len(B)))
    pairs = []
    while free_a and free_b:
        best = max(((table[i, j], -i, -j) for i in free_a for j in free_b))
        i, j = -best[1], -best[2]
        pairs.append((i, j, float(table[i, j])))
        free_a.discard(i)
        free_b.discard(j)
    return Pairing(pairs, sorted(free_a), sorted(free_b))


@dataclass
class StabilityReport:
    kind: str
    per_run: list[float]
    mean: float
    variance: float
    std: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "per_run": list(self.per_run),
            "mean": self.mean,
            "variance": self.variance,
            "std": self.std,
            **self.extra,
        }


def stability_report(runs: Sequence, kind: str, n: int | None = None) -> StabilityReport:
    """Summarize repeated runs.

    ``proclus``: ``runs`` are ProclusResult objects; reports the outlier
    fraction of each run. ``ldabcd``: ``runs`` are LdabcdRun objects (engine
    result plus dense regions); reports region counts and the mean
    best-match Jaccard of each run's representatives against the first run.
    """
    if len(runs) < 2:
        raise ValueError("stability needs at least two runs")
    if kind == "proclus":
        fractions = [r.outlier_fraction for r in runs]
        arr = np.asarray(fractions, dtype=np.float64)
        return StabilityReport(kind, fractions, float(arr.mean()), float(arr.var()), float(arr.std()),
                               {"max": float(arr.max()), "min": float(arr.min())})
    if kind == "ldabcd":
        counts = [len(r.regions) for r in runs]
        reps0 = runs[0].representatives()
        overlaps = []
        for r in runs[1:]:
            pairing = best_match_pairing(reps0, r.representatives())
            overlaps.append(pairing.mean_overlap)
        arr = np.asarray(counts, dtype=np.float64)
        return StabilityReport(
            kind, [float(c) for c in counts], float(arr.mean()), float(arr.var()), float(arr.std()),
            {
                "metacluster_counts": [len(r.result.metaclusters) for r in runs],
                "pairing_jaccard": overlaps,
                "mean_pairing_jaccard": float(np.mean(overlaps)),
            },
        )
    raise ValueError(f"unknown run kind {kind!r}")


@dataclass
class LdabcdRun:
    """An engine result with its projection and dense regions."""

    result: object
    projection: Projection3
    regions: list[DenseRegion]

    def representatives(self):
        return [self.result.metaclusters[reg.representative] for reg in self.regions]


def analyze(
    result, n: int, radius: float = 0.5, min_size: int = 3, min_fraction: float = 0.05, min_quality: float = 0.35
) -> LdabcdRun:
    mcs = result.metaclusters
    C = membership_matrix(mcs, n)
    proj = pca3(C, [mc.best_cq for mc in mcs])
    return LdabcdRun(result, proj, find_dense_regions(proj, radius, min_size, min_fraction, min_quality))
