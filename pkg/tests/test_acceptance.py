"""End-to-end acceptance checks, one test per criterion.

Run ``pytest tests/test_acceptance.py -v`` to get the PASS/FAIL table in the
terminal summary. The LD-ABCD runs shared by criteria 3 and 4 take a few
minutes on one core.
"""

import json
import time

import numpy as np
import pytest

from habitminer import synthgen
from habitminer.analysis import analyze, pca3, stability_report
from habitminer.cli import EXIT_OK, main
from habitminer.dissimilarity import d_circular, d_delta, d_manhattan
from habitminer.engine import EngineConfig, cluster_quality, run_engine
from habitminer.graph import graph_from_weights, pick_tau, sweep_tau
from habitminer.ingest import load_dataset
from habitminer.proclus import ProclusConfig, proclus_runs, run_proclus, segmental_distances
from habitminer.report import dumps

from oracles import conductance_all_subsets, exhaustive_assignment, principal_angles, subspace_from_svd

criterion = pytest.mark.criterion
STABILITY_SEEDS = range(10)


def _report(number, **values):
    parts = ", ".join(f"{k}={v}" for k, v in values.items())
    print(f"\n[criterion {number}] {parts}")


@pytest.fixture(scope="module")
def ldabcd_runs(bench, bench_run):
    ds, _ = bench
    runs, times = [bench_run[0]], [bench_run[1]]
    for seed in STABILITY_SEEDS[1:]:
        t = time.perf_counter()
        runs.append(analyze(run_engine(ds, EngineConfig(seed=seed)), len(ds)))
        times.append(time.perf_counter() - t)
    return runs, times


@criterion(1, "dissimilarity axioms on 1e5 pairs per measure")
def test_dissimilarity_axioms():
    t = time.perf_counter()
    rng = np.random.default_rng(0)
    n = 100_000
    assert abs(d_circular(0, 12) - 1.0) < 1e-12
    assert abs(d_circular(2, 23) - 0.25) < 1e-12

    gaps = rng.integers(0, 1441, size=(n, 2))
    hours = np.where(rng.random((n, 1)) < 0.5, rng.integers(0, 24, size=(n, 2)), rng.random((n, 2)) * 24)
    names = rng.choice(np.array(["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]), size=(n, 2))
    cases = [
        (lambda a, b: d_manhattan(a, b, 0, 1440), gaps.tolist()),
        (d_circular, hours.tolist()),
        (d_delta, names.tolist()),
    ]
    for measure, pairs in cases:
        for a, b in pairs:
            ab = measure(a, b)
            assert ab >= 0.0
            assert ab == measure(b, a)
            assert (ab == 0.0) == (a == b)
            assert measure(a, a) == 0.0
    elapsed = time.perf_counter() - t
    _report(1, seconds=round(elapsed, 2))
    assert elapsed < 5.0


@criterion(2, "conductance matches exhaustive subset enumeration")
def test_conductance_oracle():
    t = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for g in range(200):
        n = int(rng.integers(2, 13))
        W = rng.random((n, n)) ** 2
        if g % 3 == 0:
            W[rng.random((n, n)) < 0.4] = 0.0
        # symmetric with a small positive floor so no node has zero degree
        W = np.triu(W, 1)
        W = W + W.T + 1e-3
        np.fill_diagonal(W, 0.0)
        graph = graph_from_weights(W)
        subsets, expected = conductance_all_subsets(W)
        assert len(subsets) == 2**n - 2
        for subset, cq in zip(subsets, expected):
            worst = max(worst, abs(cluster_quality(subset, graph) - cq))
    elapsed = time.perf_counter() - t
    _report(2, max_abs_error=worst, seconds=round(elapsed, 1))
    assert worst <= 1e-12
    assert elapsed < 60.0


@criterion(3, "planted-pattern recovery on the 4-pattern benchmark")
def test_planted_pattern_recovery(bench, ldabcd_runs):
    _, truth = bench
    runs, times = ldabcd_runs
    run = runs[0]
    reps = run.representatives()
    rec = synthgen.score_recovery([(m.members, m.top_pc.selected) for m in reps], truth)
    _report(3, tau_exp=run.result.tau_exp, regions=len(run.regions), jaccard=np.round(rec.jaccard, 3).tolist(),
            feature_recovery=np.round(rec.feature_recovery, 3).tolist(), seconds=round(times[0], 1))
    assert len(run.regions) >= 4
    assert min(rec.jaccard) >= 0.8
    assert min(rec.feature_recovery) >= 0.8
    assert times[0] < 300


@criterion(4, "LD-ABCD stability over 10 seeds")
def test_ldabcd_stability(ldabcd_runs):
    runs, times = ldabcd_runs
    rep = stability_report(runs, "ldabcd")
    _report(4, region_counts=rep.per_run, mean_pairing_jaccard=round(rep.extra["mean_pairing_jaccard"], 4),
            seconds=round(sum(times), 1))
    assert len(set(rep.per_run)) == 1
    assert rep.extra["mean_pairing_jaccard"] >= 0.9
    assert sum(times) < 1800


def _monotone_band(values, decreasing):
    """Half the largest move against the trend: the sup error of the best monotone fit."""
    v = np.asarray(values, dtype=np.float64)
    if not decreasing:
        v = -v
    rise = max((v[j] - v[:j].min() for j in range(1, len(v))), default=0.0)
    return rise / 2


def _reference_plateau(curve, band=0.05):
    """Longest tau interval over which both curves stay within +-band of their midrange."""
    s = np.asarray(curve.mean_size)
    c = np.asarray(curve.mean_cq)

    def flat(x):
        return x.max() - x.min() <= band * (x.max() + x.min())

    best = (0, 0, 0)
    for i in range(len(s)):
        for j in range(i + 1, len(s) + 1):
            if not (flat(s[i:j]) and flat(c[i:j])):
                break
            if j - i > best[0]:
                best = (j - i, i, j)
    _, i, j = best
    return curve.tau[i], curve.tau[j - 1]


@criterion(5, "tau_exp sweep shape and plateau pick")
def test_sweep_shape(bench):
    ds, _ = bench
    t = time.perf_counter()
    coarse = sweep_tau(ds, 1, 120, step=5, walks_per_value=30)
    chosen = pick_tau(coarse)
    coarse_seconds = time.perf_counter() - t
    reference = sweep_tau(ds, 1, 120, step=1, walks_per_value=150)
    lo, hi = _reference_plateau(reference)
    elapsed = time.perf_counter() - t
    size_dev = _monotone_band(coarse.mean_size, decreasing=True) / max(coarse.mean_size)
    cq_dev = _monotone_band(coarse.mean_cq, decreasing=False) / max(coarse.mean_cq)
    _report(5, points=len(coarse), size_band=round(size_dev, 4), cq_band=round(cq_dev, 4), pick=chosen,
            plateau=(lo, hi), coarse_seconds=round(coarse_seconds, 1), seconds=round(elapsed, 1))
    assert len(coarse) >= 10
    assert size_dev <= 0.05
    assert cq_dev <= 0.05
    assert lo <= chosen <= hi
    assert elapsed < 600


@criterion(6, "PROCLUS partition, dimension budget and exhaustive assignment")
def test_proclus_correctness():
    mixed, _ = synthgen.benchmark(0, size=70, noise=120)
    cfg = ProclusConfig(k=4, l=5, min_dev=0.1)
    for res in proclus_runs(mixed, cfg, 50):
        counts = np.zeros(len(mixed), dtype=int)
        for c in res.clusters:
            counts[list(c.members)] += 1
        counts[list(res.outliers)] += 1
        assert np.all(counts == 1)
        assert sum(len(d) for d in res.dims) == cfg.k * cfg.l
        assert all(len(d) >= 2 for d in res.dims)

    small, _ = synthgen.generate(synthgen.benchmark_patterns(12)[:2], 6, seed=0, palette=synthgen.BENCHMARK_PALETTE)
    assert len(small) == 30
    S = small.section_dissimilarities()
    for seed in range(5):
        res = run_proclus(small, ProclusConfig(k=2, l=3, seed=seed))
        oracle = exhaustive_assignment(segmental_distances(S, res.medoids, res.dims))
        assert np.array_equal(res.assignment, oracle)
    _report(6, runs=50, oracle_instances=5)


@criterion(7, "PROCLUS outlier-fraction instability over 200 runs")
def test_proclus_instability():
    t = time.perf_counter()
    ds, truth = synthgen.benchmark(0, size=70, noise=120)
    assert (truth.labels == -1).mean() == pytest.approx(0.3)
    results = proclus_runs(ds, ProclusConfig(k=4, l=5, min_dev=0.1), 200)
    rep = stability_report(results, "proclus")
    elapsed = time.perf_counter() - t
    _report(7, mean=round(rep.mean, 4), std=round(rep.std, 4), max=round(rep.extra["max"], 4),
            seconds=round(elapsed, 1))
    assert rep.std > 0.05
    assert rep.extra["max"] > 0.3
    assert elapsed < 600


@criterion(8, "pca3 subspace matches a full decomposition")
def test_pca_oracle():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(5, 41))
        n = int(rng.integers(10, 201))
        C = rng.random((m, n)) < rng.uniform(0.1, 0.6)
        proj = pca3(C)
        worst = max(worst, principal_angles(proj.loadings, subspace_from_svd(C)).max())
    _report(8, max_angle=worst)
    assert worst < 1e-8


@criterion(9, "CLI runs are byte-identical for a fixed seed")
def test_pipeline_determinism(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "in")]) == EXIT_OK
    raw = tmp_path / "in" / "benchmark.tsv"
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["run", "--input", str(raw), "--out", str(out), "--engine", "both", "--seed", "7"]) == EXIT_OK
        outs.append(out)
    a, b = outs
    jsons = sorted(p.name for p in a.glob("*.json"))
    assert jsons == sorted(p.name for p in b.glob("*.json"))
    for name in jsons:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["config_sha256"] == mb["config_sha256"]
    assert ma["artifacts"] == mb["artifacts"]
    _report(9, json_files=len(jsons), artifacts=len(ma["artifacts"]))


@criterion(10, "preprocessing golden file")
def test_preprocessing_golden(data_dir):
    ds, parsed = load_dataset(data_dir / "golden_raw.tsv")
    assert parsed.malformed == 0 and len(ds) == 20
    text = dumps([r.as_dict() for r in ds.records])
    assert text == (data_dir / "golden_records.json").read_text(encoding="utf-8")
    _report(10, records=len(ds))
