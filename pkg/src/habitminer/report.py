"""Report artifacts: user summaries, per-meta-cluster pie charts, PC tables and SVG charts.

All writers are deterministic: JSON is emitted with sorted keys and SVG
files carry a fixed hash salt and no creation date.
"""

from __future__ import annotations

import csv
import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .ingest import DAY_PERIODS, SECTION_NAMES, WEEK_DAYS, CdrRecord, EmptyDatasetError  # noqa: E402

PREV_CALL_EDGES = (5, 15, 30, 60, 120, 360, 720, 1440)
PREV_CALL_LABELS = tuple(str(e) for e in PREV_CALL_EDGES) + (">1440",)

plt.rcParams["svg.hashsalt"] = "habitminer"
plt.rcParams["svg.fonttype"] = "none"


def prev_call_bin(minutes: float) -> str:
    """Label of the bin holding a gap: the first edge strictly above it, else the open last bin.

    Gaps are clamped to 1440 minutes at ingestion, so the last bin collects
    every gap of a day or more.
    """
    for edge, label in zip(PREV_CALL_EDGES, PREV_CALL_LABELS):
        if minutes < edge:
            return label
    return PREV_CALL_LABELS[-1]


def _normalized(counts: Counter, keys: Sequence) -> dict:
    total = sum(counts.values())
    return {str(k): counts.get(k, 0) / total for k in keys}


@dataclass
class UserSummary:
    n_records: int
    prefecture: dict
    prev_call: dict
    week_day: dict
    day_period: dict

    def to_json(self) -> dict:
        return {
            "n_records": self.n_records,
            "prefecture": self.prefecture,
            "prev_call": self.prev_call,
            "week_day": self.week_day,
            "day_period": self.day_period,
        }


def summarize_user(records: Sequence[CdrRecord]) -> UserSummary:
    """Share of calls per prefecture, gap bin, week day and day period."""
    if not records:
        raise EmptyDatasetError("no records to summarize")
    subrefs = Counter(r.subref_id for r in records)
    return UserSummary(
        len(records),
        _normalized(subrefs, sorted(subrefs)),
        _normalized(Counter(prev_call_bin(r.prev_call) for r in records), PREV_CALL_LABELS),
        _normalized(Counter(r.week_day for r in records), WEEK_DAYS),
        _normalized(Counter(r.day_period for r in records), DAY_PERIODS),
    )


@dataclass
class PieChart:
    feature: str
    slices: list[tuple[str, float]]

    @property
    def label(self) -> str:
        """Value of the largest slice, the only one labelled in the chart."""
        return self.slices[0][0]

    def to_json(self) -> dict:
        return {"feature": self.feature, "label": self.label, "slices": [[k, v] for k, v in self.slices]}


def _feature_value(record: CdrRecord, feature: str) -> str:
    if feature == "prev_call":
        return prev_call_bin(record.prev_call)
    return str(getattr(record, feature))


def render_metacluster_charts(members: Sequence[int], records: Sequence[CdrRecord]) -> list[PieChart]:
    """One value-frequency pie per feature over the given members.

    Slices are ordered by decreasing share, ties by value label; gaps are
    binned as in the user summary.
    """
    members = [int(i) for i in members]
    if not members:
        raise ValueError("a pie chart needs at least one member")
    charts = []
    for feature in SECTION_NAMES:
        counts = Counter(_feature_value(records[i], feature) for i in members)
        total = len(members)
        slices = sorted(((k, c / total) for k, c in counts.items()), key=lambda kv: (-kv[1], kv[0]))
        charts.append(PieChart(feature, slices))
    return charts


@dataclass
class PCTable:
    rows: list[tuple[str, float]]
    average: tuple[float, ...]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["pc", *SECTION_NAMES, "cq"])
            for bits, cq in self.rows:
                writer.writerow([bits, *bits, repr(float(cq))])
            writer.writerow(["avg", *(f"{a:.2f}" for a in self.average), ""])

    def to_json(self) -> dict:
        return {"rows": [{"bits": b, "cq": c} for b, c in self.rows], "average": list(self.average)}


def render_pc_table(pc_list) -> PCTable:
    """Rows of selection bits, one per configuration, and their per-feature mean.

    ``pc_list`` holds objects with ``pc`` and ``cq`` attributes (a
    meta-cluster's list) or bare ParameterConfig values.
    """
    rows = []
    for entry in pc_list:
        pc = getattr(entry, "pc", entry)
        cq = float(getattr(entry, "cq", float("nan")))
        rows.append((str(pc), cq))
    if not rows:
        raise ValueError("empty configuration list")
    bits = np.array([[int(c) for c in b] for b, _ in rows], dtype=np.float64)
    return PCTable(rows, tuple(float(x) for x in bits.mean(axis=0)))


# ---- serialization helpers --------------------------------------------------


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, doc) -> Path:
    path = Path(path)
    path.write_text(dumps(doc), encoding="utf-8")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


# ---- charts -----------------------------------------------------------------


def write_summary_svg(summary: UserSummary, path) -> Path:
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    panels = [
        ("calls per prefecture", summary.prefecture),
        ("time since previous call (min)", summary.prev_call),
        ("calls per week day", summary.week_day),
        ("calls per day period", summary.day_period),
    ]
    for ax, (title, dist) in zip(axes.ravel(), panels):
        ax.bar(range(len(dist)), list(dist.values()), color="0.4")
        ax.set_xticks(range(len(dist)))
        ax.set_xticklabels(list(dist.keys()), rotation=45 if len(dist) > 7 else 0, fontsize=8)
        ax.set_ylim(0, 1)
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def write_pies_svg(rows: Sequence[Sequence[PieChart]], path, titles: Sequence[str] | None = None) -> Path:
    """A grid of pie charts, one row per meta-cluster, the largest slice labelled."""
    n = max(len(rows), 1)
    fig, axes = plt.subplots(n, len(SECTION_NAMES), figsize=(2.2 * len(SECTION_NAMES), 2.2 * n), squeeze=False)
    for r, charts in enumerate(rows):
        for c, chart in enumerate(charts):
            ax = axes[r, c]
            shares = [s for _, s in chart.slices]
            labels = [chart.label] + [""] * (len(shares) - 1)
            ax.pie(shares, labels=labels, startangle=90, counterclock=False,
                   colors=plt.cm.tab20(np.arange(len(shares)) % 20), textprops={"fontsize": 8})
            if r == 0:
                ax.set_title(chart.feature, fontsize=9)
        if titles:
            axes[r, 0].set_ylabel(titles[r], fontsize=8)
    for ax in axes.ravel()[len(rows) * len(SECTION_NAMES):]:
        ax.axis("off")
    fig.tight_layout()
    return _save(fig, path)


def write_sweep_svg(curve, path, chosen: float | None = None) -> Path:
    fig, ax_size = plt.subplots(figsize=(7, 4))
    ax_cq = ax_size.twinx()
    ax_size.plot(curve.tau, curve.mean_size, color="tab:blue", marker=".", label="mean size")
    ax_cq.plot(curve.tau, curve.mean_cq, color="tab:red", marker=".", label="mean CQ")
    if chosen is not None:
        ax_size.axvline(chosen, color="0.5", linestyle="--")
    ax_size.set_xlabel("tau_exp")
    ax_size.set_ylabel("mean cluster size", color="tab:blue")
    ax_cq.set_ylabel("mean CQ", color="tab:red")
    fig.tight_layout()
    return _save(fig, path)


def write_projection_svg(proj, path, regions=()) -> Path:
    fig = plt.figure(figsize=(6, 5))
    S = proj.scores
    if S.shape[1] >= 3:
        ax = fig.add_subplot(projection="3d")
        sc = ax.scatter(S[:, 0], S[:, 1], S[:, 2], c=proj.cq, cmap="viridis", s=12)
        for reg in regions:
            p = S[reg.representative]
            ax.scatter([p[0]], [p[1]], [p[2]], facecolors="none", edgecolors="black", s=120)
        ax.set_zlabel("PC3")
    else:
        ax = fig.add_subplot()
        xs = S[:, 0] if S.shape[1] else np.zeros(len(S))
        ys = S[:, 1] if S.shape[1] > 1 else np.zeros(len(S))
        sc = ax.scatter(xs, ys, c=proj.cq, cmap="viridis", s=12)
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    fig.colorbar(sc, ax=ax, label="CQ", shrink=0.7)
    return _save(fig, path)


def write_outliers_svg(fractions: Sequence[float], path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    x = np.arange(1, len(fractions) + 1)
    ax.plot(x, fractions, color="tab:blue", linewidth=0.8)
    ax.axhline(float(np.mean(fractions)), color="tab:red", linestyle="--", label="mean")
    ax.set_xlabel("run")
    ax.set_ylabel("outlier fraction")
    ax.set_ylim(0, 1)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def write_projection_csv(proj, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        k = proj.scores.shape[1]
        writer.writerow([f"pc{i + 1}" for i in range(k)] + ["cq"])
        for row, cq in zip(proj.scores, proj.cq):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(cq))])
    return path
