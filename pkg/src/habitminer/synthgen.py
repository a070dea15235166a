"""Synthetic call-record datasets with planted subspace patterns."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import (
    DAY_PERIODS,
    PREV_CALL_CAP,
    SECTION_NAMES,
    TIMESTAMP_FORMAT,
    WEEK_DAYS,
    CdrRecord,
    Dataset,
    day_period_of,
    hours_of_period,
    work_day_of,
)

DEFAULT_PALETTE = (60, 61, 64, 138, 198)
DEFAULT_JITTER = {"conn_time": 1, "prev_call": 30}


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class PlantedPattern:
    """Records sharing fixed values on a few features; other features are uniform.

    ``fixed`` maps feature names to values. Fixing ``week_day`` implies
    ``work_day`` and fixing ``conn_time`` implies ``day_period``; the implied
    features count as relevant.
    """

    fixed: Mapping[str, object]
    size: int
    jitter: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_JITTER))
    name: str = ""

    def __post_init__(self):
        unknown = set(self.fixed) - set(SECTION_NAMES)
        if unknown:
            raise PatternError(f"unknown features {sorted(unknown)}")
        f = self.fixed
        if "week_day" in f and f["week_day"] not in WEEK_DAYS:
            raise PatternError(f"bad week_day {f['week_day']!r}")
        if "day_period" in f and f["day_period"] not in DAY_PERIODS:
            raise PatternError(f"bad day_period {f['day_period']!r}")
        if "conn_time" in f and not (isinstance(f["conn_time"], int) and 0 <= f["conn_time"] <= 23):
            raise PatternError(f"hour {f['conn_time']!r} outside [0, 23]")
        if "work_day" in f and f["work_day"] not in (0, 1):
            raise PatternError("work_day must be 0 or 1")
        if "prev_call" in f and not 0 <= f["prev_call"] <= PREV_CALL_CAP:
            raise PatternError("prev_call outside [0, 1440]")
        if "subref_id" in f and not 1 <= f["subref_id"] <= 255:
            raise PatternError("subref_id outside [1, 255]")
        if "week_day" in f and "work_day" in f and work_day_of(f["week_day"]) != f["work_day"]:
            raise PatternError("week_day and work_day disagree")
        if "conn_time" in f and "day_period" in f and day_period_of(f["conn_time"]) != f["day_period"]:
            raise PatternError("conn_time and day_period disagree")
        if len(self.relevant) < 2:
            raise PatternError("a pattern needs at least two relevant features")
        if self.size < 2:
            raise PatternError("a pattern needs at least two members")

    @property
    def relevant(self) -> frozenset[str]:
        rel = set(self.fixed)
        if "week_day" in rel:
            rel.add("work_day")
        if "conn_time" in rel:
            rel.add("day_period")
        return frozenset(rel)

    def relevant_indices(self) -> tuple[int, ...]:
        return tuple(i for i, name in enumerate(SECTION_NAMES) if name in self.relevant)


@dataclass
class GroundTruth:
    labels: np.ndarray
    relevant: list[tuple[int, ...]]
    names: list[str]

    def members(self, pattern: int) -> np.ndarray:
        return np.flatnonzero(self.labels == pattern)

    def to_json(self) -> dict:
        return {
            "labels": [int(x) for x in self.labels],
            "patterns": [
                {"name": nm, "relevant": [SECTION_NAMES[i] for i in rel], "size": int((self.labels == p).sum())}
                for p, (nm, rel) in enumerate(zip(self.names, self.relevant))
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GroundTruth":
        return cls(
            np.asarray(doc["labels"], dtype=np.int64),
            [tuple(SECTION_NAMES.index(r) for r in p["relevant"]) for p in doc["patterns"]],
            [p["name"] for p in doc["patterns"]],
        )


def _draw(rng: np.random.Generator, fixed: Mapping[str, object], jitter: Mapping[str, int], palette) -> CdrRecord:
    subref = fixed.get("subref_id")
    if subref is None:
        subref = int(palette[int(rng.integers(len(palette)))])

    if "week_day" in fixed:
        week_day = fixed["week_day"]
    elif "work_day" in fixed:
        days = [d for d in WEEK_DAYS if work_day_of(d) == fixed["work_day"]]
        week_day = days[int(rng.integers(len(days)))]
    else:
        week_day = WEEK_DAYS[int(rng.integers(7))]

    if "conn_time" in fixed:
        hour = int(fixed["conn_time"])
        j = int(jitter.get("conn_time", 0))
        if j:
            hour = (hour + int(rng.integers(-j, j + 1))) % 24
    elif "day_period" in fixed:
        hours = hours_of_period(fixed["day_period"])
        hour = hours[int(rng.integers(len(hours)))]
    else:
        hour = int(rng.integers(24))

    if "prev_call" in fixed:
        gap = int(fixed["prev_call"])
        j = int(jitter.get("prev_call", 0))
        if j:
            gap = int(np.clip(gap + rng.integers(-j, j + 1), 0, PREV_CALL_CAP))
    else:
        gap = int(rng.integers(PREV_CALL_CAP + 1))

    period = fixed.get("day_period", day_period_of(hour))
    if "conn_time" in fixed and jitter.get("conn_time"):
        period = day_period_of(hour)
    return CdrRecord(subref, week_day, work_day_of(week_day), hour, period, gap)


def generate(
    patterns: Sequence[PlantedPattern],
    noise: int,
    seed: int,
    palette: Sequence[int] = DEFAULT_PALETTE,
) -> tuple[Dataset, GroundTruth]:
    """Draw pattern members and uniform noise records, then shuffle by seed.

    Labels are pattern indices, -1 for noise.
    """
    total = sum(p.size for p in patterns) + noise
    if total < 10:
        raise PatternError("need at least 10 records in total")
    if not palette or any(not 1 <= s <= 255 for s in palette):
        raise PatternError("palette must hold prefecture ids in [1, 255]")
    rng = np.random.default_rng(seed)
    records: list[CdrRecord] = []
    labels: list[int] = []
    for idx, pat in enumerate(patterns):
        for _ in range(pat.size):
            records.append(_draw(rng, pat.fixed, pat.jitter, palette))
            labels.append(idx)
    for _ in range(noise):
        records.append(_draw(rng, {}, {}, palette))
        labels.append(-1)
    order = rng.permutation(total)
    records = [records[i] for i in order]
    label_arr = np.asarray(labels, dtype=np.int64)[order]
    truth = GroundTruth(
        label_arr,
        [p.relevant_indices() for p in patterns],
        [p.name or f"pattern{i}" for i, p in enumerate(patterns)],
    )
    return Dataset(records), truth


BENCHMARK_PALETTE = (58, 60, 61, 64, 90, 112, 138, 150, 198, 201)


def benchmark_patterns(size: int = 100, jitter: Mapping[str, int] | None = None) -> list[PlantedPattern]:
    """Four habits of one subscriber, each fixing three independent features."""
    j = {} if jitter is None else dict(jitter)
    return [
        PlantedPattern({"subref_id": 60, "week_day": "Sat", "day_period": "Mor"}, size, j, "sat-morning-home"),
        PlantedPattern({"subref_id": 61, "week_day": "Tue", "day_period": "Aft"}, size, j, "tue-afternoon"),
        PlantedPattern({"subref_id": 64, "week_day": "Sun", "conn_time": 21}, size, j, "sun-evening"),
        PlantedPattern({"subref_id": 138, "week_day": "Thu", "conn_time": 15}, size, j, "thu-15h"),
    ]


def benchmark(seed: int = 0, size: int = 100, noise: int = 100, palette: Sequence[int] = BENCHMARK_PALETTE):
    """The zero-jitter 4-pattern benchmark: 4 x ``size`` members plus ``noise`` records."""
    return generate(benchmark_patterns(size), noise, seed, palette)


def to_raw_lines(
    records: Sequence[CdrRecord],
    user_id: str = "4",
    seed: int = 0,
    start: datetime = datetime(2011, 12, 5),
    weeks: int = 20,
) -> tuple[list[str], np.ndarray]:
    """Render records as raw 3-column lines with timestamps matching their calendar fields.

    Each record gets a random week in the observation window, its own weekday
    and hour, and a random minute. Lines are sorted by timestamp; the returned
    permutation maps line positions to record indices. ``prev_call`` is not
    preserved because ingestion recomputes it from the timestamps.
    """
    rng = np.random.default_rng(seed)
    monday = start - timedelta(days=start.weekday())
    stamps = []
    for r in records:
        day = monday + timedelta(weeks=int(rng.integers(weeks)), days=WEEK_DAYS.index(r.week_day))
        stamps.append(day + timedelta(hours=r.conn_time, minutes=int(rng.integers(60)), seconds=int(rng.integers(60))))
    order = sorted(range(len(records)), key=lambda i: stamps[i])
    lines = [f"{user_id}\t{stamps[i].strftime(TIMESTAMP_FORMAT)}\t{records[i].subref_id}" for i in order]
    return lines, np.asarray(order, dtype=np.int64)


def write_benchmark(raw_path, truth_path, seed: int = 0, size: int = 100, noise: int = 100, user_id: str = "4"):
    dataset, truth = benchmark(seed, size, noise)
    lines, order = to_raw_lines(dataset.records, user_id, seed)
    with open(raw_path, "w", encoding="utf-8") as fh:
        fh.write("# user_id\tconn_datetime\tsubref_id\n")
        fh.write("\n".join(lines) + "\n")
    reordered = GroundTruth(truth.labels[order], truth.relevant, truth.names)
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(reordered.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return reordered


def _jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


@dataclass
class RecoveryReport:
    jaccard: list[float]
    feature_recovery: list[float]
    matched: list[int | None]

    @property
    def mean_feature_recovery(self) -> float:
        return float(np.mean(self.feature_recovery)) if self.feature_recovery else 0.0


def score_recovery(found: Iterable[tuple[Iterable[int], Iterable[int]]], truth: GroundTruth) -> RecoveryReport:
    """Best Jaccard per planted pattern and the share of its relevant features recovered.

    ``found`` yields ``(members, selected feature indices)`` pairs, e.g. a
    meta-cluster with its top configuration or a PROCLUS cluster with its
    dimensions.
    """
    found = [(set(int(i) for i in m), set(int(f) for f in feats)) for m, feats in found]
    jac, rec, matched = [], [], []
    for p, relevant in enumerate(truth.relevant):
        planted = set(int(i) for i in truth.members(p))
        best, best_idx = 0.0, None
        for idx, (members, _) in enumerate(found):
            j = _jaccard(planted, members)
            if j > best:
                best, best_idx = j, idx
        jac.append(best)
        matched.append(best_idx)
        if best_idx is None:
            rec.append(0.0)
        else:
            rec.append(len(set(relevant) & found[best_idx][1]) / len(relevant))
    return RecoveryReport(jac, rec, matched)
