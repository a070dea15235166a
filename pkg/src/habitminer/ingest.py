"""Parsing and augmentation of raw call data records.

A raw record is the triple ``(user_id, conn_datetime, subref_id)``. Augmentation
derives the implicit calendar attributes and the gap to the previous call,
producing six-section records that the clustering engines consume.
"""

from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

WEEK_DAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
DAY_PERIODS = ("Mor", "Aft", "Eve")
SECTION_NAMES = ("subref_id", "week_day", "work_day", "conn_time", "day_period", "prev_call")
SECTION_KINDS = ("nominal", "nominal", "nominal", "circular", "nominal", "ordinal")

PREV_CALL_CAP = 1440
SUBREF_RANGE = (1, 255)
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


class EmptyDatasetError(ValueError):
    """Raised when no usable record is available."""


class PreconditionError(ValueError):
    """Raised when an operation receives input violating its precondition."""


@dataclass(frozen=True)
class RawCdr:
    user_id: str
    conn_datetime: datetime
    subref_id: int


@dataclass(frozen=True)
class CdrRecord:
    subref_id: int
    week_day: str
    work_day: int
    conn_time: int
    day_period: str
    prev_call: int

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in SECTION_NAMES}


@dataclass
class ParseResult:
    records: list[RawCdr]
    malformed: int = 0
    skipped_users: int = 0


@dataclass(frozen=True)
class Section:
    name: str
    kind: str
    min: float | None = None
    max: float | None = None
    constant: bool = False


@dataclass(frozen=True)
class DatasetSchema:
    sections: tuple[Section, ...]

    @property
    def s(self) -> int:
        return len(self.sections)

    @property
    def n(self) -> int:
        # every section of a call record is one-dimensional
        return len(self.sections)

    def names(self) -> tuple[str, ...]:
        return tuple(sec.name for sec in self.sections)


def day_period_of(hour: int) -> str:
    """Map an hour of the day to Mor (7-13), Aft (14-19) or Eve (20-6)."""
    if not 0 <= hour <= 23:
        raise ValueError(f"hour out of range: {hour}")
    if 7 <= hour <= 13:
        return "Mor"
    if 14 <= hour <= 19:
        return "Aft"
    return "Eve"


def hours_of_period(period: str) -> tuple[int, ...]:
    return tuple(h for h in range(24) if day_period_of(h) == period)


def work_day_of(week_day: str) -> int:
    return 0 if week_day in ("Sat", "Sun") else 1


_SPLIT = re.compile(r"\t|,")


def parse_raw(lines: Iterable[str] | io.TextIOBase, user_filter: str | None = None) -> ParseResult:
    """Read 3-column raw records and return the selected user's records sorted by time.

    Lines may be tab or comma separated. Lines starting with ``#`` and blank
    lines are ignored; anything else that does not parse is counted in
    ``ParseResult.malformed``. When ``user_filter`` is None the input must hold
    a single user.
    """
    parsed: list[RawCdr] = []
    malformed = 0
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in _SPLIT.split(line)]
        if len(parts) != 3:
            malformed += 1
            continue
        user, stamp, subref = parts
        try:
            when = datetime.strptime(stamp, TIMESTAMP_FORMAT)
            subref_id = int(subref)
        except ValueError:
            malformed += 1
            continue
        if not SUBREF_RANGE[0] <= subref_id <= SUBREF_RANGE[1] or not user:
            malformed += 1
            continue
        parsed.append(RawCdr(user, when, subref_id))

    if malformed:
        log.warning("skipped %d malformed line(s)", malformed)

    users = {r.user_id for r in parsed}
    skipped = 0
    if user_filter is not None:
        kept = [r for r in parsed if r.user_id == user_filter]
        skipped = len(parsed) - len(kept)
        parsed = kept
    elif len(users) > 1:
        raise PreconditionError(
            f"input holds {len(users)} users; select one with a user filter"
        )
    if not parsed:
        raise EmptyDatasetError("no valid records for the selected user")

    # sorted() is stable, so identical timestamps keep their input order
    parsed = sorted(parsed, key=lambda r: r.conn_datetime)
    return ParseResult(parsed, malformed, skipped)


def augment(records: Sequence[RawCdr]) -> list[CdrRecord]:
    """Derive week_day, work_day, conn_time, day_period and prev_call.

    ``prev_call`` is the whole number of minutes since the previous record,
    clamped to 1440; the first record has no predecessor and gets 1440.
    """
    out: list[CdrRecord] = []
    prev: datetime | None = None
    for raw in records:
        when = raw.conn_datetime
        if prev is None:
            gap = PREV_CALL_CAP
        else:
            if when < prev:
                raise PreconditionError("records must be sorted by timestamp")
            gap = min(PREV_CALL_CAP, int((when - prev).total_seconds() // 60))
        week_day = WEEK_DAYS[when.weekday()]
        out.append(
            CdrRecord(
                subref_id=raw.subref_id,
                week_day=week_day,
                work_day=work_day_of(week_day),
                conn_time=when.hour,
                day_period=day_period_of(when.hour),
                prev_call=gap,
            )
        )
        prev = when
    return out


def encode(records: Sequence[CdrRecord]) -> np.ndarray:
    """Numeric (N, 6) matrix of records; nominal values become integer codes."""
    X = np.empty((len(records), len(SECTION_NAMES)), dtype=np.float64)
    for i, r in enumerate(records):
        X[i] = (
            r.subref_id,
            WEEK_DAYS.index(r.week_day),
            r.work_day,
            r.conn_time,
            DAY_PERIODS.index(r.day_period),
            r.prev_call,
        )
    return X


def build_schema(records: Sequence[CdrRecord]) -> DatasetSchema:
    if not records:
        raise EmptyDatasetError("cannot build a schema from zero records")
    X = encode(records)
    sections = []
    for j, (name, kind) in enumerate(zip(SECTION_NAMES, SECTION_KINDS)):
        col = X[:, j]
        lo, hi = float(col.min()), float(col.max())
        if kind == "nominal":
            sections.append(Section(name, kind, constant=lo == hi))
        elif kind == "circular":
            sections.append(Section(name, kind, 0.0, 24.0, constant=lo == hi))
        else:
            sections.append(Section(name, kind, lo, hi, constant=lo == hi))
    return DatasetSchema(tuple(sections))


@dataclass
class Dataset:
    """Augmented records together with their schema and numeric encoding."""

    records: list[CdrRecord]
    schema: DatasetSchema = field(init=False)
    X: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.records:
            raise EmptyDatasetError("dataset is empty")
        self.records = list(self.records)
        self.schema = build_schema(self.records)
        self.X = encode(self.records)
        self.X.setflags(write=False)
        self._sections: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.records)

    def section_dissimilarities(self) -> np.ndarray:
        """Cached (s, N, N) stack of per-section dissimilarity matrices."""
        if self._sections is None:
            from .dissimilarity import pairwise_sections

            self._sections = pairwise_sections(self.X, self.schema)
            self._sections.setflags(write=False)
        return self._sections


def load_dataset(path, user: str | None = None) -> tuple[Dataset, ParseResult]:
    with open(path, encoding="utf-8") as fh:
        parsed = parse_raw(fh, user_filter=user)
    return Dataset(augment(parsed.records)), parsed
