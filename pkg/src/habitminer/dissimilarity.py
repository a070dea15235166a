"""Section dissimilarities and the weighted composite over sectioned vectors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ingest import DatasetSchema, Section

N_SECTIONS = 6
PERIOD = 24.0
HALF_PERIOD = 12.0


class DomainError(ValueError):
    """Raised for values outside a section's domain."""


class SchemaMismatchError(ValueError):
    """Raised when two vectors do not share the same section layout."""


class PCExhausted(LookupError):
    """No valid parameter configuration is left to sample."""


@dataclass(frozen=True, order=True)
class ParameterConfig:
    """Boolean selection of the sections that count in the composite dissimilarity."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != N_SECTIONS or any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"expected {N_SECTIONS} Boolean entries, got {self.bits!r}")
        if sum(self.bits) < 2:
            raise ValueError("a parameter configuration needs at least two selected sections")

    @classmethod
    def from_string(cls, text: str) -> "ParameterConfig":
        return cls(tuple(int(c) for c in text))

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.float64)

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


VALID_PCS: tuple[ParameterConfig, ...] = tuple(
    ParameterConfig(bits)
    for bits in itertools.product((0, 1), repeat=N_SECTIONS)
    if sum(bits) >= 2
)


def d_manhattan(a, b, lo: float, hi: float) -> float:
    """Sum of absolute differences scaled by the section range; 0 on a constant section."""
    if hi <= lo:
        return 0.0
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    return float(np.abs(a - b).sum() / (hi - lo))


def d_delta(a, b) -> float:
    return 0.0 if a == b else 1.0


def d_circular(a: float, b: float) -> float:
    for v in (a, b):
        if not 0 <= v < PERIOD:
            raise DomainError(f"hour {v!r} outside [0, 24)")
    t1 = abs(a - b)
    t2 = min(abs(PERIOD - b + a), abs(PERIOD - a + b))
    return min(t1, t2) / HALF_PERIOD


@dataclass(frozen=True)
class SectionMeasure:
    kind: str
    lo: float = 0.0
    hi: float = 0.0

    @classmethod
    def for_section(cls, section: Section) -> "SectionMeasure":
        if section.kind == "nominal":
            return cls("delta")
        if section.kind == "circular":
            return cls("circular", 0.0, PERIOD)
        return cls("manhattan_normalized", section.min, section.max)

    def __call__(self, a, b) -> float:
        if self.kind == "delta":
            return d_delta(a, b)
        if self.kind == "circular":
            return d_circular(a, b)
        return d_manhattan(a, b, self.lo, self.hi)

    def pairwise(self, col_a: np.ndarray, col_b: np.ndarray) -> np.ndarray:
        """Broadcast the measure over two column vectors, shape (len(a), len(b))."""
        a = np.asarray(col_a, dtype=np.float64)[:, None]
        b = np.asarray(col_b, dtype=np.float64)[None, :]
        if self.kind == "delta":
            return (a != b).astype(np.float64)
        if self.kind == "circular":
            diff = np.abs(a - b)
            return np.minimum(diff, PERIOD - diff) / HALF_PERIOD
        if self.hi <= self.lo:
            return np.zeros((a.shape[0], b.shape[1]))
        return np.abs(a - b) / (self.hi - self.lo)


def measures_for(schema: DatasetSchema) -> tuple[SectionMeasure, ...]:
    return tuple(SectionMeasure.for_section(sec) for sec in schema.sections)


def _weights(pc) -> np.ndarray:
    if isinstance(pc, ParameterConfig):
        return pc.weights
    w = np.asarray(pc, dtype=np.float64)
    if w.shape != (N_SECTIONS,) or np.any(w < 0) or np.any(w > 1):
        raise ValueError("weights must be a length-6 vector in [0, 1]")
    return w


def d_composite(u_a: Sequence, u_b: Sequence, pc, schema: DatasetSchema) -> float:
    """Weighted sum of section dissimilarities.

    ``pc`` is a ParameterConfig or any real weight vector in the unit hypercube.
    """
    if len(u_a) != schema.s or len(u_b) != schema.s:
        raise SchemaMismatchError(
            f"vectors of length {len(u_a)} and {len(u_b)} do not match {schema.s} sections"
        )
    w = _weights(pc)
    total = 0.0
    for weight, measure, a, b in zip(w, measures_for(schema), u_a, u_b):
        if weight:
            total += weight * measure(a, b)
    return total


def pairwise_sections(X: np.ndarray, schema: DatasetSchema, Y: np.ndarray | None = None) -> np.ndarray:
    """Per-section dissimilarities between rows of X and rows of Y, shape (s, len(X), len(Y))."""
    Y = X if Y is None else Y
    if X.shape[1] != schema.s or Y.shape[1] != schema.s:
        raise SchemaMismatchError("matrix width does not match the schema")
    return np.stack([m.pairwise(X[:, j], Y[:, j]) for j, m in enumerate(measures_for(schema))])


def composite_matrix(sections: np.ndarray, pc) -> np.ndarray:
    """Combine a per-section stack into the composite dissimilarity matrix."""
    w = _weights(pc)
    out = np.zeros(sections.shape[1:])
    for weight, layer in zip(w, sections):
        if weight:
            out += weight * layer
    return out


def sample_pc(rng: np.random.Generator, exclusions: Iterable[ParameterConfig] = ()) -> ParameterConfig:
    """Draw uniformly among valid configurations that are not excluded."""
    excluded = set(exclusions)
    support = [pc for pc in VALID_PCS if pc not in excluded]
    if not support:
        raise PCExhausted("every valid parameter configuration is excluded")
    return support[int(rng.integers(len(support)))]
