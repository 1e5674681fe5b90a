"""Simple functions on labeled finite partitions of [0, 1].

Only the (value, measure) data of each cell is kept; there is no geometry.
Every norm used downstream is rearrangement invariant, so this loses
nothing, and labels give the cellwise algebra needed to add functions
living on the same partition.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadFractions,
    DuplicateLabel,
    MeasureOverflow,
    NonPositiveMeasure,
    PartitionMismatch,
    UnknownLabel,
)

MEASURE_TOL = 1e-12

__all__ = [
    "LabeledPartition",
    "SimpleFunction",
    "RearrangementProfile",
    "build",
    "from_arrays",
    "combine",
    "rearrange",
    "integral",
    "refine",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class LabeledPartition:
    """Ordered cells ``(label, measure)`` with distinct labels and total measure <= 1."""

    __slots__ = ("labels", "measures", "_index")

    def __init__(self, labels, measures):
        labels = tuple(labels)
        measures = _frozen(measures)
        if measures.ndim != 1 or len(labels) != measures.size:
            raise ValueError("labels and measures must have the same length")
        if not np.all(np.isfinite(measures)) or np.any(measures <= 0):
            raise NonPositiveMeasure(f"cell measures must be > 0, got {measures.tolist()}")
        index = {}
        for i, lab in enumerate(labels):
            if lab in index:
                raise DuplicateLabel(f"label {lab!r} appears twice")
            index[lab] = i
        total = float(measures.sum())
        if total > 1.0 + MEASURE_TOL:
            raise MeasureOverflow(f"total measure {total!r} exceeds 1")
        self.labels = labels
        self.measures = measures
        self._index = index

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, LabeledPartition):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.measures, other.measures)

    def __hash__(self):
        return hash((self.labels, self.measures.tobytes()))

    def __repr__(self):
        cells = ", ".join(f"{lab!r}:{m:g}" for lab, m in zip(self.labels, self.measures))
        return f"LabeledPartition({cells})"

    @property
    def total(self):
        return float(self.measures.sum())

    def index(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLabel(f"no cell labeled {label!r}") from None


class SimpleFunction:
    """``sum_k a_k * chi_{A_k}`` over a :class:`LabeledPartition`.

    The function vanishes off the partition's support. Instances are
    immutable; ``values`` is a read-only array aligned with
    ``partition.labels``.
    """

    __slots__ = ("partition", "values")

    def __init__(self, partition, values):
        values = _frozen(values)
        if values.shape != (len(partition),):
            raise ValueError("one value per partition cell is required")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        self.partition = partition
        self.values = values

    @property
    def measures(self):
        return self.partition.measures

    @property
    def labels(self):
        return self.partition.labels

    def __len__(self):
        return len(self.partition)

    def __getitem__(self, label):
        return float(self.values[self.partition.index(label)])

    def as_dict(self):
        return {lab: float(v) for lab, v in zip(self.labels, self.values)}

    def with_values(self, values):
        """Same partition, new coefficients."""
        return SimpleFunction(self.partition, values)

    def __repr__(self):
        cells = ", ".join(
            f"{lab!r}:{v:g}@{m:g}" for lab, v, m in zip(self.labels, self.values, self.measures)
        )
        return f"SimpleFunction({cells})"


@dataclass(frozen=True)
class RearrangementProfile:
    """Blocks of the decreasing rearrangement ``f*``.

    ``magnitudes`` are non-increasing; ``order[i]`` is the source cell that
    produced block ``i`` (equal magnitudes keep input order).
    """

    magnitudes: np.ndarray
    measures: np.ndarray
    order: np.ndarray

    @property
    def total(self):
        return float(self.measures.sum())

    @property
    def breakpoints(self):
        """Cumulative block boundaries ``0 = t_0 < t_1 < ... < t_r``."""
        return np.concatenate(([0.0], np.cumsum(self.measures)))

    def merged(self):
        """Merge adjacent blocks of equal magnitude; returns ``(magnitudes, measures)``."""
        mags, meas = [], []
        for a, m in zip(self.magnitudes, self.measures):
            if mags and mags[-1] == a:
                meas[-1] += m
            else:
                mags.append(float(a))
                meas.append(float(m))
        return np.array(mags), np.array(meas)

    def __call__(self, t):
        """Evaluate ``f*(t)``; zero beyond the support."""
        t = np.asarray(t, dtype=float)
        edges = np.cumsum(self.measures)
        idx = np.searchsorted(edges, t, side="right")
        padded = np.append(self.magnitudes, 0.0)
        return padded[np.minimum(idx, len(self.magnitudes))]


def build(cells):
    """Build a simple function from ``(label, measure, value)`` triples.

    >>> integral(build([("a", 0.25, 3.0), ("b", 0.75, -1.0)]))
    0.0
    """
    cells = list(cells)
    labels = [c[0] for c in cells]
    part = LabeledPartition(labels, [c[1] for c in cells])
    return SimpleFunction(part, [c[2] for c in cells])


def from_arrays(measures, values, labels=None):
    measures = np.asarray(measures, dtype=float)
    if labels is None:
        labels = range(measures.size)
    return SimpleFunction(LabeledPartition(labels, measures), values)


def combine(alpha, f, beta, g):
    """Cellwise ``alpha*f + beta*g``; both functions must share one partition."""
    if f.partition is not g.partition and f.partition != g.partition:
        raise PartitionMismatch("combine needs functions on an identical partition")
    return SimpleFunction(f.partition, alpha * f.values + beta * g.values)


def rearrange(f):
    mags = np.abs(f.values)
    order = np.argsort(-mags, kind="stable")
    profile = RearrangementProfile(_frozen(mags[order]), _frozen(f.measures[order]), order)
    assert np.all(np.diff(profile.magnitudes) <= 0)
    return profile


def integral(f):
    return float(np.dot(f.values, f.measures))


def refine(f, splits):
    """Split cells into sub-cells carrying the same value.

    ``splits`` maps a label to ``[(sub_label, fraction), ...]``; fractions
    must be positive and sum to one. The sub-cell label is the tuple
    ``(label, sub_label)``. Unlisted cells are kept as they are. The result
    lives on a new partition.
    """
    for lab in splits:
        f.partition.index(lab)
    labels, measures, values = [], [], []
    for lab, m, v in zip(f.labels, f.measures, f.values):
        parts = splits.get(lab)
        if parts is None:
            labels.append(lab)
            measures.append(m)
            values.append(v)
            continue
        fracs = np.array([fr for _, fr in parts], dtype=float)
        if fracs.size == 0 or np.any(fracs <= 0) or abs(fracs.sum() - 1.0) > MEASURE_TOL:
            raise BadFractions(f"fractions for {lab!r} must be positive and sum to 1, got {fracs.tolist()}")
        for (sub, _), fr in zip(parts, fracs):
            labels.append((lab, sub))
            measures.append(fr * m)
            values.append(v)
    return SimpleFunction(LabeledPartition(labels, measures), values)
