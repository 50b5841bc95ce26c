"""Pixel lattices, neighbourhood systems and segment partitions.

Conventions used throughout the package: grids are ``(height, width)``
float64 arrays indexed ``[row, col]`` with the origin at the top-left, and
every flattening is row-major.  Partitions are integer label maps whose
labels cover ``0..count-1`` with no empty label.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

# Neighbourhoods above this many pixels are summed with math.fsum.
COMPENSATED_SUM_THRESHOLD = 10_000


def as_grid(values, name="grid"):
    """Return `values` as a finite 2-D float64 array (copy-free when possible)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


def _check_labels(labels, count, what):
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.size == 0:
        raise ValueError(f"{what} labels must be a non-empty 2-D array")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError(f"{what} labels must be integers, got {labels.dtype}")
    if labels.min() < 0 or labels.max() >= count:
        raise ValueError(f"{what} labels must lie in 0..{count - 1}")
    sizes = np.bincount(labels.ravel(), minlength=count)
    if np.any(sizes == 0):
        empty = np.flatnonzero(sizes == 0)[:5].tolist()
        raise ValueError(f"{what} has empty labels, e.g. {empty}")
    return labels.astype(np.int64, copy=False), sizes


def group_sums(values, labels, count):
    """Per-label sums of a flat value array.

    Summation order is fixed (row-major), so results are reproducible bit for
    bit.  Groups larger than ``COMPENSATED_SUM_THRESHOLD`` are recomputed
    with ``math.fsum``.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    sums = np.bincount(labels, weights=values, minlength=count)
    sizes = np.bincount(labels, minlength=count)
    large = np.flatnonzero(sizes > COMPENSATED_SUM_THRESHOLD)
    if large.size:
        order = np.argsort(labels, kind="stable")
        starts = np.concatenate(([0], np.cumsum(sizes)))
        ordered = values[order]
        for k in large:
            sums[k] = math.fsum(ordered[starts[k]:starts[k + 1]])
    return sums


def group_max(values, labels, count):
    """Per-label maximum of a flat value array."""
    out = np.full(count, -np.inf)
    np.maximum.at(out, np.asarray(labels).ravel(), np.asarray(values, dtype=np.float64).ravel())
    return out


@dataclass(frozen=True, eq=False)
class NeighbourhoodSystem:
    """Disjoint partition of the lattice into coarse receptive fields.

    ``coarse_shape`` is set for block partitions and records how the ``count``
    neighbourhoods are laid out as a coarse grid (row-major).
    """

    labels: np.ndarray
    count: int
    coarse_shape: tuple | None = None
    sizes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        count = int(self.count)
        labels, sizes = _check_labels(self.labels, count, "neighbourhood")
        if self.coarse_shape is not None:
            ch, cw = (int(v) for v in self.coarse_shape)
            if ch * cw != count:
                raise ValueError("coarse_shape does not match neighbourhood count")
            object.__setattr__(self, "coarse_shape", (ch, cw))
        object.__setattr__(self, "count", count)
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "sizes", _frozen(sizes))

    @property
    def shape(self):
        return self.labels.shape

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    def mask(self, k):
        return self.labels == k


@dataclass(frozen=True, eq=False)
class SegmentPartition:
    """Semantic partition of the lattice with one score in [0, 1] per segment."""

    labels: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64).ravel()
        labels, _ = _check_labels(self.labels, scores.size, "segment")
        if not np.all(np.isfinite(scores)) or scores.min() < 0.0 or scores.max() > 1.0:
            raise DomainError("segment scores must lie in [0, 1]")
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "scores", _frozen(scores))

    @classmethod
    def from_labels(cls, labels, scores=None):
        """Build a partition from any integer label map, relabelling compactly.

        Labels are renumbered in order of first appearance (row-major). When
        `scores` is omitted every segment gets 0.5.
        """
        labels = np.asarray(labels)
        _, first, inverse = np.unique(labels.ravel(), return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(first.size)
        compact = rank[inverse].reshape(labels.shape)
        if scores is None:
            scores = np.full(first.size, 0.5)
        return cls(compact, scores)

    @property
    def count(self):
        return self.scores.size

    @property
    def shape(self):
        return self.labels.shape

    @property
    def sizes(self):
        return np.bincount(self.labels.ravel(), minlength=self.count)

    def with_scores(self, scores):
        return SegmentPartition(self.labels, scores)


@dataclass(frozen=True, eq=False)
class SegmentHierarchy:
    """Depth-indexed nested partitions, coarsest first."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("a hierarchy needs at least one level")
        for coarse, fine in zip(levels, levels[1:]):
            if fine.count < coarse.count or not is_refinement(fine, coarse):
                raise ValueError("hierarchy levels must be successive refinements")
        object.__setattr__(self, "levels", levels)

    @property
    def depth(self):
        return len(self.levels)

    def __getitem__(self, d):
        return self.levels[d]

    def __iter__(self):
        return iter(self.levels)


def _block_index(n, blocks):
    step = n // blocks
    return np.minimum(np.arange(n) // step, blocks - 1)


def block_partition(height, width, coarse_h, coarse_w):
    """Rectangular block partition with ``coarse_h * coarse_w`` neighbourhoods.

    When the dimensions do not divide evenly the remainder pixels join the
    last block along each axis, so the block count always matches the coarse
    map's shape.

    >>> block_partition(5, 5, 2, 2).sizes.tolist()
    [4, 6, 6, 9]
    """
    dims = (height, width, coarse_h, coarse_w)
    if any(int(d) != d or d < 1 for d in dims):
        raise ValueError(f"dimensions must be positive integers, got {dims}")
    if coarse_h > height or coarse_w > width:
        raise ValueError("coarse grid cannot be larger than the pixel grid")
    rows = _block_index(height, coarse_h)
    cols = _block_index(width, coarse_w)
    labels = rows[:, None] * coarse_w + cols[None, :]
    return NeighbourhoodSystem(labels, coarse_h * coarse_w, (coarse_h, coarse_w))


def neighbourhood_masses(attribution, neighbourhoods):
    """Total attribution inside each neighbourhood, as a length-K vector."""
    A = as_grid(attribution, "attribution")
    if A.shape != neighbourhoods.shape:
        raise ValueError(f"attribution shape {A.shape} != neighbourhood shape {neighbourhoods.shape}")
    return group_sums(A, neighbourhoods.labels, neighbourhoods.count)


def coarse_vector(coarse, neighbourhoods):
    """Flatten a coarse map (vector or ``coarse_shape`` grid) to length K."""
    a = np.asarray(coarse, dtype=np.float64)
    if a.ndim == 2 and neighbourhoods.coarse_shape is not None and a.shape != neighbourhoods.coarse_shape:
        raise ValueError(f"coarse grid shape {a.shape} != {neighbourhoods.coarse_shape}")
    a = a.ravel()
    if a.size != neighbourhoods.count:
        raise ValueError(f"expected {neighbourhoods.count} coarse values, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValueError("coarse values contain NaN or Inf")
    return a


def piecewise_constant_expand(coarse, neighbourhoods):
    """Paint each neighbourhood with its coarse value."""
    a = coarse_vector(coarse, neighbourhoods)
    return a[neighbourhoods.labels]


def adjacent(x, y):
    """8-connectivity: Chebyshev distance exactly one."""
    return max(abs(x[0] - y[0]), abs(x[1] - y[1])) == 1


def _outside_neighbour(inside):
    # True where some 8-neighbour inside the lattice is not in `inside`.
    # Off-lattice positions are padded as inside: they are not pixels.
    h, w = inside.shape
    padded = np.ones((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = inside
    all_in = np.ones_like(inside)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            all_in &= padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
    return ~all_in


def segment_boundary(partition, p):
    """Boolean mask of the pixels of segment `p` touching another segment."""
    if not 0 <= p < partition.count:
        raise ValueError(f"segment index {p} out of range 0..{partition.count - 1}")
    inside = partition.labels == p
    return inside & _outside_neighbour(inside)


def segment_interior(partition, p):
    return (partition.labels == p) & ~segment_boundary(partition, p)


def is_refinement(fine, coarse):
    """True iff every segment of `fine` lies inside a single segment of `coarse`."""
    if fine.shape != coarse.shape:
        raise ValueError(f"shape mismatch {fine.shape} vs {coarse.shape}")
    pairs = fine.labels.ravel().astype(np.int64) * coarse.count + coarse.labels.ravel()
    owners = np.unique(pairs) // coarse.count
    return owners.size == np.unique(owners).size


def _halves(lo, hi):
    # Bisect the inclusive range [lo, hi] at ceil(n/2).
    mid = lo + (hi - lo + 2) // 2
    return ((lo, mid - 1), (mid, hi))


def quad_refine(partition, targets):
    """Split each targeted segment into up to four bounding-box quadrants.

    Quadrants are taken over the segment's bounding box, bisected at
    ``ceil(n / 2)`` along each axis; each quadrant keeps only the segment's own
    pixels and empty quadrants are dropped.  The first non-empty quadrant
    keeps the parent label, the others get new labels appended in order.
    Children inherit the parent's score.
    """
    targets = sorted({int(t) for t in targets})
    if not targets:
        return partition
    for t in targets:
        if not 0 <= t < partition.count:
            raise ValueError(f"segment index {t} out of range")
    labels = np.array(partition.labels)
    scores = list(partition.scores)
    rows_idx, cols_idx = np.indices(labels.shape)
    for p in targets:
        member = partition.labels == p
        rows = rows_idx[member]
        cols = cols_idx[member]
        first = True
        for r0, r1 in _halves(rows.min(), rows.max()):
            for c0, c1 in _halves(cols.min(), cols.max()):
                quad = member & (rows_idx >= r0) & (rows_idx <= r1) & (cols_idx >= c0) & (cols_idx <= c1)
                if not quad.any():
                    continue
                if first:
                    first = False
                    continue
                labels[quad] = len(scores)
                scores.append(partition.scores[p])
    return SegmentPartition(labels, scores)
