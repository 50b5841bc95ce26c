"""Classical separable interpolation kernels used as baselines.

All kernels are applied as ``W_rows @ coarse @ W_cols.T`` where each 1-D
resampling matrix has rows summing to one.  Borders are handled by clamping
tap indices to the edge (replicate padding).  None of these operators takes
segment scores.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid import SegmentPartition, block_partition, group_sums

KERNELS = ("nearest", "bilinear", "bicubic", "lanczos3")
ALIGNMENTS = ("half-pixel-centers", "align-corners")

KEYS_A = -0.5
_RADIUS = {"bilinear": 1, "bicubic": 2, "lanczos3": 3}


@dataclass(frozen=True)
class KernelSpec:
    family: str = "bilinear"
    alignment: str = "half-pixel-centers"

    def __post_init__(self):
        if self.family not in KERNELS:
            raise ValueError(f"unknown kernel {self.family!r}; choose from {KERNELS}")
        if self.alignment not in ALIGNMENTS:
            raise ValueError(f"unknown alignment {self.alignment!r}; choose from {ALIGNMENTS}")


def as_kernel(kernel):
    return kernel if isinstance(kernel, KernelSpec) else KernelSpec(kernel)


def kernel_1d(family, x):
    """Continuous 1-D kernel profile evaluated at offsets `x`."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    if family == "nearest":
        return (x < 0.5).astype(np.float64)
    if family == "bilinear":
        return np.maximum(0.0, 1.0 - x)
    if family == "bicubic":
        a = KEYS_A
        near = ((a + 2) * x - (a + 3)) * x * x + 1
        far = ((a * x - 5 * a) * x + 8 * a) * x - 4 * a
        return np.where(x <= 1, near, np.where(x < 2, far, 0.0))
    if family == "lanczos3":
        return np.where(x < 3, np.sinc(x) * np.sinc(x / 3), 0.0)
    raise ValueError(f"unknown kernel {family!r}")


def sample_positions(n_in, n_out, alignment):
    """Output pixel centres expressed in input-sample coordinates."""
    i = np.arange(n_out, dtype=np.float64)
    if alignment == "half-pixel-centers":
        return (i + 0.5) * (n_in / n_out) - 0.5
    if n_out == 1:
        return np.zeros(1)
    return i * ((n_in - 1) / (n_out - 1))


def resample_matrix(n_in, n_out, kernel):
    """(n_out, n_in) 1-D interpolation matrix with clamped borders."""
    kernel = as_kernel(kernel)
    if n_in < 1 or n_out < 1:
        raise ValueError("sizes must be positive")
    u = sample_positions(n_in, n_out, kernel.alignment)
    W = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    if kernel.family == "nearest":
        j = np.clip(np.floor(u + 0.5).astype(np.int64), 0, n_in - 1)
        W[rows, j] = 1.0
        return W
    r = _RADIUS[kernel.family]
    base = np.floor(u).astype(np.int64)
    for off in range(-r + 1, r + 1):
        j = base + off
        np.add.at(W, (rows, np.clip(j, 0, n_in - 1)), kernel_1d(kernel.family, u - j))
    return W / W.sum(axis=1, keepdims=True)


def interp_upsample(coarse, target_h, target_w, kernel="bilinear"):
    """Interpolate a coarse grid to ``(target_h, target_w)``."""
    C = np.asarray(coarse, dtype=np.float64)
    if C.ndim != 2 or C.size == 0:
        raise ValueError("coarse must be a non-empty 2-D grid")
    if target_h < C.shape[0] or target_w < C.shape[1]:
        raise ValueError("target must be at least as large as the coarse grid")
    Wr = resample_matrix(C.shape[0], target_h, kernel)
    Wc = resample_matrix(C.shape[1], target_w, kernel)
    return Wr @ C @ Wc.T


def kernel_matrix(coarse_shape, target_shape, kernel):
    """Dense 2-D kernel K[x, z] over flattened output and coarse indices."""
    Wr = resample_matrix(coarse_shape[0], target_shape[0], kernel)
    Wc = resample_matrix(coarse_shape[1], target_shape[1], kernel)
    return np.einsum("ia,jb->ijab", Wr, Wc).reshape(
        target_shape[0] * target_shape[1], coarse_shape[0] * coarse_shape[1]
    )


def _indicator(coarse_shape, cell):
    A = np.zeros(coarse_shape)
    A[cell] = 1.0
    return A


def mass_leak_witness(kernel, coarse_shape, target_shape, neighbourhoods=None, cell=None):
    """Neighbourhood mass errors ``sum_{N_k} out - M_k`` for indicator inputs.

    With `cell` given, returns the length-K error vector for the indicator of
    that coarse cell.  Otherwise returns a ``(K, K)`` matrix whose row ``c``
    is the error vector for the indicator of cell ``c`` (row-major).
    """
    N = neighbourhoods or block_partition(*target_shape, *coarse_shape)
    cells = [cell] if cell is not None else list(np.ndindex(*coarse_shape))
    rows = []
    for c in cells:
        A = _indicator(coarse_shape, c)
        out = interp_upsample(A, *target_shape, kernel)
        rows.append(group_sums(out, N.labels, N.count) - A.ravel() * N.sizes)
    rows = np.array(rows)
    return rows[0] if cell is not None else rows


class LocalityProbe(NamedTuple):
    neighbourhood: int
    outside_cell: tuple
    pixel: tuple


def locality_probe(coarse_shape, target_shape, k=0):
    """Pick a coarse cell next to block `k` and the pixel of `k` nearest it."""
    N = block_partition(*target_shape, *coarse_shape)
    ch, cw = coarse_shape
    r, c = divmod(k, cw)
    candidates = [(r, c + 1), (r + 1, c), (r, c - 1), (r - 1, c)]
    cell = next(((a, b) for a, b in candidates if 0 <= a < ch and 0 <= b < cw), None)
    if cell is None:
        raise ValueError("a 1x1 coarse grid has no neighbouring cell")
    rows, cols = np.nonzero(N.labels == k)
    if cell[0] == r:
        col = cols.max() if cell[1] > c else cols.min()
        pixel = (int(rows.min()), int(col))
    else:
        row = rows.max() if cell[0] > r else rows.min()
        pixel = (int(row), int(cols.min()))
    return LocalityProbe(k, cell, pixel)


def locality_violation_witness(kernel, coarse_shape, target_shape, k=0):
    """Output change at a boundary pixel of block `k` when only a neighbour changes.

    Compares the all-zero input with the indicator of an adjacent cell.  Both
    inputs vanish on block `k`, so any nonzero result shows the output there
    depends on data outside it.
    """
    probe = locality_probe(coarse_shape, target_shape, k)
    zero = interp_upsample(np.zeros(coarse_shape), *target_shape, kernel)
    poked = interp_upsample(_indicator(coarse_shape, probe.outside_cell), *target_shape, kernel)
    return float(poked[probe.pixel] - zero[probe.pixel])


class MonotonicityWitness(NamedTuple):
    coarse: np.ndarray
    segments: SegmentPartition
    neighbourhood: int
    high_score_pixel: tuple
    low_score_pixel: tuple
    output: np.ndarray


def monotonicity_violation_witness(kernel, coarse_shape, target_shape, coarse=None):
    """Construct scores under which the interpolated output breaks monotonicity.

    Finds a non-negative-mass block where the interpolation output is not
    constant, gives its lowest-valued pixel a segment of its own with score 1
    and everything else score 0.  Returns None if every block is constant
    (e.g. nearest on an evenly divisible grid).
    """
    if coarse is None:
        coarse = _indicator(coarse_shape, (0, 0))
    coarse = np.asarray(coarse, dtype=np.float64)
    N = block_partition(*target_shape, *coarse_shape)
    out = interp_upsample(coarse, *target_shape, kernel)
    masses = coarse.ravel() * N.sizes
    for k in range(N.count):
        if masses[k] < 0:
            continue
        idx = np.flatnonzero(N.labels.ravel() == k)
        vals = out.ravel()[idx]
        if vals.max() - vals.min() <= 1e-12 * max(1.0, np.abs(vals).max()):
            continue
        low = np.unravel_index(idx[np.argmin(vals)], N.shape)
        high = np.unravel_index(idx[np.argmax(vals)], N.shape)
        labels = np.zeros(N.shape, dtype=np.int64)
        labels[low] = 1
        segments = SegmentPartition(labels, [0.0, 1.0])
        return MonotonicityWitness(coarse, segments, k, tuple(map(int, low)), tuple(map(int, high)), out)
    return None
