"""Synthetic images with known ground-truth attribution support.

Rasterization is by pixel centre: pixel ``(r, c)`` sits at integer
coordinates and belongs to a shape iff that point satisfies the shape's
inequality.  Pattern thresholds are compared against a fixed 1e-9 margin so
masks do not depend on the last bit of a transcendental function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import block_partition, neighbourhood_masses

SHAPES = ("circle", "triangle", "square")
PATTERNS = ("zigzag", "sine", "spiral", "concentric", "moire")
RESOLUTIONS = (4, 7, 14)
EPS = 1e-9


@dataclass(frozen=True, eq=False)
class SynthInstance:
    image: np.ndarray
    gt_mask: np.ndarray
    gt_attribution: np.ndarray
    label: str


def _finish(mask, label, intensity):
    if not mask.any() or mask.all():
        raise ValueError(f"{label}: foreground must be non-empty and smaller than the image")
    gt = mask.astype(np.float64)
    return SynthInstance(gt * intensity, mask, gt, label)


def gen_shape(kind, size=64, rng_seed=0, radius=None, center=None,
              radius_range=(0.15, 0.35), jitter=0.1):
    """One filled shape on an empty background.

    `radius` is the circle radius, the square's half-width, or the
    triangle's circumradius; it is drawn from ``radius_range * size`` when
    not given.  `center` defaults to the image centre ``size // 2`` shifted by
    an integer jitter of up to ``jitter * size`` pixels per axis.
    """
    if kind not in SHAPES:
        raise ValueError(f"unknown shape {kind!r}; choose from {SHAPES}")
    if int(size) != size or size < 16:
        raise ValueError("size must be an integer >= 16")
    rng = np.random.default_rng(rng_seed)
    if radius is None:
        radius = rng.uniform(*radius_range) * size
    if center is None:
        j = int(jitter * size)
        cy, cx = size // 2 + rng.integers(-j, j + 1, size=2)
    else:
        cy, cx = center
    intensity = rng.uniform(0.7, 1.0)
    r, c = np.indices((size, size), dtype=np.float64)
    dy, dx = r - cy, c - cx
    if kind == "circle":
        mask = dy * dy + dx * dx <= radius * radius + EPS
    elif kind == "square":
        mask = (np.abs(dy) <= radius + EPS) & (np.abs(dx) <= radius + EPS)
    else:
        mask = _triangle(dy, dx, radius)
    return _finish(mask, kind, intensity)


def _triangle(dy, dx, R):
    # Upward equilateral triangle with circumradius R; rows grow downwards.
    verts = [(-R, 0.0), (R / 2, -R * math.sqrt(3) / 2), (R / 2, R * math.sqrt(3) / 2)]
    inside = np.ones(dy.shape, dtype=bool)
    for (y0, x0), (y1, x1) in zip(verts, verts[1:] + verts[:1]):
        cross = (x1 - x0) * (dy - y0) - (y1 - y0) * (dx - x0)
        inside &= cross <= EPS
    return inside


def _triangle_wave(t):
    return 2.0 * np.abs(t - np.floor(t + 0.5))


def gen_pattern(kind, size=64, rng_seed=0, period=None):
    """One periodic pattern; the mask is the pattern's 'on' region.

    The period is drawn from {8, 12, 16} unless given.  Sine stripes are
    vertical, concentric rings are centred on the image so the mask is
    invariant under 90 degree rotation.
    """
    if kind not in PATTERNS:
        raise ValueError(f"unknown pattern {kind!r}; choose from {PATTERNS}")
    if int(size) != size or size < 32:
        raise ValueError("size must be an integer >= 32")
    rng = np.random.default_rng(rng_seed)
    p = float(period if period is not None else rng.choice([8, 12, 16]))
    intensity = rng.uniform(0.7, 1.0)
    r, c = np.indices((size, size), dtype=np.float64)
    c0 = (size - 1) / 2
    d = np.sqrt((r - c0) ** 2 + (c - c0) ** 2)
    if kind == "sine":
        value = np.sin(2 * np.pi * c / p)
    elif kind == "zigzag":
        amp = p
        value = p / 2 - np.mod(r + amp * _triangle_wave(c / (2 * p)), p) - 0.5
    elif kind == "spiral":
        arms = int(rng.integers(1, 4))
        value = np.sin(arms * np.arctan2(r - c0, c - c0) + 2 * np.pi * d / p)
    elif kind == "concentric":
        value = np.sin(2 * np.pi * d / p)
    else:
        angle = np.deg2rad(rng.uniform(4.0, 10.0))
        u = c * math.cos(angle) + r * math.sin(angle)
        v = c * math.cos(angle) - r * math.sin(angle)
        value = np.cos(2 * np.pi * u / p) + np.cos(2 * np.pi * v / p)
    return _finish(value > EPS, kind, intensity)


def faithful_coarse(truth, neighbourhoods):
    """Per-neighbourhood mean of the ground truth, so expanded masses match it."""
    return neighbourhood_masses(truth, neighbourhoods) / neighbourhoods.sizes


@dataclass(frozen=True, eq=False)
class DatasetItem:
    instance: SynthInstance
    seed: int
    coarse: dict


def instance_seed(seed, index):
    """Per-instance seed: first word of ``SeedSequence([seed, index])``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def gen_dataset(counts=30, size=64, resolutions=RESOLUTIONS, seed=0, kinds=SHAPES):
    """Class-balanced synthetic set with faithful coarse maps per resolution.

    `counts` is either one count per kind or a sequence aligned with `kinds`.
    Instances are ordered kind by kind; instance ``i`` is generated from
    ``instance_seed(seed, i)``.
    """
    if np.isscalar(counts):
        counts = [int(counts)] * len(kinds)
    if len(counts) != len(kinds) or min(counts) < 1:
        raise ValueError("need one count >= 1 per kind")
    items = []
    index = 0
    for kind, n in zip(kinds, counts):
        for _ in range(n):
            s = instance_seed(seed, index)
            inst = gen_shape(kind, size, s) if kind in SHAPES else gen_pattern(kind, size, s)
            coarse = {}
            for res in resolutions:
                N = block_partition(size, size, res, res)
                coarse[res] = faithful_coarse(inst.gt_attribution, N).reshape(res, res)
            items.append(DatasetItem(inst, s, coarse))
            index += 1
    return items
