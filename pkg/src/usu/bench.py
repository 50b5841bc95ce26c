"""Localisation benchmark on synthetic data (best IoU, concentration, pointing game).

Score-aware methods need a partition and scores.  ``oracle`` selects them:

``full``
    ground-truth foreground/background partition with ground-truth scores.
``scores``
    partition from the input image, ground-truth (overlap) scores.
``none``
    partition from the input image, mean-attribution scores.

With ``partition="refine"`` the image partition is replaced by hierarchical
refinement starting from the neighbourhood blocks.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evaluate import SCORERS, concentration, iou_best, oracle_scorer, pointing_game
from .grid import SegmentPartition, block_partition, piecewise_constant_expand
from .methods import get_method
from .refine import RefineConfig, refine_pipeline
from .synth import PATTERNS, SHAPES, gen_dataset

ORACLES = ("none", "scores", "full")
PARTITIONS = ("image", "refine")


@dataclass(frozen=True)
class BenchRow:
    index: int
    label: str
    resolution: int
    method: str
    iou: float
    concentration: float
    pointing_game: int


def image_partition(image):
    """Two-level intensity segmentation of an image (threshold at mid-range)."""
    image = np.asarray(image, dtype=np.float64)
    level = 0.5 * (image.min() + image.max())
    return SegmentPartition.from_labels((image > level).astype(np.int64))


def thread_count():
    """Worker threads from ``USU_THREADS`` (0 or unset means automatic)."""
    n = int(os.environ.get("USU_THREADS", "0") or 0)
    return n if n > 0 else min(8, os.cpu_count() or 1)


def _segments(item, coarse, N, oracle, partition, config):
    inst = item.instance
    scorer = SCORERS["oracle" if oracle in ("scores", "full") else "mean"]
    if oracle == "full":
        seg = SegmentPartition.from_labels(inst.gt_mask.astype(np.int64))
        return seg.with_scores(oracle_scorer(seg, inst.gt_mask))
    expanded = piecewise_constant_expand(coarse, N)
    if partition == "refine":
        start = SegmentPartition(N.labels, np.full(N.count, 0.5))
        # The full-grid expansion carries the same masses and lets scorers see pixels.
        _, _, states = refine_pipeline(expanded, N, start, scorer, config,
                                       gt_mask=inst.gt_mask, return_states=True)
        return states[-1].partition
    seg = image_partition(inst.image)
    return seg.with_scores(scorer(seg, expanded, inst.gt_mask))


def _evaluate_item(index, item, methods, oracle, partition, config):
    rows = []
    inst = item.instance
    for res, coarse in item.coarse.items():
        N = block_partition(*inst.gt_mask.shape, res, res)
        seg = None
        for name, method in methods:
            if method.score_aware and seg is None:
                seg = _segments(item, coarse, N, oracle, partition, config)
            out = method(coarse, seg, N)
            rows.append(BenchRow(index, inst.label, res, name, iou_best(out, inst.gt_mask),
                                 concentration(out, inst.gt_mask), pointing_game(out, inst.gt_mask)))
    return rows


def run_benchmark(methods, dataset="shapes", resolutions=(7,), oracle="none", seed=0,
                  count=30, size=64, partition="image", config=None, epsilon=0.1,
                  epsilon_lambda=0.1):
    """Evaluate every method on every instance and resolution.

    Rows come back ordered by instance, then resolution, then method.
    """
    if not methods:
        raise ValueError("at least one method is required")
    if oracle not in ORACLES:
        raise ValueError(f"oracle must be one of {ORACLES}")
    if partition not in PARTITIONS:
        raise ValueError(f"partition must be one of {PARTITIONS}")
    kinds = {"shapes": SHAPES, "patterns": PATTERNS}[dataset]
    items = gen_dataset(count, size, tuple(resolutions), seed, kinds)
    handles = [(m, get_method(m, epsilon, epsilon_lambda)) for m in methods]
    config = config or RefineConfig()
    with ThreadPoolExecutor(thread_count()) as pool:
        chunks = pool.map(lambda ix: _evaluate_item(ix[0], ix[1], handles, oracle, partition, config),
                          enumerate(items))
        return [row for chunk in chunks for row in chunk]


def aggregate(rows):
    """Mean metrics per (method, resolution), in first-seen order."""
    groups = {}
    for row in rows:
        groups.setdefault((row.method, row.resolution), []).append(row)
    return {
        key: {
            "iou": float(np.mean([r.iou for r in rs])),
            "concentration": float(np.mean([r.concentration for r in rs])),
            "pointing_game": float(np.mean([r.pointing_game for r in rs])),
            "n": len(rs),
        }
        for key, rs in groups.items()
    }
