"""Refine the segmentation only where the score field has structure.

The search starts from the coarse blocks themselves.  At each depth the
segments whose score field shows a corner-type response are split in four,
rescored, and their scores blended with the parent's.  The recursion stops
when the score field stops changing or the depth limit is hit.  Mass is
redistributed once, on the final partition.
"""
import math

import numpy as np

from usu import (RefineConfig, SegmentPartition, block_partition, gen_shape, neighbourhood_masses,
                 oracle_scorer, piecewise_constant_expand, refine_pipeline)
from usu.evaluate import SCORERS

inst = gen_shape("circle", 64, rng_seed=3)
N = block_partition(64, 64, 8, 8)
coarse = neighbourhood_masses(inst.gt_attribution, N) / N.sizes
attribution = piecewise_constant_expand(coarse, N)
start = SegmentPartition(N.labels, np.full(N.count, 0.5))

for name in ("oracle", "mean"):
    out, hierarchy, states = refine_pipeline(attribution, N, start, SCORERS[name], RefineConfig(max_depth=4),
                                             gt_mask=inst.gt_mask, return_states=True)
    sizes = [s.partition.count for s in states]
    print(f"{name:6s} scorer: segments per depth {sizes}, depth reached {hierarchy.depth}")
    print(f"        mass before {math.fsum(attribution.ravel()):.6f} after {math.fsum(out.ravel()):.6f}")

scores = oracle_scorer(start, inst.gt_mask)
print(f"\nblocks fully inside the circle: {int((scores == 1).sum())}, partly inside: {int(((scores > 0) & (scores < 1)).sum())}")
