"""Hierarchical boundary refinement driven by score heterogeneity.

Starting from a coarse segmentation, segments whose score field shows local
heterogeneity (large H-map response) are split, rescored, and the new score
field is blended with the previous one.  The recursion stops when the score
field stops changing or the depth budget is spent; the last partition, scored
from the blended field, drives a single USU redistribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.special import expit

from .errors import ScorerError
from .grid import SegmentHierarchy, group_max, group_sums, quad_refine
from .potentials import TENSOR
from .redistribute import usu_upsample

DIAGONAL_DIFFERENCE = np.array([[-1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, -1.0]])


@dataclass(frozen=True)
class RefineConfig:
    """Controls of the refinement recursion.

    ``tolerance=None`` means ``0.01 * sqrt(H * W)`` for the grid at hand.
    """

    theta: float = 0.05
    mu: float = 0.1
    tau: float = 0.05
    tolerance: float | None = None
    max_depth: int = 4

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be > 0")
        if not self.mu >= 0:
            raise ValueError("mu must be >= 0")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if int(self.max_depth) != self.max_depth or self.max_depth < 1:
            raise ValueError("max_depth must be an integer >= 1")

    def tolerance_for(self, shape):
        if self.tolerance is not None:
            return self.tolerance
        return 0.01 * math.sqrt(shape[0] * shape[1])


@dataclass(frozen=True, eq=False)
class DepthState:
    partition: object
    score_matrix: np.ndarray
    attribution: np.ndarray
    depth: int


def score_matrix(partition):
    """Per-pixel score of the containing segment."""
    return partition.scores[partition.labels]


def hmap(phi):
    """Diagonal-difference response of a score field, replicate-padded.

    The kernel is symmetric under 180 degree rotation, so correlation and
    convolution coincide.
    """
    phi = np.asarray(phi, dtype=np.float64)
    return ndimage.correlate(phi, DIAGONAL_DIFFERENCE, mode="nearest")


def boundary_segments(H, partition, theta):
    """Indices of segments whose peak |H| exceeds `theta`."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape != partition.shape:
        raise ValueError(f"H-map shape {H.shape} != partition shape {partition.shape}")
    peak = group_max(np.abs(H), partition.labels, partition.count)
    return set(np.flatnonzero(peak > theta).tolist())


def mixing_alpha(H, mu, tau):
    """Coarse-level weight: 1/2 at |H| = mu, falling towards 0 as |H| grows."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    return expit(-(np.abs(np.asarray(H, dtype=np.float64)) - mu) / tau)


def merge(phi_coarse, phi_fine, alpha):
    """Pointwise convex blend ``alpha * coarse + (1 - alpha) * fine``."""
    phi_coarse = np.asarray(phi_coarse, dtype=np.float64)
    phi_fine = np.asarray(phi_fine, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if not (phi_coarse.shape == phi_fine.shape == alpha.shape):
        raise ValueError("merge inputs must share a shape")
    return alpha * phi_coarse + (1.0 - alpha) * phi_fine


def comparator(phi_a, phi_b, tolerance):
    """True while successive score fields still differ by more than `tolerance`."""
    phi_a = np.asarray(phi_a, dtype=np.float64)
    phi_b = np.asarray(phi_b, dtype=np.float64)
    if phi_a.shape != phi_b.shape:
        raise ValueError("comparator inputs must share a shape")
    return bool(np.linalg.norm(phi_a - phi_b) > tolerance)


def _score(scorer, partition, attribution, gt_mask, depth):
    try:
        scores = np.asarray(scorer(partition, attribution, gt_mask), dtype=np.float64)
    except Exception as exc:
        raise ScorerError(depth, exc) from exc
    if scores.shape != (partition.count,):
        raise ScorerError(depth, ValueError(f"expected {partition.count} scores, got shape {scores.shape}"))
    if not np.all((scores >= 0) & (scores <= 1)):
        raise ScorerError(depth, ValueError("scores must lie in [0, 1]"))
    return partition.with_scores(scores)


def _segment_means(field, partition):
    sums = group_sums(field, partition.labels, partition.count)
    return np.clip(sums / partition.sizes, 0.0, 1.0)


def refine_pipeline(attribution, neighbourhoods, initial, scorer, config=None, spec=TENSOR,
                    gt_mask=None, return_states=False):
    """Refine the segmentation where scores change, then redistribute once.

    Parameters
    ----------
    attribution : array
        Coarse map or full grid, as accepted by ``usu_upsample``.
    neighbourhoods : NeighbourhoodSystem
    initial : SegmentPartition
        Coarsest partition; its scores are replaced by the scorer's.
    scorer : callable
        ``scorer(partition, attribution, gt_mask) -> scores`` in [0, 1].
    config : RefineConfig
    spec : PotentialSpec
    gt_mask : array, optional
        Passed through to the scorer.
    return_states : bool
        Also return the list of ``DepthState`` visited.

    Returns
    -------
    ``(attribution, hierarchy)`` or ``(attribution, hierarchy, states)``.
    """
    config = config or RefineConfig()
    tolerance = config.tolerance_for(neighbourhoods.shape)
    current = _score(scorer, initial, attribution, gt_mask, 0)
    phi_prev = score_matrix(current)
    merged = phi_prev
    levels = [current]
    states = [DepthState(current, phi_prev, usu_upsample(attribution, current, neighbourhoods, spec), 0)]

    for depth in range(1, config.max_depth):
        H = hmap(phi_prev)
        targets = boundary_segments(H, current, config.theta)
        if not targets:
            break
        refined = _score(scorer, quad_refine(current, targets), attribution, gt_mask, depth)
        phi = score_matrix(refined)
        merged = merge(phi_prev, phi, mixing_alpha(H, config.mu, config.tau))
        blended = refined.with_scores(_segment_means(merged, refined))
        levels.append(refined)
        states.append(DepthState(blended, merged, usu_upsample(attribution, blended, neighbourhoods, spec), depth))
        changed = comparator(phi, phi_prev, tolerance)
        current, phi_prev = refined, phi
        if not changed:
            break

    final = states[-1]
    result = (final.attribution, SegmentHierarchy(tuple(levels)))
    return result + (states,) if return_states else result
