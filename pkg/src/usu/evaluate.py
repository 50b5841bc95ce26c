"""Error decomposition, localisation metrics, segment scorers and the
desiderata verifier."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedMetricError
from .grid import SegmentPartition, as_grid, block_partition, group_sums, neighbourhood_masses

IOU_THRESHOLDS = 256
D1_TOLERANCE = 1e-6
D3_TOLERANCE = 0.01
EXACT = 1e-12


def _pair(a, b, names=("attribution", "reference")):
    a = as_grid(a, names[0])
    b = as_grid(b, names[1])
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def _mask(gt_mask, shape):
    gt = np.asarray(gt_mask).astype(bool)
    if gt.shape != shape:
        raise ValueError(f"mask shape {gt.shape} != attribution shape {shape}")
    return gt


# -- alpha/beta errors ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ErrorReport:
    """Per-pixel spurious attribution (alpha) and signal loss (beta).

    ``mass_deficit`` / ``mass_excess`` are filled when a neighbourhood system
    is supplied.
    """

    alpha: np.ndarray
    beta: np.ndarray
    mass_deficit: np.ndarray | None = None
    mass_excess: np.ndarray | None = None


def alpha_beta(upsampled, truth, neighbourhoods=None):
    U, T = _pair(upsampled, truth)
    gap = np.abs(U) - np.abs(T)
    alpha = np.maximum(0.0, gap)
    beta = np.maximum(0.0, -gap)
    deficit = excess = None
    if neighbourhoods is not None:
        deficit, excess = mass_imbalance(U, T, neighbourhoods)
    return ErrorReport(alpha, beta, deficit, excess)


def mass_imbalance(upsampled, truth, neighbourhoods):
    """Per-neighbourhood ``(deficit, excess)`` of upsampled vs true mass."""
    U, T = _pair(upsampled, truth)
    diff = neighbourhood_masses(U, neighbourhoods) - neighbourhood_masses(T, neighbourhoods)
    return np.maximum(0.0, -diff), np.maximum(0.0, diff)


# -- localisation metrics ---------------------------------------------------

def iou_best(upsampled, gt_mask, n_thresholds=IOU_THRESHOLDS):
    """Best IoU of ``upsampled >= t`` with the mask over uniform thresholds t."""
    U = as_grid(upsampled)
    gt = _mask(gt_mask, U.shape)
    if not gt.any():
        raise ValueError("ground-truth mask is empty")
    best = 0.0
    for t in np.linspace(U.min(), U.max(), n_thresholds):
        pred = U >= t
        inter = np.count_nonzero(pred & gt)
        union = np.count_nonzero(pred | gt)
        best = max(best, inter / union)
    return best


def concentration(upsampled, gt_mask):
    """Fraction of absolute attribution falling inside the mask."""
    U = np.abs(as_grid(upsampled))
    gt = _mask(gt_mask, U.shape)
    total = U.sum()
    if total == 0:
        raise UndefinedMetricError("concentration is undefined for an all-zero attribution")
    return float(U[gt].sum() / total)


def pointing_game(upsampled, gt_mask):
    """1 if the (first, row-major) peak lies in the mask, else 0."""
    U = as_grid(upsampled)
    gt = _mask(gt_mask, U.shape)
    return int(gt.ravel()[np.argmax(U.ravel())])


# -- scorers ----------------------------------------------------------------

def oracle_scorer(segments, gt_mask):
    """Fraction of each segment covered by the ground-truth foreground."""
    gt = _mask(gt_mask, segments.shape).astype(np.float64)
    return group_sums(gt, segments.labels, segments.count) / segments.sizes


def mean_attribution_scorer(segments, attribution):
    """Mean |attribution| per segment, min-max normalized to [0, 1].

    If every segment has the same mean (to 1e-12 relative) all scores are 0.5.
    """
    A = np.abs(as_grid(attribution))
    if A.shape != segments.shape:
        raise ValueError(f"attribution shape {A.shape} != segment shape {segments.shape}")
    means = group_sums(A, segments.labels, segments.count) / segments.sizes
    lo, hi = means.min(), means.max()
    if hi - lo <= EXACT * hi:
        return np.full(segments.count, 0.5)
    return np.clip((means - lo) / (hi - lo), 0.0, 1.0)


SCORERS = {
    "oracle": lambda segments, attribution, gt_mask: oracle_scorer(segments, gt_mask),
    "mean": lambda segments, attribution, gt_mask: mean_attribution_scorer(segments, attribution),
}


# -- desiderata verifier ----------------------------------------------------

EXPECTED_PATTERNS = {
    "usu": "1111",
    "iwmr": "0111",
    "bilinear": "0000",
    "bicubic": "0000",
    "lanczos3": "0000",
    "nearest": "1101",
}


@dataclass(frozen=True)
class BatteryConfig:
    trials: int = 200
    seed: int = 0
    max_coarse: int = 6
    max_block: int = 8
    max_segments: int = 6
    delta: float = 0.1


@dataclass
class DesiderataReport:
    """Outcome of the desiderata battery for one method.

    ``d4_pass`` perturbs coarse values outside a neighbourhood while keeping
    the total mass fixed; ``d4_strict_pass`` lets the total change too.
    """

    method: str
    trials: int
    d1_error: float
    d1_pass: bool
    d2_pass: bool
    d3_pass: bool
    d4_pass: bool
    d4_strict_pass: bool
    d1_witness: tuple | None = None
    d2_witness: tuple | None = None
    d3_ratios: list = field(default_factory=list)
    d4_witness: tuple | None = None

    @property
    def pattern(self):
        return "".join("1" if f else "0" for f in (self.d1_pass, self.d2_pass, self.d3_pass, self.d4_pass))

    def summary(self):
        marks = ["pass" if f else "FAIL" for f in (self.d1_pass, self.d2_pass, self.d3_pass, self.d4_pass)]
        return (f"{self.method}: D1 {marks[0]} (error {self.d1_error:.3e}), D2 {marks[1]}, "
                f"D3 {marks[2]}, D4 {marks[3]} (strict: {'pass' if self.d4_strict_pass else 'FAIL'})")


def random_instance(rng, config=BatteryConfig()):
    """Random block-partition instance: ``(coarse, segments, neighbourhoods)``.

    Blocks divide the grid evenly.  Segments are either per-pixel noise or a
    blocky map misaligned with the neighbourhoods; coarse values are >= 0.
    """
    ch, cw = rng.integers(2, config.max_coarse + 1, size=2)
    bh, bw = rng.integers(2, config.max_block + 1, size=2)
    H, W = int(ch * bh), int(cw * bw)
    P = int(rng.integers(2, config.max_segments + 1))
    if rng.random() < 0.5:
        raw = rng.integers(0, P, size=(H, W))
    else:
        gh, gw = rng.integers(2, 6, size=2)
        small = rng.integers(0, P, size=(gh, gw))
        rows = np.minimum(np.arange(H) * gh // H, gh - 1)
        cols = np.minimum(np.arange(W) * gw // W, gw - 1)
        raw = small[rows][:, cols]
    segments = SegmentPartition.from_labels(raw)
    segments = segments.with_scores(rng.uniform(0.0, 1.0, segments.count))
    coarse = rng.uniform(0.0, 1.0, (int(ch), int(cw)))
    return coarse, segments, block_partition(H, W, int(ch), int(cw))


def _d2_violation(output, segments, neighbourhoods, masses):
    """First ``(k, higher-score pixel, lower-score pixel)`` breaking monotonicity."""
    scale = max(1.0, float(np.abs(output).max()))
    tol = EXACT * scale
    flat_scores = segments.scores[segments.labels].ravel()
    flat_out = output.ravel()
    labels = neighbourhoods.labels.ravel()
    for k in range(neighbourhoods.count):
        if masses[k] < 0:
            continue
        idx = np.flatnonzero(labels == k)
        s, v = flat_scores[idx], flat_out[idx]
        order = np.lexsort((v, s))
        s, v, idx = s[order], v[order], idx[order]
        levels, starts = np.unique(s, return_index=True)
        ends = np.append(starts[1:], s.size)
        below_max, below_arg = -np.inf, None
        for a, b in zip(starts, ends):
            # Equal scores demand equal values; higher scores demand >= values.
            lo_arg, hi_arg = idx[a], idx[b - 1]
            if v[b - 1] - v[a] > tol:
                return (k, _pix(lo_arg, output.shape), _pix(hi_arg, output.shape))
            if below_arg is not None and v[a] < below_max - tol:
                return (k, _pix(lo_arg, output.shape), _pix(below_arg, output.shape))
            if v[b - 1] > below_max:
                below_max, below_arg = v[b - 1], hi_arg
    return None


def _pix(flat_index, shape):
    return tuple(int(i) for i in np.unravel_index(flat_index, shape))


def _adversarial_segments(output, neighbourhoods):
    """Give the lowest-valued pixel of a non-constant block the top score."""
    labels = neighbourhoods.labels.ravel()
    flat = output.ravel()
    for k in range(neighbourhoods.count):
        idx = np.flatnonzero(labels == k)
        vals = flat[idx]
        if vals.max() - vals.min() > EXACT * max(1.0, np.abs(vals).max()):
            seg = np.zeros(output.size, dtype=np.int64)
            seg[idx[np.argmin(vals)]] = 1
            return SegmentPartition(seg.reshape(output.shape), [0.0, 1.0])
    return None


def _d3_probe(method, delta):
    """Effective weight ratios for a fixed score gap at several base scores.

    Two 2x2 coarse grids upsampled to 8x8; within each block half (or a
    quarter) of the columns belong to the higher-scored segment.
    """
    N = block_partition(8, 8, 2, 2)
    coarse = np.ones((2, 2))
    cols = np.arange(8) % 4
    ratios = []
    score_aware = False
    for split in (2, 3):
        labels = np.broadcast_to((cols >= split).astype(np.int64), (8, 8))
        lo_pix, hi_pix = (0, 0), (0, 3)
        flat = SegmentPartition(labels, [0.2, 0.2])
        steep = SegmentPartition(labels, [0.2, 0.8])
        if not np.array_equal(method(coarse, flat, N), method(coarse, steep, N)):
            score_aware = True
        for s in np.round(np.arange(0.0, 1.0 - delta + 1e-9, 0.1), 10):
            out = method(coarse, SegmentPartition(labels, [s, min(1.0, s + delta)]), N)
            ratios.append(out[hi_pix] / out[lo_pix])
    ratios = np.array(ratios)
    constant = ratios.max() / ratios.min() - 1.0 <= D3_TOLERANCE
    return score_aware and bool(constant), ratios.tolist()


def _d4_probe(method, coarse, segments, N, rng, zero_sum):
    k = int(rng.integers(N.count))
    outside = N.sizes.astype(np.float64).copy()
    outside[k] = 0.0
    bump = rng.normal(size=N.count)
    bump[k] = 0.0
    if zero_sum:
        # Shift the outside cells so the total mass is unchanged.
        bump[outside > 0] -= (bump @ outside) / outside.sum()
    perturbed = coarse + bump.reshape(coarse.shape)
    before = method(coarse, segments, N)
    after = method(perturbed, segments, N)
    inside = N.labels == k
    diff = np.abs(after - before)[inside]
    scale = max(1.0, float(np.abs(before).max()))
    if diff.max() > EXACT * scale:
        pix = np.argwhere(inside)[np.argmax(diff)]
        return (k, tuple(int(p) for p in pix), float(diff.max()))
    return None


def verify_desiderata(method, config=BatteryConfig(), name=None):
    """Run the D1-D4 battery on ``method(coarse, segments, neighbourhoods)``.

    D1 passes when the mean absolute neighbourhood mass error is at most
    1e-6; D2 when no score-ordering violation occurs in any non-negative-mass
    neighbourhood, including adversarially rescored ones; D3 when the method
    responds to scores and its effective weight ratio for a fixed score gap
    varies by at most 1% across base scores; D4 when values inside a
    neighbourhood do not move (beyond 1e-12) as coarse values outside it
    change.
    """
    from .methods import get_method

    if isinstance(method, str):
        name = name or method
        method = get_method(method)
    name = name or getattr(method, "name", "method")
    rng = np.random.default_rng(config.seed)

    d1_errors = []
    d1_witness = d2_witness = d4_witness = None
    worst = -1.0
    d4_strict = True
    for trial in range(config.trials):
        coarse, segments, N = random_instance(rng, config)
        masses = coarse.ravel() * N.sizes
        out = method(coarse, segments, N)
        err = np.abs(group_sums(out, N.labels, N.count) - masses)
        d1_errors.append(err.mean())
        if err.max() > worst:
            worst = float(err.max())
            d1_witness = (trial, int(np.argmax(err)), worst)

        if d2_witness is None:
            v = _d2_violation(out, segments, N, masses)
            if v is None:
                adversary = _adversarial_segments(out, N)
                if adversary is not None:
                    v = _d2_violation(method(coarse, adversary, N), adversary, N, masses)
            if v is not None:
                d2_witness = (trial,) + v

        if d4_witness is None:
            w = _d4_probe(method, coarse, segments, N, rng, zero_sum=True)
            if w is not None:
                d4_witness = (trial,) + w
        if d4_strict and _d4_probe(method, coarse, segments, N, rng, zero_sum=False) is not None:
            d4_strict = False

    d1_error = float(np.mean(d1_errors)) if d1_errors else 0.0
    d3_pass, ratios = _d3_probe(method, config.delta)
    return DesiderataReport(
        method=name,
        trials=config.trials,
        d1_error=d1_error,
        d1_pass=d1_error <= D1_TOLERANCE,
        d2_pass=d2_witness is None,
        d3_pass=d3_pass,
        d4_pass=d4_witness is None,
        d4_strict_pass=d4_strict,
        d1_witness=d1_witness,
        d2_witness=d2_witness,
        d3_ratios=ratios,
        d4_witness=d4_witness,
    )
