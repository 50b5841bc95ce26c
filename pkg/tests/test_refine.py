import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import layouts
from usu.errors import ScorerError
from usu.evaluate import SCORERS
from usu.grid import SegmentPartition, block_partition, is_refinement
from usu.refine import (
    RefineConfig,
    boundary_segments,
    comparator,
    hmap,
    merge,
    mixing_alpha,
    refine_pipeline,
    score_matrix,
)

fields = hnp.arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=st.floats(-5, 5))


def naive_hmap(phi):
    """Diagonal differences with replicate padding, written out per pixel."""
    h, w = phi.shape
    at = lambda r, c: phi[min(max(r, 0), h - 1), min(max(c, 0), w - 1)]
    out = np.empty_like(phi)
    for r in range(h):
        for c in range(w):
            out[r, c] = -at(r - 1, c - 1) + at(r - 1, c + 1) + at(r + 1, c - 1) - at(r + 1, c + 1)
    return out


class TestScoreMatrix:
    def test_single_segment(self):
        seg = SegmentPartition(np.zeros((3, 4), int), [0.3])
        assert np.all(score_matrix(seg) == 0.3)

    def test_half_planes(self):
        labels = np.zeros((4, 4), int)
        labels[:, 2:] = 1
        phi = score_matrix(SegmentPartition(labels, [0.0, 1.0]))
        assert phi.tolist() == [[0, 0, 1, 1]] * 4

    @given(layouts())
    def test_segment_means_recover_scores(self, layout):
        _, seg = layout
        phi = score_matrix(seg)
        for p in range(seg.count):
            assert np.all(phi[seg.labels == p] == seg.scores[p])


class TestHmap:
    def test_constant_is_zero_everywhere(self):
        assert not hmap(np.full((6, 7), 0.4)).any()

    def test_vertical_step_is_invisible(self):
        # The kernel is a mixed second difference: a straight step along one
        # axis cancels exactly, only corners and diagonals register.
        phi = np.zeros((6, 6))
        phi[:, 3:] = 1.0
        assert not hmap(phi).any()

    def test_corner_registers(self):
        phi = np.zeros((6, 6))
        phi[3:, 3:] = 1.0
        H = hmap(phi)
        assert H[2, 2] == -1.0
        assert np.count_nonzero(H) == 4

    def test_single_raised_pixel(self):
        phi = np.zeros((5, 5))
        phi[2, 2] = 0.7
        H = hmap(phi)
        assert {(r, c): H[r, c] for r, c in zip(*np.nonzero(H))} == {
            (1, 1): -0.7, (1, 3): 0.7, (3, 1): 0.7, (3, 3): -0.7}

    @given(fields)
    def test_matches_naive(self, phi):
        assert np.allclose(hmap(phi), naive_hmap(phi), rtol=0, atol=1e-12)

    @given(fields, st.floats(-3, 3), st.data())
    def test_linear(self, a, r, data):
        b = data.draw(hnp.arrays(np.float64, a.shape, elements=st.floats(-5, 5)))
        assert np.allclose(hmap(a + b), hmap(a) + hmap(b), rtol=0, atol=1e-12)
        assert np.allclose(hmap(r * a), r * hmap(a), rtol=0, atol=1e-12)

    @given(hnp.arrays(np.float64, (7, 7), elements=st.floats(0, 1)), st.floats(0, 1))
    def test_zero_on_constant_interior_patch(self, phi, c):
        phi = phi.copy()
        phi[2:5, 2:5] = c
        assert hmap(phi)[3, 3] == 0.0


class TestBoundarySegments:
    @pytest.fixture
    def seg(self):
        return SegmentPartition(np.array([[0, 0, 1, 1]]), [0.5, 0.5])

    def test_zero_field(self, seg):
        assert boundary_segments(np.zeros((1, 4)), seg, 0.05) == set()

    def test_threshold(self, seg):
        H = np.array([[0.3, -0.1, 0.2, -0.7]])
        assert boundary_segments(H, seg, 0.5) == {1}
        assert boundary_segments(H, seg, 1e9) == set()
        assert boundary_segments(H, seg, 1e-300) == {0, 1}

    def test_shape_mismatch(self, seg):
        with pytest.raises(ValueError):
            boundary_segments(np.zeros((2, 2)), seg, 0.1)

    @given(layouts(), st.floats(1e-3, 2), st.floats(1e-3, 2), st.data())
    def test_threshold_monotone(self, layout, t1, t2, data):
        _, seg = layout
        H = data.draw(hnp.arrays(np.float64, seg.shape, elements=st.floats(-2, 2)))
        lo, hi = sorted((t1, t2))
        assert boundary_segments(H, seg, hi) <= boundary_segments(H, seg, lo)


class TestMixing:
    def test_half_at_center(self):
        assert mixing_alpha(np.array([0.1]), 0.1, 0.05)[0] == 0.5

    def test_fine_dominates_far_above(self):
        a = mixing_alpha(np.array([0.1 + 5 * 0.05]), 0.1, 0.05)[0]
        assert a == pytest.approx(1 / (1 + math.exp(5)), abs=1e-12)
        assert a == pytest.approx(0.006693, abs=1e-6)
        assert a < 0.01

    def test_coarse_dominates_far_below(self):
        a = mixing_alpha(np.array([0.3 - 5 * 0.05]), 0.3, 0.05)[0]
        assert a == pytest.approx(0.993307, abs=1e-6)
        assert a > 0.99

    def test_sign_of_h_irrelevant(self):
        H = np.array([-0.4, 0.4])
        a = mixing_alpha(H, 0.1, 0.05)
        assert a[0] == a[1]

    def test_invalid_tau(self):
        with pytest.raises(ValueError):
            mixing_alpha(np.zeros(2), 0.1, 0.0)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0.05, 1))
    def test_in_open_interval_and_decreasing(self, h1, h2, mu, tau):
        a1, a2 = mixing_alpha(np.array([h1, h2]), mu, tau)
        assert 0 < a1 < 1 and 0 < a2 < 1
        if abs(h1) < abs(h2) - 1e-9:
            assert a1 > a2


class TestMerge:
    @given(hnp.arrays(np.float64, (4, 5), elements=st.floats(0, 1)),
           hnp.arrays(np.float64, (4, 5), elements=st.floats(1e-6, 1 - 1e-6)))
    def test_identity(self, phi, alpha):
        assert np.allclose(merge(phi, phi, alpha), phi, rtol=0, atol=1e-15)

    def test_half_half(self):
        assert merge(np.zeros((2, 2)), np.ones((2, 2)), np.full((2, 2), 0.5)).tolist() == [[0.5] * 2] * 2

    @given(hnp.arrays(np.float64, (4, 5), elements=st.floats(0, 1)),
           hnp.arrays(np.float64, (4, 5), elements=st.floats(0, 1)),
           hnp.arrays(np.float64, (4, 5), elements=st.floats(0, 1)))
    def test_bounded_convex(self, a, b, alpha):
        out = merge(a, b, alpha)
        assert np.all(out >= np.minimum(a, b) - 1e-15)
        assert np.all(out <= np.maximum(a, b) + 1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            merge(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)))


class TestComparator:
    def test_identical(self):
        phi = np.random.default_rng(0).random((5, 5))
        assert comparator(phi, phi, 1e-9) is False

    def test_twice_tolerance(self):
        a = np.zeros((2, 2))
        b = a.copy()
        b[0, 0] = 0.2
        assert comparator(a, b, 0.1) is True

    @given(fields, st.floats(1e-6, 10), st.data())
    def test_symmetric(self, a, tol, data):
        b = data.draw(hnp.arrays(np.float64, a.shape, elements=st.floats(-5, 5)))
        assert comparator(a, b, tol) == comparator(b, a, tol)
        assert comparator(a, a, tol) is False

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            comparator(np.zeros((2, 2)), np.zeros((3, 2)), 0.1)


class TestConfig:
    def test_defaults(self):
        cfg = RefineConfig()
        assert (cfg.theta, cfg.mu, cfg.tau, cfg.max_depth) == (0.05, 0.1, 0.05, 4)
        assert cfg.tolerance_for((64, 64)) == pytest.approx(0.64)

    @pytest.mark.parametrize("kwargs", [dict(theta=0), dict(mu=-0.1), dict(tau=0), dict(tolerance=0),
                                        dict(max_depth=0), dict(max_depth=1.5)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            RefineConfig(**kwargs)


def square_instance():
    N = block_partition(16, 16, 4, 4)
    gt = np.zeros((16, 16), bool)
    gt[2:7, 2:7] = True
    start = SegmentPartition(N.labels, np.full(16, 0.5))
    return N, gt, start


class TestPipeline:
    def test_homogeneous_scores_stop_at_depth_zero(self):
        N = block_partition(8, 8, 2, 2)
        start = SegmentPartition(N.labels, np.full(4, 0.5))
        # A constant field gives every segment the same score, hence H = 0.
        out, hier, states = refine_pipeline(np.ones((8, 8)), N, start, SCORERS["mean"], return_states=True)
        assert hier.depth == 1 and len(states) == 1
        assert np.allclose(out, 1.0)

    def test_refinement_localized_to_boundary_segments(self):
        N, gt, start = square_instance()
        scorer = SCORERS["oracle"]
        _, hier, _ = refine_pipeline(gt.astype(float), N, start, scorer, gt_mask=gt, return_states=True)
        level0 = hier[0]
        targets = boundary_segments(hmap(score_matrix(level0)), level0, RefineConfig().theta)
        assert 0 < len(targets) < level0.count
        level1 = hier[1]
        for p in range(level0.count):
            children = np.unique(level1.labels[level0.labels == p])
            assert (len(children) > 1) == (p in targets)

    def test_mass_and_nesting(self):
        N, gt, start = square_instance()
        A = gt.astype(float)
        out, hier, states = refine_pipeline(A, N, start, SCORERS["oracle"], gt_mask=gt, return_states=True)
        assert out.sum() == pytest.approx(A.sum(), rel=1e-9)
        for fine, coarse in zip(list(hier)[1:], hier):
            assert is_refinement(fine, coarse)
        for st_ in states:
            assert st_.attribution.sum() == pytest.approx(A.sum(), rel=1e-9)
            assert np.all((st_.score_matrix >= 0) & (st_.score_matrix <= 1))

    def test_sharpens_toward_ground_truth(self):
        N, gt, start = square_instance()
        A = gt.astype(float)
        out, _ = refine_pipeline(A, N, start, SCORERS["oracle"], gt_mask=gt)
        nearest = (np.bincount(N.labels.ravel(), A.ravel()) / N.sizes)[N.labels]
        assert np.abs(out - A).sum() < np.abs(nearest - A).sum()

    def test_scorer_failure_reports_depth(self):
        N, gt, start = square_instance()
        calls = []

        def flaky(partition, attribution, gt_mask):
            calls.append(partition.count)
            if len(calls) > 1:
                raise RuntimeError("model unavailable")
            return SCORERS["oracle"](partition, attribution, gt_mask)

        with pytest.raises(ScorerError, match="depth 1") as info:
            refine_pipeline(gt.astype(float), N, start, flaky, gt_mask=gt)
        assert isinstance(info.value.__cause__, RuntimeError)

    def test_scorer_out_of_range(self):
        N, gt, start = square_instance()
        with pytest.raises(ScorerError, match="depth 0"):
            refine_pipeline(gt.astype(float), N, start, lambda p, a, g: np.full(p.count, 2.0))

    @pytest.mark.parametrize("depth", [1, 2, 3, 4, 5])
    def test_depth_budget(self, depth):
        N, gt, start = square_instance()
        cfg = RefineConfig(tolerance=1e-12, max_depth=depth)
        _, hier = refine_pipeline(gt.astype(float), N, start, SCORERS["oracle"], cfg, gt_mask=gt)
        assert hier.depth <= depth
