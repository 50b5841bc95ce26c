import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import layouts
from usu.errors import UndefinedMetricError
from usu.evaluate import (
    EXPECTED_PATTERNS,
    BatteryConfig,
    alpha_beta,
    concentration,
    iou_best,
    mass_imbalance,
    mean_attribution_scorer,
    oracle_scorer,
    pointing_game,
    verify_desiderata,
)
from usu.grid import SegmentPartition, block_partition, neighbourhood_masses
from usu.interp import mass_leak_witness, interp_upsample
from usu.methods import METHODS, get_method
from usu.redistribute import usu_upsample
from usu.synth import faithful_coarse

grids = hnp.arrays(np.float64, (6, 6), elements=st.floats(-10, 10))
nonneg = hnp.arrays(np.float64, (6, 6), elements=st.floats(0, 10))


class TestAlphaBeta:
    def test_equal(self):
        A = np.random.default_rng(0).normal(size=(4, 4))
        r = alpha_beta(A, A)
        assert not r.alpha.any() and not r.beta.any()

    def test_excess(self):
        r = alpha_beta(np.array([[0.8]]), np.array([[0.5]]))
        assert r.alpha[0, 0] == pytest.approx(0.3) and r.beta[0, 0] == 0

    def test_negative_magnitude(self):
        r = alpha_beta(np.array([[-0.2]]), np.array([[0.5]]))
        assert r.alpha[0, 0] == 0 and r.beta[0, 0] == pytest.approx(0.3)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            alpha_beta(np.zeros((2, 2)), np.zeros((2, 3)))

    @given(grids, grids)
    def test_exclusive_and_complete(self, U, T):
        r = alpha_beta(U, T)
        assert np.all(r.alpha * r.beta == 0)
        assert np.all(r.alpha >= 0) and np.all(r.beta >= 0)
        assert np.allclose(r.alpha + r.beta, np.abs(np.abs(U) - np.abs(T)), rtol=0, atol=1e-12)

    def test_with_neighbourhoods(self):
        N = block_partition(4, 4, 2, 2)
        r = alpha_beta(np.zeros((4, 4)), np.ones((4, 4)), N)
        assert r.mass_deficit.tolist() == [4.0] * 4
        assert r.mass_excess.tolist() == [0.0] * 4


class TestMassImbalance:
    def test_zero_output(self):
        N = block_partition(6, 6, 2, 2)
        T = np.random.default_rng(0).random((6, 6))
        deficit, excess = mass_imbalance(np.zeros((6, 6)), T, N)
        assert np.allclose(deficit, neighbourhood_masses(T, N))
        assert not excess.any()

    @given(layouts(), st.data())
    def test_faithful_aggregation_is_lossless(self, layout, data):
        N, seg = layout
        T = data.draw(hnp.arrays(np.float64, N.shape, elements=st.floats(0, 10)))
        out = usu_upsample(faithful_coarse(T, N), seg, N)
        deficit, excess = mass_imbalance(out, T, N)
        assert deficit.max() <= 1e-9 and excess.max() <= 1e-9

    @given(nonneg, nonneg)
    def test_mass_error_bounds(self, U, T):
        N = block_partition(6, 6, 3, 2)
        r = alpha_beta(U, T, N)
        a_sum = np.bincount(N.labels.ravel(), r.alpha.ravel(), N.count)
        b_sum = np.bincount(N.labels.ravel(), r.beta.ravel(), N.count)
        assert np.all(a_sum >= r.mass_excess - 1e-9)
        assert np.all(b_sum >= r.mass_deficit - 1e-9)

    def test_bilinear_excess_matches_leak(self):
        N = block_partition(8, 8, 2, 2)
        coarse = np.zeros((2, 2))
        coarse[0, 0] = 1.0
        out = interp_upsample(coarse, 8, 8, "bilinear")
        truth = (coarse.ravel()[N.labels])
        _, excess = mass_imbalance(out, truth, N)
        leak = mass_leak_witness("bilinear", (2, 2), (8, 8), cell=(0, 0))
        assert excess[1] > 0
        assert np.allclose(excess, np.maximum(0, leak))


def brute_iou(U, gt, n=256):
    lo, hi = min(map(min, U)), max(map(max, U))
    best = 0.0
    for t in np.linspace(lo, hi, n):
        pred = [[u >= t for u in row] for row in U]
        inter = sum(p and g for pr, gr in zip(pred, gt) for p, g in zip(pr, gr))
        union = sum(p or g for pr, gr in zip(pred, gt) for p, g in zip(pr, gr))
        best = max(best, inter / union)
    return best


class TestLocalisation:
    def test_iou_perfect(self):
        gt = np.zeros((5, 5), bool)
        gt[1:3, 2:5] = True
        assert iou_best(gt.astype(float), gt) == 1.0

    def test_iou_constant(self):
        gt = np.zeros((4, 4), bool)
        gt[0, :3] = True
        assert iou_best(np.full((4, 4), 0.2), gt) == 3 / 16

    def test_iou_empty_mask(self):
        with pytest.raises(ValueError):
            iou_best(np.ones((3, 3)), np.zeros((3, 3), bool))

    @given(hnp.arrays(np.float64, (5, 5), elements=st.floats(-3, 3)), st.data())
    def test_iou_matches_brute_force(self, U, data):
        gt = data.draw(hnp.arrays(bool, (5, 5)))
        if not gt.any():
            gt[2, 2] = True
        value = iou_best(U, gt)
        assert 0 <= value <= 1
        assert value == pytest.approx(brute_iou(U.tolist(), gt.tolist()), abs=1e-15)

    def test_concentration_examples(self):
        gt = np.zeros((4, 4), bool)
        gt[:2] = True
        inside = np.where(gt, 1.0, 0.0)
        assert concentration(inside, gt) == 1.0
        assert concentration(np.ones((4, 4)), gt) == 0.5
        half = np.zeros((4, 4))
        half[0, 0], half[3, 3] = 2.0, -2.0
        assert concentration(half, gt) == 0.5

    def test_concentration_undefined(self):
        with pytest.raises(UndefinedMetricError):
            concentration(np.zeros((3, 3)), np.ones((3, 3), bool))

    def test_pointing_game(self):
        gt = np.zeros((3, 3), bool)
        gt[1, 1] = True
        peak_in = np.zeros((3, 3))
        peak_in[1, 1] = 1
        assert pointing_game(peak_in, gt) == 1
        assert pointing_game(-peak_in + 0.5, gt) == 0

    def test_pointing_game_tie_break(self):
        gt = np.zeros((3, 3), bool)
        gt[0, 0] = True
        assert pointing_game(np.ones((3, 3)), gt) == 1
        gt = np.zeros((3, 3), bool)
        gt[0, 1] = True
        assert pointing_game(np.ones((3, 3)), gt) == 0


class TestScorers:
    def test_oracle(self):
        gt = np.zeros((2, 4), bool)
        gt[:, :2] = True
        gt[0, 2] = True
        seg = SegmentPartition(np.array([[0, 0, 1, 2], [0, 0, 1, 2]]), [0.5] * 3)
        assert oracle_scorer(seg, gt).tolist() == [1.0, 0.5, 0.0]

    def test_mean_degenerate(self):
        seg = SegmentPartition.from_labels(np.arange(16).reshape(4, 4) % 3)
        assert mean_attribution_scorer(seg, np.zeros((4, 4))).tolist() == [0.5] * 3

    def test_mean_one_hot(self):
        labels = np.array([[0, 0, 1, 1], [2, 2, 3, 3]])
        A = np.zeros((2, 4))
        A[labels == 2] = -3.0
        assert mean_attribution_scorer(SegmentPartition(labels, [0.5] * 4), A).tolist() == [0, 0, 1, 0]

    @given(layouts(), st.data())
    def test_mean_in_range_and_monotone(self, layout, data):
        _, seg = layout
        A = data.draw(hnp.arrays(np.float64, seg.shape, elements=st.floats(-5, 5)))
        s = mean_attribution_scorer(seg, A)
        assert np.all((s >= 0) & (s <= 1))
        means = np.bincount(seg.labels.ravel(), np.abs(A).ravel()) / seg.sizes
        for i in range(seg.count):
            for j in range(seg.count):
                if means[i] > means[j] * (1 + 1e-9) + 1e-12:
                    assert s[i] >= s[j]

    @given(layouts(), st.data())
    def test_oracle_in_range(self, layout, data):
        _, seg = layout
        gt = data.draw(hnp.arrays(bool, seg.shape))
        s = oracle_scorer(seg, gt)
        assert np.all((s >= 0) & (s <= 1))


@pytest.mark.parametrize("name", METHODS)
def test_desiderata_patterns(name):
    report = verify_desiderata(name, BatteryConfig(trials=40, seed=3))
    assert report.pattern == EXPECTED_PATTERNS[name]
    assert report.d1_error >= 0
    assert name in report.summary()


def test_iwmr_strict_locality_fails_semi_local_passes():
    report = verify_desiderata("iwmr", BatteryConfig(trials=20))
    assert report.d4_pass and not report.d4_strict_pass
    assert report.d1_witness is not None


def test_usu_d1_error_tiny():
    report = verify_desiderata(get_method("usu"), BatteryConfig(trials=50), name="usu")
    assert report.d1_error <= 1e-12
    assert report.d4_strict_pass


def test_bilinear_witnesses():
    report = verify_desiderata("bilinear", BatteryConfig(trials=20))
    assert report.d1_error > 1e-3
    assert report.d2_witness is not None and report.d4_witness is not None


def test_user_supplied_method():
    def shuffled(coarse, segments, N):
        # Mass-conserving but score-blind.
        return usu_upsample(coarse, segments.with_scores(np.full(segments.count, 0.5)), N)
    report = verify_desiderata(shuffled, BatteryConfig(trials=10), name="blind")
    assert report.d1_pass and not report.d3_pass
