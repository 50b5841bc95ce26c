import numpy as np
import pytest

from usu.bench import aggregate, image_partition, run_benchmark, thread_count
from usu.methods import METHODS, get_method
from usu.grid import SegmentPartition, block_partition
from usu.synth import gen_shape


def test_image_partition_splits_at_mid_range():
    inst = gen_shape("square", 32, 4)
    seg = image_partition(inst.image)
    assert seg.count == 2
    assert np.array_equal(seg.labels == seg.labels[inst.gt_mask][0], inst.gt_mask)


def test_image_partition_constant_image():
    assert image_partition(np.full((4, 4), 0.3)).count == 1


@pytest.mark.parametrize("value,expected", [("3", 3), ("0", None), ("", None)])
def test_thread_count(monkeypatch, value, expected):
    monkeypatch.setenv("USU_THREADS", value)
    n = thread_count()
    assert n == expected if expected else n >= 1


def test_rows_ordered_and_complete():
    rows = run_benchmark(["nearest", "usu"], resolutions=(4, 8), count=2, size=32)
    assert len(rows) == 6 * 2 * 2
    keys = [(r.index, r.resolution, r.method) for r in rows]
    assert keys == sorted(keys, key=lambda k: (k[0], [4, 8].index(k[1]), ["nearest", "usu"].index(k[2])))
    for r in rows:
        assert 0 <= r.iou <= 1 and 0 <= r.concentration <= 1 and r.pointing_game in (0, 1)


def test_aggregate_means():
    rows = run_benchmark(["bilinear"], resolutions=(4,), count=2, size=32)
    agg = aggregate(rows)
    assert agg[("bilinear", 4)]["n"] == 6
    assert agg[("bilinear", 4)]["iou"] == pytest.approx(np.mean([r.iou for r in rows]))


@pytest.mark.parametrize("kwargs", [dict(methods=[]), dict(methods=["usu"], oracle="half"),
                                    dict(methods=["usu"], partition="slic")])
def test_invalid(kwargs):
    with pytest.raises(ValueError):
        run_benchmark(**kwargs)


def test_refine_partition_mode_runs_on_patterns():
    rows = run_benchmark(["usu", "iwmr"], dataset="patterns", resolutions=(7,), count=1, size=32,
                         partition="refine", oracle="scores")
    assert {r.label for r in rows} == {"zigzag", "sine", "spiral", "concentric", "moire"}


def test_method_handles():
    N = block_partition(8, 8, 2, 2)
    seg = SegmentPartition.from_labels(np.arange(64).reshape(8, 8) % 2, [0.2, 0.9])
    coarse = np.arange(4.0).reshape(2, 2)
    for name in METHODS:
        m = get_method(name)
        assert m.name == name
        assert m.score_aware == (name in ("usu", "iwmr"))
        assert m(coarse, seg, N).shape == (8, 8)
    with pytest.raises(ValueError):
        get_method("sinc")


def test_interpolation_needs_block_layout():
    from usu.grid import NeighbourhoodSystem
    N = NeighbourhoodSystem(np.array([[0, 1], [1, 0]]), 2)
    with pytest.raises(ValueError):
        get_method("bilinear")(np.ones(2), None, N)
