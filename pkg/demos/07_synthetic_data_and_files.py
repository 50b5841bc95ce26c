"""Generate synthetic instances and round-trip them through the file formats."""
import tempfile
from pathlib import Path

import numpy as np

from usu import SegmentPartition, gen_dataset, gen_pattern
from usu.io import grid_csv, read_grid, read_grid_csv, read_labels, write_grid, write_labels, write_pgm

items = gen_dataset(2, size=64, resolutions=(4, 7), seed=11)
for item in items:
    inst = item.instance
    print(f"{inst.label:9s} seed {item.seed:>10d} foreground {int(inst.gt_mask.sum()):4d} px, "
          f"coarse shapes {[c.shape for c in item.coarse.values()]}")

stripes = gen_pattern("sine", 64, period=8)
print("\nsine stripes per row:", int(np.count_nonzero(np.diff(stripes.gt_mask[0].astype(int)) == 1)))

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    grid = items[0].coarse[7]
    write_grid(tmp / "coarse.usu", grid)
    print("binary round trip exact:", np.array_equal(read_grid(tmp / "coarse.usu"), grid))
    (tmp / "coarse.csv").write_bytes(grid_csv(grid))
    print("CSV round trip exact:   ", np.array_equal(read_grid_csv(tmp / "coarse.csv"), grid))
    seg = SegmentPartition.from_labels(items[0].instance.gt_mask.astype(int)).with_scores(np.array([0.0, 1.0]))
    write_labels(tmp / "mask.usu", seg)
    print("labels round trip exact:", np.array_equal(read_labels(tmp / "mask.usu").labels, seg.labels))
    write_pgm(tmp / "image.pgm", items[0].instance.image)
    print("PGM header:", (tmp / "image.pgm").read_bytes()[:16])
