"""Why kernel interpolation is a poor fit for attribution maps.

Three small constructions show what goes wrong with bilinear, bicubic and
Lanczos upsampling: mass escapes its block, one coarse cell changes pixels in
another block, and a larger coarse value can end up below a smaller one.
Nearest-neighbour keeps mass in place but ignores any segment information.
"""
import numpy as np

from usu import (block_partition, interp_upsample, locality_violation_witness, mass_leak_witness,
                 monotonicity_violation_witness)

N = block_partition(8, 8, 2, 2)
for kernel in ("nearest", "bilinear", "bicubic", "lanczos3"):
    leak = mass_leak_witness(kernel, (2, 2), (8, 8), N, cell=(0, 0))
    locality = locality_violation_witness(kernel, (2, 2), (8, 8))
    print(f"{kernel:9s} mass per block from a unit cell at (0,0): {np.round(leak, 3)}  "
          f"cross-block response {locality:.3f}")

w = monotonicity_violation_witness("bicubic", (2, 2), (8, 8))
if w is not None:
    print(f"\nbicubic ordering flip: pixel {w.high_score_pixel} = {w.output[w.high_score_pixel]:.4f} "
          f"< pixel {w.low_score_pixel} = {w.output[w.low_score_pixel]:.4f}")

ramp = np.array([[0.0, 1.0, 0.0, 1.0]])
print("\nLanczos ringing on an alternating row:", np.round(interp_upsample(ramp, 1, 16, "lanczos3")[0], 3))
