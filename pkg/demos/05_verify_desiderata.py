"""Run the four-property battery on built-in methods and on your own.

Each method gets a four-character pattern: conservation, monotonicity,
temperature-independent conditioning, and locality.  A hand-written method
only needs the signature ``method(coarse, segments, neighbourhoods)``.
"""
import numpy as np

from usu import EXPECTED_PATTERNS, BatteryConfig, piecewise_constant_expand, verify_desiderata

config = BatteryConfig(trials=60, seed=1)
for name in ("usu", "iwmr", "nearest", "bilinear"):
    report = verify_desiderata(name, config)
    print(f"{report.pattern} (expected {EXPECTED_PATTERNS[name]})  {report.summary()}")


def sharpen(coarse, segments, neighbourhoods):
    """Expand, then square the scores as weights: conserves mass, but D3 fails."""
    expanded = piecewise_constant_expand(coarse, neighbourhoods)
    w = segments.scores[segments.labels] ** 2 + 1e-12
    totals = np.bincount(neighbourhoods.labels.ravel(), w.ravel())
    return expanded * w * neighbourhoods.sizes[neighbourhoods.labels] / totals[neighbourhoods.labels]


report = verify_desiderata(sharpen, config, name="squared-score")
print(f"{report.pattern}  {report.summary()}")
