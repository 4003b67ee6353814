"""Decay rates of the perturbation for log-tail data and for a compact bump.

For log-tail data the origin value should fall like t^(-gamma/2). For the
bump the supremum falls like t^(-1/2) and no faster, so weighting it with a
larger exponent produces a series that grows across the window.
"""

from barenblatt.profiles import bump_data
from barenblatt.rates import (DEFAULT_WINDOW, band_check, extract_series, suite_config,
                              theorem_suite)
from barenblatt.solver import solve
from barenblatt.special_functions import ModelParams

print(f"{'gamma':>6} {'slope':>8} {'target':>8} {'band_lo':>9} {'band_hi':>9}")
for row in theorem_suite(5, 1.0, "log-tail", (0.25, 0.5, 0.75), n_xi=1024):
    print(f"{row.gamma:6.2f} {row.p_origin:8.4f} {-row.gamma / 2:8.4f} "
          f"{row.band_lo:9.4g} {row.band_hi:9.4g}")

traj = solve(bump_data(), suite_config(DEFAULT_WINDOW, 16, 1024), ModelParams(5, 1.0, 0.5))
sup = extract_series(traj, "sup")
for exponent in (0.5, 0.6):
    band = band_check(sup, exponent)
    print(f"bump, exponent {exponent}: band [{band.lo:.4g}, {band.hi:.4g}], "
          f"start/end ratio {band.decay_factor:.3g}")
