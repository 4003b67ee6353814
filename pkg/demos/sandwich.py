"""Trap a numerical solution between the two comparison functions.

Log-tail initial data with gamma = 0.5 is evolved to t = 1e3. At each output
time the script prints the solution at the origin next to the lower and upper
comparison values there, plus the worst margin over the whole grid.
"""

import numpy as np

from barenblatt import comparison as cmp
from barenblatt.profiles import log_tail_data, tail_ratio_bounds
from barenblatt.solver import SolverConfig, run_sandwich
from barenblatt.special_functions import ModelParams

params = ModelParams(n=5, D=1.0, gamma=0.5)
phi0 = log_tail_data(1.0, params.gamma)
b, B = tail_ratio_bounds(phi0, params.gamma)

sp = cmp.select_super_params(params)
upper = cmp.matched_super(sp.with_A(cmp.select_A(phi0, sp, max(1.0, B))))
sb = cmp.select_sub_params(params)
lower = cmp.sub_solution(sb.with_a(cmp.select_a(phi0, b, sb)))

config = SolverConfig(t_end=1e3, n_xi=1024, output_times=tuple(np.geomspace(1e-2, 1e3, 11)))
report, traj = run_sandwich(phi0, config, params, lower, upper)

print(f"{'t':>9} {'lower(0)':>10} {'phi(0)':>10} {'upper(0)':>10} {'margin':>10}")
for k, t in enumerate(traj.times):
    lo = float(lower.value_r(0.0, t))
    hi = float(upper.value_r(0.0, t))
    margin = min(report.upper_margin[k], report.lower_margin[k])
    print(f"{t:9.3g} {lo:10.4g} {traj.phi[k, 0]:10.4g} {hi:10.4g} {margin:10.3g}")
print("sandwich", "holds" if report.passed else f"fails on the {report.failed_side} side")
