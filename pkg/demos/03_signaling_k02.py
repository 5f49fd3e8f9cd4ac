"""
The benchmark case: k = 0.2, sigma_x = 5
========================================

Seven signaling levels, a staircase first stage, and what different
starting points converge to.
"""

import numpy as np

from witsolve import PARAMETER_SETS, build_strategy, hermite_rule, solve_levels, system_residual
from witsolve.evaluation import monte_carlo_cost

params = PARAMETER_SETS["table4"]
rule = hermite_rule(7)

rounded = np.array([-19.8, -12.8, -6.15, 0.0, 6.15, 12.8, 19.8])
print("residual at the rounded levels:", np.linalg.norm(system_residual(rounded, params, rule)))

result = solve_levels(params, rule)
for a in result.attempts:
    print(f"{a.start_tag:9s} converged={a.converged}  est. cost {a.estimated_cost:.4f}  "
          f"levels {np.round(a.levels.levels, 3)}")
print("picked:", result.start_tag)

profile = build_strategy(params, rule, result=result)
x, g = profile.curve_x, profile.curve_g1bar
jumps = np.flatnonzero(np.diff(g) > 1.0)
print("jumps at x0 =", np.round(0.5 * (x[jumps] + x[jumps + 1]), 4))

# the plateaus are not flat
print("gamma1bar(3.2), gamma1bar(5.0), gamma1bar(8.0):", profile.gamma1bar([3.2, 5.0, 8.0]))

r = monte_carlo_cost(profile, params)
print(f"stage1 {r.stage1:.4f}  stage2 {r.stage2:.4f}  total {r.total:.4f} +- {r.se_total:.1e}")
