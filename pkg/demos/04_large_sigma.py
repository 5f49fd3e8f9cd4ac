"""
A wide prior: k = 0.001, sigma_x = 1000
=======================================

Levels in the thousands; the stage-2 cost nearly vanishes.
"""

import time

import numpy as np

from witsolve import PARAMETER_SETS, bound_check, build_strategy, hermite_rule, solve_levels
from witsolve.evaluation import monte_carlo_cost

params = PARAMETER_SETS["table1"]
rule = hermite_rule(7)

t0 = time.perf_counter()
result = solve_levels(params, rule)
print("levels:", np.round(result.levels.levels, 3), "start", result.start_tag)
profile = build_strategy(params, rule, result=result)
print(f"curve with {profile.curve_x.size} nodes in {time.perf_counter() - t0:.1f} s")

steps = np.unique(np.round(profile.curve_g1bar[np.abs(np.diff(profile.curve_g1bar, append=np.inf)) < 1], 0))
print("distinct plateau values (rounded):", steps[steps >= 0][:10])

r = monte_carlo_cost(profile, params)
print(f"stage1 {r.stage1:.4f}  stage2 {r.stage2:.3e}  total {r.total:.4f}  below bound: {bound_check(r, params)}")
