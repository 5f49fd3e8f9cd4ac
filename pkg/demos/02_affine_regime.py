"""
Low signaling incentive: k = 1, sigma_x = 1
===========================================

The collocation solution collapses onto the best affine law.
"""

import numpy as np

from witsolve import (PARAMETER_SETS, affine_optimal, affine_profile, build_strategy,
                      hermite_rule, monte_carlo_cost, quadrature_cost, solve_levels)

params = PARAMETER_SETS["table2"]
rule = hermite_rule(7)

law = affine_optimal(params)
print("nu =", law.nu, " mu =", law.mu, " closed-form cost =", law.total)

result = solve_levels(params, rule)
print("levels:", np.round(result.levels.levels, 6), "from start", result.start_tag)
print("levels / collocation points:", result.levels.levels[4:] / (np.sqrt(2) * rule.nodes[4:]))

profile = build_strategy(params, rule, result=result)
xs = np.linspace(-4, 4, 9)
print("max |gamma1bar - nu x0| on [-4, 4]:", np.max(np.abs(profile.gamma1bar(xs) - law.nu * xs)))

print("quadrature cost:", quadrature_cost(profile, params).total)
for name, prof in (("pbp", profile), ("affine", affine_profile(law, params))):
    r = monte_carlo_cost(prof, params)
    print(f"{name:7s} stage1 {r.stage1:.4f}  stage2 {r.stage2:.4f}  total {r.total:.5f} +- {r.se_total:.1e}")
