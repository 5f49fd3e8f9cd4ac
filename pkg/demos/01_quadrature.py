"""
Gauss-Hermite rules
===================

Nodes and weights for the weight exp(-x^2), and how fast they converge
on a smooth integrand.
"""

import math

import numpy as np

from witsolve import hermite_rule, integrate

rule = hermite_rule(7)
for z, w in zip(rule.nodes, rule.weights):
    print(f"{z:+.15f}  {w:.15f}")
print("weight sum - sqrt(pi):", rule.weights.sum() - math.sqrt(math.pi))

# cos(x) exp(-x^2) integrates to sqrt(pi) exp(-1/4)
exact = math.sqrt(math.pi) * math.exp(-0.25)
for n in (2, 4, 8, 16):
    print(n, abs(integrate(np.cos, hermite_rule(n)) - exact))
