"""Comparison strategies: optimal affine, Witsenhausen's sign/tanh pair and
the Bansal-Basar sign-plus-linear class."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .model import ProblemParams, StrategyProfile, collocation_points
from .quadrature import QuadratureRule
from .solver import GridSpec
from .strategies import AffineGamma2, MixtureGamma2, TanhGamma2

__all__ = [
    "AffineLaw",
    "BansalBasarLaw",
    "affine_quintic",
    "affine_roots",
    "affine_closed_form_cost",
    "affine_optimal",
    "affine_profile",
    "witsenhausen_sign",
    "bansal_basar_profile",
]

# jump sides are tabulated this far (relative to sigma_x) from the origin
_JUMP_OFFSET = 1e-9


def affine_quintic(t, k, sigma_x):
    """(t - sigma_x)(1 + t^2)^2 + t / k^2."""
    t = np.asarray(t, dtype=float)
    return (t - sigma_x) * (1.0 + t * t) ** 2 + t / k**2


def _bisect(f, a, b, fa, xtol=1e-12):
    while b - a > xtol * max(1.0, abs(a), abs(b)):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def affine_roots(k: float, sigma_x: float, subintervals: int = 4096) -> list[float]:
    """All real roots of the affine quintic on (0, sigma_x], ascending.

    Sign-change scan followed by bisection; the scan window is doubled once
    if it holds no root.
    """
    f = lambda t: float(affine_quintic(t, k, sigma_x))
    for upper in (sigma_x, 2.0 * sigma_x):
        grid = np.linspace(0.0, upper, subintervals + 1)
        # the quintic is -sigma_x at t = 0, so start just inside the interval
        grid[0] = upper * 1e-15
        vals = affine_quintic(grid, k, sigma_x)
        roots = []
        for i in range(subintervals):
            if vals[i] == 0.0:
                roots.append(float(grid[i]))
            elif vals[i] * vals[i + 1] < 0:
                roots.append(_bisect(f, grid[i], grid[i + 1], vals[i]))
        if vals[-1] == 0.0:
            roots.append(float(grid[-1]))
        if roots:
            return roots
    raise ArithmeticError(f"no real root of the affine quintic for k={k}, sigma_x={sigma_x}")


def affine_closed_form_cost(nu: float, params: ProblemParams) -> tuple[float, float]:
    """(stage1, stage2) of gamma1bar = nu x0 with its MMSE linear second stage."""
    sx2 = params.sigma_x**2
    snr = sx2 * nu * nu
    stage1 = params.k**2 * (nu - 1.0) ** 2 * sx2
    stage2 = snr * params.sigma**2 / (params.sigma**2 + snr)
    return stage1, stage2


@dataclass(frozen=True)
class AffineLaw:
    nu: float
    mu: float
    t_root: float
    all_real_roots: list = field(default_factory=list)
    stage1: float = math.nan
    stage2: float = math.nan

    @property
    def total(self) -> float:
        return self.stage1 + self.stage2

    def to_dict(self):
        return {"nu": self.nu, "mu": self.mu, "t": self.t_root,
                "all_real_roots": list(self.all_real_roots),
                "stage1": self.stage1, "stage2": self.stage2, "total": self.total}


@dataclass(frozen=True)
class BansalBasarLaw:
    epsilon: float
    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and math.isfinite(self.lam)):
            raise ValueError("Bansal-Basar parameters must be finite")

    def control(self, x0):
        x0 = np.asarray(x0, dtype=float)
        return self.epsilon * np.sign(x0) + self.lam * x0

    def gamma1bar(self, x0):
        return np.asarray(x0, dtype=float) + self.control(x0)


def affine_optimal(params: ProblemParams) -> AffineLaw:
    """Best affine pair from the real roots t = sigma_x nu of the quintic.

    Only unit noise variance is supported.
    """
    if params.sigma != 1.0:
        raise ValueError("affine_optimal requires sigma = 1")
    roots = affine_roots(params.k, params.sigma_x)
    costs = [sum(affine_closed_form_cost(t / params.sigma_x, params)) for t in roots]
    t = roots[int(np.argmin(costs))]
    nu = t / params.sigma_x
    s1, s2 = affine_closed_form_cost(nu, params)
    mu = params.sigma_x**2 * nu**2 / (1.0 + params.sigma_x**2 * nu**2)
    return AffineLaw(nu=nu, mu=mu, t_root=t, all_real_roots=roots, stage1=s1, stage2=s2)


def _with_jump(xs, params):
    d = _JUMP_OFFSET * params.sigma_x
    return np.unique(np.concatenate([xs, [-d, 0.0, d]]))


def affine_profile(law: AffineLaw, params: ProblemParams, grid: GridSpec | None = None) -> StrategyProfile:
    xs = (grid or GridSpec()).grid(params)
    nu = law.nu
    return StrategyProfile(xs, nu * xs, AffineGamma2(law.mu), "affine",
                           gamma1bar_fn=lambda x: nu * x, meta={"law": law.to_dict()})


def witsenhausen_sign(params: ProblemParams, grid: GridSpec | None = None) -> StrategyProfile:
    """gamma1bar = sigma_x sgn(x0), gamma2 = sigma_x tanh(sigma_x y1)."""
    sx = params.sigma_x
    xs = _with_jump((grid or GridSpec()).grid(params), params)
    fn = lambda x: sx * np.sign(x)
    return StrategyProfile(xs, fn(xs), TanhGamma2(sx, sx), "sign", gamma1bar_fn=fn)


def bansal_basar_profile(law: BansalBasarLaw, params: ProblemParams, rule: QuadratureRule,
                         condition_on: str = "control", grid: GridSpec | None = None) -> StrategyProfile:
    """Sign-plus-linear first stage with a quadrature posterior-mean second stage.

    ``condition_on="control"`` estimates eps sgn(x0) + lam x0 as written in the
    original law; ``"state"`` estimates gamma1bar(x0) = x0 + eps sgn(x0) + lam x0,
    the quantity the stage-2 cost actually penalises.
    """
    if condition_on not in ("control", "state"):
        raise ValueError("condition_on must be 'control' or 'state'")
    xj = collocation_points(params, rule)
    centers = law.gamma1bar(xj)
    values = law.control(xj) if condition_on == "control" else centers
    gamma2 = MixtureGamma2(centers, values, rule.log_weights, params.sigma)
    xs = _with_jump((grid or GridSpec()).grid(params), params)
    return StrategyProfile(xs, law.gamma1bar(xs), gamma2, "bansal-basar",
                           gamma1bar_fn=law.gamma1bar,
                           meta={"epsilon": law.epsilon, "lambda": law.lam,
                                 "condition_on": condition_on, "order": rule.order})
