"""Problem data and the discretized person-by-person optimality equations.

Notation: ``gamma1bar`` is the post-control state map x0 -> x0 + u1 and
``gamma2`` the second-stage estimator y1 -> u2. After Gauss-Hermite
discretization of the prior, gamma1bar is summarised by its values ``s_l``
at the collocation points sqrt(2 sigma_x^2) z_l, and gamma2 becomes a
Gaussian-mixture posterior mean over those levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np

from .quadrature import QuadratureRule, SQRT_PI

__all__ = [
    "ProblemParams",
    "SignalingLevels",
    "StrategyProfile",
    "collocation_points",
    "mixture_mean",
    "gamma2_hat",
    "gamma1bar_residual",
    "residual_offset",
    "stage2_estimate",
    "system_residual",
]

PROVENANCES = ("pbp", "affine", "sign", "bansal-basar", "external")


@dataclass(frozen=True)
class ProblemParams:
    """Stage-1 cost weight ``k``, noise std ``sigma`` and prior std ``sigma_x``."""

    k: float
    sigma: float
    sigma_x: float

    def __post_init__(self):
        for name in ("k", "sigma", "sigma_x"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, float(value))

    @property
    def bound(self) -> float:
        """Upper bound min(1, k^2 sigma_x^2) on the optimal cost."""
        return min(1.0, (self.k * self.sigma_x) ** 2)


@dataclass(frozen=True, eq=False)
class SignalingLevels:
    """gamma1bar evaluated at the collocation points, in collocation order."""

    levels: np.ndarray
    rule_order: int

    def __post_init__(self):
        levels = np.array(self.levels, dtype=float)
        if levels.ndim != 1 or levels.size != self.rule_order:
            raise ValueError(
                f"expected {self.rule_order} signaling levels, got shape {levels.shape}"
            )
        if not np.all(np.isfinite(levels)):
            raise ValueError("signaling levels must be finite")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    def __len__(self):
        return self.rule_order


@dataclass(eq=False)
class StrategyProfile:
    """An evaluable strategy pair.

    ``curve_x``/``curve_g1bar`` tabulate gamma1bar; off-grid values are
    linearly interpolated (clamped at the ends) unless ``gamma1bar_fn``
    supplies the closed form. ``gamma2`` is any vectorised callable.
    """

    curve_x: np.ndarray
    curve_g1bar: np.ndarray
    gamma2: Callable[[np.ndarray], np.ndarray]
    provenance: str
    levels: SignalingLevels | None = None
    gamma1bar_fn: Callable[[np.ndarray], np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.curve_x = np.asarray(self.curve_x, dtype=float)
        self.curve_g1bar = np.asarray(self.curve_g1bar, dtype=float)
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.curve_x.ndim != 1 or self.curve_x.shape != self.curve_g1bar.shape:
            raise ValueError("curve_x and curve_g1bar must be 1-D arrays of equal length")
        if self.curve_x.size < 2 or np.any(np.diff(self.curve_x) <= 0):
            raise ValueError("curve_x must be strictly increasing with at least two points")
        if not np.all(np.isfinite(self.curve_g1bar)):
            raise ValueError("curve_g1bar must be finite")

    def gamma1bar(self, x0) -> np.ndarray:
        x0 = np.asarray(x0, dtype=float)
        if self.gamma1bar_fn is not None:
            return np.asarray(self.gamma1bar_fn(x0), dtype=float)
        return np.interp(x0, self.curve_x, self.curve_g1bar)

    def gamma1(self, x0) -> np.ndarray:
        """The first-stage control u1 = gamma1bar(x0) - x0."""
        return self.gamma1bar(x0) - np.asarray(x0, dtype=float)


def collocation_points(params: ProblemParams, rule: QuadratureRule) -> np.ndarray:
    return math.sqrt(2.0) * params.sigma_x * rule.nodes


def mixture_mean(y, centers, values, log_weights, sigma: float) -> np.ndarray:
    """Posterior mean of ``values`` under Gaussian likelihoods around ``centers``.

    Computes sum_j v_j w_j(y) / sum_j w_j(y) with
    w_j(y) = exp(-(y - c_j)^2 / (2 sigma^2) + log_weights_j), shifting the
    exponents by their maximum so the ratio stays finite for any finite y.
    """
    y = np.asarray(y, dtype=float)
    centers = np.asarray(centers, dtype=float)
    # the common -y^2/(2 sigma^2) term is dropped; keeps far-tail y exact
    expo = (y[..., None] * centers - 0.5 * centers * centers) / (sigma * sigma) + log_weights
    expo -= expo.max(axis=-1, keepdims=True)
    w = np.exp(expo)
    return (w * values).sum(axis=-1) / w.sum(axis=-1)


def gamma2_hat(levels: SignalingLevels, rule: QuadratureRule, params: ProblemParams, y1):
    """Second-stage strategy induced by the signaling levels (vectorised in ``y1``)."""
    s = levels.levels
    out = mixture_mean(y1, s, s, rule.log_weights, params.sigma)
    return float(out) if np.ndim(out) == 0 else out


def _check_finite(values, what):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise FloatingPointError(f"non-finite {what} at index {tuple(int(i) for i in idx)}")


def residual_offset(g, levels: SignalingLevels, rule: QuadratureRule, params: ProblemParams):
    """The x0-independent part of the gamma1bar residual, vectorised in ``g``.

    gamma1bar_residual(g, x0) == g - x0 + residual_offset(g) / k^2 exactly
    (same floating point operations).
    """
    g = np.asarray(g, dtype=float)
    scale = math.sqrt(2.0) * params.sigma
    y = scale * rule.nodes + g[..., None]
    d = g[..., None] - gamma2_hat(levels, rule, params, y)
    terms = rule.weights * ((rule.nodes / scale) * d * d + d)
    _check_finite(terms, "residual term (g index..., noise node)")
    return terms.sum(axis=-1) / SQRT_PI


def gamma1bar_residual(g, x0, levels: SignalingLevels, rule: QuadratureRule, params: ProblemParams):
    """Residual of the discretized first-stage equation at candidate value ``g``.

    Zero iff ``g`` is a fixed point of the quadrature form of the gamma1bar
    integral equation at ``x0``. Vectorised over broadcastable ``g``/``x0``.
    """
    g = np.asarray(g, dtype=float)
    r = g - np.asarray(x0, dtype=float) + residual_offset(g, levels, rule, params) / params.k**2
    _check_finite(np.atleast_1d(r), "gamma1bar residual")
    return float(r) if np.ndim(r) == 0 else r


def stage2_estimate(g, levels: SignalingLevels, rule: QuadratureRule, params: ProblemParams):
    """Quadrature estimate of E_v[(g - gamma2(g + v))^2] for each value ``g``."""
    g = np.asarray(g, dtype=float)
    y = math.sqrt(2.0) * params.sigma * rule.nodes + g[..., None]
    d = g[..., None] - gamma2_hat(levels, rule, params, y)
    return (rule.weights * d * d).sum(axis=-1) / SQRT_PI


def system_residual(t, params: ProblemParams, rule: QuadratureRule) -> np.ndarray:
    """The n-dimensional collocation system evaluated at candidate levels ``t``.

    Component l is gamma1bar_residual(t_l, x0_l, t); a root gives the
    signaling levels.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (rule.order,):
        raise ValueError(f"expected {rule.order} unknowns, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise FloatingPointError("system residual called with non-finite levels")
    levels = SignalingLevels(t, rule.order)
    return gamma1bar_residual(t, collocation_points(params, rule), levels, rule, params)
