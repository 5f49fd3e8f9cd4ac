"""Serializable second-stage strategies.

Every family is a vectorised callable ``y1 -> gamma2(y1)`` with a
``to_dict``/``gamma2_from_dict`` round trip. This is the sidecar JSON
written next to profile CSV files.
"""

from __future__ import annotations

import numpy as np

from .model import ProblemParams, SignalingLevels, mixture_mean
from .quadrature import QuadratureRule, hermite_rule

__all__ = [
    "MixtureGamma2",
    "AffineGamma2",
    "TanhGamma2",
    "TabulatedGamma2",
    "gamma2_from_dict",
]


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


class MixtureGamma2:
    """Posterior mean over a discrete prior with Gaussian observation noise.

    With ``centers == values`` and the Hermite weights this is exactly the
    signaling-level estimator; other choices cover the Bansal-Basar law.
    """

    def __init__(self, centers, values, log_weights, sigma, order=None):
        self.centers = np.asarray(centers, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.log_weights = np.asarray(log_weights, dtype=float)
        self.sigma = float(sigma)
        self.order = order

    @classmethod
    def from_levels(cls, levels: SignalingLevels, rule: QuadratureRule, params: ProblemParams):
        s = levels.levels
        return cls(s, s, rule.log_weights, params.sigma, order=rule.order)

    def __call__(self, y1):
        out = mixture_mean(y1, self.centers, self.values, self.log_weights, self.sigma)
        return float(out) if np.ndim(out) == 0 else out

    def bounds(self):
        return float(self.values.min()), float(self.values.max())

    def to_dict(self):
        same = np.array_equal(self.centers, self.values)
        if self.order is not None and same:
            return {"family": "mixture-from-levels", "levels": _floats(self.values),
                    "order": int(self.order), "sigma": self.sigma}
        return {"family": "mixture", "centers": _floats(self.centers), "values": _floats(self.values),
                "log_weights": _floats(self.log_weights), "sigma": self.sigma}


class AffineGamma2:
    def __init__(self, mu):
        self.mu = float(mu)

    def __call__(self, y1):
        return self.mu * np.asarray(y1, dtype=float)

    def to_dict(self):
        return {"family": "affine", "mu": self.mu}


class TanhGamma2:
    """amplitude * tanh(gain * y1)."""

    def __init__(self, amplitude, gain):
        self.amplitude = float(amplitude)
        self.gain = float(gain)

    def __call__(self, y1):
        return self.amplitude * np.tanh(self.gain * np.asarray(y1, dtype=float))

    def to_dict(self):
        return {"family": "tanh", "amplitude": self.amplitude, "gain": self.gain}


class TabulatedGamma2:
    """Linear interpolation of a ``y1,gamma2`` table, clamped at the ends."""

    def __init__(self, y1, gamma2):
        self.y1 = np.asarray(y1, dtype=float)
        self.table = np.asarray(gamma2, dtype=float)
        if self.y1.ndim != 1 or self.y1.shape != self.table.shape or np.any(np.diff(self.y1) <= 0):
            raise ValueError("tabulated gamma2 needs strictly increasing y1 and matching values")

    def __call__(self, y1):
        return np.interp(np.asarray(y1, dtype=float), self.y1, self.table)

    def to_dict(self):
        return {"family": "tabulated", "y1": _floats(self.y1), "gamma2": _floats(self.table)}


def gamma2_from_dict(spec: dict):
    family = spec.get("family")
    if family == "mixture-from-levels":
        rule = hermite_rule(int(spec["order"]))
        levels = np.asarray(spec["levels"], dtype=float)
        if levels.size != rule.order:
            raise ValueError("mixture-from-levels: level count does not match order")
        return MixtureGamma2(levels, levels, rule.log_weights, spec["sigma"], order=rule.order)
    if family == "mixture":
        return MixtureGamma2(spec["centers"], spec["values"], spec["log_weights"], spec["sigma"])
    if family == "affine":
        return AffineGamma2(spec["mu"])
    if family == "tanh":
        return TanhGamma2(spec["amplitude"], spec["gain"])
    if family == "tabulated":
        return TabulatedGamma2(spec["y1"], spec["gamma2"])
    raise ValueError(f"unknown gamma2 family {family!r}")
