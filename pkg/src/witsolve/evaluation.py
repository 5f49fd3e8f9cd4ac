"""Cost estimation for strategy profiles.

Monte Carlo draws are keyed by (seed, sample index) through the Philox
counter-based generator: sample ``i`` uses the first two 64-bit words of
Philox block ``i`` and maps them to standard normals by the inverse normal
CDF. Any chunking of the sample range therefore sees the same numbers, and
chunk sums are combined in a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import ndtri

from ._parallel import ordered_map
from .model import ProblemParams, StrategyProfile
from .quadrature import SQRT_PI, hermite_rule

__all__ = [
    "DEFAULT_SAMPLES",
    "DEFAULT_SEED",
    "PARAMETER_SETS",
    "LITERATURE",
    "CostReport",
    "ComparisonRow",
    "EvaluationError",
    "standard_normal_pairs",
    "monte_carlo_cost",
    "quadrature_cost",
    "bound_check",
    "compare",
    "render_csv",
    "render_text",
]

DEFAULT_SAMPLES = 600_000
DEFAULT_SEED = 20140501
CHUNK = 1 << 16

PARAMETER_SETS = {
    "table1": ProblemParams(k=0.001, sigma=1.0, sigma_x=1000.0),
    "table2": ProblemParams(k=1.0, sigma=1.0, sigma_x=1.0),
    "table3": ProblemParams(k=0.01, sigma=1.0, sigma_x=math.sqrt(80.0)),
    "table4": ProblemParams(k=0.2, sigma=1.0, sigma_x=5.0),
}

# Published costs from other methods, as (label, stage1, stage2, total).
LITERATURE = {
    "table3": [("J^bb", None, None, 0.3309)],
    "table4": [
        ("J^nn", None, None, 0.1735),
        ("J^llh", 0.131884081844, 0.035429123524, 0.167313205368),
        ("J^o_*", 0.128541364988695, 0.038385613344897, 0.166926978333592),
        ("J^o_**", 0.120110042087359, 0.051158481289032, 0.171268523376388),
    ],
}


class EvaluationError(RuntimeError):
    pass


@dataclass
class CostReport:
    stage1: float
    stage2: float
    total: float
    n_samples: int
    seed: int | None
    se_stage1: float
    se_stage2: float
    se_total: float
    family: str
    params: ProblemParams | None = None
    label: str | None = None

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "family", "stage1", "stage2", "total", "n_samples", "seed",
            "se_stage1", "se_stage2", "se_total")}
        if self.params is not None:
            out["params"] = {"k": self.params.k, "sigma": self.params.sigma,
                             "sigma_x": self.params.sigma_x}
        if self.label is not None:
            out["label"] = self.label
        return out


def _check_seed(seed):
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def standard_normal_pairs(seed: int, start: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Two independent standard normals per sample index in [start, start + count)."""
    seed = _check_seed(seed)
    bg = np.random.Philox(key=seed, counter=start)
    words = bg.random_raw(4 * count).reshape(count, 4)
    u = ((words[:, :2] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    z = ndtri(u)
    return z[:, 0].copy(), z[:, 1].copy()


def _chunk_sums(profile, params, seed, start, count, gamma1bar):
    zx, zv = standard_normal_pairs(seed, start, count)
    x0 = params.sigma_x * zx
    v = params.sigma * zv
    g = gamma1bar(x0)
    y = g + v
    u2 = profile.gamma2(y)
    with np.errstate(over="ignore", invalid="ignore"):
        a = params.k**2 * (g - x0) ** 2
        b = (g - u2) ** 2
    bad = np.flatnonzero(~(np.isfinite(a) & np.isfinite(b)))
    if bad.size:
        i = int(bad[0])
        raise EvaluationError(
            f"non-finite cost at sample {start + i}: x0={x0[i]!r}, v={v[i]!r}, "
            f"gamma1bar={g[i]!r}, gamma2={u2[i]!r}"
        )
    t = a + b
    return np.array([a.sum(), b.sum(), t.sum(), (a * a).sum(), (b * b).sum(), (t * t).sum()])


def _se(s, ss, n):
    if n < 2:
        return math.nan
    var = max(ss / n - (s / n) ** 2, 0.0) * n / (n - 1)
    return math.sqrt(var / n)


def monte_carlo_cost(profile: StrategyProfile, params: ProblemParams,
                     n_samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
                     exact_curve=None, workers: int | None = None) -> CostReport:
    """Sample x0 ~ N(0, sigma_x^2), v ~ N(0, sigma^2) and average both stage costs.

    ``exact_curve`` (a :class:`~witsolve.solver.CurveSolver`) replaces the
    tabulated gamma1bar by a fresh root solve at every sample.
    """
    if isinstance(n_samples, bool) or int(n_samples) != n_samples or n_samples < 1:
        raise ValueError("n_samples must be a positive integer")
    n_samples = int(n_samples)
    seed = _check_seed(seed)
    if exact_curve is not None:
        gamma1bar = lambda x: exact_curve.solve(x)[0]
    else:
        gamma1bar = profile.gamma1bar
    starts = range(0, n_samples, CHUNK)
    parts = ordered_map(
        lambda s: _chunk_sums(profile, params, seed, s, min(CHUNK, n_samples - s), gamma1bar),
        starts, workers,
    )
    sums = np.sum(np.array(parts), axis=0)
    n = n_samples
    stage1, stage2 = sums[0] / n, sums[1] / n
    return CostReport(
        stage1=float(stage1),
        stage2=float(stage2),
        total=float(stage1 + stage2),
        n_samples=n,
        seed=seed,
        se_stage1=_se(sums[0], sums[3], n),
        se_stage2=_se(sums[1], sums[4], n),
        se_total=_se(sums[2], sums[5], n),
        family=profile.provenance,
        params=params,
    )


def quadrature_cost(profile: StrategyProfile, params: ProblemParams,
                    x_points: int = 40001, noise_order: int = 64) -> CostReport:
    """Deterministic cost: trapezoid over x0 in [-8 sigma_x, 8 sigma_x] (merged
    with the profile's table nodes) and Gauss-Hermite over the noise."""
    a = 8.0 * params.sigma_x
    xs = np.linspace(-a, a, x_points)
    table = profile.curve_x[(profile.curve_x > -a) & (profile.curve_x < a)]
    xs = np.unique(np.concatenate([xs, table]))
    pdf = np.exp(-0.5 * (xs / params.sigma_x) ** 2) / (params.sigma_x * math.sqrt(2.0 * math.pi))
    g = profile.gamma1bar(xs)
    rule = hermite_rule(noise_order)
    s1 = params.k**2 * (g - xs) ** 2
    s2 = np.empty_like(xs)
    for i in range(0, xs.size, 4096):
        gi = g[i:i + 4096, None]
        y = gi + math.sqrt(2.0) * params.sigma * rule.nodes
        u2 = np.asarray(profile.gamma2(y.ravel())).reshape(y.shape)
        s2[i:i + 4096] = ((gi - u2) ** 2 * rule.weights).sum(axis=1) / SQRT_PI
    stage1 = float(np.trapezoid(s1 * pdf, xs))
    stage2 = float(np.trapezoid(s2 * pdf, xs))
    return CostReport(stage1, stage2, stage1 + stage2, 0, None, 0.0, 0.0, 0.0,
                      profile.provenance, params)


def bound_check(report: CostReport, params: ProblemParams) -> bool:
    """True iff the total cost is strictly below min(1, k^2 sigma_x^2)."""
    return bool(report.total < params.bound)


@dataclass
class ComparisonRow:
    label: str
    stage1: float | None
    stage2: float | None
    total: float
    source: str
    seed: int | None = None
    se_total: float | None = None


def compare(reports, constants: list | None = None) -> list[ComparisonRow]:
    """Merge computed reports with literature rows, ascending by total cost."""
    reports = list(reports)
    param_sets = {(r.params.k, r.params.sigma, r.params.sigma_x) for r in reports if r.params}
    if len(param_sets) > 1:
        raise ValueError(f"reports mix parameter sets: {sorted(param_sets)}")
    rows = [
        ComparisonRow(r.label or f"J^{r.family}", r.stage1, r.stage2, r.total, "computed",
                      r.seed, r.se_total)
        for r in reports
    ]
    for label, s1, s2, total in constants or []:
        rows.append(ComparisonRow(label, s1, s2, total, "literature"))
    rows.sort(key=lambda r: r.total)
    return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def render_csv(rows) -> str:
    out = ["label,stage1,stage2,total,source,seed,se_total"]
    for r in rows:
        out.append(",".join(_fmt(v) for v in (r.label, r.stage1, r.stage2, r.total, r.source,
                                                r.seed, r.se_total)))
    return "\n".join(out) + "\n"


def render_text(rows) -> str:
    head = ("label", "stage1", "stage2", "total", "source", "se_total")
    cells = [head]
    for r in rows:
        cells.append((
            r.label,
            "-" if r.stage1 is None else f"{r.stage1:.6g}",
            "-" if r.stage2 is None else f"{r.stage2:.6g}",
            f"{r.total:.6g}",
            r.source if r.seed is None else f"{r.source} (seed {r.seed})",
            "-" if r.se_total is None else f"{r.se_total:.2g}",
        ))
    widths = [max(len(c[i]) for c in cells) for i in range(len(head))]
    return "\n".join("  ".join(c[i].ljust(widths[i]) for i in range(len(head))).rstrip()
                     for c in cells) + "\n"
