"""Signaling-level solve and reconstruction of the first-stage strategy.

The collocation system is solved by a damped Newton iteration with a
forward-difference Jacobian, from several starting points. With the levels
fixed, gamma1bar(x0) is the root g of

    R(g; x0) = g - x0 + offset(g) / k^2,

where ``offset`` does not depend on x0. :class:`CurveSolver` tabulates
F(g) = g + offset(g) / k^2 once, splits it into monotone pieces to bracket
every root for any batch of x0 values, polishes each bracket with a
safeguarded Newton step and keeps the root of least stage cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from ._parallel import ordered_map
from .model import (
    ProblemParams,
    SignalingLevels,
    StrategyProfile,
    collocation_points,
    residual_offset,
    stage2_estimate,
    system_residual,
)
from .quadrature import QuadratureRule, SQRT_PI
from .strategies import MixtureGamma2

__all__ = [
    "START_TAGS",
    "SolverConfig",
    "SolveResult",
    "SolverError",
    "Gamma1barError",
    "GridSpec",
    "CurveSolver",
    "fd_jacobian",
    "initial_levels",
    "estimated_cost",
    "newton_system",
    "solve_levels",
    "gamma1bar_at",
    "build_strategy",
    "pbp_profile",
]

log = logging.getLogger(__name__)

START_TAGS = ("identity", "sign", "affine")


@dataclass(frozen=True)
class SolverConfig:
    tol_residual: float = 1e-10
    max_iterations: int = 200
    damping: float = 0.5
    min_step: float = 2.0**-20
    jacobian_step: float = 1e-7
    starts: tuple = START_TAGS
    # points per noise standard deviation in the gamma1bar root scan
    scan_density: int = 64

    def __post_init__(self):
        object.__setattr__(self, "starts", tuple(self.starts))
        if not self.starts:
            raise ValueError("at least one start is required")
        unknown = [s for s in self.starts if s not in START_TAGS]
        if unknown:
            raise ValueError(f"unknown start tags {unknown}; choose from {START_TAGS}")
        if not (self.tol_residual > 0 and self.max_iterations > 0 and self.jacobian_step > 0):
            raise ValueError("tolerance, iteration count and Jacobian step must be positive")
        if not (0 < self.damping < 1 and 0 < self.min_step < 1):
            raise ValueError("damping and min_step must lie in (0, 1)")
        if self.scan_density < 4:
            raise ValueError("scan_density must be at least 4")


@dataclass
class SolveResult:
    levels: SignalingLevels
    residual_inf: float
    residual_2: float
    iterations: int
    start_tag: str
    converged: bool
    estimated_cost: float = math.nan
    attempts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "levels": [float(v) for v in self.levels.levels],
            "order": self.levels.rule_order,
            "residual_inf": self.residual_inf,
            "residual_2": self.residual_2,
            "iterations": self.iterations,
            "start": self.start_tag,
            "converged": self.converged,
            "estimated_cost": self.estimated_cost,
            "attempts": [
                {k: v for k, v in a.to_dict().items() if k != "attempts"} for a in self.attempts
            ],
        }


class SolverError(RuntimeError):
    """No start converged; ``best`` holds the lowest-residual attempt."""

    def __init__(self, message, best: SolveResult | None = None):
        super().__init__(message)
        self.best = best


class Gamma1barError(RuntimeError):
    """The scalar gamma1bar equation has no bracketed root at some x0."""

    def __init__(self, message, failed_x0=()):
        super().__init__(message)
        self.failed_x0 = list(failed_x0)


def fd_jacobian(fun, t, f0, rel_step):
    t = np.asarray(t, dtype=float)
    jac = np.empty((f0.size, t.size))
    for j in range(t.size):
        h = rel_step * max(1.0, abs(t[j]))
        tp = t.copy()
        tp[j] += h
        h = tp[j] - t[j]
        jac[:, j] = (fun(tp) - f0) / h
    return jac


def newton_system(fun, t0, config: SolverConfig):
    """Damped Newton on ``fun(t) = 0`` with backtracking on 0.5 ||f||^2.

    When the Jacobian is singular, or the Newton direction admits no
    acceptable step, that iteration takes a scaled steepest-descent step on
    the merit function instead.

    Returns ``(t, f, iterations, converged)``.
    """
    t = np.array(t0, dtype=float)
    f = fun(t)
    merit = 0.5 * f @ f
    for it in range(config.max_iterations):
        if np.max(np.abs(f)) <= config.tol_residual:
            return t, f, it, True
        jac = fd_jacobian(fun, t, f, config.jacobian_step)
        grad = jac.T @ f
        directions = []
        try:
            step = np.linalg.solve(jac, -f)
            if np.all(np.isfinite(step)) and np.linalg.cond(jac) < 1e14:
                directions.append(step)
        except np.linalg.LinAlgError:
            pass
        gg = grad @ grad
        if gg > 0:
            jg = jac @ grad
            directions.append(-grad * (gg / max(jg @ jg, 1e-300)))

        moved = False
        for step in directions:
            slope = grad @ step
            alpha = 1.0
            while alpha >= config.min_step:
                trial = t + alpha * step
                try:
                    f_trial = fun(trial)
                except FloatingPointError:
                    f_trial = None
                if f_trial is not None:
                    m_trial = 0.5 * f_trial @ f_trial
                    if m_trial <= merit + 1e-4 * alpha * min(slope, 0.0) and m_trial < merit:
                        t, f, merit = trial, f_trial, m_trial
                        moved = True
                        break
                alpha *= config.damping
            if moved:
                break
        if not moved:
            # stagnation at the rounding floor of the residual
            break
    converged = bool(np.max(np.abs(f)) <= config.tol_residual)
    return t, f, it + 1, converged


def _affine_slope(params: ProblemParams) -> float:
    from .baselines import affine_roots, affine_closed_form_cost

    roots = affine_roots(params.k, params.sigma_x)
    costs = [sum(affine_closed_form_cost(t / params.sigma_x, params)) for t in roots]
    return roots[int(np.argmin(costs))] / params.sigma_x


def initial_levels(tag: str, params: ProblemParams, rule: QuadratureRule) -> np.ndarray:
    x = collocation_points(params, rule)
    if tag == "identity":
        return x.copy()
    if tag == "sign":
        return params.sigma_x * np.sign(rule.nodes)
    if tag == "affine":
        return _affine_slope(params) * x
    raise ValueError(f"unknown start tag {tag!r}")


def estimated_cost(levels: SignalingLevels, params: ProblemParams, rule: QuadratureRule) -> float:
    """Quadrature estimate of the total cost using the collocation values only."""
    s = levels.levels
    x = collocation_points(params, rule)
    per_point = params.k**2 * (s - x) ** 2 + stage2_estimate(s, levels, rule, params)
    return float(rule.weights @ per_point / SQRT_PI)


def _one_start(tag, params, rule, config):
    fun = lambda t: system_residual(t, params, rule)
    t0 = initial_levels(tag, params, rule)
    try:
        t, f, iters, ok = newton_system(fun, t0, config)
    except FloatingPointError as exc:
        log.warning("start %s aborted: %s", tag, exc)
        t, iters, ok = t0, 0, False
        try:
            f = fun(t0)
        except FloatingPointError:
            f = np.full(rule.order, np.inf)
    if ok:
        # the system is odd under t -> -t[::-1]; snap near-antisymmetric roots onto it
        ts = 0.5 * (t - t[::-1])
        if np.max(np.abs(ts - t)) <= 1e-8 * (1.0 + np.max(np.abs(t))):
            fs = fun(ts)
            if np.max(np.abs(fs)) <= max(config.tol_residual, np.max(np.abs(f))):
                t, f = ts, fs
    levels = SignalingLevels(t, rule.order)
    cost = estimated_cost(levels, params, rule) if ok else math.nan
    return SolveResult(
        levels=levels,
        residual_inf=float(np.max(np.abs(f))),
        residual_2=float(np.linalg.norm(f)),
        iterations=iters,
        start_tag=tag,
        converged=ok,
        estimated_cost=cost,
    )


def solve_levels(
    params: ProblemParams,
    rule: QuadratureRule,
    config: SolverConfig | None = None,
    workers: int | None = None,
) -> SolveResult:
    """Solve the collocation system from every configured start.

    Among converged runs the one with the lowest estimated cost wins (ties go
    to the earlier start); otherwise the lowest-residual run is returned with
    ``converged=False``. All attempts are attached in start order.
    """
    config = config or SolverConfig()
    attempts = ordered_map(lambda tag: _one_start(tag, params, rule, config), config.starts, workers)
    good = [a for a in attempts if a.converged]
    if good:
        best = min(good, key=lambda a: a.estimated_cost)
    else:
        best = min(attempts, key=lambda a: a.residual_inf)
    return replace(best, attempts=attempts)


@dataclass(frozen=True)
class GridSpec:
    """Uniform x0 grid; ``half_width`` defaults to 4 sigma_x."""

    points: int = 2001
    half_width: float | None = None

    def grid(self, params: ProblemParams) -> np.ndarray:
        if self.points < 2:
            raise ValueError("grid needs at least two points")
        a = 4.0 * params.sigma_x if self.half_width is None else float(self.half_width)
        if self.points % 2:
            half = np.linspace(0.0, a, self.points // 2 + 1)
            return np.concatenate([-half[:0:-1], half])
        return np.linspace(-a, a, self.points)


class CurveSolver:
    """Batch solver for gamma1bar(x0) given fixed signaling levels."""

    _CHUNK = 32768

    def __init__(self, levels: SignalingLevels, params: ProblemParams, rule: QuadratureRule,
                 config: SolverConfig | None = None):
        self.levels = levels
        self.params = params
        self.rule = rule
        self.config = config or SolverConfig()
        self._tables = {}

    def _offset(self, g):
        g = np.asarray(g, dtype=float)
        if g.size <= self._CHUNK:
            return residual_offset(g, self.levels, self.rule, self.params)
        return np.concatenate([
            residual_offset(g[i:i + self._CHUNK], self.levels, self.rule, self.params)
            for i in range(0, g.size, self._CHUNK)
        ])

    def residual(self, g, x0):
        g = np.asarray(g, dtype=float)
        return g - x0 + self._offset(g) / self.params.k**2

    def stage_cost(self, g, x0):
        g = np.asarray(g, dtype=float)
        s2 = np.concatenate([
            np.atleast_1d(stage2_estimate(g.ravel()[i:i + self._CHUNK], self.levels, self.rule, self.params))
            for i in range(0, max(g.size, 1), self._CHUNK)
        ]).reshape(g.shape)
        return self.params.k**2 * (g - x0) ** 2 + s2

    def table(self, widen: int = 1):
        if widen not in self._tables:
            s = self.levels.levels
            pad = 6.0 * self.params.sigma * widen
            lo, hi = s.min() - pad, s.max() + pad
            if widen > 1:
                mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * widen
                lo, hi = mid - half, mid + half
            m = int(math.ceil((hi - lo) / self.params.sigma * self.config.scan_density)) + 1
            g = np.linspace(lo, hi, max(m, 2001))
            F = g + self._offset(g) / self.params.k**2
            dF = np.diff(F)
            sgn = np.sign(dF)
            # split into maximal runs of monotone F
            cuts = np.flatnonzero(sgn[1:] != sgn[:-1]) + 1
            starts = np.concatenate([[0], cuts])
            ends = np.concatenate([cuts, [dF.size]])
            pieces = [(a, b) for a, b in zip(starts, ends) if sgn[a] != 0]
            self._tables[widen] = (g, F, pieces)
        return self._tables[widen]

    def _bracket(self, x0, widen):
        """All candidate root brackets as flat arrays (row, g_left, g_right, piece)."""
        g, F, pieces = self.table(widen)
        rows_all, left, piece_id = [], [], []
        for p, (a, b) in enumerate(pieces):
            Fp = F[a:b + 1]
            increasing = Fp[-1] > Fp[0]
            Fs = Fp if increasing else Fp[::-1]
            rows = np.flatnonzero((x0 >= Fs[0]) & (x0 <= Fs[-1]))
            if rows.size == 0:
                continue
            j = np.clip(np.searchsorted(Fs, x0[rows], side="right") - 1, 0, Fs.size - 2)
            if not increasing:
                j = (Fp.size - 2) - j
            rows_all.append(rows)
            left.append(a + j)
            piece_id.append(np.full(rows.size, p))
        if not rows_all:
            empty = np.array([], dtype=int)
            return empty, np.array([]), np.array([]), empty
        i = np.concatenate(left)
        return np.concatenate(rows_all), g[i], g[i + 1], np.concatenate(piece_id)

    def _polish(self, x0, ga, gb):
        """Safeguarded Newton on R(.; x0) inside [ga, gb] (vectorised).

        The derivative is the secant through the last two iterates; a step
        that leaves the bracket or fails to halve the previous one is replaced
        by bisection. Stops on |R| <= tol or a step below 1e-13 (1 + |g|).
        """
        fa = self.residual(ga, x0)
        fb = self.residual(gb, x0)
        lo = np.where(fa <= 0, ga, gb)
        hi = np.where(fa <= 0, gb, ga)
        flo = np.where(fa <= 0, fa, fb)
        fhi = np.where(fa <= 0, fb, fa)
        span = fhi - flo
        g = np.where(span > 0, lo - flo * (hi - lo) / np.where(span > 0, span, 1.0), 0.5 * (lo + hi))
        g_old, r_old = lo.copy(), flo.copy()
        step_old = np.abs(hi - lo)
        active = np.ones(g.shape, bool)
        for _ in range(100):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            gi = g[idx]
            r = self.residual(gi, x0[idx])
            neg = r < 0
            lo[idx] = np.where(neg, gi, lo[idx])
            hi[idx] = np.where(neg, hi[idx], gi)
            dg = gi - g_old[idx]
            df = np.where(dg != 0, (r - r_old[idx]) / np.where(dg != 0, dg, 1.0), 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = gi - r / df
            a, b = np.minimum(lo[idx], hi[idx]), np.maximum(lo[idx], hi[idx])
            ok = np.isfinite(newton) & (newton > a) & (newton < b) & (np.abs(newton - gi) < 0.5 * step_old[idx])
            nxt = np.where(ok, newton, 0.5 * (a + b))
            step = np.abs(nxt - gi)
            xtol = 1e-13 * (1.0 + np.abs(gi))
            done = (np.abs(r) <= self.config.tol_residual) | (step <= xtol) | (b - a <= xtol)
            g_old[idx], r_old[idx] = gi, r
            step_old[idx] = step
            g[idx] = np.where(done, gi, nxt)
            active[idx] = ~done
        return g

    def solve(self, x0, strict: bool = True):
        """gamma1bar at each x0, with the index of the F-piece it came from.

        Returns ``(values, pieces)``; failures are NaN / -1 unless ``strict``.
        """
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        best_g = np.full(x0.shape, np.nan)
        best_p = np.full(x0.shape, -1)
        todo = np.arange(x0.size)
        for widen in (1, 2):
            sub = x0[todo]
            rows, ga, gb, piece = self._bracket(sub, widen)
            if rows.size:
                xs = sub[rows]
                g = self._polish(xs, ga, gb)
                c = self.stage_cost(g, xs)
                # cheapest candidate per row; ties keep the lower piece index
                order = np.lexsort((piece, c, rows))
                first = order[np.concatenate([[True], rows[order][1:] != rows[order][:-1]])]
                tgt = todo[rows[first]]
                best_g[tgt] = g[first]
                best_p[tgt] = piece[first] + 1000 * (widen - 1)
            todo = np.flatnonzero(np.isnan(best_g))
            if todo.size == 0:
                break
        if todo.size and strict:
            raise Gamma1barError(
                f"no sign change of the gamma1bar residual for {todo.size} x0 value(s), "
                f"first at x0={x0[todo[0]]!r}",
                failed_x0=x0[todo],
            )
        return best_g, best_p


def gamma1bar_at(x0, levels: SignalingLevels, params: ProblemParams, rule: QuadratureRule,
                 config: SolverConfig | None = None) -> float:
    """First-stage strategy value at a single ``x0``."""
    g, _ = CurveSolver(levels, params, rule, config).solve([x0])
    return float(g[0])


def _refine_jumps(solver: CurveSolver, xs, gs, ps):
    """Insert the two sides of every discontinuity located by bisection in x0."""
    dg = np.abs(np.diff(gs))
    typical = np.median(dg) if dg.size else 0.0
    jumps = np.flatnonzero((ps[1:] != ps[:-1]) & (dg > 4.0 * typical))
    extra_x, extra_g = [], []
    for i in jumps:
        a, b, ga, gb = xs[i], xs[i + 1], gs[i], gs[i + 1]
        for _ in range(200):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            gm = float(solver.solve([m])[0][0])
            if abs(gm - ga) <= abs(gm - gb):
                a, ga = m, gm
            else:
                b, gb = m, gm
        extra_x += [a, b]
        extra_g += [ga, gb]
    if not extra_x:
        return xs, gs
    x = np.concatenate([xs, extra_x])
    g = np.concatenate([gs, extra_g])
    order = np.argsort(x, kind="stable")
    x, g = x[order], g[order]
    keep = np.concatenate([[True], np.diff(x) > 0])
    return x[keep], g[keep]


def pbp_profile(levels: SignalingLevels, params: ProblemParams, rule: QuadratureRule,
                config: SolverConfig | None = None, grid: GridSpec | None = None,
                refine: bool = True) -> StrategyProfile:
    """Tabulate gamma1bar for given levels and attach the mixture gamma2."""
    solver = CurveSolver(levels, params, rule, config)
    xs = (grid or GridSpec()).grid(params)
    gs, ps = solver.solve(xs, strict=False)
    failed = xs[np.isnan(gs)]
    if failed.size:
        if failed.size > 0.01 * xs.size:
            raise Gamma1barError(
                f"gamma1bar solve failed at {failed.size} of {xs.size} grid points", failed
            )
        log.warning("dropping %d grid points without a bracketed root", failed.size)
        ok = ~np.isnan(gs)
        xs, gs, ps = xs[ok], gs[ok], ps[ok]
    if refine:
        xs, gs = _refine_jumps(solver, xs, gs, ps)
    gamma2 = MixtureGamma2.from_levels(levels, rule, params)
    return StrategyProfile(xs, gs, gamma2, "pbp", levels=levels,
                           meta={"failed_x0": [float(x) for x in failed]})


def build_strategy(params: ProblemParams, rule: QuadratureRule, config: SolverConfig | None = None,
                   grid: GridSpec | None = None, result: SolveResult | None = None) -> StrategyProfile:
    """Solve for the levels (unless ``result`` is given) and tabulate the strategy."""
    if result is None:
        result = solve_levels(params, rule, config)
    if not result.converged:
        raise SolverError(
            f"signaling-level solve did not converge (best residual {result.residual_inf:.3g} "
            f"from start {result.start_tag!r})",
            best=result,
        )
    profile = pbp_profile(result.levels, params, rule, config, grid)
    profile.meta["solve"] = result.to_dict()
    return profile

