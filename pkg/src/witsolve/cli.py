"""Command-line entry point: ``witsolve <subcommand> [flags]``.

Exit status: 0 success, 2 invalid input, 3 solver non-convergence,
4 evaluation failure. Data goes to stdout (or ``--output``), diagnostics to
stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import ordered_map
from .baselines import (
    BansalBasarLaw,
    affine_optimal,
    affine_profile,
    bansal_basar_profile,
    witsenhausen_sign,
)
from .evaluation import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    LITERATURE,
    PARAMETER_SETS,
    EvaluationError,
    bound_check,
    compare,
    monte_carlo_cost,
    render_csv,
    render_text,
)
from .model import ProblemParams, SignalingLevels, StrategyProfile
from .quadrature import hermite_rule
from .solver import (
    START_TAGS,
    CurveSolver,
    Gamma1barError,
    GridSpec,
    SolverConfig,
    SolverError,
    build_strategy,
    solve_levels,
)
from .strategies import MixtureGamma2, gamma2_from_dict

log = logging.getLogger("witsolve")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_EVAL = 0, 2, 3, 4

DEFAULTS = {
    "order": 7,
    "tol": 1e-10,
    "max_iter": 200,
    "starts": ",".join(START_TAGS),
    "samples": DEFAULT_SAMPLES,
    "seed": DEFAULT_SEED,
    "points": 2001,
    "half_width": None,
    "epsilon": 5.0,
    "lam": 0.01006,
    "condition_on": "control",
    "bb_order": 64,
    "format": "text",
}


class UsageError(ValueError):
    pass


def fmt(v) -> str:
    return f"{float(v):.17g}"


def _param_flags(p: argparse.ArgumentParser, solver=True):
    p.add_argument("--k", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--sigma-x", dest="sigma_x", type=float)
    p.add_argument("--order", type=int)
    if solver:
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--starts", help=f"comma list from {','.join(START_TAGS)}")


def _grid_flags(p):
    p.add_argument("--points", type=int, help="uniform x0 grid size (default 2001)")
    p.add_argument("--half-width", dest="half_width", type=float, help="grid half width (default 4 sigma_x)")


def _eval_flags(p):
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)


def _bb_flags(p):
    p.add_argument("--epsilon", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--condition-on", dest="condition_on", choices=("control", "state"))
    p.add_argument("--bb-order", dest="bb_order", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="witsolve", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="flat JSON file of flag values; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rule", help="Gauss-Hermite nodes and weights as CSV")
    p.add_argument("--order", type=int)
    p.add_argument("--output")

    p = sub.add_parser("solve", help="solve for the signaling levels (JSON)")
    _param_flags(p)
    p.add_argument("--output")

    p = sub.add_parser("curve", help="tabulate the PbP strategy (CSV + sidecar JSON)")
    _param_flags(p)
    _grid_flags(p)
    p.add_argument("--output")
    p.add_argument("--sidecar", help="gamma2 sidecar path (default: OUTPUT with .json suffix)")

    p = sub.add_parser("eval", help="Monte Carlo cost of a profile (JSON)")
    p.add_argument("--profile", required=True,
                   help="builtin pbp|affine|sign|bansal-basar, or a profile CSV path")
    p.add_argument("--sidecar")
    _param_flags(p)
    _grid_flags(p)
    _eval_flags(p)
    _bb_flags(p)
    p.add_argument("--exact-curve", dest="exact_curve", action="store_true",
                   help="solve gamma1bar at every sample instead of interpolating")
    p.add_argument("--output")

    p = sub.add_parser("baseline", help="export a comparison strategy (CSV)")
    p.add_argument("--family", required=True, choices=("affine", "sign", "bansal-basar"))
    _param_flags(p, solver=False)
    _grid_flags(p)
    _bb_flags(p)
    p.add_argument("--output")
    p.add_argument("--sidecar")

    p = sub.add_parser("compare", help="cost table for one of the reference parameter sets")
    p.add_argument("--params-set", dest="params_set", required=True, choices=sorted(PARAMETER_SETS))
    p.add_argument("--order", type=int)
    _eval_flags(p)
    _bb_flags(p)
    p.add_argument("--format", choices=("text", "csv"))
    p.add_argument("--output")

    p = sub.add_parser("sweep", help="solve + evaluate over a parameter grid (CSV)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--grid", help="JSON list of {k, sigma, sigma_x, order} objects")
    src.add_argument("--preset", choices=("reference",))
    _eval_flags(p)
    p.add_argument("--output")
    return parser


def _merge_config(args, parser):
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        if "lambda" in cfg:
            cfg["lam"] = cfg.pop("lambda")
    for key, value in vars(args).items():
        if value is None:
            if key in cfg:
                setattr(args, key, cfg[key])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])
    return args


def _params(args) -> ProblemParams:
    missing = [f"--{n.replace('_', '-')}" for n in ("k", "sigma", "sigma_x") if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"missing required flag(s): {', '.join(missing)}")
    return ProblemParams(args.k, args.sigma, args.sigma_x)


def _solver_config(args) -> SolverConfig:
    starts = args.starts.split(",") if isinstance(args.starts, str) else list(args.starts)
    return SolverConfig(tol_residual=args.tol, max_iterations=args.max_iter,
                        starts=tuple(s.strip() for s in starts if s.strip()))


def _grid(args) -> GridSpec:
    return GridSpec(points=args.points, half_width=args.half_width)


def _emit(text: str, path=None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _profile_csv(profile: StrategyProfile) -> str:
    x = profile.curve_x
    g = profile.curve_g1bar
    u2 = np.asarray(profile.gamma2(g), dtype=float)
    buf = io.StringIO()
    buf.write("x0,gamma1bar,gamma1,gamma2_at_g1bar\n")
    for row in zip(x, g, g - x, u2):
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _sidecar_path(args):
    if getattr(args, "sidecar", None):
        return Path(args.sidecar)
    if getattr(args, "output", None):
        return Path(args.output).with_suffix(".json")
    return None


def _write_profile(profile, args, extra=None):
    _emit(_profile_csv(profile), args.output)
    side = {"provenance": profile.provenance, "gamma2": profile.gamma2.to_dict()}
    side.update(extra or {})
    path = _sidecar_path(args)
    if path is not None:
        path.write_text(json.dumps(side, indent=2) + "\n")
    return side


def read_profile(csv_path, sidecar_path=None) -> StrategyProfile:
    """Load an external profile: CSV with ``x0,gamma1bar`` columns plus a
    sidecar JSON whose ``gamma2`` entry names the second-stage family."""
    csv_path = Path(csv_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    with csv_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"x0", "gamma1bar"} <= set(reader.fieldnames):
            raise UsageError(f"{csv_path}: header must contain x0,gamma1bar")
        rows = [(float(r["x0"]), float(r["gamma1bar"])) for r in reader]
    try:
        side = json.loads(sidecar_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read sidecar {sidecar_path}: {exc}") from None
    gamma2 = gamma2_from_dict(side["gamma2"])
    x, g = np.array(rows).T if rows else (np.array([]), np.array([]))
    provenance = side.get("provenance", "external")
    levels = None
    if isinstance(gamma2, MixtureGamma2) and side["gamma2"]["family"] == "mixture-from-levels":
        levels = SignalingLevels(gamma2.values, gamma2.order)
    return StrategyProfile(x, g, gamma2, provenance, levels=levels)


def _builtin_profile(name, params, args):
    rule = hermite_rule(args.order)
    if name == "pbp":
        return build_strategy(params, rule, _solver_config(args), _grid(args))
    if name == "affine":
        return affine_profile(affine_optimal(params), params, _grid(args))
    if name == "sign":
        return witsenhausen_sign(params, _grid(args))
    if name == "bansal-basar":
        law = BansalBasarLaw(args.epsilon, args.lam)
        return bansal_basar_profile(law, params, hermite_rule(args.bb_order), args.condition_on, _grid(args))
    raise UsageError(f"unknown builtin profile {name!r}")


def cmd_rule(args):
    rule = hermite_rule(args.order)
    lines = ["index,node,weight"]
    lines += [f"{i + 1},{fmt(z)},{fmt(w)}" for i, (z, w) in enumerate(zip(rule.nodes, rule.weights))]
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_solve(args):
    params = _params(args)
    result = solve_levels(params, hermite_rule(args.order), _solver_config(args))
    _emit(json.dumps(result.to_dict(), indent=2) + "\n", args.output)
    if not result.converged:
        log.error("no start converged; best residual %.3g", result.residual_inf)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_curve(args):
    params = _params(args)
    profile = build_strategy(params, hermite_rule(args.order), _solver_config(args), _grid(args))
    _write_profile(profile, args, {"solve": profile.meta.get("solve")})
    return EXIT_OK


def cmd_eval(args):
    params = _params(args)
    if args.profile in ("pbp", "affine", "sign", "bansal-basar"):
        profile = _builtin_profile(args.profile, params, args)
    else:
        profile = read_profile(args.profile, args.sidecar)
    exact = None
    if args.exact_curve:
        if profile.levels is None:
            raise UsageError("--exact-curve needs a profile built from signaling levels")
        exact = CurveSolver(profile.levels, params, hermite_rule(profile.levels.rule_order),
                            _solver_config(args))
    report = monte_carlo_cost(profile, params, args.samples, args.seed, exact_curve=exact)
    out = report.to_dict()
    out["bound"] = params.bound
    out["bound_ok"] = bound_check(report, params)
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_baseline(args):
    params = _params(args)
    extra = {}
    if args.family == "affine":
        law = affine_optimal(params)
        profile = affine_profile(law, params, _grid(args))
        extra["law"] = law.to_dict()
    elif args.family == "sign":
        profile = witsenhausen_sign(params, _grid(args))
    else:
        law = BansalBasarLaw(args.epsilon, args.lam)
        profile = bansal_basar_profile(law, params, hermite_rule(args.bb_order), args.condition_on, _grid(args))
        extra["law"] = {"epsilon": law.epsilon, "lambda": law.lam, "condition_on": args.condition_on}
    _write_profile(profile, args, extra)
    if "law" in extra and _sidecar_path(args) is None:
        sys.stderr.write(json.dumps(extra["law"]) + "\n")
    return EXIT_OK


def compare_reports(params: ProblemParams, order: int, samples: int, seed: int,
                    bb=(5.0, 0.01006, 64), include_bb=False):
    """MC reports for the PbP solution and the baselines at one parameter set."""
    reports = []
    pbp = build_strategy(params, hermite_rule(order))
    r = monte_carlo_cost(pbp, params, samples, seed)
    r.label = "J^o"
    reports.append(r)
    if params.sigma == 1.0:
        r = monte_carlo_cost(affine_profile(affine_optimal(params), params), params, samples, seed)
        r.label = "J^aff"
        reports.append(r)
    r = monte_carlo_cost(witsenhausen_sign(params), params, samples, seed)
    r.label = "J^wit"
    reports.append(r)
    if include_bb:
        law = BansalBasarLaw(bb[0], bb[1])
        for mode in ("control", "state"):
            prof = bansal_basar_profile(law, params, hermite_rule(bb[2]), mode)
            r = monte_carlo_cost(prof, params, samples, seed)
            r.label = f"J^bb({mode})"
            reports.append(r)
    return reports


def cmd_compare(args):
    params = PARAMETER_SETS[args.params_set]
    reports = compare_reports(params, args.order, args.samples, args.seed,
                              (args.epsilon, args.lam, args.bb_order),
                              include_bb=args.params_set == "table3")
    rows = compare(reports, LITERATURE.get(args.params_set))
    text = render_csv(rows) if args.format == "csv" else render_text(rows)
    _emit(text, args.output)
    return EXIT_OK


SWEEP_HEADER = ["k", "sigma", "sigma_x", "order", "status", "start", "levels", "residual_inf",
                "stage1", "stage2", "total", "bound", "bound_ok"]


def sweep_row(point: dict, samples: int, seed: int) -> dict:
    """Solve and evaluate one grid point; failures land in the status column."""
    row = {key: point.get(key, "") for key in ("k", "sigma", "sigma_x", "order")}
    row["order"] = point.get("order", DEFAULTS["order"])
    try:
        params = ProblemParams(point.get("k"), point.get("sigma"), point.get("sigma_x"))
        rule = hermite_rule(row["order"])
    except (TypeError, ValueError) as exc:
        row["status"] = "validation-error"
        log.warning("sweep point %s rejected: %s", point, exc)
        return row
    result = solve_levels(params, rule, workers=1)
    row["start"] = result.start_tag
    row["levels"] = " ".join(fmt(v) for v in result.levels.levels)
    row["residual_inf"] = fmt(result.residual_inf)
    if not result.converged:
        row["status"] = "no-convergence"
        return row
    try:
        profile = build_strategy(params, rule, result=result)
        report = monte_carlo_cost(profile, params, samples, seed, workers=1)
    except (SolverError, Gamma1barError):
        row["status"] = "curve-error"
        return row
    except EvaluationError:
        row["status"] = "evaluation-error"
        return row
    row.update(status="ok", stage1=fmt(report.stage1), stage2=fmt(report.stage2),
               total=fmt(report.total), bound=fmt(params.bound),
               bound_ok=str(bound_check(report, params)).lower())
    return row


def reference_grid():
    return [{"k": p.k, "sigma": p.sigma, "sigma_x": p.sigma_x, "order": 7}
            for p in PARAMETER_SETS.values()]


def cmd_sweep(args):
    if args.preset == "reference":
        grid = reference_grid()
    else:
        try:
            grid = json.loads(Path(args.grid).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read grid {args.grid}: {exc}") from None
        if not isinstance(grid, list) or not all(isinstance(g, dict) for g in grid):
            raise UsageError("grid must be a JSON list of objects")
    rows = ordered_map(lambda pt: sweep_row(pt, args.samples, args.seed), grid)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, SWEEP_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in SWEEP_HEADER})
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


COMMANDS = {
    "rule": cmd_rule,
    "solve": cmd_solve,
    "curve": cmd_curve,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args = _merge_config(args, parser)
        return COMMANDS[args.command](args)
    except (SolverError, Gamma1barError) as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    except EvaluationError as exc:
        log.error("%s", exc)
        return EXIT_EVAL
    except (UsageError, ValueError, TypeError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID


def main():
    sys.exit(run())
