"""Person-by-person optimal strategies for Witsenhausen's counterexample,
computed by Gauss-Hermite collocation."""

from .quadrature import QuadratureRule, hermite_rule, integrate
from .model import (
    ProblemParams,
    SignalingLevels,
    StrategyProfile,
    collocation_points,
    gamma1bar_residual,
    gamma2_hat,
    system_residual,
)
from .solver import (
    CurveSolver,
    GridSpec,
    SolveResult,
    SolverConfig,
    SolverError,
    build_strategy,
    gamma1bar_at,
    solve_levels,
)
from .baselines import (
    AffineLaw,
    BansalBasarLaw,
    affine_optimal,
    affine_profile,
    bansal_basar_profile,
    witsenhausen_sign,
)
from .evaluation import (
    PARAMETER_SETS,
    CostReport,
    bound_check,
    compare,
    monte_carlo_cost,
    quadrature_cost,
)

__version__ = "0.1.0"
