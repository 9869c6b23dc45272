"""Time-inconsistent dividend barriers: solver, closed forms, verification.

The model: a drifted Brownian surplus pays dividends at a barrier that
depends on the running minimum, under a two-term exponential mixture
discount and a minimum-dependent payout cost.  This package solves the
coupled barrier/value-slope system, reconstructs the closed-form value
surface, checks the variational inequalities behind the equilibrium,
and confirms the whole construction by simulation.
"""
from ._version import __version__
from .boundary import (BoundaryReport, BoundarySolution, G_of_b,
                       check_boundary_conditions, coefficients, F0_from_b0,
                       integrate_boundary, ode_rhs, root_bracket, solve_b0)
from .errors import (BracketFailure, ConfigError, DiagonalHit, DivBarrierError,
                     InconsistentLambda, InvalidInitial, NoConvergence,
                     NonMonotoneControl, NonMonotoneMinimum, OutOfDomain,
                     SingularSystem)
from .model import (LambdaQuad, ModelParams, beta, cost_c, lambda_from_model,
                    model_from_lambda, rho_bound)
from .montecarlo import (PayoffEstimate, PerturbationEstimate, estimate_payoff,
                         perturbation_test, z_score)
from .paths import (DiscretePath, Jump, cost_jump_integral, detect_jumps,
                    diamond_integral, square_integral)
from .simulate import (BoundaryFn, equilibrium_boundary_fn, initial_lump,
                       path_rng, simulate_equilibrium, skorokhod_fixed,
                       skorokhod_moving)
from .surface import HJBReport, ValueSurface, verify_hjb

__all__ = [
    "__version__",
    "BoundaryFn", "BoundaryReport", "BoundarySolution", "BracketFailure",
    "ConfigError", "DiagonalHit", "DiscretePath", "DivBarrierError",
    "G_of_b", "HJBReport", "InconsistentLambda", "InvalidInitial", "Jump",
    "LambdaQuad", "ModelParams", "NoConvergence", "NonMonotoneControl",
    "NonMonotoneMinimum", "OutOfDomain", "PayoffEstimate",
    "PerturbationEstimate", "SingularSystem", "ValueSurface",
    "beta", "check_boundary_conditions", "coefficients", "cost_c",
    "cost_jump_integral", "detect_jumps", "diamond_integral",
    "equilibrium_boundary_fn", "estimate_payoff", "F0_from_b0",
    "initial_lump", "integrate_boundary", "lambda_from_model",
    "model_from_lambda", "ode_rhs", "path_rng", "perturbation_test",
    "rho_bound", "root_bracket", "simulate_equilibrium", "skorokhod_fixed",
    "skorokhod_moving", "solve_b0", "square_integral", "verify_hjb",
    "z_score",
]
