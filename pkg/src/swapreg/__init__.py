"""Swap-regret minimization over convex sets via response-based approachability.

Library surface:
  sets      -- convex set variants with LMO/membership/polar oracles
  lp        -- dense two-phase simplex solver
  john      -- symmetric MVEE and John-position preconditioning
  saddle    -- exact and FPL solvers for the per-round bilinear game
  engine    -- the approachability loop (plain, preconditioned, approximate)
  polydim   -- mixed-strategy loop for polynomial-dimension swap deviations
  evaluate  -- LP regret evaluators and certificates
  adversary -- loss generators including the lower-bound construction
  cli       -- experiment runner (`swapreg run/eval/lowerbound/selftest`)
"""

from .engine import ApproachState, Csp, RoundLog, Trajectory, pythagorean_check, run, run_preconditioned, step
from .errors import (AdversaryFault, DegenerateSpan, DimBlowup, MembershipViolation,
                     NoCertifiedDeviation, NoConvergence, NumericalFailure,
                     PremiseViolated, RepresentationMissing, SolverFailure,
                     SwapregError, UnsupportedSet, VertexBlowup)
from .evaluate import (AffineDeviation, PlayHistory, RegretReport, app_loss_certificate,
                       external_regret, extremal_endomorphism, linear_swap_regret,
                       make_report, polydim_regret_lower)
from .john import (JohnDecomposition, Preconditioner, john_precondition,
                   lopsided_counterexample, mvee_symmetric)
from .lp import LpProblem, LpSolution, LpTolerances, solve_lp
from .polydim import FeatureMap, MixedStrategy, PolyState, best_response_point, monomial_map, poly_run, poly_step
from .saddle import BilinearGame, SaddlePoint, duality_gap, solve_exact, solve_fpl
from .sets import Ball, ConvexSet, HPolytope, LinearImage, Product, Simplex, VPolytope, set_from_spec

__version__ = "0.1.0"
