from .montecarlo import mc_estimate
from .pctl import PctlSyntaxError, check, evaluate, format_result, parse_pctl
from .solvers import (SolverError, SolverStats, expected_reward, prob0, prob1, prob_bounded_until,
                      prob_next, prob_unbounded_until, solve_linear)

__all__ = [
    "PctlSyntaxError", "SolverError", "SolverStats", "check", "evaluate", "expected_reward",
    "format_result", "mc_estimate", "parse_pctl", "prob0", "prob1", "prob_bounded_until", "prob_next",
    "prob_unbounded_until", "solve_linear",
]
