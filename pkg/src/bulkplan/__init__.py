"""Minimum-cost bandwidth planning for deadline-bound bulk transfers over overlay VPNs."""

__version__ = "0.1.0"

from .minplus import (  # noqa: E402
    InfeasibleRequestError,
    NetworkState,
    SolverConfig,
    concave_fast_path,
    route_single_request,
)
from .model import (  # noqa: E402
    AllocationPlan,
    CostFunction,
    Scenario,
    check_plan_constraints,
    total_cost,
    validate_scenario,
    vpn_cost,
)
from .solver import SolveReport, solve  # noqa: E402

__all__ = [
    "AllocationPlan",
    "CostFunction",
    "InfeasibleRequestError",
    "NetworkState",
    "Scenario",
    "SolveReport",
    "SolverConfig",
    "check_plan_constraints",
    "concave_fast_path",
    "route_single_request",
    "solve",
    "total_cost",
    "validate_scenario",
    "vpn_cost",
]
