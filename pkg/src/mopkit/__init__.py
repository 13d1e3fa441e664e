"""Design and scheduling toolkit for multiplexed soft open points."""

from .capability import (
    CapabilityMode,
    CapacityVector,
    InjectionPoint,
    MultiplexerAssignment,
    disaggregate,
    enumerate_capacity_vectors,
    is_feasible,
    max_power_transfer,
)
from .design import (
    Design,
    DesignKind,
    bisection_sizing,
    fixed_sop,
    golden_sizing,
    idealised,
    split_refinement,
    uniform_sizing,
)
from .analytic import (
    compute_table1,
    elliptic_ke,
    pq_ccv_elliptic,
    pq_ccv_quadrature,
    statcom_ccv_idealised,
    statcom_ccv_staircase,
    w_integral,
)
from .montecarlo import CcvEstimate, convergence_sweep, estimate_ccv
from .network import (
    NetworkCase,
    QuadraticLossModel,
    build_quadratic_loss_model,
    bundled_cases,
    load_network,
    load_profiles,
    solve_power_flow,
)
from .scheduler import (
    HorizonResult,
    SchedulerConfig,
    SubproblemState,
    equivalent_capacity_search,
    relative_metrics,
    schedule_horizon,
    solve_subproblem,
    solve_timestep,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityMode",
    "CapacityVector",
    "CcvEstimate",
    "Design",
    "DesignKind",
    "HorizonResult",
    "InjectionPoint",
    "MultiplexerAssignment",
    "NetworkCase",
    "QuadraticLossModel",
    "SchedulerConfig",
    "SubproblemState",
    "bisection_sizing",
    "build_quadratic_loss_model",
    "bundled_cases",
    "compute_table1",
    "convergence_sweep",
    "disaggregate",
    "elliptic_ke",
    "enumerate_capacity_vectors",
    "equivalent_capacity_search",
    "estimate_ccv",
    "fixed_sop",
    "golden_sizing",
    "idealised",
    "is_feasible",
    "load_network",
    "load_profiles",
    "max_power_transfer",
    "pq_ccv_elliptic",
    "pq_ccv_quadrature",
    "relative_metrics",
    "schedule_horizon",
    "solve_power_flow",
    "solve_subproblem",
    "solve_timestep",
    "split_refinement",
    "statcom_ccv_idealised",
    "statcom_ccv_staircase",
    "uniform_sizing",
    "w_integral",
]
