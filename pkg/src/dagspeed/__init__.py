"""Minimum-energy speed assignment and scheduling for task DAGs.

A library for DVFS-style energy minimization of precedence-constrained
task graphs on homogeneous multicores under a global deadline, with exact
and approximation algorithms for continuous and discrete speed models.
"""

from .graph import (
    CONTINUOUS,
    DISCRETE,
    GraphStructureError,
    InfeasibleOrderError,
    InvalidInstanceError,
    SpeedModel,
    Task,
    TaskGraph,
    Violation,
    augment_with_mapping_order,
    critical_path_time,
    deadline_feasible,
    validate,
)
from .spdecomp import SpDecomposition, SpNode, sp_decompose
from .instance_io import (
    InstanceFormatError,
    load_instance,
    loads_instance,
    save_instance,
)
from .optim.convex import ConvexProgram, ConvexSolution, SolveStatus, solve_convex
from .optim.bnb import BnBNode, BnBResult, solve_bnb
from .optim.lpfile import export_model, sched_ilp_lp, speed_ilp_lp
from .continuous import (
    SpeedAssignment,
    SpgStatus,
    cvx_speed,
    optimal_continuous_speeds,
    spg_speed,
)
from .scheduling import (
    Schedule,
    apx_sched,
    continuous_lower_bound,
    list_schedule,
    validate_schedule,
)
from .discrete import (
    InstanceTooLarge,
    LevelAssignment,
    apx_d_speed,
    brute_force_discrete,
    ilp_d_speed,
)
from .sched_discrete import apx_d_sched, ilp_d_sched
from .bench import (
    ALGORITHMS,
    GeneratorConfig,
    SolveReport,
    UsageError,
    e3s_like,
    generate,
    genome_like,
    run,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BnBNode",
    "BnBResult",
    "CONTINUOUS",
    "ConvexProgram",
    "ConvexSolution",
    "DISCRETE",
    "GeneratorConfig",
    "GraphStructureError",
    "InfeasibleOrderError",
    "InstanceFormatError",
    "InstanceTooLarge",
    "InvalidInstanceError",
    "LevelAssignment",
    "Schedule",
    "SolveReport",
    "SolveStatus",
    "SpDecomposition",
    "SpNode",
    "SpeedAssignment",
    "SpeedModel",
    "SpgStatus",
    "Task",
    "TaskGraph",
    "UsageError",
    "Violation",
    "apx_d_sched",
    "apx_d_speed",
    "apx_sched",
    "augment_with_mapping_order",
    "brute_force_discrete",
    "continuous_lower_bound",
    "critical_path_time",
    "cvx_speed",
    "deadline_feasible",
    "e3s_like",
    "export_model",
    "generate",
    "genome_like",
    "ilp_d_sched",
    "ilp_d_speed",
    "list_schedule",
    "load_instance",
    "loads_instance",
    "optimal_continuous_speeds",
    "run",
    "save_instance",
    "sched_ilp_lp",
    "solve_bnb",
    "solve_convex",
    "sp_decompose",
    "speed_ilp_lp",
    "spg_speed",
    "sweep",
    "validate",
    "validate_schedule",
]
