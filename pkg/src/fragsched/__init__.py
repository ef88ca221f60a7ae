"""Allocation engine and trace-replay simulator for elastic jobs on idle nodes."""
from .milp import (
    AllocationDecision,
    Direction,
    SolveConfig,
    SolveStatus,
    build_milp,
    realize_counts,
    solve_bb,
    solve_count_dp,
    solve_exhaustive,
)
from .model import (
    ClusterState,
    Event,
    Fragment,
    JobSlot,
    ObjectiveMetric,
    TrainerSpec,
    validate_state,
)
from .policies import Policy, PolicyConfig, admit_fcfs, equal_share
from .scalability import ScalabilityCurve, evaluate, sos2_weights
from .simulator import SimulationConfig, SimulationReport, run
from .trace import EventLog

__version__ = "0.1.0"

__all__ = [
    "AllocationDecision", "Direction", "SolveConfig", "SolveStatus", "build_milp",
    "realize_counts", "solve_bb", "solve_count_dp", "solve_exhaustive", "ClusterState",
    "Event", "Fragment", "JobSlot", "ObjectiveMetric", "TrainerSpec", "validate_state",
    "Policy", "PolicyConfig", "admit_fcfs", "equal_share", "ScalabilityCurve", "evaluate",
    "sos2_weights", "SimulationConfig", "SimulationReport", "run", "EventLog",
]
