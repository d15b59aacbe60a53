"""Deadline/budget experiment broker with a deterministic simulated grid.

The broker schedules parameter-sweep jobs onto priced compute nodes under a
user-set deadline and budget, replanning as jobs finish or fail. Ships with a
TCP wire protocol, a monitoring web portal, and CLI front ends.
"""

from .broker import Broker, drive_to_completion
from .clock import RealClock, VirtualClock
from .model import (
    Experiment,
    ExperimentAction,
    ExperimentState,
    GridNode,
    Job,
    JobState,
    Optimization,
    QoSParams,
)
from .nodesim import EventLog, GridSim, NodeConfig
from .scenario import Scenario, load_scenario
from .sched import check_feasibility, fast_forward, plan_dispatch

__version__ = "0.1.0"

__all__ = [
    "Broker",
    "EventLog",
    "Experiment",
    "ExperimentAction",
    "ExperimentState",
    "GridNode",
    "GridSim",
    "Job",
    "JobState",
    "NodeConfig",
    "Optimization",
    "QoSParams",
    "RealClock",
    "Scenario",
    "VirtualClock",
    "__version__",
    "check_feasibility",
    "drive_to_completion",
    "fast_forward",
    "load_scenario",
    "plan_dispatch",
]
