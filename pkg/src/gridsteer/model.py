"""Domain model: jobs, nodes, experiments, and their state machines.

Everything here is a plain value plus pure functions over values, so any
thread may read freely; the broker's command loop is the only writer. The one
deliberate exception is :class:`GridNode`, which is mutable registry state
owned by the simulator/broker (status flips and counters).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum
from typing import Optional

from .money import ZERO, charge


class JobState(str, Enum):
    READY = "Ready"
    RUNNING = "Running"
    COMPLETED = "Completed"
    FAILED = "Failed"


class EventKind(str, Enum):
    DISPATCH = "Dispatch"
    COMPLETE = "Complete"
    FAIL = "Fail"
    RESTART = "Restart"
    ABORT_REQUEUE = "AbortRequeue"


class ExperimentState(str, Enum):
    CONFIGURED = "Configured"
    RUNNING = "Running"
    STOPPED = "Stopped"
    SHUTDOWN = "Shutdown"  # terminal


class ExperimentAction(str, Enum):
    START = "Start"
    STOP = "Stop"
    SHUTDOWN = "Shutdown"


class Optimization(str, Enum):
    TIME_MIN = "TimeMin"
    COST_MIN = "CostMin"


class NodeStatus(str, Enum):
    UP = "Up"
    DOWN = "Down"


class DomainError(Exception):
    """Base for errors the broker maps onto wire error codes."""


class ValidationError(DomainError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class NotFound(DomainError):
    def __init__(self, kind: str, key: str):
        super().__init__(f"{kind} {key!r} not found")
        self.kind = kind
        self.key = key


class InvalidTransition(DomainError):
    def __init__(self, subject: str, state: str, action: str):
        super().__init__(f"{subject} in state {state} cannot take {action}")
        self.state = state
        self.action = action


class InvalidState(DomainError):
    def __init__(self, message: str):
        super().__init__(message)


@dataclass(frozen=True)
class QoSParams:
    """Deadline/budget/optimization triple steering one experiment."""

    deadline: float            # epoch seconds, UTC
    budget: Decimal            # G$, >= 0
    optimization: Optimization


@dataclass(frozen=True)
class JobEvent:
    kind: EventKind
    at: float
    node: Optional[str] = None
    cpu_seconds: Optional[float] = None

    def __post_init__(self):
        if self.kind is EventKind.COMPLETE:
            if self.cpu_seconds is None or self.cpu_seconds <= 0:
                raise ValueError("Complete event requires cpu_seconds > 0")
        if self.kind in (EventKind.DISPATCH, EventKind.COMPLETE, EventKind.FAIL):
            if not self.node:
                raise ValueError(f"{self.kind.value} event requires a node")


@dataclass(frozen=True)
class Job:
    id: str
    name: str
    est_cpu_s: float
    state: JobState = JobState.READY
    remarks: str = ""
    assigned_node: Optional[str] = None
    execution_time: Optional[float] = None  # wall seconds on the node
    cost_incurred: Decimal = ZERO
    attempts: int = 0


@dataclass
class GridNode:
    """One computational resource. Mutable: the simulator owns ``status``,
    the broker owns the counters and remarks."""

    id: str
    server_name: str
    hostname: str
    rate: float       # G$ per cpu-second
    speed: float      # relative to the estimate baseline
    capacity: int = 1
    status: NodeStatus = NodeStatus.UP
    remarks: str = ""
    assigned_count: int = 0
    completed_count: int = 0


@dataclass(frozen=True)
class Experiment:
    id: str
    name: str
    qos: QoSParams
    jobs: tuple[Job, ...]
    state: ExperimentState = ExperimentState.CONFIGURED
    started_at: Optional[float] = None
    budget_spent: Decimal = ZERO


@dataclass(frozen=True)
class ExperimentStatus:
    experiment_id: str
    name: str
    state: ExperimentState
    counts: dict[JobState, int]
    qos: QoSParams
    budget_spent: Decimal
    time_remaining_s: float
    nodes: tuple[GridNode, ...]


def apply_job_transition(job: Job, event: JobEvent, node: GridNode | None = None) -> Job:
    """Advance one job through its state machine; returns the updated job.

    The full transition table; every (state, kind) pair not listed raises
    InvalidTransition:

        Ready    + Dispatch     -> Running   (attempts+1, node pinned, remarks cleared)
        Running  + Complete     -> Completed (execution_time, cost charged)
        Running  + Fail         -> Failed
        Running  + AbortRequeue -> Ready     (node cleared, attempts kept)
        Failed   + Restart      -> Ready     (node cleared)
    """
    kind = event.kind
    if job.state is JobState.READY and kind is EventKind.DISPATCH:
        return replace(
            job,
            state=JobState.RUNNING,
            assigned_node=event.node,
            attempts=job.attempts + 1,
            remarks="",
        )
    if job.state is JobState.RUNNING and kind is EventKind.COMPLETE:
        if node is None or node.id != event.node:
            raise ValueError("Complete transition needs the executing node for pricing")
        wall = event.cpu_seconds / node.speed
        return replace(
            job,
            state=JobState.COMPLETED,
            execution_time=wall,
            cost_incurred=job.cost_incurred + charge(wall, node.rate),
        )
    if job.state is JobState.RUNNING and kind is EventKind.FAIL:
        return replace(job, state=JobState.FAILED)
    if job.state is JobState.RUNNING and kind is EventKind.ABORT_REQUEUE:
        return replace(job, state=JobState.READY, assigned_node=None)
    if job.state is JobState.FAILED and kind is EventKind.RESTART:
        return replace(job, state=JobState.READY, assigned_node=None)
    raise InvalidTransition(f"job {job.id}", job.state.value, kind.value)


def apply_experiment_transition(
    exp: Experiment, action: ExperimentAction, now: float
) -> Experiment:
    """Advance the experiment state machine; returns the updated experiment.

        Configured + Start    -> Running (started_at stamped)
        Stopped    + Start    -> Running
        Running    + Stop     -> Stopped  (running jobs requeued)
        any non-Shutdown + Shutdown -> Shutdown (running jobs failed, 'shutdown')

    Shutdown is terminal. Job-level side effects here are the pure state
    flips only; cancelling in-flight simulator work is the broker's duty.
    """
    if action is ExperimentAction.START:
        if exp.state is ExperimentState.CONFIGURED:
            return replace(exp, state=ExperimentState.RUNNING, started_at=now)
        if exp.state is ExperimentState.STOPPED:
            return replace(exp, state=ExperimentState.RUNNING)
    elif action is ExperimentAction.STOP:
        if exp.state is ExperimentState.RUNNING:
            jobs = tuple(
                apply_job_transition(
                    j, JobEvent(EventKind.ABORT_REQUEUE, at=now, node=j.assigned_node)
                )
                if j.state is JobState.RUNNING
                else j
                for j in exp.jobs
            )
            return replace(exp, state=ExperimentState.STOPPED, jobs=jobs)
    elif action is ExperimentAction.SHUTDOWN:
        if exp.state is not ExperimentState.SHUTDOWN:
            jobs = tuple(
                replace(
                    apply_job_transition(
                        j, JobEvent(EventKind.FAIL, at=now, node=j.assigned_node)
                    ),
                    remarks="shutdown",
                )
                if j.state is JobState.RUNNING
                else j
                for j in exp.jobs
            )
            return replace(exp, state=ExperimentState.SHUTDOWN, jobs=jobs)
    raise InvalidTransition(f"experiment {exp.id}", exp.state.value, action.value)


def aggregate_status(
    exp: Experiment, nodes: list[GridNode], now: float
) -> ExperimentStatus:
    """Snapshot for the status page: job counts, spend, time left, node rows.

    ``counts`` always carries all four job states, zeros included.
    """
    counts = {state: 0 for state in JobState}
    for job in exp.jobs:
        counts[job.state] += 1
    return ExperimentStatus(
        experiment_id=exp.id,
        name=exp.name,
        state=exp.state,
        counts=counts,
        qos=exp.qos,
        budget_spent=exp.budget_spent,
        time_remaining_s=exp.qos.deadline - now,
        nodes=tuple(sorted(nodes, key=lambda n: n.id)),
    )
