"""The broker: owns all experiment state and drives the farm.

Exactly one thread may call methods here (the server's command loop, or a
test driving directly). Every mutation flows through a tick: advance the
simulator to "now", fold its events into job state, then plan and dispatch
whatever can start. Connection handlers never touch this object; they queue
commands and wait.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Iterator, Optional

from .clock import VirtualClock
from .model import (
    EventKind,
    Experiment,
    ExperimentAction,
    ExperimentState,
    ExperimentStatus,
    GridNode,
    InvalidState,
    Job,
    JobEvent,
    JobState,
    NotFound,
    Optimization,
    QoSParams,
    ValidationError,
    aggregate_status,
    apply_experiment_transition,
    apply_job_transition,
)
from .money import ZERO, fmt_money
from .nodesim import EventLog, GridSim, SimEvent, SimEventKind
from .sched import (
    DeferReason,
    FeasibilityReport,
    NodeLoad,
    check_feasibility,
    estimate_cost,
    plan_dispatch,
)
from .tz import iso_utc

# rebuild an experiment's ready queue once this many entries have gone stale
_READY_COMPACT_AT = 64

REMARK_BUDGET = "budget exhausted"


@dataclass
class _ExpRec:
    """Broker-internal mutable mirror of one experiment."""

    id: str
    name: str
    qos: QoSParams
    state: ExperimentState = ExperimentState.CONFIGURED
    started_at: Optional[float] = None
    budget_spent: Decimal = ZERO
    jobs: dict[str, Job] = field(default_factory=dict)
    events: dict[str, list[JobEvent]] = field(default_factory=dict)
    counts: dict[JobState, int] = field(default_factory=lambda: {s: 0 for s in JobState})
    ready_order: list[str] = field(default_factory=list)
    ready_stale: int = 0
    committed: Decimal = ZERO                      # sum of inflight estimates
    inflight_cost: dict[str, Decimal] = field(default_factory=dict)

    def materialize(self) -> Experiment:
        return Experiment(
            id=self.id,
            name=self.name,
            qos=self.qos,
            jobs=tuple(self.jobs.values()),
            state=self.state,
            started_at=self.started_at,
            budget_spent=self.budget_spent,
        )


class Broker:
    def __init__(self, sim: GridSim, clock, log: EventLog | None = None):
        self.sim = sim
        self.clock = clock
        self.log = log or sim.log
        self._recs: dict[str, _ExpRec] = {}
        self._next_exp = 1

    # -- plumbing ----------------------------------------------------------

    @staticmethod
    def _key(exp_id: str, job_id: str) -> str:
        return f"{exp_id}/{job_id}"

    @staticmethod
    def _split_key(key: str) -> tuple[str, str]:
        exp_id, _, job_id = key.partition("/")
        return exp_id, job_id

    def _rec(self, exp_id: str) -> _ExpRec:
        rec = self._recs.get(exp_id)
        if rec is None:
            raise NotFound("experiment", exp_id)
        return rec

    def _update_job(self, rec: _ExpRec, new: Job, event: JobEvent) -> None:
        old = rec.jobs[new.id]
        rec.counts[old.state] -= 1
        rec.counts[new.state] += 1
        rec.jobs[new.id] = new
        rec.events[new.id].append(event)
        if new.state is JobState.READY:
            idx = bisect.bisect_left(rec.ready_order, new.id)
            if idx >= len(rec.ready_order) or rec.ready_order[idx] != new.id:
                rec.ready_order.insert(idx, new.id)
        elif old.state is JobState.READY:
            rec.ready_stale += 1

    def _ready_jobs(self, rec: _ExpRec) -> Iterator[Job]:
        for jid in rec.ready_order:
            job = rec.jobs[jid]
            if job.state is JobState.READY:
                yield job

    def _compact_ready(self, rec: _ExpRec) -> None:
        if rec.ready_stale > _READY_COMPACT_AT:
            rec.ready_order = [
                jid for jid in rec.ready_order
                if rec.jobs[jid].state is JobState.READY
            ]
            rec.ready_stale = 0

    def _release_inflight(self, rec: _ExpRec, job_id: str) -> None:
        rec.committed -= rec.inflight_cost.pop(job_id, ZERO)

    # -- the tick ----------------------------------------------------------

    def tick(self, now: float | None = None) -> int:
        """Advance the sim, absorb its events, dispatch what can start.

        Returns the number of jobs dispatched.
        """
        if now is None:
            now = self.clock.now()
        for ev in self.sim.advance(now):
            self._apply_sim_event(ev)
        dispatched = 0
        if self.sim.free_slot_total() > 0:
            for exp_id in sorted(self._recs):
                rec = self._recs[exp_id]
                if rec.state is not ExperimentState.RUNNING:
                    continue
                if rec.counts[JobState.READY] == 0:
                    continue
                dispatched += self._plan_and_dispatch(rec, now)
        return dispatched

    def _apply_sim_event(self, ev: SimEvent) -> None:
        if ev.kind in (SimEventKind.NODE_DOWN, SimEventKind.NODE_UP):
            return  # sim flips node status itself; job kills arrive as events
        exp_id, job_id = self._split_key(ev.job_id)
        rec = self._recs.get(exp_id)
        if rec is None:
            return
        job = rec.jobs[job_id]
        if ev.kind is SimEventKind.JOB_DONE:
            node = self.sim.nodes[ev.node_id]
            event = JobEvent(
                EventKind.COMPLETE, ev.at, node=ev.node_id, cpu_seconds=ev.cpu_seconds
            )
            new = apply_job_transition(job, event, node)
            rec.budget_spent += new.cost_incurred - job.cost_incurred
            node.completed_count += 1
            self._update_job(rec, new, event)
        else:  # JOB_FAILED
            event = JobEvent(EventKind.FAIL, ev.at, node=ev.node_id)
            new = replace(apply_job_transition(job, event), remarks=ev.reason)
            self._update_job(rec, new, event)
        self._release_inflight(rec, job_id)

    def _plan_and_dispatch(self, rec: _ExpRec, now: float) -> int:
        self._compact_ready(rec)
        busy = self.sim.busy_map()
        loads = [NodeLoad(node, tuple(busy[nid])) for nid, node in self.sim.nodes.items()]
        remaining = rec.qos.budget - rec.budget_spent - rec.committed
        plan = plan_dispatch(
            self._ready_jobs(rec), loads, rec.qos, remaining, now, immediate=True
        )
        count = 0
        for a in plan.assignments:
            job = rec.jobs[a.job_id]
            if not self.sim.dispatch(self._key(rec.id, a.job_id), job.est_cpu_s, a.node_id):
                continue  # defensive; the plan was built from live loads
            event = JobEvent(EventKind.DISPATCH, now, node=a.node_id)
            self._update_job(rec, apply_job_transition(job, event), event)
            self.sim.nodes[a.node_id].assigned_count += 1
            rec.committed += a.est_cost
            rec.inflight_cost[a.job_id] = a.est_cost
            count += 1
        for d in plan.deferred:
            if d.reason is DeferReason.BUDGET_GUARD:
                job = rec.jobs[d.job_id]
                if job.remarks != REMARK_BUDGET:
                    rec.jobs[d.job_id] = replace(job, remarks=REMARK_BUDGET)
        return count

    # -- operations --------------------------------------------------------

    def hello(self) -> str:
        from .wire import PROTOCOL_VERSION

        return PROTOCOL_VERSION

    def create_experiment(
        self, name: str, qos: QoSParams, job_specs: list[tuple[str, float]]
    ) -> Experiment:
        if not name:
            raise ValidationError("name", "must not be empty")
        _validate_qos(qos)
        if not job_specs:
            raise ValidationError("jobs", "experiment needs at least one job")
        for i, (job_name, est) in enumerate(job_specs):
            if not job_name:
                raise ValidationError(f"jobs[{i}].name", "must not be empty")
            if not (isinstance(est, (int, float)) and math.isfinite(est) and est > 0):
                raise ValidationError(f"jobs[{i}].est_cpu_s", "must be a positive number")
        exp_id = f"exp{self._next_exp}"
        self._next_exp += 1
        width = max(4, len(str(len(job_specs))))
        rec = _ExpRec(id=exp_id, name=name, qos=qos)
        for i, (job_name, est) in enumerate(job_specs, start=1):
            job = Job(id=f"j{i:0{width}d}", name=job_name, est_cpu_s=float(est))
            rec.jobs[job.id] = job
            rec.events[job.id] = []
            rec.counts[JobState.READY] += 1
            rec.ready_order.append(job.id)
        self._recs[exp_id] = rec
        self.log.write(
            self.clock.now(), "EXP-CREATE", exp_id, "",
            f"name={name} jobs={len(job_specs)}",
        )
        return rec.materialize()

    def list_experiments(self) -> list[Experiment]:
        return [self._recs[eid].materialize() for eid in sorted(self._recs)]

    def get_qos(self, exp_id: str) -> QoSParams:
        return self._rec(exp_id).qos

    def set_qos(self, exp_id: str, qos: QoSParams) -> FeasibilityReport:
        """Replace the QoS atomically; judge feasibility from current state."""
        rec = self._rec(exp_id)
        if rec.state is ExperimentState.SHUTDOWN:
            raise InvalidState(f"experiment {exp_id} is shut down")
        _validate_qos(qos)
        rec.qos = qos
        now = self.clock.now()
        self.log.write(
            now, "QOS-SET", exp_id, "",
            f"deadline={iso_utc(qos.deadline)} budget={fmt_money(qos.budget)} "
            f"mode={qos.optimization.value}",
        )
        self.tick(now)
        return check_feasibility(rec.materialize(), self._node_list(), now)

    def check_qos(self, exp_id: str) -> FeasibilityReport:
        rec = self._rec(exp_id)
        return check_feasibility(rec.materialize(), self._node_list(), self.clock.now())

    def control(self, exp_id: str, action: ExperimentAction) -> Experiment:
        rec = self._rec(exp_id)
        now = self.clock.now()
        # let the state machine veto before any side effect
        shadow = apply_experiment_transition(rec.materialize(), action, now)

        if action in (ExperimentAction.STOP, ExperimentAction.SHUTDOWN):
            running = [
                jid for jid, j in rec.jobs.items() if j.state is JobState.RUNNING
            ]
            for jid in running:
                self.sim.cancel(self._key(exp_id, jid))
                self._release_inflight(rec, jid)
                job = rec.jobs[jid]
                if action is ExperimentAction.STOP:
                    event = JobEvent(EventKind.ABORT_REQUEUE, now, node=job.assigned_node)
                    self._update_job(rec, apply_job_transition(job, event), event)
                else:
                    event = JobEvent(EventKind.FAIL, now, node=job.assigned_node)
                    new = replace(apply_job_transition(job, event), remarks="shutdown")
                    self._update_job(rec, new, event)
        rec.state = shadow.state
        rec.started_at = shadow.started_at
        self.log.write(now, f"EXP-{action.value.upper()}", exp_id, "")
        if action is ExperimentAction.START:
            self.tick(now)
        return rec.materialize()

    def list_jobs(
        self,
        exp_id: str,
        offset: int = 0,
        limit: int = 50,
        state: JobState | None = None,
    ) -> tuple[int, list[Job]]:
        rec = self._rec(exp_id)
        if offset < 0:
            raise ValidationError("offset", "must be >= 0")
        if not 1 <= limit <= 500:
            raise ValidationError("limit", "must be in 1..500")
        if state is None:
            jobs = list(rec.jobs.values())
        else:
            jobs = [j for j in rec.jobs.values() if j.state is state]
        return len(jobs), jobs[offset : offset + limit]

    def job_info(self, exp_id: str, job_id: str) -> tuple[Job, list[JobEvent]]:
        rec = self._rec(exp_id)
        job = rec.jobs.get(job_id)
        if job is None:
            raise NotFound("job", job_id)
        return job, list(rec.events[job_id])

    def restart_job(self, exp_id: str, job_id: str) -> Job:
        """Failed -> requeue; Running -> abort and requeue. Anything else 409s."""
        rec = self._rec(exp_id)
        job = rec.jobs.get(job_id)
        if job is None:
            raise NotFound("job", job_id)
        now = self.clock.now()
        if job.state is JobState.RUNNING:
            event = JobEvent(EventKind.ABORT_REQUEUE, now, node=job.assigned_node)
            new = apply_job_transition(job, event)  # raises before side effects if invalid
            self.sim.cancel(self._key(exp_id, job_id))
            self._release_inflight(rec, job_id)
        else:
            event = JobEvent(EventKind.RESTART, now)
            new = apply_job_transition(job, event)
        self._update_job(rec, new, event)
        self.log.write(now, "JOB-RESTART", self._key(exp_id, job_id), "")
        # requeue only; the next tick dispatches it like any other Ready job
        return rec.jobs[job_id]

    def restart_failed(self, exp_id: str) -> int:
        """Requeue every Failed job; returns how many."""
        rec = self._rec(exp_id)
        now = self.clock.now()
        failed = [jid for jid, j in rec.jobs.items() if j.state is JobState.FAILED]
        for jid in failed:
            event = JobEvent(EventKind.RESTART, now)
            self._update_job(rec, apply_job_transition(rec.jobs[jid], event), event)
        if failed:
            self.log.write(now, "JOB-RESTART-FAILED", rec.id, "", f"count={len(failed)}")
        return len(failed)

    def experiment_status(self, exp_id: str) -> ExperimentStatus:
        rec = self._rec(exp_id)
        return aggregate_status(rec.materialize(), self._node_list(), self.clock.now())

    def list_resources(self) -> list[GridNode]:
        return self._node_list()

    def _node_list(self) -> list[GridNode]:
        return [self.sim.nodes[nid] for nid in sorted(self.sim.nodes)]


def _validate_qos(qos: QoSParams) -> None:
    if not isinstance(qos.budget, Decimal) or not qos.budget.is_finite() or qos.budget < 0:
        raise ValidationError("budget", "must be a non-negative amount")
    if not isinstance(qos.deadline, (int, float)) or not math.isfinite(qos.deadline):
        raise ValidationError("deadline", "must be a timestamp")
    if not isinstance(qos.optimization, Optimization):
        raise ValidationError("optimization", "must be TimeMin or CostMin")


def drive_to_completion(broker: Broker, clock: VirtualClock, max_sim_s: float | None = None) -> str:
    """Step the virtual clock event to event until nothing more can happen.

    Returns 'completed' when every job everywhere is terminal, else 'stuck'
    (deferred-forever jobs remain), or 'horizon' when max_sim_s was hit.
    """
    while True:
        dispatched = broker.tick()
        nxt = broker.sim.next_event_at()
        if nxt is None:
            if dispatched == 0:
                break
            continue
        if max_sim_s is not None and nxt - clock.start > max_sim_s:
            return "horizon"
        clock.advance_to(nxt)
    for rec in broker._recs.values():
        for job in rec.jobs.values():
            if job.state in (JobState.READY, JobState.RUNNING):
                return "stuck"
    return "completed"
