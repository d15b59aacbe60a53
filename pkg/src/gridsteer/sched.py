"""Deadline/budget-constrained dispatch planning.

Two greedy policies over a slot model of node availability:

* TimeMin  - each job goes to the node with the earliest completion time,
             ties broken by cheaper estimated cost, then node id.
* CostMin  - each job goes to the cheapest node that can still meet the
             deadline, ties broken by earlier completion, then node id.

Guards defer jobs rather than dispatch them badly: BudgetGuard when the
chosen node's estimated cost exceeds the remaining budget, DeadlineGuard when
no acceptable node can finish in time, AllNodesDown when nothing is Up.

Planning is pure: callers pass a load snapshot and get a plan back; nothing
here touches a socket, a clock, or the simulator.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from typing import Iterable, Sequence

from .model import Experiment, GridNode, Job, JobState, NodeStatus, Optimization, QoSParams
from .money import ZERO, charge, fmt_money
from .tz import iso_utc


def estimate_runtime(est_cpu_s: float, node: GridNode) -> float:
    """Wall seconds the job is expected to hold a slot on this node."""
    return est_cpu_s / node.speed


def estimate_cost(est_cpu_s: float, node: GridNode) -> Decimal:
    """Expected G$ price of one attempt on this node."""
    return charge(est_cpu_s / node.speed, node.rate)


class DeferReason(str, Enum):
    BUDGET_GUARD = "BudgetGuard"
    DEADLINE_GUARD = "DeadlineGuard"
    NO_CAPACITY = "NoCapacity"
    ALL_NODES_DOWN = "AllNodesDown"


@dataclass(frozen=True)
class NodeLoad:
    """A node plus the completion times of its currently occupied slots."""

    node: GridNode
    busy_until: tuple[float, ...] = ()


@dataclass(frozen=True)
class PlannedAssignment:
    job_id: str
    node_id: str
    start: float
    completion: float
    est_cost: Decimal


@dataclass(frozen=True)
class Deferral:
    job_id: str
    reason: DeferReason


@dataclass(frozen=True)
class DispatchPlan:
    assignments: tuple[PlannedAssignment, ...]
    deferred: tuple[Deferral, ...]


class Verdict(str, Enum):
    FEASIBLE = "Feasible"
    MARGINAL = "Marginal"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class FeasibilityReport:
    verdict: Verdict
    time_ok: bool
    budget_ok: bool
    est_completion: float
    est_cost: Decimal
    message: str


class Stuck(Exception):
    """Some jobs can never be placed: the budget will not grow, the clock
    will not rewind, and the planner's node view is static.

    ``est_completion``/``est_cost`` cover the placeable prefix only.
    """

    def __init__(self, deferred: tuple[Deferral, ...], est_completion: float, est_cost: Decimal):
        reasons = sorted({d.reason.value for d in deferred})
        super().__init__(f"{len(deferred)} job(s) stuck: {', '.join(reasons)}")
        self.deferred = deferred
        self.est_completion = est_completion
        self.est_cost = est_cost


def plan_dispatch(
    ready_jobs: Iterable[Job],
    loads: Sequence[NodeLoad],
    qos: QoSParams,
    budget_remaining: Decimal,
    now: float,
    *,
    immediate: bool = False,
) -> DispatchPlan:
    """Greedily place ready jobs (ascending job id) onto node slots.

    Full mode plans every job: assignments may start in the future, queued
    behind busy slots. Immediate mode is the broker's operational variant:
    only placements that can start right now are returned as assignments,
    queued placements are reported as NoCapacity deferrals, and examination
    stops once no free slot remains (later jobs could not start now anyway).
    Both modes walk identical internal state, so immediate assignments are
    exactly the start<=now prefix of the full plan.

    The paid total never exceeds ``budget_remaining``: every placed job
    (including queued ones) commits its estimate before the next is examined.
    """
    deferred: list[Deferral] = []
    assignments: list[PlannedAssignment] = []

    up_loads = [ld for ld in loads if ld.node.status is NodeStatus.UP]
    if not up_loads:
        for job in ready_jobs:
            deferred.append(Deferral(job.id, DeferReason.ALL_NODES_DOWN))
        return DispatchPlan((), tuple(deferred))

    nodes = [ld.node for ld in up_loads]
    heaps: list[list[float]] = []
    free_now = 0
    for ld in up_loads:
        heap = [max(t, now) for t in ld.busy_until]
        spare = ld.node.capacity - len(heap)
        if spare > 0:
            heap.extend([now] * spare)
        heapq.heapify(heap)
        heaps.append(heap)
        free_now += sum(1 for t in heap if t <= now)

    committed = ZERO
    deadline = qos.deadline
    timemin = qos.optimization is Optimization.TIME_MIN

    for job in ready_jobs:
        if immediate and free_now <= 0:
            break
        est = job.est_cpu_s
        chosen = -1
        est_cost: Decimal | None = None

        if timemin:
            best_ect = float("inf")
            best_cost: Decimal | None = None
            for i, node in enumerate(nodes):
                ect = heaps[i][0] + est / node.speed
                if ect < best_ect:
                    chosen, best_ect, best_cost = i, ect, None
                elif ect == best_ect and chosen >= 0:
                    if best_cost is None:
                        best_cost = estimate_cost(est, nodes[chosen])
                    cost = estimate_cost(est, node)
                    if cost < best_cost or (cost == best_cost and node.id < nodes[chosen].id):
                        chosen, best_cost = i, cost
            if best_ect > deadline:
                deferred.append(Deferral(job.id, DeferReason.DEADLINE_GUARD))
                continue
            est_cost = best_cost if best_cost is not None else estimate_cost(est, nodes[chosen])
        else:
            best_key: tuple[Decimal, float, str] | None = None
            for i, node in enumerate(nodes):
                ect = heaps[i][0] + est / node.speed
                if ect > deadline:
                    continue
                key = (estimate_cost(est, node), ect, node.id)
                if best_key is None or key < best_key:
                    best_key, chosen = key, i
            if best_key is None:
                deferred.append(Deferral(job.id, DeferReason.DEADLINE_GUARD))
                continue
            est_cost = best_key[0]

        if est_cost > budget_remaining - committed:
            deferred.append(Deferral(job.id, DeferReason.BUDGET_GUARD))
            continue

        node = nodes[chosen]
        start = heapq.heappop(heaps[chosen])
        completion = start + est / node.speed
        heapq.heappush(heaps[chosen], completion)
        committed += est_cost

        if start <= now:
            free_now -= 1
            assignments.append(PlannedAssignment(job.id, node.id, start, completion, est_cost))
        elif immediate:
            deferred.append(Deferral(job.id, DeferReason.NO_CAPACITY))
        else:
            assignments.append(PlannedAssignment(job.id, node.id, start, completion, est_cost))

    return DispatchPlan(tuple(assignments), tuple(deferred))


def fast_forward(
    jobs: Sequence[Job], nodes: Sequence[GridNode], qos: QoSParams, now: float
) -> tuple[float, Decimal]:
    """Project the dispatch policy forward assuming estimates hold exactly.

    Replans at every completion batch, exactly as the live broker does under
    a virtual clock with no jitter and no failures, and returns (completion
    instant of the last job, total spend including costs already incurred).

    The deadline and budget guards are suspended for the projection: the
    point is to learn when the sweep would finish and what it would cost, so
    the caller can compare those against the QoS limits. With the guards off,
    any Up node eventually takes every job, so :class:`Stuck` is only raised
    when no node is usable at all.

    Running jobs are modeled as holding their assigned node for one full
    fresh estimate from ``now``; a running job whose node is unknown is
    assumed to take its raw estimate and cost nothing (advisory fallback).
    """
    unbounded = QoSParams(
        deadline=float("inf"), budget=qos.budget, optimization=qos.optimization
    )
    by_id = {n.id: n for n in nodes}
    spent = ZERO
    for j in jobs:
        spent += j.cost_incurred
    committed = ZERO
    busy: dict[str, list[float]] = {n.id: [] for n in nodes}
    running: list[tuple[float, str, str, Decimal]] = []

    for j in jobs:
        if j.state is not JobState.RUNNING:
            continue
        node = by_id.get(j.assigned_node or "")
        if node is not None:
            completion = now + estimate_runtime(j.est_cpu_s, node)
            cost = estimate_cost(j.est_cpu_s, node)
            busy[node.id].append(completion)
            heapq.heappush(running, (completion, j.id, node.id, cost))
        else:
            heapq.heappush(running, (now + j.est_cpu_s, j.id, "", ZERO))
            cost = ZERO
        committed += cost

    pending = {j.id: j for j in jobs if j.state is JobState.READY}
    order = sorted(pending)
    t = now
    last = now
    last_deferred: tuple[Deferral, ...] = ()

    while True:
        if pending:
            loads = [NodeLoad(n, tuple(busy[n.id])) for n in nodes]
            plan = plan_dispatch(
                (pending[jid] for jid in order),
                loads,
                unbounded,
                Decimal("Infinity"),
                t,
                immediate=True,
            )
            for a in plan.assignments:
                del pending[a.job_id]
                busy[a.node_id].append(a.completion)
                heapq.heappush(running, (a.completion, a.job_id, a.node_id, a.est_cost))
                committed += a.est_cost
            if plan.assignments:
                order = [jid for jid in order if jid in pending]
            last_deferred = plan.deferred

        if not running:
            if pending:
                raise Stuck(last_deferred, last, spent)
            break

        t = running[0][0]
        while running and running[0][0] == t:
            completion, _jid, node_id, cost = heapq.heappop(running)
            spent += cost
            committed -= cost
            if node_id:
                busy[node_id].remove(completion)
            last = completion

    return last, spent


def check_feasibility(
    exp: Experiment, nodes: Sequence[GridNode], now: float
) -> FeasibilityReport:
    """Judge whether the experiment's QoS is achievable from current state.

    Infeasible when the projection busts deadline or budget, or when jobs
    are permanently stuck (reported as time trouble: they will never finish).
    Marginal when the projection consumes over 90% of either headroom.
    """
    qos = exp.qos
    try:
        done_at, total = fast_forward(exp.jobs, nodes, qos, now)
    except Stuck as stuck:
        reasons = {d.reason for d in stuck.deferred}
        if reasons == {DeferReason.ALL_NODES_DOWN}:
            message = "no usable nodes"
        else:
            names = ", ".join(sorted(r.value for r in reasons))
            message = f"{len(stuck.deferred)} job(s) can never be placed ({names})"
        return FeasibilityReport(
            verdict=Verdict.INFEASIBLE,
            time_ok=False,
            budget_ok=True,
            est_completion=stuck.est_completion,
            est_cost=stuck.est_cost,
            message=message,
        )

    time_ok = done_at <= qos.deadline
    budget_ok = total <= qos.budget
    if not time_ok or not budget_ok:
        problems = []
        if not time_ok:
            problems.append(
                f"estimated completion {iso_utc(done_at)} is past the deadline"
            )
        if not budget_ok:
            problems.append(
                f"estimated cost {fmt_money(total)} G$ exceeds the budget"
            )
        verdict = Verdict.INFEASIBLE
        message = "; ".join(problems)
    else:
        tight = []
        if done_at - now > 0.9 * (qos.deadline - now):
            tight.append("time")
        if total > qos.budget * Decimal("0.9"):
            tight.append("budget")
        if tight:
            verdict = Verdict.MARGINAL
            message = f"over 90% of {' and '.join(tight)} headroom consumed"
        else:
            verdict = Verdict.FEASIBLE
            message = (
                f"estimated completion {iso_utc(done_at)}, "
                f"cost {fmt_money(total)} G$"
            )
    return FeasibilityReport(
        verdict=verdict,
        time_ok=time_ok,
        budget_ok=budget_ok,
        est_completion=done_at,
        est_cost=total,
        message=message,
    )
