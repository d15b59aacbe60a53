from decimal import Decimal

import pytest

from gridsteer.model import (
    Experiment,
    ExperimentAction,
    ExperimentState,
    EventKind,
    GridNode,
    InvalidTransition,
    Job,
    JobEvent,
    JobState,
    Optimization,
    QoSParams,
    aggregate_status,
    apply_experiment_transition,
    apply_job_transition,
)
from gridsteer.money import ZERO

NODE = GridNode(id="n1", server_name="n1", hostname="n1.test", rate=3.0, speed=2.0)
QOS = QoSParams(deadline=1000.0, budget=Decimal("100.00"), optimization=Optimization.TIME_MIN)

# The five legal (state, event) rows and what they must produce.
VALID_ROWS = {
    (JobState.READY, EventKind.DISPATCH): JobState.RUNNING,
    (JobState.RUNNING, EventKind.COMPLETE): JobState.COMPLETED,
    (JobState.RUNNING, EventKind.FAIL): JobState.FAILED,
    (JobState.RUNNING, EventKind.ABORT_REQUEUE): JobState.READY,
    (JobState.FAILED, EventKind.RESTART): JobState.READY,
}


def mk_job(state: JobState) -> Job:
    node = "n1" if state in (JobState.RUNNING, JobState.COMPLETED) else None
    return Job(id="j1", name="t", est_cpu_s=100.0, state=state, assigned_node=node, attempts=1)


def mk_event(kind: EventKind) -> JobEvent:
    if kind is EventKind.COMPLETE:
        return JobEvent(kind, at=50.0, node="n1", cpu_seconds=100.0)
    if kind in (EventKind.DISPATCH, EventKind.FAIL):
        return JobEvent(kind, at=50.0, node="n1")
    return JobEvent(kind, at=50.0)


@pytest.mark.parametrize("state", list(JobState))
@pytest.mark.parametrize("kind", list(EventKind))
def test_job_fsm_exhaustive(state, kind):
    job = mk_job(state)
    event = mk_event(kind)
    if (state, kind) in VALID_ROWS:
        out = apply_job_transition(job, event, node=NODE)
        assert out.state is VALID_ROWS[(state, kind)]
    else:
        with pytest.raises(InvalidTransition):
            apply_job_transition(job, event, node=NODE)


def test_dispatch_postconditions():
    job = Job(id="j1", name="t", est_cpu_s=10.0, remarks="failure")
    out = apply_job_transition(job, JobEvent(EventKind.DISPATCH, at=0.0, node="n1"))
    assert out.state is JobState.RUNNING
    assert out.assigned_node == "n1"
    assert out.attempts == 1
    assert out.remarks == ""  # cleared on each fresh dispatch
    assert out.cost_incurred == ZERO


def test_complete_prices_wall_time_on_the_node():
    job = mk_job(JobState.RUNNING)
    out = apply_job_transition(
        job, JobEvent(EventKind.COMPLETE, at=50.0, node="n1", cpu_seconds=100.0), node=NODE
    )
    # 100 cpu-s at speed 2 -> 50 wall seconds; 50 * 3.0 G$/s
    assert out.execution_time == 50.0
    assert out.cost_incurred == Decimal("150.00")
    assert out.assigned_node == "n1"


def test_complete_requires_matching_node():
    job = mk_job(JobState.RUNNING)
    ev = JobEvent(EventKind.COMPLETE, at=50.0, node="n1", cpu_seconds=100.0)
    with pytest.raises(ValueError):
        apply_job_transition(job, ev, node=None)
    other = GridNode(id="n2", server_name="x", hostname="x", rate=1.0, speed=1.0)
    with pytest.raises(ValueError):
        apply_job_transition(job, ev, node=other)


def test_abort_requeue_keeps_attempts_clears_node():
    job = mk_job(JobState.RUNNING)
    out = apply_job_transition(job, JobEvent(EventKind.ABORT_REQUEUE, at=1.0))
    assert out.state is JobState.READY
    assert out.assigned_node is None
    assert out.attempts == 1


def test_event_construction_guards():
    with pytest.raises(ValueError):
        JobEvent(EventKind.COMPLETE, at=0.0, node="n1")  # no cpu_seconds
    with pytest.raises(ValueError):
        JobEvent(EventKind.COMPLETE, at=0.0, node="n1", cpu_seconds=0.0)
    with pytest.raises(ValueError):
        JobEvent(EventKind.DISPATCH, at=0.0)  # no node


def mk_exp(state: ExperimentState, job_states=(JobState.READY,)) -> Experiment:
    jobs = tuple(
        Job(
            id=f"j{i}",
            name="t",
            est_cpu_s=10.0,
            state=s,
            assigned_node="n1" if s is JobState.RUNNING else None,
        )
        for i, s in enumerate(job_states, 1)
    )
    return Experiment(id="e1", name="exp", qos=QOS, jobs=jobs, state=state)


EXP_VALID = {
    (ExperimentState.CONFIGURED, ExperimentAction.START): ExperimentState.RUNNING,
    (ExperimentState.STOPPED, ExperimentAction.START): ExperimentState.RUNNING,
    (ExperimentState.RUNNING, ExperimentAction.STOP): ExperimentState.STOPPED,
    (ExperimentState.CONFIGURED, ExperimentAction.SHUTDOWN): ExperimentState.SHUTDOWN,
    (ExperimentState.RUNNING, ExperimentAction.SHUTDOWN): ExperimentState.SHUTDOWN,
    (ExperimentState.STOPPED, ExperimentAction.SHUTDOWN): ExperimentState.SHUTDOWN,
}


@pytest.mark.parametrize("state", list(ExperimentState))
@pytest.mark.parametrize("action", list(ExperimentAction))
def test_experiment_fsm_exhaustive(state, action):
    exp = mk_exp(state)
    if (state, action) in EXP_VALID:
        out = apply_experiment_transition(exp, action, now=5.0)
        assert out.state is EXP_VALID[(state, action)]
    else:
        with pytest.raises(InvalidTransition):
            apply_experiment_transition(exp, action, now=5.0)


def test_start_stamps_started_at_once():
    exp = mk_exp(ExperimentState.CONFIGURED)
    running = apply_experiment_transition(exp, ExperimentAction.START, now=7.0)
    assert running.started_at == 7.0
    stopped = apply_experiment_transition(running, ExperimentAction.STOP, now=9.0)
    resumed = apply_experiment_transition(stopped, ExperimentAction.START, now=11.0)
    assert resumed.started_at == 7.0  # original start time survives stop/start


def test_stop_requeues_running_jobs():
    exp = mk_exp(ExperimentState.RUNNING, (JobState.RUNNING, JobState.READY, JobState.COMPLETED))
    out = apply_experiment_transition(exp, ExperimentAction.STOP, now=5.0)
    assert [j.state for j in out.jobs] == [JobState.READY, JobState.READY, JobState.COMPLETED]
    assert out.jobs[0].assigned_node is None


def test_shutdown_fails_running_jobs_with_remark():
    exp = mk_exp(ExperimentState.RUNNING, (JobState.RUNNING, JobState.FAILED, JobState.READY))
    out = apply_experiment_transition(exp, ExperimentAction.SHUTDOWN, now=5.0)
    assert out.jobs[0].state is JobState.FAILED
    assert out.jobs[0].remarks == "shutdown"
    assert out.jobs[1].state is JobState.FAILED  # untouched
    assert out.jobs[2].state is JobState.READY


def test_aggregate_status_counts_and_order():
    exp = mk_exp(
        ExperimentState.RUNNING,
        (JobState.READY, JobState.RUNNING, JobState.COMPLETED, JobState.FAILED, JobState.READY),
    )
    nodes = [
        GridNode(id="zz", server_name="z", hostname="z", rate=1.0, speed=1.0),
        GridNode(id="aa", server_name="a", hostname="a", rate=1.0, speed=1.0),
    ]
    st = aggregate_status(exp, nodes, now=400.0)
    assert st.counts == {
        JobState.READY: 2,
        JobState.RUNNING: 1,
        JobState.COMPLETED: 1,
        JobState.FAILED: 1,
    }
    assert st.time_remaining_s == 600.0
    assert [n.id for n in st.nodes] == ["aa", "zz"]
