"""Shared helpers for driving the machine in tests."""

from gmesim import Scripted, SystemState, Workload, run, step
from gmesim.machine import CS_ENTER, DOORWAY_COMPLETE, EXIT_COMPLETE


def drive(state, pid, until, pids=None, limit=100_000):
    """Step pid until the predicate accepts an event; returns that event."""
    for _ in range(limit):
        ev = step(state, pid)
        if pids is not None:
            pids.append(pid)
        if until(ev):
            return ev
    raise AssertionError(f"drive stalled on P{pid}")


def until_marker(marker):
    return lambda ev: marker in ev.markers


def doorway_done(ev):
    return DOORWAY_COMPLETE in ev.markers


def entered_cs(ev):
    return CS_ENTER in ev.markers


def finished(ev):
    return EXIT_COMPLETE in ev.markers


def run_scripted(spec, workload, pids, step_cap=200_000):
    state = SystemState(spec, workload)
    return run(state, Scripted(pids), step_cap=step_cap)


def run_to_completion(spec, workload, schedule, step_cap=500_000):
    state = SystemState(spec, workload)
    result = run(state, schedule, step_cap=step_cap)
    assert result.completed, "run did not finish"
    return result


def distinct_sessions(n, invocations=1, cs_steps=1):
    return Workload.uniform(n, lambda pid: pid, invocations=invocations,
                            cs_steps=cs_steps)
