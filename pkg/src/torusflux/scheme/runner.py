"""Drive the coupled scheme to its horizon"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Protocol, Sequence

from torusflux.core.errors import TorusfluxError
from torusflux.core.state import STATUS_COMPLETE, STATUS_PARTIAL
from torusflux.scheme.params import SchemeState
from torusflux.scheme.stepping import picard_coupled_step

logger = logging.getLogger(__name__)

# relative slack when comparing times against the horizon and snapshot times
TIME_SLACK = 1e-9


class Monitor(Protocol):
    """Hook invoked by `run` around every step"""

    def start(self, state: SchemeState) -> Optional[object]:
        ...

    def observe(self, state: SchemeState) -> Optional[object]:
        ...

    def finish(self, state: SchemeState) -> Optional[object]:
        ...


SnapshotHook = Callable[[SchemeState, float], None]


@dataclass
class Trajectory:
    """Outcome of a run

    Attributes:
        initial: State at the start
        final: Last state reached
        records: Records returned by the monitors, in emission order
        status: "complete" or "partial"
        error: Message of the error that stopped a partial run
    """

    initial: SchemeState
    final: SchemeState
    records: List[object] = field(default_factory=list)
    status: str = STATUS_COMPLETE
    error: Optional[str] = None

    @property
    def steps(self) -> int:
        return self.final.step - self.initial.step

    @property
    def complete(self) -> bool:
        return self.status == STATUS_COMPLETE


def _collect(records: List[object], result: Optional[object]) -> None:
    if result is not None:
        records.append(result)


def run(
    initial: SchemeState,
    monitors: Sequence[Monitor] = (),
    snapshot_times: Sequence[float] = (),
    on_snapshot: Optional[SnapshotHook] = None,
) -> Trajectory:
    """Step from initial.t to params.t_end

    The last step is shortened to land exactly on t_end. Monitors see the
    initial state, every later state and the final one; each may return a
    record. A scheme or monitor error ends the run early with a partial
    trajectory instead of raising.

    Args:
        initial: Starting state
        monitors: Diagnostic hooks
        snapshot_times: Times at which on_snapshot fires (first state at
            or past each time)
        on_snapshot: Callback receiving (state, requested time)

    Returns:
        Trajectory with the final state and collected records
    """
    t_end = initial.params.t_end
    slack = TIME_SLACK * max(1.0, abs(t_end))
    if t_end <= initial.t + slack:
        return Trajectory(initial=initial, final=initial)

    pending = sorted(t for t in snapshot_times if t >= initial.t - slack)
    records: List[object] = []
    state = initial

    def snapshots_due(current: SchemeState) -> None:
        while pending and current.t >= pending[0] - slack:
            requested = pending.pop(0)
            if on_snapshot is not None:
                on_snapshot(current, requested)

    try:
        for monitor in monitors:
            _collect(records, monitor.start(state))
        snapshots_due(state)
        while state.t < t_end - slack:
            remaining = t_end - state.t
            dt = state.params.dt
            last = remaining <= dt * (1.0 + TIME_SLACK)
            state = picard_coupled_step(state, remaining if last else dt)
            if last:
                state = replace(state, t=t_end)
            for monitor in monitors:
                _collect(records, monitor.observe(state))
            snapshots_due(state)
    except TorusfluxError as e:
        logger.warning("run stopped at t = %.6g after %d steps: %s", state.t, state.step, e)
        for monitor in monitors:
            try:
                _collect(records, monitor.finish(state))
            except TorusfluxError as finish_error:
                logger.warning("monitor could not record the final state: %s", finish_error)
        return Trajectory(initial=initial, final=state, records=records, status=STATUS_PARTIAL, error=str(e))

    for monitor in monitors:
        _collect(records, monitor.finish(state))
    logger.debug("run reached t = %.6g in %d steps", state.t, state.step)
    return Trajectory(initial=initial, final=state, records=records)
