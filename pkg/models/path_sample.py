import bisect
from typing import List

import pandas as pd
from pydantic import BaseModel, ConfigDict

from models.partition import StructuredPartition, UnstructuredPartition

EVENT_KINDS = (
    "fast-merge",
    "fast-move",
    "simple-collision",
    "extinction-collision",
    "instantaneous-scatter",
    "merger",
)


class PathEvent(BaseModel):
    """One recorded transition of a simulated genealogy."""

    model_config = ConfigDict(frozen=True)

    time: float
    kind: str
    state: StructuredPartition  # state right after the event
    same_state: bool = False  # ghost event: the partition did not change


class PathSample(BaseModel):
    """A simulated trajectory: initial state, time-ordered events, terminal time.

    Events of one composite slow step (collision plus scatter) share a time stamp,
    so times are non-decreasing.
    """

    model_config = ConfigDict(frozen=True)

    initial: StructuredPartition
    events: List[PathEvent] = []
    terminal_time: float

    @property
    def n(self) -> int:
        return self.initial.n

    @property
    def final_state(self) -> StructuredPartition:
        return self.events[-1].state if self.events else self.initial

    def state_at(self, t: float) -> StructuredPartition:
        """State after every event with time <= t."""
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        times = [event.time for event in self.events]
        index = bisect.bisect_right(times, t)
        return self.events[index - 1].state if index else self.initial

    def unstructured_at(self, t: float) -> UnstructuredPartition:
        state = self.state_at(t)
        return UnstructuredPartition.model_construct(n=state.n, blocks=state.blocks)

    def block_count_at(self, t: float) -> int:
        return self.state_at(t).block_count

    def mrca_time(self) -> float:
        """First time a single block remains, or inf if never reached."""
        if self.initial.block_count == 1:
            return 0.0
        for event in self.events:
            if event.state.block_count == 1:
                return event.time
        return float("inf")

    def to_frame(self) -> pd.DataFrame:
        rows = [{"time": 0.0, "kind": "initial", "partition": self.initial.to_text()}]
        rows += [{"time": e.time, "kind": e.kind, "partition": e.state.to_text()} for e in self.events]
        return pd.DataFrame(rows, columns=["time", "kind", "partition"])

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)
