"""Robot identity, label bit access, statuses and per-robot protocol state."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Status(enum.Enum):
    LEADER_ELECTION = "leaderelection"
    ACTIVE_MERGE = "activemerge"
    ACTIVE_DISPERSE = "activedisperse"
    PASSIVE = "passive"
    WAIT = "wait"
    JUMP = "jump"
    IDLE = "idle"

    def __repr__(self) -> str:  # compact in traces and diffs
        return self.value


# Allowed status transitions.  Leader election feeds the merge, the merge
# feeds dispersal, and the four dispersal statuses cycle among themselves
# or retire to idle.  No edge ever leads back to election or merging.
DISPERSAL_STATUSES = frozenset(
    {Status.ACTIVE_DISPERSE, Status.PASSIVE, Status.WAIT, Status.JUMP}
)

LEGAL_TRANSITIONS: frozenset[tuple[Status, Status]] = frozenset(
    {(Status.LEADER_ELECTION, Status.ACTIVE_MERGE),
     (Status.ACTIVE_MERGE, Status.ACTIVE_DISPERSE)}
    | {(a, b) for a in DISPERSAL_STATUSES for b in DISPERSAL_STATUSES}
    | {(a, Status.IDLE) for a in DISPERSAL_STATUSES}
)


class IllegalStatusTransition(Exception):
    """A pending status update violates the status transition graph."""


def max_label_bits(max_label: int) -> int:
    """Shared padded label length: floor(log2 L) + 1, and 1 when L = 0."""
    if max_label < 0:
        raise ValueError("max label must be non-negative")
    return max(1, max_label.bit_length())


def bit_at(label: int, i: int, max_size: int) -> int:
    """i-th least-significant bit of the zero-padded binary label, 1-based."""
    if not 1 <= i <= max_size:
        raise ValueError(f"bit index {i} outside [1, {max_size}]")
    return (label >> (i - 1)) & 1


@dataclass
class RobotState:
    """One robot's protocol variables.

    ``le_bit`` is the label-bit cursor for leader election (1..max_size);
    ``disp_bit`` is the separate cursor for the dispersal splits, where
    max_size + 1 means exhausted (the robot then behaves as if its current
    bit were 0).  ``obs_log`` collects this phase's observations, indexed
    by round-in-phase, and is cleared at every phase boundary.
    """

    label: int
    max_size: int
    status: Status = Status.LEADER_ELECTION
    pending_status: Status | None = None
    leader: bool = False
    proceed: int = 0        # {0,1,2}; persists across phases
    move_var: int = 0       # {0,1,2}; reset to 0 at each phase boundary
    start: int = 0
    settle: int = 0
    advance: int = 0
    le_bit: int = 1
    disp_bit: int = 1
    net_disp: int = 0       # net displacement since dispersal began
    obs_log: list = field(default_factory=list)

    def current_disp_bit(self) -> int:
        """Bit under the dispersal cursor; 0 once the cursor is exhausted."""
        if self.disp_bit > self.max_size:
            return 0
        return bit_at(self.label, self.disp_bit, self.max_size)

    def advance_disp_bit(self) -> None:
        self.disp_bit = min(self.disp_bit + 1, self.max_size + 1)

    def snapshot(self) -> tuple:
        """Hashable view of the persistent fields (excludes obs_log)."""
        return (
            self.status,
            self.pending_status,
            self.leader,
            self.proceed,
            self.move_var,
            self.start,
            self.settle,
            self.advance,
            self.le_bit,
            self.disp_bit,
            self.net_disp,
        )


def apply_pending_status(state: RobotState) -> None:
    """Commit the pending status at a phase boundary.

    Resets move_var and clears the observation log; proceed, start,
    settle, advance and leader persist across phases.
    """
    if state.pending_status is not None:
        target = state.pending_status
        if target is not state.status and (state.status, target) not in LEGAL_TRANSITIONS:
            raise IllegalStatusTransition(
                f"robot {state.label}: {state.status.value} -> {target.value}"
            )
        state.status = target
        state.pending_status = None
    state.move_var = 0
    state.obs_log.clear()
