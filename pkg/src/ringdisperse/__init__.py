"""Deterministic simulator and verification harness for silent-robot
dispersion on an oriented ring."""

from .engine import RunOutcome, RunResult, Trace, run
from .protocol import Ruleset
from .robots import RobotState, Status, max_label_bits
from .scenario import (
    Scenario,
    gen_chain,
    gen_multi_source,
    gen_single_source,
    make_scenario,
    parse_scenario,
    render_scenario,
)
from .verify import (
    Violation,
    check_invariants,
    displacement_bound,
    exhaustive_search,
    minimize_scenario,
    validate_trace,
)

__all__ = [
    "RunOutcome",
    "RunResult",
    "Trace",
    "run",
    "Ruleset",
    "RobotState",
    "Status",
    "max_label_bits",
    "Scenario",
    "gen_chain",
    "gen_multi_source",
    "gen_single_source",
    "make_scenario",
    "parse_scenario",
    "render_scenario",
    "Violation",
    "check_invariants",
    "displacement_bound",
    "exhaustive_search",
    "minimize_scenario",
    "validate_trace",
]
