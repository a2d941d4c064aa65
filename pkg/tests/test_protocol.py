"""Round-rule unit tests, including the hand-derived phase oracles."""

import pytest

from ringdisperse.engine import Engine
from ringdisperse.perception import Observation
from ringdisperse.protocol import (
    EFFECTIVE_PARTICIPATION,
    PAPER_PARTICIPATION,
    PARTICIPATION_CONFLICTS,
    PORT_ONE,
    PORT_ZERO,
    Ruleset,
    step,
)
from ringdisperse.robots import RobotState, Status
from ringdisperse.scenario import make_scenario


def obs(alone=False, increase=False, decrease=False, rip=1):
    return Observation(alone, increase, decrease, rip)


def robot(**kw):
    base = dict(label=5, max_size=3)
    base.update(kw)
    return RobotState(**base)


def phase_engine(n, max_label, robots_spec, ruleset=Ruleset.REPAIRED):
    """Engine with injected robot statuses, as if mid-protocol.

    robots_spec: label -> (node, status, extra state fields).
    """
    scenario = make_scenario(n, max_label, [(lab, spec[0]) for lab, spec in robots_spec.items()])
    eng = Engine(scenario, ruleset)
    for label, (_, status, extra) in robots_spec.items():
        state = eng.robots[label]
        state.status = status
        for field_name, value in extra.items():
            setattr(state, field_name, value)
    eng.trace.phase_snapshots.clear()
    eng._snapshot_phase()
    return eng


def test_idle_robot_stays():
    st = robot(status=Status.IDLE)
    assert step(st, obs(rip=13), 13, Ruleset.REPAIRED).port is None


def test_passive_stays_in_round_13():
    st = robot(status=Status.PASSIVE)
    action = step(st, obs(rip=13), 13, Ruleset.REPAIRED)
    assert action.port is None
    assert st.pending_status is None


def test_wait_turns_passive_in_round_17():
    st = robot(status=Status.WAIT)
    action = step(st, obs(rip=17), 17, Ruleset.REPAIRED)
    assert action.port is None
    assert st.pending_status is Status.PASSIVE


def test_wait_never_moves():
    st = robot(status=Status.WAIT)
    for rip in range(1, 20):
        assert step(st, obs(rip=rip), rip, Ruleset.REPAIRED).port is None


def test_singleton_elects_itself_in_round_1():
    st = robot(status=Status.LEADER_ELECTION)
    action = step(st, obs(alone=True, rip=1), 1, Ruleset.REPAIRED)
    assert action.port is None
    assert st.leader


def test_leader_is_gated_outside_its_rounds():
    st = robot(status=Status.LEADER_ELECTION, leader=True)
    action = step(st, obs(rip=1), 1, Ruleset.REPAIRED)
    assert action.port is None
    assert st.proceed == 0  # bit processing skipped entirely


def test_retired_candidate_is_inert():
    # proceed=2 marks a disqualified candidate; it must stay put in
    # every later election phase, including round 3
    st = robot(status=Status.LEADER_ELECTION, proceed=2)
    for rip in range(1, 6):
        action = step(st, obs(rip=rip, decrease=True), rip, Ruleset.REPAIRED)
        if rip == 5:
            continue  # bookkeeping round, no move either way
        assert action.port is None, f"moved in round {rip}"


def test_fresh_informer_returns_in_round_3():
    st = robot(status=Status.LEADER_ELECTION, proceed=0)
    action = step(st, obs(decrease=True, rip=2), 2, Ruleset.REPAIRED)
    assert action.port == PORT_ONE
    assert st.proceed == 2
    action = step(st, obs(rip=3), 3, Ruleset.REPAIRED)
    assert action.port == PORT_ZERO


def test_literal_round3_drops_candidacy_without_increase():
    st = robot(status=Status.LEADER_ELECTION, proceed=1)
    action = step(st, obs(increase=False, rip=3), 3, Ruleset.LITERAL)
    assert action.port == PORT_ZERO
    assert st.proceed == 0


def test_repaired_round3_keeps_candidacy():
    st = robot(status=Status.LEADER_ELECTION, proceed=1)
    action = step(st, obs(increase=False, rip=3), 3, Ruleset.REPAIRED)
    assert action.port == PORT_ZERO
    assert st.proceed == 1


def test_participation_table_conflicts_are_annotated():
    for status, rip in PARTICIPATION_CONFLICTS:
        assert (rip in PAPER_PARTICIPATION[status]) != (
            rip in EFFECTIVE_PARTICIPATION[status]
        )
    assert 14 in EFFECTIVE_PARTICIPATION[Status.JUMP]
    assert 14 not in EFFECTIVE_PARTICIPATION[Status.WAIT]


def test_all_zero_bits_leaves_group_still():
    # both labels have bit 1 = 0, so the whole election phase is quiet
    eng = phase_engine(5, 7, {
        2: (0, Status.LEADER_ELECTION, {}),
        4: (0, Status.LEADER_ELECTION, {}),
    })
    eng.run_phase()
    assert eng.moves_in_phase == 0
    assert eng.robots[2].proceed == 0 and eng.robots[4].proceed == 0


def test_split_on_empty_successor():
    # labels 1 (bit 1) and 2 (bit 0) disperse: the mover settles one ahead,
    # the stayer informs, returns, and turns passive
    eng = phase_engine(5, 3, {
        1: (0, Status.ACTIVE_DISPERSE, {}),
        2: (0, Status.ACTIVE_DISPERSE, {}),
    })
    eng.run_phase()
    assert eng.placement.by_robot == {1: 1, 2: 0}
    assert eng.robots[1].status is Status.ACTIVE_DISPERSE
    assert eng.robots[2].status is Status.PASSIVE
    moves = {(r.round_in_phase, label): port
             for r in eng.trace.records for (label, _, _, port) in r.moves}
    assert moves == {(13, 1): 1, (14, 2): 1, (15, 2): 0}


def test_all_ones_split_returns_and_goes_passive():
    # labels 1 and 3 share bit 1 = 1: everyone moves, nobody informs,
    # everyone returns and turns passive
    eng = phase_engine(5, 3, {
        1: (0, Status.ACTIVE_DISPERSE, {}),
        3: (0, Status.ACTIVE_DISPERSE, {}),
    })
    eng.run_phase()
    assert eng.placement.by_robot == {1: 0, 3: 0}
    assert eng.robots[1].status is Status.PASSIVE
    assert eng.robots[3].status is Status.PASSIVE


def test_split_onto_occupied_node_waits_and_displaces():
    # active pair at node 0 splits onto a passive robot at node 1: the
    # mover ends waiting, the passive occupant vacates and jumps back
    eng = phase_engine(6, 7, {
        1: (0, Status.ACTIVE_DISPERSE, {}),
        2: (0, Status.ACTIVE_DISPERSE, {}),
        6: (1, Status.PASSIVE, {}),
    })
    eng.run_phase()
    assert eng.placement.by_robot == {1: 1, 2: 0, 6: 1}
    assert eng.robots[1].status is Status.WAIT
    assert eng.robots[6].status is Status.JUMP
    assert eng.robots[2].status is Status.PASSIVE


def test_wait_passive_jump_cycle_moves_one_node():
    # a displaced robot waits, turns passive, is displaced again and jumps:
    # net movement across the three phases is exactly one node
    eng = phase_engine(6, 7, {
        6: (1, Status.WAIT, {}),
        1: (0, Status.PASSIVE, {}),
        2: (0, Status.PASSIVE, {}),
    })
    eng.run_phase()  # wait phase: 6 stays at node 1
    assert eng.placement.by_robot[6] == 1
    assert eng.robots[6].status is Status.PASSIVE
    disp_bit_before = eng.robots[6].disp_bit
    eng.run_phase()  # passive phase: 1 splits onto node 1; 6 vacates and jumps back
    assert eng.placement.by_robot[6] == 1
    assert eng.robots[6].status is Status.JUMP
    assert eng.robots[1].status is Status.WAIT
    eng.run_phase()  # jump phase: 6 advances one node and finds it empty
    assert eng.placement.by_robot[6] == 2
    assert eng.robots[6].status is Status.ACTIVE_DISPERSE
    assert eng.robots[6].disp_bit == disp_bit_before  # jump never reads bits


def test_jump_onto_empty_node_reactivates():
    eng = phase_engine(5, 3, {2: (0, Status.JUMP, {})})
    eng.run_phase()
    assert eng.placement.by_robot == {2: 1}
    assert eng.robots[2].status is Status.ACTIVE_DISPERSE


def test_lone_rear_robot_settles_and_idles():
    # alone with nothing behind: arm the timer one phase, then settle,
    # visit the successor and retire
    eng = phase_engine(5, 3, {2: (0, Status.ACTIVE_DISPERSE, {})})
    eng.run_phase()
    assert eng.robots[2].start == 1
    assert eng.robots[2].status is Status.PASSIVE
    eng.run_phase()  # passive interlude
    assert eng.robots[2].status is Status.ACTIVE_DISPERSE
    eng.run_phase()
    assert eng.robots[2].status is Status.IDLE
    assert eng.placement.by_robot == {2: 0}
    moves = {(r.round_in_phase): port
             for r in eng.trace.records[38:] for (_, _, _, port) in r.moves}
    assert moves == {18: 1, 19: 0}  # the announcement visit


def test_displaced_robot_does_not_self_retire():
    # repaired rules: a robot that has moved since dispersal began must
    # wait for its predecessor's announcement instead of self-arming
    st = robot(status=Status.ACTIVE_DISPERSE, net_disp=1)
    step(st, obs(alone=True, rip=13), 13, Ruleset.REPAIRED)
    assert st.start == 0
    st_literal = robot(status=Status.ACTIVE_DISPERSE, net_disp=1)
    step(st_literal, obs(alone=True, rip=13), 13, Ruleset.LITERAL)
    assert st_literal.start == 1


def test_announced_robot_settles_wherever_it_is():
    st = robot(status=Status.ACTIVE_DISPERSE, net_disp=3, start=1)
    step(st, obs(alone=True, rip=13), 13, Ruleset.REPAIRED)
    assert st.settle == 1


def test_passive_hears_retirement_announcement():
    st = robot(status=Status.PASSIVE)
    step(st, obs(increase=True, rip=19), 19, Ruleset.REPAIRED)
    assert st.start == 1


def test_leader_probe_rounds():
    st = robot(status=Status.ACTIVE_DISPERSE, leader=True)
    assert step(st, obs(alone=False, rip=9), 9, Ruleset.REPAIRED).port == PORT_ONE
    assert st.advance == 1
    assert step(st, obs(alone=True, rip=10), 10, Ruleset.REPAIRED).port == PORT_ONE
    assert step(st, obs(alone=True, rip=11), 11, Ruleset.REPAIRED).port == PORT_ZERO
    assert st.advance == 0


def test_leader_never_runs_late_rounds():
    st = robot(status=Status.ACTIVE_DISPERSE, leader=True, settle=1)
    for rip in (12, 13, 14, 15, 16, 17, 18, 19):
        action = step(st, obs(alone=True, increase=True, decrease=True, rip=rip),
                      rip, Ruleset.REPAIRED)
        assert action.port is None
    assert st.pending_status is None


def test_retreat_detection_literal_misses_early_arrival():
    # the foreign leader lands at the end of round 10; only the latched
    # window notices by round 12
    log = [obs(rip=10), obs(increase=True, rip=11), obs(rip=12)]
    st_rep = robot(status=Status.ACTIVE_DISPERSE)
    st_rep.obs_log.extend(log)
    action = step(st_rep, obs(rip=12), 12, Ruleset.REPAIRED)
    assert action.port == PORT_ZERO
    assert st_rep.pending_status is Status.PASSIVE

    st_lit = robot(status=Status.ACTIVE_DISPERSE)
    st_lit.obs_log.extend(log)
    action = step(st_lit, obs(rip=12), 12, Ruleset.LITERAL)
    assert action.port is None
    assert st_lit.pending_status is None


def test_merge_follow_and_stop_precedence():
    # stop (leader returned) wins over follow (leader departed earlier)
    st = robot(status=Status.ACTIVE_MERGE)
    st.obs_log.extend([obs(rip=6), obs(decrease=True, rip=7), obs(increase=True, rip=8)])
    action = step(st, obs(increase=True, rip=8), 8, Ruleset.REPAIRED)
    assert action.port is None
    assert st.pending_status is Status.ACTIVE_DISPERSE


def test_merge_follow_on_departure():
    st = robot(status=Status.ACTIVE_MERGE)
    st.obs_log.extend([obs(rip=6), obs(decrease=True, rip=7), obs(rip=8)])
    action = step(st, obs(rip=8), 8, Ruleset.REPAIRED)
    assert action.port == PORT_ONE
    assert st.pending_status is None


def test_single_group_merges_in_one_phase():
    eng = phase_engine(5, 3, {
        1: (0, Status.ACTIVE_MERGE, {"leader": True}),
        2: (0, Status.ACTIVE_MERGE, {}),
    })
    eng.run_phase()
    assert eng.placement.by_robot == {1: 0, 2: 0}
    assert eng.robots[1].status is Status.ACTIVE_DISPERSE
    assert eng.robots[2].status is Status.ACTIVE_DISPERSE
