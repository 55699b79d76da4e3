import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tcpbp.queueing import (
    PLAIN,
    GossipTable,
    PacketRecord,
    admit_or_drop,
    apply_slot_dynamics,
    gossip_update,
)
from tcpbp.sim import Simulation
from tcpbp.topology import preset


@pytest.mark.parametrize("old,dep,internal,external,new", [
    (5, 3, 2, 1, 5),
    (2, 5, 0, 0, 0),
    (0, 0, 0, 4, 4),
])
def test_slot_dynamics(old, dep, internal, external, new):
    assert apply_slot_dynamics(old, dep, internal, external) == new


def test_slot_dynamics_rejects_negative_counts():
    with pytest.raises(ValueError):
        apply_slot_dynamics(1, -1, 0, 0)


@given(st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 50), st.integers(0, 50))
def test_slot_dynamics_never_negative_and_bounded(old, dep, a, b):
    new = apply_slot_dynamics(old, dep, a, b)
    assert new >= 0
    assert new >= old - dep + a + b
    assert new <= old + a + b


def test_admit_below_capacity():
    assert admit_or_drop([9, 10], 20, 0).admitted


def test_drop_from_longest_queue():
    decision = admit_or_drop([7, 13], 20, 0)
    assert decision.victim == 1
    assert decision.admitted  # the arrival takes the freed space


def test_drop_tie_goes_to_lowest_flow():
    decision = admit_or_drop([10, 10], 20, 1)
    assert decision.victim == 0


def test_arrival_is_the_victim_when_its_queue_is_longest():
    decision = admit_or_drop([13, 7], 20, 0)
    assert decision.victim == 0 and not decision.admitted


def test_gossip_instantaneous():
    table = GossipTable(1, 2, staleness=0)
    for slot in range(5):
        backlog = np.array([slot, 2 * slot])
        gossip_update(table, 0, slot, backlog, transmitted=False)
        assert table.view(0).tolist() == backlog.tolist()


def test_gossip_silent_node_is_refreshed_every_staleness_slots():
    table = GossipTable(1, 1, staleness=5)
    refreshed = [s for s in range(1, 21)
                 if gossip_update(table, 0, s, np.array([s]), transmitted=False)]
    assert refreshed == [5, 10, 15, 20]
    assert all(b - a <= 5 for a, b in zip([0] + refreshed, refreshed))


def test_gossip_short_silence_keeps_recent_value():
    table = GossipTable(1, 1, staleness=5)
    gossip_update(table, 0, 10, np.array([4]), transmitted=True)
    for s in range(11, 14):
        gossip_update(table, 0, s, np.array([s]), transmitted=False)
    assert table.age(0, 13) <= 3
    assert table.view(0).tolist() == [4]


def test_transmission_refreshes_immediately():
    table = GossipTable(1, 1, staleness=100)
    assert gossip_update(table, 0, 1, np.array([3]), transmitted=True)
    assert table.view(0).tolist() == [3]


def test_engine_gossip_reports_are_past_true_backlogs():
    cfg = preset("diamond").replace(gossip_staleness=5, horizon_slots=400)
    sim = Simulation(cfg)
    history = []
    for _ in range(cfg.horizon_slots):
        sim.step()
        history.append(sim.U.copy())
        t = sim.slot - 1
        g = sim.gossip
        for i in range(sim.N):
            age = t - int(g.reported_at[i])
            assert 0 <= age < cfg.gossip_staleness
            seen = g.reported[i].tolist()
            # before its first refresh a node still advertises the empty start state
            assert seen == history[t - age][i].tolist() or (g.reported_at[i] == 0 and not any(seen))


def test_packet_record_kinds():
    assert not PacketRecord(0, PLAIN, 0).coded
    assert PacketRecord(0, 3, 0).coded
