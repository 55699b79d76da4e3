import dataclasses
import json

import pytest

from tcpbp.topology import (
    PRESETS,
    FlowSpec,
    KPolicy,
    Link,
    NetworkGraph,
    ScenarioConfig,
    Transport,
    admissible_matrix,
    flows_through,
    hops_from,
    hops_to,
    load_scenario,
    preset,
    save_scenario,
    validate,
)


def test_onehop_downlink_shape():
    cfg = preset("onehop_downlink")
    assert cfg.graph.n_nodes == 3
    assert len(cfg.graph.links) == 2
    assert len(cfg.flows) == 2
    # both links leave the single transmitter
    assert {lk.src for lk in cfg.graph.links} == {0}


def test_grid_has_gateway_and_four_flows():
    cfg = preset("grid")
    assert cfg.graph.n_nodes == 13
    gateway = cfg.graph.n_nodes - 1
    assert len(cfg.flows) == 4
    assert all(f.source == gateway for f in cfg.flows)
    assert len({f.destination for f in cfg.flows}) == 4


@pytest.mark.parametrize("name", ["diamond", "tree"])
def test_two_flows_from_A_to_B_and_D(name):
    cfg = preset(name)
    names = cfg.graph.names
    pairs = {(names[f.source], names[f.destination]) for f in cfg.flows}
    assert pairs == {("A", "B"), ("A", "D")}


@pytest.mark.parametrize("name", PRESETS)
def test_every_preset_validates(name):
    assert validate(preset(name)) == []


@pytest.mark.parametrize("name", PRESETS)
def test_preset_is_pure(name):
    assert preset(name) == preset(name)
    assert preset(name).digest() == preset(name).digest()


def test_unknown_preset():
    with pytest.raises(ValueError):
        preset("ring")


def test_default_buffer_is_100_packets():
    assert preset("diamond").buffer_size_per_node == 100


def test_degenerate_flow_is_reported():
    cfg = preset("diamond")
    cfg = cfg.replace(flows=(FlowSpec(0, 0, 0), cfg.flows[1]))
    assert any("degenerate flow" in p for p in validate(cfg))


def test_link_that_never_delivers_is_reported():
    cfg = preset("diamond")
    cfg = cfg.replace(graph=cfg.graph.with_corruption([0], 1.0))
    assert any("link never delivers" in p for p in validate(cfg))


def test_validate_collects_every_violation():
    g = NetworkGraph(2, (Link(0, 1, rate=0, on_prob=1.5),))
    cfg = ScenarioConfig(graph=g, flows=(FlowSpec(0, 1, 0),), horizon_slots=0,
                         buffer_size_per_node=0, gossip_staleness=-1)
    problems = validate(cfg)
    for fragment in ("rate", "on_prob", "unreachable", "horizon", "buffer", "gossip"):
        assert any(fragment in p for p in problems), fragment


def test_fractional_link_rate_is_reported():
    g = NetworkGraph(2, (Link(0, 1, rate=2.5),))
    cfg = ScenarioConfig(graph=g, flows=(FlowSpec(0, 0, 1),))
    assert any("whole number" in p for p in validate(cfg))


def test_sparse_flow_ids_are_reported():
    cfg = preset("diamond")
    cfg = cfg.replace(flows=(cfg.flows[0], dataclasses.replace(cfg.flows[1], id=5)))
    assert any("dense" in p for p in validate(cfg))


def test_scenario_round_trip(tmp_path):
    cfg = preset("grid").replace(seed=7, k_policy=KPolicy(3.0))
    path = tmp_path / "grid.json"
    save_scenario(cfg, path)
    assert load_scenario(path) == cfg


def test_scenario_unknown_key_is_an_error(tmp_path):
    data = preset("diamond").to_dict()
    data["colour"] = "blue"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ValueError):
        load_scenario(path)


def test_k_policy_parse():
    assert KPolicy.parse("buffer-share").is_buffer_share
    assert KPolicy.parse("fixed:5").fixed == 5.0
    assert KPolicy.parse({"fixed": 2}).fixed == 2.0
    with pytest.raises(ValueError):
        KPolicy.parse("sometimes")


def test_hop_counts_on_diamond():
    g = preset("diamond").graph
    assert hops_to(g, 3) == {3: 0, 1: 1, 2: 1, 0: 2}
    assert hops_from(g, 0) == {0: 0, 1: 1, 2: 1, 3: 2}


def test_shortest_scope_keeps_only_downhill_links():
    cfg = preset("diamond")
    g = cfg.graph
    adm = admissible_matrix(g, cfg.flows, "shortest")
    for l, lk in enumerate(g.links):
        for f in cfg.flows:
            d = hops_to(g, f.destination)
            assert adm[l][f.id] == (lk.src != f.destination and d[lk.dst] == d[lk.src] - 1)


def test_all_scope_only_blocks_destination_and_dead_ends():
    g = NetworkGraph(3, (Link(0, 1), Link(1, 0), Link(0, 2)))
    flows = (FlowSpec(0, 0, 1),)
    adm = admissible_matrix(g, flows, "all")
    # the destination never forwards, and node 2 cannot reach it
    assert adm[0][0] and not adm[1][0] and not adm[2][0]


def test_flows_through_diamond():
    cfg = preset("diamond")
    # A carries both flows, B carries the A->D flow only under shortest paths
    assert flows_through(cfg.graph, cfg.flows, 0) == [0, 1]
    assert flows_through(cfg.graph, cfg.flows, 1) == [1]
    assert flows_through(cfg.graph, cfg.flows, 3) == []


def test_with_corruption_touches_only_named_links():
    g = preset("diamond").graph
    ab = g.find_links(0, 1)
    h = g.with_corruption(ab, 0.3)
    for l, lk in enumerate(h.links):
        assert lk.corrupt_prob == (0.3 if l in ab else 0.0)


def test_transport_flags():
    assert Transport.LOSS_BASED_TCP.is_tcp and Transport.DELAY_BASED_TCP.is_tcp
    assert not Transport.POISSON.is_tcp and not Transport.CONTROLLED_NON_TCP.is_tcp
