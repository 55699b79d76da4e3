"""Network graphs, flows, scenario configuration and the preset topologies."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any


class Transport(str, Enum):
    LOSS_BASED_TCP = "loss-based-tcp"
    DELAY_BASED_TCP = "delay-based-tcp"
    CONTROLLED_NON_TCP = "controlled-non-tcp"
    POISSON = "poisson"

    @property
    def is_tcp(self) -> bool:
        return self in (Transport.LOSS_BASED_TCP, Transport.DELAY_BASED_TCP)


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    rate: int = 1
    on_prob: float = 1.0
    corrupt_prob: float = 0.0


@dataclass(frozen=True)
class NetworkGraph:
    n_nodes: int
    links: tuple[Link, ...]
    names: tuple[str, ...] = ()

    def name(self, node: int) -> str:
        return self.names[node] if self.names else str(node)

    def out_links(self, node: int) -> list[int]:
        return [l for l, link in enumerate(self.links) if link.src == node]

    def neighbors(self, node: int) -> list[int]:
        return sorted({link.dst for link in self.links if link.src == node})

    def reachable_from(self, node: int) -> set[int]:
        seen = {node}
        todo = deque([node])
        while todo:
            i = todo.popleft()
            for link in self.links:
                if link.src == i and link.dst not in seen:
                    seen.add(link.dst)
                    todo.append(link.dst)
        return seen

    def with_corruption(self, link_ids, corrupt_prob: float) -> "NetworkGraph":
        link_ids = set(link_ids)
        links = tuple(
            dataclasses.replace(link, corrupt_prob=corrupt_prob) if l in link_ids else link
            for l, link in enumerate(self.links)
        )
        return dataclasses.replace(self, links=links)

    def find_links(self, a: int, b: int) -> list[int]:
        """Ids of the links between ``a`` and ``b`` in either direction."""
        return [
            l for l, link in enumerate(self.links)
            if {link.src, link.dst} == {a, b}
        ]


@dataclass(frozen=True)
class FlowSpec:
    id: int
    source: int
    destination: int
    transport: Transport = Transport.LOSS_BASED_TCP
    arrival_rate: float = 0.0
    utility_weight: float = 1.0
    initial_cwnd: float = 1.0


@dataclass(frozen=True)
class KPolicy:
    """``Fixed(K)`` when ``fixed`` is set, otherwise buffer share B_i/|S_i|."""

    fixed: float | None = None

    @classmethod
    def buffer_share(cls) -> "KPolicy":
        return cls(None)

    @classmethod
    def classical(cls) -> "KPolicy":
        return cls(0.0)

    @property
    def is_buffer_share(self) -> bool:
        return self.fixed is None

    def to_json(self) -> Any:
        return "buffer-share" if self.fixed is None else {"fixed": self.fixed}

    @classmethod
    def parse(cls, value: Any) -> "KPolicy":
        if isinstance(value, KPolicy):
            return value
        if isinstance(value, dict) and set(value) == {"fixed"}:
            return cls(float(value["fixed"]))
        if isinstance(value, str):
            if value == "buffer-share":
                return cls.buffer_share()
            if value.startswith("fixed:"):
                return cls(float(value.split(":", 1)[1]))
        raise ValueError(f"unrecognised k_policy {value!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    graph: NetworkGraph
    flows: tuple[FlowSpec, ...]
    buffer_size_per_node: int = 100
    k_policy: KPolicy = field(default_factory=KPolicy.buffer_share)
    horizon_slots: int = 20_000
    seed: int = 0
    gossip_staleness: int = 1
    estimator_window: int = 100
    flowctl_M: float = 50.0
    flowctl_Rmax: float = 2.0
    # knobs beyond the core field list
    buffer_overrides: tuple[tuple[int, int], ...] = ()
    throughput_window: int = 100
    nc_repairs: bool = True
    source_stop_slot: int | None = None
    loss_aware: bool = True
    exact_limit: int = 16
    gossip_probes: bool = True
    link_scope: str = "shortest"

    def buffer_size(self, node: int) -> int:
        for n, size in self.buffer_overrides:
            if n == node:
                return size
        return self.buffer_size_per_node

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "graph": {
                "n_nodes": self.graph.n_nodes,
                "names": list(self.graph.names),
                "links": [dataclasses.asdict(link) for link in self.graph.links],
            },
            "flows": [
                {**dataclasses.asdict(f), "transport": f.transport.value}
                for f in self.flows
            ],
            "buffer_size_per_node": self.buffer_size_per_node,
            "k_policy": self.k_policy.to_json(),
            "horizon_slots": self.horizon_slots,
            "seed": self.seed,
            "gossip_staleness": self.gossip_staleness,
            "estimator_window": self.estimator_window,
            "flowctl_M": self.flowctl_M,
            "flowctl_Rmax": self.flowctl_Rmax,
            "buffer_overrides": [list(p) for p in self.buffer_overrides],
            "throughput_window": self.throughput_window,
            "nc_repairs": self.nc_repairs,
            "source_stop_slot": self.source_stop_slot,
            "loss_aware": self.loss_aware,
            "exact_limit": self.exact_limit,
            "gossip_probes": self.gossip_probes,
            "link_scope": self.link_scope,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        g = data["graph"]
        unknown = set(g) - {"n_nodes", "names", "links"}
        if unknown:
            raise ValueError(f"unknown graph keys: {sorted(unknown)}")
        link_keys = {f.name for f in dataclasses.fields(Link)}
        flow_keys = {f.name for f in dataclasses.fields(FlowSpec)}
        links = []
        for raw in g["links"]:
            if set(raw) - link_keys:
                raise ValueError(f"unknown link keys: {sorted(set(raw) - link_keys)}")
            links.append(Link(**raw))
        flows = []
        for raw in data["flows"]:
            if set(raw) - flow_keys:
                raise ValueError(f"unknown flow keys: {sorted(set(raw) - flow_keys)}")
            raw = dict(raw)
            if "transport" in raw:
                raw["transport"] = Transport(raw["transport"])
            flows.append(FlowSpec(**raw))
        kwargs = {k: v for k, v in data.items() if k not in ("graph", "flows")}
        if "k_policy" in kwargs:
            kwargs["k_policy"] = KPolicy.parse(kwargs["k_policy"])
        if "buffer_overrides" in kwargs:
            kwargs["buffer_overrides"] = tuple(tuple(p) for p in kwargs["buffer_overrides"])
        graph = NetworkGraph(g["n_nodes"], tuple(links), tuple(g.get("names", ())))
        return cls(graph=graph, flows=tuple(flows), **kwargs)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_scenario(path: str | Path) -> ScenarioConfig:
    return ScenarioConfig.from_dict(json.loads(Path(path).read_text()))


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def _bidirectional(edges, rate: int = 1) -> tuple[Link, ...]:
    links = []
    for a, b in edges:
        links.append(Link(a, b, rate))
        links.append(Link(b, a, rate))
    return tuple(links)


def _tcp_pair(initial: tuple[float, float] = (1.0, 1.0)) -> tuple[FlowSpec, ...]:
    # flows A->B and A->D, A=0 B=1 D=3
    return (
        FlowSpec(0, 0, 1, initial_cwnd=initial[0]),
        FlowSpec(1, 0, 3, initial_cwnd=initial[1]),
    )


GRID_COLUMNS = 4
GRID_ROWS = 3
GRID_GATEWAY = 12
GRID_DESTINATIONS = (3, 6, 9, 11)


def _grid_edges() -> list[tuple[int, int]]:
    edges = []
    for r in range(GRID_ROWS):
        for c in range(GRID_COLUMNS):
            n = r * GRID_COLUMNS + c
            if c + 1 < GRID_COLUMNS:
                edges.append((n, n + 1))
            if r + 1 < GRID_ROWS:
                edges.append((n, n + GRID_COLUMNS))
    # gateway attaches to the two left-column cells nearest it
    edges += [(GRID_GATEWAY, 0), (GRID_GATEWAY, GRID_COLUMNS)]
    return edges


PRESETS = ("tree", "diamond", "grid", "onehop_downlink")


def preset(name: str) -> ScenarioConfig:
    """Build one of the named scenarios.

    ``onehop_downlink`` is transmitter I with receivers R1/R2 and one flow to
    each. ``tree`` and ``diamond`` carry flows A->B and A->D. ``grid`` is a
    fixed 4x3 lattice (row-major ids 0..11, 4-neighbour links) plus a gateway
    (id 12) wired to cells 0 and 4; its four flows go to cells 3, 6, 9, 11.
    """
    if name == "onehop_downlink":
        graph = NetworkGraph(3, (Link(0, 1), Link(0, 2)), ("I", "R1", "R2"))
        flows = (FlowSpec(0, 0, 1), FlowSpec(1, 0, 2))
    elif name == "diamond":
        graph = NetworkGraph(
            4, _bidirectional([(0, 1), (0, 2), (1, 3), (2, 3)]), ("A", "B", "C", "D")
        )
        flows = _tcp_pair()
    elif name == "tree":
        graph = NetworkGraph(
            4, _bidirectional([(0, 1), (0, 2), (2, 3)]), ("A", "B", "C", "D")
        )
        flows = _tcp_pair()
    elif name == "grid":
        names = tuple(f"n{i}" for i in range(12)) + ("GW",)
        graph = NetworkGraph(13, _bidirectional(_grid_edges()), names)
        flows = tuple(FlowSpec(k, GRID_GATEWAY, d) for k, d in enumerate(GRID_DESTINATIONS))
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
    return ScenarioConfig(graph=graph, flows=flows)


def validate(config: ScenarioConfig) -> list[str]:
    """Return every violated invariant; an empty list means the config is usable."""
    problems: list[str] = []
    g = config.graph
    if g.n_nodes < 1:
        problems.append("graph has no nodes")
    if g.names and len(g.names) != g.n_nodes:
        problems.append("node names do not match node count")
    for l, link in enumerate(g.links):
        if not (0 <= link.src < g.n_nodes and 0 <= link.dst < g.n_nodes):
            problems.append(f"link {l}: endpoint outside 0..{g.n_nodes - 1}")
            continue
        if link.src == link.dst:
            problems.append(f"link {l}: self loop")
        if link.rate < 1:
            problems.append(f"link {l}: rate must be >= 1")
        elif link.rate != int(link.rate):
            problems.append(f"link {l}: rate must be a whole number of packets per slot")
        if not 0.0 <= link.on_prob <= 1.0:
            problems.append(f"link {l}: on_prob outside [0, 1]")
        if link.corrupt_prob >= 1.0:
            problems.append(f"link {l}: link never delivers (corrupt_prob = 1)")
        elif link.corrupt_prob < 0.0:
            problems.append(f"link {l}: negative corrupt_prob")

    ids = sorted(f.id for f in config.flows)
    if ids != list(range(len(config.flows))):
        problems.append("flow ids must be dense 0..S-1 in order")
    for f in config.flows:
        if not (0 <= f.source < g.n_nodes and 0 <= f.destination < g.n_nodes):
            problems.append(f"flow {f.id}: endpoint outside graph")
            continue
        if f.source == f.destination:
            problems.append(f"flow {f.id}: degenerate flow (source == destination)")
            continue
        if f.arrival_rate < 0:
            problems.append(f"flow {f.id}: negative arrival_rate")
        if f.utility_weight <= 0:
            problems.append(f"flow {f.id}: utility_weight must be positive")
        if f.initial_cwnd < 1:
            problems.append(f"flow {f.id}: initial_cwnd must be >= 1")
        if f.destination not in g.reachable_from(f.source):
            problems.append(f"flow {f.id}: destination unreachable from source")

    if config.horizon_slots <= 0:
        problems.append("horizon_slots must be positive")
    if config.buffer_size_per_node < 1:
        problems.append("buffer_size_per_node must be >= 1")
    for node, size in config.buffer_overrides:
        if size < 1 or not 0 <= node < g.n_nodes:
            problems.append(f"bad buffer override for node {node}")
    if config.gossip_staleness < 0:
        problems.append("gossip_staleness must be >= 0")
    if config.estimator_window < 1:
        problems.append("estimator_window must be >= 1")
    if config.flowctl_M <= 0:
        problems.append("flowctl_M must be positive")
    if config.flowctl_Rmax <= 0:
        problems.append("flowctl_Rmax must be positive")
    if config.k_policy.fixed is not None and not config.k_policy.fixed >= 0:
        problems.append("fixed K must be a non-negative finite number")
    if config.throughput_window < 1:
        problems.append("throughput_window must be >= 1")
    if config.link_scope not in LINK_SCOPES:
        problems.append(f"link_scope must be one of {LINK_SCOPES}")
    if not 0 <= config.seed < 2**64:
        problems.append("seed must fit in an unsigned 64-bit integer")
    return problems


ALL_LINKS = "all"
SHORTEST = "shortest"
LINK_SCOPES = (ALL_LINKS, SHORTEST)


def hops_to(graph: NetworkGraph, destination: int) -> dict[int, int]:
    """Hop count to ``destination`` from every node that can reach it."""
    return _bfs(graph, destination, reverse=True)


def hops_from(graph: NetworkGraph, source: int) -> dict[int, int]:
    return _bfs(graph, source, reverse=False)


def _bfs(graph: NetworkGraph, root: int, reverse: bool) -> dict[int, int]:
    dist = {root: 0}
    todo = deque([root])
    while todo:
        n = todo.popleft()
        for link in graph.links:
            a, b = (link.dst, link.src) if reverse else (link.src, link.dst)
            if a == n and b not in dist:
                dist[b] = dist[n] + 1
                todo.append(b)
    return dist


def admissible_matrix(graph: NetworkGraph, flows, scope: str = SHORTEST) -> list[list[bool]]:
    """``adm[l][s]``: may flow ``s`` be sent over link ``l``.

    ``all``: every link except those after which the destination is
    unreachable (destinations never forward). ``shortest``: only links that
    bring the flow one hop closer to its destination, so packets never loop.
    """
    if scope not in LINK_SCOPES:
        raise ValueError(f"unknown link scope {scope!r}")
    to_dest = [hops_to(graph, f.destination) for f in flows]
    adm = []
    for link in graph.links:
        row = []
        for f, dist in zip(flows, to_dest):
            ok = link.src != f.destination and link.dst in dist
            if ok and scope == SHORTEST:
                ok = link.src in dist and dist[link.dst] == dist[link.src] - 1
            row.append(ok)
        adm.append(row)
    return adm


def flows_through(graph: NetworkGraph, flows, node: int, scope: str = SHORTEST) -> list[int]:
    """Flows whose packets may be queued at ``node`` (the set S_i)."""
    out = []
    for f in flows:
        if node == f.destination:
            continue
        to_dest = hops_to(graph, f.destination)
        from_src = hops_from(graph, f.source)
        if node not in to_dest or node not in from_src:
            continue
        if scope == SHORTEST and from_src[node] + to_dest[node] != to_dest.get(f.source, -1):
            continue
        out.append(f.id)
    return out
