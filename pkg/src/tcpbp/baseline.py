"""Static shortest-path routing, the loss-blind comparison baseline."""
from __future__ import annotations

from .topology import NetworkGraph, hops_to


class NoRoute(ValueError):
    pass


RouteTable = dict  # flow id -> tuple of node ids, source first


def shortest_path(graph: NetworkGraph, source: int, destination: int) -> tuple[int, ...]:
    """Fewest hops; among equals the lexicographically smallest node sequence."""
    dist = hops_to(graph, destination)
    if source not in dist:
        raise NoRoute(f"no path from {source} to {destination}")
    path = [source]
    node = source
    while node != destination:
        node = min(
            link.dst for link in graph.links
            if link.src == node and dist.get(link.dst) == dist[node] - 1
        )
        path.append(node)
    return tuple(path)


def compute_routes(graph: NetworkGraph, flows) -> RouteTable:
    return {f.id: shortest_path(graph, f.source, f.destination) for f in flows}


def check_routes(graph: NetworkGraph, routes: RouteTable) -> None:
    pairs = {(lk.src, lk.dst) for lk in graph.links}
    for flow, path in routes.items():
        if len(set(path)) != len(path):
            raise ValueError(f"route of flow {flow} has a loop")
        for a, b in zip(path, path[1:]):
            if (a, b) not in pairs:
                raise ValueError(f"route of flow {flow} uses missing link {a}->{b}")


def next_hop_links(graph: NetworkGraph, routes: RouteTable) -> dict[tuple[int, int], int]:
    """(node, flow) -> link id of the route's next hop."""
    by_pair = {(lk.src, lk.dst): l for l, lk in enumerate(graph.links)}
    table = {}
    for flow, path in routes.items():
        for a, b in zip(path, path[1:]):
            table[(a, flow)] = by_pair[(a, b)]
    return table


def greedy_fifo_activation(graph: NetworkGraph, on, heads, lengths) -> list[int]:
    """Serve the longest node FIFOs first; each wants its head packet's next link.

    ``heads[i]`` is the link wanted by node i's head packet (or -1) and
    ``lengths[i]`` its FIFO length. Ties go to the lower node id.
    """
    used = [False] * graph.n_nodes
    active = []
    for i in sorted(range(graph.n_nodes), key=lambda n: (-lengths[n], n)):
        l = heads[i]
        if l < 0 or lengths[i] == 0 or not on[l]:
            continue
        j = graph.links[l].dst
        if not used[i] and not used[j]:
            used[i] = used[j] = True
            active.append(l)
    return sorted(active)
