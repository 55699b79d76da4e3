"""Per-slot ON/OFF channel states, node-exclusive activations, packet corruption."""
from __future__ import annotations

from typing import Iterator

import numpy as np

from .topology import Link, NetworkGraph

MAX_ENUMERATED_LINKS = 16


class TooManyLinks(ValueError):
    """Raised when exhaustive enumeration is requested on too many ON links."""


def sample_states(graph: NetworkGraph, rng: np.random.Generator) -> np.ndarray:
    """Boolean ON vector, one entry per link, drawn independently."""
    on_prob = np.fromiter((link.on_prob for link in graph.links), float, len(graph.links))
    return rng.random(len(graph.links)) < on_prob


def feasible_activations(graph: NetworkGraph, states) -> Iterator[frozenset[int]]:
    """Yield every matching of the ON-link subgraph, the empty set included.

    Two links interfere iff they share an endpoint (node-exclusive model).
    """
    on = [l for l, up in enumerate(states) if up]
    if len(on) > MAX_ENUMERATED_LINKS:
        raise TooManyLinks(
            f"{len(on)} ON links; enumeration capped at {MAX_ENUMERATED_LINKS}, "
            "use greedy activation"
        )
    links = graph.links

    def walk(k: int, used: frozenset[int], chosen: tuple[int, ...]):
        if k == len(on):
            yield frozenset(chosen)
            return
        l = on[k]
        a, b = links[l].src, links[l].dst
        if a not in used and b not in used:
            yield from walk(k + 1, used | {a, b}, chosen + (l,))
        yield from walk(k + 1, used, chosen)

    yield from walk(0, frozenset(), ())


def is_node_exclusive(graph: NetworkGraph, active) -> bool:
    seen: set[int] = set()
    for l in active:
        link = graph.links[l]
        if link.src in seen or link.dst in seen:
            return False
        seen.update((link.src, link.dst))
    return True


def corrupts(link: Link, rng: np.random.Generator) -> bool:
    if link.corrupt_prob <= 0.0:
        return False
    return bool(rng.random() < link.corrupt_prob)
