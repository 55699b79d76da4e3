"""Backpressure decisions: differentials, per-link flow choice, activation, K."""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernel
from .channel import MAX_ENUMERATED_LINKS
from .topology import NetworkGraph, ScenarioConfig, flows_through

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DifferentialPolicy:
    """Classical backpressure, or the TCP-aware floor ``max(K, U_i) - U_j``.

    ``K`` may be one number or a per-node sequence (buffer-share mode).
    """

    tcp_aware: bool = True
    K: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        ks = self.K if isinstance(self.K, tuple) else (self.K,)
        if any(not (k >= 0 and math.isfinite(k)) for k in ks):
            raise ValueError("K must be non-negative and finite")

    @classmethod
    def classical(cls) -> "DifferentialPolicy":
        return cls(False, 0.0)

    def k_at(self, node: int) -> float:
        if not self.tcp_aware:
            return 0.0
        return self.K[node] if isinstance(self.K, tuple) else self.K

    def k_vector(self, n_nodes: int) -> np.ndarray:
        return np.array([self.k_at(i) for i in range(n_nodes)], dtype=np.float64)


@dataclass(frozen=True)
class LinkDecision:
    link: int
    flow: int
    weight: float


@dataclass(frozen=True)
class ActivationSet:
    links: frozenset[int]
    rates: dict
    exact: bool = True

    def __contains__(self, link: int) -> bool:
        return link in self.links

    def __len__(self) -> int:
        return len(self.links)


def differential(policy: DifferentialPolicy, U_i: float, U_j_reported: float,
                 node: int = 0) -> float:
    if U_i < 0 or U_j_reported < 0:
        raise ValueError("backlogs are non-negative")
    if not policy.tcp_aware:
        return U_i - U_j_reported
    return max(policy.k_at(node), U_i) - U_j_reported


def best_flow_on_link(link: int, graph: NetworkGraph, policy: DifferentialPolicy,
                      backlog, reported, admissible=None,
                      flow_key: Sequence[float] | None = None) -> LinkDecision | None:
    """Flow with the largest differential over ``link``; None unless it is positive.

    Only flows with packets queued at the link's tail are candidates. Ties go
    to the smallest ``flow_key`` (the flow id by default).
    """
    i, j = graph.links[link].src, graph.links[link].dst
    n_flows = len(backlog[i])
    keys = flow_key if flow_key is not None else range(n_flows)
    best = None
    for s in range(n_flows):
        if backlog[i][s] <= 0 or (admissible is not None and not admissible[link][s]):
            continue
        d = differential(policy, backlog[i][s], reported[j][s], i)
        if best is None or d > best[0] or (d == best[0] and keys[s] < keys[best[1]]):
            best = (d, s)
    if best is None or best[0] <= 0:
        return None
    return LinkDecision(link, best[1], float(best[0]))


def max_weight_activation(graph: NetworkGraph, states, decisions,
                          link_key: Sequence[float] | None = None,
                          rates: Sequence[float] | None = None,
                          exact_limit: int = MAX_ENUMERATED_LINKS) -> ActivationSet:
    """Feasible activation maximising the sum of ``weight * rate`` over active links.

    Exhaustive over matchings when at most ``exact_limit`` links are ON,
    greedy (heaviest first, conflicts removed) otherwise.
    """
    L = len(graph.links)
    weight = np.zeros(L)
    for dec in decisions:
        if dec is not None and dec.weight > 0:
            r = graph.links[dec.link].rate if rates is None else rates[dec.link]
            weight[dec.link] = dec.weight * r
    src = np.array([lk.src for lk in graph.links], dtype=np.int64)
    dst = np.array([lk.dst for lk in graph.links], dtype=np.int64)
    on = np.asarray(states, dtype=np.uint8)
    keys = np.arange(L, dtype=np.float64) if link_key is None else np.asarray(link_key, float)
    active, exact = kernel.backend().activate(src, dst, weight, on, keys, graph.n_nodes, exact_limit)
    return ActivationSet(
        frozenset(active), {l: graph.links[l].rate for l in active}, exact
    )


def practical_next_hop(node: int, graph: NetworkGraph, diffs, estimators: "LinkEstimators",
                       link_key: Sequence[float] | None = None) -> int | None:
    """Neighbour maximising D * R_est * (1 - p_est) over ``node``'s outgoing links.

    ``diffs`` maps link id to that link's best differential. Ties go to the
    lower neighbour id.
    """
    best = None
    for l in graph.out_links(node):
        d = diffs.get(l) if isinstance(diffs, dict) else diffs[l]
        if d is None:
            continue
        score = d * estimators.rate[l] * (1.0 - estimators.loss[l])
        j = graph.links[l].dst
        if score <= 0:
            continue
        if best is None or score > best[0] or (score == best[0] and j < best[1]):
            best = (score, j)
    return None if best is None else best[1]


class LinkEstimators:
    """Trailing-window loss and rate estimates per link.

    Loss starts at 0 and rate at the nominal R_l; a link with no attempts
    inside the window keeps its previous estimate.
    """

    def __init__(self, nominal_rates: Sequence[float], window: int):
        self.window = window
        self.loss = np.zeros(len(nominal_rates))
        self.rate = np.asarray(nominal_rates, dtype=np.float64).copy()
        self.effective = self.rate.copy()
        self._hist = [deque() for _ in nominal_rates]
        self._sums = [[0, 0, 0.0, 0] for _ in nominal_rates]  # att, succ, rate, samples

    def effective_rate(self) -> np.ndarray:
        """R~ (1 - p~) per link; a live view, updated in place."""
        return self.effective

    def _evict(self, link: int, slot: int) -> None:
        hist, sums = self._hist[link], self._sums[link]
        while hist and hist[0][0] <= slot - self.window:
            _, att, succ, rate = hist.popleft()
            sums[0] -= att
            sums[1] -= succ
            sums[2] -= rate
            sums[3] -= 1


def update_estimators(est: LinkEstimators, link: int, attempted: int, succeeded: int,
                      rate_sample: float, slot: int) -> None:
    if succeeded > attempted or attempted < 0:
        raise ValueError("succeeded must not exceed attempted")
    est._hist[link].append((slot, attempted, succeeded, rate_sample))
    sums = est._sums[link]
    sums[0] += attempted
    sums[1] += succeeded
    sums[2] += rate_sample
    sums[3] += 1
    est._evict(link, slot)
    if sums[0] > 0:
        est.loss[link] = 1.0 - sums[1] / sums[0]
    if sums[3] > 0:
        est.rate[link] = sums[2] / sums[3]
    est.effective[link] = est.rate[link] * (1.0 - est.loss[link])


def select_K(node: int, config: ScenarioConfig) -> float:
    if not config.k_policy.is_buffer_share:
        return float(config.k_policy.fixed)
    through = flows_through(config.graph, config.flows, node, config.link_scope)
    if not through:
        log.warning("node %d carries no flows; K set to 0", node)
        return 0.0
    return config.buffer_size(node) / len(through)


def policy_for(config: ScenarioConfig) -> DifferentialPolicy:
    ks = tuple(select_K(i, config) for i in range(config.graph.n_nodes))
    if all(k == 0 for k in ks):
        return DifferentialPolicy.classical()
    return DifferentialPolicy(True, ks)


def backlog_weight(graph: NetworkGraph, backlog, flows_by_link, active) -> float:
    """Sum over active links of (U_i^s - U_j^s) * R_l, classical differentials."""
    total = 0.0
    for l in active:
        s = flows_by_link[l]
        if s < 0:
            continue
        lk = graph.links[l]
        total += (backlog[lk.src][s] - backlog[lk.dst][s]) * lk.rate
    return total


def approximation_slack(n_links: int, n_flows: int, K: float, f_max: float) -> float:
    """Per-slot weight the TCP-aware rule may give up versus classical: |L||S|K F_max."""
    return n_links * n_flows * K * f_max
