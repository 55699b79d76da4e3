"""Per-flow queues, backlog dynamics, stale queue-size gossip and edge drops."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

PLAIN = -1  # block id carried by uncoded packets


class PacketRecord:
    """One unit-size packet. ``block`` is ``PLAIN`` for uncoded traffic.

    A coded packet combines the first ``span`` originals of its block.
    """

    __slots__ = ("flow", "block", "created_at", "hops", "tcp_owned", "span")

    def __init__(self, flow: int, block: int, created_at: int, tcp_owned: bool = False,
                 span: int = 0):
        self.flow = flow
        self.block = block
        self.created_at = created_at
        self.hops = 0
        self.tcp_owned = tcp_owned
        self.span = span  # originals combined into a coded packet

    @property
    def coded(self) -> bool:
        return self.block != PLAIN

    def __repr__(self) -> str:
        kind = "plain" if self.block == PLAIN else f"coded(block={self.block})"
        return f"PacketRecord(flow={self.flow}, {kind}, t={self.created_at}, hops={self.hops})"


class PerFlowQueue(deque):
    """FIFO of PacketRecords for one (node, flow) pair."""

    def __init__(self, node: int, flow: int):
        super().__init__()
        self.node = node
        self.flow = flow


def apply_slot_dynamics(old: int, departures: int, arrivals_internal: int,
                        arrivals_external: int) -> int:
    """Backlog after one slot: served first (clamped at zero), then arrivals."""
    if min(old, departures, arrivals_internal, arrivals_external) < 0:
        raise ValueError("queue dynamics take non-negative counts")
    return max(old - departures, 0) + arrivals_internal + arrivals_external


@dataclass(frozen=True)
class Admission:
    admitted: bool
    victim: int | None = None

    @property
    def dropped(self) -> bool:
        return self.victim is not None


def admit_or_drop(backlogs, capacity: int, flow: int) -> Admission:
    """Edge-buffer policy for one arriving packet of ``flow``.

    ``backlogs`` are the node's current per-flow queue lengths. Below
    ``capacity`` the packet is admitted. At capacity one packet of the longest
    queue is dropped (lowest flow id on ties); if that is the arriving flow the
    arrival itself is the victim, otherwise the arrival takes the freed slot.
    """
    if sum(backlogs) < capacity:
        return Admission(True)
    victim = max(range(len(backlogs)), key=lambda s: (backlogs[s], -s))
    return Admission(victim != flow, victim)


class GossipTable:
    """Neighbours' view of each node's per-flow backlog.

    A node's report is overheard by every neighbour at once, so one row per
    reporting node suffices.
    """

    def __init__(self, n_nodes: int, n_flows: int, staleness: int):
        self.staleness = staleness
        self.reported = np.zeros((n_nodes, n_flows), dtype=np.int64)
        self.reported_at = np.zeros(n_nodes, dtype=np.int64)
        self.refreshes = 0

    def view(self, node: int) -> np.ndarray:
        return self.reported[node]

    def age(self, node: int, slot: int) -> int:
        return slot - int(self.reported_at[node])


def gossip_update(table: GossipTable, node: int, slot: int, backlog, transmitted: bool) -> bool:
    """Refresh ``node``'s row if it transmitted (piggy-back) or its report is too old.

    Returns whether a refresh happened.
    """
    if transmitted or slot - table.reported_at[node] >= table.staleness:
        table.reported[node] = backlog
        table.reported_at[node] = slot
        table.refreshes += 1
        return True
    return False
