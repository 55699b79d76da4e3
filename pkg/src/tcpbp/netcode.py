"""Generation-based network coding shim between TCP and the network.

Coefficients are never materialised. Coded packets are generated
incrementally: one coded while its block held k originals is a generic
combination of those k (its ``span``). With a large enough field, whether an
arrival is innovative then depends only on the spans received so far, so a
block is tracked by counts alone: originals assigned, coded packets sent,
degrees of freedom received, and ACKs returned.
"""
from __future__ import annotations

from bisect import insort
from collections import deque
from dataclasses import dataclass, field

from .queueing import PacketRecord

ACK = "ack"
DUPLICATE = "duplicate"
DUPACK = "dupack"


@dataclass
class Block:
    id: int
    size: int
    originals: int = 0
    dof_sent: int = 0
    acked: int = 0
    dropped: int = 0

    @property
    def fully_sent(self) -> bool:
        return self.originals >= self.size and self.dof_sent >= self.size


@dataclass(frozen=True)
class RepairRequest:
    block: int
    missing: int

    def __post_init__(self):
        if self.missing < 1:
            raise ValueError("a repair request asks for at least one packet")


class EdgeCoder:
    """Sender-side NC layer for one flow."""

    def __init__(self, flow: int):
        self.flow = flow
        self.blocks: dict[int, Block] = {}
        self.current: Block | None = None
        self.next_id = 0
        self.oldest_unacked = 0
        self.exposed_unannounced = 0
        self.awaiting_replacement: deque[int] = deque()
        self.absorbed = 0
        self.replacements = 0
        self.repairs = 0
        self.sent_originals = 0
        self.acked_originals = 0

    @property
    def outstanding(self) -> int:
        """Originals handed down by TCP and not yet acknowledged."""
        return self.sent_originals - self.acked_originals

    def _coded(self, block: Block, slot: int, tcp_owned: bool) -> PacketRecord:
        block.dof_sent += 1
        return PacketRecord(self.flow, block.id, slot, tcp_owned, block.originals)

    def encode(self, offered: int, cwnd: float, slot: int) -> list[PacketRecord]:
        """Code ``offered`` new originals into the open block, opening blocks as needed."""
        out = []
        for _ in range(offered):
            if self.current is None or self.current.originals >= self.current.size:
                self.current = Block(self.next_id, max(1, int(round(cwnd))))
                self.blocks[self.next_id] = self.current
                self.next_id += 1
            self.current.originals += 1
            self.sent_originals += 1
            out.append(self._coded(self.current, slot, True))
        return out

    def retransmit(self, count: int, slot: int, queued=None) -> list[PacketRecord]:
        """Handle TCP retransmissions.

        Each one first replaces an exposed congestion drop. Otherwise it
        becomes a fresh coded packet of the oldest block whose unacknowledged
        originals are not all covered by its packets still waiting in the edge
        buffer (``queued`` maps block id to that count), and is absorbed when
        no such block exists.
        """
        out = []
        queued = dict(queued or {})
        for _ in range(count):
            if self.awaiting_replacement:
                block = self.blocks[self.awaiting_replacement.popleft()]
                self.replacements += 1
                out.append(self._coded(block, slot, True))
                continue
            block = self._oldest_deficit(queued)
            if block is None:
                self.absorbed += 1
            else:
                queued[block.id] = queued.get(block.id, 0) + 1
                out.append(self._coded(block, slot, True))
        return out

    def _oldest_deficit(self, queued) -> Block | None:
        while self.oldest_unacked < self.next_id:
            block = self.blocks[self.oldest_unacked]
            if block.acked < block.originals or block is self.current:
                break
            self.oldest_unacked += 1
        for b in range(self.oldest_unacked, self.next_id):
            block = self.blocks[b]
            if block.originals - block.acked - queued.get(b, 0) > 0:
                return block
        return None

    def on_receiver_ack(self, block_id: int) -> str:
        """Map the receiver's ACK of ``block_id`` to a TCP-level ACK or dupack.

        While a congestion drop is unannounced the ACK stream has a gap, so
        TCP sees duplicate ACKs.
        """
        block = self.blocks[block_id]
        if block.acked < block.size:
            block.acked += 1
            self.acked_originals += 1
        return DUPACK if self.exposed_unannounced else ACK

    def record_drop(self, packet: PacketRecord) -> bool:
        """Edge congestion drop of one of this flow's packets; True if exposed to TCP.

        Drops of NC-generated repair packets stay hidden; the receiver asks again.
        """
        block = self.blocks[packet.block]
        block.dropped += 1
        if not packet.tcp_owned:
            return False
        self.exposed_unannounced += 1
        self.awaiting_replacement.append(block.id)
        return True

    def announce(self) -> int:
        """TCP has reacted to the pending gaps; returns how many packets it lost."""
        n = self.exposed_unannounced
        self.exposed_unannounced = 0
        return n

    def repair(self, request: RepairRequest, slot: int, in_buffer: int = 0) -> list[PacketRecord]:
        """Fresh coded packets for a repair request.

        The edge can only code over the originals it has, so a block that is
        still filling gets at most ``originals - dof_received`` packets.
        ``in_buffer`` coded packets of the block still waiting at the edge are
        late rather than lost and are subtracted.
        """
        block = self.blocks.get(request.block)
        if block is None:
            return []
        received = block.size - request.missing
        count = min(request.missing, block.originals - received) - in_buffer
        if count < 1:
            return []
        self.repairs += count
        return [self._coded(block, slot, False) for _ in range(count)]

    def close_current(self) -> Block | None:
        """Shrink the open block to the originals it holds (end of data)."""
        block = self.current
        if block is not None and block.originals < block.size:
            block.size = block.originals
        self.current = None
        return block


@dataclass
class RxBlock:
    id: int
    size: int
    dof_received: int = 0
    last_activity: int = 0
    decoded_at: int | None = None
    spans: list = field(default_factory=list)

    @property
    def decoded(self) -> bool:
        return self.decoded_at is not None


def nested_rank(spans, cap: int) -> int:
    """Rank of generic vectors drawn from nested subspaces of the given sizes.

    ``spans`` must be sorted ascending; each vector adds a dimension while
    the rank is below its own subspace size.
    """
    rank = 0
    for k in spans:
        if rank < k:
            rank += 1
    return min(rank, cap)


def receiver_on_packet(block: RxBlock, slot: int, span: int | None = None) -> str:
    """One coded arrival: ACK if it adds a degree of freedom, else duplicate.

    ``span`` defaults to the block size (a packet coded over the full block).
    """
    if block.dof_received >= block.size:
        return DUPLICATE
    k = block.size if span is None or span <= 0 else span
    insort(block.spans, k)
    # a span beyond the current rank always adds a dimension (the in-order case)
    if k > block.dof_received:
        rank = block.dof_received + 1
    else:
        rank = nested_rank(block.spans, block.size)
    if rank <= block.dof_received:
        return DUPLICATE
    block.dof_received = rank
    block.last_activity = slot
    if block.dof_received == block.size:
        block.decoded_at = slot
    return ACK


def receiver_check_repairs(block: RxBlock, slot: int, stall_slots: float,
                           dof_sent: int | None = None) -> RepairRequest | None:
    """Ask for the missing count once a seen block has stalled for ``stall_slots``.

    ``dof_sent`` (coded packets the edge has sent for the block, carried in
    the coding header) suppresses the request while nothing sent is missing.
    """
    if block.decoded or block.dof_received >= block.size:
        return None
    if dof_sent is not None and dof_sent <= block.dof_received:
        return None
    if slot - block.last_activity < stall_slots:
        return None
    block.last_activity = slot
    return RepairRequest(block.id, block.size - block.dof_received)


class Receiver:
    """Receiver-side NC layer for one flow; delivers decoded blocks in order."""

    def __init__(self, flow: int):
        self.flow = flow
        self.blocks: dict[int, RxBlock] = {}
        self.pending: set[int] = set()
        self.next_deliver = 0
        self.delivered_originals = 0
        self.delivery_order: list[int] = []
        self.innovative = 0
        self.duplicates = 0

    def on_packet(self, block_id: int, size: int, slot: int, span: int | None = None) -> str:
        block = self.blocks.get(block_id)
        if block is None:
            block = self.blocks[block_id] = RxBlock(block_id, size, last_activity=slot)
            self.pending.add(block_id)
        else:
            block.size = size
        verdict = receiver_on_packet(block, slot, span)
        if verdict == ACK:
            self.innovative += 1
            if block.decoded:
                self.pending.discard(block_id)
                self._deliver()
        else:
            self.duplicates += 1
        return verdict

    def resize(self, block_id: int, size: int, slot: int) -> None:
        block = self.blocks.get(block_id)
        if block is None:
            return
        block.size = size
        if block.dof_received >= size and not block.decoded:
            block.decoded_at = slot
            self.pending.discard(block_id)
            self._deliver()

    def _deliver(self) -> None:
        while True:
            block = self.blocks.get(self.next_deliver)
            if block is None or not block.decoded:
                return
            self.delivered_originals += block.size
            self.delivery_order.append(block.id)
            self.next_deliver += 1

    def check_repairs(self, slot: int, stall_slots: float, sent) -> list[RepairRequest]:
        """``sent`` maps block id to the edge's dof_sent for that block."""
        out = []
        for b in sorted(self.pending):
            req = receiver_check_repairs(self.blocks[b], slot, stall_slots, sent(b))
            if req is not None:
                out.append(req)
        return out
