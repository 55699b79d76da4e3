"""Slotted simulation kernel.

Each slot runs, in order: source emission and edge admission, channel
sampling, flow selection and link activation, transmission with corruption,
receiver processing with ACK return and repairs, gossip refresh, metrics.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field

import numpy as np

from .. import kernel
from ..baseline import (
    check_routes,
    compute_routes,
    greedy_fifo_activation,
    next_hop_links,
)
from ..netcode import ACK, DUPACK, DUPLICATE, EdgeCoder, Receiver
from ..queueing import PLAIN, GossipTable, PacketRecord
from ..scheduler import LinkEstimators, policy_for, update_estimators
from ..topology import ScenarioConfig, Transport, admissible_matrix, hops_to, validate
from ..transport import (
    FlowControllerState,
    LossKind,
    TIMEOUT_FLOOR,
    TcpState,
    Variant,
    flowctl_packets,
    poisson_emit,
    tcp_emit,
    tcp_on_ack,
    tcp_on_dupack,
    tcp_on_loss_signal,
    tcp_timed_out,
)
from .metrics import StabilityReport, jain_index, stability_report

BACKPRESSURE = "backpressure"
STATIC = "static"
DRAW_CHUNK = 1024  # slots of channel / tie-break randomness drawn at once
STALL_RTTS = 2.0   # a block with no innovative arrival for this many RTTs asks for repair


class InvalidConfig(ValueError):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass
class FlowCounters:
    injected: int = 0
    delivered: int = 0
    goodput: int = 0
    dropped: int = 0
    corrupted: int = 0
    repairs: int = 0


@dataclass
class RunResult:
    seed: int
    digest: str
    routing: str
    horizon: int
    window: int
    throughput_series: np.ndarray       # [flow, window] packets/slot
    backlog_series: np.ndarray          # [window, node, flow] mean backlog
    totals: tuple[int, ...]             # goodput per flow over the horizon
    counters: tuple[FlowCounters, ...]
    queued: tuple[int, ...]             # still queued per flow at the end
    total_backlog: np.ndarray           # per slot, summed over nodes and flows
    stability: StabilityReport
    exact_slots: int = 0
    tcp: tuple = ()
    drop_log: list = field(default_factory=list)

    @property
    def n_flows(self) -> int:
        return len(self.totals)

    @property
    def throughput(self) -> np.ndarray:
        return np.asarray(self.totals, dtype=float) / self.horizon

    @property
    def jain(self) -> float:
        return jain_index(self.throughput)

    @property
    def shares(self) -> np.ndarray:
        t = np.asarray(self.totals, dtype=float)
        return t / t.sum() if t.sum() > 0 else t

    @property
    def mean_total_backlog(self) -> float:
        return float(self.total_backlog.mean())

    def conservation_ok(self) -> bool:
        return all(
            c.injected == c.delivered + c.dropped + c.corrupted + q
            for c, q in zip(self.counters, self.queued)
        )

    def window_throughput(self, start: int, stop: int) -> np.ndarray:
        """Mean packets/slot per flow over whole windows covering [start, stop)."""
        a, b = start // self.window, -(-stop // self.window)
        return self.throughput_series[:, a:b].mean(axis=1)


class Simulation:
    def __init__(self, config: ScenarioConfig, routing: str = BACKPRESSURE):
        problems = validate(config)
        if problems:
            raise InvalidConfig(problems)
        if routing not in (BACKPRESSURE, STATIC):
            raise ValueError(f"unknown routing {routing!r}")
        self.cfg = config
        self.routing = routing
        self.static = routing == STATIC
        self.nc_repairs = config.nc_repairs
        g = config.graph
        self.N, self.L, self.S = g.n_nodes, len(g.links), len(config.flows)
        # independent streams so that, e.g., adding corruption to one link
        # does not reshuffle channel states or source arrivals
        streams = np.random.SeedSequence(config.seed).spawn(4)
        self.rng_channel, self.rng_ties, self.rng_loss, self.rng = (
            np.random.default_rng(ss) for ss in streams
        )
        self.kern = kernel.backend()
        self.slot = 0

        self.src = np.array([lk.src for lk in g.links], dtype=np.int64)
        self.dst = np.array([lk.dst for lk in g.links], dtype=np.int64)
        self.src_l = self.src.tolist()
        self.dst_l = self.dst.tolist()
        self.rate_l = [lk.rate for lk in g.links]
        self.nominal = np.array(self.rate_l, dtype=np.float64)
        self.on_prob = np.array([lk.on_prob for lk in g.links], dtype=np.float64)
        self.corrupt_l = [lk.corrupt_prob for lk in g.links]
        self.probe_links = (
            [l for l, p in enumerate(self.corrupt_l) if p > 0] if config.gossip_probes else []
        )
        self.adm = np.array(admissible_matrix(g, config.flows, config.link_scope), dtype=np.uint8).reshape(self.L, self.S)
        self.K = policy_for(config).k_vector(self.N)
        self.capacity = [config.buffer_size(i) for i in range(self.N)]
        # exact weight ties prefer links that move their flow closer to its
        # destination (rank 0) over sideways (1) and backward (2) hops
        far = self.N
        dist = [hops_to(g, f.destination) for f in config.flows]
        rank = np.array(
            [[1 - dist[s].get(lk.src, far) + dist[s].get(lk.dst, far)
              if lk.dst in dist[s] and lk.src in dist[s] else 0
              for s in range(self.S)] for lk in g.links],
            dtype=np.float64,
        ).reshape(self.L, self.S)
        self.decider = self.kern.Decider(
            self.K, self.src, self.dst, self.adm, self.N, config.exact_limit, rank
        )

        self.flows = config.flows
        self.source = [f.source for f in config.flows]
        self.dest = [f.destination for f in config.flows]

        self.U = np.zeros((self.N, self.S), dtype=np.int64)
        self.node_total = [0] * self.N
        self.q = [[deque() for _ in range(self.S)] for _ in range(self.N)]
        self.gossip = GossipTable(self.N, self.S, config.gossip_staleness)
        self.est = LinkEstimators(self.rate_l, config.estimator_window)

        self.tcp: dict[int, TcpState] = {}
        self.edge: dict[int, EdgeCoder] = {}
        self.rx: dict[int, Receiver] = {}
        self.controllers: list[tuple[int, list[int], FlowControllerState]] = []
        self.poisson: list[int] = []
        ctl_by_node: dict[int, list[int]] = defaultdict(list)
        for f in config.flows:
            if f.transport.is_tcp:
                variant = (Variant.LOSS_BASED if f.transport is Transport.LOSS_BASED_TCP
                           else Variant.DELAY_BASED)
                self.tcp[f.id] = TcpState(variant=variant, cwnd=float(f.initial_cwnd))
                self.edge[f.id] = EdgeCoder(f.id)
                self.rx[f.id] = Receiver(f.id)
            elif f.transport is Transport.CONTROLLED_NON_TCP:
                ctl_by_node[f.source].append(f.id)
            else:
                self.poisson.append(f.id)
        for node, ids in sorted(ctl_by_node.items()):
            weights = tuple(config.flows[s].utility_weight for s in ids)
            self.controllers.append(
                (node, ids, FlowControllerState(config.flowctl_M, config.flowctl_Rmax, weights))
            )

        self.acks: dict[int, list] = defaultdict(list)
        self.counters = [FlowCounters() for _ in range(self.S)]
        self.drop_log: list[tuple[int, int]] = []
        self.exact_slots = 0

        if routing == STATIC:
            self.routes = compute_routes(g, config.flows)
            check_routes(g, self.routes)
            self.next_link = next_hop_links(g, self.routes)
            self.fifo = [deque() for _ in range(self.N)]

        H, W = config.horizon_slots, config.throughput_window
        self.n_windows = -(-H // W)
        self.tp_series = np.zeros((self.S, self.n_windows))
        self.bl_series = np.zeros((self.n_windows, self.N, self.S))
        self.total_backlog = np.zeros(H)
        self._win_goodput = [0] * self.S
        self._win_backlog = np.zeros((self.N, self.S))
        self._stopped = False
        self._row = DRAW_CHUNK
        self._window, self._horizon = W, H

    # ---- admission -------------------------------------------------------

    def _enqueue(self, node: int, pkt: PacketRecord, front: bool = False) -> None:
        s = pkt.flow
        queue = self.fifo[node] if self.static else self.q[node][s]
        if front:
            queue.appendleft(pkt)
        else:
            queue.append(pkt)
        self.U[node, s] += 1
        self.node_total[node] += 1

    def _remove_tail(self, node: int, flow: int) -> PacketRecord:
        if self.static:
            fifo = self.fifo[node]
            for k in range(len(fifo) - 1, -1, -1):
                if fifo[k].flow == flow:
                    pkt = fifo[k]
                    del fifo[k]
                    break
        else:
            pkt = self.q[node][flow].pop()
        self.U[node, flow] -= 1
        self.node_total[node] -= 1
        return pkt

    def _drop(self, pkt: PacketRecord) -> None:
        s = pkt.flow
        self.counters[s].dropped += 1
        if pkt.block != PLAIN and self.edge[s].record_drop(pkt):
            self.drop_log.append((self.slot, s))

    def inject(self, node: int, pkt: PacketRecord, front: bool = False) -> bool:
        """Offer a packet to ``node``'s edge buffer; returns whether it was queued.

        ``front`` puts it at the head of its queue (repairs jump the line).
        """
        s = pkt.flow
        self.counters[s].injected += 1
        if front and self.node_total[node] < self.capacity[node]:
            self._enqueue(node, pkt, True)
            return True
        if self.node_total[node] < self.capacity[node]:
            if self.static:
                self.fifo[node].append(pkt)
            else:
                self.q[node][s].append(pkt)
            self.U[node, s] += 1
            self.node_total[node] += 1
            return True
        row = self.U[node].tolist()
        victim = max(range(self.S), key=lambda f: (row[f], -f))
        if victim == s:
            self._drop(pkt)
            return False
        self._drop(self._remove_tail(node, victim))
        self._enqueue(node, pkt, front)
        return True

    def drop_at_edge(self, flow: int) -> bool:
        """Force a congestion drop of ``flow``'s newest queued packet at its source."""
        node = self.source[flow]
        if self.U[node, flow] == 0:
            return False
        self._drop(self._remove_tail(node, flow))
        return True

    # ---- per-slot phases -------------------------------------------------

    def _emit(self, t: int) -> None:
        stop = self.cfg.source_stop_slot
        stopped = stop is not None and t >= stop
        if stopped and not self._stopped:
            # the application has no more data; TCP still recovers what is
            # outstanding, so only retransmissions continue
            self._stopped = True
            for s, edge in self.edge.items():
                block = edge.close_current()
                if block is not None:
                    self.rx[s].resize(block.id, block.size, t)
        for s, st in self.tcp.items():
            edge = self.edge[s]
            # cheap pre-checks keep the common slot free of calls
            if (t - st.last_progress >= TIMEOUT_FLOOR and (st.inflight or edge.outstanding)
                    and tcp_timed_out(st, t, edge.outstanding)):
                lost = edge.announce()
                tcp_on_loss_signal(st, LossKind.TIMEOUT, t)
                # packets still sitting in the edge queue are not lost; the
                # coding shim keeps them counted so their ACKs do not open
                # fresh window space on top of them
                st.inflight = int(self.U[self.source[s], s])
                st.retx_pending = max(st.retx_pending + lost, 1)
            if int(st.cwnd) <= st.inflight or (stopped and not st.retx_pending):
                continue
            n = tcp_emit(st, t, st.retx_pending if stopped else None)
            if n:
                node = self.source[s]
                r = min(n, st.retx_pending)
                st.retx_pending -= r
                pkts = edge.retransmit(r, t, self._queued_blocks(node, s)) if r else []
                # absorbed retransmissions never enter the network
                st.inflight -= r - len(pkts)
                if n > r:
                    pkts += edge.encode(n - r, st.cwnd, t)
                for p in pkts:
                    self.inject(node, p)
        if stopped:
            return
        for node, ids, ctl in self.controllers:
            counts = flowctl_packets(ctl, [int(self.U[node, s]) for s in ids])
            for s, n in zip(ids, counts):
                for _ in range(n):
                    self.inject(node, PacketRecord(s, PLAIN, t))
        for s in self.poisson:
            for _ in range(poisson_emit(self.flows[s].arrival_rate, self.rng)):
                self.inject(self.source[s], PacketRecord(s, PLAIN, t))

    def _draw(self):
        """Channel states and tie-break keys for the current slot."""
        if self._row == DRAW_CHUNK:
            L, S = self.L, self.S
            u = self.rng_channel.random((DRAW_CHUNK, L))
            self._on = np.ascontiguousarray(u < self.on_prob).view(np.uint8)
            keys = self.rng_ties.random((DRAW_CHUNK, S + L))
            self._fkeys = np.ascontiguousarray(keys[:, :S])
            self._lkeys = np.ascontiguousarray(keys[:, S:])
            self._row = 0
        r = self._row
        self._row += 1
        return self._on[r], self._fkeys[r], self._lkeys[r]

    def _activate_backpressure(self, on, flow_key, link_key):
        V = self.U if self.gossip.staleness == 0 else self.gossip.reported
        rate = self.est.effective_rate() if self.cfg.loss_aware else self.nominal
        flows, _, active, exact = self.decider.decide(self.U, V, rate, on, flow_key, link_key)
        self.exact_slots += exact
        return [(l, flows[l]) for l in active]

    def _activate_static(self, on):
        heads = [-1] * self.N
        lengths = [len(f) for f in self.fifo]
        for i, fifo in enumerate(self.fifo):
            if fifo:
                heads[i] = self.next_link[(i, fifo[0].flow)]
        active = greedy_fifo_activation(self.cfg.graph, on, heads, lengths)
        return [(l, -1) for l in active]

    def _transmit(self, t: int, plan) -> tuple[list, set]:
        arrivals = []
        senders = set()
        U = self.U
        node_total = self.node_total
        dest = self.dest
        for l, s in plan:
            i, j, R = self.src_l[l], self.dst_l[l], self.rate_l[l]
            if self.static:
                fifo = self.fifo[i]
                batch = []
                while fifo and len(batch) < R and self.next_link[(i, fifo[0].flow)] == l:
                    batch.append(fifo.popleft())
            else:
                qs = self.q[i][s]
                batch = [qs.popleft() for _ in range(min(R, len(qs)))]
            n = len(batch)
            if not n:
                continue
            senders.add(i)
            node_total[i] -= n
            p_loss = self.corrupt_l[l]
            lost = (self.rng_loss.random(n) < p_loss).tolist() if p_loss > 0 else None
            ok = 0
            for k, pkt in enumerate(batch):
                f = pkt.flow
                U[i, f] -= 1
                if lost is not None and lost[k]:
                    self.counters[f].corrupted += 1
                    continue
                ok += 1
                pkt.hops += 1
                if j == dest[f]:
                    arrivals.append(pkt)
                else:
                    self._enqueue(j, pkt)
            update_estimators(self.est, l, n, ok, R, t)
        return arrivals, senders

    def _receive(self, t: int, arrivals) -> None:
        win = self._win_goodput
        for pkt in arrivals:
            s = pkt.flow
            c = self.counters[s]
            c.delivered += 1
            b = pkt.block
            if b == PLAIN:
                c.goodput += 1
                win[s] += 1
                continue
            verdict = self.rx[s].on_packet(b, self.edge[s].blocks[b].size, t, pkt.span)
            if verdict == ACK:
                c.goodput += 1
                win[s] += 1
            due = t + (pkt.hops or 1)
            self.acks[due].append((s, b, verdict, due - pkt.created_at))

        events = self.acks.pop(t, None)
        if events:
            acks: dict[int, list] = {}
            dups: dict[int, int] = {}
            for s, block, verdict, rtt in events:
                # duplicates and gap dupacks both report a packet that left
                # the network, so both release window space
                if verdict == DUPLICATE or self.edge[s].on_receiver_ack(block) == DUPACK:
                    dups[s] = dups.get(s, 0) + 1
                elif s in acks:
                    acks[s].append(rtt)
                else:
                    acks[s] = [rtt]
            for s in sorted(acks.keys() | dups.keys()):
                st = self.tcp[s]
                if s in acks:
                    rtts = acks[s]
                    tcp_on_ack(st, len(rtts), sum(rtts) / len(rtts), t)
                if s in dups:
                    if tcp_on_dupack(st, dups[s], True, t):
                        lost = self.edge[s].announce()
                        tcp_on_loss_signal(st, LossKind.TRIPLE_DUP, t)
                        st.inflight = max(0, st.inflight - lost)
                        st.retx_pending += lost

        if self.nc_repairs:
            for s, rx in self.rx.items():
                stall = STALL_RTTS * self.tcp[s].rtt_estimate
                blocks = rx.blocks
                for b in rx.pending:
                    if t - blocks[b].last_activity >= stall:
                        break
                else:
                    continue
                edge = self.edge[s]
                sent = edge.blocks
                node = self.source[s]
                for req in rx.check_repairs(t, stall, lambda b: sent[b].dof_sent):
                    queued = self._queued_in_block(node, s, req.block)
                    for p in edge.repair(req, t, queued):
                        self.counters[s].repairs += 1
                        self.inject(node, p, front=True)

    def _queued_blocks(self, node: int, flow: int) -> dict[int, int]:
        """Block id -> coded packets of ``flow`` waiting at ``node``."""
        queue = self.fifo[node] if self.static else self.q[node][flow]
        out: dict[int, int] = {}
        for p in queue:
            if p.flow == flow:
                out[p.block] = out.get(p.block, 0) + 1
        return out

    def _queued_in_block(self, node: int, flow: int, block: int) -> int:
        queue = self.fifo[node] if self.static else self.q[node][flow]
        return sum(1 for p in queue if p.flow == flow and p.block == block)

    def _gossip(self, t: int, senders) -> None:
        g = self.gossip
        if g.staleness <= 1:
            np.copyto(g.reported, self.U)
            g.reported_at.fill(t)
            g.refreshes += self.N
            self._probe(t, None)
            return
        broadcast = set()
        for i in range(self.N):
            if i in senders:
                g.reported[i] = self.U[i]
            elif t - g.reported_at[i] >= g.staleness:
                g.reported[i] = self.U[i]
                broadcast.add(i)
            else:
                continue
            g.reported_at[i] = t
            g.refreshes += 1
        if broadcast:
            self._probe(t, broadcast)

    def _probe(self, t: int, broadcast) -> None:
        """A periodic gossip broadcast doubles as a loss sample on each out-link.

        Only lossy links are sampled: a link that never corrupts would add
        nothing but successes, which leaves its estimates unchanged.
        """
        if not self.probe_links:
            return
        u = self.rng_loss.random(len(self.probe_links)).tolist()
        for k, l in enumerate(self.probe_links):
            if broadcast is None or self.src_l[l] in broadcast:
                ok = int(u[k] >= self.corrupt_l[l])
                update_estimators(self.est, l, 1, ok, self.rate_l[l], t)

    def _metrics(self, t: int) -> None:
        self.total_backlog[t] = sum(self.node_total)
        np.add(self._win_backlog, self.U, out=self._win_backlog)
        W = self._window
        if (t + 1) % W == 0 or t + 1 == self._horizon:
            w = t // W
            span = t - w * W + 1
            self.tp_series[:, w] = np.asarray(self._win_goodput) / span
            self.bl_series[w] = self._win_backlog / span
            self._win_goodput = [0] * self.S
            self._win_backlog[:] = 0

    def step(self) -> None:
        t = self.slot
        self._emit(t)
        on, flow_key, link_key = self._draw()
        if self.static:
            plan = self._activate_static(on)
        else:
            plan = self._activate_backpressure(on, flow_key, link_key)
        arrivals, senders = self._transmit(t, plan)
        self._receive(t, arrivals)
        if self.routing == BACKPRESSURE:
            self._gossip(t, senders)
        self._metrics(t)
        self.slot += 1

    def run(self) -> RunResult:
        while self.slot < self.cfg.horizon_slots:
            self.step()
        return self.result()

    def queued_per_flow(self) -> list[int]:
        return self.U.sum(axis=0).tolist()

    def result(self, **stability_inputs) -> RunResult:
        cfg = self.cfg
        return RunResult(
            seed=cfg.seed,
            digest=cfg.digest(),
            routing=self.routing,
            horizon=cfg.horizon_slots,
            window=cfg.throughput_window,
            throughput_series=self.tp_series,
            backlog_series=self.bl_series,
            totals=tuple(c.goodput for c in self.counters),
            counters=tuple(self.counters),
            queued=tuple(self.queued_per_flow()),
            total_backlog=self.total_backlog[: self.slot],
            stability=stability_report(self.total_backlog[: self.slot], **stability_inputs),
            exact_slots=self.exact_slots,
            tcp=tuple((s, st) for s, st in sorted(self.tcp.items())),
            drop_log=list(self.drop_log),
        )


def run(config: ScenarioConfig, routing: str = BACKPRESSURE) -> RunResult:
    """Simulate ``config`` to its horizon; identical inputs give identical results."""
    return Simulation(config, routing).run()
