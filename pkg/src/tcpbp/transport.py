"""Traffic sources: window-based TCP models, drift+penalty controller, Poisson."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

TIMEOUT_FLOOR = 10  # slots
VEGAS_ALPHA = 1.0
VEGAS_BETA = 3.0
RTT_GAIN = 1.0 / 8.0
INITIAL_SSTHRESH = 64.0


class Variant(str, Enum):
    LOSS_BASED = "loss-based"
    DELAY_BASED = "delay-based"


class Mode(str, Enum):
    SLOW_START = "slow-start"
    CONGESTION_AVOIDANCE = "congestion-avoidance"
    TIMEOUT = "timeout"


class LossKind(str, Enum):
    TRIPLE_DUP = "triple-dup"
    TIMEOUT = "timeout"


@dataclass
class TcpState:
    variant: Variant = Variant.LOSS_BASED
    cwnd: float = 1.0
    ssthresh: float = INITIAL_SSTHRESH
    inflight: int = 0
    rtt_estimate: float = 1.0
    base_rtt: float = math.inf
    mode: Mode = Mode.SLOW_START
    dupacks: int = 0
    retx_pending: int = 0
    last_progress: int = 0
    timeouts: int = 0
    triple_dups: int = 0
    loss_slots: list = field(default_factory=list)

    @property
    def timeout_slots(self) -> float:
        return max(2.0 * self.rtt_estimate, TIMEOUT_FLOOR)


def tcp_on_ack(state: TcpState, acked: int, rtt_sample: float | None = None,
               slot: int | None = None) -> None:
    """Window growth for ``acked`` new ACKs arriving together."""
    if acked < 1:
        raise ValueError("tcp_on_ack needs at least one ACK")
    if rtt_sample is not None:
        state.rtt_estimate = (1.0 - RTT_GAIN) * state.rtt_estimate + RTT_GAIN * rtt_sample
        state.base_rtt = min(state.base_rtt, rtt_sample)
    state.inflight = max(0, state.inflight - acked)
    state.dupacks = 0
    if slot is not None:
        state.last_progress = slot

    if state.variant is Variant.LOSS_BASED:
        if state.cwnd < state.ssthresh:
            state.mode = Mode.SLOW_START
            state.cwnd += acked
            if state.cwnd >= state.ssthresh:
                state.mode = Mode.CONGESTION_AVOIDANCE
        else:
            state.mode = Mode.CONGESTION_AVOIDANCE
            state.cwnd += acked / state.cwnd
        return

    # delay-based: queueing backlog estimate in segments
    base = state.base_rtt if math.isfinite(state.base_rtt) else state.rtt_estimate
    expected = state.cwnd / base
    actual = state.cwnd / state.rtt_estimate
    diff = (expected - actual) * base
    state.mode = Mode.CONGESTION_AVOIDANCE
    if diff < VEGAS_ALPHA:
        state.cwnd += 1.0
    elif diff > VEGAS_BETA:
        state.cwnd = max(1.0, state.cwnd - 1.0)


def tcp_on_dupack(state: TcpState, count: int, delivered: bool = True,
                  slot: int | None = None) -> bool:
    """Register duplicate ACKs; returns True once three have accumulated.

    ``delivered`` dupacks still report data that reached the receiver, so
    they release window space (SACK-style).
    """
    if delivered:
        state.inflight = max(0, state.inflight - count)
        if slot is not None:
            state.last_progress = slot
    state.dupacks += count
    return state.dupacks >= 3


def tcp_on_loss_signal(state: TcpState, kind: LossKind, slot: int | None = None) -> None:
    half = state.cwnd / 2.0
    state.ssthresh = max(half, 2.0)
    state.dupacks = 0
    if slot is not None:
        state.loss_slots.append((slot, kind))
        state.last_progress = slot
    if kind is LossKind.TRIPLE_DUP:
        state.cwnd = max(half, 1.0)
        state.mode = Mode.CONGESTION_AVOIDANCE
        state.triple_dups += 1
    else:
        state.cwnd = 1.0
        state.inflight = 0
        state.mode = Mode.SLOW_START
        state.timeouts += 1


def tcp_timed_out(state: TcpState, slot: int, outstanding: int = 0) -> bool:
    """No progress for the timeout interval while data is unacknowledged.

    ``outstanding`` counts sent-but-unacknowledged data the window no longer
    tracks (for example after an earlier timeout reset ``inflight``).
    """
    if state.inflight <= 0 and outstanding <= 0:
        return False
    return slot - state.last_progress >= state.timeout_slots


def tcp_emit(state: TcpState, slot: int, limit: int | None = None) -> int:
    """Packets the window allows this slot (at most ``limit``); counted as in flight."""
    count = max(0, int(math.floor(state.cwnd)) - state.inflight)
    if limit is not None:
        count = min(count, limit)
    if count and state.inflight == 0:
        state.last_progress = slot
    state.inflight += count
    return count


@dataclass
class FlowControllerState:
    """Drift+penalty admission for the controlled flows sourced at one node."""

    M: float
    Rmax: float
    weights: tuple[float, ...] = (1.0,)
    last_rate: tuple[float, ...] = ()
    carry: list = field(default_factory=list)

    def __post_init__(self):
        if self.M <= 0 or self.Rmax <= 0:
            raise ValueError("M and Rmax must be positive")
        if not self.carry:
            self.carry = [0.0] * len(self.weights)


def water_fill(M: float, backlogs: Sequence[float], weights: Sequence[float],
               Rmax: float) -> list[float]:
    """Maximise sum(M w_s log x_s - U_s x_s) subject to sum(x_s) <= Rmax.

    Stationarity gives x_s = M w_s / (U_s + nu); nu = 0 unless the
    unconstrained optimum overshoots Rmax, then nu solves the budget.
    """
    if any(u < 0 for u in backlogs):
        raise ValueError("backlogs must be non-negative")

    def total(nu: float) -> float:
        return sum(M * w / (u + nu) for u, w in zip(backlogs, weights))

    if all(u > 0 for u in backlogs) and total(0.0) <= Rmax:
        return [M * w / u for u, w in zip(backlogs, weights)]
    lo, hi = 0.0, M * sum(weights) / Rmax
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if total(mid) > Rmax:
            lo = mid
        else:
            hi = mid
    return [M * w / (u + hi) for u, w in zip(backlogs, weights)]


def flowctl_rate(state: FlowControllerState, U_source) -> float | list[float]:
    """Controller output: one rate for a scalar backlog, a vector otherwise."""
    scalar = np.isscalar(U_source)
    backlogs = [U_source] if scalar else list(U_source)
    weights = state.weights if len(state.weights) == len(backlogs) else (1.0,) * len(backlogs)
    x = water_fill(state.M, backlogs, weights, state.Rmax)
    state.last_rate = tuple(x)
    return x[0] if scalar else x


def flowctl_packets(state: FlowControllerState, backlogs: Sequence[int]) -> list[int]:
    """Whole packets to admit this slot; fractional remainders carry over."""
    rates = flowctl_rate(state, list(backlogs))
    out = []
    for k, x in enumerate(rates):
        state.carry[k] += x
        n = int(state.carry[k])
        state.carry[k] -= n
        out.append(n)
    return out


def poisson_emit(lam: float, rng: np.random.Generator) -> int:
    if lam < 0:
        raise ValueError("arrival rate must be non-negative")
    return int(rng.poisson(lam)) if lam > 0 else 0


def steady_state_throughput(q: float, rtt: float) -> float:
    """Throughput from edge overflow probability q and constant RTT T: sqrt((1-q)/(T^3 q))."""
    if not 0.0 < q < 1.0:
        raise ValueError("overflow probability must lie strictly between 0 and 1")
    if rtt <= 0:
        raise ValueError("RTT must be positive")
    return math.sqrt((1.0 - q) / (rtt ** 3 * q))
