"""Parameter sweeps: cross product of an axis with seeds, averaged per point."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..topology import KPolicy, ScenarioConfig
from .engine import BACKPRESSURE, RunResult, run

AXES = ("corrupt_prob", "K", "M")


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: object
    routing: str
    seeds: tuple[int, ...]
    throughput: tuple[float, ...]   # per flow, packets/slot, mean over seeds
    total: float                    # sum over flows
    jain: float                     # mean over seeds
    mean_backlog: float
    bounded: int                    # seeds with a "bounded" verdict

    def as_dict(self) -> dict:
        out = {
            "axis": self.axis,
            "value": _plain(self.value),
            "routing": self.routing,
            "seeds": len(self.seeds),
            "total": self.total,
            "jain": self.jain,
            "mean_backlog": self.mean_backlog,
            "bounded": self.bounded,
        }
        for s, x in enumerate(self.throughput):
            out[f"flow{s}"] = x
        return out


def _plain(value):
    if isinstance(value, KPolicy):
        return value.to_json()
    return value


def apply_axis(config: ScenarioConfig, axis: str, value, lossy_links=None) -> ScenarioConfig:
    """The config at one sweep point."""
    if axis == "corrupt_prob":
        links = lossy_links if lossy_links is not None else range(len(config.graph.links))
        return config.replace(graph=config.graph.with_corruption(links, float(value)))
    if axis == "K":
        policy = value if isinstance(value, KPolicy) else KPolicy.parse(value)
        return config.replace(k_policy=policy)
    if axis == "M":
        return config.replace(flowctl_M=float(value))
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {AXES}")


def summarize(axis: str, value, routing: str, results: Sequence[RunResult]) -> SweepRow:
    tp = np.mean([r.throughput for r in results], axis=0)
    return SweepRow(
        axis=axis,
        value=value,
        routing=routing,
        seeds=tuple(r.seed for r in results),
        throughput=tuple(float(x) for x in tp),
        total=float(tp.sum()),
        jain=float(np.mean([r.jain for r in results])),
        mean_backlog=float(np.mean([r.mean_total_backlog for r in results])),
        bounded=sum(r.stability.bounded for r in results),
    )


def sweep(config: ScenarioConfig, axis: str, values: Sequence, seeds: Sequence[int],
          lossy_links=None, routing: str = BACKPRESSURE) -> list[SweepRow]:
    """One summary row per axis value, each averaged over ``seeds``."""
    if not len(values):
        raise ValueError("sweep axis needs at least one value")
    rows = []
    for value in values:
        point = apply_axis(config, axis, value, lossy_links)
        results = [run(point.replace(seed=int(seed)), routing) for seed in seeds]
        rows.append(summarize(axis, value, routing, results))
    return rows
