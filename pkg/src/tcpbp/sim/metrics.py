"""Run metrics: fairness, backlog stability monitor, drift bound."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

GROWTH_FACTOR = 1.05
CHECKPOINTS = 10


def jain_index(throughputs: Sequence[float]) -> float:
    """(sum x)^2 / (n * sum x^2); 0 (with a warning) when every rate is zero."""
    x = np.asarray(throughputs, dtype=float)
    if x.size == 0:
        raise ValueError("Jain index needs at least one flow")
    sq = float(np.sum(x * x))
    if sq == 0.0:
        log.warning("all throughputs are zero; fairness index set to 0")
        return 0.0
    return float(np.sum(x)) ** 2 / (x.size * sq)


def drift_bound(B: float, eps: float, n_links: int, n_flows: int, K: float,
                f_max: float) -> float:
    """Time-average backlog bound (B + 2|L||S|K F_max) / (2 eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return (B + 2.0 * n_links * n_flows * K * f_max) / (2.0 * eps)


@dataclass(frozen=True)
class StabilityReport:
    checkpoint_means: tuple[float, ...]
    verdict: str  # "bounded" | "growing"
    time_average: float
    bound: float | None = None

    @property
    def bounded(self) -> bool:
        return self.verdict == "bounded"


def growth_verdict(means: Sequence[float], factor: float = GROWTH_FACTOR) -> str:
    """"growing" iff each of the last three checkpoints beats its predecessor by > 5%."""
    if len(means) < 4:
        return "bounded"
    tail = means[-4:]
    rising = all(tail[k + 1] > factor * tail[k] for k in range(3))
    return "growing" if rising else "bounded"


def stability_report(total_backlog: Sequence[float], checkpoints: int = CHECKPOINTS,
                     B: float | None = None, eps: float | None = None,
                     n_links: int = 0, n_flows: int = 0, K: float = 0.0,
                     f_max: float = 1.0) -> StabilityReport:
    """Split the per-slot total backlog into equal windows and judge the trend."""
    x = np.asarray(total_backlog, dtype=float)
    if x.size == 0:
        raise ValueError("empty backlog trace")
    chunks = np.array_split(x, min(checkpoints, x.size))
    means = tuple(float(c.mean()) for c in chunks)
    bound = None
    if B is not None and eps is not None:
        bound = drift_bound(B, eps, n_links, n_flows, K, f_max)
    return StabilityReport(means, growth_verdict(means), float(x.mean()), bound)
