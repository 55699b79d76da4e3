"""Result files. Identical results always produce identical bytes."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .engine import RunResult

FORMATS = ("csv", "jsonl")
SERIES_COLUMNS = ("slot", "flow", "throughput", "backlog_total")


def series_rows(result: RunResult) -> list[dict]:
    """One row per (window, flow); ``slot`` is the window's last slot + 1."""
    rows = []
    W, H = result.window, result.horizon
    per_flow_backlog = result.backlog_series.sum(axis=1)  # [window, flow]
    for w in range(result.throughput_series.shape[1]):
        slot = min((w + 1) * W, H)
        for s in range(result.n_flows):
            rows.append({
                "slot": slot,
                "flow": s,
                "throughput": round(float(result.throughput_series[s, w]), 9),
                "backlog_total": round(float(per_flow_backlog[w, s]), 9),
            })
    return rows


def summary_row(result: RunResult) -> dict:
    row = {
        "seed": result.seed,
        "digest": result.digest,
        "routing": result.routing,
        "horizon": result.horizon,
        "jain": round(result.jain, 9),
        "verdict": result.stability.verdict,
        "mean_backlog": round(result.mean_total_backlog, 9),
        "conservation": result.conservation_ok(),
    }
    for s, total in enumerate(result.totals):
        row[f"total_flow{s}"] = total
    for s, c in enumerate(result.counters):
        row[f"dropped_flow{s}"] = c.dropped
        row[f"corrupted_flow{s}"] = c.corrupted
        row[f"repairs_flow{s}"] = c.repairs
    return row


def render(rows: list[dict], fmt: str) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    if fmt == "jsonl":
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in rows)
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def write_rows(rows: list[dict], path: Path, fmt: str) -> Path:
    path.write_text(render(rows, fmt), encoding="utf-8")
    return path


def emit(result: RunResult, out_dir, fmt: str = "csv") -> tuple[Path, Path]:
    """Write ``series.<ext>`` and ``summary.<ext>`` into ``out_dir``.

    Raises OSError when the directory cannot be created or written.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series = write_rows(series_rows(result), out / f"series.{fmt}", fmt)
    summary = write_rows([summary_row(result)], out / f"summary.{fmt}", fmt)
    return series, summary
