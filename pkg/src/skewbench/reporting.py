"""Report statistics and serialization.

CSV is the machine-readable contract: one row per recorded value with the
fixed column set below. JSON carries the whole report including the config
echo. Both are deterministic functions of the report, so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from typing import Iterable

import numpy as np

from .errors import InsufficientDataError
from .runconfig import RunReport, Series

CSV_HEADER = "round_or_probe_index,sim_time_s,node_id,estimator,value_ppb_or_ns,series_kind"

N_TIME_BUCKETS = 10


def _series_stats(values: np.ndarray) -> dict:
    stats = {
        "count": int(values.size),
        "mean": float(values.mean()),
        "std": float(values.std(ddof=1)) if values.size > 1 else 0.0,
        "max": float(values.max()),
    }
    for q, label in ((50, "p50"), (95, "p95"), (99, "p99")):
        stats[label] = float(np.percentile(values, q))
    return stats


def summarize(report: RunReport) -> list[dict]:
    """Per-series stats, pooled per-estimator stats with ratio columns, and
    time-bucketed error-bar rows.

    All rows are recomputable from the report's series; nothing here adds
    information beyond presentation.
    """
    if not report.series or all(len(s.values) == 0 for s in report.series):
        raise InsufficientDataError("report has no recorded values to summarize")
    rows: list[dict] = []
    for s in report.series:
        if not s.values:
            continue
        row = {"row": "series", "estimator": s.estimator, "node_id": s.node_id,
               "series_kind": s.kind}
        row.update(_series_stats(np.asarray(s.values, dtype=float)))
        rows.append(row)

    # Pooled per (estimator, kind), preserving first-appearance order.
    pooled: dict[tuple[str, str], list[float]] = {}
    times: dict[tuple[str, str], list[float]] = {}
    for s in report.series:
        key = (s.estimator, s.kind)
        pooled.setdefault(key, []).extend(s.values)
        times.setdefault(key, []).extend(s.sim_time_s)

    mean_abs: dict[tuple[str, str], float] = {}
    for key, vals in pooled.items():
        arr = np.abs(np.asarray(vals, dtype=float))
        if arr.size == 0:
            continue
        mean_abs[key] = float(arr.mean())

    for (estimator, kind), vals in pooled.items():
        if (estimator, kind) not in mean_abs:
            continue
        arr = np.asarray(vals, dtype=float)
        row = {"row": "pooled", "estimator": estimator, "node_id": -1, "series_kind": kind}
        row.update(_series_stats(arr))
        row["mean_abs"] = mean_abs[(estimator, kind)]
        # Ratio against the first estimator that recorded this kind.
        base = next((e for (e, k) in mean_abs if k == kind), None)
        if base is not None and mean_abs[(base, kind)] > 0:
            row["ratio_vs_" + base] = mean_abs[(estimator, kind)] / mean_abs[(base, kind)]
        rows.append(row)

    # Error-bar rows: mean and std per time bucket per pooled key.
    for (estimator, kind), vals in pooled.items():
        t = np.asarray(times[(estimator, kind)], dtype=float)
        v = np.abs(np.asarray(vals, dtype=float))
        if t.size < 2 or t.min() == t.max():
            continue
        edges = np.linspace(t.min(), t.max() + 1e-9, N_TIME_BUCKETS + 1)
        for b in range(N_TIME_BUCKETS):
            mask = (t >= edges[b]) & (t < edges[b + 1])
            if not mask.any():
                continue
            sel = v[mask]
            rows.append({
                "row": "bucket", "estimator": estimator, "node_id": -1,
                "series_kind": kind, "bucket": b,
                "t_center_s": float((edges[b] + edges[b + 1]) / 2),
                "count": int(sel.size),
                "mean": float(sel.mean()),
                "std": float(sel.std(ddof=1)) if sel.size > 1 else 0.0,
            })
    return rows


def _csv_lines(report: RunReport) -> Iterable[str]:
    yield CSV_HEADER
    for s in report.series:
        for i, t, v in zip(s.index, s.sim_time_s, s.values):
            yield f"{i},{t!r},{s.node_id},{s.estimator},{v!r},{s.kind}"


def emit(report: RunReport, format: str, path: str) -> str:
    """Write the report to ``path`` as ``csv`` or ``json``; returns the path.

    Refuses to write anything for an empty report, so a failed run never
    leaves a partial file behind.
    """
    if not report.series or all(len(s.values) == 0 for s in report.series):
        raise InsufficientDataError("refusing to emit a report with no recorded values")
    if format == "csv":
        payload = "\n".join(_csv_lines(report)) + "\n"
    elif format == "json":
        payload = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format {format!r}; expected csv or json")
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed writing report to {path}: {exc}") from exc
    return path


def load_report(path: str) -> RunReport:
    """Reload a JSON report written by :func:`emit`."""
    with open(path, "r", encoding="utf-8") as fh:
        return RunReport.from_dict(json.load(fh))
