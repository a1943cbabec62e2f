"""Named experiment families, config files, and run orchestration.

Five experiment families are exposed:

- ``compare``: four estimators on a 25-receiver star, paired delay streams.
- ``period-sweep``: the windowed-mean estimator across synchronization periods.
- ``unc-inject``: paired clean/contaminated runs around one forced uncertain delay.
- ``granularity-sweep``: all estimators across hardware clock granularities.
- ``flood``: two flooding variants on a 24-hop line.

Config files are flat ``key = value`` INI text with a ``[common]`` section and
one section per experiment; dotted keys (``mle.t_b_s = 200``) set
per-estimator parameters. ``SKEWBENCH_THREADS`` caps sub-run parallelism;
results are merged in submission order so the output is identical at any
thread count.
"""

from __future__ import annotations

import configparser
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from typing import Callable, Optional

from .errors import ConfigError
from .reporting import emit, load_report, summarize
from .runconfig import (
    FLOOD_ESTIMATORS,
    PAPER_COMPARE_PARAMS,
    PAPER_FLOOD_PARAMS,
    RunReport,
    Series,
    SimConfig,
)
from .simnet import inject_uncertain, run_flood, run_star

EXPERIMENTS = ("compare", "period-sweep", "unc-inject", "granularity-sweep", "flood")

# In-burst packet spacings chosen below the offset-constancy limit and away
# from whole multiples of the preset granules, so the stamps inside one burst
# sample distinct counter phases instead of sharing a single quantization
# error (equal spacing at an exact multiple of the tick would waste the
# burst's averaging).
COMPARE_GAP_NS = 99_400
SWEEP_GAP_NS = 26_180

_DESK_DURATION_S = {
    "compare": 14_400.0,
    "period-sweep": 7_200.0,
    "unc-inject": 6_000.0,
    "granularity-sweep": 10_800.0,
    "flood": 9_900.0,
}
_PAPER_DURATION_S = {
    "compare": 46_800.0,
    "period-sweep": 14_400.0,
    "unc-inject": 6_000.0,
    "granularity-sweep": 21_600.0,
    "flood": 22_500.0,
}


def default_config(experiment: str, paper_scale: bool = False) -> SimConfig:
    """The built-in parameterization of one experiment family."""
    durations = _PAPER_DURATION_S if paper_scale else _DESK_DURATION_S
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    duration = durations[experiment]
    if experiment == "compare":
        return SimConfig(
            topology="star", n_nodes=26,
            estimators=("mle", "lr", "direct", "kf"),
            estimator_params={k: dict(v) for k, v in PAPER_COMPARE_PARAMS.items()},
            intra_gap_ns=COMPARE_GAP_NS,
            duration_s=duration,
        )
    if experiment == "period-sweep":
        return SimConfig(
            topology="star", n_nodes=26, estimators=("mle",),
            n_packets=5, window=2, intra_gap_ns=COMPARE_GAP_NS,
            duration_s=duration,
        )
    if experiment == "unc-inject":
        return SimConfig(
            topology="star", n_nodes=2,
            estimators=("mle", "lr", "direct", "kf"),
            estimator_params={k: dict(v) for k, v in PAPER_COMPARE_PARAMS.items()},
            intra_gap_ns=COMPARE_GAP_NS,
            duration_s=duration,
        )
    if experiment == "granularity-sweep":
        return SimConfig(
            topology="star", n_nodes=11,
            estimators=("mle", "lr", "direct", "kf"),
            t_b_s=30.0,
            estimator_params={
                "mle": {"t_b_s": 30.0, "n_packets": 20, "window": 8},
                "kf": {"t_b_s": 30.0, "n_packets": 20, "window": 8},
                "lr": {"t_b_s": 30.0, "n_packets": 1, "table": 8},
                "direct": {"t_b_s": 30.0, "n_packets": 1},
            },
            intra_gap_ns=SWEEP_GAP_NS,
            duration_s=duration,
        )
    return SimConfig(
        topology="line", n_nodes=25,
        estimators=FLOOD_ESTIMATORS,
        estimator_params={k: dict(v) for k, v in PAPER_FLOOD_PARAMS.items()},
        warmup_s=900.0,
        duration_s=duration,
    )


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

_TUPLE_FLOAT_FIELDS = {"periods_s"}
_TUPLE_INT_FIELDS = {"granules_ns"}
_TUPLE_STR_FIELDS = {"estimators"}


def _coerce(name: str, raw: str, ftype: type) -> object:
    raw = raw.strip()
    try:
        if name in _TUPLE_STR_FIELDS:
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if name in _TUPLE_FLOAT_FIELDS:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if name in _TUPLE_INT_FIELDS:
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if ftype is int:
            return int(raw)
        if ftype is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse config key {name!r} from {raw!r}: {exc}") from exc


def load_config(path: str, experiment: str, paper_scale: bool = False) -> SimConfig:
    """Build a SimConfig from the experiment defaults plus an INI file.

    Keys in ``[common]`` apply to every experiment; keys in the experiment's
    own section override them. Dotted keys name per-estimator parameters.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc

    cfg = default_config(experiment, paper_scale)
    field_types = {f.name: f.type for f in fields(SimConfig)}
    simple_types = {"int": int, "float": float, "str": str}
    updates: dict[str, object] = {}
    est_params = {k: dict(v) for k, v in cfg.estimator_params.items()}
    for section in ("common", experiment):
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if "." in key:
                est, pkey = key.split(".", 1)
                ptype = float if pkey == "t_b_s" else int
                est_params.setdefault(est, {})[pkey] = _coerce(pkey, raw, ptype)
                continue
            if key not in field_types:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            ftype = simple_types.get(str(field_types[key]).replace("typing.", ""), str)
            updates[key] = _coerce(key, raw, ftype)
    updates["estimator_params"] = est_params
    return cfg.with_overrides(**updates)


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("SKEWBENCH_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn: Callable, items: list) -> list:
    """Run sub-jobs, optionally in parallel; results keep submission order."""
    workers = _max_workers()
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _relabel(series: list[Series], label: str) -> list[Series]:
    return [replace(s, estimator=f"{s.estimator}@{label}") for s in series]


def _assemble(experiment: str, cfg: SimConfig, series: list[Series]) -> RunReport:
    report = RunReport(experiment=experiment, config=cfg.to_dict(), seed=cfg.seed, series=series)
    report.summary = summarize(report)
    return report


def _run_compare(cfg: SimConfig) -> RunReport:
    subs = [cfg.with_overrides(estimators=(name,)) for name in cfg.estimators]
    reports = _map(run_star, subs)
    series = [s for r in reports for s in r.series]
    return _assemble("compare", cfg, series)


def _run_period_sweep(cfg: SimConfig) -> RunReport:
    subs = []
    for period in cfg.periods_s:
        params = {k: dict(v) for k, v in cfg.estimator_params.items()}
        params.setdefault("mle", {})["t_b_s"] = float(period)
        subs.append(cfg.with_overrides(estimators=("mle",), estimator_params=params))
    reports = _map(run_star, subs)
    series = []
    for period, rep in zip(cfg.periods_s, reports):
        series.extend(_relabel(rep.series, f"{period:g}s"))
    return _assemble("period-sweep", cfg, series)


def _run_granularity_sweep(cfg: SimConfig) -> RunReport:
    subs = [cfg.with_overrides(granule_ns=int(g)) for g in cfg.granules_ns]
    reports = _map(run_star, subs)
    series = []
    for g, rep in zip(cfg.granules_ns, reports):
        series.extend(_relabel(rep.series, f"{g}ns"))
    return _assemble("granularity-sweep", cfg, series)


def _run_unc_inject(cfg: SimConfig) -> RunReport:
    report = inject_uncertain(cfg, cfg.inject_round, cfg.inject_magnitude_ns)
    report.experiment = "unc-inject"
    return report


def run_experiment(name: str, cfg: Optional[SimConfig] = None) -> RunReport:
    """Run one experiment family and return its report."""
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    if cfg is None:
        cfg = default_config(name)
    if name == "compare":
        return _run_compare(cfg)
    if name == "period-sweep":
        return _run_period_sweep(cfg)
    if name == "granularity-sweep":
        return _run_granularity_sweep(cfg)
    if name == "unc-inject":
        return _run_unc_inject(cfg)
    return run_flood(cfg)
