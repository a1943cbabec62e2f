"""Network-level simulation: star estimation runs and line flooding runs.

A run is one sequential event loop over a shared true-time axis. Every
stochastic input (clock parameters, drift steps, per-link delays) comes from
its own keyed stream, so runs are deterministic given (config, seed) and
different estimators consume identical delay sequences, making comparisons
paired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import rng as rngmod
from .broadcast import BroadcastBatch, observations, t_shift_threshold_ns
from .delaymodel import DelayModel, sample_delay
from .errors import ConfigError, DegenerateBatchError, InsufficientDataError
from .estimators import KalmanState, RegressionTable, direct_estimate, min_offset_estimate
from .reporting import summarize
from .runconfig import (
    FLOOD_ESTIMATORS,
    PAPER_FLOOD_PARAMS,
    STAR_ESTIMATORS,
    EstimatorParams,
    RunReport,
    Series,
    SimConfig,
)
from .skewpipe import FifoPages
from .timebase import DriftProcess, SimClock, true_relative_skew


@dataclass(frozen=True)
class Topology:
    """Star: one reference broadcasting to the rest. Line: a chain rooted at
    the reference, each node hearing only its predecessor."""

    kind: str
    n_nodes: int
    reference: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("star", "line"):
            raise ConfigError(f"unknown topology kind {self.kind!r}")
        if self.n_nodes < 2:
            raise ConfigError("topology needs at least two nodes")
        if not 0 <= self.reference < self.n_nodes:
            raise ConfigError("reference must be one of the nodes")


@dataclass(frozen=True)
class ProbeRecord:
    """Logical readings of every node at one shared true instant."""

    probe_true_time: int
    readings_ns: tuple[int, ...]


def probe_errors(
    records: list[ProbeRecord], adjacency: Optional[list[tuple[int, int]]] = None
) -> tuple[list[int], list[int]]:
    """Per probe: worst adjacent-pair disagreement and worst any-pair
    disagreement. Adjacency defaults to consecutive node ids (a line)."""
    if not records:
        raise InsufficientDataError("no probe records")
    n = len(records[0].readings_ns)
    if n < 2:
        raise InsufficientDataError("sync error needs at least two nodes")
    adj = adjacency if adjacency is not None else [(i, i + 1) for i in range(n - 1)]
    local_errors = []
    global_errors = []
    for rec in records:
        vals = rec.readings_ns
        local_errors.append(max(abs(vals[i] - vals[j]) for i, j in adj))
        global_errors.append(max(vals) - min(vals))
    return local_errors, global_errors


# ---------------------------------------------------------------------------
# Node construction
# ---------------------------------------------------------------------------


def _build_clock(cfg: SimConfig, node_id: int) -> SimClock:
    g = rngmod.stream(cfg.seed, "clock", node_id)
    skew = float(g.uniform(-cfg.skew_bound_ppb, cfg.skew_bound_ppb))
    theta0 = int(g.integers(-cfg.theta0_range_ns, cfg.theta0_range_ns + 1))
    return SimClock(
        nominal_hz=cfg.nominal_hz,
        skew_ppb=skew,
        drift=DriftProcess(cfg.drift_kind, cfg.drift_step_ppb),
        offset_ns=theta0,
        granule_ns=cfg.granule_ns,
        skew_bound_ppb=cfg.skew_bound_ppb,
    )


class _DriftSchedule:
    """Advances every clock on a fixed absolute cadence so that all estimator
    runs under one seed see the identical skew path."""

    def __init__(self, cfg: SimConfig, clocks: dict[int, SimClock]) -> None:
        self.enabled = cfg.drift_kind != "constant"
        self.step_ns = int(round(cfg.drift_interval_s * 1e9))
        self.clocks = clocks
        self.rngs = {i: rngmod.stream(cfg.seed, "drift", i) for i in clocks} if self.enabled else {}
        self.steps_done = 0

    def advance_to(self, t_ns: int) -> None:
        if not self.enabled:
            return
        while (self.steps_done + 1) * self.step_ns <= t_ns:
            for i, clock in self.clocks.items():
                clock.advance_drift(self.step_ns, self.rngs[i])
            self.steps_done += 1


# ---------------------------------------------------------------------------
# Star-run estimator harnesses
# ---------------------------------------------------------------------------


class _MleHarness:
    """Windowed-mean pipeline; holds the last good estimate on a degenerate
    batch, reports nothing until the window has two pages."""

    def __init__(self, params: EstimatorParams, cfg: SimConfig) -> None:
        self.fifo = FifoPages(params.window, int(round(params.t_b_s * 1e9)))
        self.last: Optional[float] = None

    def ingest(self, batch: BroadcastBatch) -> Optional[float]:
        self.fifo.push_batch(batch)
        try:
            est = self.fifo.estimate()
        except DegenerateBatchError:
            return self.last
        if est is not None:
            self.last = est.skew_ppb
        return self.last


class _LrHarness:
    """Sliding regression table over per-broadcast mean offsets; no outlier
    filtering, matching its use as a baseline."""

    def __init__(self, params: EstimatorParams, cfg: SimConfig) -> None:
        self.table = RegressionTable(params.table)

    def ingest(self, batch: BroadcastBatch) -> Optional[float]:
        obs = observations(batch)
        local = float(np.mean([r for _, r in batch.stamps]))
        return self.table.update(local, float(np.mean(obs)))


class _DirectHarness:
    """Ratio of consecutive per-broadcast offsets; no averaging across rounds."""

    def __init__(self, params: EstimatorParams, cfg: SimConfig) -> None:
        self.prev: Optional[tuple[float, float]] = None

    def ingest(self, batch: BroadcastBatch) -> Optional[float]:
        obs = observations(batch)
        local = float(np.mean([r for _, r in batch.stamps]))
        offset = float(np.mean(obs))
        if self.prev is None:
            self.prev = (local, offset)
            return None
        tau = local - self.prev[0]
        est = direct_estimate(offset - self.prev[1], tau)
        self.prev = (local, offset)
        return est


class _KfHarness:
    """Two-state filter over accumulated mean offsets.

    Intervals are measured on the receiver's clock, the same basis as the
    observations, so the result is the relative rate rather than a rate per
    true second. Measurement noise is taken from the burst's own spread
    (pooled over the last ``window`` bursts for stability), so a burst
    carrying an uncertain delay arrives with a huge variance and is
    effectively ignored. No estimate is reported until ``window`` bursts have
    been seen, which is the filter's convergence horizon.
    """

    def __init__(self, params: EstimatorParams, cfg: SimConfig) -> None:
        if params.n_packets < 2:
            raise ConfigError("the Kalman harness needs bursts of at least 2 packets")
        self.kf = KalmanState(cfg.kf_q_offset_ns2, cfg.kf_q_skew_ppb2)
        self.base: Optional[tuple[float, float]] = None  # (local time, offset)
        self.prev_local: Optional[float] = None
        self.pool: list[float] = []
        self.window = params.window
        self.seen = 0

    def ingest(self, batch: BroadcastBatch) -> Optional[float]:
        obs = observations(batch)
        local = float(np.mean([r for _, r in batch.stamps]))
        m = float(np.mean(obs))
        sd = float(np.std(obs, ddof=1))
        self.pool.append(sd)
        if len(self.pool) > self.window:
            self.pool.pop(0)
        self.seen += 1
        if self.base is None:
            self.base = (local, m)
            self.prev_local = local
            return None
        pooled = math.sqrt(float(np.mean(np.square(self.pool))))
        sigma = max(sd, pooled)
        r = 2.0 * sigma * sigma / len(obs)
        interval = local - self.prev_local
        self.prev_local = local
        skew = self.kf.update(m - self.base[1], interval, r)
        return skew if self.seen >= self.window else None


_HARNESSES = {
    "mle": _MleHarness,
    "lr": _LrHarness,
    "direct": _DirectHarness,
    "kf": _KfHarness,
}


# ---------------------------------------------------------------------------
# Star runs
# ---------------------------------------------------------------------------


def _check_burst_feasible(cfg: SimConfig, params: EstimatorParams) -> None:
    t_shift = (params.n_packets - 1) * params.intra_gap_ns
    limit = t_shift_threshold_ns(cfg.skew_bound_ppb, cfg.nominal_hz)
    if t_shift >= limit:
        raise ConfigError(
            f"burst of {params.n_packets} packets spaced {params.intra_gap_ns} ns "
            f"spans {t_shift} ns, at or beyond the offset-constancy limit of {limit:.0f} ns "
            f"for a {cfg.skew_bound_ppb:.0f} ppb bound at {cfg.nominal_hz:.0f} Hz"
        )


def _run_star_estimator(
    cfg: SimConfig,
    params: EstimatorParams,
    inject: Optional[tuple[int, int]] = None,
) -> list[Series]:
    """One estimator's full star run; returns estimate and error series.

    ``inject`` forces an extra delay of the given magnitude (ns) onto the
    first packet of every receiver's burst at the given round index.
    """
    _check_burst_feasible(cfg, params)
    if params.name not in _HARNESSES:
        raise ConfigError(f"unknown estimator {params.name!r}")
    receivers = [i for i in range(cfg.n_nodes) if i != cfg.reference]
    clocks = {i: _build_clock(cfg, i) for i in range(cfg.n_nodes)}
    drift = _DriftSchedule(cfg, clocks)
    delay_model = cfg.resolve_delay()
    delay_rng = {j: rngmod.stream(cfg.seed, "delay", j) for j in receivers}
    harness = {j: _HARNESSES[params.name](params, cfg) for j in receivers}
    sender = clocks[cfg.reference]

    t_b_ns = int(round(params.t_b_s * 1e9))
    gap = params.intra_gap_ns
    n = params.n_packets
    rounds = int(cfg.duration_s * 1e9 // t_b_ns)

    recorded: dict[int, tuple[list, list, list, list]] = {
        j: ([], [], [], []) for j in receivers  # index, time, estimate, abs error
    }
    for r in range(1, rounds + 1):
        t0 = r * t_b_ns
        drift.advance_to(t0)
        sender_stamps = [sender.read_hardware(t0 + i * gap) for i in range(n)]
        for j in receivers:
            rx = clocks[j]
            grng = delay_rng[j]
            stamps = []
            for i in range(n):
                d = sample_delay(delay_model, grng).total_ns
                if inject is not None and r == inject[0] and i == 0:
                    d += inject[1]
                stamps.append((sender_stamps[i], rx.read_hardware(t0 + i * gap + d)))
            batch = BroadcastBatch(
                sender_id=cfg.reference,
                receiver_id=j,
                stamps=tuple(stamps),
                t_shift_ns=(n - 1) * gap,
                batch_true_time=t0,
            )
            est = harness[j].ingest(batch)
            if est is None:
                continue
            truth = true_relative_skew(rx, sender)
            idx, times, ests, errs = recorded[j]
            idx.append(r)
            times.append(t0 / 1e9)
            ests.append(est)
            errs.append(abs(est - truth))

    series: list[Series] = []
    for j in receivers:
        idx, times, ests, errs = recorded[j]
        common = dict(estimator=params.name, node_id=j,
                      index=tuple(idx), sim_time_s=tuple(times))
        series.append(Series(kind="skew_estimate_ppb", values=tuple(ests), **common))
        series.append(Series(kind="skew_error_ppb", values=tuple(errs), **common))
    return series


def run_star(cfg: SimConfig) -> RunReport:
    """Periodic broadcast rounds from the reference to every receiver, one
    sub-run per configured estimator, all fed identical delay streams."""
    if cfg.topology != "star":
        raise ConfigError("run_star requires a star topology")
    series: list[Series] = []
    for name in cfg.estimators:
        if name not in STAR_ESTIMATORS:
            raise ConfigError(f"unknown star estimator {name!r}")
        series.extend(_run_star_estimator(cfg, cfg.resolve_estimator(name)))
    report = RunReport(experiment="star", config=cfg.to_dict(), seed=cfg.seed, series=series)
    report.summary = summarize(report)
    return report


def inject_uncertain(cfg: SimConfig, round_index: int, magnitude_ns: int) -> RunReport:
    """Paired clean/injected star runs for recovery analysis.

    The same delay draws feed both runs; the injected run adds one extra delay
    of ``magnitude_ns`` to the first packet of round ``round_index``.
    """
    if cfg.topology != "star":
        raise ConfigError("inject_uncertain requires a star topology")
    if round_index < 1:
        raise ConfigError("round_index must be at least 1")
    series: list[Series] = []
    for name in cfg.estimators:
        if name not in STAR_ESTIMATORS:
            raise ConfigError(f"unknown star estimator {name!r}")
        params = cfg.resolve_estimator(name)
        rounds = int(cfg.duration_s * 1e9 // int(round(params.t_b_s * 1e9)))
        if round_index > rounds:
            raise ConfigError(
                f"round_index {round_index} exceeds the {rounds} rounds of a "
                f"{cfg.duration_s:.0f} s run at t_b={params.t_b_s:.0f} s for {name}"
            )
        for variant, inject in (("clean", None), ("injected", (round_index, magnitude_ns))):
            for s in _run_star_estimator(cfg, params, inject=inject):
                series.append(replace(s, kind=s.kind.replace("_ppb", f"_{variant}_ppb")))
    config = cfg.to_dict()
    config["inject"] = {"round_index": round_index, "magnitude_ns": magnitude_ns}
    report = RunReport(experiment="unc-inject", config=config, seed=cfg.seed, series=series)
    report.summary = summarize(report)
    return report


# ---------------------------------------------------------------------------
# Flooding synchronization on a line
# ---------------------------------------------------------------------------


class _FloodNode:
    """Per-hop state: the raw clock plus the applied compensation."""

    def __init__(self, clock: SimClock) -> None:
        self.clock = clock
        self.skew_est: Optional[float] = None

    def apply(self, skew_ppb: Optional[float], offset_correction_ns: float, t_ns: int) -> None:
        """Rebase the logical clock at ``t_ns``: adopt the new rate and
        subtract the offset correction, keeping the reading continuous."""
        clock = self.clock
        if skew_ppb is not None:
            self.skew_est = skew_ppb
        rate = 1.0 + (self.skew_est or 0.0) * 1e-9
        current = clock.read_logical(t_ns)
        target = current - offset_correction_ns
        hw = clock.read_hardware(t_ns)
        num, den = float(rate).as_integer_ratio()
        prod = (num * hw + den // 2) // den
        clock.set_logical(rate, int(round(target - prod)))


def _flood_skew_update(node_kind: str, state, batch: BroadcastBatch) -> Optional[float]:
    if node_kind == "mle-pulsesync":
        state.push_batch(batch)
        try:
            est = state.estimate()
        except DegenerateBatchError:
            return None
        return est.skew_ppb if est is not None else None
    # Regression baseline: one (local time, mean offset) point per round.
    local = float(np.mean([r for _, r in batch.stamps]))
    offset = float(np.mean(observations(batch)))
    return state.update(local, offset)


def run_flood(cfg: SimConfig) -> RunReport:
    """Root-initiated rapid flood along a line, one sub-run per variant.

    Each hop re-broadcasts right after processing a round, stamping packets
    with its own compensated logical clock; the next hop estimates skew
    against its hardware clock and corrects its offset from the burst's
    smallest observed delay. Probes record every node's logical reading and
    the report carries the per-probe worst local (adjacent) and global (any
    pair) disagreements, starting after the configured warmup.
    """
    if cfg.topology != "line":
        raise ConfigError("run_flood requires a line topology")
    series: list[Series] = []
    for variant in cfg.estimators:
        if variant not in FLOOD_ESTIMATORS:
            raise ConfigError(f"unknown flood estimator {variant!r}")
        series.extend(_run_flood_variant(cfg, variant))
    report = RunReport(experiment="flood", config=cfg.to_dict(), seed=cfg.seed, series=series)
    report.summary = summarize(report)
    return report


def _run_flood_variant(cfg: SimConfig, variant: str) -> list[Series]:
    params = cfg.resolve_estimator(variant)
    _check_burst_feasible(cfg, params)
    n_nodes = cfg.n_nodes
    clocks = {i: _build_clock(cfg, i) for i in range(n_nodes)}
    drift = _DriftSchedule(cfg, clocks)
    nodes = [_FloodNode(clocks[i]) for i in range(n_nodes)]
    delay_model = cfg.resolve_delay()
    delay_rng = {k: rngmod.stream(cfg.seed, "delay", k) for k in range(1, n_nodes)}

    t_b_ns = int(round(params.t_b_s * 1e9))
    probe_ns = int(round(cfg.probe_interval_s * 1e9))
    warmup_ns = int(round(cfg.warmup_s * 1e9))
    duration_ns = int(round(cfg.duration_s * 1e9))
    gap = params.intra_gap_ns
    n = params.n_packets

    if variant == "mle-pulsesync":
        pipelines = {k: FifoPages(params.window, t_b_ns) for k in range(1, n_nodes)}
    else:
        pipelines = {k: RegressionTable(params.table) for k in range(1, n_nodes)}

    records: list[ProbeRecord] = []
    next_round = t_b_ns
    next_probe = probe_ns
    round_no = 0
    while True:
        if next_probe <= next_round:
            if next_probe > duration_ns:
                break
            drift.advance_to(next_probe)
            if next_probe >= warmup_ns:
                records.append(ProbeRecord(
                    probe_true_time=next_probe,
                    readings_ns=tuple(nd.clock.read_logical(next_probe) for nd in nodes),
                ))
            next_probe += probe_ns
            continue
        if next_round > duration_ns:
            break
        drift.advance_to(next_round)
        round_no += 1
        _flood_round(cfg, variant, params, nodes, pipelines, delay_model, delay_rng,
                     next_round, gap, n)
        next_round += t_b_ns

    local_errors, global_errors = probe_errors(records)
    idx = tuple(range(len(records)))
    times = tuple(r.probe_true_time / 1e9 for r in records)
    return [
        Series(estimator=variant, node_id=-1, kind="local_error_ns",
               index=idx, sim_time_s=times, values=tuple(float(v) for v in local_errors)),
        Series(estimator=variant, node_id=-1, kind="global_error_ns",
               index=idx, sim_time_s=times, values=tuple(float(v) for v in global_errors)),
    ]


def _flood_round(cfg, variant, params, nodes, pipelines, delay_model, delay_rng,
                 t_start: int, gap: int, n: int) -> None:
    """One flood cascade: the root emits, each hop processes and re-emits."""
    emit_start = t_start
    for k in range(1, len(nodes)):
        sender = nodes[k - 1]
        recv = nodes[k]
        grng = delay_rng[k]
        sender_logical = []
        recv_hw = []
        recv_logical = []
        t_arr = emit_start
        for i in range(n):
            t_send = emit_start + i * gap
            d = sample_delay(delay_model, grng).total_ns
            t_arr = t_send + d
            sender_logical.append(sender.clock.read_logical(t_send))
            recv_hw.append(recv.clock.read_hardware(t_arr))
            recv_logical.append(recv.clock.read_logical(t_arr))
        t_proc = t_arr
        batch = BroadcastBatch(
            sender_id=k - 1,
            receiver_id=k,
            stamps=tuple(zip(sender_logical, recv_hw)),
            t_shift_ns=(n - 1) * gap,
            batch_true_time=emit_start,
        )
        skew = _flood_skew_update(variant, pipelines[k], batch)
        offsets = [rl - sl for rl, sl in zip(recv_logical, sender_logical)]
        if variant == "mle-pulsesync":
            correction = min_offset_estimate(offsets, cfg.fixed_delay_comp_ns)
        else:
            correction = float(np.mean(offsets)) - cfg.fixed_delay_comp_ns
        recv.apply(skew, correction, t_proc)
        # The hop forwards the flood after a processing delay of its own.
        emit_start = t_proc + sample_delay(delay_model, grng).total_ns
