"""Run configuration and report containers shared by the simulator and CLI.

A SimConfig fully determines a run: re-running with an identical config and
seed reproduces every series byte for byte. The config echo embedded in each
report is sufficient to rebuild the SimConfig and repeat the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict, replace
from typing import Optional

from .delaymodel import DelayModel, paper_preset
from .errors import ConfigError

STAR_ESTIMATORS = ("mle", "lr", "direct", "kf")
FLOOD_ESTIMATORS = ("mle-pulsesync", "pulsesync-baseline")

# Comparison-run parameterization: the windowed mean estimator runs a long
# period with a two-page window, the regression and direct baselines a short
# period with single-packet broadcasts, and the Kalman baseline the short
# period with full bursts and an eight-round noise-pooling window.
PAPER_COMPARE_PARAMS: dict[str, dict] = {
    "mle": {"t_b_s": 200.0, "n_packets": 5, "window": 2},
    "lr": {"t_b_s": 30.0, "n_packets": 1, "table": 8},
    "direct": {"t_b_s": 30.0, "n_packets": 1},
    "kf": {"t_b_s": 30.0, "n_packets": 5, "window": 8},
}

# Flooding variants: the windowed-mean protocol floods every 50 s, the
# regression baseline every 30 s.
PAPER_FLOOD_PARAMS: dict[str, dict] = {
    "mle-pulsesync": {"t_b_s": 50.0, "n_packets": 5, "window": 8},
    "pulsesync-baseline": {"t_b_s": 30.0, "n_packets": 5, "table": 8},
}


@dataclass(frozen=True)
class EstimatorParams:
    """Resolved per-estimator run parameters."""

    name: str
    t_b_s: float
    n_packets: int
    window: int
    table: int
    intra_gap_ns: int


@dataclass
class SimConfig:
    """Everything a run needs, in base units (ns, ppb, s)."""

    topology: str = "star"
    n_nodes: int = 26
    reference: int = 0
    estimators: tuple[str, ...] = ("mle",)
    t_b_s: float = 200.0
    n_packets: int = 5
    window: int = 2
    table: int = 8
    delay_preset: str = "single-task"
    delay_fixed_ns: Optional[float] = None
    delay_jitter_ns: Optional[float] = None
    delay_uncertain_prob: Optional[float] = None
    delay_uncertain_lo_ns: Optional[int] = None
    delay_uncertain_hi_ns: Optional[int] = None
    granule_ns: int = 125
    nominal_hz: float = 32e6
    skew_bound_ppb: float = 50_000.0
    duration_s: float = 14_400.0
    warmup_s: float = 0.0
    seed: int = 0
    probe_interval_s: float = 10.0
    intra_gap_ns: int = 100_000
    drift_kind: str = "constant"
    drift_step_ppb: float = 0.0
    drift_interval_s: float = 10.0
    fixed_delay_comp_ns: float = 3_000.0
    theta0_range_ns: int = 1_000_000
    kf_q_offset_ns2: float = 100.0
    kf_q_skew_ppb2: float = 400.0
    periods_s: tuple[float, ...] = (50.0, 100.0, 200.0, 350.0, 500.0)
    granules_ns: tuple[int, ...] = (125, 500, 1_000, 5_000, 10_000, 32_000)
    inject_round: int = 20
    inject_magnitude_ns: int = 200_000
    estimator_params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.topology not in ("star", "line"):
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.n_nodes < 2:
            raise ConfigError("need at least a reference and one other node")
        if self.window < 2:
            raise ConfigError("window must be at least 2")
        if self.granule_ns < 1:
            raise ConfigError("granule_ns must be a positive integer")
        for v, name in ((self.t_b_s, "t_b_s"), (self.duration_s, "duration_s"),
                        (self.probe_interval_s, "probe_interval_s")):
            if v <= 0:
                raise ConfigError(f"{name} must be positive")
        self.estimators = tuple(self.estimators)

    def resolve_delay(self) -> DelayModel:
        """Delay model from the preset, overridden by any explicit fields."""
        model = paper_preset(self.delay_preset)
        lo, hi = model.uncertain_range_ns
        return DelayModel(
            fixed_ns=self.delay_fixed_ns if self.delay_fixed_ns is not None else model.fixed_ns,
            jitter_ns=self.delay_jitter_ns if self.delay_jitter_ns is not None else model.jitter_ns,
            uncertain_prob=(
                self.delay_uncertain_prob
                if self.delay_uncertain_prob is not None
                else model.uncertain_prob
            ),
            uncertain_range_ns=(
                self.delay_uncertain_lo_ns if self.delay_uncertain_lo_ns is not None else lo,
                self.delay_uncertain_hi_ns if self.delay_uncertain_hi_ns is not None else hi,
            ),
        )

    def resolve_estimator(self, name: str) -> EstimatorParams:
        """Per-estimator parameters: config defaults plus per-name overrides."""
        over = dict(self.estimator_params.get(name, {}))
        params = EstimatorParams(
            name=name,
            t_b_s=float(over.pop("t_b_s", self.t_b_s)),
            n_packets=int(over.pop("n_packets", self.n_packets)),
            window=int(over.pop("window", self.window)),
            table=int(over.pop("table", self.table)),
            intra_gap_ns=int(over.pop("intra_gap_ns", self.intra_gap_ns)),
        )
        if over:
            raise ConfigError(f"unknown estimator parameter(s) for {name}: {sorted(over)}")
        return params

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        for key in ("estimators", "periods_s", "granules_ns"):
            if key in data and isinstance(data[key], list):
                data[key] = tuple(data[key])
        if "estimator_params" in data:
            data["estimator_params"] = {
                k: dict(v) for k, v in data["estimator_params"].items()
            }
        return cls(**data)

    def with_overrides(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Series:
    """One recorded value sequence: an estimator's errors on one node, or a
    network-level probe error trace (node_id -1)."""

    estimator: str
    node_id: int
    kind: str
    index: tuple[int, ...]
    sim_time_s: tuple[float, ...]
    values: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "node_id": self.node_id,
            "kind": self.kind,
            "index": list(self.index),
            "sim_time_s": list(self.sim_time_s),
            "values": list(self.values),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Series":
        return cls(
            estimator=data["estimator"],
            node_id=int(data["node_id"]),
            kind=data["kind"],
            index=tuple(data["index"]),
            sim_time_s=tuple(data["sim_time_s"]),
            values=tuple(data["values"]),
        )


@dataclass
class RunReport:
    """Everything one experiment run produced."""

    experiment: str
    config: dict
    seed: int
    series: list[Series]
    summary: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "seed": self.seed,
            "series": [s.to_dict() for s in self.series],
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            experiment=data["experiment"],
            config=data["config"],
            seed=int(data["seed"]),
            series=[Series.from_dict(s) for s in data["series"]],
            summary=list(data["summary"]),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RunReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()
