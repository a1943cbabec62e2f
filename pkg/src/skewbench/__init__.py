"""skewbench: clock-skew estimation on simulated one-way broadcast networks.

A deterministic simulator of drifting, quantized clocks exchanging timestamped
broadcast bursts, together with a windowed sample-mean skew estimator (with
variance lower bounds and a sorted three-sigma outlier filter), three baseline
estimators, and experiment runners that emit machine-readable reports.
"""

from .broadcast import (
    BroadcastBatch,
    ObservationSet,
    check_t_shift,
    observations,
    pair_observations,
    run_batch,
    t_shift_threshold_ns,
)
from .delaymodel import DelayModel, DelaySample, fit_variable_stats, paper_preset, sample_delay
from .errors import (
    ConfigError,
    DegenerateBatchError,
    InsufficientDataError,
    NumericalError,
    OrderingError,
    ProtocolError,
)
from .estimators import (
    KalmanState,
    RegressionTable,
    SkewEstimate,
    crlb_offset_increment,
    crlb_skew,
    crlb_skew_std_ppb,
    crlb_skew_tau_linear,
    direct_estimate,
    kf_update,
    lr_update,
    min_offset_estimate,
    mle_offset_increment,
    mle_skew,
)
from .experiments import EXPERIMENTS, default_config, load_config, run_experiment
from .reporting import emit, load_report, summarize
from .runconfig import RunReport, Series, SimConfig
from .simnet import ProbeRecord, Topology, inject_uncertain, probe_errors, run_flood, run_star
from .skewpipe import FifoPages, PreprocessReport, preprocess
from .timebase import DriftProcess, SimClock, TrueTime, true_relative_skew

__version__ = "0.1.0"

__all__ = [
    "BroadcastBatch", "ObservationSet", "check_t_shift", "observations",
    "pair_observations", "run_batch", "t_shift_threshold_ns",
    "DelayModel", "DelaySample", "fit_variable_stats", "paper_preset", "sample_delay",
    "ConfigError", "DegenerateBatchError", "InsufficientDataError",
    "NumericalError", "OrderingError", "ProtocolError",
    "KalmanState", "RegressionTable", "SkewEstimate",
    "crlb_offset_increment", "crlb_skew", "crlb_skew_std_ppb", "crlb_skew_tau_linear",
    "direct_estimate", "kf_update", "lr_update", "min_offset_estimate",
    "mle_offset_increment", "mle_skew",
    "EXPERIMENTS", "default_config", "load_config", "run_experiment",
    "emit", "load_report", "summarize",
    "RunReport", "Series", "SimConfig",
    "ProbeRecord", "Topology", "inject_uncertain", "probe_errors", "run_flood", "run_star",
    "FifoPages", "PreprocessReport", "preprocess",
    "DriftProcess", "SimClock", "TrueTime", "true_relative_skew",
]
