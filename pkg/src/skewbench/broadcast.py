"""The multi-packet one-way broadcast and its observation sets.

A sender emits a short burst of N timestamped packets; each receiver stamps
the arrivals on its own clock. Two bursts separated by a synchronization
period give per-index paired differences whose mean, divided by the
receiver-measured interval, estimates the relative clock skew.

Sign convention: an observation is ``sender stamp minus receiver stamp``,
taken literally. The receiver stamps later than the sender by the one-way
delay, so the constant part of the delay enters every observation with the
same sign and cancels from the paired differences, which is all the skew
estimator consumes.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .delaymodel import DelayModel, sample_delay
from .errors import ConfigError, ProtocolError
from .timebase import SimClock, TrueTime


@dataclass(frozen=True)
class BroadcastBatch:
    """Timestamp pairs of one burst between one sender and one receiver."""

    sender_id: int
    receiver_id: int
    stamps: tuple[tuple[int, int], ...]  # (sender_ns, receiver_ns) per packet
    t_shift_ns: int  # true duration from first to last packet
    batch_true_time: TrueTime  # true send time of the first packet

    def __len__(self) -> int:
        return len(self.stamps)


@dataclass(frozen=True)
class ObservationSet:
    """Paired differences between two bursts, ready for estimation.

    ``values`` holds one difference per packet index; ``interval_ns`` is the
    receiver-clock elapsed time between the bursts. The truth fields are
    simulator-only annotations and never feed an estimator.
    """

    values: tuple[int, ...]
    interval_ns: float
    truth_offset_ns: Optional[float] = None
    truth_increment_ns: Optional[float] = None


def run_batch(
    sender: SimClock,
    receiver: SimClock,
    n_packets: int,
    intra_gap_ns: int,
    delay: DelayModel,
    t0: TrueTime,
    rng: np.random.Generator,
) -> BroadcastBatch:
    """Simulate one burst: packet n leaves at ``t0 + n * intra_gap_ns``.

    The sender stamps its hardware clock at emission; the receiver stamps its
    hardware clock at emission time plus a drawn one-way delay.
    """
    if n_packets < 1:
        raise ConfigError("n_packets must be at least 1")
    if n_packets > 1 and intra_gap_ns <= 0:
        raise ConfigError("intra_gap_ns must be positive")
    stamps = []
    for n in range(n_packets):
        t_send = t0 + n * intra_gap_ns
        d = sample_delay(delay, rng)
        stamps.append((sender.read_hardware(t_send), receiver.read_hardware(t_send + d.total_ns)))
    return BroadcastBatch(
        sender_id=0,
        receiver_id=1,
        stamps=tuple(stamps),
        t_shift_ns=(n_packets - 1) * intra_gap_ns,
        batch_true_time=t0,
    )


def t_shift_threshold_ns(skew_bound_ppb: float, nominal_hz: float) -> float:
    """Longest burst duration for which the relative offset drift across the
    burst stays below one hardware tick at the worst-case skew."""
    if nominal_hz <= 0:
        raise ConfigError("nominal_hz must be positive")
    if skew_bound_ppb == 0:
        return float("inf")
    return 1e18 / (abs(skew_bound_ppb) * nominal_hz)


def check_t_shift(batch: BroadcastBatch, skew_bound_ppb: float, nominal_hz: float) -> bool:
    """True when the burst is short enough that the clock offset is constant
    across it (to within one tick) at the given skew bound."""
    return batch.t_shift_ns < t_shift_threshold_ns(skew_bound_ppb, nominal_hz)


def observations(batch: BroadcastBatch) -> list[int]:
    """Per-packet differences: sender stamp minus receiver stamp."""
    return [s - r for s, r in batch.stamps]


def pair_observations(u_batch: BroadcastBatch, v_batch: BroadcastBatch) -> ObservationSet:
    """Pair two bursts index-by-index.

    The interval is the median over packet indices of the receiver-stamp
    differences, which is robust to a single quantization straddle. The result
    is invariant to any constant receiver clock offset: it cancels in the
    per-index differences.
    """
    if len(u_batch) != len(v_batch):
        raise ProtocolError(
            f"burst sizes differ: {len(u_batch)} vs {len(v_batch)}"
        )
    if v_batch.batch_true_time <= u_batch.batch_true_time:
        raise ProtocolError("second burst must be later than the first")
    u_obs = observations(u_batch)
    v_obs = observations(v_batch)
    values = tuple(v - u for u, v in zip(u_obs, v_obs))
    interval = statistics.median(
        rv - ru for (_, ru), (_, rv) in zip(u_batch.stamps, v_batch.stamps)
    )
    return ObservationSet(values=values, interval_ns=float(interval))
