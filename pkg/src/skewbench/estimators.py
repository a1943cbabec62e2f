"""Clock-skew estimators and their variance lower bounds.

The primary estimator is the maximum-likelihood one for Gaussian delay
jitter: the sample mean of the paired burst differences divided by the
measured interval. Three baselines are provided for comparison runs: a
single-pair direct ratio, a sliding-table least-squares slope, and a
two-state (offset, skew) Kalman filter driven by accumulated offset
observations.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .broadcast import ObservationSet
from .errors import InsufficientDataError, NumericalError, OrderingError

PPB = 1e9  # nanoseconds-per-nanosecond to parts-per-billion


@dataclass(frozen=True)
class SkewEstimate:
    """One skew estimate with its inputs' provenance."""

    skew_ppb: float
    offset_increment_ns: float
    interval_ns: float
    n_used: int


def mle_offset_increment(values) -> float:
    """Maximum-likelihood estimate of the offset change between two bursts.

    For symmetric zero-mean Gaussian jitter on both bursts this is exactly the
    arithmetic mean of the paired differences. Implemented as a plain
    left-to-right summation so the result is bit-reproducible.
    """
    n = len(values)
    if n == 0:
        raise InsufficientDataError("empty observation set")
    total = 0.0
    for v in values:
        total += v
    return total / n


def mle_skew(obs: ObservationSet) -> SkewEstimate:
    """Skew estimate in ppb: mean paired difference over the measured interval."""
    if obs.interval_ns <= 0:
        raise OrderingError("observation interval must be positive")
    increment = mle_offset_increment(obs.values)
    return SkewEstimate(
        skew_ppb=increment / obs.interval_ns * PPB,
        offset_increment_ns=increment,
        interval_ns=obs.interval_ns,
        n_used=len(obs.values),
    )


def crlb_offset_increment(sigma_ns: float, n: int) -> float:
    """Variance lower bound (ns^2) for the offset-increment estimate.

    Each paired difference carries jitter from both bursts, hence the factor
    of two: ``2 * sigma^2 / n``.
    """
    if sigma_ns < 0:
        raise ValueError("sigma_ns must be non-negative")
    if n < 1:
        raise ValueError("n must be at least 1")
    return 2.0 * sigma_ns * sigma_ns / n


def crlb_skew(sigma_ns: float, n: int, interval_ns: float) -> float:
    """Variance lower bound (dimensionless rate^2) for the skew estimate.

    Scaling the offset-increment estimate by ``1/interval`` scales its
    variance by ``1/interval^2``, giving ``2 sigma^2 / (n interval^2)``.
    Multiply the square root by 1e9 for ppb.
    """
    if interval_ns <= 0:
        raise ValueError("interval_ns must be positive")
    return crlb_offset_increment(sigma_ns, n) / (interval_ns * interval_ns)


def crlb_skew_std_ppb(sigma_ns: float, n: int, interval_ns: float) -> float:
    """Square root of :func:`crlb_skew`, expressed in ppb."""
    return float(np.sqrt(crlb_skew(sigma_ns, n, interval_ns))) * PPB


def crlb_skew_tau_linear(sigma_ns: float, n: int, interval_ns: float) -> float:
    """Alternate bound normalization with a single interval factor.

    Dimensionally this is ns, not a rate variance; it is retained only so
    reports can show both normalization conventions side by side.
    """
    if interval_ns <= 0:
        raise ValueError("interval_ns must be positive")
    return crlb_offset_increment(sigma_ns, n) / interval_ns


def direct_estimate(offset_increment_ns: float, interval_ns: float) -> float:
    """Single-sample ratio estimate in ppb: no averaging, no filtering."""
    if interval_ns <= 0:
        raise ValueError("interval_ns must be positive")
    return offset_increment_ns / interval_ns * PPB


def min_offset_estimate(offset_samples, fixed_delay_comp_ns: float = 3_000.0) -> float:
    """Offset estimate used by the flooding protocol.

    Every sample is the true offset plus the packet's one-way delay, which is
    strictly positive; the minimum over a burst therefore carries the smallest
    delay, and subtracting the assumed fixed delay leaves a residual of
    ``(true_fixed - assumed_fixed) + min(jitter)``.
    """
    if len(offset_samples) == 0:
        raise InsufficientDataError("empty offset sample set")
    return min(offset_samples) - fixed_delay_comp_ns


class RegressionTable:
    """Sliding table of (local time, offset) pairs with a least-squares slope.

    The table evicts its oldest entry at capacity. A slope is available once
    two entries are present; before that ``update`` reports not-ready as None.
    """

    def __init__(self, capacity: int = 8) -> None:
        if capacity < 2:
            raise ValueError("capacity must be at least 2")
        self.capacity = capacity
        self.entries: deque[tuple[float, float]] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.entries)

    def update(self, local_time_ns: float, offset_ns: float) -> Optional[float]:
        """Append a sample and return the current slope in ppb, or None."""
        if self.entries and local_time_ns <= self.entries[-1][0]:
            raise OrderingError("local_time must exceed the previous entry")
        self.entries.append((float(local_time_ns), float(offset_ns)))
        return self.slope_ppb()

    def slope_ppb(self) -> Optional[float]:
        if len(self.entries) < 2:
            return None
        x = np.array([e[0] for e in self.entries])
        y = np.array([e[1] for e in self.entries])
        xc = x - x.mean()
        return float(xc @ (y - y.mean()) / (xc @ xc)) * PPB


def lr_update(
    table: RegressionTable, local_time_ns: float, offset_ns: float
) -> tuple[RegressionTable, Optional[float]]:
    """Functional wrapper over :meth:`RegressionTable.update`."""
    return table, table.update(local_time_ns, offset_ns)


class KalmanState:
    """Two-state (offset ns, skew ppb) filter over accumulated offset readings.

    The transition over an interval of ``tau`` seconds is offset += skew * tau
    (ppb times seconds is exactly nanoseconds). Measurements are accumulated
    offsets with per-update noise variance supplied by the caller, normally
    derived from the burst's own jitter estimate so that outlier-contaminated
    bursts are automatically downweighted.
    """

    def __init__(
        self,
        q_offset_ns2: float = 100.0,
        q_skew_ppb2: float = 400.0,
        p0_offset_ns2: float = 1e12,
        p0_skew_ppb2: float = 1e10,
    ) -> None:
        # The prior skew variance must cover the full plausible skew range
        # (1e10 ppb^2 is a 1e5 ppb standard deviation), otherwise the filter
        # crawls toward a large true skew for hundreds of rounds.
        self.x = np.zeros(2)
        self.P = np.diag([p0_offset_ns2, p0_skew_ppb2]).astype(float)
        self.Q = np.diag([q_offset_ns2, q_skew_ppb2]).astype(float)

    @property
    def offset_ns(self) -> float:
        return float(self.x[0])

    @property
    def skew_ppb(self) -> float:
        return float(self.x[1])

    def update(self, offset_obs_ns: float, interval_ns: float, r_ns2: float) -> float:
        """Predict over ``interval_ns`` then fuse one offset observation.

        Returns the posterior skew in ppb. Covariance is propagated in Joseph
        form and re-symmetrized; an indefinite result raises NumericalError.
        """
        if interval_ns <= 0:
            raise ValueError("interval_ns must be positive")
        tau_s = interval_ns / 1e9
        F = np.array([[1.0, tau_s], [0.0, 1.0]])
        self.x = F @ self.x
        self.P = F @ self.P @ F.T + self.Q
        H = np.array([[1.0, 0.0]])
        S = float(H @ self.P @ H.T) + r_ns2
        if not np.isfinite(S) or S <= 0:
            raise NumericalError("innovation variance is not positive")
        K = (self.P @ H.T / S).reshape(2)
        self.x = self.x + K * (offset_obs_ns - self.x[0])
        ikh = np.eye(2) - np.outer(K, H.reshape(2))
        self.P = ikh @ self.P @ ikh.T + np.outer(K, K) * r_ns2
        self.P = (self.P + self.P.T) / 2.0
        eigmin = float(np.linalg.eigvalsh(self.P)[0])
        if eigmin < -1e-9 * max(1.0, float(np.trace(self.P))):
            raise NumericalError("covariance lost positive semidefiniteness")
        return self.skew_ppb


def kf_update(
    state: KalmanState, offset_obs_ns: float, interval_ns: float, r_ns2: float
) -> tuple[KalmanState, float]:
    """Functional wrapper over :meth:`KalmanState.update`."""
    return state, state.update(offset_obs_ns, interval_ns, r_ns2)
