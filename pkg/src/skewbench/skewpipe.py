"""Skew-estimation pipeline: burst buffer, sliding window, outlier filter.

A FIFO of recent bursts turns a short resynchronization period into a long
estimation interval: the estimate always pairs the newest burst with the
oldest buffered one, so with W pages and period T the effective interval grows
from T up to (W-1)*T as the buffer warms, then stays there.

Before estimation the paired differences are sorted and scanned upward with an
incremental three-sigma test. Uncertain delays are strictly positive and rare,
so contamination can only be an upper tail: once one sorted value trips the
test, it and everything above it are dropped and the scan stops.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .broadcast import BroadcastBatch, ObservationSet, pair_observations
from .errors import ConfigError, DegenerateBatchError, InsufficientDataError, OrderingError
from .estimators import SkewEstimate, mle_skew

log = logging.getLogger(__name__)

MIN_PREPROCESS_N = 4


@dataclass(frozen=True)
class PreprocessReport:
    """Outcome of the sorted three-sigma scan."""

    kept: tuple  # surviving observations, ascending
    removed: tuple  # flagged upper-tail observations, ascending
    sigma_hat: float  # sample std of the kept observations (ns)


def preprocess(values) -> PreprocessReport:
    """Sort ascending and drop the contaminated upper tail.

    For each position k in the upper half, the mean and sample std of the
    sorted values below it form the test: if the value exceeds the mean by
    more than three stds it is flagged together with everything above it. The
    comparison is strict, so a batch of identical values removes nothing.
    """
    n = len(values)
    if n < MIN_PREPROCESS_N:
        raise InsufficientDataError(
            f"need at least {MIN_PREPROCESS_N} observations to filter, got {n}"
        )
    ordered = sorted(values)
    cut = n
    for k in range(n // 2, n):  # 0-based index of the value under test
        front = ordered[:k]
        m = float(np.mean(front))
        sd = float(np.std(front, ddof=1))
        if ordered[k] - m > 3.0 * sd:
            cut = k
            break
    kept = tuple(ordered[:cut])
    removed = tuple(ordered[cut:])
    sigma = float(np.std(kept, ddof=1)) if len(kept) >= 2 else 0.0
    return PreprocessReport(kept=kept, removed=removed, sigma_hat=sigma)


class FifoPages:
    """Burst buffer of up to ``w_max`` pages, newest first."""

    def __init__(self, w_max: int, t_b_ns: int, min_preprocess_n: int = MIN_PREPROCESS_N) -> None:
        if w_max < 2:
            raise ConfigError("w_max must be at least 2")
        self.w_max = w_max
        self.t_b_ns = int(t_b_ns)
        self.min_preprocess_n = min_preprocess_n
        self.pages: deque[BroadcastBatch] = deque(maxlen=w_max)

    def __len__(self) -> int:
        return len(self.pages)

    def push_batch(self, batch: BroadcastBatch) -> "FifoPages":
        """Insert a newer burst; the oldest page falls out at capacity."""
        if self.pages and batch.batch_true_time <= self.pages[0].batch_true_time:
            raise OrderingError("burst is not newer than the current first page")
        self.pages.appendleft(batch)
        return self

    def window_pair(self) -> Optional[tuple[BroadcastBatch, BroadcastBatch]]:
        """(newest, oldest buffered) bursts, or None before two pages exist."""
        if len(self.pages) < 2:
            return None
        return self.pages[0], self.pages[-1]

    def estimate(self) -> Optional[SkewEstimate]:
        """Run the full pipeline over the current window.

        The scan runs on both orientations of the paired differences: with
        stamps taken as sender minus receiver, an extra delay in the older
        burst pushes its difference up while one in the newer burst pushes it
        down, so contamination can sit in either tail depending on which
        burst carried it. Each pass removes only its own upper tail.

        Returns None while fewer than two pages are buffered. Raises
        DegenerateBatchError if filtering left nothing (the caller should skip
        the period and keep its previous estimate).
        """
        pair = self.window_pair()
        if pair is None:
            return None
        newest, oldest = pair
        obs = pair_observations(oldest, newest)
        kept = list(obs.values)
        if len(kept) >= self.min_preprocess_n:
            kept = list(preprocess(kept).kept)
            if len(kept) >= self.min_preprocess_n:
                kept = [-v for v in preprocess([-v for v in kept]).kept]
        else:
            log.debug("window of %d observations is below the filter minimum; not filtering", len(kept))
        if not kept:
            raise DegenerateBatchError("preprocessing removed every observation")
        return mle_skew(ObservationSet(values=tuple(kept), interval_ns=obs.interval_ns))
