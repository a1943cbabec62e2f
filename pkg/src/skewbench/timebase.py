"""Simulated hardware and logical clocks on a shared true-time axis.

True time is an integer count of nanoseconds since the simulation epoch. A
hardware clock accumulates ticks at ``1 + skew_ppb * 1e-9`` times true rate and
exposes readings quantized down to its granule. A logical clock is an affine
view of the hardware counter (rate multiplier plus offset) and is what a
synchronization protocol actually disciplines.

Rate integrals are evaluated in exact integer arithmetic (units of 1e-12 ns,
skew held at milli-ppb resolution) so multi-hour runs accumulate no floating
point drift and identical configurations replay bit-identically.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, OrderingError
from . import rng as rngmod

# One true-time nanosecond expressed in the internal integral unit (1e-12 ns).
_E12 = 10**12
# Internal skew resolution: milli-ppb.
_MPPB_PER_PPB = 1000

TrueTime = int

DRIFT_KINDS = ("constant", "random-walk", "linear-ramp")


@dataclass
class DriftProcess:
    """How a clock's rate error evolves between explicit advances.

    ``constant`` never moves, ``linear-ramp`` adds ``step_ppb`` per second, and
    ``random-walk`` adds a zero-mean Gaussian step with standard deviation
    ``step_ppb * sqrt(dt_seconds)``.
    """

    kind: str = "constant"
    step_ppb: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in DRIFT_KINDS:
            raise ConfigError(f"unknown drift kind {self.kind!r}")


class SimClock:
    """A drifting, quantized counter plus its logical (disciplined) view.

    Readings are total functions of true time: the clock keeps every rate
    segment it has lived through, so queries may look at any instant at or
    after the epoch regardless of how far the drift frontier has advanced.
    """

    def __init__(
        self,
        nominal_hz: float = 32e6,
        skew_ppb: float = 0.0,
        drift: Optional[DriftProcess] = None,
        offset_ns: int = 0,
        granule_ns: int = 1,
        logical_rate: float = 1.0,
        logical_offset_ns: int = 0,
        skew_bound_ppb: float = 50_000.0,
    ) -> None:
        if granule_ns < 1:
            raise ConfigError("granule_ns must be a positive integer")
        if nominal_hz <= 0:
            raise ConfigError("nominal_hz must be positive")
        if logical_rate < 0:
            raise ConfigError("logical_rate must be non-negative")
        if abs(skew_ppb) > skew_bound_ppb:
            raise ConfigError(
                f"skew {skew_ppb} ppb exceeds the configured bound {skew_bound_ppb} ppb"
            )
        self.nominal_hz = float(nominal_hz)
        self.drift = drift or DriftProcess()
        self.offset_ns = int(offset_ns)
        self.granule_ns = int(granule_ns)
        self.skew_bound_ppb = float(skew_bound_ppb)
        self.logical_offset_ns = int(logical_offset_ns)
        self._set_rate_ratio(logical_rate)
        # Rate history: parallel arrays of segment start time, the exact
        # accumulated integral (1e-12 ns units) at that start, and the segment
        # skew in milli-ppb. The last segment extends to infinity.
        self._seg_t = [0]
        self._seg_base = [0]
        self._seg_skew = [int(round(skew_ppb * _MPPB_PER_PPB))]
        self._drift_rng: Optional[np.random.Generator] = None

    # -- construction / mutation ------------------------------------------

    def _set_rate_ratio(self, logical_rate: float) -> None:
        self.logical_rate = float(logical_rate)
        self._rate_num, self._rate_den = self.logical_rate.as_integer_ratio()

    def set_logical(self, logical_rate: float, logical_offset_ns: int) -> None:
        """Replace the logical multiplier and offset (a compensation step)."""
        if logical_rate < 0:
            raise ConfigError("logical_rate must be non-negative")
        self._set_rate_ratio(logical_rate)
        self.logical_offset_ns = int(logical_offset_ns)

    @property
    def skew_ppb(self) -> float:
        """Current rate error in ppb (milli-ppb resolution)."""
        return self._seg_skew[-1] / _MPPB_PER_PPB

    def advance_drift(self, dt_ns: int, rng: Optional[np.random.Generator] = None) -> "SimClock":
        """Advance the drift frontier by ``dt_ns`` and update the skew.

        The skew is piecewise constant: the new value applies from the new
        frontier onward. Deterministic given the generator state.
        """
        if dt_ns <= 0:
            raise OrderingError("dt_ns must be positive")
        t_new = self._seg_t[-1] + int(dt_ns)
        skew_m = self._seg_skew[-1]
        base_new = self._seg_base[-1] + int(dt_ns) * (_E12 + skew_m)
        kind = self.drift.kind
        if kind == "constant":
            new_skew_m = skew_m
        elif kind == "linear-ramp":
            new_skew_m = skew_m + int(round(self.drift.step_ppb * _MPPB_PER_PPB * dt_ns / 1e9))
        else:  # random-walk
            gen = rng if rng is not None else self._walk_rng()
            step = gen.normal(0.0, self.drift.step_ppb * np.sqrt(dt_ns / 1e9))
            new_skew_m = skew_m + int(round(step * _MPPB_PER_PPB))
        bound_m = int(round(self.skew_bound_ppb * _MPPB_PER_PPB))
        new_skew_m = max(-bound_m, min(bound_m, new_skew_m))
        if new_skew_m == skew_m:
            # Same rate: extend the current segment instead of splitting it.
            return self
        self._seg_t.append(t_new)
        self._seg_base.append(base_new)
        self._seg_skew.append(new_skew_m)
        return self

    def _walk_rng(self) -> np.random.Generator:
        if self._drift_rng is None:
            self._drift_rng = rngmod.stream(self.drift.seed or 0, "drift")
        return self._drift_rng

    # -- readings ----------------------------------------------------------

    def _raw_e12(self, t: TrueTime) -> int:
        """Exact rate integral from the epoch to ``t``, in 1e-12 ns units."""
        if t < 0:
            raise OrderingError("true time precedes the simulation epoch")
        t = int(t)
        if len(self._seg_t) == 1 or t >= self._seg_t[-1]:
            i = len(self._seg_t) - 1
        else:
            i = bisect_right(self._seg_t, t) - 1
        return self._seg_base[i] + (t - self._seg_t[i]) * (_E12 + self._seg_skew[i])

    def read_hardware(self, t: TrueTime) -> int:
        """Quantized hardware counter reading at true time ``t`` (ns).

        Floor quantization: a counter never reads ahead of its elapsed ticks.
        """
        total = self.offset_ns * _E12 + self._raw_e12(t)
        g = self.granule_ns
        return g * (total // (g * _E12))

    def hardware_unquantized_ns(self, t: TrueTime) -> float:
        """The pre-quantization counter value, for diagnostics and tests."""
        return self.offset_ns + self._raw_e12(t) / _E12

    def read_logical(self, t: TrueTime) -> int:
        """Logical reading: rate multiplier times the hardware counter, plus
        the logical offset, quantized to the granule.

        The multiplier product is rounded at picosecond resolution before the
        floor so that decimal-valued multipliers behave as written rather than
        as their nearest binary float.
        """
        hw = self.read_hardware(t)
        num, den = self._rate_num, self._rate_den
        product_ps = (num * hw * 1000 + den // 2) // den
        total_ps = product_ps + self.logical_offset_ns * 1000
        g = self.granule_ns
        return g * (total_ps // (g * 1000))


def true_relative_skew(a: SimClock, b: SimClock) -> float:
    """Ground-truth rate of ``b`` relative to ``a`` in ppb.

    This is the ratio form ``(rate_b / rate_a - 1) * 1e9``, not the difference
    of the two skews; estimators are scored against this value.
    """
    ra = 1.0 + a.skew_ppb * 1e-9
    rb = 1.0 + b.skew_ppb * 1e-9
    return (rb / ra - 1.0) * 1e9
