"""Per-packet one-way delay generation.

A delay is the sum of a variable part (fixed mean plus Gaussian jitter from
interrupt-handling time) and a rare uncertain part: an impulse-like extra
delay caused by interrupt blocking and nesting. The uncertain part is what the
estimator pipeline's outlier filter exists to remove.

The preset parameter sets come from bench measurements of MAC-layer
timestamping on a 32 MHz radio SoC under different interrupt-priority
configurations; the uncertain-delay magnitude distribution was only ever
characterized by its range, so a uniform draw over a configurable interval
stands in for it (see ``DEFAULT_UNCERTAIN_RANGE_NS``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, InsufficientDataError

# Injected uncertain delays observed between roughly 200 us and the largest
# recorded spike of 909 us.
DEFAULT_UNCERTAIN_RANGE_NS = (200_000, 909_000)


@dataclass
class DelayModel:
    """Stochastic one-way delay: Gaussian jitter plus rare uniform impulses."""

    fixed_ns: float = 3_300.0
    jitter_ns: float = 72.0
    uncertain_prob: float = 0.0
    uncertain_range_ns: tuple[int, int] = DEFAULT_UNCERTAIN_RANGE_NS
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.jitter_ns < 0:
            raise ConfigError("jitter_ns must be non-negative")
        if not 0.0 <= self.uncertain_prob <= 1.0:
            raise ConfigError("uncertain_prob must lie in [0, 1]")
        lo, hi = self.uncertain_range_ns
        if lo > hi:
            raise ConfigError("uncertain_range_ns must be ordered (lo <= hi)")

    def sample(self, rng: np.random.Generator) -> "DelaySample":
        return sample_delay(self, rng)


@dataclass(frozen=True)
class DelaySample:
    """One drawn delay, split into its variable and uncertain parts (ns)."""

    total_ns: int
    variable_ns: int
    uncertain_ns: int = 0


def sample_delay(model: DelayModel, rng: np.random.Generator) -> DelaySample:
    """Draw one delay.

    The variable part is Normal(fixed, jitter^2) resampled on a negative draw
    (physical delays are non-negative; with jitter far below the mean the
    truncation bias is negligible and left uncorrected). With probability
    ``uncertain_prob`` an extra uniform impulse from ``uncertain_range_ns`` is
    added. Components are rounded to whole nanoseconds.
    """
    if model.jitter_ns == 0.0:
        variable = model.fixed_ns
    else:
        variable = rng.normal(model.fixed_ns, model.jitter_ns)
        while variable < 0.0:
            variable = rng.normal(model.fixed_ns, model.jitter_ns)
    uncertain = 0.0
    if model.uncertain_prob > 0.0 and rng.random() < model.uncertain_prob:
        lo, hi = model.uncertain_range_ns
        uncertain = rng.uniform(lo, hi) if hi > lo else float(lo)
    var_ns = int(round(variable))
    unc_ns = int(round(uncertain))
    return DelaySample(total_ns=var_ns + unc_ns, variable_ns=var_ns, uncertain_ns=unc_ns)


def fit_variable_stats(samples: list[DelaySample]) -> tuple[float, float]:
    """Sample mean and unbiased sample std of the variable components.

    The mean is the natural estimate of the fixed portion of the delay.
    """
    if len(samples) < 2:
        raise InsufficientDataError("need at least 2 samples to fit delay statistics")
    values = np.array([s.variable_ns for s in samples], dtype=float)
    return float(values.mean()), float(values.std(ddof=1))


_PRESETS = {
    # Multi-interrupt bench runs, keyed by the timestamp interrupt's priority.
    "equal": dict(fixed_ns=3_317.0, jitter_ns=67.1, uncertain_prob=0.1368),
    "lowest": dict(fixed_ns=3_325.0, jitter_ns=66.7, uncertain_prob=0.0768),
    "highest": dict(fixed_ns=3_311.0, jitter_ns=70.4, uncertain_prob=0.0067),
    # Single interrupt task: no blocking, so no uncertain delays at all.
    "single-task": dict(fixed_ns=3_300.0, jitter_ns=72.0, uncertain_prob=0.0),
}


def paper_preset(name: str) -> DelayModel:
    """Return a measured delay parameterization by preset name.

    Recognized names: ``equal``, ``lowest``, ``highest``, ``single-task``.
    """
    try:
        params = _PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown delay preset {name!r}; expected one of {sorted(_PRESETS)}"
        ) from None
    return DelayModel(**params)
