"""Exponentially weighted moving average of market capitalization."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from datetime import date, timedelta

from .market_data import MarketHistory

DEFAULT_ALPHA = math.log(2) / 14
DEFAULT_EPSILON = 1e-10


@dataclass(frozen=True, slots=True)
class SmoothingParams:
    """Decay rate per day and the weight below which older lags are ignored."""

    alpha: float = DEFAULT_ALPHA
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha!r}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")

    @property
    def max_lag(self) -> int:
        """Smallest L with exp(-alpha * L) <= epsilon."""
        return math.ceil(-math.log(self.epsilon) / self.alpha)

    @classmethod
    def from_half_life(cls, days: float, epsilon: float = DEFAULT_EPSILON) -> SmoothingParams:
        return cls(alpha=math.log(2) / days, epsilon=epsilon)


@dataclass(frozen=True, slots=True)
class AdjustedCap:
    coin: str
    date: date
    value: float


def adjusted_cap(
    history: MarketHistory,
    coin: str,
    day: date,
    params: SmoothingParams = SmoothingParams(),
) -> AdjustedCap | None:
    """Smoothed market cap of ``coin`` as of ``day``.

    Lags 0..max_lag are weighted by exp(-alpha * lag). Lags whose cap does
    not resolve (after carry-forward) are skipped in both the numerator and
    the normalizing weight sum, so short histories still give a proper
    weighted average. Returns None when the lag-0 cap does not resolve.
    """
    history.check_in_range(day)
    days, snaps = history.coin_series(coin)
    window = history.carry_forward_days

    # Walk lags backwards with a pointer to the latest snapshot on or before the lag day.
    idx = bisect.bisect_right(days, day) - 1
    if idx < 0 or (day - days[idx]).days > window:
        return None

    num = 0.0
    den = 0.0
    lag_day = day
    decay = params.alpha
    for lag in range(params.max_lag + 1):
        while idx >= 0 and days[idx] > lag_day:
            idx -= 1
        if idx < 0:
            break
        if (lag_day - days[idx]).days <= window:
            w = math.exp(-decay * lag)
            num += snaps[idx].market_cap * w
            den += w
        lag_day -= timedelta(days=1)
    return AdjustedCap(coin, day, num / den)


def adjusted_caps_on(
    history: MarketHistory,
    day: date,
    params: SmoothingParams = SmoothingParams(),
) -> dict[str, AdjustedCap]:
    caps = {}
    for coin in sorted(history.coins_active_on(day)):
        value = adjusted_cap(history, coin, day, params)
        if value is not None:
            caps[coin] = value
    return caps
