"""Rebalance calendar, constituent selection and square-root-of-cap weighting."""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from datetime import date

from .market_data import MarketHistory
from .smoothing import SmoothingParams, adjusted_caps_on

DEFAULT_N_CONSTITUENTS = 30
QUARTER_MONTHS = (1, 4, 7, 10)
WEIGHT_SUM_TOL = 1e-12


class NoQualifyingCoinsError(ValueError):
    pass


class EventKind(str, enum.Enum):
    REBALANCE = "REBALANCE"
    REWEIGHT = "REWEIGHT"


@dataclass(frozen=True, slots=True)
class ScheduleEvent:
    date: date
    kind: EventKind


@dataclass(frozen=True, slots=True)
class Constituent:
    coin: str
    weight: float
    base_price: float

    def __post_init__(self) -> None:
        if not 0 < self.weight <= 1:
            raise ValueError(f"weight of {self.coin} must lie in (0, 1], got {self.weight!r}")
        if not (math.isfinite(self.base_price) and self.base_price > 0):
            raise ValueError(f"base price of {self.coin} must be positive, got {self.base_price!r}")


def _ordering(c: Constituent) -> tuple[float, str]:
    return (-c.weight, c.coin)


@dataclass(frozen=True, slots=True)
class Composition:
    """Constituents, weights and base prices in force from ``effective_date``."""

    effective_date: date
    constituents: tuple[Constituent, ...]
    origin: EventKind

    def __post_init__(self) -> None:
        if not self.constituents:
            raise ValueError("a composition needs at least one constituent")
        coins = [c.coin for c in self.constituents]
        if len(set(coins)) != len(coins):
            raise ValueError(f"duplicate coins in composition: {coins}")
        total = math.fsum(c.weight for c in self.constituents)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        if list(self.constituents) != sorted(self.constituents, key=_ordering):
            raise ValueError("constituents must be sorted by descending weight, then coin")

    @classmethod
    def from_weights(
        cls,
        effective_date: date,
        weights: Mapping[str, float],
        base_prices: Mapping[str, float],
        origin: EventKind,
    ) -> Composition:
        members = sorted(
            (Constituent(coin, w, base_prices[coin]) for coin, w in weights.items()),
            key=_ordering,
        )
        return cls(effective_date, tuple(members), origin)

    @property
    def coins(self) -> list[str]:
        return [c.coin for c in self.constituents]

    @property
    def weights(self) -> dict[str, float]:
        return {c.coin: c.weight for c in self.constituents}


def _is_month_start(day: date) -> bool:
    return day.day == 1


def _next_month_start(day: date) -> date:
    if day.month == 12:
        return date(day.year + 1, 1, 1)
    return date(day.year, day.month + 1, 1)


def build_schedule(start: date, end: date) -> list[ScheduleEvent]:
    """Month starts in ``[start, end]``: quarter starts rebalance, the rest reweight.

    A mid-month ``start`` gets a REBALANCE prepended so the index opens with a
    full selection.
    """
    if start > end:
        raise ValueError(f"start {start} is after end {end}")
    events = []
    if not _is_month_start(start):
        events.append(ScheduleEvent(start, EventKind.REBALANCE))
        day = _next_month_start(start)
    else:
        day = start
    while day <= end:
        kind = EventKind.REBALANCE if day.month in QUARTER_MONTHS else EventKind.REWEIGHT
        events.append(ScheduleEvent(day, kind))
        day = _next_month_start(day)
    return events


def select_constituents(
    history: MarketHistory,
    day: date,
    params: SmoothingParams,
    n: int = DEFAULT_N_CONSTITUENTS,
) -> list[str]:
    """Top ``n`` coins by adjusted cap; ties go to the smaller ticker."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    caps = adjusted_caps_on(history, day, params)
    if not caps:
        raise NoQualifyingCoinsError(f"no qualifying constituents on {day}")
    ranked = sorted(caps.values(), key=lambda c: (-c.value, c.coin))
    return [c.coin for c in ranked[:n]]


def compute_weights(caps: Mapping[str, float]) -> dict[str, float]:
    """Weights proportional to the square root of each cap, summing to one."""
    if not caps:
        raise ValueError("cannot weight an empty set of caps")
    roots = {}
    for coin, cap in caps.items():
        if not (math.isfinite(cap) and cap > 0):
            raise ValueError(f"cap of {coin} must be positive and finite, got {cap!r}")
        roots[coin] = math.sqrt(cap)
    total = math.fsum(roots.values())
    return {coin: root / total for coin, root in roots.items()}


def make_composition(
    history: MarketHistory,
    event: ScheduleEvent,
    previous: Composition | None,
    params: SmoothingParams,
    n: int = DEFAULT_N_CONSTITUENTS,
    *,
    reselect_monthly: bool = False,
) -> Composition:
    """Composition produced by one schedule event.

    A REBALANCE reselects the top ``n``. A REWEIGHT keeps the previous coin
    set, minus coins that no longer price, and only refreshes weights; with
    ``reselect_monthly`` it reselects like a REBALANCE but keeps its origin.
    Base prices are the event-day prices.
    """
    day = event.date
    caps = adjusted_caps_on(history, day, params)
    if event.kind is EventKind.REBALANCE or reselect_monthly:
        coins: Iterable[str] = select_constituents(history, day, params, n)
    else:
        if previous is None:
            raise ValueError(f"REWEIGHT on {day} has no previous composition")
        coins = [c for c in previous.coins if c in caps]
        if not coins:
            raise NoQualifyingCoinsError(
                f"no qualifying constituents on {day}: every previous constituent stopped pricing"
            )
    weights = compute_weights({coin: caps[coin].value for coin in coins})
    prices = {coin: history.price_at(coin, day) for coin in weights}
    return Composition.from_weights(day, weights, prices, event.kind)


def format_composition_log(compositions: Iterable[Composition]) -> str:
    lines = ["effective_date,kind,coin,weight,base_price"]
    for comp in sorted(compositions, key=lambda c: c.effective_date):
        for c in comp.constituents:
            lines.append(
                f"{comp.effective_date.isoformat()},{comp.origin.value},{c.coin},"
                f"{c.weight:.8f},{c.base_price:.8f}"
            )
    return "\n".join(lines) + "\n"
