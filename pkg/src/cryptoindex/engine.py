"""Segment evaluation, multiplicative chaining and the end-to-end backtest."""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

from .composition import (
    DEFAULT_N_CONSTITUENTS,
    Composition,
    EventKind,
    ScheduleEvent,
    build_schedule,
    make_composition,
)
from .market_data import MarketHistory
from .smoothing import SmoothingParams

DEFAULT_BASE_VALUE = 100.0
CONTINUITY_TOL = 1e-9


class UnpricedConstituentError(ValueError):
    def __init__(self, coin: str, day: date) -> None:
        self.coin = coin
        self.day = day
        super().__init__(f"no price for constituent {coin} on {day}, even after carry-forward")


@dataclass(frozen=True, slots=True)
class SegmentValue:
    date: date
    relative_value: float


@dataclass(frozen=True, slots=True)
class IndexSeries:
    points: tuple[tuple[date, float], ...]
    base_value: float
    base_date: date

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("an index series needs at least one point")
        for (d0, _), (d1, _) in zip(self.points, self.points[1:]):
            if d1 <= d0:
                raise ValueError(f"series dates not strictly increasing at {d1}")
        for day, level in self.points:
            if not (math.isfinite(level) and level > 0):
                raise ValueError(f"level on {day} must be positive and finite, got {level!r}")
        if self.points[0] != (self.base_date, self.base_value):
            raise ValueError("first point must be (base_date, base_value)")

    @property
    def dates(self) -> list[date]:
        return [d for d, _ in self.points]

    @property
    def levels(self) -> list[float]:
        return [v for _, v in self.points]

    def __len__(self) -> int:
        return len(self.points)

    def level_on(self, day: date) -> float:
        for d, v in self.points:
            if d == day:
                return v
        raise KeyError(day)


@dataclass
class Diagnostics:
    """Counters describing how much the backtest leaned on imperfect data.

    ``carried_forward_prices`` counts (segment, day, coin) evaluations that used
    a carried-forward price; a boundary day is evaluated by both the closing
    and the opening segment.
    """

    carried_forward_prices: int = 0
    dropped_coins: list[tuple[date, str]] = field(default_factory=list)
    undersized_selections: int = 0

    def format(self) -> str:
        lines = [
            f"carried_forward_prices={self.carried_forward_prices}",
            f"dropped_coins={len(self.dropped_coins)}",
            f"undersized_selections={self.undersized_selections}",
        ]
        for day, coin in self.dropped_coins:
            lines.append(f"dropped={day.isoformat()} {coin}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BacktestConfig:
    start: date
    end: date
    n: int = DEFAULT_N_CONSTITUENTS
    smoothing: SmoothingParams = SmoothingParams()
    base_value: float = DEFAULT_BASE_VALUE
    reselect_monthly: bool = False

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"start {self.start} is after end {self.end}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not (math.isfinite(self.base_value) and self.base_value > 0):
            raise ValueError(f"base_value must be positive, got {self.base_value!r}")


@dataclass(frozen=True)
class BacktestResult:
    series: IndexSeries
    compositions: tuple[Composition, ...]
    diagnostics: Diagnostics


def _evaluate(composition: Composition, history: MarketHistory, day: date) -> tuple[float, int]:
    if day < composition.effective_date:
        raise ValueError(
            f"{day} precedes the composition effective date {composition.effective_date}"
        )
    terms = []
    carried = 0
    for c in composition.constituents:
        snap = history.snapshot_at(c.coin, day)
        if snap is None:
            raise UnpricedConstituentError(c.coin, day)
        carried += snap.date != day
        terms.append(c.weight * (snap.price / c.base_price))
    # Dividing by the weight sum (1 up to rounding) makes the base-day value exactly 1.
    total_weight = math.fsum(c.weight for c in composition.constituents)
    return math.fsum(terms) / total_weight, carried


def segment_value(composition: Composition, history: MarketHistory, day: date) -> SegmentValue:
    """Weighted sum of constituent price relatives against the composition's base prices."""
    value, _ = _evaluate(composition, history, day)
    return SegmentValue(day, value)


def chain_segments(
    segments: Sequence[Sequence[SegmentValue]], base_value: float = DEFAULT_BASE_VALUE
) -> IndexSeries:
    """Chain per-segment relative values into one continuous level series.

    Adjacent segments share their boundary day: the old segment's close on
    that day becomes the scale factor for the new segment, which opens at 1.
    """
    if not segments or any(not seg for seg in segments):
        raise ValueError("cannot chain an empty list of segments")
    points: list[tuple[date, float]] = []
    scale = base_value
    for k, seg in enumerate(segments):
        if abs(seg[0].relative_value - 1.0) > 1e-12:
            raise ValueError(f"segment {k} opens at {seg[0].relative_value!r}, not 1")
        if k > 0:
            prev_close = segments[k - 1][-1]
            if seg[0].date != prev_close.date:
                raise ValueError(
                    f"segment {k} starts {seg[0].date} but segment {k - 1} ends {prev_close.date}"
                )
            scale *= prev_close.relative_value
        else:
            points.append((seg[0].date, base_value))
        for sv in seg[1:]:
            points.append((sv.date, scale * sv.relative_value))
    return IndexSeries(tuple(points), base_value, segments[0][0].date)


def _segment_days(start: date, stop: date) -> list[date]:
    return [start + timedelta(days=i) for i in range((stop - start).days + 1)]


def run_backtest(history: MarketHistory, config: BacktestConfig) -> BacktestResult:
    """Build the schedule, materialize compositions and chain daily index levels."""
    history.check_in_range(config.start)
    history.check_in_range(config.end)

    events = build_schedule(config.start, config.end)
    if events[0].kind is EventKind.REWEIGHT:
        # A backtest opening on a non-quarter month start still needs a full selection.
        events[0] = ScheduleEvent(events[0].date, EventKind.REBALANCE)

    diagnostics = Diagnostics()
    compositions: list[Composition] = []
    segments: list[list[SegmentValue]] = []
    previous: Composition | None = None
    for k, event in enumerate(events):
        comp = make_composition(
            history,
            event,
            previous,
            config.smoothing,
            config.n,
            reselect_monthly=config.reselect_monthly,
        )
        if len(comp.constituents) < config.n:
            diagnostics.undersized_selections += 1
        if previous is not None and event.kind is EventKind.REWEIGHT and not config.reselect_monthly:
            kept = set(comp.coins)
            diagnostics.dropped_coins.extend(
                (event.date, coin) for coin in previous.coins if coin not in kept
            )
        stop = events[k + 1].date if k + 1 < len(events) else config.end
        values = []
        for day in _segment_days(event.date, stop):
            value, carried = _evaluate(comp, history, day)
            diagnostics.carried_forward_prices += carried
            values.append(SegmentValue(day, value))
        segments.append(values)
        compositions.append(comp)
        previous = comp

    series = chain_segments(segments, config.base_value)
    return BacktestResult(series, tuple(compositions), diagnostics)


def format_series(series: IndexSeries) -> str:
    lines = ["date,level"]
    lines.extend(f"{day.isoformat()},{level:.8f}" for day, level in series.points)
    return "\n".join(lines) + "\n"


def read_series(path: str | Path) -> IndexSeries:
    """Parse a ``date,level`` CSV; the first row becomes the base point."""
    points = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["date", "level"]:
            raise ValueError(f"{path}: expected header date,level")
        for fields in reader:
            if not fields:
                continue
            if len(fields) != 2:
                raise ValueError(f"{path}: row {reader.line_num}: expected 2 columns")
            try:
                points.append((date.fromisoformat(fields[0].strip()), float(fields[1])))
            except ValueError as exc:
                raise ValueError(f"{path}: row {reader.line_num}: {exc}") from None
    if not points:
        raise ValueError(f"{path}: no data rows")
    return IndexSeries(tuple(points), points[0][1], points[0][0])
