"""Performance statistics over an index or price level series."""

from __future__ import annotations

import math
import statistics
from collections.abc import Sequence
from dataclasses import dataclass

from .engine import IndexSeries

DEFAULT_PERIODS_PER_YEAR = 365
REPORT_FIELDS = (
    "total_return",
    "annualized_return",
    "annualized_volatility",
    "sharpe",
    "max_drawdown",
    "n_observations",
)


@dataclass(frozen=True, slots=True)
class PerfReport:
    """Ratio-based statistics; ``None`` marks a statistic that is undefined.

    Volatility needs at least two returns (sample stdev), and the Sharpe
    ratio additionally needs non-zero volatility.
    """

    total_return: float
    annualized_return: float
    annualized_volatility: float | None
    sharpe: float | None
    max_drawdown: float
    n_observations: int

    def as_dict(self) -> dict[str, float | int | None]:
        return {name: getattr(self, name) for name in REPORT_FIELDS}


def _levels(series: IndexSeries | Sequence[float]) -> list[float]:
    levels = series.levels if isinstance(series, IndexSeries) else list(series)
    if len(levels) < 2:
        raise ValueError(f"need at least 2 points, got {len(levels)}")
    for v in levels:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"levels must be positive and finite, got {v!r}")
    return levels


def log_returns(series: IndexSeries | Sequence[float]) -> list[float]:
    levels = _levels(series)
    return [math.log(b / a) for a, b in zip(levels, levels[1:])]


def max_drawdown(series: IndexSeries | Sequence[float]) -> float:
    peak = -math.inf
    worst = 0.0
    for level in _levels(series):
        peak = max(peak, level)
        worst = max(worst, (peak - level) / peak)
    return worst


def perf_report(
    series: IndexSeries | Sequence[float],
    periods_per_year: int = DEFAULT_PERIODS_PER_YEAR,
    risk_free_rate: float = 0.0,
) -> PerfReport:
    """Summary statistics from log returns annualized with ``periods_per_year``.

    The Sharpe ratio is (mean log return * A - ln(1 + rf)) / (sample stdev * sqrt(A)).
    """
    if periods_per_year < 1:
        raise ValueError(f"periods_per_year must be at least 1, got {periods_per_year}")
    if risk_free_rate <= -1:
        raise ValueError(f"risk_free_rate must exceed -1, got {risk_free_rate}")
    levels = _levels(series)
    returns = log_returns(levels)
    mean = statistics.fmean(returns)
    a = periods_per_year

    vol = sharpe = None
    if len(returns) >= 2:
        sd = statistics.stdev(returns)
        vol = sd * math.sqrt(a)
        if sd > 0:
            sharpe = (mean * a - math.log1p(risk_free_rate)) / vol

    try:
        annualized = math.expm1(mean * a)
    except OverflowError:
        annualized = math.inf
    return PerfReport(
        total_return=levels[-1] / levels[0] - 1,
        annualized_return=annualized,
        annualized_volatility=vol,
        sharpe=sharpe,
        max_drawdown=max_drawdown(levels),
        n_observations=len(levels),
    )


def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.8f}"


def format_report(report: PerfReport) -> str:
    """``key=value`` lines; undefined statistics are left empty."""
    return "".join(f"{k}={_fmt(v)}\n" for k, v in report.as_dict().items())


def format_report_csv(report: PerfReport) -> str:
    values = report.as_dict().values()
    return ",".join(REPORT_FIELDS) + "\n" + ",".join(_fmt(v) for v in values) + "\n"
