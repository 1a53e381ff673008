"""Square-root weighted cryptocurrency index: construction, backtesting and statistics."""

from .analytics import PerfReport, log_returns, max_drawdown, perf_report
from .composition import (
    Composition,
    Constituent,
    EventKind,
    NoQualifyingCoinsError,
    ScheduleEvent,
    build_schedule,
    compute_weights,
    make_composition,
    select_constituents,
)
from .engine import (
    BacktestConfig,
    BacktestResult,
    Diagnostics,
    IndexSeries,
    SegmentValue,
    UnpricedConstituentError,
    chain_segments,
    run_backtest,
    segment_value,
)
from .market_data import (
    DateRangeError,
    HistoryError,
    MarketHistory,
    MarketSnapshot,
    export_history,
    load_history,
)
from .smoothing import AdjustedCap, SmoothingParams, adjusted_cap, adjusted_caps_on

__all__ = [
    "AdjustedCap",
    "BacktestConfig",
    "BacktestResult",
    "Composition",
    "Constituent",
    "DateRangeError",
    "Diagnostics",
    "EventKind",
    "HistoryError",
    "IndexSeries",
    "MarketHistory",
    "MarketSnapshot",
    "NoQualifyingCoinsError",
    "PerfReport",
    "ScheduleEvent",
    "SegmentValue",
    "SmoothingParams",
    "UnpricedConstituentError",
    "adjusted_cap",
    "adjusted_caps_on",
    "build_schedule",
    "chain_segments",
    "compute_weights",
    "export_history",
    "load_history",
    "log_returns",
    "make_composition",
    "max_drawdown",
    "perf_report",
    "run_backtest",
    "segment_value",
    "select_constituents",
]
