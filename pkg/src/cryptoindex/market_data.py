"""Daily price and market-cap histories: CSV ingestion, validation and lookup."""

from __future__ import annotations

import bisect
import csv
import math
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .io import atomic_write_text

COLUMNS = ("date", "coin", "price", "market_cap")
DEFAULT_CARRY_FORWARD_DAYS = 7

_COIN_RE = re.compile(r"[A-Z0-9]+")
_DECIMAL_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_ISO_DAY_RE = re.compile(r"\d{4}-\d{2}-\d{2}")


class DateRangeError(ValueError):
    """Raised when a query date falls outside the loaded history."""


@dataclass(frozen=True, slots=True)
class RowIssue:
    row: int
    message: str

    def __str__(self) -> str:
        return f"row {self.row}: {self.message}"


class HistoryError(ValueError):
    """Raised when a market-data file cannot be turned into a valid history.

    ``issues`` holds every row-level problem found, so callers can report all
    of them at once rather than stopping at the first.
    """

    def __init__(self, message: str, issues: Iterable[RowIssue] = ()) -> None:
        self.issues = list(issues)
        if self.issues:
            message = message + "\n" + "\n".join(str(issue) for issue in self.issues)
        super().__init__(message)


def validate_coin(coin: str) -> str:
    if not _COIN_RE.fullmatch(coin):
        raise ValueError(f"invalid coin id {coin!r}: expected uppercase alphanumeric")
    return coin


@dataclass(frozen=True, slots=True)
class MarketSnapshot:
    date: date
    coin: str
    price: float
    market_cap: float

    def __post_init__(self) -> None:
        validate_coin(self.coin)
        for name in ("price", "market_cap"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


class MarketHistory:
    """Immutable, date-indexed collection of snapshots for every coin.

    Lookups honour a bounded carry-forward: when a coin has no snapshot on the
    requested day, its most recent earlier snapshot is used provided it is at
    most ``carry_forward_days`` old.
    """

    def __init__(
        self,
        snapshots: Iterable[MarketSnapshot],
        *,
        carry_forward_days: int = DEFAULT_CARRY_FORWARD_DAYS,
    ) -> None:
        if carry_forward_days < 0:
            raise ValueError("carry_forward_days must be non-negative")
        self.carry_forward_days = carry_forward_days

        table: dict[tuple[date, str], MarketSnapshot] = {}
        for snap in snapshots:
            key = (snap.date, snap.coin)
            if key in table:
                raise ValueError(f"duplicate snapshot for {snap.coin} on {snap.date}")
            table[key] = snap
        if not table:
            raise ValueError("empty history")
        self._table = table

        per_coin: dict[str, list[MarketSnapshot]] = {}
        for key in sorted(table):
            snap = table[key]
            per_coin.setdefault(snap.coin, []).append(snap)
        self._series = per_coin
        self._series_dates = {
            coin: [snap.date for snap in snaps] for coin, snaps in per_coin.items()
        }
        days = [key[0] for key in table]
        self._date_range = (min(days), max(days))

    @property
    def date_range(self) -> tuple[date, date]:
        return self._date_range

    @property
    def coins(self) -> list[str]:
        return sorted(self._series)

    @property
    def dates(self) -> list[date]:
        """Distinct observed days, ascending."""
        return sorted({key[0] for key in self._table})

    def __len__(self) -> int:
        return len(self._table)

    def __iter__(self) -> Iterator[MarketSnapshot]:
        for key in sorted(self._table):
            yield self._table[key]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarketHistory):
            return NotImplemented
        return (
            self._table == other._table
            and self.carry_forward_days == other.carry_forward_days
        )

    def __repr__(self) -> str:
        first, last = self._date_range
        return (
            f"MarketHistory({len(self)} snapshots, {len(self._series)} coins, "
            f"{first}..{last})"
        )

    def with_carry_forward(self, days: int) -> MarketHistory:
        return MarketHistory(self._table.values(), carry_forward_days=days)

    def scaled(self, *, price: float = 1.0, market_cap: float = 1.0) -> MarketHistory:
        """Copy with every price and/or cap multiplied by a constant."""
        return MarketHistory(
            (
                MarketSnapshot(s.date, s.coin, s.price * price, s.market_cap * market_cap)
                for s in self._table.values()
            ),
            carry_forward_days=self.carry_forward_days,
        )

    def coin_series(self, coin: str) -> tuple[list[date], list[MarketSnapshot]]:
        """Observation days and snapshots for one coin, ascending; empty if unknown."""
        return self._series_dates.get(coin, []), self._series.get(coin, [])

    def check_in_range(self, day: date) -> None:
        first, last = self._date_range
        if not first <= day <= last:
            raise DateRangeError(f"{day} is outside the history range {first}..{last}")

    def snapshot_at(
        self, coin: str, day: date, *, check_range: bool = True
    ) -> MarketSnapshot | None:
        """Snapshot in effect for ``coin`` on ``day`` after carry-forward.

        The returned snapshot's own ``date`` tells whether it was carried.
        """
        if check_range:
            self.check_in_range(day)
        days = self._series_dates.get(coin)
        if days is None:
            return None
        idx = bisect.bisect_right(days, day) - 1
        if idx < 0:
            return None
        if (day - days[idx]).days > self.carry_forward_days:
            return None
        return self._series[coin][idx]

    def price_at(self, coin: str, day: date) -> float | None:
        snap = self.snapshot_at(coin, day)
        return None if snap is None else snap.price

    def cap_at(self, coin: str, day: date) -> float | None:
        snap = self.snapshot_at(coin, day)
        return None if snap is None else snap.market_cap

    def coins_active_on(self, day: date) -> set[str]:
        self.check_in_range(day)
        return {
            coin
            for coin in self._series
            if self.snapshot_at(coin, day, check_range=False) is not None
        }


def _parse_row(fields: list[str]) -> MarketSnapshot:
    if len(fields) != len(COLUMNS):
        raise ValueError(f"expected {len(COLUMNS)} columns, got {len(fields)}")
    raw_date, coin, raw_price, raw_cap = (f.strip() for f in fields)
    if not _ISO_DAY_RE.fullmatch(raw_date):
        raise ValueError(f"unparseable date {raw_date!r}")
    try:
        day = date.fromisoformat(raw_date)
    except ValueError:
        raise ValueError(f"unparseable date {raw_date!r}") from None
    validate_coin(coin)
    values = []
    for name, raw in (("price", raw_price), ("market_cap", raw_cap)):
        if not _DECIMAL_RE.fullmatch(raw):
            raise ValueError(f"unparseable {name} {raw!r}")
        value = float(raw)
        if not math.isfinite(value) or value <= 0:
            raise ValueError(f"{name} must be positive and finite, got {raw}")
        values.append(value)
    return MarketSnapshot(day, coin, values[0], values[1])


def read_snapshots(path: str | Path) -> tuple[list[MarketSnapshot], list[RowIssue]]:
    """Parse every row of a market-data CSV, collecting rather than raising on bad rows.

    Row numbers are 1-based file lines, so the header is row 1.
    Raises ``OSError`` if the file cannot be read and ``HistoryError`` if the
    header itself is wrong.
    """
    snapshots: list[MarketSnapshot] = []
    issues: list[RowIssue] = []
    seen: dict[tuple[date, str], int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(COLUMNS):
            raise HistoryError(f"bad header: expected {','.join(COLUMNS)}")
        for fields in reader:
            row = reader.line_num
            if not fields or all(not f.strip() for f in fields):
                continue
            try:
                snap = _parse_row(fields)
            except ValueError as exc:
                issues.append(RowIssue(row, str(exc)))
                continue
            key = (snap.date, snap.coin)
            if key in seen:
                issues.append(
                    RowIssue(row, f"duplicate {snap.coin} {snap.date} (first at row {seen[key]})")
                )
                continue
            seen[key] = row
            snapshots.append(snap)
    return snapshots, issues


def load_history(
    path: str | Path, *, carry_forward_days: int = DEFAULT_CARRY_FORWARD_DAYS
) -> MarketHistory:
    snapshots, issues = read_snapshots(path)
    if issues:
        raise HistoryError(f"{path}: {len(issues)} invalid row(s)", issues)
    if not snapshots:
        raise HistoryError(f"{path}: empty history")
    return MarketHistory(snapshots, carry_forward_days=carry_forward_days)


def format_history(history: MarketHistory) -> str:
    lines = [",".join(COLUMNS)]
    for snap in history:
        lines.append(f"{snap.date.isoformat()},{snap.coin},{snap.price!r},{snap.market_cap!r}")
    return "\n".join(lines) + "\n"


def export_history(history: MarketHistory, path: str | Path) -> None:
    atomic_write_text(path, format_history(history))

