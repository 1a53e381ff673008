"""Run configuration: defaults, flat ``key=value`` files and flag overrides."""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Mapping
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Any

from .analytics import DEFAULT_PERIODS_PER_YEAR
from .composition import DEFAULT_N_CONSTITUENTS
from .engine import DEFAULT_BASE_VALUE, BacktestConfig
from .market_data import DEFAULT_CARRY_FORWARD_DAYS
from .smoothing import DEFAULT_ALPHA, DEFAULT_EPSILON, SmoothingParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    data_path: Path | None = None
    start: date | None = None
    end: date | None = None
    n_constituents: int = DEFAULT_N_CONSTITUENTS
    alpha: float = DEFAULT_ALPHA
    epsilon: float = DEFAULT_EPSILON
    carry_forward_days: int = DEFAULT_CARRY_FORWARD_DAYS
    base_value: float = DEFAULT_BASE_VALUE
    periods_per_year: int = DEFAULT_PERIODS_PER_YEAR
    risk_free_rate: float = 0.0
    reselect_monthly: bool = False
    output_dir: Path | None = None

    def validate(self) -> None:
        if self.start is not None and self.end is not None and not self.start < self.end:
            raise ConfigError(f"start {self.start} must be before end {self.end}")
        if self.n_constituents < 1:
            raise ConfigError("n_constituents must be at least 1")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigError("alpha must be positive")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.carry_forward_days < 0:
            raise ConfigError("carry_forward_days must be non-negative")
        if not (math.isfinite(self.base_value) and self.base_value > 0):
            raise ConfigError("base_value must be positive")
        if self.periods_per_year < 1:
            raise ConfigError("periods_per_year must be at least 1")
        if not (math.isfinite(self.risk_free_rate) and self.risk_free_rate > -1):
            raise ConfigError("risk_free_rate must exceed -1")

    @property
    def smoothing(self) -> SmoothingParams:
        return SmoothingParams(self.alpha, self.epsilon)

    def backtest_config(self, start: date, end: date) -> BacktestConfig:
        return BacktestConfig(
            start=start,
            end=end,
            n=self.n_constituents,
            smoothing=self.smoothing,
            base_value=self.base_value,
            reselect_monthly=self.reselect_monthly,
        )


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


_PARSERS = {
    "data_path": Path,
    "start": date.fromisoformat,
    "end": date.fromisoformat,
    "n_constituents": int,
    "alpha": float,
    "epsilon": float,
    "carry_forward_days": int,
    "base_value": float,
    "periods_per_year": int,
    "risk_free_rate": float,
    "reselect_monthly": _parse_bool,
    "output_dir": Path,
}


def coerce(key: str, raw: Any) -> Any:
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    if not isinstance(raw, str):
        return raw
    try:
        return _PARSERS[key](raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored.

    Relative ``data_path`` and ``output_dir`` values resolve against the
    config file's own directory.
    """
    values: dict[str, Any] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        values[key.strip()] = coerce(key.strip(), raw)
    for key in ("data_path", "output_dir"):
        if key in values and not values[key].is_absolute():
            values[key] = Path(path).parent / values[key]
    return values


def resolve_config(
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Layer defaults, then config-file values, then explicit overrides.

    ``None`` entries in ``overrides`` mean "not given" and do not override.
    """
    merged: dict[str, Any] = {}
    for layer in (file_values or {}, overrides or {}):
        for key, value in layer.items():
            if value is not None:
                merged[key] = coerce(key, value)
    try:
        config = dataclasses.replace(RunConfig(), **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    config.validate()
    return config
