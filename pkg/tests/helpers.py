"""Builders for small synthetic market histories."""

from __future__ import annotations

import math
import random
from datetime import date, timedelta
from pathlib import Path

from cryptoindex.market_data import MarketHistory, MarketSnapshot

DATA_DIR = Path(__file__).resolve().parent / "data"
D0 = date(2015, 1, 1)


def day(offset: int) -> date:
    return D0 + timedelta(days=offset)


def make_history(rows, carry_forward_days: int = 7) -> MarketHistory:
    """rows: iterable of (date, coin, price, cap)."""
    return MarketHistory(
        (MarketSnapshot(d, c, p, m) for d, c, p, m in rows),
        carry_forward_days=carry_forward_days,
    )


def constant_rows(caps: dict[str, float], prices: dict[str, float], start: date, days: int):
    return [
        (start + timedelta(days=i), coin, prices[coin], caps[coin])
        for i in range(days)
        for coin in caps
    ]


def random_universe(rng: random.Random, start: date, n_days: int, n_coins: int, window: int = 7):
    """Random walks with late births and short reporting gaps, but no deaths.

    Coin 0 exists from ``start`` so a first selection always succeeds.
    """
    rows = []
    for k in range(n_coins):
        coin = f"C{k:02d}"
        birth = 0 if k == 0 else rng.choice([0, 0, rng.randrange(n_days)])
        price = 10 ** rng.uniform(-3, 3)
        supply = 10 ** rng.uniform(6, 10)
        gap_left = 0
        last_seen = birth
        for i in range(birth, n_days):
            if gap_left:
                gap_left -= 1
            elif window and last_seen == i - 1 and rng.random() < 0.03:
                gap_left = rng.randint(1, window) - 1
            else:
                rows.append((start + timedelta(days=i), coin, price, price * supply))
                last_seen = i
            price *= math.exp(rng.gauss(0.001, 0.05))
            supply *= math.exp(rng.gauss(0.0, 0.01))
    return rows
