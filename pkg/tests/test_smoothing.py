from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import day, make_history, random_universe
from oracle import naive_adjusted_cap
from cryptoindex.market_data import DateRangeError
from cryptoindex.smoothing import SmoothingParams, adjusted_cap, adjusted_caps_on


def test_params_validation():
    with pytest.raises(ValueError):
        SmoothingParams(alpha=0.0)
    with pytest.raises(ValueError):
        SmoothingParams(alpha=-1.0)
    with pytest.raises(ValueError):
        SmoothingParams(epsilon=1.0)
    with pytest.raises(ValueError):
        SmoothingParams(epsilon=0.0)


def test_default_half_life_is_two_weeks():
    params = SmoothingParams()
    assert math.exp(-params.alpha * 14) == pytest.approx(0.5, rel=1e-15)
    # ceil(ln(1e10) / (ln 2 / 14)) = ceil(465.07...)
    assert params.max_lag == 466


def test_max_lag_bounds_the_truncated_weight():
    for alpha in (0.01, 0.1, 0.7, 3.0):
        params = SmoothingParams(alpha, 1e-6)
        assert math.exp(-alpha * params.max_lag) <= 1e-6
        assert math.exp(-alpha * (params.max_lag - 1)) > 1e-6


def test_constant_series_is_fixed_point():
    history = make_history([(day(i), "AAA", 1.0, 3.5e9) for i in range(100)])
    got = adjusted_cap(history, "AAA", day(99), SmoothingParams())
    assert got.value == pytest.approx(3.5e9, rel=1e-14)


def test_two_observation_example():
    # (2 * 1 + 1 * 0.5) / (1 + 0.5), with alpha = ln 2 so the lag-1 weight is exactly 1/2
    history = make_history([(day(0), "AAA", 1.0, 1.0), (day(1), "AAA", 1.0, 2.0)], carry_forward_days=0)
    got = adjusted_cap(history, "AAA", day(1), SmoothingParams(alpha=math.log(2)))
    assert got.value == pytest.approx(5 / 3, rel=1e-12)
    assert got.coin == "AAA" and got.date == day(1)


def test_single_observation():
    history = make_history([(day(0), "AAA", 1.0, 7.0)])
    assert adjusted_cap(history, "AAA", day(0)).value == 7.0


def test_absent_without_lag_zero_cap():
    history = make_history([(day(0), "AAA", 1.0, 7.0), (day(20), "BBB", 1.0, 1.0)])
    assert adjusted_cap(history, "AAA", day(20)) is None
    assert adjusted_cap(history, "ZZZ", day(20)) is None


def test_carried_lags_count_in_the_average():
    # a one-day gap is filled by the carried value of the day before
    history = make_history(
        [(day(0), "AAA", 1.0, 1.0), (day(2), "AAA", 1.0, 4.0)], carry_forward_days=7
    )
    a = math.log(2)
    expected = (4 * 1 + 1 * 0.5 + 1 * 0.25) / (1 + 0.5 + 0.25)
    assert adjusted_cap(history, "AAA", day(2), SmoothingParams(a)).value == pytest.approx(
        expected, rel=1e-12
    )


def test_out_of_range():
    history = make_history([(day(0), "AAA", 1.0, 7.0)])
    with pytest.raises(DateRangeError):
        adjusted_cap(history, "AAA", day(1))
    with pytest.raises(DateRangeError):
        adjusted_caps_on(history, day(-1))


def test_large_alpha_tracks_latest_observation():
    params = SmoothingParams(alpha=50.0, epsilon=1e-10)
    assert params.max_lag == 1
    history = make_history([(day(0), "AAA", 1.0, 1.0), (day(1), "AAA", 1.0, 9.0)])
    got = adjusted_cap(history, "AAA", day(1), params).value
    assert abs(got - 9.0) / 9.0 <= math.exp(-50.0)


def test_caps_on_constant_universe():
    caps = {"AAA": 1e9, "BBB": 4e9, "CCC": 9e9}
    rows = [(day(i), coin, 1.0, cap) for i in range(30) for coin, cap in caps.items()]
    got = adjusted_caps_on(make_history(rows), day(29))
    assert set(got) == set(caps)
    for coin, cap in caps.items():
        assert got[coin].value == pytest.approx(cap, rel=1e-14)


def test_caps_on_omits_stale_and_handles_empty():
    rows = [(day(0), "AAA", 1.0, 1.0), (day(0), "OLD", 1.0, 1.0), (day(20), "AAA", 1.0, 1.0)]
    history = make_history(rows)
    assert set(adjusted_caps_on(history, day(20))) == {"AAA"}
    assert adjusted_caps_on(history, day(10)) == {}


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    alpha=st.floats(0.01, 1.0),
    n_days=st.integers(1, 120),
    window=st.integers(0, 7),
)
def test_matches_naive_summation(seed, alpha, n_days, window):
    rows = random_universe(random.Random(seed), day(0), n_days, 2, window=window)
    history = make_history(rows, carry_forward_days=window)
    params = SmoothingParams(alpha, 1e-10)
    last = history.date_range[1]
    for coin in history.coins:
        got = adjusted_cap(history, coin, last, params)
        want = naive_adjusted_cap(rows, coin, last, alpha, 1e-10, window)
        if want is None:
            assert got is None
        else:
            assert got.value == pytest.approx(want, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.01, 1.0), k=st.floats(1e-6, 1e6))
def test_bounds_and_linearity(seed, alpha, k):
    rows = random_universe(random.Random(seed), day(0), 90, 1)
    history = make_history(rows)
    scaled = history.scaled(market_cap=k)
    params = SmoothingParams(alpha)
    end = history.date_range[1]
    got = adjusted_cap(history, "C00", end, params)
    if got is None:
        return
    lags = [m for d, _, _, m in rows if (end - d).days <= params.max_lag and d <= end]
    assert min(lags) * (1 - 1e-12) <= got.value <= max(lags) * (1 + 1e-12)
    assert adjusted_cap(scaled, "C00", end, params).value == pytest.approx(k * got.value, rel=1e-12)
