"""Simulators: reproducibility, layout assembly, max-call dynamics,
knock-out semantics, and price-window ingestion."""

import math

import numpy as np
import pytest

from stoptree import (
    ConfigError,
    DataError,
    MaxCallParams,
    StateLayout,
    ingest_price_windows,
    simulate_maxcall,
    simulate_uniform_1d,
)
from stoptree.generators import _uniform_open


class TestRandomStream:
    def test_open_interval_and_determinism(self):
        u = _uniform_open(42, 100_000)
        assert np.all(u > 0.0) and np.all(u < 1.0)
        np.testing.assert_array_equal(u, _uniform_open(42, 100_000))
        assert not np.array_equal(u[:1000], _uniform_open(43, 1000))

    def test_prefix_stability(self):
        # drawing more keeps the earlier slots identical (counter addressing)
        a = _uniform_open(7, 100)
        b = _uniform_open(7, 1000)
        np.testing.assert_array_equal(a, b[:100])


class TestStateLayout:
    def test_parse_and_names(self):
        lay = StateLayout.parse("time,prices,payoff,ko")
        assert lay.var_names(("p1", "p2")) == ("time", "p1", "p2", "payoff", "ko")
        assert StateLayout.parse("payoff").var_names() == ("payoff",)

    def test_rejects_unknown_tag(self):
        with pytest.raises(ConfigError):
            StateLayout.parse("time,velocity")

    def test_rejects_empty(self):
        with pytest.raises(ConfigError):
            StateLayout(time=False, prices=False, payoff=False, ko=False)


class TestUniform1d:
    def test_shapes_and_reward_equals_payoff_var(self):
        lay = StateLayout(time=True, payoff=True)
        data = simulate_uniform_1d(5, 0.9, lay, 50, 3)
        assert data.states.shape == (50, 5, 2)
        assert data.instance.var_names == ("time", "payoff")
        np.testing.assert_array_equal(data.states[:, :, 1], data.rewards)
        np.testing.assert_array_equal(data.states[0, :, 0], [1, 2, 3, 4, 5])
        assert np.all(data.rewards > 0) and np.all(data.rewards < 1)

    def test_seed_reproducibility(self):
        lay = StateLayout(payoff=True)
        a = simulate_uniform_1d(4, 1.0, lay, 20, 11)
        b = simulate_uniform_1d(4, 1.0, lay, 20, 11)
        np.testing.assert_array_equal(a.states, b.states)

    def test_rejects_price_layout(self):
        with pytest.raises(ConfigError):
            simulate_uniform_1d(4, 1.0, StateLayout(prices=True, payoff=True), 5, 0)


class TestMaxCallParams:
    def test_discount_formula(self):
        p = MaxCallParams(n_assets=8, initial_price=90.0)
        assert p.discount == math.exp(-0.05 * 3.0 / 54)
        assert p.dt == 3.0 / 54

    @pytest.mark.parametrize("kwargs", [
        dict(n_assets=0, initial_price=90.0),
        dict(n_assets=2, initial_price=-1.0),
        dict(n_assets=2, initial_price=90.0, volatility=0.0),
        dict(n_assets=2, initial_price=90.0, correlation=1.0),
        dict(n_assets=2, initial_price=90.0, correlation=-1.5),
        dict(n_assets=2, initial_price=90.0, periods=0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            MaxCallParams(**kwargs)


@pytest.fixture(scope="module")
def desk():
    params = MaxCallParams(n_assets=4, initial_price=90.0, periods=20)
    layout = StateLayout(time=True, prices=True, payoff=True, ko=True)
    return params, simulate_maxcall(params, layout, 4000, seed=5)


class TestMaxCall:

    def test_first_period_is_deterministic(self, desk):
        params, data = desk
        prices = data.states[:, 0, 1:1 + params.n_assets]
        np.testing.assert_array_equal(prices, np.full_like(prices, 90.0))

    def test_payoff_consistent_with_states(self, desk):
        params, data = desk
        prices = data.states[:, :, 1:1 + params.n_assets]
        ko = data.states[:, :, -1]
        payoff_var = data.states[:, :, -2]
        expected = np.maximum(prices.max(axis=2) - params.strike, 0.0) * ko
        np.testing.assert_array_equal(expected, data.rewards)
        np.testing.assert_array_equal(payoff_var, data.rewards)

    def test_knockout_is_absorbing_and_strict(self, desk):
        params, data = desk
        prices = data.states[:, :, 1:1 + params.n_assets]
        ko = data.states[:, :, -1]
        assert set(np.unique(ko)) <= {0.0, 1.0}
        # once zero, forever zero
        assert np.all(np.diff(ko, axis=1) <= 0)
        running_max = np.maximum.accumulate(prices.max(axis=2), axis=1)
        np.testing.assert_array_equal(ko, (running_max < params.barrier).astype(float))
        assert (ko == 0).any(), "a 170 barrier should be hit sometimes from 90"

    def test_seed_reproducibility_and_divergence(self):
        params = MaxCallParams(n_assets=3, initial_price=100.0, periods=10)
        layout = StateLayout(prices=True, payoff=True)
        a = simulate_maxcall(params, layout, 30, seed=9)
        b = simulate_maxcall(params, layout, 30, seed=9)
        c = simulate_maxcall(params, layout, 30, seed=10)
        np.testing.assert_array_equal(a.states, b.states)
        assert not np.array_equal(a.states, c.states)

    def test_gbm_log_return_moments(self):
        # one asset, long horizon: sample moments of one-step log returns
        params = MaxCallParams(n_assets=1, initial_price=100.0, periods=54)
        layout = StateLayout(prices=True, payoff=True)
        data = simulate_maxcall(params, layout, 20_000, seed=1)
        prices = data.states[:, :, 0]
        steps = np.diff(np.log(prices), axis=1).ravel()
        drift = (params.rate - params.volatility**2 / 2) * params.dt
        sd = params.volatility * math.sqrt(params.dt)
        n = steps.size
        assert abs(steps.mean() - drift) < 5 * sd / math.sqrt(n)
        assert abs(steps.std(ddof=1) - sd) < 5 * sd / math.sqrt(n)

    def test_pairwise_correlation(self):
        params = MaxCallParams(n_assets=2, initial_price=100.0, periods=30,
                               correlation=0.6)
        layout = StateLayout(prices=True, payoff=True)
        data = simulate_maxcall(params, layout, 8000, seed=2)
        r1 = np.diff(np.log(data.states[:, :, 0]), axis=1).ravel()
        r2 = np.diff(np.log(data.states[:, :, 1]), axis=1).ravel()
        rho = np.corrcoef(r1, r2)[0, 1]
        assert abs(rho - 0.6) < 0.02

    def test_zero_correlation_independence(self):
        params = MaxCallParams(n_assets=2, initial_price=100.0, periods=30)
        layout = StateLayout(prices=True, payoff=True)
        data = simulate_maxcall(params, layout, 8000, seed=3)
        r1 = np.diff(np.log(data.states[:, :, 0]), axis=1).ravel()
        r2 = np.diff(np.log(data.states[:, :, 1]), axis=1).ravel()
        assert abs(np.corrcoef(r1, r2)[0, 1]) < 0.02

    def test_canonical_var_order(self):
        params = MaxCallParams(n_assets=2, initial_price=100.0, periods=5)
        data = simulate_maxcall(
            params, StateLayout(time=True, prices=True, payoff=True, ko=True), 10, 1
        )
        assert data.instance.var_names == ("time", "price_1", "price_2", "payoff", "ko")


def _write_price_csv(path, days, tickers, start=100.0, step=1.0):
    rows = ["date," + ",".join(tickers)]
    for d in range(days):
        prices = [f"{start + step * d + 10 * j:.2f}" for j in range(len(tickers))]
        rows.append(f"2024-01-{d + 1:02d}," + ",".join(prices))
    path.write_text("\n".join(rows) + "\n")


class TestPriceIngestion:
    def test_windows_rescale_and_split(self, tmp_path):
        csv_path = tmp_path / "prices.csv"
        _write_price_csv(csv_path, days=31, tickers=["AAA", "BBB"])
        train, test = ingest_price_windows(
            csv_path, window_len=10, strike=105.0, rescale_to=100.0,
            train_fraction=2.0 / 3.0,
        )
        # 31 rows -> 3 windows of 10 (one row dropped); ceil(2/3 * 3) = 2 train
        assert train.n_trajectories == 2 and test.n_trajectories == 1
        assert train.horizon == 10
        assert train.instance.var_names == ("time", "AAA", "BBB", "payoff")
        # every window's first price is rescaled to exactly 100
        np.testing.assert_array_equal(train.states[:, 0, 1:3], 100.0)
        # first window, AAA: day d price (100 + d) scaled by 100/100
        np.testing.assert_allclose(train.states[0, :, 1], 100.0 + np.arange(10))
        # payoff = max over assets of rescaled price minus strike, clipped
        best = train.states[:, :, 1:3].max(axis=2)
        np.testing.assert_array_equal(train.rewards, np.maximum(best - 105.0, 0.0))
        assert train.instance.discount == math.exp(-0.02 / 252)

    def test_asset_subsampling_is_seeded(self, tmp_path):
        csv_path = tmp_path / "prices.csv"
        _write_price_csv(csv_path, days=30, tickers=["A", "B", "C", "D"])
        t1, _ = ingest_price_windows(csv_path, assets_per_instance=2, window_len=10,
                                     asset_seed=5)
        t2, _ = ingest_price_windows(csv_path, assets_per_instance=2, window_len=10,
                                     asset_seed=5)
        assert t1.instance.var_names == t2.instance.var_names
        assert len(t1.instance.var_names) == 4  # time, two tickers, payoff

    def test_errors(self, tmp_path):
        csv_path = tmp_path / "prices.csv"
        _write_price_csv(csv_path, days=12, tickers=["A"])
        with pytest.raises(DataError):
            ingest_price_windows(csv_path, window_len=13)   # longer than table
        with pytest.raises(DataError):
            ingest_price_windows(csv_path, window_len=12)   # only one window
        with pytest.raises(ConfigError):
            ingest_price_windows(csv_path, window_len=5, train_fraction=1.5)
        with pytest.raises(DataError):
            ingest_price_windows(tmp_path / "missing.csv", window_len=5)
        bad = tmp_path / "bad.csv"
        bad.write_text("date,A\n2024-01-01,\n")
        with pytest.raises(DataError):
            ingest_price_windows(bad, window_len=1)
