"""Trajectory generators: correlated-GBM max-call with knock-out, i.i.d.
uniform 1-D rewards, and windowed ingestion of real price series.

All randomness flows through a counter-based Philox generator keyed by the
user seed: raw 64-bit counter outputs are mapped to open-interval uniforms
and (where needed) to normals via the inverse CDF.  Draw i of a simulation
consumes counter slot i, with slots laid out trajectory-major then period
then asset, so identical seeds give bit-identical trajectory sets on every
platform and trajectory blocks could be regenerated independently by
advancing the counter.

State layouts are assembled in a fixed variable order: time, prices, payoff,
knock-out indicator (each optional); the emitted time variable equals the
1-based period t exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .core_model import StoppingInstance, TrajectorySet
from .errors import ConfigError, DataError

TIME_VAR = "time"
PAYOFF_VAR = "payoff"
KO_VAR = "ko"


def _uniform_open(seed: int, count: int) -> np.ndarray:
    """``count`` uniforms on the open interval (0, 1) from a Philox counter stream."""
    bits = np.random.Philox(key=seed).random_raw(count)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _standard_normals(seed: int, count: int) -> np.ndarray:
    return ndtri(_uniform_open(seed, count))


@dataclass(frozen=True)
class StateLayout:
    """Which derived variables the state tensor carries."""

    time: bool = False
    prices: bool = False
    payoff: bool = True
    ko: bool = False

    def __post_init__(self):
        if not (self.time or self.prices or self.payoff or self.ko):
            raise ConfigError("state layout must emit at least one variable")

    def var_names(self, price_names=()) -> tuple:
        names = []
        if self.time:
            names.append(TIME_VAR)
        if self.prices:
            names.extend(price_names)
        if self.payoff:
            names.append(PAYOFF_VAR)
        if self.ko:
            names.append(KO_VAR)
        return tuple(names)

    @classmethod
    def parse(cls, spec: str) -> "StateLayout":
        """Parse a comma-separated tag list like "time,prices,payoff,ko"."""
        flags = dict(time=False, prices=False, payoff=False, ko=False)
        for tag in spec.split(","):
            tag = tag.strip().lower()
            if not tag:
                continue
            if tag not in flags:
                raise ConfigError(
                    f"unknown layout tag {tag!r}; valid tags: {sorted(flags)}"
                )
            flags[tag] = True
        return cls(**flags)


@dataclass(frozen=True)
class MaxCallParams:
    """Bermudan max-call on n correlated GBM assets with an up-and-out barrier."""

    n_assets: int
    initial_price: float
    strike: float = 100.0
    barrier: float = 170.0
    rate: float = 0.05
    volatility: float = 0.2
    correlation: float = 0.0
    years: float = 3.0
    periods: int = 54

    def __post_init__(self):
        if self.n_assets < 1:
            raise ConfigError(f"n_assets must be >= 1, got {self.n_assets}")
        if self.initial_price <= 0.0:
            raise ConfigError("initial_price must be > 0")
        if self.strike <= 0.0 or self.barrier <= 0.0:
            raise ConfigError("strike and barrier must be > 0")
        if self.volatility <= 0.0:
            raise ConfigError("volatility must be > 0")
        if self.years <= 0.0:
            raise ConfigError("years must be > 0")
        if self.periods < 1:
            raise ConfigError("periods must be >= 1")
        if self.n_assets > 1:
            lo = -1.0 / (self.n_assets - 1)
            if not (lo < self.correlation < 1.0):
                raise ConfigError(
                    f"pairwise correlation {self.correlation} leaves the correlation "
                    f"matrix non-positive-definite (need {lo:.4g} < rho < 1)"
                )

    @property
    def dt(self) -> float:
        return self.years / self.periods

    @property
    def discount(self) -> float:
        return math.exp(-self.rate * self.dt)

    def price_names(self) -> tuple:
        return tuple(f"price_{j + 1}" for j in range(self.n_assets))


def _chol_factor(n: int, rho: float) -> np.ndarray:
    corr = np.full((n, n), rho, dtype=np.float64)
    np.fill_diagonal(corr, 1.0)
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        raise ConfigError(
            f"correlation matrix with pairwise rho={rho} is not positive definite"
        ) from None


def simulate_maxcall(
    params: MaxCallParams,
    layout: StateLayout,
    n_trajectories: int,
    seed: int,
) -> TrajectorySet:
    """Simulate the knocked-out max-call instance.

    Prices start at the deterministic state p(1) = initial_price and evolve
    for periods - 1 GBM steps of length dt = years/periods:

        log p(t+1) - log p(t) = (r - sigma^2/2) dt + sigma sqrt(dt) eps

    with eps jointly normal (pairwise correlation rho via the lower-triangular
    Cholesky factor).  The knock-out indicator y(t) is 1 while the running
    maximum of every asset price up to t stays strictly below the barrier;
    the payoff is g(t) = max(0, max_j p_j(t) - strike) * y(t).
    """
    if n_trajectories < 1:
        raise ConfigError("n_trajectories must be >= 1")
    n, horizon = params.n_assets, params.periods
    omega = n_trajectories
    steps = horizon - 1

    eps = _standard_normals(seed, omega * steps * n).reshape(omega, steps, n)
    if n > 1:
        chol = _chol_factor(n, params.correlation)
        eps = eps @ chol.T
    drift = (params.rate - 0.5 * params.volatility**2) * params.dt
    scale = params.volatility * math.sqrt(params.dt)
    log_p = np.empty((omega, horizon, n), dtype=np.float64)
    log_p[:, 0, :] = math.log(params.initial_price)
    if steps:
        np.cumsum(drift + scale * eps, axis=1, out=eps)
        log_p[:, 1:, :] = math.log(params.initial_price) + eps
    prices = np.exp(log_p)
    del eps, log_p

    best = prices.max(axis=2)
    alive = np.maximum.accumulate(best, axis=1) < params.barrier
    ko = alive.astype(np.float64)
    rewards = np.maximum(best - params.strike, 0.0) * ko

    blocks = []
    if layout.time:
        t_col = np.broadcast_to(
            np.arange(1, horizon + 1, dtype=np.float64)[np.newaxis, :, np.newaxis],
            (omega, horizon, 1),
        )
        blocks.append(t_col)
    if layout.prices:
        blocks.append(prices)
    if layout.payoff:
        blocks.append(rewards[:, :, np.newaxis])
    if layout.ko:
        blocks.append(ko[:, :, np.newaxis])
    states = np.concatenate(blocks, axis=2) if len(blocks) > 1 else np.array(blocks[0])

    instance = StoppingInstance(
        horizon=horizon,
        discount=params.discount,
        var_names=layout.var_names(params.price_names()),
        reward_kind="maxcall",
    )
    return TrajectorySet(instance, states, rewards)


def simulate_uniform_1d(
    horizon: int,
    discount: float,
    layout: StateLayout,
    n_trajectories: int,
    seed: int,
) -> TrajectorySet:
    """i.i.d. Uniform(0, 1) states with reward g(t, x) = x."""
    if layout.prices or layout.ko:
        raise ConfigError("the uniform instance has no prices or knock-out indicator")
    if n_trajectories < 1:
        raise ConfigError("n_trajectories must be >= 1")
    x = _uniform_open(seed, n_trajectories * horizon).reshape(n_trajectories, horizon)
    blocks = []
    if layout.time:
        blocks.append(
            np.broadcast_to(
                np.arange(1, horizon + 1, dtype=np.float64)[np.newaxis, :, np.newaxis],
                (n_trajectories, horizon, 1),
            )
        )
    if layout.payoff:
        blocks.append(x[:, :, np.newaxis])
    states = np.concatenate(blocks, axis=2) if len(blocks) > 1 else np.array(blocks[0])
    instance = StoppingInstance(
        horizon=horizon,
        discount=discount,
        var_names=layout.var_names(),
        reward_kind="uniform1d",
    )
    return TrajectorySet(instance, states, x)


# ---------------------------------------------------------------------------
# real price series -> windowed trajectories
# ---------------------------------------------------------------------------

def read_price_table(csv_path):
    """Daily close prices: first column a date label (order only), rest tickers.

    Returns ``(tickers, prices)`` with prices shaped (days, tickers).
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise DataError(f"price file not found: {csv_path}")
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise DataError("price table needs a date column plus at least one ticker")
        tickers = [h.strip() for h in header[1:]]
        rows = []
        for k, row in enumerate(reader):
            if len(row) != len(header):
                raise DataError(f"price row {k + 2} has {len(row)} fields, expected {len(header)}")
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise DataError(f"price row {k + 2} holds a non-numeric or missing value") from None
    if not rows:
        raise DataError("price table has no data rows")
    prices = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(prices)) or np.any(prices <= 0.0):
        raise DataError("prices must be finite and > 0")
    return tickers, prices


def ingest_price_windows(
    price_csv,
    assets_per_instance: Optional[int] = None,
    window_len: int = 30,
    strike: float = 105.0,
    rescale_to: float = 100.0,
    train_fraction: float = 2.0 / 3.0,
    annual_rate: float = 0.02,
    days_per_year: int = 252,
    asset_seed: int = 0,
):
    """Slice a daily price table into fixed-length windows of trajectories.

    Each window of ``window_len`` consecutive days becomes one trajectory;
    every asset is rescaled so its first price in the window is
    ``rescale_to``; the payoff is max(0, max_j p_j - strike) with no barrier;
    exercise dates are treated as equispaced with a per-day discount of
    exp(-annual_rate / days_per_year).  The first ceil(train_fraction *
    n_windows) windows in date order form the training set, the rest the test
    set.  When ``assets_per_instance`` is given and smaller than the table,
    that many tickers are sampled with the seeded generator.

    Returns ``(train, test)`` TrajectorySets with variables
    (time, <tickers...>, payoff).
    """
    tickers, prices = read_price_table(price_csv)
    if window_len < 1 or window_len > prices.shape[0]:
        raise DataError(
            f"window_len {window_len} invalid for a table with {prices.shape[0]} rows"
        )
    if not (0.0 < train_fraction < 1.0):
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")

    if assets_per_instance is not None and assets_per_instance < len(tickers):
        if assets_per_instance < 1:
            raise ConfigError("assets_per_instance must be >= 1")
        rng = np.random.default_rng(asset_seed)
        chosen = np.sort(rng.choice(len(tickers), size=assets_per_instance, replace=False))
        tickers = [tickers[int(i)] for i in chosen]
        prices = prices[:, chosen]

    n_windows = prices.shape[0] // window_len
    if n_windows < 2:
        raise DataError(
            f"need at least 2 windows of {window_len} days, table has {prices.shape[0]} rows"
        )
    n_assets = prices.shape[1]
    windows = prices[: n_windows * window_len].reshape(n_windows, window_len, n_assets)
    windows = windows * (rescale_to / windows[:, :1, :])
    payoff = np.maximum(windows.max(axis=2) - strike, 0.0)

    t_col = np.broadcast_to(
        np.arange(1, window_len + 1, dtype=np.float64)[np.newaxis, :, np.newaxis],
        (n_windows, window_len, 1),
    )
    states = np.concatenate([t_col, windows, payoff[:, :, np.newaxis]], axis=2)
    instance = StoppingInstance(
        horizon=window_len,
        discount=math.exp(-annual_rate / days_per_year),
        var_names=(TIME_VAR, *tickers, PAYOFF_VAR),
        reward_kind="prices",
    )
    n_train = math.ceil(train_fraction * n_windows)
    if n_train < 1 or n_train >= n_windows:
        raise DataError(
            f"train fraction {train_fraction} leaves an empty train or test set "
            f"({n_train} of {n_windows} windows)"
        )
    train = TrajectorySet(instance, states[:n_train], payoff[:n_train])
    test = TrajectorySet(instance, states[n_train:], payoff[n_train:])
    return train, test
