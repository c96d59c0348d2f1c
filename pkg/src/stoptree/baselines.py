"""Benchmark policies: Longstaff-Schwartz regression and closed-form
threshold rules, including the exact dynamic program for the uniform
instance.

The regression baseline fits, backward from the last exercise date, a
least-squares approximation of the continuation value on a configurable
basis, using the realized discounted cashflows of the already-fitted later
policy as the dependent variable and regressing across all trajectories.
The induced policy stops the first time the payoff is at least the fitted
continuation value and strictly positive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core_model import GO, STOP, TrajectorySet, StoppingInstance
from .errors import ConfigError, DataError
from .generators import KO_VAR, PAYOFF_VAR, TIME_VAR

BASIS_TAGS = (
    "one",
    "prices",
    "pricesko",
    "koind",
    "payoff",
    "maxpriceko",
    "max2priceko",
    "prices2ko",
    "maxprice",
    "prices2",
)


def parse_basis(spec) -> tuple:
    """Normalize a basis given as comma string or tag sequence."""
    if isinstance(spec, str):
        tags = [t.strip().lower() for t in spec.split(",") if t.strip()]
    else:
        tags = [str(t).strip().lower() for t in spec]
    if not tags:
        raise ConfigError("basis must name at least one feature family")
    seen = []
    for tag in tags:
        if tag not in BASIS_TAGS:
            raise ConfigError(f"unknown basis tag {tag!r}; valid tags: {list(BASIS_TAGS)}")
        if tag not in seen:
            seen.append(tag)
    return tuple(seen)


def _feature_groups(instance: StoppingInstance):
    """Classify state variables by name: payoff, knock-out, prices (= the rest
    minus time)."""
    price_idx, payoff_idx, ko_idx = [], None, None
    for i, name in enumerate(instance.var_names):
        if name == PAYOFF_VAR:
            payoff_idx = i
        elif name == KO_VAR:
            ko_idx = i
        elif name != TIME_VAR:
            price_idx.append(i)
    return price_idx, payoff_idx, ko_idx


class _FeatureBuilder:
    """Maps a (m, n_vars) state matrix to the (m, d) regression design."""

    def __init__(self, instance: StoppingInstance, basis: tuple):
        self.basis = basis
        prices, payoff, ko = _feature_groups(instance)
        need_prices = {"prices", "pricesko", "maxpriceko", "max2priceko",
                       "prices2ko", "maxprice", "prices2"}
        need_ko = {"pricesko", "koind", "maxpriceko", "max2priceko", "prices2ko"}
        for tag in basis:
            if tag in need_prices and not prices:
                raise ConfigError(f"basis tag {tag!r} needs price variables in the state")
            if tag in need_ko and ko is None:
                raise ConfigError(f"basis tag {tag!r} needs the knock-out indicator")
            if tag == "max2priceko" and len(prices) < 2:
                raise ConfigError("basis tag 'max2priceko' needs at least two prices")
            if tag == "payoff" and payoff is None:
                raise ConfigError("basis tag 'payoff' needs the payoff variable")
        self._prices, self._payoff, self._ko = prices, payoff, ko
        price_names = [instance.var_names[i] for i in prices]
        pair_names = [
            f"{price_names[i]}*{price_names[j]}"
            for i in range(len(prices))
            for j in range(i, len(prices))
        ]
        names = []
        for tag in basis:
            if tag == "one":
                names.append("one")
            elif tag == "prices":
                names.extend(price_names)
            elif tag == "pricesko":
                names.extend(f"{n}*ko" for n in price_names)
            elif tag == "koind":
                names.append("ko")
            elif tag == "payoff":
                names.append("payoff")
            elif tag == "maxpriceko":
                names.append("maxprice*ko")
            elif tag == "max2priceko":
                names.append("max2price*ko")
            elif tag == "prices2ko":
                names.extend(f"{n}*ko" for n in pair_names)
            elif tag == "maxprice":
                names.append("maxprice")
            elif tag == "prices2":
                names.extend(pair_names)
        self.feature_names = tuple(names)

    def build(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        m = x.shape[0]
        p = x[:, self._prices] if self._prices else None
        y = x[:, self._ko] if self._ko is not None else None
        cols = []
        for tag in self.basis:
            if tag == "one":
                cols.append(np.ones((m, 1)))
            elif tag == "prices":
                cols.append(p)
            elif tag == "pricesko":
                cols.append(p * y[:, None])
            elif tag == "koind":
                cols.append(y[:, None])
            elif tag == "payoff":
                cols.append(x[:, [self._payoff]])
            elif tag == "maxpriceko":
                cols.append((p.max(axis=1) * y)[:, None])
            elif tag == "max2priceko":
                second = np.partition(p, p.shape[1] - 2, axis=1)[:, p.shape[1] - 2]
                cols.append((second * y)[:, None])
            elif tag in ("prices2ko", "prices2"):
                k = p.shape[1]
                iu, ju = np.triu_indices(k)
                pairs = p[:, iu] * p[:, ju]
                cols.append(pairs * y[:, None] if tag == "prices2ko" else pairs)
            elif tag == "maxprice":
                cols.append(p.max(axis=1)[:, None])
        return np.concatenate(cols, axis=1)


@dataclass(frozen=True)
class LsPolicy:
    """Regression-based stopping rule.

    ``coefficients`` has one row per exercise date t = 1..T-1; at date t the
    policy stops iff g(t, x) >= phi(x) . coefficients[t-1] and g(t, x) > 0,
    and at t = T iff g > 0.
    """

    instance: StoppingInstance
    basis: tuple
    coefficients: np.ndarray
    feature_names: tuple = field(default=())

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        if coef.ndim != 2 or coef.shape[0] != self.instance.horizon - 1:
            raise DataError(
                f"coefficients must be ({self.instance.horizon - 1}, d), got {coef.shape}"
            )
        object.__setattr__(self, "coefficients", coef)
        builder = _FeatureBuilder(self.instance, self.basis)
        if coef.shape[1] != len(builder.feature_names):
            raise DataError(
                f"basis {self.basis} spans {len(builder.feature_names)} features, "
                f"coefficients have {coef.shape[1]} columns"
            )
        object.__setattr__(self, "feature_names", builder.feature_names)
        object.__setattr__(self, "_builder", builder)

    def continuation_values(self, t: int, states: np.ndarray) -> np.ndarray:
        """Fitted continuation value at 1-based date t < T for a state matrix."""
        phi = self._builder.build(states)
        return phi @ self.coefficients[t - 1]

    def stop_mask(self, data: TrajectorySet) -> np.ndarray:
        if data.instance.var_names != self.instance.var_names:
            raise DataError(
                "trajectory variables do not match the ones this policy was fitted on"
            )
        omega, horizon = data.n_trajectories, data.horizon
        mask = np.empty((omega, horizon), dtype=bool)
        g = data.rewards
        for t in range(1, horizon):
            cont = self.continuation_values(t, data.states[:, t - 1, :])
            mask[:, t - 1] = (g[:, t - 1] >= cont) & (g[:, t - 1] > 0.0)
        mask[:, horizon - 1] = g[:, horizon - 1] > 0.0
        return mask

    def action(self, t: int, state) -> str:
        """Scalar decision; needs the payoff variable in the state."""
        payoff_idx = self._builder._payoff
        if payoff_idx is None:
            raise ConfigError("scalar decisions need the payoff variable in the state")
        state = np.asarray(state, dtype=np.float64)
        g = float(state[payoff_idx])
        if t == self.instance.horizon:
            return STOP if g > 0.0 else GO
        cont = float(self.continuation_values(t, state[np.newaxis, :])[0])
        return STOP if (g >= cont and g > 0.0) else GO


def fit_longstaff_schwartz(data: TrajectorySet, basis) -> LsPolicy:
    """Backward-inductive least-squares fit of continuation values.

    At each date t = T-1, ..., 1 the dependent variable is the one-period
    discounted realized cashflow of the policy already fitted for dates
    t+1..T; the regression runs over all trajectories and uses the
    minimum-norm least-squares solution when the design is rank deficient.
    """
    basis = parse_basis(basis)
    builder = _FeatureBuilder(data.instance, basis)
    horizon, beta = data.horizon, data.instance.discount
    g = data.rewards
    coef = np.zeros((horizon - 1, len(builder.feature_names)))
    value = g[:, horizon - 1].copy()
    for t in range(horizon - 1, 0, -1):
        target = beta * value
        phi = builder.build(data.states[:, t - 1, :])
        coef[t - 1], *_ = np.linalg.lstsq(phi, target, rcond=None)
        cont = phi @ coef[t - 1]
        stop = (g[:, t - 1] >= cont) & (g[:, t - 1] > 0.0)
        value = np.where(stop, g[:, t - 1], target)
    return LsPolicy(data.instance, basis, coef)


def write_ls_coefficients_csv(policy: LsPolicy, path) -> None:
    """One row per exercise date; the terminal date has no regression and is
    written as zeros."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *policy.feature_names])
        for t in range(1, policy.instance.horizon):
            writer.writerow([t, *(repr(float(c)) for c in policy.coefficients[t - 1])])
        writer.writerow([policy.instance.horizon, *(["0.0"] * len(policy.feature_names))])


# ---------------------------------------------------------------------------
# threshold policies and the exact uniform dynamic program
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdPolicy:
    """Stop at date t iff the payoff is >= thresholds[t-1].

    The final threshold must be 0 so the policy always stops (possibly for
    nothing) at the horizon.  ``payoff_var`` names the payoff column for
    scalar decisions; vectorized evaluation reads the reward tensor directly.
    """

    thresholds: np.ndarray
    payoff_var: Optional[int] = None

    def __post_init__(self):
        c = np.asarray(self.thresholds, dtype=np.float64)
        if c.ndim != 1 or c.size < 1:
            raise DataError("thresholds must be a non-empty vector")
        if np.any(np.isnan(c)):
            raise DataError("thresholds may not be NaN")
        if c[-1] != 0.0:
            raise DataError("the final threshold must be 0 (always stop at the horizon)")
        object.__setattr__(self, "thresholds", c)

    @property
    def horizon(self) -> int:
        return self.thresholds.size

    def stop_mask(self, data: TrajectorySet) -> np.ndarray:
        if data.horizon != self.horizon:
            raise DataError(
                f"policy horizon {self.horizon} != trajectory horizon {data.horizon}"
            )
        return data.rewards >= self.thresholds[np.newaxis, :]

    def with_payoff_var(self, index: int) -> "ThresholdPolicy":
        return replace(self, payoff_var=index)


def threshold_policy_action(policy: ThresholdPolicy, t: int, state) -> str:
    if not (1 <= t <= policy.horizon):
        raise DataError(f"period {t} outside 1..{policy.horizon}")
    if policy.payoff_var is None:
        raise ConfigError("threshold policy has no payoff variable index set")
    g = float(np.asarray(state, dtype=np.float64)[policy.payoff_var])
    return STOP if g >= policy.thresholds[t - 1] else GO


def exact_uniform_dp(horizon: int, discount: float):
    """Closed-form solution of the uniform instance.

    With J_t the value-to-go (undiscounted at t) and c_t = beta E[J_{t+1}]
    the optimal continuation threshold, the recursion is c_T = 0,
    E[J_t] = (1 + c_t^2) / 2, c_t = beta E[J_{t+1}].  Returns the optimal
    ``ThresholdPolicy`` and the exact value E[J_1].
    """
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    if not (0.0 < discount <= 1.0):
        raise ConfigError(f"discount must be in (0, 1], got {discount}")
    c = np.zeros(horizon, dtype=np.float64)
    expected = 0.5
    for t in range(horizon - 2, -1, -1):
        c[t] = discount * expected
        expected = (1.0 + c[t] * c[t]) / 2.0
    return ThresholdPolicy(c), float(expected)
