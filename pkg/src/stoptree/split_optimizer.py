"""Exact split-point optimization for one (leaf, variable, direction) candidate.

Splitting a leaf on variable ``v`` at point ``theta`` changes where each
trajectory first stops.  Holding everything else fixed, a trajectory's
discounted reward is a piecewise-constant function of ``theta`` whose
breakpoints are the trajectory's "permissible stop periods": in-leaf periods
where ``x_v`` sets a strict running maximum (right-stop candidates, where the
right child stops) or strict running minimum (left-stop candidates).

Averaging those step functions over trajectories gives the sample objective
``F(theta)`` of the spliced tree for *every* theta at once; a single sorted
sweep over breakpoint deltas locates the maximizing plateau, and the returned
split point is the midpoint of the (leftmost) argmax interval, or +/-inf when
that interval is unbounded.

The reported objective is recomputed at the chosen split point with the same
discounted-reward products and the same fixed-order mean used by
``core_model.evaluate``, so ``SplitResult.objective`` equals the evaluation
of the spliced tree bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core_model import (
    LEFT,
    RIGHT,
    STOP,
    Leaf,
    TrajectorySet,
    TreePolicy,
    leaf_assignment,
    route,
)
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class LeafContext:
    """Per-trajectory ingredients of the split sweep for one candidate leaf.

    no_stop_time             first period the current tree stops the
                             trajectory at some *other* leaf (None if never)
    no_stop_value            discounted reward collected at that period (0 if never)
    in_leaf_periods          periods routed to the leaf before the no-stop time
    permissible_stop_periods in-leaf periods where the split variable sets a
                             strict running max (right) / min (left)
    """

    no_stop_time: Optional[int]
    no_stop_value: float
    in_leaf_periods: tuple
    permissible_stop_periods: tuple


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function of the split point.

    ``values`` has one more entry than ``breakpoints``: values[0] applies on
    (-inf, b[0]), values[j] on [b[j-1], b[j]), values[m] on [b[m-1], +inf).
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if b.ndim != 1 or v.ndim != 1 or v.shape[0] != b.shape[0] + 1:
            raise ConfigError(
                f"need len(values) == len(breakpoints) + 1, got {v.shape} vs {b.shape}"
            )
        if b.shape[0] > 1 and not np.all(b[1:] > b[:-1]):
            raise ConfigError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    def value_at(self, theta: float) -> float:
        return float(self.values[np.searchsorted(self.breakpoints, theta, side="right")])


@dataclass(frozen=True)
class SplitResult:
    """Outcome of optimizing one candidate split.

    objective        sample objective of the spliced tree at ``threshold``
    threshold        chosen split point (may be +/-inf; degenerate splits
                     reproduce the current tree's behavior)
    argmax_interval  open interior (lo, hi) of the maximizing interval
    """

    objective: float
    threshold: float
    argmax_interval: tuple


def _check_leaf(policy: TreePolicy, leaf: int) -> None:
    node = policy.nodes.get(leaf)
    if node is None or not isinstance(node, Leaf):
        raise DataError(f"node {leaf} is not a leaf of the policy")


def _check_direction(direction: str) -> None:
    if direction not in (LEFT, RIGHT):
        raise ConfigError(f"direction must be {LEFT!r} or {RIGHT!r}, got {direction!r}")


# ---------------------------------------------------------------------------
# per-trajectory view (reference-grade, scalar)
# ---------------------------------------------------------------------------

def leaf_context(policy, data, omega, leaf, var, direction) -> LeafContext:
    """Scalar computation of one trajectory's sweep ingredients."""
    _check_leaf(policy, leaf)
    _check_direction(direction)
    horizon = data.horizon
    states, rewards, disc = data.states, data.rewards, data.discount_factors

    routed = [route(policy, states[omega, t]) for t in range(horizon)]
    no_stop_time = None
    for t, lid in enumerate(routed, start=1):
        if lid != leaf and policy.nodes[lid].action == STOP:
            no_stop_time = t
            break
    if no_stop_time is None:
        no_stop_value = 0.0
        limit = horizon + 1
    else:
        no_stop_value = float(disc[no_stop_time - 1] * rewards[omega, no_stop_time - 1])
        limit = no_stop_time
    in_leaf = tuple(t for t in range(1, limit) if routed[t - 1] == leaf)

    permissible = []
    best = -np.inf if direction == RIGHT else np.inf
    for t in in_leaf:
        x = states[omega, t - 1, var]
        if (direction == RIGHT and x > best) or (direction == LEFT and x < best):
            permissible.append(t)
            best = x
    return LeafContext(no_stop_time, no_stop_value, in_leaf, tuple(permissible))


def trajectory_step_function(ctx: LeafContext, data, omega, var, direction) -> StepFunction:
    """One trajectory's discounted reward as a step function of the split point."""
    _check_direction(direction)
    states, rewards, disc = data.states, data.rewards, data.discount_factors
    periods = ctx.permissible_stop_periods
    b = [float(states[omega, t - 1, var]) for t in periods]
    f = [float(disc[t - 1] * rewards[omega, t - 1]) for t in periods]
    if direction == RIGHT:
        # x_v strictly increases along the permissible periods
        return StepFunction(np.array(b), np.array(f + [ctx.no_stop_value]))
    # left-stop: x_v strictly decreases, so reverse into ascending order
    return StepFunction(np.array(b[::-1]), np.array([ctx.no_stop_value] + f[::-1]))


# ---------------------------------------------------------------------------
# vectorized candidate scanning
# ---------------------------------------------------------------------------

class TreeScanContext:
    """Shared precomputation for scanning many split candidates of one tree.

    Routing the full state tensor and locating each leaf's no-stop times is
    independent of the candidate variable/direction, so the construction loop
    builds one context per iteration and reuses it across all candidates.
    Call :meth:`prepare_leaf` for every leaf before scanning candidates in
    parallel; after that the context is read-only.
    """

    def __init__(self, policy: TreePolicy, data: TrajectorySet):
        self.policy = policy
        self.data = data
        omega, horizon, n = data.states.shape
        flat = data.states.reshape(omega * horizon, n)
        self.leaf_of = leaf_assignment(policy, flat).reshape(omega, horizon)
        self._rows = np.arange(omega)
        self._leaf_cache = {}

    def prepare_leaf(self, leaf: int):
        """(in_leaf mask, no-stop values) for one candidate leaf, cached."""
        cached = self._leaf_cache.get(leaf)
        if cached is not None:
            return cached
        _check_leaf(self.policy, leaf)
        data = self.data
        omega, horizon = data.rewards.shape
        other_stop_ids = sorted(
            i
            for i, nd in self.policy.nodes.items()
            if isinstance(nd, Leaf) and nd.action == STOP and i != leaf
        )
        if other_stop_ids:
            other_stop = np.isin(self.leaf_of, other_stop_ids)
        else:
            other_stop = np.zeros((omega, horizon), dtype=bool)
        has_ns = other_stop.any(axis=1)
        ns_idx = other_stop.argmax(axis=1)
        disc = data.discount_factors
        f_ns = np.where(has_ns, disc[ns_idx] * data.rewards[self._rows, ns_idx], 0.0)
        t_grid = np.arange(horizon)[np.newaxis, :]
        before_ns = np.where(has_ns[:, np.newaxis], t_grid < ns_idx[:, np.newaxis], True)
        in_leaf = (self.leaf_of == leaf) & before_ns
        result = (in_leaf, f_ns)
        self._leaf_cache[leaf] = result
        return result

    # -- the sweep ---------------------------------------------------------

    def _permissible(self, in_leaf: np.ndarray, xv: np.ndarray, direction: str) -> np.ndarray:
        if direction == RIGHT:
            masked = np.where(in_leaf, xv, -np.inf)
            running = np.maximum.accumulate(masked, axis=1)
            prev = np.empty_like(running)
            prev[:, 0] = -np.inf
            prev[:, 1:] = running[:, :-1]
            return in_leaf & (xv > prev)
        masked = np.where(in_leaf, xv, np.inf)
        running = np.minimum.accumulate(masked, axis=1)
        prev = np.empty_like(running)
        prev[:, 0] = np.inf
        prev[:, 1:] = running[:, :-1]
        return in_leaf & (xv < prev)

    def _objective_at(self, in_leaf, f_ns, xv, direction, theta) -> float:
        """Mean spliced-tree reward at a fixed split point.

        Uses the same per-trajectory discounted products and the same
        fixed-order mean as ``core_model.evaluate`` on the spliced tree.
        """
        if direction == RIGHT:
            hit = in_leaf & (xv > theta)
        else:
            hit = in_leaf & (xv <= theta)
        any_hit = hit.any(axis=1)
        first = hit.argmax(axis=1)
        data = self.data
        val = np.where(
            any_hit,
            data.discount_factors[first] * data.rewards[self._rows, first],
            f_ns,
        )
        return float(np.mean(val))

    def objective_at(self, leaf, var, direction, theta) -> float:
        _check_direction(direction)
        in_leaf, f_ns = self.prepare_leaf(leaf)
        xv = self.data.states[:, :, var]
        return self._objective_at(in_leaf, f_ns, xv, direction, theta)

    def sweep(self, leaf, var, direction):
        """Grouped breakpoints and plateau partial sums of Omega * F(theta).

        Returns ``(grp_b, plateau)`` where plateau[j] is the summed objective
        on the j-th piece ((-inf, grp_b[0]), [grp_b[0], grp_b[1]), ...).
        ``grp_b`` is empty when no trajectory has a permissible stop period.
        """
        _check_direction(direction)
        in_leaf, f_ns = self.prepare_leaf(leaf)
        data = self.data
        omega, horizon = data.rewards.shape
        xv = data.states[:, :, var]
        perm = self._permissible(in_leaf, xv, direction)

        pos = np.flatnonzero(perm.ravel())
        if pos.size == 0:
            return np.empty(0), np.array([float(np.sum(f_ns))])
        w_ids = pos // horizon
        t_idx = pos % horizon
        b = xv.ravel()[pos]
        f = data.discount_factors[t_idx] * data.rewards.ravel()[pos]

        boundary = np.empty(pos.size, dtype=bool)  # True at each trajectory's last entry
        boundary[:-1] = w_ids[1:] != w_ids[:-1]
        boundary[-1] = True
        nxt = np.empty_like(f)
        nxt[:-1] = f[1:]
        nxt[boundary] = f_ns[w_ids[boundary]]

        first = np.empty(pos.size, dtype=bool)
        first[0] = True
        first[1:] = w_ids[1:] != w_ids[:-1]
        if direction == RIGHT:
            deltas = nxt - f
            start = f_ns.copy()
            start[w_ids[first]] = f[first]   # left tail stops at the first record
            base = float(np.sum(start))
        else:
            deltas = f - nxt
            base = float(np.sum(f_ns))       # left tail of a left-stop never stops in-leaf

        order = np.argsort(b, kind="stable")
        bs = b[order]
        ds = deltas[order]
        new_group = np.empty(bs.size, dtype=bool)
        new_group[0] = True
        new_group[1:] = bs[1:] != bs[:-1]
        starts = np.flatnonzero(new_group)
        grp_b = bs[starts]
        grp_d = np.add.reduceat(ds, starts)
        plateau = np.empty(grp_b.size + 1, dtype=np.float64)
        plateau[0] = base
        plateau[1:] = base + np.cumsum(grp_d)
        return grp_b, plateau

    def optimize(self, leaf, var, direction) -> SplitResult:
        grp_b, plateau = self.sweep(leaf, var, direction)
        in_leaf, f_ns = self.prepare_leaf(leaf)
        if grp_b.size == 0:
            # leaf unreachable before the no-stop times: any split is a no-op
            return SplitResult(
                objective=float(np.mean(f_ns)),
                threshold=np.inf,
                argmax_interval=(-np.inf, np.inf),
            )
        peak = plateau.max()
        i0 = int(np.argmax(plateau == peak))
        i1 = i0
        while i1 + 1 < plateau.size and plateau[i1 + 1] == peak:
            i1 += 1                          # merge equal adjacent plateaus
        lo = -np.inf if i0 == 0 else float(grp_b[i0 - 1])
        hi = np.inf if i1 == plateau.size - 1 else float(grp_b[i1])
        if lo == -np.inf:
            theta = -np.inf                  # leftmost interval wins, even unbounded
        elif hi == np.inf:
            theta = np.inf
        else:
            theta = (lo + hi) / 2.0
            if theta >= hi:
                theta = lo                   # the interval [lo, hi) is left-closed
        xv = self.data.states[:, :, var]
        objective = self._objective_at(in_leaf, f_ns, xv, direction, theta)
        return SplitResult(objective=objective, threshold=theta, argmax_interval=(lo, hi))

    def average_step_function(self, leaf, var, direction) -> StepFunction:
        """Diagnostic view of F(theta) (plateau sums / Omega) for dumping/plotting."""
        grp_b, plateau = self.sweep(leaf, var, direction)
        return StepFunction(grp_b, plateau / self.data.n_trajectories)


def optimize_split_point(policy, data, leaf, var, direction) -> SplitResult:
    """Best split point and objective for one (leaf, var, direction) candidate."""
    return TreeScanContext(policy, data).optimize(leaf, var, direction)


def candidate_objective(policy, data, leaf, var, direction, theta) -> float:
    """Spliced-tree sample objective at a fixed split point (no optimization)."""
    return TreeScanContext(policy, data).objective_at(leaf, var, direction, theta)
