"""Shared fixtures: two hand-worked instances and random-instance factories.

The "toy" instance (2 trajectories, 5 periods, 2 variables, beta = 1) has a
fully hand-verified greedy construction: the first split is on variable 0
stopping right with best interval [0.15, 0.2) and objective 0.225; the
second splits the stop child on variable 1 at [0.5, 0.6) reaching 0.24,
which equals the clairvoyant bound, so growth then stops.

The "sweep demo" instance (3 trajectories, 18 periods, 1 variable, beta = 1)
exercises the permissible-period logic: splitting the root with stop-right
has its unique maximum 16/15 on the interval [2.5, 3.0), so the optimizer
must return theta* = 2.75.
"""

from __future__ import annotations

import numpy as np
import pytest

from stoptree import (
    GO,
    STOP,
    Leaf,
    Split,
    StoppingInstance,
    TrajectorySet,
    TreePolicy,
)


@pytest.fixture
def toy_data() -> TrajectorySet:
    instance = StoppingInstance(
        horizon=5, discount=1.0, var_names=("x1", "x2"), reward_kind="external"
    )
    x1 = np.array([[0.05, 0.15, 0.40, 0.55, 0.70],
                   [0.10, 0.20, 0.35, 0.50, 0.65]])
    x2 = np.array([[0.90, 0.70, 0.50, 0.80, 0.10],
                   [0.80, 0.60, 0.40, 0.75, 0.05]])
    g = np.array([[0.10, 0.05, 0.25, 0.28, 0.05],
                  [0.05, 0.20, 0.10, 0.15, 0.05]])
    states = np.stack([x1, x2], axis=2)
    return TrajectorySet(instance, states, g)


@pytest.fixture
def sweep_demo_data() -> TrajectorySet:
    instance = StoppingInstance(
        horizon=18, discount=1.0, var_names=("x",), reward_kind="external"
    )
    x = np.array([
        [0.5, 1.0, 1.75, 1.2, 1.5, 0.8, 1.3, 0.9, 1.6, 1.1, 2.1, 1.4, 1.9, 2.5, 1.0, 2.2, 1.5, 3.0],
        [1.0, 0.7, 2.5, 0.9, 1.1, 0.6, 1.8, 1.2, 0.8, 1.9, 1.3, 0.5, 2.0, 1.6, 0.9, 2.1, 1.0, 2.4],
        [2.5, 3.0, 1.5, 2.8, 0.9, 1.7, 2.2, 1.1, 2.9, 0.8, 1.4, 2.6, 1.9, 1.0, 2.3, 1.2, 2.7, 0.6],
    ])
    g = np.full((3, 18), 0.05)
    # rewards at the strict-running-max periods of each trajectory
    for w, pairs in enumerate([
        {1: 0.3, 2: 0.5, 3: 0.9, 11: 1.1, 14: 1.4, 18: 1.2},
        {1: 0.2, 3: 0.5},
        {1: 0.2, 2: 2.0},
    ]):
        for t, val in pairs.items():
            g[w, t - 1] = val
    return TrajectorySet(instance, x[:, :, np.newaxis], g)


@pytest.fixture
def routing_tree() -> TreePolicy:
    """Seven-node walk-through tree: root splits x3, children split x1 / x2."""
    return TreePolicy(
        nodes={
            1: Split(var=2, threshold=2.5, left=2, right=3),
            2: Split(var=0, threshold=0.9, left=4, right=5),
            3: Split(var=1, threshold=1.5, left=6, right=7),
            4: Leaf(GO),
            5: Leaf(STOP),
            6: Leaf(GO),
            7: Leaf(STOP),
        },
        root=1,
    )


def make_random_instance(rng: np.random.Generator,
                         max_omega: int = 10,
                         max_horizon: int = 8,
                         max_vars: int = 3) -> TrajectorySet:
    """Small random instance with deliberate ties, zeros, and assorted discounts."""
    omega = int(rng.integers(1, max_omega + 1))
    horizon = int(rng.integers(1, max_horizon + 1))
    n_vars = int(rng.integers(1, max_vars + 1))
    if rng.random() < 0.5:
        # coarse grid values force ties across trajectories and periods
        grid = rng.uniform(-2.0, 2.0, size=5)
        states = rng.choice(grid, size=(omega, horizon, n_vars))
    else:
        states = rng.uniform(-2.0, 2.0, size=(omega, horizon, n_vars))
    rewards = rng.uniform(0.0, 1.0, size=(omega, horizon))
    rewards[rng.random(size=rewards.shape) < 0.3] = 0.0
    discount = float(rng.choice([1.0, 0.9, float(rng.uniform(0.5, 1.0))]))
    instance = StoppingInstance(
        horizon=horizon,
        discount=discount,
        var_names=tuple(f"v{i + 1}" for i in range(n_vars)),
        reward_kind="external",
    )
    return TrajectorySet(instance, states, rewards)


def make_random_tree(rng: np.random.Generator,
                     data: TrajectorySet,
                     max_depth: int = 3) -> TreePolicy:
    """Random valid tree over the instance's variables, depth <= max_depth.

    Thresholds are drawn from observed values, midpoints, and occasionally
    +/-inf, so degenerate one-sided splits occur.
    """
    n_vars = data.states.shape[2]
    counter = [1]
    nodes = {}

    def draw_threshold(var: int) -> float:
        values = np.unique(data.states[:, :, var])
        u = rng.random()
        if u < 0.1:
            return float(rng.choice([-np.inf, np.inf]))
        if u < 0.55 or values.size == 1:
            return float(rng.choice(values))
        i = int(rng.integers(0, values.size - 1))
        return float((values[i] + values[i + 1]) / 2.0)

    def grow(depth: int) -> int:
        nid = counter[0]
        counter[0] += 1
        if depth >= max_depth or rng.random() < 0.35:
            nodes[nid] = Leaf(STOP if rng.random() < 0.5 else GO)
            return nid
        var = int(rng.integers(0, n_vars))
        left = grow(depth + 1)
        right = grow(depth + 1)
        nodes[nid] = Split(var=var, threshold=draw_threshold(var), left=left, right=right)
        return nid

    root = grow(0)
    return TreePolicy(nodes=nodes, root=root)
