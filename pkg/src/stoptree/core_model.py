"""Problem, data, and policy representations plus exact sample-average evaluation.

A stopping problem is described by a :class:`StoppingInstance` (horizon T,
per-period discount beta, state-variable names, reward provenance tag).  The
sampled data live in a :class:`TrajectorySet`: a dense ``(omega, t, var)``
state tensor and an ``(omega, t)`` reward tensor with ``rewards[w, t] =
g(t, x(w, t))``.  Policies are binary trees (:class:`TreePolicy`) whose
internal nodes ask ``x[var] <= threshold`` (ties and ``+inf`` route left,
``-inf`` routes right) and whose leaves prescribe stop or go.

``evaluate`` computes the sample-average objective

    (1/Omega) * sum_w beta**(tau_w - 1) * g(tau_w, x(w, tau_w))

where ``tau_w`` is the first period the policy stops trajectory ``w`` and a
trajectory that never stops contributes exactly 0.  All arithmetic is 64-bit;
the per-trajectory rewards are reduced with a fixed-order pairwise summation
(``np.mean``) so results are bit-stable across runs and thread counts.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, DataError

STOP = "stop"
GO = "go"
LEFT = "left"
RIGHT = "right"

ACTIONS = (STOP, GO)
DIRECTIONS = (LEFT, RIGHT)


# ---------------------------------------------------------------------------
# problem + data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StoppingInstance:
    """Static description of a stopping problem.

    horizon      number of decision periods T >= 1 (periods are 1-based)
    discount     per-period discount beta in (0, 1]
    var_names    ordered names of the state variables (length n, unique)
    reward_kind  tag identifying how rewards were produced ("external",
                 generator id, ...)
    """

    horizon: int
    discount: float
    var_names: tuple
    reward_kind: str = "external"

    def __post_init__(self):
        object.__setattr__(self, "var_names", tuple(self.var_names))
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if not (0.0 < self.discount <= 1.0):
            raise ConfigError(f"discount must be in (0, 1], got {self.discount}")
        if len(self.var_names) == 0:
            raise ConfigError("var_names must be non-empty")
        if len(set(self.var_names)) != len(self.var_names):
            raise ConfigError(f"var_names must be unique, got {self.var_names}")

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    def var_index(self, name: str) -> int:
        try:
            return self.var_names.index(name)
        except ValueError:
            raise ConfigError(
                f"unknown variable {name!r}; instance has {list(self.var_names)}"
            ) from None


@dataclass(frozen=True)
class TrajectorySet:
    """Sampled trajectories: states ``(Omega, T, n)`` and rewards ``(Omega, T)``.

    Immutable after construction and safe to share read-only across threads.
    ``discount_factors[k]`` caches ``beta**k``, i.e. the factor applied to a
    reward collected at period ``t = k + 1``; every evaluation path in the
    package multiplies rewards by entries of this one table so that identical
    stopping decisions always produce bit-identical discounted values.
    """

    instance: StoppingInstance
    states: np.ndarray
    rewards: np.ndarray
    discount_factors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        rewards = np.asarray(self.rewards, dtype=np.float64)
        if states.ndim != 3:
            raise DataError(f"states must be (omega, t, var), got shape {states.shape}")
        omega, horizon, n = states.shape
        if omega < 1:
            raise DataError("need at least one trajectory")
        if horizon != self.instance.horizon:
            raise DataError(
                f"states horizon {horizon} != instance horizon {self.instance.horizon}"
            )
        if n != self.instance.n_vars:
            raise DataError(
                f"states have {n} variables, instance names {self.instance.n_vars}"
            )
        if rewards.shape != (omega, horizon):
            raise DataError(
                f"rewards shape {rewards.shape} does not match states {(omega, horizon)}"
            )
        if not np.all(np.isfinite(rewards)):
            raise DataError("rewards must be finite")
        if np.any(rewards < 0.0):
            raise DataError("rewards must be >= 0")
        states.setflags(write=False)
        rewards.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "rewards", rewards)
        disc = self.instance.discount ** np.arange(horizon, dtype=np.float64)
        disc.setflags(write=False)
        object.__setattr__(self, "discount_factors", disc)

    @property
    def n_trajectories(self) -> int:
        return self.states.shape[0]

    @property
    def horizon(self) -> int:
        return self.states.shape[1]

    def subset(self, indices) -> "TrajectorySet":
        """New TrajectorySet restricted to the given trajectory indices."""
        idx = np.asarray(indices, dtype=np.intp)
        return TrajectorySet(self.instance, self.states[idx], self.rewards[idx])


# ---------------------------------------------------------------------------
# tree policies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    """Internal node: route left iff ``state[var] <= threshold``."""

    var: int
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class Leaf:
    action: str

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ConfigError(f"leaf action must be one of {ACTIONS}, got {self.action!r}")


Node = Union[Split, Leaf]


@dataclass(frozen=True)
class TreePolicy:
    """A rooted binary decision tree over the state variables.

    ``nodes`` maps node id -> Split or Leaf.  Threshold comparisons are
    non-strict (``<=``), so a threshold of ``+inf`` routes every state left
    and ``-inf`` routes every state right.  NaN thresholds are rejected.
    """

    nodes: dict
    root: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", dict(self.nodes))
        self._validate()

    def _validate(self):
        nodes, root = self.nodes, self.root
        if root not in nodes:
            raise DataError(f"root id {root} not among nodes")
        seen = set()
        stack = [root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise DataError(f"node {nid} reachable by two paths (not a tree)")
            seen.add(nid)
            node = nodes.get(nid)
            if node is None:
                raise DataError(f"child id {nid} missing from node table")
            if isinstance(node, Split):
                if node.left == node.right:
                    raise DataError(f"split {nid} has identical children")
                if node.var < 0:
                    raise DataError(f"split {nid} has negative var index")
                if np.isnan(node.threshold):
                    raise DataError(f"split {nid} has NaN threshold")
                stack.append(node.left)
                stack.append(node.right)
        unreachable = set(nodes) - seen
        if unreachable:
            raise DataError(f"nodes unreachable from root: {sorted(unreachable)}")

    def leaf_ids(self) -> list:
        return sorted(i for i, nd in self.nodes.items() if isinstance(nd, Leaf))

    def split_ids(self) -> list:
        return sorted(i for i, nd in self.nodes.items() if isinstance(nd, Split))

    def max_var_index(self) -> int:
        splits = [nd.var for nd in self.nodes.values() if isinstance(nd, Split)]
        return max(splits) if splits else -1


def single_leaf_policy(action: str = GO) -> TreePolicy:
    return TreePolicy(nodes={1: Leaf(action)}, root=1)


def node_depths(policy: TreePolicy) -> dict:
    """Depth of every node (root = 0)."""
    depths = {policy.root: 0}
    stack = [policy.root]
    while stack:
        nid = stack.pop()
        node = policy.nodes[nid]
        if isinstance(node, Split):
            depths[node.left] = depths[nid] + 1
            depths[node.right] = depths[nid] + 1
            stack.append(node.left)
            stack.append(node.right)
    return depths


def tree_depth(policy: TreePolicy) -> int:
    return max(node_depths(policy).values())


# ---------------------------------------------------------------------------
# routing and evaluation
# ---------------------------------------------------------------------------

def route(policy: TreePolicy, state) -> int:
    """Leaf id the given state vector is routed to (pure function)."""
    state = np.asarray(state, dtype=np.float64)
    if state.ndim != 1:
        raise DataError(f"state must be a vector, got shape {state.shape}")
    nid = policy.root
    node = policy.nodes[nid]
    while isinstance(node, Split):
        if node.var >= state.shape[0]:
            raise DataError(
                f"split variable index {node.var} out of range for state of length {state.shape[0]}"
            )
        nid = node.left if state[node.var] <= node.threshold else node.right
        node = policy.nodes[nid]
    return nid


def action(policy: TreePolicy, state) -> str:
    """Action ("stop" or "go") of the leaf the state routes to."""
    return policy.nodes[route(policy, state)].action


def leaf_assignment(policy: TreePolicy, states_2d: np.ndarray) -> np.ndarray:
    """Vectorized routing: leaf id for every row of an ``(m, n)`` state matrix."""
    states_2d = np.asarray(states_2d, dtype=np.float64)
    m = states_2d.shape[0]
    if policy.max_var_index() >= states_2d.shape[1]:
        raise DataError(
            f"policy splits on variable {policy.max_var_index()} but states have "
            f"{states_2d.shape[1]} variables"
        )
    out = np.empty(m, dtype=np.int64)
    stack = [(policy.root, np.arange(m, dtype=np.intp))]
    while stack:
        nid, idx = stack.pop()
        node = policy.nodes[nid]
        if isinstance(node, Leaf):
            out[idx] = nid
            continue
        go_left = states_2d[idx, node.var] <= node.threshold
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return out


def stop_mask(policy: TreePolicy, data: TrajectorySet) -> np.ndarray:
    """Boolean ``(Omega, T)`` matrix: does the tree stop in state x(w, t)?"""
    omega, horizon, n = data.states.shape
    leaves = leaf_assignment(policy, data.states.reshape(omega * horizon, n))
    stop_leaf = {i for i in policy.leaf_ids() if policy.nodes[i].action == STOP}
    if not stop_leaf:
        return np.zeros((omega, horizon), dtype=bool)
    mask = np.isin(leaves, sorted(stop_leaf))
    return mask.reshape(omega, horizon)


@dataclass(frozen=True)
class PolicyEvaluation:
    """Result of evaluating a policy on a trajectory set.

    ``stop_period[w]`` is only meaningful where ``stopped[w]``; use
    :meth:`stop_time` for the explicit-optional view of tau.
    """

    mean_reward: float
    stopped: np.ndarray
    stop_period: np.ndarray
    per_trajectory_reward: np.ndarray

    def stop_time(self, omega: int) -> Optional[int]:
        """1-based stop period for trajectory ``omega``, or None if it never stops."""
        return int(self.stop_period[omega]) if self.stopped[omega] else None

    @property
    def stop_rate(self) -> float:
        return float(np.mean(self.stopped))

    @property
    def stderr(self) -> float:
        r = self.per_trajectory_reward
        if r.shape[0] < 2:
            return 0.0
        return float(np.std(r, ddof=1) / np.sqrt(r.shape[0]))


def _mask_to_evaluation(mask: np.ndarray, data: TrajectorySet) -> PolicyEvaluation:
    stopped = mask.any(axis=1)
    tau_idx = mask.argmax(axis=1)          # first True along t (0-based)
    disc = data.discount_factors
    rows = np.arange(data.n_trajectories)
    reward = np.where(stopped, disc[tau_idx] * data.rewards[rows, tau_idx], 0.0)
    return PolicyEvaluation(
        mean_reward=float(np.mean(reward)),
        stopped=stopped,
        stop_period=tau_idx + 1,
        per_trajectory_reward=reward,
    )


def evaluate(policy, data: TrajectorySet) -> PolicyEvaluation:
    """Sample-average evaluation of any stopping policy on the data.

    Accepts a :class:`TreePolicy`, anything exposing a vectorized
    ``stop_mask(data) -> (Omega, T) bool`` method, or anything exposing a
    scalar ``action(t, state) -> "stop"|"go"`` method (t is 1-based).
    """
    if isinstance(policy, TreePolicy):
        mask = stop_mask(policy, data)
    elif hasattr(policy, "stop_mask"):
        mask = np.asarray(policy.stop_mask(data), dtype=bool)
        if mask.shape != data.rewards.shape:
            raise DataError(f"policy stop_mask shape {mask.shape} != {data.rewards.shape}")
    elif hasattr(policy, "action"):
        omega, horizon = data.rewards.shape
        mask = np.zeros((omega, horizon), dtype=bool)
        for w in range(omega):
            for t in range(1, horizon + 1):
                if policy.action(t, data.states[w, t - 1]) == STOP:
                    mask[w, t - 1] = True
                    break
        # rows are exact: only the first stop matters for evaluation
    else:
        raise ConfigError(f"object {policy!r} is not a stopping policy")
    return _mask_to_evaluation(mask, data)


def stopping_time(policy, data: TrajectorySet, omega: int) -> Optional[int]:
    """First 1-based period at which the policy stops trajectory ``omega`` (None if never)."""
    horizon = data.horizon
    if isinstance(policy, TreePolicy):
        for t in range(1, horizon + 1):
            if action(policy, data.states[omega, t - 1]) == STOP:
                return t
        return None
    for t in range(1, horizon + 1):
        if policy.action(t, data.states[omega, t - 1]) == STOP:
            return t
    return None


def clairvoyant_value(data: TrajectorySet) -> float:
    """Perfect-foresight sample value: mean over trajectories of max_t beta**(t-1) g.

    A hard upper bound on ``evaluate(pi, data).mean_reward`` for every policy
    (bitwise: built from the same discounted-reward products and the same
    fixed-order mean).
    """
    disc_rewards = data.discount_factors[np.newaxis, :] * data.rewards
    return float(np.mean(disc_rewards.max(axis=1)))


# ---------------------------------------------------------------------------
# trajectory CSV + sidecar JSON
# ---------------------------------------------------------------------------

def sidecar_path_for(csv_path) -> Path:
    """Conventional sidecar location: the CSV path with a .json suffix."""
    p = Path(csv_path)
    return p.with_suffix(".json") if p.suffix else Path(str(p) + ".json")


def write_trajectories(data: TrajectorySet, csv_path, sidecar_path=None) -> None:
    """Write the trajectory CSV and its instance sidecar JSON.

    CSV header is ``omega,t,<var names...>,reward``; rows are sorted by
    (omega, t) with 1-based indices; floats carry full round-trip precision.
    """
    csv_path = Path(csv_path)
    sidecar = Path(sidecar_path) if sidecar_path is not None else sidecar_path_for(csv_path)
    inst = data.instance
    omega, horizon, n = data.states.shape
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega", "t"] + list(inst.var_names) + ["reward"])
        states, rewards = data.states, data.rewards
        for w in range(omega):
            for t in range(horizon):
                row = [w + 1, t + 1]
                row.extend(repr(float(v)) for v in states[w, t])
                row.append(repr(float(rewards[w, t])))
                writer.writerow(row)
    with open(sidecar, "w") as fh:
        json.dump(
            {
                "horizon": inst.horizon,
                "discount": inst.discount,
                "var_names": list(inst.var_names),
                "reward_kind": inst.reward_kind,
            },
            fh,
            indent=2,
        )
        fh.write("\n")


def read_trajectories(csv_path, sidecar_path=None) -> TrajectorySet:
    """Read a trajectory CSV + sidecar JSON back into a TrajectorySet."""
    csv_path = Path(csv_path)
    sidecar = Path(sidecar_path) if sidecar_path is not None else sidecar_path_for(csv_path)
    if not csv_path.exists():
        raise DataError(f"trajectory file not found: {csv_path}")
    if not sidecar.exists():
        raise DataError(f"sidecar instance file not found: {sidecar}")
    with open(sidecar) as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"sidecar {sidecar} is not valid JSON: {exc}") from None
    try:
        inst = StoppingInstance(
            horizon=int(meta["horizon"]),
            discount=float(meta["discount"]),
            var_names=tuple(meta["var_names"]),
            reward_kind=str(meta.get("reward_kind", "external")),
        )
    except KeyError as exc:
        raise DataError(f"sidecar {sidecar} missing field {exc}") from None

    horizon, n = inst.horizon, inst.n_vars
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["omega", "t"] + list(inst.var_names) + ["reward"]
        if header != expected:
            raise DataError(
                f"trajectory header mismatch: expected {expected}, got {header}"
            )
        raw = list(reader)
    if len(raw) % horizon != 0 or not raw:
        raise DataError(
            f"row count {len(raw)} is not a positive multiple of horizon {horizon}"
        )
    omega = len(raw) // horizon
    states = np.empty((omega, horizon, n), dtype=np.float64)
    rewards = np.empty((omega, horizon), dtype=np.float64)
    for k, row in enumerate(raw):
        if len(row) != n + 3:
            raise DataError(f"row {k + 2} has {len(row)} fields, expected {n + 3}")
        w, t = k // horizon, k % horizon
        try:
            if int(row[0]) != w + 1 or int(row[1]) != t + 1:
                raise DataError(
                    f"row {k + 2}: expected omega={w + 1}, t={t + 1}, "
                    f"got omega={row[0]}, t={row[1]} (rows must be sorted)"
                )
            states[w, t] = [float(v) for v in row[2:2 + n]]
            rewards[w, t] = float(row[2 + n])
        except ValueError as exc:
            raise DataError(f"row {k + 2}: {exc}") from None
    return TrajectorySet(inst, states, rewards)
