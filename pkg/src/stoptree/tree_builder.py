"""Greedy top-down construction of tree stopping policies.

Starting from a single go leaf (objective 0), each iteration optimizes every
candidate (leaf, variable, stop-direction) split exactly, applies the best
one if it strictly improves the sample objective, and keeps iterating while
the relative improvement is at least the tolerance ``gamma``.  A final
strictly-improving split below the tolerance is still applied before
termination, which is what lets the cross-validation module observe
improvements all the way down to its probing tolerance.

Ties between candidates are broken by a fixed total order (smaller leaf id,
then smaller variable index, then left before right), so construction is
deterministic regardless of how many threads scan candidates.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core_model import (
    GO,
    LEFT,
    RIGHT,
    STOP,
    Leaf,
    Split,
    TrajectorySet,
    TreePolicy,
    node_depths,
    single_leaf_policy,
)
from .errors import ConfigError, DataError, InternalError
from .split_optimizer import SplitResult, TreeScanContext


@dataclass(frozen=True)
class BuildConfig:
    """Knobs for the construction loop.

    gamma           relative-improvement tolerance (>= 0); growth continues
                    while best/current - 1 >= gamma
    allowed_vars    variable indices the tree may split on (None = all)
    max_depth       optional cap: leaves at this depth are never split
    max_iterations  safety valve; exceeding it raises InternalError
    """

    gamma: float
    allowed_vars: Optional[tuple] = None
    max_depth: Optional[int] = None
    max_iterations: int = 10_000

    def __post_init__(self):
        if self.gamma < 0.0 or math.isnan(self.gamma):
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.allowed_vars is not None:
            vs = tuple(sorted(set(int(v) for v in self.allowed_vars)))
            if not vs:
                raise ConfigError("allowed_vars must be non-empty when given")
            if vs[0] < 0:
                raise ConfigError(f"negative variable index in allowed_vars: {vs}")
            object.__setattr__(self, "allowed_vars", vs)
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    """One applied growth step."""

    iteration: int
    leaf: int
    var: int
    direction: str
    threshold: float
    objective: float
    rel_improvement: float  # inf on the first split (previous objective was 0)


@dataclass
class BuildTrace:
    records: list = field(default_factory=list)

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records], dtype=np.float64)

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "leaf", "var", "direction", "theta", "objective", "rel_improvement"]
            )
            for r in self.records:
                writer.writerow(
                    [
                        r.iteration,
                        r.leaf,
                        r.var,
                        r.direction,
                        repr(float(r.threshold)),
                        repr(float(r.objective)),
                        repr(float(r.rel_improvement)),
                    ]
                )


def grow_tree(policy: TreePolicy, leaf: int, var: int, threshold: float, direction: str) -> TreePolicy:
    """Split a leaf in place of the tree: two fresh leaves, stable node ids.

    The stop-direction decides the child actions: direction "left" makes the
    left child stop and the right go; "right" the reverse.  New node ids are
    the two integers following the current largest id (for the densely
    numbered trees this module builds, ids m+1 and m+2 for an m-node tree).
    """
    node = policy.nodes.get(leaf)
    if node is None or not isinstance(node, Leaf):
        raise DataError(f"cannot grow at node {leaf}: not a leaf")
    if direction not in (LEFT, RIGHT):
        raise ConfigError(f"direction must be 'left' or 'right', got {direction!r}")
    left_id = max(policy.nodes) + 1
    right_id = left_id + 1
    nodes = dict(policy.nodes)
    nodes[leaf] = Split(var=var, threshold=float(threshold), left=left_id, right=right_id)
    nodes[left_id] = Leaf(STOP if direction == LEFT else GO)
    nodes[right_id] = Leaf(STOP if direction == RIGHT else GO)
    return TreePolicy(nodes=nodes, root=policy.root)


def _scan_candidates(ctx: TreeScanContext, candidates, threads: int):
    if threads > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda c: ctx.optimize(*c), candidates))
    return [ctx.optimize(*c) for c in candidates]


def build(data: TrajectorySet, config: BuildConfig, threads: int = 1):
    """Greedy construction; returns ``(TreePolicy, BuildTrace)``.

    The trace's objective sequence is strictly increasing, each entry equals
    ``evaluate()`` of the then-current tree bit-for-bit, and the whole run is
    deterministic in ``threads``.
    """
    n_vars = data.states.shape[2]
    if config.allowed_vars is None:
        allowed = tuple(range(n_vars))
    else:
        allowed = config.allowed_vars
        if allowed[-1] >= n_vars:
            raise ConfigError(
                f"allowed_vars {allowed} out of range for {n_vars} state variables"
            )
    policy = single_leaf_policy(GO)
    objective = 0.0
    trace = BuildTrace()

    for iteration in range(1, config.max_iterations + 1):
        depths = node_depths(policy)
        leaves = [
            l
            for l in policy.leaf_ids()
            if config.max_depth is None or depths[l] < config.max_depth
        ]
        candidates = [(l, v, d) for l in leaves for v in allowed for d in (LEFT, RIGHT)]
        if not candidates:
            return policy, trace

        ctx = TreeScanContext(policy, data)
        for l in leaves:
            ctx.prepare_leaf(l)  # fill the shared cache before any parallel scan
        results = _scan_candidates(ctx, candidates, threads)

        best_idx = 0
        for i in range(1, len(results)):
            if results[i].objective > results[best_idx].objective:
                best_idx = i  # first maximum in candidate order wins ties
        best: SplitResult = results[best_idx]

        improved = best.objective > objective
        keep_growing = improved and best.objective >= (1.0 + config.gamma) * objective
        if improved:
            leaf, var, direction = candidates[best_idx]
            policy = grow_tree(policy, leaf, var, best.threshold, direction)
            rel = math.inf if objective == 0.0 else best.objective / objective - 1.0
            trace.records.append(
                TraceRecord(
                    iteration=iteration,
                    leaf=leaf,
                    var=var,
                    direction=direction,
                    threshold=best.threshold,
                    objective=best.objective,
                    rel_improvement=rel,
                )
            )
            objective = best.objective
        if not keep_growing:
            return policy, trace

    raise InternalError(
        f"construction did not terminate within max_iterations={config.max_iterations}"
    )
