"""Integrated k-fold cross-validation of the growth tolerance gamma.

A single deep build per fold (at tolerance ``gamma_min``) is enough to read
off the hold-out value of *every* coarser tolerance: whenever a growth step's
relative improvement sets a new running minimum ``gbar``, the tree at that
moment is exactly what a build with any tolerance just above ``gbar`` would
have returned, so we evaluate it on the held-out fold and record the pair
``(gbar, hold_out_value)``.  Stitching the recorded pairs into per-fold step
curves ``nu_i(gamma)`` and averaging gives the cross-validated hold-out
objective ``nu(gamma)``; its maximizer over ``[gamma_min, inf)`` is the
selected tolerance, and the final policy is rebuilt on all trajectories at
that tolerance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .core_model import GO, TrajectorySet, evaluate, single_leaf_policy
from .errors import ConfigError, DataError
from .tree_builder import BuildConfig, BuildTrace, build, grow_tree


@dataclass(frozen=True)
class CvBreakpointSet:
    """Recorded (gbar, hold-out value) pairs for one fold, gbar strictly decreasing.

    ``final_value`` is the hold-out value of the fold's fully grown tree; it
    is the curve's value below the last recorded gbar (and the whole curve
    when nothing was recorded, e.g. a single-split build whose only relative
    improvement is infinite).
    """

    fold: int
    points: tuple  # ((gbar, z_h), ...) in recording order
    final_value: float

    def nu(self, gamma: float) -> float:
        """Hold-out value of the tree a build at tolerance ``gamma`` would return."""
        for gbar, z_h in self.points:
            if gbar < gamma:
                return z_h
        return self.final_value


@dataclass(frozen=True)
class CvCurve:
    """Per-fold breakpoint sets plus the averaged hold-out curve."""

    folds: tuple
    gamma_min: float

    @property
    def k(self) -> int:
        return len(self.folds)

    def breakpoints(self) -> list:
        """Sorted distinct gbar values across folds (curve pieces change only here)."""
        return sorted({gbar for f in self.folds for gbar, _ in f.points})

    def nu_fold(self, i: int, gamma: float) -> float:
        return self.folds[i].nu(gamma)

    def nu(self, gamma: float) -> float:
        # fsum: exactly rounded, hence invariant to fold order
        return math.fsum(f.nu(gamma) for f in self.folds) / len(self.folds)


def fold_indices(n_trajectories: int, k: int, seed: int = 0) -> list:
    """Disjoint fold index arrays: seeded shuffle, then contiguous blocks.

    The first ``n mod k`` folds take one extra trajectory each.
    """
    if k < 2 or k > n_trajectories:
        raise ConfigError(
            f"k must be in [2, {n_trajectories}] for {n_trajectories} trajectories, got {k}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_trajectories)
    base, rem = divmod(n_trajectories, k)
    folds, at = [], 0
    for i in range(k):
        size = base + (1 if i < rem else 0)
        folds.append(perm[at:at + size])
        at += size
    return folds


def compute_breakpoints(
    data: TrajectorySet,
    k: int,
    gamma_min: float,
    config: Optional[BuildConfig] = None,
    fold_seed: int = 0,
    threads: int = 1,
) -> list:
    """One deep build per fold; returns a CvBreakpointSet per fold."""
    if not (gamma_min > 0.0):
        raise ConfigError(f"gamma_min must be > 0, got {gamma_min}")
    if config is None:
        config = BuildConfig(gamma=gamma_min)
    folds = fold_indices(data.n_trajectories, k, fold_seed)
    out = []
    for i in range(k):
        train_idx = np.concatenate([folds[j] for j in range(k) if j != i])
        train = data.subset(train_idx)
        holdout = data.subset(folds[i])
        _, trace = build(train, replace(config, gamma=gamma_min), threads=threads)
        out.append(_replay_fold(i, trace, train, holdout))
    return out


def _replay_fold(fold: int, trace: BuildTrace, train: TrajectorySet, holdout: TrajectorySet) -> CvBreakpointSet:
    policy = single_leaf_policy(GO)
    gbar = math.inf
    points = []
    for rec in trace.records:
        policy = grow_tree(policy, rec.leaf, rec.var, rec.threshold, rec.direction)
        if rec.rel_improvement < gbar:
            gbar = rec.rel_improvement
            points.append((gbar, evaluate(policy, holdout).mean_reward))
    final_value = evaluate(policy, holdout).mean_reward
    return CvBreakpointSet(fold=fold, points=tuple(points), final_value=final_value)


def _curve_pieces(curve: CvCurve) -> list:
    """Constant pieces of nu over [gamma_min, inf) as (lo, hi, value) triples.

    Pieces are left-open/right-closed except the first, which starts at
    gamma_min inclusive; a gbar exactly at gamma_min makes [gamma_min,
    gamma_min] its own singleton piece.  ``hi`` of the last piece is +inf.
    """
    gm = curve.gamma_min
    bps = curve.breakpoints()
    above = [b for b in bps if b > gm]
    pieces = []
    if any(b == gm for b in bps):
        pieces.append((gm, gm, curve.nu(gm)))
    edges = [gm] + above
    for j, lo in enumerate(edges):
        if j + 1 < len(edges):
            hi = edges[j + 1]
            pieces.append((lo, hi, curve.nu(hi)))
        else:
            # probe strictly above the last breakpoint (lo > 0 always holds)
            pieces.append((lo, math.inf, curve.nu(lo * 2.0)))
    return pieces


def select_gamma(curve: CvCurve):
    """Maximizer of the averaged hold-out curve: ``(gamma_star, (lo, hi))``.

    The midpoint of the (leftmost, merged) argmax interval is returned for a
    bounded interval; an argmax unbounded above falls back to the largest
    recorded gbar (every larger tolerance yields the same per-fold trees),
    clamped to gamma_min.
    """
    if all(len(f.points) == 0 for f in curve.folds):
        raise DataError(
            "cross-validation found no signal: no fold recorded any improvement breakpoint"
        )
    pieces = _curve_pieces(curve)
    values = [v for _, _, v in pieces]
    peak = max(values)
    i0 = values.index(peak)
    i1 = i0
    while i1 + 1 < len(pieces) and values[i1 + 1] == peak:
        i1 += 1
    lo = pieces[i0][0]
    hi = pieces[i1][1]
    if math.isinf(hi):
        gamma_star = max(max(curve.breakpoints()), curve.gamma_min)
    else:
        gamma_star = (lo + hi) / 2.0
        if gamma_star <= lo and hi > lo:
            gamma_star = hi                  # pieces are (lo, hi]; hi is always inside
    return gamma_star, (lo, hi)


def fit_with_cv(
    data: TrajectorySet,
    k: int,
    gamma_min: float,
    config: Optional[BuildConfig] = None,
    fold_seed: int = 0,
    threads: int = 1,
):
    """Select gamma by k-fold CV, then rebuild on all trajectories.

    Returns ``(policy, gamma_star, CvCurve)``.  Degenerate data where no fold
    ever improves (all rewards zero) falls back to ``gamma_star = gamma_min``
    rather than erroring, yielding the single-leaf policy.
    """
    if config is None:
        config = BuildConfig(gamma=gamma_min)
    folds = compute_breakpoints(data, k, gamma_min, config, fold_seed, threads)
    curve = CvCurve(folds=tuple(folds), gamma_min=gamma_min)
    try:
        gamma_star, _ = select_gamma(curve)
    except DataError:
        gamma_star = gamma_min
    policy, _ = build(data, replace(config, gamma=gamma_star), threads=threads)
    return policy, gamma_star, curve


def write_cv_curve_csv(curve: CvCurve, path) -> None:
    """Step-curve table: hold-out value per fold and averaged, per gamma piece.

    Each row holds the curve values *at* the row's gamma; rows cover
    gamma_min, every breakpoint above it, and one point beyond the largest
    breakpoint so the final plateau is visible.
    """
    gammas = [curve.gamma_min] + [b for b in curve.breakpoints() if b > curve.gamma_min]
    if len(gammas) > 1:
        gammas.append(gammas[-1] * 2.0)
    else:
        gammas.append(curve.gamma_min + 1.0)
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["gamma_breakpoint"]
        header += [f"nu_fold_{i + 1}" for i in range(curve.k)]
        header += ["nu_mean"]
        writer.writerow(header)
        for g in gammas:
            row = [repr(float(g))]
            row += [repr(float(curve.nu_fold(i, g))) for i in range(curve.k)]
            row.append(repr(float(curve.nu(g))))
            writer.writerow(row)
