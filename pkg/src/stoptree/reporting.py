"""Benchmark suites comparing tree policies against regression and
closed-form baselines, with delimited results plus rendered figures.

Each suite simulates its instances, fits the competing methods, and emits
one row per (instance, method) with columns instance, method, variables,
mean, stderr, seconds.  With a single replication the stderr column is the
Monte-Carlo standard error of the reported evaluation; with several seeds
it is the standard error across replications.  Training sets use seeds
1..seeds, test sets a fixed disjoint seed, so suites are reproducible
run-to-run.
"""

from __future__ import annotations

import csv
import math
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baselines import exact_uniform_dp, fit_longstaff_schwartz
from .core_model import TrajectorySet, evaluate
from .cross_validation import CvCurve, fit_with_cv
from .errors import ConfigError
from .generators import MaxCallParams, StateLayout, simulate_maxcall, simulate_uniform_1d
from .tree_builder import BuildConfig, build

SUITE_NAMES = ("uniform1d", "maxcall-desk", "maxcall-full", "cv-desk")
RESULT_COLUMNS = ("instance", "method", "variables", "mean", "stderr", "seconds")
UNIFORM_BETAS = (0.9, 0.95, 0.97, 0.98, 0.99, 0.995, 0.999, 0.9999, 1.0)
TEST_SEED = 999_983
DEFAULT_GAMMA_GRID = (0.05, 0.01, 0.005, 0.001)

_FULL_LAYOUT = StateLayout(time=True, prices=True, payoff=True, ko=True)


def _row(instance, method, variables, mean, stderr, seconds):
    return {
        "instance": instance,
        "method": method,
        "variables": variables,
        "mean": float(mean),
        "stderr": float(stderr),
        "seconds": float(seconds),
    }


def _aggregate(means, fallback_stderr):
    """Mean over replications; stderr across seeds, or the single-run
    Monte-Carlo stderr when there is only one."""
    arr = np.asarray(means, dtype=np.float64)
    if arr.size > 1:
        return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))
    return float(arr[0]), float(fallback_stderr)


def _restrict_to(data: TrajectorySet, names: Sequence[str]) -> tuple:
    return tuple(data.instance.var_index(n) for n in names)


def run_uniform_suite(
    omega_train=20_000,
    omega_test=100_000,
    seeds=1,
    gamma=0.005,
    threads=1,
    betas=None,
    horizon=54,
):
    betas = UNIFORM_BETAS if betas is None else tuple(betas)
    layout = StateLayout(time=True, payoff=True)
    rows = []
    series = {"exact-dp": [], "tree-test": [], "ls-test": []}
    for beta in betas:
        name = f"uniform1d-beta{beta:g}"
        t0 = time.perf_counter()
        _, value = exact_uniform_dp(horizon, beta)
        rows.append(_row(name, "exact-dp", "payoff", value, 0.0, time.perf_counter() - t0))
        series["exact-dp"].append(value)

        test = simulate_uniform_1d(horizon, beta, layout, omega_test, TEST_SEED)
        agg = {k: [[], 0.0, 0.0] for k in ("tree-train", "tree-test", "ls-train", "ls-test")}
        for seed in range(1, seeds + 1):
            train = simulate_uniform_1d(horizon, beta, layout, omega_train, seed)
            t0 = time.perf_counter()
            policy, _ = build(train, BuildConfig(gamma=gamma), threads=threads)
            tree_secs = time.perf_counter() - t0
            for key, data in (("tree-train", train), ("tree-test", test)):
                ev = evaluate(policy, data)
                agg[key][0].append(ev.mean_reward)
                agg[key][1], agg[key][2] = ev.stderr, agg[key][2] + tree_secs
            t0 = time.perf_counter()
            ls = fit_longstaff_schwartz(train, ("one",))
            ls_secs = time.perf_counter() - t0
            for key, data in (("ls-train", train), ("ls-test", test)):
                ev = evaluate(ls, data)
                agg[key][0].append(ev.mean_reward)
                agg[key][1], agg[key][2] = ev.stderr, agg[key][2] + ls_secs
        for key in ("tree-train", "tree-test", "ls-train", "ls-test"):
            mean, stderr = _aggregate(agg[key][0], agg[key][1])
            variables = "time,payoff" if key.startswith("tree") else "basis=one"
            rows.append(_row(name, key, variables, mean, stderr, agg[key][2]))
            if key in series:
                series[key].append(mean)
    extras = {"betas": list(betas), "series": series}
    return rows, extras


def _desk_params(initial_price):
    return MaxCallParams(n_assets=8, initial_price=initial_price)


def run_maxcall_desk_suite(
    omega_train=2_000,
    omega_test=20_000,
    seeds=1,
    gammas=DEFAULT_GAMMA_GRID,
    threads=1,
):
    params = _desk_params(90.0)
    test = simulate_maxcall(params, _FULL_LAYOUT, omega_test, TEST_SEED)
    trains = [
        simulate_maxcall(params, _FULL_LAYOUT, omega_train, seed)
        for seed in range(1, seeds + 1)
    ]
    rows = []
    extras = {"gammas": list(gammas), "train": [], "test": []}
    for gamma in gammas:
        name = f"maxcall-desk-g{gamma:g}"
        train_means, test_means, secs = [], [], 0.0
        train_se = test_se = 0.0
        for train in trains:
            t0 = time.perf_counter()
            policy, _ = build(train, BuildConfig(gamma=gamma), threads=threads)
            secs += time.perf_counter() - t0
            ev_tr, ev_te = evaluate(policy, train), evaluate(policy, test)
            train_means.append(ev_tr.mean_reward)
            test_means.append(ev_te.mean_reward)
            train_se, test_se = ev_tr.stderr, ev_te.stderr
        mean_tr, se_tr = _aggregate(train_means, train_se)
        mean_te, se_te = _aggregate(test_means, test_se)
        variables = "time,prices,payoff,ko"
        rows.append(_row(name, "tree-train", variables, mean_tr, se_tr, secs))
        rows.append(_row(name, "tree-test", variables, mean_te, se_te, secs))
        extras["train"].append(mean_tr)
        extras["test"].append(mean_te)
    return rows, extras


def run_maxcall_full_suite(
    omega_train=20_000,
    omega_test=100_000,
    seeds=1,
    gamma=0.005,
    threads=1,
):
    params = _desk_params(100.0)
    test = simulate_maxcall(params, _FULL_LAYOUT, omega_test, TEST_SEED)
    name = "maxcall-full"
    agg = {k: [[], 0.0, 0.0] for k in ("tree-train", "tree-test", "ls-train", "ls-test")}
    for seed in range(1, seeds + 1):
        train = simulate_maxcall(params, _FULL_LAYOUT, omega_train, seed)
        allowed = _restrict_to(train, ("payoff", "time"))
        t0 = time.perf_counter()
        policy, _ = build(train, BuildConfig(gamma=gamma, allowed_vars=allowed), threads=threads)
        tree_secs = time.perf_counter() - t0
        for key, data in (("tree-train", train), ("tree-test", test)):
            ev = evaluate(policy, data)
            agg[key][0].append(ev.mean_reward)
            agg[key][1], agg[key][2] = ev.stderr, agg[key][2] + tree_secs
        t0 = time.perf_counter()
        ls = fit_longstaff_schwartz(train, ("pricesko", "koind", "payoff"))
        ls_secs = time.perf_counter() - t0
        for key, data in (("ls-train", train), ("ls-test", test)):
            ev = evaluate(ls, data)
            agg[key][0].append(ev.mean_reward)
            agg[key][1], agg[key][2] = ev.stderr, agg[key][2] + ls_secs
    rows = []
    for key in ("tree-train", "tree-test", "ls-train", "ls-test"):
        mean, stderr = _aggregate(agg[key][0], agg[key][1])
        variables = "payoff,time" if key.startswith("tree") else "basis=pricesko,koind,payoff"
        rows.append(_row(name, key, variables, mean, stderr, agg[key][2]))
    extras = {
        "methods": [r["method"] for r in rows],
        "means": [r["mean"] for r in rows],
        "stderrs": [r["stderr"] for r in rows],
    }
    return rows, extras


def run_cv_desk_suite(
    omega_train=20_000,
    omega_test=100_000,
    k=5,
    gamma_min=1e-4,
    fixed_gamma=0.005,
    seeds=1,
    threads=1,
    fold_seed=0,
):
    params = _desk_params(90.0)
    test = simulate_maxcall(params, _FULL_LAYOUT, omega_test, TEST_SEED)
    name = "maxcall-cv-desk"
    agg = {
        key: [[], 0.0, 0.0]
        for key in ("tree-cv-train", "tree-cv-test", "tree-fixed-train", "tree-fixed-test")
    }
    gamma_stars, first_curve = [], None
    for seed in range(1, seeds + 1):
        train = simulate_maxcall(params, _FULL_LAYOUT, omega_train, seed)
        t0 = time.perf_counter()
        cv_policy, gamma_star, curve = fit_with_cv(
            train, k=k, gamma_min=gamma_min, fold_seed=fold_seed, threads=threads
        )
        cv_secs = time.perf_counter() - t0
        gamma_stars.append(gamma_star)
        if first_curve is None:
            first_curve = curve
        t0 = time.perf_counter()
        fixed_policy, _ = build(train, BuildConfig(gamma=fixed_gamma), threads=threads)
        fixed_secs = time.perf_counter() - t0
        for key, policy, data, secs in (
            ("tree-cv-train", cv_policy, train, cv_secs),
            ("tree-cv-test", cv_policy, test, cv_secs),
            ("tree-fixed-train", fixed_policy, train, fixed_secs),
            ("tree-fixed-test", fixed_policy, test, fixed_secs),
        ):
            ev = evaluate(policy, data)
            agg[key][0].append(ev.mean_reward)
            agg[key][1], agg[key][2] = ev.stderr, agg[key][2] + secs
    rows = []
    for key in ("tree-cv-train", "tree-cv-test", "tree-fixed-train", "tree-fixed-test"):
        mean, stderr = _aggregate(agg[key][0], agg[key][1])
        variables = (
            f"time,prices,payoff,ko@gamma*={np.mean(gamma_stars):.3g}"
            if "cv" in key
            else f"time,prices,payoff,ko@gamma={fixed_gamma:g}"
        )
        rows.append(_row(name, key, variables, mean, stderr, agg[key][2]))
    extras = {"curve": first_curve, "gamma_star": float(np.mean(gamma_stars))}
    return rows, extras


def write_results_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in ("mean", "stderr", "seconds"):
                out[key] = repr(float(out[key]))
            writer.writerow(out)


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_uniform_figure(extras, path) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    betas = extras["betas"]
    styles = {"exact-dp": "k-o", "tree-test": "C0-s", "ls-test": "C1--^"}
    for method, fmt in styles.items():
        ax.plot(betas, extras["series"][method], fmt, label=method, markersize=4)
    ax.set_xlabel("discount factor")
    ax.set_ylabel("mean reward")
    ax.set_title("uniform instance: out-of-sample value by method")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_gamma_figure(extras, path) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogx(extras["gammas"], extras["train"], "C0-o", label="train", markersize=4)
    ax.semilogx(extras["gammas"], extras["test"], "C1-s", label="test", markersize=4)
    ax.invert_xaxis()
    ax.set_xlabel("growth tolerance")
    ax.set_ylabel("mean reward")
    ax.set_title("max-call desk scale: value vs growth tolerance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_methods_figure(extras, path) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    x = np.arange(len(extras["methods"]))
    ax.bar(x, extras["means"], yerr=extras["stderrs"], color=["C0", "C0", "C1", "C1"])
    ax.set_xticks(x, extras["methods"], rotation=20)
    ax.set_ylabel("mean reward")
    ax.set_title("max-call full scale: tree vs regression")
    span = [m for m in extras["means"] if m > 0]
    if span:
        lo = min(span)
        ax.set_ylim(max(0.0, lo - 0.2 * lo), None)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_cv_curve(curve: CvCurve, gamma_star, path, title=None) -> None:
    """Step plot of each fold's holdout value and their mean over the
    tolerance axis."""
    plt = _plt()
    bps = [b for b in curve.breakpoints() if b > curve.gamma_min]
    hi = max(bps) * 2.0 if bps else max(curve.gamma_min * 10.0, 1.0)
    grid = np.unique(
        np.concatenate(
            [
                np.geomspace(curve.gamma_min, hi, 256),
                np.asarray(bps, dtype=np.float64),
                np.asarray([curve.gamma_min, hi]),
            ]
        )
    )
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i in range(curve.k):
        ys = [curve.nu_fold(i, g) for g in grid]
        ax.semilogx(grid, ys, color="0.75", drawstyle="steps-post", linewidth=0.9)
    ax.semilogx(
        grid,
        [curve.nu(g) for g in grid],
        color="C0",
        drawstyle="steps-post",
        linewidth=1.8,
        label="mean over folds",
    )
    if gamma_star is not None:
        ax.axvline(gamma_star, color="C3", linestyle="--", linewidth=1.0,
                   label=f"selected tolerance {gamma_star:.3g}")
    ax.set_xlabel("growth tolerance")
    ax.set_ylabel("holdout value")
    ax.set_title(title or "cross-validation curve")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_suite_figures(suite, extras, out_csv) -> list:
    out_csv = Path(out_csv)
    stem = out_csv.with_suffix("")
    written = []

    def target(tag):
        p = Path(f"{stem}_{tag}.png")
        written.append(p)
        return p

    if suite == "uniform1d":
        render_uniform_figure(extras, target("values"))
    elif suite == "maxcall-desk":
        render_gamma_figure(extras, target("gamma"))
    elif suite == "maxcall-full":
        render_methods_figure(extras, target("methods"))
    elif suite == "cv-desk":
        if extras.get("curve") is not None:
            render_cv_curve(
                extras["curve"],
                extras.get("gamma_star"),
                target("cvcurve"),
                title="cross-validation curve (max-call desk scale)",
            )
    return written


def run_benchmark(
    suite: str,
    out_csv,
    figures: bool = True,
    threads: int = 1,
    seeds: int = 1,
    omega_train: Optional[int] = None,
    omega_test: Optional[int] = None,
    gammas: Optional[Sequence[float]] = None,
    betas: Optional[Sequence[float]] = None,
    gamma: float = 0.005,
    k: int = 5,
    gamma_min: float = 1e-4,
    fold_seed: int = 0,
):
    """Run one named suite; write the results CSV and (optionally) figures.

    Returns ``(rows, figure_paths)``.
    """
    if suite not in SUITE_NAMES:
        raise ConfigError(f"unknown suite {suite!r}; valid suites: {list(SUITE_NAMES)}")
    if seeds < 1:
        raise ConfigError("seeds must be >= 1")
    if suite == "uniform1d":
        rows, extras = run_uniform_suite(
            omega_train=omega_train or 20_000,
            omega_test=omega_test or 100_000,
            seeds=seeds,
            gamma=gamma,
            threads=threads,
            betas=betas,
        )
    elif suite == "maxcall-desk":
        rows, extras = run_maxcall_desk_suite(
            omega_train=omega_train or 2_000,
            omega_test=omega_test or 20_000,
            seeds=seeds,
            gammas=tuple(gammas) if gammas else DEFAULT_GAMMA_GRID,
            threads=threads,
        )
    elif suite == "maxcall-full":
        rows, extras = run_maxcall_full_suite(
            omega_train=omega_train or 20_000,
            omega_test=omega_test or 100_000,
            seeds=seeds,
            gamma=gamma,
            threads=threads,
        )
    else:
        rows, extras = run_cv_desk_suite(
            omega_train=omega_train or 20_000,
            omega_test=omega_test or 100_000,
            k=k,
            gamma_min=gamma_min,
            fixed_gamma=gamma,
            seeds=seeds,
            threads=threads,
            fold_seed=fold_seed,
        )
    write_results_csv(rows, out_csv)
    figure_paths = render_suite_figures(suite, extras, out_csv) if figures else []
    return rows, figure_paths
