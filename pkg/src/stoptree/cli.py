"""Command-line interface and on-disk policy formats.

Subcommands: simulate, fit, fit-ls, cv, evaluate, export-dot, benchmark.
Every command prints a one-object JSON summary on stdout; exit codes are
0 (success), 2 (bad configuration or arguments), 3 (malformed or
inconsistent data), 4 (internal invariant violation).

Policies travel as JSON documents with ``format_version`` 1 and a ``kind``
of "tree", "threshold", or "ls"; infinite thresholds are encoded as the
strings "+inf"/"-inf" so files stay strictly standard JSON.
"""

from __future__ import annotations

import functools
import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from .baselines import (
    LsPolicy,
    ThresholdPolicy,
    fit_longstaff_schwartz,
    parse_basis,
    write_ls_coefficients_csv,
)
from .core_model import (
    Leaf,
    Split,
    StoppingInstance,
    TreePolicy,
    evaluate,
    read_trajectories,
    sidecar_path_for,
    tree_depth,
    write_trajectories,
)
from .cross_validation import fit_with_cv, write_cv_curve_csv
from .errors import ConfigError, DataError, InternalError, StopTreeError
from .generators import (
    MaxCallParams,
    StateLayout,
    ingest_price_windows,
    simulate_maxcall,
    simulate_uniform_1d,
)
from .reporting import SUITE_NAMES, render_cv_curve, run_benchmark
from .tree_builder import BuildConfig, build

FORMAT_VERSION = 1

# Fitted policies are identical at any thread count, so parallelism is safe
# to default to the whole machine.
DEFAULT_THREADS = max(1, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# policy files
# ---------------------------------------------------------------------------

def _encode_float(x: float):
    x = float(x)
    if math.isfinite(x):
        return x
    if math.isnan(x):
        raise DataError("cannot encode NaN in a policy file")
    return "+inf" if x > 0 else "-inf"


def _decode_float(value) -> float:
    if isinstance(value, str):
        if value == "+inf":
            return math.inf
        if value == "-inf":
            return -math.inf
        raise DataError(f"bad numeric string {value!r} (only '+inf'/'-inf' allowed)")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"expected a number, got {value!r}")
    return float(value)


def _instance_to_json(instance: StoppingInstance) -> dict:
    return {
        "horizon": instance.horizon,
        "discount": instance.discount,
        "var_names": list(instance.var_names),
        "reward_kind": instance.reward_kind,
    }


def _instance_from_json(obj) -> StoppingInstance:
    if not isinstance(obj, dict):
        raise DataError("instance metadata must be an object")
    try:
        return StoppingInstance(
            horizon=int(obj["horizon"]),
            discount=float(obj["discount"]),
            var_names=tuple(str(n) for n in obj["var_names"]),
            reward_kind=str(obj.get("reward_kind", "external")),
        )
    except KeyError as exc:
        raise DataError(f"instance metadata missing key {exc}") from None


def _resolve_var(entry: dict, instance) -> int:
    var = entry.get("var")
    name = entry.get("var_name")
    if name is not None and instance is not None:
        if name not in instance.var_names:
            raise DataError(f"policy references unknown variable {name!r}")
        idx = instance.var_names.index(name)
        if var is not None and int(var) != idx:
            raise DataError(
                f"policy node says var={var} but {name!r} is variable {idx}"
            )
        return idx
    if var is None:
        raise DataError("split node needs 'var' or a resolvable 'var_name'")
    return int(var)


def policy_to_json(policy, instance: StoppingInstance = None) -> dict:
    """Serialize a tree, threshold, or regression policy to a JSON document."""
    if isinstance(policy, TreePolicy):
        nodes = []
        for nid in sorted(policy.nodes):
            node = policy.nodes[nid]
            if isinstance(node, Leaf):
                nodes.append({"id": nid, "type": "leaf", "action": node.action})
            else:
                entry = {
                    "id": nid,
                    "type": "split",
                    "var": node.var,
                    "threshold": _encode_float(node.threshold),
                    "left": node.left,
                    "right": node.right,
                }
                if instance is not None:
                    if node.var >= instance.n_vars:
                        raise DataError(
                            f"split variable {node.var} outside the instance's "
                            f"{instance.n_vars} variables"
                        )
                    entry["var_name"] = instance.var_names[node.var]
                nodes.append(entry)
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "tree",
            "root": policy.root,
            "nodes": nodes,
        }
    elif isinstance(policy, ThresholdPolicy):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "threshold",
            "thresholds": [_encode_float(c) for c in policy.thresholds],
        }
        if instance is not None and policy.payoff_var is not None:
            doc["payoff_var_name"] = instance.var_names[policy.payoff_var]
    elif isinstance(policy, LsPolicy):
        instance = policy.instance
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "ls",
            "basis": list(policy.basis),
            "feature_names": list(policy.feature_names),
            "coefficients": [[float(c) for c in row] for row in policy.coefficients],
        }
    else:
        raise ConfigError(f"cannot serialize policy of type {type(policy).__name__}")
    if instance is not None:
        doc["instance"] = _instance_to_json(instance)
    return doc


def policy_from_json(doc):
    """Inverse of :func:`policy_to_json`; returns ``(policy, instance_or_None)``."""
    if not isinstance(doc, dict):
        raise DataError("policy file must hold a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"unsupported policy format_version {doc.get('format_version')!r}"
        )
    instance = _instance_from_json(doc["instance"]) if "instance" in doc else None
    kind = doc.get("kind", "tree")
    if kind == "tree":
        nodes = {}
        for entry in doc.get("nodes", []):
            nid = int(entry["id"])
            if nid in nodes:
                raise DataError(f"duplicate node id {nid} in policy file")
            ntype = entry.get("type")
            if ntype == "leaf":
                nodes[nid] = Leaf(str(entry["action"]))
            elif ntype == "split":
                nodes[nid] = Split(
                    var=_resolve_var(entry, instance),
                    threshold=_decode_float(entry["threshold"]),
                    left=int(entry["left"]),
                    right=int(entry["right"]),
                )
            else:
                raise DataError(f"node {nid} has unknown type {ntype!r}")
        if not nodes:
            raise DataError("tree policy file has no nodes")
        policy = TreePolicy(nodes=nodes, root=int(doc.get("root", min(nodes))))
        if instance is not None and policy.max_var_index() >= instance.n_vars:
            raise DataError("tree splits on variables beyond the instance metadata")
        return policy, instance
    if kind == "threshold":
        thresholds = np.asarray([_decode_float(v) for v in doc["thresholds"]])
        policy = ThresholdPolicy(thresholds)
        name = doc.get("payoff_var_name")
        if name is not None and instance is not None:
            policy = policy.with_payoff_var(instance.var_index(name))
        return policy, instance
    if kind == "ls":
        if instance is None:
            raise DataError("regression policy files need instance metadata")
        policy = LsPolicy(
            instance=instance,
            basis=parse_basis(doc.get("basis", [])),
            coefficients=np.asarray(doc["coefficients"], dtype=np.float64),
        )
        return policy, instance
    raise DataError(f"unknown policy kind {kind!r}")


def write_policy_file(policy, path, instance: StoppingInstance = None) -> None:
    doc = policy_to_json(policy, instance)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_policy_file(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"policy file not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"policy file is not valid JSON: {exc}") from None
    return policy_from_json(doc)


# ---------------------------------------------------------------------------
# DOT export
# ---------------------------------------------------------------------------

def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def policy_to_dot(policy: TreePolicy, instance: StoppingInstance = None) -> str:
    """Graphviz source: split nodes labelled ``<var> ≤ <threshold>`` (4
    significant digits), leaves labelled by their action."""
    lines = [
        "digraph policy {",
        '  node [fontname="Helvetica"];',
    ]
    for nid in sorted(policy.nodes):
        node = policy.nodes[nid]
        if isinstance(node, Leaf):
            lines.append(f'  n{nid} [shape=box, label="{node.action}"];')
        else:
            if instance is not None and node.var < instance.n_vars:
                name = instance.var_names[node.var]
            else:
                name = f"x{node.var + 1}"
            theta = node.threshold
            txt = ("+inf" if theta > 0 else "-inf") if math.isinf(theta) else format(theta, ".4g")
            lines.append(
                f'  n{nid} [shape=box, style=rounded, '
                f'label="{_dot_escape(name)} ≤ {txt}"];'
            )
    for nid in sorted(policy.nodes):
        node = policy.nodes[nid]
        if isinstance(node, Split):
            lines.append(f'  n{nid} -> n{node.left} [label="yes"];')
            lines.append(f'  n{nid} -> n{node.right} [label="no"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# command plumbing
# ---------------------------------------------------------------------------

def _fail(message, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(exc, 2)
        except DataError as exc:
            _fail(exc, 3)
        except InternalError as exc:
            _fail(exc, 4)
        except StopTreeError as exc:
            _fail(exc, 4)
        except (click.ClickException, click.Abort):
            raise
        except SystemExit:
            raise
        except Exception as exc:
            _fail(f"internal error: {exc!r}", 4)

    return wrapper


def _emit(summary: dict) -> None:
    click.echo(json.dumps(summary, indent=2))


def _load_data(data_path, sidecar):
    return read_trajectories(data_path, sidecar_path=sidecar)


def _parse_floats(spec: str) -> tuple:
    try:
        return tuple(float(tok) for tok in spec.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"bad float list {spec!r}") from None


def _resolve_vars(spec, instance) -> tuple:
    """Comma-separated variable names (or indices) -> sorted index tuple."""
    if spec is None:
        return None
    allowed = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok in instance.var_names:
            allowed.append(instance.var_index(tok))
        else:
            try:
                allowed.append(int(tok))
            except ValueError:
                raise ConfigError(
                    f"unknown variable {tok!r}; this data has {list(instance.var_names)}"
                ) from None
    if not allowed:
        raise ConfigError("variable list is empty")
    return tuple(sorted(set(allowed)))


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="stoptree", prog_name="stoptree")
def main():
    """Learn and evaluate interpretable tree policies for optimal stopping."""


# -- simulate ---------------------------------------------------------------

@main.command()
@click.option("--instance", "kind", type=click.Choice(["uniform1d", "maxcall", "prices"]),
              required=True, help="Which generator to run.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Trajectory CSV to write (uniform1d/maxcall).")
@click.option("--omega", type=int, default=1000, show_default=True,
              help="Number of trajectories.")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--layout", default=None,
              help="Comma tags from {time,prices,payoff,ko}; defaults per instance.")
@click.option("--horizon", type=int, default=54, show_default=True,
              help="uniform1d: number of periods.")
@click.option("--beta", type=float, default=1.0, show_default=True,
              help="uniform1d: discount factor per period.")
@click.option("--n-assets", type=int, default=8, show_default=True)
@click.option("--initial-price", type=float, default=100.0, show_default=True)
@click.option("--strike", type=float, default=None,
              help="maxcall default 100, prices default 105.")
@click.option("--barrier", type=float, default=170.0, show_default=True)
@click.option("--rate", type=float, default=0.05, show_default=True,
              help="maxcall: annual risk-free rate.")
@click.option("--sigma", type=float, default=0.2, show_default=True)
@click.option("--rho", type=float, default=0.0, show_default=True,
              help="Pairwise asset correlation.")
@click.option("--years", type=float, default=3.0, show_default=True)
@click.option("--periods", type=int, default=54, show_default=True,
              help="maxcall: number of exercise dates.")
@click.option("--prices-csv", type=click.Path(dir_okay=False), default=None,
              help="prices: daily close table (date column + one column per ticker).")
@click.option("--assets", type=int, default=None,
              help="prices: sample this many tickers (default: all).")
@click.option("--asset-seed", type=int, default=0, show_default=True)
@click.option("--window-len", type=int, default=30, show_default=True)
@click.option("--rescale-to", type=float, default=100.0, show_default=True)
@click.option("--train-fraction", type=float, default=2.0 / 3.0,
              help="prices: leading fraction of windows used for training. [default: 2/3]")
@click.option("--annual-rate", type=float, default=0.02, show_default=True)
@click.option("--days-per-year", type=int, default=252, show_default=True)
@click.option("--out-train", type=click.Path(dir_okay=False), default=None,
              help="prices: training trajectory CSV.")
@click.option("--out-test", type=click.Path(dir_okay=False), default=None,
              help="prices: test trajectory CSV.")
@_cli_errors
def simulate(kind, out, omega, seed, layout, horizon, beta, n_assets, initial_price,
             strike, barrier, rate, sigma, rho, years, periods, prices_csv, assets,
             asset_seed, window_len, rescale_to, train_fraction, annual_rate,
             days_per_year, out_train, out_test):
    """Generate trajectory CSVs (plus instance sidecar JSON) from a named instance."""
    if kind == "prices":
        if prices_csv is None:
            raise ConfigError("--instance prices needs --prices-csv")
        if out_train is None or out_test is None:
            raise ConfigError("--instance prices writes a pair: give --out-train and --out-test")
        train, test = ingest_price_windows(
            prices_csv,
            assets_per_instance=assets,
            window_len=window_len,
            strike=105.0 if strike is None else strike,
            rescale_to=rescale_to,
            train_fraction=train_fraction,
            annual_rate=annual_rate,
            days_per_year=days_per_year,
            asset_seed=asset_seed,
        )
        write_trajectories(train, out_train)
        write_trajectories(test, out_test)
        _emit({
            "instance": kind,
            "train_trajectories": train.n_trajectories,
            "test_trajectories": test.n_trajectories,
            "horizon": train.horizon,
            "variables": list(train.instance.var_names),
            "train_path": str(out_train),
            "test_path": str(out_test),
        })
        return
    if out is None:
        raise ConfigError("--out is required for this instance")
    if kind == "uniform1d":
        lay = StateLayout.parse(layout) if layout else StateLayout(time=True, payoff=True)
        data = simulate_uniform_1d(horizon, beta, lay, omega, seed)
    else:
        lay = (StateLayout.parse(layout) if layout
               else StateLayout(time=True, prices=True, payoff=True, ko=True))
        params = MaxCallParams(
            n_assets=n_assets,
            initial_price=initial_price,
            strike=100.0 if strike is None else strike,
            barrier=barrier,
            rate=rate,
            volatility=sigma,
            correlation=rho,
            years=years,
            periods=periods,
        )
        data = simulate_maxcall(params, lay, omega, seed)
    write_trajectories(data, out)
    _emit({
        "instance": kind,
        "trajectories": data.n_trajectories,
        "horizon": data.horizon,
        "discount": data.instance.discount,
        "variables": list(data.instance.var_names),
        "path": str(out),
        "sidecar": str(sidecar_path_for(out)),
    })


# -- fit --------------------------------------------------------------------

@main.command()
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True,
              help="Trajectory CSV (instance sidecar JSON found next to it).")
@click.option("--sidecar", type=click.Path(dir_okay=False), default=None,
              help="Explicit sidecar path.")
@click.option("--gamma", type=float, required=True,
              help="Relative-improvement tolerance for growing the tree.")
@click.option("--vars", "vars_spec", default=None,
              help="Comma-separated variable names the tree may split on (default: all).")
@click.option("--max-depth", type=int, default=None)
@click.option("--max-iterations", type=int, default=10_000, show_default=True)
@click.option("--threads", type=int, default=DEFAULT_THREADS,
              show_default="all cores")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Policy JSON to write.")
@click.option("--trace", type=click.Path(dir_okay=False), default=None,
              help="Per-iteration construction trace CSV.")
@_cli_errors
def fit(data_path, sidecar, gamma, vars_spec, max_depth, max_iterations, threads, out, trace):
    """Grow a stopping tree on a trajectory set."""
    data = _load_data(data_path, sidecar)
    config = BuildConfig(
        gamma=gamma,
        allowed_vars=_resolve_vars(vars_spec, data.instance),
        max_depth=max_depth,
        max_iterations=max_iterations,
    )
    policy, build_trace = build(data, config, threads=threads)
    if out:
        write_policy_file(policy, out, instance=data.instance)
    if trace:
        build_trace.write_csv(trace)
    ev = evaluate(policy, data)
    _emit({
        "objective": ev.mean_reward,
        "stderr": ev.stderr,
        "splits": len(build_trace.records),
        "n_nodes": len(policy.nodes),
        "depth": tree_depth(policy),
        "gamma": gamma,
        "policy_path": str(out) if out else None,
    })


# -- fit-ls -----------------------------------------------------------------

@main.command("fit-ls")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True)
@click.option("--sidecar", type=click.Path(dir_okay=False), default=None)
@click.option("--basis", required=True,
              help="Comma tags, e.g. 'one' or 'pricesko,koind,payoff'.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Coefficient CSV (one row per exercise date).")
@click.option("--out-policy", type=click.Path(dir_okay=False), default=None,
              help="Reusable policy JSON.")
@_cli_errors
def fit_ls(data_path, sidecar, basis, out, out_policy):
    """Fit the regression baseline on a trajectory set."""
    data = _load_data(data_path, sidecar)
    policy = fit_longstaff_schwartz(data, basis)
    if out:
        write_ls_coefficients_csv(policy, out)
    if out_policy:
        write_policy_file(policy, out_policy)
    ev = evaluate(policy, data)
    _emit({
        "objective": ev.mean_reward,
        "stderr": ev.stderr,
        "basis": list(policy.basis),
        "n_features": len(policy.feature_names),
        "coefficients_path": str(out) if out else None,
        "policy_path": str(out_policy) if out_policy else None,
    })


# -- cv ---------------------------------------------------------------------

@main.command()
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True)
@click.option("--sidecar", type=click.Path(dir_okay=False), default=None)
@click.option("--k", type=int, default=5, show_default=True, help="Number of folds.")
@click.option("--gamma-min", type=float, default=1e-4, show_default=True,
              help="Smallest tolerance considered.")
@click.option("--fold-seed", type=int, default=0, show_default=True)
@click.option("--vars", "vars_spec", default=None)
@click.option("--max-depth", type=int, default=None)
@click.option("--threads", type=int, default=DEFAULT_THREADS,
              show_default="all cores")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Policy JSON for the final refit tree.")
@click.option("--curve", type=click.Path(dir_okay=False), default=None,
              help="Cross-validation curve CSV.")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render the curve plot next to the curve CSV.")
@_cli_errors
def cv(data_path, sidecar, k, gamma_min, fold_seed, vars_spec, max_depth, threads,
       out, curve, figures):
    """Cross-validate the growth tolerance, then refit on all data."""
    data = _load_data(data_path, sidecar)
    config = BuildConfig(
        gamma=gamma_min,
        allowed_vars=_resolve_vars(vars_spec, data.instance),
        max_depth=max_depth,
    )
    policy, gamma_star, cv_curve = fit_with_cv(
        data, k=k, gamma_min=gamma_min, config=config,
        fold_seed=fold_seed, threads=threads,
    )
    if out:
        write_policy_file(policy, out, instance=data.instance)
    figure_path = None
    if curve:
        write_cv_curve_csv(cv_curve, curve)
        if figures:
            figure_path = str(Path(curve).with_suffix(".png"))
            render_cv_curve(cv_curve, gamma_star, figure_path)
    ev = evaluate(policy, data)
    _emit({
        "gamma_star": gamma_star,
        "objective": ev.mean_reward,
        "stderr": ev.stderr,
        "k": k,
        "n_nodes": len(policy.nodes),
        "depth": tree_depth(policy),
        "policy_path": str(out) if out else None,
        "curve_path": str(curve) if curve else None,
        "figure_path": figure_path,
    })


# -- evaluate -----------------------------------------------------------------

@main.command("evaluate")
@click.option("--policy", "policy_path", type=click.Path(dir_okay=False), required=True)
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True)
@click.option("--sidecar", type=click.Path(dir_okay=False), default=None)
@_cli_errors
def evaluate_cmd(policy_path, data_path, sidecar):
    """Evaluate a stored policy (any kind) on a trajectory set."""
    data = _load_data(data_path, sidecar)
    policy, meta = read_policy_file(policy_path)
    if meta is not None and meta.var_names != data.instance.var_names:
        raise DataError(
            f"policy was fitted on variables {list(meta.var_names)} but the data "
            f"has {list(data.instance.var_names)}"
        )
    ev = evaluate(policy, data)
    stopped_times = [ev.stop_time(w) for w in range(data.n_trajectories)]
    stopped_times = [t for t in stopped_times if t is not None]
    _emit({
        "mean_reward": ev.mean_reward,
        "stderr": ev.stderr,
        "n_trajectories": data.n_trajectories,
        "stop_rate": ev.stop_rate,
        "mean_stop_time": (sum(stopped_times) / len(stopped_times)) if stopped_times else None,
    })


# -- export-dot ---------------------------------------------------------------

@main.command("export-dot")
@click.option("--policy", "policy_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="DOT file (default: stdout).")
@_cli_errors
def export_dot(policy_path, out):
    """Render a tree policy as Graphviz DOT."""
    policy, meta = read_policy_file(policy_path)
    if not isinstance(policy, TreePolicy):
        raise ConfigError("only tree policies can be exported to DOT")
    dot = policy_to_dot(policy, meta)
    if out:
        Path(out).write_text(dot)
        _emit({"dot_path": str(out), "n_nodes": len(policy.nodes)})
    else:
        click.echo(dot, nl=False)


# -- benchmark ----------------------------------------------------------------

@main.command()
@click.argument("suite", type=click.Choice(list(SUITE_NAMES)))
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Results CSV; figures land next to it.")
@click.option("--omega-train", type=int, default=None,
              help="Override the suite's training-set size.")
@click.option("--omega-test", type=int, default=None,
              help="Override the suite's test-set size.")
@click.option("--seeds", type=int, default=1, show_default=True,
              help="Independent training replications.")
@click.option("--threads", type=int, default=DEFAULT_THREADS,
              show_default="all cores")
@click.option("--gamma", type=float, default=0.005, show_default=True,
              help="Fixed tolerance used by the tree method.")
@click.option("--gammas", default=None,
              help="maxcall-desk: comma list of tolerances.")
@click.option("--betas", default=None,
              help="uniform1d: comma list of discount factors.")
@click.option("--k", type=int, default=5, show_default=True, help="cv-desk: folds.")
@click.option("--gamma-min", type=float, default=1e-4, show_default=True)
@click.option("--fold-seed", type=int, default=0, show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
@_cli_errors
def benchmark(suite, out, omega_train, omega_test, seeds, threads, gamma, gammas,
              betas, k, gamma_min, fold_seed, figures):
    """Run a named benchmark suite; write results CSV plus figures."""
    rows, figure_paths = run_benchmark(
        suite,
        out,
        figures=figures,
        threads=threads,
        seeds=seeds,
        omega_train=omega_train,
        omega_test=omega_test,
        gammas=_parse_floats(gammas) if gammas else None,
        betas=_parse_floats(betas) if betas else None,
        gamma=gamma,
        k=k,
        gamma_min=gamma_min,
        fold_seed=fold_seed,
    )
    _emit({
        "suite": suite,
        "rows": len(rows),
        "csv": str(out),
        "figures": [str(p) for p in figure_paths],
    })


if __name__ == "__main__":
    main()
