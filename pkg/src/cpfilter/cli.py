"""Command-line entry points.

Exit codes: 0 on success, 2 for input or validation problems, 3 when a
solver fails to converge. Errors print as one line of JSON on stderr.
Every output file gets a `<name>.manifest.json` sidecar with the
resolved parameters; `cpfilter rerun <manifest>` replays it and
reproduces the outputs byte for byte. When --seed is omitted the
CPFILTER_SEED environment variable supplies the default (else 0).
"""

import functools
import json
import os
import sys

import click
import numpy as np

from . import __version__
from .exceptions import ConvergenceError
from .fileio import (RunManifest, read_changepoint_set, read_edge_list,
                     read_json, read_manifest, read_signal, sha256_file,
                     write_csv, write_json)
from .filtering import auto_bandwidth, full_filter_set, reduced_filter_set
from .fused import (cv_select_lambda, default_lambda_grid, fused_lasso_1d)
from .graph import Graph, graph_changepoints, graph_fused_lasso, \
    graph_screening_distance
from .interpolant import (check_class_M, lower_interpolant,
                          verify_interpolant_properties)
from .metrics import (changepoints, default_jump_tol, hausdorff, knots2,
                      screening_distance)
from .tauselect import select_tau
from .trend import trend_filter_linear
from . import simulate as sim
from .report import render_figure

EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3


def _fail(exc, code):
    click.echo(json.dumps({"error": type(exc).__name__,
                           "message": str(exc)}), err=True)
    sys.exit(code)


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConvergenceError as exc:
            _fail(exc, EXIT_NO_CONVERGENCE)
        except (ValueError, TypeError, KeyError, OSError) as exc:
            _fail(exc, EXIT_INVALID)
    return wrapper


def _default_seed(seed):
    if seed is not None:
        return int(seed)
    return int(os.environ.get("CPFILTER_SEED", "0"))


def _write_manifest(subcommand, argv, params, input_paths, outputs,
                    seed=None):
    manifest = RunManifest(
        subcommand=subcommand,
        argv=[str(a) for a in argv],
        params=params,
        inputs={str(p): sha256_file(p) for p in input_paths},
        outputs=[str(o) for o in outputs],
        seed=seed,
        version=__version__,
    )
    return manifest.write(outputs[0])


def _parse_cv(spec):
    """Parse a --cv spec like 'k=5,grid=auto'."""
    k = 5
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if "=" not in token:
            raise ValueError(f"bad --cv token {token!r}, expected key=value")
        key, value = token.split("=", 1)
        if key == "k":
            k = int(value)
        elif key == "grid":
            if value != "auto":
                raise ValueError("only grid=auto is supported in --cv")
        else:
            raise ValueError(f"unknown --cv key {key!r}")
    return k


def _int_or_auto(text, name):
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"--{name} must be an integer or 'auto'") from None


def _float_or_auto(text, name):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"--{name} must be a number or 'auto'") from None


def _parse_grid(text, cast):
    values = [cast(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise ValueError("empty grid")
    return values


@click.group()
@click.version_option(__version__, prog_name="cpfilter")
def main():
    """Changepoint estimation, filtering, and simulation tools."""


@main.command()
@click.option("--model", type=click.Choice(["fl1d", "tf1", "gfl"]),
              required=True, help="Estimator to fit.")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=False), help="Signal file.")
@click.option("--lambda", "lam", type=float, default=None,
              help="Penalty level.")
@click.option("--cv", "cv_spec", default=None,
              help="Cross-validate lambda, e.g. 'k=5,grid=auto' (fl1d only).")
@click.option("--graph", "graph_path", default=None,
              help="Edge list file (gfl only).")
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--max-iter", type=int, default=50000, show_default=True)
@click.option("--output", "output_path", required=True)
@cli_errors
def fit(model, input_path, lam, cv_spec, graph_path, tol, max_iter,
        output_path):
    """Fit a piecewise-constant or piecewise-linear estimate."""
    y = read_signal(input_path)
    input_paths = [input_path]
    result = {"model": model, "n": int(y.size)}
    cv_meta = None

    if model == "fl1d":
        if (lam is None) == (cv_spec is None):
            raise ValueError("fl1d needs exactly one of --lambda or --cv")
        if cv_spec is not None:
            k = _parse_cv(cv_spec)
            lam_used = cv_select_lambda(y, default_lambda_grid(y), k=k)
            cv_meta = {"k": k, "grid": "auto", "lambda": lam_used}
        else:
            lam_used = float(lam)
        fit_res = fused_lasso_1d(y, lam_used)
        result["jump_tol"] = 0.0
        result["changepoints"] = changepoints(fit_res.theta_hat, tol=0.0)
    elif model == "tf1":
        if lam is None:
            raise ValueError("--model tf1 requires --lambda")
        if cv_spec is not None:
            raise ValueError("--cv is only supported for fl1d")
        lam_used = float(lam)
        fit_res = trend_filter_linear(y, lam_used, tol=tol, max_iter=max_iter)
        result["gap"] = fit_res.gap
        result["iterations"] = fit_res.iterations
        # gap bounds 0.5*||theta - theta*||^2, so a second difference of
        # the numerical solution is trustworthy only above 4*sqrt(2*gap)
        jt = max(default_jump_tol(fit_res.theta_hat),
                 4.0 * np.sqrt(2.0 * max(fit_res.gap, 0.0)))
        result["jump_tol"] = jt
        result["knots2"] = knots2(fit_res.theta_hat, tol=jt)
    else:
        if lam is None:
            raise ValueError("--model gfl requires --lambda")
        if graph_path is None:
            raise ValueError("--model gfl requires --graph")
        if cv_spec is not None:
            raise ValueError("--cv is only supported for fl1d")
        edges = read_edge_list(graph_path)
        g = Graph(int(y.size), edges)
        input_paths.append(graph_path)
        lam_used = float(lam)
        fit_res = graph_fused_lasso(y, g, lam_used, tol=tol,
                                    max_iter=max_iter)
        # solver stops at gap <= tol*(1+|objective|); translate that into
        # the per-edge difference it can certify
        gap_bound = tol * (1.0 + abs(fit_res.objective))
        jt = max(default_jump_tol(fit_res.theta_hat),
                 2.0 * np.sqrt(2.0 * gap_bound))
        result["jump_tol"] = jt
        result["changepoint_edges"] = graph_changepoints(
            fit_res.theta_hat, g, tol=jt)

    result["lambda"] = lam_used
    result["cv"] = cv_meta
    result["objective"] = fit_res.objective
    result["theta_hat"] = fit_res.theta_hat
    result["y"] = y
    write_json(output_path, result)

    argv = ["fit", "--model", model, "--input", input_path]
    if cv_spec is not None:
        argv += ["--cv", cv_spec]
    else:
        argv += ["--lambda", repr(float(lam))]
    if graph_path is not None:
        argv += ["--graph", graph_path]
    argv += ["--tol", repr(tol), "--max-iter", str(max_iter),
             "--output", output_path]
    params = {"model": model, "lambda": lam_used, "cv": cv_meta,
              "tol": tol, "max_iter": max_iter}
    _write_manifest("fit", argv, params, input_paths, [output_path])


@main.command("filter")
@click.option("--input", "input_path", required=True,
              help="Fit artifact produced by `fit --model fl1d`.")
@click.option("--bandwidth", default="auto", show_default=True,
              help="Window half-width, or 'auto'.")
@click.option("--tau", default="auto", show_default=True,
              help="Threshold, or 'auto' for permutation selection.")
@click.option("--variant", type=click.Choice(["full", "reduced"]),
              default="reduced", show_default=True)
@click.option("--B", "n_perm", type=int, default=100, show_default=True,
              help="Permutations when --tau auto.")
@click.option("--q", type=float, default=0.95, show_default=True,
              help="Quantile level when --tau auto.")
@click.option("--seed", type=int, default=None,
              help="Permutation seed when --tau auto (default: "
                   "CPFILTER_SEED or 0).")
@click.option("--output", "output_path", required=True)
@cli_errors
def filter_cmd(input_path, bandwidth, tau, variant, n_perm, q, seed,
               output_path):
    """Threshold the moving-window filter of a fitted estimate."""
    data = read_json(input_path)
    if data.get("model") != "fl1d":
        raise ValueError("filter requires a fit produced by --model fl1d")
    y = np.asarray(data["y"], dtype=float)
    theta = np.asarray(data["theta_hat"], dtype=float)

    b = _int_or_auto(bandwidth, "bandwidth")
    b = auto_bandwidth(y.size) if b is None else b

    tau_value = _float_or_auto(tau, "tau")
    seed_used = None
    out = {"variant": variant, "bandwidth": int(b), "n": int(y.size)}
    if tau_value is None:
        seed_used = _default_seed(seed)
        cv_meta = data.get("cv")
        if cv_meta:
            k = int(cv_meta["k"])

            def refit(perm_y):
                lam = cv_select_lambda(perm_y, default_lambda_grid(perm_y),
                                       k=k)
                return fused_lasso_1d(perm_y, lam).theta_hat
        else:
            lam_fixed = float(data["lambda"])

            def refit(perm_y):
                return fused_lasso_1d(perm_y, lam_fixed).theta_hat

        sel = select_tau(y, refit, B=n_perm, b=b, q=q, seed=seed_used)
        tau_used = sel.tau_hat
        out["tau_mode"] = "auto"
        out["per_permutation_maxima"] = sel.per_permutation_maxima
        out["tau_config"] = sel.config
    else:
        tau_used = float(tau_value)
        out["tau_mode"] = "fixed"
    out["tau"] = tau_used

    if variant == "full":
        kept = full_filter_set(theta, b, tau_used)
    else:
        kept = reduced_filter_set(theta, b, tau_used)
    out["locations"] = kept.locations
    write_json(output_path, out)

    argv = ["filter", "--input", input_path, "--bandwidth", bandwidth,
            "--tau", tau, "--variant", variant]
    if tau_value is None:
        argv += ["--B", str(n_perm), "--q", repr(q),
                 "--seed", str(seed_used)]
    argv += ["--output", output_path]
    params = {"bandwidth": int(b), "tau": tau_used,
              "tau_mode": out["tau_mode"], "variant": variant,
              "B": n_perm if tau_value is None else None,
              "q": q if tau_value is None else None}
    _write_manifest("filter", argv, params, [input_path], [output_path],
                    seed=seed_used)


@main.command("select-tau")
@click.option("--input", "input_path", required=True, help="Signal file.")
@click.option("--fitter", type=click.Choice(["fl1d-cv", "fl1d-fixed"]),
              default="fl1d-cv", show_default=True)
@click.option("--lambda", "lam", type=float, default=None,
              help="Penalty for fl1d-fixed.")
@click.option("--cv-folds", type=int, default=5, show_default=True)
@click.option("--B", "n_perm", type=int, default=100, show_default=True)
@click.option("--q", type=float, default=0.95, show_default=True)
@click.option("--bandwidth", default="auto", show_default=True)
@click.option("--seed", type=int, default=None,
              help="Default: CPFILTER_SEED or 0.")
@click.option("--output", "output_path", required=True)
@cli_errors
def select_tau_cmd(input_path, fitter, lam, cv_folds, n_perm, q, bandwidth,
                   seed, output_path):
    """Pick a filter threshold by permuting fit residuals."""
    y = read_signal(input_path)
    b = _int_or_auto(bandwidth, "bandwidth")
    b = auto_bandwidth(y.size) if b is None else b
    seed_used = _default_seed(seed)

    if fitter == "fl1d-cv":
        if lam is not None:
            raise ValueError("--lambda is only used with fl1d-fixed")

        def refit(perm_y):
            sel_lam = cv_select_lambda(perm_y, default_lambda_grid(perm_y),
                                       k=cv_folds)
            return fused_lasso_1d(perm_y, sel_lam).theta_hat
    else:
        if lam is None:
            raise ValueError("fl1d-fixed requires --lambda")

        def refit(perm_y):
            return fused_lasso_1d(perm_y, float(lam)).theta_hat

    sel = select_tau(y, refit, B=n_perm, b=b, q=q, seed=seed_used)
    out = {"tau_hat": sel.tau_hat,
           "per_permutation_maxima": sel.per_permutation_maxima,
           "config": sel.config}
    write_json(output_path, out)

    argv = ["select-tau", "--input", input_path, "--fitter", fitter]
    if lam is not None:
        argv += ["--lambda", repr(float(lam))]
    argv += ["--cv-folds", str(cv_folds), "--B", str(n_perm),
             "--q", repr(q), "--bandwidth", bandwidth,
             "--seed", str(seed_used), "--output", output_path]
    params = {"fitter": fitter, "lambda": lam, "cv_folds": cv_folds,
              "B": n_perm, "q": q, "bandwidth": int(b), "seed": seed_used}
    _write_manifest("select-tau", argv, params, [input_path], [output_path],
                    seed=seed_used)


@main.command()
@click.option("--input", "input_path", required=True, help="Signal file.")
@click.option("--changepoints", "cps_path", required=True,
              help="JSON array of 1-based boundary indices.")
@click.option("--verify", is_flag=True,
              help="Attach the structural verification report.")
@click.option("--output", "output_path", required=True)
@cli_errors
def interpolant(input_path, cps_path, verify, output_path):
    """Build the blockwise lower interpolant of a signal."""
    x = read_signal(input_path)
    s0 = read_changepoint_set(cps_path)
    res = lower_interpolant(x, s0)
    out = {"z": res.z, "switch_points": res.switch_points,
           "blocks": res.blocks}
    if verify:
        out["verification"] = verify_interpolant_properties(x, res.z, s0)
        out["in_class_m"] = bool(check_class_M(res.z, s0))
    write_json(output_path, out)

    argv = ["interpolant", "--input", input_path,
            "--changepoints", cps_path]
    if verify:
        argv.append("--verify")
    argv += ["--output", output_path]
    params = {"verify": verify, "n": int(x.size),
              "changepoints": [int(v) for v in s0]}
    _write_manifest("interpolant", argv, params, [input_path, cps_path],
                    [output_path])


def _read_edge_set_json(path):
    data = read_json(path)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of [i, j] pairs")
    if not data:
        return np.empty((0, 2), dtype=int)
    arr = np.asarray(data, dtype=int)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{path}: expected a JSON array of [i, j] pairs")
    return arr


@main.command()
@click.option("--dist", type=click.Choice(["screening", "hausdorff", "dg"]),
              required=True)
@click.option("--a", "a_path", required=True,
              help="First set (JSON): indices, or edge pairs for dg.")
@click.option("--b", "b_path", required=True,
              help="Second set (JSON): indices, or edge pairs for dg.")
@click.option("--graph", "graph_path", default=None,
              help="Edge list defining the graph (dg only).")
@click.option("--nodes", type=int, default=None,
              help="Node count for dg (default: max id in --graph).")
@click.option("--output", "output_path", default=None)
@cli_errors
def metrics(dist, a_path, b_path, graph_path, nodes, output_path):
    """Distances between changepoint sets.

    screening and hausdorff compare index sets; dg measures graph hops
    from each edge of B to the nearest edge of A.
    """
    input_paths = [a_path, b_path]
    if dist == "dg":
        if graph_path is None:
            raise ValueError("--dist dg requires --graph")
        edges = read_edge_list(graph_path)
        n_nodes = int(edges.max()) if nodes is None else int(nodes)
        g = Graph(n_nodes, edges)
        a = _read_edge_set_json(a_path)
        b = _read_edge_set_json(b_path)
        value = graph_screening_distance(a, b, g)
        input_paths.append(graph_path)
    else:
        a = read_changepoint_set(a_path)
        b = read_changepoint_set(b_path)
        if dist == "screening":
            value = screening_distance(a, b)
        else:
            value = hausdorff(a, b)

    out = {"dist": dist, "value": value}
    click.echo(json.dumps(out))
    if output_path is not None:
        write_json(output_path, out)
        argv = ["metrics", "--dist", dist, "--a", a_path, "--b", b_path]
        if graph_path is not None:
            argv += ["--graph", graph_path]
        if nodes is not None:
            argv += ["--nodes", str(nodes)]
        argv += ["--output", output_path]
        _write_manifest("metrics", argv, {"dist": dist, "value": value},
                        input_paths, [output_path])


_EXPERIMENT_AXES = {"haus-vs-n": "n", "tau-sweep": "tau", "q-sweep": "q",
                    "l2-scaling": "n"}
_EXPERIMENT_TRIALS = {"haus-vs-n": 50, "tau-sweep": 100, "q-sweep": 20,
                      "l2-scaling": 20}


@main.command()
@click.option("--experiment", required=True,
              type=click.Choice(sorted(_EXPERIMENT_AXES)))
@click.option("--trials", type=int, default=None,
              help="Trials per grid point (default depends on experiment).")
@click.option("--seed", type=int, default=None,
              help="Default: CPFILTER_SEED or 0.")
@click.option("--n", "n_fixed", type=int, default=774, show_default=True,
              help="Sample size for tau-sweep / q-sweep.")
@click.option("--n-grid", default=None, help="Comma-separated sample sizes.")
@click.option("--tau-grid", default=None, help="Comma-separated thresholds.")
@click.option("--q-grid", default=None, help="Comma-separated levels.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Parallel workers for trials.")
@click.option("--emit-plots-data", is_flag=True,
              help="Also write per-trial rows to <out>.tidy.csv.")
@click.option("--no-figures", is_flag=True, help="Skip the PNG figure.")
@click.option("--out", "out_path", required=True, help="Summary CSV path.")
@cli_errors
def simulate(experiment, trials, seed, n_fixed, n_grid, tau_grid, q_grid,
             jobs, emit_plots_data, no_figures, out_path):
    """Run a synthetic-data experiment and write its summary table."""
    seed_used = _default_seed(seed)
    trials_used = _EXPERIMENT_TRIALS[experiment] if trials is None else trials
    axis = _EXPERIMENT_AXES[experiment]

    if experiment == "haus-vs-n":
        grid = (_parse_grid(n_grid, int) if n_grid
                else sim.default_n_grid())
        rows, recs = sim.experiment_haus_vs_n(
            trials=trials_used, master_seed=seed_used, n_grid=grid,
            jobs=jobs)
    elif experiment == "tau-sweep":
        grid = (_parse_grid(tau_grid, float) if tau_grid
                else [float(t) for t in np.linspace(0.0, 2.0, 21)])
        rows, recs = sim.experiment_tau_sweep(
            trials=trials_used, master_seed=seed_used, n=n_fixed,
            tau_grid=grid, jobs=jobs)
    elif experiment == "q-sweep":
        grid = (_parse_grid(q_grid, float) if q_grid
                else [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99])
        rows, recs = sim.experiment_q_sweep(
            trials=trials_used, master_seed=seed_used, n=n_fixed,
            q_grid=grid, jobs=jobs)
    else:
        grid = (_parse_grid(n_grid, int) if n_grid
                else sim.default_n_grid(100, 10000, 7))
        rows, recs = sim.experiment_l2_scaling(
            trials=trials_used, master_seed=seed_used, n_grid=grid,
            jobs=jobs)

    write_csv(out_path, rows, sim.AGG_COLUMNS)
    outputs = [out_path]
    stem = os.path.splitext(out_path)[0]
    if not no_figures:
        fig_path = stem + ".png"
        render_figure(experiment, rows, fig_path)
        outputs.append(fig_path)
    if emit_plots_data:
        tidy_path = stem + ".tidy.csv"
        write_csv(tidy_path, sim.tidy_rows(axis, grid, trials_used, recs),
                  sim.TIDY_COLUMNS)
        outputs.append(tidy_path)

    argv = ["simulate", "--experiment", experiment,
            "--trials", str(trials_used), "--seed", str(seed_used)]
    if experiment in ("tau-sweep", "q-sweep"):
        argv += ["--n", str(n_fixed)]
    grid_flag = {"haus-vs-n": "--n-grid", "l2-scaling": "--n-grid",
                 "tau-sweep": "--tau-grid", "q-sweep": "--q-grid"}[experiment]
    argv += [grid_flag, ",".join(repr(v) if isinstance(v, float) else str(v)
                                 for v in grid)]
    argv += ["--jobs", str(jobs)]
    if emit_plots_data:
        argv.append("--emit-plots-data")
    if no_figures:
        argv.append("--no-figures")
    argv += ["--out", out_path]
    params = {"experiment": experiment, "axis": axis, "grid": grid,
              "trials": trials_used, "seed": seed_used, "jobs": jobs}
    _write_manifest("simulate", argv, params, [], outputs, seed=seed_used)


@main.command()
@click.argument("manifest_path")
@cli_errors
def rerun(manifest_path):
    """Replay a recorded invocation from its manifest."""
    manifest = read_manifest(manifest_path)
    main.main(args=list(manifest.argv), standalone_mode=False)


if __name__ == "__main__":
    main()
