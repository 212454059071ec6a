"""Simulation harness: signal generation, end-to-end trials, sweeps.

A trial generates a piecewise-constant signal plus Gaussian noise, fits
the fused lasso with CV-selected penalty, filters the fit at bandwidth
floor(0.25*ln(n)^2), thresholds on the candidate set, and records every
distance of interest against the known truth. Sweeps repeat trials
along one axis (sample size, threshold, or quantile level) with
per-trial seeds derived from (master seed, grid index, trial index), so
results are identical no matter how many workers run them.

Distance naming: d_screen is the screening distance d(S_est | S_0),
large when some true changepoint has no nearby estimate; d_precision is
d(S_0 | S_est), large when some estimated changepoint is far from every
true one. The false/true positive rates follow: FPR counts trials with
d_precision > b, TPR counts trials with d_screen <= b.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .filtering import auto_bandwidth, candidate_set, haar_filter
from .fused import cv_select_lambda, default_lambda_grid, fused_lasso_1d
from .metrics import (as_signal, changepoints, hausdorff, min_gap,
                      screening_distance)
from .tauselect import select_tau, upper_quantile

DEFAULT_LEVELS = (0.0, 2.0, 4.0, 1.0, 4.0)


@dataclass
class GeneratorSpec:
    """Piecewise-constant truth with equal segments plus Gaussian noise."""

    n: int
    levels: tuple = DEFAULT_LEVELS
    noise_sd: float = 2.0
    seed: int = 0


def gen_signal(spec):
    """True mean: equal-width segments at the requested levels.

    Widths are floor(n/k); the remainder is spread one-each over the
    trailing segments.
    """
    levels = np.asarray(spec.levels, dtype=float)
    k = levels.size
    if k < 1:
        raise ValueError("need at least one level")
    n = int(spec.n)
    if n < k:
        raise ValueError("n must be at least the number of levels")
    base, rem = divmod(n, k)
    widths = np.full(k, base, dtype=int)
    if rem:
        widths[-rem:] += 1
    return np.repeat(levels, widths)


def gen_data(spec):
    """Observed signal: truth plus seeded N(0, noise_sd^2) noise."""
    theta0 = gen_signal(spec)
    if spec.noise_sd == 0:
        return theta0
    rng = np.random.default_rng(int(spec.seed))
    return theta0 + float(spec.noise_sd) * rng.standard_normal(theta0.size)


@dataclass
class PipelineConfig:
    """Tuning knobs for one end-to-end trial."""

    lambda_grid: np.ndarray = None
    cv_folds: int = 5
    bandwidth: int = None
    tau_mode: str = "data"  # "data" | "fixed" | "oracle"
    tau: float = None
    B: int = 100
    q: float = 0.95
    tau_seed: int = None
    oracle_grid_size: int = 101


@dataclass
class TrialRecord:
    """Everything one trial produced, enough to recompute its distances."""

    spec: GeneratorSpec
    lam: float
    b: int
    tau: float
    tau_mode: str
    true_changepoints: np.ndarray
    raw_changepoints: np.ndarray
    filtered_changepoints: np.ndarray
    full_filter_changepoints: np.ndarray
    l2_error: float
    d_screen_raw: float
    d_precision_raw: float
    d_hausdorff_raw: float
    d_screen_filtered: float
    d_precision_filtered: float
    d_hausdorff_filtered: float
    d_hausdorff_full: float


def _cv_pipeline(config):
    """Fit handle rerunning the whole tuning pipeline on each call."""
    def fit(y):
        grid = (default_lambda_grid(y) if config.lambda_grid is None
                else config.lambda_grid)
        lam = cv_select_lambda(y, grid, k=config.cv_folds)
        return fused_lasso_1d(y, lam).theta_hat
    return fit


@dataclass
class _FitBundle:
    spec: GeneratorSpec
    config: PipelineConfig
    theta0: np.ndarray
    y: np.ndarray
    s0: np.ndarray
    theta_hat: np.ndarray
    lam: float
    b: int
    s_raw: np.ndarray
    l2_error: float
    profile_values: np.ndarray
    cand: np.ndarray


def _fit_bundle(spec, config):
    theta0 = gen_signal(spec)
    y = gen_data(spec)
    n = y.size
    grid = (default_lambda_grid(y) if config.lambda_grid is None
            else config.lambda_grid)
    lam = cv_select_lambda(y, grid, k=config.cv_folds)
    theta_hat = fused_lasso_1d(y, lam).theta_hat
    b = auto_bandwidth(n) if config.bandwidth is None else int(config.bandwidth)
    prof = haar_filter(theta_hat, b)
    return _FitBundle(
        spec=spec, config=config, theta0=theta0, y=y,
        s0=changepoints(theta0, 0.0), theta_hat=theta_hat, lam=lam, b=b,
        s_raw=changepoints(theta_hat, 0.0),
        l2_error=float(np.sum((theta_hat - theta0) ** 2) / n),
        profile_values=prof.values, cand=candidate_set(theta_hat, b, 0.0))


def _record_at_tau(bundle, tau, tau_mode):
    b = bundle.b
    absf = np.abs(bundle.profile_values)
    s_full = np.arange(b, bundle.theta0.size - b + 1)[absf >= tau]
    s_red = bundle.cand[absf[bundle.cand - b] >= tau]
    s0 = bundle.s0
    return TrialRecord(
        spec=bundle.spec, lam=bundle.lam, b=b, tau=float(tau),
        tau_mode=tau_mode, true_changepoints=s0,
        raw_changepoints=bundle.s_raw, filtered_changepoints=s_red,
        full_filter_changepoints=s_full, l2_error=bundle.l2_error,
        d_screen_raw=screening_distance(bundle.s_raw, s0),
        d_precision_raw=screening_distance(s0, bundle.s_raw),
        d_hausdorff_raw=hausdorff(bundle.s_raw, s0),
        d_screen_filtered=screening_distance(s_red, s0),
        d_precision_filtered=screening_distance(s0, s_red),
        d_hausdorff_filtered=hausdorff(s_red, s0),
        d_hausdorff_full=hausdorff(s_full, s0))


def _oracle_tau(bundle, grid_size):
    h = min_gap(bundle.theta0, bundle.s0)
    absf = np.abs(bundle.profile_values)
    cand_values = absf[bundle.cand - bundle.b]
    # grid spans twice the true minimum jump; for a jumpless truth fall
    # back to just past the largest filter value so the empty set is
    # reachable
    span = h if math.isfinite(h) else float(absf.max() * 1.001 + 1e-12)
    taus = np.linspace(0.0, 2.0 * span, grid_size)
    best_tau = taus[0]
    best_d = math.inf
    for tau in taus:
        s_red = bundle.cand[cand_values >= tau]
        d = hausdorff(s_red, bundle.s0)
        if d < best_d:
            best_d = d
            best_tau = tau
    return float(best_tau)


def run_trial(spec, config=None):
    """Generate, fit, filter, and measure one trial."""
    config = config or PipelineConfig()
    bundle = _fit_bundle(spec, config)
    if config.tau_mode == "fixed":
        if config.tau is None:
            raise ValueError("tau_mode='fixed' needs config.tau")
        tau = float(config.tau)
    elif config.tau_mode == "oracle":
        tau = _oracle_tau(bundle, config.oracle_grid_size)
    elif config.tau_mode == "data":
        seed = spec.seed if config.tau_seed is None else config.tau_seed
        sel = select_tau(bundle.y, _cv_pipeline(config), B=config.B,
                         b=bundle.b, q=config.q, seed=int(seed))
        tau = sel.tau_hat
    else:
        raise ValueError(f"unknown tau_mode {config.tau_mode!r}")
    return _record_at_tau(bundle, tau, config.tau_mode)


def fpr_tpr(records, b):
    """Trial-count false/true positive rates at tolerance b.

    FPR: fraction of trials whose filtered set contains a point farther
    than b from every true changepoint. TPR: fraction of trials whose
    filtered set comes within b of every true changepoint.
    """
    records = list(records)
    if not records:
        raise ValueError("fpr_tpr needs at least one record")
    fpr = float(np.mean([r.d_precision_filtered > b for r in records]))
    tpr = float(np.mean([r.d_screen_filtered <= b for r in records]))
    return fpr, tpr


def _derived_seed(master_seed, *key):
    ss = np.random.SeedSequence([int(master_seed)] + [int(k) for k in key])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def _quart(values):
    # nearest-rank quartiles: interpolation would form inf - inf when the
    # distances are infinite (empty estimated sets)
    values = np.asarray(values, dtype=float)
    return (float(np.median(values)),
            float(np.percentile(values, 25, method="nearest")),
            float(np.percentile(values, 75, method="nearest")))


def _aggregate_row(axis, value, records):
    rec = list(records)
    b = rec[0].b
    fpr, tpr = fpr_tpr(rec, b)
    row = {"axis": axis, "value": value, "trials": len(rec), "bandwidth": b,
           "fpr": fpr, "tpr": tpr}
    for name, get in (
            ("d_screen_filtered", lambda r: r.d_screen_filtered),
            ("d_precision_filtered", lambda r: r.d_precision_filtered),
            ("d_hausdorff_filtered", lambda r: r.d_hausdorff_filtered),
            ("d_hausdorff_raw", lambda r: r.d_hausdorff_raw)):
        med, q25, q75 = _quart([get(r) for r in rec])
        row[f"{name}_med"] = med
        row[f"{name}_q25"] = q25
        row[f"{name}_q75"] = q75
    row["l2_error_med"] = float(np.median([r.l2_error for r in rec]))
    row["lambda_med"] = float(np.median([r.lam for r in rec]))
    row["tau_med"] = float(np.median([r.tau for r in rec]))
    row["raw_size_med"] = float(np.median([r.raw_changepoints.size for r in rec]))
    row["filtered_size_med"] = float(np.median(
        [r.filtered_changepoints.size for r in rec]))
    return row


def _run_tasks(tasks, jobs):
    if jobs == 1:
        return [t() for t in tasks]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=jobs)(delayed(t)() for t in tasks)


def sweep(axis, grid, base_spec, trials, master_seed=0, config=None, jobs=1):
    """Repeat trials along one axis and aggregate per grid point.

    axis "n": each grid value is a sample size; trials are fully
    independent. axis "tau": the fit is computed once per trial and the
    fixed threshold varies along the grid. axis "q": the permutation
    batch is computed once per trial and the quantile level varies.

    Returns (rows, records): one aggregate dict per grid point, plus
    every TrialRecord for downstream checks.
    """
    config = config or PipelineConfig()
    grid = list(grid)
    if not grid:
        raise ValueError("sweep needs a nonempty grid")
    if trials < 1:
        raise ValueError("trials must be >= 1")

    rows = []
    all_records = []

    if axis == "n":
        def make_task(pi, ti):
            spec = replace(base_spec, n=int(grid[pi]),
                           seed=_derived_seed(master_seed, pi, ti))
            cfg = replace(config, tau_seed=_derived_seed(master_seed, pi, ti, 1))
            return lambda: run_trial(spec, cfg)
        tasks = [make_task(pi, ti) for pi in range(len(grid))
                 for ti in range(trials)]
        results = _run_tasks(tasks, jobs)
        for pi, value in enumerate(grid):
            recs = results[pi * trials:(pi + 1) * trials]
            rows.append(_aggregate_row("n", int(value), recs))
            all_records.extend(recs)

    elif axis == "tau":
        taus = [float(t) for t in grid]

        def make_task(ti):
            spec = replace(base_spec, seed=_derived_seed(master_seed, 0, ti))
            def task():
                bundle = _fit_bundle(spec, config)
                return [_record_at_tau(bundle, tau, "fixed") for tau in taus]
            return task
        per_trial = _run_tasks([make_task(ti) for ti in range(trials)], jobs)
        for gi, tau in enumerate(taus):
            recs = [per_trial[ti][gi] for ti in range(trials)]
            rows.append(_aggregate_row("tau", tau, recs))
            all_records.extend(recs)

    elif axis == "q":
        qs = [float(q) for q in grid]
        if any(not 0.0 < q < 1.0 for q in qs):
            raise ValueError("q grid values must lie strictly between 0 and 1")

        def make_task(ti):
            spec = replace(base_spec, seed=_derived_seed(master_seed, 0, ti))
            tau_seed = _derived_seed(master_seed, 0, ti, 1)
            def task():
                bundle = _fit_bundle(spec, config)
                sel = select_tau(bundle.y, _cv_pipeline(config), B=config.B,
                                 b=bundle.b, q=0.5, seed=tau_seed)
                out = []
                for q in qs:
                    tau = upper_quantile(sel.per_permutation_maxima, q)
                    out.append(_record_at_tau(bundle, tau, "data"))
                return out
            return task
        per_trial = _run_tasks([make_task(ti) for ti in range(trials)], jobs)
        for gi, q in enumerate(qs):
            recs = [per_trial[ti][gi] for ti in range(trials)]
            rows.append(_aggregate_row("q", q, recs))
            all_records.extend(recs)

    else:
        raise ValueError(f"unknown sweep axis {axis!r}")

    return rows, all_records


AGG_COLUMNS = [
    "axis", "value", "trials", "bandwidth", "fpr", "tpr",
    "d_screen_filtered_med", "d_screen_filtered_q25", "d_screen_filtered_q75",
    "d_precision_filtered_med", "d_precision_filtered_q25",
    "d_precision_filtered_q75",
    "d_hausdorff_filtered_med", "d_hausdorff_filtered_q25",
    "d_hausdorff_filtered_q75",
    "d_hausdorff_raw_med", "d_hausdorff_raw_q25", "d_hausdorff_raw_q75",
    "l2_error_med", "lambda_med", "tau_med", "raw_size_med",
    "filtered_size_med",
]

TIDY_COLUMNS = [
    "axis", "value", "trial", "n", "bandwidth", "lambda", "tau", "tau_mode",
    "l2_error", "raw_size", "filtered_size", "d_screen_raw",
    "d_precision_raw", "d_hausdorff_raw", "d_screen_filtered",
    "d_precision_filtered", "d_hausdorff_filtered", "d_hausdorff_full",
]


def tidy_rows(axis, grid, trials, records):
    """Per-trial rows matching TIDY_COLUMNS.

    `records` must come from sweep() with the same grid/trials: grid-point
    major, `trials` consecutive records per point.
    """
    grid = list(grid)
    if len(records) != len(grid) * trials:
        raise ValueError("records do not match grid x trials")
    rows = []
    for idx, rec in enumerate(records):
        value = grid[idx // trials]
        rows.append({
            "axis": axis, "value": value, "trial": idx % trials,
            "n": rec.spec.n, "bandwidth": rec.b, "lambda": rec.lam,
            "tau": rec.tau, "tau_mode": rec.tau_mode,
            "l2_error": rec.l2_error,
            "raw_size": int(rec.raw_changepoints.size),
            "filtered_size": int(rec.filtered_changepoints.size),
            "d_screen_raw": rec.d_screen_raw,
            "d_precision_raw": rec.d_precision_raw,
            "d_hausdorff_raw": rec.d_hausdorff_raw,
            "d_screen_filtered": rec.d_screen_filtered,
            "d_precision_filtered": rec.d_precision_filtered,
            "d_hausdorff_filtered": rec.d_hausdorff_filtered,
            "d_hausdorff_full": rec.d_hausdorff_full,
        })
    return rows


def default_n_grid(lo=100, hi=3000, points=5):
    """Log-spaced sample sizes, rounded to integers."""
    return [int(round(v)) for v in np.geomspace(lo, hi, points)]


def experiment_haus_vs_n(trials=50, master_seed=7, n_grid=None, tau_mode="data",
                         jobs=1, **cfg):
    n_grid = n_grid or default_n_grid()
    config = PipelineConfig(tau_mode=tau_mode, **cfg)
    return sweep("n", n_grid, GeneratorSpec(n=n_grid[0]), trials,
                 master_seed=master_seed, config=config, jobs=jobs)


def experiment_tau_sweep(trials=100, master_seed=7, n=774, tau_grid=None,
                         jobs=1, **cfg):
    if tau_grid is None:
        tau_grid = np.linspace(0.0, 2.0, 21)
    config = PipelineConfig(tau_mode="fixed", tau=0.0, **cfg)
    return sweep("tau", tau_grid, GeneratorSpec(n=n), trials,
                 master_seed=master_seed, config=config, jobs=jobs)


def experiment_q_sweep(trials=20, master_seed=7, n=774, q_grid=None,
                       jobs=1, **cfg):
    if q_grid is None:
        q_grid = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
    config = PipelineConfig(tau_mode="data", **cfg)
    return sweep("q", q_grid, GeneratorSpec(n=n), trials,
                 master_seed=master_seed, config=config, jobs=jobs)


def experiment_l2_scaling(trials=20, master_seed=7, n_grid=None, jobs=1, **cfg):
    n_grid = n_grid or default_n_grid(100, 10000, 7)
    config = PipelineConfig(tau_mode="fixed", tau=0.0, **cfg)
    return sweep("n", n_grid, GeneratorSpec(n=n_grid[0]), trials,
                 master_seed=master_seed, config=config, jobs=jobs)
