"""End-to-end acceptance checks, one test per claim.

The simulation-backed checks share three module-scoped harness runs so the
whole file stays within a few minutes. Numerical claims are tested against
independent oracles (long-run projected gradient, normal equations, brute
sampling) rather than against the implementation's own internals.
"""

import time

import numpy as np
import pytest

from cpfilter import (ball_linear_max, ball_linear_min, candidate_set,
                      changepoints, check_kkt, fused_lasso_1d,
                      graph_changepoints, graph_fused_lasso,
                      graph_screening_distance, grid2d, haar_filter,
                      local_maxima, lower_interpolant, check_class_M,
                      piecewise_linear_lsq, verify_interpolant_properties)
from cpfilter.simulate import (experiment_haus_vs_n, experiment_l2_scaling,
                               experiment_tau_sweep)


@pytest.fixture(scope="module")
def size_sweep():
    t0 = time.time()
    rows, records = experiment_haus_vs_n(trials=50, master_seed=7,
                                         n_grid=[100, 774, 3000])
    return rows, records, time.time() - t0


@pytest.fixture(scope="module")
def threshold_sweep():
    return experiment_tau_sweep(trials=100, master_seed=7)


@pytest.fixture(scope="module")
def scaling_sweep():
    return experiment_l2_scaling(trials=20, master_seed=7)


@pytest.fixture(scope="module")
def all_records(size_sweep, threshold_sweep, scaling_sweep):
    return size_sweep[1] + threshold_sweep[1] + scaling_sweep[1]


def _projected_gradient_batch(ys, lams, iters=200_000):
    """Slow-but-sure fused lasso oracle: projected gradient on the dual box.

    Solves min 0.5*||y - D^T u||^2 over |u_i| <= lam for a zero-padded batch
    of signals; the primal solution is y - D^T u. Step 1/4 matches the
    spectral bound on the chain difference operator.
    """
    m = len(ys)
    nmax = max(y.size for y in ys)
    Y = np.zeros((m, nmax))
    valid = np.zeros((m, nmax - 1), dtype=bool)
    for k, y in enumerate(ys):
        Y[k, :y.size] = y
        valid[k, :y.size - 1] = True
    box = np.asarray(lams, dtype=float)[:, None] * valid
    u = np.zeros((m, nmax - 1))
    for _ in range(iters):
        res = Y + np.diff(u, axis=1, prepend=0.0, append=0.0)
        grad = res[:, :-1] - res[:, 1:]
        u = np.clip(u - 0.25 * grad, -box, box)
    theta = Y + np.diff(u, axis=1, prepend=0.0, append=0.0)
    return [theta[k, :y.size] for k, y in enumerate(ys)]


def test_dp_solver_matches_long_run_projected_gradient():
    t0 = time.time()
    rng = np.random.default_rng(401)
    ys, lams = [], []
    for _ in range(100):
        n = int(rng.integers(2, 51))
        y = rng.standard_normal(n)
        if rng.random() < 0.5:
            y += np.repeat(rng.standard_normal(2) * 3.0, [n // 2, n - n // 2])
        ys.append(y)
        lams.append(float(rng.choice([0.1, 1.0, 10.0])))
    oracle = _projected_gradient_batch(ys, lams)
    for y, lam, ref in zip(ys, lams, oracle):
        fit = fused_lasso_1d(y, lam)
        assert np.max(np.abs(fit.theta_hat - ref)) <= 1e-6
        assert check_kkt(y, fit, tol=1e-7)
    assert time.time() - t0 < 60.0


def test_two_point_closed_form():
    fit = fused_lasso_1d(np.array([0.0, 2.0]), 0.5)
    assert np.max(np.abs(fit.theta_hat - [0.5, 1.5])) <= 1e-12


def test_interpolant_bulk_properties():
    t0 = time.time()
    rng = np.random.default_rng(403)
    for _ in range(1000):
        n = int(rng.integers(2, 150))
        style = rng.integers(0, 3)
        if style == 0:
            x = rng.standard_normal(n)
        elif style == 1:
            x = rng.standard_normal(n) * 10.0
            x[rng.random(n) < 0.2] = 0.0
        else:
            x = rng.integers(-3, 4, size=n).astype(float)
        m = int(rng.integers(0, min(6, n - 1) + 1))
        s0 = np.sort(rng.choice(np.arange(1, n), size=m, replace=False))
        res = lower_interpolant(x, s0)
        report = verify_interpolant_properties(x, res.z, s0)
        assert report["all_pass"], report
        assert check_class_M(res.z, s0)
        for lo, hi in res.blocks:
            assert res.z[lo] == x[lo]
            assert res.z[hi - 1] == x[hi - 1]
    assert time.time() - t0 < 30.0


def test_ball_extrema_dominate_samples():
    rng = np.random.default_rng(404)
    for k in range(500):
        d = int(rng.integers(1, 9))
        a = rng.standard_normal(d)
        c = rng.standard_normal(d) * 3.0
        na = float(np.linalg.norm(a))
        if k % 2 == 0:
            r = float(0.8 * abs(a @ c) / na)  # keep the ball off a.x = 0
        else:
            r = float(abs(rng.standard_normal()) * 2.0)
        vmax = ball_linear_max(a, c, r)
        u = rng.standard_normal((10_000, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        x = c + u * (r * rng.random(10_000) ** (1.0 / d))[:, None]
        vals = np.abs(x @ a)
        assert vals.max() <= vmax + 1e-9
        s = 1.0 if a @ c >= 0 else -1.0
        x_star = c + r * s * a / na
        assert abs(abs(a @ x_star) - vmax) <= 1e-9
        if abs(a @ c) - r * na >= 0:
            vmin = ball_linear_min(a, c, r)
            assert vals.min() >= vmin - 1e-9
            x_star = c - r * s * a / na
            assert abs(abs(a @ x_star) - vmin) <= 1e-9


def test_filter_peaks_covered_by_candidates():
    rng = np.random.default_rng(405)
    for _ in range(1000):
        n = int(rng.integers(24, 301))
        b = int(rng.integers(2, min(15, n // 2) + 1))
        k = int(rng.integers(1, 9))
        levels = rng.integers(-5, 6, size=k).astype(float)
        cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False))
        widths = np.diff(np.r_[0, cuts, n])
        theta = np.repeat(levels, widths)

        prof = haar_filter(theta, b)
        cand = candidate_set(theta, b)
        cand_abs = np.abs(prof.values[cand - b])
        for idx in np.flatnonzero(np.abs(prof.values) > 0):
            j = prof.locations[idx]
            lo = np.searchsorted(cand, j - b, side="left")
            hi = np.searchsorted(cand, j + b, side="right")
            assert hi > lo, f"no candidate within {b} of location {j}"
            assert cand_abs[lo:hi].max() >= abs(prof.values[idx])
        assert np.isin(local_maxima(prof), cand).all()


def test_ramp_sse_closed_form_and_cubic_bound():
    rng = np.random.default_rng(406)
    violations = 0
    worst = -np.inf
    for _ in range(1000):
        a1, a2 = rng.standard_normal(2) * 2.0
        r = int(rng.integers(1, 201))
        _, _, sse = piecewise_linear_lsq(a1, a2, r)
        x = np.arange(-r, r + 1, dtype=float)
        f = np.where(x >= 0, a1 * x, a2 * x)
        design = np.c_[x, np.ones_like(x)]
        coef, *_ = np.linalg.lstsq(design, f, rcond=None)
        sse_oracle = float(np.sum((f - design @ coef) ** 2))
        assert abs(sse - sse_oracle) <= 1e-10 * (1.0 + sse_oracle)
        bound = (a1 - a2) ** 2 * 13.0 * r ** 3 / 24.0
        if sse < bound - 1e-9 * (1.0 + bound):
            violations += 1
            if (a1 - a2) ** 2 > 0:
                worst = max(worst, sse / ((a1 - a2) ** 2 * r ** 3))
    assert violations == 0, (
        f"{violations}/1000 ramps fall below the 13*r^3/24 line "
        f"(largest observed sse/(delta^2 r^3) = {worst:.4f}, "
        f"the line requires {13 / 24:.4f})")


def test_full_filter_capture_implies_reduced_capture(all_records):
    bad = [r for r in all_records
           if r.d_hausdorff_full <= r.b
           and not r.d_hausdorff_filtered <= 2 * r.b]
    assert not bad, f"{len(bad)} of {len(all_records)} trials violate containment"


def test_reduced_set_size_bound(all_records):
    bad = [r for r in all_records
           if r.filtered_changepoints.size > 3 * r.raw_changepoints.size + 2]
    assert not bad, f"{len(bad)} of {len(all_records)} trials exceed 3s+2"


def test_filtered_hausdorff_beats_raw_at_scale(size_sweep):
    rows, _, elapsed = size_sweep
    assert elapsed < 600.0
    by_n = {row["value"]: row for row in rows}
    failures = []
    for n in (774, 3000):
        filt = by_n[n]["d_hausdorff_filtered_med"]
        raw = by_n[n]["d_hausdorff_raw_med"]
        if not filt < raw:
            failures.append(f"n={n}: filtered median {filt} !< raw median {raw}")
    big = by_n[3000]
    if not big["d_hausdorff_filtered_med"] <= 2 * big["bandwidth"]:
        failures.append(
            f"n=3000: filtered median {big['d_hausdorff_filtered_med']} "
            f"exceeds 2b = {2 * big['bandwidth']}")
    assert not failures, "; ".join(failures)


def test_threshold_sweep_monotone_medians(threshold_sweep):
    rows, _ = threshold_sweep
    screen = [row["d_screen_filtered_med"] for row in rows]
    precision = [row["d_precision_filtered_med"] for row in rows]
    up_breaks = sum(screen[i + 1] < screen[i] - 1e-9
                    for i in range(len(screen) - 1))
    down_breaks = sum(precision[i + 1] > precision[i] + 1e-9
                      for i in range(len(precision) - 1))
    assert up_breaks <= 2, f"screen medians: {up_breaks} inversions, {screen}"
    assert down_breaks <= 2, (
        f"precision medians: {down_breaks} inversions, {precision}")


def test_error_and_penalty_scaling_laws(scaling_sweep):
    rows, _ = scaling_sweep
    n = np.array([row["value"] for row in rows], dtype=float)
    n_err = n * np.array([row["l2_error_med"] for row in rows])
    lam = np.array([row["lambda_med"] for row in rows])
    c_err = float(np.corrcoef(n_err, np.log(n))[0, 1])
    c_lam = float(np.corrcoef(lam, np.sqrt(n))[0, 1])
    assert c_err >= 0.9, f"corr(n * err, log n) = {c_err:.4f}"
    assert c_lam >= 0.9, f"corr(lambda, sqrt n) = {c_lam:.4f}"


def test_chain_graph_matches_dp_solver():
    rng = np.random.default_rng(412)
    for _ in range(50):
        n = int(rng.integers(5, 61))
        y = rng.standard_normal(n)
        if rng.random() < 0.5:
            y += np.repeat(rng.standard_normal(2) * 2.0, [n // 2, n - n // 2])
        lam = float(10 ** rng.uniform(-1.3, 0.7))
        dp = fused_lasso_1d(y, lam).theta_hat
        gfl = graph_fused_lasso(y, grid2d(1, n), lam, tol=1e-12,
                                max_iter=200_000).theta_hat
        assert np.max(np.abs(dp - gfl)) <= 1e-6


def test_grid_cluster_boundary_recovery():
    side = 40
    g = grid2d(side, side)
    theta0 = np.zeros((side, side))
    theta0[10:24, 8:22] = 1.0  # mean has exactly two constant pieces
    theta0 = theta0.ravel()
    true_edges = graph_changepoints(theta0, g)

    dists = []
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        y = theta0 + rng.standard_normal(theta0.size)
        best_err = np.inf
        best_theta = None
        warm = None
        for lam in np.geomspace(0.2, 8.0, 12):
            fit = graph_fused_lasso(y, g, lam, tol=1e-6, max_iter=50_000,
                                    theta0=warm)
            warm = fit.theta_hat
            err = float(np.sum((fit.theta_hat - theta0) ** 2))
            if err < best_err:
                best_err = err
                best_theta = fit.theta_hat
        est_edges = graph_changepoints(best_theta, g, tol=1e-3)
        dists.append(graph_screening_distance(est_edges, true_edges, g))
    assert np.median(dists) <= 3.0, f"per-seed distances: {dists}"
