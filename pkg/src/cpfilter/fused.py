"""Exact 1-d fused lasso: linear-time solver, optimality check, CV tuning.

The estimate is the minimizer of

    0.5 * sum_i (y_i - theta_i)^2 + lam * sum_i |theta_i - theta_{i+1}|,

computed exactly (up to float rounding) by dynamic programming over the
piecewise-linear derivatives of the forward messages. Each message's
derivative is kept as a sorted knot list with affine pieces; clipping the
message at +-lam trims both tails, and the minimizer is recovered by one
backward clamp pass. Work is O(n) amortized since every step pushes at
most two knots. The hot loops are numba-compiled; the first call pays a
one-off JIT cost.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .metrics import as_signal, tv


@njit(cache=True)
def _dp_fit(y, lam):
    n = y.size
    theta = np.empty(n)
    if n == 1 or lam <= 0.0:
        theta[:] = y
        return theta

    # knot buffer: lo can fall by at most 1 per step and hi rise by at most 1,
    # so starting both at n+1 keeps every index inside [1, 2n]
    size = 2 * n + 2
    x = np.empty(size)
    da = np.empty(size)
    db = np.empty(size)
    lo = n + 1
    hi = n + 1
    blo = np.empty(n - 1)
    bhi = np.empty(n - 1)

    # derivative of the first message: a*t + b on the leftmost (aL, bL)
    # and rightmost (aT, bT) pieces, knots in between
    a_l = 1.0
    b_l = -y[0]
    a_t = 1.0
    b_t = -y[0]

    for i in range(n - 1):
        # walk in from the left to the -lam crossing
        a = a_l
        b = b_l
        while lo < hi and a * x[lo] + b <= -lam:
            a += da[lo]
            b += db[lo]
            lo += 1
        bm = (-lam - b) / a  # crossing piece has slope >= 1
        am_r = a
        bm_r = b
        # walk in from the right to the +lam crossing
        a = a_t
        b = b_t
        while lo < hi and a * x[hi - 1] + b >= lam:
            hi -= 1
            a -= da[hi]
            b -= db[hi]
        bp = (lam - b) / a
        ap_l = a
        bp_l = b
        # clipped derivative: flat -lam, old middle, flat +lam
        lo -= 1
        x[lo] = bm
        da[lo] = am_r
        db[lo] = bm_r + lam
        x[hi] = bp
        da[hi] = -ap_l
        db[hi] = lam - bp_l
        hi += 1
        blo[i] = bm
        bhi[i] = bp
        # absorb the next data point
        a_l = 1.0
        b_l = -lam - y[i + 1]
        a_t = 1.0
        b_t = lam - y[i + 1]

    # root of the final derivative
    a = a_l
    b = b_l
    while lo < hi and a * x[lo] + b < 0.0:
        a += da[lo]
        b += db[lo]
        lo += 1
    theta[n - 1] = -b / a
    for i in range(n - 2, -1, -1):
        t = theta[i + 1]
        if t < blo[i]:
            t = blo[i]
        elif t > bhi[i]:
            t = bhi[i]
        theta[i] = t
    return theta


@dataclass
class FusedLassoFit:
    """Solution of the fused lasso problem at one penalty value."""

    theta_hat: np.ndarray
    lam: float
    objective: float


def fused_lasso_objective(y, theta, lam):
    """0.5 * sum (y - theta)^2 + lam * TV(theta)."""
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return float(0.5 * np.sum((y - theta) ** 2) + lam * tv(theta))


def fused_lasso_1d(y, lam):
    """Exact fused lasso solution for a 1-d signal.

    Parameters
    ----------
    y : array_like
        Input signal, finite values, length >= 1.
    lam : float
        Penalty level, >= 0. lam=0 returns y itself.

    Returns
    -------
    FusedLassoFit
    """
    y = as_signal(y)
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError("lam must be finite and nonnegative")
    theta = _dp_fit(y, lam)
    return FusedLassoFit(theta_hat=theta, lam=lam,
                         objective=fused_lasso_objective(y, theta, lam))


def lambda_max(y):
    """Smallest penalty at which the fit collapses to the mean.

    Equals max_k |sum_{i<=k} (y_i - mean(y))| over k = 1..n-1.
    """
    y = as_signal(y)
    if y.size == 1:
        return 0.0
    partial = np.cumsum(y - y.mean())
    return float(np.max(np.abs(partial[:-1])))


def default_lambda_grid(y, num=50, span=1e-4):
    """Geometric grid of `num` points on [span * lambda_max, lambda_max]."""
    lmax = lambda_max(y)
    if lmax <= 0.0:
        return np.array([0.0])
    return np.geomspace(span * lmax, lmax, num)


def check_kkt(y, fit, tol=1e-8, jump_tol=0.0):
    """Certify optimality of a fused lasso fit.

    Verifies there is s in [-1,1]^(n-1) with y - theta = lam * D^T s and
    s_i = sign(theta_i - theta_{i+1}) wherever |theta_i - theta_{i+1}| >
    jump_tol. The subgradient is forced by the residual recursion
    s_i = s_{i-1} + (y_i - theta_i)/lam, so existence reduces to range
    checks, each applied with absolute tolerance `tol`.
    """
    y = as_signal(y)
    theta = np.asarray(fit.theta_hat, dtype=float)
    lam = float(fit.lam)
    if theta.size != y.size:
        raise ValueError("fit length does not match signal length")
    r = y - theta
    if lam == 0.0:
        return bool(np.max(np.abs(r)) <= tol)
    s = np.cumsum(r) / lam
    if abs(s[-1]) > tol:  # residuals must sum to zero
        return False
    s = s[:-1]
    if s.size and np.max(np.abs(s)) > 1.0 + tol:
        return False
    d = np.diff(theta)
    jumps = np.abs(d) > jump_tol
    if not np.any(jumps):
        return True
    return bool(np.max(np.abs(s[jumps] + np.sign(d[jumps]))) <= tol)


@njit(cache=True)
def _cv_fold_errors(y_train, pos_train, y_test, pos_test, grid):
    errs = np.empty(grid.size)
    for g in range(grid.size):
        theta = _dp_fit(y_train, grid[g])
        pred = np.interp(pos_test, pos_train, theta)
        errs[g] = np.sum((y_test - pred) ** 2)
    return errs


def cv_select_lambda(y, lambda_grid=None, k=5, rng_seed=None):
    """Pick the penalty minimizing k-fold cross-validation error.

    Folds are index strides (fold j holds out positions congruent to j
    mod k), so the split is deterministic; `rng_seed` is accepted for
    interface stability but never used. Held-out points are predicted by
    linear interpolation of the fitted training values in index space
    (edge points take the nearest fitted value). Ties go to the largest
    penalty on the grid.

    Parameters
    ----------
    y : array_like
        Signal of length >= 2*k.
    lambda_grid : array_like or None
        Candidate penalties; None uses `default_lambda_grid(y)`.
    k : int
        Number of folds, >= 2.

    Returns
    -------
    float
    """
    y = as_signal(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if y.size < 2 * k:
        raise ValueError("need n >= 2*k samples for k-fold CV")
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(y)
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda_grid must be nonempty")
    if np.any(~np.isfinite(grid)) or np.any(grid < 0):
        raise ValueError("lambda_grid values must be finite and nonnegative")

    n = y.size
    pos = np.arange(n, dtype=float)
    idx = np.arange(n)
    total = np.zeros(grid.size)
    for j in range(k):
        test = idx % k == j
        total += _cv_fold_errors(y[~test], pos[~test], y[test], pos[test], grid)
    best = total.min()
    return float(np.max(grid[total == best]))
