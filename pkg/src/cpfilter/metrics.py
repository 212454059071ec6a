"""Changepoint sets, distances, and signal diagnostics.

Signals are 1-d float arrays. Changepoint indices are 1-based: index i
marks a jump between positions i and i+1 of the signal, so valid indices
run over 1..n-1. All distance values are in index units and may be
``math.inf`` under the empty-set conventions documented below.
"""

import math

import numpy as np


def as_signal(x):
    """Coerce to a finite 1-d float array of length >= 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("signal must be one-dimensional")
    if x.size < 1:
        raise ValueError("signal must have length >= 1")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal values must be finite")
    return x


def default_jump_tol(theta):
    """Jump tolerance for iterative-solver output: 1e-9 * (1 + max|theta|)."""
    theta = np.asarray(theta, dtype=float)
    return 1e-9 * (1.0 + float(np.max(np.abs(theta), initial=0.0)))


def changepoints(theta, tol=0.0):
    """Indices i (1-based) with |theta_i - theta_{i+1}| > tol.

    tol=0 detects exact jumps, appropriate for direct-solver output.
    For iterative-solver output pass ``default_jump_tol(theta)``.
    """
    theta = as_signal(theta)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if theta.size == 1:
        return np.empty(0, dtype=int)
    jumps = np.abs(np.diff(theta)) > tol
    return np.flatnonzero(jumps) + 1


def tv(x):
    """Total variation sum |x_i - x_{i+1}|; 0 for a length-1 signal."""
    x = as_signal(x)
    return float(np.sum(np.abs(np.diff(x))))


def _as_index_array(s):
    s = np.asarray(s, dtype=int)
    if s.ndim == 0:
        s = s.reshape(1)
    if s.ndim != 1:
        raise ValueError("changepoint set must be one-dimensional")
    return np.unique(s)


def screening_distance(a, b):
    """One-sided distance d(A|B) = max over b in B of min over a in A of |a-b|.

    Conventions: B empty -> 0; A empty with B nonempty -> +inf.
    """
    a = _as_index_array(a)
    b = _as_index_array(b)
    if b.size == 0:
        return 0.0
    if a.size == 0:
        return math.inf
    # max-min over the full pairwise |a - b| table; sets here are small
    diffs = np.abs(b[:, None] - a[None, :])
    return float(diffs.min(axis=1).max())


def hausdorff(a, b):
    """max(d(A|B), d(B|A)); 0 when both sets empty, +inf when exactly one is."""
    a = _as_index_array(a)
    b = _as_index_array(b)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return math.inf
    return max(screening_distance(a, b), screening_distance(b, a))


def min_spacing(s0, n):
    """Smallest gap between consecutive changepoints, with 0 and n appended.

    Returns n when the set is empty (single segment).
    """
    s0 = _as_index_array(s0)
    if n < 1:
        raise ValueError("n must be >= 1")
    if s0.size and (s0[0] < 1 or s0[-1] > n - 1):
        raise ValueError("changepoint indices must lie in 1..n-1")
    bounds = np.concatenate(([0], s0, [n]))
    return int(np.min(np.diff(bounds)))


def min_gap(theta0, s0=None, tol=0.0):
    """Smallest jump magnitude min_{i in S0} |theta_{i+1} - theta_i|.

    +inf when there are no jumps. S0 defaults to changepoints(theta0, tol).
    """
    theta0 = as_signal(theta0)
    if s0 is None:
        s0 = changepoints(theta0, tol)
    s0 = _as_index_array(s0)
    if s0.size == 0:
        return math.inf
    return float(np.min(np.abs(theta0[s0] - theta0[s0 - 1])))


def second_differences(x):
    """Array of x_{i-1} - 2 x_i + x_{i+1} for i = 2..n-1 (1-based)."""
    x = as_signal(x)
    if x.size < 3:
        return np.empty(0)
    return x[:-2] - 2.0 * x[1:-1] + x[2:]


def tv2(x):
    """Total variation of the slope: sum |x_{i-1} - 2 x_i + x_{i+1}|."""
    return float(np.sum(np.abs(second_differences(x))))


def knots2(theta, tol=0.0):
    """Slope-change locations {i in 2..n-1 : |theta_{i-1} - 2 theta_i + theta_{i+1}| > tol}."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    d2 = second_differences(theta)
    return np.flatnonzero(np.abs(d2) > tol) + 2


def min_gap2(theta, tol=0.0):
    """Smallest nonzero second-difference magnitude; +inf when slope never changes."""
    d2 = second_differences(theta)
    knots = np.abs(d2) > tol
    if not np.any(knots):
        return math.inf
    return float(np.min(np.abs(d2[knots])))
