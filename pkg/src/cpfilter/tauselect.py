"""Permutation-based selection of the filter threshold.

The idea: fit once, then repeatedly permute the residuals, add them back
onto the fit, rerun the entire fitting pipeline, and look at the largest
filter magnitude appearing at locations far (more than one bandwidth)
from the original fit's changepoints. Those locations carry no real
signal, so their filter values calibrate how big |F| gets from noise
alone; the selected threshold is an upper quantile of the B recorded
maxima.
"""

import math
from dataclasses import dataclass

import numpy as np

from .filtering import haar_filter
from .metrics import as_signal, changepoints


def upper_quantile(values, q):
    """Nearest-rank upper q-quantile: smallest value covering a q fraction."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("quantile of an empty batch")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    rank = max(1, math.ceil(q * values.size - 1e-12))
    return float(np.sort(values)[rank - 1])


@dataclass
class TauSelection:
    """Selected threshold plus the permutation maxima behind it."""

    tau_hat: float
    per_permutation_maxima: np.ndarray
    config: dict


def select_tau(y, fit, B=100, b=None, q=0.95, seed=0, jump_tol=0.0):
    """Choose the filter threshold by residual permutation.

    Parameters
    ----------
    y : array_like
        Observed signal.
    fit : callable
        Deterministic map signal -> fitted values, rerunning whatever
        tuning it embeds (CV included) on each call.
    B : int
        Number of permutations, >= 1.
    b : int
        Filter bandwidth; requires n >= 2b.
    q : float
        Quantile level in (0, 1).
    seed : int
        Base seed; permutation k uses seed ^ k.
    jump_tol : float
        Tolerance for reading changepoints off the initial fit.

    Returns
    -------
    TauSelection
    """
    y = as_signal(y)
    if B < 1:
        raise ValueError("B must be >= 1")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    if b is None:
        raise ValueError("bandwidth b is required")
    b = int(b)
    n = y.size
    if b < 1:
        raise ValueError("bandwidth must be a positive integer")
    if n < 2 * b:
        raise ValueError("signal too short for bandwidth: need n >= 2b")

    theta = np.asarray(fit(y), dtype=float)
    if theta.shape != y.shape:
        raise ValueError("fit handle must return a signal of equal length")
    resid = y - theta
    s_tilde = changepoints(theta, jump_tol)

    locations = np.arange(b, n - b + 1)
    if s_tilde.size == 0:
        qualifies = np.ones(locations.size, dtype=bool)
    else:
        nearest = np.min(np.abs(locations[:, None] - s_tilde[None, :]), axis=1)
        qualifies = nearest > b

    seed = int(seed)
    maxima = np.empty(B)
    for k in range(1, B + 1):
        rng = np.random.default_rng(seed ^ k)
        y_perm = theta + rng.permutation(resid)
        theta_perm = np.asarray(fit(y_perm), dtype=float)
        values = haar_filter(theta_perm, b).values
        if np.any(qualifies):
            maxima[k - 1] = np.max(np.abs(values[qualifies]))
        else:
            maxima[k - 1] = 0.0

    tau_hat = upper_quantile(maxima, q)
    return TauSelection(tau_hat=tau_hat, per_permutation_maxima=maxima,
                        config={"B": B, "b": b, "q": q, "seed": seed})
