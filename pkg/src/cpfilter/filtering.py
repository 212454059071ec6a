"""Second-difference-of-means filter and the filtered/candidate/reduced sets.

The filter at location i with bandwidth b is the difference between the
mean of the b values right of i and the mean of the b values at and left
of i. A step of height h produces a triangular response peaking at the
step with value h, which is what makes thresholding |F| a changepoint
detector. Locations are 1-based and run over i = b..n-b.

Note the threshold convention: locations with |F_i| >= tau are kept, so
tau = 0 selects every valid location, not none of them.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .metrics import as_signal, changepoints


@dataclass
class FilterProfile:
    """Filter values over the valid locations b..n-b of a length-n signal."""

    b: int
    n: int
    values: np.ndarray

    @property
    def locations(self):
        return np.arange(self.b, self.n - self.b + 1)

    def value_at(self, i):
        """F_i by 1-based location index."""
        if not self.b <= i <= self.n - self.b:
            raise ValueError("location outside b..n-b")
        return float(self.values[i - self.b])


@dataclass
class FilteredSet:
    """Locations whose absolute filter value meets a threshold."""

    locations: np.ndarray
    tau: float
    b: int
    variant: str = "full"


def auto_bandwidth(n):
    """Default bandwidth floor(0.25 * ln(n)^2), clamped into [1, (n-1)//2].

    The clamp only binds for very short signals; a warning is issued
    when it does since the rule's asymptotics no longer mean much there.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2 for a bandwidth")
    b = int(0.25 * math.log(n) ** 2)
    hi = max((n - 1) // 2, 1)
    if b < 1 or b > hi:
        clamped = min(max(b, 1), hi)
        warnings.warn(
            f"bandwidth rule gave b={b} for n={n}; clamped to {clamped}",
            stacklevel=2)
        b = clamped
    return b


def haar_filter(theta, b):
    """Filter profile F_i = mean(theta[i+1..i+b]) - mean(theta[i-b+1..i]).

    Computed with prefix sums, O(n) total. Requires n >= 2b.
    """
    theta = as_signal(theta)
    b = int(b)
    n = theta.size
    if b < 1:
        raise ValueError("bandwidth must be a positive integer")
    if n < 2 * b:
        raise ValueError("signal too short for bandwidth: need n >= 2b")
    p = np.concatenate(([0.0], np.cumsum(theta)))
    i = np.arange(b, n - b + 1)
    values = (p[i + b] - 2.0 * p[i] + p[i - b]) / b
    return FilterProfile(b=b, n=n, values=values)


def full_filter_set(theta, b, tau):
    """All locations i in b..n-b with |F_i| >= tau."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    prof = haar_filter(theta, b)
    keep = np.abs(prof.values) >= tau
    return FilteredSet(locations=prof.locations[keep], tau=float(tau),
                       b=prof.b, variant="full")


def candidate_set(theta, b, tol=0.0):
    """Locations within the valid range that sit at distance 0 or b from a
    jump of theta, plus the two boundary locations b and n-b.

    Size is at most 3*|S(theta)| + 2 by construction.
    """
    theta = as_signal(theta)
    b = int(b)
    n = theta.size
    if b < 1:
        raise ValueError("bandwidth must be a positive integer")
    if n < 2 * b:
        raise ValueError("signal too short for bandwidth: need n >= 2b")
    s = changepoints(theta, tol)
    cand = np.concatenate((s, s - b, s + b, [b, n - b]))
    cand = cand[(cand >= b) & (cand <= n - b)]
    return np.unique(cand)


def reduced_filter_set(theta, b, tau, tol=0.0):
    """Filter thresholding restricted to the candidate set."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    prof = haar_filter(theta, b)
    cand = candidate_set(theta, b, tol)
    keep = np.abs(prof.values[cand - b]) >= tau
    return FilteredSet(locations=cand[keep], tau=float(tau),
                       b=prof.b, variant="reduced")


def local_maxima(profile):
    """Locations where |F| peaks.

    Interior locations need one strictly smaller neighbor and one no
    larger; the two boundary locations need their single neighbor to be
    strictly smaller. A profile with a single location has no neighbors
    and returns empty.
    """
    v = np.abs(profile.values)
    m = v.size
    if m <= 1:
        return np.empty(0, dtype=int)
    out = np.zeros(m, dtype=bool)
    left = v[:-2]
    mid = v[1:-1]
    right = v[2:]
    out[1:-1] = ((left < mid) & (right <= mid)) | ((left <= mid) & (right < mid))
    out[0] = v[1] < v[0]
    out[-1] = v[-2] < v[-1]
    return profile.locations[out]


def ball_linear_max(a, c, r):
    """max |a.x| over the ball |x - c| <= r, equal to |a.c| + r*|a|."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if a.shape != c.shape:
        raise ValueError("a and c must have equal length")
    if r < 0:
        raise ValueError("r must be nonnegative")
    return float(abs(a @ c) + r * np.linalg.norm(a))


def ball_linear_min(a, c, r):
    """min |a.x| over the ball |x - c| <= r, equal to |a.c| - r*|a|.

    Defined only when the ball avoids the hyperplane a.x = 0, i.e. when
    |a.c| - r*|a| >= 0; otherwise raises.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if a.shape != c.shape:
        raise ValueError("a and c must have equal length")
    if r < 0:
        raise ValueError("r must be nonnegative")
    val = abs(a @ c) - r * np.linalg.norm(a)
    if val < 0:
        raise ValueError("ball crosses the hyperplane a.x = 0; minimum not defined")
    return float(val)
