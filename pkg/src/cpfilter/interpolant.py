"""Lower interpolant of a signal relative to a set of block boundaries.

Given block boundaries S0 (with 0 and n appended), the lower interpolant
z agrees with x at the first and last position of every block, satisfies
|z_j| <= |x_j| with matching signs elsewhere, and is piecewise monotone:
within each block |z| is nonincreasing up to a switch position and
nondecreasing after it. Its purpose is to split the total variation of x
exactly into the part carried by z and the part carried by x - z while
z stays no larger than x in every norm that matters; the five relations
are checkable through `verify_interpolant_properties`.

Construction per block: with anchor signs g+ = sign of the first block
entry and g- = sign of the last, form the running prefix minima of the
positive parts of g+ * x (descending envelope from the left) and the
running suffix minima of the positive parts of g- * x (ascending
envelope to the right), then splice the two at the earliest switch index
that keeps both envelopes at their attained minima across the junction.
"""

from dataclasses import dataclass

import math

import numpy as np

from .metrics import as_signal, min_spacing


def _block_bounds(s0, n):
    s0 = np.asarray(s0, dtype=int)
    if s0.ndim == 0:
        s0 = s0.reshape(1)
    s0 = np.unique(s0)
    if s0.size and (s0[0] < 1 or s0[-1] > n - 1):
        raise ValueError("changepoint indices must lie in 1..n-1")
    return np.concatenate(([0], s0, [n]))


def _interpolate_block(v):
    """Return (z_block, j_prime) for one block of values."""
    L = v.size
    if L == 1:
        return v.copy(), 1
    g_plus = np.sign(v[0])
    g_minus = np.sign(v[-1])

    pos_left = np.maximum(g_plus * v, 0.0)
    pmin = np.minimum.accumulate(pos_left)
    z_plus = g_plus * pmin

    pos_right = np.maximum(g_minus * v, 0.0)
    smin = np.minimum.accumulate(pos_right[::-1])[::-1]
    z_minus = g_minus * smin

    # earliest switch keeping the left envelope already at its final
    # minimum beyond the junction; the right envelope then still sits at
    # its own minimum through the junction
    k_plus = int(np.argmax(pmin == pmin[-1])) + 1  # first attainment, 1-based
    j_prime = max(1, k_plus - 1)

    z = np.concatenate((z_plus[:j_prime], z_minus[j_prime:]))
    return z, j_prime


@dataclass
class InterpolantResult:
    """Interpolant z with its per-block switch positions.

    switch_points holds one global 1-based index per block; a length-1
    block reports its only position.
    """

    z: np.ndarray
    switch_points: np.ndarray
    blocks: list


def lower_interpolant(x, s0):
    """Construct the lower interpolant of x for block boundaries s0."""
    x = as_signal(x)
    n = x.size
    bounds = _block_bounds(s0, n)
    z = np.empty(n)
    switches = []
    blocks = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        zb, j_prime = _interpolate_block(x[lo:hi])
        z[lo:hi] = zb
        switches.append(int(lo + j_prime))
        blocks.append((int(lo), int(hi)))
    return InterpolantResult(z=z, switch_points=np.array(switches, dtype=int),
                             blocks=blocks)


def _piece_flags(v, tol):
    """Prefix/suffix feasibility flags for the switch-point search.

    pref[t]: |v| nonincreasing and v monotone on v[0..t].
    suff[t]: |v| nondecreasing and v monotone on v[t..].
    """
    L = v.size
    a = np.abs(v)
    pref = np.empty(L, dtype=bool)
    up = True
    dn = True
    ni = True
    pref[0] = True
    for t in range(1, L):
        ni = ni and a[t] <= a[t - 1] + tol
        up = up and v[t] >= v[t - 1] - tol
        dn = dn and v[t] <= v[t - 1] + tol
        pref[t] = ni and (up or dn)
    suff = np.empty(L, dtype=bool)
    up = True
    dn = True
    nd = True
    suff[L - 1] = True
    for t in range(L - 2, -1, -1):
        nd = nd and a[t] <= a[t + 1] + tol
        up = up and v[t + 1] >= v[t] - tol
        dn = dn and v[t + 1] <= v[t] + tol
        suff[t] = nd and (up or dn)
    return pref, suff


def check_class_M(z, s0, tol=0.0):
    """Piecewise-monotonicity membership test.

    True iff each block admits a switch position t' with |z|
    nonincreasing up to t' and nondecreasing from t' on, z itself being
    monotone on both pieces (which is how sign changes inside a piece
    stay consistent: the sequence may pass through zero once but cannot
    oscillate).
    """
    z = as_signal(z)
    bounds = _block_bounds(s0, z.size)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        pref, suff = _piece_flags(z[lo:hi], tol)
        if not np.any(pref & suff):
            return False
    return True


def verify_interpolant_properties(x, z, s0, w_n=None):
    """Evaluate the five interpolant relations and report each one.

    Relations: (1) the off-boundary total variation of x splits exactly
    into that of z plus that of x - z; (2) the boundary jump sizes of x
    and z agree; (3) the boundary jumps of z are controlled by its
    off-boundary variation plus 4*sqrt(s0/W)*|z|_2; (4) |z|_2 <= |x|_2;
    (5) |x-z|_2 <= |x|_2. Tolerance is 1e-9 * (1 + |x|_2).
    """
    x = as_signal(x)
    z = as_signal(z)
    if x.size != z.size:
        raise ValueError("x and z must have equal length")
    n = x.size
    bounds = _block_bounds(s0, n)
    s0_arr = bounds[1:-1]
    if w_n is None:
        w_n = min_spacing(s0_arr, n)

    jump_mask = np.zeros(max(n - 1, 0), dtype=bool)
    jump_mask[s0_arr - 1] = True

    dx = np.abs(np.diff(x))
    dz = np.abs(np.diff(z))
    dxz = np.abs(np.diff(x - z))

    tol = 1e-9 * (1.0 + float(np.linalg.norm(x)))
    s0_count = s0_arr.size
    z2 = float(np.linalg.norm(z))
    x2 = float(np.linalg.norm(x))

    report = {}

    lhs = float(np.sum(dx[~jump_mask]))
    rhs = float(np.sum(dz[~jump_mask]) + np.sum(dxz[~jump_mask]))
    report["tv_split_off_boundary"] = {
        "lhs": lhs, "rhs": rhs, "pass": abs(lhs - rhs) <= tol}

    lhs = float(np.sum(dx[jump_mask]))
    rhs = float(np.sum(dz[jump_mask]))
    report["boundary_jumps_match"] = {
        "lhs": lhs, "rhs": rhs, "pass": abs(lhs - rhs) <= tol}

    lhs = float(np.sum(dz[jump_mask]))
    rhs = float(np.sum(dz[~jump_mask]) + 4.0 * math.sqrt(s0_count / w_n) * z2)
    report["boundary_jumps_bounded"] = {
        "lhs": lhs, "rhs": rhs, "pass": lhs <= rhs + tol}

    report["z_norm_bounded"] = {"lhs": z2, "rhs": x2, "pass": z2 <= x2 + tol}

    lhs = float(np.linalg.norm(x - z))
    report["residual_norm_bounded"] = {
        "lhs": lhs, "rhs": x2, "pass": lhs <= x2 + tol}

    report["all_pass"] = all(v["pass"] for k, v in report.items()
                             if isinstance(v, dict))
    return report
