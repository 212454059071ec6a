"""Figure rendering for simulation output.

Each experiment gets one PNG next to the summary CSV. Plots show the
median with an interquartile band where that makes sense; axes follow
the quantity being swept (log n, tau, 1-q).
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _band(ax, x, rows, prefix, color, label):
    med = np.array([r[prefix + "_med"] for r in rows], dtype=float)
    lo = np.array([r[prefix + "_q25"] for r in rows], dtype=float)
    hi = np.array([r[prefix + "_q75"] for r in rows], dtype=float)
    finite = np.isfinite(med)
    ax.plot(x[finite], med[finite], "-o", color=color, label=label, ms=4)
    ok = finite & np.isfinite(lo) & np.isfinite(hi)
    if ok.any():
        ax.fill_between(x[ok], lo[ok], hi[ok], color=color, alpha=0.2, lw=0)


def plot_haus_vs_n(rows, path):
    x = np.array([r["value"] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    _band(ax, x, rows, "d_hausdorff_raw", "tab:red", "raw changepoints")
    _band(ax, x, rows, "d_hausdorff_filtered", "tab:blue", "filtered")
    b = np.array([2.0 * r["bandwidth"] for r in rows], dtype=float)
    ax.plot(x, b, "--", color="gray", lw=1, label="2b(n)")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("Hausdorff distance to truth")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_tau_sweep(rows, path):
    x = np.array([r["value"] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    _band(ax, x, rows, "d_screen_filtered", "tab:blue", "d(kept | truth)")
    _band(ax, x, rows, "d_precision_filtered", "tab:orange",
          "d(truth | kept)")
    ax.set_xlabel("threshold tau")
    ax.set_ylabel("distance")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_q_sweep(rows, path):
    x = np.array([1.0 - r["value"] for r in rows], dtype=float)
    y = np.array([r["fpr"] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    order = np.argsort(x)
    ax.plot(x[order], y[order], "-o", color="tab:blue", ms=4,
            label="false positive rate")
    lim = max(x.max(), y.max() if y.size else 0.0, 0.05) * 1.05
    ax.plot([0, lim], [0, lim], "--", color="gray", lw=1, label="y = x")
    ax.set_xlabel("1 - q")
    ax.set_ylabel("false positive rate")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_l2_scaling(rows, path):
    x = np.array([r["value"] for r in rows], dtype=float)
    err = np.array([r["l2_error_med"] for r in rows], dtype=float)
    lam = np.array([r["lambda_med"] for r in rows], dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    ax1.plot(np.log(x), x * err, "-o", color="tab:blue", ms=4)
    ax1.set_xlabel("log n")
    ax1.set_ylabel("n * median squared error / n")
    ax2.plot(np.sqrt(x), lam, "-o", color="tab:orange", ms=4)
    ax2.set_xlabel("sqrt(n)")
    ax2.set_ylabel("median selected lambda")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_PLOTTERS = {
    "haus-vs-n": plot_haus_vs_n,
    "tau-sweep": plot_tau_sweep,
    "q-sweep": plot_q_sweep,
    "l2-scaling": plot_l2_scaling,
}


def render_figure(experiment, rows, path):
    """Render the experiment's summary figure to `path` (PNG)."""
    _PLOTTERS[experiment](rows, path)
    return path
