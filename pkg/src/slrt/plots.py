"""Static SVG figures for scans and matrix analysis."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "slrt"
_META = {"Date": None, "Creator": None}


def _medians(rows, attr):
    by = {}
    for value, _, res in rows:
        by.setdefault(float(value), []).append(getattr(res, attr))
    xs = sorted(by)
    return np.array(xs), np.array([np.median(by[x]) for x in xs])


def scan_plot(rows, config, path) -> None:
    """Medians over realizations of the LRT, SLRT and reference curves, linear and log scale."""
    ring = config.model["kind"] == "ring"
    keys = [("g_lrt", "LRT"), ("g_slrt", "SLRT"), ("reference", "Drude")] if ring else [
        ("d_lrt", "LRT"), ("d_slrt", "SLRT"), ("reference", "flat-band reference")]
    fig, axes = plt.subplots(2, 1, figsize=(5, 7), sharex=True)
    for ax, log in zip(axes, (False, True)):
        for attr, label in keys:
            x, y = _medians(rows, attr)
            ok = np.isfinite(y) & ((y > 0) if log else True)
            if ok.any():
                ax.plot(x[ok], y[ok], "o-", label=label, ms=3)
        if log:
            ax.set_yscale("log")
        ax.set_ylabel("G" if ring else "D")
    axes[0].legend(frameon=False)
    axes[1].set_xlabel(config.scan_parameter)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def analysis_plot(report, x, window, path) -> None:
    """Log-binned element histogram with a mean marker, and mean/median versus distance."""
    from .core import in_band_elements

    fig, (h_ax, r_ax) = plt.subplots(2, 1, figsize=(5, 7))
    edges, counts = report.hist_edges, report.hist_counts
    if counts.size:
        centers = np.sqrt(edges[:-1] * edges[1:])
        h_ax.bar(centers, counts, width=np.diff(edges), align="center", edgecolor="k", alpha=0.6)
        h_ax.set_xscale("log")
    if report.mean > 0:
        h_ax.axvline(report.mean, color="r", label="mean")
        h_ax.axvline(report.median, color="b", ls="--", label="median")
        h_ax.legend(frameon=False)
    h_ax.set_xlabel("in-band element")
    h_ax.set_ylabel("count")

    vals, r = in_band_elements(x, window)
    rs = np.unique(r)
    means = [vals[r == k].mean() for k in rs]
    meds = [np.sort(vals[r == k])[(np.sum(r == k) - 1) // 2] for k in rs]
    r_ax.plot(rs, means, "r-", label="mean")
    r_ax.plot(rs, meds, "b--", label="median")
    if np.all(np.asarray(meds) > 0) and np.all(np.asarray(means) > 0):
        r_ax.set_yscale("log")
    r_ax.set_xlabel("|n - m|")
    r_ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def spreading_plot(result, network_value, path) -> None:
    """Variance growth with the fitted line and the slope implied by the network."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    t, v = result.times, result.variances
    ax.plot(t, v, "k-", label="Var(n)")
    t0, t1 = result.fit_window
    ax.axvspan(t0, t1, color="0.9", label="fit window")
    ax.plot(t, 2 * result.fitted_diffusion * t, "r--", label="2 D t (fit slope)")
    ax.plot(t, 2 * network_value * t, "b:", label="2 [[w]] t")
    ax.set_ylim(0, 1.1 * v.max())
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
