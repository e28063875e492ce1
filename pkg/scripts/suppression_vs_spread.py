"""Resistor-network suppression factor g_s against the log-box spread sigma.

    python scripts/suppression_vs_spread.py --out out/suppression.svg

For each sigma a batch of banded ensembles is drawn and the median of
g_s = <<X>>_s / <<X>>_a is reported with its interquartile range, next to
the median/mean ratio q of the matrix elements.
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from slrt.averages import average_report  # noqa: E402
from slrt.core import BandWindow, sparsity_measures  # noqa: E402
from slrt.models import EnsembleSpec, build_sparse_ensemble  # noqa: E402
from slrt.response import make_spectral_weight  # noqa: E402


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sigmas", type=float, nargs="+", default=[0, 1, 2, 3, 4, 6, 8, 11, 14])
    p.add_argument("--size", type=int, default=200)
    p.add_argument("--band", type=int, default=10)
    p.add_argument("--samples", type=int, default=40)
    p.add_argument("--probes", choices=("ends", "interior"), default="ends")
    p.add_argument("--out")
    args = p.parse_args()

    s = make_spectral_weight(1.0, "rectangular", float(args.band), 1.0)
    window = BandWindow(args.size // 2, args.size // 4, max_r=args.band)
    rows = []
    print(f"{'sigma':>6} {'g_s':>8} {'q25':>8} {'q75':>8} {'q':>9}")
    for sig in args.sigmas:
        g, q = [], []
        for seed in range(args.samples):
            x = build_sparse_ensemble(EnsembleSpec(args.size, args.band, (), sig, seed)).coupling
            g.append(average_report(x, s, args.probes).g_s)
            q.append(sparsity_measures(x, window).q_ratio)
        lo, med, hi = np.percentile(g, [25, 50, 75])
        rows.append((sig, lo, med, hi, np.median(q)))
        print(f"{sig:6.1f} {med:8.4f} {lo:8.4f} {hi:8.4f} {np.median(q):9.2e}")

    if args.out:
        a = np.array(rows)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.fill_between(a[:, 0], a[:, 1], a[:, 3], alpha=0.3)
        ax.semilogy(a[:, 0], a[:, 2], "o-", label="median $g_s$")
        ax.semilogy(a[:, 0], a[:, 4], "s--", label="median/mean $q$")
        ax.set_xlabel(r"log-box spread $\sigma$")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
