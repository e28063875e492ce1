"""Spreading of a localized packet under golden-rule rates, against [[w]].

    python scripts/spreading_demo.py --sigma 2 --out out/spreading

Integrates the master equation from a single level, fits the linear part
of Var(n)(t) and compares the slope with the network inverse resistivity
measured at the ends and in the interior. A walker sample is overlaid as a
second estimate.
"""

import argparse
from pathlib import Path

import numpy as np

from slrt.dynamics import sample_walkers, spreading_diffusion
from slrt.models import EnsembleSpec, build_sparse_ensemble
from slrt.network import ConductanceNetwork, inverse_resistivity
from slrt.plots import spreading_plot
from slrt.response import fgr_rates, make_spectral_weight


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--size", type=int, default=400)
    p.add_argument("--band", type=int, default=10)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=1001)
    p.add_argument("--walkers", type=int, default=2000)
    p.add_argument("--out")
    args = p.parse_args()

    out = build_sparse_ensemble(EnsembleSpec(args.size, args.band, (), args.sigma, args.seed))
    w = fgr_rates(out.coupling, out.levels, make_spectral_weight(1.0, "rectangular", float(args.band), 1.0))
    net = ConductanceNetwork(w.rates)
    g_ends, g_bulk = inverse_resistivity(net, "ends"), inverse_resistivity(net, "interior")
    res = spreading_diffusion(w, args.size // 2)
    t = res.times[:: max(1, res.times.size // 12)]
    var_mc = sample_walkers(w.rates, args.size // 2, t, args.walkers, seed=args.seed)

    print(f"fitted D          {res.fitted_diffusion:.5g}  window {res.fit_window[0]:.3g}..{res.fit_window[1]:.3g}")
    print(f"[[w]] ends        {g_ends:.5g}")
    print(f"[[w]] interior    {g_bulk:.5g}  (rel. diff {res.fitted_diffusion / g_bulk - 1:+.3f})")
    late = (t >= res.fit_window[0]) & (t <= res.fit_window[1])
    slope = np.polyfit(t[late], var_mc[late], 1)[0] / 2 if late.sum() > 1 else float("nan")
    print(f"walker estimate   {slope:.5g}")
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        res.write_csv(d / "spreading.csv")
        spreading_plot(res, g_bulk, d / "spreading.svg")
        print(f"wrote {d}/spreading.csv and spreading.svg")


if __name__ == "__main__":
    main()
