"""Command line front end: ``slrt scan|analyze|oracle|avg``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .averages import average_report
from .core import BandWindow, CouplingParseError, read_coupling_csv, sparsity_measures
from .scan import ConfigError, ScanConfig, run_scan

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _err(msg: str) -> None:
    print(f"slrt: error: {msg}", file=sys.stderr)


def _window(args, n: int) -> BandWindow:
    if args.center is None and args.half_size is None:
        return BandWindow.full(n, args.min_r, args.max_r)
    center = n // 2 if args.center is None else args.center
    half = (n // 2) if args.half_size is None else args.half_size
    return BandWindow(center, half, args.min_r, args.max_r)


def cmd_scan(args) -> int:
    try:
        cfg = ScanConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output_dir = args.out
    except (ConfigError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    try:
        manifest = run_scan(cfg, svg=args.svg)
    except OSError as exc:
        _err(str(exc))
        return EXIT_FAIL
    print(json.dumps({k: manifest[k] for k in ("rows", "tasks", "failure_fraction", "csv_blob_sha1")}))
    if manifest["failures"]:
        _err(f"{len(manifest['failures'])} of {manifest['tasks']} realizations failed")
        return EXIT_FAIL
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        x = read_coupling_csv(args.input)
        window = _window(args, x.size)
        report = sparsity_measures(x, window)
    except (CouplingParseError, OSError) as exc:
        _err(f"{args.input}: {exc}")
        return EXIT_USAGE
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    if args.svg:
        from .plots import analysis_plot

        analysis_plot(report, x, window, out / "report.svg")
    print(json.dumps({k: v for k, v in report.to_dict().items() if not k.startswith("hist")}))
    return EXIT_OK


def cmd_avg(args) -> int:
    from .response import make_spectral_weight

    try:
        x = read_coupling_csv(args.input)
    except (CouplingParseError, OSError) as exc:
        _err(f"{args.input}: {exc}")
        return EXIT_USAGE
    s = make_spectral_weight(1.0, args.shape, args.bc, 1.0)
    rep = average_report(x, s, args.probes).to_dict()
    text = json.dumps(rep, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "averages.json").write_text(text)
    print(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .dynamics import spreading_diffusion
    from .models import EnsembleSpec, build_sparse_ensemble
    from .network import ConductanceNetwork, inverse_resistivity
    from .response import fgr_rates, make_spectral_weight

    params = {"size_N": 400, "band_b": 10, "spread_sigma": 2.0, "tolerance": 0.15}
    if args.config:
        with open(args.config) as fh:
            params.update(json.load(fh))
    for key in ("size_N", "band_b", "spread_sigma", "tolerance"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    seed = args.seed if args.seed is not None else int(params.get("seed", 0))
    try:
        spec = EnsembleSpec(int(params["size_N"]), int(params["band_b"]), (), float(params["spread_sigma"]), seed)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    out = build_sparse_ensemble(spec)
    s = make_spectral_weight(1.0, "rectangular", spec.band_b, 1.0)
    rates = fgr_rates(out.coupling, out.levels, s)
    net = ConductanceNetwork(rates.rates)
    g_ends = inverse_resistivity(net, "ends")
    g_bulk = inverse_resistivity(net, "interior")
    res = spreading_diffusion(rates, spec.size_N // 2)
    rel = abs(res.fitted_diffusion / g_bulk - 1.0) if g_bulk > 0 else float("inf")
    summary = {
        "spec": {**params, "seed": seed},
        "spreading": res.to_dict(),
        "network_ends": g_ends,
        "network_interior": g_bulk,
        "relative_difference": rel,
        "agree": rel <= float(params["tolerance"]),
    }
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        res.write_csv(d / "spreading.csv")
        (d / "oracle.json").write_text(json.dumps(summary, indent=2))
        if args.svg:
            from .plots import spreading_plot

            spreading_plot(res, g_bulk, d / "spreading.svg")
    print(json.dumps(summary, indent=2))
    return EXIT_OK if summary["agree"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slrt", description="Linear and semi-linear response of sparse driven systems")
    sub = p.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scan", help="parameter scan over W, sigma, b_c or window centre")
    sc.add_argument("--config", required=True)
    sc.add_argument("--seed", type=int)
    sc.add_argument("--out")
    sc.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None)
    sc.set_defaults(func=cmd_scan)

    an = sub.add_parser("analyze", help="sparsity report and histogram of a coupling matrix")
    an.add_argument("input")
    an.add_argument("--center", type=int)
    an.add_argument("--half-size", type=int)
    an.add_argument("--min-r", type=int, default=1)
    an.add_argument("--max-r", type=int)
    an.add_argument("--out", default="analysis_out")
    an.add_argument("--svg", action=argparse.BooleanOptionalAction, default=True)
    an.set_defaults(func=cmd_analyze)

    av = sub.add_parser("avg", help="algebraic, resistor-network and reference averages of a matrix")
    av.add_argument("input")
    av.add_argument("--bc", type=float, default=10.0)
    av.add_argument("--shape", default="rectangular", choices=("rectangular", "gaussian", "lorentzian"))
    av.add_argument("--probes", default="ends", choices=("ends", "interior"))
    av.add_argument("--out")
    av.set_defaults(func=cmd_avg)

    orc = sub.add_parser("oracle", help="rate-equation spreading versus network inverse resistivity")
    orc.add_argument("--config")
    orc.add_argument("--seed", type=int)
    orc.add_argument("--size", dest="size_N", type=int)
    orc.add_argument("--band", dest="band_b", type=int)
    orc.add_argument("--sigma", dest="spread_sigma", type=float)
    orc.add_argument("--tolerance", type=float)
    orc.add_argument("--out")
    orc.add_argument("--svg", action=argparse.BooleanOptionalAction, default=False)
    orc.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
