"""Parameter scans: build a model per grid point and realization, record the response."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .models import (
    EnsembleSpec,
    RingSpec,
    born_mean_free_path,
    build_ring,
    build_sparse_ensemble,
    drude_reference,
    open_modes,
)
from .response import (
    OccupationSpec,
    ResponseResult,
    absorption,
    default_window,
    kubo_diffusion,
    make_spectral_weight,
    slrt_detail,
)

__all__ = ["CSV_COLUMNS", "ConfigError", "ScanConfig", "compute_point", "run_scan", "task_seed"]

CSV_COLUMNS = (
    "spec_hash", "param", "realization", "seed",
    "D_LRT", "D_SLRT", "G_LRT", "G_SLRT", "g_c", "g_s", "ref",
)
SCAN_PARAMETERS = ("disorder_W", "spread_sigma", "band_bc", "window_center")


class ConfigError(ValueError):
    pass


@dataclass
class ScanConfig:
    model: dict
    scan_parameter: str
    grid: list
    realizations: int = 1
    occupation: dict = field(default_factory=lambda: {"kind": "microcanonical"})
    driving: dict = field(default_factory=dict)
    window_size: int | None = None
    probes: str = "ends"
    kappa: float = 1.0
    output_dir: str = "scan_out"
    seed: int = 0
    svg: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        kind = self.model.get("kind")
        if kind not in ("ring", "ensemble"):
            raise ConfigError(f"model.kind must be 'ring' or 'ensemble', got {kind!r}")
        if self.scan_parameter not in SCAN_PARAMETERS:
            raise ConfigError(f"scan_parameter must be one of {SCAN_PARAMETERS}")
        if kind == "ring" and self.scan_parameter == "spread_sigma":
            raise ConfigError("spread_sigma applies to ensembles only")
        if kind == "ensemble" and self.scan_parameter == "disorder_W":
            raise ConfigError("disorder_W applies to rings only")
        if not self.grid:
            raise ConfigError("grid must be nonempty")
        if int(self.realizations) < 1:
            raise ConfigError("realizations must be >= 1")
        if self.probes not in ("ends", "interior"):
            raise ConfigError("probes must be 'ends' or 'interior'")
        try:
            self.model_spec(self.grid[0], 0)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid model template: {exc}") from exc

    @classmethod
    def from_dict(cls, data: dict) -> ScanConfig:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        missing = {"model", "scan_parameter", "grid"} - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> ScanConfig:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def driving_params(self) -> dict:
        d = {"rms_drive": 1.0, "shape": "rectangular", "band_bc": 10.0}
        d.update(self.driving)
        return d

    def resolved(self) -> dict:
        """Config with every default written out, as stored in the manifest."""
        out = asdict(self)
        out["driving"] = self.driving_params()
        out["model"] = {"kind": self.model["kind"], **asdict(self.model_spec(self.grid[0], 0))}
        out["model"].pop("seed", None)
        out["model"].pop(self.scan_parameter, None)
        out["window_size"] = self.window_size
        return out

    def spec_hash(self) -> str:
        # where and how results are written does not change them
        physics = {k: v for k, v in self.resolved().items() if k not in ("output_dir", "svg")}
        blob = json.dumps(physics, sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:12]

    def model_spec(self, value, seed: int):
        tmpl = {k: v for k, v in self.model.items() if k != "kind"}
        if self.scan_parameter in ("disorder_W", "spread_sigma"):
            tmpl[self.scan_parameter] = float(value)
        tmpl["seed"] = int(seed)
        if self.model["kind"] == "ring":
            return RingSpec(**tmpl)
        if "profile" in tmpl:
            tmpl["profile"] = tuple(tmpl["profile"])
        return EnsembleSpec(**tmpl)


def task_seed(seed: int, grid_index: int, realization: int) -> int:
    return int(np.random.SeedSequence([seed, grid_index, realization]).generate_state(1)[0])


def _occupation(cfg: dict, center: int, window_size: int) -> OccupationSpec:
    kind = cfg.get("kind", "microcanonical")
    if kind == "microcanonical":
        half = cfg.get("half_width")
        half = (window_size - 1) // 2 if half is None else int(half)
        return OccupationSpec.microcanonical(int(cfg.get("n0", center)), half)
    if kind == "boltzmann":
        return OccupationSpec.boltzmann(float(cfg["temperature"]))
    if kind == "fermi_window":
        return OccupationSpec.fermi_window(float(cfg["fermi_energy"]), float(cfg["temperature"]))
    raise ConfigError(f"unknown occupation kind {kind!r}")


def compute_point(config: ScanConfig, value, seed: int) -> ResponseResult:
    """Build one model realization and evaluate LRT and SLRT response on it."""
    spec = config.model_spec(value, seed)
    ring = isinstance(spec, RingSpec)
    out = build_ring(spec) if ring else build_sparse_ensemble(spec)
    levels, x = out.levels, out.coupling
    n = levels.size
    size = config.window_size or (max(2, n // 4) if ring else 100)
    size = min(size, n)
    center = int(value) if config.scan_parameter == "window_center" else n // 2
    window = default_window(n, center, size)
    lo, hi = window.bounds(n)
    rho = levels.measured_density(lo, hi)

    drive = config.driving_params()
    band_bc = float(value) if config.scan_parameter == "band_bc" else float(drive["band_bc"])
    s = make_spectral_weight(float(drive["rms_drive"]), drive["shape"], band_bc / rho, rho)
    occ = _occupation(config.occupation, lo + size // 2, size)

    d_lrt = kubo_diffusion(x, levels, s, occ)
    det = slrt_detail(x, levels, s, window, probes=config.probes)
    d_slrt = det.diffusion
    rho_occ = occ.density(levels) if occ.kind != "boltzmann" else rho
    g_lrt = rho_occ * d_lrt / s.intensity
    g_slrt = det.density * d_slrt / s.intensity

    if ring:
        e_f = float(levels.energies[lo:hi].mean())
        ell = born_mean_free_path(spec.disorder_W, spec.hopping_c, config.kappa)
        modes = open_modes(spec.width_M, spec.hopping_c, e_f)
        ref = drude_reference(modes, ell, spec.length_L) if math.isfinite(ell) else math.inf
        g_c = g_lrt / ref if math.isfinite(ref) else 0.0
        g_s = g_slrt / g_lrt if g_lrt > 0 else 0.0
    else:
        prof = spec.band_profile()
        r = np.arange(1, min(prof.size, s.r_max + 1))
        mean_x = 2.0 * float(np.sum(s.band_weight[r] * prof[r]))
        ref = math.pi * rho * mean_x * s.intensity
        g_c = d_lrt / ref if ref > 0 else 0.0
        g_s = d_slrt / d_lrt if d_lrt > 0 else 0.0

    if occ.kind == "boltzmann":
        ear_lrt = absorption(d_lrt, occ, n)
        ear_slrt = absorption(d_slrt, occ, n)
    else:
        ear_lrt = absorption(d_lrt, occ, density=rho_occ)
        ear_slrt = absorption(d_slrt, occ, density=det.density)
    return ResponseResult(
        d_lrt, d_slrt, g_lrt, g_slrt, g_c, g_s, ear_lrt, ear_slrt, ref,
        connected=det.connected, excluded_pairs=len(det.rates.excluded_pairs),
    )


def _task(args):
    config, gi, value, rz, seed = args
    try:
        return gi, rz, seed, compute_point(config, value, seed), None
    except Exception as exc:  # recorded in the manifest
        return gi, rz, seed, None, f"{type(exc).__name__}: {exc}"


def _workers() -> int:
    try:
        n = int(os.environ.get("SLRT_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, min(n, os.cpu_count() or 1))


def _fmt(v: float) -> str:
    return repr(float(v))


def run_scan(config: ScanConfig, svg: bool | None = None) -> dict:
    """Run every (grid point, realization) task and write CSV, manifest and plot.

    Returns the manifest. Rows are ordered by grid index then realization,
    independent of worker completion order.
    """
    t0 = time.perf_counter()
    out_dir = Path(config.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    tasks = [
        (config, gi, value, rz, task_seed(config.seed, gi, rz))
        for gi, value in enumerate(config.grid)
        for rz in range(config.realizations)
    ]
    workers = _workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    results.sort(key=lambda r: (r[0], r[1]))

    h = config.spec_hash()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    failures = []
    rows = []
    for gi, rz, seed, res, err in results:
        value = config.grid[gi]
        if err is not None:
            failures.append({"grid_index": gi, "param": value, "realization": rz, "seed": seed, "error": err})
            continue
        row = (value, rz, res)
        rows.append(row)
        writer.writerow([
            h, _fmt(value), rz, seed,
            _fmt(res.d_lrt), _fmt(res.d_slrt), _fmt(res.g_lrt), _fmt(res.g_slrt),
            _fmt(res.g_c), _fmt(res.g_s), _fmt(res.reference),
        ])
    data = buf.getvalue().encode()
    csv_path = out_dir / "scan.csv"
    csv_path.write_bytes(data)

    blob_hash = hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
    manifest = {
        "version": __version__,
        "config": config.resolved(),
        "spec_hash": h,
        "scan_parameter": config.scan_parameter,
        "csv": csv_path.name,
        "csv_blob_sha1": blob_hash,
        "tasks": len(tasks),
        "rows": len(rows),
        "failures": failures,
        "failure_fraction": len(failures) / len(tasks),
        "workers": workers,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    if config.svg if svg is None else svg:
        from .plots import scan_plot

        scan_plot(rows, config, out_dir / "scan.svg")
        manifest["svg"] = "scan.svg"
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
