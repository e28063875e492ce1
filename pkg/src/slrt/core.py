"""Level sets, coupling matrices, driving weights and sparsity diagnostics."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "BandWindow",
    "CouplingMatrix",
    "LevelSet",
    "SparsityReport",
    "SpectralWeight",
    "band_profile",
    "in_band_elements",
    "lower_median",
    "read_coupling_csv",
    "sparsity_measures",
    "write_coupling_csv",
]

CSV_MAGIC = "slrt-coupling v1"


@dataclass(frozen=True)
class LevelSet:
    """Ordered unperturbed energies and their mean density of states."""

    energies: np.ndarray
    density: float

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float).copy()
        if e.ndim != 1 or e.size == 0:
            raise ValueError("energies must be a nonempty 1d sequence")
        if np.any(np.diff(e) < 0):
            raise ValueError("energies must be non-decreasing")
        if not self.density > 0:
            raise ValueError(f"density must be positive, got {self.density}")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "density", float(self.density))

    @classmethod
    def from_energies(cls, energies) -> LevelSet:
        e = np.asarray(energies, dtype=float)
        return cls(e, _mean_density(e))

    @classmethod
    def uniform(cls, n: int, spacing: float = 1.0, offset: float = 0.0) -> LevelSet:
        return cls(offset + spacing * np.arange(n), 1.0 / spacing)

    @property
    def size(self) -> int:
        return self.energies.size

    def measured_density(self, lo: int = 0, hi: int | None = None) -> float:
        return _mean_density(self.energies[lo:hi])

    def is_roughly_uniform(self, tol: float = 0.2) -> bool:
        if self.size < 2:
            return True
        return abs(self.measured_density() / self.density - 1.0) <= tol


def _mean_density(e: np.ndarray) -> float:
    if e.size < 2:
        return 1.0
    span = e[-1] - e[0]
    if span <= 0:
        raise ValueError("cannot infer a density from degenerate energies")
    return (e.size - 1) / span


@dataclass(frozen=True)
class CouplingMatrix:
    """Squared couplings ``X = |V_nm|**2``: symmetric, nonnegative, zero diagonal."""

    elements: np.ndarray

    def __post_init__(self):
        x = np.array(self.elements, dtype=float)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("coupling matrix has non-finite entries")
        if np.any(x < 0):
            raise ValueError("coupling matrix entries must be nonnegative")
        if not np.allclose(x, x.T, rtol=1e-10, atol=1e-300):
            raise ValueError("coupling matrix must be symmetric")
        x = 0.5 * (x + x.T)
        np.fill_diagonal(x, 0.0)
        x.setflags(write=False)
        object.__setattr__(self, "elements", x)

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    def scaled(self, lam: float) -> CouplingMatrix:
        return CouplingMatrix(lam * self.elements)

    def submatrix(self, lo: int, hi: int) -> CouplingMatrix:
        return CouplingMatrix(self.elements[lo:hi, lo:hi])


@dataclass(frozen=True)
class SpectralWeight:
    """Driving intensity plus the normalized band weight ``F(r)``.

    ``band_weight[r]`` holds ``F(r) = F(-r)`` for ``r = 0..r_max`` with
    ``band_weight[0] == 0``; the two-sided sum ``2 * band_weight.sum()`` is 1.
    ``line`` maps an index distance ``x = density*|omega|`` (not necessarily
    an integer) to the one-sided weight, with ``line(r) == F(r)`` on the
    integers. The broadened delta function is ``density * line(density*|omega|)``
    so the driving spectrum is ``2 pi rms**2 density line(density |omega|)``.
    """

    rms_drive: float
    band_weight: np.ndarray
    cutoff_band: float
    density: float = 1.0
    shape: str = "custom"
    line: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        f = np.asarray(self.band_weight, dtype=float).copy()
        if f.ndim != 1 or f.size < 2:
            raise ValueError("band weight needs at least one nonzero range")
        if f[0] != 0:
            raise ValueError("F(0) must be absent (zero)")
        if np.any(f < 0):
            raise ValueError("band weight must be nonnegative")
        total = 2.0 * f.sum()
        if not abs(total - 1.0) <= 1e-12:
            raise ValueError(f"band weight must be normalized, sum F = {total!r}")
        if not self.rms_drive > 0:
            raise ValueError("rms drive must be positive")
        if not self.density > 0:
            raise ValueError("density must be positive")
        f.setflags(write=False)
        object.__setattr__(self, "band_weight", f)
        if self.line is None:
            object.__setattr__(self, "line", _interpolated_line(f))

    @classmethod
    def from_band_weight(cls, weights, rms_drive: float = 1.0, density: float = 1.0) -> SpectralWeight:
        """Normalize arbitrary nonnegative one-sided weights ``weights[r-1]`` for ``r >= 1``."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with a positive sum")
        f = np.concatenate([[0.0], w / (2.0 * w.sum())])
        r = np.arange(f.size)
        width = float(np.sqrt(2.0 * np.sum(f * r * r)))
        return cls(rms_drive, f, width, density)

    @property
    def intensity(self) -> float:
        """Mean square of the driving rate, the prefactor of the spectrum."""
        return self.rms_drive**2

    @property
    def r_max(self) -> int:
        return self.band_weight.size - 1

    def weight(self, r) -> np.ndarray:
        """``F(r)`` for integer ``r`` of either sign (zero outside support)."""
        r = np.abs(np.asarray(r))
        out = np.zeros(r.shape)
        inside = r <= self.r_max
        out[inside] = self.band_weight[r[inside]]
        return out

    def as_dict(self) -> dict[int, float]:
        return {
            s * r: float(self.band_weight[r])
            for r in range(1, self.band_weight.size)
            if self.band_weight[r] > 0
            for s in (-1, 1)
        }

    def weight_matrix(self, n: int) -> np.ndarray:
        idx = np.arange(n)
        return self.weight(idx[:, None] - idx[None, :])

    def delta_c(self, omega) -> np.ndarray:
        """Broadened delta function, unit area in ``omega`` up to discretization."""
        x = self.density * np.abs(np.asarray(omega, dtype=float))
        return self.density * self.line(x)

    def spectrum(self, omega) -> np.ndarray:
        return 2.0 * math.pi * self.intensity * self.delta_c(omega)

    def scaled(self, lam: float) -> SpectralWeight:
        """Spectrum multiplied by ``lam`` (intensity scales, shape kept)."""
        if not lam > 0:
            raise ValueError("scale factor must be positive")
        return SpectralWeight(
            self.rms_drive * math.sqrt(lam),
            self.band_weight,
            self.cutoff_band,
            self.density,
            self.shape,
            self.line,
        )

    def __add__(self, other: SpectralWeight) -> SpectralWeight:
        """Spectrum of two independent driving sources acting together."""
        if not isinstance(other, SpectralWeight):
            return NotImplemented
        if not math.isclose(self.density, other.density, rel_tol=1e-12):
            raise ValueError("cannot add weights defined for different level densities")
        ia, ib = self.intensity, other.intensity
        total = ia + ib
        size = max(self.band_weight.size, other.band_weight.size)
        fa = np.pad(self.band_weight, (0, size - self.band_weight.size))
        fb = np.pad(other.band_weight, (0, size - other.band_weight.size))
        f = (ia * fa + ib * fb) / total
        f /= 2.0 * f.sum()
        la, lb = self.line, other.line

        def line(x):
            return (ia * la(x) + ib * lb(x)) / total

        return SpectralWeight(
            math.sqrt(total),
            f,
            max(self.cutoff_band, other.cutoff_band),
            self.density,
            "mixture",
            line,
        )


def _interpolated_line(f: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    # flat below r=1 since F(0) is excluded; zero past r_max + 1
    grid = np.arange(f.size + 1, dtype=float)
    vals = np.concatenate([f, [0.0]])
    vals[0] = f[1]

    def line(x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, grid, vals, right=0.0)

    return line


@dataclass(frozen=True)
class BandWindow:
    """Square sub-block of a matrix and the range of ``|n-m|`` kept in it.

    The block spans ``span`` levels (``2*half_size`` unless given) starting
    at ``center_index - span//2``.
    """

    center_index: int
    half_size: int
    min_r: int = 1
    max_r: int | None = None
    span: int | None = None

    def __post_init__(self):
        if self.half_size < 1:
            raise ValueError("window half size must be >= 1")
        if self.min_r < 1:
            raise ValueError("min_r must be >= 1")
        if self.max_r is not None and self.max_r < self.min_r:
            raise ValueError("max_r must be >= min_r")
        if self.span is not None and self.span < 2:
            raise ValueError("window must span at least two levels")

    @classmethod
    def full(cls, n: int, min_r: int = 1, max_r: int | None = None) -> BandWindow:
        return cls(n // 2, max(1, n // 2), min_r, max_r, span=n)

    @property
    def size(self) -> int:
        return 2 * self.half_size if self.span is None else self.span

    def bounds(self, n: int) -> tuple[int, int]:
        lo = self.center_index - self.size // 2
        hi = lo + self.size
        if lo < 0 or hi > n:
            raise ValueError(f"window [{lo}, {hi}) does not fit a matrix of size {n}")
        return lo, hi

    def r_range(self, n: int) -> tuple[int, int]:
        lo, hi = self.bounds(n)
        max_r = hi - lo - 1 if self.max_r is None else self.max_r
        return self.min_r, max_r


def in_band_elements(x: CouplingMatrix, window: BandWindow) -> tuple[np.ndarray, np.ndarray]:
    """Upper-triangle in-band elements of the window and their ``|n-m|``."""
    lo, hi = window.bounds(x.size)
    min_r, max_r = window.r_range(x.size)
    block = x.elements[lo:hi, lo:hi]
    n, m = np.triu_indices(hi - lo, k=1)
    r = m - n
    keep = (r >= min_r) & (r <= max_r)
    return block[n[keep], m[keep]], r[keep]


def lower_median(values) -> float:
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return float("nan")
    return float(v[(v.size - 1) // 2])


@dataclass(frozen=True)
class SparsityReport:
    mean: float
    median: float
    q_ratio: float
    participation: float
    count: int
    zero_count: int
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    participation_defined: bool = True

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "q_ratio": self.q_ratio,
            "participation": self.participation if self.participation_defined else None,
            "count": self.count,
            "zero_count": self.zero_count,
            "hist_edges": [float(e) for e in self.hist_edges],
            "hist_counts": [int(c) for c in self.hist_counts],
        }


def sparsity_measures(x: CouplingMatrix, window: BandWindow, bins_per_decade: int = 5) -> SparsityReport:
    """Mean, lower median, their ratio, participation and a log-binned histogram.

    Zero elements cannot sit on a log axis; they are counted in ``zero_count``
    so that ``hist_counts.sum() + zero_count`` equals the element count.
    """
    vals, _ = in_band_elements(x, window)
    if vals.size == 0:
        raise ValueError("window holds no in-band elements")
    total = vals.sum()
    mean = float(total / vals.size)
    median = lower_median(vals)
    positive = vals[vals > 0]
    zero_count = int(vals.size - positive.size)
    if total == 0:
        return SparsityReport(0.0, 0.0, 0.0, float("nan"), vals.size, zero_count,
                              np.array([]), np.array([], dtype=int), False)
    participation = float(total**2 / (vals.size * np.sum(vals**2)))
    lo, hi = positive.min(), positive.max()
    if hi / lo <= 1.0 + 1e-12:
        edges = np.array([lo, hi]) if hi > lo else np.array([lo * (1 - 1e-9), lo * (1 + 1e-9)])
        counts = np.array([positive.size])
    else:
        decades = math.log10(hi / lo)
        nbins = max(1, math.ceil(decades * bins_per_decade))
        edges = np.logspace(math.log10(lo), math.log10(hi), nbins + 1)
        edges[0], edges[-1] = lo, hi
        counts, _ = np.histogram(positive, bins=edges)
    return SparsityReport(mean, median, median / mean, participation, vals.size, zero_count,
                          edges, counts.astype(int))


def band_profile(x: CouplingMatrix, levels: LevelSet, occupation, bin_width: float | None = None):
    """Occupation weighted spectral function of ``X`` binned in ``omega``.

    Each pair contributes ``2 pi p_n X_nm`` at ``omega = E_m - E_n``; bin
    heights are divided by the bin width so that the profile integrates to
    ``2 pi sum_n p_n sum_m X_nm``. Bins are centred on multiples of the width
    (one mean level spacing by default).

    Returns a list of ``(omega_center, value)`` pairs.
    """
    if x.size != levels.size:
        raise ValueError(f"size mismatch: matrix {x.size}, levels {levels.size}")
    p = occupation.weights(levels) if hasattr(occupation, "weights") else np.asarray(occupation, float)
    if abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("occupation must be normalized")
    width = 1.0 / levels.density if bin_width is None else float(bin_width)
    rows = np.flatnonzero(p > 0)
    if rows.size == 0 or levels.size < 2:
        return []
    e = levels.energies
    omega = e[None, :] - e[rows, None]
    weight = 2.0 * math.pi * p[rows, None] * x.elements[rows, :]
    mask = np.ones_like(omega, dtype=bool)
    mask[np.arange(rows.size), rows] = False
    k = np.rint(omega[mask] / width).astype(np.int64)
    kmin, kmax = int(k.min()), int(k.max())
    heights = np.bincount(k - kmin, weights=weight[mask], minlength=kmax - kmin + 1) / width
    return [((kmin + i) * width, float(h)) for i, h in enumerate(heights)]


def write_coupling_csv(x: CouplingMatrix, path_or_buf) -> None:
    buf = io.StringIO()
    buf.write(f"{CSV_MAGIC}, N={x.size}\n")
    for row in x.elements:
        buf.write(",".join(repr(float(v)) for v in row))
        buf.write("\n")
    text = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)


class CouplingParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def read_coupling_csv(path_or_buf) -> CouplingMatrix:
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
    else:
        with open(path_or_buf) as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise CouplingParseError(1, "empty file")
    head = [h.strip() for h in lines[0].split(",")]
    if len(head) != 2 or head[0] != CSV_MAGIC or not head[1].startswith("N="):
        raise CouplingParseError(1, f"expected header '{CSV_MAGIC}, N=<n>', got {lines[0]!r}")
    try:
        n = int(head[1][2:])
    except ValueError:
        raise CouplingParseError(1, f"bad size field {head[1]!r}") from None
    body = [ln for ln in lines[1:]]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != n:
        raise CouplingParseError(len(lines), f"expected {n} rows, found {len(body)}")
    data = np.empty((n, n))
    for i, ln in enumerate(body):
        fields = ln.split(",")
        if len(fields) != n:
            raise CouplingParseError(i + 2, f"expected {n} fields, found {len(fields)}")
        try:
            data[i] = [float(f) for f in fields]
        except ValueError as exc:
            raise CouplingParseError(i + 2, str(exc)) from None
    try:
        return CouplingMatrix(data)
    except ValueError as exc:
        raise CouplingParseError(2, str(exc)) from None
