"""Driving spectra, golden-rule rates, and LRT / SLRT response coefficients.

Linear response (Kubo) weights the squared couplings with the occupation
and the broadened delta function. Semi-linear response computes the
inverse resistivity of the golden-rule rate network inside an energy window
and rescales it by the level spacing, ``D = [[w]] / density**2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import BandWindow, CouplingMatrix, LevelSet, SpectralWeight
from .network import ConductanceNetwork, TwoProbeResult, measure

__all__ = [
    "DegenerateLevelsError",
    "OccupationSpec",
    "RateNetwork",
    "ResponseResult",
    "SlrtDetail",
    "absorption",
    "conductance",
    "default_window",
    "fgr_rates",
    "joule_absorption",
    "kubo_diffusion",
    "make_spectral_weight",
    "slrt_detail",
    "slrt_diffusion",
]

DEGENERACY_TOL = 1e-12
DEFAULT_WINDOW = 100
LORENTZIAN_TRUNCATION = 100.0
GAUSSIAN_TRUNCATION = 6.0


class DegenerateLevelsError(ValueError):
    pass


@dataclass(frozen=True)
class OccupationSpec:
    """Quasi-equilibrium occupation of the levels.

    ``microcanonical`` is uniform over ``n0 - half_width .. n0 + half_width``;
    ``boltzmann`` uses ``exp(-E/T)``; ``fermi_window`` uses the thermal
    window ``-df/dE`` of a Fermi function at ``fermi_energy``.
    """

    kind: str
    n0: int | None = None
    half_width: int = 0
    temperature: float | None = None
    fermi_energy: float | None = None

    def __post_init__(self):
        if self.kind not in ("microcanonical", "boltzmann", "fermi_window"):
            raise ValueError(f"unknown occupation kind {self.kind!r}")
        if self.kind == "microcanonical" and (self.n0 is None or self.half_width < 0):
            raise ValueError("microcanonical occupation needs n0 and half_width >= 0")
        if self.kind in ("boltzmann", "fermi_window"):
            if self.temperature is None or not self.temperature > 0:
                raise ValueError("temperature must be positive")
        if self.kind == "fermi_window" and self.fermi_energy is None:
            raise ValueError("fermi_window occupation needs a Fermi energy")

    @classmethod
    def microcanonical(cls, n0: int, half_width: int = 0) -> OccupationSpec:
        return cls("microcanonical", n0=n0, half_width=half_width)

    @classmethod
    def boltzmann(cls, temperature: float) -> OccupationSpec:
        return cls("boltzmann", temperature=temperature)

    @classmethod
    def fermi_window(cls, fermi_energy: float, temperature: float) -> OccupationSpec:
        return cls("fermi_window", temperature=temperature, fermi_energy=fermi_energy)

    def thermal_window(self, energies) -> np.ndarray:
        """``delta_T(E - E_F) = 1 / (4 T cosh^2((E - E_F) / 2T))``."""
        t = self.temperature
        z = (np.asarray(energies, dtype=float) - self.fermi_energy) / (2.0 * t)
        return 1.0 / (4.0 * t * np.cosh(np.clip(z, -350, 350)) ** 2)

    def weights(self, levels: LevelSet) -> np.ndarray:
        e = levels.energies
        n = e.size
        if self.kind == "microcanonical":
            lo, hi = self.n0 - self.half_width, self.n0 + self.half_width + 1
            if lo < 0 or hi > n:
                raise ValueError(f"occupied levels [{lo}, {hi}) outside 0..{n - 1}")
            p = np.zeros(n)
            p[lo:hi] = 1.0 / (hi - lo)
            return p
        if self.kind == "boltzmann":
            logp = -(e - e.min()) / self.temperature
        else:
            logp = np.log(self.thermal_window(e))
        p = np.exp(logp - logp.max())
        return p / p.sum()

    def peak_index(self, levels: LevelSet) -> int:
        if self.kind == "microcanonical":
            return self.n0
        return int(np.argmax(self.weights(levels)))

    def density(self, levels: LevelSet) -> float:
        """Density of states seen by the occupation (states per energy)."""
        if self.kind == "fermi_window":
            return float(self.thermal_window(levels.energies).sum())
        if self.kind == "microcanonical":
            lo = max(0, self.n0 - max(self.half_width, 1))
            hi = min(levels.size, self.n0 + max(self.half_width, 1) + 1)
            return levels.measured_density(lo, hi)
        return levels.density


def make_spectral_weight(
    rms_drive: float,
    shape: str,
    omega_c: float,
    density: float,
    truncation: float | None = None,
) -> SpectralWeight:
    """Discretize a driving line shape of width ``omega_c`` on the level grid.

    ``b_c = density * omega_c`` is the width in level spacings. The
    rectangular shape is flat for ``|r| <= b_c``; gaussian and lorentzian
    shapes have scale ``b_c`` and are cut at ``truncation * b_c`` (6 and 100
    by default).
    """
    if not omega_c > 0 or not density > 0:
        raise ValueError("omega_c and density must be positive")
    b_c = density * omega_c
    if b_c < 1.0 - 1e-12:
        raise ValueError(f"driving band b_c = {b_c:.3g} is narrower than one level spacing")

    if shape == "rectangular":
        r_max = int(math.floor(b_c * (1 + 1e-12)))

        def profile(x):
            return np.where(np.asarray(x) <= b_c * (1 + 1e-12), 1.0, 0.0)

        x_max = b_c * (1 + 1e-12)
    elif shape == "gaussian":
        cut = GAUSSIAN_TRUNCATION if truncation is None else truncation
        r_max = int(math.ceil(cut * b_c))

        def profile(x):
            return np.exp(-0.5 * (np.asarray(x) / b_c) ** 2)

        x_max = r_max
    elif shape == "lorentzian":
        cut = LORENTZIAN_TRUNCATION if truncation is None else truncation
        r_max = int(math.ceil(cut * b_c))

        def profile(x):
            return 1.0 / (1.0 + (np.asarray(x) / b_c) ** 2)

        x_max = r_max
    else:
        raise ValueError(f"unknown line shape {shape!r}")

    r = np.arange(r_max + 1, dtype=float)
    f = profile(r)
    f[0] = 0.0
    z = 2.0 * f.sum()
    f /= z

    def line(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= x_max, profile(x), 0.0) / z

    return SpectralWeight(float(rms_drive), f, b_c, float(density), shape, line)


@dataclass(frozen=True)
class RateNetwork:
    """Symmetric golden-rule rates between levels and the skipped degenerate pairs."""

    rates: np.ndarray
    excluded_pairs: tuple[tuple[int, int], ...] = ()

    @property
    def size(self) -> int:
        return self.rates.shape[0]

    def as_network(self) -> ConductanceNetwork:
        return ConductanceNetwork(self.rates)

    def band(self, threshold: float = 0.0) -> int:
        """Largest ``|n-m|`` carrying a rate above ``threshold``."""
        n, m = np.nonzero(self.rates > threshold)
        return int(np.abs(n - m).max()) if n.size else 0


def fgr_rates(x: CouplingMatrix, levels: LevelSet, s: SpectralWeight, strict: bool = False) -> RateNetwork:
    """``w_nm = X_nm S(E_n - E_m) / (E_n - E_m)**2``.

    Pairs closer than ``1e-12`` of the bandwidth are skipped and listed in
    ``excluded_pairs`` if they carry coupling; ``strict=True`` raises instead.
    """
    if x.size != levels.size:
        raise ValueError(f"size mismatch: matrix {x.size}, levels {levels.size}")
    e = levels.energies
    de = e[:, None] - e[None, :]
    bandwidth = e[-1] - e[0] if e.size > 1 else 1.0
    degenerate = np.abs(de) < DEGENERACY_TOL * max(bandwidth, np.finfo(float).tiny)
    np.fill_diagonal(degenerate, False)
    bad = degenerate & (x.elements > 0)
    iu, ju = np.nonzero(np.triu(bad, k=1))
    excluded = tuple((int(i), int(j)) for i, j in zip(iu, ju))
    if strict and excluded:
        raise DegenerateLevelsError(f"{len(excluded)} coupled degenerate level pairs, first {excluded[0]}")
    safe = np.where(degenerate | (de == 0), 1.0, de)
    w = x.elements * s.spectrum(de) / safe**2
    w[degenerate] = 0.0
    np.fill_diagonal(w, 0.0)
    w = 0.5 * (w + w.T)
    return RateNetwork(w, excluded)


def kubo_diffusion(x: CouplingMatrix, levels: LevelSet, s: SpectralWeight, occupation) -> float:
    """``D = pi rms**2 sum_nm p_n X_nm delta_c(E_m - E_n)``.

    This equals ``sum_n p_n (1/2) sum_m (E_m - E_n)**2 w_mn`` for nondegenerate
    levels. Degenerate pairs keep their finite contribution here.
    """
    if x.size != levels.size:
        raise ValueError(f"size mismatch: matrix {x.size}, levels {levels.size}")
    p = occupation.weights(levels) if hasattr(occupation, "weights") else np.asarray(occupation, float)
    rows = np.flatnonzero(p > 0)
    e = levels.energies
    dc = s.delta_c(e[None, :] - e[rows, None])
    return float(math.pi * s.intensity * np.sum(p[rows, None] * x.elements[rows, :] * dc))


def default_window(n: int, center: int, size: int = DEFAULT_WINDOW) -> BandWindow:
    """Window of ``size`` levels around ``center``, shifted to fit in ``0..n-1``."""
    size = min(size, n)
    lo = min(max(center - size // 2, 0), n - size)
    return BandWindow(lo + size // 2, max(1, size // 2), span=size)


@dataclass(frozen=True)
class SlrtDetail:
    diffusion: float
    density: float
    bounds: tuple[int, int]
    probe: TwoProbeResult
    rates: RateNetwork

    @property
    def connected(self) -> bool:
        return self.probe.connected


def slrt_detail(
    x: CouplingMatrix,
    levels: LevelSet,
    s: SpectralWeight,
    window: BandWindow | None = None,
    occupation=None,
    probes="ends",
) -> SlrtDetail:
    if window is None:
        center = occupation.peak_index(levels) if occupation is not None else levels.size // 2
        window = default_window(levels.size, center)
    lo, hi = window.bounds(levels.size)
    if hi - lo < 2:
        raise ValueError("window must contain at least two levels")
    sub_levels = LevelSet(levels.energies[lo:hi], levels.density)
    rho = sub_levels.measured_density()
    rates = fgr_rates(x.submatrix(lo, hi), sub_levels, s)
    net = ConductanceNetwork(rates.rates)
    probe = measure(net, probes)
    return SlrtDetail(probe.inverse_resistivity / rho**2, rho, (lo, hi), probe, rates)


def slrt_diffusion(
    x: CouplingMatrix,
    levels: LevelSet,
    s: SpectralWeight,
    window: BandWindow | None = None,
    occupation=None,
    probes="ends",
) -> float:
    """``D = [[w]] / density**2`` for the rates inside ``window`` (0 if disconnected)."""
    return slrt_detail(x, levels, s, window, occupation, probes).diffusion


def conductance(
    v2: np.ndarray,
    levels: LevelSet,
    s: SpectralWeight,
    occupation,
    length_L: float,
    window: BandWindow | None = None,
    density: float | None = None,
    probes="ends",
) -> tuple[float, float]:
    """LRT and SLRT mesoscopic conductance from squared velocity elements.

    ``X = |v|**2 / L**2`` (unit charge). Both values follow from the
    absorption identity ``G = density * D / rms**2``; the LRT density is the
    one seen by the occupation, the SLRT density is that of the window.
    """
    if not length_L > 0:
        raise ValueError("ring length must be positive")
    x = CouplingMatrix(np.asarray(v2, dtype=float) / float(length_L) ** 2)
    rho = occupation.density(levels) if density is None else float(density)
    g_lrt = rho * kubo_diffusion(x, levels, s, occupation) / s.intensity
    det = slrt_detail(x, levels, s, window, occupation, probes)
    g_slrt = det.density * det.diffusion / s.intensity
    return g_lrt, g_slrt


def absorption(d: float, occupation: OccupationSpec, particle_count: float = 1.0, density: float | None = None) -> float:
    """Energy absorption rate ``density * D``.

    The density is ``N/T`` for a Boltzmann occupation and the density of
    states at the Fermi energy for a Fermi window (``density`` overrides it).
    """
    if d < 0:
        raise ValueError("diffusion coefficient must be nonnegative")
    if occupation.kind == "boltzmann":
        return particle_count / occupation.temperature * d
    if density is None:
        raise ValueError(f"{occupation.kind} occupation needs an explicit density of states")
    return density * d


def joule_absorption(g: float, rms_emf: float) -> float:
    return g * rms_emf**2


@dataclass
class ResponseResult:
    d_lrt: float
    d_slrt: float
    g_lrt: float
    g_slrt: float
    g_c: float
    g_s: float
    ear_lrt: float
    ear_slrt: float
    reference: float
    connected: bool = True
    excluded_pairs: int = 0
    extra: dict = field(default_factory=dict)

    def violations(self, slack: float = 1e-9) -> list[str]:
        out = []
        if self.d_slrt > self.d_lrt * (1 + slack) + slack:
            out.append("d_slrt > d_lrt")
        for k in ("d_lrt", "d_slrt", "g_lrt", "g_slrt"):
            if getattr(self, k) < 0:
                out.append(f"{k} < 0")
        return out

    def to_dict(self) -> dict:
        return asdict(self)
