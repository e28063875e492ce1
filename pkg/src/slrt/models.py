"""Model generators: a disordered tight-binding ring and sparse banded ensembles.

Units are ``e = hbar = lattice constant = 1``; the hopping ``c`` sets the
energy scale of the ring.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .core import CouplingMatrix, LevelSet, write_coupling_csv

__all__ = [
    "EnsembleSpec",
    "ModelOutput",
    "RingSpec",
    "born_mean_free_path",
    "build_ring",
    "build_sparse_ensemble",
    "drude_reference",
    "open_modes",
    "ring_hamiltonian",
    "wall_reference",
]


@dataclass(frozen=True)
class RingSpec:
    length_L: int = 200
    width_M: int = 5
    hopping_c: float = 1.0
    disorder_W: float = 1.0
    flux: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.length_L < 3:
            raise ValueError("ring length L must be >= 3")
        if self.width_M < 1:
            raise ValueError("ring width M must be >= 1")
        if not self.hopping_c > 0:
            raise ValueError("hopping must be positive")
        if self.disorder_W < 0:
            raise ValueError("disorder strength must be nonnegative")


@dataclass(frozen=True)
class EnsembleSpec:
    """Banded log-box ensemble. ``profile[r-1]`` is the mean element at distance ``r``.

    An empty profile means a flat band ``B(r) = 1`` for ``1 <= r <= band_b``.
    """

    size_N: int = 200
    band_b: int = 10
    profile: tuple[float, ...] = ()
    spread_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.band_b < 1:
            raise ValueError("band must be >= 1")
        if self.size_N <= 2 * self.band_b:
            raise ValueError("need N > 2b")
        if self.spread_sigma < 0:
            raise ValueError("spread must be nonnegative")
        prof = tuple(float(v) for v in self.profile)
        if prof and len(prof) != self.band_b:
            raise ValueError(f"profile needs {self.band_b} entries, got {len(prof)}")
        if any(v < 0 for v in prof):
            raise ValueError("profile must be nonnegative")
        object.__setattr__(self, "profile", prof)

    @classmethod
    def with_profile(cls, profile: Mapping[int, float], **kw) -> EnsembleSpec:
        b = max(profile)
        return cls(band_b=b, profile=tuple(profile.get(r, 0.0) for r in range(1, b + 1)), **kw)

    def band_profile(self) -> np.ndarray:
        """``B(r)`` for ``r = 0..b`` (``B(0) = 0``)."""
        prof = self.profile or (1.0,) * self.band_b
        return np.concatenate([[0.0], prof])


@dataclass
class ModelOutput:
    levels: LevelSet
    coupling: CouplingMatrix
    metadata: dict = field(default_factory=dict)
    velocity_sq: np.ndarray | None = None

    def save(self, stem) -> None:
        """Write ``<stem>.csv`` (coupling matrix) and ``<stem>.json`` (levels + metadata)."""
        stem = str(stem)
        write_coupling_csv(self.coupling, stem + ".csv")
        meta = dict(self.metadata)
        meta["energies"] = [float(v) for v in self.levels.energies]
        meta["density"] = self.levels.density
        with open(stem + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def _site(x, y, m):
    return x * m + y


def ring_hamiltonian(spec: RingSpec, onsite: np.ndarray | None = None):
    """Hamiltonian and velocity operator of the ring in the site basis.

    Sites are ``(x, y)`` with ``x`` periodic around the ring and hard walls in
    ``y``. Longitudinal hops carry the phase ``exp(i flux / L)``.
    """
    L, M, c = spec.length_L, spec.width_M, spec.hopping_c
    n = L * M
    phase = np.exp(1j * spec.flux / L)
    fwd = np.zeros((n, n), dtype=complex)
    x = np.repeat(np.arange(L), M)
    y = np.tile(np.arange(M), L)
    src = _site(x, y, M)
    dst = _site((x + 1) % L, y, M)
    fwd[dst, src] = phase
    h = -c * (fwd + fwd.conj().T)
    if M > 1:
        keep = y < M - 1
        a, b = src[keep], src[keep] + 1
        h[a, b] -= c
        h[b, a] -= c
    if onsite is not None:
        h[np.arange(n), np.arange(n)] += onsite
    v = 1j * c * (fwd - fwd.conj().T)
    return h, v


def build_ring(spec: RingSpec) -> ModelOutput:
    """Diagonalize the disordered ring and return ``X = |v_nm|**2 / L**2``."""
    rng = np.random.default_rng(spec.seed)
    n = spec.length_L * spec.width_M
    eps = rng.uniform(-spec.disorder_W / 2, spec.disorder_W / 2, size=n)
    h, v = ring_hamiltonian(spec, eps)
    try:
        energies, psi = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"ring diagonalization failed: {exc}") from exc
    residual = float(np.max(np.linalg.norm(h @ psi - psi * energies, axis=0)))
    vnm = psi.conj().T @ v @ psi
    v2 = np.abs(vnm) ** 2
    v2 = 0.5 * (v2 + v2.T)
    np.fill_diagonal(v2, 0.0)
    levels = LevelSet.from_energies(energies)
    meta = {
        "model": "ring",
        "spec": asdict(spec),
        "eigen_residual": residual,
        "trace_error": float(abs(energies.sum() - eps.sum())),
    }
    return ModelOutput(levels, CouplingMatrix(v2 / spec.length_L**2), meta, v2)


def build_sparse_ensemble(spec: EnsembleSpec) -> ModelOutput:
    """Banded matrix with log-wide elements ``B(r) 10**(-sigma u) chi**2 / <10**(-sigma u)>``.

    ``u`` is uniform on [0, 1] and ``chi`` standard normal. Dividing by the
    mean of the log-box factor keeps the mean element at ``B(r)`` for every
    spread, so ``sigma`` changes sparsity but not the band profile.
    """
    n, b, sigma = spec.size_N, spec.band_b, spec.spread_sigma
    rng = np.random.default_rng(spec.seed)
    rows, cols = np.triu_indices(n, k=1)
    r = cols - rows
    keep = r <= b
    rows, cols, r = rows[keep], cols[keep], r[keep]
    u = rng.uniform(0.0, 1.0, size=r.size)
    chi = rng.standard_normal(size=r.size)
    if sigma > 0:
        norm = (1.0 - 10.0**-sigma) / (sigma * math.log(10.0))
        logbox = 10.0 ** (-sigma * u) / norm
    else:
        logbox = np.ones(r.size)
    x = np.zeros((n, n))
    x[rows, cols] = spec.band_profile()[r] * logbox * chi**2
    x = x + x.T
    meta = {"model": "sparse_ensemble", "spec": asdict(spec)}
    return ModelOutput(LevelSet.uniform(n), CouplingMatrix(x), meta)


def wall_reference(mass: float, energy_E: float, length_Lx: float, rms_drive: float) -> float:
    """Kinetic wall-formula diffusion ``(4/3pi) m**2 v**3 / Lx * rms**2`` in two dimensions."""
    for name, val in (("mass", mass), ("energy", energy_E), ("length", length_Lx), ("drive", rms_drive)):
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
    v_e = math.sqrt(2.0 * energy_E / mass)
    return 4.0 / (3.0 * math.pi) * mass**2 * v_e**3 / length_Lx * rms_drive**2


def drude_reference(modes_M: int, mfp_ell: float, length_L: float) -> float:
    """Drude conductance in Landauer form, ``M ell / (2 pi L)`` with ``e = hbar = 1``."""
    if modes_M < 1:
        raise ValueError("need at least one open mode")
    if not mfp_ell > 0 or not length_L > 0:
        raise ValueError("mean free path and length must be positive")
    return modes_M * mfp_ell / (2.0 * math.pi * length_L)


def born_mean_free_path(disorder_W: float, hopping_c: float = 1.0, kappa: float = 1.0) -> float:
    """``ell = kappa (c/W)**2``; infinite for a clean ring."""
    if disorder_W < 0 or not hopping_c > 0 or not kappa > 0:
        raise ValueError("need W >= 0 and positive c, kappa")
    if disorder_W == 0:
        return math.inf
    return kappa * (hopping_c / disorder_W) ** 2


def open_modes(width_M: int, hopping_c: float = 1.0, energy: float = 0.0) -> int:
    """Transverse channels of the hard-wall strip that propagate at ``energy``."""
    q = np.arange(1, width_M + 1)
    eps = -2.0 * hopping_c * np.cos(np.pi * q / (width_M + 1))
    return int(np.sum(np.abs(energy - eps) < 2.0 * hopping_c))
