"""Inverse resistivity of quasi one-dimensional conductance networks.

Nodes are indexed ``0..N`` along the chain. The inverse resistivity between
two probe nodes is the two-probe conductance multiplied by their index
distance, so a uniform nearest-neighbour chain with bond ``g`` gives ``g``
whatever its length.

Two placements are provided. ``"ends"`` drives and senses at the chain
endpoints, which includes the extra resistance of the bonds near the
contacts. ``"interior"`` drives the same current through the endpoints but
reads the voltage drop between the nodes at one and three quarters of the
chain (a four-terminal measurement), which removes the contact term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

#: Bonds weaker than this are treated as absent.
BOND_THRESHOLD = 1e-30
REFINEMENT_SWEEPS = 2

__all__ = [
    "BOND_THRESHOLD",
    "ConductanceNetwork",
    "NetworkSolveError",
    "TwoProbeResult",
    "banded_uniform_conductance",
    "inverse_resistivity",
    "four_terminal_conductance",
    "laplacian",
    "measure",
    "probe_nodes",
    "series_conductance",
    "two_probe_conductance",
]


class NetworkSolveError(ArithmeticError):
    """Kirchhoff system could not be solved on a connected component."""


@dataclass(frozen=True)
class ConductanceNetwork:
    """Symmetric, nonnegative bond matrix with zero diagonal."""

    conductances: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.conductances, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"conductance matrix must be square, got {g.shape}")
        if g.shape[0] < 2:
            raise ValueError("a network needs at least two nodes")
        if not np.all(np.isfinite(g)):
            raise ValueError("conductances must be finite")
        if np.any(g < 0):
            raise ValueError("conductances must be nonnegative")
        if np.any(np.diag(g) != 0):
            raise ValueError("conductance matrix must have a zero diagonal")
        if not np.allclose(g, g.T, rtol=1e-12, atol=0):
            raise ValueError("conductance matrix must be symmetric")
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        object.__setattr__(self, "conductances", g)

    @property
    def size(self) -> int:
        return self.conductances.shape[0]

    @property
    def length(self) -> int:
        """Index distance between the end nodes."""
        return self.size - 1


@dataclass(frozen=True)
class TwoProbeResult:
    inverse_resistivity: float
    connected: bool
    resistance: float
    distance: int
    voltages: np.ndarray | None = None
    residual: float = 0.0


def series_conductance(g: Sequence[float]) -> float:
    """Inverse resistivity of a nearest-neighbour chain with bonds ``g``.

    This is the harmonic mean of the bonds; a single broken bond gives 0.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("need a nonempty list of bond conductances")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("bond conductances must be finite and nonnegative")
    if np.any(g == 0):
        return 0.0
    return float(1.0 / np.mean(1.0 / g))


def banded_uniform_conductance(g_by_range: Mapping[int, float]) -> float:
    """Closed form ``sum_r r**2 g_r`` for a translation invariant network."""
    total = 0.0
    for r, g in g_by_range.items():
        if r < 1:
            raise ValueError(f"bond range must be >= 1, got {r}")
        if g < 0:
            raise ValueError(f"negative conductance {g} at range {r}")
        total += r * r * g
    return float(total)


def laplacian(g: np.ndarray) -> np.ndarray:
    g = np.where(g > BOND_THRESHOLD, g, 0.0)
    return np.diag(g.sum(axis=0)) - g


def probe_nodes(size: int, probes="ends") -> tuple[int, int]:
    """Resolve a probe placement to a pair of node indices.

    ``"ends"`` gives the chain endpoints, ``"interior"`` the voltage-sensing
    nodes at one and three quarters of the chain. An explicit ``(n_in, n_out)``
    pair is passed through.
    """
    if isinstance(probes, str):
        if probes == "ends":
            return 0, size - 1
        if probes == "interior":
            n = size - 1
            return n // 4, (3 * n) // 4
        raise ValueError(f"unknown probe placement {probes!r}")
    n_in, n_out = (int(p) for p in probes)
    return n_in, n_out


def _refined_solve(bonds: np.ndarray, keep: np.ndarray, b: np.ndarray, sweeps: int = REFINEMENT_SWEEPS) -> np.ndarray:
    """Solve the grounded Laplacian system of ``bonds`` (rows/columns ``keep``).

    A float64 Cholesky solve is refined against the Laplacian rebuilt in
    extended precision. Rounding in the diagonal row sums otherwise acts as
    a spurious conductance to ground, which the large condition number of a
    sparse network turns into errors far above those of the bonds.
    """
    lap = np.diag(bonds.sum(axis=0)) - bonds
    factor = scipy.linalg.cho_factor(lap[np.ix_(keep, keep)], check_finite=False)
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    ext = bonds.astype(np.longdouble)
    a_ext = (np.diag(ext.sum(axis=0)) - ext)[np.ix_(keep, keep)]
    b_ext = b.astype(np.longdouble)
    for _ in range(sweeps):
        x_ext = x.astype(np.longdouble)
        r = (b_ext - a_ext @ x_ext).astype(float)
        x = (x_ext + scipy.linalg.cho_solve(factor, r, check_finite=False)).astype(float)
    return x


def two_probe_conductance(
    net: ConductanceNetwork, n_in: int, n_out: int, keep_voltages: bool = False
) -> TwoProbeResult:
    """Inject a unit current at ``n_in``, extract it at ``n_out`` and solve.

    The output node is grounded and the reduced Laplacian of the connected
    component is solved directly, which gives the same voltages as the
    pseudo-inverse of the full Laplacian. Returns the inverse resistivity
    ``|n_out - n_in| / (V_in - V_out)``.
    """
    size = net.size
    if not (0 <= n_in < size and 0 <= n_out < size):
        raise IndexError(f"probe nodes ({n_in}, {n_out}) outside 0..{size - 1}")
    if n_in == n_out:
        raise ValueError("probe nodes must differ")
    distance = abs(n_out - n_in)

    g = np.where(net.conductances > BOND_THRESHOLD, net.conductances, 0.0)
    _, labels = connected_components(g != 0, directed=False)
    if labels[n_in] != labels[n_out]:
        return TwoProbeResult(0.0, False, np.inf, distance)

    nodes = np.flatnonzero(labels == labels[n_in])
    sub = g[np.ix_(nodes, nodes)]
    lap = np.diag(sub.sum(axis=0)) - sub
    i_in = int(np.searchsorted(nodes, n_in))
    i_out = int(np.searchsorted(nodes, n_out))
    current = np.zeros(nodes.size)
    current[i_in] = 1.0
    current[i_out] = -1.0

    keep = np.arange(nodes.size) != i_out
    try:
        v_red = _refined_solve(sub, keep, current[keep])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NetworkSolveError(
            f"Kirchhoff solve failed on a connected component of {nodes.size} nodes "
            f"(probes {n_in}->{n_out}, max bond {sub.max():.3e}, "
            f"min nonzero bond {sub[sub > 0].min():.3e}): {exc}"
        ) from exc
    v = np.zeros(nodes.size)
    v[keep] = v_red

    residual = float(np.linalg.norm(lap @ v - current))
    resistance = float(v[i_in] - v[i_out])
    if not np.isfinite(resistance) or resistance <= 0:
        raise NetworkSolveError(
            f"nonpositive two-probe resistance {resistance!r} between {n_in} and {n_out}"
        )
    voltages = None
    if keep_voltages:
        voltages = np.full(size, np.nan)
        voltages[nodes] = v
    return TwoProbeResult(distance / resistance, True, resistance, distance, voltages, residual)


def four_terminal_conductance(
    net: ConductanceNetwork, sense: tuple[int, int] | None = None, keep_voltages: bool = False
) -> TwoProbeResult:
    """Drive a unit current between the chain ends and sense between ``sense``.

    Returns ``|b - a| / (V_a - V_b)``. Unlike the two-probe value this is not
    bounded by the bond average, since the sensing nodes carry no current.
    """
    a, b = sense if sense is not None else probe_nodes(net.size, "interior")
    a, b = sorted((int(a), int(b)))
    if not (0 <= a < b < net.size):
        raise ValueError(f"sensing nodes ({a}, {b}) must be distinct and inside 0..{net.size - 1}")
    ends = two_probe_conductance(net, 0, net.size - 1, keep_voltages=True)
    distance = b - a
    if not ends.connected:
        return TwoProbeResult(0.0, False, np.inf, distance, None, 0.0)
    v = ends.voltages
    if not (np.isfinite(v[a]) and np.isfinite(v[b])):
        # a sensing node lies off the current path
        return TwoProbeResult(0.0, False, np.inf, distance, None, ends.residual)
    drop = float(v[a] - v[b])
    if not drop > 0:
        raise NetworkSolveError(f"nonpositive voltage drop {drop!r} between sensing nodes {a} and {b}")
    return TwoProbeResult(distance / drop, True, drop, distance, v if keep_voltages else None, ends.residual)


def measure(net: ConductanceNetwork, probes="ends", keep_voltages: bool = False) -> TwoProbeResult:
    """Two-probe for ``"ends"`` or an explicit pair, four-terminal for ``"interior"``."""
    if isinstance(probes, str) and probes == "interior":
        return four_terminal_conductance(net, keep_voltages=keep_voltages)
    n_in, n_out = probe_nodes(net.size, probes)
    return two_probe_conductance(net, n_in, n_out, keep_voltages)


def inverse_resistivity(net: ConductanceNetwork, probes="ends") -> float:
    """The ``[[G]]`` of a network, measured with ``probes``."""
    return measure(net, probes).inverse_resistivity
