"""Weighted averages of a coupling matrix over the driving band.

The algebraic average is linear in ``X``; the resistor-network average is
only homogeneous. It treats ``2 F(n-m) X_nm / (n-m)**2`` as bond
conductances and returns the inverse resistivity of that chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CouplingMatrix, SpectralWeight
from .network import ConductanceNetwork, TwoProbeResult, measure

__all__ = [
    "AverageReport",
    "algebraic_average",
    "average_report",
    "reference_averages",
    "resistor_network_average",
    "resistor_network_detail",
    "scaled_rate_matrix",
    "suppression_factor",
]


@dataclass(frozen=True)
class AverageReport:
    algebraic: float
    resistor_network: float
    harmonic: float
    geometric: float
    median: float
    g_s: float
    connected: bool = True

    def violations(self, slack: float = 1e-9) -> list[str]:
        out = []
        if self.resistor_network > self.algebraic + slack:
            out.append("resistor_network > algebraic")
        if self.harmonic > self.geometric * (1 + slack) + slack:
            out.append("harmonic > geometric")
        if self.geometric > self.algebraic * (1 + slack) + slack:
            out.append("geometric > algebraic")
        if not (0.0 <= self.g_s <= 1.0 + slack):
            out.append("g_s outside [0, 1]")
        return out

    def to_dict(self) -> dict:
        return {
            "algebraic": self.algebraic,
            "resistor_network": self.resistor_network,
            "harmonic": self.harmonic,
            "geometric": self.geometric,
            "median": self.median,
            "g_s": self.g_s,
            "connected": self.connected,
        }


def _check(x: CouplingMatrix, f: SpectralWeight):
    if not isinstance(x, CouplingMatrix):
        x = CouplingMatrix(x)
    if f.r_max < 1:
        raise ValueError("band weight is empty")
    return x


def algebraic_average(x: CouplingMatrix, f: SpectralWeight) -> float:
    """``sum F(n-m) X_nm / sum F(n-m)`` over all pairs of the matrix.

    In the bulk every row carries unit weight, so this is the usual
    ``(1/N) sum F X`` without the edge deficit of a finite matrix.
    """
    x = _check(x, f)
    w = f.weight_matrix(x.size)
    norm = w.sum()
    if norm <= 0:
        raise ValueError("band weight has no support inside the matrix")
    return float(np.sum(w * x.elements) / norm)


def scaled_rate_matrix(x: CouplingMatrix, f: SpectralWeight) -> np.ndarray:
    """Dimensionless rates ``2 F(n-m) X_nm / (n-m)**2``."""
    n = x.size
    idx = np.arange(n)
    r = idx[:, None] - idx[None, :]
    r2 = np.where(r == 0, 1, r * r)
    w = 2.0 * f.weight(r) * x.elements / r2
    np.fill_diagonal(w, 0.0)
    return w


def resistor_network_detail(x: CouplingMatrix, f: SpectralWeight, probes="ends") -> TwoProbeResult:
    x = _check(x, f)
    net = ConductanceNetwork(scaled_rate_matrix(x, f))
    return measure(net, probes)


def resistor_network_average(x: CouplingMatrix, f: SpectralWeight, probes="ends") -> float:
    """Inverse resistivity of the scaled-rate network (0 if disconnected)."""
    return resistor_network_detail(x, f, probes).inverse_resistivity


def _weighted_elements(x: CouplingMatrix, f: SpectralWeight):
    n = x.size
    rows, cols = np.triu_indices(n, k=1)
    w = f.weight(cols - rows)
    keep = w > 0
    return x.elements[rows[keep], cols[keep]], w[keep]


def _weighted_lower_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cum = np.cumsum(w)
    k = int(np.searchsorted(cum, 0.5 * cum[-1] * (1 - 1e-12)))
    return float(v[min(k, v.size - 1)])


def reference_averages(x: CouplingMatrix, f: SpectralWeight) -> tuple[float, float, float]:
    """F-weighted harmonic mean, geometric mean and lower median of in-band elements."""
    x = _check(x, f)
    vals, w = _weighted_elements(x, f)
    if vals.size == 0:
        raise ValueError("no in-band elements")
    median = _weighted_lower_median(vals, w)
    if np.any(vals == 0):
        return 0.0, 0.0, median
    wn = w / w.sum()
    harmonic = float(1.0 / np.sum(wn / vals))
    geometric = float(np.exp(np.sum(wn * np.log(vals))))
    return harmonic, geometric, median


def suppression_factor(x: CouplingMatrix, f: SpectralWeight, probes="ends") -> float:
    a = algebraic_average(x, f)
    if a <= 0:
        raise ZeroDivisionError("suppression factor undefined: algebraic average is zero")
    return resistor_network_average(x, f, probes) / a


def average_report(x: CouplingMatrix, f: SpectralWeight, probes="ends") -> AverageReport:
    x = _check(x, f)
    a = algebraic_average(x, f)
    detail = resistor_network_detail(x, f, probes)
    h, g, med = reference_averages(x, f)
    g_s = detail.inverse_resistivity / a if a > 0 else float("nan")
    return AverageReport(a, detail.inverse_resistivity, h, g, med, g_s, detail.connected)
