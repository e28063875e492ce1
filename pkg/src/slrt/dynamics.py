"""Rate-equation spreading as an independent check on the network diffusion.

``dp_n/dt = -sum_m w_nm (p_n - p_m)`` is integrated by explicit RK4 with the
step bounded by ``0.1 / max_n sum_m w_nm``. The spreading of an initially
localized distribution gives ``Var(n) ~ 2 D t``, to be compared with the
inverse resistivity of the same rate network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.sparse.csgraph import connected_components

from .network import BOND_THRESHOLD

__all__ = [
    "SpreadingResult",
    "StiffnessError",
    "early_spreading_rate",
    "entropy",
    "evolve_master",
    "sample_walkers",
    "spreading_diffusion",
]

STEP_FACTOR = 0.1
MAX_STEPS = 50_000_000


class StiffnessError(ArithmeticError):
    pass


def _rates(w) -> np.ndarray:
    w = np.asarray(getattr(w, "rates", w), dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("rate matrix must be square")
    if np.any(w < 0):
        raise ValueError("rates must be nonnegative")
    w = np.where(w > BOND_THRESHOLD, w, 0.0)
    np.fill_diagonal(w, 0.0)
    return 0.5 * (w + w.T)


def _csr(w: np.ndarray):
    rows, cols = np.nonzero(w)
    indptr = np.zeros(w.shape[0] + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr), cols.astype(np.int64), w[rows, cols]


def _diagonals(w: np.ndarray) -> np.ndarray:
    """``diags[k, i] = w[i, i + k]`` for ``k = 1..band`` (zero-padded)."""
    n = w.shape[0]
    rows, cols = np.nonzero(w)
    band = int(np.abs(rows - cols).max()) if rows.size else 0
    diags = np.zeros((band + 1, n))
    for k in range(1, band + 1):
        diags[k, : n - k] = np.diagonal(w, k)
    return diags


@numba.njit(cache=True, fastmath=True)
def _deriv(p, diags, out):
    n = p.size
    for i in range(n):
        out[i] = 0.0
    for k in range(1, diags.shape[0]):
        d = diags[k]
        for i in range(n - k):
            flow = d[i] * (p[i + k] - p[i])
            out[i] += flow
            out[i + k] -= flow


@numba.njit(cache=True)
def _rk4(p, diags, dt, nsteps):
    n = p.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for _ in range(nsteps):
        _deriv(p, diags, k1)
        for i in range(n):
            tmp[i] = p[i] + 0.5 * dt * k1[i]
        _deriv(tmp, diags, k2)
        for i in range(n):
            tmp[i] = p[i] + 0.5 * dt * k2[i]
        _deriv(tmp, diags, k3)
        for i in range(n):
            tmp[i] = p[i] + dt * k3[i]
        _deriv(tmp, diags, k4)
        for i in range(n):
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return p


def evolve_master(w, p0, t_grid, max_steps: int = MAX_STEPS) -> np.ndarray:
    """Probability vectors at each time of ``t_grid`` (which starts at 0)."""
    rates = _rates(w)
    p = np.array(p0, dtype=float)
    if p.shape != (rates.shape[0],):
        raise ValueError("initial distribution does not match the network size")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("initial distribution must be a normalized probability vector")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must increase strictly from 0")

    out = np.empty((t.size, p.size))
    out[0] = p
    rowmax = rates.sum(axis=1).max()
    if rowmax == 0:
        out[1:] = p
        return out
    dt_max = STEP_FACTOR / rowmax
    steps = np.ceil(np.diff(t) / dt_max).astype(np.int64)
    if steps.sum() > max_steps or dt_max < 1e-300 * max(t[-1], 1.0):
        raise StiffnessError(
            f"{int(steps.sum())} steps of {dt_max:.3e} needed to reach t={t[-1]:.3e}; "
            "rescale time (divide the rates by their maximum row sum) or shorten the horizon"
        )
    diags = _diagonals(rates)
    for k, nsteps in enumerate(steps):
        if nsteps:
            p = _rk4(p, diags, (t[k + 1] - t[k]) / nsteps, int(nsteps))
        p[(p < 0) & (p > -1e-12)] = 0.0
        p /= p.sum()
        out[k + 1] = p
    return out


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def _variance(p: np.ndarray) -> np.ndarray:
    n = np.arange(p.shape[-1])
    mu = p @ n
    return p @ (n * n) - mu * mu


def early_spreading_rate(w, n0: int) -> float:
    """Initial growth rate of the second moment about ``n0``: ``sum_m w_{m n0} (m - n0)**2``."""
    rates = _rates(w)
    d = np.arange(rates.shape[0]) - n0
    return float(np.sum(rates[:, n0] * d * d))


@dataclass(frozen=True)
class SpreadingResult:
    times: np.ndarray
    variances: np.ndarray
    fitted_diffusion: float
    fit_window: tuple[float, float]
    saturated: bool

    def to_dict(self) -> dict:
        return {
            "fitted_diffusion": self.fitted_diffusion,
            "fit_window": list(self.fit_window),
            "saturated": self.saturated,
            "points": int(self.times.size),
        }

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,var\n")
            for t, v in zip(self.times, self.variances):
                fh.write(f"{t!r},{v!r}\n")


def spreading_diffusion(
    w,
    n0: int,
    horizon: float | None = None,
    n_points: int = 200,
    max_std_fraction: float = 1 / 6,
    max_extensions: int = 8,
) -> SpreadingResult:
    """Fit ``Var(n) = 2 D t + c`` to the spreading of a walker started at ``n0``.

    The fit keeps times where ``(3 band)**2 <= Var <= (max_std_fraction N)**2``
    so that the initial ballistic transient and reflections from the chain
    ends are both excluded. Without ``horizon`` the run time is estimated from
    the early spreading rate and doubled until the upper variance bound is
    passed.
    """
    rates = _rates(w)
    n = rates.shape[0]
    if not (n / 4 <= n0 <= 3 * n / 4):
        raise ValueError(f"start index {n0} must be at least N/4 away from the chain ends")
    rows, cols = np.nonzero(rates)
    band = int(np.abs(rows - cols).max()) if rows.size else 0
    lo_var = (3.0 * band) ** 2
    hi_var = (max_std_fraction * n) ** 2

    _, labels = connected_components(rates != 0, directed=False)
    if band == 0 or labels[0] != labels[n - 1] or labels[n0] != labels[0]:
        t = np.zeros(1)
        return SpreadingResult(t, np.zeros(1), 0.0, (0.0, 0.0), True)

    p0 = np.zeros(n)
    p0[n0] = 1.0
    rate0 = early_spreading_rate(rates, n0)
    if horizon is None:
        horizon = 2.0 * hi_var / max(rate0, 1e-300)
        extend = max_extensions
    else:
        extend = 0

    times = np.linspace(0.0, horizon, n_points + 1)
    probs = evolve_master(rates, p0, times)
    var = _variance(probs)
    while extend and var[-1] < hi_var:
        rate = (var[-1] - var[-2]) / (times[-1] - times[-2])
        span = times[-1]
        if rate > 0:
            span = min(span, 1.2 * (hi_var - var[-1]) / rate)
        more = np.linspace(0.0, span, n_points // 2 + 1)
        probs_more = evolve_master(rates, probs[-1], more)
        times = np.concatenate([times, times[-1] + more[1:]])
        var = np.concatenate([var, _variance(probs_more[1:])])
        probs = probs_more
        extend -= 1

    growth = np.diff(var) / np.diff(times)
    saturated = bool(growth[-1] < 0.1 * growth.max())
    mask = (var >= lo_var) & (var <= hi_var)
    if mask.sum() < 3:
        mask = var >= min(lo_var, var[-1] / 4)
    slope = np.polyfit(times[mask], var[mask], 1)[0]
    d = max(0.0, 0.5 * float(slope))
    window = (float(times[mask][0]), float(times[mask][-1]))
    return SpreadingResult(times, var, d, window, saturated)


@numba.njit(cache=True)
def _walk(indptr, indices, cumrates, totals, n0, times, n_walkers, seed):
    np.random.seed(seed)
    pos = np.empty((times.size, n_walkers), dtype=np.int64)
    for k in range(n_walkers):
        x = n0
        t = 0.0
        j = 0
        while j < times.size:
            tot = totals[x]
            if tot <= 0.0:
                while j < times.size:
                    pos[j, k] = x
                    j += 1
                break
            t_next = t + np.random.exponential(1.0 / tot)
            while j < times.size and times[j] < t_next:
                pos[j, k] = x
                j += 1
            u = np.random.random() * tot
            lo = indptr[x]
            hi = indptr[x + 1]
            i = lo
            while i < hi - 1 and cumrates[i] < u:
                i += 1
            x = indices[i]
            t = t_next
    return pos


def sample_walkers(w, n0: int, times, n_walkers: int = 2000, seed: int = 0) -> np.ndarray:
    """Event-driven random walkers; returns the sample variance of the position at ``times``."""
    rates = _rates(w)
    indptr, indices, data = _csr(rates)
    cum = np.empty_like(data)
    totals = np.zeros(rates.shape[0])
    for i in range(rates.shape[0]):
        seg = data[indptr[i]:indptr[i + 1]]
        cum[indptr[i]:indptr[i + 1]] = np.cumsum(seg)
        totals[i] = seg.sum()
    pos = _walk(indptr, indices, cum, totals, int(n0), np.asarray(times, dtype=float), int(n_walkers), int(seed))
    return pos.var(axis=1)
