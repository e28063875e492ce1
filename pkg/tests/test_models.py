import json
import math

import numpy as np
import pytest
from scipy import stats

from slrt.averages import average_report
from slrt.core import BandWindow, read_coupling_csv, sparsity_measures
from slrt.models import (
    EnsembleSpec,
    RingSpec,
    born_mean_free_path,
    build_ring,
    build_sparse_ensemble,
    drude_reference,
    open_modes,
    ring_hamiltonian,
    wall_reference,
)
from slrt.response import default_window, make_spectral_weight, slrt_detail


@pytest.fixture(scope="module")
def ring():
    return build_ring(RingSpec(length_L=30, width_M=3, disorder_W=1.5, seed=4))


class TestRing:
    def test_invariants(self, ring):
        x = ring.coupling.elements
        assert np.array_equal(x, x.T)
        assert np.all(np.diag(x) == 0)
        assert ring.levels.size == 90
        assert ring.metadata["eigen_residual"] <= 1e-10
        assert ring.metadata["trace_error"] <= 1e-10

    def test_hamiltonian_hermitian(self):
        h, v = ring_hamiltonian(RingSpec(length_L=7, width_M=2, flux=0.3), np.arange(14.0))
        assert np.allclose(h, h.conj().T)
        assert np.allclose(v, v.conj().T)
        assert np.allclose(np.diag(h).real, np.arange(14.0))

    def test_velocity_is_current_operator(self):
        # v = dH/d(flux) * L for the longitudinal hops
        spec = RingSpec(length_L=9, width_M=2)
        eps = 1e-6
        h0, v = ring_hamiltonian(spec)
        h1, _ = ring_hamiltonian(RingSpec(length_L=9, width_M=2, flux=eps))
        assert np.allclose((h1 - h0) / eps * spec.length_L, -v, atol=1e-5)

    def test_completeness(self, ring):
        spec = RingSpec(length_L=30, width_M=3, disorder_W=1.5, seed=4)
        eps = np.random.default_rng(spec.seed).uniform(-0.75, 0.75, size=90)
        h, v = ring_hamiltonian(spec, eps)
        _, psi = np.linalg.eigh(h)
        direct = np.einsum("in,ij,jn->n", psi.conj(), v @ v, psi).real
        diag = np.abs(np.einsum("in,ij,jn->n", psi.conj(), v, psi)) ** 2
        assert np.allclose(ring.velocity_sq.sum(axis=1) + diag, direct, rtol=1e-8)

    def test_clean_ring_modes_decouple(self):
        out = build_ring(RingSpec(length_L=60, width_M=3, disorder_W=0.0))
        n = out.levels.size
        win = BandWindow(n // 2, n // 8, max_r=10)
        rep = sparsity_measures(out.coupling, win)
        assert rep.median <= 1e-20 * rep.mean
        rho = out.levels.measured_density(n // 4, 3 * n // 4)
        s = make_spectral_weight(1.0, "rectangular", 10.0 / rho, rho)
        det = slrt_detail(out.coupling, out.levels, s, default_window(n, n // 2, n // 4))
        assert det.diffusion <= 1e-12

    def test_deterministic(self):
        a = build_ring(RingSpec(length_L=20, width_M=2, seed=9))
        b = build_ring(RingSpec(length_L=20, width_M=2, seed=9))
        assert np.array_equal(a.coupling.elements, b.coupling.elements)

    def test_strong_disorder_is_sparse(self):
        spec = RingSpec(length_L=150, width_M=2, disorder_W=10.0, seed=1)
        out = build_ring(spec)
        n = out.levels.size
        win = default_window(n, n // 2, n // 4)
        lo, hi = win.bounds(n)
        rho = out.levels.measured_density(lo, hi)
        s = make_spectral_weight(1.0, "rectangular", 10.0 / rho, rho)
        rep = average_report(out.coupling.submatrix(lo, hi), make_spectral_weight(1.0, "rectangular", 10.0, 1.0))
        assert rep.resistor_network < 0.05 * rep.algebraic
        assert slrt_detail(out.coupling, out.levels, s, win).diffusion >= 0

    @pytest.mark.parametrize("kw", [dict(length_L=2), dict(width_M=0), dict(hopping_c=0.0), dict(disorder_W=-1.0)])
    def test_spec_validation(self, kw):
        with pytest.raises(ValueError):
            RingSpec(**kw)

    def test_save_sidecar(self, tmp_path, ring):
        ring.save(tmp_path / "ring")
        x = read_coupling_csv(tmp_path / "ring.csv")
        assert np.array_equal(x.elements, ring.coupling.elements)
        meta = json.loads((tmp_path / "ring.json").read_text())
        assert meta["spec"]["seed"] == 4
        assert meta["energies"] == [float(e) for e in ring.levels.energies]


class TestEnsemble:
    def test_gaussian_squared_median_ratio(self):
        vals = []
        for seed in range(10):
            out = build_sparse_ensemble(EnsembleSpec(300, 10, (), 0.0, seed))
            rep = sparsity_measures(out.coupling, BandWindow(150, 100, max_r=10))
            vals.append(rep.q_ratio)
        expected = stats.chi2(1).median() / 1.0
        assert expected == pytest.approx(0.4549, abs=1e-4)
        assert np.mean(vals) == pytest.approx(expected, rel=0.05)

    def test_logbox_sigma4_sparse(self):
        out = build_sparse_ensemble(EnsembleSpec(200, 10, (), 4.0, 2024))
        assert sparsity_measures(out.coupling, BandWindow(100, 50, max_r=10)).q_ratio < 0.05

    def test_deterministic(self):
        a = build_sparse_ensemble(EnsembleSpec(80, 5, (), 2.0, 3))
        b = build_sparse_ensemble(EnsembleSpec(80, 5, (), 2.0, 3))
        assert np.array_equal(a.coupling.elements, b.coupling.elements)

    def test_band_profile_reproduced(self):
        spec = EnsembleSpec.with_profile({r: 1.0 / r for r in range(1, 9)}, size_N=100, spread_sigma=3.0)
        acc = np.zeros(9)
        cnt = np.zeros(9)
        for seed in range(120):
            x = build_sparse_ensemble(EnsembleSpec(spec.size_N, spec.band_b, spec.profile, spec.spread_sigma, seed))
            e = x.coupling.elements
            for r in range(1, 9):
                d = np.diagonal(e, r)
                acc[r] += d.sum()
                cnt[r] += d.size
        measured = acc[1:] / cnt[1:]
        assert np.allclose(measured, spec.band_profile()[1:], rtol=0.10)

    def test_outside_band_zero_and_uniform_levels(self):
        out = build_sparse_ensemble(EnsembleSpec(50, 4, (), 1.0, 0))
        e = out.coupling.elements
        idx = np.arange(50)
        assert np.all(e[np.abs(idx[:, None] - idx[None, :]) > 4] == 0)
        assert np.array_equal(out.levels.energies, np.arange(50.0))
        assert out.levels.density == 1.0

    @pytest.mark.parametrize("kw", [
        dict(size_N=20, band_b=10),
        dict(band_b=0),
        dict(spread_sigma=-1.0),
        dict(band_b=3, profile=(1.0, 1.0)),
        dict(band_b=2, profile=(1.0, -1.0)),
    ])
    def test_spec_validation(self, kw):
        with pytest.raises(ValueError):
            EnsembleSpec(**kw)


class TestReferences:
    def test_wall_unit_case(self):
        assert wall_reference(1.0, 0.5, 1.0, 1.0) == 4.0 / (3.0 * math.pi)

    def test_wall_scalings(self):
        base = wall_reference(2.0, 3.0, 5.0, 0.7)
        assert wall_reference(2.0, 12.0, 5.0, 0.7) == pytest.approx(8 * base, rel=1e-14)
        assert wall_reference(2.0, 3.0, 5.0, 1.4) == pytest.approx(4 * base, rel=1e-14)

    @pytest.mark.parametrize("args", [(0, 1, 1, 1), (1, -1, 1, 1), (1, 1, 0, 1), (1, 1, 1, 0)])
    def test_wall_rejects(self, args):
        with pytest.raises(ValueError):
            wall_reference(*args)

    def test_drude(self):
        assert drude_reference(1, 7.0, 7.0) == 1.0 / (2.0 * math.pi)
        assert drude_reference(3, 4.0, 9.0) == pytest.approx(2 * drude_reference(3, 2.0, 9.0), rel=1e-15)
        with pytest.raises(ValueError):
            drude_reference(0, 1.0, 1.0)
        with pytest.raises(ValueError):
            drude_reference(1, 0.0, 1.0)

    def test_born_scaling(self):
        assert born_mean_free_path(0.0) == math.inf
        l1 = born_mean_free_path(1.0, 1.0, 2.0)
        assert born_mean_free_path(2.0, 1.0, 2.0) == pytest.approx(l1 / 4, rel=1e-15)
        g1 = drude_reference(2, l1, 100.0)
        assert drude_reference(2, born_mean_free_path(2.0, 1.0, 2.0), 100.0) == pytest.approx(g1 / 4, rel=1e-15)

    def test_open_modes(self):
        assert open_modes(5, 1.0, 0.0) == 5
        assert open_modes(1, 1.0, 0.0) == 1
        assert open_modes(3, 1.0, 3.0) == 1
        assert open_modes(3, 1.0, 10.0) == 0
