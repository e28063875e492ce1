import math

import numpy as np
import pytest

from oracles import fgr_rate, kubo_from_rates, random_symmetric, textbook_conductance
from slrt.averages import resistor_network_average
from slrt.core import CouplingMatrix, LevelSet
from slrt.models import RingSpec, build_ring
from slrt.response import (
    DegenerateLevelsError,
    OccupationSpec,
    ResponseResult,
    absorption,
    conductance,
    default_window,
    fgr_rates,
    joule_absorption,
    kubo_diffusion,
    make_spectral_weight,
    slrt_detail,
    slrt_diffusion,
)


def jittered_levels(rng, n, spacing=1.0, jitter=0.3):
    e = spacing * (np.arange(n) + jitter * rng.uniform(-0.5, 0.5, n))
    return LevelSet.from_energies(np.sort(e))


class TestSpectralWeightBuilder:
    def test_rectangular_b3(self):
        s = make_spectral_weight(1.0, "rectangular", 3.0, 1.0)
        assert s.as_dict() == {r: pytest.approx(1 / 6) for r in (-3, -2, -1, 1, 2, 3)}

    @pytest.mark.parametrize("shape", ["rectangular", "gaussian", "lorentzian"])
    @pytest.mark.parametrize("b_c", [1.0, 2.5, 10.0, 37.0])
    def test_normalized(self, shape, b_c):
        s = make_spectral_weight(0.5, shape, b_c / 2.0, 2.0)
        assert sum(s.as_dict().values()) == pytest.approx(1.0, abs=1e-12)
        assert s.band_weight[0] == 0.0
        assert s.cutoff_band == pytest.approx(b_c)

    def test_lorentzian_truncation_mass(self):
        b = 10.0
        # sum_{r>=1} 1/(1+(r/b)^2) = (pi b coth(pi b) - 1)/2
        total = 0.5 * (math.pi * b / math.tanh(math.pi * b) - 1.0)
        kept_default = sum(1.0 / (1.0 + (r / b) ** 2) for r in range(1, int(100 * b) + 1))
        kept_10 = sum(1.0 / (1.0 + (r / b) ** 2) for r in range(1, int(10 * b) + 1))
        assert 1 - kept_default / total < 0.01
        # a cut at 10 b_c would drop several percent of the weight
        assert 1 - kept_10 / total == pytest.approx(1 - 2 / math.pi * math.atan(10), abs=3e-3)
        s = make_spectral_weight(1.0, "lorentzian", b, 1.0)
        assert s.r_max == int(100 * b)

    def test_narrow_band_rejected(self):
        with pytest.raises(ValueError):
            make_spectral_weight(1.0, "rectangular", 0.4, 2.0)
        with pytest.raises(ValueError):
            make_spectral_weight(1.0, "boxcar", 3.0, 1.0)

    def test_spectrum_height(self):
        s = make_spectral_weight(2.0, "rectangular", 5.0, 1.0)
        # 2 pi rms^2 rho F
        assert s.spectrum(3.0) == pytest.approx(2 * math.pi * 4.0 * 0.1)
        assert s.spectrum(5.5) == 0.0


class TestOccupation:
    def test_microcanonical(self):
        p = OccupationSpec.microcanonical(5, 2).weights(LevelSet.uniform(10))
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.count_nonzero(p) == 5 and p[3] == p[7] == 0.2

    def test_microcanonical_out_of_range(self):
        with pytest.raises(ValueError):
            OccupationSpec.microcanonical(1, 3).weights(LevelSet.uniform(10))

    def test_thermal_normalized(self):
        lv = LevelSet.uniform(200, spacing=0.1)
        for occ in (OccupationSpec.boltzmann(0.7), OccupationSpec.fermi_window(10.0, 0.3)):
            assert occ.weights(lv).sum() == pytest.approx(1.0, abs=1e-12)
        assert OccupationSpec.fermi_window(10.0, 0.3).peak_index(lv) == 100

    def test_fermi_density(self):
        lv = LevelSet.uniform(400, spacing=0.05)
        assert OccupationSpec.fermi_window(10.0, 0.5).density(lv) == pytest.approx(20.0, rel=1e-6)

    @pytest.mark.parametrize("kw", [
        dict(kind="grand"), dict(kind="boltzmann", temperature=0.0), dict(kind="fermi_window", temperature=1.0),
        dict(kind="microcanonical"),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            OccupationSpec(**kw)


class TestRates:
    def test_constant_uniform(self):
        x, spacing = 0.3, 0.5
        lv = LevelSet.uniform(30, spacing)
        s = make_spectral_weight(1.5, "rectangular", 4.0 * spacing, 1 / spacing)
        w = fgr_rates(CouplingMatrix(x * (1 - np.eye(30))), lv, s).rates
        s0 = 2 * math.pi * 1.5**2 * (1 / spacing) / 8
        for n, m in [(3, 4), (10, 14), (20, 17)]:
            assert w[n, m] == pytest.approx(x * s0 / ((n - m) * spacing) ** 2, rel=1e-14)
        assert w[0, 5] == 0.0

    def test_zero_and_symmetry(self, rng):
        lv = jittered_levels(rng, 40)
        s = make_spectral_weight(1.0, "gaussian", 3.0, 1.0)
        assert np.all(fgr_rates(CouplingMatrix(np.zeros((40, 40))), lv, s).rates == 0)
        w = fgr_rates(CouplingMatrix(random_symmetric(rng, 40)), lv, s).rates
        assert np.array_equal(w, w.T)
        assert np.all(np.diag(w) == 0)

    def test_matches_pair_oracle(self, rng):
        lv = jittered_levels(rng, 20)
        x = random_symmetric(rng, 20)
        s = make_spectral_weight(0.7, "rectangular", 4.0, 1.0)
        w = fgr_rates(CouplingMatrix(x), lv, s).rates
        e = lv.energies
        for n in range(20):
            for m in range(20):
                if n != m:
                    assert w[n, m] == pytest.approx(fgr_rate(x[n, m], e[n] - e[m], 0.7, 4.0, 1.0), rel=1e-13)

    def test_degenerate_pairs(self):
        lv = LevelSet(np.array([0.0, 1.0, 1.0, 2.0]), 1.0)
        x = CouplingMatrix(np.ones((4, 4)))
        s = make_spectral_weight(1.0, "rectangular", 2.0, 1.0)
        net = fgr_rates(x, lv, s)
        assert net.excluded_pairs == ((1, 2),)
        assert net.rates[1, 2] == 0.0
        with pytest.raises(DegenerateLevelsError):
            fgr_rates(x, lv, s, strict=True)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            fgr_rates(CouplingMatrix(np.zeros((3, 3))), LevelSet.uniform(4), make_spectral_weight(1, "rectangular", 1, 1))


class TestKubo:
    def test_constant_closed_form(self):
        n, x, spacing = 200, 0.25, 0.1
        lv = LevelSet.uniform(n, spacing)
        s = make_spectral_weight(1.3, "rectangular", 10 * spacing, 1 / spacing)
        d = kubo_diffusion(CouplingMatrix(x * (1 - np.eye(n))), lv, s, OccupationSpec.microcanonical(100, 20))
        assert d == pytest.approx(math.pi * (1 / spacing) * x * 1.3**2, rel=1e-12)

    def test_matches_rate_double_sum(self, rng):
        for _ in range(3):
            n = 30
            lv = jittered_levels(rng, n)
            x = random_symmetric(rng, n, spread=2)
            s = make_spectral_weight(1.1, "rectangular", 5.0, 1.0)
            occ = OccupationSpec.microcanonical(15, 5)
            p = occ.weights(lv)
            ref = kubo_from_rates(x, lv.energies, p, 1.1, 5.0, 1.0)
            assert kubo_diffusion(CouplingMatrix(x), lv, s, occ) == pytest.approx(ref, rel=1e-12)

    def test_linear_in_drive(self, rng):
        lv = LevelSet.uniform(50)
        x = CouplingMatrix(random_symmetric(rng, 50))
        s = make_spectral_weight(1.0, "gaussian", 3.0, 1.0)
        occ = OccupationSpec.microcanonical(25, 5)
        assert kubo_diffusion(x, lv, s.scaled(3.7), occ) == pytest.approx(3.7 * kubo_diffusion(x, lv, s, occ), rel=1e-13)

    def test_relabelling_invariance(self, rng):
        n = 40
        lv = jittered_levels(rng, n)
        x = random_symmetric(rng, n)
        s = make_spectral_weight(1.0, "rectangular", 4.0, 1.0)
        p = rng.uniform(size=n)
        p /= p.sum()
        # mirror the spectrum: E -> -E, reversing the index order
        lv_r = LevelSet.from_energies(-lv.energies[::-1])
        d = kubo_diffusion(CouplingMatrix(x), lv, s, p)
        d_r = kubo_diffusion(CouplingMatrix(x[::-1, ::-1]), lv_r, s, p[::-1])
        assert d_r == pytest.approx(d, rel=1e-13)

    def test_degenerate_pairs_kept(self):
        lv = LevelSet(np.array([0.0, 1.0, 1.0, 2.0]), 1.0)
        s = make_spectral_weight(1.0, "rectangular", 2.0, 1.0)
        x = np.zeros((4, 4))
        x[1, 2] = x[2, 1] = 1.0
        assert kubo_diffusion(CouplingMatrix(x), lv, s, OccupationSpec.microcanonical(1, 0)) > 0


class TestSlrt:
    def test_constant_equals_lrt(self):
        n = 200
        lv = LevelSet.uniform(n)
        x = CouplingMatrix(0.5 * (1 - np.eye(n)))
        s = make_spectral_weight(1.0, "rectangular", 10.0, 1.0)
        occ = OccupationSpec.microcanonical(100, 0)
        d_lrt = kubo_diffusion(x, lv, s, occ)
        d_slrt = slrt_diffusion(x, lv, s, default_window(n, 100, 200), probes="interior")
        assert d_slrt == pytest.approx(d_lrt, rel=2e-3)

    def test_never_exceeds_window_average(self, rng):
        # Thomson bound: the linear potential is a trial solution, so the two-probe
        # value cannot exceed the weighted algebraic average over the same window
        n = 150
        lv = LevelSet.uniform(n)
        s = make_spectral_weight(1.0, "rectangular", 8.0, 1.0)
        for _ in range(10):
            x = CouplingMatrix(random_symmetric(rng, n, band=12, spread=rng.uniform(0, 5)))
            win = default_window(n, 75, 100)
            lo, hi = win.bounds(n)
            f = s.weight_matrix(hi - lo)
            d_alg = math.pi * s.intensity * np.sum(f * x.elements[lo:hi, lo:hi]) / f.sum()
            assert slrt_diffusion(x, lv, s, win) <= d_alg * (1 + 1e-9)

    def test_two_routes_agree(self, rng):
        n = 120
        spacing = 0.25
        lv = LevelSet.uniform(n, spacing)
        rho = 1 / spacing
        s = make_spectral_weight(0.8, "rectangular", 6 * spacing, rho)
        for _ in range(5):
            x = CouplingMatrix(random_symmetric(rng, n, band=10, spread=3))
            win = default_window(n, 60, 100)
            lo, hi = win.bounds(n)
            d_net = slrt_diffusion(x, lv, s, win)
            s_dimless = make_spectral_weight(1.0, "rectangular", 6.0, 1.0)
            avg = resistor_network_average(x.submatrix(lo, hi), s_dimless)
            assert d_net == pytest.approx(math.pi * rho * avg * s.intensity, rel=1e-10)

    def test_disconnected_window(self):
        n = 60
        x = np.ones((n, n)) - np.eye(n)
        x[:30, 30:] = x[30:, :30] = 0.0
        det = slrt_detail(CouplingMatrix(x), LevelSet.uniform(n), make_spectral_weight(1.0, "rectangular", 3.0, 1.0),
                          default_window(n, 30, 40))
        assert det.diffusion == 0.0 and not det.connected

    def test_window_from_occupation(self):
        n = 300
        x = CouplingMatrix(1 - np.eye(n))
        lv = LevelSet.uniform(n)
        det = slrt_detail(x, lv, make_spectral_weight(1.0, "rectangular", 3.0, 1.0),
                          occupation=OccupationSpec.microcanonical(220, 3))
        assert det.bounds == (170, 270)

    def test_tiny_window_rejected(self):
        from slrt.core import BandWindow

        with pytest.raises(ValueError):
            BandWindow(2, 1, span=1)


class TestConductance:
    def test_constant_velocity(self):
        n, x, L = 200, 0.9, 7.0
        spacing = 0.05
        lv = LevelSet.uniform(n, spacing)
        rho = 1 / spacing
        s = make_spectral_weight(1.0, "rectangular", 10 * spacing, rho)
        occ = OccupationSpec.microcanonical(100, 0)
        g_lrt, g_slrt = conductance(x * (1 - np.eye(n)), lv, s, occ, L, default_window(n, 100, 200), probes="interior")
        expected = math.pi * rho**2 * x / L**2
        assert g_lrt == pytest.approx(expected, rel=1e-12)
        assert g_slrt == pytest.approx(expected, rel=2e-3)

    def test_textbook_double_sum(self, rng):
        for _ in range(3):
            n, L = 40, 12.0
            lv = jittered_levels(rng, n, spacing=0.2)
            v2 = random_symmetric(rng, n, spread=1)
            rho = lv.density
            s = make_spectral_weight(1.0, "rectangular", 4.0 / rho, rho)
            e_f, t = float(lv.energies[20]), 0.4
            occ = OccupationSpec.fermi_window(e_f, t)
            g_lrt, _ = conductance(v2, lv, s, occ, L)
            ref = textbook_conductance(v2, L, lv.energies, e_f, t, 4.0, rho)
            assert g_lrt == pytest.approx(ref, rel=1e-10)

    def test_clean_ring_blocks_slrt(self):
        spec = RingSpec(length_L=60, width_M=3, disorder_W=0.0)
        out = build_ring(spec)
        n = out.levels.size
        win = default_window(n, n // 2, n // 4)
        lo, hi = win.bounds(n)
        rho = out.levels.measured_density(lo, hi)
        s = make_spectral_weight(1.0, "rectangular", 10 / rho, rho)
        occ = OccupationSpec.microcanonical(lo + (hi - lo) // 2, (hi - lo - 1) // 2)
        g_lrt, g_slrt = conductance(out.velocity_sq, out.levels, s, occ, spec.length_L, win)
        assert g_lrt > 0
        assert g_slrt < 1e-6 * g_lrt

    def test_bad_length(self):
        with pytest.raises(ValueError):
            conductance(np.zeros((3, 3)), LevelSet.uniform(3), make_spectral_weight(1, "rectangular", 1, 1),
                        OccupationSpec.microcanonical(1), 0.0)


class TestAbsorption:
    def test_examples(self):
        assert absorption(2.0, OccupationSpec.fermi_window(0.0, 1.0), density=1.0) == 2.0
        assert absorption(1.0, OccupationSpec.boltzmann(5.0), particle_count=10) == 2.0

    def test_errors(self):
        with pytest.raises(ValueError):
            absorption(-1.0, OccupationSpec.boltzmann(1.0))
        with pytest.raises(ValueError):
            absorption(1.0, OccupationSpec.fermi_window(0.0, 1.0))
        with pytest.raises(ValueError):
            OccupationSpec.boltzmann(-2.0)

    def test_joule_matches_density_route(self, rng):
        n, L = 60, 10.0
        lv = jittered_levels(rng, n, spacing=0.1)
        v2 = random_symmetric(rng, n)
        rho = lv.density
        rms = 0.6
        s = make_spectral_weight(rms, "rectangular", 5 / rho, rho)
        occ = OccupationSpec.fermi_window(float(lv.energies[30]), 0.3)
        g_lrt, _ = conductance(v2, lv, s, occ, L)
        d_lrt = kubo_diffusion(CouplingMatrix(v2 / L**2), lv, s, occ)
        ear = absorption(d_lrt, occ, density=occ.density(lv))
        assert joule_absorption(g_lrt, rms) == pytest.approx(ear, rel=1e-10)


def test_result_violations():
    ok = ResponseResult(1.0, 0.5, 1.0, 0.5, 1.0, 0.5, 1.0, 0.5, 1.0)
    assert ok.violations() == []
    bad = ResponseResult(0.5, 1.0, 1.0, -0.1, 1.0, 2.0, 1.0, 0.5, 1.0)
    assert set(bad.violations()) == {"d_slrt > d_lrt", "g_slrt < 0"}
    assert ok.to_dict()["d_slrt"] == 0.5
