import numpy as np
import pytest

from conftest import random_pairs
from eitsq.eit import EitParams
from eitsq.measurement import (
    BI,
    MONO,
    AnalyzerConfig,
    ChannelSpec,
    LoConfig,
    apply_channel,
    band_nodes,
    eit_channel,
    measure,
    noise_bi,
    noise_mono,
    noise_scan_vs_control_detuning,
    rbw_average,
)
from eitsq.opo import OpoParams, calibrate_opo, opo_spectrum
from eitsq.spectral import (
    DegenerateCovariance,
    FrequencyGrid,
    PairCovariance,
    SqueezingSpectrum,
    check_physical,
    degenerate_noise,
    pair_noise,
    pairs_physical,
)

M_PURE = -np.sqrt(0.75)
GRID = FrequencyGrid(8, 0.5e6)   # detunings 0 .. 2 MHz


def flat_spectrum(grid, n, m, n0=None, m0=None):
    size = grid.n_points // 2 + 1
    carrier = DegenerateCovariance(n if n0 is None else n0, m if m0 is None else m0)
    return SqueezingSpectrum(grid, np.full(size, n), np.full(size, n), np.full(size, m, complex), carrier)


def const_transfer(value):
    return lambda delta: np.full(np.shape(delta), value, dtype=complex)


class TestChannel:
    def test_identity(self):
        spec = opo_spectrum(OpoParams(0.4, 5e6, 0.8), GRID)
        out = apply_channel(spec, ChannelSpec())
        assert np.array_equal(out.n_plus, spec.n_plus)
        assert np.array_equal(out.m, spec.m)
        assert out.carrier == spec.carrier

    def test_one_sided_absorption_decorrelates(self):
        spec = flat_spectrum(GRID, 0.5, M_PURE)
        ch = ChannelSpec(lambda d: np.where(np.asarray(d) >= 0, 1.0, 0.0).astype(complex))
        out = apply_channel(spec, ch)
        assert out.n_plus[1:] == pytest.approx(0.5)
        assert not out.n_minus[1:].any() and not out.m[1:].any()
        pair = out.pair(1e6)
        values = [pair_noise(pair, th).s for th in np.linspace(0, np.pi, 7)]
        assert values == pytest.approx([1.5] * 7)

    def test_three_db_loss_arithmetic(self):
        out = apply_channel(flat_spectrum(GRID, 0.5, M_PURE), ChannelSpec(const_transfer(np.sqrt(0.5))))
        pair = out.pair(1e6)
        assert pair.n_plus == pytest.approx(0.25)
        assert pair.m.real == pytest.approx(-0.433, abs=5e-4)
        assert pair_noise(pair, 0.0).s == pytest.approx(0.634, abs=5e-4)

    def test_three_db_loss_monte_carlo_beamsplitter(self):
        # Wigner samples of the pure pair through a physical beamsplitter with vacuum
        rng = np.random.default_rng(11)
        n, m, eta, size = 0.5, M_PURE, 0.5, 400_000
        cov = np.array([[n + 0.5, m], [m, n + 0.5]])
        chol = np.linalg.cholesky(cov)
        z = (rng.standard_normal((2, size)) + 1j * rng.standard_normal((2, size))) / np.sqrt(2)
        a_plus, a_minus_conj = chol @ z
        vac = (rng.standard_normal((2, size)) + 1j * rng.standard_normal((2, size))) / np.sqrt(4)
        b_plus = np.sqrt(eta) * a_plus + np.sqrt(1 - eta) * vac[0]
        b_minus = np.sqrt(eta) * np.conj(a_minus_conj) + np.sqrt(1 - eta) * vac[1]
        n_est = np.mean(np.abs(b_plus) ** 2) - 0.5
        m_est = np.mean(b_plus * b_minus)
        s_est = 1 + 2 * n_est + 2 * m_est.real
        assert n_est == pytest.approx(0.25, abs=0.01)
        assert m_est.real == pytest.approx(-0.433, abs=0.01)
        assert s_est == pytest.approx(0.634, abs=0.01)

    def test_phase_enters_through_correlation(self):
        # a pure phase shift on one side rotates the measured quadrature
        spec = flat_spectrum(GRID, 0.5, M_PURE)
        phi = 0.3
        ch = ChannelSpec(lambda d: np.where(np.asarray(d) > 0, np.exp(2j * phi), 1.0 + 0j))
        pair = apply_channel(spec, ch).pair(1e6)
        for th in (0.0, 0.7):
            assert pair_noise(pair, th).s == pytest.approx(pair_noise(spec.pair(1e6), th - phi).s, rel=1e-12)

    def test_preserves_physicality(self):
        rng = np.random.default_rng(5)
        g = FrequencyGrid(2000, 1e3)
        size = 1001
        for _ in range(10):
            n_p, n_m, m = random_pairs(rng, size)
            spec = SqueezingSpectrum(g, n_p, n_m, m)
            amp = rng.uniform(0, 1, 2 * size + 1) * np.exp(2j * np.pi * rng.uniform(size=2 * size + 1))

            def transfer(d, amp=amp):
                return amp[np.rint(np.asarray(d) / 1e3).astype(int) + size]

            out = apply_channel(spec, ChannelSpec(transfer, rng.uniform(0.1, 1)))
            assert pairs_physical(out.n_plus, out.n_minus, out.m).all()
            assert all(check_physical(PairCovariance(a, b, c)) for a, b, c in zip(out.n_plus[::50], out.n_minus[::50], out.m[::50]))

    def test_rejects_active_channel_and_bad_efficiency(self):
        with pytest.raises(ValueError):
            ChannelSpec(const_transfer(1.1)).amplitude(0.0)
        with pytest.raises(ValueError):
            ChannelSpec(eta_path=0.0)
        with pytest.raises(ValueError):
            ChannelSpec(eta_path=1.5)

    def test_full_absorption_gives_vacuum(self):
        spec = opo_spectrum(OpoParams(0.6, 5e6, 1.0), GRID)
        out = apply_channel(spec, ChannelSpec(const_transfer(0.0)))
        for kind in (MONO, BI):
            for th in (0.0, 1.0):
                assert measure(out, LoConfig(kind, 1e6, th)).s == 1.0


class TestNoise:
    def test_vacuum(self):
        spec = SqueezingSpectrum.vacuum(GRID)
        for kind in (MONO, BI):
            assert measure(spec, LoConfig(kind, 0.5e6, 0.4)).s == 1.0

    def test_mono_is_pair_noise_at_epsilon(self):
        spec = opo_spectrum(OpoParams(0.4, 5e6, 0.8), GRID)
        lo = LoConfig(MONO, 1e6, 0.3)
        assert noise_mono(spec, lo).s == pair_noise(spec.pair(1e6), 0.3).s

    def test_combination_arithmetic(self):
        # S0 = 0.5 from a squeezed carrier, S2eps = 1 from vacuum sidebands
        n0, m0 = (0.5 + 2.0 - 2) / 4, (0.5 - 2.0) / 4
        carrier = DegenerateCovariance(n0, m0)
        assert degenerate_noise(carrier, 0.0).s == pytest.approx(0.5)
        spec = SqueezingSpectrum(GRID, np.zeros(5), np.zeros(5), np.zeros(5), carrier)
        r = noise_bi(spec, LoConfig(BI, 1e6, 0.0))
        assert r.s == pytest.approx(0.75)
        assert r.db == pytest.approx(-1.25, abs=5e-3)

    def test_floor_with_absorbed_sidebands(self):
        for db in (10, 20, 30, 60):
            s0 = 10 ** (-db / 10)
            n0 = (s0 + 1 / s0 - 2) / 4
            m0 = (s0 - 1 / s0) / 4
            spec = SqueezingSpectrum(GRID, np.zeros(5), np.zeros(5), np.zeros(5), DegenerateCovariance(n0, m0))
            s = noise_bi(spec, LoConfig(BI, 1e6, 0.0)).s
            assert s == pytest.approx(0.5 * (1 + s0), rel=1e-9)
            assert s >= 0.5

    def test_point_bi_close_to_mono_for_calibrated_source(self):
        spec = opo_spectrum(calibrate_opo(-1.60, 3.71), FrequencyGrid.covering(2.2e6, 1e3))
        for th in (0.0, np.pi / 2):
            mono = noise_mono(spec, LoConfig(MONO, 1e6, th)).db
            bi = noise_bi(spec, LoConfig(BI, 1e6, th)).db
            assert abs(bi - mono) < 0.2

    def test_uncertainty_product_on_channel_outputs(self):
        rng = np.random.default_rng(8)
        g = FrequencyGrid.covering(2.2e6, 1e4)
        size = g.n_points // 2 + 1
        for _ in range(50):
            n = rng.exponential(1.0, size)
            m = -np.sqrt(n * (n + 1)) * rng.uniform(0.5, 1.0)
            spec = SqueezingSpectrum(g, n, n, m, DegenerateCovariance(n[0], m[0]))
            eit = EitParams(rng.uniform(0, 10), 2 * np.pi * 2.9e6, 0.0, 2 * np.pi * rng.uniform(0.1, 3) * 1e6, 2 * np.pi * rng.uniform(-2, 2) * 1e6)
            out = apply_channel(spec, eit_channel(eit, rng.uniform(0.1, 1)))
            th = rng.uniform(0, np.pi)
            for kind in (MONO, BI):
                a = measure(out, LoConfig(kind, 1e6, th), AnalyzerConfig()).s
                b = measure(out, LoConfig(kind, 1e6, th + np.pi / 2), AnalyzerConfig()).s
                assert a * b >= 1 - 1e-9


class TestRbwAverage:
    grid = FrequencyGrid.covering(2e6, 1e3)

    def test_constant(self):
        assert rbw_average(lambda f: np.full(np.shape(f), 0.7), 1e6, 1e5, self.grid).s == pytest.approx(0.7, rel=1e-14)

    def test_linear_ramp_gives_centre_value(self):
        r = rbw_average(lambda f: 1 + np.asarray(f) / 1e6, 1e6, 1e5, self.grid)
        assert r.s == pytest.approx(2.0, rel=1e-13)

    def test_off_grid_band_edges(self):
        r = rbw_average(lambda f: 1 + np.asarray(f) / 1e6, 1.00037e6, 1e5, self.grid)
        assert r.s == pytest.approx(2.00037, rel=1e-13)

    def test_notch_dilution(self):
        depth, width, rbw = 0.4, 1e4, 1e5
        g = FrequencyGrid.covering(2e6, 10.0)

        def notch(f):
            return 1 - depth * (np.abs(np.asarray(f) - 1e6) < width / 2)

        assert rbw_average(notch, 1e6, rbw, g).s == pytest.approx(1 - depth / 10, abs=2e-3)

    def test_band_beyond_grid_rejected(self):
        with pytest.raises(ValueError):
            rbw_average(lambda f: np.ones_like(f), 1.99e6, 1e5, self.grid)

    def test_nodes(self):
        nodes = band_nodes(1e6, 1e5, 1e3)
        assert nodes[0] == 0.95e6 and nodes[-1] == 1.05e6
        assert len(nodes) == 101


class TestScan:
    def test_symmetric_under_control_detuning_sign(self):
        g = FrequencyGrid.covering(2.2e6, 1e3)
        source = opo_spectrum(calibrate_opo(-1.60, 3.71), g)
        eit = EitParams(4, 2 * np.pi * 2.9e6, 2 * np.pi * 1e3, 2 * np.pi * 1.3e6)
        scan = np.array([-2e6, -3e5, -1e5, 0.0, 1e5, 3e5, 2e6])
        _, s0, s90 = noise_scan_vs_control_detuning(source, eit, LoConfig(), AnalyzerConfig(), scan, 0.7)
        assert s0 == pytest.approx(s0[::-1], rel=1e-9)
        assert s90 == pytest.approx(s90[::-1], rel=1e-9)
        assert s0[3] < 1 < s90[3]


def test_floor_needs_uncorrelated_far_sidebands():
    # carrier and +/-2 eps pair squeezed in the same quadrature beat the -3 dB floor
    n = 2.0
    m = -np.sqrt(n * (n + 1))
    carrier = DegenerateCovariance((0.01 + 100 - 2) / 4, (0.01 - 100) / 4)
    spec = SqueezingSpectrum(GRID, np.full(5, n), np.full(5, n), np.full(5, m, complex), carrier)
    s = noise_bi(spec, LoConfig(BI, 1e6, 0.0)).s
    assert s == pytest.approx(0.5 * (0.01 + 1 + 2 * n + 2 * m))
    assert s < 0.5
