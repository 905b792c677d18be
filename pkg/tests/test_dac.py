import math

import numpy as np
import pytest

from secmimo.channel import LargeScaleFading, complex_gaussian, sample_channels
from secmimo.corrmat import CorrelationSpec, build_correlation
from secmimo.dac import (DacModel, distortion_factor, quantization_noise_cov,
                         quantize)
from secmimo.precoder import build_precoder_set, transmit

from oracles import lloyd_max_rho


class TestDistortionFactor:
    def test_ideal(self):
        assert distortion_factor(math.inf) == 0.0

    def test_one_bit_closed_form(self):
        # 2-level Lloyd-Max quantizer for a Gaussian has MSE 1 - 2/pi
        assert lloyd_max_rho(1) == pytest.approx(1.0 - 2.0 / math.pi, abs=1e-9)
        assert distortion_factor(1) == pytest.approx(1.0 - 2.0 / math.pi, abs=5e-5)

    @pytest.mark.parametrize("bits", [1, 2, 3, 4])
    def test_table_matches_lloyd_max_to_three_figures(self, bits):
        assert distortion_factor(bits) == pytest.approx(lloyd_max_rho(bits),
                                                        rel=5e-3)

    def test_high_resolution_formula(self):
        # oracle: direct evaluation of (sqrt(3)*pi/2) * 2**(-16)
        expected = (math.sqrt(3.0) * math.pi / 2.0) * 2.0 ** (-16)
        assert distortion_factor(8) == pytest.approx(expected, rel=1e-12)
        assert distortion_factor(8) == pytest.approx(4.1515e-5, rel=1e-4)

    def test_strictly_decreasing_in_bits(self):
        values = [distortion_factor(b) for b in range(1, 12)]
        values.append(distortion_factor(math.inf))
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_invalid_bits(self):
        with pytest.raises(ValueError):
            distortion_factor(0)
        with pytest.raises(ValueError):
            distortion_factor(2.5)


class TestDacModel:
    def test_rho_prime_consistent(self):
        for bits in (1, 2, 3, 4, 6, 10, math.inf):
            model = DacModel.for_bits(bits)
            assert abs(model.rho_prime - model.rho / (1.0 - model.rho)) <= 1e-15

    def test_labels(self):
        assert DacModel.for_bits(1).label == "1"
        assert DacModel.for_bits(math.inf).label == "inf"
        assert DacModel.for_bits(math.inf).is_ideal

    def test_from_rho_range(self):
        with pytest.raises(ValueError):
            DacModel.from_rho(1.0)


def _precoders(n=32, k=4, xi=0.7, p=2.0, zeta=0.3, seed=0):
    corr = build_correlation(CorrelationSpec.exponential(zeta), n)
    rng = np.random.default_rng(seed)
    pair = sample_channels(n, k, 1, LargeScaleFading.unit(k), corr.R_half, rng)
    return build_precoder_set(pair.H, p, xi), rng


class TestQuantizationNoiseCov:
    def test_zero_rho(self):
        ps, _ = _precoders()
        assert np.all(quantization_noise_cov(ps.W, ps.V, ps.mu, ps.nu, 0.0) == 0.0)

    def test_hand_built_single_user_all_data_power(self):
        # xi = 1: only the data precoder contributes, rho * mu * diag(W W^H)
        w = np.array([[1.0], [1.0j], [0.5], [0.0]])
        v = np.zeros((4, 3), dtype=complex)
        cq = quantization_noise_cov(w, v, mu=2.0, nu=0.0, rho=0.25)
        assert np.allclose(cq, 0.25 * 2.0 * np.array([1.0, 1.0, 0.25, 0.0]))

    def test_asymptotic_uniform_level(self):
        # entries approach rho * P / N; check the mean over realizations
        n, k, p, xi = 256, 16, 10.0, 0.7
        corr = build_correlation(CorrelationSpec.exponential(0.2), n)
        fading = LargeScaleFading.unit(k)
        rng = np.random.default_rng(42)
        acc = np.zeros(n)
        reps = 200
        for _ in range(reps):
            pair = sample_channels(n, k, 4, fading, corr.R_half, rng)
            ps = build_precoder_set(pair.H, p, xi)
            acc += quantization_noise_cov(ps.W, ps.V, ps.mu, ps.nu, 0.3634)
        acc /= reps
        target = 0.3634 * p / n
        assert np.max(np.abs(acc - target)) / target <= 0.10


class TestQuantize:
    def test_identity_at_zero_rho(self):
        rng = np.random.default_rng(1)
        x = complex_gaussian(64, rng)
        z = quantize(x, np.zeros(64), 0.0, rng)
        assert np.array_equal(z, x)

    @pytest.mark.parametrize("rho", [0.0, 0.3634, 0.1175])
    def test_power_conservation(self, rho):
        # with exact precoder normalization the quantizer preserves E||z||^2 = P
        p = 2.0
        ps, rng = _precoders(p=p)
        n = ps.W.shape[0]
        cq = quantization_noise_cov(ps.W, ps.V, ps.mu, ps.nu, rho)
        total = 0.0
        draws = 10000
        for _ in range(draws):
            s = complex_gaussian(ps.W.shape[1], rng)
            t = complex_gaussian(ps.V.shape[1], rng)
            x = transmit(ps.W, ps.V, s, t, ps.mu, ps.nu)
            z = quantize(x, cq, rho, rng)
            total += np.sum(np.abs(z) ** 2)
        assert total / draws == pytest.approx(p, rel=0.03)

    def test_decomposition_energy(self):
        # E||z||^2 = (1-rho) E||x||^2 + tr(C_q), with q independent of x
        rho = 0.3634
        ps, rng = _precoders()
        cq = quantization_noise_cov(ps.W, ps.V, ps.mu, ps.nu, rho)
        draws = 10000
        zs = 0.0
        xs = 0.0
        for _ in range(draws):
            s = complex_gaussian(ps.W.shape[1], rng)
            t = complex_gaussian(ps.V.shape[1], rng)
            x = transmit(ps.W, ps.V, s, t, ps.mu, ps.nu)
            z = quantize(x, cq, rho, rng)
            zs += np.sum(np.abs(z) ** 2)
            xs += np.sum(np.abs(x) ** 2)
        expected = (1.0 - rho) * xs / draws + np.sum(cq)
        assert zs / draws == pytest.approx(expected, rel=0.03)

    def test_noise_uncorrelated_with_input(self):
        rho = 0.1175
        ps, rng = _precoders()
        cq = quantization_noise_cov(ps.W, ps.V, ps.mu, ps.nu, rho)
        draws = 10000
        x0 = np.empty(draws, dtype=complex)
        q0 = np.empty(draws, dtype=complex)
        for i in range(draws):
            s = complex_gaussian(ps.W.shape[1], rng)
            t = complex_gaussian(ps.V.shape[1], rng)
            x = transmit(ps.W, ps.V, s, t, ps.mu, ps.nu)
            z = quantize(x, cq, rho, rng)
            x0[i] = x[0]
            q0[i] = z[0] - math.sqrt(1.0 - rho) * x[0]
        corr = np.abs(np.mean(x0 * q0.conj())) / (np.std(x0) * np.std(q0))
        assert corr <= 0.02

    def test_negative_variance_rejected(self):
        rng = np.random.default_rng(2)
        with pytest.raises(ValueError):
            quantize(np.ones(3, dtype=complex), np.array([0.1, -0.1, 0.2]),
                     0.1, rng)
