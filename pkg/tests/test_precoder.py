import numpy as np
import pytest

from secmimo.channel import LargeScaleFading, complex_gaussian, sample_channels
from secmimo.corrmat import CorrelationSpec, build_correlation
from secmimo.precoder import (build_precoder_set, mf_precoder, null_space_an,
                              power_split, transmit)


def _random_channel(n=32, k=4, zeta=0.0, seed=0, betas=None):
    corr = build_correlation(CorrelationSpec.exponential(zeta), n)
    fading = (LargeScaleFading.unit(k) if betas is None
              else LargeScaleFading(betas=np.asarray(betas, dtype=float)))
    rng = np.random.default_rng(seed)
    return sample_channels(n, k, 1, fading, corr.R_half, rng).H, rng


class TestMfPrecoder:
    def test_single_user_axis_channel(self):
        h = np.zeros((1, 4), dtype=complex)
        h[0, 0] = 1.0
        w = mf_precoder(h)
        assert np.allclose(w, h.conj().T)
        assert (h @ w)[0, 0] == pytest.approx(1.0)

    def test_frobenius_normalization_exact(self):
        H, _ = _random_channel(seed=1)
        w = mf_precoder(H)
        assert np.trace(w @ w.conj().T).real == pytest.approx(4.0, abs=1e-12)

    def test_beamforming_gain_real_nonnegative(self):
        H, _ = _random_channel(seed=2, zeta=0.5)
        w = mf_precoder(H)
        gains = np.diagonal(H @ w)
        assert np.all(np.abs(gains.imag) <= 1e-12 * np.abs(gains.real))
        assert np.all(gains.real > 0)

    def test_beamforming_gain_limit(self):
        # E|h_k^T w_k|^2 approaches K N beta_k^2 / sum(beta) for large arrays
        n, k = 256, 16
        betas = np.linspace(0.5, 2.0, k)
        corr = build_correlation(CorrelationSpec.identity(), n)
        fading = LargeScaleFading(betas=betas)
        rng = np.random.default_rng(3)
        acc = np.zeros(k)
        draws = 400
        for _ in range(draws):
            H = sample_channels(n, k, 1, fading, corr.R_half, rng).H
            w = mf_precoder(H)
            acc += np.abs(np.diagonal(H @ w)) ** 2
        acc /= draws
        expected = k * n * betas ** 2 / betas.sum()
        assert np.max(np.abs(acc - expected) / expected) <= 0.05

    def test_rank_deficient_rejected(self):
        H, _ = _random_channel(seed=4)
        H[1] = H[0]
        with pytest.raises(ValueError, match="rank"):
            mf_precoder(H)


class TestNullSpace:
    def test_canonical_channel(self):
        k, n = 3, 8
        H = np.zeros((k, n), dtype=complex)
        H[:, :k] = np.eye(k)
        V, V0 = null_space_an(H)
        assert np.linalg.norm(H @ V) <= 1e-12
        # projector onto the null space is the lower-right identity block
        proj = V @ V.conj().T
        expected = np.zeros((n, n))
        expected[k:, k:] = np.eye(n - k)
        assert np.allclose(proj, expected, atol=1e-12)

    def test_random_channel_contract(self):
        H, _ = _random_channel(n=32, k=4, zeta=0.4, seed=5)
        V, V0 = null_space_an(H)
        assert np.linalg.norm(H @ V) <= 1e-10 * np.linalg.norm(H)
        basis = np.hstack([V, V0])
        assert np.max(np.abs(basis @ basis.conj().T - np.eye(32))) <= 1e-10
        assert np.max(np.abs(V.conj().T @ V - np.eye(28))) <= 1e-10
        assert np.max(np.abs(V0.conj().T @ V0 - np.eye(4))) <= 1e-10
        assert np.max(np.abs(V.conj().T @ V0)) <= 1e-10

    def test_rank_deficiency_reported(self):
        H, _ = _random_channel(seed=6)
        H[2] = 0.5 * H[0] + 0.25j * H[1]
        with pytest.raises(ValueError, match="rank"):
            null_space_an(H)

    def test_users_see_no_artificial_noise(self):
        H, _ = _random_channel(n=64, k=8, zeta=0.6, seed=7)
        V, _ = null_space_an(H)
        rows = H / np.linalg.norm(H, axis=1, keepdims=True)
        leak = np.sum(np.abs(rows @ V) ** 2, axis=1)
        assert np.max(leak) <= 1e-18


class TestPowerSplit:
    def test_all_power_to_data(self):
        mu, nu = power_split(1.0, 1.0, 256, 16)
        assert nu == 0.0
        assert mu == pytest.approx(1.0 / 16)

    def test_flagship_parameters(self):
        mu, nu = power_split(1.0, 0.7, 256, 16)
        assert mu == pytest.approx(0.04375, rel=1e-12)
        assert nu == pytest.approx(0.00125, rel=1e-12)

    def test_total_power_identity(self):
        for xi in (0.05, 0.41, 0.97, 1.0):
            mu, nu = power_split(3.0, xi, 100, 7)
            assert mu * 7 + nu * 93 == pytest.approx(3.0, rel=1e-12)

    def test_xi_domain(self):
        with pytest.raises(ValueError):
            power_split(1.0, 0.0, 16, 4)
        with pytest.raises(ValueError):
            power_split(1.0, 1.2, 16, 4)


class TestTransmit:
    def test_no_an_at_full_allocation(self):
        H, rng = _random_channel(seed=8)
        ps = build_precoder_set(H, 2.0, 1.0)
        s = complex_gaussian(4, rng)
        t = np.zeros(28, dtype=complex)
        x = transmit(ps.W, ps.V, s, t, ps.mu, ps.nu)
        assert np.allclose(x, np.sqrt(ps.mu) * (ps.W @ s))

    def test_mean_transmit_power(self):
        p = 2.0
        H, rng = _random_channel(seed=9)
        ps = build_precoder_set(H, p, 0.6)
        total = 0.0
        draws = 4000
        for _ in range(draws):
            s = complex_gaussian(4, rng)
            t = complex_gaussian(28, rng)
            total += np.sum(np.abs(transmit(ps.W, ps.V, s, t, ps.mu, ps.nu)) ** 2)
        assert total / draws == pytest.approx(p, rel=0.03)

    def test_an_only_power(self):
        p, xi = 2.0, 0.6
        H, rng = _random_channel(seed=10)
        ps = build_precoder_set(H, p, xi)
        total = 0.0
        draws = 4000
        for _ in range(draws):
            t = complex_gaussian(28, rng)
            total += np.sum(np.abs(transmit(ps.W, ps.V, np.zeros(4, dtype=complex),
                                            t, ps.mu, ps.nu)) ** 2)
        assert total / draws == pytest.approx((1 - xi) * p, rel=0.03)

    def test_dimension_mismatch(self):
        H, rng = _random_channel(seed=11)
        ps = build_precoder_set(H, 1.0, 0.5)
        with pytest.raises(ValueError):
            transmit(ps.W, ps.V, np.zeros(5, dtype=complex),
                     np.zeros(28, dtype=complex), ps.mu, ps.nu)
        with pytest.raises(ValueError):
            transmit(ps.W, ps.V, np.zeros(4, dtype=complex),
                     np.zeros(27, dtype=complex), ps.mu, ps.nu)


class TestAsymptotics:
    def test_diag_concentration(self):
        # diag(W W^H) -> (K/N) I and diag(V V^H) -> ((N-K)/N) I entrywise,
        # averaged over realizations
        n, k = 256, 16
        corr = build_correlation(CorrelationSpec.exponential(0.2), n)
        fading = LargeScaleFading.unit(k)
        rng = np.random.default_rng(12)
        acc_w = np.zeros(n)
        acc_v = np.zeros(n)
        reps = 300
        for _ in range(reps):
            H = sample_channels(n, k, 1, fading, corr.R_half, rng).H
            ps = build_precoder_set(H, 1.0, 0.7)
            acc_w += np.sum(np.abs(ps.W) ** 2, axis=1)
            acc_v += np.sum(np.abs(ps.V) ** 2, axis=1)
        acc_w /= reps
        acc_v /= reps
        assert np.max(np.abs(acc_w - k / n)) / (k / n) <= 0.10
        assert np.max(np.abs(acc_v - (n - k) / n)) / ((n - k) / n) <= 0.10

    def test_interference_limit(self, fig1_batches):
        # sample mean of (1-rho)*mu*sum_{j!=k} |h_k^T w_j|^2 against its
        # large-system value
        config, corr, batch = fig1_batches[0.2]
        rho = 0.3634
        mu = config.xi * config.P / config.K
        measured = np.mean((1 - rho) * mu * batch.intf2[:, 0])
        k, n = config.K, config.N
        expected = ((1 - rho) * mu * k * corr.tr_r2 * (k - 1) / (n * k))
        assert measured == pytest.approx(expected, rel=0.05)
