"""Ergodic secrecy rates: Monte-Carlo estimates and closed-form bounds.

The downlink under study: an N-antenna array serves K single-antenna users
with matched-filter precoding, injects artificial noise in the null space of
the user channels, and quantizes the transmit signal with b-bit DACs
(additive quantization-noise linearization). An M-antenna eavesdropper with
perfect CSI and negligible thermal noise tries to decode user k.

Closed forms implemented here, all functions of the scalar system
parameters plus tr(R^2) of the transmit correlation matrix:

* large-system lower bound on the per-user rate,
* large-system upper bound on the eavesdropper rate (via a moment-matched
  Wishart approximation of its interference covariance),
* the secrecy bound, their power-allocation derivative and the optimal
  power split xi*,
* the largest eavesdropper antenna ratio that still allows secrecy,
* distortion-factor derivatives of both bounds under the exponential
  correlation model.

The Monte-Carlo path simulates the exact finite-N chain. Per-realization
sufficient statistics are cached so one set of channel draws can be
re-evaluated across SNR, power-split, and DAC grids; realizations use
substreams spawned from the master seed, and reductions run in a fixed
order, so results are bit-identical regardless of worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import LargeScaleFading, realization_seeds, sample_channels
from .corrmat import (CorrelationSpec, CorrMatrix, build_correlation,
                      exponential_sq_trace, zeta_tilde)
from .dac import DacModel
from .precoder import power_split

LN2 = math.log(2.0)


class BoundUndefinedError(ValueError):
    """A closed-form bound's validity precondition fails for these parameters."""


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """All scalar system parameters for one operating point."""

    N: int
    K: int
    M: int
    dac: DacModel
    fading: LargeScaleFading
    corr: CorrelationSpec
    P: float = 1.0
    sigma_n2: float = 1.0
    sigma_e2: float = 0.0
    xi: float = 0.7

    def __post_init__(self):
        if self.K >= self.N:
            raise ValueError("requires K < N")
        if self.M >= self.N - self.K:
            raise ValueError("requires M < N - K (AN dimensions must exceed "
                             "eavesdropper antennas)")
        if self.fading.n_users != self.K:
            raise ValueError("fading must provide one beta per user")
        if self.P <= 0 or self.sigma_n2 <= 0 or self.sigma_e2 < 0:
            raise ValueError("powers must be positive (sigma_e2 nonnegative)")
        if not 0.0 < self.xi <= 1.0:
            raise ValueError("power allocation factor must lie in (0, 1]")

    # Derived ratios, always recomputed from the primary fields.
    @property
    def gamma0(self) -> float:
        return self.P / self.sigma_n2

    @property
    def rho(self) -> float:
        return self.dac.rho

    @property
    def rho_prime(self) -> float:
        return self.dac.rho_prime

    @property
    def a(self) -> float:
        return self.M / self.N

    @property
    def b(self) -> float:
        return self.K / self.N

    @property
    def phi(self) -> float:
        return 1.0 - self.b

    @property
    def kappa(self) -> float:
        return 1.0 - self.xi + self.rho_prime

    @property
    def varpi(self) -> float:
        return self.a * self.b * (1.0 - self.xi) ** 2

    def with_updates(self, **kwargs) -> "SystemConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class RateResult:
    """Per-user rates at one operating point (Monte-Carlo and closed form).

    ``std_err`` is the standard error of the Monte-Carlo secrecy estimate
    (per-realization user/eavesdropper difference); the individual standard
    errors are kept alongside for one-sided bound checks.
    """

    user_rate_mc: float
    user_rate_bound: float
    eve_rate_mc: float
    eve_rate_bound: float
    secrecy_mc: float
    secrecy_bound: float
    n_realizations: int
    std_err: float
    user_std_err: float = math.nan
    eve_std_err: float = math.nan


def resolve_tr_r2(config: SystemConfig, corr: CorrMatrix | None = None) -> float:
    """tr(R^2) for the config's correlation model.

    Identity and exponential use exact closed summations (no matrix build);
    other models build the matrix once.
    """
    if corr is not None:
        return corr.tr_r2
    spec = config.corr
    if spec.kind == "identity":
        return float(config.N)
    if spec.kind == "exponential":
        return exponential_sq_trace(spec.zeta, config.N)
    return build_correlation(spec, config.N).tr_r2


def _beta_terms(betas: np.ndarray, k: int) -> tuple[float, float, float]:
    beta_k = float(betas[k])
    sum_b = float(np.sum(betas))
    return beta_k, sum_b, sum_b - beta_k


def _user_terms(n, gamma0, rho, betas, k, tr_r2):
    """Numerator slope and denominator coefficients of the user-rate bound.

    The bound reads log2(1 + L1*xi / (L3*xi + L2)).
    """
    beta_k, sum_b, sum_others = _beta_terms(betas, k)
    l1 = (1.0 - rho) * beta_k ** 2 * gamma0 * n / sum_b
    l2 = rho * beta_k * gamma0 + 1.0
    l3 = (1.0 - rho) * gamma0 * beta_k * tr_r2 * sum_others / (n * sum_b)
    return l1, l2, l3


def user_bound_sinr(n, gamma0, xi, rho, betas, k, tr_r2) -> float:
    """Effective SINR inside the closed-form user rate bound."""
    l1, l2, l3 = _user_terms(n, gamma0, rho, betas, k, tr_r2)
    return l1 * xi / (l3 * xi + l2)


def eve_bound_sinr(n, k_users, m, xi, rho, betas, k, tr_r2,
                   small_ratio_approx: bool = False) -> float:
    """Effective SINR inside the eavesdropper rate bound.

    ``small_ratio_approx`` drops the (M/N)*(K/N)*(1-xi)^2 cross term, the
    usual massive-MIMO simplification with M*K << N^2.

    Raises :class:`BoundUndefinedError` when the denominator is not
    positive, i.e. the eavesdropper's antennas exhaust the spatial degrees
    of freedom left by the correlation.
    """
    beta_k, sum_b, _ = _beta_terms(betas, k)
    a = m / n
    b = k_users / n
    phi = 1.0 - b
    rho_p = rho / (1.0 - rho)
    kappa = 1.0 - xi + rho_p
    varpi = 0.0 if small_ratio_approx else a * b * (1.0 - xi) ** 2
    num = phi * m * xi * kappa * beta_k / sum_b
    den = phi * kappa ** 2 * (n / tr_r2 - a) - varpi
    if den <= 0.0:
        raise BoundUndefinedError(
            "eavesdropper rate bound undefined: spatial degrees of freedom "
            f"exhausted (denominator {den:.3e} <= 0)")
    return num / den


def user_rate_bound(config: SystemConfig, k: int = 0,
                    tr_r2: float | None = None) -> float:
    """Closed-form lower bound on user k's ergodic rate, bits/s/Hz."""
    tr_r2 = resolve_tr_r2(config) if tr_r2 is None else tr_r2
    sinr = user_bound_sinr(config.N, config.gamma0, config.xi, config.rho,
                           config.fading.betas, k, tr_r2)
    return math.log2(1.0 + sinr)


def eve_rate_bound(config: SystemConfig, k: int = 0, tr_r2: float | None = None,
                   small_ratio_approx: bool = False) -> float:
    """Closed-form upper bound on the eavesdropper's rate for user k.

    Worst case built in: the eavesdropper knows all channels, cancels the
    other users' streams, and has negligible thermal noise, which also makes
    the bound independent of its path loss.
    """
    tr_r2 = resolve_tr_r2(config) if tr_r2 is None else tr_r2
    sinr = eve_bound_sinr(config.N, config.K, config.M, config.xi, config.rho,
                          config.fading.betas, k, tr_r2,
                          small_ratio_approx=small_ratio_approx)
    return math.log2(1.0 + sinr)


def secrecy_margin(config: SystemConfig, k: int = 0, tr_r2: float | None = None,
                   small_ratio_approx: bool = False) -> float:
    """Unclamped difference (user bound) - (eavesdropper bound).

    Negative values are meaningful for monotonicity and crossover analysis;
    :func:`secrecy_bound` applies the [.]+ clamp.
    """
    tr_r2 = resolve_tr_r2(config) if tr_r2 is None else tr_r2
    return (user_rate_bound(config, k, tr_r2)
            - eve_rate_bound(config, k, tr_r2, small_ratio_approx))


def secrecy_bound(config: SystemConfig, k: int = 0,
                  tr_r2: float | None = None) -> float:
    """Closed-form lower bound on the ergodic secrecy rate, clamped at 0."""
    return max(0.0, secrecy_margin(config, k, tr_r2))


def secrecy_rate_iid(config: SystemConfig, k: int = 0) -> float:
    """Secrecy bound specialization for uncorrelated antennas (R = I).

    Written out directly from the i.i.d. expressions; must coincide with
    ``secrecy_bound`` evaluated at tr(R^2) = N.
    """
    n, k_users, m = config.N, config.K, config.M
    gamma0, xi, rho = config.gamma0, config.xi, config.rho
    beta_k, sum_b, sum_others = _beta_terms(config.fading.betas, k)
    user_num = (1.0 - rho) * beta_k ** 2 * gamma0 * xi * n / sum_b
    user_den = ((1.0 - rho) * gamma0 * beta_k * xi * sum_others / sum_b
                + rho * beta_k * gamma0 + 1.0)
    user = math.log2(1.0 + user_num / user_den)
    a = m / n
    b = k_users / n
    phi = 1.0 - b
    kappa = 1.0 - xi + rho / (1.0 - rho)
    varpi = a * b * (1.0 - xi) ** 2
    eve_den = phi * kappa ** 2 * (1.0 - a) - varpi
    if eve_den <= 0.0:
        raise BoundUndefinedError("eavesdropper rate bound undefined for R = I")
    eve = math.log2(1.0 + phi * m * xi * kappa * beta_k / sum_b / eve_den)
    return max(0.0, user - eve)


def d_secrecy_d_xi(config: SystemConfig, k: int = 0,
                   tr_r2: float | None = None) -> float:
    """Derivative of the secrecy bound w.r.t. the power allocation factor.

    Closed form valid under the massive-MIMO cross-term simplification
    (M*K << N^2): it is the exact derivative of
    ``secrecy_margin(..., small_ratio_approx=True)``.
    """
    tr_r2 = resolve_tr_r2(config) if tr_r2 is None else tr_r2
    n, m = config.N, config.M
    xi, rho = config.xi, config.rho
    beta_k, sum_b, _ = _beta_terms(config.fading.betas, k)
    l1, l2, l3 = _user_terms(n, config.gamma0, rho, config.fading.betas, k, tr_r2)
    rho_p = rho / (1.0 - rho)
    kappa = 1.0 - xi + rho_p
    a = m / n
    user_term = l1 * l2 / (LN2 * (l3 * xi + l2) * (l2 + xi * (l1 + l3)))
    eve_den = (sum_b * (n - tr_r2 * a) * kappa ** 2
               + m * xi * beta_k * tr_r2 * kappa)
    eve_term = m * tr_r2 * (1.0 + rho_p) * beta_k / (LN2 * eve_den)
    return user_term - eve_term


@dataclass(frozen=True)
class XiOptimum:
    """Optimal power allocation factor and how it was obtained."""

    xi: float
    closed_form: bool


def _golden_section_xi(objective, lo: float = 1e-9, hi: float = 1.0,
                       tol: float = 1e-12) -> float:
    """Golden-section maximization of a unimodal objective on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = objective(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = objective(x1)
    return 0.5 * (lo + hi)


def optimal_xi(config: SystemConfig, k: int = 0,
               tr_r2: float | None = None) -> XiOptimum:
    """Power allocation factor maximizing the secrecy bound.

    Prefers the closed-form root of the stationarity quadratic (negative
    branch); when that root is invalid (no real root, outside (0, 1], or the
    derivative does not change sign around it) a golden-section search over
    the bound itself is used and flagged.
    """
    tr_r2 = resolve_tr_r2(config) if tr_r2 is None else tr_r2
    n, m = config.N, config.M
    rho = config.rho
    beta_k, sum_b, _ = _beta_terms(config.fading.betas, k)
    l1, l2, l3 = _user_terms(n, config.gamma0, rho, config.fading.betas, k, tr_r2)
    c = 1.0 + rho / (1.0 - rho)
    a = m / n
    g1 = m * tr_r2 * c * beta_k
    g2 = sum_b * (n - tr_r2 * a)
    g3 = m * beta_k * tr_r2

    coef_a = l1 * l2 * (g2 - g3) - g1 * l3 * (l1 + l3)
    coef_b = c * l1 * l2 * (g3 - 2.0 * g2) - g1 * l2 * (l1 + 2.0 * l3)
    coef_c = g2 * l1 * l2 * c ** 2 - g1 * l2 ** 2

    root = None
    if coef_a != 0.0:
        disc = coef_b ** 2 - 4.0 * coef_a * coef_c
        if disc >= 0.0:
            root = (-coef_b - math.sqrt(disc)) / (2.0 * coef_a)
    if root is not None and 0.0 < root <= 1.0 and _is_maximum(config, k, tr_r2, root):
        return XiOptimum(xi=float(root), closed_form=True)

    def objective(xi):
        try:
            return secrecy_bound(config.with_updates(xi=xi), k, tr_r2)
        except BoundUndefinedError:
            return 0.0

    return XiOptimum(xi=_golden_section_xi(objective), closed_form=False)


def _is_maximum(config, k, tr_r2, root, step: float = 1e-3) -> bool:
    """Derivative sign check around a candidate stationary point."""
    try:
        left = d_secrecy_d_xi(config.with_updates(xi=max(step, root - step)), k, tr_r2)
        if left < 0.0:
            return False
        if root + step <= 1.0:
            right = d_secrecy_d_xi(config.with_updates(xi=root + step), k, tr_r2)
            if right > 0.0:
                return False
    except (BoundUndefinedError, ValueError):
        return False
    return True


def max_eve_antenna_ratio(config: SystemConfig, tr_r2: float | None = None) -> float:
    """Largest M/N that still admits a positive secrecy rate.

    Defined for equal per-user fading (beta_k = beta for all k) in the
    AN-dominated regime xi -> 0.
    """
    betas = config.fading.betas
    if not np.allclose(betas, betas[0], rtol=1e-12, atol=0.0):
        raise ValueError("defined for equal per-user large-scale fading only")
    tr_r2 = resolve_tr_r2(config) if tr_r2 is None else tr_r2
    n = config.N
    b = config.K / n
    beta = float(betas[0])
    gamma0, rho = config.gamma0, config.rho
    bracket = (gamma0 * rho * b * (rho - beta - 2.0)
               + gamma0 * (1.0 + beta * rho) + 1.0 - b)
    den = tr_r2 * bracket
    if den <= 0.0:
        raise BoundUndefinedError("maximum antenna ratio undefined "
                                  f"(denominator {den:.3e} <= 0)")
    return (1.0 - b) * n * gamma0 / den


def d_userrate_d_rho(config: SystemConfig, k: int = 0) -> float:
    """Derivative of the user rate bound w.r.t. the distortion factor.

    Uses the exponential-model limit tr(R^2)/N -> (1+zeta^2)/(1-zeta^2);
    always negative (quantization noise can only hurt the users).
    """
    zt = _config_zeta_tilde(config)
    n = config.N
    gamma0, xi, rho = config.gamma0, config.xi, config.rho
    beta_k, sum_b, sum_others = _beta_terms(config.fading.betas, k)
    upsilon = (1.0 - rho) * (n * beta_k + zt * sum_others) * xi + rho * sum_b
    psi = rho * sum_b + (1.0 - rho) * xi * zt * sum_others
    num = beta_k ** 2 * gamma0 * xi * n * (1.0 + beta_k * gamma0) * sum_b
    den = (LN2 * (upsilon * beta_k * gamma0 + sum_b)
           * (psi * beta_k * gamma0 + sum_b))
    return -num / den


def d_everate_d_rho(config: SystemConfig, k: int = 0,
                    simplified: bool = False) -> float:
    """Derivative of the eavesdropper rate bound w.r.t. the distortion factor.

    ``simplified`` applies the M*K << N^2 reduction. Both forms are negative:
    quantization noise also degrades the eavesdropper, and the more so under
    strong correlation.
    """
    zt = _config_zeta_tilde(config)
    n, m = config.N, config.M
    xi, rho = config.xi, config.rho
    beta_k, sum_b, _ = _beta_terms(config.fading.betas, k)
    a = m / n
    b = config.K / n
    phi = 1.0 - b
    kappa = 1.0 - xi + rho / (1.0 - rho)
    if simplified:
        den = (LN2 * (1.0 - rho) ** 2 * kappa
               * (kappa + (m * xi * beta_k / sum_b - a * kappa) * zt))
        return -(m * xi * beta_k * zt / sum_b) / den
    varpi = a * b * (1.0 - xi) ** 2
    num = (m * xi * phi * beta_k * zt
           * ((1.0 - a * zt) * phi * kappa ** 2 + varpi * zt) / sum_b)
    den = (LN2 * (1.0 - rho) ** 2
           * ((a * zt - 1.0) * phi * kappa ** 2 + varpi * zt)
           * (((a * kappa ** 2 - m * xi * kappa * beta_k / sum_b) * zt
               - kappa ** 2) * phi + varpi * zt))
    return -num / den


def _config_zeta_tilde(config: SystemConfig) -> float:
    spec = config.corr
    if spec.kind == "identity":
        return 1.0
    if spec.kind == "exponential":
        return zeta_tilde(spec.zeta)
    raise ValueError("distortion-factor derivatives require the exponential "
                     "correlation model")


def secrecy_gap_monotonicity(config: SystemConfig, zetas,
                             optimize_xi: bool = False, k: int = 0) -> np.ndarray:
    """Secrecy-bound gap, ideal DAC minus the config's finite DAC, per zeta.

    Gaps are computed on the unclamped margins so the comparison stays
    meaningful when one side drops below zero. Raises if the gap fails to
    decrease weakly along the (increasing) zeta grid.
    """
    if config.dac.is_ideal:
        raise ValueError("config must carry a finite-resolution DAC to "
                         "compare against the ideal one")
    ideal = DacModel.for_bits(math.inf)
    gaps = []
    for zeta in zetas:
        cfg = config.with_updates(corr=CorrelationSpec.exponential(zeta))
        tr_r2 = exponential_sq_trace(zeta, config.N)
        pair = []
        for dac in (ideal, config.dac):
            cfg_d = cfg.with_updates(dac=dac)
            if optimize_xi:
                cfg_d = cfg_d.with_updates(xi=optimal_xi(cfg_d, k, tr_r2).xi)
            pair.append(secrecy_margin(cfg_d, k, tr_r2))
        gaps.append(pair[0] - pair[1])
    gaps = np.asarray(gaps)
    if np.any(np.diff(gaps) > 1e-12):
        raise ValueError("secrecy-rate gap is not weakly decreasing in zeta")
    return gaps


def wishart_moment_match(config: SystemConfig,
                         tr_r2: float | None = None) -> tuple[float, float]:
    """Parameters (eta_w, phi_w) of the single-Wishart surrogate for the
    eavesdropper's interference covariance.

    Matching the first two moments of the AN-plus-quantization-noise mixture
    gives eta_w*phi_w and eta_w*phi_w^2; the pair is recovered from their
    ratio. Requires eta_w > M for the inverse's deterministic limit to exist.
    """
    tr_r2 = resolve_tr_r2(config) if tr_r2 is None else tr_r2
    n, k_users = config.N, config.K
    rho = config.rho
    _, nu = power_split(config.P, config.xi, n, k_users)
    q = rho * config.P / n
    an_coef = (1.0 - rho) * nu + q
    m1 = an_coef * (n - k_users) + q * k_users
    m2 = (tr_r2 / n) * (an_coef ** 2 * (n - k_users) + q ** 2 * k_users)
    if m1 <= 0.0 or m2 <= 0.0:
        raise BoundUndefinedError(
            "degenerate eavesdropper interference (no AN and no quantization "
            "noise); requires xi < 1 or a finite-resolution DAC")
    eta_w = m1 ** 2 / m2
    phi_w = m2 / m1
    if eta_w <= config.M:
        raise BoundUndefinedError(
            f"effective Wishart dof {eta_w:.3f} must exceed M = {config.M}")
    return eta_w, phi_w


# ---------------------------------------------------------------------------
# Monte-Carlo path
# ---------------------------------------------------------------------------

def user_sinr(H: np.ndarray, W: np.ndarray, V: np.ndarray, cq_diag: np.ndarray,
              mu: float, nu: float, rho: float, sigma_n2: float, k: int) -> float:
    """Exact SINR of user k for one channel realization.

    Signal (1-rho)*mu*|h_k^T w_k|^2 over inter-user interference,
    quantization noise h_k^T C_q h_k^*, residual AN leakage (zero up to
    numerical precision since H V = 0), and thermal noise.
    """
    hk = H[k]
    hw = hk @ W
    gains = np.abs(hw) ** 2
    signal = (1.0 - rho) * mu * gains[k]
    interference = (1.0 - rho) * mu * (np.sum(gains) - gains[k])
    quant = float(np.sum(cq_diag * np.abs(hk) ** 2))
    an_leak = (1.0 - rho) * nu * float(np.sum(np.abs(hk @ V) ** 2))
    den = interference + quant + an_leak + sigma_n2
    if den <= 0.0:
        raise ValueError("SINR denominator is not positive (need sigma_n2 > 0 "
                         "or some interference/quantization noise)")
    return signal / den


@dataclass(frozen=True, eq=False)
class RealizationBatch:
    """Per-realization sufficient statistics, stacked over realizations.

    Everything the rate expressions need that does not depend on the power
    scaling (P, sigma_n2), the power split xi, or the DAC distortion rho.
    Shapes: (n, K) for the per-user arrays, (n, M, M) for the eavesdropper
    covariance pieces, (n, M, K) for the received precoder columns.
    """

    sig2: np.ndarray      # |h_k^T w_k|^2
    intf2: np.ndarray     # sum_{j != k} |h_k^T w_j|^2
    quad_w: np.ndarray    # sum_n |h_kn|^2 diag(W W^H)_n
    quad_v: np.ndarray    # sum_n |h_kn|^2 diag(V V^H)_n
    an_leak: np.ndarray   # h_k^T V V^H h_k^*
    x_an: np.ndarray      # H_e V V^H H_e^H
    x_qw: np.ndarray      # H_e diag(W W^H) H_e^H
    x_qv: np.ndarray      # H_e diag(V V^H) H_e^H
    g_eve: np.ndarray     # H_e W

    @property
    def n_realizations(self) -> int:
        return self.sig2.shape[0]


def simulate_realizations(config: SystemConfig, n_realizations: int,
                          master_seed: int, workers: int = 1,
                          corr: CorrMatrix | None = None) -> RealizationBatch:
    """Draw channels and precoders, reduced to their rate statistics.

    Realization i uses the i-th substream spawned from ``master_seed``, so
    the batch is identical for any ``workers`` value.
    """
    n, k_users, m = config.N, config.K, config.M
    if corr is None:
        corr = build_correlation(config.corr, n)
    r_half = corr.R_half
    seeds = realization_seeds(master_seed, n_realizations)

    sig2 = np.empty((n_realizations, k_users))
    intf2 = np.empty((n_realizations, k_users))
    quad_w = np.empty((n_realizations, k_users))
    quad_v = np.empty((n_realizations, k_users))
    an_leak = np.empty((n_realizations, k_users))
    x_an = np.empty((n_realizations, m, m), dtype=complex)
    x_qw = np.empty((n_realizations, m, m), dtype=complex)
    x_qv = np.empty((n_realizations, m, m), dtype=complex)
    g_eve = np.empty((n_realizations, m, k_users), dtype=complex)

    def fill(i: int) -> None:
        rng = np.random.default_rng(seeds[i])
        pair = sample_channels(n, k_users, m, config.fading, r_half, rng)
        H, H_e = pair.H, pair.H_e

        _, s, vh = np.linalg.svd(H, full_matrices=True)
        if s[-1] <= max(k_users, n) * np.finfo(float).eps * s[0]:
            raise ValueError("channel realization is rank deficient")
        V = vh[k_users:].conj().T
        W = np.sqrt(k_users) * H.conj().T / np.linalg.norm(H)

        hw = H @ W
        gains = np.abs(hw) ** 2
        diag_gain = np.abs(np.diagonal(hw)) ** 2
        sig2[i] = diag_gain
        intf2[i] = np.sum(gains, axis=1) - diag_gain

        abs_h2 = np.abs(H) ** 2
        d_w = np.sum(np.abs(W) ** 2, axis=1)
        d_v = np.sum(np.abs(V) ** 2, axis=1)
        quad_w[i] = abs_h2 @ d_w
        quad_v[i] = abs_h2 @ d_v
        an_leak[i] = np.sum(np.abs(H @ V) ** 2, axis=1)

        ev = H_e @ V
        x_an[i] = ev @ ev.conj().T
        x_qw[i] = (H_e * d_w) @ H_e.conj().T
        x_qv[i] = (H_e * d_v) @ H_e.conj().T
        g_eve[i] = H_e @ W

    if workers <= 1:
        for i in range(n_realizations):
            fill(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_realizations)))

    return RealizationBatch(sig2=sig2, intf2=intf2, quad_w=quad_w,
                            quad_v=quad_v, an_leak=an_leak, x_an=x_an,
                            x_qw=x_qw, x_qv=x_qv, g_eve=g_eve)


def evaluate_rates(batch: RealizationBatch, config: SystemConfig,
                   k: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-realization user and eavesdropper rates at one operating point.

    Cheap relative to :func:`simulate_realizations`, so one batch serves a
    whole sweep over SNR, power split, and DAC resolution.
    """
    mu, nu = power_split(config.P, config.xi, config.N, config.K)
    rho = config.rho
    den = ((1.0 - rho) * mu * batch.intf2[:, k]
           + rho * (mu * batch.quad_w[:, k] + nu * batch.quad_v[:, k])
           + (1.0 - rho) * nu * batch.an_leak[:, k]
           + config.sigma_n2)
    gamma = (1.0 - rho) * mu * batch.sig2[:, k] / den
    user_log = np.log2(1.0 + gamma)

    X = ((1.0 - rho) * nu * batch.x_an
         + rho * (mu * batch.x_qw + nu * batch.x_qv))
    if config.sigma_e2 > 0.0:
        X = X + config.sigma_e2 * np.eye(config.M)
    g = batch.g_eve[:, :, k]
    try:
        y = np.linalg.solve(X, g[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "eavesdropper interference covariance is singular; requires "
            "xi < 1 or a finite-resolution DAC") from exc
    quad = np.real(np.sum(g.conj() * y, axis=1))
    eve_log = np.log2(1.0 + (1.0 - rho) * mu * quad)
    return user_log, eve_log


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, math.nan
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


def user_rate_mc(config: SystemConfig, n_realizations: int, seed: int,
                 k: int = 0, workers: int = 1,
                 batch: RealizationBatch | None = None) -> tuple[float, float]:
    """Monte-Carlo mean of log2(1 + SINR_k) with its standard error."""
    if batch is None:
        batch = simulate_realizations(config, n_realizations, seed, workers)
    user_log, _ = evaluate_rates(batch, config, k)
    return _mean_se(user_log)


def eve_rate_mc(config: SystemConfig, n_realizations: int, seed: int,
                k: int = 0, workers: int = 1,
                batch: RealizationBatch | None = None) -> tuple[float, float]:
    """Monte-Carlo mean of the eavesdropper rate with its standard error."""
    if batch is None:
        batch = simulate_realizations(config, n_realizations, seed, workers)
    _, eve_log = evaluate_rates(batch, config, k)
    return _mean_se(eve_log)


def ergodic_rate_result(config: SystemConfig, n_realizations: int, seed: int,
                        k: int = 0, workers: int = 1,
                        batch: RealizationBatch | None = None,
                        corr: CorrMatrix | None = None,
                        bounds_only: bool = False) -> RateResult:
    """Full rate summary at one operating point.

    Monte-Carlo estimates and closed-form bounds share the realization
    batch; the secrecy estimate differences expectations first and clamps
    last.
    """
    tr_r2 = resolve_tr_r2(config, corr)
    user_b = user_rate_bound(config, k, tr_r2)
    eve_b = eve_rate_bound(config, k, tr_r2)
    if bounds_only:
        return RateResult(
            user_rate_mc=math.nan, user_rate_bound=user_b,
            eve_rate_mc=math.nan, eve_rate_bound=eve_b,
            secrecy_mc=math.nan, secrecy_bound=max(0.0, user_b - eve_b),
            n_realizations=0, std_err=math.nan)
    if batch is None:
        batch = simulate_realizations(config, n_realizations, seed, workers, corr)
    user_log, eve_log = evaluate_rates(batch, config, k)
    user_mc, user_se = _mean_se(user_log)
    eve_mc, eve_se = _mean_se(eve_log)
    _, diff_se = _mean_se(user_log - eve_log)
    return RateResult(
        user_rate_mc=user_mc, user_rate_bound=user_b,
        eve_rate_mc=eve_mc, eve_rate_bound=eve_b,
        secrecy_mc=max(0.0, user_mc - eve_mc),
        secrecy_bound=max(0.0, user_b - eve_b),
        n_realizations=batch.n_realizations, std_err=diff_se,
        user_std_err=user_se, eve_std_err=eve_se)
