"""Secrecy rates for quantized massive MIMO downlinks with null-space
artificial noise over spatially correlated channels."""

from .channel import ChannelPair, LargeScaleFading, path_loss, sample_channels
from .corrmat import (CorrelationSpec, CorrMatrix, build_correlation,
                      corr_sq_trace, corr_sqrt, exponential_sq_trace,
                      load_explicit_csv, zeta_tilde)
from .dac import DacModel, distortion_factor, quantization_noise_cov, quantize
from .precoder import (PrecoderSet, build_precoder_set, mf_precoder,
                       null_space_an, power_split, transmit)
from .rates import (BoundUndefinedError, RateResult, SystemConfig, XiOptimum,
                    d_everate_d_rho, d_secrecy_d_xi, d_userrate_d_rho,
                    ergodic_rate_result, eve_rate_bound, eve_rate_mc,
                    max_eve_antenna_ratio, optimal_xi, secrecy_bound,
                    secrecy_gap_monotonicity, secrecy_margin,
                    secrecy_rate_iid, user_rate_bound, user_rate_mc,
                    user_sinr, wishart_moment_match)

__version__ = "0.1.0"
