"""Matched-filter data precoding and null-space artificial-noise shaping.

The data precoder W is the conjugate (matched filter) beamformer scaled to
tr(W W^H) = K exactly. The AN shaping matrix V is an orthonormal basis of
the null space of H, so that legitimate users see no artificial noise, and
V0 completes it to a unitary basis [V V0] of C^N. Transmit power P is split
as mu = xi*P/K per data stream and nu = (1-xi)*P/(N-K) per AN dimension.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NULL_SPACE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """Precoders and power split for one channel realization."""

    W: np.ndarray
    V: np.ndarray
    V0: np.ndarray
    mu: float
    nu: float
    xi: float


def mf_precoder(H: np.ndarray) -> np.ndarray:
    """Matched-filter precoder sqrt(K) * H^H / ||H||_F.

    Columns are conjugates of the user channel rows, so the per-user
    beamforming gain h_k^T w_k = sqrt(K) ||h_k||^2 / ||H||_F is real and
    nonnegative by construction.
    """
    k, n = H.shape
    if k >= n:
        raise ValueError("requires fewer users than antennas")
    norm = np.linalg.norm(H)
    if norm == 0.0:
        raise ValueError("channel matrix is zero")
    s = np.linalg.svd(H, compute_uv=False)
    if s[-1] <= max(k, n) * np.finfo(float).eps * s[0]:
        raise ValueError("channel matrix is rank deficient")
    return np.sqrt(k) * H.conj().T / norm


def null_space_an(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (V, V0) of the null space and row space of H.

    V is N x (N-K) with H V = 0; V0 is N x K; [V V0] is unitary. Rank
    deficiency (a null space larger than N-K) is reported, not repaired.
    """
    k, n = H.shape
    if k >= n:
        raise ValueError("requires fewer users than antennas")
    _, s, vh = np.linalg.svd(H, full_matrices=True)
    if s[-1] <= max(k, n) * np.finfo(float).eps * s[0]:
        raise ValueError("channel matrix is rank deficient")
    V = vh[k:].conj().T
    V0 = vh[:k].conj().T
    return V, V0


def power_split(P: float, xi: float, n: int, k: int) -> tuple[float, float]:
    """Per-stream data power mu = xi*P/K and per-dimension AN power
    nu = (1-xi)*P/(N-K)."""
    if not 0.0 < xi <= 1.0:
        raise ValueError("power allocation factor must lie in (0, 1]")
    if k >= n:
        raise ValueError("requires fewer users than antennas")
    return xi * P / k, (1.0 - xi) * P / (n - k)


def build_precoder_set(H: np.ndarray, P: float, xi: float) -> PrecoderSet:
    """Precoders plus power split for one realization (single SVD)."""
    k, n = H.shape
    V, V0 = null_space_an(H)
    W = np.sqrt(k) * H.conj().T / np.linalg.norm(H)
    mu, nu = power_split(P, xi, n, k)
    return PrecoderSet(W=W, V=V, V0=V0, mu=mu, nu=nu, xi=xi)


def transmit(W: np.ndarray, V: np.ndarray, s: np.ndarray, t: np.ndarray,
             mu: float, nu: float) -> np.ndarray:
    """Unquantized downlink signal x = sqrt(mu) W s + sqrt(nu) V t."""
    n, k = W.shape
    if s.shape != (k,):
        raise ValueError(f"symbol vector has shape {s.shape}, expected {(k,)}")
    if t.shape != (V.shape[1],):
        raise ValueError(f"AN vector has shape {t.shape}, expected {(V.shape[1],)}")
    return np.sqrt(mu) * (W @ s) + np.sqrt(nu) * (V @ t)
