"""Correlated Rayleigh channel sampling for users and eavesdropper.

Kronecker model: H = D^{1/2} Htilde R^{1/2} with i.i.d. unit-variance
circularly symmetric complex Gaussian entries in Htilde, diagonal
large-scale fading D, and a common transmit correlation R at the array.
The eavesdropper channel uses the same R with its own scalar large-scale
fading and an independent i.i.d. matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def path_loss(d: float, d_ref: float, eta: float) -> float:
    """Distance-based large-scale fading (d_ref / d) ** eta."""
    if d <= 0 or d_ref <= 0:
        raise ValueError("distances must be positive")
    if eta < 0:
        raise ValueError("path loss exponent must be nonnegative")
    return float((d_ref / d) ** eta)


@dataclass(frozen=True, eq=False)
class LargeScaleFading:
    """Per-user fading coefficients beta_k plus the eavesdropper's beta_e.

    ``d_ref``, ``distances`` and ``eta`` are kept only as provenance when the
    betas were generated from geometry; they do not enter any computation.
    """

    betas: np.ndarray
    beta_e: float = 1.0
    d_ref: float | None = None
    distances: np.ndarray | None = None
    eta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "betas", np.asarray(self.betas, dtype=float))
        if self.betas.ndim != 1 or self.betas.size == 0:
            raise ValueError("betas must be a nonempty vector")
        if np.any(self.betas <= 0) or self.beta_e <= 0:
            raise ValueError("fading coefficients must be positive")

    @property
    def n_users(self) -> int:
        return self.betas.size

    @classmethod
    def unit(cls, n_users: int) -> "LargeScaleFading":
        """All beta_k = 1 and beta_e = 1."""
        return cls(betas=np.ones(n_users), beta_e=1.0)

    @classmethod
    def from_distances(cls, distances, d_ref: float, eta: float,
                       eve_distance: float | None = None) -> "LargeScaleFading":
        distances = np.asarray(distances, dtype=float)
        betas = np.array([path_loss(d, d_ref, eta) for d in distances])
        beta_e = 1.0 if eve_distance is None else path_loss(eve_distance, d_ref, eta)
        return cls(betas=betas, beta_e=beta_e, d_ref=d_ref,
                   distances=distances, eta=eta)


@dataclass(frozen=True, eq=False)
class ChannelPair:
    """One joint realization of the user channel H and eavesdropper channel H_e."""

    H: np.ndarray
    H_e: np.ndarray


def complex_gaussian(shape, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. CN(0, 1) entries (real and imaginary parts each variance 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(n: int, k: int, m: int, fading: LargeScaleFading,
                    r_half: np.ndarray, rng: np.random.Generator) -> ChannelPair:
    """Draw one correlated channel pair.

    H is K x N with row covariance beta_k * R^T (rows right-multiplied by
    R^{1/2}); H_e is M x N with the common eavesdropper fading beta_e.
    """
    if fading.n_users != k:
        raise ValueError(f"fading has {fading.n_users} users, expected {k}")
    if r_half.shape != (n, n):
        raise ValueError(f"R^(1/2) has shape {r_half.shape}, expected {(n, n)}")
    h_iid = complex_gaussian((k, n), rng)
    he_iid = complex_gaussian((m, n), rng)
    H = np.sqrt(fading.betas)[:, None] * (h_iid @ r_half)
    H_e = np.sqrt(fading.beta_e) * (he_iid @ r_half)
    return ChannelPair(H=H, H_e=H_e)


def realization_seeds(master_seed: int, n_realizations: int) -> list[np.random.SeedSequence]:
    """Independent per-realization substreams derived from the master seed.

    Spawned once up front so the stream assignment does not depend on how
    realizations are later distributed across workers.
    """
    return np.random.SeedSequence(master_seed).spawn(n_realizations)
