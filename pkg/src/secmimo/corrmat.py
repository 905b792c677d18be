"""Transmit-side spatial correlation matrices for the Kronecker channel model.

Builds the N x N Hermitian PSD correlation matrix R used by the channel
sampler and the closed-form rate expressions. Every built matrix is trace
normalized so that tr(R) = N, keeping large-scale fading out of R. The
eigendecomposition and the Hermitian square root are computed eagerly since
both are consumed on every Monte-Carlo realization.

Supported models:

* identity (uncorrelated antennas),
* exponential profile R_ij = zeta^|i-j|,
* clustered angular scattering with L clusters of Gaussian angular spread,
* explicit user-supplied matrices (e.g. loaded from CSV).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
EIGENVALUE_CLAMP = 1e-10


@dataclass(frozen=True, eq=False)
class CorrelationSpec:
    """Declarative description of a transmit correlation model.

    Use the classmethod constructors rather than filling fields by hand:
    ``identity()``, ``exponential(zeta)``, ``clustered(clusters, spread,
    angle_seed)``, ``explicit(matrix)``.
    """

    kind: str
    zeta: float = 0.0
    clusters: int = 10
    spread: float = 0.0
    angle_seed: int = 0
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "exponential", "clustered", "explicit"):
            raise ValueError(f"unknown correlation kind {self.kind!r}")
        if self.kind == "exponential" and not 0.0 <= self.zeta < 1.0:
            raise ValueError(
                "exponential correlation requires 0 <= zeta < 1; the fully "
                "correlated case is available analytically via tr_r2 = N**2 only"
            )
        if self.kind == "clustered":
            if self.clusters < 1:
                raise ValueError("clustered correlation requires at least one cluster")
            if not 0.0 < self.spread <= np.pi:
                raise ValueError("angular spread must lie in (0, pi] radians")
        if self.kind == "explicit" and self.matrix is None:
            raise ValueError("explicit correlation requires a matrix")

    @classmethod
    def identity(cls) -> "CorrelationSpec":
        return cls(kind="identity")

    @classmethod
    def exponential(cls, zeta: float) -> "CorrelationSpec":
        return cls(kind="exponential", zeta=float(zeta))

    @classmethod
    def clustered(cls, clusters: int, spread: float, angle_seed: int = 0) -> "CorrelationSpec":
        return cls(kind="clustered", clusters=int(clusters), spread=float(spread),
                   angle_seed=int(angle_seed))

    @classmethod
    def explicit(cls, matrix: np.ndarray) -> "CorrelationSpec":
        return cls(kind="explicit", matrix=np.asarray(matrix, dtype=complex))


@dataclass(frozen=True, eq=False)
class CorrMatrix:
    """A validated correlation matrix with cached spectral factorizations.

    Attributes
    ----------
    R : (N, N) complex ndarray
        Hermitian PSD matrix with tr(R) = N.
    eigvals : (N,) float ndarray
        Eigenvalues in ascending order, clamped to be nonnegative.
    eigvecs : (N, N) complex ndarray
        Unitary matrix of eigenvectors (columns).
    R_half : (N, N) complex ndarray
        Hermitian square root, R_half @ R_half = R.
    tr_r2 : float
        tr(R^2) = sum of squared eigenvalues.
    """

    R: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    R_half: np.ndarray
    tr_r2: float

    @property
    def n(self) -> int:
        return self.R.shape[0]


def build_correlation(spec: CorrelationSpec, n: int) -> CorrMatrix:
    """Construct the correlation matrix for ``spec`` at dimension ``n``.

    The matrix is trace normalized to tr(R) = n, validated Hermitian PSD,
    and eigendecomposed. Eigenvalues in [-1e-10, 0) are treated as solver
    noise and clamped to zero; anything more negative is rejected.
    """
    if n < 2:
        raise ValueError("correlation dimension must be at least 2")
    if spec.kind == "identity":
        raw = np.eye(n, dtype=complex)
    elif spec.kind == "exponential":
        lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        raw = (spec.zeta ** lags).astype(complex)
    elif spec.kind == "clustered":
        raw = _clustered_matrix(n, spec.clusters, spec.spread, spec.angle_seed)
    else:
        raw = np.array(spec.matrix, dtype=complex)
        if raw.shape != (n, n):
            raise ValueError(f"explicit matrix has shape {raw.shape}, expected {(n, n)}")
        if np.max(np.abs(raw - raw.conj().T)) > HERMITIAN_TOL:
            raise ValueError("explicit correlation matrix is not Hermitian")
    trace = np.real(np.trace(raw))
    if trace <= 0:
        raise ValueError("correlation matrix must have positive trace")
    mat = raw * (n / trace)
    # Symmetrize to kill round-off drift before factorizing.
    mat = 0.5 * (mat + mat.conj().T)

    eigvals, eigvecs = np.linalg.eigh(mat)
    if eigvals[0] < -EIGENVALUE_CLAMP:
        raise ValueError(
            f"correlation matrix is not PSD (min eigenvalue {eigvals[0]:.3e})"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    half = (eigvecs * np.sqrt(eigvals)) @ eigvecs.conj().T
    return CorrMatrix(R=mat, eigvals=eigvals, eigvecs=eigvecs, R_half=half,
                      tr_r2=float(np.sum(eigvals ** 2)))


def _clustered_matrix(n: int, clusters: int, spread: float, angle_seed: int) -> np.ndarray:
    """Clustered angular scattering model.

    Each of the L clusters contributes a Toeplitz factor
    exp(j*pi*d*sin(phi)) * exp(-(spread^2/2) * (pi*d*cos(phi))^2) at antenna
    lag d, with the cluster angles phi drawn i.i.d. uniform on
    [-spread/2, spread/2]. The angle draw is fixed by ``angle_seed`` so the
    matrix is deterministic for a given experiment.
    """
    rng = np.random.default_rng(angle_seed)
    phis = rng.uniform(-spread / 2.0, spread / 2.0, size=clusters)
    d = np.subtract.outer(np.arange(n), np.arange(n)).astype(float)
    acc = np.zeros((n, n), dtype=complex)
    for phi in phis:
        acc += np.exp(1j * np.pi * d * np.sin(phi)) * \
            np.exp(-0.5 * spread ** 2 * (np.pi * d * np.cos(phi)) ** 2)
    return acc / clusters


def corr_sq_trace(corr: CorrMatrix) -> float:
    """tr(R^2) computed from the matrix entries, sum_ij |R_ij|^2."""
    return float(np.sum(np.abs(corr.R) ** 2))


def corr_sqrt(corr: CorrMatrix) -> np.ndarray:
    """Hermitian square root of R (precomputed at construction)."""
    return corr.R_half


def hermitian_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Square root of an arbitrary Hermitian PSD matrix via eigh."""
    eigvals, eigvecs = np.linalg.eigh(np.asarray(matrix, dtype=complex))
    if eigvals[0] < -EIGENVALUE_CLAMP * max(1.0, eigvals[-1]):
        raise ValueError("matrix is not PSD")
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.conj().T


def exponential_sq_trace(zeta: float, n: int) -> float:
    """tr(R^2) of the exponential model by direct lag summation.

    sum_ij zeta^(2|i-j|) = n + 2 * sum_{d=1}^{n-1} (n - d) * zeta^(2d).
    Exact at finite n, so it doubles as an independent check of the matrix
    computation.
    """
    if not 0.0 <= zeta < 1.0:
        raise ValueError("requires 0 <= zeta < 1")
    if zeta == 0.0:
        return float(n)
    d = np.arange(1, n)
    q = zeta ** 2
    return float(n + 2.0 * np.sum((n - d) * q ** d))


def zeta_tilde(zeta: float) -> float:
    """Large-N limit of tr(R^2)/N for the exponential model, (1+z^2)/(1-z^2)."""
    if not 0.0 <= zeta < 1.0:
        raise ValueError("requires 0 <= zeta < 1")
    return (1.0 + zeta ** 2) / (1.0 - zeta ** 2)


def load_explicit_csv(path) -> np.ndarray:
    """Load an explicit complex matrix from CSV with interleaved re/im columns.

    Row i of the file holds 2N values: re(R_i0), im(R_i0), re(R_i1), ...
    """
    data = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
    rows, cols = data.shape
    if cols != 2 * rows:
        raise ValueError(
            f"expected {rows} rows x {2 * rows} interleaved columns, got {data.shape}"
        )
    return data[:, 0::2] + 1j * data[:, 1::2]


def save_explicit_csv(path, matrix: np.ndarray) -> None:
    """Inverse of :func:`load_explicit_csv`."""
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[0]
    out = np.empty((n, 2 * n), dtype=float)
    out[:, 0::2] = matrix.real
    out[:, 1::2] = matrix.imag
    np.savetxt(path, out, delimiter=",")
