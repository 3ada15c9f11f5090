"""Complex Hermitian linear algebra and circular complex Gaussian sampling."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
from scipy import linalg

HERMITIAN_ATOL = 1e-12


class NotHermitianError(ValueError):
    """Raised when a matrix is not Hermitian within tolerance."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a factorization reveals a singular or indefinite matrix."""


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted in descending order with matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def symmetrize(a):
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def check_hermitian(a, atol=None):
    """Return ``a`` as a symmetrized complex array, raising if it is far from Hermitian.

    The default tolerance is relative to the largest entry so that matrices
    built from weighted outer-product sums are accepted.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
    if atol is None:
        atol = HERMITIAN_ATOL * max(1.0, float(np.max(np.abs(a), initial=0.0)))
    dev = float(np.max(np.abs(a - a.conj().T), initial=0.0))
    if dev > atol:
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3e} (tolerance {atol:.1e})")
    return symmetrize(a)


def hermitian_eig(a, atol=None) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises ``NotHermitianError`` for non-Hermitian input and lets
    ``LinAlgError`` propagate if LAPACK fails to converge.
    """
    a = check_hermitian(a, atol)
    w, v = linalg.eigh(a)
    return EigenDecomposition(values=w[::-1].copy(), vectors=v[:, ::-1].copy())


def cholesky_lower(a):
    try:
        return linalg.cholesky(symmetrize(a), lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from None


def inverse_and_logdet(a):
    """Return ``(inv(a), log det(a))`` for a Hermitian positive definite matrix."""
    c = cholesky_lower(a)
    n = c.shape[0]
    inv = linalg.cho_solve((c, True), np.eye(n, dtype=c.dtype))
    logdet = 2.0 * float(np.sum(np.log(np.real(np.diag(c)))))
    return symmetrize(inv), logdet


def quad_form(z, a_inv) -> float:
    """``z^H a_inv z`` as a real number."""
    z = np.asarray(z)
    a_inv = np.asarray(a_inv)
    if a_inv.shape != (z.shape[0], z.shape[0]):
        raise ValueError(f"dimension mismatch: vector of length {z.shape[0]} vs matrix {a_inv.shape}")
    return float(np.real(np.vdot(z, a_inv @ z)))


def seed_sequence(seed, tag=None, index=0) -> np.random.SeedSequence:
    """Seed sequence for the substream ``(seed, tag, index)``.

    The tag is hashed with CRC32 so that the substream is stable across
    processes and Python versions.
    """
    if tag is None:
        return np.random.SeedSequence(int(seed))
    return np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(tag.encode()), int(index)))


def make_rng(seed, tag=None, index=0) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, tag, index))


def standard_complex_normal(rng, size):
    """i.i.d. CN(0, 1) draws: real and imaginary parts each N(0, 1/2)."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) * np.sqrt(0.5)


def sample_complex_gaussian(m, count, rng):
    """Draw ``count`` snapshots from CN(0, m); returns an array of shape ``(count, N)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    f = cholesky_lower(m)
    w = standard_complex_normal(rng, (count, f.shape[0]))
    return w @ f.T
