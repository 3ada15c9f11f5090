"""Starting parameters for EM from a random Hermitian structure and sorted powers."""

from __future__ import annotations

import numpy as np

from .numerics import hermitian_eig, inverse_and_logdet, standard_complex_normal, symmetrize
from .params import General, LowRankNoise, MixtureParams, ScaledCommon


def chunk_means(sorted_values, n_chunks):
    """Means of ``n_chunks`` contiguous chunks; the last chunk absorbs any remainder."""
    v = np.asarray(sorted_values, dtype=float)
    size = v.shape[0] // n_chunks
    if size < 1:
        raise ValueError(f"cannot split {v.shape[0]} values into {n_chunks} chunks")
    bounds = [l * size for l in range(n_chunks)] + [v.shape[0]]
    return np.array([v[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])


def random_structure(n, k, rng):
    """``X X^H / tr(X X^H)`` for an ``N x K`` matrix of CN(0, 1) entries."""
    x = standard_complex_normal(rng, (n, k))
    s = symmetrize(x @ x.conj().T)
    return s / np.real(np.trace(s))


def initial_powers(x, s, n_classes):
    """Class powers from the ascending whitened powers ``z^H S^-1 z / N``."""
    n = x.shape[1]
    s_inv, _ = inverse_and_logdet(s)
    g = np.real(np.einsum("ki,ij,kj->k", x.conj(), s_inv, x)) / n
    return chunk_means(np.sort(g), n_classes), g


def init_params(x, n_classes, model_kind, rng) -> MixtureParams:
    """Equiprobable priors, random structure, and powers sorted in ascending order.

    Class ``l`` therefore starts as the ``l``-th weakest class, which is the
    index convention relied on when comparing labels against ground truth.
    """
    x = np.asarray(x, dtype=complex)
    k, n = x.shape
    if k < n:
        raise ValueError(f"need at least N={n} snapshots to initialize, got {k}")
    s = random_structure(n, k, rng)
    powers, g = initial_powers(x, s, n_classes)
    priors = np.full(n_classes, 1.0 / n_classes)
    if model_kind == "General":
        return MixtureParams(priors, General(powers[:, None, None] * s[None]))
    if model_kind == "ScaledCommon":
        return MixtureParams(priors, ScaledCommon(n * s, powers / n))
    if model_kind != "LowRankNoise":
        raise ValueError(f"unknown model kind {model_kind!r}")
    # The starting point reproduces the General-form covariances power_l * S
    # as closely as the form allows: noise at the smallest class eigenvalue and
    # a rank N-1 clutter part.  The working ranks of the first M-step come
    # from the fit configuration, not from these starting parameters.
    eig = hermitian_eig(s)
    noise = float(powers.min() * eig.values[-1])
    r = n - 1
    u = eig.vectors[:, :r]
    clutter = np.stack([symmetrize((u * np.maximum(p * eig.values[:r] - noise, 0.0)) @ u.conj().T)
                        for p in powers])
    return MixtureParams(priors, LowRankNoise(noise, clutter, np.full(n_classes, r)))

