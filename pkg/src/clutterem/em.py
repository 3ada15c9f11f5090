"""EM machinery for latent-class complex Gaussian mixtures.

Snapshots are stored as the rows of a ``(K, N)`` complex array and class
indices are zero-based throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .numerics import cholesky_lower, hermitian_eig, symmetrize
from .params import MODEL_KINDS, General, LowRankNoise, MixtureParams, ScaledCommon

logger = logging.getLogger(__name__)

COLLAPSE_FRACTION = 1e-8
NOISE_FLOOR_FRACTION = 1e-12


class ClassCollapseError(RuntimeError):
    """A class lost (almost) all of its responsibility mass."""

    def __init__(self, class_index, iteration=None):
        self.class_index = class_index
        self.iteration = iteration
        where = "" if iteration is None else f" at EM iteration {iteration}"
        super().__init__(f"class {class_index} collapsed{where}")


@dataclass(frozen=True)
class MOSRule:
    """Penalty rule for clutter-rank selection: ``aic``, ``gic`` (with ``a``) or ``bic``."""

    kind: str = "gic"
    a: float = 2.0

    def __post_init__(self):
        if self.kind not in ("aic", "gic", "bic"):
            raise ValueError(f"unknown MOS rule {self.kind!r}")
        if self.kind == "gic" and self.a < 1:
            raise ValueError("GIC requires a >= 1")

    def penalty_factor(self, k, n):
        if self.kind == "aic":
            return 2.0
        if self.kind == "gic":
            return 1.0 + self.a
        return math.log(2 * k * n)

    @classmethod
    def parse(cls, text):
        """Parse ``"aic"``, ``"bic"``, ``"gic"`` or ``"gic:<a>"``."""
        if isinstance(text, MOSRule):
            return text
        kind, _, a = str(text).lower().partition(":")
        return cls(kind, float(a)) if a else cls(kind)

    def __str__(self):
        return f"gic:{self.a:g}" if self.kind == "gic" else self.kind


@dataclass
class FitConfig:
    model_kind: str
    L: int
    h_max: int = 10
    t_max: int = 10
    mos_rule: MOSRule = field(default_factory=MOSRule)
    ranks: Optional[list] = None
    ll_tol: float = 0.0
    ridge_eps: float = 1e-8

    def __post_init__(self):
        self.mos_rule = MOSRule.parse(self.mos_rule)
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.h_max < 1 or self.t_max < 1:
            raise ValueError("h_max and t_max must be >= 1")
        if self.ranks is not None and len(self.ranks) != self.L:
            raise ValueError(f"ranks must have {self.L} entries")


@dataclass
class FitResult:
    params: MixtureParams
    responsibilities: np.ndarray
    labels: np.ndarray
    ll_trace: list
    rank_trace: list
    iterations_run: int
    ridge_events: int = 0
    ll_decreases: int = 0


# ---------------------------------------------------------------------------
# likelihood and E-step


def class_log_pdfs(x, params: MixtureParams):
    """``(K, L)`` table of ``log f(z_k | c_k = l)`` for circular complex Gaussians."""
    k, n = x.shape
    covs = params.class_covariances()
    out = np.empty((k, covs.shape[0]))
    for l, m in enumerate(covs):
        c = cholesky_lower(m)
        w = linalg.solve_triangular(c, x.T, lower=True)
        quad = np.sum(w.real ** 2 + w.imag ** 2, axis=0)
        logdet = 2.0 * np.sum(np.log(np.real(np.diag(c))))
        out[:, l] = -n * math.log(math.pi) - logdet - quad
    return out


def _log_joint(x, params):
    with np.errstate(divide="ignore"):
        log_p = np.log(params.priors)
    return class_log_pdfs(x, params) + log_p[None, :]


def _logsumexp_rows(a):
    m = np.max(a, axis=1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise FloatingPointError("every class has zero posterior weight for some snapshot")
    return (m + np.log(np.sum(np.exp(a - m), axis=1, keepdims=True)))[:, 0]


def log_likelihood(x, params: MixtureParams) -> float:
    """Mixture log-likelihood ``sum_k log sum_l p_l f(z_k | l)``."""
    return float(np.sum(_logsumexp_rows(_log_joint(x, params))))


def e_step(x, params: MixtureParams):
    """Posterior class probabilities, computed with a per-row max shift."""
    a = _log_joint(x, params)
    return np.exp(a - _logsumexp_rows(a)[:, None])


def update_priors(q):
    return np.asarray(q).mean(axis=0)


def classify(q):
    """Row-wise argmax; ``np.argmax`` already returns the lowest index on ties."""
    return np.argmax(q, axis=1)


# ---------------------------------------------------------------------------
# M-steps


def _class_weights(q):
    qsum = q.sum(axis=0)
    k = q.shape[0]
    bad = np.flatnonzero(qsum < COLLAPSE_FRACTION * k)
    if bad.size:
        raise ClassCollapseError(int(bad[0]))
    return qsum


def weighted_scatter(x, q):
    """``S_l = sum_k q_k(l) z_k z_k^H`` for every class, shape ``(L, N, N)``."""
    s = np.einsum("kl,ki,kj->lij", q, x, x.conj())
    return 0.5 * (s + np.conj(np.swapaxes(s, 1, 2)))


def _ridge_if_singular(m, ridge_eps):
    w = np.linalg.eigvalsh(m)
    if w[0] <= 0 or w[-1] > w[0] / ridge_eps:
        n = m.shape[0]
        load = ridge_eps * float(np.real(np.trace(m))) / n
        if w[0] <= 0:
            load += -w[0]
        return m + max(load, np.finfo(float).tiny) * np.eye(n), True
    return m, False


def m_step_general(x, q, ridge_eps=1e-8):
    """Weighted sample covariance per class.

    Returns ``(matrices, n_ridged)`` where ``n_ridged`` counts classes that
    needed diagonal loading because the estimate was numerically singular.
    """
    qsum = _class_weights(q)
    mats = weighted_scatter(x, q) / qsum[:, None, None]
    ridged = 0
    for l in range(mats.shape[0]):
        mats[l], flagged = _ridge_if_singular(mats[l], ridge_eps)
        ridged += flagged
    return mats, ridged


def _whitened_power(x, m):
    """``z_k^H m^{-1} z_k`` for every row of ``x``."""
    c = cholesky_lower(m)
    w = linalg.solve_triangular(c, x.T, lower=True)
    return np.sum(w.real ** 2 + w.imag ** 2, axis=0)


def m_step_scaled(x, q, m_prev, t_max=10, ridge_eps=1e-8):
    """Alternating maximization over class powers and the common structure.

    Returns ``(powers, structure, n_ridged)`` with the structure rescaled to
    trace ``N``; the powers absorb the scale so each product is unchanged.
    """
    k, n = x.shape
    qsum = _class_weights(q)
    m = symmetrize(np.asarray(m_prev, dtype=complex))
    ridged = 0
    for _ in range(t_max):
        g = _whitened_power(x, m)
        powers = (q.T @ g) / (n * qsum)
        w = (q / powers[None, :]).sum(axis=1)
        m = symmetrize((x.T * w) @ x.conj() / k)
        m, flagged = _ridge_if_singular(m, ridge_eps)
        ridged += flagged
    c = float(np.real(np.trace(m))) / n
    return powers * c, m / c, ridged


def lowrank_from_eigs(eigs, qsum, ranks, n_snapshots=None):
    """Noise floor and clamped clutter matrices from per-class scatter eigendecompositions.

    Returns ``(noise, clutter, floored)``.
    """
    n = eigs[0].values.shape[0]
    ranks = np.asarray(ranks, dtype=int)
    tail = sum(float(np.sum(e.values[r:])) for e, r in zip(eigs, ranks))
    noise = tail / float(np.sum(qsum * (n - ranks)))
    floored = False
    if not noise > 0:
        total = sum(float(np.sum(e.values)) for e in eigs)
        k = n_snapshots if n_snapshots is not None else float(np.sum(qsum))
        noise = max(NOISE_FLOOR_FRACTION * total / (k * n), np.finfo(float).tiny)
        floored = True
    clutter = np.zeros((len(eigs), n, n), dtype=complex)
    for l, (e, r) in enumerate(zip(eigs, ranks)):
        lam = np.maximum(e.values[:r] / qsum[l] - noise, 0.0)
        u = e.vectors[:, :r]
        clutter[l] = symmetrize((u * lam) @ u.conj().T)
    return noise, clutter, floored


def scatter_eigs(x, q):
    return [hermitian_eig(s) for s in weighted_scatter(x, q)]


def m_step_lowrank(x, q, ranks):
    """Noise-plus-low-rank M-step.

    Returns ``(noise, clutter, eigs, floored)``; ``eigs`` holds the
    eigendecompositions of the weighted scatter matrices for rank selection.
    """
    n = x.shape[1]
    ranks = np.asarray(ranks, dtype=int)
    if np.any(ranks < 1) or np.any(ranks > n - 1):
        raise ValueError(f"ranks must lie in [1, {n - 1}], got {ranks.tolist()}")
    qsum = _class_weights(q)
    eigs = scatter_eigs(x, q)
    noise, clutter, floored = lowrank_from_eigs(eigs, qsum, ranks, x.shape[0])
    return noise, clutter, eigs, floored


def rank_objective(values, qsum_l, noise, r, kp):
    """Per-class contribution to the penalized rank criterion for rank ``r``."""
    n = values.shape[0]
    tiny = np.finfo(float).tiny
    head = np.log(np.maximum(values[:r], tiny) / qsum_l)
    return (2.0 * qsum_l * np.sum(head)
            + 2.0 * (n - r) * math.log(noise) * qsum_l
            + 2.0 * r * qsum_l
            + 2.0 / noise * np.sum(values[r:])
            + (r * (2 * n - r) + 1) * kp)


def estimate_ranks(eigs, qsum, noise, rule, k, n):
    """Minimize the penalized criterion over ranks in ``1..N-1`` for every class.

    The criterion is a sum of per-class terms once the noise floor is fixed,
    so classes are searched independently; the smallest rank wins ties.
    """
    rule = MOSRule.parse(rule)
    kp = rule.penalty_factor(k, n)
    ranks = []
    for e, ql in zip(eigs, qsum):
        scores = [rank_objective(e.values, ql, noise, r, kp) for r in range(1, n)]
        ranks.append(1 + int(np.argmin(scores)))
    return np.asarray(ranks, dtype=int)


def select_ranks(eigs, qsum, rule, k, n, start):
    """Alternate the noise-floor estimate and ``estimate_ranks`` until the ranks repeat.

    Returns ``(ranks, noise, clutter, floored)`` computed under the final ranks.
    """
    ranks = np.asarray(start, dtype=int)
    seen = {tuple(ranks)}
    for _ in range(n):
        noise, _, _ = lowrank_from_eigs(eigs, qsum, ranks, k)
        new = estimate_ranks(eigs, qsum, noise, rule, k, n)
        if tuple(new) in seen:
            ranks = new
            break
        seen.add(tuple(new))
        ranks = new
    noise, clutter, floored = lowrank_from_eigs(eigs, qsum, ranks, k)
    return ranks, noise, clutter, floored


# ---------------------------------------------------------------------------
# driver


def _check_init(init: MixtureParams, config: FitConfig, n):
    if init.kind != config.model_kind:
        raise ValueError(f"initial parameters are {init.kind}, config expects {config.model_kind}")
    if init.n_classes != config.L:
        raise ValueError(f"initial parameters have {init.n_classes} classes, config expects {config.L}")
    if init.class_covariances().shape[-1] != n:
        raise ValueError("initial covariance dimension does not match the data")


def run_em(x, config: FitConfig, init: MixtureParams) -> FitResult:
    """Run ``h_max`` EM iterations (fewer if ``ll_tol`` triggers) from ``init``."""
    x = np.asarray(x, dtype=complex)
    k, n = x.shape
    _check_init(init, config, n)
    params = init
    if params.kind == "ScaledCommon":
        params = MixtureParams(params.priors, params.covariance.gauge_fixed())
    unknown_rank = params.kind == "LowRankNoise" and config.ranks is None
    if config.ranks is not None:
        ranks = np.asarray(config.ranks, dtype=int)
    else:
        ranks = np.full(config.L, min(math.ceil(n / 2), n - 1))
    ll_trace = [log_likelihood(x, params)]
    rank_trace = []
    ridge_events = 0
    ll_decreases = 0
    h = 0
    for h in range(1, config.h_max + 1):
        q = e_step(x, params)
        priors = update_priors(q)
        try:
            if config.model_kind == "General":
                mats, ridged = m_step_general(x, q, config.ridge_eps)
                ridge_events += ridged
                cov = General(mats)
            elif config.model_kind == "ScaledCommon":
                powers, m, ridged = m_step_scaled(x, q, params.covariance.structure, config.t_max,
                                                  config.ridge_eps)
                ridge_events += ridged
                cov = ScaledCommon(m, powers)
            else:
                noise, clutter, eigs, floored = m_step_lowrank(x, q, ranks)
                if unknown_rank:
                    ranks, noise, clutter, floored = select_ranks(
                        eigs, q.sum(axis=0), config.mos_rule, k, n, ranks)
                    rank_trace.append(ranks.tolist())
                if floored:
                    logger.warning("noise floor clamped at EM iteration %d", h)
                cov = LowRankNoise(noise, clutter, ranks)
        except ClassCollapseError as exc:
            raise ClassCollapseError(exc.class_index, h) from None
        params = MixtureParams(priors, cov)
        ll = log_likelihood(x, params)
        prev = ll_trace[-1]
        if ll < prev - 1e-6 * abs(prev):
            ll_decreases += 1
            logger.debug("log-likelihood decreased at iteration %d: %.6g -> %.6g", h, prev, ll)
        ll_trace.append(ll)
        if config.ll_tol > 0 and abs(ll - prev) <= config.ll_tol * abs(prev):
            break
    q = e_step(x, params)
    return FitResult(params=params, responsibilities=q, labels=classify(q), ll_trace=ll_trace,
                     rank_trace=rank_trace, iterations_run=h, ridge_events=ridge_events,
                     ll_decreases=ll_decreases)
