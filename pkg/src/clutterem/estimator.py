"""Scikit-learn compatible front end for the clutter classifier."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .em import FitConfig, classify, e_step, log_likelihood, run_em
from .initialization import init_params
from .numerics import make_rng
from .params import MODEL_KINDS
from .validation import check_snapshots

_ALIASES = {
    "general": "General",
    "scaled": "ScaledCommon",
    "lowrank": "LowRankNoise",
}


def resolve_model_kind(name):
    kind = _ALIASES.get(str(name).lower(), name)
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown covariance model {name!r}; use one of {MODEL_KINDS} or {tuple(_ALIASES)}")
    return kind


def _init_rng(random_state):
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None:
        return np.random.default_rng()
    return make_rng(random_state, "init", 0)


class ClutterEM(ClusterMixin, BaseEstimator):
    """Partition range-bin snapshots into homogeneous clutter classes by EM.

    Parameters
    ----------
    n_classes : int
        Number of classes L, fixed a priori.
    covariance : str
        ``"general"`` (one Hermitian matrix per class), ``"scaled"`` (class
        powers times a common structure) or ``"lowrank"`` (common white
        noise plus a low-rank clutter matrix per class). The canonical names
        ``General``, ``ScaledCommon`` and ``LowRankNoise`` are accepted too.
    h_max : int
        EM iterations.
    t_max : int
        Inner alternating iterations of the scaled model's M-step.
    ranks : list of int or None
        Known clutter ranks for the low-rank model; ``None`` selects them
        every iteration with ``mos_rule``.
    mos_rule : str
        ``"aic"``, ``"bic"`` or ``"gic:<a>"``.
    ll_tol : float
        Relative log-likelihood change that stops EM early; 0 disables.
    ridge_eps : float
        Diagonal loading used when a covariance estimate is numerically singular.
    init : MixtureParams or None
        Starting parameters. By default they are built from a random Hermitian
        structure and sorted whitened powers, so class 0 starts as the weakest.
    random_state : int, numpy Generator or None
        Seeds the random structure of the default initialization.

    Attributes
    ----------
    params_ : MixtureParams
    responsibilities_ : ndarray of shape (n_snapshots, n_classes)
    labels_ : ndarray of shape (n_snapshots,)
    ll_trace_ : list of float
        Log-likelihood at the start and after every iteration.
    rank_trace_ : list
        Selected ranks per iteration (low-rank model with unknown ranks).
    n_iter_ : int
    """

    def __init__(self, n_classes=3, covariance="scaled", h_max=10, t_max=10, ranks=None,
                 mos_rule="gic:2", ll_tol=0.0, ridge_eps=1e-8, init=None, random_state=None):
        self.n_classes = n_classes
        self.covariance = covariance
        self.h_max = h_max
        self.t_max = t_max
        self.ranks = ranks
        self.mos_rule = mos_rule
        self.ll_tol = ll_tol
        self.ridge_eps = ridge_eps
        self.init = init
        self.random_state = random_state

    def _config(self):
        return FitConfig(
            model_kind=resolve_model_kind(self.covariance),
            L=self.n_classes,
            h_max=self.h_max,
            t_max=self.t_max,
            mos_rule=self.mos_rule,
            ranks=None if self.ranks is None else list(self.ranks),
            ll_tol=self.ll_tol,
            ridge_eps=self.ridge_eps,
        )

    def fit(self, X, y=None):
        config = self._config()
        X = check_snapshots(X)
        k, n = X.shape
        if config.model_kind != "LowRankNoise" and k < n:
            raise ValueError(f"need at least as many snapshots as channels (K={k} < N={n})")
        if self.init is not None:
            start = self.init
        else:
            start = init_params(X, config.L, config.model_kind, _init_rng(self.random_state))
        result = run_em(X, config, start)
        self.fit_result_ = result
        self.params_ = result.params
        self.responsibilities_ = result.responsibilities
        self.labels_ = result.labels
        self.ll_trace_ = result.ll_trace
        self.rank_trace_ = result.rank_trace
        self.n_iter_ = result.iterations_run
        self.n_features_in_ = n
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        X = check_snapshots(X, n_channels=self.n_features_in_)
        return e_step(X, self.params_)

    def predict(self, X):
        return classify(self.predict_proba(X))

    def score(self, X, y=None):
        """Mean log-likelihood per snapshot."""
        check_is_fitted(self, "params_")
        X = check_snapshots(X, n_channels=self.n_features_in_)
        return log_likelihood(X, self.params_) / X.shape[0]
