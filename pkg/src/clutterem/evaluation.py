"""Classification-error metrics and the seeded Monte Carlo benchmark."""

from __future__ import annotations

import itertools
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .em import ClassCollapseError, FitConfig, run_em
from .initialization import init_params
from .numerics import NotPositiveDefiniteError, seed_sequence
from .scenario import ScenarioConfig, generate

logger = logging.getLogger(__name__)

MATCHING_MODES = ("power_order", "best_permutation")
MAX_PERMUTATION_CLASSES = 8


def classification_error(estimated, truth, matching="power_order", n_classes=None):
    """Number of snapshots whose class is not correctly identified.

    ``power_order`` compares indices directly; this relies on the
    initialization ordering classes by ascending power, as the scenarios do.
    ``best_permutation`` takes the minimum over all relabelings of the estimate.
    """
    est = np.asarray(estimated, dtype=int)
    tru = np.asarray(truth, dtype=int)
    if est.shape != tru.shape:
        raise ValueError(f"label vectors differ in length: {est.shape[0]} vs {tru.shape[0]}")
    if matching == "power_order":
        return int(np.sum(est != tru))
    if matching != "best_permutation":
        raise ValueError(f"matching must be one of {MATCHING_MODES}, got {matching!r}")
    if n_classes is None:
        n_classes = int(max(est.max(initial=-1), tru.max(initial=-1))) + 1
    if n_classes > MAX_PERMUTATION_CLASSES:
        raise ValueError(f"best_permutation matching supports at most {MAX_PERMUTATION_CLASSES} classes")
    confusion = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(confusion, (est, tru), 1)
    best = max(sum(confusion[i, perm[i]] for i in range(n_classes))
               for perm in itertools.permutations(range(n_classes)))
    return int(est.shape[0] - best)


def rmsce(error_counts):
    """Root mean square of per-trial error counts."""
    e = np.asarray(error_counts, dtype=float)
    if e.size == 0:
        raise ValueError("need at least one trial")
    return math.sqrt(float(np.mean(e * e)))


@dataclass
class TrialOutcome:
    index: int
    error_count: int
    error_count_best_permutation: int
    final_ll: float
    iterations: int
    failed: bool
    runtime_ms: float
    ll_decreases: int = 0
    message: str = ""


@dataclass
class BenchmarkReport:
    scenario: dict
    method: dict
    trials: int
    master_seed: int
    matching: str
    rmsce: float
    rmsce_best_permutation: float
    error_counts: list
    error_histogram: dict
    failed_trials: list
    iterations: int = 0
    ll_decreases: int = 0
    mean_runtime_ms: float = field(default=0.0, compare=False)

    def to_dict(self, canonical=False):
        """Plain dict; ``canonical`` drops the wall-clock timing."""
        d = {
            "scenario": self.scenario,
            "method": self.method,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "matching": self.matching,
            "rmsce": self.rmsce,
            "rmsce_best_permutation": self.rmsce_best_permutation,
            "error_counts": self.error_counts,
            "error_histogram": {str(k): v for k, v in sorted(self.error_histogram.items())},
            "failed_trials": self.failed_trials,
            "iterations": self.iterations,
            "ll_decreases": self.ll_decreases,
        }
        if not canonical:
            d["mean_runtime_ms"] = self.mean_runtime_ms
        return d


def method_summary(fit_config: FitConfig):
    if fit_config.model_kind != "LowRankNoise":
        rank_mode = None
    elif fit_config.ranks is not None:
        rank_mode = "known"
    else:
        rank_mode = str(fit_config.mos_rule)
    return {"model_kind": fit_config.model_kind, "ranks": fit_config.ranks, "rank_selection": rank_mode,
            "h_max": fit_config.h_max, "t_max": fit_config.t_max}


def run_trial(scenario: ScenarioConfig, fit_config: FitConfig, master_seed, index) -> TrialOutcome:
    """Generate, initialize, fit and score trial ``index``.

    Data and initialization draw from two children of the trial's
    substream, so the outcome does not depend on execution order.
    """
    data_ss, init_ss = seed_sequence(master_seed, "trial", index).spawn(2)
    data = generate(scenario, np.random.default_rng(data_ss))
    k = data.labels.shape[0]
    start = time.perf_counter()
    try:
        init = init_params(data.snapshots, fit_config.L, fit_config.model_kind, np.random.default_rng(init_ss))
        fit = run_em(data.snapshots, fit_config, init)
    except (ClassCollapseError, NotPositiveDefiniteError, FloatingPointError, np.linalg.LinAlgError) as exc:
        logger.warning("trial %d failed: %s", index, exc)
        return TrialOutcome(index, k, k, float("nan"), 0, True, 1e3 * (time.perf_counter() - start),
                            message=str(exc))
    elapsed = 1e3 * (time.perf_counter() - start)
    return TrialOutcome(
        index=index,
        error_count=classification_error(fit.labels, data.labels, "power_order"),
        error_count_best_permutation=classification_error(
            fit.labels, data.labels, "best_permutation", max(fit_config.L, scenario.n_classes)),
        final_ll=fit.ll_trace[-1],
        iterations=fit.iterations_run,
        failed=False,
        runtime_ms=elapsed,
        ll_decreases=fit.ll_decreases,
    )


def monte_carlo(scenario: ScenarioConfig, fit_config: FitConfig, trials, master_seed,
                matching="power_order", n_jobs=1) -> BenchmarkReport:
    """Seeded Monte Carlo RMSCE for one scenario and one method.

    Failed trials (for instance a collapsed class) are scored as K errors and
    listed in ``failed_trials``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if matching not in MATCHING_MODES:
        raise ValueError(f"matching must be one of {MATCHING_MODES}, got {matching!r}")
    if n_jobs == 1:
        outcomes = [run_trial(scenario, fit_config, master_seed, i) for i in range(trials)]
    else:
        outcomes = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(run_trial)(scenario, fit_config, master_seed, i) for i in range(trials))
    outcomes.sort(key=lambda o: o.index)
    po = [o.error_count for o in outcomes]
    bp = [o.error_count_best_permutation for o in outcomes]
    errors = po if matching == "power_order" else bp
    return BenchmarkReport(
        scenario=scenario.to_dict(),
        method=method_summary(fit_config),
        trials=trials,
        master_seed=int(master_seed),
        matching=matching,
        rmsce=rmsce(errors),
        rmsce_best_permutation=rmsce(bp),
        error_counts=errors,
        error_histogram=dict(Counter(errors)),
        failed_trials=[o.index for o in outcomes if o.failed],
        iterations=sum(o.iterations for o in outcomes),
        ll_decreases=sum(o.ll_decreases for o in outcomes),
        mean_runtime_ms=float(np.mean([o.runtime_ms for o in outcomes])),
    )
