"""Configuration documents, range-profile files and canonical result output.

Labels are zero-based in memory and one-based in every file written here.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .em import FitConfig, FitResult, MOSRule
from .evaluation import MATCHING_MODES
from .params import MODEL_KINDS
from .scenario import ConfigError, ScenarioConfig

TOP_LEVEL_KEYS = ("scenario", "fit", "init", "benchmark", "tables")
FIT_KEYS = ("model_kind", "L", "h_max", "t_max", "mos_rule", "ranks", "ll_tol", "ridge_eps")
RUN_KEYS = ("trials", "master_seed", "matching", "n_jobs")
LAYOUT = "csv-interleaved"


class RangeProfileError(ValueError):
    """Malformed range-profile file."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunSettings:
    trials: int = 200
    master_seed: int = 0
    matching: str = "power_order"
    n_jobs: int = 1

    def to_dict(self):
        return {"trials": self.trials, "master_seed": self.master_seed, "matching": self.matching,
                "n_jobs": self.n_jobs}


@dataclass
class TableSpec:
    settings: RunSettings
    scenarios: list  # [(name, ScenarioConfig)]
    methods: list  # [(name, FitConfig)]

    def to_dict(self):
        d = self.settings.to_dict()
        d["scenarios"] = [{"name": n, "scenario": s.to_dict()} for n, s in self.scenarios]
        d["methods"] = [{"name": n, "fit": fit_config_to_dict(f)} for n, f in self.methods]
        return d


@dataclass
class ConfigBundle:
    scenario: Optional[ScenarioConfig] = None
    fit: Optional[FitConfig] = None
    init_seed: int = 0
    benchmark: RunSettings = field(default_factory=RunSettings)
    tables: Optional[TableSpec] = None

    def to_dict(self):
        d = {"init": {"seed": self.init_seed}, "benchmark": self.benchmark.to_dict()}
        if self.scenario is not None:
            d["scenario"] = self.scenario.to_dict()
        if self.fit is not None:
            d["fit"] = fit_config_to_dict(self.fit)
        if self.tables is not None:
            d["tables"] = self.tables.to_dict()
        return d


def fit_config_to_dict(cfg: FitConfig):
    return {"model_kind": cfg.model_kind, "L": cfg.L, "h_max": cfg.h_max, "t_max": cfg.t_max,
            "mos_rule": str(cfg.mos_rule), "ranks": cfg.ranks, "ll_tol": cfg.ll_tol,
            "ridge_eps": cfg.ridge_eps}


def _reject_unknown(d, allowed, prefix):
    if not isinstance(d, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a JSON object")
    for key in d:
        if key not in allowed:
            raise ConfigError(prefix + key, "unknown key")


def _int(d, key, prefix, default=None, minimum=None):
    v = d.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(prefix + key, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(prefix + key, f"must be >= {minimum}, got {v}")
    return v


def parse_fit(d, prefix="fit.", default_l=None) -> FitConfig:
    _reject_unknown(d, FIT_KEYS, prefix)
    kind = d.get("model_kind")
    if kind not in MODEL_KINDS:
        raise ConfigError(prefix + "model_kind", f"must be one of {MODEL_KINDS}, got {kind!r}")
    n_classes = d.get("L", default_l)
    if n_classes is None:
        raise ConfigError(prefix + "L", "missing (and no scenario to infer it from)")
    n_classes = _int({"L": n_classes}, "L", prefix, minimum=1)
    if default_l is not None and n_classes != default_l:
        raise ConfigError(prefix + "L", f"is {n_classes} but the scenario has {default_l} classes")
    ranks = d.get("ranks")
    if ranks is not None:
        if not isinstance(ranks, list) or len(ranks) != n_classes:
            raise ConfigError(prefix + "ranks", f"expected a list of {n_classes} integers")
        for i, r in enumerate(ranks):
            _int({"r": r}, "r", prefix + f"ranks[{i}]", minimum=1)
    try:
        rule = MOSRule.parse(d.get("mos_rule", "gic:2"))
    except ValueError as exc:
        raise ConfigError(prefix + "mos_rule", str(exc)) from None
    try:
        return FitConfig(
            model_kind=kind,
            L=n_classes,
            h_max=_int(d, "h_max", prefix, 10, 1),
            t_max=_int(d, "t_max", prefix, 10, 1),
            mos_rule=rule,
            ranks=ranks,
            ll_tol=float(d.get("ll_tol", 0.0)),
            ridge_eps=float(d.get("ridge_eps", 1e-8)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(prefix.rstrip("."), str(exc)) from None


def parse_run_settings(d, prefix) -> RunSettings:
    _reject_unknown(d, RUN_KEYS + (("scenarios", "methods") if prefix == "tables." else ()), prefix)
    matching = d.get("matching", "power_order")
    if matching not in MATCHING_MODES:
        raise ConfigError(prefix + "matching", f"must be one of {MATCHING_MODES}, got {matching!r}")
    seed = _int(d, "master_seed", prefix, 0, 0)
    if seed >= 2**64:
        raise ConfigError(prefix + "master_seed", "must fit in 64 bits")
    return RunSettings(trials=_int(d, "trials", prefix, 200, 1), master_seed=seed, matching=matching,
                       n_jobs=_int(d, "n_jobs", prefix, 1))


def parse_config_dict(doc) -> ConfigBundle:
    _reject_unknown(doc, TOP_LEVEL_KEYS, "")
    bundle = ConfigBundle()
    if "scenario" in doc:
        _reject_unknown(doc["scenario"], ScenarioConfig.__dataclass_fields__, "scenario.")
        bundle.scenario = ScenarioConfig.from_dict(doc["scenario"], prefix="scenario.")
    if "fit" in doc:
        default_l = bundle.scenario.n_classes if bundle.scenario is not None else None
        bundle.fit = parse_fit(doc["fit"], "fit.", default_l)
    if "init" in doc:
        _reject_unknown(doc["init"], ("seed",), "init.")
        bundle.init_seed = _int(doc["init"], "seed", "init.", 0, 0)
    if "benchmark" in doc:
        bundle.benchmark = parse_run_settings(doc["benchmark"], "benchmark.")
    if "tables" in doc:
        t = doc["tables"]
        settings = parse_run_settings(t, "tables.")
        scenarios, methods = [], []
        for i, entry in enumerate(t.get("scenarios", [])):
            p = f"tables.scenarios[{i}]."
            _reject_unknown(entry, ("name", "scenario"), p)
            scenarios.append((str(entry.get("name", f"scenario{i}")),
                              ScenarioConfig.from_dict(entry.get("scenario", {}), prefix=p + "scenario.")))
        for i, entry in enumerate(t.get("methods", [])):
            p = f"tables.methods[{i}]."
            _reject_unknown(entry, ("name", "fit"), p)
            methods.append((str(entry.get("name", f"method{i}")), parse_fit(entry.get("fit", {}), p + "fit.")))
        if not scenarios or not methods:
            raise ConfigError("tables", "needs at least one scenario and one method")
        for sname, sc in scenarios:
            for mname, fc in methods:
                if fc.L != sc.n_classes:
                    raise ConfigError("tables", f"method {mname!r} has L={fc.L} but scenario {sname!r} "
                                                f"has {sc.n_classes} classes")
        bundle.tables = TableSpec(settings, scenarios, methods)
    return bundle


def parse_config(path) -> ConfigBundle:
    """Read and validate a JSON configuration document.

    Errors carry the offending key path, or line and column for malformed JSON.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(str(path), "configuration file not found")
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", f"malformed JSON ({exc.msg})") from None
    return parse_config_dict(doc)


# ---------------------------------------------------------------------------
# range profiles and labels


def _fmt(v):
    return format(float(v), ".17g")


def write_range_profile(path, snapshots):
    """Write snapshots (rows) as a JSON header line followed by interleaved re/im CSV rows."""
    z = np.asarray(snapshots, dtype=complex)
    k, n = z.shape
    header = json.dumps({"n_channels": n, "n_bins": k, "layout": LAYOUT}, sort_keys=True)
    lines = [header]
    for row in z:
        lines.append(",".join(f"{_fmt(c.real)},{_fmt(c.imag)}" for c in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_range_profile(path):
    """Read a range-profile file into a ``(K, N)`` complex array."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise RangeProfileError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise RangeProfileError(f"{path}: line 1: header is not valid JSON ({exc.msg})") from None
    if not isinstance(header, dict) or set(header) != {"n_channels", "n_bins", "layout"}:
        raise RangeProfileError(f"{path}: line 1: header must have exactly n_channels, n_bins, layout")
    if header["layout"] != LAYOUT:
        raise RangeProfileError(f"{path}: line 1: unsupported layout {header['layout']!r}")
    n, k = header["n_channels"], header["n_bins"]
    if not (isinstance(n, int) and isinstance(k, int) and n >= 1 and k >= 1):
        raise RangeProfileError(f"{path}: line 1: n_channels and n_bins must be positive integers")
    body = [ln for ln in lines[1:]]
    while body and body[-1].strip() == "":
        body.pop()
    if len(body) != k:
        raise RangeProfileError(f"{path}: header declares {k} rows, body has {len(body)}")
    out = np.empty((k, n), dtype=complex)
    for i, row in enumerate(csv.reader(io.StringIO("\n".join(body)))):
        if len(row) != 2 * n:
            raise RangeProfileError(f"{path}: row {i + 1} (line {i + 2}) has {len(row)} fields, expected {2 * n}")
        try:
            vals = [float(f) for f in row]
        except ValueError:
            raise RangeProfileError(f"{path}: row {i + 1} (line {i + 2}) has a non-numeric field") from None
        if not all(math.isfinite(v) for v in vals):
            raise RangeProfileError(f"{path}: row {i + 1} (line {i + 2}) has a non-finite value")
        out[i] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
    return out


def write_labels(path, labels):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "label"])
        for i, lab in enumerate(labels):
            w.writerow([i + 1, int(lab) + 1])


def load_labels(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["bin", "label"]:
        raise ValueError(f"{path}: expected header 'bin,label'")
    labels = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != 2:
            raise ValueError(f"{path}: row {i} must have 2 fields")
        labels.append(int(row[1]) - 1)
    if labels and min(labels) < 0:
        raise ValueError(f"{path}: labels are one-based")
    return np.asarray(labels, dtype=int)


def write_label_comparison(path, estimated, truth=None):
    """Per-bin CSV of true (if known) and estimated one-based class labels."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "true_label", "estimated_label"])
        for i, e in enumerate(estimated):
            t = "" if truth is None else int(truth[i]) + 1
            w.writerow([i + 1, t, int(e) + 1])


def write_histogram(path, histogram):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["error_count", "frequency"])
        for count in sorted(histogram):
            w.writerow([count, histogram[count]])


def fit_result_to_dict(result: FitResult):
    return {
        "params": result.params.to_dict(),
        "labels": [int(v) + 1 for v in result.labels],
        "responsibilities": result.responsibilities.tolist(),
        "ll_trace": result.ll_trace,
        "rank_trace": result.rank_trace,
        "iterations_run": result.iterations_run,
        "ridge_events": result.ridge_events,
        "ll_decreases": result.ll_decreases,
    }


# ---------------------------------------------------------------------------
# canonical JSON


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, fixed indentation, shortest round-trip floats, NaN as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    Path(path).write_text(canonical_json(obj), encoding="utf-8")
