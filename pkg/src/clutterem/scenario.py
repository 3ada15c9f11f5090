"""Synthetic clutter scenarios: AR(1) and angular-patch covariance models."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .numerics import make_rng, sample_complex_gaussian
from .params import LowRankNoise, MixtureParams, ScaledCommon

SCENARIO_KINDS = ("ScaledAR1", "PatchesPlusNoise")

# Angle set used for the patch model: five sectors inside the 14 degree
# first-null beamwidth around broadside.
PATCH_ANGLES_DEG = (-5.6, -2.8, 0.0, 2.8, 5.6)


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending field."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def covar_ar1(n, rho):
    """Toeplitz matrix with entries ``rho ** |i - j|``."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


def steering_vector(n, theta_deg):
    """Unit-norm response of a half-wavelength ULA to a plane wave at ``theta_deg``."""
    phase = np.pi * np.sin(np.deg2rad(theta_deg)) * np.arange(n)
    return np.exp(1j * phase) / np.sqrt(n)


def covar_patches(n, angles_deg, sigma_c2, sigma_n2):
    """Sum of patch returns at the given angles plus white noise."""
    if len(angles_deg) == 0:
        raise ValueError("angle list must be nonempty")
    if sigma_c2 < 0 or sigma_n2 <= 0:
        raise ValueError("powers must be positive")
    v = np.stack([steering_vector(n, t) for t in angles_deg], axis=1)
    return sigma_c2 * (v @ v.conj().T) + sigma_n2 * np.eye(n)


@dataclass
class ScenarioConfig:
    N: int
    class_sizes: list
    model_kind: str
    clutter_powers_db: list
    rho: Optional[float] = None
    noise_power_db: Optional[float] = None
    angles_deg: Optional[list] = None
    seed: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def n_classes(self):
        return len(self.class_sizes)

    @property
    def n_snapshots(self):
        return int(sum(self.class_sizes))

    def validate(self):
        if not isinstance(self.N, (int, np.integer)) or isinstance(self.N, bool) or self.N < 2:
            raise ConfigError("N", f"must be an integer >= 2, got {self.N!r}")
        if not isinstance(self.class_sizes, (list, tuple)) or len(self.class_sizes) < 1:
            raise ConfigError("class_sizes", "expected a nonempty list of class sizes")
        for i, k in enumerate(self.class_sizes):
            if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
                raise ConfigError(f"class_sizes[{i}]", f"must be a positive integer, got {k!r}")
        if self.model_kind not in SCENARIO_KINDS:
            raise ConfigError("model_kind", f"must be one of {SCENARIO_KINDS}, got {self.model_kind!r}")
        if len(self.clutter_powers_db) != self.n_classes:
            raise ConfigError(
                "clutter_powers_db",
                f"expected {self.n_classes} entries (one per class), got {len(self.clutter_powers_db)}",
            )
        if not np.all(np.isfinite(self.clutter_powers_db)):
            raise ConfigError("clutter_powers_db", "entries must be finite")
        if self.model_kind == "ScaledAR1":
            if self.rho is None or not 0.0 <= self.rho < 1.0:
                raise ConfigError("rho", f"must lie in [0, 1) for ScaledAR1, got {self.rho!r}")
        else:
            if self.noise_power_db is None or not np.isfinite(self.noise_power_db):
                raise ConfigError("noise_power_db", "required for PatchesPlusNoise")
            if self.angles_deg is None:
                raise ConfigError("angles_deg", "required for PatchesPlusNoise")
            if len(self.angles_deg) != self.n_classes:
                raise ConfigError(
                    "angles_deg",
                    f"expected {self.n_classes} angle lists (one per class), got {len(self.angles_deg)}",
                )
            for i, a in enumerate(self.angles_deg):
                if len(a) == 0:
                    raise ConfigError(f"angles_deg[{i}]", "angle list must be nonempty")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {self.seed!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d, prefix=""):
        if not isinstance(d, dict):
            raise ConfigError(prefix.rstrip(".") or "scenario", "expected a JSON object")
        allowed = set(cls.__dataclass_fields__)
        for key in d:
            if key not in allowed:
                raise ConfigError(prefix + key, "unknown key")
        required = ("N", "class_sizes", "model_kind", "clutter_powers_db")
        for key in required:
            if key not in d:
                raise ConfigError(prefix + key, "missing required key")
        try:
            return cls(**d)
        except ConfigError as exc:
            raise ConfigError(prefix + exc.key, str(exc).split(": ", 1)[1]) from None
        except TypeError as exc:
            raise ConfigError(prefix.rstrip(".") or "scenario", str(exc)) from None

    def class_covariances(self):
        powers = db_to_linear(self.clutter_powers_db)
        if self.model_kind == "ScaledAR1":
            mc = covar_ar1(self.N, self.rho)
            return [p * mc for p in powers]
        sn2 = float(db_to_linear(self.noise_power_db))
        return [covar_patches(self.N, a, p, sn2) for a, p in zip(self.angles_deg, powers)]

    def true_params(self) -> MixtureParams:
        sizes = np.asarray(self.class_sizes, dtype=float)
        priors = sizes / sizes.sum()
        powers = db_to_linear(self.clutter_powers_db)
        if self.model_kind == "ScaledAR1":
            # AR(1) structure already has unit diagonal, hence trace N.
            return MixtureParams(priors, ScaledCommon(covar_ar1(self.N, self.rho).astype(complex), powers))
        sn2 = float(db_to_linear(self.noise_power_db))
        clutter = [covar_patches(self.N, a, p, sn2) - sn2 * np.eye(self.N) for a, p in zip(self.angles_deg, powers)]
        ranks = [min(self.N - 1, len(a)) for a in self.angles_deg]
        return MixtureParams(priors, LowRankNoise(sn2, clutter, ranks))


def ar1_scenario(class_sizes, powers_db, n=16, rho=0.9, seed=0):
    return ScenarioConfig(N=n, class_sizes=list(class_sizes), model_kind="ScaledAR1",
                          clutter_powers_db=list(powers_db), rho=rho, seed=seed)


def patch_scenario(class_sizes, powers_db, n=16, noise_db=0.0, angles=PATCH_ANGLES_DEG, seed=0):
    return ScenarioConfig(N=n, class_sizes=list(class_sizes), model_kind="PatchesPlusNoise",
                          clutter_powers_db=list(powers_db), noise_power_db=noise_db,
                          angles_deg=[list(angles) for _ in class_sizes], seed=seed)


@dataclass
class LabeledSnapshotSet:
    """Snapshots (rows), zero-based true labels and the generating parameters."""

    snapshots: np.ndarray
    labels: np.ndarray
    params: MixtureParams = field(repr=False)


def generate(config: ScenarioConfig, rng=None) -> LabeledSnapshotSet:
    """Draw ``K_l`` snapshots per class in contiguous blocks, class 0 first."""
    if rng is None:
        rng = make_rng(config.seed, "scenario", 0)
    blocks = [sample_complex_gaussian(m, k, rng)
              for m, k in zip(config.class_covariances(), config.class_sizes)]
    labels = np.repeat(np.arange(config.n_classes), config.class_sizes)
    return LabeledSnapshotSet(np.vstack(blocks), labels, config.true_params())
