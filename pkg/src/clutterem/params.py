"""Mixture parameter containers for the three covariance structures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODEL_KINDS = ("General", "ScaledCommon", "LowRankNoise")


@dataclass
class General:
    """One unconstrained Hermitian PD covariance per class."""

    matrices: np.ndarray  # (L, N, N)

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=complex)

    kind = "General"

    def class_covariances(self):
        return self.matrices

    def to_dict(self):
        return {"kind": self.kind, "matrices": _cplx(self.matrices)}


@dataclass
class ScaledCommon:
    """Class covariances ``power_l * structure`` sharing one structure."""

    structure: np.ndarray  # (N, N), trace N after gauge fixing
    powers: np.ndarray  # (L,)

    def __post_init__(self):
        self.structure = np.asarray(self.structure, dtype=complex)
        self.powers = np.asarray(self.powers, dtype=float)

    kind = "ScaledCommon"

    def class_covariances(self):
        return self.powers[:, None, None] * self.structure[None]

    def gauge_fixed(self):
        c = float(np.real(np.trace(self.structure))) / self.structure.shape[0]
        return ScaledCommon(self.structure / c, self.powers * c)

    def to_dict(self):
        return {"kind": self.kind, "structure": _cplx(self.structure), "powers": self.powers.tolist()}


@dataclass
class LowRankNoise:
    """Class covariances ``noise * I + clutter_l`` with ``rank(clutter_l) <= ranks[l]``."""

    noise: float
    clutter: np.ndarray  # (L, N, N)
    ranks: np.ndarray  # (L,)

    def __post_init__(self):
        self.noise = float(self.noise)
        self.clutter = np.asarray(self.clutter, dtype=complex)
        self.ranks = np.asarray(self.ranks, dtype=int)

    kind = "LowRankNoise"

    def class_covariances(self):
        n = self.clutter.shape[-1]
        return self.clutter + self.noise * np.eye(n)[None]

    def to_dict(self):
        return {"kind": self.kind, "noise": self.noise, "clutter": _cplx(self.clutter),
                "ranks": self.ranks.tolist()}


@dataclass
class MixtureParams:
    priors: np.ndarray
    covariance: object

    def __post_init__(self):
        self.priors = np.asarray(self.priors, dtype=float)

    @property
    def kind(self):
        return self.covariance.kind

    @property
    def n_classes(self):
        return self.priors.shape[0]

    def class_covariances(self):
        return self.covariance.class_covariances()

    def permuted(self, order):
        """Reorder classes so that new class ``i`` is old class ``order[i]``."""
        order = np.asarray(order)
        cov = self.covariance
        if isinstance(cov, General):
            new = General(cov.matrices[order])
        elif isinstance(cov, ScaledCommon):
            new = ScaledCommon(cov.structure, cov.powers[order])
        else:
            new = LowRankNoise(cov.noise, cov.clutter[order], cov.ranks[order])
        return MixtureParams(self.priors[order], new)

    def check(self, atol=1e-12):
        """Raise ``ValueError`` if the parameter invariants are violated."""
        p = self.priors
        if np.any(p < 0) or abs(p.sum() - 1.0) > atol * max(1, len(p)) * 10:
            raise ValueError(f"priors must lie on the simplex, got {p}")
        cov = self.covariance
        if isinstance(cov, General):
            for l, m in enumerate(cov.matrices):
                if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] <= 0:
                    raise ValueError(f"class {l} covariance is not positive definite")
        elif isinstance(cov, ScaledCommon):
            if np.any(cov.powers <= 0):
                raise ValueError("class powers must be positive")
            if np.linalg.eigvalsh(0.5 * (cov.structure + cov.structure.conj().T))[0] <= 0:
                raise ValueError("common structure is not positive definite")
        elif isinstance(cov, LowRankNoise):
            if cov.noise <= 0:
                raise ValueError("noise power must be positive")
            n = cov.clutter.shape[-1]
            for l, (r, rk) in enumerate(zip(cov.clutter, cov.ranks)):
                if not 1 <= rk <= n - 1:
                    raise ValueError(f"class {l} rank {rk} outside [1, {n - 1}]")
                w = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
                tr = max(float(np.real(np.trace(r))), 0.0)
                if w[0] < -1e-10 * max(tr, 1.0):
                    raise ValueError(f"class {l} clutter matrix is not PSD")
                if np.sum(w > 1e-10 * tr) > rk:
                    raise ValueError(f"class {l} clutter rank exceeds {rk}")
        else:
            raise TypeError(f"unknown covariance form {type(cov).__name__}")
        return self

    def to_dict(self):
        return {"priors": self.priors.tolist(), "covariance": self.covariance.to_dict()}

    @classmethod
    def from_dict(cls, d):
        cov = d["covariance"]
        kind = cov["kind"]
        if kind == "General":
            c = General(_uncplx(cov["matrices"]))
        elif kind == "ScaledCommon":
            c = ScaledCommon(_uncplx(cov["structure"]), cov["powers"])
        elif kind == "LowRankNoise":
            c = LowRankNoise(cov["noise"], _uncplx(cov["clutter"]), cov["ranks"])
        else:
            raise ValueError(f"unknown covariance kind {kind!r}")
        return cls(d["priors"], c)


def _cplx(a):
    a = np.asarray(a)
    return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}


def _uncplx(d):
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
