"""Release mechanisms: exact, noisy, and subsampled empirical means.

Each mechanism consumes an (n, d) dataset and an RNG stream and releases a
length-d vector. Mechanisms are immutable value objects so one instance can
be shared across concurrent game rounds.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ._util import ConfigError

__all__ = [
    "EmpiricalMean",
    "NoisyMean",
    "SubsampledMean",
    "subsample_count",
    "mechanism_from_spec",
]


def _check_dataset(D) -> np.ndarray:
    D = np.asarray(D)
    if D.ndim != 2 or D.shape[0] < 1:
        raise ValueError(f"dataset must be a non-empty 2-D matrix, got shape {D.shape}")
    return D


def subsample_count(rho: float, n: int) -> int:
    """Number of rows kept at rate rho, round(rho * n) floored at 1."""
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"subsampling rate must lie in (0, 1], got {rho}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return max(1, int(round(rho * n)))


@dataclasses.dataclass(frozen=True)
class EmpiricalMean:
    """Releases the exact column-wise mean."""

    def apply(self, D, rng: np.random.Generator | None = None) -> np.ndarray:
        D = _check_dataset(D)
        return D.mean(axis=0, dtype=np.float64)


@dataclasses.dataclass(frozen=True, eq=False)
class NoisyMean:
    """Releases the column mean plus centered Gaussian noise with standard
    deviation gamma_j / sqrt(n) in coordinate j.

    ``gamma`` may be a scalar (broadcast to every coordinate) or a length-d
    vector of non-negative noise scales.
    """

    gamma: object

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if g.ndim > 1:
            raise ValueError(f"gamma must be a scalar or 1-D vector, got shape {g.shape}")
        if np.any(g < 0):
            raise ValueError("gamma must be >= 0 component-wise")
        g = np.atleast_1d(g).copy()
        g.flags.writeable = False
        object.__setattr__(self, "gamma", g)

    def apply(self, D, rng: np.random.Generator) -> np.ndarray:
        D = _check_dataset(D)
        n, d = D.shape
        if self.gamma.shape[0] not in (1, d):
            raise ValueError(
                f"gamma has length {self.gamma.shape[0]} but the dataset has {d} columns"
            )
        noise = rng.standard_normal(d) * (self.gamma / np.sqrt(n))
        return D.mean(axis=0, dtype=np.float64) + noise


@dataclasses.dataclass(frozen=True)
class SubsampledMean:
    """Releases the exact mean of k = round(rho * n) rows chosen uniformly
    without replacement, independently of the data."""

    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"subsampling rate must lie in (0, 1], got {self.rho}")

    def k(self, n: int) -> int:
        return subsample_count(self.rho, n)

    def apply(self, D, rng: np.random.Generator) -> np.ndarray:
        D = _check_dataset(D)
        n = D.shape[0]
        k = self.k(n)
        # Partial Fisher-Yates: after i swaps, idx[:i] is a uniform ordered
        # i-subset. Draws are batched; the swap loop itself is rng-free.
        idx = np.arange(n)
        js = rng.integers(low=np.arange(k), high=n)
        for i, j in enumerate(js):
            idx[i], idx[j] = idx[j], idx[i]
        return D[idx[:k]].mean(axis=0, dtype=np.float64)


def mechanism_from_spec(obj: dict):
    """Parse a JSON-style mechanism spec.

    Accepted forms::

        {"mechanism": "empirical_mean"}
        {"mechanism": "noisy_mean", "gamma_scalar": 0.5}
        {"mechanism": "noisy_mean", "gamma": [0.5, 1.0, ...]}
        {"mechanism": "subsampled_mean", "rho": 0.5}
    """
    kind = obj.get("mechanism")
    try:
        if kind == "empirical_mean":
            return EmpiricalMean()
        if kind == "noisy_mean":
            if "gamma_scalar" in obj:
                return NoisyMean(float(obj["gamma_scalar"]))
            if "gamma" in obj:
                return NoisyMean(np.asarray(obj["gamma"], dtype=np.float64))
            raise ConfigError("noisy_mean spec needs 'gamma_scalar' or 'gamma'")
        if kind == "subsampled_mean":
            return SubsampledMean(float(obj["rho"]))
    except KeyError as e:
        raise ConfigError(f"mechanism spec missing key {e}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad mechanism spec: {e}") from e
    raise ConfigError(
        f"unknown mechanism {kind!r}; expected one of "
        "'empirical_mean', 'noisy_mean', 'subsampled_mean'"
    )
