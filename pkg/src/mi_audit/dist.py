"""Column-wise independent data-generating distributions.

A :class:`ProductDistribution` is a product of one-dimensional column laws
(Bernoulli or Gaussian). It owns the mean vector ``mu`` and the diagonal
covariance ``sigma2`` that every attack score and closed-form leakage
formula is built on, and it knows how to sample datasets and measure the
Mahalanobis geometry of a candidate target record.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence, Union

import numpy as np

from ._util import ConfigError, as_vector

__all__ = [
    "Bernoulli",
    "Gaussian",
    "ColumnLaw",
    "ProductDistribution",
    "TargetPoint",
    "make_extreme_targets",
    "target_from_spec",
]


@dataclasses.dataclass(frozen=True)
class Bernoulli:
    """Bernoulli column law with success probability strictly inside (0, 1).

    The open interval is enforced at construction because every precision
    weight downstream divides by the variance p(1 - p).
    """

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"Bernoulli p must lie strictly in (0, 1), got {self.p}")

    @property
    def mean(self) -> float:
        return self.p

    @property
    def var(self) -> float:
        return self.p * (1.0 - self.p)


@dataclasses.dataclass(frozen=True)
class Gaussian:
    """Gaussian column law with strictly positive variance."""

    mean: float
    var: float

    def __post_init__(self):
        if not self.var > 0.0:
            raise ValueError(f"Gaussian var must be > 0, got {self.var}")


ColumnLaw = Union[Bernoulli, Gaussian]


@dataclasses.dataclass(frozen=True)
class TargetPoint:
    """A candidate target record, a real vector of length d."""

    z: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.z, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ValueError(f"target must be a non-empty 1-D vector, got shape {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "z", v)

    @property
    def d(self) -> int:
        return int(self.z.shape[0])


class ProductDistribution:
    """Product of independent column laws.

    Immutable after construction and safe to share across concurrent game
    rounds; all randomness comes from externally supplied generator streams.

    Both supported laws have moments of every order, so the finite
    higher-moment requirements of the asymptotic results hold automatically.
    """

    def __init__(self, columns: Sequence[ColumnLaw]):
        columns = tuple(columns)
        if len(columns) < 1:
            raise ValueError("need at least one column")
        for c in columns:
            if not isinstance(c, (Bernoulli, Gaussian)):
                raise TypeError(f"unsupported column law: {c!r}")
        self._columns = columns
        mu = np.array(
            [c.mean if isinstance(c, Gaussian) else c.p for c in columns], dtype=np.float64
        )
        sigma2 = np.array(
            [c.var if isinstance(c, Gaussian) else c.p * (1.0 - c.p) for c in columns],
            dtype=np.float64,
        )
        mu.flags.writeable = False
        sigma2.flags.writeable = False
        self._mu = mu
        self._sigma2 = sigma2
        self._all_bernoulli = all(isinstance(c, Bernoulli) for c in columns)
        if self._all_bernoulli:
            self._p32 = mu.astype(np.float32)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def bernoulli(cls, p) -> "ProductDistribution":
        """Build an all-Bernoulli product from a vector of probabilities."""
        p = np.atleast_1d(np.asarray(p, dtype=np.float64))
        return cls([Bernoulli(float(v)) for v in p])

    @classmethod
    def gaussian(cls, mean, var) -> "ProductDistribution":
        """Build an all-Gaussian product from mean and variance vectors."""
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        var = np.atleast_1d(np.asarray(var, dtype=np.float64))
        if mean.shape != var.shape:
            raise ValueError("mean and var must have the same length")
        return cls([Gaussian(float(m), float(v)) for m, v in zip(mean, var)])

    @classmethod
    def bernoulli_uniform(cls, d: int, a: float, seed: int) -> "ProductDistribution":
        """Bernoulli product with p drawn once, uniformly from [a, 1 - a]^d.

        The margin ``a`` keeps every coordinate away from the degenerate
        endpoints; the draw is reproducible from ``seed``.
        """
        if not 0.0 < a < 0.5:
            raise ValueError(f"margin a must lie in (0, 0.5), got {a}")
        if d < 1:
            raise ValueError("d must be >= 1")
        p = np.random.default_rng(seed).uniform(a, 1.0 - a, size=d)
        return cls.bernoulli(p)

    @classmethod
    def from_spec(cls, obj: dict) -> "ProductDistribution":
        """Parse a JSON-style distribution spec.

        Two forms are accepted::

            {"columns": [{"law": "bernoulli", "p": 0.3},
                         {"law": "gaussian", "mean": 0, "var": 1}, ...]}
            {"law": "bernoulli_uniform", "d": 5000, "a": 0.25, "seed": 7}
        """
        try:
            if "columns" in obj:
                cols = []
                for c in obj["columns"]:
                    law = c["law"]
                    if law == "bernoulli":
                        cols.append(Bernoulli(float(c["p"])))
                    elif law == "gaussian":
                        cols.append(Gaussian(float(c["mean"]), float(c["var"])))
                    else:
                        raise ConfigError(f"unknown column law: {law!r}")
                return cls(cols)
            if obj.get("law") == "bernoulli_uniform":
                return cls.bernoulli_uniform(int(obj["d"]), float(obj["a"]), int(obj["seed"]))
        except KeyError as e:
            raise ConfigError(f"distribution spec missing key {e}") from e
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad distribution spec: {e}") from e
        raise ConfigError(
            "distribution spec needs either a 'columns' list or "
            "{'law': 'bernoulli_uniform', 'd', 'a', 'seed'}"
        )

    # -- basic queries --------------------------------------------------------

    @property
    def columns(self) -> tuple:
        return self._columns

    @property
    def d(self) -> int:
        return len(self._columns)

    @property
    def all_bernoulli(self) -> bool:
        return self._all_bernoulli

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (mu, sigma2), the per-column mean and variance vectors.

        The returned arrays are read-only views of cached state.
        """
        return self._mu, self._sigma2

    # -- sampling -------------------------------------------------------------

    def sample_dataset(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw an (n, d) dataset of i.i.d. rows.

        Deterministic given the generator state. All-Bernoulli products are
        returned as a compact uint8 0/1 matrix (exact values, fast to sample
        and to average); anything involving a Gaussian column is float64.

        Args:
          n: number of rows, >= 1.
          rng: a numpy Generator; consumed.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        if self._all_bernoulli:
            u = rng.random((n, self.d), dtype=np.float32)
            return np.less(u, self._p32).view(np.uint8)
        out = np.empty((n, self.d), dtype=np.float64)
        bern = np.array(
            [i for i, c in enumerate(self._columns) if isinstance(c, Bernoulli)], dtype=np.intp
        )
        gauss = np.array(
            [i for i, c in enumerate(self._columns) if isinstance(c, Gaussian)], dtype=np.intp
        )
        if bern.size:
            out[:, bern] = rng.random((n, bern.size)) < self._mu[bern]
        if gauss.size:
            sd = np.sqrt(self._sigma2[gauss])
            out[:, gauss] = self._mu[gauss] + sd * rng.standard_normal((n, gauss.size))
        return out

    # -- Mahalanobis geometry -------------------------------------------------

    def mahalanobis2(self, z) -> float:
        """Squared Mahalanobis distance of ``z`` from the distribution mean,
        sum_j (z_j - mu_j)^2 / sigma_j^2."""
        v = as_vector(z, self.d, "z")
        u = v - self._mu
        return float(np.dot(u / self._sigma2, u))

    def leakage_score(self, z, n: int) -> float:
        """Per-record leakage score, mahalanobis2(z) / n.

        This single number governs the asymptotic power of every attack on
        the exact empirical mean; its expectation over z drawn from the
        distribution itself is d / n.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        return self.mahalanobis2(z) / n


def target_from_spec(obj, dist: ProductDistribution) -> TargetPoint:
    """Parse a JSON-style target spec against a distribution.

    Accepted forms::

        [0.0, 1.0, ...]                         explicit coordinates
        {"values": [0.0, 1.0, ...]}
        {"extreme": "easy"} / {"extreme": "hard"}   Bernoulli extremes
        {"draw_seed": 11}                       one seeded draw from dist

    The seeded draw gives an in-distribution target whose leakage score
    concentrates around d / n, a natural medium-difficulty choice.
    """
    if isinstance(obj, (list, tuple, np.ndarray)):
        return TargetPoint(as_vector(obj, dist.d, "target"))
    if isinstance(obj, dict):
        if "values" in obj:
            return TargetPoint(as_vector(obj["values"], dist.d, "target"))
        if "extreme" in obj:
            easy, hard = make_extreme_targets(dist)
            which = obj["extreme"]
            if which == "easy":
                return easy
            if which == "hard":
                return hard
            raise ConfigError(f"extreme target must be 'easy' or 'hard', got {which!r}")
        if "draw_seed" in obj:
            rng = np.random.default_rng(int(obj["draw_seed"]))
            return TargetPoint(dist.sample_dataset(1, rng)[0].astype(np.float64))
    raise ConfigError(
        "target spec must be a coordinate list or an object with "
        "'values', 'extreme', or 'draw_seed'"
    )


def make_extreme_targets(dist: ProductDistribution) -> tuple[TargetPoint, TargetPoint]:
    """Return the easiest and hardest binary targets for a Bernoulli product.

    The easy target takes, in each coordinate, the binary value farthest from
    p_j (ties at p_j = 1/2 resolve to 1); the hard target takes the nearest
    one. The easy target maximizes the Mahalanobis distance over {0, 1}^d.

    Raises:
      ValueError: if any column is not Bernoulli.
    """
    if not dist.all_bernoulli:
        raise ValueError("extreme binary targets are defined only for Bernoulli columns")
    p, _ = dist.moments()
    z_easy = (p <= 0.5).astype(np.float64)
    z_hard = (p > 0.5).astype(np.float64)
    return TargetPoint(z_easy), TargetPoint(z_hard)
