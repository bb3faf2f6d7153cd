"""Attack score functions and the side information they consume.

Every score maps a released vector o (an empirical mean of some flavor) and
a target record z to a single real number that an adversary thresholds.
Higher means "the target looks present". Scores may return -inf or +inf as
sentinels for outcomes that are impossible under one hypothesis; callers
treat those as extreme thresholds rather than errors.

Side information comes in two grades. :class:`OracleMoments` carries the
true mean and per-coordinate variance of the data distribution.
:class:`ReferenceEstimates` carries moments estimated from reference points
the adversary collected, with an optional ridge term and a cached Cholesky
factorization when the covariance is a full matrix.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from ._util import ConfigError, NumericalError, as_vector
from .mech import NoisyMean, SubsampledMean, subsample_count

__all__ = [
    "OracleMoments",
    "ReferenceEstimates",
    "lr_exact_bernoulli",
    "lr_asymptotic",
    "lr_empirical_cov",
    "scalar_product",
    "lr_noisy",
    "lr_subsampled",
    "lr_misspecified",
    "SCORE_NAMES",
    "make_score",
]


def _diag_bilinear(u: np.ndarray, var: np.ndarray, v: np.ndarray) -> float:
    # u^T diag(var)^-1 v. The single shared kernel keeps the oracle score and
    # the diagonal estimated-covariance score bit-for-bit identical when they
    # are handed identical moments.
    return float(np.dot(u / var, v))


@dataclasses.dataclass(frozen=True)
class OracleMoments:
    """True per-coordinate mean and variance, as adversary side information."""

    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        s2 = np.asarray(self.sigma2, dtype=np.float64)
        if mu.ndim != 1 or mu.shape != s2.shape:
            raise ValueError("mu and sigma2 must be 1-D vectors of equal length")
        if np.any(s2 <= 0):
            raise ValueError("sigma2 must be > 0 component-wise")
        mu = mu.copy()
        s2 = s2.copy()
        mu.flags.writeable = False
        s2.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", s2)

    @property
    def d(self) -> int:
        return int(self.mu.shape[0])

    @classmethod
    def from_distribution(cls, dist) -> "OracleMoments":
        mu, sigma2 = dist.moments()
        return cls(mu, sigma2)


class ReferenceEstimates:
    """Moments estimated from reference points, ready for precision-weighted
    scoring.

    ``c0`` is either a length-d vector (diagonal covariance) or a d-by-d
    symmetric matrix. ``ridge`` is added to the diagonal before any
    factorization; the full-matrix path factorizes once at construction and
    reuses the triangular factor for every score evaluation.

    Raises:
      NumericalError: if the ridged covariance is not positive definite; the
        message names the smallest eigenvalue found.
    """

    def __init__(self, mu0, c0, n0: int, ridge: float = 0.0):
        self.mu0 = as_vector(mu0, name="mu0")
        self.mu0.flags.writeable = False
        d = self.mu0.shape[0]
        if n0 < 1:
            raise ValueError("n0 must be >= 1")
        if ridge < 0:
            raise ValueError("ridge must be >= 0")
        self.n0 = int(n0)
        self.ridge = float(ridge)

        c = np.asarray(c0, dtype=np.float64)
        if c.ndim == 1:
            if c.shape[0] != d:
                raise ValueError(f"diagonal c0 has length {c.shape[0]}, expected {d}")
            var = c + self.ridge
            if np.any(var <= 0):
                raise NumericalError(
                    "diagonal covariance not positive definite after ridge "
                    f"{self.ridge:g}: smallest eigenvalue {var.min():.6e}"
                )
            self._var = var
            self._chol = None
        elif c.ndim == 2:
            if c.shape != (d, d):
                raise ValueError(f"full c0 has shape {c.shape}, expected ({d}, {d})")
            if not np.allclose(c, c.T, rtol=1e-8, atol=1e-12):
                raise ValueError("full c0 must be symmetric")
            c = (c + c.T) / 2.0
            ridged = c + self.ridge * np.eye(d)
            try:
                self._chol = scipy.linalg.cholesky(ridged, lower=True)
            except scipy.linalg.LinAlgError:
                lam = float(scipy.linalg.eigvalsh(ridged, subset_by_index=[0, 0])[0])
                raise NumericalError(
                    "covariance not positive definite after ridge "
                    f"{self.ridge:g}: smallest eigenvalue {lam:.6e}"
                ) from None
            self._var = None
        else:
            raise ValueError(f"c0 must be a vector or a square matrix, got ndim {c.ndim}")
        c.flags.writeable = False
        self.c0 = c

    @property
    def d(self) -> int:
        return int(self.mu0.shape[0])

    @property
    def is_diagonal(self) -> bool:
        return self._chol is None

    def _whiten(self, u: np.ndarray) -> np.ndarray:
        return scipy.linalg.solve_triangular(self._chol, u, lower=True)

    def precision_bilinear(self, u, v) -> float:
        """u^T (c0 + ridge I)^-1 v."""
        u = as_vector(u, self.d, "u")
        v = as_vector(v, self.d, "v")
        if self._chol is None:
            return _diag_bilinear(u, self._var, v)
        return float(np.dot(self._whiten(u), self._whiten(v)))

    def precision_quad(self, u) -> float:
        """u^T (c0 + ridge I)^-1 u."""
        u = as_vector(u, self.d, "u")
        if self._chol is None:
            return _diag_bilinear(u, self._var, u)
        w = self._whiten(u)
        return float(np.dot(w, w))


# -- score functions -----------------------------------------------------------


def lr_exact_bernoulli(mu_hat, z, mu) -> float:
    """Exact log-likelihood ratio for the empirical mean of independent
    Bernoulli columns.

    Per coordinate the ratio of the shifted to the unshifted binomial
    likelihood collapses to mu_hat_j / mu_j when z_j = 1 and to
    (1 - mu_hat_j) / (1 - mu_j) when z_j = 0, so the score is

        sum_j z_j * log(mu_hat_j / mu_j) + (1 - z_j) * log((1 - mu_hat_j) / (1 - mu_j)).

    A coordinate whose selected log argument is 0 contributes -inf: the
    observed mean is impossible with the target present. That sentinel is a
    legitimate score value, not an error.
    """
    mu = as_vector(mu, name="mu")
    mu_hat = as_vector(mu_hat, mu.shape[0], "mu_hat")
    zv = as_vector(z, mu.shape[0], "z")
    if np.any(mu <= 0) or np.any(mu >= 1):
        raise ValueError("mu must lie strictly inside (0, 1) component-wise")
    if np.any(mu_hat < 0) or np.any(mu_hat > 1):
        raise ValueError("mu_hat must lie in [0, 1] component-wise")
    ones = zv == 1.0
    if not np.all(ones | (zv == 0.0)):
        raise ValueError("z must be a binary vector")
    with np.errstate(divide="ignore"):
        log_present = np.log(mu_hat) - np.log(mu)
        log_absent = np.log1p(-mu_hat) - np.log1p(-mu)
    return float(np.sum(np.where(ones, log_present, log_absent)))


def lr_asymptotic(mu_hat, z, om: OracleMoments, n: int) -> float:
    """Limiting log-likelihood-ratio score with oracle moments:
    (z - mu)^T C^-1 (mu_hat - mu) - (1 / 2n) ||z - mu||^2_{C^-1},
    where C is the diagonal covariance diag(sigma2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = as_vector(z, om.d, "z") - om.mu
    v = as_vector(mu_hat, om.d, "mu_hat") - om.mu
    return _diag_bilinear(u, om.sigma2, v) - _diag_bilinear(u, om.sigma2, u) / (2.0 * n)


def lr_empirical_cov(mu_hat, z, refs: ReferenceEstimates, n: int) -> float:
    """Same functional form as the oracle score but with estimated moments:
    (z - mu0)^T C0^-1 (mu_hat - mu0) - (1 / 2n) ||z - mu0||^2_{C0^-1}.

    The full-matrix path evaluates the precision products through the cached
    triangular factor; no matrix is ever inverted explicitly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u = as_vector(z, refs.d, "z") - refs.mu0
    v = as_vector(mu_hat, refs.d, "mu_hat") - refs.mu0
    return refs.precision_bilinear(u, v) - refs.precision_quad(u) / (2.0 * n)


def scalar_product(mu_hat, z, z_ref) -> float:
    """Correlation-style score (z - z_ref)^T mu_hat, the cheapest attack:
    no variance weighting, just alignment of the released mean with the
    direction separating the target from a reference record."""
    zv = as_vector(z, name="z")
    ref = as_vector(z_ref, zv.shape[0], "z_ref")
    v = as_vector(mu_hat, zv.shape[0], "mu_hat")
    return float(np.dot(zv - ref, v))


def lr_noisy(mu_hat, z, om: OracleMoments, gamma, n: int) -> float:
    """Oracle score adapted to a noisy mean release: identical to
    lr_asymptotic with per-coordinate variance sigma2 + gamma^2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("gamma must be >= 0")
    var = om.sigma2 + np.broadcast_to(np.square(g), om.sigma2.shape)
    u = as_vector(z, om.d, "z") - om.mu
    v = as_vector(mu_hat, om.d, "mu_hat") - om.mu
    return _diag_bilinear(u, var, v) - _diag_bilinear(u, var, u) / (2.0 * n)


def lr_subsampled(mu_hat_sub, z, om: OracleMoments, rho: float, n: int) -> float:
    """Approximate log-likelihood ratio for the mean of a size-k uniform
    subsample, k = round(rho * n).

    Per coordinate, with standardized deviations

        d_out = sqrt(k) (mu_hat_j - mu_j) / sigma_j
        d_in  = (k (mu_hat_j - mu_j) + (mu_j - z_j)) / (sqrt(k - 1) sigma_j)

    the contribution is

        (rho/2) (d_out^2 - d_in^2) + rho(1-rho)/8 (d_out^2 - d_in^2)^2 + rho/(2k).

    The third-cumulant correction of the underlying expansion is deliberately
    dropped: it needs third moments the side-information model does not
    carry, and it vanishes faster than the retained terms at auditing scales.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k = subsample_count(rho, n)
    if k < 2:
        raise ValueError(f"subsample size must be >= 2, got k={k} from rho={rho}, n={n}")
    sigma = np.sqrt(om.sigma2)
    diff = as_vector(mu_hat_sub, om.d, "mu_hat_sub") - om.mu
    zv = as_vector(z, om.d, "z")
    d_out = np.sqrt(k) * diff / sigma
    d_in = (k * diff + (om.mu - zv)) / (np.sqrt(k - 1.0) * sigma)
    q = np.square(d_out) - np.square(d_in)
    w = (rho / 2.0) * q + (rho * (1.0 - rho) / 8.0) * np.square(q) + rho / (2.0 * k)
    return float(np.sum(w))


def lr_misspecified(mu_hat, z_targ, om: OracleMoments, n: int) -> float:
    """Oracle score built for a guessed target z_targ. Functionally this is
    lr_asymptotic evaluated at the guess; it exists as a named score so a
    game can be configured with a target the score disagrees with."""
    return lr_asymptotic(mu_hat, z_targ, om, n)


# -- score registry ------------------------------------------------------------

SCORE_NAMES = (
    "lr_exact_bernoulli",
    "lr_asymptotic",
    "lr_empirical_cov",
    "scalar_product",
    "lr_noisy",
    "lr_subsampled",
    "lr_misspecified",
)


def make_score(
    name: str,
    *,
    dist,
    n: int,
    mech=None,
    refs: ReferenceEstimates | None = None,
    z_ref=None,
    z_targ=None,
    gamma=None,
    rho: float | None = None,
):
    """Bind side information to a named score and return a callable
    ``score(o, z) -> float``.

    Defaults are resolved from the distribution and, where it makes sense,
    from the mechanism: lr_noisy takes gamma from a NoisyMean mechanism,
    lr_subsampled takes rho from a SubsampledMean, and scalar_product falls
    back to the true mean as its reference record. lr_misspecified scores
    every round against the fixed guess ``z_targ`` regardless of the game's
    true target.

    Raises:
      ConfigError: unknown name or missing side information.
    """
    if name not in SCORE_NAMES:
        raise ConfigError(f"unknown score {name!r}; expected one of {', '.join(SCORE_NAMES)}")
    if n < 1:
        raise ConfigError("n must be >= 1")

    mu, _ = dist.moments()
    om = OracleMoments.from_distribution(dist)

    if name == "lr_exact_bernoulli":
        return lambda o, z: lr_exact_bernoulli(o, z, mu)
    if name == "lr_asymptotic":
        return lambda o, z: lr_asymptotic(o, z, om, n)
    if name == "lr_empirical_cov":
        if refs is None:
            raise ConfigError("lr_empirical_cov needs reference estimates")
        return lambda o, z: lr_empirical_cov(o, z, refs, n)
    if name == "scalar_product":
        ref = mu if z_ref is None else as_vector(z_ref, dist.d, "z_ref")
        return lambda o, z: scalar_product(o, z, ref)
    if name == "lr_noisy":
        if gamma is None and isinstance(mech, NoisyMean):
            gamma = mech.gamma
        if gamma is None:
            raise ConfigError("lr_noisy needs gamma (or a NoisyMean mechanism)")
        g = np.asarray(gamma, dtype=np.float64)
        return lambda o, z: lr_noisy(o, z, om, g, n)
    if name == "lr_subsampled":
        if rho is None and isinstance(mech, SubsampledMean):
            rho = mech.rho
        if rho is None:
            raise ConfigError("lr_subsampled needs rho (or a SubsampledMean mechanism)")
        r = float(rho)
        return lambda o, z: lr_subsampled(o, z, om, r, n)
    # lr_misspecified
    if z_targ is None:
        raise ConfigError("lr_misspecified needs the guessed target z_targ")
    guess = as_vector(z_targ, dist.d, "z_targ")
    return lambda o, z: lr_misspecified(o, guess, om, n)
