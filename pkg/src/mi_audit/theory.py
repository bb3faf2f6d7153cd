"""Closed-form leakage, trade-off, and privacy-conversion formulas.

Everything in this module is a pure function of a handful of scalars, chief
among them the per-record leakage score m. The limiting distribution of the
log-likelihood-ratio score is N(-m/2, m) when the target is absent and
N(+m/2, m) when it is present, and every formula below is a consequence of
that Gaussian pair:

  * theoretical_leakage(m)        best achievable advantage
  * theoretical_power(m, alpha)   power of the level-alpha threshold test
  * optimal_threshold(m, alpha)   the threshold that attains it
  * gdp_delta(m, epsilon)         the (epsilon, delta) profile of the
                                  equivalent sqrt(m)-Gaussian-DP guarantee

Effective scores for noisy, subsampled, and misspecified variants reduce
those settings to the same m-parameterized family.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri
from scipy.spatial import cKDTree

from ._util import as_vector

__all__ = [
    "phi",
    "phi_inv",
    "theoretical_leakage",
    "theoretical_power",
    "optimal_threshold",
    "noisy_leakage_score",
    "subsampled_leakage_score",
    "misspec_advantage",
    "cross_leakage",
    "gdp_delta",
    "tv_gaussians",
    "effective_leakage",
    "TradeoffCurve",
    "polyline_gap",
    "sup_norm_gap",
    "vertical_gap",
]


def phi(x):
    """Standard normal CDF. Accepts scalars or arrays; -inf and +inf map to
    0 and 1."""
    out = ndtr(np.asarray(x, dtype=np.float64))
    return float(out) if np.ndim(x) == 0 else out


def phi_inv(p):
    """Standard normal quantile.

    Defined on [0, 1]; the endpoints return -inf and +inf so that
    downstream threshold formulas degrade gracefully at alpha = 0 or 1.

    Raises:
      ValueError: if any input lies outside [0, 1].
    """
    q = np.asarray(p, dtype=np.float64)
    if np.any(q < 0.0) or np.any(q > 1.0) or np.any(np.isnan(q)):
        raise ValueError(f"quantile argument must lie in [0, 1], got {p!r}")
    out = ndtri(q)
    return float(out) if np.ndim(p) == 0 else out


def _two_sided(x):
    # Phi(x) - Phi(-x); shared so that identities between formulas that are
    # algebraically equal also hold bit-for-bit.
    return ndtr(x) - ndtr(-x)


def theoretical_leakage(m: float) -> float:
    """Largest achievable advantage against a target with leakage score m.

    Equals Phi(sqrt(m)/2) - Phi(-sqrt(m)/2), the total variation distance
    between the two limiting score distributions. Zero at m = 0 and strictly
    increasing, approaching 1 as m grows.
    """
    if m < 0:
        raise ValueError(f"leakage score must be >= 0, got {m}")
    return float(_two_sided(np.sqrt(m) / 2.0))


def theoretical_power(m, alpha):
    """Asymptotic power of the optimal level-alpha test, Phi(Phi^-1(alpha) + sqrt(m)).

    Vectorized over alpha. At m = 0 the test is blind and power equals alpha.

    Raises:
      ValueError: if m < 0 or alpha is outside [0, 1].
    """
    if m < 0:
        raise ValueError(f"leakage score must be >= 0, got {m}")
    u = phi_inv(alpha)
    with np.errstate(invalid="ignore"):
        out = ndtr(u + np.sqrt(m))
    # -inf + 0 is fine, but guard the exact corner alpha in {0,1} with m = 0
    # where u is +-inf and the sum is still +-inf.
    out = np.where(np.isinf(u), ndtr(u), out)
    return float(out) if np.ndim(alpha) == 0 else np.asarray(out, dtype=np.float64)


def optimal_threshold(m: float, alpha: float) -> float:
    """Score threshold attaining the level-alpha optimal test: -m/2 + sqrt(m) * Phi^-1(1 - alpha).

    Guessing "present" when the log-likelihood-ratio score exceeds this value
    has asymptotic false-positive rate alpha.
    """
    if m < 0:
        raise ValueError(f"leakage score must be >= 0, got {m}")
    return float(-m / 2.0 + np.sqrt(m) * phi_inv(1.0 - alpha))


def noisy_leakage_score(dist, z, gamma, n: int) -> float:
    """Effective leakage score when the released mean carries additive
    Gaussian noise of standard deviation gamma_j / sqrt(n) per coordinate.

    Computes (1/n) * sum_j (z_j - mu_j)^2 / (sigma_j^2 + gamma_j^2); the
    noise inflates each coordinate's variance and so deflates its precision
    weight. gamma may be a scalar or a length-d vector, and gamma = 0
    recovers the noiseless leakage score exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mu, sigma2 = dist.moments()
    v = as_vector(z, dist.d, "z")
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("gamma must be >= 0")
    g2 = np.broadcast_to(np.square(g), mu.shape)
    u = v - mu
    return float(np.dot(u / (sigma2 + g2), u)) / n


def subsampled_leakage_score(m: float, rho: float) -> float:
    """Effective leakage score under Poisson-style subsampling at rate rho,
    which is rho * m: fewer rows hide the target less often but each kept
    row weighs more, and the two effects net out to a linear discount."""
    if m < 0:
        raise ValueError(f"leakage score must be >= 0, got {m}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"subsampling rate must lie in (0, 1], got {rho}")
    return rho * m


def misspec_advantage(m_scal: float, m_targ: float) -> float:
    """Advantage of an attacker that thresholds the score built for a guessed
    target while the true inserted record is z_star.

    With m_scal the cross leakage between guess and truth, and m_targ the
    leakage score of the guess, the value is
    Phi(|m_scal| / (2 sqrt(m_targ))) - Phi(-|m_scal| / (2 sqrt(m_targ))).
    A guess with m_targ = 0 yields a constant score, so the advantage is 0
    by convention.
    """
    if m_targ < 0:
        raise ValueError(f"m_targ must be >= 0, got {m_targ}")
    if m_targ == 0.0:
        return 0.0
    return float(_two_sided(abs(m_scal) / (2.0 * np.sqrt(m_targ))))


def cross_leakage(dist, z_targ, z_star, n: int) -> float:
    """Precision-weighted inner product (1/n) * sum_j (z_targ_j - mu_j)(z_star_j - mu_j) / sigma_j^2.

    Symmetric in its two targets; equals the leakage score when they
    coincide and 0 when either equals the distribution mean.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mu, sigma2 = dist.moments()
    a = as_vector(z_targ, dist.d, "z_targ") - mu
    b = as_vector(z_star, dist.d, "z_star") - mu
    return float(np.dot(a / sigma2, b)) / n


def gdp_delta(m: float, epsilon: float) -> float:
    """delta(epsilon) profile of the sqrt(m)-Gaussian-DP guarantee implied by
    leakage score m:

        Phi(-eps/sqrt(m) + sqrt(m)/2) - e^eps * Phi(-eps/sqrt(m) - sqrt(m)/2)

    The product term is evaluated as exp(eps + log Phi(...)) so that large
    epsilon underflows cleanly to 0 instead of producing inf * 0. The result
    is clamped to [0, 1].
    """
    if m <= 0:
        raise ValueError(f"leakage score must be > 0, got {m}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    root = np.sqrt(m)
    a = ndtr(-epsilon / root + root / 2.0)
    b = np.exp(epsilon + log_ndtr(-epsilon / root - root / 2.0))
    return float(np.clip(a - b, 0.0, 1.0))


def tv_gaussians(mu0: float, mu1: float, sigma: float) -> float:
    """Total variation distance between two normal laws with a shared
    standard deviation, Phi(|mu0 - mu1| / (2 sigma)) - Phi(-|mu0 - mu1| / (2 sigma))."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return float(_two_sided(abs(mu1 - mu0) / (2.0 * sigma)))


def effective_leakage(dist, z, n: int, mech=None) -> float:
    """Leakage score adjusted for the release mechanism: the plain score for
    an exact mean, the noise-deflated score for a noisy mean, and the
    rho-discounted score for a subsampled mean."""
    from .mech import EmpiricalMean, NoisyMean, SubsampledMean

    m = dist.leakage_score(z, n)
    if mech is None or isinstance(mech, EmpiricalMean):
        return m
    if isinstance(mech, NoisyMean):
        return noisy_leakage_score(dist, z, mech.gamma, n)
    if isinstance(mech, SubsampledMean):
        return subsampled_leakage_score(m, mech.rho)
    raise TypeError(f"unsupported mechanism: {mech!r}")


@dataclasses.dataclass(frozen=True)
class TradeoffCurve:
    """The asymptotic trade-off curve alpha -> power for one effective
    leakage score, tabulated on a fixed alpha grid.

    The grid always spans [0, 1] inclusive so the boundary identities
    power(0) = 0 and power(1) = 1 are part of the stored data. Construction
    validates monotonicity and that the curve dominates blind guessing.
    """

    m_eff: float
    alphas: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        if self.m_eff < 0:
            raise ValueError(f"m_eff must be >= 0, got {self.m_eff}")
        a = np.asarray(self.alphas, dtype=np.float64)
        p = np.asarray(self.powers, dtype=np.float64)
        if a.shape != p.shape or a.ndim != 1 or a.size < 2:
            raise ValueError("alphas and powers must be 1-D arrays of equal length >= 2")
        if a[0] != 0.0 or a[-1] != 1.0 or np.any(np.diff(a) <= 0):
            raise ValueError("alpha grid must increase strictly from 0 to 1")
        if abs(p[0]) > 1e-12 or abs(p[-1] - 1.0) > 1e-12:
            raise ValueError("power must be 0 at alpha=0 and 1 at alpha=1")
        if np.any(np.diff(p) < -1e-12):
            raise ValueError("power must be non-decreasing in alpha")
        if np.any(p < a - 1e-12):
            raise ValueError("power may not fall below alpha")
        a = a.copy()
        p = p.copy()
        a.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "powers", p)

    @classmethod
    def from_leakage(cls, m_eff: float, num: int = 512) -> "TradeoffCurve":
        """Tabulate the closed-form curve for one leakage score on a uniform
        grid of ``num`` points."""
        if num < 2:
            raise ValueError("grid needs at least 2 points")
        alphas = np.linspace(0.0, 1.0, num)
        return cls(m_eff=float(m_eff), alphas=alphas, powers=theoretical_power(m_eff, alphas))

    @property
    def samples(self) -> list[tuple[float, float]]:
        return [(float(a), float(p)) for a, p in zip(self.alphas, self.powers)]

    def power(self, alpha):
        """Evaluate the closed form at arbitrary alpha (scalar or array)."""
        return theoretical_power(self.m_eff, alpha)


# -- distance between an empirical ROC polyline and the theory curve ----------


def _coerce_points(points) -> np.ndarray:
    if hasattr(points, "points"):
        points = points.points
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError(f"expected an (N, 2) array of (fpr, tpr) points, got shape {pts.shape}")
    return pts


def _densify(poly: np.ndarray, step: float) -> np.ndarray:
    """Insert vertices along each segment so consecutive points are within
    ``step`` of each other in the Chebyshev norm."""
    pieces = [poly[:1]]
    for a, b in zip(poly[:-1], poly[1:]):
        gap = float(np.max(np.abs(b - a)))
        k = max(1, int(np.ceil(gap / step)))
        ts = np.linspace(0.0, 1.0, k + 1)[1:]
        pieces.append(a + ts[:, None] * (b - a))
    return np.vstack(pieces)


def _theory_polyline(m_eff: float, num: int = 4001) -> np.ndarray:
    # Parameterize by u = Phi^-1(alpha) so vertices concentrate where the
    # curve actually bends; endpoints pin the corners exactly.
    u = np.linspace(-8.5, 8.5, num)
    alphas = ndtr(u)
    powers = ndtr(u + np.sqrt(m_eff))
    pts = np.column_stack([alphas, powers])
    return np.vstack([[0.0, 0.0], pts, [1.0, 1.0]])


def polyline_gap(a, b, step: float = 5e-4) -> float:
    """Hausdorff distance under the Chebyshev ground metric between two
    polylines, each densified to ``step`` resolution. Identical polylines
    yield 0; the value bounds how far either curve strays from the other in
    any direction."""
    pa = _densify(_coerce_points(a), step)
    pb = _densify(_coerce_points(b), step)
    d_ab = cKDTree(pb).query(pa, p=np.inf)[0].max()
    d_ba = cKDTree(pa).query(pb, p=np.inf)[0].max()
    return float(max(d_ab, d_ba))


def sup_norm_gap(points, m_eff: float, step: float = 5e-4) -> float:
    """Gap between an empirical ROC polyline and the closed-form trade-off
    curve for m_eff, measured as a Hausdorff distance in the unit square.

    Treating both curves as point sets is the right yardstick for a
    staircase estimate: a vertical reading at small alpha is dominated by
    the resolution limit of a finite game, while the curves themselves can
    still be uniformly close.
    """
    if m_eff < 0:
        raise ValueError(f"m_eff must be >= 0, got {m_eff}")
    return polyline_gap(points, _theory_polyline(m_eff), step)


def vertical_gap(points, m_eff: float, alpha_min: float = 0.0) -> float:
    """Largest vertical distance |TPR_emp(alpha) - power(alpha)| over
    alpha >= alpha_min.

    The empirical curve is read as the staircase upper envelope (the largest
    tpr whose fpr does not exceed alpha). Readings below the resolution
    floor of the sample are excluded by alpha_min; at alpha smaller than one
    over the class count the staircase has no information and the vertical
    gap is an artifact, which is why sup_norm_gap is the headline metric.
    """
    pts = _coerce_points(points)
    fpr, tpr = pts[:, 0], pts[:, 1]
    alphas = np.unique(np.concatenate([fpr[fpr >= alpha_min], np.linspace(alpha_min, 1.0, 513)]))
    idx = np.searchsorted(fpr, alphas, side="right") - 1
    idx = np.clip(idx, 0, len(fpr) - 1)
    # at duplicate fpr values take the top of the vertical run
    env = np.maximum.accumulate(tpr)[idx]
    return float(np.max(np.abs(env - theoretical_power(m_eff, alphas))))
