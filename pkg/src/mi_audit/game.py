"""Membership-inference games: crafting, scoring, and ROC estimation.

A game round works in two phases. The crafter builds a dataset, flips the
membership coin, optionally plants the target, and releases the mechanism
output. The adversary then reduces that output to a scalar score. Keeping
the phases separate pays off in audits: one crafted transcript (the
expensive part) can be re-scored by many attacks, and composing the phases
is exactly what :func:`run_fixed_game` does.

Reproducibility contract: round t of a game with master seed s draws all of
its randomness from a counter-based stream keyed by (s, t). Rounds are
therefore independent of execution order and thread count, and a fixed seed
yields bit-identical transcripts everywhere.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._util import ConfigError, NumericalError, as_vector
from .dist import ProductDistribution, target_from_spec
from .mech import mechanism_from_spec
from .score import SCORE_NAMES, make_score

__all__ = [
    "ScoredRound",
    "RocCurve",
    "GameConfig",
    "CrafterTranscript",
    "round_stream",
    "craft",
    "run_crafter",
    "score_transcript",
    "run_fixed_game",
    "run_average_game",
    "roc",
    "empirical_advantage",
]


@dataclasses.dataclass(frozen=True)
class ScoredRound:
    """One game round reduced to the adversary's score and the true bit."""

    score: float
    b: int

    def __post_init__(self):
        if self.b not in (0, 1):
            raise ValueError(f"membership bit must be 0 or 1, got {self.b}")


@dataclasses.dataclass(frozen=True)
class RocCurve:
    """Empirical ROC staircase with trapezoidal AUC.

    Points run from (0, 0) to (1, 1) with both coordinates non-decreasing;
    equal scores collapse into a single threshold step.
    """

    points: np.ndarray
    auc: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError(f"points must be an (N, 2) array with N >= 2, got {pts.shape}")
        if tuple(pts[0]) != (0.0, 0.0) or tuple(pts[-1]) != (1.0, 1.0):
            raise ValueError("ROC must start at (0, 0) and end at (1, 1)")
        if np.any(np.diff(pts[:, 0]) < 0) or np.any(np.diff(pts[:, 1]) < 0):
            raise ValueError("ROC coordinates must be non-decreasing")
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc must lie in [0, 1], got {self.auc}")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def best_advantage(self) -> float:
        """In-sample advantage of the best threshold, allowed to flip the
        guess direction: max over curve vertices of |tpr - fpr|."""
        return float(np.max(np.abs(self.points[:, 1] - self.points[:, 0])))


@dataclasses.dataclass
class GameConfig:
    """Everything needed to run a fixed-target game.

    ``score_kwargs`` carries score-specific side information (refs, z_targ,
    z_ref, gamma, rho) and is handed to :func:`mi_audit.score.make_score`.
    """

    dist: ProductDistribution
    mech: object
    n: int
    z: object
    score_name: str
    rounds: int = 1000
    master_seed: int = 0
    threads: int | None = None
    score_kwargs: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.score_name not in SCORE_NAMES:
            raise ConfigError(
                f"unknown score {self.score_name!r}; expected one of {', '.join(SCORE_NAMES)}"
            )

    @classmethod
    def from_dict(cls, obj: dict) -> "GameConfig":
        """Parse the JSON config shape used by the command line.

        Expected keys: dist, mechanism, n, target, score; optional: rounds,
        master_seed, threads, score_info. Target specs accept explicit
        values, a named extreme, or a seeded draw from the distribution;
        score_info may request reference estimates drawn from the
        distribution itself via {"refs": {"n0": ..., "cov_mode": ...,
        "seed": ...}}.
        """
        try:
            dist = ProductDistribution.from_spec(obj["dist"])
            mech = mechanism_from_spec(obj["mechanism"])
            n = int(obj["n"])
            z = target_from_spec(obj["target"], dist)
            score_name = str(obj["score"])
        except KeyError as e:
            raise ConfigError(f"game config missing key {e}") from e
        info = dict(obj.get("score_info", {}))
        kwargs = {}
        for key in ("z_targ", "z_ref"):
            if key in info:
                kwargs[key] = target_from_spec(info.pop(key), dist)
        if "gamma" in info:
            kwargs["gamma"] = info.pop("gamma")
        if "rho" in info:
            kwargs["rho"] = float(info.pop("rho"))
        if "refs" in info:
            from .canary import estimate_reference

            spec = dict(info.pop("refs"))
            try:
                n0 = int(spec.pop("seed_n0")) if "seed_n0" in spec else int(spec.pop("n0"))
                seed = int(spec.pop("seed"))
            except KeyError as e:
                raise ConfigError(f"refs spec missing key {e}") from e
            sample = dist.sample_dataset(n0, np.random.default_rng(seed))
            kwargs["refs"] = estimate_reference(sample, **spec)
        if info:
            raise ConfigError(f"unknown score_info keys: {sorted(info)}")
        return cls(
            dist=dist,
            mech=mech,
            n=n,
            z=z,
            score_name=score_name,
            rounds=int(obj.get("rounds", 1000)),
            master_seed=int(obj.get("master_seed", 0)),
            threads=obj.get("threads"),
            score_kwargs=kwargs,
        )


@dataclasses.dataclass(frozen=True)
class CrafterTranscript:
    """Released outputs and true bits for a batch of crafted rounds."""

    outputs: np.ndarray
    bits: np.ndarray

    def __post_init__(self):
        if self.outputs.ndim != 2 or self.bits.shape != (self.outputs.shape[0],):
            raise ValueError("outputs must be (T, d) with bits of length T")

    @property
    def rounds(self) -> int:
        return int(self.bits.shape[0])


def round_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for one round, keyed by (master_seed, index).

    Counter-based keying makes streams splittable: any round can be
    regenerated in isolation, and parallel execution cannot change what a
    round draws.
    """
    if master_seed < 0 or index < 0:
        raise ValueError("master_seed and index must be non-negative")
    key = np.array([master_seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def craft(dist: ProductDistribution, mech, n: int, z, rng: np.random.Generator):
    """One crafter round: returns the released vector and the true bit.

    Draws the dataset first and the membership coin second; when the coin
    lands 1, a uniformly chosen row is replaced by the target before the
    mechanism runs. If the target is not exactly representable in the
    dataset's storage dtype, the dataset is upcast to float64 before the
    replacement so no coordinate is silently truncated.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    zv = as_vector(z, dist.d, "z")
    D = dist.sample_dataset(n, rng)
    b = int(rng.integers(0, 2))
    if b == 1:
        j = int(rng.integers(0, n))
        cast = zv.astype(D.dtype)
        if np.array_equal(cast.astype(np.float64), zv):
            D[j] = cast
        else:
            D = D.astype(np.float64)
            D[j] = zv
    return mech.apply(D, rng), b


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    return int(threads)


def run_crafter(
    dist: ProductDistribution,
    mech,
    n: int,
    z,
    rounds: int,
    master_seed: int,
    threads: int | None = None,
) -> CrafterTranscript:
    """Craft ``rounds`` independent rounds and collect the released outputs.

    The transcript is the expensive half of a game; scoring it afterwards is
    cheap, so audits that compare several attacks on the same mechanism
    should craft once and re-score.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    zv = as_vector(z, dist.d, "z")
    outputs = np.empty((rounds, dist.d), dtype=np.float64)
    bits = np.empty(rounds, dtype=np.uint8)

    def one(t: int) -> None:
        o, b = craft(dist, mech, n, zv, round_stream(master_seed, t))
        outputs[t] = o
        bits[t] = b

    workers = _resolve_threads(threads)
    if workers == 1 or rounds == 1:
        for t in range(rounds):
            one(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            # consume the iterator so worker exceptions surface here
            list(ex.map(one, range(rounds)))
    bits.flags.writeable = False
    outputs.flags.writeable = False
    return CrafterTranscript(outputs=outputs, bits=bits)


def score_transcript(transcript: CrafterTranscript, score_fn, z) -> list[ScoredRound]:
    """Apply one score function to every round of a crafted transcript.

    Score failures are re-raised with the round index attached; a NaN score
    is rejected outright since it would poison every threshold comparison
    downstream.
    """
    out = []
    for t in range(transcript.rounds):
        try:
            s = float(score_fn(transcript.outputs[t], z))
        except Exception as e:
            e.args = (f"round {t}: {e}",)
            raise
        if np.isnan(s):
            raise NumericalError(f"round {t}: score is NaN")
        out.append(ScoredRound(score=s, b=int(transcript.bits[t])))
    return out


def run_fixed_game(cfg: GameConfig) -> list[ScoredRound]:
    """Run a full fixed-target game: craft a transcript under cfg's seed and
    score it with the configured attack."""
    score_fn = make_score(
        cfg.score_name, dist=cfg.dist, n=cfg.n, mech=cfg.mech, **cfg.score_kwargs
    )
    transcript = run_crafter(
        cfg.dist, cfg.mech, cfg.n, cfg.z, cfg.rounds, cfg.master_seed, cfg.threads
    )
    return score_transcript(transcript, score_fn, cfg.z)


def run_average_game(
    dist: ProductDistribution,
    mech,
    n: int,
    score,
    T: int,
    seed: int,
    threads: int | None = None,
) -> list[ScoredRound]:
    """Game variant where the target itself is random each round.

    The coin is drawn first; on heads the round's target is a uniformly
    chosen row of the freshly drawn dataset, on tails it is an independent
    draw from the distribution. The score is evaluated against that round's
    own target, so averaging over rounds averages the fixed-target game over
    targets drawn from the distribution.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    results: list = [None] * T

    def one(t: int) -> None:
        rng = round_stream(seed, t)
        b = int(rng.integers(0, 2))
        D = dist.sample_dataset(n, rng)
        if b == 1:
            j = int(rng.integers(0, n))
            z = D[j].astype(np.float64)
        else:
            z = dist.sample_dataset(1, rng)[0].astype(np.float64)
        o = mech.apply(D, rng)
        try:
            s = float(score(o, z))
        except Exception as e:
            e.args = (f"round {t}: {e}",)
            raise
        if np.isnan(s):
            raise NumericalError(f"round {t}: score is NaN")
        results[t] = ScoredRound(score=s, b=b)

    workers = _resolve_threads(threads)
    if workers == 1 or T == 1:
        for t in range(T):
            one(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(one, range(T)))
    return results


def _arrays(rounds) -> tuple[np.ndarray, np.ndarray]:
    if len(rounds) == 0:
        raise ValueError("no rounds")
    s = np.array([r.score for r in rounds], dtype=np.float64)
    y = np.array([r.b for r in rounds], dtype=np.float64)
    if np.any(np.isnan(s)):
        raise ValueError("scores contain NaN")
    return s, y


def roc(rounds) -> RocCurve:
    """Empirical ROC curve of scored rounds.

    Thresholds sweep the distinct score values from high to low; tied scores
    form one step, and infinite sentinel scores cluster at the extreme ends
    of the sweep exactly as an always/never-fire threshold would.

    Raises:
      ValueError: if either class is missing.
    """
    s, y = _arrays(rounds)
    n1 = float(y.sum())
    n0 = float(len(y) - n1)
    if n0 == 0 or n1 == 0:
        raise ValueError("ROC needs at least one round of each class")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tps = np.cumsum(y_sorted)
    fps = np.cumsum(1.0 - y_sorted)
    # keep only the last index of each tie group (inf != inf is False, so
    # infinite sentinels group correctly)
    last = np.r_[np.nonzero(s_sorted[1:] != s_sorted[:-1])[0], len(s_sorted) - 1]
    fpr = fps[last] / n0
    tpr = tps[last] / n1
    points = np.vstack([[0.0, 0.0], np.column_stack([fpr, tpr])])
    auc = float(np.trapezoid(points[:, 1], points[:, 0]))
    return RocCurve(points=points, auc=auc)


def empirical_advantage(rounds, threshold: float) -> float:
    """Centered accuracy of the threshold test: 2 * mean(1{(score > t) == b}) - 1."""
    s, y = _arrays(rounds)
    guesses = (s > threshold).astype(np.float64)
    return float(2.0 * np.mean(guesses == y) - 1.0)
