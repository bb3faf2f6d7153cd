"""Desk-scale white-box training audit: toy models, an SGD loop that exposes
every iterate, and the per-step gradient attacks.

The reduction at work: an observer of consecutive iterates theta_t and
theta_{t+1} recovers the applied batch gradient, which is an empirical mean
of per-example gradients. Membership of a target example in the batch then
becomes a mean-inclusion question, and the same covariance and scalar
scores used against released means apply step by step, summed over an
epoch.

Models here are deliberately tiny and carry analytic gradients so the whole
harness stays dependency-free and every gradient is checkable against
finite differences.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import logsumexp

from ._util import ConfigError, as_vector
from .game import ScoredRound, round_stream
from .score import ReferenceEstimates

__all__ = [
    "ToyModel",
    "TrainTrace",
    "train_sgd",
    "reference_gradients",
    "run_whitebox_attack",
    "run_whitebox_game",
    "make_blobs",
]


@dataclasses.dataclass
class ToyModel:
    """Linear regression or multiclass logistic regression with analytic
    gradients.

    Parameter layout: linear regression stores [w (f), bias (1)] for
    d_p = f + 1; logistic regression stores [W flattened row-major (c, f),
    biases (c)] for d_p = f * c + c. ``theta`` defaults to zeros.
    """

    arch: str
    f: int
    c: int = 1
    theta: np.ndarray | None = None

    def __post_init__(self):
        if self.arch not in ("linear", "logistic"):
            raise ValueError(f"arch must be 'linear' or 'logistic', got {self.arch!r}")
        if self.f < 1:
            raise ValueError("feature dimension f must be >= 1")
        if self.arch == "logistic" and self.c < 2:
            raise ValueError("logistic regression needs c >= 2 classes")
        if self.arch == "linear":
            self.c = 1
        if self.theta is None:
            self.theta = np.zeros(self.d_p)
        else:
            self.theta = as_vector(self.theta, self.d_p, "theta")

    @property
    def d_p(self) -> int:
        if self.arch == "linear":
            return self.f + 1
        return self.f * self.c + self.c

    def _split(self, theta: np.ndarray):
        if self.arch == "linear":
            return theta[: self.f], theta[self.f]
        W = theta[: self.f * self.c].reshape(self.c, self.f)
        return W, theta[self.f * self.c :]

    def _delta(self, X: np.ndarray, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Per-example error signal: residual (m, 1) for linear, softmax
        minus one-hot (m, c) for logistic. The per-example gradient is
        always the outer product of this signal with [x, 1]."""
        if self.arch == "linear":
            W, bias = self._split(theta)
            return (X @ W + bias - y)[:, None]
        W, bias = self._split(theta)
        logits = X @ W.T + bias
        p = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
        delta = p
        delta[np.arange(len(y)), y] -= 1.0
        return delta

    def _check_labels(self, y: np.ndarray) -> np.ndarray:
        if self.arch == "linear":
            return np.asarray(y, dtype=np.float64)
        labels = np.asarray(y)
        if labels.dtype.kind not in "iu" or np.any(labels < 0) or np.any(labels >= self.c):
            raise ValueError(f"labels must be integers in [0, {self.c})")
        return labels

    def loss(self, X, y, theta=None) -> float:
        """Mean loss over a batch: half squared error or cross-entropy."""
        theta = self.theta if theta is None else as_vector(theta, self.d_p, "theta")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = self._check_labels(np.atleast_1d(y))
        if self.arch == "linear":
            W, bias = self._split(theta)
            return float(0.5 * np.mean(np.square(X @ W + bias - y)))
        W, bias = self._split(theta)
        logits = X @ W.T + bias
        return float(np.mean(logsumexp(logits, axis=1) - logits[np.arange(len(y)), y]))

    def grad_batch(self, X, y, theta=None) -> np.ndarray:
        """Per-example gradients, one row per example, shape (m, d_p)."""
        theta = self.theta if theta is None else as_vector(theta, self.d_p, "theta")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = self._check_labels(np.atleast_1d(y))
        delta = self._delta(X, y, theta)
        # g_i = delta_i (outer) [x_i, 1]
        weight_part = (delta[:, :, None] * X[:, None, :]).reshape(len(X), -1)
        return np.hstack([weight_part, delta])

    def grad(self, x, y, theta=None) -> np.ndarray:
        """Analytic loss gradient for a single (features, label) example."""
        return self.grad_batch(np.atleast_2d(x), np.atleast_1d(y), theta)[0]


@dataclasses.dataclass(frozen=True)
class TrainTrace:
    """Every iterate of one training run, plus what the attacker needs to
    interpret the differences between consecutive iterates."""

    model: ToyModel
    thetas: np.ndarray
    eta: float
    batch_size: int
    batch_schedule: np.ndarray

    def __post_init__(self):
        if self.thetas.ndim != 2 or self.thetas.shape[0] != self.batch_schedule.shape[0] + 1:
            raise ValueError("need one more iterate than steps")
        if self.batch_schedule.ndim != 2 or self.batch_schedule.shape[1] != self.batch_size:
            raise ValueError("batch_schedule must be (steps, batch_size)")
        if np.any(self.batch_schedule < 0):
            raise ValueError("batch indices must be non-negative")

    @property
    def steps(self) -> int:
        return int(self.batch_schedule.shape[0])


def train_sgd(
    model: ToyModel,
    data,
    eta: float,
    batch_size: int,
    epochs: int,
    clip: float | None = None,
    noise: float | None = None,
    seed=0,
) -> TrainTrace:
    """Mini-batch SGD from model.theta, recording every iterate.

    Each epoch shuffles the rows and walks them in batches of exactly
    ``batch_size`` (a short remainder batch is dropped). With ``clip`` set,
    per-example gradients are rescaled to norm at most clip before
    averaging; with ``noise`` also set, centered Gaussian noise of standard
    deviation noise * clip per coordinate is added to the averaged clipped
    gradient, the usual private-SGD update. Noise without clipping has no
    calibrated scale and is rejected.

    ``seed`` may be an int or a Generator; the model instance is not
    mutated.
    """
    X, y = data
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"features must be an (n, f) matrix, got shape {X.shape}")
    n = X.shape[0]
    if not 1 <= batch_size <= n:
        raise ValueError(f"batch_size must lie in [1, {n}], got {batch_size}")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if eta < 0:
        raise ValueError("eta must be >= 0")
    if clip is not None and clip <= 0:
        raise ValueError("clip must be > 0")
    if noise:
        if noise < 0:
            raise ValueError("noise must be >= 0")
        if clip is None:
            raise ValueError("noise requires a clipping threshold to calibrate against")

    rng = np.random.default_rng(seed)
    steps_per_epoch = n // batch_size
    theta = model.theta.copy()
    thetas = [theta.copy()]
    schedule = []
    for _ in range(epochs):
        perm = rng.permutation(n)
        for s in range(steps_per_epoch):
            batch = perm[s * batch_size : (s + 1) * batch_size]
            grads = model.grad_batch(X[batch], y[batch], theta)
            if clip is not None and np.isfinite(clip):
                norms = np.linalg.norm(grads, axis=1)
                factors = np.minimum(1.0, clip / np.maximum(norms, 1e-300))
                grads = grads * factors[:, None]
            g = grads.mean(axis=0)
            if noise:
                g = g + rng.standard_normal(model.d_p) * (noise * clip)
            theta = theta - eta * g
            thetas.append(theta.copy())
            schedule.append(batch)
    return TrainTrace(
        model=ToyModel(model.arch, model.f, model.c, model.theta.copy()),
        thetas=np.array(thetas),
        eta=float(eta),
        batch_size=int(batch_size),
        batch_schedule=np.array(schedule, dtype=np.intp).reshape(len(schedule), batch_size),
    )


def reference_gradients(model: ToyModel, X, y, theta=None) -> np.ndarray:
    """Per-example gradients of a reference set at one iterate (default the
    model's own theta), ready for estimate_reference."""
    return model.grad_batch(X, y, theta)


def _check_slice(param_slice, d_p: int) -> slice:
    if param_slice is None:
        return slice(0, d_p)
    if isinstance(param_slice, tuple):
        param_slice = slice(*param_slice)
    start, stop, step = param_slice.indices(d_p)
    if step != 1 or start >= stop:
        raise ValueError(f"parameter slice must be a non-empty forward range, got {param_slice}")
    if param_slice.stop is not None and param_slice.stop > d_p:
        raise ValueError(f"parameter slice {param_slice} exceeds d_p={d_p}")
    return slice(start, stop)


def run_whitebox_attack(
    trace: TrainTrace,
    target_example,
    refs: ReferenceEstimates,
    attack: str,
    param_slice=None,
) -> float:
    """Sum of per-step attack scores over a recorded training run.

    At each step the applied batch gradient is reconstructed from the
    iterate difference (zero by convention when eta is 0, where the quotient
    is 0/0), and the target's own gradient is taken at the pre-step iterate.
    The covariance attack scores

        (g_target - mu0)^T C0^-1 (g_batch - mu0)
            - (1 / (2 batch_size)) ||g_target - mu0||^2_{C0^-1}

    and the scalar attack scores the plain inner product
    g_target . g_batch. ``param_slice`` restricts both gradients to a
    contiguous parameter range (the last-layer trick); refs must match the
    sliced dimension.
    """
    if attack not in ("covariance", "scalar"):
        raise ConfigError(f"attack must be 'covariance' or 'scalar', got {attack!r}")
    x, y = target_example
    model = trace.model
    sl = _check_slice(param_slice, model.d_p)
    if refs.d != sl.stop - sl.start:
        raise ValueError(
            f"reference estimates have dimension {refs.d} but the attacked slice has "
            f"{sl.stop - sl.start}"
        )
    if trace.eta == 0.0:
        g_batches = np.zeros((trace.steps, model.d_p))
    else:
        g_batches = (trace.thetas[:-1] - trace.thetas[1:]) / trace.eta
    total = 0.0
    for t in range(trace.steps):
        g_star = model.grad(x, y, theta=trace.thetas[t])[sl]
        g_batch = g_batches[t][sl]
        if attack == "scalar":
            total += float(np.dot(g_star, g_batch))
        else:
            u = g_star - refs.mu0
            v = g_batch - refs.mu0
            total += refs.precision_bilinear(u, v) - refs.precision_quad(u) / (
                2.0 * trace.batch_size
            )
    return total


def run_whitebox_game(
    model: ToyModel,
    X,
    y,
    target_example,
    *,
    eta: float,
    batch_size: int,
    refs: ReferenceEstimates,
    attack: str,
    reps: int,
    master_seed: int,
    epochs: int = 1,
    clip: float | None = None,
    noise: float | None = None,
    param_slice=None,
    threads: int | None = None,
) -> list[ScoredRound]:
    """Repeated include/exclude training game against one target example.

    Each repetition draws its own stream from (master_seed, rep): flip the
    membership coin, on heads overwrite a uniformly chosen training row with
    the target, train from the model's initial parameters, then score the
    trace with the chosen attack. The base rows (X, y) must not already
    contain the target, otherwise the exclude branch is meaningless.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    x_t, y_t = target_example
    x_t = as_vector(x_t, X.shape[1], "target features")
    dupes = np.nonzero(np.all(X == x_t, axis=1) & (y == y_t))[0]
    if dupes.size:
        raise ValueError(
            f"base rows already contain the target (row {dupes[0]}); "
            "the exclude branch would train on it anyway"
        )
    results: list = [None] * reps

    def one(r: int) -> None:
        rng = round_stream(master_seed, r)
        b = int(rng.integers(0, 2))
        if b == 1:
            j = int(rng.integers(0, X.shape[0]))
            X_r = X.copy()
            y_r = y.copy()
            X_r[j] = x_t
            y_r[j] = y_t
        else:
            X_r, y_r = X, y
        trace = train_sgd(model, (X_r, y_r), eta, batch_size, epochs, clip, noise, seed=rng)
        s = run_whitebox_attack(trace, (x_t, y_t), refs, attack, param_slice)
        results[r] = ScoredRound(score=float(s), b=b)

    if threads is None or threads <= 1 or reps == 1:
        for r in range(reps):
            one(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(one, range(reps)))
    return results


def make_blobs(n: int, f: int, c: int, *, center_scale: float = 2.0, spread: float = 1.0, seed=0):
    """Gaussian class blobs: c class centers drawn once, then n labeled
    points scattered around their centers. Returns (X, y) with integer
    labels in [0, c)."""
    if n < 1 or f < 1 or c < 1:
        raise ValueError("n, f, c must all be >= 1")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((c, f)) * center_scale
    y = rng.integers(0, c, size=n)
    X = centers[y] + rng.standard_normal((n, f)) * spread
    return X, y
