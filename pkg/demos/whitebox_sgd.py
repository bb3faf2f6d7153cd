"""Gradient-space membership attacks on a small SGD training run.

Trains a toy logistic model with and without one target example and
scores the parameter trace with two attacks: a scalar product against
the target's gradient, and a covariance-whitened test. The target is
chosen by the same Mahalanobis ranking used for canaries, here applied
to per-example gradients, and the choice matters as much as the attack.
"""

import numpy as np

from mi_audit import (
    ToyModel,
    estimate_reference,
    mahalanobis_score_est,
    make_blobs,
    reference_gradients,
    roc,
    run_whitebox_game,
)

N_POOL = 257
F = 8

X, y = make_blobs(N_POOL, F, 2, center_scale=2.0, spread=1.0, seed=30)
theta0 = np.random.default_rng(31).standard_normal((F + 1) * 2) * 0.5
model = ToyModel("logistic", f=F, c=2, theta=theta0)

# rank every pool example by how unusual its gradient is at theta0
grads = reference_gradients(model, X, y)
pool_refs = estimate_reference(grads, cov_mode="full")
maha = np.array([mahalanobis_score_est(g, pool_refs) for g in grads])
top, bottom = int(np.argmax(maha)), int(np.argmin(maha))
print(f"gradient Mahalanobis scores across {N_POOL} pool examples:")
print(f"  most unusual   example {top:3d}, score {maha[top]:8.2f}")
print(f"  most ordinary  example {bottom:3d}, score {maha[bottom]:8.2f}")

print()
print("include/exclude games, 150 repetitions each:")
print(f"{'target':<10} {'covariance AUC':>15} {'scalar AUC':>11}")
results = {}
for label, t in (("unusual", top), ("ordinary", bottom)):
    keep = np.arange(N_POOL) != t
    refs = estimate_reference(grads[keep], cov_mode="full")
    for attack in ("covariance", "scalar"):
        game = run_whitebox_game(
            model, X[keep], y[keep], (X[t], y[t]),
            eta=0.02, batch_size=32, refs=refs, attack=attack,
            reps=150, master_seed=32,
        )
        results[label, attack] = roc(game).auc
    print(
        f"{label:<10} {results[label, 'covariance']:15.3f} "
        f"{results[label, 'scalar']:11.3f}"
    )

# -- clipping and noise as a countermeasure -----------------------------------

print()
print("same unusual target, now trained with gradient clipping and noise:")
keep = np.arange(N_POOL) != top
refs = estimate_reference(grads[keep], cov_mode="full")
for clip, noise in ((1.0, 0.0), (1.0, 0.005), (1.0, 0.02), (1.0, 0.1)):
    game = run_whitebox_game(
        model, X[keep], y[keep], (X[top], y[top]),
        eta=0.02, batch_size=32, refs=refs, attack="covariance",
        reps=150, master_seed=33, clip=clip, noise=noise,
    )
    print(f"  clip = {clip}, noise = {noise:5.3f}:  AUC = {roc(game).auc:.3f}")
