"""White-box training audit: toy models, SGD traces, per-step attacks."""

import numpy as np
import pytest

import oracles
from mi_audit import (
    ConfigError,
    ToyModel,
    estimate_reference,
    make_blobs,
    reference_gradients,
    roc,
    run_whitebox_attack,
    run_whitebox_game,
    train_sgd,
)


@pytest.fixture
def linear_model():
    rng = np.random.default_rng(71)
    return ToyModel("linear", f=4, theta=rng.normal(size=5))


@pytest.fixture
def logistic_model():
    rng = np.random.default_rng(72)
    return ToyModel("logistic", f=3, c=4, theta=rng.normal(size=16))


class TestToyModel:
    def test_parameter_counts(self):
        assert ToyModel("linear", f=7).d_p == 8
        assert ToyModel("logistic", f=3, c=5).d_p == 20

    def test_linear_loss_matches_reference(self, linear_model):
        rng = np.random.default_rng(73)
        x = rng.normal(size=4)
        y = 1.7
        want = oracles.half_mse_ref(linear_model.theta, x, y, f=4)
        assert linear_model.loss(x, y) == pytest.approx(want, rel=1e-12)

    def test_logistic_loss_matches_reference(self, logistic_model):
        rng = np.random.default_rng(74)
        x = rng.normal(size=3)
        want = oracles.softmax_xent_ref(logistic_model.theta, x, 2, f=3, c=4)
        assert logistic_model.loss(x, 2) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("arch", ["linear", "logistic"])
    def test_gradient_matches_finite_differences(self, arch, linear_model, logistic_model):
        model = linear_model if arch == "linear" else logistic_model
        rng = np.random.default_rng(75)
        x = rng.normal(size=model.f)
        y = 0.9 if arch == "linear" else 1
        want = oracles.finite_diff_grad(lambda th: model.loss(x, y, th), model.theta)
        got = model.grad(x, y)
        assert np.max(np.abs(got - want)) <= 1e-5

    def test_batch_gradient_rows_are_per_example(self, logistic_model):
        rng = np.random.default_rng(76)
        X = rng.normal(size=(6, 3))
        y = rng.integers(0, 4, size=6)
        G = logistic_model.grad_batch(X, y)
        assert G.shape == (6, 16)
        for i in range(6):
            assert np.allclose(G[i], logistic_model.grad(X[i], y[i]), atol=1e-14)

    def test_batch_gradient_mean_differentiates_batch_loss(self, linear_model):
        rng = np.random.default_rng(77)
        X = rng.normal(size=(5, 4))
        y = rng.normal(size=5)
        want = oracles.finite_diff_grad(lambda th: linear_model.loss(X, y, th), linear_model.theta)
        got = linear_model.grad_batch(X, y).mean(axis=0)
        assert np.max(np.abs(got - want)) <= 1e-5

    def test_label_validation(self, logistic_model):
        x = np.zeros(3)
        with pytest.raises(ValueError):
            logistic_model.loss(x, 4)
        with pytest.raises(ValueError):
            logistic_model.loss(x, -1)
        with pytest.raises(ValueError):
            logistic_model.loss(x, 1.5)

    def test_construction_validation(self):
        with pytest.raises(ValueError):
            ToyModel("tree", f=3)
        with pytest.raises(ValueError):
            ToyModel("logistic", f=3, c=1)
        with pytest.raises(ValueError):
            ToyModel("linear", f=3, theta=np.zeros(7))
        assert ToyModel("linear", f=3, c=9).c == 1  # class count is meaningless here

    def test_default_theta_is_zero(self):
        assert np.array_equal(ToyModel("linear", f=2).theta, np.zeros(3))


@pytest.fixture
def small_regression():
    rng = np.random.default_rng(78)
    X = rng.normal(size=(24, 4))
    y = X @ np.array([1.0, -2.0, 0.5, 0.0]) + 0.1 * rng.normal(size=24)
    return X, y


class TestTrainSgd:
    def test_iterate_differences_reconstruct_batch_gradients(self, linear_model, small_regression):
        X, y = small_regression
        trace = train_sgd(linear_model, (X, y), eta=0.1, batch_size=6, epochs=2, seed=5)
        assert trace.steps == 8
        for t in range(trace.steps):
            batch = trace.batch_schedule[t]
            g = linear_model.grad_batch(X[batch], y[batch], trace.thetas[t]).mean(axis=0)
            recon = (trace.thetas[t] - trace.thetas[t + 1]) / trace.eta
            assert np.max(np.abs(recon - g)) <= 1e-12

    def test_each_epoch_partitions_the_rows(self, linear_model, small_regression):
        X, y = small_regression
        trace = train_sgd(linear_model, (X, y), eta=0.05, batch_size=6, epochs=3, seed=6)
        per_epoch = trace.batch_schedule.reshape(3, -1)
        for rows in per_epoch:
            assert np.array_equal(np.sort(rows.ravel()), np.arange(24))

    def test_short_remainder_batch_is_dropped(self, linear_model, small_regression):
        X, y = small_regression
        trace = train_sgd(linear_model, (X, y), eta=0.05, batch_size=9, epochs=1, seed=7)
        assert trace.steps == 2
        assert len(np.unique(trace.batch_schedule)) == 18

    def test_clipping_rescales_long_gradients(self, linear_model, small_regression):
        X, y = small_regression
        clip = 0.75
        trace = train_sgd(linear_model, (X, y), eta=0.1, batch_size=6, epochs=1, clip=clip, seed=8)
        for t in range(trace.steps):
            batch = trace.batch_schedule[t]
            G = linear_model.grad_batch(X[batch], y[batch], trace.thetas[t])
            norms = np.linalg.norm(G, axis=1)
            G = G * np.minimum(1.0, clip / norms)[:, None]
            assert np.all(np.linalg.norm(G, axis=1) <= clip + 1e-12)
            recon = (trace.thetas[t] - trace.thetas[t + 1]) / trace.eta
            assert np.max(np.abs(recon - G.mean(axis=0))) <= 1e-12

    def test_noise_needs_clip_and_zero_noise_is_noiseless(self, linear_model, small_regression):
        X, y = small_regression
        with pytest.raises(ValueError):
            train_sgd(linear_model, (X, y), eta=0.1, batch_size=6, epochs=1, noise=0.5)
        a = train_sgd(linear_model, (X, y), eta=0.1, batch_size=6, epochs=1, clip=1.0, seed=9)
        b = train_sgd(
            linear_model, (X, y), eta=0.1, batch_size=6, epochs=1, clip=1.0, noise=0.0, seed=9
        )
        assert np.array_equal(a.thetas, b.thetas)

    def test_noisy_runs_reproduce_under_a_seed(self, linear_model, small_regression):
        X, y = small_regression
        kw = dict(eta=0.1, batch_size=6, epochs=2, clip=1.0, noise=0.3)
        a = train_sgd(linear_model, (X, y), seed=10, **kw)
        b = train_sgd(linear_model, (X, y), seed=10, **kw)
        c = train_sgd(linear_model, (X, y), seed=11, **kw)
        assert np.array_equal(a.thetas, b.thetas)
        assert not np.array_equal(a.thetas, c.thetas)

    def test_model_instance_is_not_mutated(self, linear_model, small_regression):
        X, y = small_regression
        before = linear_model.theta.copy()
        trace = train_sgd(linear_model, (X, y), eta=0.2, batch_size=6, epochs=1, seed=12)
        assert np.array_equal(linear_model.theta, before)
        assert np.array_equal(trace.model.theta, before)
        assert not np.array_equal(trace.thetas[-1], before)

    def test_zero_learning_rate_freezes_the_iterates(self, linear_model, small_regression):
        X, y = small_regression
        trace = train_sgd(linear_model, (X, y), eta=0.0, batch_size=6, epochs=1, seed=13)
        assert np.all(trace.thetas == linear_model.theta)

    def test_validation(self, linear_model, small_regression):
        X, y = small_regression
        with pytest.raises(ValueError):
            train_sgd(linear_model, (X, y), eta=0.1, batch_size=0, epochs=1)
        with pytest.raises(ValueError):
            train_sgd(linear_model, (X, y), eta=0.1, batch_size=25, epochs=1)
        with pytest.raises(ValueError):
            train_sgd(linear_model, (X, y), eta=0.1, batch_size=6, epochs=0)
        with pytest.raises(ValueError):
            train_sgd(linear_model, (X, y), eta=-0.1, batch_size=6, epochs=1)
        with pytest.raises(ValueError):
            train_sgd(linear_model, (X, y), eta=0.1, batch_size=6, epochs=1, clip=0.0)


class TestWhiteboxAttack:
    @pytest.fixture
    def trace_and_refs(self, linear_model, small_regression):
        X, y = small_regression
        trace = train_sgd(linear_model, (X, y), eta=0.1, batch_size=6, epochs=1, seed=14)
        refs = estimate_reference(reference_gradients(linear_model, X, y), ridge=0.0)
        return X, y, trace, refs

    def test_scalar_attack_matches_manual_sum(self, trace_and_refs):
        X, y, trace, refs = trace_and_refs
        target = (np.full(4, 2.0), 5.0)
        total = run_whitebox_attack(trace, target, refs, "scalar")
        want = 0.0
        for t in range(trace.steps):
            g_star = trace.model.grad(target[0], target[1], theta=trace.thetas[t])
            g_batch = (trace.thetas[t] - trace.thetas[t + 1]) / trace.eta
            want += float(g_star @ g_batch)
        assert total == pytest.approx(want, rel=1e-10)

    def test_covariance_attack_matches_explicit_inverse(self, trace_and_refs):
        X, y, trace, refs = trace_and_refs
        target = (np.full(4, 2.0), 5.0)
        total = run_whitebox_attack(trace, target, refs, "covariance")
        prec = np.diag(1.0 / (refs.c0 + refs.ridge))
        want = 0.0
        for t in range(trace.steps):
            g_star = trace.model.grad(target[0], target[1], theta=trace.thetas[t])
            g_batch = (trace.thetas[t] - trace.thetas[t + 1]) / trace.eta
            u = g_star - refs.mu0
            v = g_batch - refs.mu0
            want += float(u @ prec @ v) - float(u @ prec @ u) / (2 * trace.batch_size)
        assert total == pytest.approx(want, rel=1e-10)

    def test_parameter_slice_restricts_both_gradients(self, trace_and_refs):
        X, y, trace, refs = trace_and_refs
        target = (np.full(4, 2.0), 5.0)
        sliced_refs = estimate_reference(
            reference_gradients(trace.model, X, y)[:, 2:5], ridge=0.0
        )
        total = run_whitebox_attack(trace, target, sliced_refs, "scalar", param_slice=(2, 5))
        want = 0.0
        for t in range(trace.steps):
            g_star = trace.model.grad(target[0], target[1], theta=trace.thetas[t])[2:5]
            g_batch = ((trace.thetas[t] - trace.thetas[t + 1]) / trace.eta)[2:5]
            want += float(g_star @ g_batch)
        assert total == pytest.approx(want, rel=1e-10)

    def test_dimension_mismatch_and_bad_slices(self, trace_and_refs):
        X, y, trace, refs = trace_and_refs
        target = (np.full(4, 2.0), 5.0)
        with pytest.raises(ValueError, match="dimension"):
            run_whitebox_attack(trace, target, refs, "scalar", param_slice=(0, 3))
        with pytest.raises(ValueError):
            run_whitebox_attack(trace, target, refs, "scalar", param_slice=(3, 3))
        with pytest.raises(ValueError):
            run_whitebox_attack(trace, target, refs, "scalar", param_slice=(4, 1))

    def test_unknown_attack_rejected(self, trace_and_refs):
        X, y, trace, refs = trace_and_refs
        with pytest.raises(ConfigError):
            run_whitebox_attack(trace, (np.zeros(4), 0.0), refs, "shadow")

    def test_frozen_trace_scores_zero_under_scalar_attack(self, linear_model, small_regression):
        X, y = small_regression
        trace = train_sgd(linear_model, (X, y), eta=0.0, batch_size=6, epochs=1, seed=15)
        refs = estimate_reference(reference_gradients(linear_model, X, y), ridge=0.0)
        assert run_whitebox_attack(trace, (np.ones(4), 1.0), refs, "scalar") == 0.0


class TestWhiteboxGame:
    def test_membership_of_an_outlier_is_detectable(self, small_regression):
        X, y = small_regression
        model = ToyModel("linear", f=4)
        target = (np.full(4, 3.0), 12.0)
        refs = estimate_reference(reference_gradients(model, X, y), ridge=0.0)
        rounds = run_whitebox_game(
            model, X, y, target,
            eta=0.05, batch_size=6, refs=refs, attack="covariance",
            reps=60, master_seed=81,
        )
        bits = np.array([r.b for r in rounds])
        assert 15 <= bits.sum() <= 45
        assert roc(rounds).auc >= 0.75

    def test_thread_count_does_not_change_scores(self, small_regression):
        X, y = small_regression
        model = ToyModel("linear", f=4)
        target = (np.full(4, 3.0), 12.0)
        refs = estimate_reference(reference_gradients(model, X, y), ridge=0.0)
        kw = dict(eta=0.05, batch_size=6, refs=refs, attack="scalar", reps=10, master_seed=82)
        serial = run_whitebox_game(model, X, y, target, threads=1, **kw)
        threaded = run_whitebox_game(model, X, y, target, threads=3, **kw)
        assert serial == threaded

    def test_base_rows_containing_the_target_are_rejected(self, small_regression):
        X, y = small_regression
        model = ToyModel("linear", f=4)
        refs = estimate_reference(reference_gradients(model, X, y), ridge=0.0)
        with pytest.raises(ValueError, match="row 3"):
            run_whitebox_game(
                model, X, y, (X[3], y[3]),
                eta=0.05, batch_size=6, refs=refs, attack="scalar",
                reps=4, master_seed=83,
            )


class TestMakeBlobs:
    def test_shapes_labels_and_reproducibility(self):
        X, y = make_blobs(50, 3, 4, seed=91)
        assert X.shape == (50, 3) and y.shape == (50,)
        assert y.min() >= 0 and y.max() < 4
        X2, y2 = make_blobs(50, 3, 4, seed=91)
        assert np.array_equal(X, X2) and np.array_equal(y, y2)

    def test_points_cluster_around_their_centers(self):
        X, y = make_blobs(200, 2, 3, center_scale=8.0, spread=0.2, seed=92)
        for k in range(3):
            own = X[y == k].mean(axis=0)
            for other in range(3):
                if other != k:
                    strangers = X[y == other].mean(axis=0)
                    spread_k = X[y == k] - own
                    assert np.linalg.norm(spread_k, axis=1).max() < np.linalg.norm(
                        own - strangers
                    )

    def test_validation(self):
        with pytest.raises(ValueError):
            make_blobs(0, 2, 2)
