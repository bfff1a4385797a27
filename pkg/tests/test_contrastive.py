"""Bidirectional contrastive loss, gradients, and the toy trainer."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evisearch.contrastive import (
    ContrastiveError,
    TrainConfig,
    UniclBatch,
    export_trace,
    finite_diff_check,
    infonce_loss,
    similarity_matrix,
    toy_train,
    unicl_loss,
)
from evisearch.synthetic import ClusterSpec, batch_sampler


def random_batch(rng, n=None, d=None, temperature=1.0, scale=1.0, shared=False):
    n = n or int(rng.integers(2, 7))
    d = d or int(rng.integers(2, 9))
    if shared:
        targets = tuple(int(t) for t in rng.integers(0, max(2, n // 2 + 1), n))
    else:
        targets = tuple(range(n))
    return UniclBatch(
        image_embeddings=scale * rng.normal(size=(n, d)),
        text_embeddings=scale * rng.normal(size=(n, d)),
        targets=targets,
        temperature=temperature,
    )


class TestBatchValidation:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ContrastiveError, match="shapes"):
            UniclBatch(np.ones((2, 3)), np.ones((3, 3)), (0, 1))

    def test_target_count_mismatch_rejected(self):
        with pytest.raises(ContrastiveError, match="targets"):
            UniclBatch(np.ones((2, 3)), np.ones((2, 3)), (0, 1, 2))

    def test_non_finite_rejected(self):
        bad = np.array([[1.0, np.nan]])
        with pytest.raises(ContrastiveError, match="finite"):
            UniclBatch(bad, np.ones((1, 2)), (0,))

    def test_temperature_must_be_positive(self):
        for tau in (0.0, -1.0):
            with pytest.raises(ContrastiveError, match="temperature"):
                UniclBatch(np.ones((1, 2)), np.ones((1, 2)), (0,), temperature=tau)

    def test_similarity_matrix_applies_temperature(self):
        batch = UniclBatch(
            np.array([[2.0, 0.0]]), np.array([[3.0, 0.0]]), (0,), temperature=0.5
        )
        assert similarity_matrix(batch).tolist() == [[12.0]]


class TestUniclLoss:
    def test_identity_fixture_distinct_targets(self):
        batch = UniclBatch(np.eye(2), np.eye(2), (0, 1))
        expected = math.log(1.0 + math.e) - 1.0
        assert unicl_loss(batch).loss == pytest.approx(expected, abs=1e-12)

    def test_identity_fixture_shared_target(self):
        # Both rows positive for both anchors: per-anchor mean log-prob
        # averages a hit (1 - log(1+e)) and a miss (0 - log(1+e)).
        batch = UniclBatch(np.eye(2), np.eye(2), (0, 0))
        expected = math.log(1.0 + math.e) - 0.5
        assert unicl_loss(batch).loss == pytest.approx(expected, abs=1e-12)

    def test_uninformative_scores_give_log_n(self):
        n = 5
        batch = UniclBatch(np.ones((n, 3)), np.ones((n, 3)), tuple(range(n)))
        assert unicl_loss(batch).loss == pytest.approx(math.log(n), abs=1e-12)

    def test_gradient_shapes(self):
        rng = np.random.default_rng(3)
        batch = random_batch(rng, n=4, d=6, shared=True)
        value = unicl_loss(batch)
        assert value.grad_image.shape == (4, 6)
        assert value.grad_text.shape == (4, 6)

    def test_large_magnitude_batch_stays_finite(self):
        batch = UniclBatch(
            np.array([[800.0, 0.0], [0.0, 800.0]]), np.eye(2), (0, 1), temperature=0.1
        )
        assert math.isfinite(unicl_loss(batch).loss)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_loss_non_negative(self, seed):
        rng = np.random.default_rng(seed)
        batch = random_batch(rng, shared=bool(rng.integers(0, 2)))
        assert unicl_loss(batch).loss >= 0.0

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_swapping_towers_preserves_loss(self, seed):
        rng = np.random.default_rng(seed)
        batch = random_batch(rng, shared=True)
        swapped = UniclBatch(
            batch.text_embeddings,
            batch.image_embeddings,
            batch.targets,
            batch.temperature,
        )
        assert unicl_loss(swapped).loss == pytest.approx(
            unicl_loss(batch).loss, abs=1e-12
        )

    @given(seed=st.integers(0, 2**32 - 1), tau=st.sampled_from([0.1, 0.5, 2.0]))
    @settings(max_examples=40, deadline=None)
    def test_temperature_folds_into_embeddings(self, seed, tau):
        rng = np.random.default_rng(seed)
        batch = random_batch(rng, temperature=tau, shared=True)
        folded = UniclBatch(
            batch.image_embeddings / tau,
            batch.text_embeddings,
            batch.targets,
            temperature=1.0,
        )
        assert unicl_loss(folded).loss == pytest.approx(
            unicl_loss(batch).loss, abs=1e-12
        )

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_distinct_targets_reduce_to_infonce(self, seed):
        rng = np.random.default_rng(seed)
        batch = random_batch(rng, shared=False, temperature=0.7)
        assert unicl_loss(batch).loss == pytest.approx(
            infonce_loss(batch.image_embeddings, batch.text_embeddings, 0.7),
            abs=1e-12,
        )

    def test_descent_step_reduces_loss(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            batch = random_batch(rng, shared=True)
            value = unicl_loss(batch)
            stepped = UniclBatch(
                batch.image_embeddings - 1e-3 * value.grad_image,
                batch.text_embeddings - 1e-3 * value.grad_text,
                batch.targets,
                batch.temperature,
            )
            assert unicl_loss(stepped).loss < value.loss


def plain_float64_fd(batch, epsilon=1e-4):
    """Independent numeric gradient: central differences via the public loss."""
    grads = []
    for which in ("image", "text"):
        base = np.array(
            batch.image_embeddings if which == "image" else batch.text_embeddings
        )
        grad = np.zeros_like(base)
        for i in range(base.shape[0]):
            for j in range(base.shape[1]):
                for sign in (1.0, -1.0):
                    bumped = base.copy()
                    bumped[i, j] += sign * epsilon
                    pair = (
                        (bumped, batch.text_embeddings)
                        if which == "image"
                        else (batch.image_embeddings, bumped)
                    )
                    loss = unicl_loss(
                        UniclBatch(pair[0], pair[1], batch.targets, batch.temperature)
                    ).loss
                    grad[i, j] += sign * loss
        grads.append(grad / (2.0 * epsilon))
    return grads


class TestFiniteDiffCheck:
    def test_analytic_matches_independent_float64_differences(self):
        rng = np.random.default_rng(41)
        batch = random_batch(rng, n=4, d=3, shared=True)
        value = unicl_loss(batch)
        fd_image, fd_text = plain_float64_fd(batch)
        assert np.max(np.abs(value.grad_image - fd_image)) < 1e-6
        assert np.max(np.abs(value.grad_text - fd_text)) < 1e-6

    def test_reported_error_is_tiny_on_random_batches(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            batch = random_batch(rng, scale=0.5, shared=True)
            assert finite_diff_check(batch) <= 1e-5

    def test_sharp_temperature_still_passes(self):
        rng = np.random.default_rng(11)
        batch = random_batch(rng, n=5, d=4, temperature=0.1, scale=0.5, shared=True)
        assert finite_diff_check(batch) <= 1e-5


class TestInfoNCE:
    def test_identity_fixture(self):
        loss = infonce_loss(np.eye(2), np.eye(2))
        assert loss == pytest.approx(math.log(1.0 + math.e) - 1.0, abs=1e-12)

    def test_temperature_sharpening_lowers_aligned_loss(self):
        img = np.eye(3)
        assert infonce_loss(img, img, 0.2) < infonce_loss(img, img, 1.0)


def two_cluster_generator(batch_size, rng):
    targets = rng.integers(0, 2, batch_size)
    centers = np.array([[3.0, 0.0, 0.0], [0.0, 3.0, 0.0]])
    return centers[targets] + rng.normal(0.0, 1.0, (batch_size, 3)), targets


class TestToyTrain:
    def test_deterministic_for_fixed_seed(self):
        config = TrainConfig(steps=40, seed=7, batch_size=6, embed_dim=4)
        a = toy_train(two_cluster_generator, config)
        b = toy_train(two_cluster_generator, config)
        assert a.trace == b.trace
        assert np.array_equal(a.image_map, b.image_map)
        assert np.array_equal(a.text_map, b.text_map)

    def test_seed_changes_trajectory(self):
        a = toy_train(two_cluster_generator, TrainConfig(steps=10, seed=1))
        b = toy_train(two_cluster_generator, TrainConfig(steps=10, seed=2))
        assert a.trace != b.trace

    def test_trace_length_and_smoothing(self):
        result = toy_train(two_cluster_generator, TrainConfig(steps=60, seed=3))
        assert len(result.trace) == 60
        assert result.smoothed_trace == tuple(
            float(x) for x in np.minimum.accumulate(result.trace)
        )
        assert all(
            a >= b for a, b in zip(result.smoothed_trace, result.smoothed_trace[1:])
        )

    def test_loss_drops_on_separable_clusters(self):
        spec = ClusterSpec(n_clusters=3, dimension=16, separation=4.0)
        config = TrainConfig(
            steps=200, learning_rate=0.2, batch_size=6, embed_dim=8, seed=12,
            n_clusters=3,
        )
        result = toy_train(batch_sampler(spec), config)
        assert result.smoothed_trace[-1] < 0.7 * result.trace[0]

    def test_anchor_table_grows_for_late_cluster_ids(self):
        def staggered(batch_size, rng):
            del rng
            if staggered.calls == 0:
                staggered.calls += 1
                return np.ones((batch_size, 3)), np.zeros(batch_size, dtype=np.intp)
            return np.ones((batch_size, 3)), np.full(batch_size, 4, dtype=np.intp)

        staggered.calls = 0
        result = toy_train(staggered, TrainConfig(steps=3, seed=0, batch_size=2))
        assert result.text_map.shape[0] >= 5

    def test_explicit_cluster_count_sets_anchor_rows(self):
        result = toy_train(
            two_cluster_generator, TrainConfig(steps=5, seed=0, n_clusters=2)
        )
        assert result.anchors().shape == (2, result.config.embed_dim)

    def test_divergence_raises(self):
        config = TrainConfig(steps=200, learning_rate=1e12, seed=0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(ContrastiveError):
                toy_train(two_cluster_generator, config)

    def test_export_trace_round_trips(self, tmp_path):
        trace = (5.0, 1.2345678901234567, 0.25)
        path = tmp_path / "trace.tsv"
        export_trace(trace, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert [line.split("\t")[0] for line in lines] == ["0", "1", "2"]
        assert tuple(float(line.split("\t")[1]) for line in lines) == trace
