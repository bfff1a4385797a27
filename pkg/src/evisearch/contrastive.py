"""Label-aware bidirectional contrastive objective, desk scale.

For a batch of paired image/text embeddings with integer targets, every
pair sharing a target is a positive.  The loss averages, over both the
image-to-text and text-to-image directions, the mean negative
log-probability that an anchor picks each of its positives under a
temperature-scaled softmax over the batch.  With all targets distinct it
reduces exactly to the standard symmetric InfoNCE loss.

Gradients are analytic and verified against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ContrastiveError(ValueError):
    """Malformed batch shapes or non-finite training state."""


@dataclass(frozen=True)
class UniclBatch:
    """Paired image/text embeddings with targets defining positive sets."""

    image_embeddings: np.ndarray  # n x d
    text_embeddings: np.ndarray  # n x d
    targets: tuple[int, ...]
    temperature: float = 1.0

    def __post_init__(self) -> None:
        img = np.asarray(self.image_embeddings, dtype=np.float64)
        txt = np.asarray(self.text_embeddings, dtype=np.float64)
        if img.ndim != 2 or txt.ndim != 2 or img.shape != txt.shape:
            raise ContrastiveError(
                f"image/text shapes must match as n x d, got {img.shape} and {txt.shape}"
            )
        if img.shape[0] < 1 or img.shape[1] < 1:
            raise ContrastiveError("batch needs n >= 1 and d >= 1")
        if len(self.targets) != img.shape[0]:
            raise ContrastiveError(
                f"{len(self.targets)} targets for batch of {img.shape[0]}"
            )
        if not (np.all(np.isfinite(img)) and np.all(np.isfinite(txt))):
            raise ContrastiveError("embeddings must be finite")
        if not self.temperature > 0:
            raise ContrastiveError(f"temperature must be positive, got {self.temperature}")
        object.__setattr__(self, "image_embeddings", img)
        object.__setattr__(self, "text_embeddings", txt)

    @property
    def size(self) -> int:
        return int(self.image_embeddings.shape[0])


@dataclass(frozen=True)
class LossValue:
    loss: float
    grad_image: np.ndarray
    grad_text: np.ndarray


def similarity_matrix(batch: UniclBatch) -> np.ndarray:
    """Temperature-scaled pairwise similarities: S[i, j] = <image_i, text_j> / tau."""
    return (batch.image_embeddings @ batch.text_embeddings.T) / batch.temperature


def _log_softmax(scores: np.ndarray, axis: int) -> np.ndarray:
    shifted = scores - scores.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def _positive_weights(targets: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(targets)
    positives = (t[:, None] == t[None, :]).astype(np.float64)
    row = positives / positives.sum(axis=1, keepdims=True)
    col = positives / positives.sum(axis=0, keepdims=True)
    return row, col


def _loss_scalar(img, txt, pos_row, pos_col, temperature):
    """Loss in the dtype of ``img``/``txt`` (float64 or extended precision)."""
    sims = (img @ txt.T) / temperature
    n = img.shape[0]
    log_rows = _log_softmax(sims, axis=1)
    log_cols = _log_softmax(sims, axis=0)
    loss_i2t = -(pos_row * log_rows).sum() / n
    loss_t2i = -(pos_col * log_cols).sum() / n
    return (loss_i2t + loss_t2i) / 2.0


def unicl_loss(batch: UniclBatch) -> LossValue:
    """Loss and exact analytic gradients for one batch.

    Image-to-text: each image row's log-softmax, averaged over that row's
    positives, then over rows.  Text-to-image mirrors it over columns.
    The two halves are averaged.  Softmaxes are max-shifted, so any
    finite batch evaluates without overflow.
    """
    sims = similarity_matrix(batch)
    n = batch.size
    pos_row, pos_col = _positive_weights(batch.targets)

    log_rows = _log_softmax(sims, axis=1)
    log_cols = _log_softmax(sims, axis=0)
    loss = float(_loss_scalar(
        batch.image_embeddings, batch.text_embeddings, pos_row, pos_col, batch.temperature
    ))

    grad_sims = (np.exp(log_rows) - pos_row + np.exp(log_cols) - pos_col) / (2.0 * n)
    grad_image = (grad_sims @ batch.text_embeddings) / batch.temperature
    grad_text = (grad_sims.T @ batch.image_embeddings) / batch.temperature
    return LossValue(loss=max(loss, 0.0), grad_image=grad_image, grad_text=grad_text)


def infonce_loss(
    image_embeddings: np.ndarray, text_embeddings: np.ndarray, temperature: float = 1.0
) -> float:
    """Symmetric InfoNCE with diagonal positives (the all-distinct special case)."""
    batch = UniclBatch(
        image_embeddings=image_embeddings,
        text_embeddings=text_embeddings,
        targets=tuple(range(np.asarray(image_embeddings).shape[0])),
        temperature=temperature,
    )
    sims = similarity_matrix(batch)
    diag = np.arange(batch.size)
    loss_i2t = -float(_log_softmax(sims, axis=1)[diag, diag].mean())
    loss_t2i = -float(_log_softmax(sims, axis=0)[diag, diag].mean())
    return (loss_i2t + loss_t2i) / 2.0


def finite_diff_check(batch: UniclBatch, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    The denominator is max(|analytic|, |numeric|, 1e-8) per component.
    The perturbed losses are evaluated in extended precision and
    subtracted before any rounding back to float64: a step of 1e-5
    cancels ~11 leading digits of the loss, so plain float64 evaluation
    would leave only noise for small-gradient components.
    """
    analytic = unicl_loss(batch)
    pos_row, pos_col = _positive_weights(batch.targets)
    eps = np.longdouble(epsilon)
    img = batch.image_embeddings.astype(np.longdouble)
    txt = batch.text_embeddings.astype(np.longdouble)

    worst = 0.0
    for which, grad in (("image", analytic.grad_image), ("text", analytic.grad_text)):
        base = img if which == "image" else txt
        for i in range(base.shape[0]):
            for j in range(base.shape[1]):
                saved = base[i, j]
                base[i, j] = saved + eps
                up = _loss_scalar(img, txt, pos_row, pos_col, batch.temperature)
                base[i, j] = saved - eps
                down = _loss_scalar(img, txt, pos_row, pos_col, batch.temperature)
                base[i, j] = saved
                numeric = float((up - down) / (2 * eps))
                a = float(grad[i, j])
                denom = max(abs(a), abs(numeric), 1e-8)
                worst = max(worst, abs(a - numeric) / denom)
    return worst


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 500
    learning_rate: float = 0.2
    batch_size: int = 8
    embed_dim: int = 8
    temperature: float = 1.0
    weight_decay: float = 0.0
    seed: int = 0
    n_clusters: int | None = None  # None: inferred from the first batch


@dataclass(frozen=True)
class TrainResult:
    """Trained two-tower linear maps plus the per-step loss trace."""

    image_map: np.ndarray  # feature_dim x embed_dim
    text_map: np.ndarray  # n_clusters x embed_dim; row c is class c's anchor
    trace: tuple[float, ...]
    smoothed_trace: tuple[float, ...]  # running minimum of trace, non-increasing
    config: TrainConfig = field(repr=False, default=TrainConfig())

    def anchors(self) -> np.ndarray:
        return self.text_map


def toy_train(generator, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Plain gradient descent on two linear towers against the batch loss.

    ``generator`` yields (features, targets) batches: features is an
    m x feature_dim array, targets the cluster id per row (also the text
    side's one-hot input).  Image tower: features @ image_map.  Text
    tower: one-hot(target) @ text_map, i.e. a learned anchor per cluster.
    Deterministic for a fixed seed; the trace records the loss on each
    step's batch before its update.
    """
    rng = np.random.default_rng(config.seed)
    first_features, first_targets = generator(config.batch_size, rng)
    feature_dim = first_features.shape[1]
    n_clusters = config.n_clusters or int(max(first_targets)) + 1

    image_map = rng.normal(0.0, 1.0 / math.sqrt(feature_dim), (feature_dim, config.embed_dim))
    text_map = rng.normal(0.0, 1.0 / math.sqrt(n_clusters), (n_clusters, config.embed_dim))

    trace: list[float] = []
    features, targets = first_features, first_targets
    for step in range(config.steps):
        top = int(max(targets)) + 1
        if top > text_map.shape[0]:
            # A cluster id beyond the first batch's range appeared; widen
            # the anchor table deterministically.
            extra = rng.normal(0.0, 1.0 / math.sqrt(n_clusters), (top - text_map.shape[0], config.embed_dim))
            text_map = np.vstack([text_map, extra])
        batch = UniclBatch(
            image_embeddings=features @ image_map,
            text_embeddings=text_map[targets],
            targets=tuple(int(t) for t in targets),
            temperature=config.temperature,
        )
        value = unicl_loss(batch)
        if not math.isfinite(value.loss):
            raise ContrastiveError(f"loss became non-finite at step {step}")
        trace.append(value.loss)

        grad_image_map = features.T @ value.grad_image
        grad_text_map = np.zeros_like(text_map)
        np.add.at(grad_text_map, targets, value.grad_text)
        if config.weight_decay:
            grad_image_map = grad_image_map + config.weight_decay * image_map
            grad_text_map = grad_text_map + config.weight_decay * text_map
        image_map = image_map - config.learning_rate * grad_image_map
        text_map = text_map - config.learning_rate * grad_text_map

        features, targets = generator(config.batch_size, rng)

    smoothed = tuple(float(x) for x in np.minimum.accumulate(trace))
    return TrainResult(
        image_map=image_map,
        text_map=text_map,
        trace=tuple(trace),
        smoothed_trace=smoothed,
        config=config,
    )


def export_trace(trace: Sequence[float], path) -> None:
    """Write the loss trace as line-delimited "step<TAB>loss" pairs."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for step, loss in enumerate(trace):
            fh.write(f"{step}\t{loss:.17g}\n")
