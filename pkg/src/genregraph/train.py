"""Two-stage training: graph-layer embedding learning, then the genre MLP.

Stage 1 trains the graph layer with a throwaway linear head at lr 0.01;
stage 2 freezes the embeddings and trains the three-layer classifier at
lr 0.001. Both stages run full-batch Adam for the configured epoch count
and are bit-for-bit reproducible for a fixed seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import (
    AttachmentMode,
    GenreGraph,
    GenreLabel,
    NormalizedAdjacency,
    attach_unseen,
    extended_adjacency_row,
    normalize,
)
from .nn import (
    EMBED_DIM,
    MLP_HIDDEN,
    N_GENRES,
    AdamState,
    EmbeddingModel,
    LayerParams,
    Variant,
    adam_step,
    build_model,
    embedding_forward,
    embedding_loss_and_grads,
    init_layer,
    mlp_forward,
    mlp_loss_and_grads,
    softmax_cross_entropy,
)

# stream tags for deriving independent per-purpose seeds from one run seed
_STREAM_EPOCH = 0
_STREAM_FINAL = 1
_STREAM_MLP_INIT = 2


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged at epoch {epoch}")


@dataclass(frozen=True)
class TrainConfig:
    embed_lr: float = 0.01
    mlp_lr: float = 0.001
    epochs: int = 50
    seed: int = 0
    variant: Variant = Variant.GCN
    sage_sample_k: int = 10
    self_loops: bool = False

    def __post_init__(self):
        if self.embed_lr <= 0 or self.mlp_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.sage_sample_k < 1:
            raise ValueError(f"sage_sample_k must be >= 1, got {self.sage_sample_k}")


@dataclass(frozen=True)
class LossCurve:
    """Per-epoch (pre-step train loss, post-step loss on the same batch)."""

    train_losses: np.ndarray
    eval_losses: np.ndarray

    def __post_init__(self):
        train = np.asarray(self.train_losses, dtype=np.float64)
        eval_ = np.asarray(self.eval_losses, dtype=np.float64)
        object.__setattr__(self, "train_losses", train)
        object.__setattr__(self, "eval_losses", eval_)
        if train.shape != eval_.shape or train.ndim != 1:
            raise ValueError("train and eval losses must be 1-D and the same length")
        if not (np.all(np.isfinite(train)) and np.all(np.isfinite(eval_))):
            raise ValueError("loss curve contains non-finite values")
        if np.any(train < 0) or np.any(eval_ < 0):
            raise ValueError("cross-entropy losses cannot be negative")

    @property
    def epochs(self) -> int:
        return len(self.train_losses)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "eval_loss"])
            for epoch, (train, eval_) in enumerate(zip(self.train_losses, self.eval_losses)):
                writer.writerow([epoch, repr(float(train)), repr(float(eval_))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "LossCurve":
        train, eval_ = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                train.append(float(row["train_loss"]))
                eval_.append(float(row["eval_loss"]))
        return cls(train_losses=np.array(train), eval_losses=np.array(eval_))


def derive_seed(*parts: int) -> int:
    """Stable child seed from a run seed plus stream/epoch indices."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def split_train_test(
    label_indices: np.ndarray, test_fraction: float = 0.1, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Per-genre seeded shuffle split; every genre keeps at least one of each."""
    if not (0 < test_fraction < 1):
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    label_indices = np.asarray(label_indices)
    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for genre in np.unique(label_indices):
        members = np.flatnonzero(label_indices == genre)
        if len(members) < 2:
            raise ValueError(f"genre index {genre} has {len(members)} song(s); need >= 2 to split")
        shuffled = rng.permutation(members)
        n_test = int(round(len(members) * test_fraction))
        n_test = min(max(n_test, 1), len(members) - 1)
        test_parts.append(np.sort(shuffled[:n_test]))
        train_parts.append(np.sort(shuffled[n_test:]))
    return np.concatenate(train_parts), np.concatenate(test_parts)


def _check_finite(loss: float, epoch: int) -> None:
    if not np.isfinite(loss):
        raise TrainingDivergedError(epoch)


def train_embeddings(
    graph: GenreGraph,
    features: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
) -> tuple[EmbeddingModel, LossCurve, np.ndarray]:
    """Train the graph layer plus its temporary head; return embeddings.

    Embeddings are the post-training graph-layer outputs (head excluded).
    SAGE draws a fresh neighbor sample each epoch from seeds derived from
    cfg.seed; the final embedding forward uses its own derived seed.
    """
    if cfg.variant is Variant.PLAIN:
        raise ValueError("PLAIN has no embedding stage; train the classifier on raw features")
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    if features.shape[0] != graph.n_nodes:
        raise ValueError(f"{features.shape[0]} feature rows for {graph.n_nodes} nodes")

    model = build_model(cfg.variant, cfg.seed)
    norm_adj = normalize(graph, add_self_loops=cfg.self_loops) if cfg.variant is Variant.GCN else None
    params = model.graph_layer.arrays() + model.embed_head.arrays()
    state = AdamState.for_params(params, lr=cfg.embed_lr)

    train_losses = np.empty(cfg.epochs)
    eval_losses = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        epoch_seed = derive_seed(cfg.seed, _STREAM_EPOCH, epoch)
        loss, grads = embedding_loss_and_grads(
            cfg.variant,
            features,
            targets,
            model.graph_layer,
            model.embed_head,
            norm_adj=norm_adj,
            graph=graph,
            sample_k=cfg.sage_sample_k,
            seed=epoch_seed,
        )
        _check_finite(loss, epoch)
        train_losses[epoch] = loss
        adam_step(params, grads, state)

        hidden = embedding_forward(
            cfg.variant,
            features,
            model.graph_layer,
            norm_adj=norm_adj,
            graph=graph,
            sample_k=cfg.sage_sample_k,
            seed=epoch_seed,
        )
        logits = hidden @ model.embed_head.weight + model.embed_head.bias
        eval_loss, _ = softmax_cross_entropy(logits, targets)
        _check_finite(eval_loss, epoch)
        eval_losses[epoch] = eval_loss

    embeddings = compute_embeddings(model, graph, features, cfg)
    curve = LossCurve(train_losses=train_losses, eval_losses=eval_losses)
    return model, curve, embeddings


def compute_embeddings(
    model: EmbeddingModel,
    graph: GenreGraph,
    features: np.ndarray,
    cfg: TrainConfig,
) -> np.ndarray:
    """Catalog embeddings for a trained model.

    Reproduces the final embedding pass of train_embeddings bit for bit,
    so weights loaded from disk yield the same catalog as the training
    run that wrote them (given the same cfg).
    """
    if model.variant is Variant.PLAIN:
        return np.asarray(features, dtype=np.float64)
    norm_adj = normalize(graph, add_self_loops=cfg.self_loops) if model.variant is Variant.GCN else None
    return embedding_forward(
        model.variant,
        np.asarray(features, dtype=np.float64),
        model.graph_layer,
        norm_adj=norm_adj,
        graph=graph,
        sample_k=cfg.sage_sample_k,
        seed=derive_seed(cfg.seed, _STREAM_FINAL),
    )


def train_classifier(
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    mlp: list[LayerParams] | None = None,
) -> tuple[list[LayerParams], LossCurve]:
    """Train the three-layer MLP on frozen inputs (raw MFCC or embeddings)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    if mlp is None:
        rng = np.random.default_rng(derive_seed(cfg.seed, _STREAM_MLP_INIT))
        mlp = [
            init_layer(inputs.shape[1], MLP_HIDDEN[0], rng),
            init_layer(MLP_HIDDEN[0], MLP_HIDDEN[1], rng),
            init_layer(MLP_HIDDEN[1], N_GENRES, rng, zero=True),
        ]
    if mlp[0].in_dim != inputs.shape[1]:
        raise ValueError(f"classifier expects {mlp[0].in_dim}-dim inputs, got {inputs.shape[1]}")

    params = [arr for layer in mlp for arr in layer.arrays()]
    state = AdamState.for_params(params, lr=cfg.mlp_lr)
    train_losses = np.empty(cfg.epochs)
    eval_losses = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        loss, grads = mlp_loss_and_grads(inputs, targets, mlp)
        _check_finite(loss, epoch)
        train_losses[epoch] = loss
        adam_step(params, grads, state)
        eval_loss, _ = softmax_cross_entropy(mlp_forward(inputs, mlp), targets)
        _check_finite(eval_loss, epoch)
        eval_losses[epoch] = eval_loss
    return mlp, LossCurve(train_losses=train_losses, eval_losses=eval_losses)


def train_pipeline(
    graph: GenreGraph,
    features: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
) -> tuple[EmbeddingModel, dict[str, LossCurve]]:
    """Run both stages for cfg.variant; PLAIN skips the embedding stage."""
    curves: dict[str, LossCurve] = {}
    if cfg.variant is Variant.PLAIN:
        model = build_model(Variant.PLAIN, cfg.seed)
        mlp, curves["classifier"] = train_classifier(features, targets, cfg, mlp=model.mlp)
        model.mlp = mlp
        return model, curves
    model, curves["embedding"], embeddings = train_embeddings(graph, features, targets, cfg)
    mlp, curves["classifier"] = train_classifier(embeddings, targets, cfg, mlp=model.mlp)
    model.mlp = mlp
    return model, curves


def infer_embedding(
    model: EmbeddingModel,
    graph: GenreGraph,
    train_features: np.ndarray,
    new_feature: np.ndarray,
    attachment: AttachmentMode,
    true_label: GenreLabel | None = None,
    knn_k: int = 10,
    sample_k: int = 10,
    self_loops: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """Embed a song that is not in the training graph.

    The song is attached by ORACLE or FEATURE_KNN, then one graph-layer
    forward pass runs over its neighbors' stored training features. PLAIN
    passes the raw feature through unchanged.
    """
    new_feature = np.asarray(new_feature, dtype=np.float64).ravel()
    if model.variant is Variant.PLAIN:
        return new_feature

    train_features = np.asarray(train_features, dtype=np.float64)
    neighbor_ids = attach_unseen(
        graph,
        new_feature,
        attachment,
        true_label=true_label,
        k=knn_k,
        train_features=train_features,
    )
    neighbor_idx = np.array([graph.index_of(nid) for nid in neighbor_ids], dtype=np.int64)
    layer = model.graph_layer

    if model.variant is Variant.GCN:
        weights, self_weight = extended_adjacency_row(graph, neighbor_idx, self_loops)
        if len(neighbor_idx):
            aggregated = weights @ train_features[neighbor_idx] + self_weight * new_feature
        else:
            aggregated = self_weight * new_feature
        return np.maximum(aggregated @ layer.weight + layer.bias, 0.0)

    # SAGE: mean over a sampled subset of the attached neighbors
    if len(neighbor_idx) > sample_k:
        rng = np.random.default_rng(seed)
        neighbor_idx = rng.choice(neighbor_idx, size=sample_k, replace=False)
    if len(neighbor_idx):
        neighbor_mean = train_features[neighbor_idx].mean(axis=0)
    else:
        neighbor_mean = np.zeros_like(new_feature)
    concat = np.concatenate([new_feature, neighbor_mean])
    return np.maximum(concat @ layer.weight + layer.bias, 0.0)
