"""Dense layers, GCN and GraphSAGE propagation, softmax cross-entropy,
manual backpropagation, and Adam.

Everything is plain numpy with explicit gradients; no autodiff. Forward
passes are pure given (inputs, params, seed) and repeat bit-identically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .graph import GenreGraph, NormalizedAdjacency

INPUT_DIM = 30
EMBED_DIM = 60
MLP_HIDDEN = (128, 32)
N_GENRES = 8

GCN_GRAPH_PARAM_COUNT = 1860
SAGE_GRAPH_PARAM_COUNT = 3660
PLAIN_MLP_PARAM_COUNT = 8360


class Variant(enum.Enum):
    PLAIN = "plain"
    GCN = "gcn"
    SAGE = "sage"


@dataclass
class LayerParams:
    """One affine layer: weight (in_dim x out_dim) plus bias (out_dim)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weight must be 2-D and bias 1-D")
        if self.weight.shape[1] != self.bias.shape[0]:
            raise ValueError(
                f"bias length {self.bias.shape[0]} does not match out_dim {self.weight.shape[1]}"
            )

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def param_count(self) -> int:
        return self.weight.size + self.bias.size

    def arrays(self) -> list[np.ndarray]:
        return [self.weight, self.bias]


def init_layer(in_dim: int, out_dim: int, rng: np.random.Generator, zero: bool = False) -> LayerParams:
    """Uniform(-sqrt(1/in_dim), +sqrt(1/in_dim)) init, or all zeros for output heads."""
    if zero:
        weight = np.zeros((in_dim, out_dim))
    else:
        bound = np.sqrt(1.0 / in_dim)
        weight = rng.uniform(-bound, bound, size=(in_dim, out_dim))
    return LayerParams(weight=weight, bias=np.zeros(out_dim))


@dataclass
class EmbeddingModel:
    """Graph layer plus classifier heads for one pipeline variant.

    embed_head is the throwaway linear classifier used only while the graph
    layer is trained; mlp is the three-layer genre classifier.
    """

    variant: Variant
    graph_layer: LayerParams | None
    embed_head: LayerParams | None
    mlp: list[LayerParams]

    def __post_init__(self):
        if self.variant is Variant.PLAIN:
            if self.graph_layer is not None or self.embed_head is not None:
                raise ValueError("PLAIN variant has no graph layer")
            if sum(l.param_count for l in self.mlp) != PLAIN_MLP_PARAM_COUNT:
                raise ValueError(
                    f"PLAIN classifier must have {PLAIN_MLP_PARAM_COUNT} parameters, "
                    f"got {sum(l.param_count for l in self.mlp)}"
                )
        elif self.variant is Variant.GCN:
            if self.graph_layer is None or self.graph_layer.param_count != GCN_GRAPH_PARAM_COUNT:
                raise ValueError(f"GCN graph layer must have {GCN_GRAPH_PARAM_COUNT} parameters")
        elif self.variant is Variant.SAGE:
            if self.graph_layer is None or self.graph_layer.param_count != SAGE_GRAPH_PARAM_COUNT:
                raise ValueError(f"SAGE graph layer must have {SAGE_GRAPH_PARAM_COUNT} parameters")

    @property
    def embedding_dim(self) -> int:
        return INPUT_DIM if self.variant is Variant.PLAIN else EMBED_DIM

    def parameter_counts(self) -> dict[str, int]:
        counts = {"mlp": sum(l.param_count for l in self.mlp)}
        if self.graph_layer is not None:
            counts["graph_layer"] = self.graph_layer.param_count
        if self.embed_head is not None:
            counts["embed_head"] = self.embed_head.param_count
        return counts


def build_model(variant: Variant, seed: int) -> EmbeddingModel:
    """Construct a model with fixed architecture and seeded initialization.

    Hidden layers use the uniform init; the final classifying layers
    (embed_head and the last MLP layer) start at zero so the first-epoch
    softmax is uniform over genres.
    """
    rng = np.random.default_rng(seed)
    if variant is Variant.PLAIN:
        graph_layer = None
        embed_head = None
        mlp_in = INPUT_DIM
    else:
        graph_in = INPUT_DIM if variant is Variant.GCN else 2 * INPUT_DIM
        graph_layer = init_layer(graph_in, EMBED_DIM, rng)
        embed_head = init_layer(EMBED_DIM, N_GENRES, rng, zero=True)
        mlp_in = EMBED_DIM
    mlp = [
        init_layer(mlp_in, MLP_HIDDEN[0], rng),
        init_layer(MLP_HIDDEN[0], MLP_HIDDEN[1], rng),
        init_layer(MLP_HIDDEN[1], N_GENRES, rng, zero=True),
    ]
    return EmbeddingModel(variant=variant, graph_layer=graph_layer, embed_head=embed_head, mlp=mlp)


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _check_affine_shapes(features: np.ndarray, layer: LayerParams, name: str) -> None:
    if features.shape[1] != layer.in_dim:
        raise ValueError(
            f"{name}: input has {features.shape[1]} columns but layer expects {layer.in_dim}"
        )


def gcn_forward(norm_adj: NormalizedAdjacency, features: np.ndarray, layer: LayerParams) -> np.ndarray:
    """ReLU(A_hat X W + b) with A_hat the normalized adjacency."""
    features = np.asarray(features, dtype=np.float64)
    _check_affine_shapes(features, layer, "gcn_forward")
    if norm_adj.n_nodes != features.shape[0]:
        raise ValueError(
            f"adjacency is {norm_adj.n_nodes} nodes but features have {features.shape[0]} rows"
        )
    return _relu(norm_adj.apply(features) @ layer.weight + layer.bias)


def sampled_neighbor_means(
    graph: GenreGraph, features: np.ndarray, sample_k: int, seed: int
) -> np.ndarray:
    """Per-node mean of sample_k uniformly sampled neighbor feature rows.

    Nodes with no neighbors get a zero row. Nodes are visited in index
    order with a single seeded generator, so the result is deterministic.
    """
    if sample_k < 1:
        raise ValueError(f"sample_k must be >= 1, got {sample_k}")
    features = np.asarray(features, dtype=np.float64)
    rng = np.random.default_rng(seed)
    means = np.zeros_like(features)
    for v in range(graph.n_nodes):
        neighbors = graph.neighbors(v)
        if len(neighbors) == 0:
            continue
        if len(neighbors) > sample_k:
            neighbors = rng.choice(neighbors, size=sample_k, replace=False)
        means[v] = features[neighbors].mean(axis=0)
    return means


def sage_forward(
    graph: GenreGraph,
    features: np.ndarray,
    layer: LayerParams,
    sample_k: int,
    seed: int,
) -> np.ndarray:
    """ReLU([x_v || mean of sampled neighbors] W + b) per node."""
    features = np.asarray(features, dtype=np.float64)
    if graph.n_nodes != features.shape[0]:
        raise ValueError(
            f"graph has {graph.n_nodes} nodes but features have {features.shape[0]} rows"
        )
    concat = np.hstack([features, sampled_neighbor_means(graph, features, sample_k, seed)])
    _check_affine_shapes(concat, layer, "sage_forward")
    return _relu(concat @ layer.weight + layer.bias)


def mlp_forward(inputs: np.ndarray, mlp: list[LayerParams]) -> np.ndarray:
    """Three affine layers, ReLU after the first two, raw logits out."""
    inputs = np.asarray(inputs, dtype=np.float64)
    _check_affine_shapes(inputs, mlp[0], "mlp_forward")
    hidden = inputs
    for layer in mlp[:-1]:
        hidden = _relu(hidden @ layer.weight + layer.bias)
    return hidden @ mlp[-1].weight + mlp[-1].bias


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient with respect to the logits.

    Uses the max-subtraction trick; dlogits = (softmax - onehot) / n.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    n, n_classes = logits.shape
    if targets.shape != (n,):
        raise ValueError(f"expected {n} targets, got shape {targets.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= n_classes):
        raise ValueError(f"class index out of range 0..{n_classes - 1}")

    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    probs = exp / total
    log_probs = shifted - np.log(total)
    loss = float(-log_probs[np.arange(n), targets].mean())

    dlogits = probs.copy()
    dlogits[np.arange(n), targets] -= 1.0
    dlogits /= n
    return loss, dlogits


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            lr=lr,
        )


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """One in-place Adam update with bias correction."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads, and state must have matching lengths")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")

    state.t += 1
    bias1 = 1.0 - state.beta1**state.t
    bias2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    return params, state


def embedding_forward(
    variant: Variant,
    features: np.ndarray,
    graph_layer: LayerParams,
    norm_adj: NormalizedAdjacency | None = None,
    graph: GenreGraph | None = None,
    sample_k: int | None = None,
    seed: int | None = None,
) -> np.ndarray:
    """Graph-layer output rows (the embeddings) for every node."""
    if variant is Variant.GCN:
        if norm_adj is None:
            raise ValueError("GCN needs the normalized adjacency")
        return gcn_forward(norm_adj, features, graph_layer)
    if variant is Variant.SAGE:
        if graph is None or sample_k is None or seed is None:
            raise ValueError("SAGE needs graph, sample_k, and seed")
        return sage_forward(graph, features, graph_layer, sample_k, seed)
    raise ValueError(f"variant {variant} has no graph layer")


def embedding_loss_and_grads(
    variant: Variant,
    features: np.ndarray,
    targets: np.ndarray,
    graph_layer: LayerParams,
    head: LayerParams,
    norm_adj: NormalizedAdjacency | None = None,
    graph: GenreGraph | None = None,
    sample_k: int | None = None,
    seed: int | None = None,
) -> tuple[float, list[np.ndarray]]:
    """Loss and exact gradients for the graph layer plus linear head.

    GCN aggregates through norm_adj; SAGE concatenates each node's feature
    with its sampled-neighbor mean (the sample stays fixed through the
    backward pass). Gradients come back as [dWg, dbg, dWh, dbh].
    """
    features = np.asarray(features, dtype=np.float64)
    if variant is Variant.GCN:
        if norm_adj is None:
            raise ValueError("GCN needs the normalized adjacency")
        block = norm_adj.apply(features)
    elif variant is Variant.SAGE:
        if graph is None or sample_k is None or seed is None:
            raise ValueError("SAGE needs graph, sample_k, and seed")
        means = sampled_neighbor_means(graph, features, sample_k, seed)
        block = np.hstack([features, means])
    else:
        raise ValueError(f"no graph layer to train for variant {variant}")

    z1 = block @ graph_layer.weight + graph_layer.bias
    hidden = _relu(z1)
    logits = hidden @ head.weight + head.bias
    loss, dlogits = softmax_cross_entropy(logits, targets)

    d_wh = hidden.T @ dlogits
    d_bh = dlogits.sum(axis=0)
    d_hidden = dlogits @ head.weight.T
    d_z1 = d_hidden * (z1 > 0)
    d_wg = block.T @ d_z1
    d_bg = d_z1.sum(axis=0)
    return loss, [d_wg, d_bg, d_wh, d_bh]


def mlp_loss_and_grads(
    inputs: np.ndarray, targets: np.ndarray, mlp: list[LayerParams]
) -> tuple[float, list[np.ndarray]]:
    """Loss and exact gradients for the three-layer classifier.

    Gradients come back as [dW1, db1, dW2, db2, dW3, db3].
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    pre_acts = []
    activations = [inputs]
    hidden = inputs
    for layer in mlp[:-1]:
        z = hidden @ layer.weight + layer.bias
        pre_acts.append(z)
        hidden = _relu(z)
        activations.append(hidden)
    logits = hidden @ mlp[-1].weight + mlp[-1].bias
    loss, dlogits = softmax_cross_entropy(logits, targets)

    grads: list[np.ndarray] = []
    delta = dlogits
    for i in range(len(mlp) - 1, -1, -1):
        grads.insert(0, delta.sum(axis=0))
        grads.insert(0, activations[i].T @ delta)
        if i > 0:
            delta = (delta @ mlp[i].weight.T) * (pre_acts[i - 1] > 0)
    return loss, grads
