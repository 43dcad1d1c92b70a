"""Cross-domain graph reasoning between a source node set and answer words.

Two instantiations share this code: the vision-to-answer graph (VAHG, object
features as sources) and the question-to-answer graph (QAHG, question word
embeddings as sources). Parameters are never shared between the two; each
gets its own `GraphModuleWeights`.

Pipeline per candidate answer: cross-domain adjacency -> graph reasoning ->
word-level attention over the answer -> middle fusion -> guided output (BxD).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    MlpSpec,
    ParameterStore,
    ShapeError,
    Tape,
    Tensor,
    add,
    concat,
    init_mlp,
    matmul,
    mlp_apply,
    mul,
    nonlinearity,
    softmax,
    transpose,
)

ADJACENCY_MODES = ("global", "row")


@dataclass
class HeterogeneousAdjacency:
    """Cross-domain weight matrix, SRC x B, strictly positive.

    `global` mode normalizes over all entries (sums to 1); `row` mode
    normalizes each source row to 1.
    """

    weights: Tensor
    mode: str


@dataclass(frozen=True)
class GraphModuleWeights:
    """Parameter names for one graph module instance."""

    prefix: str
    reason: str          # d x d, used in the reasoning step
    encoder: MlpSpec     # F: d -> d answer encoder
    attn: str            # d x 1 word-scoring vector
    fuse: MlpSpec        # f: 2d -> d middle fusion
    map_src: str         # d x d evolved-side mapping
    map_mid: str         # d x d middle-side mapping
    senior: str          # d x d post-combination mapping
    guide_inner: MlpSpec  # phi: d -> d
    guide_outer: MlpSpec  # psi: d -> d


@dataclass
class GuidedRepresentation:
    """B x d output steering answer selection; source is 'vision' or 'question'."""

    values: Tensor
    source: str


def init_graph_weights(store: ParameterStore, prefix: str, d: int, rng,
                       activation: str = "relu") -> GraphModuleWeights:
    s = 1.0 / np.sqrt(d)
    store.add(f"{prefix}.reason", rng.normal(0.0, s, size=(d, d)))
    encoder = init_mlp(store, f"{prefix}.encoder", [d, d, d], rng, activation)
    store.add(f"{prefix}.attn", rng.normal(0.0, s, size=(d, 1)))
    fuse = init_mlp(store, f"{prefix}.fuse", [2 * d, d, d], rng, activation)
    store.add(f"{prefix}.map_src", rng.normal(0.0, s, size=(d, d)))
    store.add(f"{prefix}.map_mid", rng.normal(0.0, s, size=(d, d)))
    store.add(f"{prefix}.senior", rng.normal(0.0, s, size=(d, d)))
    guide_inner = init_mlp(store, f"{prefix}.guide_inner", [d, d, d], rng, activation)
    guide_outer = init_mlp(store, f"{prefix}.guide_outer", [d, d, d], rng, activation)
    return GraphModuleWeights(
        prefix=prefix, reason=f"{prefix}.reason", encoder=encoder,
        attn=f"{prefix}.attn", fuse=fuse, map_src=f"{prefix}.map_src",
        map_mid=f"{prefix}.map_mid", senior=f"{prefix}.senior",
        guide_inner=guide_inner, guide_outer=guide_outer)


def compute_adjacency(tape: Tape, x_src: Tensor, x_ans: Tensor,
                      mode: str = "global") -> HeterogeneousAdjacency:
    """Pairwise inner products of source and answer nodes, softmax-normalized.

    Entry (i, j) weights source node i against answer word j. Default mode
    normalizes over the whole matrix; `row` normalizes per source node.
    """
    if mode not in ADJACENCY_MODES:
        raise ValueError(f"unknown adjacency mode {mode!r}")
    if x_src.shape[1] != x_ans.shape[1]:
        raise ShapeError(
            f"adjacency: feature dims differ, {x_src.shape} vs {x_ans.shape}")
    raw = matmul(x_src, transpose(x_ans))
    weights = softmax(raw, mode="global" if mode == "global" else "per-row")
    if __debug__:
        total = weights.data.sum() if mode == "global" else weights.data.sum(axis=1)
        assert np.allclose(total, 1.0, atol=1e-10)
        assert np.all(weights.data > 0)
    return HeterogeneousAdjacency(weights=weights, mode=mode)


def graph_reason(tape: Tape, adj: HeterogeneousAdjacency, x_src: Tensor,
                 w_reason: Tensor, activation: str = "relu") -> Tensor:
    """Evolve answer-side features by propagating source features along the
    adjacency: act(A^T . X_src . W)."""
    if adj.weights.shape[0] != x_src.shape[0]:
        raise ShapeError(
            f"graph_reason: adjacency {adj.weights.shape} does not match "
            f"sources {x_src.shape}")
    return nonlinearity(matmul(matmul(transpose(adj.weights), x_src), w_reason),
                        activation)


def word_attention(tape: Tape, store: ParameterStore, x_ans: Tensor,
                   w: GraphModuleWeights) -> Tensor:
    """Encode answer words and rescale each by a softmax attention value."""
    encoded = mlp_apply(tape, store, x_ans, w.encoder)
    scores = matmul(encoded, store.use(tape, w.attn))   # B x 1
    attn = softmax(scores, mode="global")               # over the B words
    return mul(encoded, attn)


def middle_fuse(tape: Tape, store: ParameterStore, x_m: Tensor,
                y_evolved: Tensor, w: GraphModuleWeights) -> Tensor:
    """Fuse attention-enhanced words with the evolved representation."""
    if x_m.shape != y_evolved.shape:
        raise ShapeError(
            f"middle_fuse: shapes differ, {x_m.shape} vs {y_evolved.shape}")
    return mlp_apply(tape, store, concat(x_m, y_evolved), w.fuse)


def guide(tape: Tape, store: ParameterStore, y_evolved: Tensor,
          x_middle: Tensor, w: GraphModuleWeights, source: str) -> GuidedRepresentation:
    """Map both streams into a common space and produce the guided output:
    psi(phi(Y.W_src + X_mid.W_mid) . W_senior)."""
    if y_evolved.shape != x_middle.shape:
        raise ShapeError(
            f"guide: shapes differ, {y_evolved.shape} vs {x_middle.shape}")
    combined = add(matmul(y_evolved, store.use(tape, w.map_src)),
                   matmul(x_middle, store.use(tape, w.map_mid)))
    inner = mlp_apply(tape, store, combined, w.guide_inner)
    out = mlp_apply(tape, store, matmul(inner, store.use(tape, w.senior)),
                    w.guide_outer)
    return GuidedRepresentation(values=out, source=source)


def guided_forward(tape: Tape, store: ParameterStore, w: GraphModuleWeights,
                   x_src: Tensor, x_ans: Tensor, source: str,
                   mode: str = "global", activation: str = "relu",
                   ) -> tuple[GuidedRepresentation, HeterogeneousAdjacency]:
    """Full module: adjacency, reasoning, word attention, fusion, guidance."""
    adj = compute_adjacency(tape, x_src, x_ans, mode)
    y_evolved = graph_reason(tape, adj, x_src, store.use(tape, w.reason), activation)
    x_m = word_attention(tape, store, x_ans, w)
    x_middle = middle_fuse(tape, store, x_m, y_evolved, w)
    return guide(tape, store, y_evolved, x_middle, w, source), adj


def vahg_forward(tape: Tape, store: ParameterStore, w: GraphModuleWeights,
                 x_obj: Tensor, x_ans: Tensor, mode: str = "global",
                 activation: str = "relu"):
    """Vision-to-answer graph: object features drive the answer words."""
    return guided_forward(tape, store, w, x_obj, x_ans, "vision", mode, activation)


def qahg_forward(tape: Tape, store: ParameterStore, w: GraphModuleWeights,
                 x_query: Tensor, x_ans: Tensor, mode: str = "global",
                 activation: str = "relu"):
    """Question-to-answer graph: the symmetric module with word sources."""
    return guided_forward(tape, store, w, x_query, x_ans, "question", mode, activation)
