"""End-to-end model: embed a synthetic instance, run the voting block and
both cross-domain graphs per candidate, fuse, and score the four choices.

Ablation switches disable whole modules: with one graph off the parser is
forced to the remaining modality (never a renormalized learned pair); with
both graphs off the candidate's raw embedding feeds the output map, giving a
response-only baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    DomainError,
    ParameterStore,
    Tape,
    Tensor,
    add,
    cross_entropy,
    gather_rows,
    matmul,
    mean_rows,
    softmax,
    stack_rows,
)
from .fusion import (
    ParserWeights,
    init_parser_weights,
    modality_weights,
    parse,
    parse_single,
)
from .graphs import (
    GraphModuleWeights,
    init_graph_weights,
    qahg_forward,
    vahg_forward,
)
from .synthdata import Instance
from .voting import CvmWeights, FeatureMap, cvm_forward, init_cvm_weights


@dataclass
class ModelConfig:
    feature_dim: int = 32          # d, shared by all node features
    vocab_size: int = 34
    channels: int = 20             # grid channels C
    use_vahg: bool = True
    use_qahg: bool = True
    use_cvm: bool = True
    adjacency_mode: str = "global"
    activation: str = "relu"
    cvm_update: str = "context"    # residual update reading, see voting module

    @classmethod
    def for_dataset(cls, meta: dict, **overrides) -> "ModelConfig":
        gen = meta["config"]
        sizes = dict(
            vocab_size=(8 + gen["num_colors"] + gen["num_shapes"]
                        + 2 * gen["grid_size"] + gen["num_fillers"]),
            channels=gen["num_colors"] + gen["num_shapes"] + 2 * gen["grid_size"])
        sizes.update(overrides)
        return cls(**sizes)


@dataclass(frozen=True)
class ModelWeights:
    token_embedding: str           # V x d
    object_projection: str         # C x d
    cvm: CvmWeights
    vahg: GraphModuleWeights
    qahg: GraphModuleWeights
    parser: ParserWeights
    classifier_w: str              # d x 1
    classifier_b: str              # 1 x 1


@dataclass
class Prediction:
    logits: Tensor                 # 4 x 1, on tape
    probabilities: np.ndarray      # shape (4,)
    chosen: int                    # argmax, lowest index on ties


@dataclass
class ForwardTrace:
    """Inspection payload: adjacency and voting matrices from one pass."""

    vahg_adjacency: list = field(default_factory=list)   # per candidate, N x B
    qahg_adjacency: list = field(default_factory=list)   # per candidate, M x B
    voting: np.ndarray | None = None                     # P x P
    modality: list = field(default_factory=list)         # per candidate (w_o, w_q)


def init_model_weights(store: ParameterStore, cfg: ModelConfig,
                       seed: int) -> ModelWeights:
    rng = np.random.default_rng(np.random.PCG64(seed))
    d, act = cfg.feature_dim, cfg.activation
    store.add("embed.tokens",
              rng.normal(0.0, 0.3, size=(cfg.vocab_size, d)))
    store.add("embed.objects",
              rng.normal(0.0, 1.0 / np.sqrt(cfg.channels), size=(cfg.channels, d)))
    cvm = init_cvm_weights(store, "cvm", cfg.channels, rng)
    vahg = init_graph_weights(store, "vahg", d, rng, act)
    qahg = init_graph_weights(store, "qahg", d, rng, act)
    parser = init_parser_weights(store, "parser", d, rng, act)
    store.add("head.w", rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, 1)))
    store.add("head.b", np.zeros((1, 1)))
    return ModelWeights(
        token_embedding="embed.tokens", object_projection="embed.objects",
        cvm=cvm, vahg=vahg, qahg=qahg, parser=parser,
        classifier_w="head.w", classifier_b="head.b")


def _lookup(tape: Tape, store: ParameterStore, mw: ModelWeights,
            tokens: list[int], vocab: int) -> Tensor:
    bad = [t for t in tokens if not 0 <= t < vocab]
    if bad:
        raise DomainError(f"token ids {bad} outside vocabulary of size {vocab}")
    return gather_rows(store.use(tape, mw.token_embedding), tokens)


def embed(tape: Tape, store: ParameterStore, mw: ModelWeights,
          instance: Instance, cfg: ModelConfig):
    """Instance -> (object features Nxd, question Mxd, 4 answer matrices)."""
    grid = tape.constant(instance.scene)
    if cfg.use_cvm:
        grid = cvm_forward(tape, store, mw.cvm, FeatureMap(values=grid),
                           cfg.cvm_update).values
    pooled = [mean_rows(gather_rows(grid, box)) for box in instance.boxes]
    x_obj = matmul(stack_rows(pooled), store.use(tape, mw.object_projection))
    x_query = _lookup(tape, store, mw, instance.question, cfg.vocab_size)
    x_answers = [_lookup(tape, store, mw, cand, cfg.vocab_size)
                 for cand in instance.candidates]
    return x_obj, x_query, x_answers


def score_candidate(tape: Tape, store: ParameterStore, mw: ModelWeights,
                    x_obj: Tensor, x_query: Tensor, x_ans: Tensor,
                    cfg: ModelConfig, trace: ForwardTrace | None = None) -> Tensor:
    """One candidate's scalar logit (1x1)."""
    y_v = y_q = None
    if cfg.use_vahg:
        y_v, adj_v = vahg_forward(tape, store, mw.vahg, x_obj, x_ans,
                                  cfg.adjacency_mode, cfg.activation)
        if trace is not None:
            trace.vahg_adjacency.append(adj_v.weights.data)
    if cfg.use_qahg:
        y_q, adj_q = qahg_forward(tape, store, mw.qahg, x_query, x_ans,
                                  cfg.adjacency_mode, cfg.activation)
        if trace is not None:
            trace.qahg_adjacency.append(adj_q.weights.data)

    if y_v is not None and y_q is not None:
        weights = modality_weights(tape, store, mw.parser, mean_rows(x_obj),
                                   mean_rows(x_query), mean_rows(x_ans))
        if trace is not None:
            trace.modality.append((weights.w_o.item(), weights.w_q.item()))
        merged = parse(tape, store, mw.parser, y_v, y_q, weights)
    elif y_v is not None:
        if trace is not None:
            trace.modality.append((1.0, 0.0))
        merged = parse_single(tape, store, mw.parser, y_v.values)
    elif y_q is not None:
        if trace is not None:
            trace.modality.append((0.0, 1.0))
        merged = parse_single(tape, store, mw.parser, y_q.values)
    else:
        # response-only baseline: the raw candidate embedding
        merged = parse_single(tape, store, mw.parser, x_ans)
    pooled = mean_rows(merged)
    return add(matmul(pooled, store.use(tape, mw.classifier_w)),
               store.use(tape, mw.classifier_b))


def forward(tape: Tape, store: ParameterStore, mw: ModelWeights,
            instance: Instance, cfg: ModelConfig,
            trace: ForwardTrace | None = None) -> Prediction:
    x_obj, x_query, x_answers = embed(tape, store, mw, instance, cfg)
    if trace is not None and cfg.use_cvm:
        from .voting import voting_weights
        trace.voting = voting_weights(
            tape, store, mw.cvm,
            FeatureMap(values=tape.constant(instance.scene))).data
    logits = stack_rows([
        score_candidate(tape, store, mw, x_obj, x_query, x_ans, cfg, trace)
        for x_ans in x_answers])
    probs = softmax(logits, mode="global").data[:, 0].copy()
    return Prediction(logits=logits, probabilities=probs,
                      chosen=int(np.argmax(probs)))


def loss(tape: Tape, prediction: Prediction, gold: int) -> Tensor:
    """Cross-entropy against the gold choice; differentiable to all weights."""
    return cross_entropy(prediction.logits, gold)
