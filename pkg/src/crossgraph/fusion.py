"""Adaptive fusion of the two guided representations.

A two-way softmax over learned relevance scores yields modality weights
(w_o, w_q) that convexly combine the vision-guided and question-guided
outputs before a final linear map.
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
    concat_rows,
    gather_rows,
    init_mlp,
    matmul,
    mlp_apply,
    scale,
    softmax,
)
from .graphs import GuidedRepresentation


@dataclass(frozen=True)
class ParserWeights:
    """Parameter names for the fusion parser."""

    merge_vision: str    # 2d x d, applied to [pooled objects, pooled answer]
    merge_question: str  # 2d x d, applied to [pooled query, pooled answer]
    score_vision: MlpSpec    # d -> 1
    score_question: MlpSpec  # d -> 1
    out_w: str           # d x d output map F
    out_b: str           # 1 x d


@dataclass
class ModalityWeights:
    """Convex pair (w_o, w_q); kept on tape so gradients flow through Eq.-style scores."""

    w_o: Tensor  # 1x1
    w_q: Tensor  # 1x1


def init_parser_weights(store: ParameterStore, prefix: str, d: int, rng,
                        activation: str = "relu") -> ParserWeights:
    s = 1.0 / np.sqrt(2 * d)
    store.add(f"{prefix}.merge_vision", rng.normal(0.0, s, size=(2 * d, d)))
    store.add(f"{prefix}.merge_question", rng.normal(0.0, s, size=(2 * d, d)))
    score_v = init_mlp(store, f"{prefix}.score_vision", [d, d, 1], rng, activation)
    score_q = init_mlp(store, f"{prefix}.score_question", [d, d, 1], rng, activation)
    store.add(f"{prefix}.out_w", rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, d)))
    store.add(f"{prefix}.out_b", np.zeros((1, d)))
    return ParserWeights(
        merge_vision=f"{prefix}.merge_vision",
        merge_question=f"{prefix}.merge_question",
        score_vision=score_v, score_question=score_q,
        out_w=f"{prefix}.out_w", out_b=f"{prefix}.out_b")


def modality_weights(tape: Tape, store: ParameterStore, w: ParserWeights,
                     x_obj_pooled: Tensor, x_query_pooled: Tensor,
                     x_ans_pooled: Tensor) -> ModalityWeights:
    """Score each modality from pooled raw features; two-way softmax."""
    for name, t in (("objects", x_obj_pooled), ("query", x_query_pooled),
                    ("answer", x_ans_pooled)):
        if t.shape[0] != 1:
            raise ShapeError(f"pooled {name} feature must be 1xd, got {t.shape}")
    s_v = mlp_apply(tape, store,
                    matmul(concat(x_obj_pooled, x_ans_pooled),
                           store.use(tape, w.merge_vision)),
                    w.score_vision)
    s_q = mlp_apply(tape, store,
                    matmul(concat(x_query_pooled, x_ans_pooled),
                           store.use(tape, w.merge_question)),
                    w.score_question)
    pair = softmax(concat_rows(s_v, s_q), mode="global")  # 2x1
    mw = ModalityWeights(w_o=gather_rows(pair, [0]), w_q=gather_rows(pair, [1]))
    if __debug__:
        assert abs(mw.w_o.item() + mw.w_q.item() - 1.0) <= 1e-12
        assert mw.w_o.item() > 0 and mw.w_q.item() > 0
    return mw


def parse(tape: Tape, store: ParameterStore, w: ParserWeights,
          y_v: GuidedRepresentation, y_q: GuidedRepresentation,
          mw: ModalityWeights) -> Tensor:
    """F(w_o * Y_v + w_q * Y_q): convex combination then linear map."""
    if y_v.values.shape != y_q.values.shape:
        raise ShapeError(
            f"parse: guided shapes differ, {y_v.values.shape} vs {y_q.values.shape}")
    mixed = add(scale(mw.w_o, y_v.values), scale(mw.w_q, y_q.values))
    return _output_map(tape, store, w, mixed)


def parse_single(tape: Tape, store: ParameterStore, w: ParserWeights,
                 y: Tensor) -> Tensor:
    """Degenerate parse with one modality forced to weight 1 (ablations)."""
    return _output_map(tape, store, w, y)


def _output_map(tape: Tape, store: ParameterStore, w: ParserWeights,
                x: Tensor) -> Tensor:
    return add(matmul(x, store.use(tape, w.out_w)), store.use(tape, w.out_b))
