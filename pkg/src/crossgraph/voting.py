"""Contextual voting block: all-pairs positional aggregation with learned
voting weights and a residual connection.

Gives every grid position a global receptive field: features are gathered
from all positions via projected-feature affinities, re-weighted by a
row-stochastic voting matrix, projected, and added back onto the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    ParameterStore,
    ShapeError,
    Tape,
    Tensor,
    add,
    matmul,
    nonlinearity,
    pair_concat,
    reshape,
    scale_const,
    softmax,
    transpose,
)

UPDATE_MODES = ("context", "self")


@dataclass
class FeatureMap:
    """Flattened spatial grid: P positions x C channels."""

    values: Tensor

    @property
    def positions(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CvmWeights:
    """Parameter names for the voting block."""

    affinity_w: str   # C x C projection behind the pairwise affinities
    affinity_b: str   # 1 x C
    value_w: str      # C x C projection of gathered values
    value_b: str      # 1 x C
    pair_w: str       # 2C x C projection of concatenated position pairs
    pair_b: str       # 1 x C
    vote_score: str   # C x 1 scoring vector for voting weights
    vote_out: str     # C x C output projection on the residual branch


def init_cvm_weights(store: ParameterStore, prefix: str, channels: int,
                     rng) -> CvmWeights:
    c = channels
    s = 1.0 / np.sqrt(c)
    store.add(f"{prefix}.affinity_w", rng.normal(0.0, s, size=(c, c)))
    store.add(f"{prefix}.affinity_b", np.zeros((1, c)))
    store.add(f"{prefix}.value_w", rng.normal(0.0, s, size=(c, c)))
    store.add(f"{prefix}.value_b", np.zeros((1, c)))
    store.add(f"{prefix}.pair_w", rng.normal(0.0, 1.0 / np.sqrt(2 * c), size=(2 * c, c)))
    store.add(f"{prefix}.pair_b", np.zeros((1, c)))
    store.add(f"{prefix}.vote_score", rng.normal(0.0, s, size=(c, 1)))
    store.add(f"{prefix}.vote_out", rng.normal(0.0, s, size=(c, c)))
    return CvmWeights(
        affinity_w=f"{prefix}.affinity_w", affinity_b=f"{prefix}.affinity_b",
        value_w=f"{prefix}.value_w", value_b=f"{prefix}.value_b",
        pair_w=f"{prefix}.pair_w", pair_b=f"{prefix}.pair_b",
        vote_score=f"{prefix}.vote_score", vote_out=f"{prefix}.vote_out")


def _project(tape, store, x, wname, bname, activation="relu"):
    return nonlinearity(add(matmul(x, store.use(tape, wname)),
                            store.use(tape, bname)), activation)


def nonlocal_aggregate(tape: Tape, store: ParameterStore, w: CvmWeights,
                       fm: FeatureMap) -> FeatureMap:
    """y_i = (1/P) sum_j <proj(x_i), proj(x_j)> value(x_j); shape preserved."""
    x = fm.values
    proj = _project(tape, store, x, w.affinity_w, w.affinity_b)   # P x C
    vals = _project(tape, store, x, w.value_w, w.value_b)         # P x C
    pooled = matmul(matmul(proj, transpose(proj)), vals)          # P x C
    return FeatureMap(values=scale_const(pooled, 1.0 / fm.positions))


def voting_weights(tape: Tape, store: ParameterStore, w: CvmWeights,
                   fm: FeatureMap) -> Tensor:
    """Row-stochastic P x P matrix; entry (i, j) is the vote of position j
    toward position i."""
    x = fm.values
    p = fm.positions
    pairs = pair_concat(x)                                        # P^2 x 2C
    hidden = _project(tape, store, pairs, w.pair_w, w.pair_b)     # P^2 x C
    scores = matmul(hidden, store.use(tape, w.vote_score))        # P^2 x 1
    votes = softmax(reshape(scores, p, p), mode="per-row")
    if __debug__:
        assert np.allclose(votes.data.sum(axis=1), 1.0, atol=1e-10)
    return votes


def residual_update(tape: Tape, store: ParameterStore, w: CvmWeights,
                    fm_x: FeatureMap, fm_y: FeatureMap, votes: Tensor,
                    mode: str = "context") -> FeatureMap:
    """Aggregate gathered features under the voting weights, project, and add
    the input back.

    `context` (default) reads the votes as gathering over source positions j;
    `self` keeps each position's own feature (with row-stochastic votes the
    vote matrix then cancels).
    """
    if mode not in UPDATE_MODES:
        raise ValueError(f"unknown residual update mode {mode!r}")
    if fm_x.values.shape != fm_y.values.shape:
        raise ShapeError(
            f"residual_update: shapes differ, {fm_x.values.shape} vs "
            f"{fm_y.values.shape}")
    if mode == "context":
        gathered = matmul(votes, fm_y.values)
    else:
        gathered = fm_y.values
    out = add(matmul(gathered, store.use(tape, w.vote_out)), fm_x.values)
    return FeatureMap(values=out)


def cvm_forward(tape: Tape, store: ParameterStore, w: CvmWeights,
                fm: FeatureMap, mode: str = "context") -> FeatureMap:
    """Full voting block; output has the input's shape."""
    y = nonlocal_aggregate(tape, store, w, fm)
    votes = voting_weights(tape, store, w, fm)
    return residual_update(tape, store, w, fm, y, votes, mode)
