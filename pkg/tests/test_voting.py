"""Voting-block tests: double-loop oracles, residual identity, equivariance."""

import numpy as np
import pytest

from crossgraph.autodiff import (
    ParameterStore,
    Tape,
    finite_diff_check,
    mean_rows,
    sum_all,
)
from crossgraph.voting import (
    FeatureMap,
    cvm_forward,
    init_cvm_weights,
    nonlocal_aggregate,
    residual_update,
    voting_weights,
)


def relu(x):
    return np.maximum(x, 0.0)


def project_np(x, p, wname, bname):
    return relu(x @ p[wname] + p[bname])


def aggregate_oracle(x, p):
    """Naive O(P^2) double loop for the gather step."""
    proj = project_np(x, p, "c.affinity_w", "c.affinity_b")
    vals = project_np(x, p, "c.value_w", "c.value_b")
    n = x.shape[0]
    out = np.zeros_like(vals)
    for i in range(n):
        for j in range(n):
            out[i] += (proj[i] @ proj[j]) * vals[j]
    return out / n


def votes_oracle(x, p):
    """Score every ordered pair then softmax per target row."""
    n = x.shape[0]
    scores = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            h = relu(np.concatenate([x[i], x[j]])[None, :] @ p["c.pair_w"]
                     + p["c.pair_b"])
            scores[i, j] = (h @ p["c.vote_score"])[0, 0]
    e = np.exp(scores - scores.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


@pytest.fixture
def setup():
    rng = np.random.default_rng(23)
    store = ParameterStore()
    w = init_cvm_weights(store, "c", 3, rng)
    return rng, store, w


class TestAggregate:
    def test_single_position_self_vote(self, setup):
        rng, store, w = setup
        x = rng.normal(size=(1, 3))
        t = Tape()
        out = nonlocal_aggregate(t, store, w, FeatureMap(values=t.constant(x)))
        p = store.params
        proj = project_np(x, p, "c.affinity_w", "c.affinity_b")
        vals = project_np(x, p, "c.value_w", "c.value_b")
        np.testing.assert_allclose(out.values.data, (proj[0] @ proj[0]) * vals,
                                   atol=1e-12)

    def test_zero_value_projection_zero_output(self, setup):
        rng, store, w = setup
        store.params["c.value_w"][...] = 0.0
        t = Tape()
        out = nonlocal_aggregate(
            t, store, w, FeatureMap(values=t.constant(rng.normal(size=(4, 3)))))
        assert np.array_equal(out.values.data, np.zeros((4, 3)))

    def test_matches_double_loop_oracle(self, setup):
        rng, store, w = setup
        x = rng.normal(size=(5, 3))
        t = Tape()
        out = nonlocal_aggregate(t, store, w, FeatureMap(values=t.constant(x)))
        np.testing.assert_allclose(out.values.data,
                                   aggregate_oracle(x, store.params), atol=1e-10)


class TestVotingWeights:
    def test_constant_map_uniform(self, setup):
        _, store, w = setup
        x = np.full((4, 3), 0.7)
        t = Tape()
        votes = voting_weights(t, store, w, FeatureMap(values=t.constant(x)))
        np.testing.assert_allclose(votes.data, np.full((4, 4), 0.25), atol=1e-12)

    def test_single_position(self, setup):
        rng, store, w = setup
        t = Tape()
        votes = voting_weights(
            t, store, w, FeatureMap(values=t.constant(rng.normal(size=(1, 3)))))
        np.testing.assert_allclose(votes.data, [[1.0]])

    def test_matches_score_then_softmax_oracle(self, setup):
        rng, store, w = setup
        x = rng.normal(size=(4, 3))
        t = Tape()
        votes = voting_weights(t, store, w, FeatureMap(values=t.constant(x)))
        np.testing.assert_allclose(votes.data, votes_oracle(x, store.params),
                                   atol=1e-10)

    @pytest.mark.parametrize("seed", range(10))
    def test_rows_stochastic(self, setup, seed):
        _, store, w = setup
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(5, 3)) * 3
        t = Tape()
        votes = voting_weights(t, store, w, FeatureMap(values=t.constant(x)))
        np.testing.assert_allclose(votes.data.sum(axis=1), np.ones(5), atol=1e-10)
        assert np.all(votes.data > 0)


class TestResidualUpdate:
    def test_zero_projection_is_exact_identity(self, setup):
        rng, store, w = setup
        store.params["c.vote_out"][...] = 0.0
        x = rng.normal(size=(4, 3))
        t = Tape()
        fx = FeatureMap(values=t.constant(x))
        out = cvm_forward(t, store, w, fx)
        assert np.array_equal(out.values.data, x)

    def test_single_position_update(self, setup):
        rng, store, w = setup
        x, y = rng.normal(size=(1, 3)), rng.normal(size=(1, 3))
        t = Tape()
        out = residual_update(t, store, w, FeatureMap(values=t.constant(x)),
                              FeatureMap(values=t.constant(y)),
                              t.constant([[1.0]]))
        np.testing.assert_allclose(out.values.data,
                                   y @ store.params["c.vote_out"] + x, atol=1e-12)

    def test_matches_aggregate_project_add_oracle(self, setup):
        rng, store, w = setup
        x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
        votes = np.abs(rng.normal(size=(4, 4)))
        votes /= votes.sum(axis=1, keepdims=True)
        t = Tape()
        out = residual_update(t, store, w, FeatureMap(values=t.constant(x)),
                              FeatureMap(values=t.constant(y)),
                              t.constant(votes))
        ref = votes @ y @ store.params["c.vote_out"] + x
        np.testing.assert_allclose(out.values.data, ref, atol=1e-10)

    def test_self_mode_ignores_votes(self, setup):
        rng, store, w = setup
        x, y = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        votes = np.full((3, 3), 1.0 / 3.0)
        t = Tape()
        out = residual_update(t, store, w, FeatureMap(values=t.constant(x)),
                              FeatureMap(values=t.constant(y)),
                              t.constant(votes), mode="self")
        np.testing.assert_allclose(out.values.data,
                                   y @ store.params["c.vote_out"] + x, atol=1e-12)


class TestFullBlock:
    def test_zero_weights_identity(self, setup):
        rng, store, w = setup
        for name in store.names():
            store.params[name][...] = 0.0
        x = rng.normal(size=(4, 3))
        t = Tape()
        out = cvm_forward(t, store, w, FeatureMap(values=t.constant(x)))
        assert np.array_equal(out.values.data, x)

    def test_constant_input_constant_output(self, setup):
        _, store, w = setup
        x = np.full((4, 3), 1.3)
        t = Tape()
        out = cvm_forward(t, store, w, FeatureMap(values=t.constant(x)))
        np.testing.assert_allclose(out.values.data, np.tile(out.values.data[0], (4, 1)),
                                   atol=1e-12)

    def test_matches_chained_oracles(self, setup):
        rng, store, w = setup
        x = rng.normal(size=(4, 3))
        t = Tape()
        out = cvm_forward(t, store, w, FeatureMap(values=t.constant(x)))
        p = store.params
        ref = votes_oracle(x, p) @ aggregate_oracle(x, p) @ p["c.vote_out"] + x
        np.testing.assert_allclose(out.values.data, ref, atol=1e-10)

    def test_permutation_equivariance(self, setup):
        rng, store, w = setup
        x = rng.normal(size=(5, 3))
        perm = rng.permutation(5)

        def run(a):
            t = Tape()
            return cvm_forward(t, store, w, FeatureMap(values=t.constant(a))).values.data

        np.testing.assert_allclose(run(x[perm]), run(x)[perm], atol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_gradients(self, seed):
        rng = np.random.default_rng(seed)
        store = ParameterStore()
        w = init_cvm_weights(store, "c", 3, rng)
        x = rng.normal(size=(4, 3))

        def build():
            t = Tape()
            out = cvm_forward(t, store, w, FeatureMap(values=t.constant(x)))
            return t, sum_all(mean_rows(out.values))

        assert finite_diff_check(build, store, step=1e-6) <= 1e-4
