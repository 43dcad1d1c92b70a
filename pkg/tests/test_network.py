"""End-to-end model tests: pooling oracle, candidate symmetry, full-model
gradient checks at the tiny configuration, ablation typing."""

import numpy as np
import pytest

from crossgraph.autodiff import DomainError, ParameterStore, Tape, finite_diff_check
from crossgraph.network import (
    ForwardTrace,
    ModelConfig,
    embed,
    forward,
    init_model_weights,
    loss,
    score_candidate,
)
from crossgraph.synthdata import GeneratorConfig, Instance, generate
from crossgraph.voting import FeatureMap, cvm_forward


def tiny_instance(rng, positions=4, channels=5, vocab=10, n_obj=2, m=3,
                  blens=(2, 3, 1, 2), gold=1, task="answer"):
    scene = np.round(rng.normal(size=(positions, channels)), 6)
    boxes = [[int(c)] for c in rng.choice(positions, size=n_obj, replace=False)]
    question = [int(t) for t in rng.integers(0, vocab, size=m)]
    candidates = [[int(t) for t in rng.integers(0, vocab, size=b)] for b in blens]
    return Instance(scene=scene, boxes=boxes, question=question,
                    candidates=candidates, gold=gold, task=task)


def tiny_model(seed=0, **overrides):
    cfg = ModelConfig(feature_dim=4, vocab_size=10, channels=5, **overrides)
    store = ParameterStore()
    weights = init_model_weights(store, cfg, seed=seed)
    return cfg, store, weights


class TestEmbed:
    def test_zero_embedding_table_zero_language_features(self):
        cfg, store, mw = tiny_model()
        store.params["embed.tokens"][...] = 0.0
        inst = tiny_instance(np.random.default_rng(0))
        t = Tape()
        _, x_query, x_answers = embed(t, store, mw, inst, cfg)
        assert np.array_equal(x_query.data, np.zeros((3, 4)))
        for xa in x_answers:
            assert not xa.data.any()

    def test_single_cell_box_is_projected_cell(self):
        cfg, store, mw = tiny_model()
        inst = tiny_instance(np.random.default_rng(1), n_obj=1)
        t = Tape()
        x_obj, _, _ = embed(t, store, mw, inst, cfg)
        grid = cvm_forward(t, store, mw.cvm,
                           FeatureMap(values=t.constant(inst.scene))).values
        cell = inst.boxes[0][0]
        ref = grid.data[cell][None, :] @ store.params["embed.objects"]
        np.testing.assert_allclose(x_obj.data, ref, atol=1e-12)

    def test_matches_pool_then_project_oracle(self):
        cfg, store, mw = tiny_model(use_cvm=False)
        rng = np.random.default_rng(2)
        inst = tiny_instance(rng)
        inst.boxes = [[0, 2], [1, 3]]
        t = Tape()
        x_obj, x_query, _ = embed(t, store, mw, inst, cfg)
        for i, box in enumerate(inst.boxes):
            ref = inst.scene[box].mean(axis=0) @ store.params["embed.objects"]
            np.testing.assert_allclose(x_obj.data[i], ref, atol=1e-12)
        np.testing.assert_allclose(
            x_query.data, store.params["embed.tokens"][inst.question], atol=1e-14)

    def test_token_out_of_range(self):
        cfg, store, mw = tiny_model()
        inst = tiny_instance(np.random.default_rng(3))
        inst.question = [0, 99]
        t = Tape()
        with pytest.raises(DomainError, match="99"):
            embed(t, store, mw, inst, cfg)


class TestScoring:
    def test_zero_weights_zero_logits(self):
        cfg, store, mw = tiny_model()
        for name in store.names():
            store.params[name][...] = 0.0
        inst = tiny_instance(np.random.default_rng(4))
        t = Tape()
        pred = forward(t, store, mw, inst, cfg)
        assert np.array_equal(pred.logits.data, np.zeros((4, 1)))
        np.testing.assert_allclose(pred.probabilities, np.full(4, 0.25))

    def test_identical_candidates_identical_logits(self):
        cfg, store, mw = tiny_model(seed=5)
        rng = np.random.default_rng(5)
        inst = tiny_instance(rng, blens=(3, 3, 3, 3))
        inst.candidates = [list(inst.candidates[0])] * 4
        t = Tape()
        pred = forward(t, store, mw, inst, cfg)
        assert len({v.tobytes() for v in pred.logits.data}) == 1
        np.testing.assert_allclose(pred.probabilities, np.full(4, 0.25),
                                   atol=1e-12)
        assert pred.chosen == 0

    def test_score_matches_hand_chained_modules(self):
        from crossgraph.autodiff import mean_rows
        from crossgraph.fusion import modality_weights, parse
        from crossgraph.graphs import qahg_forward, vahg_forward

        cfg, store, mw = tiny_model(seed=6)
        inst = tiny_instance(np.random.default_rng(6))
        t = Tape()
        x_obj, x_query, x_answers = embed(t, store, mw, inst, cfg)
        got = score_candidate(t, store, mw, x_obj, x_query, x_answers[2], cfg)

        y_v, _ = vahg_forward(t, store, mw.vahg, x_obj, x_answers[2])
        y_q, _ = qahg_forward(t, store, mw.qahg, x_query, x_answers[2])
        wts = modality_weights(t, store, mw.parser, mean_rows(x_obj),
                               mean_rows(x_query), mean_rows(x_answers[2]))
        merged = parse(t, store, mw.parser, y_v, y_q, wts)
        ref = (mean_rows(merged).data @ store.params["head.w"]
               + store.params["head.b"])
        np.testing.assert_allclose(got.data, ref, atol=1e-12)

    def test_candidate_permutation_equivariance(self):
        cfg, store, mw = tiny_model(seed=7)
        rng = np.random.default_rng(7)
        inst = tiny_instance(rng)
        t = Tape()
        base = forward(t, store, mw, inst, cfg)
        perm = [2, 0, 3, 1]
        permuted = Instance(scene=inst.scene, boxes=inst.boxes,
                            question=inst.question,
                            candidates=[inst.candidates[k] for k in perm],
                            gold=perm.index(inst.gold), task=inst.task)
        t2 = Tape()
        out = forward(t2, store, mw, permuted, cfg)
        np.testing.assert_allclose(out.logits.data,
                                   base.logits.data[perm], atol=1e-12)
        assert out.probabilities.argmax() == perm.index(base.chosen) or \
            np.isclose(out.probabilities.max(),
                       out.probabilities[perm.index(base.chosen)])

    def test_probability_shift_invariance(self):
        cfg, store, mw = tiny_model(seed=8)
        inst = tiny_instance(np.random.default_rng(8))
        t = Tape()
        pred = forward(t, store, mw, inst, cfg)
        from crossgraph.autodiff import softmax
        t2 = Tape()
        shifted = softmax(t2.constant(pred.logits.data + 13.7), mode="global")
        np.testing.assert_allclose(shifted.data[:, 0], pred.probabilities,
                                   atol=1e-12)

    def test_probabilities_sum_to_one(self):
        cfg, store, mw = tiny_model(seed=9)
        for seed in range(10):
            inst = tiny_instance(np.random.default_rng(seed))
            t = Tape()
            pred = forward(t, store, mw, inst, cfg)
            assert abs(pred.probabilities.sum() - 1.0) <= 1e-12


class TestLoss:
    def test_uniform_probabilities_ln4(self):
        cfg, store, mw = tiny_model()
        for name in store.names():
            store.params[name][...] = 0.0
        inst = tiny_instance(np.random.default_rng(10))
        t = Tape()
        pred = forward(t, store, mw, inst, cfg)
        assert abs(loss(t, pred, 2).item() - np.log(4.0)) <= 1e-12

    def test_confident_correct_low_loss(self):
        t = Tape()
        from crossgraph.network import Prediction
        logits = t.constant([[50.0], [0.0], [0.0], [0.0]])
        pred = Prediction(logits=logits, probabilities=np.array([1, 0, 0, 0.0]),
                          chosen=0)
        assert loss(t, pred, 0).item() <= 1e-12

    def test_matches_log_sum_exp_oracle(self):
        rng = np.random.default_rng(11)
        raw = rng.normal(size=4) * 3
        t = Tape()
        from crossgraph.network import Prediction
        pred = Prediction(logits=t.constant(raw.reshape(4, 1)),
                          probabilities=np.exp(raw) / np.exp(raw).sum(),
                          chosen=int(raw.argmax()))
        got = loss(t, pred, 1).item()
        ref = np.log(np.exp(raw).sum()) - raw[1]
        assert abs(got - ref) <= 1e-12

    def test_gold_out_of_range(self):
        cfg, store, mw = tiny_model()
        inst = tiny_instance(np.random.default_rng(12))
        t = Tape()
        pred = forward(t, store, mw, inst, cfg)
        with pytest.raises(DomainError):
            loss(t, pred, 4)


ABLATIONS = [
    dict(),
    dict(use_vahg=False),
    dict(use_qahg=False),
    dict(use_cvm=False),
    dict(use_vahg=False, use_qahg=False),
    dict(use_vahg=False, use_qahg=False, use_cvm=False),
]


@pytest.mark.parametrize("flags", ABLATIONS)
def test_full_model_gradients_tiny_config(flags):
    # N=2, M=3, B<=3, d=4, P=4 as in the gradient acceptance criterion
    cfg, store, mw = tiny_model(seed=13, **flags)
    inst = tiny_instance(np.random.default_rng(13), blens=(2, 3, 1, 3))

    def build():
        t = Tape()
        pred = forward(t, store, mw, inst, cfg)
        return t, loss(t, pred, inst.gold)

    err = finite_diff_check(build, store, step=1e-5, max_coords_per_param=4,
                            rng=np.random.default_rng(99))
    assert err <= 1e-4


def test_trace_collects_adjacency_and_votes():
    cfg, store, mw = tiny_model(seed=14)
    inst = tiny_instance(np.random.default_rng(14))
    t = Tape()
    trace = ForwardTrace()
    forward(t, store, mw, inst, cfg, trace=trace)
    assert len(trace.vahg_adjacency) == 4
    assert len(trace.qahg_adjacency) == 4
    assert trace.voting.shape == (4, 4)
    assert len(trace.modality) == 4
    for adj in trace.vahg_adjacency:
        assert adj.shape == (2, len(inst.candidates[0])) or adj.shape[0] == 2
    for w_o, w_q in trace.modality:
        assert abs(w_o + w_q - 1.0) <= 1e-12


def test_model_config_from_dataset_meta():
    gen = GeneratorConfig(num_scenes=2, seed=0)
    ds = generate(gen)
    cfg = ModelConfig.for_dataset(ds.meta, feature_dim=8)
    assert cfg.vocab_size == gen.vocab_size
    assert cfg.channels == gen.channels
    assert cfg.feature_dim == 8
    store = ParameterStore()
    mw = init_model_weights(store, cfg, seed=1)
    t = Tape()
    pred = forward(t, store, mw, ds.instances[0], cfg)
    assert pred.logits.shape == (4, 1)
