from dataclasses import replace

import numpy as np
import pytest

from musae.errors import TaskPreconditionError
from musae.evaluation.classification import mean_stderr, micro_f1, train_logreg
from musae.evaluation.transfer import _labels, attributed_sbm, transfer_eval, transfer_once
from musae.graph import FeatureStore, align_feature_universe
from musae.pipeline import embed
from musae.sgns import EmbeddingSet, TrainConfig

CFG = TrainConfig(dim=24, walk_length=30, walks_per_node=5, epochs=1)
TEST = 20


@pytest.fixture(scope="module")
def pair():
    src = attributed_sbm(100, 0.1, 0.01, 20, 5, 0.7, seed=1)[:2]
    tgt = attributed_sbm(100, 0.1, 0.01, 20, 5, 0.7, seed=2)[:2]
    return src, tgt


def test_attributed_sbm_structure():
    g, f, blocks = attributed_sbm(50, 0.2, 0.02, 10, 3, 1.0, seed=0)
    assert g.node_count == 100 and f.feature_count == 11
    for v in range(100):
        fs = set(f.features_of(v).tolist())
        label = int(10 in fs)
        assert label == blocks[v]  # no label noise
        own = {x for x in fs if x != 10}
        assert len(own) == 3
        assert all(x // 5 == blocks[v] for x in own)  # affinity 1 keeps features in the own half


def test_attributed_sbm_label_noise():
    _, f, blocks = attributed_sbm(200, 0.05, 0.01, 10, 2, 0.7, seed=3, label_noise=0.5)
    flipped = np.mean(_labels(f, 10) != blocks)
    assert 0.4 < flipped < 0.6


def test_transfer_beats_majority_and_keeps_h(pair):
    src, tgt = pair
    res = transfer_eval(src, tgt, TEST, CFG, seeds=range(5))
    assert res.frozen_h_intact
    assert res.majority_baseline == pytest.approx(0.5)
    assert res.mean - res.majority_baseline >= 0.1
    assert len(res.scores) == 5


def test_self_transfer_is_near_perfect(pair):
    src, _ = pair
    res = transfer_eval(src, src, TEST, CFG, seeds=range(2))
    assert res.mean >= 0.95 and res.frozen_h_intact


def test_single_transfer_is_seeded(pair):
    src, tgt = pair
    a = transfer_once(src, tgt, TEST, replace(CFG, seed=3))
    b = transfer_once(src, tgt, TEST, replace(CFG, seed=3))
    assert a == b


def test_random_feature_embeddings_give_chance(pair):
    # null check: the same protocol with an unrelated frozen H should not transfer
    src, tgt = pair
    y_src, y_tgt = _labels(src[1], TEST), _labels(tgt[1], TEST)
    scores = []
    for seed in range(10):
        cfg = replace(CFG, seed=seed)
        run = embed(src[0], src[1].without(TEST), cfg)
        model = train_logreg(run.embeddings.G, y_src, 0.01)
        H = np.random.default_rng(100 + seed).normal(size=run.embeddings.H.shape) * run.embeddings.H.std()
        rnd = EmbeddingSet(np.zeros((1, cfg.dim)), H, run.embeddings.scale_blocks)
        target = embed(tgt[0], tgt[1].without(TEST), cfg, frozen_H=rnd)
        scores.append(micro_f1(model.predict(target.embeddings.G), y_tgt))
    mean, se = mean_stderr(scores)
    assert abs(mean - 0.5) <= 3 * se + 1e-12


def test_universe_mismatch_rejected(pair):
    src, (tg, tf) = pair
    smaller = FeatureStore.from_lists([[f for f in fs if f < 5] or [0] for fs in tf.to_lists()], 5)
    with pytest.raises(TaskPreconditionError, match="universe"):
        transfer_eval(src, (tg, smaller), 0, CFG, seeds=[0])


def test_aligned_universes_are_accepted():
    a = FeatureStore.from_lists([[0], [1]], 2, ("x", "y"))
    b = FeatureStore.from_lists([[0], [1]], 2, ("y", "z"))
    a2, b2 = align_feature_universe(a, b)
    assert a2.feature_ids == b2.feature_ids == ("x", "y", "z")
    assert b2.to_lists() == [[1], [2]]


def test_ego_rejected(pair):
    src, tgt = pair
    with pytest.raises(TaskPreconditionError, match="EGO"):
        transfer_eval(src, tgt, TEST, replace(CFG, ego=True), seeds=[0])


def test_bad_or_constant_test_feature(pair):
    src, tgt = pair
    with pytest.raises(TaskPreconditionError):
        transfer_eval(src, tgt, 99, CFG, seeds=[0])
    g, f = src
    const = FeatureStore.from_lists([fs + [TEST] if TEST not in fs else fs for fs in f.to_lists()],
                                    f.feature_count)
    with pytest.raises(TaskPreconditionError, match="constant"):
        transfer_eval((g, const), tgt, TEST, CFG, seeds=[0])
