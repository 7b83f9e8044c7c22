from collections import Counter

import numpy as np
import pytest

from conftest import separable_corpus, tiny_topology
from hatenet.corpus import LabeledCorpus
from hatenet.embeddings import embed, synthetic_table
from hatenet.ensemble import (
    EnsembleBundle,
    TrainConfig,
    WEAK,
    balanced_epoch_sample,
    evaluate,
    load_bundle,
    predict,
    save_bundle,
    train_ensemble,
    train_member,
    tune,
    vote_outcome,
    _mean_loss_eval,
    _PostLoss,
)
from hatenet.errors import (
    CheckpointIntegrityError,
    CheckpointVersionError,
    EmptyClass,
    PreprocessingMismatch,
)
from hatenet.model import build, forward
from hatenet.text import RawPost, preprocess
from hatenet.weaksup import Lexicon

from conftest import MARKERS


def make_counts_corpus(h, o, n):
    posts = []
    for label, count in ((0, h), (1, o), (2, n)):
        posts.extend(
            RawPost(f"text {label} {i}", label=label, source_id=f"{label}:{i}")
            for i in range(count)
        )
    return LabeledCorpus(posts, provenance="fix")


class TestBalancedSample:
    def test_sizes_and_counts(self):
        rng = np.random.default_rng(0)
        sample = balanced_epoch_sample(make_counts_corpus(2, 10, 10), rng)
        assert len(sample) == 6
        assert Counter(p.label for p in sample) == {0: 2, 1: 2, 2: 2}

    def test_already_balanced(self):
        rng = np.random.default_rng(0)
        sample = balanced_epoch_sample(make_counts_corpus(5, 5, 5), rng)
        assert len(sample) == 15
        assert Counter(p.label for p in sample) == {0: 5, 1: 5, 2: 5}

    def test_hate_posts_used_exactly_once(self):
        rng = np.random.default_rng(1)
        corpus = make_counts_corpus(4, 9, 9)
        for _ in range(20):
            sample = balanced_epoch_sample(corpus, rng)
            hate_ids = [p.source_id for p in sample if p.label == 0]
            assert sorted(hate_ids) == [f"0:{i}" for i in range(4)]

    def test_empty_class_rejected(self):
        with pytest.raises(EmptyClass):
            balanced_epoch_sample(make_counts_corpus(0, 5, 5), np.random.default_rng(0))

    def test_replacement_frequencies_within_3_sigma(self):
        corpus = make_counts_corpus(3, 10, 12)
        rng = np.random.default_rng(42)
        epochs = 10_000
        draws = Counter()
        for _ in range(epochs):
            for post in balanced_epoch_sample(corpus, rng):
                if post.label in (1, 2):
                    draws[post.source_id] += 1
        m = 3
        for label, pool in ((1, 10), (2, 12)):
            total = epochs * m
            p = 1.0 / pool
            sigma = np.sqrt(total * p * (1 - p))
            for i in range(pool):
                count = draws[f"{label}:{i}"]
                assert abs(count - total * p) <= 3 * sigma


class TestTrainMember:
    def test_early_stopping_returns_argmin_snapshot(self, topo, table):
        corpus = separable_corpus(4, seed=5)
        cfg = TrainConfig(ensemble_size=1, epochs=5, seed=0, batch_size=8)
        params, trace = train_member(
            0, cfg, topo, table, corpus, corpus, keep_snapshots=True
        )
        losses = [rec.valid_loss for rec in trace.epochs]
        best = int(np.argmin(losses))  # earliest minimum
        assert trace.best_epoch == best + 1
        want = trace.snapshots[best]
        for name, tensor in params.named_tensors().items():
            np.testing.assert_array_equal(
                tensor.data, want.named_tensors()[name].data
            )
        # re-evaluate every snapshot independently; none beats the returned one
        post_loss = _PostLoss(topo, table, cfg, None)
        rescored = [
            _mean_loss_eval(snap, corpus.posts, post_loss)[0]
            for snap in trace.snapshots
        ]
        np.testing.assert_allclose(rescored, losses, atol=1e-12)
        assert min(rescored) == rescored[best]

    def test_tie_breaks_to_earliest_epoch(self, topo, table):
        # vacuous lexicon evidence makes the weak loss identically zero,
        # so every epoch ties and epoch 1 must win
        lexicon = Lexicon(["zz_nomatch"], ["qq_nomatch"], ["pp_nomatch"])
        pool = [RawPost(f"plain words {i}") for i in range(8)]
        cfg = TrainConfig(ensemble_size=1, epochs=3, seed=0, loss_mode=WEAK,
                          batch_size=4)
        params, trace = train_member(
            0, cfg, topo, table, pool, pool[:2], lexicon=lexicon
        )
        assert [rec.valid_loss for rec in trace.epochs] == [0.0, 0.0, 0.0]
        assert trace.best_epoch == 1

    def test_weak_mode_learns_from_bounds(self, topo, table):
        lexicon = Lexicon([MARKERS[0]], [MARKERS[1]], [MARKERS[2]])
        pool = separable_corpus(8, seed=6).posts
        unlabeled = [RawPost(p.text, source_id=p.source_id) for p in pool]
        # bounds_k=3 makes the marker evidence bind (lb above uniform 1/3)
        cfg = TrainConfig(ensemble_size=1, epochs=15, seed=0, loss_mode=WEAK,
                          batch_size=8, base_lr=5e-3, bounds_k=3.0)
        params, trace = train_member(
            0, cfg, topo, table, unlabeled, unlabeled[:6], lexicon=lexicon
        )
        losses = [rec.valid_loss for rec in trace.epochs]
        assert losses[0] > 0.0
        assert min(losses) < 0.9 * losses[0]

    def test_empty_validation_rejected(self, topo, table):
        corpus = separable_corpus(4)
        cfg = TrainConfig(ensemble_size=1, epochs=1)
        with pytest.raises(ValueError):
            train_member(0, cfg, topo, table, corpus, LabeledCorpus([], "empty"))

    def test_nonfinite_loss_aborts_with_diagnostic(self, topo, table):
        from hatenet.errors import NumericError
        from hatenet.ensemble import _train_batch
        from hatenet.optim import Adam

        params = build(topo, 0)
        params.classifier.params["fc1_w"].data[:] = np.nan
        cfg = TrainConfig(ensemble_size=1, epochs=1)
        post_loss = _PostLoss(topo, table, cfg, None)
        post = RawPost("anything at all", label=0, source_id="x")
        with pytest.raises(NumericError, match="epoch"):
            _train_batch(params, [post], post_loss, Adam(), np.random.default_rng(0), 1)


class TestEnsemble:
    def test_k1_reduces_to_single_member(self, topo, table):
        corpus = separable_corpus(4, seed=7)
        cfg = TrainConfig(ensemble_size=1, epochs=2, seed=3, batch_size=8)
        bundle, traces = train_ensemble(cfg, topo, table, corpus, corpus)
        assert bundle.size() == 1
        solo, _ = train_member(3, cfg, topo, table, corpus, corpus)
        for name, tensor in solo.named_tensors().items():
            np.testing.assert_array_equal(
                tensor.data, bundle.members[0].named_tensors()[name].data
            )

    def test_members_differ_pairwise(self, topo, table):
        corpus = separable_corpus(4, seed=8)
        cfg = TrainConfig(ensemble_size=3, epochs=2, seed=0, batch_size=8)
        bundle, _ = train_ensemble(cfg, topo, table, corpus, corpus)
        for i in range(3):
            for j in range(i + 1, 3):
                a = bundle.members[i].named_tensors()
                b = bundle.members[j].named_tensors()
                assert any(not np.array_equal(a[n].data, b[n].data) for n in a)

    def test_jobs_parallel_matches_serial(self, topo, table):
        corpus = separable_corpus(4, seed=9)
        cfg = TrainConfig(ensemble_size=2, epochs=2, seed=1, batch_size=8)
        serial, _ = train_ensemble(cfg, topo, table, corpus, corpus, jobs=1)
        parallel, _ = train_ensemble(cfg, topo, table, corpus, corpus, jobs=2)
        for ms, mp in zip(serial.members, parallel.members):
            for name, tensor in ms.named_tensors().items():
                np.testing.assert_array_equal(tensor.data, mp.named_tensors()[name].data)

    def test_seed_determinism_bitwise(self, topo, table):
        from hatenet.ensemble import _member_bytes

        corpus = separable_corpus(4, seed=10)
        cfg = TrainConfig(ensemble_size=2, epochs=2, seed=5, batch_size=8)
        a, _ = train_ensemble(cfg, topo, table, corpus, corpus)
        b, _ = train_ensemble(cfg, topo, table, corpus, corpus)
        for ma, mb in zip(a.members, b.members):
            assert _member_bytes(ma) == _member_bytes(mb)


def brute_force_vote(votes, member_probs):
    """Mode with the documented tie-break chain, recomputed naively."""
    tally = Counter(votes)
    top = max(tally.values())
    tied = sorted(c for c, n in tally.items() if n == top)
    if len(tied) == 1:
        return tied[0]
    sums = {c: sum(p[c] for p in member_probs) for c in tied}
    best = max(sums.values())
    return min(c for c in tied if sums[c] == best)


class TestVoting:
    def test_strict_majority(self):
        probs = np.full((5, 3), 1 / 3)
        assert vote_outcome([0, 0, 0, 1, 2], probs) == 0

    def test_probability_tiebreak(self):
        votes = [0, 0, 1, 1, 2]
        probs = np.array([
            [0.5, 0.4, 0.1],
            [0.5, 0.4, 0.1],
            [0.3, 0.6, 0.1],
            [0.2, 0.6, 0.2],
            [0.4, 0.1, 0.5],
        ])  # summed: H=1.9, O=2.1, N=1.0
        assert vote_outcome(votes, probs) == 1

    def test_ordinal_tiebreak(self):
        votes = [0, 1]
        probs = np.array([[0.6, 0.3, 0.1], [0.3, 0.6, 0.1]])  # sums equal
        assert vote_outcome(votes, probs) == 0

    def test_k1_argmax(self):
        probs = np.array([[0.1, 0.2, 0.7]])
        assert vote_outcome([2], probs) == 2

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        stages = Counter()
        for _ in range(1000):
            k = int(rng.integers(1, 8))
            probs = rng.dirichlet(np.ones(3), size=k)
            if rng.random() < 0.3:
                # force exact probability ties to reach the ordinal stage
                probs = np.tile(np.array([[0.4, 0.4, 0.2]]), (k, 1))
            votes = [int(rng.integers(3)) for _ in range(k)]
            got = vote_outcome(votes, probs)
            want = brute_force_vote(votes, probs)
            assert got == want
            tally = Counter(votes)
            top = max(tally.values())
            tied = [c for c, n in tally.items() if n == top]
            if len(tied) == 1:
                stages["majority"] += 1
            else:
                sums = probs.sum(axis=0)[tied]
                stages["probability" if len(np.flatnonzero(
                    sums == sums.max())) == 1 else "ordinal"] += 1
        assert stages["majority"] > 0
        assert stages["probability"] > 0
        assert stages["ordinal"] > 0


class TestPredictAndBundle:
    def _quick_bundle(self, topo, table, k=2):
        corpus = separable_corpus(4, seed=11)
        cfg = TrainConfig(ensemble_size=k, epochs=2, seed=0, batch_size=8)
        bundle, _ = train_ensemble(cfg, topo, table, corpus, corpus)
        return bundle

    def test_predict_shapes(self, topo, table):
        bundle = self._quick_bundle(topo, table)
        result = predict(bundle, RawPost("wolfsbane in the sun"), table)
        assert result.label in (0, 1, 2)
        assert len(result.votes) == 2
        assert result.mean_probs.shape == (3,)
        assert abs(result.mean_probs.sum() - 1.0) <= 1e-9

    def test_dim_mismatch_rejected(self, topo, table):
        bundle = self._quick_bundle(topo, table)
        with pytest.raises(PreprocessingMismatch):
            predict(bundle, RawPost("x"), synthetic_table(0, 7))

    def test_save_load_roundtrip_bit_exact(self, topo, table, tmp_path):
        from hatenet.ensemble import _member_bytes

        bundle = self._quick_bundle(topo, table)
        save_bundle(bundle, tmp_path / "run")
        loaded = load_bundle(tmp_path / "run")
        assert loaded.size() == bundle.size()
        assert loaded.topology == bundle.topology
        assert loaded.fingerprint == bundle.fingerprint
        for a, b in zip(bundle.members, loaded.members):
            assert _member_bytes(a) == _member_bytes(b)
            for group_a, group_b in zip(a.groups(), b.groups()):
                assert group_a.trainable == group_b.trainable

    def test_corrupt_member_detected(self, topo, table, tmp_path):
        bundle = self._quick_bundle(topo, table)
        save_bundle(bundle, tmp_path / "run")
        target = tmp_path / "run" / "member_0.ckpt"
        raw = bytearray(target.read_bytes())
        raw[60] ^= 0xFF
        target.write_bytes(bytes(raw))
        with pytest.raises(CheckpointIntegrityError):
            load_bundle(tmp_path / "run")

    def test_truncated_member_detected(self, topo, table, tmp_path):
        bundle = self._quick_bundle(topo, table)
        save_bundle(bundle, tmp_path / "run")
        target = tmp_path / "run" / "member_0.ckpt"
        target.write_bytes(target.read_bytes()[:100])
        with pytest.raises(CheckpointIntegrityError):
            load_bundle(tmp_path / "run")

    def test_version_mismatch_detected(self, topo, table, tmp_path):
        import json

        bundle = self._quick_bundle(topo, table)
        save_bundle(bundle, tmp_path / "run")
        meta_path = tmp_path / "run" / "bundle.meta"
        meta = json.loads(meta_path.read_text())
        meta["format_version"] = 99
        meta_path.write_text(json.dumps(meta))
        with pytest.raises(CheckpointVersionError):
            load_bundle(tmp_path / "run")

    def test_topology_swap_detected(self, topo, table, tmp_path):
        import json

        bundle = self._quick_bundle(topo, table)
        save_bundle(bundle, tmp_path / "run")
        meta_path = tmp_path / "run" / "bundle.meta"
        meta = json.loads(meta_path.read_text())
        meta["topology"]["rnn_hidden"] = 7  # member files disagree now
        meta_path.write_text(json.dumps(meta))
        with pytest.raises(CheckpointIntegrityError, match="topology"):
            load_bundle(tmp_path / "run")

    def test_missing_meta_detected(self, tmp_path):
        with pytest.raises(CheckpointIntegrityError):
            load_bundle(tmp_path)


class TestTune:
    def _bundle(self, topo, table):
        corpus = separable_corpus(4, seed=12)
        cfg = TrainConfig(ensemble_size=2, epochs=2, seed=0, batch_size=8)
        bundle, _ = train_ensemble(cfg, topo, table, corpus, corpus)
        return bundle

    def test_feature_group_frozen_bytewise(self, topo, table):
        bundle = self._bundle(topo, table)
        target = separable_corpus(5, seed=13)
        before = {
            i: {k: v.data.tobytes() for k, v in m.feature.params.items()}
            for i, m in enumerate(bundle.members)
        }
        tuned = tune(bundle, target, TrainConfig(ensemble_size=2, seed=0), table)
        for i, member in enumerate(tuned.members):
            for key, tensor in member.feature.params.items():
                assert tensor.data.tobytes() == before[i][key]
            assert member.feature.trainable  # freeze is internal to tune

    def test_classifier_changes(self, topo, table):
        bundle = self._bundle(topo, table)
        target = separable_corpus(5, seed=14)
        tuned = tune(bundle, target, TrainConfig(ensemble_size=2, seed=0), table)
        changed = False
        for original, new in zip(bundle.members, tuned.members):
            for key in original.classifier.params:
                if not np.array_equal(
                    original.classifier.params[key].data,
                    new.classifier.params[key].data,
                ):
                    changed = True
        assert changed

    def test_default_tune_lr(self):
        assert TrainConfig().tune_lr == 5e-4

    def test_unbalanced_warns(self, topo, table, caplog):
        import logging

        bundle = self._bundle(topo, table)
        target = make_counts_corpus(3, 8, 5)
        with caplog.at_level(logging.WARNING, logger="hatenet.ensemble"):
            tune(bundle, target, TrainConfig(ensemble_size=2, seed=0), table)
        assert any("unbalanced" in rec.message for rec in caplog.records)

    def test_missing_class_rejected(self, topo, table):
        bundle = self._bundle(topo, table)
        posts = [RawPost("x", label=1, source_id="a"),
                 RawPost("y", label=2, source_id="b")]
        with pytest.raises(EmptyClass):
            tune(bundle, LabeledCorpus(posts, "bad"),
                 TrainConfig(ensemble_size=2, seed=0), table)

    def test_original_bundle_untouched(self, topo, table):
        bundle = self._bundle(topo, table)
        snapshot = {
            name: tensor.data.copy()
            for name, tensor in bundle.members[0].named_tensors().items()
        }
        tune(bundle, separable_corpus(5, seed=15),
             TrainConfig(ensemble_size=2, seed=0), table)
        for name, tensor in bundle.members[0].named_tensors().items():
            np.testing.assert_array_equal(tensor.data, snapshot[name])


class TestEvaluate:
    def test_memorizing_ensemble_scores_perfectly(self, table):
        topo = tiny_topology(dropout_p=0.0)
        corpus = separable_corpus(10, seed=3)
        cfg = TrainConfig(ensemble_size=1, epochs=60, seed=0,
                          base_lr=5e-3, batch_size=8)
        bundle, _ = train_ensemble(cfg, topo, table, corpus, corpus)
        rep = evaluate(bundle, corpus, table)
        assert rep["micro_f1"] >= 0.95
