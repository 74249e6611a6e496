import random

import numpy as np
import pytest

from paylens.corpus import group_by_user
from paylens.errors import SingleClass, TooFewSamples
from paylens.evaluation import (FoldPlan, GridSpec, balance_classes,
                                cross_validate, grid_search,
                                stratified_kfold)
from paylens.labels import CLASS_A, CLASS_B, LabeledUser, build_labeled_dataset
from paylens.pipeline import PipelineConfig, build_dataset
from paylens.tokenizer import tokenize_post

from conftest import make_txn


def labeled(n_a, n_b):
    out = [LabeledUser(f"a{i}", CLASS_A, "politics") for i in range(n_a)]
    out += [LabeledUser(f"b{i}", CLASS_B, "politics") for i in range(n_b)]
    return out


class TestBalanceClasses:
    def test_downsamples_majority(self):
        result = balance_classes(labeled(346, 218), seed=0)
        counts = {CLASS_A: 0, CLASS_B: 0}
        for lu in result:
            counts[lu.label] += 1
        assert counts == {CLASS_A: 218, CLASS_B: 218}

    def test_already_balanced_unchanged(self):
        users = labeled(5, 5)
        assert balance_classes(users, seed=1) == users

    def test_seeds_change_subset_not_sizes(self):
        users = labeled(50, 20)
        one = balance_classes(users, seed=1)
        two = balance_classes(users, seed=2)
        assert len(one) == len(two) == 40
        assert {lu.user_id for lu in one} != {lu.user_id for lu in two}

    def test_same_seed_same_subset(self):
        users = labeled(50, 20)
        assert balance_classes(users, seed=3) == balance_classes(users, seed=3)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            balance_classes(labeled(5, 0), seed=0)

    def test_sampling_without_replacement(self):
        result = balance_classes(labeled(100, 10), seed=4)
        ids = [lu.user_id for lu in result]
        assert len(ids) == len(set(ids))


class TestStratifiedKfold:
    def test_five_by_five(self):
        labels = [0] * 5 + [1] * 5
        plan = stratified_kfold(labels, k=5, seed=0)
        for fold in plan.folds:
            assert len(fold) == 2
            assert sorted(labels[i] for i in fold) == [0, 1]

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            stratified_kfold([0, 0, 0, 1, 1], k=3, seed=0)

    def test_k_below_two_rejected(self):
        with pytest.raises(ValueError):
            stratified_kfold([0, 1], k=1, seed=0)

    def test_same_seed_identical(self):
        labels = [0] * 13 + [1] * 9
        one = stratified_kfold(labels, k=3, seed=5)
        two = stratified_kfold(labels, k=3, seed=5)
        assert one == two

    def test_split_partitions_rows(self):
        labels = [0] * 12 + [1] * 8
        plan = stratified_kfold(labels, k=4, seed=1)
        train, test = plan.split(2)
        assert sorted(list(train) + list(test)) == list(range(20))
        assert set(train).isdisjoint(test)

    def test_properties_over_random_label_vectors(self):
        rng = random.Random(99)
        for trial in range(200):
            k = rng.choice([2, 3, 5])
            n_a = rng.randint(k, 30)
            n_b = rng.randint(k, 30)
            labels = [0] * n_a + [1] * n_b
            rng.shuffle(labels)
            plan = stratified_kfold(labels, k=k, seed=trial)
            all_rows = [i for fold in plan.folds for i in fold]
            assert sorted(all_rows) == list(range(len(labels)))  # disjoint+cover
            for cls, total in ((0, n_a), (1, n_b)):
                for fold in plan.folds:
                    count = sum(1 for i in fold if labels[i] == cls)
                    assert abs(count - total / k) <= 1


def tiny_dataset(notes_by_user, labels01):
    """Build a UserDataset from {user: [notes]} plus aligned 0/1 labels."""
    txns = []
    seq = 0
    for user, notes in notes_by_user.items():
        for note in notes:
            txns.append(make_txn(f"t{seq}", note=note, actor=user,
                                 target=f"x{seq}", minutes=seq))
            seq += 1
    corpus = group_by_user(txns)
    users = list(notes_by_user)
    labeled_users = [
        LabeledUser(u, CLASS_B if y else CLASS_A, "politics")
        for u, y in zip(users, labels01)]
    political = {lu.user_id: ("republican" if lu.label == CLASS_B else "democrat")
                 for lu in labeled_users}
    ordered = build_labeled_dataset(corpus, "politics", political_labels=political)
    return build_dataset(corpus, ordered)


class TestCrossValidate:
    def test_perfect_on_separable(self):
        notes = {}
        labels = []
        for i in range(10):
            notes[f"a{i}"] = ["alpha alpha", "alpha day"]
            labels.append(0)
        for i in range(10):
            notes[f"b{i}"] = ["bravo bravo", "bravo day"]
            labels.append(1)
        ds = tiny_dataset(notes, labels)
        plan = stratified_kfold(ds.labels01.tolist(), k=5, seed=0)
        cv = cross_validate(ds, plan, PipelineConfig(min_df=1, seed=0))
        assert cv.fold_accuracies == [1.0] * 5

    def test_vocabulary_never_sees_test_tokens(self):
        # the token "leakme" appears only in the users of fold 0
        notes = {}
        labels = []
        for i in range(4):
            notes[f"a{i}"] = ["alpha common"]
            labels.append(0)
        for i in range(4):
            notes[f"b{i}"] = ["bravo common"]
            labels.append(1)
        ds = tiny_dataset(notes, labels)
        leak_rows = [i for i, uid in enumerate(ds.user_ids)
                     if uid in ("a0", "b0")]
        other = [i for i in range(len(ds)) if i not in leak_rows]
        for row in leak_rows:
            ds.posts[row] = ds.posts[row] + [tokenize_post("leakme leakme")]
        plan = FoldPlan(folds=(tuple(leak_rows), tuple(other[:3]),
                               tuple(other[3:])), seed=0)
        cv = cross_validate(ds, plan, PipelineConfig(min_df=1, seed=0),
                            keep_models=True)
        fold0 = cv.outcomes[0].fitted
        assert "leakme" not in fold0.vocab.index
        assert all("leakme" not in name for name in fold0.feature_names)
        # folds that train on the leak rows may contain it
        fold1 = cv.outcomes[1].fitted
        assert "leakme" in fold1.vocab.index

    def test_scaler_fit_on_training_rows_only(self):
        notes = {f"u{i}": ["x" * (i + 1)] for i in range(6)}
        ds = tiny_dataset(notes, [0, 1, 0, 1, 0, 1])
        plan = stratified_kfold(ds.labels01.tolist(), k=3, seed=0)
        cv = cross_validate(ds, plan, PipelineConfig(min_df=1, seed=0),
                            keep_models=True)
        for i, outcome in enumerate(cv.outcomes):
            train_idx, _ = plan.split(i)
            expected_mean = ds.engineered[train_idx].mean(axis=0)
            assert np.allclose(outcome.fitted.scaler.mean, expected_mean)

    def test_random_labels_near_chance(self):
        rng = random.Random(17)
        pool = "red blue green gold silver onyx plum teal".split()
        notes = {}
        labels = []
        for i in range(120):
            notes[f"u{i:03d}"] = [" ".join(rng.choices(pool, k=3))
                                  for _ in range(4)]
            labels.append(i % 2)
        ds = tiny_dataset(notes, labels)
        plan = stratified_kfold(ds.labels01.tolist(), k=5, seed=0)
        cv = cross_validate(ds, plan, PipelineConfig(min_df=2, seed=0))
        assert 0.4 <= cv.mean_accuracy <= 0.6

    def test_mean_is_arithmetic_mean(self):
        notes = {f"u{i}": ["alpha" if i % 2 else "bravo"] for i in range(10)}
        ds = tiny_dataset(notes, [i % 2 for i in range(10)])
        plan = stratified_kfold(ds.labels01.tolist(), k=5, seed=0)
        cv = cross_validate(ds, plan, PipelineConfig(min_df=1, seed=0))
        assert cv.mean_accuracy == pytest.approx(
            sum(cv.fold_accuracies) / len(cv.fold_accuracies), abs=1e-12)


class TestGridSearch:
    def _dataset(self):
        notes = {}
        labels = []
        rng = random.Random(5)
        for i in range(12):
            filler = rng.choice(["and", "the", "pay"])
            notes[f"a{i}"] = [f"alpha {filler}", "alpha night"]
            labels.append(0)
            notes[f"b{i}"] = [f"bravo {filler}", "bravo night"]
            labels.append(1)
        return tiny_dataset(notes, labels)

    def test_single_config_grid_equals_cross_validate(self):
        ds = self._dataset()
        plan = stratified_kfold(ds.labels01.tolist(), k=3, seed=0)
        base = PipelineConfig(min_df=1, seed=0)
        grid = GridSpec(vectorizers=("tfidf",), n_ranges=((1, 1),),
                        classifiers=("svm",), svm_c=(1.0,))
        report = grid_search(grid, plan, ds, base=base)
        assert len(report.results) == 1
        direct = cross_validate(
            ds, plan, grid.expand(base)[0])
        assert report.results[0].fold_accuracies == direct.fold_accuracies
        assert report.best_index == 0

    def test_best_config_selected_and_refit(self):
        ds = self._dataset()
        plan = stratified_kfold(ds.labels01.tolist(), k=3, seed=0)
        grid = GridSpec(vectorizers=("count", "tfidf"), n_ranges=((1, 1),),
                        classifiers=("svm",), svm_c=(0.01, 1.0))
        report = grid_search(grid, plan, ds, base=PipelineConfig(min_df=1))
        means = [r.mean_accuracy for r in report.results]
        assert report.best.mean_accuracy == max(means)
        assert report.best_index == means.index(max(means))  # first tie wins
        assert report.best_model is not None
        assert report.best_model.config == report.best.config

    def test_deterministic_given_seed(self):
        ds = self._dataset()
        plan = stratified_kfold(ds.labels01.tolist(), k=3, seed=4)
        grid = GridSpec(vectorizers=("tfidf",), n_ranges=((1, 1), (1, 2)),
                        classifiers=("svm",), svm_c=(0.1, 1.0))
        one = grid_search(grid, plan, ds, base=PipelineConfig(min_df=1, seed=4))
        two = grid_search(grid, plan, ds, base=PipelineConfig(min_df=1, seed=4))
        assert one.to_dict() == two.to_dict()

    def test_workers_match_serial(self):
        ds = self._dataset()
        plan = stratified_kfold(ds.labels01.tolist(), k=3, seed=0)
        grid = GridSpec(vectorizers=("count", "tfidf"), n_ranges=((1, 1),),
                        classifiers=("svm",), svm_c=(1.0,))
        serial = grid_search(grid, plan, ds, base=PipelineConfig(min_df=1))
        parallel = grid_search(grid, plan, ds, base=PipelineConfig(min_df=1),
                               workers=4)
        assert serial.to_dict() == parallel.to_dict()

    def test_report_dict_shape(self):
        ds = self._dataset()
        plan = stratified_kfold(ds.labels01.tolist(), k=3, seed=0)
        grid = GridSpec(vectorizers=("tfidf",), n_ranges=((1, 1),),
                        classifiers=("svm",), svm_c=(1.0,))
        report = grid_search(grid, plan, ds, base=PipelineConfig(min_df=1))
        data = report.to_dict()
        assert data["folds"] == 3
        assert len(data["configs"]) == 1
        entry = data["configs"][0]
        assert set(entry) == {"config", "fold_accuracies", "mean_accuracy",
                              "confusion"}
        assert 0.0 <= entry["mean_accuracy"] <= 1.0
        assert data["best"]["index"] == 0

    def test_grid_expansion_collapses_c_for_non_svm(self):
        grid = GridSpec(vectorizers=("tfidf",), n_ranges=((1, 1),),
                        classifiers=("svm", "gbdt"), svm_c=(0.1, 1.0, 10.0))
        configs = grid.expand(PipelineConfig())
        svm_configs = [c for c in configs if c.classifier == "svm"]
        gbdt_configs = [c for c in configs if c.classifier == "gbdt"]
        assert len(svm_configs) == 3
        assert len(gbdt_configs) == 1
