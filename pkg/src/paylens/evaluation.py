"""Class balancing, stratified k-fold plans, cross-validation and grid search.

Folds are disjoint, cover every row, and keep per-fold class counts within
one of the proportional share. Every fitted component (vocabulary, scaler,
classifier) is refit inside each fold on training rows only. Grid search
evaluates every expanded config, picks the best mean accuracy with ties
broken by expansion order, and refits the winner on all rows.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import SingleClass, TooFewSamples
from .labels import LabeledUser
from .pipeline import (FittedPipeline, PipelineConfig, UserDataset,
                       fit_pipeline, pipeline_predict, pipeline_transform)


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[int, ...], ...]
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)

    def split(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.asarray(self.folds[i], dtype=np.int64)
        train = np.asarray(
            [r for j, f in enumerate(self.folds) if j != i for r in f],
            dtype=np.int64)
        return np.sort(train), np.sort(test)


def balance_classes(labeled: Sequence[LabeledUser], seed: int = 0) -> list[LabeledUser]:
    """Downsample the majority class uniformly (seeded) to the minority size."""
    by_label: dict[str, list[int]] = {}
    for i, lu in enumerate(labeled):
        by_label.setdefault(lu.label, []).append(i)
    if len(by_label) < 2:
        raise SingleClass("balancing requires two classes")
    minority = min(len(v) for v in by_label.values())
    rng = np.random.default_rng(seed)
    keep: set[int] = set()
    for label in sorted(by_label):
        idx = by_label[label]
        if len(idx) > minority:
            chosen = rng.choice(len(idx), size=minority, replace=False)
            keep.update(idx[i] for i in sorted(chosen))
        else:
            keep.update(idx)
    return [lu for i, lu in enumerate(labeled) if i in keep]


def stratified_kfold(labels: Sequence, k: int, seed: int = 0) -> FoldPlan:
    """Deal each class's shuffled indices round-robin into k folds."""
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    by_class: dict = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    for label, idx in sorted(by_class.items(), key=lambda kv: str(kv[0])):
        if len(idx) < k:
            raise TooFewSamples(
                f"class {label!r} has {len(idx)} samples, fewer than k={k}")
    folds: list[list[int]] = [[] for _ in range(k)]
    for label, idx in sorted(by_class.items(), key=lambda kv: str(kv[0])):
        perm = rng.permutation(len(idx))
        start = int(rng.integers(k))  # rotate which fold takes the remainder
        for j, p in enumerate(perm):
            folds[(start + j) % k].append(idx[p])
    return FoldPlan(folds=tuple(tuple(sorted(f)) for f in folds), seed=seed)


@dataclass
class FoldOutcome:
    accuracy: float
    n_test: int
    confusion: tuple[int, int, int, int]  # tn, fp, fn, tp
    vocab_size: int
    fitted: FittedPipeline | None = None


@dataclass
class CvResult:
    config: PipelineConfig
    outcomes: list[FoldOutcome]

    @property
    def fold_accuracies(self) -> list[float]:
        return [o.accuracy for o in self.outcomes]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def confusion(self) -> tuple[int, int, int, int]:
        total = np.sum([o.confusion for o in self.outcomes], axis=0)
        return tuple(int(v) for v in total)


def _confusion(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[int, int, int, int]:
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    return tn, fp, fn, tp


def cross_validate(dataset: UserDataset, plan: FoldPlan,
                   config: PipelineConfig, keep_models: bool = False) -> CvResult:
    """Held-out accuracy per fold; all fitted state comes from training rows."""
    outcomes: list[FoldOutcome] = []
    for i in range(plan.k):
        train_idx, test_idx = plan.split(i)
        fitted = fit_pipeline(dataset, train_idx, config)
        X_test = pipeline_transform(fitted, dataset, test_idx)
        y_pred = pipeline_predict(fitted, X_test)
        y_true = dataset.labels01[test_idx]
        acc = float(np.mean(y_pred == y_true)) if len(test_idx) else 0.0
        outcomes.append(FoldOutcome(
            accuracy=acc, n_test=len(test_idx),
            confusion=_confusion(y_true, y_pred),
            vocab_size=len(fitted.vocab),
            fitted=fitted if keep_models else None))
    return CvResult(config=config, outcomes=outcomes)


@dataclass(frozen=True)
class GridSpec:
    """Axes expanded in declaration order; C applies to the SVM only."""

    vectorizers: tuple[str, ...] = ("count", "tfidf")
    n_ranges: tuple[tuple[int, int], ...] = ((1, 1), (1, 2))
    classifiers: tuple[str, ...] = ("svm", "mlp", "gbdt")
    svm_c: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    mlp_overrides: tuple = ()
    gbdt_overrides: tuple = ()

    def expand(self, base: PipelineConfig) -> list[PipelineConfig]:
        configs: list[PipelineConfig] = []
        for vec, nr, clf in itertools.product(self.vectorizers, self.n_ranges,
                                              self.classifiers):
            cs = self.svm_c if clf == "svm" else (base.C,)
            for c in cs:
                configs.append(replace(
                    base, vectorizer=vec, n_range=tuple(nr), classifier=clf,
                    C=float(c), mlp_overrides=tuple(self.mlp_overrides),
                    gbdt_overrides=tuple(self.gbdt_overrides)))
        return configs

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        kwargs: dict = {}
        if "vectorizers" in data:
            kwargs["vectorizers"] = tuple(data["vectorizers"])
        if "n_ranges" in data:
            kwargs["n_ranges"] = tuple(tuple(nr) for nr in data["n_ranges"])
        if "classifiers" in data:
            kwargs["classifiers"] = tuple(data["classifiers"])
        if "svm_c" in data:
            kwargs["svm_c"] = tuple(float(c) for c in data["svm_c"])
        for key in ("mlp_overrides", "gbdt_overrides"):
            if key in data:
                kwargs[key] = tuple(sorted(data[key].items()))
        return cls(**kwargs)


@dataclass
class EvalReport:
    task: str
    seed: int
    k: int
    results: list[CvResult]
    best_index: int
    best_model: FittedPipeline | None = None
    class_names: tuple[str, str] = ("class_a", "class_b")

    @property
    def best(self) -> CvResult:
        return self.results[self.best_index]

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "seed": self.seed,
            "folds": self.k,
            "class_names": list(self.class_names),
            "configs": [
                {
                    "config": r.config.to_dict(),
                    "fold_accuracies": r.fold_accuracies,
                    "mean_accuracy": r.mean_accuracy,
                    "confusion": {k: v for k, v in
                                  zip(("tn", "fp", "fn", "tp"), r.confusion)},
                }
                for r in self.results
            ],
            "best": {
                "index": self.best_index,
                "config": self.best.config.to_dict(),
                "mean_accuracy": self.best.mean_accuracy,
            },
        }


def grid_search(grid: GridSpec, plan: FoldPlan, dataset: UserDataset,
                base: PipelineConfig | None = None,
                workers: int = 1) -> EvalReport:
    """Cross-validate every grid point, refit the best config on all rows."""
    if base is None:
        base = PipelineConfig()
    configs = grid.expand(base)
    if not configs:
        raise ValueError("empty grid")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda cfg: cross_validate(dataset, plan, cfg), configs))
    else:
        results = [cross_validate(dataset, plan, cfg) for cfg in configs]

    means = [r.mean_accuracy for r in results]
    best_index = int(np.argmax(means))  # first best wins ties
    all_rows = np.arange(len(dataset))
    best_model = fit_pipeline(dataset, all_rows, configs[best_index])
    return EvalReport(task=dataset.task, seed=plan.seed, k=plan.k,
                      results=results, best_index=best_index,
                      best_model=best_model, class_names=dataset.class_names)
