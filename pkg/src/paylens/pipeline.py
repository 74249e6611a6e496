"""Glue between corpus, labels, text features and classifiers.

A UserDataset holds the tokenized posts, raw engineered feature rows and
binary labels for the users a task kept. A FittedPipeline owns every piece
of fitted state (vocabulary, scaler, classifier); fitting only ever sees
training rows, so held-out rows cannot leak into the vocabulary or scaler.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .features import (aggregate_user_features, detect_content_features,
                       engineered_feature_names)
from .labels import CLASS_B, CLASS_NAMES, LabeledUser
from .models import (GbdtConfig, MlpConfig, gbdt_predict, mlp_predict,
                     svm_predict, train_gbdt, train_linear_svm, train_mlp)
from .tokenizer import TokenizedPost, tokenize_post
from .vectorizer import (ScalerStats, Vocabulary, assemble_feature_matrix,
                         count_transform, fit_vocabulary, tfidf_transform)

VECTORIZERS = ("count", "tfidf")
CLASSIFIERS = ("svm", "mlp", "gbdt")


@dataclass(frozen=True)
class PipelineConfig:
    vectorizer: str = "tfidf"
    n_range: tuple[int, int] = (1, 2)
    min_df: int = 2
    use_engineered: bool = True
    include_actor_pct: bool = False
    normalize_counts: bool = False  # ablation: L2-normalize raw count rows
    classifier: str = "svm"
    C: float = 1.0
    svm_tol: float = 1e-3
    mlp_overrides: tuple = ()   # sorted (key, value) pairs
    gbdt_overrides: tuple = ()
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "vectorizer": self.vectorizer,
            "n_range": list(self.n_range),
            "min_df": self.min_df,
            "use_engineered": self.use_engineered,
            "include_actor_pct": self.include_actor_pct,
            "normalize_counts": self.normalize_counts,
            "classifier": self.classifier,
            "C": self.C,
            "svm_tol": self.svm_tol,
            "mlp_overrides": dict(self.mlp_overrides),
            "gbdt_overrides": dict(self.gbdt_overrides),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        kwargs = dict(data)
        if "n_range" in kwargs:
            kwargs["n_range"] = tuple(kwargs["n_range"])
        for key in ("mlp_overrides", "gbdt_overrides"):
            if key in kwargs and isinstance(kwargs[key], dict):
                kwargs[key] = tuple(sorted(kwargs[key].items()))
        return cls(**kwargs)

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, seed=seed)


@dataclass
class UserDataset:
    user_ids: list[str]
    posts: list[list[TokenizedPost]]
    engineered: np.ndarray        # raw rows, one per user
    labels01: np.ndarray          # class_a -> 0, class_b -> 1
    class_names: tuple[str, str]  # (name of 0, name of 1)
    task: str

    def __len__(self) -> int:
        return len(self.user_ids)


def build_dataset(corpus: Corpus, labeled: Sequence[LabeledUser],
                  include_actor_pct: bool = False) -> UserDataset:
    """Tokenize and featurize the labeled users of a corpus, label-aligned."""
    user_ids: list[str] = []
    posts: list[list[TokenizedPost]] = []
    rows: list[np.ndarray] = []
    labels: list[int] = []
    task = labeled[0].task if labeled else "gender"
    for lu in labeled:
        profile = corpus.users[lu.user_id]
        tokenized = [tokenize_post(t.note) for t, _ in profile.posts]
        counts = [detect_content_features(p) for p in tokenized]
        feats = aggregate_user_features(profile, tokenized, counts)
        user_ids.append(lu.user_id)
        posts.append(tokenized)
        rows.append(feats.to_vector(include_actor_pct))
        labels.append(1 if lu.label == CLASS_B else 0)
    engineered = (np.stack(rows) if rows
                  else np.zeros((0, len(engineered_feature_names(include_actor_pct)))))
    names = CLASS_NAMES[task]
    return UserDataset(
        user_ids=user_ids, posts=posts, engineered=engineered,
        labels01=np.asarray(labels, dtype=np.int64),
        class_names=(names["class_a"], names["class_b"]), task=task,
    )


@dataclass
class FittedPipeline:
    config: PipelineConfig
    vocab: Vocabulary
    scaler: ScalerStats | None
    model: object
    feature_names: list[str]
    class_names: tuple[str, str]


def _l2_rows(matrix: sp.csr_matrix) -> sp.csr_matrix:
    norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1))).ravel()
    inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sp.csr_matrix(sp.diags(inv) @ matrix)


def _text_matrix(posts: Sequence[Sequence[TokenizedPost]], vocab: Vocabulary,
                 config: PipelineConfig) -> sp.csr_matrix:
    counts = count_transform(posts, vocab)
    if config.vectorizer == "tfidf":
        return tfidf_transform(counts, vocab)
    if config.normalize_counts:
        return _l2_rows(counts)
    return counts


def _features_for(dataset: UserDataset, idx: np.ndarray, vocab: Vocabulary,
                  scaler: ScalerStats | None, config: PipelineConfig
                  ) -> tuple[sp.csr_matrix, ScalerStats | None]:
    posts = [dataset.posts[i] for i in idx]
    text = _text_matrix(posts, vocab, config)
    if not config.use_engineered:
        return text, scaler
    rows = dataset.engineered[idx]
    return assemble_feature_matrix(text, rows, scaler,
                                   include_actor_pct=config.include_actor_pct)


def fit_pipeline(dataset: UserDataset, train_idx: Sequence[int],
                 config: PipelineConfig) -> FittedPipeline:
    """Fit vocabulary, scaler and classifier on the given training rows only."""
    idx = np.asarray(train_idx, dtype=np.int64)
    if config.vectorizer not in VECTORIZERS:
        raise ValueError(f"unknown vectorizer {config.vectorizer!r}")
    if config.classifier not in CLASSIFIERS:
        raise ValueError(f"unknown classifier {config.classifier!r}")

    vocab = fit_vocabulary([dataset.posts[i] for i in idx],
                           n_range=config.n_range, min_df=config.min_df)
    X, scaler = _features_for(dataset, idx, vocab, None, config)
    names = vocab.terms
    if config.use_engineered:
        names = names + engineered_feature_names(config.include_actor_pct)

    y01 = dataset.labels01[idx]
    if config.classifier == "svm":
        model = train_linear_svm(X, 2 * y01 - 1, C=config.C, tol=config.svm_tol,
                                 seed=config.seed, feature_names=names)
    elif config.classifier == "mlp":
        overrides = dict(config.mlp_overrides)
        overrides.setdefault("seed", config.seed)
        model = train_mlp(X, y01, MlpConfig(**overrides), feature_names=names)
    else:
        overrides = dict(config.gbdt_overrides)
        overrides.setdefault("seed", config.seed)
        model = train_gbdt(X, y01, GbdtConfig(**overrides), feature_names=names)

    return FittedPipeline(config=config, vocab=vocab, scaler=scaler,
                          model=model, feature_names=names,
                          class_names=dataset.class_names)


def pipeline_transform(fitted: FittedPipeline, dataset: UserDataset,
                       idx: Sequence[int]) -> sp.csr_matrix:
    """Feature rows for held-out users using only the fitted state."""
    X, _ = _features_for(dataset, np.asarray(idx, dtype=np.int64),
                         fitted.vocab, fitted.scaler, fitted.config)
    return X


def pipeline_predict(fitted: FittedPipeline, X) -> np.ndarray:
    """Predicted labels in {0, 1}."""
    kind = fitted.config.classifier
    if kind == "svm":
        return ((svm_predict(fitted.model, X) + 1) // 2).astype(np.int64)
    if kind == "mlp":
        return mlp_predict(fitted.model, X)
    return gbdt_predict(fitted.model, X)
