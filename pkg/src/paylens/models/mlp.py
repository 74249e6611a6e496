"""Single-hidden-layer perceptron: ReLU hidden units, logistic output.

Trained with plain mini-batch gradient descent on binary cross-entropy.
The loss and gradients are computed from logits for numerical stability and
exposed separately so they can be validated against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import NonFiniteError, SingleClass


@dataclass
class MlpConfig:
    hidden: int = 64
    lr: float = 0.01
    epochs: int = 200
    batch: int = 32
    seed: int = 0


@dataclass
class MlpModel:
    W1: np.ndarray  # (n_features, hidden)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (hidden, 1)
    b2: np.ndarray  # (1,)
    config: MlpConfig
    feature_names: list[str] | None = None
    loss_curve: list[float] = field(default_factory=list)

    kind: str = field(default="mlp", init=False)

    def to_payload(self) -> dict:
        return {
            "W1": self.W1.tolist(), "b1": self.b1.tolist(),
            "W2": self.W2.tolist(), "b2": self.b2.tolist(),
            "config": vars(self.config),
            "feature_names": self.feature_names,
            "loss_curve": self.loss_curve,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "MlpModel":
        return cls(
            W1=np.asarray(payload["W1"], dtype=np.float64),
            b1=np.asarray(payload["b1"], dtype=np.float64),
            W2=np.asarray(payload["W2"], dtype=np.float64),
            b2=np.asarray(payload["b2"], dtype=np.float64),
            config=MlpConfig(**payload["config"]),
            feature_names=payload.get("feature_names"),
            loss_curve=list(payload.get("loss_curve", [])),
        )


def _dense_ok(X):
    if sp.issparse(X):
        return X.tocsr().astype(np.float64)
    return np.asarray(X, dtype=np.float64)


def _check_labels_01(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    values = set(np.unique(y).tolist())
    if not values <= {0.0, 1.0}:
        raise ValueError(f"labels must be in {{0, 1}}, got {sorted(values)}")
    if len(values) < 2:
        raise SingleClass("training labels contain a single class")
    return y


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mlp_loss_and_grads(W1, b1, W2, b2, X, y):
    """Mean binary cross-entropy and its gradients for one batch.

    Returns (loss, dW1, db1, dW2, db2). Accepts dense or CSR X.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.shape[0]
    pre = X @ W1 + b1
    hidden = np.maximum(pre, 0.0)
    z = (hidden @ W2).ravel() + b2[0]
    # stable BCE with logits: max(z,0) - z*y + log(1 + exp(-|z|))
    loss = float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))
    dz = (_sigmoid(z) - y)[:, None] / n
    dW2 = hidden.T @ dz
    db2 = dz.sum(axis=0)
    dhidden = dz @ W2.T
    dhidden[pre <= 0.0] = 0.0
    dW1 = (X.T @ dhidden)
    if sp.issparse(dW1):  # X sparse: result may come back as matrix
        dW1 = np.asarray(dW1.todense())
    else:
        dW1 = np.asarray(dW1)
    db1 = dhidden.sum(axis=0)
    return loss, dW1, db1, dW2, db2


def train_mlp(X, y, config: MlpConfig | None = None,
              feature_names: list[str] | None = None) -> MlpModel:
    """Mini-batch gradient descent; the per-epoch full-data loss is recorded."""
    if config is None:
        config = MlpConfig()
    Xv = _dense_ok(X)
    yv = _check_labels_01(y)
    n, d = Xv.shape
    if n != yv.shape[0]:
        raise ValueError(f"{n} rows vs {yv.shape[0]} labels")

    rng = np.random.default_rng(config.seed)
    limit1 = np.sqrt(6.0 / (d + config.hidden))
    limit2 = np.sqrt(6.0 / (config.hidden + 1))
    W1 = rng.uniform(-limit1, limit1, size=(d, config.hidden))
    b1 = np.zeros(config.hidden)
    W2 = rng.uniform(-limit2, limit2, size=(config.hidden, 1))
    b2 = np.zeros(1)

    batch = max(1, min(config.batch, n))
    loss_curve: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            Xb = Xv[idx]
            loss, dW1, db1, dW2, db2 = mlp_loss_and_grads(W1, b1, W2, b2, Xb, yv[idx])
            if not np.isfinite(loss):
                raise NonFiniteError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}")
            W1 -= config.lr * dW1
            b1 -= config.lr * db1
            W2 -= config.lr * dW2
            b2 -= config.lr * db2
        full_loss, *_ = mlp_loss_and_grads(W1, b1, W2, b2, Xv, yv)
        if not np.isfinite(full_loss):
            raise NonFiniteError(f"non-finite loss after epoch {epoch}")
        loss_curve.append(full_loss)

    return MlpModel(W1=W1, b1=b1, W2=W2, b2=b2, config=config,
                    feature_names=list(feature_names) if feature_names else None,
                    loss_curve=loss_curve)


def mlp_proba(model: MlpModel, X) -> np.ndarray:
    Xv = _dense_ok(X)
    hidden = np.maximum(Xv @ model.W1 + model.b1, 0.0)
    z = (hidden @ model.W2).ravel() + model.b2[0]
    return _sigmoid(z)


def mlp_predict(model: MlpModel, X) -> np.ndarray:
    return (mlp_proba(model, X) >= 0.5).astype(np.int64)
