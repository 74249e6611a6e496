"""Linear SVM trained by dual coordinate descent.

Minimizes 0.5*||w||^2 + C * sum(max(0, 1 - y_i * (w.x_i + b))) with the bias
folded in as a constant feature (so b is L2-regularized, the usual linear-SVM
convention). Training stops when the relative duality gap of that problem
drops below tol. Coordinate order is reshuffled each epoch from the seed, so
runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import NonFiniteError, SingleClass


def _cd_epoch(indptr, indices, data, y, qd, alpha, w, C, order):
    # one pass of dual coordinate descent over the given row order
    for i in order:
        lo, hi = indptr[i], indptr[i + 1]
        g = 0.0
        for k in range(lo, hi):
            g += data[k] * w[indices[k]]
        g = y[i] * g - 1.0
        a = alpha[i]
        if a == 0.0:
            pg = min(g, 0.0)
        elif a == C:
            pg = max(g, 0.0)
        else:
            pg = g
        if pg != 0.0:
            na = min(max(a - g / qd[i], 0.0), C)
            d = (na - a) * y[i]
            alpha[i] = na
            for k in range(lo, hi):
                w[indices[k]] += d * data[k]


try:  # JIT when available; the plain-Python body is the fallback
    from numba import njit

    _cd_epoch = njit(cache=True)(_cd_epoch)
except ImportError:  # pragma: no cover
    pass


@dataclass
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    C: float
    tol: float
    seed: int
    feature_names: list[str] | None = None
    epochs_run: int = 0
    primal_objective: float = 0.0
    duality_gap: float = 0.0

    kind: str = field(default="svm", init=False)

    def to_payload(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "C": self.C,
            "tol": self.tol,
            "seed": self.seed,
            "feature_names": self.feature_names,
            "epochs_run": self.epochs_run,
            "primal_objective": self.primal_objective,
            "duality_gap": self.duality_gap,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "LinearSvmModel":
        return cls(
            weights=np.asarray(payload["weights"], dtype=np.float64),
            bias=float(payload["bias"]),
            C=float(payload["C"]),
            tol=float(payload["tol"]),
            seed=int(payload["seed"]),
            feature_names=payload.get("feature_names"),
            epochs_run=int(payload.get("epochs_run", 0)),
            primal_objective=float(payload.get("primal_objective", 0.0)),
            duality_gap=float(payload.get("duality_gap", 0.0)),
        )


def _as_csr(X) -> sp.csr_matrix:
    if sp.issparse(X):
        return X.tocsr().astype(np.float64)
    return sp.csr_matrix(np.asarray(X, dtype=np.float64))


def _check_labels_pm1(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    values = set(np.unique(y).tolist())
    if not values <= {-1.0, 1.0}:
        raise ValueError(f"labels must be in {{-1, +1}}, got {sorted(values)}")
    if len(values) < 2:
        raise SingleClass("training labels contain a single class")
    return y


def train_linear_svm(X, y, C: float = 1.0, tol: float = 1e-3, seed: int = 0,
                     max_epochs: int = 1000,
                     feature_names: list[str] | None = None) -> LinearSvmModel:
    """Fit the hinge-loss linear model to the stated relative duality gap."""
    Xc = _as_csr(X)
    yv = _check_labels_pm1(y)
    if Xc.shape[0] != yv.shape[0]:
        raise ValueError(f"{Xc.shape[0]} rows vs {yv.shape[0]} labels")
    if not np.isfinite(Xc.data).all():
        raise NonFiniteError("training matrix contains non-finite values")
    if C <= 0:
        raise ValueError("C must be positive")

    n, d = Xc.shape
    Xa = sp.hstack([Xc, np.ones((n, 1))], format="csr")  # bias feature
    qd = np.asarray(Xa.multiply(Xa).sum(axis=1)).ravel()
    qd[qd == 0.0] = 1.0  # all-zero rows never move their alpha anyway
    alpha = np.zeros(n)
    w = np.zeros(d + 1)
    rng = np.random.default_rng(seed)

    primal = gap = np.inf
    epochs = 0
    for epoch in range(max_epochs):
        order = rng.permutation(n)
        _cd_epoch(Xa.indptr, Xa.indices, Xa.data, yv, qd, alpha, w, C, order)
        epochs = epoch + 1
        margins = 1.0 - yv * (Xa @ w)
        reg = 0.5 * float(w @ w)
        primal = reg + C * float(np.clip(margins, 0.0, None).sum())
        dual = float(alpha.sum()) - reg
        gap = primal - dual
        if gap <= tol * max(abs(primal), 1.0):
            break

    return LinearSvmModel(
        weights=w[:-1].copy(), bias=float(w[-1]), C=C, tol=tol, seed=seed,
        feature_names=list(feature_names) if feature_names is not None else None,
        epochs_run=epochs, primal_objective=primal, duality_gap=gap,
    )


def svm_decision(model: LinearSvmModel, X) -> np.ndarray:
    Xc = _as_csr(X)
    if Xc.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"matrix has {Xc.shape[1]} columns, model expects {model.weights.shape[0]}")
    return np.asarray(Xc @ model.weights).ravel() + model.bias


def svm_predict(model: LinearSvmModel, X) -> np.ndarray:
    """Signs of the decision values; exact zeros map to +1."""
    decision = svm_decision(model, X)
    return np.where(decision >= 0.0, 1, -1)


def top_coefficients(model: LinearSvmModel, k: int,
                     feature_names: list[str] | None = None
                     ) -> tuple[list[tuple[str, float]], list[tuple[str, float]]]:
    """The k most positive and k most negative weights with their names.

    Each returned list is ordered by absolute weight descending with ties
    broken by feature name. k larger than the width is clipped.
    """
    names = feature_names if feature_names is not None else model.feature_names
    if names is None:
        names = [f"f{i}" for i in range(model.weights.shape[0])]
    if len(names) != model.weights.shape[0]:
        raise ValueError("feature names do not match model width")
    k = max(0, min(k, model.weights.shape[0]))
    if k == 0:
        return [], []
    pairs = list(zip(names, model.weights.tolist()))
    positive = sorted(pairs, key=lambda p: (-p[1], p[0]))[:k]
    negative = sorted(pairs, key=lambda p: (p[1], p[0]))[:k]
    positive.sort(key=lambda p: (-abs(p[1]), p[0]))
    negative.sort(key=lambda p: (-abs(p[1]), p[0]))
    return positive, negative
