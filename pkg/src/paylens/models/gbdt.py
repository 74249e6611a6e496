"""Gradient boosted regression trees on the logistic loss.

Each round fits a depth-limited regression tree to the gradient/curvature
statistics of the logistic loss (g = p - y, h = p (1 - p)) using histogram
split search, then adds it with learning rate eta. A halving line search on
the tree's contribution guarantees the recorded training loss never
increases from one round to the next; a tree that cannot help is kept with
zero-scaled leaves so the ensemble always holds the configured number of
rounds. No subsampling is used, so training is deterministic; the seed is
recorded for config round-trips.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import SingleClass

_LAMBDA = 1e-3       # ridge on leaf Newton steps
_MAX_LEAF = 10.0     # cap on per-tree log-odds step


@dataclass
class GbdtConfig:
    rounds: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    seed: int = 0
    n_bins: int = 64


@dataclass
class GbdtModel:
    trees: list[dict]        # nested {feature, threshold, left, right} / {value}
    init_log_odds: float
    config: GbdtConfig
    feature_names: list[str] | None = None
    loss_curve: list[float] = field(default_factory=list)  # init + one per round

    kind: str = field(default="gbdt", init=False)

    def to_payload(self) -> dict:
        return {
            "trees": self.trees,
            "init_log_odds": self.init_log_odds,
            "config": vars(self.config),
            "feature_names": self.feature_names,
            "loss_curve": self.loss_curve,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "GbdtModel":
        return cls(
            trees=payload["trees"],
            init_log_odds=float(payload["init_log_odds"]),
            config=GbdtConfig(**payload["config"]),
            feature_names=payload.get("feature_names"),
            loss_curve=list(payload.get("loss_curve", [])),
        )


def _dense(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.todense(), dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


def _check_labels_01(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    values = set(np.unique(y).tolist())
    if not values <= {0.0, 1.0}:
        raise ValueError(f"labels must be in {{0, 1}}, got {sorted(values)}")
    if len(values) < 2:
        raise SingleClass("training labels contain a single class")
    return y


def _bce(logits: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.maximum(logits, 0.0) - logits * y
                         + np.log1p(np.exp(-np.abs(logits)))))


def _bin_columns(Xd: np.ndarray, n_bins: int) -> tuple[np.ndarray, list[np.ndarray]]:
    n, d = Xd.shape
    codes = np.zeros((n, d), dtype=np.int32)
    cuts_list: list[np.ndarray] = []
    for j in range(d):
        col = Xd[:, j]
        uniq = np.unique(col)
        if uniq.size <= 1:
            cuts = np.empty(0)
        elif uniq.size <= n_bins:
            cuts = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            qs = np.quantile(col, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
            cuts = np.unique(qs)
        if cuts.size:
            codes[:, j] = np.searchsorted(cuts, col, side="right")
        cuts_list.append(cuts)
    return codes, cuts_list


def _histograms(codes: np.ndarray, g: np.ndarray, h: np.ndarray, n_bins: int):
    m, d = codes.shape
    offsets = (np.arange(d, dtype=np.int64) * n_bins)[None, :]
    flat = (codes.astype(np.int64) + offsets).ravel()
    size = d * n_bins
    hg = np.bincount(flat, weights=np.repeat(g, d), minlength=size).reshape(d, n_bins)
    hh = np.bincount(flat, weights=np.repeat(h, d), minlength=size).reshape(d, n_bins)
    hc = np.bincount(flat, minlength=size).reshape(d, n_bins)
    return hg, hh, hc


def _leaf_value(gsum: float, hsum: float) -> float:
    return float(np.clip(-gsum / (hsum + _LAMBDA), -_MAX_LEAF, _MAX_LEAF))


def _build_tree(codes: np.ndarray, cuts_list: list[np.ndarray],
                g: np.ndarray, h: np.ndarray, idx: np.ndarray,
                depth: int, max_depth: int, n_bins: int) -> dict:
    gsum = float(g[idx].sum())
    hsum = float(h[idx].sum())
    if depth >= max_depth or idx.size < 2:
        return {"value": _leaf_value(gsum, hsum)}

    hg, hh, hc = _histograms(codes[idx], g[idx], h[idx], n_bins)
    GL = np.cumsum(hg, axis=1)[:, :-1]
    HL = np.cumsum(hh, axis=1)[:, :-1]
    CL = np.cumsum(hc, axis=1)[:, :-1]
    GR = gsum - GL
    HR = hsum - HL
    CR = idx.size - CL
    gain = (GL ** 2 / (HL + _LAMBDA) + GR ** 2 / (HR + _LAMBDA)
            - gsum ** 2 / (hsum + _LAMBDA))
    gain = np.where((CL > 0) & (CR > 0), gain, -np.inf)

    best = int(np.argmax(gain))  # ties: lowest feature index, lowest bin
    best_gain = gain.flat[best]
    if not np.isfinite(best_gain) or best_gain <= 1e-12:
        return {"value": _leaf_value(gsum, hsum)}
    feature, b = divmod(best, n_bins - 1)
    threshold = float(cuts_list[feature][b])

    mask = codes[idx, feature] <= b
    left = _build_tree(codes, cuts_list, g, h, idx[mask],
                       depth + 1, max_depth, n_bins)
    right = _build_tree(codes, cuts_list, g, h, idx[~mask],
                        depth + 1, max_depth, n_bins)
    return {"feature": int(feature), "threshold": threshold,
            "left": left, "right": right}


def _tree_apply(node: dict, Xd: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if "value" in node:
        out[idx] = node["value"]
        return
    mask = Xd[idx, node["feature"]] < node["threshold"]
    _tree_apply(node["left"], Xd, idx[mask], out)
    _tree_apply(node["right"], Xd, idx[~mask], out)


def _scale_leaves(node: dict, scale: float) -> None:
    if "value" in node:
        node["value"] *= scale
        return
    _scale_leaves(node["left"], scale)
    _scale_leaves(node["right"], scale)


def train_gbdt(X, y, config: GbdtConfig | None = None,
               feature_names: list[str] | None = None) -> GbdtModel:
    if config is None:
        config = GbdtConfig()
    Xd = _dense(X)
    yv = _check_labels_01(y)
    n = Xd.shape[0]
    if n != yv.shape[0]:
        raise ValueError(f"{n} rows vs {yv.shape[0]} labels")

    p_bar = float(np.clip(yv.mean(), 1e-12, 1 - 1e-12))
    init = float(np.log(p_bar / (1.0 - p_bar)))
    F = np.full(n, init)
    eta = config.learning_rate

    codes, cuts_list = _bin_columns(Xd, config.n_bins)
    all_idx = np.arange(n)
    trees: list[dict] = []
    loss = _bce(F, yv)
    loss_curve = [loss]

    for _ in range(config.rounds):
        p = 1.0 / (1.0 + np.exp(-np.clip(F, -500, 500)))
        g = p - yv
        h = p * (1.0 - p)
        tree = _build_tree(codes, cuts_list, g, h, all_idx, 0,
                           config.max_depth, config.n_bins)
        contrib = np.zeros(n)
        _tree_apply(tree, Xd, all_idx, contrib)

        scale = 1.0 if eta != 0.0 else 0.0
        while scale > 1e-8:
            new_loss = _bce(F + eta * scale * contrib, yv)
            if new_loss <= loss:
                break
            scale *= 0.5
        else:
            scale = 0.0
            new_loss = loss
        if scale != 1.0:
            _scale_leaves(tree, scale)
        F = F + eta * scale * contrib
        loss = _bce(F, yv) if scale else loss
        trees.append(tree)
        loss_curve.append(loss)

    return GbdtModel(trees=trees, init_log_odds=init, config=config,
                     feature_names=list(feature_names) if feature_names else None,
                     loss_curve=loss_curve)


def gbdt_raw(model: GbdtModel, X) -> np.ndarray:
    """Accumulated log-odds: init + eta * sum of tree outputs."""
    Xd = _dense(X)
    n = Xd.shape[0]
    idx = np.arange(n)
    out = np.full(n, model.init_log_odds)
    buf = np.zeros(n)
    for tree in model.trees:
        _tree_apply(tree, Xd, idx, buf)
        out += model.config.learning_rate * buf
    return out


def gbdt_proba(model: GbdtModel, X) -> np.ndarray:
    z = gbdt_raw(model, X)
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def gbdt_predict(model: GbdtModel, X) -> np.ndarray:
    return (gbdt_raw(model, X) >= 0.0).astype(np.int64)
