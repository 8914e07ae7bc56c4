"""Classifiers: multinomial logistic regression and a random forest.

Both are implemented directly on numpy so training is fully
deterministic given a seed.  The same two estimators serve the
single-class task (real vs synthetic) and the multi-class task (real
plus one class per generator architecture).
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import (
    DimensionMismatch,
    ModelFormatError,
    NonFiniteFeature,
    SingleClassData,
    TuningFailed,
    VoicedetError,
)
from .validation import check_feature_matrix, check_same_length

logger = logging.getLogger(__name__)

_ARMIJO_C = 1e-4
_MAX_BACKTRACKS = 60


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted for overflow safety."""
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def logistic_loss_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    y_onehot: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy with an L2 penalty on the weights (not bias).

    Returns ``(loss, grad_weights, grad_bias)``.  Exposed as a plain
    function so the gradient can be checked against finite differences.
    """
    n = X.shape[0]
    probs = softmax(X @ weights.T + bias)
    loss = -np.sum(y_onehot * np.log(np.maximum(probs, 1e-300))) / n
    loss += 0.5 * l2 * float(np.sum(weights**2))
    delta = (probs - y_onehot) / n
    grad_w = delta.T @ X + l2 * weights
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


class LogisticRegression(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression trained by full-batch descent.

    Weights start at zero (so an untrained-but-fit model on symmetric
    data predicts uniform probabilities) and each step uses Armijo
    backtracking from a unit step, halving until sufficient decrease.
    Training stops when the gradient's max-norm drops below ``tol``.
    """

    def __init__(
        self,
        l2: float = 1e-3,
        max_iter: int = 500,
        tol: float = 1e-6,
        seed: int = 0,
    ):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, X, y) -> "LogisticRegression":
        X = check_feature_matrix(X)
        y = np.asarray(y)
        check_same_length(X, y, "X and y")
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise SingleClassData("training data has a single class")
        n, d = X.shape
        k = self.classes_.size
        y_idx = np.searchsorted(self.classes_, y)
        y_onehot = np.zeros((n, k))
        y_onehot[np.arange(n), y_idx] = 1.0

        W = np.zeros((k, d))
        b = np.zeros(k)
        loss, gw, gb = logistic_loss_grad(W, b, X, y_onehot, self.l2)
        curve = [loss]
        for _ in range(self.max_iter):
            gnorm_inf = max(np.abs(gw).max(), np.abs(gb).max())
            if gnorm_inf < self.tol:
                break
            g_sq = float(np.sum(gw**2) + np.sum(gb**2))
            step = 1.0
            accepted = False
            for _ in range(_MAX_BACKTRACKS):
                W_new = W - step * gw
                b_new = b - step * gb
                loss_new, gw_new, gb_new = logistic_loss_grad(
                    W_new, b_new, X, y_onehot, self.l2
                )
                if loss_new <= loss - _ARMIJO_C * step * g_sq:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break  # no further decrease possible at float precision
            W, b, loss, gw, gb = W_new, b_new, loss_new, gw_new, gb_new
            curve.append(loss)
        self.weights_ = W
        self.bias_ = b
        self.loss_curve_ = curve
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_feature_matrix(X)
        if X.shape[1] != self.weights_.shape[1]:
            raise DimensionMismatch(
                f"model expects {self.weights_.shape[1]} features, got {X.shape[1]}"
            )
        return softmax(X @ self.weights_.T + self.bias_)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


@dataclass
class _Tree:
    """Flat array representation of one decision tree.

    ``feature[i] < 0`` marks node ``i`` as a leaf; ``dist`` rows hold
    each node's training-class distribution (used at leaves).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    dist: np.ndarray


def _gini_from_counts(counts: np.ndarray, total: float) -> float:
    return 1.0 - float(np.sum(counts**2)) / (total * total)


def _best_split(
    X: np.ndarray,
    y_idx: np.ndarray,
    rows: np.ndarray,
    feat_candidates: np.ndarray,
    n_classes: int,
    min_leaf: int,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, weighted_child_gini) at one node.

    Candidates are midpoints between consecutive distinct values.  Ties
    on impurity go to the lowest feature index, then lowest threshold;
    iterating features in ascending order with a strict ``<`` gives
    exactly that order.
    """
    nn = rows.size
    best: tuple[int, float, float] | None = None
    best_score = np.inf
    for f in np.sort(feat_candidates):
        vals = X[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y_idx[rows][order]
        onehot = np.zeros((nn, n_classes))
        onehot[np.arange(nn), sy] = 1.0
        left_counts = np.cumsum(onehot, axis=0)
        total = left_counts[-1]

        cut = np.flatnonzero(sv[:-1] < sv[1:]) + 1  # left block size at each cut
        cut = cut[(cut >= min_leaf) & (nn - cut >= min_leaf)]
        if cut.size == 0:
            continue
        lc = left_counts[cut - 1]
        rc = total - lc
        nl = cut.astype(np.float64)
        nr = nn - nl
        gini_l = 1.0 - np.sum(lc**2, axis=1) / nl**2
        gini_r = 1.0 - np.sum(rc**2, axis=1) / nr**2
        weighted = (nl * gini_l + nr * gini_r) / nn
        j = int(np.argmin(weighted))  # argmin takes the first = lowest threshold
        if weighted[j] < best_score:
            best_score = float(weighted[j])
            thr = 0.5 * (sv[cut[j] - 1] + sv[cut[j]])
            best = (int(f), float(thr), best_score)
    return best


def _grow_tree(
    X: np.ndarray,
    y_idx: np.ndarray,
    n_classes: int,
    rng: np.random.Generator,
    max_depth: int | None,
    min_leaf: int,
    importances: np.ndarray,
) -> _Tree:
    n, d = X.shape
    m_try = max(1, int(np.sqrt(d)))
    boot = rng.integers(0, n, size=n)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    dist: list[np.ndarray] = []

    def class_counts(rows: np.ndarray) -> np.ndarray:
        return np.bincount(y_idx[rows], minlength=n_classes).astype(np.float64)

    def new_node(counts: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        total = counts.sum()
        dist.append(counts / total if total > 0 else np.full(n_classes, 1.0 / n_classes))
        return len(feature) - 1

    # Depth-first, left child before right, so the per-node random
    # feature draws consume the generator in a reproducible order.
    stack: list[tuple[int, np.ndarray, int]] = []
    root_rows = boot
    root_id = new_node(class_counts(root_rows))
    stack.append((root_id, root_rows, 0))
    while stack:
        node_id, rows, depth = stack.pop()
        counts = class_counts(rows)
        total = counts.sum()
        node_gini = _gini_from_counts(counts, total)
        if (
            (max_depth is not None and depth >= max_depth)
            or rows.size < 2 * min_leaf
            or node_gini == 0.0
        ):
            continue
        cand = rng.choice(d, size=m_try, replace=False)
        split = _best_split(X, y_idx, rows, cand, n_classes, min_leaf)
        if split is None:
            continue
        f, thr, child_gini = split
        if child_gini >= node_gini:
            continue  # no impurity decrease; keep as leaf
        importances[f] += (rows.size / n) * (node_gini - child_gini)
        go_left = X[rows, f] <= thr
        rows_l, rows_r = rows[go_left], rows[~go_left]
        feature[node_id] = f
        threshold[node_id] = thr
        left_id = new_node(class_counts(rows_l))
        right_id = new_node(class_counts(rows_r))
        left[node_id] = left_id
        right[node_id] = right_id
        # LIFO stack: push right first so the left subtree grows first.
        stack.append((right_id, rows_r, depth + 1))
        stack.append((left_id, rows_l, depth + 1))

    return _Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.vstack(dist),
    )


class RandomForest(BaseEstimator, ClassifierMixin):
    """Bagged CART forest with Gini splits and sqrt-feature draws.

    Each tree gets its own generator seeded ``seed + tree_index``, so
    individual trees are reproducible no matter the forest size.
    """

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int | None = 8,
        min_leaf: int = 1,
        seed: int = 0,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed

    def fit(self, X, y) -> "RandomForest":
        X = check_feature_matrix(X)
        y = np.asarray(y)
        check_same_length(X, y, "X and y")
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise SingleClassData("training data has a single class")
        y_idx = np.searchsorted(self.classes_, y)
        k = self.classes_.size
        d = X.shape[1]

        self.trees_ = []
        importance_sum = np.zeros(d)
        for t in range(self.n_trees):
            rng = np.random.Generator(np.random.PCG64(self.seed + t))
            tree_imp = np.zeros(d)
            tree = _grow_tree(X, y_idx, k, rng, self.max_depth, self.min_leaf, tree_imp)
            self.trees_.append(tree)
            s = tree_imp.sum()
            if s > 0:
                importance_sum += tree_imp / s
        self.feature_importances_ = importance_sum / self.n_trees
        self.n_features_ = d
        return self

    def _tree_proba(self, tree: _Tree, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = tree.feature[node] >= 0
        while np.any(active):
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, tree.feature[nd]] <= tree.threshold[nd]
            node[idx] = np.where(go_left, tree.left[nd], tree.right[nd])
            active = tree.feature[node] >= 0
        return tree.dist[node]

    def predict_proba(self, X) -> np.ndarray:
        X = check_feature_matrix(X)
        if X.shape[1] != self.n_features_:
            raise DimensionMismatch(
                f"model expects {self.n_features_} features, got {X.shape[1]}"
            )
        acc = np.zeros((X.shape[0], self.classes_.size))
        for tree in self.trees_:
            acc += self._tree_proba(tree, X)
        return acc / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


# --- task-level training, tuning and persistence ------------------------

from .spectral import ScalerStats, standardize_apply, standardize_fit  # noqa: E402

TASK_SINGLE = "single"
TASK_MULTI = "multi"
KIND_LINEAR = "linear"
KIND_FOREST = "forest"


@dataclass
class TrainedModel:
    """A fit classifier plus everything needed to reapply it.

    ``selected_indices`` is the spectral-family column subset (None for
    families used whole); the scaler statistics apply after selection.
    The checksum over the scaler arrays is re-verified at prediction
    time to catch models paired with the wrong preprocessing.
    """

    kind: str
    task: str
    family: str
    classes: tuple[str, ...]
    scaler: ScalerStats
    estimator: LogisticRegression | RandomForest
    params: dict
    selected_indices: tuple[int, ...] | None = None
    stats_checksum: str = ""

    def __post_init__(self) -> None:
        if not self.stats_checksum:
            self.stats_checksum = scaler_checksum(self.scaler)


def scaler_checksum(stats: ScalerStats) -> str:
    h = hashlib.sha256()
    h.update(stats.mean.tobytes())
    h.update(stats.std.tobytes())
    return h.hexdigest()


def _make_estimator(kind: str, params: dict, seed: int):
    if kind == KIND_LINEAR:
        return LogisticRegression(seed=seed, **params)
    if kind == KIND_FOREST:
        return RandomForest(seed=seed, **params)
    raise ValueError(f"unknown classifier kind {kind!r}")


def class_order(task: str, labels: Sequence[str]) -> tuple[str, ...]:
    """Canonical class order: real first, then sorted architectures."""
    present = set(labels)
    if task == TASK_SINGLE:
        order = ("real", "synthetic")
    elif task == TASK_MULTI:
        order = ("real",) + tuple(sorted(present - {"real"}))
    else:
        raise ValueError(f"unknown task {task!r}")
    missing = [c for c in order if c not in present]
    if missing or len(order) < 2:
        raise SingleClassData(f"task {task!r} needs classes {order}, labels cover {sorted(present)}")
    return order


def train_model(
    X: np.ndarray,
    labels: Sequence[str],
    kind: str,
    task: str,
    family: str,
    params: dict,
    seed: int = 0,
    selected_indices: Sequence[int] | None = None,
) -> TrainedModel:
    """Standardize (after optional column selection) and fit a classifier."""
    X = check_feature_matrix(X)
    check_same_length(X, labels, "X and labels")
    classes = class_order(task, labels)
    if selected_indices is not None:
        X = X[:, list(selected_indices)]
    scaler = standardize_fit(X)
    Xs = standardize_apply(X, scaler)
    estimator = _make_estimator(kind, params, seed)
    estimator.fit(Xs, np.asarray(list(labels)))
    return TrainedModel(
        kind=kind,
        task=task,
        family=family,
        classes=classes,
        scaler=scaler,
        estimator=estimator,
        params=dict(params),
        selected_indices=tuple(selected_indices) if selected_indices is not None else None,
    )


def predict_proba(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Class probabilities in ``model.classes`` order."""
    X = check_feature_matrix(X)
    if model.selected_indices is not None:
        if X.shape[1] <= max(model.selected_indices):
            raise DimensionMismatch(
                f"matrix has {X.shape[1]} columns, selection needs "
                f">= {max(model.selected_indices) + 1}"
            )
        X = X[:, list(model.selected_indices)]
    if X.shape[1] != model.scaler.mean.shape[0]:
        raise DimensionMismatch(
            f"model expects {model.scaler.mean.shape[0]} features, got {X.shape[1]}"
        )
    if scaler_checksum(model.scaler) != model.stats_checksum:
        raise ModelFormatError("scaler statistics fail their checksum")
    Xs = standardize_apply(X, model.scaler)
    raw = model.estimator.predict_proba(Xs)
    # Reorder estimator classes (sorted) into the model's class order.
    est_classes = [str(c) for c in model.estimator.classes_]
    cols = [est_classes.index(c) for c in model.classes]
    return raw[:, cols]


def synthetic_score(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Score in [0, 1]: probability mass on non-real classes."""
    proba = predict_proba(model, X)
    return 1.0 - proba[:, model.classes.index("real")]


def default_grid(kind: str) -> list[dict]:
    """Hyperparameter grid searched during tuning, in evaluation order."""
    if kind == KIND_LINEAR:
        return [{"l2": v} for v in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)]
    if kind == KIND_FOREST:
        return [
            {"n_trees": nt, "max_depth": md, "min_leaf": ml}
            for nt in (100, 300)
            for md in (8, 16, None)
            for ml in (1, 5)
        ]
    raise ValueError(f"unknown classifier kind {kind!r}")


@dataclass
class TuneResult:
    best_params: dict
    model: TrainedModel
    log: list[tuple[dict, float]] = field(default_factory=list)


def tune_hyperparameters(
    X_train: np.ndarray,
    labels_train: Sequence[str],
    X_val: np.ndarray,
    labels_val: Sequence[str],
    kind: str,
    task: str,
    family: str,
    grid: Sequence[dict] | None = None,
    seed: int = 0,
    selected_indices: Sequence[int] | None = None,
) -> TuneResult:
    """Grid search on the validation split.

    Single-class models minimize validation EER; multi-class models
    maximize macro-averaged per-class accuracy.  Ties keep the earlier
    grid point.  The returned model is refit on the training split only
    with the winning parameters.
    """
    from .evaluate import macro_accuracy, roc_curve, compute_eer  # noqa: E402

    grid = list(grid) if grid is not None else default_grid(kind)
    if not grid:
        raise ValueError("hyperparameter grid is empty")

    log: list[tuple[dict, float]] = []
    best_score = np.inf
    best_params: dict | None = None
    for params in grid:
        try:
            model = train_model(
                X_train, labels_train, kind, task, family, params, seed, selected_indices
            )
        except VoicedetError as exc:
            logger.warning("skipping grid point %r: %s", params, exc)
            continue
        if task == TASK_SINGLE:
            scores = synthetic_score(model, X_val)
            eer, _ = compute_eer(roc_curve(scores, [lab == "synthetic" for lab in labels_val]))
            score = eer
        else:
            proba = predict_proba(model, X_val)
            preds = [model.classes[j] for j in np.argmax(proba, axis=1)]
            score = -macro_accuracy(preds, list(labels_val))
        log.append((dict(params), float(score)))
        if score < best_score:
            best_score = float(score)
            best_params = dict(params)
    if best_params is None:
        raise TuningFailed("every hyperparameter grid point failed to train")
    final = train_model(
        X_train, labels_train, kind, task, family, best_params, seed, selected_indices
    )
    return TuneResult(best_params, final, log)


# --- text persistence ----------------------------------------------------

_MODEL_MAGIC = "#model-v1"


def _fmt_floats(arr: np.ndarray) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(arr, dtype=np.float64).ravel())


def _parse_floats(text: str) -> np.ndarray:
    if text == "":
        return np.empty(0)
    return np.array([float(v) for v in text.split(",")], dtype=np.float64)


def save_model(model: TrainedModel, path) -> None:
    """Write a model as versioned, line-oriented text.

    Floats are written with ``repr`` so a save/load round trip
    reproduces every parameter bit for bit.
    """
    lines = [
        f"{_MODEL_MAGIC} kind={model.kind} task={model.task} family={model.family}"
    ]
    lines.append("classes\t" + ",".join(model.classes))
    for key in sorted(model.params):
        lines.append(f"param\t{key}={model.params[key]!r}")
    if model.selected_indices is not None:
        lines.append("selected\t" + ",".join(str(i) for i in model.selected_indices))
    lines.append("scaler_mean\t" + _fmt_floats(model.scaler.mean))
    lines.append("scaler_std\t" + _fmt_floats(model.scaler.std))
    lines.append("checksum\t" + model.stats_checksum)

    est = model.estimator
    if model.kind == KIND_LINEAR:
        k, d = est.weights_.shape
        lines.append(f"weights\t{k} {d}")
        for row in est.weights_:
            lines.append("w\t" + _fmt_floats(row))
        lines.append("b\t" + _fmt_floats(est.bias_))
    else:
        lines.append(f"forest\t{len(est.trees_)} {est.n_features_}")
        for t, tree in enumerate(est.trees_):
            lines.append(f"tree\t{t} {tree.feature.size}")
            for i in range(tree.feature.size):
                lines.append(
                    "n\t"
                    f"{tree.feature[i]} {repr(float(tree.threshold[i]))} "
                    f"{tree.left[i]} {tree.right[i]} {_fmt_floats(tree.dist[i])}"
                )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_param_value(text: str):
    if text == "None":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def load_model(path) -> TrainedModel:
    """Load a model written by :func:`save_model`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    if not lines or not lines[0].startswith(_MODEL_MAGIC + " "):
        raise ModelFormatError("missing model header")
    header = dict(part.split("=", 1) for part in lines[0].split()[1:])
    try:
        kind, task, family = header["kind"], header["task"], header["family"]
    except KeyError as exc:
        raise ModelFormatError(f"header missing {exc}") from exc

    fields: dict[str, str] = {}
    params: dict = {}
    body: list[str] = []
    for ln in lines[1:]:
        if not ln:
            continue
        tag, _, rest = ln.partition("\t")
        if tag == "param":
            key, _, val = rest.partition("=")
            params[key] = _parse_param_value(val)
        elif tag in ("classes", "selected", "scaler_mean", "scaler_std", "checksum"):
            fields[tag] = rest
        else:
            body.append(ln)

    for required in ("classes", "scaler_mean", "scaler_std", "checksum"):
        if required not in fields:
            raise ModelFormatError(f"missing {required} line")
    classes = tuple(fields["classes"].split(","))
    scaler = ScalerStats(_parse_floats(fields["scaler_mean"]), _parse_floats(fields["scaler_std"]))
    if scaler_checksum(scaler) != fields["checksum"]:
        raise ModelFormatError("scaler statistics fail their checksum")
    selected = (
        tuple(int(i) for i in fields["selected"].split(","))
        if "selected" in fields
        else None
    )

    seed = int(params.pop("seed", 0))
    estimator = _make_estimator(kind, params, seed)
    estimator.classes_ = np.array(sorted(classes))

    it = iter(body)
    try:
        if kind == KIND_LINEAR:
            first = next(it)
            tag, _, rest = first.partition("\t")
            if tag != "weights":
                raise ModelFormatError(f"expected weights line, got {tag!r}")
            k, d = (int(v) for v in rest.split())
            W = np.empty((k, d))
            for i in range(k):
                tag, _, rest = next(it).partition("\t")
                if tag != "w":
                    raise ModelFormatError("short weights block")
                W[i] = _parse_floats(rest)
            tag, _, rest = next(it).partition("\t")
            if tag != "b":
                raise ModelFormatError("missing bias line")
            estimator.weights_ = W
            estimator.bias_ = _parse_floats(rest)
        else:
            first = next(it)
            tag, _, rest = first.partition("\t")
            if tag != "forest":
                raise ModelFormatError(f"expected forest line, got {tag!r}")
            n_trees, n_features = (int(v) for v in rest.split())
            estimator.n_features_ = n_features
            estimator.trees_ = []
            for _ in range(n_trees):
                tag, _, rest = next(it).partition("\t")
                if tag != "tree":
                    raise ModelFormatError("short forest block")
                _, n_nodes = (int(v) for v in rest.split())
                feat = np.empty(n_nodes, dtype=np.int64)
                thr = np.empty(n_nodes)
                left = np.empty(n_nodes, dtype=np.int64)
                right = np.empty(n_nodes, dtype=np.int64)
                dist = np.empty((n_nodes, len(classes)))
                for i in range(n_nodes):
                    tag, _, rest = next(it).partition("\t")
                    if tag != "n":
                        raise ModelFormatError("short tree block")
                    parts = rest.split()
                    feat[i] = int(parts[0])
                    thr[i] = float(parts[1])
                    left[i] = int(parts[2])
                    right[i] = int(parts[3])
                    dist[i] = _parse_floats(parts[4])
                estimator.trees_.append(_Tree(feat, thr, left, right, dist))
    except StopIteration:
        raise ModelFormatError("model file ends mid-block") from None

    if kind == KIND_FOREST and len(estimator.trees_) != estimator.n_trees:
        # Constructor param reflects what was actually saved.
        estimator.n_trees = len(estimator.trees_)

    return TrainedModel(
        kind=kind,
        task=task,
        family=family,
        classes=classes,
        scaler=scaler,
        estimator=estimator,
        params=params,
        selected_indices=selected,
        stats_checksum=fields["checksum"],
    )
