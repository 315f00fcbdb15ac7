"""Document featurization, random-forest classification, and the keyword baseline.

Each trained model featurizes a document as a flat real vector: the
inferred topic mixture, the mean of word vectors, or the mean final-layer
hidden state.  A from-scratch random forest (axis-aligned Gini splits,
sqrt feature sampling, bootstrap resampling, majority vote) classifies
the vectors under seeded stratified k-fold cross-validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .bpe import BpeTokenizer
from .corpus import AbstractClass, CorpusError, ProcessedDocument, RawDocument
from .embeddings import EmbeddingMatrix
from .topic_model import LdaModel, infer_doc_topics
from .transformer import NUM_SPECIALS, TransformerModel, encode_document, final_hidden_states
from .util import derive_seed

FEATURE_METHODS = ("lda-theta", "w2v-mean", "transformer-mean")


@dataclass(frozen=True)
class FeatureVector:
    doc_id: str
    values: np.ndarray
    method: str


def featurize_lda(
    model: LdaModel, doc: ProcessedDocument, iterations: int = 100, seed: int = 42
) -> FeatureVector:
    """Inferred topic mixture (length K); per-document seeded fold-in."""
    theta = infer_doc_topics(
        model, doc, iterations=iterations, seed=derive_seed(seed, "featurize-lda", doc.id)
    ).theta
    return FeatureVector(doc_id=doc.id, values=theta, method="lda-theta")


def featurize_w2v(emb: EmbeddingMatrix, doc: ProcessedDocument) -> FeatureVector:
    """Arithmetic mean of input vectors over in-vocabulary tokens."""
    t2i = emb.vocab.term_to_index
    ids = [t2i[t] for t in doc.tokens if t in t2i]
    if not ids:
        raise CorpusError(f"document {doc.id!r} has no in-vocabulary tokens")
    return FeatureVector(
        doc_id=doc.id, values=emb.input_vectors[ids].mean(axis=0), method="w2v-mean"
    )


def featurize_transformer(
    model: TransformerModel, tokenizer: BpeTokenizer, doc: ProcessedDocument
) -> FeatureVector:
    """Final-layer hidden states averaged over non-special positions; no masking."""
    ids = encode_document(tokenizer, doc, model.config.max_seq)
    arr = np.asarray([ids], dtype=np.int64)
    hidden = final_hidden_states(model, arr, np.ones_like(arr, dtype=bool))[0]
    keep = np.asarray(ids) >= NUM_SPECIALS
    if not keep.any():
        raise CorpusError(f"document {doc.id!r} encodes to special tokens only")
    return FeatureVector(
        doc_id=doc.id, values=hidden[keep].mean(axis=0), method="transformer-mean"
    )


# ---------------------------------------------------------------------------
# Random forest


@dataclass(frozen=True)
class RfConfig:
    trees: int = 200
    criterion: str = "gini"
    max_features: str = "sqrt"  # or "all"
    max_depth: Optional[int] = None
    bootstrap: bool = True
    seed: int = 42

    def __post_init__(self):
        if self.trees < 1:
            raise ValueError("trees must be >= 1")
        if self.criterion != "gini":
            raise ValueError(f"unsupported criterion {self.criterion!r}")
        if self.max_features not in ("sqrt", "all"):
            raise ValueError(f"max_features must be 'sqrt' or 'all', got {self.max_features!r}")


@dataclass
class TreeNode:
    # leaf: class_counts set; internal: feature/threshold/left/right set
    class_counts: Optional[np.ndarray] = None
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.class_counts is not None


@dataclass
class RandomForest:
    trees: list[TreeNode]
    classes: list[int]  # class codes present at fit time
    n_features: int
    config: RfConfig


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float((p * p).sum())


def _best_split(X, y, feature_ids, n_classes):
    """Lowest weighted-Gini axis-aligned split over the candidate features.

    Thresholds are midpoints between adjacent distinct sorted values; ties
    resolve to the smallest feature index, then the smallest threshold.
    Returns (feature, threshold, gain) or None when nothing improves.
    """
    n = len(y)
    parent_counts = np.bincount(y, minlength=n_classes)
    parent_gini = _gini(parent_counts)
    best = None  # (weighted_gini, feature, threshold)
    for f in sorted(feature_ids):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        left_counts = np.zeros(n_classes)
        right_counts = parent_counts.astype(float).copy()
        for i in range(n - 1):
            c = ys[i]
            left_counts[c] += 1
            right_counts[c] -= 1
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            w = (nl * _gini(left_counts) + nr * _gini(right_counts)) / n
            threshold = (xs[i] + xs[i + 1]) / 2.0
            if best is None or w < best[0] - 1e-15:
                best = (w, f, threshold)
            # equal-quality splits keep the earlier (smaller) feature and threshold
    if best is None or best[0] >= parent_gini - 1e-15:
        return None
    return best[1], best[2], parent_gini - best[0]


def _grow_tree(X, y, n_classes, rng, config: RfConfig, depth: int) -> TreeNode:
    counts = np.bincount(y, minlength=n_classes)
    pure = (counts > 0).sum() <= 1
    at_depth = config.max_depth is not None and depth >= config.max_depth
    if pure or at_depth or len(y) < 2:
        return TreeNode(class_counts=counts)
    d = X.shape[1]
    if config.max_features == "sqrt":
        k = min(d, int(np.ceil(np.sqrt(d))))
        perm = rng.permutation(d)
        split = _best_split(X, y, perm[:k], n_classes)
        if split is None and k < d:
            # widen to the full feature set before giving up on an impure node
            split = _best_split(X, y, perm, n_classes)
    else:
        split = _best_split(X, y, np.arange(d), n_classes)
    if split is None:
        return TreeNode(class_counts=counts)
    f, threshold, _gain = split
    mask = X[:, f] <= threshold
    left = _grow_tree(X[mask], y[mask], n_classes, rng, config, depth + 1)
    right = _grow_tree(X[~mask], y[~mask], n_classes, rng, config, depth + 1)
    return TreeNode(feature=int(f), threshold=float(threshold), left=left, right=right)


def fit_random_forest(
    features: Sequence[np.ndarray] | np.ndarray,
    labels: Sequence[int],
    config: RfConfig,
) -> RandomForest:
    """Fit the ensemble; each tree sees a bootstrap sample (when enabled)
    and samples ceil(sqrt(d)) candidate features per node.  Deterministic
    given the seed: per-tree streams derive from the master seed."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray([int(l) for l in labels], dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features must be a 2-D array aligned with labels")
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise ValueError("need at least 2 classes to fit a classifier")
    n_classes = max(classes) + 1
    trees = []
    for t in range(config.trees):
        rng = np.random.default_rng(derive_seed(config.seed, "rf-tree", t))
        if config.bootstrap:
            idx = rng.integers(0, len(y), size=len(y))
            Xt, yt = X[idx], y[idx]
        else:
            Xt, yt = X, y
        trees.append(_grow_tree(Xt, yt, n_classes, rng, config, depth=0))
    return RandomForest(trees=trees, classes=classes, n_features=X.shape[1], config=config)


def _tree_predict(node: TreeNode, x: np.ndarray) -> int:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    counts = node.class_counts
    top = counts.max()
    return int(np.flatnonzero(counts == top)[0])  # tie -> smallest class code


def rf_predict(forest: RandomForest, feature: np.ndarray) -> int:
    """Majority vote over trees; ties break to the smallest class code."""
    x = np.asarray(feature, dtype=np.float64)
    if x.shape != (forest.n_features,):
        raise ValueError(
            f"feature length {x.shape} does not match training dimensionality ({forest.n_features},)"
        )
    votes = np.zeros(max(forest.classes) + 1, dtype=np.int64)
    for tree in forest.trees:
        votes[_tree_predict(tree, x)] += 1
    top = votes.max()
    return int(np.flatnonzero(votes == top)[0])


def rf_predict_many(forest: RandomForest, features: np.ndarray) -> np.ndarray:
    return np.asarray([rf_predict(forest, x) for x in np.asarray(features, dtype=np.float64)])


# ---------------------------------------------------------------------------
# Cross-validation


@dataclass(frozen=True)
class CvReport:
    fold_accuracies: tuple[float, ...]
    mean: float
    std: float  # population standard deviation across folds
    k: int
    seed: int


FitPredict = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> list[np.ndarray]:
    """Seeded stratified partition: each class is shuffled then dealt
    round-robin, so per-fold class counts differ by at most one."""
    y = np.asarray([int(l) for l in labels])
    if k < 2:
        raise ValueError("k must be >= 2")
    folds: list[list[int]] = [[] for _ in range(k)]
    rng = np.random.default_rng(derive_seed(seed, "cv-folds"))
    for cls in sorted(set(y.tolist())):
        members = np.flatnonzero(y == cls)
        if len(members) < k:
            raise ValueError(
                f"class {cls} has only {len(members)} members; cannot stratify into {k} folds"
            )
        members = members[rng.permutation(len(members))]
        for i, m in enumerate(members):
            folds[i % k].append(int(m))
    return [np.asarray(sorted(f)) for f in folds]


def _rf_fit_predict(config: RfConfig) -> FitPredict:
    def fit_predict(train_X, train_y, test_X):
        forest = fit_random_forest(train_X, train_y, config)
        return rf_predict_many(forest, test_X)

    return fit_predict


def cross_validate(
    features: Sequence[np.ndarray] | np.ndarray,
    labels: Sequence[int],
    k: int,
    rf_config: RfConfig,
    seed: int,
    fit_predict: Optional[FitPredict] = None,
) -> CvReport:
    """Stratified k-fold accuracy with mean and population std.

    ``fit_predict`` defaults to the random forest; tests may inject a
    different classifier to exercise the fold mechanics in isolation.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray([int(l) for l in labels])
    folds = stratified_folds(y, k, seed)
    if fit_predict is None:
        fit_predict = _rf_fit_predict(rf_config)
    accs = []
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([folds[j] for j in range(k) if j != i])
        preds = fit_predict(X[train_idx], y[train_idx], X[test_idx])
        accs.append(float(np.mean(preds == y[test_idx])))
    accs_arr = np.asarray(accs)
    return CvReport(
        fold_accuracies=tuple(accs),
        mean=float(accs_arr.mean()),
        std=float(accs_arr.std()),  # population (ddof=0)
        k=k,
        seed=seed,
    )


def holdout_evaluate(
    features: Sequence[np.ndarray] | np.ndarray,
    labels: Sequence[int],
    rf_config: RfConfig,
    seed: int,
    test_size: float = 0.33,
) -> float:
    """Single stratified train/test holdout accuracy (the 0.33 test-size variant)."""
    if not 0.0 < test_size < 1.0:
        raise ValueError("test_size must lie in (0, 1)")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray([int(l) for l in labels])
    rng = np.random.default_rng(derive_seed(seed, "holdout"))
    test_idx: list[int] = []
    for cls in sorted(set(y.tolist())):
        members = np.flatnonzero(y == cls)
        members = members[rng.permutation(len(members))]
        n_test = max(1, int(np.floor(test_size * len(members) + 0.5)))
        test_idx.extend(members[:n_test].tolist())
    test_mask = np.zeros(len(y), dtype=bool)
    test_mask[test_idx] = True
    forest = fit_random_forest(X[~test_mask], y[~test_mask], rf_config)
    preds = rf_predict_many(forest, X[test_mask])
    return float(np.mean(preds == y[test_mask]))


# ---------------------------------------------------------------------------
# Keyword baseline

_KEYWORD_STEMS = (
    ("character", AbstractClass.CHARACTERIZATION),
    ("model", AbstractClass.MODELING),
    ("process", AbstractClass.PROCESSING),
    ("synthes", AbstractClass.SYNTHESIS),
)


def keyword_baseline(doc: RawDocument) -> Optional[AbstractClass]:
    """Class of the earliest class-keyword stem in the text, or None.

    Scans the lowercased text for character*/model*/process*/synthes*;
    the earliest match wins.  Documents matching no stem stay unlabeled
    (scored as incorrect by the accuracy report).
    """
    text = doc.text.lower()
    best: Optional[tuple[int, AbstractClass]] = None
    for stem, cls in _KEYWORD_STEMS:
        pos = text.find(stem)
        if pos >= 0 and (best is None or pos < best[0]):
            best = (pos, cls)
    return best[1] if best else None


def keyword_baseline_accuracy(docs: Sequence[RawDocument]) -> tuple[float, int, int]:
    """(accuracy, labeled_count, unlabeled_count) over documents with labels."""
    labeled = [d for d in docs if d.label is not None]
    if not labeled:
        raise CorpusError("no labeled documents to score")
    correct = 0
    unlabeled = 0
    for doc in labeled:
        pred = keyword_baseline(doc)
        if pred is None:
            unlabeled += 1
        elif pred == doc.label:
            correct += 1
    return correct / len(labeled), len(labeled), unlabeled


# ---------------------------------------------------------------------------
# Serialization


def _node_to_json(node: TreeNode):
    if node.is_leaf:
        return {"counts": [int(c) for c in node.class_counts]}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_json(node.left),
        "right": _node_to_json(node.right),
    }


def _node_from_json(obj) -> TreeNode:
    if "counts" in obj:
        return TreeNode(class_counts=np.asarray(obj["counts"], dtype=np.int64))
    return TreeNode(
        feature=int(obj["feature"]),
        threshold=float(obj["threshold"]),
        left=_node_from_json(obj["left"]),
        right=_node_from_json(obj["right"]),
    )


def save_forest(forest: RandomForest, path: str | Path) -> None:
    obj = {
        "schema_version": 1,
        "kind": "random_forest",
        "classes": forest.classes,
        "n_features": forest.n_features,
        "config": {
            "trees": forest.config.trees,
            "criterion": forest.config.criterion,
            "max_features": forest.config.max_features,
            "max_depth": forest.config.max_depth,
            "bootstrap": forest.config.bootstrap,
            "seed": forest.config.seed,
        },
        "trees": [_node_to_json(t) for t in forest.trees],
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_forest(path: str | Path) -> RandomForest:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"forest file does not exist: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    if obj.get("schema_version") != 1 or obj.get("kind") != "random_forest":
        raise ValueError(f"{path}: not a schema-v1 random forest file")
    return RandomForest(
        trees=[_node_from_json(t) for t in obj["trees"]],
        classes=[int(c) for c in obj["classes"]],
        n_features=int(obj["n_features"]),
        config=RfConfig(**obj["config"]),
    )


# Features CSV: header id,method,v1..vd


def save_features(features: Sequence[FeatureVector], path: str | Path) -> None:
    if not features:
        raise ValueError("no feature vectors to save")
    d = len(features[0].values)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,method," + ",".join(f"v{i+1}" for i in range(d)) + "\n")
        for fv in features:
            if len(fv.values) != d:
                raise ValueError("inconsistent feature dimensionality")
            fh.write(fv.doc_id + "," + fv.method + "," + ",".join(repr(float(x)) for x in fv.values) + "\n")


def load_features(path: str | Path) -> list[FeatureVector]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"features file does not exist: {path}")
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("id,method,"):
            raise ValueError(f"{path}: not a features CSV")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            out.append(
                FeatureVector(
                    doc_id=parts[0],
                    method=parts[1],
                    values=np.asarray([float(x) for x in parts[2:]]),
                )
            )
    if not out:
        raise ValueError(f"{path}: empty features file")
    return out
