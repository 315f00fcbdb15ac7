"""Word embeddings trained by negative-sampling SGD (CBOW and skip-gram).

Training discriminates observed (center, context) pairs against noise
words drawn proportionally to count^0.75.  Scoring uses the exact
full-softmax corpus log probability; similarity queries use cosine
distance over the input vectors.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import CorpusError, ProcessedDocument, Vocabulary
from .util import derive_seed

VARIANTS = ("cbow", "skipgram")


@dataclass(frozen=True)
class W2vConfig:
    dim: int = 100
    window: int = 2
    min_count: int = 1
    variant: str = "cbow"
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    seed: int = 42

    def __post_init__(self):
        if self.dim < 1 or self.window < 1:
            raise ValueError("dim and window must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")


@dataclass(frozen=True)
class EmbeddingMatrix:
    input_vectors: np.ndarray  # V x d
    output_vectors: np.ndarray  # V x d
    vocab: Vocabulary
    config: Optional[W2vConfig] = None
    epoch_losses: tuple[float, ...] = field(default=())


@dataclass(frozen=True)
class NeighborList:
    query: str
    neighbors: tuple[tuple[str, float], ...]  # (term, cosine), non-increasing


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _pair_loss_and_coeffs(h: np.ndarray, u_rows: np.ndarray, labels: np.ndarray):
    """Negative-sampling loss for one center/contexts example.

    ``u_rows`` stacks the positive and negative output vectors; ``labels``
    is 1 for the positive row, 0 for noise rows.  Returns the scalar loss
    and the per-row coefficient (sigmoid(score) - label) shared by every
    gradient of the example.
    """
    scores = u_rows @ h
    p = _sigmoid(scores)
    eps = 1e-12
    loss = -float(
        np.sum(labels * np.log(p + eps) + (1.0 - labels) * np.log(1.0 - p + eps))
    )
    return loss, p - labels


def ns_loss_and_grads(
    input_vectors: np.ndarray,
    output_vectors: np.ndarray,
    context_ids: Sequence[int],
    target_id: int,
    negative_ids: Sequence[int],
    variant: str = "skipgram",
):
    """Loss and dense analytic gradients for a single training example.

    For skip-gram ``context_ids`` must hold the single center word; for
    CBOW it holds the surrounding words whose input vectors are averaged.
    Gradients come back as full V x d arrays (zero where untouched), which
    is what the finite-difference check compares against.
    """
    ctx = list(context_ids)
    if variant == "skipgram" and len(ctx) != 1:
        raise ValueError("skip-gram examples take exactly one center word")
    h = input_vectors[ctx].mean(axis=0)
    rows = [target_id] + list(negative_ids)
    labels = np.zeros(len(rows))
    labels[0] = 1.0
    u_rows = output_vectors[rows]
    loss, coeffs = _pair_loss_and_coeffs(h, u_rows, labels)

    grad_in = np.zeros_like(input_vectors)
    grad_out = np.zeros_like(output_vectors)
    grad_h = coeffs @ u_rows
    for c in ctx:
        grad_in[c] += grad_h / len(ctx)
    for coeff, r in zip(coeffs, rows):
        grad_out[r] += coeff * h
    return loss, grad_in, grad_out


class _NoiseSampler:
    """Seeded sampler over the unigram^0.75 noise distribution."""

    def __init__(self, counts: np.ndarray, seed: int):
        weights = counts.astype(np.float64) ** 0.75
        self._cum = np.cumsum(weights / weights.sum())
        self._rng = np.random.default_rng(seed)

    def draw(self, n: int) -> np.ndarray:
        return np.searchsorted(self._cum, self._rng.random(n), side="right")


def train_w2v(
    docs: Sequence[ProcessedDocument],
    vocab: Vocabulary,
    config: W2vConfig,
) -> EmbeddingMatrix:
    """Train embeddings with negative-sampling SGD.

    The learning rate decays linearly from initial_lr to initial_lr/100
    across all updates.  Single-threaded and deterministic given the seed;
    documents are visited in a seeded shuffled order each epoch.
    """
    V = len(vocab)
    d = config.dim
    if V < config.negatives + 1:
        raise CorpusError(
            f"vocabulary size {V} too small for {config.negatives} negatives (need >= negatives+1)"
        )
    t2i = vocab.term_to_index
    id_docs = [[t2i[t] for t in doc.tokens if t in t2i] for doc in docs]
    id_docs = [ids for ids in id_docs if ids]
    if not id_docs:
        raise CorpusError("no in-vocabulary tokens in any document")

    rng = np.random.default_rng(derive_seed(config.seed, "w2v-init"))
    input_vectors = (rng.random((V, d)) - 0.5) / d
    output_vectors = np.zeros((V, d))
    sampler = _NoiseSampler(vocab.count_array(), derive_seed(config.seed, "w2v-noise"))
    order_rng = np.random.default_rng(derive_seed(config.seed, "w2v-order"))

    m = config.window
    total_positions = sum(len(ids) for ids in id_docs) * config.epochs
    lr0 = config.initial_lr
    lr_floor = lr0 / 100.0
    pos_counter = 0
    epoch_losses = []

    for _epoch in range(config.epochs):
        loss_sum = 0.0
        loss_n = 0
        for di in order_rng.permutation(len(id_docs)):
            ids = id_docs[di]
            n = len(ids)
            for j in range(n):
                lr = max(lr_floor, lr0 * (1.0 - 0.99 * pos_counter / total_positions))
                pos_counter += 1
                lo, hi = max(0, j - m), min(n, j + m + 1)
                context = [ids[p] for p in range(lo, hi) if p != j]
                if not context:
                    continue
                if config.variant == "skipgram":
                    for c in context:
                        negs = [int(x) for x in sampler.draw(config.negatives) if x != c]
                        loss_sum += _sgd_step(
                            input_vectors, output_vectors, [ids[j]], c, negs, lr, 1.0
                        )
                        loss_n += 1
                else:  # cbow: predict the center word from the averaged context
                    target = ids[j]
                    negs = [int(x) for x in sampler.draw(config.negatives) if x != target]
                    loss_sum += _sgd_step(
                        input_vectors, output_vectors, context, target, negs, lr, 1.0 / len(context)
                    )
                    loss_n += 1
        epoch_losses.append(loss_sum / max(1, loss_n))

    return EmbeddingMatrix(
        input_vectors=input_vectors,
        output_vectors=output_vectors,
        vocab=vocab,
        config=config,
        epoch_losses=tuple(epoch_losses),
    )


def _sgd_step(input_vectors, output_vectors, ctx, target, negs, lr, ctx_share) -> float:
    rows = [target] + negs
    labels = np.zeros(len(rows))
    labels[0] = 1.0
    h = input_vectors[ctx].mean(axis=0) if len(ctx) > 1 else input_vectors[ctx[0]]
    u_rows = output_vectors[rows]
    loss, coeffs = _pair_loss_and_coeffs(h, u_rows, labels)
    grad_h = coeffs @ u_rows
    np.add.at(output_vectors, rows, -lr * np.outer(coeffs, h))
    np.add.at(input_vectors, ctx, -lr * ctx_share * grad_h)
    return loss


def _log_softmax_score(emb: EmbeddingMatrix, center_id: int) -> np.ndarray:
    scores = emb.output_vectors @ emb.input_vectors[center_id]
    mx = scores.max()
    return scores - (mx + np.log(np.exp(scores - mx).sum()))


def log_probability(emb: EmbeddingMatrix, doc: ProcessedDocument, window: int) -> float:
    """Exact full-softmax log probability of a document.

    Sums log p(w_k | w_j) over all ordered in-window pairs, where p is the
    softmax of output-vector scores against the center's input vector
    (skip-gram scoring form, applied regardless of training variant).
    Out-of-vocabulary tokens are dropped before windowing.  Always <= 0.
    """
    t2i = emb.vocab.term_to_index
    ids = [t2i[t] for t in doc.tokens if t in t2i]
    if len(ids) < 2:
        raise CorpusError(f"document {doc.id!r} has fewer than 2 in-vocabulary tokens")
    n = len(ids)
    total = 0.0
    log_p_cache: dict[int, np.ndarray] = {}
    for j in range(n):
        cj = ids[j]
        if cj not in log_p_cache:
            log_p_cache[cj] = _log_softmax_score(emb, cj)
        row = log_p_cache[cj]
        lo, hi = max(0, j - window), min(n, j + window + 1)
        for k in range(lo, hi):
            if k != j:
                total += float(row[ids[k]])
    return total


@dataclass(frozen=True)
class MedianLogProbability:
    value: float
    scored_docs: int
    skipped_docs: int  # documents with < 2 in-vocabulary tokens


def median_log_probability(
    emb: EmbeddingMatrix, docs: Sequence[ProcessedDocument], window: int
) -> MedianLogProbability:
    """Median per-document log probability; even counts average the middle two."""
    scores = []
    skipped = 0
    for doc in docs:
        try:
            scores.append(log_probability(emb, doc, window))
        except CorpusError:
            skipped += 1
    if not scores:
        raise CorpusError("no scorable documents (all have < 2 in-vocabulary tokens)")
    return MedianLogProbability(
        value=float(statistics.median(scores)), scored_docs=len(scores), skipped_docs=skipped
    )


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, in [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for zero-norm vectors")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def nearest_neighbors(emb: EmbeddingMatrix, term: str, k: int) -> NeighborList:
    """Top-k closest terms by cosine over input vectors (exhaustive scan).

    The query term is excluded; ties break lexicographically.  Zero-norm
    candidate rows (possible only for never-updated vectors) are skipped.
    """
    if term not in emb.vocab:
        raise KeyError(f"unknown term {term!r}")
    q_idx = emb.vocab.index(term)
    X = emb.input_vectors
    q = X[q_idx]
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise ValueError(f"term {term!r} has a zero-norm vector")
    norms = np.linalg.norm(X, axis=1)
    valid = norms > 0
    valid[q_idx] = False
    sims = np.full(X.shape[0], -np.inf)
    sims[valid] = np.clip(X[valid] @ q / (norms[valid] * qn), -1.0, 1.0)
    terms = emb.vocab.index_to_term
    order = sorted(np.flatnonzero(valid), key=lambda i: (-sims[i], terms[i]))
    chosen = order[: max(0, k)]
    return NeighborList(query=term, neighbors=tuple((terms[i], float(sims[i])) for i in chosen))


# ---------------------------------------------------------------------------
# Serialization: "V d" header then one term + d floats per line; output
# vectors in a sidecar file with the same layout.


def _write_matrix(path: Path, terms, matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for term, row in zip(terms, matrix):
            fh.write(term + " " + " ".join(repr(float(x)) for x in row) + "\n")


def save_embeddings(emb: EmbeddingMatrix, path: str | Path) -> None:
    path = Path(path)
    _write_matrix(path, emb.vocab.index_to_term, emb.input_vectors)
    _write_matrix(Path(str(path) + ".out"), emb.vocab.index_to_term, emb.output_vectors)


def _read_matrix(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        V, d = int(header[0]), int(header[1])
        terms = []
        rows = np.empty((V, d))
        for i in range(V):
            parts = fh.readline().rstrip("\n").split(" ")
            terms.append(parts[0])
            rows[i] = [float(x) for x in parts[1:]]
    return terms, rows


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Reload saved vectors.

    The text format carries no corpus counts, so the reconstructed
    vocabulary uses placeholder counts of 1; it supports lookups and
    queries but not retraining.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"embedding file does not exist: {path}")
    terms, input_vectors = _read_matrix(path)
    sidecar = Path(str(path) + ".out")
    if sidecar.exists():
        terms_out, output_vectors = _read_matrix(sidecar)
        if terms_out != terms:
            raise ValueError(f"{sidecar}: sidecar terms disagree with {path}")
    else:
        output_vectors = np.zeros_like(input_vectors)
    vocab = Vocabulary(
        term_to_index={t: i for i, t in enumerate(terms)},
        index_to_term=tuple(terms),
        counts={t: 1 for t in terms},
        min_count=1,
    )
    return EmbeddingMatrix(
        input_vectors=input_vectors, output_vectors=output_vectors, vocab=vocab
    )
