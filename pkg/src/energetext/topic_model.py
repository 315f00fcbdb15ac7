"""Topic modeling via collapsed Gibbs sampling.

Fits a latent topic mixture model: documents are distributions over K
topics, topics are distributions over vocabulary terms.  Inference
integrates out both distributions and resamples per-token topic
assignments from count statistics; the chain is strictly sequential and
seed-deterministic.  The topic-word matrix is estimated from counts
averaged over post-burn-in sweeps with prior smoothing.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import CorpusError, ProcessedDocument, Vocabulary
from .util import derive_seed


@dataclass(frozen=True)
class LdaConfig:
    num_topics: int
    alpha: float = 1.0
    beta: Optional[float] = None  # None -> 1/num_topics
    iterations: int = 400
    burn_in: int = 100
    seed: int = 42

    def __post_init__(self):
        if self.num_topics < 2:
            raise ValueError(f"num_topics must be >= 2, got {self.num_topics}")
        if self.beta is None:
            object.__setattr__(self, "beta", 1.0 / self.num_topics)
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta priors must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError(
                f"burn_in must satisfy 0 <= burn_in < iterations, got {self.burn_in}/{self.iterations}"
            )


@dataclass(frozen=True)
class LdaModel:
    phi: np.ndarray  # K x V topic-word probabilities, rows sum to 1
    alpha: float
    beta: float
    vocab: Vocabulary
    config: LdaConfig

    @property
    def num_topics(self) -> int:
        return self.phi.shape[0]


@dataclass(frozen=True)
class DocTopics:
    theta: np.ndarray  # length-K probability vector


def _doc_token_ids(doc: ProcessedDocument, vocab: Vocabulary) -> list[int]:
    t2i = vocab.term_to_index
    return [t2i[t] for t in doc.tokens if t in t2i]


def _gibbs_sweep(tokens, doc_ids, z, n_dk, n_kv, n_k, alpha, beta, vbeta, uniforms):
    """One full sweep of collapsed Gibbs resampling (pure-Python hot loop)."""
    K = len(n_k)
    cum = [0.0] * K
    for i in range(len(tokens)):
        v = tokens[i]
        d = doc_ids[i]
        k = z[i]
        row_d = n_dk[d]
        row_d[k] -= 1
        n_kv[k][v] -= 1
        n_k[k] -= 1
        total = 0.0
        for kk in range(K):
            total += (row_d[kk] + alpha) * (n_kv[kk][v] + beta) / (n_k[kk] + vbeta)
            cum[kk] = total
        u = uniforms[i] * total
        kk = 0
        while cum[kk] < u:
            kk += 1
        z[i] = kk
        row_d[kk] += 1
        n_kv[kk][v] += 1
        n_k[kk] += 1


def _check_counts(z, doc_lens, n_dk, n_kv, n_k):
    total = sum(n_k)
    assert total == len(z), "topic counts lost tokens"
    assert total == sum(sum(row) for row in n_kv), "topic-word counts inconsistent"
    for d, length in enumerate(doc_lens):
        assert sum(n_dk[d]) == length, f"doc {d} topic counts != doc length"


def fit_lda(
    docs: Sequence[ProcessedDocument],
    vocab: Vocabulary,
    config: LdaConfig,
    check_invariants: bool = False,
) -> LdaModel:
    """Fit the topic model by collapsed Gibbs sampling.

    Out-of-vocabulary tokens are dropped.  With ``check_invariants`` the
    count-consistency assertions run after every sweep (slow; used by
    tests).  Deterministic given ``config.seed``.
    """
    K = config.num_topics
    V = len(vocab)
    alpha, beta = config.alpha, config.beta
    vbeta = V * beta

    id_docs = [_doc_token_ids(d, vocab) for d in docs]
    id_docs = [ids for ids in id_docs if ids]
    if not id_docs:
        raise CorpusError("no in-vocabulary tokens in any document")

    tokens: list[int] = []
    doc_ids: list[int] = []
    for d, ids in enumerate(id_docs):
        tokens.extend(ids)
        doc_ids.extend([d] * len(ids))
    T = len(tokens)
    doc_lens = [len(ids) for ids in id_docs]

    rng = np.random.default_rng(config.seed)
    z = rng.integers(0, K, size=T).tolist()
    n_dk = [[0] * K for _ in range(len(id_docs))]
    n_kv = [[0] * V for _ in range(K)]
    n_k = [0] * K
    for i in range(T):
        n_dk[doc_ids[i]][z[i]] += 1
        n_kv[z[i]][tokens[i]] += 1
        n_k[z[i]] += 1

    phi_sum = np.zeros((K, V), dtype=np.float64)
    samples = 0
    for sweep in range(config.iterations):
        uniforms = rng.random(T)
        _gibbs_sweep(tokens, doc_ids, z, n_dk, n_kv, n_k, alpha, beta, vbeta, uniforms)
        if check_invariants:
            _check_counts(z, doc_lens, n_dk, n_kv, n_k)
        if sweep >= config.burn_in:
            counts = np.asarray(n_kv, dtype=np.float64)
            phi_sum += (counts + beta) / (counts.sum(axis=1, keepdims=True) + vbeta)
            samples += 1
    phi = phi_sum / samples
    return LdaModel(phi=phi, alpha=alpha, beta=beta, vocab=vocab, config=config)


def infer_doc_topics(
    model: LdaModel,
    doc: ProcessedDocument,
    iterations: int = 100,
    seed: int = 0,
    burn_in: Optional[int] = None,
) -> DocTopics:
    """Fold-in inference for one document with the topic-word matrix frozen.

    The topic mixture is the smoothed average of post-burn-in samples of
    (n_k + alpha) / (n + K * alpha).
    """
    ids = _doc_token_ids(doc, model.vocab)
    if not ids:
        raise CorpusError(f"document {doc.id!r} has no in-vocabulary tokens")
    if burn_in is None:
        burn_in = iterations // 4
    K = model.num_topics
    alpha = model.alpha
    n = len(ids)
    phi_t = model.phi.T.tolist()  # phi_t[v][k]

    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=n).tolist()
    n_k = [0] * K
    for zk in z:
        n_k[zk] += 1

    theta_sum = np.zeros(K, dtype=np.float64)
    samples = 0
    cum = [0.0] * K
    for sweep in range(iterations):
        uniforms = rng.random(n)
        for i in range(n):
            k = z[i]
            n_k[k] -= 1
            row = phi_t[ids[i]]
            total = 0.0
            for kk in range(K):
                total += (n_k[kk] + alpha) * row[kk]
                cum[kk] = total
            u = uniforms[i] * total
            kk = 0
            while cum[kk] < u:
                kk += 1
            z[i] = kk
            n_k[kk] += 1
        if sweep >= burn_in:
            theta_sum += (np.asarray(n_k, dtype=np.float64) + alpha) / (n + K * alpha)
            samples += 1
    return DocTopics(theta=theta_sum / samples)


def top_words(model: LdaModel, topic: int, k: int) -> list[tuple[str, float]]:
    """Top-k terms of one topic by probability, ties broken lexicographically."""
    if not 0 <= topic < model.num_topics:
        raise IndexError(f"topic {topic} out of range [0, {model.num_topics})")
    row = model.phi[topic]
    terms = model.vocab.index_to_term
    order = sorted(range(len(terms)), key=lambda v: (-row[v], terms[v]))
    return [(terms[v], float(row[v])) for v in order[:k]]


def assigned_topics(theta: DocTopics, threshold: float) -> list[tuple[int, float]]:
    """Topics with probability strictly above threshold, most probable first."""
    hits = [(k, float(p)) for k, p in enumerate(theta.theta) if p > threshold]
    hits.sort(key=lambda kp: (-kp[1], kp[0]))
    return hits


@dataclass(frozen=True)
class PerplexityResult:
    perplexity: float
    scored_tokens: int
    skipped_tokens: int  # out-of-vocabulary tokens dropped before scoring


def lda_perplexity(
    model: LdaModel,
    heldout: Sequence[ProcessedDocument],
    fold_in_iterations: int = 100,
    seed: int = 42,
) -> PerplexityResult:
    """Held-out per-word perplexity under fold-in topic mixtures.

    Each document's mixture is inferred with the topic-word matrix frozen,
    then every in-vocabulary token w is scored as p(w) = sum_k theta_k *
    phi_{k,w}; perplexity is exp of the negative mean log score.  Always
    >= 1 and equal to V for a uniform model.  Out-of-vocabulary tokens are
    skipped, not smoothed; their count is reported alongside.
    """
    if not heldout:
        raise CorpusError("empty held-out set")
    total_log = 0.0
    scored = 0
    skipped = 0
    for doc in heldout:
        ids = _doc_token_ids(doc, model.vocab)
        skipped += len(doc.tokens) - len(ids)
        if not ids:
            raise CorpusError(f"held-out document {doc.id!r} has no in-vocabulary tokens")
        theta = infer_doc_topics(
            model,
            doc,
            iterations=fold_in_iterations,
            seed=derive_seed(seed, "lda-foldin", doc.id),
        ).theta
        word_p = theta @ model.phi[:, ids]
        total_log += float(np.log(word_p).sum())
        scored += len(ids)
    ppl = float(np.exp(-total_log / scored))
    return PerplexityResult(perplexity=ppl, scored_tokens=scored, skipped_tokens=skipped)


# ---------------------------------------------------------------------------
# Serialization

_SCHEMA_VERSION = 1


def save_lda(model: LdaModel, path: str | Path) -> None:
    """Versioned JSON container with the topic-word matrix as base64 float64."""
    obj = {
        "schema_version": _SCHEMA_VERSION,
        "kind": "lda",
        "config": {
            "num_topics": model.config.num_topics,
            "alpha": model.config.alpha,
            "beta": model.config.beta,
            "iterations": model.config.iterations,
            "burn_in": model.config.burn_in,
            "seed": model.config.seed,
        },
        "alpha": model.alpha,
        "beta": model.beta,
        "vocab_hash": model.vocab.content_hash(),
        "num_topics": model.num_topics,
        "vocab_size": len(model.vocab),
        "phi": base64.b64encode(np.ascontiguousarray(model.phi, dtype="<f8").tobytes()).decode("ascii"),
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_lda(path: str | Path, vocab: Vocabulary) -> LdaModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file does not exist: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    if obj.get("schema_version") != _SCHEMA_VERSION or obj.get("kind") != "lda":
        raise ValueError(f"{path}: not a schema-v{_SCHEMA_VERSION} lda model file")
    if obj["vocab_hash"] != vocab.content_hash():
        raise ValueError(f"{path}: vocabulary does not match the one the model was trained with")
    K, V = obj["num_topics"], obj["vocab_size"]
    phi = np.frombuffer(base64.b64decode(obj["phi"]), dtype="<f8").reshape(K, V).copy()
    cfg = LdaConfig(**obj["config"])
    return LdaModel(phi=phi, alpha=obj["alpha"], beta=obj["beta"], vocab=vocab, config=cfg)
