"""Small encoder-only transformer trained from scratch on masked tokens.

Implements the standard stack (token + learned position embeddings, L x
multi-head scaled-dot-product self-attention with padding mask, residual
+ layer norm, position-wise feed-forward, residual + layer norm) with the
output projection tied to the token embedding table.  Forward, backward,
and the adaptive-moment optimizer are hand-written in float64 numpy so
every gradient is finite-difference checkable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bpe import CLS_ID, MASK_ID, NUM_SPECIALS, PAD_ID, SEP_ID, BpeTokenizer
from .corpus import ProcessedDocument
from .util import derive_seed

LN_EPS = 1e-5


class NumericalError(RuntimeError):
    """Raised when training produces non-finite values."""


@dataclass(frozen=True)
class TransformerConfig:
    layers: int = 4
    heads: int = 4
    d_model: int = 128
    d_ff: int = 512
    max_seq: int = 128
    vocab_size: int = 8000
    mask_fraction: float = 0.15
    batch_size: int = 16
    epochs: int = 20
    initial_lr: float = 1e-3
    seed: int = 42

    def __post_init__(self):
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by heads {self.heads}")
        if self.max_seq < 2:
            raise ValueError("max_seq must be >= 2")
        if not 0.0 < self.mask_fraction < 1.0:
            raise ValueError("mask_fraction must lie in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")

    @classmethod
    def full_scale(cls, vocab_size: int = 30522, seed: int = 42) -> "TransformerConfig":
        """Full-size preset (compute-heavy; kept for documentation parity)."""
        return cls(
            layers=6,
            heads=12,
            d_model=768,
            d_ff=3072,
            max_seq=512,
            vocab_size=vocab_size,
            batch_size=32,
            epochs=100,
            seed=seed,
        )


@dataclass
class TransformerModel:
    config: TransformerConfig
    params: dict[str, np.ndarray]


@dataclass(frozen=True)
class MaskedBatch:
    input_ids: np.ndarray  # B x T int64
    target_ids: np.ndarray  # B x T int64, -1 where not selected for prediction
    attention_mask: np.ndarray  # B x T bool, False exactly at [PAD]


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float  # masked-token accuracy, percent


# ---------------------------------------------------------------------------
# Parameter initialization


def init_params(config: TransformerConfig, seed: Optional[int] = None) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(derive_seed(config.seed if seed is None else seed, "mlm-init"))
    D, F, C, S = config.d_model, config.d_ff, config.vocab_size, config.max_seq
    std = 0.02

    def w(*shape):
        return rng.normal(0.0, std, size=shape)

    params = {"tok_emb": w(C, D), "pos_emb": w(S, D)}
    for i in range(config.layers):
        p = f"l{i}."
        for name in ("wq", "wk", "wv", "wo"):
            params[p + name] = w(D, D)
            params[p + "b" + name[1]] = np.zeros(D)
        params[p + "w1"] = w(D, F)
        params[p + "b1"] = np.zeros(F)
        params[p + "w2"] = w(F, D)
        params[p + "b2"] = np.zeros(D)
        params[p + "ln1_g"] = np.ones(D)
        params[p + "ln1_b"] = np.zeros(D)
        params[p + "ln2_g"] = np.ones(D)
        params[p + "ln2_b"] = np.zeros(D)
    return params


def init_model(config: TransformerConfig) -> TransformerModel:
    return TransformerModel(config=config, params=init_params(config))


# ---------------------------------------------------------------------------
# Primitives

_GELU_C = np.sqrt(2.0 / np.pi)


def _gelu(x):
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + 0.044715 * x**3)))


def _gelu_grad(x):
    u = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(u)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * _GELU_C * (1.0 + 3 * 0.044715 * x**2)


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc**2).mean(axis=-1, keepdims=True)
    istd = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * istd
    return g * xhat + b, (xhat, istd, g)


def _layer_norm_backward(dy, cache):
    xhat, istd, g = cache
    dxhat = dy * g
    dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    db = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dx = istd * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _softmax(x, axis=-1):
    m = x.max(axis=axis, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=axis, keepdims=True)


def _split_heads(x, heads):
    B, T, D = x.shape
    return x.reshape(B, T, heads, D // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    B, H, T, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, H * dh)


# ---------------------------------------------------------------------------
# Forward / backward


def _forward(params, config: TransformerConfig, input_ids, attention_mask):
    """Run the encoder; returns (logits, cache) with everything backward needs."""
    ids = np.asarray(input_ids)
    mask = np.asarray(attention_mask, dtype=bool)
    B, T = ids.shape
    if T > config.max_seq:
        raise ValueError(f"sequence length {T} exceeds max_seq {config.max_seq}")
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise ValueError("token id out of range for the model vocabulary")
    if not mask.any(axis=1).all():
        raise ValueError("every sequence needs at least one unmasked position")

    H = config.heads
    dh = config.d_model // H
    x = params["tok_emb"][ids] + params["pos_emb"][:T]
    cache = {"ids": ids, "mask": mask, "layers": [], "attn_weights": []}

    for i in range(config.layers):
        p = f"l{i}."
        lc = {"x_in": x}
        q = _split_heads(x @ params[p + "wq"] + params[p + "bq"], H)
        k = _split_heads(x @ params[p + "wk"] + params[p + "bk"], H)
        v = _split_heads(x @ params[p + "wv"] + params[p + "bv"], H)
        scores = q @ k.transpose(0, 1, 3, 2) / np.sqrt(dh)
        scores = np.where(mask[:, None, None, :], scores, -np.inf)
        attn = _softmax(scores, axis=-1)
        ctx = _merge_heads(attn @ v)
        attn_out = ctx @ params[p + "wo"] + params[p + "bo"]
        y1, ln1_cache = _layer_norm(x + attn_out, params[p + "ln1_g"], params[p + "ln1_b"])
        h_pre = y1 @ params[p + "w1"] + params[p + "b1"]
        h_act = _gelu(h_pre)
        ffn_out = h_act @ params[p + "w2"] + params[p + "b2"]
        y2, ln2_cache = _layer_norm(y1 + ffn_out, params[p + "ln2_g"], params[p + "ln2_b"])
        lc.update(q=q, k=k, v=v, attn=attn, ctx=ctx, ln1=ln1_cache, y1=y1,
                  h_pre=h_pre, h_act=h_act, ln2=ln2_cache)
        cache["layers"].append(lc)
        cache["attn_weights"].append(attn)
        x = y2

    cache["h_final"] = x
    logits = x @ params["tok_emb"].T
    return logits, cache


def forward(model: TransformerModel, batch: MaskedBatch) -> np.ndarray:
    """Logits (batch x seq x vocab) for a masked batch."""
    logits, _ = _forward(model.params, model.config, batch.input_ids, batch.attention_mask)
    return logits


def final_hidden_states(model: TransformerModel, input_ids, attention_mask) -> np.ndarray:
    """Final-layer hidden states (batch x seq x d_model), no masking applied."""
    _, cache = _forward(model.params, model.config, input_ids, attention_mask)
    return cache["h_final"]


def attention_maps(model: TransformerModel, batch: MaskedBatch) -> list[np.ndarray]:
    """Per-layer attention weights (each batch x heads x seq x seq)."""
    _, cache = _forward(model.params, model.config, batch.input_ids, batch.attention_mask)
    return cache["attn_weights"]


def _backward(params, config: TransformerConfig, cache, dlogits):
    H = config.heads
    dh = config.d_model // H
    grads = {name: np.zeros_like(arr) for name, arr in params.items()}
    ids, T = cache["ids"], cache["ids"].shape[1]

    h_final = cache["h_final"]
    dx = dlogits @ params["tok_emb"]
    grads["tok_emb"] += np.einsum("btc,btd->cd", dlogits, h_final)

    for i in reversed(range(config.layers)):
        p = f"l{i}."
        lc = cache["layers"][i]
        d_res2, dg2, db2 = _layer_norm_backward(dx, lc["ln2"])
        grads[p + "ln2_g"] += dg2
        grads[p + "ln2_b"] += db2
        # feed-forward branch
        d_ffn = d_res2
        d_hact = d_ffn @ params[p + "w2"].T
        grads[p + "w2"] += np.einsum("btf,btd->fd", lc["h_act"], d_ffn)
        grads[p + "b2"] += d_ffn.sum(axis=(0, 1))
        d_hpre = d_hact * _gelu_grad(lc["h_pre"])
        grads[p + "w1"] += np.einsum("btd,btf->df", lc["y1"], d_hpre)
        grads[p + "b1"] += d_hpre.sum(axis=(0, 1))
        dy1 = d_res2 + d_hpre @ params[p + "w1"].T

        d_res1, dg1, db1 = _layer_norm_backward(dy1, lc["ln1"])
        grads[p + "ln1_g"] += dg1
        grads[p + "ln1_b"] += db1
        # attention branch
        d_attn_out = d_res1
        d_ctx = d_attn_out @ params[p + "wo"].T
        grads[p + "wo"] += np.einsum("btd,bte->de", lc["ctx"], d_attn_out)
        grads[p + "bo"] += d_attn_out.sum(axis=(0, 1))
        d_heads = _split_heads(d_ctx, H)
        dA = d_heads @ lc["v"].transpose(0, 1, 3, 2)
        dV = lc["attn"].transpose(0, 1, 3, 2) @ d_heads
        A = lc["attn"]
        d_scores = A * (dA - (dA * A).sum(axis=-1, keepdims=True))
        dq = d_scores @ lc["k"] / np.sqrt(dh)
        dk = d_scores.transpose(0, 1, 3, 2) @ lc["q"] / np.sqrt(dh)
        dQ, dK, dVm = _merge_heads(dq), _merge_heads(dk), _merge_heads(dV)
        x_in = lc["x_in"]
        dx_in = d_res1.copy()
        for dmat, wname in ((dQ, "wq"), (dK, "wk"), (dVm, "wv")):
            grads[p + wname] += np.einsum("btd,bte->de", x_in, dmat)
            grads[p + "b" + wname[1]] += dmat.sum(axis=(0, 1))
            dx_in += dmat @ params[p + wname].T
        dx = dx_in

    np.add.at(grads["tok_emb"], ids, dx)
    grads["pos_emb"][:T] += dx.sum(axis=0)
    return grads


# ---------------------------------------------------------------------------
# Loss


def cross_entropy_loss(
    logits: np.ndarray,
    targets: np.ndarray,
    class_weights: Optional[np.ndarray] = None,
    return_grad: bool = False,
):
    """Weighted cross entropy over positions whose target is not -1.

    The per-position loss is w_t * (-log softmax(logits)_t); the batch
    loss is the sum normalized by the number of scored positions.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets)
    sel = targets != -1
    n = int(sel.sum())
    if n == 0:
        raise ValueError("no positions to score: every target is the ignore sentinel")
    C = logits.shape[-1]
    if class_weights is None:
        class_weights = np.ones(C)
    class_weights = np.asarray(class_weights, dtype=np.float64)
    if class_weights.shape != (C,) or (class_weights <= 0).any():
        raise ValueError("class_weights must be positive and of length vocab_size")

    rows = logits[sel]
    t = targets[sel]
    m = rows.max(axis=1, keepdims=True)
    logz = m + np.log(np.exp(rows - m).sum(axis=1, keepdims=True))
    log_p = rows - logz
    w = class_weights[t]
    loss = float((-w * log_p[np.arange(n), t]).sum() / n)
    if not return_grad:
        return loss
    soft = np.exp(log_p)
    soft[np.arange(n), t] -= 1.0
    d_rows = w[:, None] * soft / n
    dlogits = np.zeros_like(logits)
    dlogits[sel] = d_rows
    return loss, dlogits


# ---------------------------------------------------------------------------
# Masking


def mask_tokens(
    ids: Sequence[int],
    fraction: float,
    seed: int | np.random.Generator,
    vocab_size: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Select positions for prediction and corrupt the inputs.

    Each non-special position is selected independently with probability
    ``fraction`` (at least one selection is forced).  Selected inputs
    become [MASK] 80% of the time, a random non-special token 10%, and
    stay unchanged 10%.  Returns (input_ids, target_ids) with -1 targets
    at unselected positions.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ids = np.asarray(ids, dtype=np.int64)
    nonspecial = np.flatnonzero(ids >= NUM_SPECIALS)
    if nonspecial.size == 0:
        raise ValueError("cannot mask an all-special sequence")
    selected = (rng.random(ids.size) < fraction) & (ids >= NUM_SPECIALS)
    if not selected.any():
        selected[nonspecial[rng.integers(nonspecial.size)]] = True
    inputs = ids.copy()
    targets = np.full_like(ids, -1)
    for pos in np.flatnonzero(selected):
        targets[pos] = ids[pos]
        u = rng.random()
        if u < 0.8:
            inputs[pos] = MASK_ID
        elif u < 0.9:
            inputs[pos] = int(rng.integers(NUM_SPECIALS, vocab_size))
        # else: keep the original token
    return inputs, targets


def encode_document(tokenizer: BpeTokenizer, doc: ProcessedDocument, max_seq: int) -> list[int]:
    """[CLS] body [SEP], with the body truncated to fit max_seq."""
    body = tokenizer.encode(" ".join(doc.tokens))[: max_seq - 2]
    return [CLS_ID] + body + [SEP_ID]


def make_masked_batch(
    sequences: Sequence[Sequence[int]],
    fraction: float,
    rng: np.random.Generator,
    vocab_size: int,
) -> MaskedBatch:
    """Mask each sequence and pad the batch to its longest row."""
    T = max(len(s) for s in sequences)
    B = len(sequences)
    input_ids = np.full((B, T), PAD_ID, dtype=np.int64)
    target_ids = np.full((B, T), -1, dtype=np.int64)
    attention_mask = np.zeros((B, T), dtype=bool)
    for r, seq in enumerate(sequences):
        inp, tgt = mask_tokens(seq, fraction, rng, vocab_size)
        input_ids[r, : len(seq)] = inp
        target_ids[r, : len(seq)] = tgt
        attention_mask[r, : len(seq)] = True
    return MaskedBatch(input_ids=input_ids, target_ids=target_ids, attention_mask=attention_mask)


# ---------------------------------------------------------------------------
# Optimizer and training


class AdamState:
    """Adaptive-moment SGD with standard decay constants and fixed lr."""

    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for name, g in grads.items():
            m = self.m[name] = b1 * self.m[name] + (1 - b1) * g
            v = self.v[name] = b2 * self.v[name] + (1 - b2) * g**2
            params[name] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def _train_step(params, config, adam: AdamState, batch: MaskedBatch) -> float:
    logits, cache = _forward(params, config, batch.input_ids, batch.attention_mask)
    loss, dlogits = cross_entropy_loss(logits, batch.target_ids, return_grad=True)
    grads = _backward(params, config, cache, dlogits)
    adam.step(params, grads)
    return loss


def _argmax_seeded_ties(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Row-wise argmax with exact ties broken uniformly by the given rng."""
    out = rows.argmax(axis=1)
    mx = rows.max(axis=1, keepdims=True)
    tie_rows = np.flatnonzero((rows == mx).sum(axis=1) > 1)
    for r in tie_rows:
        choices = np.flatnonzero(rows[r] == mx[r])
        out[r] = choices[rng.integers(choices.size)]
    return out


def _evaluate(params, config, batches: list[MaskedBatch], tie_rng: np.random.Generator):
    """Mean loss and masked-token accuracy (percent) over fixed batches."""
    total_loss = 0.0
    correct = 0
    total = 0
    for batch in batches:
        logits, _ = _forward(params, config, batch.input_ids, batch.attention_mask)
        total_loss += cross_entropy_loss(logits, batch.target_ids)
        sel = batch.target_ids != -1
        preds = _argmax_seeded_ties(logits[sel], tie_rng)
        correct += int((preds == batch.target_ids[sel]).sum())
        total += int(sel.sum())
    return total_loss / len(batches), 100.0 * correct / total


def select_best_epoch(val_accuracies: Sequence[float]) -> int:
    """Index of the epoch whose weights are kept: argmax accuracy, earliest on ties."""
    return int(np.argmax(val_accuracies))


def train_mlm(
    docs: Sequence[ProcessedDocument],
    tokenizer: BpeTokenizer,
    config: TransformerConfig,
    val_docs: Optional[Sequence[ProcessedDocument]] = None,
) -> tuple[TransformerModel, list[EpochMetrics]]:
    """Masked-token training loop.

    Per epoch: seeded shuffle into batches, fresh masking, gradient
    updates; then loss and masked accuracy on the validation documents
    (the training documents when none are given) under a fixed validation
    masking so curves are comparable across epochs.  Returns the weights
    from the epoch with the highest validation accuracy.
    """
    sequences = [encode_document(tokenizer, d, config.max_seq) for d in docs]
    sequences = [s for s in sequences if len(s) > 2]
    if not sequences:
        raise ValueError("tokenized corpus is empty")
    if val_docs is None:
        val_sequences = sequences
    else:
        val_sequences = [encode_document(tokenizer, d, config.max_seq) for d in val_docs]
        val_sequences = [s for s in val_sequences if len(s) > 2]
        if not val_sequences:
            raise ValueError("tokenized validation corpus is empty")

    C = tokenizer.vocab_size
    if C > config.vocab_size:
        raise ValueError(
            f"tokenizer vocabulary ({C}) exceeds model vocab_size ({config.vocab_size})"
        )
    params = init_params(config)
    adam = AdamState(params, lr=config.initial_lr)

    val_rng = np.random.default_rng(derive_seed(config.seed, "mlm-val-mask"))
    val_batches = [
        make_masked_batch(val_sequences[i : i + config.batch_size], config.mask_fraction, val_rng, C)
        for i in range(0, len(val_sequences), config.batch_size)
    ]

    metrics: list[EpochMetrics] = []
    best_acc = -1.0
    best_params = None
    for epoch in range(1, config.epochs + 1):
        order = np.random.default_rng(derive_seed(config.seed, "mlm-order", epoch)).permutation(
            len(sequences)
        )
        mask_rng = np.random.default_rng(derive_seed(config.seed, "mlm-mask", epoch))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            rows = [sequences[i] for i in order[start : start + config.batch_size]]
            batch = make_masked_batch(rows, config.mask_fraction, mask_rng, C)
            loss = _train_step(params, config, adam, batch)
            if not np.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {n_batches + 1}"
                )
            epoch_loss += loss
            n_batches += 1
        tie_rng = np.random.default_rng(derive_seed(config.seed, "mlm-val-ties", epoch))
        val_loss, val_acc = _evaluate(params, config, val_batches, tie_rng)
        metrics.append(
            EpochMetrics(
                epoch=epoch,
                train_loss=epoch_loss / n_batches,
                val_loss=val_loss,
                val_accuracy=val_acc,
            )
        )
        if val_acc > best_acc:
            best_acc = val_acc
            best_params = {k: v.copy() for k, v in params.items()}

    return TransformerModel(config=config, params=best_params), metrics


# ---------------------------------------------------------------------------
# Evaluation and queries


def masked_accuracy(
    model: TransformerModel,
    tokenizer: BpeTokenizer,
    docs: Sequence[ProcessedDocument],
    fraction: float,
    seed: int,
) -> float:
    """Percent of masked positions whose (tie-broken) argmax equals the original id."""
    sequences = [encode_document(tokenizer, d, model.config.max_seq) for d in docs]
    sequences = [s for s in sequences if len(s) > 2]
    if not sequences:
        raise ValueError("no maskable documents")
    mask_rng = np.random.default_rng(derive_seed(seed, "eval-mask"))
    tie_rng = np.random.default_rng(derive_seed(seed, "eval-ties"))
    bs = model.config.batch_size
    batches = [
        make_masked_batch(sequences[i : i + bs], fraction, mask_rng, tokenizer.vocab_size)
        for i in range(0, len(sequences), bs)
    ]
    _, acc = _evaluate(model.params, model.config, batches, tie_rng)
    return acc


def predict_masked(
    model: TransformerModel, tokenizer: BpeTokenizer, text: str, k: int
) -> list[tuple[str, float]]:
    """Top-k fill-ins for the single [MASK] marker in ``text``."""
    n_masks = text.count("[MASK]")
    if n_masks != 1:
        raise ValueError(f"text must contain exactly one [MASK] marker, found {n_masks}")
    left, right = (part.strip() for part in text.split("[MASK]"))
    ids = [CLS_ID] + tokenizer.encode(left) + [MASK_ID]
    mask_pos = len(ids) - 1
    tail = tokenizer.encode(" " + right) if right else []
    ids += tail + [SEP_ID]
    if len(ids) > model.config.max_seq:
        raise ValueError(f"text tokenizes past max_seq {model.config.max_seq}")
    input_ids = np.asarray([ids], dtype=np.int64)
    attention = np.ones_like(input_ids, dtype=bool)
    logits, _ = _forward(model.params, model.config, input_ids, attention)
    probs = _softmax(logits[0, mask_pos])
    order = sorted(range(len(probs)), key=lambda c: (-probs[c], tokenizer.id_to_token[c]))
    return [(tokenizer.id_to_token[c], float(probs[c])) for c in order[: max(0, k)]]


# ---------------------------------------------------------------------------
# Serialization: JSON manifest + little-endian float64 blob with tensor index


def save_transformer(model: TransformerModel, path: str | Path) -> None:
    path = Path(path)
    blob_path = path.with_suffix(".bin")
    index = {}
    offset = 0
    with open(blob_path, "wb") as fh:
        for name in sorted(model.params):
            arr = np.ascontiguousarray(model.params[name], dtype="<f8")
            fh.write(arr.tobytes())
            index[name] = {"offset": offset, "shape": list(arr.shape)}
            offset += arr.nbytes
    cfg = model.config
    manifest = {
        "schema_version": 1,
        "kind": "transformer",
        "blob_file": blob_path.name,
        "config": {
            "layers": cfg.layers,
            "heads": cfg.heads,
            "d_model": cfg.d_model,
            "d_ff": cfg.d_ff,
            "max_seq": cfg.max_seq,
            "vocab_size": cfg.vocab_size,
            "mask_fraction": cfg.mask_fraction,
            "batch_size": cfg.batch_size,
            "epochs": cfg.epochs,
            "initial_lr": cfg.initial_lr,
            "seed": cfg.seed,
        },
        "tensors": index,
    }
    path.write_text(json.dumps(manifest, sort_keys=True) + "\n", encoding="utf-8")


def load_transformer(path: str | Path) -> TransformerModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model manifest does not exist: {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("schema_version") != 1 or manifest.get("kind") != "transformer":
        raise ValueError(f"{path}: not a schema-v1 transformer manifest")
    blob = (path.parent / manifest["blob_file"]).read_bytes()
    params = {}
    for name, entry in manifest["tensors"].items():
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        start = entry["offset"]
        params[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=start).reshape(shape).copy()
    config = TransformerConfig(**manifest["config"])
    return TransformerModel(config=config, params=params)
