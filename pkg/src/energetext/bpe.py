"""Byte-pair tokenizer trained from scratch on a processed corpus.

Text is split into units of (leading whitespace + word); merges are
learned within units, most-frequent pair first with ties broken by
lexicographic pair order, until the requested vocabulary size is reached.
Decoding concatenates token strings, so encode -> decode restores the
input text exactly (up to trailing whitespace).
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import ProcessedDocument

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIALS = (PAD, UNK, CLS, SEP, MASK)
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(5)
NUM_SPECIALS = len(SPECIALS)

_UNIT_RE = re.compile(r"\s*\S+")


@dataclass
class BpeTokenizer:
    merges: list[tuple[str, str]]
    token_to_id: dict[str, int]
    vocab_size: int
    reached_target: bool = True  # False when the corpus ran out of pairs early
    _merge_rank: dict[tuple[str, str], int] = field(default_factory=dict, repr=False)
    _encode_cache: dict[str, tuple[int, ...]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._merge_rank:
            self._merge_rank = {pair: i for i, pair in enumerate(self.merges)}
        self.id_to_token = [None] * len(self.token_to_id)
        for tok, i in self.token_to_id.items():
            self.id_to_token[i] = tok

    def _encode_unit(self, unit: str) -> tuple[int, ...]:
        cached = self._encode_cache.get(unit)
        if cached is not None:
            return cached
        symbols = list(unit)
        while len(symbols) > 1:
            best_rank = None
            for a, b in zip(symbols, symbols[1:]):
                rank = self._merge_rank.get((a, b))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
            if best_rank is None:
                break
            a, b = self.merges[best_rank]
            merged = []
            i = 0
            while i < len(symbols):
                if i + 1 < len(symbols) and symbols[i] == a and symbols[i + 1] == b:
                    merged.append(a + b)
                    i += 2
                else:
                    merged.append(symbols[i])
                    i += 1
            symbols = merged
        ids = tuple(self.token_to_id.get(s, UNK_ID) for s in symbols)
        self._encode_cache[unit] = ids
        return ids

    def encode(self, text: str) -> list[int]:
        """Token ids for raw text, without [CLS]/[SEP] framing."""
        ids: list[int] = []
        for unit in _UNIT_RE.findall(text):
            ids.extend(self._encode_unit(unit))
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        """Concatenate token strings, dropping special tokens."""
        return "".join(
            self.id_to_token[i] for i in ids if i >= NUM_SPECIALS
        )

    def is_special(self, token_id: int) -> bool:
        return token_id < NUM_SPECIALS


def train_bpe(docs: Sequence[ProcessedDocument], vocab_size: int) -> BpeTokenizer:
    """Learn merges until the vocabulary reaches ``vocab_size`` tokens.

    The vocabulary counts 5 special tokens, the corpus character alphabet,
    and one token per merge.  Tie-broken deterministically: highest pair
    count first, then lexicographically smallest pair.  If the corpus runs
    out of mergeable pairs early the tokenizer is returned at its achieved
    size with ``reached_target=False``.
    """
    unit_counts: Counter[str] = Counter()
    for doc in docs:
        text = " ".join(doc.tokens)
        unit_counts.update(_UNIT_RE.findall(text))
    if not unit_counts:
        raise ValueError("cannot train a tokenizer on an empty corpus")

    alphabet = sorted({ch for unit in unit_counts for ch in unit})
    base = NUM_SPECIALS + len(alphabet)
    if vocab_size <= base:
        raise ValueError(
            f"vocab_size must exceed specials + alphabet ({base}), got {vocab_size}"
        )

    words: list[tuple[list[str], int]] = [
        (list(unit), count) for unit, count in sorted(unit_counts.items())
    ]
    merges: list[tuple[str, str]] = []
    tokens = list(SPECIALS) + alphabet
    seen = set(tokens)
    while len(tokens) < vocab_size:
        pair_counts: Counter[tuple[str, str]] = Counter()
        for symbols, count in words:
            for pair in zip(symbols, symbols[1:]):
                pair_counts[pair] += count
        if not pair_counts:
            break
        best = min(pair_counts, key=lambda p: (-pair_counts[p], p))
        merges.append(best)
        a, b = best
        for symbols, _count in words:
            i = 0
            while i < len(symbols) - 1:
                if symbols[i] == a and symbols[i + 1] == b:
                    symbols[i : i + 2] = [a + b]
                else:
                    i += 1
        # Distinct merges can in principle concatenate to the same string;
        # the token id is shared in that case.
        if a + b not in seen:
            seen.add(a + b)
            tokens.append(a + b)

    return BpeTokenizer(
        merges=merges,
        token_to_id={t: i for i, t in enumerate(tokens)},
        vocab_size=len(tokens),
        reached_target=len(tokens) == vocab_size,
    )


def save_tokenizer(tok: BpeTokenizer, path: str | Path) -> None:
    obj = {
        "schema_version": 1,
        "kind": "bpe",
        "specials": list(SPECIALS),
        "vocab": [tok.id_to_token[i] for i in range(tok.vocab_size)],
        "merges": [list(p) for p in tok.merges],
        "reached_target": tok.reached_target,
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_tokenizer(path: str | Path) -> BpeTokenizer:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"tokenizer file does not exist: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    if obj.get("schema_version") != 1 or obj.get("kind") != "bpe":
        raise ValueError(f"{path}: not a schema-v1 bpe tokenizer file")
    vocab = obj["vocab"]
    return BpeTokenizer(
        merges=[tuple(p) for p in obj["merges"]],
        token_to_id={t: i for i, t in enumerate(vocab)},
        vocab_size=len(vocab),
        reached_target=bool(obj["reached_target"]),
    )
