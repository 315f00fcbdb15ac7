"""Corpus ingestion, text preprocessing, vocabulary construction, splits.

Raw documents come from JSONL files or directories of .txt files.  The
preprocessing pipeline lowercases, strips special characters, tokenizes,
removes stopwords and pure numbers, applies a synonym map, and optionally
applies rule-based suffix stemming.  Preprocessing is idempotent: running
the pipeline on its own joined output reproduces the same tokens.
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .util import ordered_map


class CorpusError(ValueError):
    """Raised for malformed corpora, records, or preprocessing inputs."""


class AbstractClass(IntEnum):
    """Four-way abstract classification scheme with stable codes."""

    CHARACTERIZATION = 0
    MODELING = 1
    PROCESSING = 2
    SYNTHESIS = 3

    @classmethod
    def from_name(cls, name: str) -> "AbstractClass":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            valid = ", ".join(c.name.capitalize() for c in cls)
            raise CorpusError(f"unknown class label {name!r} (expected one of: {valid})")

    def display_name(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class RawDocument:
    id: str
    text: str
    source: str = ""
    label: Optional[AbstractClass] = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("document id must be nonempty")
        if not self.text.strip():
            raise CorpusError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class ProcessedDocument:
    id: str
    tokens: tuple[str, ...]
    label: Optional[AbstractClass] = None


@dataclass(frozen=True)
class SynonymMap:
    """Variant-term to canonical-term mapping; idempotent by construction."""

    mapping: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        bad = [canon for canon in self.mapping.values() if canon in self.mapping]
        if bad:
            raise CorpusError(
                f"synonym map is not idempotent: canonical term(s) used as keys: {sorted(set(bad))}"
            )

    def apply(self, token: str) -> str:
        return self.mapping.get(token, token)

    def __len__(self) -> int:
        return len(self.mapping)


@dataclass(frozen=True)
class Vocabulary:
    """Dense term index ordered by descending frequency, ties lexicographic."""

    term_to_index: dict[str, int]
    index_to_term: tuple[str, ...]
    counts: dict[str, int]
    min_count: int

    def __len__(self) -> int:
        return len(self.index_to_term)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_index

    def index(self, term: str) -> int:
        return self.term_to_index[term]

    def count_array(self) -> np.ndarray:
        """Per-index corpus counts as an int64 vector."""
        return np.array([self.counts[t] for t in self.index_to_term], dtype=np.int64)

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for term in self.index_to_term:
            h.update(term.encode("utf-8"))
            h.update(b"\x00")
            h.update(str(self.counts[term]).encode())
            h.update(b"\n")
        return h.hexdigest()


@dataclass(frozen=True)
class CorpusSplit:
    train: frozenset[str]
    validation: frozenset[str]
    seed: int
    fraction: float


# ---------------------------------------------------------------------------
# Loading


def _parse_record(obj: dict, lineno: int, path) -> RawDocument:
    if not isinstance(obj, dict):
        raise CorpusError(f"{path}:{lineno}: record is not a JSON object")
    for key in ("id", "text"):
        if key not in obj:
            raise CorpusError(f"{path}:{lineno}: missing required field {key!r}")
    label = obj.get("label")
    try:
        return RawDocument(
            id=str(obj["id"]),
            text=str(obj["text"]),
            source=str(obj.get("source", "")),
            label=AbstractClass.from_name(label) if label else None,
        )
    except CorpusError as exc:
        raise CorpusError(f"{path}:{lineno}: {exc}")


def load_corpus(path: str | Path, format: str = "jsonl") -> list[RawDocument]:
    """Load raw documents from a JSONL file or a directory of .txt files.

    Duplicate ids and malformed records are rejected with the offending
    line number or id in the message; an empty corpus is an error.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus path does not exist: {path}")
    docs: list[RawDocument] = []
    if format == "jsonl":
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}:{lineno}: malformed JSON ({exc.msg})")
                docs.append(_parse_record(obj, lineno, path))
    elif format == "text-dir":
        if not path.is_dir():
            raise CorpusError(f"text-dir corpus requires a directory, got {path}")
        for txt in sorted(path.glob("*.txt")):
            docs.append(RawDocument(id=txt.stem, text=txt.read_text(encoding="utf-8"), source=str(txt)))
    else:
        raise CorpusError(f"unknown corpus format {format!r} (expected jsonl or text-dir)")

    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise CorpusError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
    if not docs:
        raise CorpusError(f"empty corpus: {path}")
    return docs


def load_stoplist(path: str | Path | None = None) -> frozenset[str]:
    """Stopword set, one term per line; ships a default English list."""
    if path is None:
        text = resources.files("energetext.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(t.strip() for t in text.splitlines() if t.strip())


def load_synonyms(path: str | Path | None = None) -> SynonymMap:
    """Two-column TSV (variant, canonical); ships an example chemical-alias map."""
    if path is None:
        text = resources.files("energetext.data").joinpath("synonyms_energetics.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusError(f"synonym line {lineno}: expected 2 tab-separated columns")
        variant, canonical = parts[0].strip(), parts[1].strip()
        mapping[variant] = canonical
    return SynonymMap(mapping)


# ---------------------------------------------------------------------------
# Preprocessing

_NUMBER_RE = re.compile(r"^[0-9]+$")
_VOWELS = set("aeiou")
# Porter-style undoubling skips l, s, z.
_UNDOUBLE = set("bcdfghjkmnpqrtvw")


def _has_vowel(s: str) -> bool:
    return any(c in _VOWELS for c in s)


def _post_strip(stem: str) -> str:
    """Cleanup after removing -ing/-ed: undouble consonants, restore -e."""
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] in _UNDOUBLE:
        return stem[:-1]
    if stem.endswith(("at", "bl", "iz")):
        return stem + "e"
    return stem


def _stem_pass(t: str) -> str:
    # plurals
    if t.endswith("sses"):
        t = t[:-2]
    elif t.endswith("ies") and len(t) >= 5:
        t = t[:-3] + "y"
    elif t.endswith("ss") or t.endswith("us"):
        pass
    elif t.endswith("s") and len(t) >= 4:
        t = t[:-1]
    # derivational suffixes
    if t.endswith("ization") and len(t) >= 9:
        t = t[:-7] + "ize"
    elif t.endswith("ational") and len(t) >= 9:
        t = t[:-7] + "ate"
    # participles
    if t.endswith("ing") and len(t) >= 6:
        stem = t[:-3]
        if _has_vowel(stem):
            t = _post_strip(stem)
    elif t.endswith("eed"):
        pass
    elif t.endswith("ed") and len(t) >= 5:
        stem = t[:-2]
        if _has_vowel(stem):
            t = _post_strip(stem)
    return t


def stem_token(token: str) -> str:
    """Rule-based suffix stripper: plurals, -ing, -ed, -ization, -ational.

    A lightweight substitute for dictionary lemmatization.  Rules iterate
    to a fixpoint so the stemmer is idempotent: one strip may expose
    another suffix (teasings -> teasing -> teas -> tea).
    """
    prev = None
    t = token
    while t != prev:
        prev = t
        t = _stem_pass(t)
    return t


def clean_text(text: str) -> str:
    """Lowercase and strip special characters, keeping [a-z0-9] and spaces.

    Whitespace (including newlines) separates tokens; every other
    character is removed in place, so hyphenated and punctuated chemical
    names collapse into single tokens (e.g. 1,3,5-triazine -> 135triazine).
    """
    text = unicodedata.normalize("NFKD", text).lower()
    out = []
    for ch in text:
        if ch.isspace():
            out.append(" ")
        elif "a" <= ch <= "z" or "0" <= ch <= "9":
            out.append(ch)
    return "".join(out)


def preprocess_document(
    doc: RawDocument,
    stoplist: frozenset[str] | set[str] = frozenset(),
    synonyms: SynonymMap | None = None,
    stemming: bool = False,
) -> ProcessedDocument:
    """Run the full preprocessing pipeline on one document.

    Steps, in order: lowercase; special-character removal; whitespace
    tokenization; stopword and pure-number removal; synonym replacement;
    optional suffix stemming.  Stemming may produce stopwords, numbers,
    or synonym variants again, so the filter and synonym passes re-run on
    the stemmed output; this is what makes the pipeline idempotent.
    An empty token list is legal output.
    """
    synonyms = synonyms or SynonymMap()

    def keep(tok: str) -> bool:
        return tok not in stoplist and not _NUMBER_RE.match(tok)

    def normalize(tok: str) -> str:
        # Stemming can expose a synonym variant and vice versa; iterate to
        # a (bounded) fixpoint so reprocessing the output is a no-op.
        tok = synonyms.apply(tok)
        if stemming:
            for _ in range(5):
                nxt = synonyms.apply(stem_token(tok))
                if nxt == tok:
                    break
                tok = nxt
        return tok

    tokens = [normalize(t) for t in clean_text(doc.text).split() if keep(t)]
    tokens = [t for t in tokens if keep(t)]
    return ProcessedDocument(id=doc.id, tokens=tuple(tokens), label=doc.label)


def preprocess_corpus(
    docs: Sequence[RawDocument],
    stoplist: frozenset[str] | set[str] = frozenset(),
    synonyms: SynonymMap | None = None,
    stemming: bool = False,
) -> list[ProcessedDocument]:
    """Preprocess every document; order-stable regardless of worker count."""
    return ordered_map(
        lambda d: preprocess_document(d, stoplist=stoplist, synonyms=synonyms, stemming=stemming),
        docs,
    )


# ---------------------------------------------------------------------------
# Vocabulary and splits


def build_vocabulary(docs: Sequence[ProcessedDocument], min_count: int = 1) -> Vocabulary:
    """Index all terms with corpus frequency >= min_count.

    Terms are ordered by descending frequency, ties broken lexicographically,
    giving dense indices 0..V-1.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    if not docs:
        raise CorpusError("cannot build vocabulary from an empty document list")
    counts = Counter()
    for doc in docs:
        counts.update(doc.tokens)
    surviving = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    if not surviving:
        raise CorpusError("empty vocabulary: no term meets the min_count threshold")
    return Vocabulary(
        term_to_index={t: i for i, t in enumerate(surviving)},
        index_to_term=tuple(surviving),
        counts={t: counts[t] for t in surviving},
        min_count=min_count,
    )


def split_corpus(docs: Sequence[ProcessedDocument | RawDocument], fraction: float, seed: int) -> CorpusSplit:
    """Seeded train/validation split: shuffle, cut at round(fraction * N)."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"split fraction must be in (0, 1), got {fraction}")
    if len(docs) < 2:
        raise CorpusError("need at least 2 documents to split")
    ids = [d.id for d in docs]
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    n_train = int(np.floor(fraction * len(ids) + 0.5))
    train = frozenset(ids[i] for i in perm[:n_train])
    validation = frozenset(ids[i] for i in perm[n_train:])
    return CorpusSplit(train=train, validation=validation, seed=seed, fraction=fraction)


# ---------------------------------------------------------------------------
# Processed-corpus cache (JSONL of {"id", "tokens", "label"})


def save_processed(docs: Iterable[ProcessedDocument], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            rec = {
                "id": doc.id,
                "tokens": list(doc.tokens),
                "label": doc.label.display_name() if doc.label is not None else None,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_processed(path: str | Path) -> list[ProcessedDocument]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"processed corpus does not exist: {path}")
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON ({exc.msg})")
            label = rec.get("label")
            docs.append(
                ProcessedDocument(
                    id=str(rec["id"]),
                    tokens=tuple(rec["tokens"]),
                    label=AbstractClass.from_name(label) if label else None,
                )
            )
    if not docs:
        raise CorpusError(f"empty processed corpus: {path}")
    return docs


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    obj = {
        "schema_version": 1,
        "min_count": vocab.min_count,
        "terms": [[t, vocab.counts[t]] for t in vocab.index_to_term],
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"vocabulary file does not exist: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    terms = [t for t, _ in obj["terms"]]
    return Vocabulary(
        term_to_index={t: i for i, t in enumerate(terms)},
        index_to_term=tuple(terms),
        counts={t: int(c) for t, c in obj["terms"]},
        min_count=int(obj["min_count"]),
    )


def save_split(split: CorpusSplit, path: str | Path) -> None:
    obj = {
        "train": sorted(split.train),
        "validation": sorted(split.validation),
        "seed": split.seed,
        "fraction": split.fraction,
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_split(path: str | Path) -> CorpusSplit:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return CorpusSplit(
        train=frozenset(obj["train"]),
        validation=frozenset(obj["validation"]),
        seed=int(obj["seed"]),
        fraction=float(obj["fraction"]),
    )
