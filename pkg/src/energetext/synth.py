"""Synthetic corpus generators.

Every training operation in the package is exercised against corpora with
known structure: disjoint-vocabulary topic mixtures for topic recovery,
an engineered co-occurrence pair for neighbor retrieval, fully distinct
sentences for masked-LM memorization, and a four-class labeled set with
class-specific vocabulary for the classification pipeline.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .corpus import AbstractClass, ProcessedDocument, RawDocument

_WORD_POOL = (
    "shock wave pressure velocity detonation propellant binder crystal lattice "
    "impact energy release reaction burn rate particle grain porosity density "
    "temperature gradient ignition spark sensitivity friction charge booster "
    "cylinder plate gap test gauge fragment casing liner jet penetration "
    "equation state expansion product gas phase transition melt decomposition"
).split()


def to_processed(docs: Sequence[RawDocument]) -> list[ProcessedDocument]:
    """Whitespace-split raw text; synthetic text is already clean tokens."""
    return [
        ProcessedDocument(id=d.id, tokens=tuple(d.text.split()), label=d.label) for d in docs
    ]


def topic_corpus(
    num_docs: int = 200,
    num_topics: int = 2,
    words_per_topic: int = 10,
    doc_len: tuple[int, int] = (30, 60),
    concentration: float = 0.3,
    seed: int = 0,
) -> tuple[list[RawDocument], list[list[str]]]:
    """Documents drawn from disjoint-vocabulary topics.

    Each topic owns ``words_per_topic`` exclusive terms with uniform
    within-topic probabilities; each document draws a topic mixture from a
    symmetric Dirichlet and samples tokens through it.  Returns the
    documents and the generating per-topic vocabularies (the recovery
    oracle).
    """
    rng = np.random.default_rng(seed)
    topic_vocabs = [
        [f"t{k}word{i:02d}" for i in range(words_per_topic)] for k in range(num_topics)
    ]
    docs = []
    for d in range(num_docs):
        theta = rng.dirichlet([concentration] * num_topics)
        length = int(rng.integers(doc_len[0], doc_len[1] + 1))
        topics = rng.choice(num_topics, size=length, p=theta)
        words = [topic_vocabs[k][rng.integers(words_per_topic)] for k in topics]
        docs.append(RawDocument(id=f"topicdoc{d:04d}", text=" ".join(words), source="synthetic"))
    return docs, topic_vocabs


def cooccurrence_corpus(
    pair_docs: int = 50, copies_per_doc: int = 10, filler_docs: int = 50
) -> list[RawDocument]:
    """A corpus where "alpha" and "beta" co-occur and nothing else does.

    500 copies of the sentence "alpha beta" (10 consecutive copies in each
    of 50 documents) plus 50 distinct single-word filler sentences.  With a
    window of 2 the repetition gives both words identical context
    multisets, so each must become the other's nearest neighbor; fillers
    never train as centers or contexts and keep their random vectors.
    """
    docs = [
        RawDocument(
            id=f"pair{i:04d}",
            text=" ".join(["alpha beta"] * copies_per_doc),
            source="synthetic",
        )
        for i in range(pair_docs)
    ]
    docs += [
        RawDocument(id=f"filler{i:03d}", text=f"filler{i:03d}", source="synthetic")
        for i in range(filler_docs)
    ]
    return docs


def memorization_corpus() -> list[RawDocument]:
    """Eight sentences of six globally-unique words each.

    No word appears twice anywhere, so context plus position determines
    every token and a small masked-LM model can reach 100% accuracy.
    """
    return [
        RawDocument(
            id=f"memo{i}",
            text=" ".join(f"s{i}w{j}" for j in range(6)),
            source="synthetic",
        )
        for i in range(8)
    ]


_CLASS_KEYWORDS = {
    AbstractClass.CHARACTERIZATION: "characterization",
    AbstractClass.MODELING: "modeling",
    AbstractClass.PROCESSING: "processing",
    AbstractClass.SYNTHESIS: "synthesis",
}
_CLASS_MARKERS = {
    AbstractClass.CHARACTERIZATION: "aa",
    AbstractClass.MODELING: "bb",
    AbstractClass.PROCESSING: "cc",
    AbstractClass.SYNTHESIS: "dd",
}


def labeled_corpus(
    per_class: int = 50,
    doc_len: tuple[int, int] = (35, 50),
    signature_words: int = 12,
    background_words: int = 30,
    signature_share: float = 0.6,
    keyword_rate: float = 0.35,
    wrong_keyword_rate: float = 0.15,
    seed: int = 0,
) -> list[RawDocument]:
    """Labeled four-class abstracts with class-specific vocabulary.

    Each class owns ``signature_words`` exclusive terms mixed with a
    shared background vocabulary.  The literal class keyword is planted in
    ~keyword_rate of documents (and a wrong class keyword in
    ~wrong_keyword_rate), so a keyword scan scores far above zero but far
    below a classifier that uses the signature vocabulary.
    """
    rng = np.random.default_rng(seed)
    classes = list(AbstractClass)
    signatures = {
        cls: [f"{_CLASS_MARKERS[cls]}term{i:02d}" for i in range(signature_words)]
        for cls in classes
    }
    background = [f"common{i:02d}" for i in range(background_words)]
    docs = []
    n = 0
    for cls in classes:
        for _ in range(per_class):
            length = int(rng.integers(doc_len[0], doc_len[1] + 1))
            words = []
            for _w in range(length):
                if rng.random() < signature_share:
                    words.append(signatures[cls][rng.integers(signature_words)])
                else:
                    words.append(background[rng.integers(background_words)])
            if rng.random() < keyword_rate:
                pos = rng.integers(len(words) + 1)
                words.insert(pos, _CLASS_KEYWORDS[cls])
            if rng.random() < wrong_keyword_rate:
                wrong = classes[rng.integers(len(classes))]
                pos = rng.integers(len(words) + 1)
                words.insert(pos, _CLASS_KEYWORDS[wrong])
            docs.append(
                RawDocument(
                    id=f"abstract{n:04d}",
                    text=" ".join(words),
                    source="synthetic",
                    label=cls,
                )
            )
            n += 1
    return docs


def plain_sentences(num_docs: int = 100, doc_len: tuple[int, int] = (6, 16), seed: int = 0) -> list[RawDocument]:
    """Plain sentences over a small realistic word pool (zipf-ish draws)."""
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, len(_WORD_POOL) + 1, dtype=np.float64)
    probs = (1.0 / ranks) / (1.0 / ranks).sum()
    docs = []
    for d in range(num_docs):
        length = int(rng.integers(doc_len[0], doc_len[1] + 1))
        words = rng.choice(len(_WORD_POOL), size=length, p=probs)
        docs.append(
            RawDocument(
                id=f"plain{d:04d}",
                text=" ".join(_WORD_POOL[w] for w in words),
                source="synthetic",
            )
        )
    return docs
