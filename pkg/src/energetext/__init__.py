"""Desk-scale NLP pipeline: corpus tooling, topic model, word embeddings,
masked-LM transformer, random-forest classification, and t-SNE projection."""

__version__ = "0.1.0"

from .corpus import (
    AbstractClass,
    CorpusError,
    CorpusSplit,
    ProcessedDocument,
    RawDocument,
    SynonymMap,
    Vocabulary,
    build_vocabulary,
    load_corpus,
    load_stoplist,
    load_synonyms,
    preprocess_corpus,
    preprocess_document,
    split_corpus,
)
from .topic_model import (
    DocTopics,
    LdaConfig,
    LdaModel,
    assigned_topics,
    fit_lda,
    infer_doc_topics,
    lda_perplexity,
    top_words,
)
from .embeddings import (
    EmbeddingMatrix,
    NeighborList,
    W2vConfig,
    cosine_similarity,
    log_probability,
    median_log_probability,
    nearest_neighbors,
    train_w2v,
)
from .bpe import BpeTokenizer, train_bpe
from .transformer import (
    MaskedBatch,
    NumericalError,
    TransformerConfig,
    TransformerModel,
    cross_entropy_loss,
    forward,
    mask_tokens,
    masked_accuracy,
    predict_masked,
    train_mlm,
)
from .classify import (
    CvReport,
    FeatureVector,
    RandomForest,
    RfConfig,
    cross_validate,
    featurize_lda,
    featurize_transformer,
    featurize_w2v,
    fit_random_forest,
    keyword_baseline,
    rf_predict,
)
from .projection import Projection, TsneConfig, export_scatter, tsne_project
