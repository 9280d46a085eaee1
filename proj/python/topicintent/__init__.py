"""Hybrid LDA/skip-gram topic labels and LSTM next-topic prediction."""

from ._topicintent import (
    EmbeddingModel,
    Error,
    FpmBaseline,
    IntentModel,
    InteractionEvent,
    LdaModel,
    MarkovBaseline,
    WordTopicMap,
    accuracy,
    coherence,
    f1_scores,
    fuse,
    lda_word_topic_map,
    precision_at_k,
    preprocess,
    recall_at_k,
    reciprocal_rank,
    select_k,
    simulate,
    train_embedding,
    train_intent,
    train_lda,
)

__version__ = "0.1.0"
