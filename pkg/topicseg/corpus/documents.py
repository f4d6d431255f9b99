"""Labeled document construction, corpus splitting, and dataset profiles."""

from typing import List, Sequence, Tuple

import numpy as np

from ..errors import CorpusError
from .types import Conversation, CorpusSplits, DatasetProfile, SegDocument, document_from_segments

# Default (train, dev, test) ratios per corpus kind
CHAT_SPLIT = (0.6, 0.2, 0.2)
WIKI_SPLIT = (0.8, 0.1, 0.1)


def conversation_document(conversation: Conversation) -> SegDocument:
    """A single conversation as a one-segment document."""
    return document_from_segments(conversation.id, [conversation.sentences()], [conversation.id])


def build_documents(conversations: Sequence[Conversation], segments: int = 5,
                    seed: int = 0) -> List[SegDocument]:
    """
    Group shuffled conversations into documents of exactly `segments` segments.

    Each conversation contributes one segment; its last sentence is labeled 1.
    floor(N / segments) documents are produced and the remainder is dropped.

    Args:
        conversations: Source conversations
        segments: Segments per document (K >= 2)
        seed: Shuffle seed

    Returns:
        Documents with ids "doc-00000", "doc-00001", ...

    Raises:
        CorpusError: If K < 2, fewer than K conversations, or a conversation has no sentences
    """
    if segments < 2:
        raise CorpusError(f"segments per document must be >= 2, got {segments}")
    if len(conversations) < segments:
        raise CorpusError(
            f"need at least {segments} conversations for {segments}-segment documents, "
            f"got {len(conversations)}"
        )
    order = np.random.default_rng(seed).permutation(len(conversations))
    documents = []
    for d in range(len(conversations) // segments):
        group = [conversations[i] for i in order[d * segments:(d + 1) * segments]]
        chunks = []
        for conv in group:
            sentences = conv.sentences()
            if not sentences:
                raise CorpusError(f"conversation {conv.id!r} has no tokenizable sentences")
            chunks.append(sentences)
        documents.append(document_from_segments(f"doc-{d:05d}", chunks, [c.id for c in group]))
    return documents


def split_sizes(n: int, ratios: Tuple[float, float, float]) -> Tuple[int, int, int]:
    """(train, dev, test) sizes: dev and test are floored, train takes the remainder."""
    dev = int(np.floor(ratios[1] * n + 1e-9))
    test = int(np.floor(ratios[2] * n + 1e-9))
    return n - dev - test, dev, test


def split_corpus(documents: Sequence[SegDocument],
                 ratios: Tuple[float, float, float] = WIKI_SPLIT,
                 seed: int = 0) -> CorpusSplits:
    """
    Shuffle documents by seed and partition them into train / dev / test.

    Raises:
        CorpusError: If ratios are not positive or do not sum to 1, or any split is empty
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise CorpusError(f"split ratios must be three positive numbers, got {tuple(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"split ratios must sum to 1, got {sum(ratios)}")
    n_train, n_dev, n_test = split_sizes(len(documents), tuple(ratios))
    if min(n_train, n_dev, n_test) == 0:
        raise CorpusError(
            f"{len(documents)} documents with ratios {tuple(ratios)} leave an empty split "
            f"(train={n_train}, dev={n_dev}, test={n_test})"
        )
    order = np.random.default_rng(seed).permutation(len(documents))
    shuffled = [documents[i] for i in order]
    return CorpusSplits(
        train=shuffled[:n_train],
        dev=shuffled[n_train:n_train + n_dev],
        test=shuffled[n_train + n_dev:],
    )


def corpus_stats(documents: Sequence[SegDocument]) -> DatasetProfile:
    """
    Population statistics over a document corpus.

    Sentence length counts word tokens; segment length counts sentences. The
    boundary rate is positive labels over candidate breaks, so each
    document's final sentence is left out.

    Raises:
        CorpusError: For an empty corpus
    """
    sentence_lengths = [len(s.word_tokens) for d in documents for s in d.sentences]
    if not sentence_lengths:
        raise CorpusError("cannot profile an empty corpus")
    segment_lengths = [n for d in documents for n in d.segment_lengths()]
    gaps = [label for d in documents for label in d.gap_labels]
    sentence_lengths = np.asarray(sentence_lengths, dtype=np.float64)
    segment_lengths = np.asarray(segment_lengths, dtype=np.float64)
    return DatasetProfile(
        documents=len(documents),
        segments=int(segment_lengths.size),
        sentences=int(sentence_lengths.size),
        sentence_length_mean=float(sentence_lengths.mean()),
        sentence_length_std=float(sentence_lengths.std()),
        segment_length_mean=float(segment_lengths.mean()),
        segment_length_std=float(segment_lengths.std()),
        boundary_rate=float(np.mean(gaps)) if gaps else 0.0,
    )
