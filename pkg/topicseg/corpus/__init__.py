"""Corpus parsing, tokenization, labeled document construction, and synthetic data."""

from .documents import (
    CHAT_SPLIT,
    WIKI_SPLIT,
    build_documents,
    conversation_document,
    corpus_stats,
    split_corpus,
)
from .readers import (
    parse_chat_jsonl,
    parse_wiki,
    read_chat_corpus,
    read_documents,
    read_wiki_corpus,
    wiki_document,
    write_chat_corpus,
    write_documents,
)
from .synth import SynthConfig, synth_generate
from .tokenize import split_sentences, word_tokenize
from .types import (
    Conversation,
    CorpusSplits,
    DatasetProfile,
    SegDocument,
    Sentence,
    Turn,
    document_from_segments,
)
from .vocab import CLS, PAD, SEP, UNK, Vocabulary, build_word_vocabulary
from .wordpiece import train_wordpiece, wordpiece_encode

__all__ = [
    "CHAT_SPLIT",
    "CLS",
    "Conversation",
    "CorpusSplits",
    "DatasetProfile",
    "PAD",
    "SEP",
    "SegDocument",
    "Sentence",
    "SynthConfig",
    "Turn",
    "UNK",
    "Vocabulary",
    "WIKI_SPLIT",
    "build_documents",
    "build_word_vocabulary",
    "conversation_document",
    "corpus_stats",
    "document_from_segments",
    "parse_chat_jsonl",
    "parse_wiki",
    "read_chat_corpus",
    "read_documents",
    "read_wiki_corpus",
    "split_corpus",
    "split_sentences",
    "synth_generate",
    "train_wordpiece",
    "wiki_document",
    "word_tokenize",
    "wordpiece_encode",
    "write_chat_corpus",
    "write_documents",
]
