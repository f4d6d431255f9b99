"""Shared fixtures: tiny model configs and small labeled documents."""

import pytest

from topicseg.corpus import SegDocument, Sentence, SynthConfig, build_documents, synth_generate
from topicseg.models import CrossSegmentConfig, HierarchicalConfig
from topicseg.training import TrainConfig


def make_document(doc_id, texts, labels):
    return SegDocument(doc_id=doc_id, sentences=[Sentence.from_text(t) for t in texts],
                       labels=list(labels))


@pytest.fixture
def tiny_hier_config():
    return HierarchicalConfig(emb_dim=4, hidden_dim=3, doc_hidden_dim=3)


@pytest.fixture
def small_hier_config():
    return HierarchicalConfig(emb_dim=16, hidden_dim=16, doc_hidden_dim=16)


@pytest.fixture
def tiny_cs_config():
    return CrossSegmentConfig(model_dim=8, num_layers=2, num_heads=2, ff_dim=16, max_seq=16,
                              context_size=3, wordpiece_vocab=60)


@pytest.fixture
def small_cs_config():
    return CrossSegmentConfig(model_dim=16, num_layers=2, num_heads=2, ff_dim=32, max_seq=32,
                              context_size=8, wordpiece_vocab=120)


@pytest.fixture
def three_sentence_document():
    return make_document("tiny", ["sun moon", "moon star sun", "rock tree"], [0, 1, 1])


@pytest.fixture
def easy_documents():
    """Two 3-segment documents; every conversation has its own topic."""
    config = SynthConfig(topics=6, conversations=6, min_sentences=2, max_sentences=3,
                         sentence_mean=4.0, sentence_std=1.0, sentence_min=3, sentence_max=5,
                         shared_fraction=0.0, topic_vocab=8, shared_vocab=4,
                         conversation_vocab=8, seed=3)
    return build_documents(synth_generate(config), segments=3, seed=0)


@pytest.fixture
def chat_corpus():
    return synth_generate(SynthConfig(topics=4, conversations=40, seed=11))


# Slow end-to-end runs: narrower than the presets, learning rate above the
# per-family defaults (1e-3 and 3e-4), epochs at the default 10.
ACCEPTANCE_HIER_CONFIG = HierarchicalConfig(emb_dim=32, hidden_dim=32, doc_hidden_dim=32)
ACCEPTANCE_CS_CONFIG = CrossSegmentConfig(model_dim=32, num_layers=2, num_heads=2, ff_dim=64,
                                          max_seq=64, context_size=30, wordpiece_vocab=500)
ACCEPTANCE_LEARNING_RATE = 3e-3


@pytest.fixture
def acceptance_train_config():
    return TrainConfig(learning_rate=ACCEPTANCE_LEARNING_RATE)
