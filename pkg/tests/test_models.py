"""Tests for both model families: shapes, parameter counts, gradients, and masking."""

import numpy as np
import pytest

from topicseg.corpus import CLS, SEP
from topicseg.errors import ConfigError, SegmentationError, ShapeError
from topicseg.losses import LossSpec, batch_loss
from topicseg.models import (
    PRESETS,
    CrossSegmentConfig,
    HierarchicalConfig,
    ModelRegistry,
    cross_segment_forward,
    encode_sentence,
    extract_context,
    init_model,
    parameter_count,
)
from topicseg.models.cross_segment import batch_contexts
from topicseg.models.hierarchical import encode_sentences
from topicseg.models.layers import masked_max_pool
from topicseg.numerics import Graph, constants, grad_check
from topicseg.numerics import kernels as K

from .conftest import make_document

LOSSES = [LossSpec.ce(), LossSpec.weighted_ce(0.2, 0.8), LossSpec.focal(0.8, 2.0)]


class TestHierarchical:
    def test_output_shape_and_range(self, small_hier_config, three_sentence_document):
        model = ModelRegistry.create(small_hier_config, [three_sentence_document], seed=0)
        probs = model.gap_probabilities(three_sentence_document)
        assert probs.shape == (2,)
        assert np.all((probs > 0) & (probs < 1))

    def test_sentence_embedding_width(self, three_sentence_document):
        config = HierarchicalConfig(emb_dim=5, hidden_dim=7, doc_hidden_dim=3)
        model = ModelRegistry.create(config, [three_sentence_document], seed=0)
        embedding = encode_sentence(constants(model.params), [4, 5, 6])
        assert embedding.shape == (14,)

    def test_empty_sentence_rejected(self, small_hier_config, three_sentence_document):
        model = ModelRegistry.create(small_hier_config, [three_sentence_document], seed=0)
        with pytest.raises(ShapeError):
            encode_sentence(constants(model.params), [])

    def test_padding_does_not_change_sentence_embedding(self, small_hier_config,
                                                        three_sentence_document):
        model = ModelRegistry.create(small_hier_config, [three_sentence_document], seed=0)
        p = constants(model.params)
        alone = encode_sentence(p, [4, 5]).data
        # Batched next to a longer sentence, the short one is right-padded
        batched = encode_sentences(p, [[4, 5], [6, 7, 8, 4, 5]]).data[0]
        np.testing.assert_allclose(alone, batched, atol=1e-6)

    def test_parameter_count_by_hand(self):
        config = HierarchicalConfig(vocab_size=10, emb_dim=4, hidden_dim=3, doc_hidden_dim=2)
        embeddings = 10 * 4
        sentence = 2 * (4 * 12 + 3 * 12 + 12) + 2 * (6 * 12 + 3 * 12 + 12)
        document = 2 * (6 * 8 + 2 * 8 + 8) + 2 * (4 * 8 + 2 * 8 + 8)
        output = 4 * 2 + 2
        assert parameter_count(config) == embeddings + sentence + document + output == 738

    @pytest.mark.parametrize("spec", LOSSES, ids=lambda s: s.kind)
    def test_gradients_match_finite_differences(self, spec, tiny_hier_config,
                                                three_sentence_document):
        model = ModelRegistry.create(tiny_hier_config, [three_sentence_document], seed=1)
        encoded = model.encode(three_sentence_document)
        labels = three_sentence_document.gap_labels
        error = grad_check(lambda t: batch_loss(model.forward(t, encoded), labels, spec),
                           model.params, epsilon=1e-5)
        assert error < 1e-4


class TestMaskedMaxPool:
    def test_padding_ignored(self):
        x = np.array([[[1.0, -2.0], [5.0, 9.0]]])
        mask = np.array([[1.0, 0.0]])
        np.testing.assert_array_equal(masked_max_pool(K.add(x, 0.0), mask).data, [[1.0, -2.0]])


class TestExtractContext:
    def test_documented_example(self):
        assert extract_context([[10, 11], [12, 13, 14], [15]], gap=1, k=3) == [
            CLS, 12, 13, 14, SEP, 15, SEP
        ]

    def test_crosses_sentence_boundaries(self):
        window = extract_context([[1, 2], [3], [4, 5, 6]], gap=1, k=3)
        assert window == [CLS, 1, 2, 3, SEP, 4, 5, 6, SEP]

    def test_truncates_to_k_per_side(self):
        window = extract_context([[5, 6, 7, 8], [9, 10, 11, 12]], gap=0, k=2)
        assert window == [CLS, 7, 8, SEP, 9, 10, SEP]

    def test_gap_out_of_range(self):
        with pytest.raises(SegmentationError, match="out of range"):
            extract_context([[1], [2]], gap=1, k=2)

    def test_batch_pads_and_masks(self):
        ids, pad = batch_contexts([[2, 5, 3], [2, 5, 3, 6, 3]])
        assert ids.shape == pad.shape == (2, 5)
        assert pad[0].tolist() == [False, False, False, True, True]
        assert not pad[1].any()


class TestCrossSegment:
    def test_output_shape_and_range(self, small_cs_config, easy_documents):
        model = ModelRegistry.create(small_cs_config, easy_documents, seed=0)
        doc = easy_documents[0]
        probs = model.gap_probabilities(doc)
        assert probs.shape == (len(doc) - 1,)
        assert np.all((probs > 0) & (probs < 1))

    def test_padding_invariance(self):
        config = CrossSegmentConfig(vocab_size=50, model_dim=16, num_layers=2, num_heads=4,
                                    ff_dim=32, max_seq=32, context_size=8)
        p = constants(init_model(config, seed=3))
        window = np.array([[CLS, 7, 8, 9, SEP, 10, 11, SEP]])
        bare = cross_segment_forward(p, config, window, window == 0).data
        padded = np.concatenate([window, np.zeros((1, 6), dtype=np.int64)], axis=1)
        assert cross_segment_forward(p, config, padded, padded == 0).data == pytest.approx(
            bare, abs=1e-5)

    def test_sequence_too_long(self):
        config = CrossSegmentConfig(vocab_size=50, model_dim=8, num_layers=1, num_heads=2,
                                    ff_dim=8, max_seq=8, context_size=2)
        p = constants(init_model(config, seed=0))
        ids = np.full((1, 9), 5)
        with pytest.raises(ShapeError, match="max_seq"):
            cross_segment_forward(p, config, ids, ids == 0)

    def test_parameter_count_by_hand(self):
        config = CrossSegmentConfig(vocab_size=100, model_dim=32, num_layers=2, num_heads=4,
                                    ff_dim=64, max_seq=64, context_size=30)
        assert parameter_count(config) == 22466

    @pytest.mark.parametrize("spec", LOSSES, ids=lambda s: s.kind)
    def test_gradients_match_finite_differences(self, spec, tiny_cs_config,
                                                three_sentence_document):
        model = ModelRegistry.create(tiny_cs_config, [three_sentence_document], seed=2)
        encoded = model.encode(three_sentence_document)
        labels = three_sentence_document.gap_labels
        error = grad_check(lambda t: batch_loss(model.forward(t, encoded), labels, spec),
                           model.params, epsilon=1e-5)
        assert error < 1e-4

    def test_heads_must_divide_dim(self):
        with pytest.raises(ConfigError, match="num_heads"):
            init_model(CrossSegmentConfig(vocab_size=10, model_dim=10, num_heads=4), seed=0)

    def test_context_must_fit(self):
        with pytest.raises(ConfigError, match="context_size"):
            CrossSegmentConfig(vocab_size=10, max_seq=16, context_size=7).validate()


class TestSaturatedHead:
    @pytest.mark.parametrize("head_bias", [[-50.0, 50.0], [50.0, -50.0], [-10.0, 10.0]])
    @pytest.mark.parametrize("family", ["hierarchical", "cross_segment"])
    def test_probabilities_stay_open(self, family, head_bias, small_hier_config, small_cs_config,
                                     easy_documents):
        config = small_hier_config if family == "hierarchical" else small_cs_config
        model = ModelRegistry.create(config, easy_documents, seed=0)
        prefix = "output" if family == "hierarchical" else "classifier"
        model.params[f"{prefix}.bias"] = np.asarray(head_bias, dtype=np.float32)
        probs = model.gap_probabilities(easy_documents[0])
        assert probs.dtype == np.float32
        assert np.all((probs > 0) & (probs < 1))


class TestInitialization:
    def test_deterministic(self):
        config = HierarchicalConfig(vocab_size=20, emb_dim=4, hidden_dim=4, doc_hidden_dim=4)
        a, b = init_model(config, seed=9), init_model(config, seed=9)
        assert a.keys() == b.keys()
        assert all(np.array_equal(a[name], b[name]) for name in a)

    def test_schemes(self):
        config = CrossSegmentConfig(vocab_size=20, model_dim=8, num_layers=1, num_heads=2,
                                    ff_dim=8, max_seq=16, context_size=4)
        params = init_model(config, seed=0)
        assert not params["layers.0.attn.bq"].any()
        assert np.all(params["final_ln.gamma"] == 1.0)
        assert np.all(np.abs(params["layers.0.ff.w1"]) <= np.float32(1 / np.sqrt(8)))

    def test_vocab_required(self):
        with pytest.raises(ConfigError, match="vocab_size"):
            init_model(HierarchicalConfig(), seed=0)


class TestRegistry:
    def test_presets_resolve(self):
        for name in PRESETS:
            config = ModelRegistry.config_from(name)
            assert config.family == PRESETS[name]["family"]

    def test_overrides(self):
        config = ModelRegistry.config_from({"preset": "csbert", "num_layers": 2})
        assert isinstance(config, CrossSegmentConfig)
        assert config.num_layers == 2 and config.model_dim == 128

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="dropout"):
            ModelRegistry.config_from({"family": "hierarchical", "dropout": 0.1})

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="preset"):
            ModelRegistry.config_from("gpt")

    def test_cross_segment_uses_wordpiece(self, small_cs_config, easy_documents):
        model = ModelRegistry.create(small_cs_config, easy_documents, seed=0)
        assert model.vocabulary.kind == "wordpiece"
        assert model.config.vocab_size == len(model.vocabulary)

    def test_forward_on_graph_matches_inference(self, small_hier_config):
        doc = make_document("d", ["a b c", "c d", "e f a"], [0, 1, 1])
        model = ModelRegistry.create(small_hier_config, [doc], seed=0)
        graph = Graph()
        traced = model.forward(graph.bind(model.params), model.encode(doc)).data
        np.testing.assert_allclose(traced, model.gap_probabilities(doc))
