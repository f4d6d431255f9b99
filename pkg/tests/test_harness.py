"""Tests for run/grid configuration parsing and the experiment drivers."""

import json
from dataclasses import asdict, replace

import numpy as np
import pandas as pd
import pytest

from topicseg import training
from topicseg.config import load_config, load_grid, settings
from topicseg.corpus import (
    SynthConfig,
    build_documents,
    corpus_stats,
    split_corpus,
    synth_generate,
    write_chat_corpus,
)
from topicseg.errors import ConfigError, CorpusError
from topicseg.harness import (
    GRID_COLUMNS,
    SWEEP_COLUMNS,
    TUNE_COLUMNS,
    default_loss_candidates,
    run_grid,
    sweep_segments,
    tune_loss,
)
from topicseg.losses import LossSpec
from topicseg.models import HierarchicalConfig
from topicseg.numerics import kernels as K
from topicseg.training import TrainConfig

from .conftest import ACCEPTANCE_HIER_CONFIG, ACCEPTANCE_LEARNING_RATE

TINY_MODEL = {"family": "hierarchical", "emb_dim": 8, "hidden_dim": 8, "doc_hidden_dim": 8}
TINY_CONFIG = HierarchicalConfig(emb_dim=8, hidden_dim=8, doc_hidden_dim=8)


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


@pytest.fixture
def chat_files(tmp_path):
    write_chat_corpus(synth_generate(SynthConfig(topics=3, conversations=30, seed=1)),
                      tmp_path / "a.jsonl")
    write_chat_corpus(synth_generate(SynthConfig(topics=3, conversations=30, seed=2)),
                      tmp_path / "b.jsonl")
    return tmp_path


@pytest.fixture
def grid_file(chat_files):
    return write_json(chat_files / "grid.json", {
        "corpora": {"a": "a.jsonl", "b": {"path": "b.jsonl", "format": "chat"}},
        "tasks": [{"id": "scratch", "test": "a"},
                  {"id": "transfer", "pretrain": "b", "finetune": "a", "test": "a"}],
        "models": {"tiny": TINY_MODEL},
        "losses": ["ce", {"kind": "focal", "alpha": 0.8, "gamma": 2.0}],
        "train": {"epochs": 1},
        "segments": 3,
        "seed": 5,
    })


class TestRunConfig:
    def test_minimal_config_defaults(self, chat_files):
        path = write_json(chat_files / "run.json", {"corpus": "a.jsonl"})
        config = load_config(path)
        assert config.corpus.path == (chat_files / "a.jsonl").resolve()
        assert config.segments == 5
        assert isinstance(config.model, HierarchicalConfig)
        assert config.loss == LossSpec.ce()

    def test_unknown_key(self, chat_files):
        path = write_json(chat_files / "run.json", {"corpus": "a.jsonl", "optimizer": "sgd"})
        with pytest.raises(ConfigError, match="optimizer"):
            load_config(path)

    def test_segments_range(self, chat_files):
        path = write_json(chat_files / "run.json", {"corpus": "a.jsonl", "segments": 11})
        with pytest.raises(ConfigError, match="segments"):
            load_config(path)

    def test_missing_corpus_path(self, chat_files):
        path = write_json(chat_files / "run.json", {"corpus": "missing.jsonl"})
        with pytest.raises(ConfigError, match="does not exist"):
            load_config(path)

    def test_loss_in_two_places(self, chat_files):
        path = write_json(chat_files / "run.json", {
            "corpus": "a.jsonl", "loss": "ce", "train": {"loss": "focal"}})
        with pytest.raises(ConfigError, match="train.loss"):
            load_config(path)

    def test_malformed_json(self, chat_files):
        path = chat_files / "run.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(ConfigError, match="malformed JSON"):
            load_config(path)

    def test_environment_defaults(self, monkeypatch):
        monkeypatch.setenv("TOPICSEG_SEED", "99")
        monkeypatch.setenv("TOPICSEG_WORKERS", "3")
        env = settings()
        assert env.seed == 99 and env.workers == 3

    def test_invalid_environment_value(self, monkeypatch):
        monkeypatch.setenv("TOPICSEG_THRESHOLD", "high")
        with pytest.raises(ConfigError, match="TOPICSEG_THRESHOLD"):
            settings()


class TestGridConfig:
    def test_cells_in_declared_order(self, grid_file):
        spec = load_grid(grid_file)
        cells = [(t.id, m, loss.kind) for t, m, loss in spec.cells()]
        assert cells == [("scratch", "tiny", "ce"), ("scratch", "tiny", "focal"),
                         ("transfer", "tiny", "ce"), ("transfer", "tiny", "focal")]

    def test_undefined_corpus(self, chat_files):
        path = write_json(chat_files / "g.json", {
            "corpora": {"a": "a.jsonl"}, "tasks": [{"id": "x", "test": "wiki"}]})
        with pytest.raises(ConfigError, match="undefined corpus"):
            load_grid(path)

    def test_duplicate_task_ids(self, chat_files):
        path = write_json(chat_files / "g.json", {
            "corpora": {"a": "a.jsonl"},
            "tasks": [{"id": "x", "test": "a"}, {"id": "x", "test": "a"}]})
        with pytest.raises(ConfigError, match="duplicate task id"):
            load_grid(path)

    def test_model_list_of_presets(self, chat_files):
        path = write_json(chat_files / "g.json", {
            "corpora": {"a": "a.jsonl"}, "tasks": [{"id": "x", "test": "a"}],
            "models": ["bilstm", "csbert"]})
        assert list(load_grid(path).models) == ["bilstm", "csbert"]


class TestGrid:
    def test_rows_and_columns(self, grid_file, tmp_path):
        frame = run_grid(load_grid(grid_file), tmp_path / "out" / "grid.csv")
        assert list(frame.columns) == GRID_COLUMNS
        assert len(frame) == 4
        assert frame["pretrain"].tolist() == ["-", "-", "b", "b"]
        assert frame["loss"].tolist()[:2] == ["ce", "focal(alpha=0.8,gamma=2)"]
        for value in frame["f1"]:
            assert 0.0 <= float(value) <= 1.0

    def test_reruns_are_byte_identical(self, grid_file, tmp_path):
        spec = load_grid(grid_file)
        first = run_grid(spec, tmp_path / "one.csv")
        run_grid(spec, tmp_path / "two.csv")
        assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()
        assert b"\r\n" not in (tmp_path / "one.csv").read_bytes()
        assert len(first) == 4

    def test_six_decimal_metrics(self, grid_file, tmp_path):
        run_grid(load_grid(grid_file), tmp_path / "grid.csv")
        frame = pd.read_csv(tmp_path / "grid.csv", dtype=str)
        assert all(len(v.split(".")[1]) == 6 for v in frame["precision"])

    def test_cell_alone_matches_full_grid(self, grid_file, tmp_path):
        spec = load_grid(grid_file)
        full = run_grid(spec, tmp_path / "full.csv")
        transfer = [task for task in spec.tasks if task.id == "transfer"]
        alone = run_grid(replace(spec, tasks=transfer, losses=spec.losses[1:]),
                         tmp_path / "alone.csv")
        assert len(alone) == 1
        expected = full[(full["task_id"] == "transfer") & (full["loss"] == alone["loss"][0])]
        assert alone.iloc[0].tolist() == expected.iloc[0].tolist()

    def test_worker_pool_matches_serial_run(self, grid_file, tmp_path):
        spec = load_grid(grid_file)
        run_grid(spec, tmp_path / "serial.csv")
        run_grid(replace(spec, workers=2), tmp_path / "pool.csv")
        assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "pool.csv").read_bytes()

    def test_non_finite_cell_marked_failed(self, grid_file, tmp_path, monkeypatch):
        real_batch_loss = training.batch_loss

        def diverging_focal(probs, labels, spec):
            loss = real_batch_loss(probs, labels, spec)
            return K.mul(loss, np.inf) if spec.kind == "focal" else loss

        monkeypatch.setattr(training, "batch_loss", diverging_focal)
        frame = run_grid(load_grid(grid_file), tmp_path / "grid.csv")
        assert len(frame) == 4
        focal = frame[frame["loss"].str.startswith("focal")]
        assert len(focal) == 2
        for column in ("precision", "recall", "f1"):
            assert (focal[column] == "failed").all()
        for value in frame[frame["loss"] == "ce"]["f1"]:
            assert 0.0 <= float(value) <= 1.0
        written = pd.read_csv(tmp_path / "grid.csv", dtype=str)
        assert written["f1"].tolist().count("failed") == 2

    def test_verbose_logging(self, grid_file, tmp_path):
        messages = []
        run_grid(load_grid(grid_file), tmp_path / "grid.csv", verbose=True,
                 log_callback=messages.append)
        assert any("grid cell" in m for m in messages)


class TestSweep:
    def test_one_row_per_k(self, tmp_path):
        conversations = synth_generate(SynthConfig(topics=3, conversations=40, seed=3))
        frame = sweep_segments(conversations, [2, 3], TINY_CONFIG, TrainConfig(epochs=1), seed=0,
                               output=tmp_path / "sweep.csv")
        assert list(frame.columns) == SWEEP_COLUMNS
        assert frame["segments"].tolist() == [2, 3]
        assert (tmp_path / "sweep.csv").exists()

    def test_validates_every_k_before_training(self):
        conversations = synth_generate(SynthConfig(topics=3, conversations=12, seed=3))
        messages = []
        with pytest.raises(CorpusError, match="segments=10"):
            sweep_segments(conversations, [2, 10], HierarchicalConfig(), TrainConfig(epochs=1),
                           seed=0, log_callback=messages.append)
        assert messages == []

    def test_k_out_of_range(self):
        with pytest.raises(ConfigError, match="segments"):
            sweep_segments([], [1], HierarchicalConfig(), TrainConfig(), seed=0)


class TestTuneLoss:
    def test_rows_and_best(self, tmp_path):
        conversations = synth_generate(SynthConfig(topics=3, conversations=30, seed=4))
        splits = split_corpus(build_documents(conversations, 3, seed=0), (0.6, 0.2, 0.2))
        candidates = [LossSpec.weighted_ce(0.3, 0.7), LossSpec.focal(0.5, 1.0)]
        frame, best = tune_loss(splits.train, splits.dev,
                                TINY_CONFIG,
                                candidates, TrainConfig(epochs=1), output=tmp_path / "tune.csv")
        assert list(frame.columns) == TUNE_COLUMNS
        assert frame["loss"].tolist() == ["weighted_ce", "focal"]
        assert frame["alpha"].tolist()[0] == ""
        assert best in candidates

    def test_default_candidates(self):
        candidates = default_loss_candidates()
        assert len(candidates) == 5 + 12
        assert all(c.w0 + c.w1 == pytest.approx(1.0) for c in candidates if c.kind == "weighted_ce")

    def test_no_candidates(self):
        with pytest.raises(ConfigError):
            tune_loss([], [], HierarchicalConfig(), [], TrainConfig())


@pytest.mark.slow
class TestExperiments:
    def test_full_segment_sweep(self, tmp_path):
        conversations = synth_generate(SynthConfig(topics=6, conversations=300, seed=0))
        frame = sweep_segments(conversations, range(2, 11),
                               HierarchicalConfig(emb_dim=16, hidden_dim=16, doc_hidden_dim=16),
                               TrainConfig(epochs=3, learning_rate=3e-3), seed=0,
                               output=tmp_path / "sweep.csv")
        assert frame["segments"].tolist() == list(range(2, 11))

    def test_focal_is_competitive_with_ce_on_rare_boundaries(self, acceptance_train_config):
        # Long conversations push the boundary rate below 0.05
        conversations = synth_generate(SynthConfig(topics=6, conversations=300, min_sentences=20,
                                                   max_sentences=30, seed=0))
        documents = build_documents(conversations, 5, seed=0)
        assert corpus_stats(documents).boundary_rate <= 0.05
        splits = split_corpus(documents, (0.6, 0.2, 0.2))
        frame, _ = tune_loss(splits.train, splits.test,
                             ACCEPTANCE_HIER_CONFIG, [LossSpec.ce(), LossSpec.focal(0.8, 2.0)],
                             acceptance_train_config)
        ce_f1, focal_f1 = (float(v) for v in frame["f1"])
        assert focal_f1 >= ce_f1 - 0.01

    def test_pretraining_on_structured_text_does_not_beat_scratch(self, tmp_path):
        write_chat_corpus(synth_generate(SynthConfig.structured(topics=6, conversations=200,
                                                                seed=1)),
                          tmp_path / "structured.jsonl")
        write_chat_corpus(synth_generate(SynthConfig(topics=6, conversations=300, seed=2)),
                          tmp_path / "chat.jsonl")
        model = {"family": "hierarchical", **asdict(ACCEPTANCE_HIER_CONFIG)}
        grid = write_json(tmp_path / "grid.json", {
            "corpora": {"structured": "structured.jsonl", "chat": "chat.jsonl"},
            "tasks": [{"id": "scratch", "test": "chat"},
                      {"id": "transfer", "pretrain": "structured", "finetune": "chat",
                       "test": "chat"}],
            "models": {"bilstm": model},
            "losses": ["ce"],
            "train": {"epochs": 10, "learning_rate": ACCEPTANCE_LEARNING_RATE},
            "segments": 5,
            "seed": 0,
        })
        run_grid(load_grid(grid), tmp_path / "grid.csv")
        frame = pd.read_csv(tmp_path / "grid.csv", dtype=str).set_index("task_id")
        assert frame.loc["scratch", "pretrain"] == "-"
        assert frame.loc["transfer", "pretrain"] == "structured"
        assert frame.loc["transfer", "finetune"] == "chat"
        scratch_f1 = float(frame.loc["scratch", "f1"])
        transfer_f1 = float(frame.loc["transfer", "f1"])
        assert scratch_f1 >= transfer_f1 - 0.03
