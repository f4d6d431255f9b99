"""
Synthetic conversational and structured corpora.

Each conversation is about one topic. Words are pseudo-words built from
syllables; every topic owns a disjoint word pool and a separate shared pool
supplies topic-neutral filler words. A conversation draws its topic words
from a random subset of the topic pool, so two neighbouring conversations on
the same topic still differ lexically.
"""

from dataclasses import dataclass, replace
from typing import List

import numpy as np

from ..errors import CorpusError
from .types import Conversation, Turn

STYLES = ("chat", "structured")

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"]
_VOWELS = ["a", "e", "i", "o", "u"]


@dataclass
class SynthConfig:
    """Generator parameters. Sentence lengths are in words, conversation lengths in sentences."""

    topics: int = 6
    conversations: int = 300
    sentence_mean: float = 8.0
    sentence_std: float = 3.0
    sentence_min: int = 3
    sentence_max: int = 16
    min_sentences: int = 4
    max_sentences: int = 10
    shared_fraction: float = 0.2
    topic_vocab: int = 60
    shared_vocab: int = 40
    conversation_vocab: int = 15
    style: str = "chat"
    seed: int = 0

    @classmethod
    def structured(cls, **overrides) -> "SynthConfig":
        """Long homogeneous sections with clean punctuation, one speaker."""
        base = cls(min_sentences=12, max_sentences=20, sentence_mean=12.0, sentence_std=2.0,
                   sentence_min=6, sentence_max=20, shared_fraction=0.1, style="structured")
        return replace(base, **overrides)

    def validate(self) -> None:
        if self.topics < 2:
            raise CorpusError(f"synth: need at least 2 topics, got {self.topics}")
        if self.conversations < self.topics:
            raise CorpusError(
                f"synth: conversations ({self.conversations}) must be >= topics ({self.topics})"
            )
        if not 0.0 <= self.shared_fraction < 1.0:
            raise CorpusError(f"synth: shared_fraction must lie in [0, 1), got {self.shared_fraction}")
        if not 1 <= self.sentence_min <= self.sentence_max:
            raise CorpusError(
                f"synth: sentence length bounds [{self.sentence_min}, {self.sentence_max}] invalid"
            )
        if not 1 <= self.min_sentences <= self.max_sentences:
            raise CorpusError(
                f"synth: conversation length bounds [{self.min_sentences}, {self.max_sentences}] "
                "invalid"
            )
        if self.sentence_std < 0:
            raise CorpusError(f"synth: sentence_std must be >= 0, got {self.sentence_std}")
        if self.topic_vocab < 1 or self.shared_vocab < 1 or self.conversation_vocab < 1:
            raise CorpusError("synth: word pools must be nonempty")
        if self.style not in STYLES:
            raise CorpusError(f"synth: unknown style {self.style!r} (expected chat or structured)")


def _pseudo_words(count: int, rng: np.random.Generator) -> List[str]:
    """Draw `count` distinct lowercase pseudo-words of 2-4 syllables."""
    words: List[str] = []
    seen = set()
    while len(words) < count:
        syllables = rng.integers(2, 5)
        word = "".join(
            _ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(syllables)
        )
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _render(words: List[str], style: str, rng: np.random.Generator) -> str:
    text = " ".join(words)
    if style == "structured":
        return text[0].upper() + text[1:] + "."
    # Chat text is often unpunctuated
    return text + "." if rng.random() < 0.5 else text


def synth_generate(config: SynthConfig) -> List[Conversation]:
    """
    Generate a deterministic synthetic corpus.

    Topics are assigned round-robin and then shuffled, so every topic gets
    floor(N/T) or ceil(N/T) conversations. Conversation ids encode the topic
    as "t<topic>-c<index>".

    Chat style alternates two speakers with one sentence per turn. Structured
    style puts all sentences of a conversation in one turn from a single
    speaker.

    Raises:
        CorpusError: For invalid parameters
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    vocabulary = _pseudo_words(config.shared_vocab + config.topics * config.topic_vocab, rng)
    shared = vocabulary[:config.shared_vocab]
    pools = [
        vocabulary[config.shared_vocab + t * config.topic_vocab:
                   config.shared_vocab + (t + 1) * config.topic_vocab]
        for t in range(config.topics)
    ]
    assignment = rng.permutation(np.arange(config.conversations) % config.topics)

    conversations = []
    for i, topic in enumerate(assignment):
        pool = pools[int(topic)]
        # Each conversation talks about a subset of its topic's words
        focus = rng.choice(len(pool), size=min(config.conversation_vocab, len(pool)), replace=False)
        n_sentences = int(rng.integers(config.min_sentences, config.max_sentences + 1))
        texts = []
        for _ in range(n_sentences):
            length = int(np.clip(np.rint(rng.normal(config.sentence_mean, config.sentence_std)),
                                 config.sentence_min, config.sentence_max))
            from_shared = rng.random(length) < config.shared_fraction
            shared_idx = rng.integers(len(shared), size=length)
            topic_idx = focus[rng.integers(len(focus), size=length)]
            words = [shared[s] if use else pool[t]
                     for use, s, t in zip(from_shared, shared_idx, topic_idx)]
            texts.append(_render(words, config.style, rng))
        if config.style == "structured":
            turns = [Turn(speaker="narrator", text=" ".join(texts))]
        else:
            turns = [Turn(speaker="AB"[j % 2], text=text) for j, text in enumerate(texts)]
        conversations.append(Conversation(id=f"t{int(topic)}-c{i:05d}", turns=turns))
    return conversations
