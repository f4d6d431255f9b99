"""Token vocabularies for word-level and word-piece models."""

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List

from ..errors import CorpusError
from .tokenize import word_tokenize
from .types import SegDocument

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
KINDS = ("word", "wordpiece")


@dataclass
class Vocabulary:
    """
    Dense token -> id map with the four specials at ids 0-3.

    kind selects the encoder: "word" maps whole word tokens, "wordpiece"
    applies greedy longest-match word-piece splitting.
    """

    tokens: List[str]
    kind: str = "word"
    index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CorpusError(f"unknown vocabulary kind {self.kind!r}")
        if self.tokens[:len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise CorpusError("vocabulary must start with [PAD], [UNK], [CLS], [SEP]")
        self.index = {}
        for i, token in enumerate(self.tokens):
            if token in self.index:
                raise CorpusError(f"duplicate vocabulary token {token!r}")
            self.index[token] = i

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        return self.index.get(token, UNK)

    def encode_words(self, words: Iterable[str]) -> List[int]:
        """Map whole word tokens to ids (UNK for unseen words)."""
        if self.kind == "wordpiece":
            # Lazy import to avoid circular dependency
            from .wordpiece import encode_word
            ids: List[int] = []
            for word in words:
                ids.extend(encode_word(self, word))
            return ids
        return [self.id(w) for w in words]

    def encode(self, text: str) -> List[int]:
        """Tokenize raw text and map it to ids."""
        return self.encode_words(word_tokenize(text))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "tokens": list(self.tokens)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Vocabulary":
        try:
            return cls(tokens=list(data["tokens"]), kind=data["kind"])
        except KeyError as e:
            raise CorpusError(f"vocabulary record missing field {e}") from None


def build_word_vocabulary(documents: Iterable[SegDocument], min_count: int = 1) -> Vocabulary:
    """
    Word-level vocabulary over all sentences of the given documents.

    Tokens seen at least min_count times follow the specials, ordered by
    descending frequency and then lexicographically.

    Raises:
        CorpusError: If the documents contain no tokens
    """
    counts: Counter = Counter()
    for doc in documents:
        for sentence in doc.sentences:
            counts.update(sentence.word_tokens)
    if not counts:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    words = sorted((w for w, c in counts.items() if c >= min_count and w not in SPECIAL_TOKENS),
                   key=lambda w: (-counts[w], w))
    return Vocabulary(tokens=SPECIAL_TOKENS + words, kind="word")
