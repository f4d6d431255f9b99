"""Word-piece inventory construction (frequency merges) and greedy longest-match encoding."""

from collections import Counter
from typing import Dict, Iterable, List, Tuple, Union

from ..errors import CorpusError
from .tokenize import word_tokenize
from .types import Sentence
from .vocab import SPECIAL_TOKENS, UNK, Vocabulary

CONTINUATION = "##"
MAX_WORD_CHARS = 100


def _initial_split(word: str) -> List[str]:
    return [word[0]] + [CONTINUATION + ch for ch in word[1:]]


def _merge(symbols: List[str], pair: Tuple[str, str], merged: str) -> List[str]:
    out: List[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def train_wordpiece(sentences: Iterable[Union[Sentence, str]], vocab_size: int) -> Vocabulary:
    """
    Build a word-piece vocabulary by repeatedly merging the most frequent adjacent pair.

    The inventory starts with the specials, every observed character, and the
    "##"-prefixed continuation form of every observed character.
    Merges stop when vocab_size is reached or no pair occurs at least twice.
    Ties between equally frequent pairs go to the lexicographically smallest
    pair, so training is deterministic.

    Args:
        sentences: Sentence objects or raw strings
        vocab_size: Target inventory size

    Returns:
        A "wordpiece" Vocabulary

    Raises:
        CorpusError: Empty corpus, or vocab_size below characters + specials
    """
    word_counts: Counter = Counter()
    for sentence in sentences:
        tokens = sentence.word_tokens if isinstance(sentence, Sentence) else word_tokenize(sentence)
        word_counts.update(tokens)
    if not word_counts:
        raise CorpusError("cannot train a word-piece vocabulary on an empty corpus")

    chars = sorted({ch for word in word_counts for ch in word})
    if vocab_size < len(chars) + len(SPECIAL_TOKENS):
        raise CorpusError(
            f"vocab_size {vocab_size} is smaller than {len(chars)} characters + "
            f"{len(SPECIAL_TOKENS)} specials"
        )
    continuations = [CONTINUATION + ch for ch in chars]
    tokens = SPECIAL_TOKENS + chars + continuations
    known = set(tokens)
    splits: Dict[str, List[str]] = {word: _initial_split(word) for word in word_counts}

    while len(tokens) < vocab_size:
        pair_counts: Counter = Counter()
        for word, freq in word_counts.items():
            symbols = splits[word]
            for pair in zip(symbols, symbols[1:]):
                pair_counts[pair] += freq
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        if best_count < 2:
            break
        best = min(pair for pair, count in pair_counts.items() if count == best_count)
        merged = best[0] + best[1][len(CONTINUATION):]
        for word in word_counts:
            if len(splits[word]) > 1:
                splits[word] = _merge(splits[word], best, merged)
        if merged not in known:
            known.add(merged)
            tokens.append(merged)

    return Vocabulary(tokens=tokens, kind="wordpiece")


def encode_word(vocab: Vocabulary, word: str) -> List[int]:
    """Greedy longest-match-first split of one word; an unsplittable word maps to [UNK]."""
    if len(word) > MAX_WORD_CHARS:
        return [UNK]
    ids: List[int] = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION + piece
            if piece in vocab.index:
                found = vocab.index[piece]
                break
            end -= 1
        if found is None:
            return [UNK]
        ids.append(found)
        start = end
    return ids


def wordpiece_encode(vocab: Vocabulary, text: str) -> List[int]:
    """Word-tokenize text, then word-piece encode each word."""
    ids: List[int] = []
    for word in word_tokenize(text):
        ids.extend(encode_word(vocab, word))
    return ids
