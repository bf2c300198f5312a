"""Word-piece BPE with a word-boundary marker.

Training is classic frequency-greedy pair merging over whitespace words.
Each word starts as ``▁`` followed by its characters; the most frequent
adjacent pair is merged until the vocabulary reaches the requested size or
no pair occurs at least twice. Equal counts are broken by the smaller
``(left, right)`` pair in code-point order, so training is deterministic.

Id 0 is the CTC blank and id 1 the unknown token.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

BLANK = "<blank>"
UNK = "<unk>"
BLANK_ID = 0
UNK_ID = 1
SPECIALS = (BLANK, UNK)
MARKER = "▁"

_HEADER = "bpe v1"
_MERGES = "#merges"


class BpeError(ValueError):
    pass


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    pieces: tuple[str, ...]

    def __len__(self):
        return len(self.ids)


@dataclass(frozen=True)
class BpeModel:
    vocab: tuple[str, ...]
    merges: tuple[tuple[str, str], ...]
    target_size: int
    word_boundary_marker: str = MARKER

    def __post_init__(self):
        if self.vocab[: len(SPECIALS)] != SPECIALS:
            raise BpeError(f"vocabulary must start with {SPECIALS}")
        if len(set(self.vocab)) != len(self.vocab):
            raise BpeError("vocabulary contains duplicate symbols")
        if len(self.vocab) > self.target_size:
            raise BpeError(f"vocabulary size {len(self.vocab)} exceeds target {self.target_size}")
        index = {s: i for i, s in enumerate(self.vocab)}
        for left, right in self.merges:
            if left + right not in index:
                raise BpeError(f"merge output {left + right!r} missing from vocabulary")
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_ranks", {m: r for r, m in enumerate(self.merges)})

    def __len__(self):
        return len(self.vocab)

    def id_of(self, piece: str) -> int:
        return self._index.get(piece, UNK_ID)

    def encode(self, text: str) -> TokenSequence:
        return encode(self, text)

    def decode(self, tokens) -> str:
        return decode(self, tokens)

    def dumps(self) -> str:
        lines = [f"{_HEADER} {self.target_size}", *self.vocab, _MERGES]
        lines += [f"{a}\t{b}" for a, b in self.merges]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_bytes(self.dumps().encode("utf-8"))

    @classmethod
    def loads(cls, data: str) -> "BpeModel":
        lines = data.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        head = lines[0].split(" ") if lines else []
        if len(head) != 3 or " ".join(head[:2]) != _HEADER or not head[2].isdigit():
            raise BpeError(f"line 1: expected '{_HEADER} <target_size>'")
        try:
            sep = lines.index(_MERGES, 1)
        except ValueError:
            raise BpeError(f"missing '{_MERGES}' section") from None
        merges = []
        for lineno, line in enumerate(lines[sep + 1 :], start=sep + 2):
            parts = line.split("\t")
            if len(parts) != 2 or not all(parts):
                raise BpeError(f"line {lineno}: expected 'left<TAB>right'")
            merges.append((parts[0], parts[1]))
        return cls(tuple(lines[1:sep]), tuple(merges), int(head[2]))

    @classmethod
    def load(cls, path) -> "BpeModel":
        return cls.loads(Path(path).read_bytes().decode("utf-8"))


def _word_symbols(word: str) -> tuple[str, ...]:
    return (MARKER, *word)


def minimum_size(corpus: Iterable[str]) -> int:
    alphabet = {MARKER}
    for line in corpus:
        for word in line.split():
            alphabet.update(word)
    return len(alphabet) + len(SPECIALS)


def train_bpe(corpus: Sequence[str], target_size: int) -> BpeModel:
    corpus = list(corpus)
    if not corpus:
        raise BpeError("training corpus is empty")

    word_freq = collections.Counter(w for line in corpus for w in line.split())
    words = [list(_word_symbols(w)) for w in word_freq]
    freqs = [word_freq[w] for w in word_freq]

    alphabet = sorted({s for w in words for s in w} | {MARKER})
    min_size = len(alphabet) + len(SPECIALS)
    if target_size < min_size:
        raise BpeError(
            f"target size {target_size} is below the minimum {min_size} "
            f"({len(alphabet)} base symbols + {len(SPECIALS)} specials)"
        )

    vocab = list(SPECIALS) + alphabet
    known = set(vocab)
    merges = []

    pair_counts = collections.Counter()
    where = collections.defaultdict(set)  # pair -> indices of words containing it
    for i, (w, f) in enumerate(zip(words, freqs)):
        for pair in zip(w, w[1:]):
            pair_counts[pair] += f
            where[pair].add(i)

    while len(vocab) < target_size:
        best, best_count = None, 1
        for pair, c in pair_counts.items():
            if c > best_count or (c == best_count and c > 1 and pair < best):
                best, best_count = pair, c
        if best is None:
            break
        merges.append(best)
        new = best[0] + best[1]
        if new not in known:
            known.add(new)
            vocab.append(new)

        for i in sorted(where.pop(best, ())):
            w, f = words[i], freqs[i]
            for pair in zip(w, w[1:]):
                pair_counts[pair] -= f
                if pair_counts[pair] <= 0:
                    del pair_counts[pair]
            merged = _merge_word(w, best, new)
            words[i] = merged
            for pair in zip(merged, merged[1:]):
                pair_counts[pair] += f
                where[pair].add(i)

    return BpeModel(tuple(vocab), tuple(merges), target_size)


def _merge_word(symbols: list[str], pair: tuple[str, str], new: str) -> list[str]:
    out = []
    i, n = 0, len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(new)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def _segment(model: BpeModel, word: str) -> list[str]:
    ranks = model._ranks
    symbols = list(_word_symbols(word))
    while len(symbols) > 1:
        ranked = [
            (ranks[p], i) for i, p in enumerate(zip(symbols, symbols[1:])) if p in ranks
        ]
        if not ranked:
            break
        rank, _ = min(ranked)
        pair = model.merges[rank]
        symbols = _merge_word(symbols, pair, pair[0] + pair[1])
    return symbols


def encode(model: BpeModel, text: str) -> TokenSequence:
    ids, pieces = [], []
    for word in text.split():
        for sym in _segment(model, word):
            i = model.id_of(sym)
            ids.append(i)
            pieces.append(model.vocab[i])
    return TokenSequence(tuple(ids), tuple(pieces))


def decode(model: BpeModel, tokens: TokenSequence | Sequence[int]) -> str:
    ids = tokens.ids if isinstance(tokens, TokenSequence) else tokens
    out = []
    for i in ids:
        if isinstance(i, bool) or not 0 <= i < len(model.vocab):
            raise BpeError(f"token id {i} out of range [0, {len(model.vocab)})")
        if i != BLANK_ID:
            out.append(model.vocab[i])
    return "".join(out).replace(model.word_boundary_marker, " ").strip()
