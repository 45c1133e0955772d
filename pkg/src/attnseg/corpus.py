"""Parallel corpus data model and I/O.

The unwritten-language (UL) side is a sequence of symbols (true phones
or discovered pseudo-phones), the well-resourced-language (WRL) side a
sequence of words. Word segmentations are stored as sets of internal
boundary positions: a boundary at position b means a word break after
the first b symbols. Utterance edges are never stored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

PAD, BOS, EOS, UNK = "<PAD>", "<BOS>", "<EOS>", "<UNK>"
RESERVED = (PAD, BOS, EOS, UNK)


class CorpusError(ValueError):
    """Raised on malformed corpus input."""


@dataclass(frozen=True)
class Segmentation:
    """Internal word boundaries over a symbol sequence of given length."""

    length: int
    boundaries: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "boundaries", frozenset(self.boundaries))
        for b in self.boundaries:
            if not 0 < b < self.length:
                raise CorpusError(
                    "boundary %d outside open interval (0, %d)" % (b, self.length)
                )

    @property
    def num_words(self) -> int:
        return len(self.boundaries) + 1

    def word_spans(self) -> list[tuple[int, int]]:
        """(start, end) symbol spans of each word, end-exclusive."""
        cuts = [0] + sorted(self.boundaries) + [self.length]
        return list(zip(cuts[:-1], cuts[1:]))

    def words(self, symbols: Sequence[str]) -> list[tuple[str, ...]]:
        if len(symbols) != self.length:
            raise CorpusError(
                "symbol count %d does not match segmentation length %d"
                % (len(symbols), self.length)
            )
        return [tuple(symbols[a:b]) for a, b in self.word_spans()]

    @staticmethod
    def from_words(words: Sequence[Sequence[str]]) -> "Segmentation":
        """Inverse of .words(): boundary after each non-final word."""
        lengths = [len(w) for w in words]
        if any(n == 0 for n in lengths):
            raise CorpusError("empty word in segmentation")
        cuts, total = [], 0
        for n in lengths[:-1]:
            total += n
            cuts.append(total)
        return Segmentation(sum(lengths), frozenset(cuts))


@dataclass(frozen=True)
class ParallelUtterance:
    id: str
    ul_symbols: tuple[str, ...]
    wrl_words: tuple[str, ...]
    gold_boundaries: Optional[Segmentation] = None
    ul_times: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self):
        if not self.ul_symbols:
            raise CorpusError("utterance %s: empty UL side" % self.id)
        if not self.wrl_words:
            raise CorpusError("utterance %s: empty WRL side" % self.id)
        if self.ul_times is not None:
            if len(self.ul_times) != len(self.ul_symbols):
                raise CorpusError(
                    "utterance %s: %d time intervals for %d symbols"
                    % (self.id, len(self.ul_times), len(self.ul_symbols))
                )
            prev_end = None
            for s, e in self.ul_times:
                if e < s or (prev_end is not None and s < prev_end):
                    raise CorpusError(
                        "utterance %s: time intervals overlap or are unordered" % self.id
                    )
                prev_end = e
        if (
            self.gold_boundaries is not None
            and self.gold_boundaries.length != len(self.ul_symbols)
        ):
            raise CorpusError(
                "utterance %s: gold segmentation length mismatch" % self.id
            )


class Vocabulary:
    """Bidirectional token <-> id mapping with reserved PAD/BOS/EOS/UNK ids."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._token_to_id: dict[str, int] = {t: i for i, t in enumerate(RESERVED)}
        self._id_to_token: list[str] = list(RESERVED)
        for t in tokens:
            self.add(t)

    pad_id, bos_id, eos_id, unk_id = 0, 1, 2, 3

    def add(self, token: str) -> int:
        if token in RESERVED:
            raise CorpusError("reserved token %r cannot be added" % token)
        if token not in self._token_to_id:
            self._token_to_id[token] = len(self._id_to_token)
            self._id_to_token.append(token)
        return self._token_to_id[token]

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id(self, token: str, allow_unk: bool = False) -> int:
        try:
            return self._token_to_id[token]
        except KeyError:
            if allow_unk:
                return self.unk_id
            raise CorpusError("token %r not in vocabulary" % token) from None

    def token(self, idx: int) -> str:
        return self._id_to_token[idx]

    def tokens(self) -> list[str]:
        """Non-reserved tokens in id order."""
        return self._id_to_token[len(RESERVED):]


@dataclass(frozen=True)
class ParallelCorpus:
    utterances: tuple[ParallelUtterance, ...]
    ul_vocab: Vocabulary = field(compare=False, default_factory=Vocabulary)
    wrl_vocab: Vocabulary = field(compare=False, default_factory=Vocabulary)

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def by_id(self, utt_id: str) -> ParallelUtterance:
        for u in self.utterances:
            if u.id == utt_id:
                return u
        raise CorpusError("no utterance with id %r" % utt_id)


def build_vocabularies(utterances: Sequence[ParallelUtterance]) -> tuple[Vocabulary, Vocabulary]:
    ul, wrl = Vocabulary(), Vocabulary()
    for u in utterances:
        for s in u.ul_symbols:
            ul.add(s)
        for w in u.wrl_words:
            wrl.add(w)
    return ul, wrl


def load_parallel_corpus(ul_path: str, wrl_path: str) -> ParallelCorpus:
    """Load aligned UL/WRL text files, one whitespace-tokenized utterance per line."""
    with open(ul_path, encoding="utf-8") as f:
        ul_lines = f.read().splitlines()
    with open(wrl_path, encoding="utf-8") as f:
        wrl_lines = f.read().splitlines()
    # ignore a trailing fully-empty line produced by a final newline
    while ul_lines and not ul_lines[-1].strip():
        ul_lines.pop()
    while wrl_lines and not wrl_lines[-1].strip():
        wrl_lines.pop()
    if len(ul_lines) != len(wrl_lines):
        raise CorpusError(
            "line count mismatch: %s has %d lines, %s has %d"
            % (ul_path, len(ul_lines), wrl_path, len(wrl_lines))
        )
    utterances = []
    for i, (ul, wrl) in enumerate(zip(ul_lines, wrl_lines), start=1):
        syms, words = tuple(ul.split()), tuple(wrl.split())
        if not syms:
            raise CorpusError("%s: empty line %d" % (ul_path, i))
        if not words:
            raise CorpusError("%s: empty line %d" % (wrl_path, i))
        utterances.append(ParallelUtterance(id="utt%05d" % i, ul_symbols=syms, wrl_words=words))
    ul_vocab, wrl_vocab = build_vocabularies(utterances)
    return ParallelCorpus(tuple(utterances), ul_vocab, wrl_vocab)


def write_corpus(corpus: ParallelCorpus, ul_path: str, wrl_path: str) -> None:
    with open(ul_path, "w", encoding="utf-8") as f:
        for u in corpus:
            f.write(" ".join(u.ul_symbols) + "\n")
    with open(wrl_path, "w", encoding="utf-8") as f:
        for u in corpus:
            f.write(" ".join(u.wrl_words) + "\n")


def parse_segmented_line(line: str, delimiter: Optional[str]) -> list[tuple[str, ...]]:
    """Split a segmented utterance line into words of symbol tuples.

    delimiter=None treats every character of a word as one symbol
    (single-character symbol inventories); otherwise symbols within a
    word are joined by the delimiter (multi-character AUD labels).
    """
    words = []
    for w in line.split():
        syms = tuple(w.split(delimiter)) if delimiter else tuple(w)
        words.append(syms)
    return words


def load_gold_segmentation(
    corpus: ParallelCorpus, gold_path: str, delimiter: Optional[str] = None
) -> ParallelCorpus:
    """Attach gold boundaries from a segmented text file; symbol identity enforced."""
    with open(gold_path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) != len(corpus):
        raise CorpusError(
            "gold file %s has %d lines, corpus has %d utterances"
            % (gold_path, len(lines), len(corpus))
        )
    out = []
    for i, (u, line) in enumerate(zip(corpus, lines), start=1):
        words = parse_segmented_line(line, delimiter)
        flat = tuple(s for w in words for s in w)
        if flat != u.ul_symbols:
            raise CorpusError(
                "%s line %d: gold symbols %r do not match corpus symbols %r"
                % (gold_path, i, flat, u.ul_symbols)
            )
        out.append(replace(u, gold_boundaries=Segmentation.from_words(words)))
    return ParallelCorpus(tuple(out), corpus.ul_vocab, corpus.wrl_vocab)


def write_segmentations(
    corpus: ParallelCorpus,
    segs: dict[str, Segmentation],
    out_path: str,
    delimiter: Optional[str] = None,
) -> None:
    """Write one segmented line per utterance, same format as gold input."""
    joiner = delimiter or ""
    with open(out_path, "w", encoding="utf-8") as f:
        for u in corpus:
            seg = segs[u.id]
            words = seg.words(u.ul_symbols)
            f.write(" ".join(joiner.join(w) for w in words) + "\n")


def split_train_dev(
    corpus: ParallelCorpus, dev_fraction: float, seed: int
) -> tuple[ParallelCorpus, ParallelCorpus]:
    """Deterministic disjoint train/dev split; dev size = round(dev_fraction * N)."""
    if not 0.0 < dev_fraction < 1.0:
        raise CorpusError("dev_fraction must be in (0, 1), got %r" % dev_fraction)
    n = len(corpus)
    n_dev = int(round(dev_fraction * n))
    idx = list(range(n))
    random.Random(seed).shuffle(idx)
    dev_idx = set(idx[:n_dev])
    train = tuple(u for i, u in enumerate(corpus) if i not in dev_idx)
    dev = tuple(u for i, u in enumerate(corpus) if i in dev_idx)
    return (
        ParallelCorpus(train, corpus.ul_vocab, corpus.wrl_vocab),
        ParallelCorpus(dev, corpus.ul_vocab, corpus.wrl_vocab),
    )


def corpus_stats(corpus: ParallelCorpus, segmentation_source: str = "gold") -> dict:
    """Symbols/tokens per sentence and token/type counts under a segmentation.

    segmentation_source "gold" reads gold_boundaries; a dict of
    hypothesis segmentations may be passed instead.
    """
    if isinstance(segmentation_source, dict):
        segs = segmentation_source
    elif segmentation_source == "gold":
        segs = {}
        for u in corpus:
            if u.gold_boundaries is None:
                raise CorpusError("utterance %s has no gold segmentation" % u.id)
            segs[u.id] = u.gold_boundaries
    else:
        raise CorpusError("unknown segmentation source %r" % segmentation_source)
    sym_counts, tok_counts = [], []
    n_tokens = 0
    types: set[tuple[str, ...]] = set()
    for u in corpus:
        seg = segs[u.id]
        sym_counts.append(len(u.ul_symbols))
        tok_counts.append(seg.num_words)
        n_tokens += seg.num_words
        types.update(seg.words(u.ul_symbols))
    return {
        "sentences": len(corpus),
        "symbols_per_sentence_avg": sum(sym_counts) / len(sym_counts),
        "symbols_per_sentence_max": max(sym_counts),
        "symbols_per_sentence_min": min(sym_counts),
        "tokens_per_sentence_avg": sum(tok_counts) / len(tok_counts),
        "tokens_per_sentence_max": max(tok_counts),
        "tokens_per_sentence_min": min(tok_counts),
        "tokens": n_tokens,
        "types": len(types),
    }


def load_timed_units(path: str) -> dict[str, list[tuple[str, float, float]]]:
    """Read time-marked unit output: one `id start end label` line per interval."""
    out: dict[str, list[tuple[str, float, float]]] = {}
    with open(path, encoding="utf-8") as f:
        for ln, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise CorpusError("%s line %d: expected 4 fields, got %d" % (path, ln, len(parts)))
            utt, start, end, label = parts
            out.setdefault(utt, []).append((label, float(start), float(end)))
    return out


def corpus_from_timed_units(
    units: dict[str, list[tuple[str, float, float]]], wrl_path: str
) -> ParallelCorpus:
    """Build a parallel corpus from time-marked units plus a WRL text file."""
    with open(wrl_path, encoding="utf-8") as f:
        wrl_lines = [l for l in f.read().splitlines() if l.strip()]
    ids = sorted(units)
    if len(wrl_lines) != len(ids):
        raise CorpusError(
            "WRL file has %d lines, timed units cover %d utterances"
            % (len(wrl_lines), len(ids))
        )
    utterances = []
    for utt_id, wrl in zip(ids, wrl_lines):
        intervals = units[utt_id]
        utterances.append(
            ParallelUtterance(
                id=utt_id,
                ul_symbols=tuple(lab for lab, _, _ in intervals),
                wrl_words=tuple(wrl.split()),
                ul_times=tuple((s, e) for _, s, e in intervals),
            )
        )
    ul_vocab, wrl_vocab = build_vocabularies(utterances)
    return ParallelCorpus(tuple(utterances), ul_vocab, wrl_vocab)
