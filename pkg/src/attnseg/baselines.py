"""Reference segmenters: proportional projection and Bayesian dpseg.

The proportional baseline projects WRL word breaks onto the UL symbol
sequence through a diagonal position mapping over the space-joined WRL
character string. The dpseg baseline is a monolingual nonparametric
segmenter: words are generated by a Dirichlet-process lexicon model
(hierarchical for the bigram variant) with a geometric symbol-spelling
base distribution, and boundaries are resampled by Gibbs sweeps with
simulated annealing.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass

from .corpus import ParallelCorpus, ParallelUtterance, Segmentation


class BaselineError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Proportional baseline

def proportional_segment(utt: ParallelUtterance) -> Segmentation:
    """Project WRL word breaks onto UL positions via a diagonal mapping.

    UL position j maps to character floor(j * L / m) of the space-joined
    WRL string (length L, m UL symbols); a boundary opens after j when
    positions j and j+1 fall in different WRL words. Spaces attach to
    the following word.
    """
    chars = " ".join(utt.wrl_words)
    L = len(chars)
    m = len(utt.ul_symbols)
    word_of_char = []
    w = 0
    for ch in chars:
        if ch == " ":
            w += 1
        word_of_char.append(w)
    word_of = [word_of_char[(j * L) // m] for j in range(m)]
    bounds = {j + 1 for j in range(m - 1) if word_of[j] != word_of[j + 1]}
    return Segmentation(m, frozenset(bounds))


def proportional_segment_corpus(corpus: ParallelCorpus) -> dict[str, Segmentation]:
    return {u.id: proportional_segment(u) for u in corpus}


# ---------------------------------------------------------------------------
# dpseg

UTT_EDGE = ("<utt>",)  # context marker for utterance-initial/final positions


@dataclass
class DpsegConfig:
    order: str = "bigram"  # "unigram" | "bigram"
    alpha0: float = 100.0  # lexicon-level DP concentration (unigram: 20 is typical)
    alpha1: float = 3000.0  # bigram-level concentration (bigram order only)
    p_boundary: float = 0.5  # geometric word-length stop probability of the base
    iterations: int = 1000
    anneal_start_temp: float = 10.0
    anneal_frac: float = 0.9  # fraction of sweeps over which temp decays to 1
    sample_average: int = 0  # >0: majority vote over the last k samples
    seed: int = 0

    def __post_init__(self):
        if self.order not in ("unigram", "bigram"):
            raise BaselineError("order must be unigram or bigram")
        if self.alpha0 <= 0 or self.alpha1 <= 0:
            raise BaselineError("DP concentrations must be positive")
        if not 0.0 < self.p_boundary < 1.0:
            raise BaselineError("p_boundary must be in (0, 1)")
        if self.iterations < 1:
            raise BaselineError("iterations must be >= 1")


class _LexiconState:
    """Token counts for the DP lexicon; bigram context counts when needed."""

    def __init__(self, config: DpsegConfig, num_symbols: int):
        self.cfg = config
        self.num_symbols = max(num_symbols, 1)
        self.unigram: Counter = Counter()
        self.total = 0
        self.bigram: Counter = Counter()  # (prev_word, word) -> count
        self.context: Counter = Counter()  # prev_word -> count

    def base_prob(self, word: tuple[str, ...]) -> float:
        p = self.cfg.p_boundary
        k = len(word)
        return ((1.0 - p) ** (k - 1)) * p * (1.0 / self.num_symbols) ** k

    def p_unigram(self, word, extra_n: int = 0, extra_total: int = 0) -> float:
        a0 = self.cfg.alpha0
        return (self.unigram[word] + extra_n + a0 * self.base_prob(word)) / (
            self.total + extra_total + a0
        )

    def p_bigram(self, prev, word, extra=None) -> float:
        """P(word | prev) under the hierarchical process.

        `extra` optionally holds hypothesis-local count increments:
        (bigram Counter, context Counter, unigram Counter, total int).
        """
        a1 = self.cfg.alpha1
        eb = ec = eu = None
        et = 0
        if extra is not None:
            eb, ec, eu, et = extra
        nb = self.bigram[(prev, word)] + (eb[(prev, word)] if eb else 0)
        nc = self.context[prev] + (ec[prev] if ec else 0)
        p1 = self.p_unigram(word, extra_n=(eu[word] if eu else 0), extra_total=et)
        return (nb + a1 * p1) / (nc + a1)

    # -- mutation ----------------------------------------------------------

    def add_word(self, word):
        self.unigram[word] += 1
        self.total += 1

    def remove_word(self, word):
        self.unigram[word] -= 1
        self.total -= 1
        if self.unigram[word] == 0:
            del self.unigram[word]

    def add_bigram(self, prev, word):
        self.bigram[(prev, word)] += 1
        self.context[prev] += 1

    def remove_bigram(self, prev, word):
        self.bigram[(prev, word)] -= 1
        self.context[prev] -= 1
        if self.bigram[(prev, word)] == 0:
            del self.bigram[(prev, word)]
        if self.context[prev] == 0:
            del self.context[prev]


def _words_of(symbols, flags):
    """Word tuples of an utterance given boundary flags (flags[j] = break after j+1 symbols)."""
    words, start = [], 0
    for j, flag in enumerate(flags, start=1):
        if flag:
            words.append(tuple(symbols[start:j]))
            start = j
    words.append(tuple(symbols[start:]))
    return words


class DpsegSampler:
    """Boundary-wise Gibbs sampler over all internal boundary variables."""

    def __init__(self, sequences: list[tuple[str, ...]], config: DpsegConfig):
        if not sequences:
            raise BaselineError("empty corpus")
        self.cfg = config
        self.sequences = sequences
        symbols = {s for seq in sequences for s in seq}
        self.state = _LexiconState(config, len(symbols))
        self.rng = random.Random(config.seed)
        # random initial segmentation
        self.flags = [
            [self.rng.random() < 0.5 for _ in range(len(seq) - 1)] for seq in sequences
        ]
        self._rebuild_counts()

    def _rebuild_counts(self):
        st = _LexiconState(self.cfg, self.state.num_symbols)
        for seq, flags in zip(self.sequences, self.flags):
            words = _words_of(seq, flags)
            prev = UTT_EDGE
            for w in words:
                st.add_word(w)
                if self.cfg.order == "bigram":
                    st.add_bigram(prev, w)
                prev = w
            if self.cfg.order == "bigram":
                st.add_bigram(prev, UTT_EDGE)
        self.state = st

    def counts_consistent(self) -> bool:
        """Bookkeeping check: incremental counts equal a from-scratch recount."""
        cur_u, cur_t = Counter(self.state.unigram), self.state.total
        cur_b, cur_c = Counter(self.state.bigram), Counter(self.state.context)
        self._rebuild_counts()
        return (
            cur_u == self.state.unigram
            and cur_t == self.state.total
            and cur_b == self.state.bigram
            and cur_c == self.state.context
        )

    # -- single-site resampling -------------------------------------------

    def _resample_site(self, ui: int, pos: int, temperature: float):
        st = self.state
        seq = self.sequences[ui]
        flags = self.flags[ui]
        has_boundary = flags[pos - 1]
        w1, w2 = self._split_halves(ui, pos)
        merged = w1 + w2
        left = self._word_start(ui, pos)
        right = pos + len(w2)
        # context word before w1
        if left == 0:
            l_ctx = UTT_EDGE
        else:
            ls = left - 1
            while ls > 0 and not flags[ls - 1]:
                ls -= 1
            l_ctx = tuple(seq[ls:left])
        # context word after w2
        if right == len(seq):
            r_ctx = UTT_EDGE
        else:
            re = right + 1
            while re < len(seq) and not flags[re - 1]:
                re += 1
            r_ctx = tuple(seq[right:re])
        words_now = [w1, w2] if has_boundary else [merged]
        # remove current configuration from counts
        if self.cfg.order == "bigram":
            chain = [l_ctx] + words_now + [r_ctx]
            for a, b in zip(chain[:-1], chain[1:]):
                st.remove_bigram(a, b)
        for w in words_now:
            st.remove_word(w)

        p_merge = self._hyp_prob([merged], l_ctx, r_ctx)
        p_split = self._hyp_prob([w1, w2], l_ctx, r_ctx)
        if temperature != 1.0:
            inv = 1.0 / temperature
            p_merge, p_split = p_merge ** inv, p_split ** inv
        z = p_merge + p_split
        boundary = self.rng.random() < (p_split / z if z > 0 else 0.5)

        new_words = [w1, w2] if boundary else [merged]
        for w in new_words:
            st.add_word(w)
        if self.cfg.order == "bigram":
            chain = [l_ctx] + new_words + [r_ctx]
            for a, b in zip(chain[:-1], chain[1:]):
                st.add_bigram(a, b)
        self.flags[ui][pos - 1] = boundary

    def _word_start(self, ui: int, pos: int) -> int:
        flags = self.flags[ui]
        left = pos - 1
        while left > 0 and not flags[left - 1]:
            left -= 1
        return left

    def _split_halves(self, ui: int, pos: int):
        seq = self.sequences[ui]
        flags = self.flags[ui]
        left = self._word_start(ui, pos)
        right = pos + 1
        while right < len(seq) and not flags[right - 1]:
            right += 1
        return tuple(seq[left:pos]), tuple(seq[pos:right])

    def _hyp_prob(self, words, l_ctx, r_ctx) -> float:
        """Probability of a word chain with counts excluded; sequential updates."""
        st = self.state
        if self.cfg.order == "unigram":
            p = 1.0
            eu: Counter = Counter()
            for i, w in enumerate(words):
                p *= st.p_unigram(w, extra_n=eu[w], extra_total=i)
                eu[w] += 1
            return p
        eb: Counter = Counter()
        ec: Counter = Counter()
        eu = Counter()
        et = 0
        p = 1.0
        chain = [l_ctx] + list(words) + [r_ctx]
        for i in range(len(chain) - 1):
            a, b = chain[i], chain[i + 1]
            p *= st.p_bigram(a, b, extra=(eb, ec, eu, et))
            eb[(a, b)] += 1
            ec[a] += 1
            if b is not UTT_EDGE and i + 1 < len(chain) - 1:
                eu[b] += 1
                et += 1
        return p

    # -- driver ------------------------------------------------------------

    def _temperature(self, sweep: int) -> float:
        n = max(1, int(self.cfg.iterations * self.cfg.anneal_frac))
        if sweep >= n:
            return 1.0
        t0 = self.cfg.anneal_start_temp
        return t0 + (1.0 - t0) * (sweep / n)

    def sweep(self, temperature: float = 1.0):
        for ui, seq in enumerate(self.sequences):
            for pos in range(1, len(seq)):
                self._resample_site(ui, pos, temperature)

    def run(self) -> list[list[bool]]:
        k = self.cfg.sample_average
        votes = None
        if k > 0:
            votes = [[0] * len(f) for f in self.flags]
        for sweep in range(self.cfg.iterations):
            self.sweep(self._temperature(sweep))
            if votes is not None and sweep >= self.cfg.iterations - k:
                for vu, fu in zip(votes, self.flags):
                    for j, f in enumerate(fu):
                        vu[j] += int(f)
        if votes is not None:
            return [[v * 2 > k for v in vu] for vu in votes]
        return self.flags


def dpseg_segment(
    sequences: dict[str, tuple[str, ...]], config: DpsegConfig
) -> dict[str, Segmentation]:
    """Gibbs-sample a segmentation of UL symbol sequences (monolingual)."""
    ids = sorted(sequences)
    sampler = DpsegSampler([sequences[i] for i in ids], config)
    flags = sampler.run()
    out = {}
    for utt_id, seq, f in zip(ids, (sequences[i] for i in ids), flags):
        bounds = {j for j, flag in enumerate(f, start=1) if flag}
        out[utt_id] = Segmentation(len(seq), frozenset(bounds))
    return out


def dpseg_segment_corpus(corpus: ParallelCorpus, config: DpsegConfig) -> dict[str, Segmentation]:
    return dpseg_segment({u.id: u.ul_symbols for u in corpus}, config)
