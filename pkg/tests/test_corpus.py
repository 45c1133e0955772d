import pytest
from hypothesis import given, strategies as st

from attnseg.corpus import (
    CorpusError,
    ParallelCorpus,
    ParallelUtterance,
    Segmentation,
    Vocabulary,
    build_vocabularies,
    corpus_from_timed_units,
    corpus_stats,
    load_gold_segmentation,
    load_parallel_corpus,
    load_timed_units,
    split_train_dev,
    write_corpus,
    write_segmentations,
)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@pytest.fixture
def toy_files(tmp_path):
    ul = tmp_path / "ul.txt"
    wrl = tmp_path / "wrl.txt"
    write_lines(ul, ["a b c d", "a b", "c d a"])
    write_lines(wrl, ["un deux", "un", "trois un"])
    return str(ul), str(wrl)


class TestSegmentation:
    def test_word_spans(self):
        s = Segmentation(5, {2, 4})
        assert s.word_spans() == [(0, 2), (2, 4), (4, 5)]
        assert s.num_words == 3

    def test_rejects_edge_boundaries(self):
        with pytest.raises(CorpusError):
            Segmentation(3, {0})
        with pytest.raises(CorpusError):
            Segmentation(3, {3})

    def test_from_words_roundtrip(self):
        words = [("a", "b"), ("c",), ("d", "e", "f")]
        s = Segmentation.from_words(words)
        assert s.boundaries == {2, 3}
        assert s.words(list("abcdef")) == words

    @given(st.lists(st.integers(1, 4), min_size=1, max_size=8))
    def test_words_boundaries_bijection(self, lengths):
        symbols = []
        words = []
        for i, n in enumerate(lengths):
            w = tuple("s%d_%d" % (i, j) for j in range(n))
            words.append(w)
            symbols.extend(w)
        seg = Segmentation.from_words(words)
        assert seg.words(symbols) == words
        assert Segmentation.from_words(seg.words(symbols)) == seg


class TestVocabulary:
    def test_reserved_ids_distinct(self):
        v = Vocabulary()
        assert len({v.pad_id, v.bos_id, v.eos_id, v.unk_id}) == 4

    def test_bijection(self):
        v = Vocabulary(["x", "y", "x"])
        assert v.id("x") != v.id("y")
        assert v.token(v.id("x")) == "x"
        assert len(v) == 6

    def test_unk_fallback(self):
        v = Vocabulary(["x"])
        assert v.id("zzz", allow_unk=True) == v.unk_id
        with pytest.raises(CorpusError):
            v.id("zzz")


class TestLoadParallelCorpus:
    def test_basic(self, toy_files):
        c = load_parallel_corpus(*toy_files)
        assert len(c) == 3
        assert c.utterances[0].ul_symbols == ("a", "b", "c", "d")
        assert c.utterances[0].wrl_words == ("un", "deux")

    def test_one_line_tokenization(self, tmp_path):
        write_lines(tmp_path / "u", ["a b c"])
        write_lines(tmp_path / "w", ["x y"])
        c = load_parallel_corpus(str(tmp_path / "u"), str(tmp_path / "w"))
        assert len(c.utterances[0].ul_symbols) == 3
        assert len(c.utterances[0].wrl_words) == 2

    def test_line_count_mismatch(self, tmp_path):
        write_lines(tmp_path / "u", ["a", "b", "c"])
        write_lines(tmp_path / "w", ["x", "y"])
        with pytest.raises(CorpusError, match="3.*2|2.*3"):
            load_parallel_corpus(str(tmp_path / "u"), str(tmp_path / "w"))

    def test_empty_line_named(self, tmp_path):
        (tmp_path / "u").write_text("a b\n\nc\n", encoding="utf-8")
        write_lines(tmp_path / "w", ["x", "y", "z"])
        with pytest.raises(CorpusError, match="line 2"):
            load_parallel_corpus(str(tmp_path / "u"), str(tmp_path / "w"))

    def test_write_read_roundtrip(self, toy_files, tmp_path):
        c = load_parallel_corpus(*toy_files)
        u2, w2 = str(tmp_path / "u2"), str(tmp_path / "w2")
        write_corpus(c, u2, w2)
        assert open(u2).read().rstrip() == open(toy_files[0]).read().rstrip()
        assert open(w2).read().rstrip() == open(toy_files[1]).read().rstrip()


class TestGoldSegmentation:
    def test_single_break(self, tmp_path):
        write_lines(tmp_path / "u", ["a b c d"])
        write_lines(tmp_path / "w", ["x"])
        write_lines(tmp_path / "g", ["ab cd"])
        c = load_parallel_corpus(str(tmp_path / "u"), str(tmp_path / "w"))
        c = load_gold_segmentation(c, str(tmp_path / "g"))
        assert c.utterances[0].gold_boundaries.boundaries == {2}

    def test_single_word(self, tmp_path):
        write_lines(tmp_path / "u", ["a b"])
        write_lines(tmp_path / "w", ["x"])
        write_lines(tmp_path / "g", ["ab"])
        c = load_parallel_corpus(str(tmp_path / "u"), str(tmp_path / "w"))
        c = load_gold_segmentation(c, str(tmp_path / "g"))
        assert c.utterances[0].gold_boundaries.boundaries == frozenset()

    def test_symbol_mismatch(self, tmp_path):
        write_lines(tmp_path / "u", ["a b c d"])
        write_lines(tmp_path / "w", ["x"])
        write_lines(tmp_path / "g", ["ab ce"])
        c = load_parallel_corpus(str(tmp_path / "u"), str(tmp_path / "w"))
        with pytest.raises(CorpusError, match="line 1"):
            load_gold_segmentation(c, str(tmp_path / "g"))

    def test_multichar_delimiter(self, tmp_path):
        write_lines(tmp_path / "u", ["a12 a3 a12"])
        write_lines(tmp_path / "w", ["x"])
        write_lines(tmp_path / "g", ["a12.a3 a12"])
        c = load_parallel_corpus(str(tmp_path / "u"), str(tmp_path / "w"))
        c = load_gold_segmentation(c, str(tmp_path / "g"), delimiter=".")
        assert c.utterances[0].gold_boundaries.boundaries == {2}

    def test_write_segmentations_roundtrip(self, tmp_path):
        write_lines(tmp_path / "u", ["a b c d", "a b"])
        write_lines(tmp_path / "w", ["x", "y"])
        c = load_parallel_corpus(str(tmp_path / "u"), str(tmp_path / "w"))
        segs = {"utt00001": Segmentation(4, {2}), "utt00002": Segmentation(2, {1})}
        out = tmp_path / "seg.txt"
        write_segmentations(c, segs, str(out))
        assert out.read_text() == "ab cd\na b\n"
        back = load_gold_segmentation(c, str(out))
        assert back.utterances[0].gold_boundaries == segs["utt00001"]


class TestSplit:
    def make_corpus(self, n):
        utts = tuple(
            ParallelUtterance("u%d" % i, ("a", "b"), ("x",)) for i in range(n)
        )
        ul, wrl = build_vocabularies(utts)
        return ParallelCorpus(utts, ul, wrl)

    def test_sizes_rounding(self):
        c = self.make_corpus(10)
        train, dev = split_train_dev(c, 0.3, seed=0)
        assert (len(train), len(dev)) == (7, 3)

    def test_large_corpus_sizes(self):
        c = self.make_corpus(5130)
        train, dev = split_train_dev(c, 514 / 5130, seed=0)
        assert (len(train), len(dev)) == (4616, 514)

    def test_determinism(self):
        c = self.make_corpus(10)
        a = split_train_dev(c, 0.5, seed=1)
        b = split_train_dev(c, 0.5, seed=1)
        assert [u.id for u in a[0]] == [u.id for u in b[0]]
        assert [u.id for u in a[1]] == [u.id for u in b[1]]

    @given(st.integers(2, 40), st.floats(0.05, 0.95), st.integers(0, 5))
    def test_partition(self, n, frac, seed):
        c = self.make_corpus(n)
        train, dev = split_train_dev(c, frac, seed)
        ids = [u.id for u in train] + [u.id for u in dev]
        assert len(ids) == n
        assert len(set(ids)) == n

    def test_bad_fraction(self):
        c = self.make_corpus(4)
        with pytest.raises(CorpusError):
            split_train_dev(c, 1.5, seed=0)


class TestStats:
    def test_single_utterance(self):
        u = ParallelUtterance("u", tuple("abcde"), ("x", "y"),
                              gold_boundaries=Segmentation(5, {2}))
        ul, wrl = build_vocabularies([u])
        stats = corpus_stats(ParallelCorpus((u,), ul, wrl), "gold")
        assert stats["symbols_per_sentence_avg"] == 5
        assert stats["symbols_per_sentence_max"] == 5
        assert stats["tokens"] == 2
        assert stats["types"] == 2

    def test_missing_gold(self):
        u = ParallelUtterance("u", ("a",), ("x",))
        ul, wrl = build_vocabularies([u])
        with pytest.raises(CorpusError):
            corpus_stats(ParallelCorpus((u,), ul, wrl), "gold")


class TestTimedUnits:
    def test_roundtrip(self, tmp_path):
        f = tmp_path / "units.txt"
        f.write_text(
            "utt1 0.000000 0.120000 a3\n"
            "utt1 0.120000 0.300000 a7\n"
            "utt2 0.000000 0.500000 a3\n"
        )
        units = load_timed_units(str(f))
        assert units["utt1"] == [("a3", 0.0, 0.12), ("a7", 0.12, 0.3)]
        wrl = tmp_path / "wrl.txt"
        wrl.write_text("un deux\ntrois\n")
        c = corpus_from_timed_units(units, str(wrl))
        assert c.by_id("utt1").ul_symbols == ("a3", "a7")
        assert c.by_id("utt1").ul_times == ((0.0, 0.12), (0.12, 0.3))

    def test_malformed_line(self, tmp_path):
        f = tmp_path / "units.txt"
        f.write_text("utt1 0.0 0.1\n")
        with pytest.raises(CorpusError, match="line 1"):
            load_timed_units(str(f))

    def test_overlapping_times_rejected(self):
        with pytest.raises(CorpusError):
            ParallelUtterance("u", ("a", "b"), ("x",),
                              ul_times=((0.0, 0.5), (0.4, 0.8)))
