import io

import numpy as np
import pytest

from relgraph import (
    ParseError,
    Pattern,
    PatternKind,
    accumulate_counts,
    extract_dep_patterns,
    extract_lexical_patterns,
    filter_patterns,
    generate_pairs,
    merge_counts,
    read_conll_corpus,
    read_vertical_corpus,
    to_pos_pattern,
)
from relgraph.corpus import FORWARD, REVERSED, TripleCounts, load_counts, save_counts
from relgraph.graph import read_pattern_file, write_pattern_file

from conftest import make_sentence


def enumerate_patterns_brute_force(lemmas, iu, iv, max_affix):
    """Independent enumerator: all prefix/suffix windows around fixed slots."""
    first, second = min(iu, iv), max(iu, iv)
    m_first = "X" if iu < iv else "Y"
    m_second = "Y" if iu < iv else "X"
    mid = lemmas[first + 1 : second]
    if len(mid) > max_affix:
        return set()
    out = set()
    for p in range(max_affix + 1):
        if p > first:
            break
        for s in range(max_affix + 1):
            if second + 1 + s > len(lemmas):
                break
            tokens = (
                lemmas[first - p : first]
                + [m_first]
                + mid
                + [m_second]
                + lemmas[second + 1 : second + 1 + s]
            )
            out.add(" ".join(tokens))
    return out


class TestVerticalReader:
    def test_single_token_sentence(self):
        stream = io.StringIO("ostrich\tostrich\tNN\n\n")
        sentences = list(read_vertical_corpus(stream))
        assert len(sentences) == 1
        assert sentences[0][0].lemma == "ostrich"
        assert sentences[0][0].pos == "NN"

    def test_two_sentences_in_order(self):
        stream = io.StringIO("a\ta\tNN\n\nb\tb\tNN\n\n")
        sentences = list(read_vertical_corpus(stream))
        assert [s[0].lemma for s in sentences] == ["a", "b"]

    def test_trailing_sentence_without_blank_line(self):
        stream = io.StringIO("a\ta\tNN\nb\tb\tNN")
        sentences = list(read_vertical_corpus(stream))
        assert len(sentences) == 1
        assert len(sentences[0]) == 2

    def test_nine_token_sentence(self):
        words = "ostrich is a large bird that lives in Africa".split()
        text = "".join(f"{w}\t{w}\tNN\n" for w in words) + "\n"
        sentences = list(read_vertical_corpus(io.StringIO(text)))
        assert len(sentences) == 1
        assert [t.lemma for t in sentences[0]] == words

    def test_wrong_field_count_names_line(self):
        stream = io.StringIO("a\ta\tNN\nbroken line\n")
        with pytest.raises(ParseError, match="line 2"):
            list(read_vertical_corpus(stream))

    def test_lowercase_switch(self):
        stream = io.StringIO("Africa\tAfrica\tNP\n\n")
        (sentence,) = read_vertical_corpus(stream, lowercase=True)
        assert sentence[0].lemma == "africa"
        assert sentence[0].pos == "NP"


class TestConllReader:
    def test_single_row(self):
        stream = io.StringIO("1\tbird\tbird\tN\tNN\t_\t0\troot\n")
        (sentence,) = read_conll_corpus(stream)
        assert sentence[0].head == 0
        assert sentence[0].deprel == "root"
        assert sentence[0].pos == "NN"

    def test_arc_recoverable(self):
        text = "1\tchased\tchase\tV\tVBD\t_\t0\troot\n2\tbird\tbird\tN\tNN\t_\t1\tdobj\n\n"
        (sentence,) = read_conll_corpus(io.StringIO(text))
        assert sentence[1].head == 1
        assert sentence[1].deprel == "dobj"

    def test_non_integer_head_names_line(self):
        stream = io.StringIO("1\tbird\tbird\tN\tNN\t_\tx\tdobj\n")
        with pytest.raises(ParseError, match="line 1"):
            list(read_conll_corpus(stream))

    def test_out_of_range_head(self):
        stream = io.StringIO("1\tbird\tbird\tN\tNN\t_\t5\tdobj\n\n")
        with pytest.raises(ParseError, match="out of range"):
            list(read_conll_corpus(stream))

    def test_too_few_columns(self):
        stream = io.StringIO("1\tbird\tbird\tN\tNN\t_\t0\n")
        with pytest.raises(ParseError, match="line 1"):
            list(read_conll_corpus(stream))


class TestGeneratePairs:
    def _corpus(self, text, copies):
        return [make_sentence(text) for _ in range(copies)]

    def test_strictly_greater_than_threshold(self):
        pairs = generate_pairs(self._corpus("ostrich bird", 101), 100)
        assert pairs == {("ostrich", "bird"), ("bird", "ostrich")}

    def test_exactly_threshold_excluded(self):
        assert generate_pairs(self._corpus("ostrich bird", 100), 100) == set()

    def test_repeats_within_sentence_count_once(self):
        corpus = [make_sentence("a b a b a")] * 2
        assert generate_pairs(corpus, 1) == {("a", "b"), ("b", "a")}
        assert generate_pairs(corpus, 2) == set()

    def test_empty_corpus(self):
        assert generate_pairs([], 100) == set()

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValueError):
            generate_pairs([], 0)


LARGE_BIRD = "ostrich is a large bird that lives in Africa"


class TestLexicalExtraction:
    def test_large_bird_sentence_golden(self):
        matches = extract_lexical_patterns(make_sentence(LARGE_BIRD), "ostrich", "bird")
        texts = {m.pattern.text for m in matches}
        assert texts == {
            "X is a large Y",
            "X is a large Y that",
            "X is a large Y that lives",
            "X is a large Y that lives in",
        }
        assert all(m.direction == FORWARD for m in matches)
        assert all(m.pattern.kind is PatternKind.LEX for m in matches)

    def test_adjacent_pair(self):
        matches = extract_lexical_patterns(make_sentence("ostrich bird"), "ostrich", "bird")
        assert {m.pattern.text for m in matches} == {"X Y"}

    def test_twelve_pattern_case_matches_brute_force(self):
        sentence = "the big ostrich chased a bird quickly today indeed"
        matches = extract_lexical_patterns(make_sentence(sentence), "ostrich", "bird")
        expected = enumerate_patterns_brute_force(sentence.split(), 2, 5, 3)
        assert {m.pattern.text for m in matches} == expected
        assert len(matches) == 12

    def test_reversed_order_starts_with_y_side(self):
        sentence = "large bird such as ostrich"
        matches = extract_lexical_patterns(make_sentence(sentence), "ostrich", "bird")
        assert {m.pattern.text for m in matches} == {"large Y such as X", "Y such as X"}
        assert all(m.direction == REVERSED for m in matches)

    def test_midfix_longer_than_max_affix_yields_nothing(self):
        sentence = "ostrich one two three four bird"
        assert extract_lexical_patterns(make_sentence(sentence), "ostrich", "bird") == []

    def test_closest_occurrences_selected(self):
        # ostrich at 0 and 3, bird at 6: the pair (3, 6) has the smallest gap
        sentence = "ostrich fly while ostrich runs toward bird"
        matches = extract_lexical_patterns(make_sentence(sentence), "ostrich", "bird")
        assert "X runs toward Y" in {m.pattern.text for m in matches}
        # every pattern is built around the (3, 6) slots: same midfix, no suffix
        assert all("X runs toward Y" in m.pattern.text for m in matches)
        assert all(m.pattern.tokens[-1] == "Y" for m in matches)

    def test_tie_breaks_to_leftmost(self):
        # both ostrich occurrences are one token from bird; leftmost wins
        sentence = "ostrich near bird near ostrich"
        matches = extract_lexical_patterns(make_sentence(sentence), "ostrich", "bird")
        assert all(m.direction == FORWARD for m in matches)
        assert "X near Y" in {m.pattern.text for m in matches}

    def test_absent_lemma_is_an_error(self):
        with pytest.raises(ValueError, match="does not occur"):
            extract_lexical_patterns(make_sentence("a b c"), "a", "zebra")

    def test_identical_lemmas_rejected(self):
        with pytest.raises(ValueError):
            extract_lexical_patterns(make_sentence("a b"), "a", "a")

    def test_slot_marker_collision_skipped(self):
        matches = extract_lexical_patterns(make_sentence("X ostrich near bird"), "ostrich", "bird")
        texts = {m.pattern.text for m in matches}
        assert texts == {"X near Y"}

    @pytest.mark.parametrize("seed", range(10))
    def test_output_size_formula(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 14))
        lemmas = [f"w{k}" for k in range(n)]
        iu, iv = rng.choice(n, size=2, replace=False)
        max_affix = int(rng.integers(0, 5))
        sentence = make_sentence(" ".join(lemmas))
        matches = extract_lexical_patterns(sentence, lemmas[iu], lemmas[iv], max_affix)
        first, second = min(iu, iv), max(iu, iv)
        midfix_len = second - first - 1
        if midfix_len > max_affix:
            assert matches == []
        else:
            expected = (min(max_affix, first) + 1) * (min(max_affix, n - second - 1) + 1)
            assert len(matches) == expected
        for m in matches:
            assert m.pattern.tokens.count("X") == 1
            assert m.pattern.tokens.count("Y") == 1
        again = extract_lexical_patterns(sentence, lemmas[iu], lemmas[iv], max_affix)
        assert again == matches


class TestPosConversion:
    TAGS = ["NN", "VBZ", "DT", "JJ", "NN", "WDT", "VBZ", "IN", "NP"]

    def _matches(self):
        sentence = make_sentence(LARGE_BIRD, tags=self.TAGS)
        return sentence, extract_lexical_patterns(sentence, "ostrich", "bird")

    def test_basic_substitution(self):
        sentence, matches = self._matches()
        by_text = {m.pattern.text: m for m in matches}
        m = by_text["X is a large Y"]
        assert to_pos_pattern(m.pattern, m.positions, sentence).text == "X VBZ DT JJ Y"

    def test_longer_pattern(self):
        sentence, matches = self._matches()
        by_text = {m.pattern.text: m for m in matches}
        m = by_text["X is a large Y that"]
        converted = to_pos_pattern(m.pattern, m.positions, sentence)
        assert converted.text == "X VBZ DT JJ Y WDT"
        assert converted.kind is PatternKind.POS

    def test_slots_only_pattern_unchanged(self):
        sentence = make_sentence("ostrich bird", tags=["NN", "NN"])
        (m,) = extract_lexical_patterns(sentence, "ostrich", "bird")
        assert to_pos_pattern(m.pattern, m.positions, sentence).text == "X Y"

    def test_alignment_failure(self):
        sentence, matches = self._matches()
        m = matches[0]
        other = make_sentence("completely different words here found instead of that one")
        with pytest.raises(ValueError, match="alignment"):
            to_pos_pattern(m.pattern, m.positions, other)


class TestDepExtraction:
    def test_single_arc(self):
        sentence = make_sentence(
            "chased bird", tags=["VBD", "NN"], heads=[0, 1], deprels=["root", "dobj"]
        )
        assert extract_dep_patterns(sentence) == [
            ("bird", "chased", Pattern(PatternKind.DEP, "X dobj-of Y"))
        ]

    def test_root_only_token(self):
        sentence = make_sentence("bird", tags=["NN"], heads=[0], deprels=["root"])
        assert extract_dep_patterns(sentence) == []

    def test_three_token_chain(self):
        sentence = make_sentence(
            "a b c", heads=[2, 3, 0], deprels=["r1", "r2", "root"]
        )
        patterns = extract_dep_patterns(sentence)
        assert [(u, v, p.text) for u, v, p in patterns] == [
            ("a", "b", "X r1-of Y"),
            ("b", "c", "X r2-of Y"),
        ]

    def test_missing_fields_is_an_error(self):
        with pytest.raises(ValueError, match="dependency"):
            extract_dep_patterns(make_sentence("a b"))

    def test_punctuation_skipped(self):
        sentence = make_sentence(
            "bird . chased",
            tags=["NN", ".", "VBD"],
            heads=[3, 3, 0],
            deprels=["nsubj", "punct", "root"],
        )
        assert [(u, v) for u, v, _ in extract_dep_patterns(sentence)] == [("bird", "chased")]


class TestAccumulateCounts:
    def test_large_bird_single_sentence(self):
        counts = accumulate_counts(
            [make_sentence(LARGE_BIRD)], {("ostrich", "bird")}, PatternKind.LEX
        )
        assert len(counts) == 4
        assert all(n == 1 for n in counts.counts.values())
        o, b = counts.vocab.id("ostrich"), counts.vocab.id("bird")
        assert counts.pair_total(o, b) == 4
        assert counts.total == 4

    def test_empty_corpus(self):
        counts = accumulate_counts([], {("a", "b")}, PatternKind.LEX)
        assert len(counts) == 0
        assert counts.total == 0

    def test_repeated_sentence_doubles_counts(self):
        corpus = [make_sentence(LARGE_BIRD), make_sentence(LARGE_BIRD)]
        counts = accumulate_counts(corpus, {("ostrich", "bird")}, PatternKind.LEX)
        assert len(counts) == 4
        assert all(n == 2 for n in counts.counts.values())

    def test_long_sentences_skipped(self):
        long_text = " ".join(f"w{k}" for k in range(200)) + " ostrich bird"
        corpus = [make_sentence(long_text)]
        counts = accumulate_counts(corpus, {("ostrich", "bird")}, PatternKind.LEX)
        assert len(counts) == 0

    def test_pos_kind_uses_tags(self):
        sentence = make_sentence("ostrich is bird", tags=["NN", "VBZ", "NN"])
        counts = accumulate_counts([sentence], {("ostrich", "bird")}, PatternKind.POS)
        texts = {counts.patterns.pattern(l).text for (_, _, l) in counts.counts}
        assert texts == {"X VBZ Y"}

    def test_dep_kind_restricted_to_pairs(self):
        sentence = make_sentence(
            "bird chased worm",
            tags=["NN", "VBD", "NN"],
            heads=[2, 0, 2],
            deprels=["nsubj", "root", "dobj"],
        )
        counts = accumulate_counts([sentence], {("bird", "chased")}, PatternKind.DEP)
        assert len(counts) == 1
        ((u, v, l),) = counts.counts
        assert counts.vocab.word(u) == "bird"
        assert counts.vocab.word(v) == "chased"

    @pytest.mark.parametrize("seed", range(3))
    def test_cached_marginals_match_recomputation(self, seed):
        rng = np.random.default_rng(seed)
        vocab = [f"w{k}" for k in range(6)]
        corpus = []
        for _ in range(15):
            n = int(rng.integers(2, 7))
            corpus.append(make_sentence(" ".join(rng.choice(vocab, size=n))))
        pairs = generate_pairs(corpus, 1)
        counts = accumulate_counts(corpus, pairs, PatternKind.LEX)
        total = 0
        pair_totals = {}
        label_totals = {}
        label_pairs = {}
        for (u, v, l), n in counts.counts.items():
            total += n
            pair_totals[(u, v)] = pair_totals.get((u, v), 0) + n
            label_totals[l] = label_totals.get(l, 0) + n
            label_pairs.setdefault(l, set()).add((u, v))
        assert counts.total == total
        assert counts.pair_totals == pair_totals
        assert counts.label_totals == label_totals
        assert counts.label_pair_counts == {l: len(ps) for l, ps in label_pairs.items()}


class TestFilterPatterns:
    def _counts(self):
        counts = TripleCounts()
        a = counts.vocab.intern("a")
        b = counts.vocab.intern("b")
        c = counts.vocab.intern("c")
        d = counts.vocab.intern("d")
        lone = counts.patterns.intern(Pattern(PatternKind.LEX, "X lone Y"))
        shared = counts.patterns.intern(Pattern(PatternKind.LEX, "X shared Y"))
        counts.add(a, b, lone, 5)
        counts.add(a, b, shared, 1)
        counts.add(c, d, shared, 2)
        return counts.finalize(), lone, shared

    def test_single_pair_pattern_removed(self):
        counts, lone, shared = self._counts()
        kept = filter_patterns(counts, 2)
        labels = {l for (_, _, l) in kept.counts}
        assert labels == {shared}
        assert kept.total == 3

    def test_boundary_inclusive(self):
        counts, _, shared = self._counts()
        kept = filter_patterns(counts, 2)
        assert kept.label_pair_count(shared) == 2

    def test_min_one_keeps_everything(self):
        counts, _, _ = self._counts()
        kept = filter_patterns(counts, 1)
        assert kept.counts == counts.counts

    def test_idempotent(self):
        counts, _, _ = self._counts()
        once = filter_patterns(counts, 2)
        twice = filter_patterns(once, 2)
        assert twice.counts == once.counts


class TestMergeAndIO:
    def _corpus(self):
        corpus = []
        for text in [LARGE_BIRD, "penguin is a small bird", "lion is a large cat", LARGE_BIRD]:
            corpus.append(make_sentence(text))
        return corpus

    def test_sharded_merge_equals_single_pass(self):
        corpus = self._corpus()
        pairs = generate_pairs(corpus, 1)
        single = accumulate_counts(corpus, pairs, PatternKind.LEX)
        shards = [
            accumulate_counts(corpus[:2], pairs, PatternKind.LEX),
            accumulate_counts(corpus[2:], pairs, PatternKind.LEX),
        ]
        merged = merge_counts(shards)
        assert merged.vocab.words() == single.vocab.words()
        assert merged.patterns.patterns() == single.patterns.patterns()
        assert merged.counts == single.counts
        assert merged.total == single.total

    def test_counts_round_trip(self):
        corpus = self._corpus()
        pairs = generate_pairs(corpus, 1)
        counts = accumulate_counts(corpus, pairs, PatternKind.LEX)
        counts_stream, patterns_stream = io.StringIO(), io.StringIO()
        save_counts(counts, counts_stream)
        write_pattern_file(counts.patterns, patterns_stream)
        counts_stream.seek(0)
        patterns_stream.seek(0)
        loaded = load_counts(counts_stream, read_pattern_file(patterns_stream))
        assert loaded.counts == counts.counts
        assert loaded.vocab.words() == counts.vocab.words()
        assert loaded.total == counts.total

    def test_load_counts_rejects_bad_rows(self):
        patterns_stream = io.StringIO("#relgraph-patterns v1\n0\tLEX\tX r Y\n")
        patterns = read_pattern_file(patterns_stream)
        bad = io.StringIO("#relgraph-counts v1\na\tb\t0\tmany\n")
        with pytest.raises(ParseError, match="line 2"):
            load_counts(bad, patterns)
