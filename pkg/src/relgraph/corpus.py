"""Corpus ingestion, word-pair generation, pattern extraction, triple counting.

Input corpora are already lemmatised and POS tagged (one token per line), or
dependency parsed (CoNLL-style rows).  All pairing and pattern extraction is
done on lemmas; surface forms are kept only for reference.  Counting is
case-sensitive, so corpora should be pre-lowercased or read with
``lowercase=True``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, TextIO

from .graph import ParseError, Pattern, PatternKind, PatternTable, Vocabulary

COUNTS_FILE_HEADER = "#relgraph-counts v1"

# Slot text order: "XY" when the pair's first word precedes the second in the
# sentence, "YX" otherwise.  The edge always runs X-word -> Y-word.
FORWARD = "XY"
REVERSED = "YX"

DEFAULT_MAX_AFFIX = 3
DEFAULT_MAX_SENTENCE_LEN = 128


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    lemma: str
    pos: str
    head: int | None = None  # 1-based, 0 = root
    deprel: str | None = None

    def __post_init__(self):
        if not self.lemma or not self.pos:
            raise ValueError("token lemma and POS tag must be non-empty")
        if (self.head is None) != (self.deprel is None):
            raise ValueError("head and deprel must be present together or absent together")


AnnotatedSentence = list[AnnotatedToken]


@dataclass(frozen=True)
class LexicalMatch:
    """One extracted lexical pattern plus its alignment to the sentence.

    `positions` maps every pattern token (slots included) to its sentence
    index; `direction` records slot text order (FORWARD = X before Y).
    """

    pattern: Pattern
    positions: tuple[int, ...]
    direction: str


def read_vertical_corpus(stream: TextIO, lowercase: bool = False) -> Iterator[AnnotatedSentence]:
    """Yield sentences from "surface<TAB>lemma<TAB>pos" lines; blank line separates."""
    tokens: AnnotatedSentence = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            if tokens:
                yield tokens
                tokens = []
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", line=lineno)
        surface, lemma, pos = fields
        if lowercase:
            surface, lemma = surface.lower(), lemma.lower()
        try:
            tokens.append(AnnotatedToken(surface, lemma, pos))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if tokens:
        yield tokens


def read_conll_corpus(stream: TextIO, lowercase: bool = False) -> Iterator[AnnotatedSentence]:
    """Yield dependency-parsed sentences from CoNLL-style rows.

    Expects >= 8 tab-separated columns (ID, FORM, LEMMA, CPOS, POS, FEATS,
    HEAD, DEPREL); the fine-grained POS column is used.  Comment lines
    starting with '#' are skipped.
    """
    tokens: AnnotatedSentence = []
    token_lines: list[int] = []

    def flush() -> AnnotatedSentence:
        nonlocal tokens, token_lines
        for tok, ln in zip(tokens, token_lines):
            if not 0 <= tok.head <= len(tokens):
                raise ParseError(f"HEAD {tok.head} out of range for {len(tokens)}-token sentence", line=ln)
        done, tokens, token_lines = tokens, [], []
        return done

    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if line.startswith("#"):
            continue
        if not line.strip():
            if tokens:
                yield flush()
            continue
        fields = line.split("\t")
        if len(fields) < 8:
            raise ParseError(f"expected >= 8 tab-separated columns, got {len(fields)}", line=lineno)
        try:
            int(fields[0])
        except ValueError:
            raise ParseError(f"non-integer token ID {fields[0]!r}", line=lineno) from None
        try:
            head = int(fields[6])
        except ValueError:
            raise ParseError(f"non-integer HEAD {fields[6]!r}", line=lineno) from None
        surface, lemma, pos, deprel = fields[1], fields[2], fields[4], fields[7]
        if lowercase:
            surface, lemma = surface.lower(), lemma.lower()
        try:
            tokens.append(AnnotatedToken(surface, lemma, pos, head=head, deprel=deprel))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        token_lines.append(lineno)
    if tokens:
        yield flush()


def generate_pairs(
    sentences: Iterable[AnnotatedSentence], min_pair_sentences: int = 100
) -> set[tuple[str, str]]:
    """Ordered lemma pairs whose sentence co-occurrence count exceeds the threshold.

    A pair is counted once per sentence regardless of repeats; both orders of
    every admitted pair are returned.  The threshold is strict: a pair seen in
    exactly `min_pair_sentences` sentences is excluded.
    """
    if min_pair_sentences < 1:
        raise ValueError(f"min_pair_sentences must be >= 1, got {min_pair_sentences}")
    cooc: dict[tuple[str, str], int] = {}
    for sentence in sentences:
        lemmas = sorted({tok.lemma for tok in sentence})
        for a, b in combinations(lemmas, 2):
            key = (a, b)
            cooc[key] = cooc.get(key, 0) + 1
    pairs: set[tuple[str, str]] = set()
    for (a, b), n in cooc.items():
        if n > min_pair_sentences:
            pairs.add((a, b))
            pairs.add((b, a))
    return pairs


def extract_lexical_patterns(
    sentence: AnnotatedSentence, u: str, v: str, max_affix: int = DEFAULT_MAX_AFFIX
) -> list[LexicalMatch]:
    """Extract lexical patterns for the ordered lemma pair (u, v) from a sentence.

    The closest occurrence pair of u and v (fewest intervening tokens; ties go
    to the leftmost u occurrence, then the leftmost v) is replaced by the slot
    markers X (for u) and Y (for v).  The midfix is every token strictly
    between the slots and must be at most `max_affix` tokens long, otherwise
    nothing is extracted.  One pattern is emitted for every combination of
    prefix length p and suffix length s in [0, max_affix] (capped by the
    tokens available before the first slot / after the second): the p lemmas
    before the first slot, the first slot marker, the midfix, the second slot
    marker, and the s lemmas after.  When u occurs after v the text starts
    with Y's side; the direction field records the slot order.

    Candidate patterns whose context lemmas collide with the slot markers
    themselves ("X" or "Y") cannot be represented and are dropped.
    """
    if u == v:
        raise ValueError("pattern extraction needs two distinct lemmas")
    occ_u = [i for i, tok in enumerate(sentence) if tok.lemma == u]
    occ_v = [i for i, tok in enumerate(sentence) if tok.lemma == v]
    if not occ_u:
        raise ValueError(f"lemma {u!r} does not occur in the sentence")
    if not occ_v:
        raise ValueError(f"lemma {v!r} does not occur in the sentence")
    _, i, j = min((abs(i - j) - 1, i, j) for i in occ_u for j in occ_v)
    first, second = (i, j) if i < j else (j, i)
    direction = FORWARD if i < j else REVERSED
    first_marker = "X" if i < j else "Y"
    second_marker = "Y" if i < j else "X"
    midfix = list(range(first + 1, second))
    if len(midfix) > max_affix:
        return []
    lemmas = [tok.lemma for tok in sentence]
    matches: list[LexicalMatch] = []
    for p in range(min(max_affix, first) + 1):
        prefix = list(range(first - p, first))
        for s in range(min(max_affix, len(sentence) - second - 1) + 1):
            suffix = list(range(second + 1, second + 1 + s))
            positions = prefix + [first] + midfix + [second] + suffix
            context = prefix + midfix + suffix
            if any(lemmas[k] in ("X", "Y") for k in context):
                continue
            tokens = [
                first_marker if k == first else second_marker if k == second else lemmas[k]
                for k in positions
            ]
            matches.append(
                LexicalMatch(
                    Pattern(PatternKind.LEX, " ".join(tokens)), tuple(positions), direction
                )
            )
    return matches


def to_pos_pattern(
    pattern: Pattern, positions: tuple[int, ...], sentence: AnnotatedSentence
) -> Pattern:
    """Replace each non-slot lemma in a lexical pattern by its POS tag."""
    tokens = pattern.tokens
    if len(positions) != len(tokens):
        raise ValueError(
            f"alignment length {len(positions)} does not match pattern length {len(tokens)}"
        )
    converted = []
    for token, k in zip(tokens, positions):
        if not 0 <= k < len(sentence):
            raise ValueError(f"alignment position {k} outside the sentence")
        if token in ("X", "Y"):
            converted.append(token)
            continue
        if sentence[k].lemma != token:
            raise ValueError(
                f"alignment mismatch at position {k}: pattern token {token!r} vs "
                f"sentence lemma {sentence[k].lemma!r}"
            )
        converted.append(sentence[k].pos)
    return Pattern(PatternKind.POS, " ".join(converted))


def _is_punct_tag(tag: str) -> bool:
    return tag.upper() in ("PUNCT", "SYM") or not any(c.isalnum() for c in tag)


def extract_dep_patterns(sentence: AnnotatedSentence) -> list[tuple[str, str, Pattern]]:
    """One (dependent, head, pattern) triple per non-root dependency arc.

    X binds the dependent, Y the head; the pattern text is "X <rel>-of Y".
    Arcs touching punctuation-tagged tokens are skipped, as are relations
    that cannot be written as a single pattern token.
    """
    out: list[tuple[str, str, Pattern]] = []
    for tok in sentence:
        if tok.head is None or tok.deprel is None:
            raise ValueError("dependency fields are missing; a parsed corpus is required")
        if tok.head == 0:
            continue
        head_tok = sentence[tok.head - 1]
        if _is_punct_tag(tok.pos) or _is_punct_tag(head_tok.pos):
            continue
        if any(c.isspace() for c in tok.deprel):
            continue
        out.append((tok.lemma, head_tok.lemma, Pattern(PatternKind.DEP, f"X {tok.deprel}-of Y")))
    return out


class TripleCounts:
    """Sparse co-occurrence counts over (source word, target word, pattern).

    Stores the number of sentences in which each triple was observed plus
    cached marginals: per-pair totals, per-pattern totals, the grand total,
    and the number of distinct ordered pairs each pattern occurs with.
    """

    def __init__(self, vocab: Vocabulary | None = None, patterns: PatternTable | None = None):
        self.vocab = vocab if vocab is not None else Vocabulary()
        self.patterns = patterns if patterns is not None else PatternTable()
        self.counts: dict[tuple[int, int, int], int] = {}
        self.pair_totals: dict[tuple[int, int], int] = {}
        self.label_totals: dict[int, int] = {}
        self.label_pair_counts: dict[int, int] = {}
        self.total = 0
        self._finalized = False

    def __len__(self) -> int:
        return len(self.counts)

    def add(self, u: int, v: int, label: int, n: int = 1) -> None:
        if n < 1:
            raise ValueError(f"count increment must be >= 1, got {n}")
        self.vocab.word(u)
        self.vocab.word(v)
        self.patterns.pattern(label)
        key = (u, v, label)
        self.counts[key] = self.counts.get(key, 0) + n
        self._finalized = False

    def finalize(self) -> "TripleCounts":
        pair_totals: dict[tuple[int, int], int] = {}
        label_totals: dict[int, int] = {}
        label_pairs: dict[int, set[tuple[int, int]]] = {}
        total = 0
        for (u, v, label), n in self.counts.items():
            pair_totals[(u, v)] = pair_totals.get((u, v), 0) + n
            label_totals[label] = label_totals.get(label, 0) + n
            label_pairs.setdefault(label, set()).add((u, v))
            total += n
        self.pair_totals = pair_totals
        self.label_totals = label_totals
        self.label_pair_counts = {label: len(ps) for label, ps in label_pairs.items()}
        self.total = total
        self._finalized = True
        return self

    def count(self, u: int, v: int, label: int) -> int:
        return self.counts.get((u, v, label), 0)

    def pair_total(self, u: int, v: int) -> int:
        self._require_finalized()
        return self.pair_totals.get((u, v), 0)

    def label_total(self, label: int) -> int:
        self._require_finalized()
        return self.label_totals.get(label, 0)

    def label_pair_count(self, label: int) -> int:
        self._require_finalized()
        return self.label_pair_counts.get(label, 0)

    def _require_finalized(self) -> None:
        if not self._finalized:
            raise RuntimeError("counts must be finalized before marginals are read")


def accumulate_counts(
    sentences: Iterable[AnnotatedSentence],
    pairs: set[tuple[str, str]],
    kind: PatternKind,
    max_affix: int = DEFAULT_MAX_AFFIX,
    max_sentence_len: int = DEFAULT_MAX_SENTENCE_LEN,
) -> TripleCounts:
    """Count, per sentence, every (u, v, pattern) triple over the admitted pairs.

    A triple is counted at most once per sentence.  Sentences longer than
    `max_sentence_len` tokens are skipped as parser noise.
    """
    counts = TripleCounts()
    for sentence in sentences:
        if len(sentence) > max_sentence_len:
            continue
        seen: dict[tuple[str, str, Pattern], None] = {}
        if kind is PatternKind.DEP:
            for u, v, pattern in extract_dep_patterns(sentence):
                if (u, v) in pairs:
                    seen[(u, v, pattern)] = None
        else:
            lemmas = list(dict.fromkeys(tok.lemma for tok in sentence))
            for u in lemmas:
                for v in lemmas:
                    if u == v or (u, v) not in pairs:
                        continue
                    for match in extract_lexical_patterns(sentence, u, v, max_affix):
                        if kind is PatternKind.POS:
                            if any(
                                sentence[k].pos in ("X", "Y")
                                for tok, k in zip(match.pattern.tokens, match.positions)
                                if tok not in ("X", "Y")
                            ):
                                continue
                            pattern = to_pos_pattern(match.pattern, match.positions, sentence)
                        else:
                            pattern = match.pattern
                        seen[(u, v, pattern)] = None
        for u, v, pattern in seen:
            counts.add(counts.vocab.intern(u), counts.vocab.intern(v), counts.patterns.intern(pattern))
    return counts.finalize()


def filter_patterns(counts: TripleCounts, min_distinct_pairs: int = 2) -> TripleCounts:
    """Drop triples whose pattern occurs with fewer than `min_distinct_pairs` ordered pairs."""
    counts._require_finalized()
    kept = TripleCounts(vocab=counts.vocab, patterns=counts.patterns)
    for (u, v, label), n in counts.counts.items():
        if counts.label_pair_count(label) >= min_distinct_pairs:
            kept.counts[(u, v, label)] = n
    return kept.finalize()


def merge_counts(parts: Iterable[TripleCounts]) -> TripleCounts:
    """Sum independently accumulated shards into one finalized count table.

    Ids are re-interned by string, so shards may have been built with
    unrelated vocabularies; merging shards in corpus order reproduces the
    single-pass result exactly.
    """
    merged = TripleCounts()
    for part in parts:
        for (u, v, label), n in part.counts.items():
            merged.add(
                merged.vocab.intern(part.vocab.word(u)),
                merged.vocab.intern(part.vocab.word(v)),
                merged.patterns.intern(part.patterns.pattern(label)),
                n,
            )
    return merged.finalize()


def save_counts(counts: TripleCounts, stream: TextIO) -> None:
    stream.write(COUNTS_FILE_HEADER + "\n")
    for (u, v, label), n in counts.counts.items():
        stream.write(f"{counts.vocab.word(u)}\t{counts.vocab.word(v)}\t{label}\t{n}\n")


def load_counts(stream: TextIO, patterns: PatternTable) -> TripleCounts:
    counts = TripleCounts(patterns=patterns)
    header = stream.readline().rstrip("\n")
    if header != COUNTS_FILE_HEADER:
        raise ParseError(f"expected header {COUNTS_FILE_HEADER!r}, got {header!r}", line=1)
    for lineno, raw in enumerate(stream, start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", line=lineno)
        u_word, v_word, pid_text, count_text = fields
        try:
            label = int(pid_text)
        except ValueError:
            raise ParseError(f"non-integer pattern id {pid_text!r}", line=lineno) from None
        if not 0 <= label < len(patterns):
            raise ParseError(f"unknown pattern id {label}", line=lineno)
        try:
            n = int(count_text)
        except ValueError:
            raise ParseError(f"non-integer count {count_text!r}", line=lineno) from None
        if n < 1:
            raise ParseError(f"counts must be >= 1, got {n}", line=lineno)
        try:
            u = counts.vocab.intern(u_word)
            v = counts.vocab.intern(v_word)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if (u, v, label) in counts.counts:
            raise ParseError(f"duplicate triple ({u_word}, {v_word}, {label})", line=lineno)
        counts.add(u, v, label, n)
    return counts.finalize()
