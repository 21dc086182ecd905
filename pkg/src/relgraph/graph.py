"""Relational graph data model.

Words are vertices, relation-expressing patterns are edge labels, and each
directed edge (source, target, label, weight) records how strongly a pattern
co-occurs with an ordered word pair.  Vocabulary and pattern tables intern
strings to dense integer ids in first-seen order.  Graphs are built once and
then treated as immutable; concurrent readers are safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, TextIO

EDGE_FILE_HEADER = "#relgraph-edges v1"
PATTERN_FILE_HEADER = "#relgraph-patterns v1"

SOURCE = "source"
TARGET = "target"


class ParseError(ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PatternKind(Enum):
    LEX = "LEX"
    POS = "POS"
    DEP = "DEP"

    @classmethod
    def from_name(cls, name: str) -> "PatternKind":
        try:
            return cls[name.upper()]
        except KeyError:
            valid = "|".join(k.value for k in cls)
            raise ValueError(f"unknown pattern kind {name!r} (expected {valid})") from None


@dataclass(frozen=True)
class Pattern:
    """Two-slot template over tokens; slot X binds the edge source, Y the target."""

    kind: PatternKind
    text: str

    def __post_init__(self):
        tokens = self.text.split(" ")
        if any(tok == "" for tok in tokens):
            raise ValueError(
                f"pattern text must use single spaces with no leading/trailing "
                f"whitespace: {self.text!r}"
            )
        if tokens.count("X") != 1 or tokens.count("Y") != 1:
            raise ValueError(f"pattern needs exactly one X and one Y slot: {self.text!r}")

    @property
    def tokens(self) -> list[str]:
        return self.text.split(" ")


class Vocabulary:
    """Word <-> dense id table; ids are assigned in first-seen order."""

    def __init__(self):
        self._ids: dict[str, int] = {}
        self._words: list[str] = []

    def intern(self, word: str) -> int:
        wid = self._ids.get(word)
        if wid is not None:
            return wid
        if not word or any(c.isspace() for c in word):
            raise ValueError(f"word must be non-empty and whitespace-free: {word!r}")
        wid = len(self._words)
        self._ids[word] = wid
        self._words.append(word)
        return wid

    def id(self, word: str) -> int:
        return self._ids[word]

    def word(self, wid: int) -> str:
        if not 0 <= wid < len(self._words):
            raise ValueError(f"word id {wid} out of range (vocab size {len(self._words)})")
        return self._words[wid]

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def __len__(self) -> int:
        return len(self._words)

    def words(self) -> list[str]:
        return list(self._words)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._words == other._words


class PatternTable:
    """Pattern <-> dense id table; ids are assigned in first-seen order."""

    def __init__(self):
        self._ids: dict[Pattern, int] = {}
        self._patterns: list[Pattern] = []

    def intern(self, pattern: Pattern) -> int:
        pid = self._ids.get(pattern)
        if pid is not None:
            return pid
        pid = len(self._patterns)
        self._ids[pattern] = pid
        self._patterns.append(pattern)
        return pid

    def id(self, pattern: Pattern) -> int:
        return self._ids[pattern]

    def pattern(self, pid: int) -> Pattern:
        if not 0 <= pid < len(self._patterns):
            raise ValueError(f"pattern id {pid} out of range (table size {len(self._patterns)})")
        return self._patterns[pid]

    def __contains__(self, pattern: Pattern) -> bool:
        return pattern in self._ids

    def __len__(self) -> int:
        return len(self._patterns)

    def patterns(self) -> list[Pattern]:
        return list(self._patterns)

    def __eq__(self, other) -> bool:
        return isinstance(other, PatternTable) and self._patterns == other._patterns


class Edge(NamedTuple):
    source: int
    target: int
    label: int
    weight: float


class RelationalGraph:
    """Directed labelled weighted multigraph over an interned vocabulary.

    Multiple edges between the same word pair are allowed as long as their
    labels differ; duplicate (source, target, label) triples are rejected so
    counts must be aggregated before edges are added.
    """

    def __init__(self, vocab: Vocabulary | None = None, patterns: PatternTable | None = None):
        self.vocab = vocab if vocab is not None else Vocabulary()
        self.patterns = patterns if patterns is not None else PatternTable()
        self.edges: list[Edge] = []
        self._triples: set[tuple[int, int, int]] = set()
        self._incident: dict[int, list[tuple[int, str]]] = {}
        self._by_label: dict[int, list[int]] = {}

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def add_edge(self, source: int, target: int, label: int, weight: float) -> None:
        self.vocab.word(source)
        self.vocab.word(target)
        self.patterns.pattern(label)
        weight = float(weight)
        if not math.isfinite(weight):
            raise ValueError(f"edge weight must be finite, got {weight!r}")
        if weight < 0:
            raise ValueError(f"edge weight must be >= 0, got {weight!r}")
        triple = (source, target, label)
        if triple in self._triples:
            raise ValueError(
                f"duplicate edge ({self.vocab.word(source)}, {self.vocab.word(target)}, "
                f"label {label}); aggregate counts before adding edges"
            )
        pos = len(self.edges)
        self.edges.append(Edge(source, target, label, weight))
        self._triples.add(triple)
        self._incident.setdefault(source, []).append((pos, SOURCE))
        self._incident.setdefault(target, []).append((pos, TARGET))
        self._by_label.setdefault(label, []).append(pos)

    def incident_edges(self, word: int) -> list[tuple[int, str]]:
        """Edge positions touching `word`, tagged with its role, in insertion order.

        A self-loop contributes one entry per role.
        """
        self.vocab.word(word)
        return list(self._incident.get(word, []))

    def label_edges(self, label: int) -> list[int]:
        self.patterns.pattern(label)
        return list(self._by_label.get(label, []))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RelationalGraph)
            and self.vocab == other.vocab
            and self.patterns == other.patterns
            and self.edges == other.edges
        )


def format_weight(weight: float) -> str:
    """Shortest decimal string that round-trips to the same 64-bit float."""
    text = repr(float(weight))
    return text[:-2] if text.endswith(".0") else text


def write_pattern_file(patterns: PatternTable, stream: TextIO) -> None:
    stream.write(PATTERN_FILE_HEADER + "\n")
    for pid, pattern in enumerate(patterns.patterns()):
        stream.write(f"{pid}\t{pattern.kind.value}\t{pattern.text}\n")


def read_pattern_file(stream: TextIO) -> PatternTable:
    table = PatternTable()
    header = stream.readline().rstrip("\n")
    if header != PATTERN_FILE_HEADER:
        raise ParseError(f"expected header {PATTERN_FILE_HEADER!r}, got {header!r}", line=1)
    for lineno, raw in enumerate(stream, start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", line=lineno)
        pid_text, kind_text, text = fields
        try:
            pid = int(pid_text)
        except ValueError:
            raise ParseError(f"non-integer pattern id {pid_text!r}", line=lineno) from None
        if pid != len(table):
            raise ParseError(f"pattern ids must be dense and ordered; expected {len(table)}, got {pid}", line=lineno)
        try:
            kind = PatternKind.from_name(kind_text)
            pattern = Pattern(kind, text)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if pattern in table:
            raise ParseError(f"duplicate pattern {text!r}", line=lineno)
        table.intern(pattern)
    return table


def save_graph(graph: RelationalGraph, edges_stream: TextIO, patterns_stream: TextIO) -> None:
    """Write the two-file on-disk form: edge rows and the pattern dictionary.

    Word ids are implicit (first-seen order along the edge list), so graphs
    whose vocabulary was interned in edge order round-trip exactly; the format
    cannot carry isolated vertices.
    """
    write_pattern_file(graph.patterns, patterns_stream)
    edges_stream.write(EDGE_FILE_HEADER + "\n")
    for edge in graph.edges:
        edges_stream.write(
            f"{graph.vocab.word(edge.source)}\t{graph.vocab.word(edge.target)}"
            f"\t{edge.label}\t{format_weight(edge.weight)}\n"
        )


def load_graph(edges_stream: TextIO, patterns_stream: TextIO) -> RelationalGraph:
    patterns = read_pattern_file(patterns_stream)
    graph = RelationalGraph(patterns=patterns)
    header = edges_stream.readline().rstrip("\n")
    if header != EDGE_FILE_HEADER:
        raise ParseError(f"expected header {EDGE_FILE_HEADER!r}, got {header!r}", line=1)
    for lineno, raw in enumerate(edges_stream, start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", line=lineno)
        source_word, target_word, pid_text, weight_text = fields
        try:
            label = int(pid_text)
        except ValueError:
            raise ParseError(f"non-integer pattern id {pid_text!r}", line=lineno) from None
        if not 0 <= label < len(patterns):
            raise ParseError(f"unknown pattern id {label}", line=lineno)
        try:
            weight = float(weight_text)
        except ValueError:
            raise ParseError(f"non-numeric weight {weight_text!r}", line=lineno) from None
        try:
            source = graph.vocab.intern(source_word)
            target = graph.vocab.intern(target_word)
            graph.add_edge(source, target, label, weight)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return graph
