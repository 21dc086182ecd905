"""Word-analogy evaluation over learnt embeddings.

Questions (a, b, c, expected) are answered by ranking a candidate pool by
cosine similarity against vec(b) - vec(a) + vec(c).  Only questions whose
four words all have embeddings are attempted; the candidate pool is the set
of fourth words of those valid questions, and the three question words are
removed from a question's own candidates.  Accuracy is micro-averaged:
total correct over total attempted.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .graph import ParseError, Vocabulary


@dataclass(frozen=True)
class AnalogyQuestion:
    a: str
    b: str
    c: str
    expected: str
    category: str

    @property
    def words(self) -> tuple[str, str, str, str]:
        return (self.a, self.b, self.c, self.expected)


class EmbeddingSet:
    """Word -> vector map with a fixed dimensionality."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        self.dim = dim
        self._vectors = {}
        for word, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise ValueError(f"vector for {word!r} has shape {arr.shape}, expected ({dim},)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {word!r} has non-finite entries")
            self._vectors[word] = arr

    @classmethod
    def from_model(cls, word_vecs: np.ndarray, vocab: Vocabulary) -> "EmbeddingSet":
        return cls(
            {vocab.word(i): word_vecs[i] for i in range(word_vecs.shape[0])},
            word_vecs.shape[1],
        )

    @classmethod
    def load(cls, stream: TextIO) -> "EmbeddingSet":
        """Parse the text embedding format: "count dim" header then word rows."""
        header = stream.readline().rstrip("\n").split(" ")
        if len(header) != 2:
            raise ParseError("expected 'count dim' header", line=1)
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError("non-integer embedding header", line=1) from None
        vectors: dict[str, np.ndarray] = {}
        lineno = 1
        for lineno, raw in enumerate(stream, start=2):
            fields = raw.rstrip("\n").split(" ")
            if len(fields) != dim + 1:
                raise ParseError(
                    f"expected a word and {dim} values, got {len(fields) - 1} values",
                    line=lineno,
                )
            word = fields[0]
            if word in vectors:
                raise ParseError(f"duplicate word {word!r}", line=lineno)
            try:
                vectors[word] = np.array([float(x) for x in fields[1:]])
            except ValueError:
                raise ParseError("non-numeric vector entry", line=lineno) from None
        if len(vectors) != count:
            raise ParseError(f"header promised {count} rows, found {len(vectors)}", line=lineno)
        return cls(vectors, dim)

    def __contains__(self, word: str) -> bool:
        return word in self._vectors

    def __getitem__(self, word: str) -> np.ndarray:
        return self._vectors[word]

    def __len__(self) -> int:
        return len(self._vectors)

    def words(self) -> list[str]:
        return list(self._vectors)


def load_questions(stream: TextIO) -> list[AnalogyQuestion]:
    """Read ": category" headers and four-word question lines, lowercased."""
    questions: list[AnalogyQuestion] = []
    category: str | None = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(":"):
            category = line[1:].strip()
            if not category:
                raise ParseError("empty category name", line=lineno)
            continue
        fields = line.lower().split()
        if len(fields) != 4:
            raise ParseError(f"expected 4 space-separated words, got {len(fields)}", line=lineno)
        if category is None:
            raise ParseError("question line before any ': category' header", line=lineno)
        questions.append(AnalogyQuestion(*fields, category=category))
    return questions


def filter_valid(
    questions: Iterable[AnalogyQuestion], embeddings: EmbeddingSet
) -> list[AnalogyQuestion]:
    """Keep only questions whose four words all have embeddings."""
    return [q for q in questions if all(w in embeddings for w in q.words)]


def candidate_pool(questions: Iterable[AnalogyQuestion]) -> set[str]:
    """The set of fourth words over the given (already filtered) questions."""
    return {q.expected for q in questions}


class _PoolIndex:
    """Pool words in lexicographic order with their stacked, norm-cached vectors."""

    def __init__(self, embeddings: EmbeddingSet, pool: set[str]):
        self.words = sorted(pool)
        if self.words:
            self.matrix = np.stack([embeddings[w] for w in self.words])
            self.norms = np.linalg.norm(self.matrix, axis=1)
        else:
            self.matrix = np.zeros((0, embeddings.dim))
            self.norms = np.zeros(0)
        self.index = {w: k for k, w in enumerate(self.words)}


def _answer_indexed(question: AnalogyQuestion, embeddings: EmbeddingSet, pool: _PoolIndex) -> str | None:
    candidates = np.ones(len(pool.words), dtype=bool)
    for w in (question.a, question.b, question.c):
        if w in pool.index:
            candidates[pool.index[w]] = False
    cand_idx = np.flatnonzero(candidates)
    if cand_idx.size == 0:
        return None
    target = embeddings[question.b] - embeddings[question.a] + embeddings[question.c]
    target_norm = np.linalg.norm(target)
    scores = np.full(len(pool.words), -np.inf)
    if target_norm > 0:
        ok = pool.norms > 0
        scores[ok] = (pool.matrix[ok] @ target) / (pool.norms[ok] * target_norm)
    # argmax returns the first maximum; words are sorted, so ties break to
    # the lexicographically smallest candidate.
    best = cand_idx[int(np.argmax(scores[cand_idx]))]
    return pool.words[best]


def answer(question: AnalogyQuestion, embeddings: EmbeddingSet, pool: set[str]) -> str | None:
    """Highest-cosine pool word against vec(b) - vec(a) + vec(c).

    The question's own three words are excluded from its candidates; cosine
    against a zero-norm vector is treated as -inf so such words never win.
    Returns None when no candidates remain.
    """
    return _answer_indexed(question, embeddings, _PoolIndex(embeddings, pool))


@dataclass
class CategoryResult:
    name: str
    attempted: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.attempted if self.attempted else 0.0


@dataclass
class EvalReport:
    categories: list[CategoryResult] = field(default_factory=list)
    skipped: int = 0

    @property
    def attempted(self) -> int:
        return sum(c.attempted for c in self.categories)

    @property
    def correct(self) -> int:
        return sum(c.correct for c in self.categories)

    @property
    def accuracy(self) -> float:
        return self.correct / self.attempted if self.attempted else 0.0

    @property
    def no_valid_questions(self) -> bool:
        return self.attempted == 0


def evaluate(
    questions: Iterable[AnalogyQuestion], embeddings: EmbeddingSet, threads: int = 1
) -> EvalReport:
    """Answer every valid question and tally per-category and overall accuracy.

    Questions whose expected answer is one of their own first three words are
    unanswerable under the exclusion rule and are counted as skipped, as are
    questions left with an empty candidate set.  Categories are reported in
    first-seen order.  With threads > 1 questions are answered concurrently
    and merged in question order, so results are identical to the serial path.
    """
    questions = list(questions)
    valid = filter_valid(questions, embeddings)
    pool = _PoolIndex(embeddings, candidate_pool(valid))
    report = EvalReport(skipped=len(questions) - len(valid))
    by_name: dict[str, CategoryResult] = {}
    for q in questions:
        if q.category not in by_name:
            by_name[q.category] = CategoryResult(q.category)
            report.categories.append(by_name[q.category])
    if threads > 1 and valid:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            predictions = list(
                executor.map(lambda q: _answer_indexed(q, embeddings, pool), valid)
            )
    else:
        predictions = [_answer_indexed(q, embeddings, pool) for q in valid]
    for q, predicted in zip(valid, predictions):
        if q.expected in (q.a, q.b, q.c) or predicted is None:
            report.skipped += 1
            continue
        stats = by_name[q.category]
        stats.attempted += 1
        stats.correct += predicted == q.expected
    return report


def write_report_tsv(report: EvalReport, stream: TextIO) -> None:
    """Category rows in first-seen order, then the overall row."""
    stream.write("category\tattempted\tcorrect\taccuracy\n")
    for cat in report.categories:
        stream.write(f"{cat.name}\t{cat.attempted}\t{cat.correct}\t{cat.accuracy:.4f}\n")
    stream.write(f"overall\t{report.attempted}\t{report.correct}\t{report.accuracy:.4f}\n")


def format_report_text(report: EvalReport) -> str:
    lines = []
    width = max([len(c.name) for c in report.categories] + [len("overall")])
    header = f"{'category':<{width}}  attempted  correct  accuracy"
    lines.append(header)
    lines.append("-" * len(header))
    for cat in report.categories:
        lines.append(
            f"{cat.name:<{width}}  {cat.attempted:>9}  {cat.correct:>7}  {cat.accuracy:>8.4f}"
        )
    lines.append(
        f"{'overall':<{width}}  {report.attempted:>9}  {report.correct:>7}  {report.accuracy:>8.4f}"
    )
    lines.append(f"skipped questions: {report.skipped}")
    if report.no_valid_questions:
        lines.append("no valid questions: accuracy is reported as 0")
    return "\n".join(lines) + "\n"
