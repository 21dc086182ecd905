"""Per-edge stochastic training of word vectors and pattern matrices.

Each word u gets a vector and each pattern l a square matrix; an edge
(u, v, l, w) is scored by the bilinear form vec(u)' mat(l) vec(v) and incurs
half the squared residual against w.  Every edge visit updates the source
vector, the target vector, and the pattern matrix with per-coordinate AdaGrad
steps computed from the parameter values at edge entry, then shifts the
matrix diagonal by a small constant.

The inner sweep has two interchangeable implementations: a plain Python
scalar loop (the reference semantics) and the same loop compiled with numba
when it is installed.  Both perform identical IEEE-754 operations in the same
order, so results are bit-identical across the two paths and across runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, TextIO

import numpy as np

from .graph import ParseError, RelationalGraph, Vocabulary

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

MATRIX_FILE_HEADER = "#relgraph-matrices v1"
CHECKPOINT_HEADER = "#relgraph-checkpoint v1"


class TrainingDivergedError(RuntimeError):
    """Raised when an epoch produces a non-finite total loss."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged: non-finite loss after epoch {epoch}")
        self.epoch = epoch


@dataclass
class HyperParams:
    dim: int = 200
    epochs: int = 100
    eta0: float = 0.0001
    delta: float = 0.001
    seed: int = 1
    shuffle: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.eta0 > 0:
            raise ValueError(f"eta0 must be > 0, got {self.eta0}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass
class Model:
    word_vecs: np.ndarray     # (|V|, d)
    pattern_mats: np.ndarray  # (|L|, d, d)
    acc_words: np.ndarray     # accumulated squared gradients, same shape as word_vecs
    acc_mats: np.ndarray      # same shape as pattern_mats
    epoch: int = 0

    @property
    def dim(self) -> int:
        return self.word_vecs.shape[1]


@dataclass
class TrainReport:
    initial_loss: float
    epoch_losses: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else self.initial_loss


class EdgeArrays(NamedTuple):
    sources: np.ndarray
    targets: np.ndarray
    labels: np.ndarray
    weights: np.ndarray


def edge_arrays(graph: RelationalGraph) -> EdgeArrays:
    return EdgeArrays(
        np.array([e.source for e in graph.edges], dtype=np.int64),
        np.array([e.target for e in graph.edges], dtype=np.int64),
        np.array([e.label for e in graph.edges], dtype=np.int64),
        np.array([e.weight for e in graph.edges], dtype=np.float64),
    )


def init_model(graph: RelationalGraph, params: HyperParams) -> Model:
    """Standard-normal word vectors and pattern matrices from a seeded generator.

    Word vectors are drawn first, then pattern matrices, so models for the
    same (graph shape, seed, dim) are bit-identical.
    """
    if len(graph.vocab) == 0:
        raise ValueError("cannot initialise a model for a graph with an empty vocabulary")
    rng = np.random.default_rng(params.seed)
    word_vecs = rng.standard_normal((len(graph.vocab), params.dim))
    pattern_mats = rng.standard_normal((len(graph.patterns), params.dim, params.dim))
    return Model(word_vecs, pattern_mats, np.zeros_like(word_vecs), np.zeros_like(pattern_mats))


def _check_indices(model: Model, u: int, label: int, v: int) -> None:
    n_words = model.word_vecs.shape[0]
    n_mats = model.pattern_mats.shape[0]
    if not (0 <= u < n_words and 0 <= v < n_words):
        raise ValueError(f"word index out of range: ({u}, {v}) with {n_words} words")
    if not 0 <= label < n_mats:
        raise ValueError(f"pattern index {label} out of range with {n_mats} matrices")


def predict(model: Model, u: int, label: int, v: int) -> float:
    """Bilinear score vec(u)' mat(label) vec(v)."""
    _check_indices(model, u, label, v)
    return float(model.word_vecs[u] @ model.pattern_mats[label] @ model.word_vecs[v])


def edge_loss(model: Model, edge) -> float:
    """Half the squared residual of one edge."""
    residual = predict(model, edge.source, edge.label, edge.target) - edge.weight
    return 0.5 * residual * residual


def total_loss(model: Model, graph: RelationalGraph) -> float:
    """Sum of per-edge losses over the whole edge list."""
    return float(np.sum(_edge_losses(model, edge_arrays(graph))))


def _edge_losses(model: Model, arrays: EdgeArrays) -> np.ndarray:
    sources, targets, labels, weights = arrays
    n_edges = len(weights)
    preds = np.empty(n_edges)
    if n_edges:
        order = np.argsort(labels, kind="stable")
        sorted_labels = labels[order]
        starts = np.flatnonzero(np.r_[True, sorted_labels[1:] != sorted_labels[:-1]])
        bounds = np.append(starts, n_edges)
        for k in range(len(starts)):
            idx = order[bounds[k]:bounds[k + 1]]
            left = model.word_vecs[sources[idx]] @ model.pattern_mats[sorted_labels[bounds[k]]]
            preds[idx] = np.einsum("ij,ij->i", left, model.word_vecs[targets[idx]])
    residuals = preds - weights
    return 0.5 * residuals * residuals


def edge_gradients(model: Model, edge) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient blocks of the edge loss w.r.t. the source vector, target vector, and matrix.

    With residual r = score - weight these are r*mat@vec(v), r*mat.T@vec(u),
    and r*outer(vec(u), vec(v)); entry (i, j) of the matrix block is
    r*vec(u)[i]*vec(v)[j].
    """
    _check_indices(model, edge.source, edge.label, edge.target)
    x_u = model.word_vecs[edge.source]
    x_v = model.word_vecs[edge.target]
    mat = model.pattern_mats[edge.label]
    residual = float(x_u @ mat @ x_v) - edge.weight
    return residual * (mat @ x_v), residual * (mat.T @ x_u), residual * np.outer(x_u, x_v)


def adagrad_step(value, grad, accumulator, eta0: float):
    """One AdaGrad update: acc' = acc + grad^2, value' = value - eta0*grad/sqrt(acc').

    The root includes the current gradient.  A zero gradient leaves both the
    value and the accumulator unchanged (the 0/0 case is defined as a no-op,
    which also covers gradients whose square underflows to zero).
    Accepts scalars or arrays; arrays are updated coordinate-wise.
    """
    value_arr = np.asarray(value, dtype=np.float64)
    grad_arr = np.asarray(grad, dtype=np.float64)
    acc_arr = np.asarray(accumulator, dtype=np.float64)
    new_acc = acc_arr + grad_arr * grad_arr
    denom = np.sqrt(new_acc)
    step = np.divide(
        eta0 * grad_arr,
        denom,
        out=np.zeros_like(denom),
        where=(grad_arr != 0.0) & (denom > 0.0),
    )
    new_value = value_arr - step
    if np.ndim(value) == 0:
        return float(new_value), float(new_acc)
    return new_value, new_acc


def shift_diagonal(mat: np.ndarray, delta: float) -> np.ndarray:
    """mat + delta*I; raises every eigenvalue of the symmetric part by delta."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    out = np.array(mat, dtype=np.float64, copy=True)
    out[np.diag_indices(out.shape[0])] += delta
    return out


def _sweep_impl(word_vecs, pattern_mats, acc_words, acc_mats, sources, targets, labels, weights, order, eta0, delta):
    """One pass over the edges in `order`, updating parameters in place.

    Must stay expressible in nopython mode; the same code object is the
    reference implementation when numba is unavailable.
    """
    d = word_vecs.shape[1]
    left = np.empty(d)
    grad_v = np.empty(d)
    u_old = np.empty(d)
    v_old = np.empty(d)
    for k in range(order.shape[0]):
        e = order[k]
        u = sources[e]
        v = targets[e]
        l = labels[e]
        pred = 0.0
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += pattern_mats[l, i, j] * word_vecs[v, j]
            left[i] = s
            pred += word_vecs[u, i] * s
        residual = pred - weights[e]
        if residual != 0.0:
            for j in range(d):
                s = 0.0
                for i in range(d):
                    s += pattern_mats[l, i, j] * word_vecs[u, i]
                grad_v[j] = residual * s
            for i in range(d):
                u_old[i] = word_vecs[u, i]
                v_old[i] = word_vecs[v, i]
            for i in range(d):
                g = residual * left[i]
                if g != 0.0:
                    acc_words[u, i] += g * g
                    if acc_words[u, i] > 0.0:
                        word_vecs[u, i] -= eta0 * g / math.sqrt(acc_words[u, i])
            for i in range(d):
                g = grad_v[i]
                if g != 0.0:
                    acc_words[v, i] += g * g
                    if acc_words[v, i] > 0.0:
                        word_vecs[v, i] -= eta0 * g / math.sqrt(acc_words[v, i])
            for i in range(d):
                for j in range(d):
                    g = residual * u_old[i] * v_old[j]
                    if g != 0.0:
                        acc_mats[l, i, j] += g * g
                        if acc_mats[l, i, j] > 0.0:
                            pattern_mats[l, i, j] -= eta0 * g / math.sqrt(acc_mats[l, i, j])
        if delta != 0.0:
            for i in range(d):
                pattern_mats[l, i, i] += delta


if _HAVE_NUMBA:
    _sweep = njit(cache=True)(_sweep_impl)
else:  # pragma: no cover
    _sweep = _sweep_impl


def _epoch_order(n_edges: int, params: HyperParams, epoch: int) -> np.ndarray:
    if params.shuffle:
        return np.random.default_rng([params.seed, epoch]).permutation(n_edges).astype(np.int64)
    return np.arange(n_edges, dtype=np.int64)


def train(
    graph: RelationalGraph,
    params: HyperParams,
    progress: Callable[[int, float, float], None] | None = None,
    start_model: Model | None = None,
) -> tuple[Model, TrainReport]:
    """Run the per-edge AdaGrad sweep for `params.epochs` epochs.

    Each epoch visits every edge (shuffled by a generator derived from the
    seed and the epoch number when shuffling is on, else in insertion order)
    and records the total loss afterwards.  Passing a `start_model` loaded
    from a checkpoint resumes at its stored epoch and continues bit-identically
    with the run that produced it.
    """
    if len(graph.vocab) == 0:
        raise ValueError("cannot train on a graph with an empty vocabulary")
    arrays = edge_arrays(graph)
    if start_model is None:
        model = init_model(graph, params)
    else:
        model = start_model
        expected = (len(graph.vocab), params.dim)
        if model.word_vecs.shape != expected:
            raise ValueError(
                f"model shape {model.word_vecs.shape} does not match graph/params {expected}"
            )
    report = TrainReport(initial_loss=float(np.sum(_edge_losses(model, arrays))))
    if progress is not None:
        progress(model.epoch, report.initial_loss, 0.0)
    for epoch in range(model.epoch + 1, params.epochs + 1):
        started = time.perf_counter()
        order = _epoch_order(len(arrays.weights), params, epoch)
        _sweep(
            model.word_vecs,
            model.pattern_mats,
            model.acc_words,
            model.acc_mats,
            arrays.sources,
            arrays.targets,
            arrays.labels,
            arrays.weights,
            order,
            params.eta0,
            params.delta,
        )
        loss = float(np.sum(_edge_losses(model, arrays)))
        seconds = time.perf_counter() - started
        if not math.isfinite(loss):
            raise TrainingDivergedError(epoch)
        model.epoch = epoch
        report.epoch_losses.append(loss)
        report.epoch_seconds.append(seconds)
        if progress is not None:
            progress(epoch, loss, seconds)
    return model, report


def _write_vector_rows(stream: TextIO, vocab: Vocabulary, rows: np.ndarray, fmt) -> None:
    n_rows, dim = rows.shape
    stream.write(f"{n_rows} {dim}\n")
    for wid in range(n_rows):
        stream.write(vocab.word(wid) + " " + " ".join(fmt(x) for x in rows[wid]) + "\n")


def _write_matrix_rows(stream: TextIO, mats: np.ndarray, fmt) -> None:
    for pid in range(mats.shape[0]):
        stream.write(f"pattern_id {pid}\n")
        for row in mats[pid]:
            stream.write(" ".join(fmt(x) for x in row) + "\n")


def _fixed(x: float) -> str:
    return f"{x:.6f}"


def _exact(x: float) -> str:
    return repr(float(x))


def export_embeddings(model: Model, vocab: Vocabulary, stream: TextIO) -> None:
    """Text embeddings: a "count dim" header, then one "word v1 .. vd" row per word."""
    _write_vector_rows(stream, vocab, model.word_vecs, _fixed)


def export_pattern_matrices(model: Model, stream: TextIO) -> None:
    stream.write(f"{MATRIX_FILE_HEADER} d={model.dim}\n")
    _write_matrix_rows(stream, model.pattern_mats, _fixed)


def save_checkpoint(model: Model, vocab: Vocabulary, stream: TextIO) -> None:
    """Full state at exact precision so a resumed run continues bit-identically."""
    stream.write(f"{CHECKPOINT_HEADER} epoch={model.epoch}\n")
    _write_vector_rows(stream, vocab, model.word_vecs, _exact)
    stream.write(f"{MATRIX_FILE_HEADER} d={model.dim}\n")
    _write_matrix_rows(stream, model.pattern_mats, _exact)
    stream.write("#acc words\n")
    _write_vector_rows(stream, vocab, model.acc_words, _exact)
    stream.write("#acc matrices\n")
    _write_matrix_rows(stream, model.acc_mats, _exact)


class _LineReader:
    def __init__(self, stream: TextIO):
        self.stream = stream
        self.lineno = 0

    def next(self, what: str) -> str:
        line = self.stream.readline()
        if not line:
            raise ParseError(f"unexpected end of file while reading {what}", line=self.lineno + 1)
        self.lineno += 1
        return line.rstrip("\n")


def _read_vector_rows(reader: _LineReader, vocab: Vocabulary) -> np.ndarray:
    header = reader.next("vector block header").split(" ")
    if len(header) != 2:
        raise ParseError("expected 'count dim' header", line=reader.lineno)
    try:
        n_rows, dim = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError("non-integer vector block header", line=reader.lineno) from None
    rows = np.empty((n_rows, dim))
    for wid in range(n_rows):
        fields = reader.next("vector row").split(" ")
        if len(fields) != dim + 1:
            raise ParseError(f"expected a word and {dim} values", line=reader.lineno)
        if fields[0] != vocab.word(wid):
            raise ParseError(
                f"word {fields[0]!r} does not match vocabulary entry {vocab.word(wid)!r}",
                line=reader.lineno,
            )
        rows[wid] = [float(x) for x in fields[1:]]
    return rows


def _read_matrix_rows(reader: _LineReader, n_mats: int, dim: int) -> np.ndarray:
    mats = np.empty((n_mats, dim, dim))
    for pid in range(n_mats):
        tag = reader.next("pattern matrix tag")
        if tag != f"pattern_id {pid}":
            raise ParseError(f"expected 'pattern_id {pid}', got {tag!r}", line=reader.lineno)
        for i in range(dim):
            fields = reader.next("matrix row").split(" ")
            if len(fields) != dim:
                raise ParseError(f"expected {dim} values", line=reader.lineno)
            mats[pid, i] = [float(x) for x in fields]
    return mats


def load_checkpoint(stream: TextIO, vocab: Vocabulary, n_patterns: int) -> Model:
    reader = _LineReader(stream)
    header = reader.next("checkpoint header")
    if not header.startswith(CHECKPOINT_HEADER + " epoch="):
        raise ParseError(f"expected checkpoint header, got {header!r}", line=1)
    try:
        epoch = int(header.split("epoch=", 1)[1])
    except ValueError:
        raise ParseError("non-integer epoch in checkpoint header", line=1) from None
    word_vecs = _read_vector_rows(reader, vocab)
    dim = word_vecs.shape[1]
    mat_header = reader.next("matrix block header")
    if mat_header != f"{MATRIX_FILE_HEADER} d={dim}":
        raise ParseError(f"unexpected matrix block header {mat_header!r}", line=reader.lineno)
    pattern_mats = _read_matrix_rows(reader, n_patterns, dim)
    if reader.next("accumulator marker") != "#acc words":
        raise ParseError("expected '#acc words' marker", line=reader.lineno)
    acc_words = _read_vector_rows(reader, vocab)
    if reader.next("accumulator marker") != "#acc matrices":
        raise ParseError("expected '#acc matrices' marker", line=reader.lineno)
    acc_mats = _read_matrix_rows(reader, n_patterns, dim)
    return Model(word_vecs, pattern_mats, acc_words, acc_mats, epoch=epoch)
