"""Co-occurrence weighting measures and graph materialization.

Five measures turn triple counts h(u, v, l) into edge weights.  All
logarithms are natural; each measure is a pure function of the finalized
counts.  Non-positive weights are dropped when the graph is built: a zero
target is indistinguishable from an absent edge under the squared loss, and a
negative target would invert the association being modelled.
"""

from __future__ import annotations

import math
from enum import Enum

from .corpus import TripleCounts
from .graph import RelationalGraph


class WeightMeasure(Enum):
    RAW = "raw"
    PPMI = "ppmi"
    LMI = "lmi"
    LOG = "log"
    ENT = "ent"

    @classmethod
    def from_name(cls, name: str) -> "WeightMeasure":
        try:
            return cls(name.lower())
        except ValueError:
            valid = "|".join(m.value for m in cls)
            raise ValueError(f"unknown weighting measure {name!r} (expected {valid})") from None


def _require_triple(counts: TripleCounts, u: int, v: int, label: int) -> int:
    h = counts.count(u, v, label)
    if h < 1:
        raise ValueError(f"triple ({u}, {v}, {label}) has no recorded count")
    return h


def _pmi(counts: TripleCounts, u: int, v: int, label: int) -> float:
    h = _require_triple(counts, u, v, label)
    return math.log(
        (h * counts.total) / (counts.pair_total(u, v) * counts.label_total(label))
    )


def weight_raw(counts: TripleCounts, u: int, v: int, label: int) -> float:
    """The sentence count h(u, v, l) itself."""
    return float(_require_triple(counts, u, v, label))


def weight_ppmi(counts: TripleCounts, u: int, v: int, label: int) -> float:
    """max(0, ln(h(u,v,l) * h(*,*,*) / (h(u,v,*) * h(*,*,l))))."""
    return max(0.0, _pmi(counts, u, v, label))


def weight_lmi(counts: TripleCounts, u: int, v: int, label: int) -> float:
    """(h(u,v,l) / h(*,*,*)) * pmi; unlike PPMI this is not clipped at zero."""
    h = _require_triple(counts, u, v, label)
    return (h / counts.total) * _pmi(counts, u, v, label)


def weight_log(counts: TripleCounts, u: int, v: int, label: int) -> float:
    """ln h(u,v,l); finite because counts are >= 1 by construction."""
    return math.log(_require_triple(counts, u, v, label))


def label_entropy(counts: TripleCounts, label: int) -> float:
    """Entropy of the pattern's distribution over the ordered pairs it occurs with."""
    total = counts.label_total(label)
    if total == 0:
        raise ValueError(f"pattern {label} has no recorded counts")
    h_sum = 0.0
    for (u, v, l), n in counts.counts.items():
        if l == label:
            p = n / total
            h_sum -= p * math.log(p)
    return h_sum


def weight_ent(counts: TripleCounts, u: int, v: int, label: int) -> float:
    """h(u,v,l) * exp(-H(l)): generic patterns spread over many pairs get damped.

    Reduces to the raw count for a pattern seen with a single pair (H = 0).
    """
    h = _require_triple(counts, u, v, label)
    return h * math.exp(-label_entropy(counts, label))


_MEASURES = {
    WeightMeasure.RAW: weight_raw,
    WeightMeasure.PPMI: weight_ppmi,
    WeightMeasure.LMI: weight_lmi,
    WeightMeasure.LOG: weight_log,
    WeightMeasure.ENT: weight_ent,
}


def weight_for(counts: TripleCounts, u: int, v: int, label: int, measure: WeightMeasure) -> float:
    return _MEASURES[measure](counts, u, v, label)


def build_graph(counts: TripleCounts, measure: WeightMeasure) -> RelationalGraph:
    """One edge per triple with a positive weight under `measure`.

    Vocabulary and pattern tables of the result contain only entities that
    appear in surviving edges, re-interned in edge order.
    """
    graph = RelationalGraph()
    damp: dict[int, float] = {}
    for (u, v, label), _ in counts.counts.items():
        if measure is WeightMeasure.ENT:
            if label not in damp:
                damp[label] = math.exp(-label_entropy(counts, label))
            weight = counts.count(u, v, label) * damp[label]
        else:
            weight = weight_for(counts, u, v, label, measure)
        if weight <= 0.0:
            continue
        source = graph.vocab.intern(counts.vocab.word(u))
        target = graph.vocab.intern(counts.vocab.word(v))
        pid = graph.patterns.intern(counts.patterns.pattern(label))
        graph.add_edge(source, target, pid, weight)
    return graph
