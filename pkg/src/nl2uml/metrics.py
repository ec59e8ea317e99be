"""Comparing a predicted class diagram with its ground truth.

Three strictness levels: exact (names, attributes and multiplicities),
relaxed (class names only, relationship multiplicities ignored) and general
(relaxed class scores plus two structural scores over the undirected graph).
"""
from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import expit

from .uml import UmlDiagram

log = logging.getLogger(__name__)

DEFAULT_ENERGY = 0.9


class MatchLevel(enum.Enum):
    EXACT = "exact"
    RELAXED = "relaxed"
    GENERAL = "general"


@dataclass(frozen=True)
class MatchReport:
    level: MatchLevel
    class_precision: float
    class_recall: float
    class_f1: float
    rel_precision: Optional[float] = None
    rel_recall: Optional[float] = None
    rel_f1: Optional[float] = None
    connectivity: Optional[float] = None
    size_score: Optional[float] = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["level"] = self.level.value
        return d


def f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ratio(hits: int, denom: int, other: int) -> float:
    # an empty side scores 1 only against another empty side
    if denom == 0:
        return 1.0 if other == 0 else 0.0
    return hits / denom


def _prf(hits: int, n_pred: int, n_truth: int) -> tuple[float, float, float]:
    p = _ratio(hits, n_pred, n_truth)
    r = _ratio(hits, n_truth, n_pred)
    return p, r, f1(p, r)


def _type_key(t: Optional[str]) -> Optional[str]:
    return t.casefold() if t else None


def _class_signature(c, with_attributes: bool):
    if not with_attributes:
        return c.key
    return c.key, frozenset((a.key, _type_key(a.type_name)) for a in c.attributes)


def _matched_classes(pred: UmlDiagram, truth: UmlDiagram, with_attributes: bool) -> set[str]:
    """Keys of classes present on both sides under the level's rule."""
    t = {c.key: _class_signature(c, with_attributes) for c in truth.classes}
    return {c.key for c in pred.classes if c.key in t and t[c.key] == _class_signature(c, with_attributes)}


def _matched_relationships(pred: UmlDiagram, truth: UmlDiagram, classes: set[str], with_multiplicity: bool) -> int:
    def sig(r):
        m = (r.multiplicity.lower, r.multiplicity.upper) if r.multiplicity else None
        return (r.key, m) if with_multiplicity else r.key

    truth_sigs = {sig(r) for r in truth.relationships if r.key[0] in classes and r.key[1] in classes}
    return sum(1 for r in pred.relationships if sig(r) in truth_sigs)


def _score(pred: UmlDiagram, truth: UmlDiagram, level: MatchLevel) -> MatchReport:
    strict = level is MatchLevel.EXACT
    classes = _matched_classes(pred, truth, strict)
    cp, cr, cf = _prf(len(classes), len(pred.classes), len(truth.classes))
    hits = _matched_relationships(pred, truth, classes, strict)
    rp, rr, rf = _prf(hits, len(pred.relationships), len(truth.relationships))
    return MatchReport(level, cp, cr, cf, rp, rr, rf)


def exact_match(predicted: UmlDiagram, truth: UmlDiagram) -> MatchReport:
    return _score(predicted, truth, MatchLevel.EXACT)


def relaxed_match(predicted: UmlDiagram, truth: UmlDiagram) -> MatchReport:
    return _score(predicted, truth, MatchLevel.RELAXED)


# Graph scores --------------------------------------------------------------------

@dataclass(frozen=True)
class UndirectedGraph:
    node_count: int
    edges: frozenset  # of (i, j) with i <= j

    def __post_init__(self):
        if self.node_count < 0:
            raise ValueError("node count must be non-negative")
        norm = set()
        for e in self.edges:
            i, j = sorted(e)
            if not 0 <= i <= j < self.node_count:
                raise ValueError(f"edge {e} outside 0..{self.node_count - 1}")
            norm.add((i, j))
        object.__setattr__(self, "edges", frozenset(norm))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def laplacian(self) -> np.ndarray:
        """Degree minus adjacency; a self-loop adds one to its node's degree."""
        n = self.node_count
        lap = np.zeros((n, n))
        for i, j in self.edges:
            if i == j:
                lap[i, i] += 1
            else:
                lap[i, j] -= 1
                lap[j, i] -= 1
                lap[i, i] += 1
                lap[j, j] += 1
        return lap


def to_undirected_graph(diagram: UmlDiagram) -> UndirectedGraph:
    index = {c.key: i for i, c in enumerate(diagram.classes)}
    edges = set()
    for r in diagram.relationships:
        a, b = index[r.key[0]], index[r.key[1]]
        edges.add((min(a, b), max(a, b)))
    return UndirectedGraph(len(diagram.classes), frozenset(edges))


def laplacian_spectrum(g: UndirectedGraph) -> np.ndarray:
    """Laplacian eigenvalues, largest first."""
    if g.node_count == 0:
        return np.zeros(0)
    values = np.linalg.eigvalsh(g.laplacian())
    values = np.clip(values, 0.0, None)
    return np.sort(values)[::-1]


def energy_count(spectrum: np.ndarray, threshold: float = DEFAULT_ENERGY) -> int:
    """Smallest k whose top-k eigenvalues carry ``threshold`` of the total."""
    if not 0 < threshold <= 1:
        raise ValueError("energy threshold must lie in (0, 1]")
    total = float(spectrum.sum())
    if total <= 0:
        return 1  # any k reaches a zero total

    running = np.cumsum(spectrum)
    k = int(np.searchsorted(running, threshold * total - 1e-12 * total)) + 1
    return max(1, min(k, len(spectrum)))


def spectral_distance(g1: UndirectedGraph, g2: UndirectedGraph, threshold: float = DEFAULT_ENERGY,
                      squared: bool = True) -> float:
    if g1.node_count == 0 or g2.node_count == 0:
        raise ValueError("spectral comparison needs graphs with at least one node")
    s1, s2 = laplacian_spectrum(g1), laplacian_spectrum(g2)
    k = min(energy_count(s1, threshold), energy_count(s2, threshold))
    a = np.zeros(k)
    b = np.zeros(k)
    a[: min(k, len(s1))] = s1[:k]
    b[: min(k, len(s2))] = s2[:k]
    x = float(np.sum((a - b) ** 2))
    return x if squared else math.sqrt(x)


def squash(x: float) -> float:
    """Map a distance in [0, inf) to (0, 1]; 0 goes to 1."""
    return 2.0 * (1.0 - float(expit(x)))


def connectivity_similarity(g1: UndirectedGraph, g2: UndirectedGraph, threshold: float = DEFAULT_ENERGY,
                            squared: bool = True) -> float:
    return squash(spectral_distance(g1, g2, threshold, squared))


def size_score_of_distance(x: float) -> float:
    return 1.0 - x / math.sqrt(2.0)


def size_difference_score(g1: UndirectedGraph, g2: UndirectedGraph) -> float:
    vecs = []
    for g in (g1, g2):
        v = np.array([g.node_count, g.edge_count], dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            log.warning("size score of an empty graph is defined as 0")
            return 0.0
        vecs.append(v / norm)
    x = float(np.linalg.norm(vecs[0] - vecs[1]))
    return min(1.0, max(0.0, size_score_of_distance(x)))


def general_match(predicted: UmlDiagram, truth: UmlDiagram, threshold: float = DEFAULT_ENERGY,
                  squared: bool = True) -> MatchReport:
    relaxed = relaxed_match(predicted, truth)
    g1, g2 = to_undirected_graph(predicted), to_undirected_graph(truth)
    if g1.node_count and g2.node_count:
        conn = connectivity_similarity(g1, g2, threshold, squared)
    else:
        log.warning("connectivity of an empty diagram is scored %s", "1" if g1.node_count == g2.node_count else "0")
        conn = 1.0 if g1.node_count == g2.node_count else 0.0
    return MatchReport(MatchLevel.GENERAL, relaxed.class_precision, relaxed.class_recall, relaxed.class_f1,
                       connectivity=conn, size_score=size_difference_score(g1, g2))


def compare(predicted: UmlDiagram, truth: UmlDiagram, threshold: float = DEFAULT_ENERGY,
            squared: bool = True) -> list[MatchReport]:
    return [exact_match(predicted, truth), relaxed_match(predicted, truth),
            general_match(predicted, truth, threshold, squared)]


# Aggregation and output ------------------------------------------------------------

_FIELDS = ("class_precision", "class_recall", "class_f1", "rel_precision", "rel_recall", "rel_f1",
           "connectivity", "size_score")


def mean_reports(reports: Iterable[MatchReport]) -> list[MatchReport]:
    """Arithmetic mean per level; fields a level does not define stay None."""
    by_level: dict[MatchLevel, list[MatchReport]] = {}
    for r in reports:
        by_level.setdefault(r.level, []).append(r)
    out = []
    for level in MatchLevel:
        rows = by_level.get(level)
        if not rows:
            continue
        values = {}
        for name in _FIELDS:
            xs = [getattr(r, name) for r in rows if getattr(r, name) is not None]
            values[name] = sum(xs) / len(xs) if xs else None
        out.append(MatchReport(level, **values))
    return out


def reports_json(reports: Sequence[MatchReport], **extra) -> str:
    return json.dumps({"levels": [r.to_json() for r in reports], **extra}, indent=2)


def reports_table(reports: Sequence[MatchReport]) -> str:
    header = ["level", "cls P", "cls R", "cls F1", "rel P", "rel R", "rel F1", "connect", "size"]
    rows = [header]
    for r in reports:
        rows.append([r.level.value] + ["-" if getattr(r, f) is None else f"{getattr(r, f):.3f}" for f in _FIELDS])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(row, widths)))
             for row in rows]
    return "\n".join(lines)
