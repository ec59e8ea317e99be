"""Specification text to class diagram, and evaluation against a corpus."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from .compose import CompositionState, MergeEvent, merge_fragment
from .dataset import ModelGroup
from .metrics import DEFAULT_ENERGY, MatchReport, compare, mean_reports
from .parsing import Parser
from .patterngen import Diagnostic, PatternId, PatternTable, generate, load_patterns
from .preprocess import CoreferenceResolver, SentenceSplitter, resolve_pronouns, split_sentences
from .uml import Fragment, Kind, UmlDiagram

log = logging.getLogger(__name__)

Labeler = Callable[[str], Kind]


@dataclass(frozen=True)
class SentenceTrace:
    text: str
    label: Kind
    pattern: Optional[PatternId]
    fragment: Optional[Fragment]


@dataclass(frozen=True)
class PipelineResult:
    diagram: UmlDiagram
    sentences: tuple[SentenceTrace, ...]
    events: tuple[MergeEvent, ...]
    diagnostics: tuple[Diagnostic, ...]

    @property
    def fragments(self) -> list[Fragment]:
        return [s.fragment for s in self.sentences if s.fragment is not None]


def _labeler(classifier) -> Labeler:
    if hasattr(classifier, "predict"):
        return classifier.predict
    return classifier


def specification_sentences(text: str, resolver: Optional[CoreferenceResolver] = None,
                            splitter: Optional[SentenceSplitter] = None) -> list[str]:
    return split_sentences(resolve_pronouns(text, resolver), splitter)


def run_pipeline(text: str, classifier: Union[Labeler, object], parser: Parser,
                 table: Optional[PatternTable] = None, commutative: bool = False,
                 resolver: Optional[CoreferenceResolver] = None,
                 splitter: Optional[SentenceSplitter] = None) -> PipelineResult:
    """Pronouns, sentences, labels, fragments, composition, in that order."""
    table = table or load_patterns()
    label_of = _labeler(classifier)
    state = CompositionState()
    traces, diagnostics = [], []
    for sentence in specification_sentences(text, resolver, splitter):
        label = label_of(sentence)
        result = generate(sentence, label, parser, table)
        if result.diagnostic is not None:
            log.info("%s", result.diagnostic)
            diagnostics.append(result.diagnostic)
        if result.fragment is not None:
            state = merge_fragment(state, result.fragment, commutative)
        traces.append(SentenceTrace(sentence, label, result.pattern, result.fragment))
    return PipelineResult(state.model, tuple(traces), state.log, tuple(diagnostics))


@dataclass(frozen=True)
class GroupOutcome:
    model_id: str
    reports: tuple[MatchReport, ...] = ()
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class Evaluation:
    outcomes: tuple[GroupOutcome, ...]
    means: tuple[MatchReport, ...] = field(default=())

    @property
    def failures(self) -> list[GroupOutcome]:
        return [o for o in self.outcomes if o.failed]

    @property
    def failure_rate(self) -> float:
        return len(self.failures) / len(self.outcomes) if self.outcomes else 0.0


def evaluate_groups(groups: Sequence[ModelGroup], classifier, parser: Parser,
                    table: Optional[PatternTable] = None, energy_threshold: float = DEFAULT_ENERGY,
                    commutative: bool = False, squared: bool = True) -> Evaluation:
    """Generate each grouped specification and score it; a failing group never stops the run."""
    outcomes = []
    for g in groups:
        try:
            result = run_pipeline(g.specification, classifier, parser, table, commutative)
            if not result.fragments:
                raise ValueError("no sentence of the specification could be turned into a fragment")
            reports = compare(result.diagram, g.truth, energy_threshold, squared)
            outcomes.append(GroupOutcome(g.model_id, tuple(reports)))
        except Exception as exc:
            log.warning("group %s failed: %s", g.model_id, exc)
            outcomes.append(GroupOutcome(g.model_id, error=str(exc)))
    scored = [r for o in outcomes if not o.failed for r in o.reports]
    return Evaluation(tuple(outcomes), tuple(mean_reports(scored)))
