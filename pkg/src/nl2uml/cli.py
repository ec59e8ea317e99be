"""Command line: train, generate, evaluate, plus stage-level debugging verbs."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import classify
from .compose import compose_state
from .dataset import DatasetError, group_by_model, load_dataset
from .metrics import reports_json, reports_table
from .parsing import FixtureParser, ParseError, SpacyParser, default_parser, write_parses
from .patterngen import load_patterns
from .pipeline import evaluate_groups, run_pipeline, specification_sentences
from .plantuml import emit_plantuml
from .uml import Kind, canonical_json, diagram_to_json, fragment_from_json

log = logging.getLogger("nl2uml")

DEFAULT_MODEL = "nl2uml-model.json"
EXIT_OK, EXIT_FAIL, EXIT_NO_MODEL = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAIL):
        super().__init__(message)
        self.code = code


def sample_dataset_path() -> Path:
    return Path(str(resources.files("nl2uml") / "data" / "sample.jsonl"))


def _read_text(path: str) -> str:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}")
    if not text.strip():
        raise CliError(f"{path}: input is empty")
    return text


def _load_model(path: str) -> classify.SentenceClassifier:
    if not Path(path).exists():
        raise CliError(f"model file {path} not found; run `nl2uml train --dataset <corpus> --model {path}` first",
                       EXIT_NO_MODEL)
    try:
        return classify.load_model(path)
    except classify.ModelFileError as exc:
        raise CliError(str(exc), EXIT_NO_MODEL)


def _parser(args):
    for p in args.fixtures or []:
        if not Path(p).exists():
            raise CliError(f"fixture file {p} not found")
    return default_parser(args.fixtures or [])


def _patterns(args):
    if args.patterns and not Path(args.patterns).exists():
        raise CliError(f"pattern file {args.patterns} not found")
    try:
        return load_patterns(args.patterns)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"bad pattern file: {exc}")


def _write(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dataset(path: str):
    try:
        return load_dataset(path)
    except DatasetError as exc:
        raise CliError(str(exc))


# Verbs ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    data = _dataset(args.dataset)
    sentences = [classify.LabeledSentence(x.english, x.kind) for x in data]
    if args.all_algorithms or args.both_vectorizers:
        algos = list(classify.Algorithm) if args.all_algorithms else [classify.Algorithm.parse(args.algorithm)]
        methods = list(classify.VectorMethod) if args.both_vectorizers else [classify.VectorMethod(args.vectorizer)]
        grid = classify.accuracy_grid(sentences, args.seed, algos, methods)
        print(classify.grid_table(grid))
    try:
        result = classify.train_full(sentences, args.vectorizer, args.algorithm, args.seed)
    except ValueError as exc:
        raise CliError(str(exc))
    classify.save_model(result.model, args.model)
    print(f"{result.model.algorithm.value} + {args.vectorizer}: held-out accuracy {result.accuracy:.3f} "
          f"({result.train_size} train / {result.test_size} test, {result.seconds:.2f}s); model written to {args.model}")
    return EXIT_OK


def cmd_generate(args) -> int:
    model = _load_model(args.model)
    text = _read_text(args.input)
    table = _patterns(args)
    result = run_pipeline(text, model, _parser(args), table, args.commutative)
    for d in result.diagnostics:
        print(str(d), file=sys.stderr)
    if args.verbose:
        print(json.dumps([e.to_json() for e in result.events], indent=2), file=sys.stderr)
    if args.format == "json":
        out = json.dumps(diagram_to_json(result.diagram), indent=2)
    else:
        out = emit_plantuml(result.diagram)
    _write(out, args.output)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if not 0 < args.energy_threshold <= 1:
        raise CliError("--energy-threshold must lie in (0, 1]")
    data = _dataset(args.dataset)
    if args.gold_labels:
        # pronoun-rewritten sentences miss the table; the classifier (or CLASS) decides those
        gold = {x.english.strip(): x.kind for x in data}
        fallback = _load_model(args.model) if Path(args.model).exists() else None

        def labeler(sentence: str) -> Kind:
            if sentence.strip() in gold:
                return gold[sentence.strip()]
            return fallback.predict(sentence) if fallback else Kind.CLASS
    else:
        labeler = _load_model(args.model)
    groups = group_by_model(data)
    ev = evaluate_groups(groups, labeler, _parser(args), _patterns(args), args.energy_threshold, args.commutative)
    for o in ev.failures:
        print(f"group {o.model_id} failed: {o.error}", file=sys.stderr)
    summary = {"groups": len(ev.outcomes), "failed": len(ev.failures)}
    if args.report == "json":
        out = reports_json(ev.means, **summary)
    else:
        out = reports_table(ev.means) + f"\n{summary['groups']} groups, {summary['failed']} failed"
    _write(out, args.output)
    return EXIT_FAIL if ev.failure_rate > 0.10 else EXIT_OK


def cmd_classify(args) -> int:
    model = _load_model(args.model)
    text = _read_text(args.input)
    lines = [f"{model.predict(s).value}\t{s}" for s in specification_sentences(text)]
    _write("\n".join(lines), args.output)
    return EXIT_OK


def cmd_compose(args) -> int:
    text = _read_text(args.input)
    frags = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.strip():
            try:
                frags.append(fragment_from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise CliError(f"{args.input}:{lineno}: bad fragment ({exc})")
    state = compose_state(frags, args.commutative)
    if args.verbose:
        print(state.log_json(), file=sys.stderr)
    _write(canonical_json(state.model) if args.format == "json" else emit_plantuml(state.model), args.output)
    return EXIT_OK


def cmd_record_parses(args) -> int:
    """Parse sentences with a live spaCy model and store them as fixtures."""
    sentences: list[str] = []
    for path in args.sentences or []:
        sentences.extend(ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip())
    for path in args.dataset or []:
        data = _dataset(path)
        sentences.extend(x.english.strip() for x in data)
        for g in group_by_model(data):
            sentences.extend(specification_sentences(g.specification))
    try:
        parser = SpacyParser(model=args.spacy_model)
    except Exception as exc:
        raise CliError(f"cannot load spaCy model {args.spacy_model}: {exc}")
    seen, parses = set(), []
    for s in sentences:
        if s in seen:
            continue
        seen.add(s)
        try:
            parses.append(parser.parse(s))
        except ParseError as exc:
            print(str(exc), file=sys.stderr)
    n = write_parses(parses, args.output)
    print(f"{n} parses written to {args.output} ({parser.version})")
    return EXIT_OK


# Argument parsing ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nl2uml", description="Turn English software specifications into UML class diagrams.")
    ap.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model=True, pipeline=False):
        if model:
            p.add_argument("--model", default=DEFAULT_MODEL, help=f"classifier model file (default {DEFAULT_MODEL})")
        p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
        p.add_argument("--output", help="write the result here instead of stdout")
        if pipeline:
            p.add_argument("--patterns", help="pattern definition file (default: bundled)")
            p.add_argument("--fixtures", action="append", help="extra recorded parses (JSON lines); repeatable")
            p.add_argument("--commutative", action="store_true", help="also catch conflicts in reverse arrival order")

    p = sub.add_parser("train", help="train the sentence classifier")
    common(p)
    p.add_argument("--dataset", default=str(sample_dataset_path()), help="labeled fragments (JSON lines)")
    p.add_argument("--vectorizer", choices=[m.value for m in classify.VectorMethod], default="tfidf")
    p.add_argument("--algorithm", default="bernoulli_nb", help="one of " + ", ".join(a.value for a in classify.Algorithm))
    p.add_argument("--all-algorithms", action="store_true", help="also print held-out accuracy of every algorithm")
    p.add_argument("--both-vectorizers", action="store_true", help="grid over count and tf-idf")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="specification text to a class diagram")
    common(p, pipeline=True)
    p.add_argument("input", help="specification text file, or - for stdin")
    p.add_argument("--format", choices=["puml", "json"], default="puml")
    p.add_argument("--verbose", action="store_true", help="print the composition log to stderr")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score generated diagrams against a labeled corpus")
    common(p, pipeline=True)
    p.add_argument("--dataset", default=str(sample_dataset_path()))
    p.add_argument("--report", choices=["json", "table"], default="table")
    p.add_argument("--energy-threshold", type=float, default=0.9, help="eigenvalue energy kept by the connectivity score")
    p.add_argument("--gold-labels", action="store_true", help="use the corpus labels instead of the classifier")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("classify", help="print the label of every sentence")
    common(p)
    p.add_argument("input")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("compose", help="merge fragments given as JSON lines")
    common(p, model=False)
    p.add_argument("input")
    p.add_argument("--format", choices=["puml", "json"], default="puml")
    p.add_argument("--commutative", action="store_true")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("record-parses", help="record spaCy parses as replayable fixtures")
    common(p, model=False)
    p.add_argument("--sentences", action="append", help="text file, one sentence per line; repeatable")
    p.add_argument("--dataset", action="append", help="labeled corpus whose sentences to record; repeatable")
    p.add_argument("--spacy-model", default="en_core_web_sm")
    p.set_defaults(func=cmd_record_parses)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
