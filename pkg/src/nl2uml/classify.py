"""Sentence classifier: does a sentence describe a class or a relationship?

Vocabulary and idf weights are learned with scikit-learn and then applied by
:meth:`Vectorizer.transform`, which only needs the stored table, so a saved
model carries its vectorizer as plain JSON.
"""
from __future__ import annotations

import base64
import enum
import hashlib
import json
import pickle
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from sklearn.ensemble import AdaBoostClassifier, RandomForestClassifier
from sklearn.feature_extraction.text import CountVectorizer, TfidfVectorizer
from sklearn.linear_model import LogisticRegression
from sklearn.naive_bayes import BernoulliNB, MultinomialNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.svm import SVC, LinearSVC

from .dataset import stratified_split
from .uml import Kind

FORMAT = "nl2uml-classifier"
FORMAT_VERSION = 1
TOKEN_PATTERN = r"(?u)[^\W_]+"
_TOKEN = re.compile(TOKEN_PATTERN)


class VectorMethod(enum.Enum):
    COUNT = "count"
    TFIDF = "tfidf"


class Algorithm(enum.Enum):
    BERNOULLI_NB = "bernoulli_nb"
    MULTINOMIAL_NB = "multinomial_nb"
    KNN = "knn"
    LINEAR_SVC = "linear_svc"
    SVC = "svc"
    ADA = "ada"
    RANDOM_FOREST = "random_forest"
    LOGISTIC = "logistic"

    @classmethod
    def parse(cls, value: Union[str, "Algorithm"]) -> "Algorithm":
        if isinstance(value, Algorithm):
            return value
        v = value.strip().lower().replace("-", "_")
        for a in cls:
            if v in (a.value, a.name.lower()):
                return a
        raise ValueError(f"unknown algorithm {value!r}; choose from {[a.value for a in cls]}")


def make_estimator(algorithm: Algorithm, seed: int = 0):
    """Library defaults, Laplace smoothing for both naive Bayes variants."""
    if algorithm is Algorithm.BERNOULLI_NB:
        return BernoulliNB(alpha=1.0)
    if algorithm is Algorithm.MULTINOMIAL_NB:
        return MultinomialNB(alpha=1.0)
    if algorithm is Algorithm.KNN:
        return KNeighborsClassifier()
    if algorithm is Algorithm.LINEAR_SVC:
        return LinearSVC(random_state=seed)
    if algorithm is Algorithm.SVC:
        return SVC(random_state=seed)
    if algorithm is Algorithm.ADA:
        return AdaBoostClassifier(random_state=seed)
    if algorithm is Algorithm.RANDOM_FOREST:
        return RandomForestClassifier(random_state=seed)
    # more iterations than the library default so small corpora converge
    return LogisticRegression(max_iter=1000)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Vectorizer:
    method: VectorMethod
    vocabulary: dict  # token -> column
    idf_weights: Optional[tuple] = None

    def __post_init__(self):
        cols = sorted(self.vocabulary.values())
        if cols != list(range(len(cols))):
            raise ValueError("vocabulary columns must be dense 0..V-1")
        if (self.idf_weights is not None) != (self.method is VectorMethod.TFIDF):
            raise ValueError("idf weights are present exactly for tf-idf vectorizers")
        if self.idf_weights is not None and len(self.idf_weights) != len(cols):
            raise ValueError("one idf weight per vocabulary column")

    @property
    def size(self) -> int:
        return len(self.vocabulary)

    def counts(self, texts: Iterable[str]) -> sparse.csr_matrix:
        rows, cols, vals = [], [], []
        n = 0
        for r, text in enumerate(texts):
            n = r + 1
            tally: dict[int, int] = {}
            for tok in tokenize(text):
                j = self.vocabulary.get(tok)
                if j is not None:
                    tally[j] = tally.get(j, 0) + 1
            for j, c in sorted(tally.items()):
                rows.append(r)
                cols.append(j)
                vals.append(float(c))
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, self.size))

    def transform(self, texts: Iterable[str]) -> sparse.csr_matrix:
        x = self.counts(texts)
        if self.method is VectorMethod.COUNT:
            return x
        x = x.multiply(np.asarray(self.idf_weights)[None, :]).tocsr()
        norms = np.sqrt(np.asarray(x.multiply(x).sum(axis=1)).ravel())
        norms[norms == 0] = 1.0
        return sparse.diags(1.0 / norms) @ x

    def to_json(self) -> dict:
        return {"method": self.method.value, "vocabulary": self.vocabulary,
                "idf": list(self.idf_weights) if self.idf_weights is not None else None}

    @classmethod
    def from_json(cls, data: dict) -> "Vectorizer":
        idf = data.get("idf")
        return cls(VectorMethod(data["method"]), {k: int(v) for k, v in data["vocabulary"].items()},
                   tuple(float(v) for v in idf) if idf is not None else None)


def fit_vectorizer(corpus: Sequence[str], method: Union[VectorMethod, str]) -> Vectorizer:
    method = VectorMethod(method) if not isinstance(method, VectorMethod) else method
    if not corpus:
        raise ValueError("cannot fit a vectorizer on an empty corpus")
    if method is VectorMethod.TFIDF:
        v = TfidfVectorizer(lowercase=True, token_pattern=TOKEN_PATTERN, smooth_idf=True)
    else:
        v = CountVectorizer(lowercase=True, token_pattern=TOKEN_PATTERN)
    try:
        v.fit(corpus)
    except ValueError as exc:  # corpus with no tokens at all
        raise ValueError(f"cannot fit a vectorizer: {exc}") from exc
    vocab = {tok: int(j) for tok, j in v.vocabulary_.items()}
    idf = tuple(float(w) for w in v.idf_) if method is VectorMethod.TFIDF else None
    return Vectorizer(method, vocab, idf)


@dataclass(frozen=True)
class LabeledSentence:
    text: str
    label: Kind


@dataclass(frozen=True)
class SentenceClassifier:
    algorithm: Algorithm
    vectorizer: Vectorizer
    estimator: Any
    labels: tuple  # Kind values seen in training

    def predict(self, sentence: str) -> Kind:
        return self.predict_many([sentence])[0]

    def predict_many(self, sentences: Sequence[str]) -> list[Kind]:
        if not sentences:
            return []
        x = self.vectorizer.transform(sentences)
        return [Kind(v) for v in self.estimator.predict(x)]


@dataclass(frozen=True)
class TrainResult:
    model: SentenceClassifier
    accuracy: float
    train_size: int
    test_size: int
    seconds: float


def _check_data(data: Sequence[LabeledSentence]) -> None:
    if len(data) < 10:
        raise ValueError(f"need at least 10 labeled sentences, got {len(data)}")
    present = {x.label for x in data}
    missing = [k.value for k in Kind if k not in present]
    if missing:
        raise ValueError(f"training data lacks label(s): {', '.join(missing)}")


def fit(data: Sequence[LabeledSentence], method: Union[VectorMethod, str] = VectorMethod.TFIDF,
        algorithm: Union[Algorithm, str] = Algorithm.BERNOULLI_NB, seed: int = 0) -> SentenceClassifier:
    """Train on all of ``data`` (no held-out part)."""
    algorithm = Algorithm.parse(algorithm)
    vec = fit_vectorizer([x.text for x in data], method)
    est = make_estimator(algorithm, seed)
    est.fit(vec.transform([x.text for x in data]), [x.label.value for x in data])
    labels = tuple(sorted({x.label.value for x in data}))
    return SentenceClassifier(algorithm, vec, est, labels)


def train_full(data: Sequence[LabeledSentence], method: Union[VectorMethod, str] = VectorMethod.TFIDF,
               algorithm: Union[Algorithm, str] = Algorithm.BERNOULLI_NB, split_seed: int = 0,
               train_fraction: float = 0.8) -> TrainResult:
    _check_data(data)
    start = time.perf_counter()
    train_part, test_part = stratified_split(list(data), [x.label.value for x in data], train_fraction, split_seed)
    model = fit(train_part, method, algorithm, split_seed)
    predicted = model.predict_many([x.text for x in test_part])
    hits = sum(p is x.label for p, x in zip(predicted, test_part))
    accuracy = hits / len(test_part)
    return TrainResult(model, accuracy, len(train_part), len(test_part), time.perf_counter() - start)


def train(data: Sequence[LabeledSentence], method: Union[VectorMethod, str] = VectorMethod.TFIDF,
          algorithm: Union[Algorithm, str] = Algorithm.BERNOULLI_NB,
          split_seed: int = 0) -> tuple[SentenceClassifier, float]:
    """Fit on a seeded stratified 80% and report accuracy on the other 20%."""
    r = train_full(data, method, algorithm, split_seed)
    return r.model, r.accuracy


def predict(model: SentenceClassifier, sentence: str) -> Kind:
    return model.predict(sentence)


def accuracy_grid(data: Sequence[LabeledSentence], split_seed: int = 0,
                  algorithms: Iterable[Algorithm] = tuple(Algorithm),
                  methods: Iterable[VectorMethod] = tuple(VectorMethod)) -> dict:
    """Held-out accuracy for every (algorithm, vector method) pair."""
    methods = list(methods)
    return {(a, m): train(data, m, a, split_seed)[1] for a in algorithms for m in methods}


def grid_table(grid: dict) -> str:
    methods = sorted({m for _, m in grid}, key=lambda m: list(VectorMethod).index(m), reverse=True)
    algos = [a for a in Algorithm if any((a, m) in grid for m in methods)]
    width = max(len(a.value) for a in algos)
    lines = ["classifier".ljust(width) + "".join(f"  {m.value:>6}" for m in methods)]
    for a in algos:
        lines.append(a.value.ljust(width) + "".join(f"  {100 * grid[(a, m)]:6.1f}" for m in methods))
    return "\n".join(lines)


# Persistence ----------------------------------------------------------------------

class ModelFileError(RuntimeError):
    pass


def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_model(model: SentenceClassifier, path: Union[str, Path]) -> None:
    payload = {
        "algorithm": model.algorithm.value,
        "labels": list(model.labels),
        "vectorizer": model.vectorizer.to_json(),
        "estimator": base64.b64encode(pickle.dumps(model.estimator)).decode("ascii"),
    }
    doc = {"format": FORMAT, "version": FORMAT_VERSION, "payload": payload, "sha256": _digest(payload)}
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path: Union[str, Path]) -> SentenceClassifier:
    path = Path(path)
    if not path.exists():
        raise ModelFileError(f"{path}: model file not found (train one with `nl2uml train`)")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ModelFileError(f"{path}: unreadable model file ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFileError(f"{path}: not a classifier model file")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFileError(f"{path}: model format version {doc.get('version')} unsupported (expected {FORMAT_VERSION})")
    payload = doc.get("payload")
    if not isinstance(payload, dict) or _digest(payload) != doc.get("sha256"):
        raise ModelFileError(f"{path}: checksum mismatch, file is corrupt or was modified")
    try:
        estimator = pickle.loads(base64.b64decode(payload["estimator"]))
        return SentenceClassifier(Algorithm(payload["algorithm"]), Vectorizer.from_json(payload["vectorizer"]),
                                  estimator, tuple(payload["labels"]))
    except Exception as exc:
        raise ModelFileError(f"{path}: cannot rebuild model ({exc})") from exc
