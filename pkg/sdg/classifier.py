"""
TF-IDF features and one-vs-rest logistic regression.

The classifier learns from the query stage's own output: for each SDG the
records the queries assigned form the positives and a seeded sample of
the rest the negatives. One binary model per SDG shares a single TF-IDF
vocabulary; predicted probabilities are compared against a threshold
(0.95 by default) downstream.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from .asjc import area_name
from .common import (
    SDG_IDS,
    ConfigurationError,
    EmptyInputError,
    ModelFormatError,
    Provenance,
    SdgMapping,
    TrainingError,
    check_sdg,
)
from .corpus import Corpus, PublicationRecord, tokenize

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
FEATURE_FIELDS = ("title", "abstract", "keywords", "fulltext", "subjects")

# Probabilities stay strictly inside (0, 1)
_P_MIN = float(np.finfo(np.float64).tiny)
_P_MAX = float(np.nextafter(1.0, 0.0))


# ============================================================================
# CONFIGURATION
# ============================================================================


@dataclass(frozen=True)
class TfidfConfig:
    """
    Attributes:
        min_df: Minimum number of documents a term must occur in
        max_features: Vocabulary cap (most frequent terms kept)
        fields: Record fields feeding the bag of terms
    """

    min_df: int = 2
    max_features: int = 50_000
    fields: tuple[str, ...] = FEATURE_FIELDS

    def __post_init__(self) -> None:
        if self.min_df < 1:
            raise ConfigurationError("min_df must be >= 1")
        if self.max_features < 1:
            raise ConfigurationError("max_features must be >= 1")
        unknown = set(self.fields) - set(FEATURE_FIELDS)
        if unknown or not self.fields:
            raise ConfigurationError(f"feature fields must be drawn from {FEATURE_FIELDS}")


@dataclass(frozen=True)
class Hyperparams:
    """
    Attributes:
        l2: L2 penalty strength (lambda)
        learning_rate: Gradient descent step
        iterations: Number of full-batch steps
        seed: Seed for negative sampling
        negative_ratio: Negatives sampled per positive
        threshold: Probability an ML assignment must reach
    """

    l2: float = 1e-4
    learning_rate: float = 0.5
    iterations: int = 500
    seed: int = 0
    negative_ratio: float = 10.0
    threshold: float = 0.95

    def __post_init__(self) -> None:
        if self.l2 < 0:
            raise ConfigurationError("l2 must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning rate must be > 0")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be >= 0")
        if self.negative_ratio <= 0:
            raise ConfigurationError("negative ratio must be > 0")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigurationError("threshold must lie in (0, 1]")


# ============================================================================
# TF-IDF
# ============================================================================


def document_terms(
    record: PublicationRecord, fields: Sequence[str] = FEATURE_FIELDS
) -> list[str]:
    """
    Bag of feature terms for one record.

    Text fields use the shared tokenizer. Subject areas contribute the
    synthetic tokens `asjc_<code>` and `area_<top level name>`.
    """
    terms: list[str] = []
    if "title" in fields:
        terms += tokenize(record.title)
    if "abstract" in fields:
        terms += tokenize(record.abstract)
    if "keywords" in fields:
        for kw in record.author_keywords:
            terms += tokenize(kw)
    if "fulltext" in fields:
        for phrase in record.fulltext_terms or ():
            terms += tokenize(phrase)
    if "subjects" in fields:
        for code in record.asjc_codes:
            terms.append(f"asjc_{code}")
            name = area_name(code)
            if name:
                terms.append("area_" + "_".join(tokenize(name)))
    return terms


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    size: int

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.size)
        out[self.indices] = self.values
        return out


@dataclass
class TfidfModel:
    """
    Fitted TF-IDF vocabulary.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, so idf(t) == 1 exactly when t
    occurs in every training document.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray
    config: TfidfConfig = field(default_factory=TfidfConfig)
    n_documents: int = 0

    @property
    def terms(self) -> list[str]:
        out = [""] * len(self.vocabulary)
        for term, i in self.vocabulary.items():
            out[i] = term
        return out

    def transform(self, records: Iterable[PublicationRecord]) -> sparse.csr_matrix:
        """L2-normalised TF-IDF rows, one per record."""
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for rec in records:
            counts = Counter(
                self.vocabulary[t]
                for t in document_terms(rec, self.config.fields)
                if t in self.vocabulary
            )
            cols = sorted(counts)
            vals = np.array([counts[c] for c in cols], dtype=np.float64) * self.idf[cols]
            norm = math.sqrt(float(np.dot(vals, vals))) if len(vals) else 0.0
            if norm > 0:
                vals = vals / norm
            indices.extend(cols)
            data.extend(vals.tolist())
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), indptr),
            shape=(len(indptr) - 1, len(self.vocabulary)),
        )


def fit_tfidf(
    records: Iterable[PublicationRecord], config: TfidfConfig | None = None
) -> TfidfModel:
    """
    Fit a vocabulary and idf weights.

    Terms below `min_df` are dropped; when more than `max_features` remain
    the most document-frequent are kept (ties broken lexicographically).
    Column indices follow the lexicographic order of the kept terms.

    Raises:
        EmptyInputError: On an empty corpus or an empty vocabulary
    """
    config = config or TfidfConfig()
    df: Counter[str] = Counter()
    n = 0
    for rec in records:
        df.update(set(document_terms(rec, config.fields)))
        n += 1
    if n == 0:
        raise EmptyInputError("cannot fit TF-IDF on an empty corpus")

    kept = [t for t, c in df.items() if c >= config.min_df]
    if len(kept) > config.max_features:
        kept = sorted(kept, key=lambda t: (-df[t], t))[: config.max_features]
    if not kept:
        raise EmptyInputError(f"no term occurs in at least {config.min_df} documents")

    kept.sort()
    vocabulary = {t: i for i, t in enumerate(kept)}
    dfs = np.array([df[t] for t in kept], dtype=np.float64)
    idf = np.log((1.0 + n) / (1.0 + dfs)) + 1.0
    log.info("[tfidf] documents=%d vocabulary=%d", n, len(kept))
    return TfidfModel(vocabulary, idf, config, n)


def vectorize(record: PublicationRecord, tfidf: TfidfModel) -> SparseVector:
    """TF-IDF vector of one record; out-of-vocabulary tokens are ignored."""
    row = tfidf.transform([record])
    return SparseVector(row.indices.copy(), row.data.copy(), row.shape[1])


# ============================================================================
# WEAK SUPERVISION
# ============================================================================


@dataclass(frozen=True)
class LabeledSet:
    sdg: int
    positive_ids: tuple[str, ...]
    negative_ids: tuple[str, ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return self.positive_ids + self.negative_ids

    @property
    def labels(self) -> np.ndarray:
        return np.concatenate(
            [np.ones(len(self.positive_ids)), np.zeros(len(self.negative_ids))]
        )


@dataclass
class TrainingSets:
    sets: dict[int, LabeledSet] = field(default_factory=dict)
    skipped: dict[int, str] = field(default_factory=dict)


def build_training_set(
    mapping: SdgMapping,
    corpus: Corpus,
    ratio: float = 10.0,
    seed: int = 0,
    sdgs: Iterable[int] = SDG_IDS,
) -> TrainingSets:
    """
    Derive per-SDG labelled sets from query output.

    Positives for SDG s are the records the queries assigned s. Negatives
    are a seeded uniform sample, without replacement, of the records not
    assigned s, of size min(ratio * positives, available). SDGs without
    positives, without any candidate negative, or whose sample size rounds
    down to zero are skipped and reported.

    Raises:
        ConfigurationError: If ratio <= 0
    """
    if not ratio > 0:
        raise ConfigurationError(f"negatives-per-positive ratio must be > 0, got {ratio}")

    out = TrainingSets()
    for sdg in sdgs:
        check_sdg(sdg)
        assigned = mapping.records_for(sdg, Provenance.QUERY)
        positives = [rid for rid in corpus.ids if rid in assigned]
        if not positives:
            out.skipped[sdg] = "no positives"
            continue
        assigned_any = mapping.records_for(sdg)
        candidates = [rid for rid in corpus.ids if rid not in assigned_any]
        if not candidates:
            out.skipped[sdg] = "no candidate negatives"
            continue
        size = min(math.floor(ratio * len(positives)), len(candidates))
        if size == 0:
            out.skipped[sdg] = "no negatives at this ratio"
            continue
        rng = np.random.default_rng([seed, sdg])
        picked = np.sort(rng.choice(len(candidates), size=size, replace=False))
        negatives = tuple(candidates[i] for i in picked)
        out.sets[sdg] = LabeledSet(sdg, tuple(positives), negatives)

    for sdg, reason in sorted(out.skipped.items()):
        log.debug("[train] sdg=%d skipped (%s)", sdg, reason)
    return out


# ============================================================================
# LOGISTIC REGRESSION
# ============================================================================


def probability(z: np.ndarray | float) -> np.ndarray:
    return np.clip(expit(z), _P_MIN, _P_MAX)


def loss_and_gradient(
    X: sparse.spmatrix | np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    b: float,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """
    Mean cross-entropy plus (l2 / 2) * ||w||^2, and its gradient.

    Returns:
        (loss, gradient w.r.t. w, gradient w.r.t. b)
    """
    n = X.shape[0]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))
    r = expit(z) - y
    grad_w = np.asarray(X.T @ r).ravel() / n + l2 * w
    grad_b = float(np.mean(r))
    return loss, grad_w, grad_b


@dataclass
class BinaryModel:
    weights: np.ndarray
    bias: float
    losses: tuple[float, ...] = ()


def train_binary(
    X: sparse.spmatrix | np.ndarray, y: np.ndarray, hp: Hyperparams, label: str = ""
) -> BinaryModel:
    """
    Fit one binary model by full-batch gradient descent from zero weights.

    Raises:
        TrainingError: If the labels lack a positive or a negative, or the
            loss becomes non-finite
    """
    y = np.asarray(y, dtype=np.float64)
    if not (y == 1).any() or not (y == 0).any():
        raise TrainingError(f"{label or 'model'}: need at least one positive and one negative")

    w = np.zeros(X.shape[1])
    b = 0.0
    losses: list[float] = []
    for it in range(hp.iterations):
        loss, gw, gb = loss_and_gradient(X, y, w, b, hp.l2)
        if not math.isfinite(loss):
            raise TrainingError(
                f"{label or 'model'}: non-finite loss at iteration {it} "
                f"(learning rate {hp.learning_rate}, l2 {hp.l2})"
            )
        losses.append(loss)
        w = w - hp.learning_rate * gw
        b = b - hp.learning_rate * gb
    return BinaryModel(w, b, tuple(losses))


def training_matrix(
    X_all: sparse.csr_matrix, row_of: Mapping[str, int], labeled: LabeledSet
) -> tuple[sparse.csr_matrix, np.ndarray]:
    rows = [row_of[rid] for rid in labeled.ids]
    return X_all[rows], labeled.labels


@dataclass
class LogRegModel:
    """
    One-vs-rest logistic regression over a shared TF-IDF space.

    score_s(x) = sigmoid(w_s . x + b_s)
    """

    tfidf: TfidfModel
    weights: dict[int, np.ndarray] = field(default_factory=dict)
    biases: dict[int, float] = field(default_factory=dict)
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    skipped: dict[int, str] = field(default_factory=dict)

    @property
    def threshold(self) -> float:
        return self.hyperparams.threshold

    @property
    def sdgs(self) -> list[int]:
        return sorted(self.weights)

    def predict_matrix(self, X: sparse.spmatrix | np.ndarray) -> dict[int, np.ndarray]:
        return {s: probability(X @ self.weights[s] + self.biases[s]) for s in self.sdgs}

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "tfidf": {
                "config": {
                    "min_df": self.tfidf.config.min_df,
                    "max_features": self.tfidf.config.max_features,
                    "fields": list(self.tfidf.config.fields),
                },
                "n_documents": self.tfidf.n_documents,
                "vocabulary": self.tfidf.terms,
                "idf": [float(v) for v in self.tfidf.idf],
            },
            "hyperparams": asdict(self.hyperparams),
            "threshold": self.threshold,
            "models": {
                str(s): {
                    "bias": float(self.biases[s]),
                    "weights": [float(v) for v in self.weights[s]],
                }
                for s in self.sdgs
            },
            "skipped": {str(s): r for s, r in sorted(self.skipped.items())},
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> LogRegModel:
        try:
            if obj["format_version"] != FORMAT_VERSION:
                raise ModelFormatError(
                    f"unsupported model format version {obj['format_version']!r}"
                )
            t = obj["tfidf"]
            terms = list(t["vocabulary"])
            tfidf = TfidfModel(
                vocabulary={term: i for i, term in enumerate(terms)},
                idf=np.asarray(t["idf"], dtype=np.float64),
                config=TfidfConfig(
                    min_df=t["config"]["min_df"],
                    max_features=t["config"]["max_features"],
                    fields=tuple(t["config"]["fields"]),
                ),
                n_documents=t["n_documents"],
            )
            hp = Hyperparams(**obj["hyperparams"])
            weights = {}
            biases = {}
            for key, m in obj["models"].items():
                s = check_sdg(int(key))
                weights[s] = np.asarray(m["weights"], dtype=np.float64)
                biases[s] = float(m["bias"])
                if weights[s].shape != (len(terms),):
                    raise ModelFormatError(f"SDG {s}: weight vector does not match vocabulary")
            skipped = {int(k): v for k, v in obj.get("skipped", {}).items()}
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ModelFormatError):
                raise
            raise ModelFormatError(f"malformed model artifact: {e}") from e
        return cls(tfidf, weights, biases, hp, skipped)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, separators=(",", ":"))
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> LogRegModel:
        try:
            with open(path, "r", encoding="utf-8") as f:
                obj = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"{path}: not a JSON model artifact ({e.msg})") from e
        return cls.from_dict(obj)


def assemble_model(
    tfidf: TfidfModel,
    fitted: Mapping[int, BinaryModel],
    hp: Hyperparams,
    skipped: Mapping[int, str] | None = None,
) -> LogRegModel:
    return LogRegModel(
        tfidf=tfidf,
        weights={s: fitted[s].weights for s in sorted(fitted)},
        biases={s: float(fitted[s].bias) for s in sorted(fitted)},
        hyperparams=hp,
        skipped=dict(skipped or {}),
    )


def fit_sdg(
    sdg: int,
    X_all: sparse.csr_matrix,
    row_of: Mapping[str, int],
    labeled: LabeledSet,
    hp: Hyperparams,
) -> BinaryModel:
    """Fit the binary model of one SDG on rows of the full feature matrix."""
    X, y = training_matrix(X_all, row_of, labeled)
    return train_binary(X, y, hp, label=f"SDG {sdg}")


def collect_models(
    tfidf: TfidfModel,
    training_sets: TrainingSets,
    fitted: Mapping[int, BinaryModel],
    hp: Hyperparams,
) -> LogRegModel:
    """Log one summary line per fitted SDG and assemble the model artifact."""
    for sdg in sorted(fitted):
        labeled = training_sets.sets[sdg]
        losses = fitted[sdg].losses
        log.info(
            "[train] sdg=%d positives=%d negatives=%d loss=%.6f",
            sdg,
            len(labeled.positive_ids),
            len(labeled.negative_ids),
            losses[-1] if losses else float("nan"),
        )
    return assemble_model(tfidf, fitted, hp, training_sets.skipped)


def train(
    tfidf: TfidfModel,
    corpus: Corpus,
    training_sets: TrainingSets,
    hp: Hyperparams | None = None,
) -> LogRegModel:
    """
    Train one binary model per SDG of the training sets.

    Args:
        tfidf: Fitted feature space
        corpus: Corpus the labelled ids refer to
        training_sets: Output of build_training_set
        hp: Optimisation settings

    Returns:
        LogRegModel covering every SDG with a labelled set
    """
    hp = hp or Hyperparams()
    X_all = tfidf.transform(corpus)
    row_of = {rid: i for i, rid in enumerate(corpus.ids)}
    fitted = {
        sdg: fit_sdg(sdg, X_all, row_of, labeled, hp)
        for sdg, labeled in sorted(training_sets.sets.items())
    }
    return collect_models(tfidf, training_sets, fitted, hp)


def predict(record: PublicationRecord, tfidf: TfidfModel, model: LogRegModel) -> dict[int, float]:
    """Probability per trained SDG for one record."""
    X = tfidf.transform([record])
    return {s: float(p[0]) for s, p in model.predict_matrix(X).items()}


def score_corpus(corpus: Corpus, model: LogRegModel) -> dict[str, dict[int, float]]:
    """Probabilities for every record of a corpus and every trained SDG."""
    X = model.tfidf.transform(corpus)
    probs = model.predict_matrix(X)
    return {
        rid: {s: float(probs[s][i]) for s in model.sdgs}
        for i, rid in enumerate(corpus.ids)
    }


def top_features(model: LogRegModel, sdg: int, k: int = 20) -> list[tuple[str, float]]:
    """Highest positive-weight terms of one SDG model (its learned key phrases)."""
    if sdg not in model.weights:
        raise ConfigurationError(f"no model trained for SDG {sdg}")
    w = model.weights[sdg]
    terms = model.tfidf.terms
    order = sorted((i for i in range(len(w)) if w[i] > 0), key=lambda i: (-w[i], terms[i]))
    return [(terms[i], float(w[i])) for i in order[:k]]
