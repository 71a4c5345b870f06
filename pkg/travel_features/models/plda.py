"""
P-LDA: seeded LDA over the travel pattern matrix.

One topic model per passenger feature attribute. Each attribute restricts the
pattern matrix to its POI vocabulary and has one topic per class; the
topic-label Dirichlet prior is boosted by `beta_seed` on the labels that
characterise a class, which both guides the topics and names them.

Fitting is collapsed Gibbs sampling. The `token` sampler resamples one token
at a time (exact). The `blocked` sampler runs the same token updates in
lockstep across documents: each document is still sampled token by token,
but topic-label counts only see other documents' draws after each step. It
is used for large corpora.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from ..errors import ConfigError, NumericalError, ProfileNotFoundError
from ..utils.ingest import PoiLabel
from .poi_matrix import TravelPatternMatrix

logger = logging.getLogger(__name__)

ATTRIBUTE_NAMES = ("age", "occupation", "gender", "health", "economic", "safety", "personality")
SAMPLERS = ("auto", "token", "blocked")
TOKEN_SAMPLER_LIMIT = 2_000
UMASS_TOP_N = 10

P = PoiLabel


@dataclass(frozen=True)
class AttributeConfig:
    """
    Vocabulary, classes and seed labels for one passenger attribute.

    Args:
        name: Attribute name
        vocab: POI labels the attribute's model sees
        k_classes: Number of topics/classes
        class_names: One display name per class
        seed_map: class index -> labels boosted in that class's prior
    """

    name: str
    vocab: Tuple[PoiLabel, ...]
    k_classes: int
    class_names: Tuple[str, ...]
    seed_map: Mapping[int, FrozenSet[PoiLabel]]

    def __post_init__(self):
        if self.k_classes < 1:
            raise ConfigError(f"{self.name}: k_classes must be >= 1")
        if len(set(self.vocab)) != len(self.vocab):
            raise ConfigError(f"{self.name}: vocabulary contains duplicates")
        if self.k_classes > len(self.vocab):
            raise ConfigError(f"{self.name}: k_classes={self.k_classes} exceeds vocabulary size {len(self.vocab)}")
        if len(self.class_names) != self.k_classes:
            raise ConfigError(f"{self.name}: expected {self.k_classes} class names, got {len(self.class_names)}")
        if set(self.seed_map) != set(range(self.k_classes)):
            raise ConfigError(f"{self.name}: seed_map keys must cover classes 0..{self.k_classes - 1}")
        for k, labels in self.seed_map.items():
            stray = set(labels) - set(self.vocab)
            if stray:
                raise ConfigError(f"{self.name}: class {k} seeds {sorted(l.value for l in stray)} outside the vocabulary")

    def seed_classes(self, label: PoiLabel) -> List[int]:
        return [k for k in range(self.k_classes) if label in self.seed_map[k]]

    def with_k_classes(self, k_classes: int, class_names: Optional[Sequence[str]] = None) -> "AttributeConfig":
        """Override the class count; classes beyond the seeded ones get no seed labels"""
        names = list(class_names) if class_names else [
            self.class_names[k] if k < len(self.class_names) else f"class_{k}" for k in range(k_classes)
        ]
        seeds = {k: frozenset(self.seed_map.get(k, frozenset())) for k in range(k_classes)}
        return replace(self, k_classes=k_classes, class_names=tuple(names), seed_map=seeds)


def _attr(name, vocab, class_names, seeds) -> AttributeConfig:
    return AttributeConfig(
        name=name,
        vocab=tuple(vocab),
        k_classes=len(class_names),
        class_names=tuple(class_names),
        seed_map={k: frozenset(s) for k, s in enumerate(seeds)},
    )


BUILTIN_ATTRIBUTES: Dict[str, AttributeConfig] = {
    "age": _attr(
        "age",
        [P.COMPANY, P.GOVERNMENT, P.EDUCATION, P.MEDICINE, P.TRAFFIC, P.CAR],
        ["teenagers", "middle age", "old age"],
        [{P.EDUCATION, P.TRAFFIC}, {P.COMPANY, P.GOVERNMENT, P.CAR}, {P.MEDICINE, P.TRAFFIC}],
    ),
    "occupation": _attr(
        "occupation",
        [P.EDUCATION, P.MEDIA, P.MEDICINE, P.SERVICE, P.COMPANY, P.GOVERNMENT, P.FINANCE],
        ["students/teachers", "company employees", "political parties",
         "self-employed/businessmen", "retirees/medical workers"],
        [{P.EDUCATION, P.MEDIA}, {P.SERVICE, P.COMPANY}, {P.GOVERNMENT}, {P.FINANCE}, {P.MEDICINE}],
    ),
    "gender": _attr(
        "gender",
        [P.SHOPPING, P.BEAUTY, P.SERVICE, P.TRAFFIC, P.CAR, P.ENTERTAINMENT, P.SPORTS],
        ["male", "female"],
        [{P.CAR, P.ENTERTAINMENT, P.SPORTS}, {P.SHOPPING, P.BEAUTY, P.SERVICE, P.TRAFFIC}],
    ),
    "health": _attr(
        "health",
        [P.SPORTS, P.ENTERTAINMENT, P.TRAVEL],
        ["better", "worse"],
        [{P.SPORTS}, {P.ENTERTAINMENT, P.TRAVEL}],
    ),
    "economic": _attr(
        "economic",
        [P.FOOD, P.SHOPPING, P.TRAVEL, P.ENTERTAINMENT, P.MEDIA, P.TRAFFIC, P.CAR],
        ["better", "worse"],
        [{P.SHOPPING, P.TRAVEL, P.ENTERTAINMENT, P.MEDIA, P.CAR}, {P.TRAFFIC, P.FOOD}],
    ),
    "safety": _attr(
        "safety",
        [P.SPORTS, P.MEDICINE, P.SERVICE, P.TRAFFIC, P.ENTERTAINMENT],
        ["better", "worse"],
        [{P.SPORTS, P.MEDICINE, P.TRAFFIC, P.SERVICE}, {P.ENTERTAINMENT}],
    ),
    "personality": _attr(
        "personality",
        [P.SHOPPING, P.ENTERTAINMENT, P.MEDIA, P.TRAVEL, P.SPORTS, P.SERVICE],
        ["better", "worse"],
        [{P.SERVICE, P.SPORTS}, {P.SHOPPING, P.MEDIA, P.ENTERTAINMENT, P.TRAVEL}],
    ),
}


@dataclass
class GibbsState:
    """Count state handed to the per-sweep callback (arrays are live; copy to keep)"""

    sweep: int
    doc_topic: np.ndarray
    topic_word: np.ndarray
    topic_total: np.ndarray
    burned_in: bool


@dataclass
class LdaModel:
    """Fitted attribute model: topic proportions per passenger and label weights per class"""

    attribute: str
    uids: List[str]
    vocab: List[PoiLabel]
    class_names: List[str]
    theta: np.ndarray
    phi: np.ndarray
    alpha: float
    beta: float
    beta_seed: float
    n_sweeps: int
    rng_seed: int
    topic_word: np.ndarray
    beta_matrix: np.ndarray
    excluded: List[str] = field(default_factory=list)
    log_likelihood: List[Tuple[int, float]] = field(default_factory=list)
    sampler: str = "token"

    @property
    def k(self) -> int:
        return self.phi.shape[0]

    def theta_row(self, uid: str) -> np.ndarray:
        return self.theta[self.uids.index(uid)]


def _beta_matrix(config: AttributeConfig, beta: float, beta_seed: float) -> np.ndarray:
    prior = np.full((config.k_classes, len(config.vocab)), float(beta))
    for k, labels in config.seed_map.items():
        for label in labels:
            prior[k, config.vocab.index(label)] += beta_seed
    return prior


def collapsed_log_likelihood(
    doc_topic: np.ndarray, topic_word: np.ndarray, alpha: float, beta_matrix: np.ndarray
) -> float:
    """Joint log p(w, z) with theta and phi integrated out"""
    k = topic_word.shape[0]
    beta_sum = beta_matrix.sum(axis=1)
    ll = float(np.sum(
        gammaln(beta_sum) - gammaln(beta_matrix).sum(axis=1)
        + gammaln(topic_word + beta_matrix).sum(axis=1)
        - gammaln(topic_word.sum(axis=1) + beta_sum)
    ))
    if len(doc_topic):
        n_m = doc_topic.sum(axis=1)
        ll += float(np.sum(
            gammaln(k * alpha) - k * gammaln(alpha)
            + gammaln(doc_topic + alpha).sum(axis=1)
            - gammaln(n_m + k * alpha)
        ))
    return ll


def _as_counts(X, config: AttributeConfig, uids: Optional[Sequence[str]]) -> Tuple[np.ndarray, List[str]]:
    if isinstance(X, TravelPatternMatrix):
        return X.restrict(config.vocab), list(X.passengers)
    counts = np.asarray(X)
    if counts.ndim != 2 or counts.shape[1] != len(config.vocab):
        raise ConfigError(
            f"{config.name}: expected a matrix with {len(config.vocab)} vocabulary columns, got shape {counts.shape}"
        )
    if np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0)):
        raise NumericalError("Pattern counts must be non-negative integers")
    ids = list(uids) if uids is not None else [str(i) for i in range(len(counts))]
    if len(ids) != len(counts):
        raise ConfigError("uids must align with matrix rows")
    return counts.astype(np.int64), ids


class _Sampler:
    """Shared collapsed Gibbs bookkeeping for one attribute corpus"""

    def __init__(self, counts: np.ndarray, alpha: float, beta_matrix: np.ndarray, rng: np.random.Generator):
        self.counts = counts
        self.alpha = alpha
        self.beta_matrix = beta_matrix
        self.beta_sum = beta_matrix.sum(axis=1)
        self.rng = rng
        self.k, self.v = beta_matrix.shape
        self.m = counts.shape[0]
        self.total_tokens = int(counts.sum())
        self.doc_topic = np.zeros((self.m, self.k), dtype=np.int64)
        self.topic_word = np.zeros((self.k, self.v), dtype=np.int64)
        self.topic_total = np.zeros(self.k, dtype=np.int64)

    def initial_probs(self, seeded: List[List[int]], guided: bool) -> np.ndarray:
        """Per-label starting topic distribution (seed classes when guided, else uniform)"""
        probs = np.full((self.v, self.k), 1.0 / self.k)
        if guided:
            for w, classes in enumerate(seeded):
                if classes:
                    probs[w] = 0.0
                    probs[w, classes] = 1.0 / len(classes)
        return probs

    def audit(self) -> None:
        if int(self.doc_topic.sum()) != self.total_tokens or int(self.topic_word.sum()) != self.total_tokens:
            raise NumericalError("Gibbs count conservation violated")
        if np.any(self.doc_topic < 0) or np.any(self.topic_word < 0):
            raise NumericalError("Negative Gibbs counts")


class _TokenSampler(_Sampler):
    def initialize(self, init_probs: np.ndarray) -> None:
        m_idx, w_idx = np.nonzero(self.counts)
        reps = self.counts[m_idx, w_idx]
        self.docs = np.repeat(m_idx, reps)
        self.words = np.repeat(w_idx, reps)
        self.z = np.empty(len(self.docs), dtype=np.int64)
        for i, w in enumerate(self.words):
            self.z[i] = self.rng.choice(self.k, p=init_probs[w])
        np.add.at(self.doc_topic, (self.docs, self.z), 1)
        np.add.at(self.topic_word, (self.z, self.words), 1)
        self.topic_total = self.topic_word.sum(axis=1)

    def sweep(self, frozen: bool = False) -> None:
        u = self.rng.random(len(self.z))
        doc_topic, topic_word, topic_total = self.doc_topic, self.topic_word, self.topic_total
        for i in range(len(self.z)):
            m, w, k = self.docs[i], self.words[i], self.z[i]
            doc_topic[m, k] -= 1
            if not frozen:
                topic_word[k, w] -= 1
                topic_total[k] -= 1
            p = (doc_topic[m] + self.alpha) * (topic_word[:, w] + self.beta_matrix[:, w]) / (topic_total + self.beta_sum)
            c = np.cumsum(p)
            k = min(int(np.searchsorted(c, u[i] * c[-1], side="right")), self.k - 1)
            self.z[i] = k
            doc_topic[m, k] += 1
            if not frozen:
                topic_word[k, w] += 1
                topic_total[k] += 1

    def verify(self) -> None:
        doc_topic = np.zeros_like(self.doc_topic)
        topic_word = np.zeros_like(self.topic_word)
        np.add.at(doc_topic, (self.docs, self.z), 1)
        np.add.at(topic_word, (self.z, self.words), 1)
        if not (np.array_equal(doc_topic, self.doc_topic) and np.array_equal(topic_word, self.topic_word)):
            raise NumericalError("Topic counts are inconsistent with token assignments")


class _BlockedSampler(_Sampler):
    """
    Token-level collapsed Gibbs run in lockstep across documents.

    Step t of a sweep resamples the t-th token of every document at once.
    Within a document tokens are drawn one after another with its counts
    updated between draws; only the topic-label counts lag by the tokens the
    other documents draw in the same step. With frozen topic-label counts
    (fold-in) the documents are independent and the sweep is exact.
    """

    def initialize(self, init_probs: np.ndarray) -> None:
        lengths = self.counts.sum(axis=1)
        width = int(lengths.max()) if self.m else 0
        # words[m, t]: label of document m's t-th token, -1 past its length
        self.words = np.full((self.m, width), -1, dtype=np.int64)
        for m in range(self.m):
            self.words[m, : lengths[m]] = np.repeat(np.arange(self.v), self.counts[m])
        self.order = np.argsort(-lengths, kind="stable")
        self.active = np.array([int((lengths > t).sum()) for t in range(width)], dtype=np.int64)

        cum = np.cumsum(init_probs, axis=1)
        u = self.rng.random((self.m, width))
        self.z = np.minimum((u[:, :, None] >= cum[self.words]).sum(axis=2), self.k - 1)
        self.z[self.words < 0] = -1
        self._recount()

    def _recount(self) -> None:
        live = self.words >= 0
        docs = np.broadcast_to(np.arange(self.m)[:, None], self.words.shape)[live]
        self.doc_topic = np.zeros((self.m, self.k), dtype=np.int64)
        self.topic_word = np.zeros((self.k, self.v), dtype=np.int64)
        np.add.at(self.doc_topic, (docs, self.z[live]), 1)
        np.add.at(self.topic_word, (self.z[live], self.words[live]), 1)
        self.topic_total = self.topic_word.sum(axis=1)

    def sweep(self, frozen: bool = False) -> None:
        u = self.rng.random(self.words.shape)
        doc_topic, topic_word = self.doc_topic, self.topic_word
        for t, n_active in enumerate(self.active):
            rows = self.order[:n_active]
            w = self.words[rows, t]
            old = self.z[rows, t]
            doc_topic[rows, old] -= 1
            if not frozen:
                np.subtract.at(topic_word, (old, w), 1)
                self.topic_total -= np.bincount(old, minlength=self.k)
            p = (doc_topic[rows] + self.alpha) * (topic_word[:, w].T + self.beta_matrix[:, w].T) / (
                self.topic_total + self.beta_sum
            )
            c = np.cumsum(p, axis=1)
            new = np.minimum((c <= (u[rows, t] * c[:, -1])[:, None]).sum(axis=1), self.k - 1)
            self.z[rows, t] = new
            doc_topic[rows, new] += 1
            if not frozen:
                np.add.at(topic_word, (new, w), 1)
                self.topic_total += np.bincount(new, minlength=self.k)

    def verify(self) -> None:
        doc_topic, topic_word = self.doc_topic, self.topic_word
        self._recount()
        consistent = np.array_equal(doc_topic, self.doc_topic) and np.array_equal(topic_word, self.topic_word)
        self.doc_topic, self.topic_word = doc_topic, topic_word
        self.topic_total = topic_word.sum(axis=1)
        if not consistent:
            raise NumericalError("Topic counts are inconsistent with token assignments")


def _pick_sampler(sampler: str, total_tokens: int) -> str:
    if sampler not in SAMPLERS:
        raise ConfigError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    if sampler == "auto":
        return "token" if total_tokens <= TOKEN_SAMPLER_LIMIT else "blocked"
    return sampler


def fit_plda(
    X: Union[TravelPatternMatrix, np.ndarray],
    config: AttributeConfig,
    alpha: Optional[float] = None,
    beta: float = 0.01,
    beta_seed: float = 1.0,
    n_sweeps: int = 2000,
    rng_seed: int = 0,
    burn_in: int = 500,
    uids: Optional[Sequence[str]] = None,
    sampler: str = "auto",
    callback: Optional[Callable[[GibbsState], None]] = None,
    log_every: int = 100,
) -> LdaModel:
    """
    Fit one attribute's seeded LDA by collapsed Gibbs sampling.

    Args:
        X: Full TravelPatternMatrix, or counts already restricted to config.vocab
        config: Attribute vocabulary, classes and seeds
        alpha: Symmetric document-topic prior (default 50 / K)
        beta: Base topic-label prior
        beta_seed: Prior boost on (class, seeded label) pairs
        n_sweeps: Total Gibbs sweeps (burn-in included)
        rng_seed: Seed for the sampler's random stream
        burn_in: Sweeps before log-likelihood tracking starts
        uids: Row identifiers when X is a plain array
        sampler: "token", "blocked" or "auto"
        callback: Called after every sweep with the live GibbsState
        log_every: Log-likelihood logging interval (sweeps)

    Returns:
        LdaModel with posterior-mean theta/phi from the final sweep's counts.
        Passengers with no tokens in the vocabulary are listed in `excluded`.
    """
    counts, ids = _as_counts(X, config, uids)
    k = config.k_classes
    alpha = 50.0 / k if alpha is None else float(alpha)
    if alpha <= 0 or beta <= 0 or beta_seed < 0:
        raise ConfigError("alpha and beta must be > 0 and beta_seed >= 0")
    if n_sweeps < 0:
        raise ConfigError("n_sweeps must be >= 0")

    keep = counts.sum(axis=1) > 0
    excluded = [uid for uid, ok in zip(ids, keep) if not ok]
    if excluded:
        logger.info(f"{config.name}: excluding {len(excluded)} passengers with no tokens in the vocabulary")
    counts = counts[keep]
    ids = [uid for uid, ok in zip(ids, keep) if ok]

    beta_matrix = _beta_matrix(config, beta, beta_seed)
    rng = np.random.default_rng(rng_seed)
    kind = _pick_sampler(sampler, int(counts.sum()))
    engine = (_TokenSampler if kind == "token" else _BlockedSampler)(counts, alpha, beta_matrix, rng)
    seeded = [config.seed_classes(label) for label in config.vocab]
    engine.initialize(engine.initial_probs(seeded, guided=beta_seed > 0))
    engine.audit()

    trace: List[Tuple[int, float]] = []
    for sweep in range(1, n_sweeps + 1):
        engine.sweep()
        engine.audit()
        burned_in = sweep > burn_in
        if burned_in and (sweep % log_every == 0 or sweep == n_sweeps):
            ll = collapsed_log_likelihood(engine.doc_topic, engine.topic_word, alpha, beta_matrix)
            trace.append((sweep, ll))
            logger.debug(f"{config.name} sweep {sweep}/{n_sweeps}: log p(w,z) = {ll:.4f}")
        if callback is not None:
            callback(GibbsState(sweep, engine.doc_topic, engine.topic_word, engine.topic_total, burned_in))
    engine.verify()

    theta = (engine.doc_topic + alpha) / (engine.doc_topic.sum(axis=1, keepdims=True) + k * alpha)
    phi = (engine.topic_word + beta_matrix) / (engine.topic_word.sum(axis=1, keepdims=True) + beta_matrix.sum(axis=1, keepdims=True))

    logger.info(f"Fitted P-LDA for {config.name}: {len(ids)} passengers, {engine.total_tokens} tokens, "
                f"K={k}, {n_sweeps} {kind} sweeps, rng_seed={rng_seed}")

    return LdaModel(
        attribute=config.name,
        uids=ids,
        vocab=list(config.vocab),
        class_names=list(config.class_names),
        theta=theta,
        phi=phi,
        alpha=alpha,
        beta=float(beta),
        beta_seed=float(beta_seed),
        n_sweeps=n_sweeps,
        rng_seed=rng_seed,
        topic_word=engine.topic_word.copy(),
        beta_matrix=beta_matrix,
        excluded=excluded,
        log_likelihood=trace,
        sampler=kind,
    )


def fold_in(
    model: LdaModel,
    X_new: Union[TravelPatternMatrix, np.ndarray],
    n_sweeps: int = 200,
    rng_seed: int = 0,
    uids: Optional[Sequence[str]] = None,
    sampler: str = "auto",
) -> Tuple[List[str], np.ndarray]:
    """
    Topic proportions for unseen passengers with the model's topic-label counts frozen.

    Rows with no tokens in the vocabulary get the prior mean (uniform).

    Returns:
        (uids, theta (M, K))
    """
    vocab_config = AttributeConfig(
        name=model.attribute,
        vocab=tuple(model.vocab),
        k_classes=model.k,
        class_names=tuple(model.class_names),
        seed_map={k: frozenset() for k in range(model.k)},
    )
    counts, ids = _as_counts(X_new, vocab_config, uids)
    k = model.k
    theta = np.full((len(counts), k), 1.0 / k)
    keep = counts.sum(axis=1) > 0
    if not keep.any():
        return ids, theta

    sub = counts[keep]
    rng = np.random.default_rng(rng_seed)
    kind = _pick_sampler(sampler, int(sub.sum()))
    engine = (_TokenSampler if kind == "token" else _BlockedSampler)(sub, model.alpha, model.beta_matrix, rng)
    # Start each label in its most probable topic under the trained model.
    init = np.zeros((len(model.vocab), k))
    init[np.arange(len(model.vocab)), np.argmax(model.phi, axis=0)] = 1.0
    engine.initialize(init)
    engine.topic_word = model.topic_word.copy()
    engine.topic_total = engine.topic_word.sum(axis=1)
    for _ in range(n_sweeps):
        engine.sweep(frozen=True)

    doc_topic = engine.doc_topic
    theta[keep] = (doc_topic + model.alpha) / (doc_topic.sum(axis=1, keepdims=True) + k * model.alpha)
    return ids, theta


@dataclass
class AttributeAssignment:
    class_index: int
    class_name: str
    theta: np.ndarray


@dataclass
class AttributeProfile:
    """Inferred class per attribute for one passenger"""

    uid: str
    attributes: Dict[str, AttributeAssignment]
    missing: List[str] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.missing)

    def class_name(self, attribute: str) -> Optional[str]:
        a = self.attributes.get(attribute)
        return a.class_name if a else None


def infer_profile(models: Mapping[str, LdaModel], uid: str) -> AttributeProfile:
    """
    Class per attribute = argmax of the passenger's theta row (lowest index on ties).

    Raises:
        ProfileNotFoundError: uid absent from every model
    """
    assignments: Dict[str, AttributeAssignment] = {}
    missing: List[str] = []
    for name, model in models.items():
        if uid not in model.uids:
            missing.append(name)
            continue
        row = model.theta_row(uid)
        idx = int(np.argmax(row))
        assignments[name] = AttributeAssignment(idx, model.class_names[idx], row.copy())

    if not assignments:
        raise ProfileNotFoundError(f"Passenger {uid!r} is not present in any attribute model")
    if missing:
        logger.debug(f"Profile for {uid} is partial; missing {missing}")
    return AttributeProfile(uid=uid, attributes=assignments, missing=missing)


def poi_weightings(model: LdaModel, config: Optional[AttributeConfig] = None) -> Dict[str, Dict[PoiLabel, float]]:
    """Label weights per class (the phi rows keyed by class name)"""
    names = list(config.class_names) if config is not None else model.class_names
    return {
        names[k]: {label: float(model.phi[k, w]) for w, label in enumerate(model.vocab)}
        for k in range(model.k)
    }


def top_labels(model: LdaModel, n: int = 3) -> Dict[str, List[PoiLabel]]:
    """The n highest-weighted labels of every class"""
    out = {}
    for k, name in enumerate(model.class_names):
        order = np.argsort(-model.phi[k], kind="stable")[:n]
        out[name] = [model.vocab[w] for w in order]
    return out


def consistency_score(model: LdaModel, X: Union[TravelPatternMatrix, np.ndarray], top_n: int = UMASS_TOP_N) -> float:
    """
    UMass coherence averaged over topics; higher is better.

    For each topic the top labels by phi (ignoring labels that never occur in
    X, at most top_n) are scored as sum over ranked pairs of
    log((D(w_i, w_j) + 1) / D(w_j)), with D the document frequency and w_j
    the higher-ranked label.
    """
    counts = X.restrict(model.vocab) if isinstance(X, TravelPatternMatrix) else np.asarray(X)
    present = (counts > 0).astype(np.int64)
    doc_freq = present.sum(axis=0)
    co_freq = present.T @ present
    occurring = doc_freq > 0

    scores = []
    for k in range(model.k):
        order = [w for w in np.argsort(-model.phi[k], kind="stable") if occurring[w]][:top_n]
        score = 0.0
        for i in range(1, len(order)):
            for j in range(i):
                wi, wj = order[i], order[j]
                score += math.log((co_freq[wi, wj] + 1) / doc_freq[wj])
        scores.append(score)
    return float(np.mean(scores)) if scores else 0.0


def select_best_model(
    candidates: Sequence[LdaModel], X: Union[TravelPatternMatrix, np.ndarray]
) -> Tuple[LdaModel, List[float]]:
    """Highest consistency score wins; ties keep the earlier candidate"""
    if not candidates:
        raise ValueError("No candidate models to select from")
    scores = [consistency_score(m, X) for m in candidates]
    best = int(np.argmax(scores))
    return candidates[best], scores
