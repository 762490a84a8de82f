"""Synthetic corpus sampling, including the benchmark scenarios A, B, C.

The generative process: node labels from cluster proportions, edges from
per-block Bernoulli probabilities, then for every present edge a fixed
number of documents whose word topics follow the block's topic proportions
and whose words follow the per-topic word distributions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, EdgeDocuments, ParseOptions, Vocabulary, tokenize
from .seed_texts import default_seed_texts

__all__ = [
    "GenConfig",
    "GroundTruth",
    "sample_corpus",
    "scenario_config",
    "beta_from_texts",
]

_SIMPLEX_TOL = 1e-12


@dataclass
class GenConfig:
    """Parameters of the sampling model.

    Exactly one of ``theta`` (fixed per-block topic proportions) or
    ``alpha`` (Dirichlet parameter to sample them) must be given.
    ``docs_per_edge`` is either a fixed count or an inclusive (low, high)
    range sampled uniformly per edge.
    """

    M: int
    Q: int
    K: int
    rho: np.ndarray
    pi: np.ndarray
    beta: np.ndarray
    vocabulary: Vocabulary
    theta: np.ndarray | None = None
    alpha: np.ndarray | None = None
    doc_length: int = 150
    docs_per_edge: int | tuple[int, int] = 1
    directed: bool = True
    topic_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=np.float64)
        self.pi = np.asarray(self.pi, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.theta is not None:
            self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.alpha is not None:
            self.alpha = np.asarray(self.alpha, dtype=np.float64)

    def validate(self):
        M, Q, K = self.M, self.Q, self.K
        V = len(self.vocabulary)
        if M < 1 or Q < 1 or K < 1:
            raise ValueError("M, Q, K must be positive")
        if self.rho.shape != (Q,) or abs(self.rho.sum() - 1.0) > _SIMPLEX_TOL \
                or np.any(self.rho < 0):
            raise ValueError("rho must be a length-Q simplex vector")
        if self.pi.shape != (Q, Q) or np.any(self.pi < 0) or np.any(self.pi > 1):
            raise ValueError("pi must be a QxQ matrix of probabilities")
        if not self.directed and np.any(self.pi != self.pi.T):
            raise ValueError("pi must be symmetric for undirected networks")
        if self.beta.shape != (K, V):
            raise ValueError(f"beta must be {K}x{V}")
        if np.any(self.beta < 0) or np.any(np.abs(self.beta.sum(axis=1) - 1.0)
                                           > 1e-8):
            raise ValueError("beta rows must be simplex vectors")
        if (self.theta is None) == (self.alpha is None):
            raise ValueError("exactly one of theta or alpha must be set")
        if self.theta is not None:
            if self.theta.shape != (Q, Q, K):
                raise ValueError(f"theta must be {Q}x{Q}x{K}")
            if np.any(self.theta < 0) or \
                    np.any(np.abs(self.theta.sum(axis=2) - 1.0) > _SIMPLEX_TOL):
                raise ValueError("each theta[q, r] must be a simplex vector")
        if self.alpha is not None and (self.alpha.shape != (K,)
                                       or np.any(self.alpha <= 0)):
            raise ValueError("alpha must be a length-K positive vector")
        if not 0.0 <= self.topic_noise <= 1.0:
            raise ValueError("topic_noise must lie in [0, 1]")
        if self.doc_length < 1:
            raise ValueError("doc_length must be positive")
        lo, hi = self._doc_range()
        if lo < 1 or hi < lo:
            raise ValueError("docs_per_edge must be a positive count or range")

    def _doc_range(self) -> tuple[int, int]:
        if isinstance(self.docs_per_edge, tuple):
            return self.docs_per_edge
        return (self.docs_per_edge, self.docs_per_edge)


@dataclass
class GroundTruth:
    """True node labels and realized per-word topic draws."""

    y: np.ndarray
    edge_topics: dict[tuple[int, int], list[np.ndarray]]
    edge_majority_topic: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.edge_majority_topic:
            for pair, docs in self.edge_topics.items():
                hist = np.bincount(np.concatenate(docs))
                self.edge_majority_topic[pair] = int(np.argmax(hist))


def sample_corpus(cfg: GenConfig) -> tuple[Corpus, GroundTruth]:
    """Draw one corpus and its ground truth from the generative model."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    M, Q, K = cfg.M, cfg.Q, cfg.K
    V = len(cfg.vocabulary)

    y = rng.choice(Q, size=M, p=cfg.rho)

    block_p = cfg.pi[np.ix_(y, y)]
    u = rng.random((M, M))
    if cfg.directed:
        A = (u < block_p).astype(np.uint8)
        np.fill_diagonal(A, 0)
    else:
        upper = np.triu(u < block_p, k=1)
        A = (upper | upper.T).astype(np.uint8)

    if cfg.theta is not None:
        theta = cfg.theta
    else:
        theta = np.empty((Q, Q, K))
        for q in range(Q):
            for r in range(Q):
                if not cfg.directed and r < q:
                    theta[q, r] = theta[r, q]
                else:
                    theta[q, r] = rng.dirichlet(cfg.alpha)

    beta_cum = np.cumsum(cfg.beta, axis=1)
    beta_cum[:, -1] = 1.0
    theta_cum = np.cumsum(theta, axis=2)
    theta_cum[:, :, -1] = 1.0

    if cfg.directed:
        pairs = [(int(i), int(j)) for i, j in zip(*np.nonzero(A))]
    else:
        iu, ju = np.nonzero(np.triu(A, k=1))
        pairs = [(int(i), int(j)) for i, j in zip(iu, ju)]
    pairs.sort()

    lo, hi = cfg._doc_range()
    edges: dict[tuple[int, int], EdgeDocuments] = {}
    edge_topics: dict[tuple[int, int], list[np.ndarray]] = {}
    for (i, j) in pairs:
        q, r = int(y[i]), int(y[j])
        n_docs = lo if lo == hi else int(rng.integers(lo, hi + 1))
        docs = []
        topics = []
        for _ in range(n_docs):
            t = np.searchsorted(theta_cum[q, r], rng.random(cfg.doc_length))
            if cfg.topic_noise > 0.0 and K > 1:
                flip = rng.random(cfg.doc_length) < cfg.topic_noise
                n_flip = int(flip.sum())
                if n_flip:
                    shift = rng.integers(1, K, size=n_flip)
                    t[flip] = (t[flip] + shift) % K
            w = np.empty(cfg.doc_length, dtype=np.int64)
            for k in range(K):
                mask = t == k
                n_k = int(mask.sum())
                if n_k:
                    w[mask] = np.searchsorted(beta_cum[k], rng.random(n_k))
            counts = np.bincount(w, minlength=V)
            docs.append({int(v): int(counts[v]) for v in np.nonzero(counts)[0]})
            topics.append(t)
        edges[(i, j)] = EdgeDocuments(i, j, docs)
        edge_topics[(i, j)] = topics

    vertex_ids = [f"v{i}" for i in range(M)]
    corpus = Corpus(vertex_ids, cfg.directed, A, edges, cfg.vocabulary)
    return corpus, GroundTruth(y=y, edge_topics=edge_topics)


def beta_from_texts(texts, options: ParseOptions | None = None,
                    smoothing: float = 1e-6):
    """Empirical word distributions of raw texts over their union vocabulary.

    Row k is the word frequency vector of text k, smoothed by adding
    ``smoothing`` to every entry and renormalizing.
    """
    if not texts:
        raise ValueError("at least one text is required")
    opts = options or ParseOptions()
    token_lists = [tokenize(t, opts) for t in texts]
    for idx, toks in enumerate(token_lists):
        if not toks:
            raise ValueError(f"text {idx} is empty after tokenization")
    words: list[str] = []
    seen = set()
    for toks in token_lists:
        for t in toks:
            if t not in seen:
                seen.add(t)
                words.append(t)
    vocab = Vocabulary.from_words(words)
    beta = np.zeros((len(texts), len(vocab)))
    for k, toks in enumerate(token_lists):
        for t in toks:
            beta[k, vocab.index[t]] += 1.0
        beta[k] /= beta[k].sum()
    beta += smoothing
    beta /= beta.sum(axis=1, keepdims=True)
    return beta, vocab


def _scenario_theta(name: str, Q: int, K: int) -> np.ndarray:
    theta = np.zeros((Q, Q, K))
    if name == "A":
        for q in range(3):
            theta[q, q, q] = 1.0
        for q in range(3):
            for r in range(3):
                if q != r:
                    theta[q, r, 3] = 1.0
    elif name == "B":
        theta[0, 0, 0] = 1.0
        theta[1, 1, 1] = 1.0
        theta[0, 1, 2] = theta[1, 0, 2] = 1.0
    else:  # C: groups 0 and 2 share topic 0, groups 1 and 3 share topic 1
        theta[0, 0, 0] = theta[2, 2, 0] = 1.0
        theta[1, 1, 1] = theta[3, 3, 1] = 1.0
        for q in range(4):
            for r in range(4):
                if q != r:
                    theta[q, r, 2] = 1.0
    return theta


def scenario_config(name: str, difficulty: str = "easy", seed_texts=None,
                    m: int = 100, seed: int = 0) -> GenConfig:
    """Benchmark scenario settings.

    A: three communities, one topic per community plus a fourth topic for
    between-community messages.  B: a single community whose two groups are
    separated by topics only.  C: four groups in three communities; the
    groups sharing a community are separated by their within-group topic.
    ``hard1`` weakens the community structure (cross-community edge
    probability 0.2); ``hard2`` resamples 40% of word topics.
    """
    name = name.upper()
    difficulty = difficulty.lower()
    if name not in ("A", "B", "C"):
        raise ValueError(f"unknown scenario {name!r}")
    if difficulty not in ("easy", "hard1", "hard2"):
        raise ValueError(f"unknown difficulty {difficulty!r}")

    Q, K = {"A": (3, 4), "B": (2, 3), "C": (4, 3)}[name]
    texts = list(seed_texts) if seed_texts is not None else default_seed_texts()
    if len(texts) < K:
        raise ValueError(f"scenario {name} needs at least {K} seed texts")
    beta, vocab = beta_from_texts(texts[:K])

    off = 0.2 if difficulty == "hard1" else 0.01
    if name == "B":
        pi = np.full((Q, Q), 0.25)
    else:
        pi = np.full((Q, Q), off)
        np.fill_diagonal(pi, 0.25)
        if name == "C":
            # groups 2 and 3 form a single community split only by topics
            pi[2, 3] = pi[3, 2] = 0.25

    return GenConfig(
        M=m, Q=Q, K=K,
        rho=np.full(Q, 1.0 / Q),
        pi=pi,
        beta=beta,
        vocabulary=vocab,
        theta=_scenario_theta(name, Q, K),
        doc_length=150,
        docs_per_edge=1,
        directed=True,
        topic_noise=0.4 if difficulty == "hard2" else 0.0,
        seed=seed,
    )
