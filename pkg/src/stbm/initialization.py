"""Starting assignments for the C-VEM fit.

Pipeline: a plain LDA variational fit on the documents aggregated per
vertex pair, a matrix of per-pair majority topics, a discordance distance
between vertices (how often two vertices use different topic types toward
or from shared neighbours), then a k-medoids clustering of that distance
with several seeded restarts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import gammaln, psi, xlogy

from .corpus import Corpus

__all__ = [
    "LdaOptions",
    "LdaResult",
    "lda_vem",
    "build_X",
    "distance_matrix",
    "kmeans_like",
    "init_assignments",
]

_BETA_SMOOTH = 1e-10


@dataclass
class LdaOptions:
    max_outer: int = 100
    max_inner: int = 50
    tol: float = 1e-6
    seed: int = 0
    beta_init: np.ndarray | None = None


@dataclass
class LdaResult:
    gamma: np.ndarray          # (D, K) per-document Dirichlet parameters
    beta: np.ndarray           # (K, V)
    alpha: np.ndarray          # (K,)
    bound_trace: list[float] = field(default_factory=list)


def _as_doc_matrix(docs, V=None) -> sparse.csr_matrix:
    if sparse.issparse(docs):
        return docs.tocsr().astype(np.float64)
    rows, cols, vals = [], [], []
    width = V or 0
    for d, doc in enumerate(docs):
        for v, c in doc.items():
            rows.append(d)
            cols.append(v)
            vals.append(float(c))
            width = max(width, v + 1)
    if not vals and not width:
        raise ValueError("documents are all empty")
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(docs), width))


def lda_vem(docs, K: int, alpha=None, opts: LdaOptions | None = None) -> LdaResult:
    """Plain LDA variational EM over a list of bag-of-words documents.

    ``docs`` is a list of {word index: count} dicts or a sparse count
    matrix.  Alternates per-token responsibility and per-document Dirichlet
    updates until the bound stabilizes, then re-estimates the topic-word
    matrix, and repeats.  Returns per-document posteriors, the topic-word
    matrix, and the bound trace (one entry per E-step iteration).
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    opts = opts or LdaOptions()
    X = _as_doc_matrix(docs)
    D, V = X.shape
    if D == 0:
        raise ValueError("no documents given")
    totals = np.asarray(X.sum(axis=1)).ravel()
    if np.any(totals <= 0):
        raise ValueError("documents must be non-empty")
    alpha = np.ones(K) if alpha is None else np.asarray(alpha, dtype=np.float64)

    rng = np.random.default_rng(opts.seed)
    if opts.beta_init is None:
        beta = rng.gamma(100.0, 0.01, size=(K, V))
        beta /= beta.sum(axis=1, keepdims=True)
        beta += _BETA_SMOOTH
        beta /= beta.sum(axis=1, keepdims=True)
    else:
        beta = np.asarray(opts.beta_init, dtype=np.float64).copy()

    indptr, indices, data = X.indptr, X.indices, X.data
    # document index of every stored (doc, word) entry, for flat updates
    rows = np.repeat(np.arange(D), np.diff(indptr))
    starts = indptr[:-1]
    gamma = np.tile(alpha, (D, 1))
    trace: list[float] = []
    prior_const = gammaln(alpha.sum()) - gammaln(alpha).sum()

    prev_outer = None
    for _ in range(opts.max_outer):
        prev_lt = None
        S = np.zeros((K, V))
        for _ in range(opts.max_inner):
            t_all = np.exp(psi(gamma) - psi(gamma.sum(axis=1, keepdims=True)))
            phi = beta[:, indices] * t_all[rows].T        # (K, nnz)
            phi /= phi.sum(axis=0)
            weighted = phi * data                          # (K, nnz)
            n_all = np.add.reduceat(weighted, starts, axis=1).T \
                if D else np.zeros((0, K))
            for k in range(K):
                S[k] = np.bincount(indices, weights=weighted[k], minlength=V)
            entropy = float(xlogy(phi, phi).sum(axis=0) @ data)
            gamma = alpha + n_all
            elog = psi(gamma) - psi(gamma.sum(axis=1, keepdims=True))
            bound = float(xlogy(S, beta).sum()) - entropy
            bound += float((n_all * elog).sum())
            bound += D * prior_const + float(((alpha - 1.0) * elog).sum())
            bound -= float((gammaln(gamma.sum(axis=1))
                            - gammaln(gamma).sum(axis=1)
                            + ((gamma - 1.0) * elog).sum(axis=1)).sum())
            trace.append(bound)
            if prev_lt is not None and abs(bound - prev_lt) \
                    / (abs(prev_lt) + 1e-12) < opts.tol:
                break
            prev_lt = bound
        row_tot = S.sum(axis=1)
        empty = row_tot <= 0.0
        beta = S.copy()
        beta[empty] = 1.0 / V
        beta[~empty] /= row_tot[~empty, None]
        beta += _BETA_SMOOTH
        beta /= beta.sum(axis=1, keepdims=True)
        if prev_outer is not None and abs(trace[-1] - prev_outer) \
                / (abs(prev_outer) + 1e-12) < opts.tol:
            break
        prev_outer = trace[-1]

    return LdaResult(gamma=gamma, beta=beta, alpha=alpha, bound_trace=trace)


def build_X(c: Corpus, lda: LdaResult) -> np.ndarray:
    """Majority-topic matrix: X[i, j] = 1-based majority topic of the
    pairwise-aggregated document on edge (i, j), 0 where there is no edge.

    Expects one LDA document per present edge, in canonical edge order.
    """
    pairs = c.edge_list()
    if lda.gamma.shape[0] != len(pairs):
        raise ValueError(f"LDA was fit on {lda.gamma.shape[0]} documents, "
                         f"corpus has {len(pairs)} edges")
    expected = lda.gamma - lda.alpha[None, :]
    winners = np.argmax(expected, axis=1) + 1
    X = np.zeros((c.M, c.M), dtype=np.int64)
    for (i, j), k in zip(pairs, winners):
        X[i, j] = k
        if not c.directed:
            X[j, i] = k
    return X


def distance_matrix(X, A) -> np.ndarray:
    """Discordance counts between vertices.

    For each ordered third vertex h, vertices i and j disagree if both are
    connected to h (resp. from h) but with different topic types; the
    distance sums disagreements over both directions.
    """
    A = np.asarray(A)
    B = (A > 0).astype(np.float64)
    X = np.asarray(X)
    K = int(X.max(initial=0))
    common_out = B @ B.T
    common_in = B.T @ B
    agree_out = np.zeros_like(common_out)
    agree_in = np.zeros_like(common_in)
    for k in range(1, K + 1):
        Ck = ((X == k) & (A > 0)).astype(np.float64)
        agree_out += Ck @ Ck.T
        agree_in += Ck.T @ Ck
    delta = (common_out - agree_out) + (common_in - agree_in)
    delta = np.rint(delta).astype(np.int64)
    np.fill_diagonal(delta, 0)
    return delta


def kmeans_like(delta, Q: int, seed: int = 0) -> np.ndarray:
    """k-medoids on a raw dissimilarity matrix with D^2-style seeding.

    Seeds Q medoids (first uniform, then proportional to squared distance
    to the nearest chosen medoid), assigns every vertex to its nearest
    medoid, recomputes each medoid as the member minimizing the
    within-cluster distance sum, and iterates to a fixed point.  Ties take
    the lowest index.
    """
    delta = np.asarray(delta, dtype=np.float64)
    M = delta.shape[0]
    if Q > M:
        raise ValueError(f"Q={Q} exceeds the number of vertices {M}")
    rng = np.random.default_rng(seed)

    medoids = [int(rng.integers(M))]
    while len(medoids) < Q:
        d_near = delta[:, medoids].min(axis=1)
        weights = d_near ** 2
        total = weights.sum()
        if total <= 0.0:
            remaining = [i for i in range(M) if i not in set(medoids)]
            medoids.append(remaining[0])
        else:
            medoids.append(int(rng.choice(M, p=weights / total)))

    medoids = np.array(medoids, dtype=np.int64)
    for _ in range(50):
        labels = np.argmin(delta[:, medoids], axis=1)
        new_medoids = medoids.copy()
        for q in range(Q):
            members = np.flatnonzero(labels == q)
            if members.size == 0:
                continue
            sums = delta[np.ix_(members, members)].sum(axis=1)
            new_medoids[q] = members[int(np.argmin(sums))]
        if np.array_equal(new_medoids, medoids):
            break
        medoids = new_medoids
    return np.argmin(delta[:, medoids], axis=1).astype(np.int64)


def topic_profile_kmeans(X, A, Q: int, seed: int = 0,
                         directed: bool = True) -> np.ndarray:
    """k-means on per-vertex topic-usage profiles.

    Each vertex is described by the topic histogram of its outgoing and
    incoming edge types (from the majority-topic matrix X), normalized per
    direction.  Complements the discordance distance: profiles carry signal
    on sparse graphs where few vertex pairs share neighbours.
    """
    A = np.asarray(A)
    X = np.asarray(X)
    M = A.shape[0]
    if Q > M:
        raise ValueError(f"Q={Q} exceeds the number of vertices {M}")
    K = int(X.max(initial=0))
    views = ((X, A), (X.T, A.T)) if directed else ((X, A),)
    feats = []
    for mat, adj in views:
        prof = np.zeros((M, max(K, 1)))
        for k in range(1, K + 1):
            prof[:, k - 1] = ((mat == k) & (adj > 0)).sum(axis=1)
        deg = prof.sum(axis=1, keepdims=True)
        prof = np.divide(prof, deg, out=np.zeros_like(prof), where=deg > 0)
        feats.append(prof)
    F = np.concatenate(feats, axis=1)

    rng = np.random.default_rng(seed)
    centers = F[[int(rng.integers(M))]]
    while centers.shape[0] < Q:
        d2 = ((F[:, None, :] - centers[None]) ** 2).sum(axis=2).min(axis=1)
        total = d2.sum()
        if total <= 0.0:
            centers = np.vstack([centers, F[[int(rng.integers(M))]]])
        else:
            centers = np.vstack([centers, F[[int(rng.choice(M, p=d2 / total))]]])
    labels = None
    for _ in range(50):
        d2 = ((F[:, None, :] - centers[None]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new_centers = centers.copy()
        for q in range(Q):
            members = labels == q
            if members.any():
                new_centers[q] = F[members].mean(axis=0)
        if np.allclose(new_centers, centers):
            break
        centers = new_centers
    return labels.astype(np.int64)


def _doc_seeded_beta(X: sparse.csr_matrix, K: int, rng) -> np.ndarray:
    D, V = X.shape
    rows = rng.choice(D, size=min(K, D), replace=False)
    beta = np.asarray(X[rows].todense(), dtype=np.float64)
    if beta.shape[0] < K:
        beta = np.vstack([beta, np.ones((K - beta.shape[0], V))])
    beta += 1.0 / V
    beta /= beta.sum(axis=1, keepdims=True)
    return beta


def best_lda(docs, K: int, seed: int = 0, n_starts: int = 4,
             opts: LdaOptions | None = None) -> LdaResult:
    """``lda_vem`` from several starting points, keeping the best bound.

    Starts alternate between random topic-word matrices and matrices seeded
    from randomly chosen documents; a single random start regularly lands
    in a poor optimum that merges topics.
    """
    base = opts or LdaOptions()
    X = _as_doc_matrix(docs)
    best = None
    for j in range(max(1, n_starts)):
        sub = int(np.random.SeedSequence([seed, 3, j]).generate_state(1)[0])
        beta_init = None
        if j % 2 == 1:
            beta_init = _doc_seeded_beta(X, K, np.random.default_rng(sub))
        run = lda_vem(X, K, opts=LdaOptions(max_outer=base.max_outer,
                                            max_inner=base.max_inner,
                                            tol=base.tol, seed=sub,
                                            beta_init=beta_init))
        if best is None or run.bound_trace[-1] > best.bound_trace[-1]:
            best = run
    return best


def init_assignments(c: Corpus, Q: int, K: int, n_restarts: int = 10,
                     seed: int = 0) -> list[np.ndarray]:
    """Candidate starting labelings.

    One LDA stage on the pairwise aggregates feeds ``n_restarts`` k-medoids
    runs on the discordance distance and ``n_restarts`` k-means runs on the
    topic-usage profiles, plus one uniformly random labeling for diversity.
    The two clustering views are complementary: discordances need shared
    neighbours (dense graphs), profiles work on sparse graphs.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be at least 1")
    lda_seed = int(np.random.SeedSequence([seed, 0]).generate_state(1)[0])
    lda = best_lda(c.edge_count_matrix(), K, seed=lda_seed)
    X = build_X(c, lda)
    delta = distance_matrix(X, c.adjacency)

    out = []
    for j in range(n_restarts):
        sub = int(np.random.SeedSequence([seed, 1, j]).generate_state(1)[0])
        out.append(kmeans_like(delta, Q, seed=sub))
    for j in range(n_restarts):
        sub = int(np.random.SeedSequence([seed, 4, j]).generate_state(1)[0])
        out.append(topic_profile_kmeans(X, c.adjacency, Q, seed=sub,
                                        directed=c.directed))
    rand_seed = int(np.random.SeedSequence([seed, 2]).generate_state(1)[0])
    rng = np.random.default_rng(rand_seed)
    out.append(rng.integers(Q, size=c.M))
    return out
