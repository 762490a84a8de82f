"""Classification variational EM for joint node clustering and topic modeling.

The algorithm alternates three kinds of updates on the evidence lower
bound: variational E-steps for the per-token topic responsibilities (phi)
and the per-block Dirichlet posteriors (gamma), M-steps for the model
parameters (beta, rho, pi), and greedy hard reassignment of the node
labels.  Every step is an exact coordinate ascent on the bound, so the
bound trace is non-decreasing.

Tokens with the same word type on the same cluster pair share one
responsibility vector, so the E-step works on per-block word-count
aggregates instead of individual tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, psi, xlogy

from .corpus import Corpus

__all__ = [
    "ModelParams",
    "PhiStats",
    "VariationalState",
    "FitOptions",
    "FitResult",
    "NumericalError",
    "update_phi",
    "update_gamma",
    "m_step_beta",
    "m_step_rho",
    "m_step_pi",
    "sbm_loglik",
    "lda_lower_bound",
    "lower_bound",
    "greedy_swap_Y",
    "edge_majority_topics",
    "fit",
    "fit_best",
]

PROB_EPS = 1e-10      # clamp for probabilities inside logarithms
BETA_SMOOTH = 1e-10   # floor mixed into topic-word rows after each M-step
SWAP_MIN_GAIN = 1e-10  # strict-improvement threshold against float noise


class NumericalError(RuntimeError):
    """Raised when the bound becomes non-finite during a fit."""


@dataclass
class ModelParams:
    """Model parameters: cluster proportions, connection probabilities,
    topic-word distributions, and the fixed Dirichlet hyperparameter."""

    rho: np.ndarray    # (Q,)
    pi: np.ndarray     # (Q, Q)
    beta: np.ndarray   # (K, V)
    alpha: np.ndarray  # (K,)


@dataclass
class PhiStats:
    """Sufficient statistics of the collapsed word-topic responsibilities.

    ``edge_topic_totals[e, k]`` sums responsibilities of all tokens on edge
    e; ``block_topic_totals`` aggregates them per cluster pair under the
    labels the stats were computed with; ``word_topic_stats[k, v]`` is the
    responsibility-weighted count of word v in topic k; ``edge_entropy[e]``
    is sum(phi * log phi) over the edge's tokens.
    """

    edge_topic_totals: np.ndarray   # (E, K)
    block_topic_totals: np.ndarray  # (Q, Q, K)
    word_topic_stats: np.ndarray    # (K, V)
    edge_entropy: np.ndarray        # (E,)


@dataclass
class VariationalState:
    gamma: np.ndarray  # (Q, Q, K); mirrored across (q, r) if undirected
    phi_stats: PhiStats


@dataclass
class FitOptions:
    max_outer: int = 100
    max_inner: int = 50
    tol: float = 1e-6
    seed: int = 0
    alpha: np.ndarray | None = None     # defaults to all-ones
    beta_init: np.ndarray | None = None
    track_inner: bool = False
    max_sweeps: int = 100


@dataclass
class FitResult:
    y: np.ndarray
    params: ModelParams
    vstate: VariationalState
    bound_trace: list[float]
    final_bound: float
    Q: int
    K: int
    seed: int
    iterations: int
    icl: float | None = None
    inner_bound_trace: list[float] = field(default_factory=list)


class _EdgeView:
    """Flat arrays describing the present edges of a corpus."""

    def __init__(self, c: Corpus):
        pairs = c.edge_list()
        self.src = np.array([p[0] for p in pairs], dtype=np.int64)
        self.dst = np.array([p[1] for p in pairs], dtype=np.int64)
        self.counts = c.edge_count_matrix()
        self.tokens = np.asarray(self.counts.sum(axis=1)).ravel()
        self.directed = c.directed
        self.M = c.M
        self.V = c.V
        self.E = len(pairs)
        out: list[list[int]] = [[] for _ in range(c.M)]
        inc: list[list[int]] = [[] for _ in range(c.M)]
        for e, (i, j) in enumerate(pairs):
            out[i].append(e)
            inc[j].append(e)
        self.out_edges = [np.array(a, dtype=np.int64) for a in out]
        self.in_edges = [np.array(a, dtype=np.int64) for a in inc]

    def blocks(self, y):
        """Canonical cluster-pair key of each edge under labels y."""
        q = y[self.src]
        r = y[self.dst]
        if self.directed:
            return q, r
        return np.minimum(q, r), np.maximum(q, r)


def _view(c) -> _EdgeView:
    if isinstance(c, _EdgeView):
        return c
    cached = getattr(c, "_inference_view", None)
    if cached is None:
        cached = _EdgeView(c)
        c._inference_view = cached
    return cached


def _check_labels(y, M: int, Q: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (M,):
        raise ValueError(f"label vector has shape {y.shape}, expected ({M},)")
    if y.size and (y.min() < 0 or y.max() >= Q):
        raise ValueError(f"labels must lie in 0..{Q - 1}")
    return y


def _dirichlet_elog(gamma: np.ndarray) -> np.ndarray:
    """E[log theta] under Dir(gamma), applied over the last axis."""
    return psi(gamma) - psi(gamma.sum(axis=-1, keepdims=True))


def _clog(p: np.ndarray | float) -> np.ndarray:
    return np.log(np.clip(p, PROB_EPS, 1.0 - PROB_EPS))


def update_phi(c, y, gamma, beta) -> PhiStats:
    """Variational update of the token-topic responsibilities.

    For a token of word type v on an edge whose endpoints lie in clusters
    (q, r): phi_k proportional to beta[k, v] * exp(E[log theta_{qr, k}]),
    normalized over topics.  Responsibilities are identical for all tokens
    sharing (v, q, r), so they are computed once per block and word type.
    """
    view = _view(c)
    gamma = np.asarray(gamma, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    Q = gamma.shape[0]
    K, V = beta.shape
    y = _check_labels(y, view.M, Q)

    observed = np.asarray(view.counts.sum(axis=0)).ravel() > 0
    dead = observed & (beta.sum(axis=0) <= 0.0)
    if np.any(dead):
        raise NumericalError(
            f"word index {int(np.nonzero(dead)[0][0])} has zero probability "
            f"under every topic")

    elog = _dirichlet_elog(gamma)
    exp_elog = np.exp(elog)

    qk, rk = view.blocks(y)
    block_id = qk * Q + rk
    order = np.argsort(block_id, kind="stable")
    boundaries = np.flatnonzero(np.diff(block_id[order])) + 1
    groups = np.split(order, boundaries)

    ett = np.zeros((view.E, K))
    btt = np.zeros((Q, Q, K))
    S = np.zeros((K, V))
    eent = np.zeros(view.E)
    for idx in groups:
        if idx.size == 0:
            continue
        q, r = int(qk[idx[0]]), int(rk[idx[0]])
        weighted = beta * exp_elog[q, r][:, None]      # (K, V)
        col = weighted.sum(axis=0)
        np.clip(col, np.finfo(np.float64).tiny, None, out=col)
        phi = weighted / col                           # (K, V)
        C = view.counts[idx]                           # (E_b, V) sparse
        n_b = C @ phi.T
        ett[idx] = n_b
        btt[q, r] = n_b.sum(axis=0)
        m = np.asarray(C.sum(axis=0)).ravel()
        S += phi * m
        eent[idx] = C @ xlogy(phi, phi).sum(axis=0)
    return PhiStats(ett, btt, S, eent)


def update_gamma(c, y, phi_stats: PhiStats, alpha) -> np.ndarray:
    """Dirichlet posterior parameters per cluster pair:
    gamma[q, r] = alpha + summed responsibilities of the block's tokens."""
    view = _view(c)
    alpha = np.asarray(alpha, dtype=np.float64)
    btt = phi_stats.block_topic_totals
    gamma = alpha[None, None, :] + btt
    if not view.directed:
        Q = gamma.shape[0]
        for q in range(Q):
            for r in range(q + 1, Q):
                gamma[r, q] = gamma[q, r]
    return gamma


def m_step_beta(phi_stats: PhiStats) -> np.ndarray:
    """Topic-word distributions proportional to the responsibility-weighted
    word counts; all-zero topics fall back to uniform rows."""
    S = phi_stats.word_topic_stats
    K, V = S.shape
    beta = S.copy()
    totals = beta.sum(axis=1)
    empty = totals <= 0.0
    beta[empty] = 1.0 / V
    beta[~empty] /= totals[~empty, None]
    beta += BETA_SMOOTH
    beta /= beta.sum(axis=1, keepdims=True)
    return beta


def m_step_rho(y, Q: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    return np.bincount(y, minlength=Q) / y.size


def m_step_pi(adjacency, y, Q: int, directed: bool = True) -> np.ndarray:
    """Per-block edge frequency: observed edges over possible dyads.
    Blocks with no possible dyad get 0."""
    A = np.asarray(adjacency, dtype=np.float64)
    y = _check_labels(y, A.shape[0], Q)
    Yind = np.zeros((A.shape[0], Q))
    Yind[np.arange(A.shape[0]), y] = 1.0
    edges = Yind.T @ A @ Yind
    n = np.bincount(y, minlength=Q).astype(np.float64)
    dyads = np.outer(n, n) - np.diag(n)
    pi = np.zeros((Q, Q))
    np.divide(edges, dyads, out=pi, where=dyads > 0)
    return pi


def _block_counts(adjacency, y, Q):
    A = np.asarray(adjacency, dtype=np.float64)
    Yind = np.zeros((A.shape[0], Q))
    Yind[np.arange(A.shape[0]), y] = 1.0
    edges = Yind.T @ A @ Yind
    n = np.bincount(y, minlength=Q).astype(np.float64)
    dyads = np.outer(n, n) - np.diag(n)
    return edges, dyads


def sbm_loglik(adjacency, y, rho, pi, directed: bool = True) -> float:
    """Complete-data log-likelihood of the block model part,
    log p(A | Y, pi) + log p(Y | rho), with clamped logarithms."""
    Q = len(rho)
    y = _check_labels(y, np.asarray(adjacency).shape[0], Q)
    edges, dyads = _block_counts(adjacency, y, Q)
    ll = float(np.sum(edges * _clog(pi)) + np.sum((dyads - edges) * _clog(1.0 - pi)))
    if not directed:
        ll *= 0.5
    ll += float(np.bincount(y, minlength=Q) @ _clog(rho))
    return ll


def _block_iter(Q: int, directed: bool):
    for q in range(Q):
        for r in range(Q):
            if directed or q <= r:
                yield q, r


def lda_lower_bound(c, y, gamma, beta, alpha, phi_stats: PhiStats) -> float:
    """Text part of the evidence lower bound.

    Evaluated from the stored responsibilities; block totals are rebuilt
    from the per-edge totals under the *current* labels so the value stays
    correct after label swaps performed with phi held fixed.
    """
    view = _view(c)
    gamma = np.asarray(gamma, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    Q = gamma.shape[0]
    y = _check_labels(y, view.M, Q)

    elog = _dirichlet_elog(gamma)

    qk, rk = view.blocks(y)
    T = np.zeros_like(gamma)
    np.add.at(T, (qk, rk), phi_stats.edge_topic_totals)

    val = float(xlogy(phi_stats.word_topic_stats, beta).sum())
    val += float((T * elog).sum())
    val -= float(phi_stats.edge_entropy.sum())

    prior_const = gammaln(alpha.sum()) - gammaln(alpha).sum()
    for q, r in _block_iter(Q, view.directed):
        g = gamma[q, r]
        e = elog[q, r]
        val += prior_const + (alpha - 1.0) @ e
        val -= gammaln(g.sum()) - gammaln(g).sum() + (g - 1.0) @ e
    return val


def lower_bound(c, y, params: ModelParams, vstate: VariationalState) -> float:
    """Full evidence lower bound: text part plus block-model likelihood."""
    view = _view(c)
    lt = lda_lower_bound(c, y, vstate.gamma, params.beta, params.alpha,
                         vstate.phi_stats)
    return lt + sbm_loglik(np.asarray(_adjacency_of(c)), y, params.rho,
                           params.pi, view.directed)


def _adjacency_of(c):
    if isinstance(c, Corpus):
        return c.adjacency
    raise TypeError("lower_bound requires a Corpus")


def _candidate_scores(view, y, i, elog, logpi, log1mpi, logrho, ett, sizes):
    """Score of assigning vertex i to each cluster, all other labels fixed.

    Only the terms that involve i are evaluated: the block-model terms of
    its incident and absent dyads, its class-proportion term, and the
    expected-log-theta term of the tokens on its incident edges re-keyed
    to the candidate cluster pair (responsibilities held fixed).
    """
    Q = logrho.size
    K = ett.shape[1]
    m = sizes.astype(np.float64).copy()
    m[y[i]] -= 1.0

    if view.directed:
        out_e = view.out_edges[i]
        in_e = view.in_edges[i]
        out_n = y[view.dst[out_e]]
        in_n = y[view.src[in_e]]
        eo = np.bincount(out_n, minlength=Q).astype(np.float64)
        ei = np.bincount(in_n, minlength=Q).astype(np.float64)
        scores = (logpi @ eo + log1mpi @ (m - eo)
                  + logpi.T @ ei + log1mpi.T @ (m - ei))
        G_out = np.zeros((Q, K))
        np.add.at(G_out, out_n, ett[out_e])
        G_in = np.zeros((Q, K))
        np.add.at(G_in, in_n, ett[in_e])
        scores += np.einsum("ck,sck->s", G_out, elog)
        scores += np.einsum("ck,csk->s", G_in, elog)
    else:
        inc = np.concatenate([view.out_edges[i], view.in_edges[i]])
        other = np.where(view.src[inc] == i, view.dst[inc], view.src[inc])
        nb = y[other]
        e = np.bincount(nb, minlength=Q).astype(np.float64)
        scores = logpi @ e + log1mpi @ (m - e)
        G = np.zeros((Q, K))
        np.add.at(G, nb, ett[inc])
        # elog is mirrored, so [s, c] addresses the unordered pair {s, c}
        scores += np.einsum("ck,sck->s", G, elog)
    scores += logrho
    return scores


def greedy_swap_Y(c, y, params: ModelParams, vstate: VariationalState,
                  rng=None):
    """One sweep of greedy label swaps in seeded random vertex order.

    For each vertex the best strictly-improving relabeling (with parameters
    and responsibilities held fixed) is applied immediately; returns the
    new labels and whether any swap occurred.
    """
    view = _view(c)
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) \
        else rng
    Q = params.rho.size
    y = _check_labels(y, view.M, Q).copy()
    if Q == 1:
        return y, False

    elog = _dirichlet_elog(vstate.gamma)
    logpi = _clog(params.pi)
    log1mpi = _clog(1.0 - params.pi)
    logrho = _clog(params.rho)
    ett = vstate.phi_stats.edge_topic_totals
    sizes = np.bincount(y, minlength=Q)

    improved = False
    for i in rng.permutation(view.M):
        scores = _candidate_scores(view, y, i, elog, logpi, log1mpi,
                                   logrho, ett, sizes)
        q = y[i]
        r = int(np.argmax(scores))
        if r != q and scores[r] > scores[q] + SWAP_MIN_GAIN:
            sizes[q] -= 1
            sizes[r] += 1
            y[i] = r
            improved = True
    return y, improved


def edge_majority_topics(c, vstate: VariationalState, y) -> dict:
    """Per-edge argmax of the expected topic counts; ties take the
    smallest topic index."""
    view = _view(c)
    _check_labels(y, view.M, vstate.gamma.shape[0])
    ett = vstate.phi_stats.edge_topic_totals
    winners = np.argmax(ett, axis=1)
    pairs = c.edge_list()
    return {pair: int(k) for pair, k in zip(pairs, winners)}


def _random_beta(rng, K, V):
    beta = rng.gamma(100.0, 0.01, size=(K, V))
    beta /= beta.sum(axis=1, keepdims=True)
    beta += BETA_SMOOTH
    beta /= beta.sum(axis=1, keepdims=True)
    return beta


def _rel_change(new, old):
    return abs(new - old) / (abs(old) + 1e-12)


def fit(c: Corpus, Q: int, K: int, init, opts: FitOptions | None = None) -> FitResult:
    """Run the classification VEM to convergence from one initial labeling.

    Each outer iteration alternates responsibilities/Dirichlet updates to
    convergence of the text bound, one topic-word M-step, greedy label
    sweeps until no swap improves the bound, and the rho/pi M-steps.  Stops
    when the relative change of the bound falls below ``opts.tol``.
    """
    opts = opts or FitOptions()
    if not 1 <= Q <= c.M:
        raise ValueError(f"Q={Q} must lie in 1..M={c.M}")
    if K < 1:
        raise ValueError("K must be at least 1")
    view = _view(c)
    rng = np.random.default_rng(opts.seed)
    alpha = np.ones(K) if opts.alpha is None else np.asarray(opts.alpha, float)
    if alpha.shape != (K,) or np.any(alpha <= 0):
        raise ValueError("alpha must be a positive length-K vector")

    y = _check_labels(init, c.M, Q).copy()
    beta = _random_beta(rng, K, c.V) if opts.beta_init is None \
        else np.asarray(opts.beta_init, dtype=np.float64).copy()
    if beta.shape != (K, c.V):
        raise ValueError(f"beta_init must be {K}x{c.V}")
    gamma = np.tile(alpha, (Q, Q, 1))
    rho = m_step_rho(y, Q)
    pi = m_step_pi(c.adjacency, y, Q, view.directed)

    bound_trace: list[float] = []
    inner_trace: list[float] = []
    prev_bound = None
    stats = None
    n_outer = 0
    for n_outer in range(1, opts.max_outer + 1):
        prev_lt = None
        for _ in range(opts.max_inner):
            stats = update_phi(c, y, gamma, beta)
            gamma = update_gamma(c, y, stats, alpha)
            lt = lda_lower_bound(c, y, gamma, beta, alpha, stats)
            if opts.track_inner:
                inner_trace.append(lt)
            if prev_lt is not None and _rel_change(lt, prev_lt) < opts.tol:
                break
            prev_lt = lt
        beta = m_step_beta(stats)

        for _ in range(opts.max_sweeps):
            vstate = VariationalState(gamma, stats)
            params = ModelParams(rho, pi, beta, alpha)
            y, improved = greedy_swap_Y(c, y, params, vstate, rng)
            if not improved:
                break

        rho = m_step_rho(y, Q)
        pi = m_step_pi(c.adjacency, y, Q, view.directed)

        params = ModelParams(rho, pi, beta, alpha)
        vstate = VariationalState(gamma, stats)
        bound = lower_bound(c, y, params, vstate)
        if not np.isfinite(bound):
            raise NumericalError(
                f"non-finite bound at outer iteration {n_outer}; "
                f"trace so far: {bound_trace}")
        bound_trace.append(bound)
        if prev_bound is not None and _rel_change(bound, prev_bound) < opts.tol:
            break
        prev_bound = bound

    return FitResult(
        y=y,
        params=ModelParams(rho, pi, beta, alpha),
        vstate=VariationalState(gamma, stats),
        bound_trace=bound_trace,
        final_bound=bound_trace[-1],
        Q=Q, K=K, seed=opts.seed, iterations=n_outer,
        inner_bound_trace=inner_trace,
    )


def fit_best(c: Corpus, Q: int, K: int, n_restarts: int = 10, seed: int = 0,
             opts: FitOptions | None = None) -> FitResult:
    """Initialize with the standard strategy and keep the restart with the
    highest converged bound."""
    from .initialization import init_assignments

    base = opts or FitOptions()
    inits = init_assignments(c, Q, K, n_restarts=n_restarts, seed=seed)
    best = None
    for idx, init in enumerate(inits):
        sub = int(np.random.SeedSequence([seed, 7, idx]).generate_state(1)[0])
        run_opts = FitOptions(max_outer=base.max_outer, max_inner=base.max_inner,
                              tol=base.tol, seed=sub, alpha=base.alpha,
                              track_inner=base.track_inner,
                              max_sweeps=base.max_sweeps)
        result = fit(c, Q, K, init, run_opts)
        if best is None or result.final_bound > best.final_bound:
            best = result
    return best
