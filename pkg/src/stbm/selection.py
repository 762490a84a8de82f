"""Model selection: the penalized criterion for one fit and a (Q, K) grid
search over fits.

The criterion splits into a BIC-penalized text bound (the meta-corpus has
Q^2 documents, or Q(Q+1)/2 when undirected) and the classification
likelihood of the block model with its own penalties.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus
from .inference import (FitOptions, FitResult, NumericalError, fit,
                        lda_lower_bound, m_step_pi, m_step_rho, sbm_loglik)
from .initialization import (LdaOptions, build_X, distance_matrix,
                             kmeans_like, lda_vem)

__all__ = ["IclBreakdown", "GridResult", "icl", "grid_search"]


@dataclass
class IclBreakdown:
    """Criterion value and its five components."""

    bound_lda: float
    pen_lda: float
    sbm_loglik: float
    pen_pi: float
    pen_rho: float
    icl: float


def icl(fit_result: FitResult, c: Corpus) -> IclBreakdown:
    """Integrated-classification-likelihood criterion of a converged fit.

    bound_lda - K(V-1)/2 log Q^2 + max log p(A,Y|rho,pi)
    - Q^2/2 log M(M-1) - (Q-1)/2 log M; undirected networks replace
    M(M-1) by M(M-1)/2 and Q^2 by Q(Q+1)/2 in the pi penalty.
    """
    Q, K = fit_result.Q, fit_result.K
    M, V = c.M, c.V
    y = fit_result.y

    bound_lda = lda_lower_bound(c, y, fit_result.vstate.gamma,
                                fit_result.params.beta,
                                fit_result.params.alpha,
                                fit_result.vstate.phi_stats)
    rho_hat = m_step_rho(y, Q)
    pi_hat = m_step_pi(c.adjacency, y, Q, c.directed)
    sbm = sbm_loglik(c.adjacency, y, rho_hat, pi_hat, c.directed)

    pen_lda = K * (V - 1) / 2.0 * math.log(Q ** 2) if Q > 1 else 0.0
    if c.directed:
        pen_pi = Q ** 2 / 2.0 * math.log(M * (M - 1))
    else:
        pen_pi = Q * (Q + 1) / 4.0 * math.log(M * (M - 1) / 2)
    pen_rho = (Q - 1) / 2.0 * math.log(M)
    total = bound_lda - pen_lda + sbm - pen_pi - pen_rho
    return IclBreakdown(bound_lda=bound_lda, pen_lda=pen_lda, sbm_loglik=sbm,
                        pen_pi=pen_pi, pen_rho=pen_rho, icl=total)


@dataclass
class GridResult:
    table: dict[tuple[int, int], dict] = field(default_factory=dict)
    best: tuple[int, int] | None = None
    best_fit: FitResult | None = None


def _cell_seed(seed, Q, K, tag):
    return int(np.random.SeedSequence([seed, Q, K, tag]).generate_state(1)[0])


def _fit_cell(args):
    c, Q, K, delta, n_restarts, seed, opts = args
    assignments = []
    for j in range(n_restarts):
        assignments.append(kmeans_like(delta, Q, seed=_cell_seed(seed, Q, K, 10 + j)))
    rng = np.random.default_rng(_cell_seed(seed, Q, K, 9))
    assignments.append(rng.integers(Q, size=c.M))

    best = None
    try:
        for j, init in enumerate(assignments):
            run_opts = FitOptions(max_outer=opts.max_outer,
                                  max_inner=opts.max_inner, tol=opts.tol,
                                  seed=_cell_seed(seed, Q, K, 100 + j),
                                  alpha=opts.alpha)
            result = fit(c, Q, K, init, run_opts)
            if best is None or result.final_bound > best.final_bound:
                best = result
    except NumericalError as err:
        return (Q, K), None, str(err)
    breakdown = icl(best, c)
    best.icl = breakdown.icl
    return (Q, K), (best, breakdown), None


def grid_search(c: Corpus, Q_range, K_range, n_restarts: int = 10,
                seed: int = 0, fit_opts: FitOptions | None = None,
                n_jobs: int = 1, restrict_k_le_q: bool = False) -> GridResult:
    """Fit every (Q, K) cell with the shared restart budget and pick the
    criterion argmax (ties go to smaller Q, then smaller K).

    Cells that fail numerically are recorded with criterion -inf and
    flagged rather than aborting the search.  The initialization distance
    matrix is computed once per K and shared across the Q cells.
    """
    Q_values = sorted(set(int(q) for q in Q_range))
    K_values = sorted(set(int(k) for k in K_range))
    if not Q_values or not K_values:
        raise ValueError("empty model ranges")
    opts = fit_opts or FitOptions()

    deltas = {}
    for K in K_values:
        lda = lda_vem(c.edge_count_matrix(), K,
                      opts=LdaOptions(seed=_cell_seed(seed, 0, K, 0)))
        deltas[K] = distance_matrix(build_X(c, lda), c.adjacency)

    cells = [(Q, K) for Q in Q_values for K in K_values
             if not (restrict_k_le_q and K > Q)]
    jobs = [(c, Q, K, deltas[K], n_restarts, seed, opts) for Q, K in cells]

    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_fit_cell, jobs))
    else:
        outcomes = [_fit_cell(j) for j in jobs]

    result = GridResult()
    for (Q, K), payload, error in outcomes:
        if payload is None:
            result.table[(Q, K)] = {"icl": -np.inf, "failed": True,
                                    "error": error}
            continue
        best, breakdown = payload
        result.table[(Q, K)] = {
            "icl": breakdown.icl,
            "bound_lda": breakdown.bound_lda,
            "pen_lda": breakdown.pen_lda,
            "sbm_loglik": breakdown.sbm_loglik,
            "pen_pi": breakdown.pen_pi,
            "pen_rho": breakdown.pen_rho,
            "final_bound": best.final_bound,
            "iterations": best.iterations,
            "failed": False,
        }
        if result.best is None or breakdown.icl > result.table[result.best]["icl"]:
            result.best = (Q, K)
            result.best_fit = best
    return result
