"""Joint clustering of network vertices and topic modeling of textual edges.

The library couples a stochastic block model over the adjacency structure
with a topic model over the documents exchanged along edges, inferred by a
classification variational EM, with an integrated-classification-likelihood
criterion for choosing the number of clusters and topics.
"""

__version__ = "0.1.0"

from .corpus import (Corpus, CorpusError, EdgeDocuments, ParseOptions,
                     Vocabulary, aggregate_cluster_documents,
                     aggregate_pair_documents, load_corpus, tokenize)
from .evaluation import ari, edge_partition
from .generator import (GenConfig, GroundTruth, beta_from_texts,
                        sample_corpus, scenario_config)
from .inference import (FitOptions, FitResult, ModelParams, NumericalError,
                        PhiStats, VariationalState, edge_majority_topics,
                        fit, fit_best, greedy_swap_Y, lda_lower_bound,
                        lower_bound, m_step_beta, m_step_pi, m_step_rho,
                        sbm_loglik, update_gamma, update_phi)
from .initialization import (LdaOptions, LdaResult, build_X, distance_matrix,
                             init_assignments, kmeans_like, lda_vem)
from .seed_texts import default_seed_texts
from .selection import GridResult, IclBreakdown, grid_search, icl

__all__ = [
    "__version__",
    "Corpus", "CorpusError", "EdgeDocuments", "ParseOptions", "Vocabulary",
    "aggregate_cluster_documents", "aggregate_pair_documents", "load_corpus",
    "tokenize",
    "GenConfig", "GroundTruth", "beta_from_texts", "sample_corpus",
    "scenario_config", "default_seed_texts",
    "FitOptions", "FitResult", "ModelParams", "NumericalError", "PhiStats",
    "VariationalState", "edge_majority_topics", "fit", "fit_best",
    "greedy_swap_Y", "lda_lower_bound", "lower_bound", "m_step_beta",
    "m_step_pi", "m_step_rho", "sbm_loglik", "update_gamma", "update_phi",
    "LdaOptions", "LdaResult", "build_X", "distance_matrix",
    "init_assignments", "kmeans_like", "lda_vem",
    "GridResult", "IclBreakdown", "grid_search", "icl",
    "ari", "edge_partition",
]
