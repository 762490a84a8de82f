"""Command-line entry point: simulate / fit / select / evaluate / report.

Every command that takes --seed is deterministic end to end; each run
writes a manifest recording the command, flags, seeds, input hashes and
wall-clock time.  Exit codes: 0 ok, 1 usage error, 2 input error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .corpus import Corpus, CorpusError, ParseOptions, load_corpus
from .evaluation import ari, edge_partition
from .generator import GenConfig, beta_from_texts, sample_corpus, scenario_config
from .inference import (FitOptions, FitResult, NumericalError,
                        edge_majority_topics, fit)
from .initialization import init_assignments
from .selection import grid_search, icl

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _corpus_hash(edge_file, docs_file):
    h = hashlib.sha256()
    for path in (edge_file, docs_file):
        with open(path, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def _write_manifest(out_dir, command, args_ns, seeds, inputs, outputs, started):
    manifest = {
        "command": command,
        "flags": {k: v for k, v in sorted(vars(args_ns).items())
                  if k != "func" and not k.startswith("_")},
        "seeds": seeds,
        "input_hashes": {p: _sha256(p) for p in inputs},
        "output_hashes": {p: _sha256(p) for p in outputs},
        "version": __version__,
        "wall_clock_s": time.monotonic() - started,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _expand_doc_line(vocab, doc):
    words = []
    for v in sorted(doc):
        words.extend([vocab.words[v]] * doc[v])
    return " ".join(words)


def _write_corpus_files(corpus, out_dir):
    edges_path = os.path.join(out_dir, "edges.tsv")
    docs_path = os.path.join(out_dir, "docs.tsv")
    ids = corpus.vertex_ids
    with open(edges_path, "w", encoding="utf-8") as fh:
        fh.write("directed\n" if corpus.directed else "undirected\n")
        for i, j in corpus.edge_list():
            fh.write(f"{ids[i]}\t{ids[j]}\n")
    with open(docs_path, "w", encoding="utf-8") as fh:
        for i, j in corpus.edge_list():
            for doc in corpus.edges[(i, j)].docs:
                fh.write(f"{ids[i]}\t{ids[j]}\t"
                         f"{_expand_doc_line(corpus.vocabulary, doc)}\n")
    return edges_path, docs_path


def _config_from_json(path):
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if "texts" in raw:
        beta, vocab = beta_from_texts(raw.pop("texts"))
        raw["beta"] = beta
        raw["vocabulary"] = vocab
    else:
        from .corpus import Vocabulary
        raw["vocabulary"] = Vocabulary.from_words(raw.pop("vocabulary"))
        raw["beta"] = np.asarray(raw["beta"], dtype=np.float64)
    for key in ("rho", "pi", "theta", "alpha"):
        if raw.get(key) is not None:
            raw[key] = np.asarray(raw[key], dtype=np.float64)
    if isinstance(raw.get("docs_per_edge"), list):
        raw["docs_per_edge"] = tuple(raw["docs_per_edge"])
    return GenConfig(**raw)


def cmd_simulate(args):
    started = time.monotonic()
    if args.config:
        cfg = _config_from_json(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.undirected:
            cfg = dataclasses.replace(cfg, directed=False)
    else:
        if not args.scenario:
            raise _UsageError("either --scenario or --config is required")
        cfg = scenario_config(args.scenario, args.difficulty,
                              m=args.m, seed=args.seed or 0)
        if args.undirected:
            sym_pi = (cfg.pi + cfg.pi.T) / 2.0
            cfg = dataclasses.replace(cfg, directed=False, pi=sym_pi)
    corpus, truth = sample_corpus(cfg)

    os.makedirs(args.out_dir, exist_ok=True)
    edges_path, docs_path = _write_corpus_files(corpus, args.out_dir)
    truth_path = os.path.join(args.out_dir, "truth.json")
    payload = {
        "vertex_ids": corpus.vertex_ids,
        "y": [int(v) for v in truth.y],
        "edge_majority_topic": {f"{i},{j}": int(k)
                                for (i, j), k in
                                sorted(truth.edge_majority_topic.items())},
        "Q": cfg.Q,
        "K": cfg.K,
        "directed": cfg.directed,
        "seed": cfg.seed,
        "corpus_hash": _corpus_hash(edges_path, docs_path),
    }
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    manifest = _write_manifest(args.out_dir, "simulate", args,
                               {"seed": cfg.seed}, [],
                               [edges_path, docs_path, truth_path], started)
    print(f"wrote {edges_path}, {docs_path}, {truth_path}, {manifest}")
    return EXIT_OK


def _load_for_fit(args):
    options = ParseOptions(min_count=args.min_count,
                           stopwords=_load_stopwords(args.stopwords))
    corpus = load_corpus(args.edges, args.docs, options)
    if args.undirected and corpus.directed:
        raise CorpusError("--undirected given but the edge file header says "
                          "'directed'")
    return corpus


def _load_stopwords(path):
    if not path:
        return None
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


def top_words(beta, vocabulary, n=10):
    """Top words per topic by probability, and by specificity
    (probability relative to the word's total mass over topics)."""
    out = []
    spec = beta / beta.sum(axis=0, keepdims=True)
    for k in range(beta.shape[0]):
        by_prob = [vocabulary.words[v] for v in np.argsort(-beta[k])[:n]]
        by_spec = [vocabulary.words[v] for v in np.argsort(-spec[k])[:n]]
        out.append({"topic": k, "top": by_prob, "most_specific": by_spec})
    return out


def fit_result_to_dict(result: FitResult, corpus: Corpus, n_top: int = 10):
    """JSON-serializable summary of a fit."""
    majority = edge_majority_topics(corpus, result.vstate, result.y)
    return {
        "Q": result.Q,
        "K": result.K,
        "y": [int(v) for v in result.y],
        "vertex_ids": corpus.vertex_ids,
        "rho": [float(v) for v in result.params.rho],
        "pi": [[float(v) for v in row] for row in result.params.pi],
        "beta_top_words": top_words(result.params.beta, corpus.vocabulary,
                                    n_top),
        "gamma": result.vstate.gamma.tolist(),
        "bound_trace": [float(v) for v in result.bound_trace],
        "final_bound": float(result.final_bound),
        "icl": None if result.icl is None else float(result.icl),
        "seed": result.seed,
        "iterations": result.iterations,
        "directed": corpus.directed,
        "edge_majority_topic": {f"{i},{j}": int(k)
                                for (i, j), k in sorted(majority.items())},
    }


def _write_meta_network(path, result, corpus):
    """Cluster-level summary graph in GML: nodes sized by cluster
    proportion, edges weighted by connection probability and labeled by
    the block's majority topic."""
    Q = result.Q
    rho = result.params.rho
    pi = result.params.pi
    counts = np.bincount(result.y, minlength=Q)
    totals = result.vstate.phi_stats.block_topic_totals
    majority = edge_majority_topics(corpus, result.vstate, result.y)
    block_edges = np.zeros((Q, Q), dtype=np.int64)
    for (i, j), _ in majority.items():
        q, r = result.y[i], result.y[j]
        if not corpus.directed and q > r:
            q, r = r, q
        block_edges[q, r] += 1

    lines = ["graph [", f"  directed {int(corpus.directed)}"]
    for q in range(Q):
        lines += ["  node [", f"    id {q}", f"    label \"cluster {q}\"",
                  f"    proportion {rho[q]:.6f}", f"    size {int(counts[q])}",
                  "  ]"]
    for q in range(Q):
        for r in range(Q):
            if not corpus.directed and r < q:
                continue
            if block_edges[q, r] == 0:
                continue
            topic = int(np.argmax(totals[q, r]))
            lines += ["  edge [", f"    source {q}", f"    target {r}",
                      f"    weight {pi[q, r]:.6f}",
                      f"    edges {int(block_edges[q, r])}",
                      f"    topic {topic}", "  ]"]
    lines.append("]")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_init_labels(path, M, Q):
    with open(path, encoding="utf-8") as fh:
        labels = json.load(fh)
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (M,) or y.min() < 0 or y.max() >= Q:
        raise CorpusError(f"--init-labels must hold {M} labels in 0..{Q - 1}")
    return y


def _run_restarts(corpus, Q, K, args):
    opts = FitOptions(tol=args.tol, max_outer=args.max_iter)
    if args.init_labels:
        inits = [_read_init_labels(args.init_labels, corpus.M, Q)]
    else:
        inits = init_assignments(corpus, Q, K, n_restarts=args.restarts,
                                 seed=args.init_seed if args.init_seed
                                 is not None else args.seed)
    best = None
    for idx, init in enumerate(inits):
        sub = int(np.random.SeedSequence([args.seed, 7, idx]).generate_state(1)[0])
        result = fit(corpus, Q, K,
                     init, FitOptions(tol=opts.tol, max_outer=opts.max_outer,
                                      seed=sub))
        if best is None or result.final_bound > best.final_bound:
            best = result
    return best


def cmd_fit(args):
    started = time.monotonic()
    corpus = _load_for_fit(args)
    result = _run_restarts(corpus, args.Q, args.K, args)
    breakdown = icl(result, corpus)
    result.icl = breakdown.icl

    os.makedirs(args.out_dir, exist_ok=True)
    fit_path = os.path.join(args.out_dir, "fit.json")
    payload = fit_result_to_dict(result, corpus)
    payload["corpus_hash"] = _corpus_hash(args.edges, args.docs)
    with open(fit_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    words_path = os.path.join(args.out_dir, "top_words.txt")
    with open(words_path, "w", encoding="utf-8") as fh:
        for entry in payload["beta_top_words"]:
            fh.write(f"topic {entry['topic']}\n")
            fh.write(f"  top words:      {' '.join(entry['top'])}\n")
            fh.write(f"  most specific:  {' '.join(entry['most_specific'])}\n")

    meta_path = os.path.join(args.out_dir, "meta_network.gml")
    _write_meta_network(meta_path, result, corpus)

    outputs = [fit_path, words_path, meta_path]
    if args.beta_out:
        np.savetxt(args.beta_out, result.params.beta, fmt="%.10e",
                   delimiter="\t")
        outputs.append(args.beta_out)

    _write_manifest(args.out_dir, "fit", args, {"seed": args.seed},
                    [args.edges, args.docs], outputs, started)
    print(f"fit Q={args.Q} K={args.K}: bound={result.final_bound:.4f} "
          f"icl={result.icl:.4f} iterations={result.iterations}")
    print(f"wrote {', '.join(outputs)}")
    return EXIT_OK


def cmd_select(args):
    started = time.monotonic()
    corpus = _load_for_fit(args)
    grid = grid_search(corpus,
                       range(args.q_min, args.q_max + 1),
                       range(args.k_min, args.k_max + 1),
                       n_restarts=args.restarts, seed=args.seed,
                       fit_opts=FitOptions(tol=args.tol,
                                           max_outer=args.max_iter),
                       n_jobs=args.jobs,
                       restrict_k_le_q=args.restrict_k_le_q)

    os.makedirs(args.out_dir, exist_ok=True)
    grid_path = os.path.join(args.out_dir, "grid.csv")
    with open(grid_path, "w", encoding="utf-8") as fh:
        fh.write("Q,K,icl,bound_lda,sbm_loglik,pen_lda,pen_pi,pen_rho,failed\n")
        for (Q, K), cell in sorted(grid.table.items()):
            if cell.get("failed"):
                fh.write(f"{Q},{K},-inf,,,,,,1\n")
                continue
            fh.write(f"{Q},{K},{cell['icl']:.6f},{cell['bound_lda']:.6f},"
                     f"{cell['sbm_loglik']:.6f},{cell['pen_lda']:.6f},"
                     f"{cell['pen_pi']:.6f},{cell['pen_rho']:.6f},0\n")

    outputs = [grid_path]
    if grid.best_fit is not None:
        best_path = os.path.join(args.out_dir, "best_fit.json")
        payload = fit_result_to_dict(grid.best_fit, corpus)
        payload["corpus_hash"] = _corpus_hash(args.edges, args.docs)
        with open(best_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        winner_path = os.path.join(args.out_dir, "winner.json")
        with open(winner_path, "w", encoding="utf-8") as fh:
            json.dump({"Q": grid.best[0], "K": grid.best[1],
                       "icl": grid.table[grid.best]["icl"],
                       "fit_file": "best_fit.json"}, fh, indent=2)
            fh.write("\n")
        outputs += [best_path, winner_path]
        print(f"selected (Q, K) = {grid.best} "
              f"with icl {grid.table[grid.best]['icl']:.4f}")
    else:
        print("no grid cell converged", file=sys.stderr)

    _write_manifest(args.out_dir, "select", args, {"seed": args.seed},
                    [args.edges, args.docs], outputs, started)
    return EXIT_OK if grid.best_fit is not None else EXIT_NUMERIC


def _edge_topics_by_id(payload):
    ids = payload["vertex_ids"]
    return {(ids[int(a)], ids[int(b)]): k
            for key, k in payload["edge_majority_topic"].items()
            for a, b in [key.split(",")]}


def cmd_evaluate(args):
    for path in (args.truth, args.fit):
        if not os.path.exists(path):
            raise CorpusError(f"missing file: {path}")
    with open(args.truth, encoding="utf-8") as fh:
        truth = json.load(fh)
    with open(args.fit, encoding="utf-8") as fh:
        fitted = json.load(fh)

    if truth.get("corpus_hash") and fitted.get("corpus_hash") and \
            truth["corpus_hash"] != fitted["corpus_hash"]:
        raise CorpusError("corpus hash mismatch between truth and fit files")

    t_ids, f_ids = truth["vertex_ids"], fitted["vertex_ids"]
    if set(t_ids) != set(f_ids):
        raise CorpusError("truth and fit cover different vertex sets")
    t_y = dict(zip(t_ids, truth["y"]))
    node_ari = ari([t_y[v] for v in f_ids], fitted["y"])

    t_edges = _edge_topics_by_id(truth)
    f_edges = _edge_topics_by_id(fitted)
    if not fitted.get("directed", True):
        t_edges = {tuple(sorted(k)): v for k, v in t_edges.items()}
        f_edges = {tuple(sorted(k)): v for k, v in f_edges.items()}
    if set(t_edges) != set(f_edges):
        raise CorpusError("truth and fit cover different edge sets")
    keys = sorted(t_edges)
    edge_ari = ari([t_edges[k] for k in keys], [f_edges[k] for k in keys])

    print(json.dumps({"node_ari": node_ari, "edge_ari": edge_ari}))
    return EXIT_OK


def cmd_report(args):
    if not os.path.exists(args.fit):
        raise CorpusError(f"missing file: {args.fit}")
    with open(args.fit, encoding="utf-8") as fh:
        payload = json.load(fh)
    Q, K = payload["Q"], payload["K"]
    counts = np.bincount(payload["y"], minlength=Q)
    print(f"model: Q={Q} clusters, K={K} topics "
          f"({'directed' if payload.get('directed', True) else 'undirected'})")
    print(f"bound: {payload['final_bound']:.4f}   icl: {payload['icl']}")
    print("cluster proportions:")
    for q, (p, n) in enumerate(zip(payload["rho"], counts)):
        print(f"  cluster {q}: rho={p:.4f} ({n} vertices)")
    print("connection probabilities (rows = source cluster):")
    for row in payload["pi"]:
        print("  " + " ".join(f"{v:.4f}" for v in row))
    print("topics:")
    for entry in payload["beta_top_words"]:
        print(f"  topic {entry['topic']}: {' '.join(entry['top'])}")
        print(f"    most specific: {' '.join(entry['most_specific'])}")
    return EXIT_OK


def _add_common(p, *flags):
    if "seed" in flags:
        p.add_argument("--seed", type=int, default=0)
    if "tol" in flags:
        p.add_argument("--tol", type=float, default=1e-6)
    if "max-iter" in flags:
        p.add_argument("--max-iter", dest="max_iter", type=int, default=100)
    if "restarts" in flags:
        p.add_argument("--restarts", type=int, default=10)
    if "jobs" in flags:
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    if "undirected" in flags:
        p.add_argument("--undirected", action="store_true")
    if "corpus" in flags:
        p.add_argument("--edges", required=True, help="edge file")
        p.add_argument("--docs", required=True, help="documents file")
        p.add_argument("--min-count", dest="min_count", type=int, default=1)
        p.add_argument("--stopwords", default=None,
                       help="optional stop-word list file")


def build_parser():
    parser = _Parser(prog="stbm",
                     description="Clustering of networks with textual edges")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a synthetic corpus")
    p.add_argument("--scenario", choices=["A", "B", "C"], default=None)
    p.add_argument("--difficulty", choices=["easy", "hard1", "hard2"],
                   default="easy")
    p.add_argument("--config", default=None, help="generator config JSON")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p, "undirected")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit at fixed (Q, K)")
    _add_common(p, "corpus", "seed", "tol", "max-iter", "restarts",
                "undirected")
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--init-seed", dest="init_seed", type=int, default=None)
    p.add_argument("--init-labels", dest="init_labels", default=None,
                   help="JSON list of labels bypassing the init procedure")
    p.add_argument("--beta-out", dest="beta_out", default=None,
                   help="write the dense topic-word matrix here")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="grid search over (Q, K)")
    _add_common(p, "corpus", "seed", "tol", "max-iter", "restarts", "jobs",
                "undirected")
    p.add_argument("--q-min", dest="q_min", type=int, default=1)
    p.add_argument("--q-max", dest="q_max", type=int, required=True)
    p.add_argument("--k-min", dest="k_min", type=int, default=1)
    p.add_argument("--k-max", dest="k_max", type=int, required=True)
    p.add_argument("--restrict-k-le-q", dest="restrict_k_le_q",
                   action="store_true")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="node and edge ARI vs ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--fit", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="human-readable summary of a fit")
    p.add_argument("--fit", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
