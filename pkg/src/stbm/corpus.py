"""Networks with textual edges: loading, validation, bag-of-words aggregation.

A corpus couples a binary adjacency matrix with a set of documents per
present edge.  Documents are stored as sparse count vectors (word index ->
count) over a shared vocabulary; word order never matters downstream, so
counts are all we keep.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import sparse


class CorpusError(ValueError):
    """Raised when input files or corpus structures violate the format."""


_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


@dataclass(frozen=True)
class ParseOptions:
    """Tokenization and vocabulary options for text ingestion."""

    lowercase: bool = True
    strip_punctuation: bool = True
    stopwords: frozenset[str] | None = None
    min_count: int = 1


def tokenize(text: str, options: ParseOptions | None = None) -> list[str]:
    """Split raw text into tokens according to ``options``."""
    opts = options or ParseOptions()
    if opts.lowercase:
        text = text.lower()
    if opts.strip_punctuation:
        text = text.translate(_PUNCT_TABLE)
    tokens = text.split()
    if opts.stopwords:
        tokens = [t for t in tokens if t not in opts.stopwords]
    return tokens


@dataclass
class Vocabulary:
    """Ordered list of distinct words plus the inverse word -> index map."""

    words: list[str]
    index: dict[str, int]

    @classmethod
    def from_words(cls, words: list[str]) -> "Vocabulary":
        index = {w: i for i, w in enumerate(words)}
        if len(index) != len(words):
            raise CorpusError("vocabulary contains duplicate words")
        if not words:
            raise CorpusError("vocabulary is empty")
        return cls(list(words), index)

    def __len__(self) -> int:
        return len(self.words)


@dataclass
class EdgeDocuments:
    """Documents exchanged along one edge, as sparse count vectors."""

    source: int
    target: int
    docs: list[dict[int, int]]


class Corpus:
    """Immutable network-with-texts container.

    ``adjacency`` is an M x M 0/1 matrix with an empty diagonal.  ``edges``
    maps canonical vertex pairs to their documents: for directed corpora the
    key is (source, target); undirected corpora store each unordered pair
    once under (min, max) and ``adjacency`` is symmetric.
    """

    def __init__(self, vertex_ids, directed, adjacency, edges, vocabulary,
                 validate=True):
        self.vertex_ids = list(vertex_ids)
        self.directed = bool(directed)
        self.adjacency = np.asarray(adjacency, dtype=np.uint8)
        self.edges = dict(edges)
        self.vocabulary = vocabulary
        self._edge_list = None
        self._edge_counts = None
        if validate:
            self._validate()

    @property
    def M(self) -> int:
        return len(self.vertex_ids)

    @property
    def V(self) -> int:
        return len(self.vocabulary)

    def canonical_pair(self, i: int, j: int) -> tuple[int, int]:
        if self.directed or i <= j:
            return (i, j)
        return (j, i)

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def edge_list(self) -> list[tuple[int, int]]:
        """Present edges in canonical sorted order."""
        if self._edge_list is None:
            self._edge_list = sorted(self.edges)
        return self._edge_list

    def edge_count_matrix(self) -> sparse.csr_matrix:
        """Aggregated word counts per edge, rows in edge_list() order."""
        if self._edge_counts is None:
            rows, cols, vals = [], [], []
            for e, pair in enumerate(self.edge_list()):
                agg = aggregate_pair_documents(self, *pair)
                for v, c in agg.items():
                    rows.append(e)
                    cols.append(v)
                    vals.append(c)
            self._edge_counts = sparse.csr_matrix(
                (np.array(vals, dtype=np.float64), (rows, cols)),
                shape=(len(self.edge_list()), self.V))
        return self._edge_counts

    def total_tokens(self) -> int:
        return sum(c for ed in self.edges.values()
                   for doc in ed.docs for c in doc.values())

    def _validate(self) -> None:
        M = self.M
        A = self.adjacency
        if A.shape != (M, M):
            raise CorpusError(f"adjacency shape {A.shape} != ({M}, {M})")
        if np.any(np.diag(A)):
            raise CorpusError("self-loops are not allowed")
        if not self.directed and np.any(A != A.T):
            raise CorpusError("undirected corpus requires symmetric adjacency")
        present = {(int(i), int(j)) for i, j in zip(*np.nonzero(A))}
        if not self.directed:
            present = {(i, j) for i, j in present if i < j}
        if present != set(self.edges):
            raise CorpusError("documents and adjacency disagree on the edge set")
        V = self.V
        for (i, j), ed in self.edges.items():
            if i == j:
                raise CorpusError(f"self-loop documents on vertex {i}")
            if not ed.docs:
                raise CorpusError(f"edge ({i}, {j}) carries no documents")
            for doc in ed.docs:
                if not doc or sum(doc.values()) < 1:
                    raise CorpusError(f"empty document on edge ({i}, {j})")
                if any(v < 0 or v >= V for v in doc):
                    raise CorpusError(f"word index out of range on edge ({i}, {j})")
                if any(c <= 0 for c in doc.values()):
                    raise CorpusError(f"non-positive count on edge ({i}, {j})")


def _read_edge_file(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise CorpusError(f"{path}: empty edge file")
    header = lines[0].strip().lower()
    if header not in ("directed", "undirected"):
        raise CorpusError(f"{path}: header must be 'directed' or 'undirected'")
    directed = header == "directed"
    vertex_ids: list[str] = []
    vindex: dict[str, int] = {}

    def vid(name):
        if name not in vindex:
            vindex[name] = len(vertex_ids)
            vertex_ids.append(name)
        return vindex[name]

    pairs = []
    for ln in lines[1:]:
        parts = ln.split("\t")
        if len(parts) != 2:
            raise CorpusError(f"{path}: bad edge line {ln!r}")
        src, dst = parts[0].strip(), parts[1].strip()
        if not src or not dst:
            raise CorpusError(f"{path}: bad edge line {ln!r}")
        if src == dst:
            raise CorpusError(f"{path}: self-loop edge {src!r}")
        pairs.append((vid(src), vid(dst)))
    return directed, vertex_ids, vindex, pairs


def load_corpus(edge_file, docs_file, options: ParseOptions | None = None) -> Corpus:
    """Load a corpus from an edge file and a documents file.

    Edge file: a header line ``directed`` or ``undirected`` followed by one
    ``src<TAB>dst`` line per edge.  Docs file: one document per line as
    ``src<TAB>dst<TAB>raw text``.  Vertex ids are arbitrary strings, mapped
    to 0..M-1 in order of first appearance in the edge file.
    """
    opts = options or ParseOptions()
    directed, vertex_ids, vindex, pairs = _read_edge_file(edge_file)

    M = len(vertex_ids)
    A = np.zeros((M, M), dtype=np.uint8)
    edge_keys = set()
    for i, j in pairs:
        A[i, j] = 1
        if not directed:
            A[j, i] = 1
        edge_keys.add((i, j) if directed or i < j else (j, i))

    raw_docs: dict[tuple[int, int], list[list[str]]] = {k: [] for k in edge_keys}
    with open(docs_file, encoding="utf-8") as fh:
        for lineno, ln in enumerate(fh, start=1):
            if not ln.strip():
                continue
            parts = ln.rstrip("\n").split("\t", 2)
            if len(parts) != 3:
                raise CorpusError(f"{docs_file}:{lineno}: expected src<TAB>dst<TAB>text")
            src, dst, text = parts
            if src not in vindex or dst not in vindex:
                raise CorpusError(f"{docs_file}:{lineno}: unknown vertex in {src!r}->{dst!r}")
            i, j = vindex[src], vindex[dst]
            key = (i, j) if directed or i < j else (j, i)
            if key not in edge_keys:
                raise CorpusError(f"{docs_file}:{lineno}: document attached to non-edge "
                                  f"{src!r}->{dst!r}")
            tokens = tokenize(text, opts)
            if not tokens:
                raise CorpusError(f"{docs_file}:{lineno}: empty document")
            raw_docs[key].append(tokens)

    for key, docs in raw_docs.items():
        if not docs:
            raise CorpusError(f"edge {key} has no documents")

    # Vocabulary in order of first appearance, optionally pruned by count.
    word_order: list[str] = []
    counts: Counter[str] = Counter()
    for key in sorted(raw_docs):
        for tokens in raw_docs[key]:
            for t in tokens:
                if t not in counts:
                    word_order.append(t)
                counts[t] += 1
    if opts.min_count > 1:
        word_order = [w for w in word_order if counts[w] >= opts.min_count]
    vocab = Vocabulary.from_words(word_order)

    edges = {}
    for (i, j), docs in raw_docs.items():
        vecs = []
        for tokens in docs:
            vec: dict[int, int] = {}
            for t in tokens:
                v = vocab.index.get(t)
                if v is not None:
                    vec[v] = vec.get(v, 0) + 1
            if not vec:
                raise CorpusError(f"document on edge ({i}, {j}) is empty after "
                                  f"vocabulary pruning")
            vecs.append(vec)
        edges[(i, j)] = EdgeDocuments(i, j, vecs)

    return Corpus(vertex_ids, directed, A, edges, vocab)


def aggregate_pair_documents(c: Corpus, i: int, j: int) -> dict[int, int]:
    """Element-wise sum of the count vectors of all documents on edge (i, j)."""
    key = c.canonical_pair(i, j)
    if key not in c.edges:
        raise CorpusError(f"no edge between {i} and {j}")
    total: dict[int, int] = {}
    for doc in c.edges[key].docs:
        for v, cnt in doc.items():
            total[v] = total.get(v, 0) + cnt
    return total


def aggregate_cluster_documents(c: Corpus, y, Q: int) -> np.ndarray:
    """Meta-document counts per cluster pair, shape (Q, Q, V).

    Entry (q, r) sums all documents on edges whose source lies in cluster q
    and whose target lies in cluster r.  Undirected corpora count each edge
    once per unordered pair and mirror the (q, r) / (r, q) entries.
    """
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (c.M,):
        raise CorpusError(f"label vector has shape {y.shape}, expected ({c.M},)")
    if y.min(initial=0) < 0 or y.max(initial=0) >= Q:
        raise CorpusError(f"labels must lie in 0..{Q - 1}")
    out = np.zeros((Q, Q, c.V), dtype=np.int64)
    for (i, j), _ in c.edges.items():
        agg = aggregate_pair_documents(c, i, j)
        q, r = int(y[i]), int(y[j])
        for v, cnt in agg.items():
            out[q, r, v] += cnt
            if not c.directed and q != r:
                out[r, q, v] += cnt
    return out
