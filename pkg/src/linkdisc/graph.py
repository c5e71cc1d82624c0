"""Simple undirected graphs: construction, file ingestion, and random models.

Nodes are dense 0-based integers. Graphs built from files keep the original
node labels in a side table so results can be reported in the caller's
vocabulary. Instances are treated as immutable once built; the random models
(uniform fixed-edge-count and preferential attachment) are fully determined
by their seed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

__all__ = [
    "Graph",
    "GraphFormatError",
    "PairSet",
    "generate_ba",
    "generate_er",
    "graph_to_text",
    "load_edge_list",
    "non_edges",
]


class GraphFormatError(ValueError):
    """Raised when an edge-list source violates the file format."""


@dataclass(frozen=True)
class PairSet:
    """A set of node pairs with a role tag (candidates/positives/negatives)."""

    pairs: np.ndarray
    role: str = "candidates"

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return self.pairs.shape[0]


def _canonical_edges(edges: np.ndarray) -> np.ndarray:
    """Sort each pair, drop duplicates, and order rows lexicographically."""
    if edges.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    canon = np.unique(np.column_stack([lo, hi]), axis=0)
    return canon.astype(np.int64)


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph over nodes ``0 .. n - 1``.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : ndarray of shape (m, 2)
        Canonical edge rows: ``u < v``, lexicographically sorted, no
        duplicates, no self loops. Use :meth:`from_edges` rather than the
        raw constructor so the canonical form is enforced.
    labels : ndarray of shape (n,), optional
        Original node labels, ``labels[i]`` being the label of node ``i``.
        ``None`` means labels equal the node ids.
    """

    n: int
    edges: np.ndarray
    labels: np.ndarray | None = None

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Sequence[int]] | np.ndarray,
        labels: Sequence[int] | np.ndarray | None = None,
    ) -> "Graph":
        """Build a graph, canonicalizing and validating the edge list."""
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr[:, 0] == arr[:, 1]).any():
            bad = arr[arr[:, 0] == arr[:, 1]][0]
            raise ValueError(f"self loop on node {bad[0]} is not allowed")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError(f"edge endpoint out of range for n={n}")
        canon = _canonical_edges(arr)
        lab = None
        if labels is not None:
            lab = np.asarray(labels, dtype=np.int64)
            if lab.shape != (n,):
                raise ValueError("labels must have one entry per node")
        return cls(n=int(n), edges=canon, labels=lab)

    # ----- basic accessors -------------------------------------------------

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if self.edge_count:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    @cached_property
    def neighbor_sets(self) -> tuple[frozenset, ...]:
        adj: list[set] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(int(v))
            adj[v].add(int(u))
        return tuple(frozenset(s) for s in adj)

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset((int(u), int(v)) for u, v in self.edges)

    def neighbors(self, u: int) -> np.ndarray:
        return np.fromiter(sorted(self.neighbor_sets[u]), dtype=np.int64)

    def has_edge(self, u: int, v: int) -> bool:
        a, b = (u, v) if u < v else (v, u)
        return (a, b) in self.edge_set

    def adjacency(self) -> "np.ndarray":
        """Dense adjacency matrix (float64)."""
        a = np.zeros((self.n, self.n))
        if self.edge_count:
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    @cached_property
    def adjacency_csr(self):
        from scipy.sparse import csr_matrix

        m = self.edge_count
        data = np.ones(2 * m)
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]]) if m else np.empty(0, dtype=np.int64)
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]]) if m else np.empty(0, dtype=np.int64)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def node_label(self, node_id: int) -> int:
        if self.labels is None:
            return int(node_id)
        return int(self.labels[node_id])

    @cached_property
    def label_to_id(self) -> dict:
        if self.labels is None:
            return {i: i for i in range(self.n)}
        return {int(lab): i for i, lab in enumerate(self.labels)}

    def largest_component(self) -> "Graph":
        """Restrict to the largest connected component (new dense ids)."""
        comp = _components(self)
        if not comp:
            return Graph.from_edges(0, [])
        keep = max(comp, key=len)
        keep_sorted = sorted(keep)
        remap = {old: new for new, old in enumerate(keep_sorted)}
        edges = [(remap[int(u)], remap[int(v)])
                 for u, v in self.edges if int(u) in remap and int(v) in remap]
        labels = np.asarray([self.node_label(old) for old in keep_sorted], dtype=np.int64)
        return Graph.from_edges(len(keep_sorted), edges, labels=labels)


def _components(graph: Graph) -> list[set]:
    seen = [False] * graph.n
    out: list[set] = []
    for start in range(graph.n):
        if seen[start]:
            continue
        comp = {start}
        seen[start] = True
        stack = [start]
        while stack:
            u = stack.pop()
            for w in graph.neighbor_sets[u]:
                if not seen[w]:
                    seen[w] = True
                    comp.add(w)
                    stack.append(w)
        out.append(comp)
    return out


# ===== file format ==========================================================

def _open_source(source):
    if isinstance(source, Path):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, str):
        # a one-line string with internal whitespace is edge-list text, not
        # a path; anything path-like (no spaces, no newline) is opened
        if "\n" not in source and not any(c.isspace() for c in source):
            return open(source, "r", encoding="utf-8"), True
        return io.StringIO(source), True
    return source, False


def load_edge_list(
    source: str | Path | IO[str],
    *,
    one_based: bool = False,
    allow_isolates: bool = False,
    largest_component: bool = False,
) -> Graph:
    """Parse an edge list into a :class:`Graph`.

    The format is one whitespace-separated integer pair per line. Lines
    starting with ``#`` (and inline ``#`` suffixes) are comments. An optional
    first line ``N <count>`` declares the node count, which is the only way
    to represent isolated nodes.

    Parameters
    ----------
    source : str, Path or text stream
        A path, a stream, or the raw text itself (anything containing a
        newline is treated as text).
    one_based : bool
        With a header, labels are ``1 .. count`` instead of ``0 .. count-1``.
        Without a header this only affects the recorded labels, since
        arbitrary labels are remapped to dense ids anyway.
    allow_isolates : bool
        Permit a declared node count larger than the number of labeled
        endpoints. Without it, unused declared ids raise.
    largest_component : bool
        Keep only the largest connected component. Off by default; no
        implicit preprocessing is ever applied.

    Raises
    ------
    GraphFormatError
        On self loops, malformed tokens, or label/header violations. The
        message carries the 1-based line number.
    """
    stream, own = _open_source(source)
    try:
        declared = None
        pairs: list[tuple[int, int]] = []
        saw_data = False
        for lineno, raw in enumerate(stream, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if not saw_data and declared is None and tokens[0] == "N":
                if len(tokens) != 2:
                    raise GraphFormatError(f"line {lineno}: malformed node-count header")
                try:
                    declared = int(tokens[1])
                except ValueError:
                    raise GraphFormatError(f"line {lineno}: node count is not an integer") from None
                if declared < 0:
                    raise GraphFormatError(f"line {lineno}: negative node count")
                continue
            saw_data = True
            if len(tokens) != 2:
                raise GraphFormatError(f"line {lineno}: expected two node labels, got {len(tokens)}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: non-integer node label") from None
            if u == v:
                raise GraphFormatError(f"line {lineno}: self loop on node {u}")
            pairs.append((u, v))
    finally:
        if own:
            stream.close()

    if declared is not None:
        offset = 1 if one_based else 0
        n = declared
        ids = []
        for u, v in pairs:
            iu, iv = u - offset, v - offset
            if not (0 <= iu < n and 0 <= iv < n):
                raise GraphFormatError(
                    f"node label {u if not 0 <= iu < n else v} outside declared range")
            ids.append((iu, iv))
        used = {x for p in ids for x in p}
        if len(used) < n and not allow_isolates:
            raise GraphFormatError(
                f"{n - len(used)} declared node(s) never appear; "
                "pass allow_isolates=True to keep them")
        labels = np.arange(offset, n + offset, dtype=np.int64)
        graph = Graph.from_edges(n, ids, labels=labels)
    else:
        seen = sorted({x for p in pairs for x in p})
        remap = {lab: i for i, lab in enumerate(seen)}
        ids = [(remap[u], remap[v]) for u, v in pairs]
        labels = np.asarray(seen, dtype=np.int64)
        graph = Graph.from_edges(len(seen), ids, labels=labels)

    if largest_component:
        graph = graph.largest_component()
    return graph


def graph_to_text(graph: Graph, *, header: bool = True) -> str:
    """Serialize a graph back to the edge-list format using original labels."""
    lines = []
    if header:
        lines.append(f"N {graph.n}")
    for u, v in graph.edges:
        lines.append(f"{graph.node_label(int(u))} {graph.node_label(int(v))}")
    return "\n".join(lines) + "\n"


# ===== random models ========================================================

def _pair_index_unrank(indices: np.ndarray, n: int) -> np.ndarray:
    """Map lexicographic pair indices to (u, v) rows with u < v."""
    k = indices.astype(np.float64)
    # u is the largest row whose block of (n-1-u) pairs starts at or before k
    u = np.floor(n - 0.5 - np.sqrt((n - 0.5) ** 2 - 2.0 * k)).astype(np.int64)
    u = np.clip(u, 0, n - 2)
    start = u * (n - 1) - (u * (u - 1)) // 2
    # float rounding can land one row off; fix up both directions
    too_high = start > indices
    while too_high.any():
        u[too_high] -= 1
        start = u * (n - 1) - (u * (u - 1)) // 2
        too_high = start > indices
    next_start = (u + 1) * (n - 1) - ((u + 1) * u) // 2
    too_low = indices >= next_start
    while too_low.any():
        u[too_low] += 1
        start = u * (n - 1) - (u * (u - 1)) // 2
        next_start = (u + 1) * (n - 1) - ((u + 1) * u) // 2
        too_low = indices >= next_start
    v = indices - start + u + 1
    return np.column_stack([u, v])


def generate_er(n: int, m: int, seed: int) -> Graph:
    """Uniform random graph with exactly ``n`` nodes and ``m`` edges.

    Samples an m-subset of the n(n-1)/2 possible pairs without replacement
    (Floyd's algorithm), so no rejection loops and no dependence on the
    density regime.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    total = n * (n - 1) // 2
    if not 0 <= m <= total:
        raise ValueError(f"m must lie in [0, {total}] for n={n}")
    rng = np.random.default_rng(seed)
    chosen: set[int] = set()
    for j in range(total - m, total):
        t = int(rng.integers(0, j + 1))
        chosen.add(t if t not in chosen else j)
    idx = np.sort(np.fromiter(chosen, dtype=np.int64, count=m))
    edges = _pair_index_unrank(idx, n) if m else np.empty((0, 2), dtype=np.int64)
    return Graph.from_edges(n, edges)


def generate_ba(n: int, m: int, seed: int) -> Graph:
    """Preferential-attachment graph: seed clique on m+1 nodes, then each new
    node attaches m edges to distinct targets drawn degree-proportionally.

    Target selection repeatedly draws a uniform element of the running edge
    endpoint list and rejects duplicates, so the final edge count is exactly
    ``m (m + 1) / 2 + (n - m - 1) m``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if n < m + 1:
        raise ValueError("n must be at least m + 1")
    rng = np.random.default_rng(seed)
    edges: list[tuple[int, int]] = []
    endpoints: list[int] = []
    for u in range(m + 1):
        for v in range(u + 1, m + 1):
            edges.append((u, v))
            endpoints.extend((u, v))
    for new in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            cand = endpoints[int(rng.integers(0, len(endpoints)))]
            if cand not in targets:
                targets.add(cand)
        for t in sorted(targets):
            edges.append((t, new))
            endpoints.extend((t, new))
    return Graph.from_edges(n, edges)


def non_edges(graph: Graph) -> PairSet:
    """All unordered node pairs absent from the graph, in canonical order."""
    n = graph.n
    iu, iv = np.triu_indices(n, k=1)
    if graph.edge_count:
        present = np.zeros((n, n), dtype=bool)
        present[graph.edges[:, 0], graph.edges[:, 1]] = True
        mask = ~present[iu, iv]
        iu, iv = iu[mask], iv[mask]
    return PairSet(np.column_stack([iu, iv]), role="negatives")
