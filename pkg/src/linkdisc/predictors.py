"""Similarity indices for scoring candidate node pairs.

Four families share one calling convention: local neighborhood counts
(CN, RA, JA, PA), dense global kernels (Katz, MFI, SimRank), quasi-local
path counts (CH2-L2, CN-L3, RA-L3, CH2-L3), and short random walks
(LRW, SRW). A fifth kind, ``external``, ingests scores computed elsewhere.

All scorers are symmetric in the pair order (pairs are canonicalized on
entry) and deterministic: nothing here consumes randomness.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import IO, Mapping, Sequence

import numpy as np

from .graph import Graph, PairSet

__all__ = [
    "AlgorithmSpec",
    "ScoreTable",
    "DEFAULT_DENSE_CAP",
    "KINDS",
    "default_katz_beta",
    "export_scores",
    "load_external_scores",
    "parse_score_file",
    "score",
    "score_global",
    "score_local",
    "score_quasi_local",
    "score_walk",
    "spectral_radius_estimate",
    "walk_transition_power",
]

DEFAULT_DENSE_CAP = 5000

LOCAL_KINDS = ("cn", "ra", "ja", "pa")
GLOBAL_KINDS = ("katz", "mfi", "simrank")
QUASI_LOCAL_KINDS = ("ch2_l2", "cn_l3", "ra_l3", "ch2_l3")
WALK_KINDS = ("lrw", "srw")
KINDS = LOCAL_KINDS + GLOBAL_KINDS + QUASI_LOCAL_KINDS + WALK_KINDS + ("external",)

_PARAM_DEFAULTS: dict[str, dict] = {
    "katz": {"beta": None},                          # None: min(0.01, 0.5 / lambda_max)
    "simrank": {"c": 0.8, "iters": 20, "tol": 1e-4},
    "ra_l3": {"variant": "product"},
    "lrw": {"t": 3},
    "srw": {"t": 3},
    "external": {"path": None},
}


def _normalize_kind(kind: str) -> str:
    k = kind.strip().lower().replace("-", "_")
    if k not in KINDS:
        raise ValueError(f"unknown predictor kind '{kind}'")
    return k


@dataclass(frozen=True)
class AlgorithmSpec:
    """A predictor kind plus its hyperparameters.

    Unspecified parameters take the documented defaults; unknown parameter
    names are rejected so config typos fail loudly.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = _normalize_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        allowed = _PARAM_DEFAULTS.get(kind, {})
        merged = dict(allowed)
        for key, value in self.params.items():
            if key not in allowed:
                raise ValueError(f"predictor '{kind}' takes no parameter '{key}'")
            merged[key] = value
        _validate_params(kind, merged)
        object.__setattr__(self, "params", merged)

    def label(self) -> str:
        """Short identifier used in file names and result tables."""
        return self.kind


def _validate_params(kind: str, params: dict) -> None:
    if kind == "katz":
        beta = params["beta"]
        if beta is not None and not (isinstance(beta, (int, float)) and beta > 0):
            raise ValueError("katz beta must be positive")
    elif kind == "simrank":
        if not 0.0 < params["c"] < 1.0:
            raise ValueError("simrank c must lie strictly between 0 and 1")
        if int(params["iters"]) < 1:
            raise ValueError("simrank iters must be at least 1")
        if not params["tol"] > 0:
            raise ValueError("simrank tol must be positive")
    elif kind == "ra_l3":
        if params["variant"] not in ("product", "sqrt"):
            raise ValueError("ra_l3 variant must be 'product' or 'sqrt'")
    elif kind in WALK_KINDS:
        t = params["t"]
        if int(t) != t or int(t) < 1:
            raise ValueError(f"{kind} t must be a positive integer")
    elif kind == "external":
        if not params["path"]:
            raise ValueError("external predictor needs a 'path' parameter")


@dataclass(frozen=True)
class ScoreTable:
    """Scores for an ordered list of canonical node pairs."""

    pairs: np.ndarray
    scores: np.ndarray
    algorithm: str = ""
    params: dict = field(default_factory=dict)
    warnings: tuple = ()

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        if pairs.shape[0] != scores.shape[0]:
            raise ValueError("pairs and scores must have equal length")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return self.pairs.shape[0]

    @cached_property
    def pair_index(self) -> dict:
        return {(int(u), int(v)): i for i, (u, v) in enumerate(self.pairs)}


def _as_pair_array(pairs, n: int) -> np.ndarray:
    if isinstance(pairs, PairSet):
        arr = pairs.pairs
    else:
        arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return arr.astype(np.int64)
    if arr.min() < 0 or arr.max() >= n:
        raise ValueError("pair endpoint out of range for this graph")
    if (arr[:, 0] == arr[:, 1]).any():
        raise ValueError("self pairs cannot be scored")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    return np.column_stack([lo, hi]).astype(np.int64)


# ===== local indices ========================================================

def score_local(graph: Graph, kind: str, pairs) -> np.ndarray:
    """Common-neighbor style indices: cn, ra, ja, pa."""
    kind = _normalize_kind(kind)
    if kind not in LOCAL_KINDS:
        raise ValueError(f"'{kind}' is not a local index")
    arr = _as_pair_array(pairs, graph.n)
    if arr.shape[0] == 0:
        return np.empty(0)
    u, v = arr[:, 0], arr[:, 1]
    deg = graph.degrees.astype(np.float64)
    if kind == "pa":
        return deg[u] * deg[v]
    a = graph.adjacency_csr
    if kind == "ra":
        w = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        weighted = a.multiply(w[np.newaxis, :]).tocsr()
        return np.asarray(a[u].multiply(weighted[v]).sum(axis=1)).ravel()
    cn = np.asarray(a[u].multiply(a[v]).sum(axis=1)).ravel()
    if kind == "cn":
        return cn
    union = deg[u] + deg[v] - cn
    return np.divide(cn, union, out=np.zeros_like(cn), where=union > 0)


# ===== dense global kernels =================================================

def spectral_radius_estimate(graph: Graph, iters: int = 100) -> float:
    """Largest adjacency eigenvalue estimated by power iteration."""
    if graph.n == 0 or graph.edge_count == 0:
        return 0.0
    a = graph.adjacency_csr
    x = np.full(graph.n, 1.0 / math.sqrt(graph.n))
    for _ in range(iters):
        y = a @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
    return float(x @ (a @ x))


def default_katz_beta(graph: Graph) -> float:
    lam = spectral_radius_estimate(graph)
    if lam <= 0.0:
        return 0.01
    return min(0.01, 0.5 / lam)


def _check_dense_cap(graph: Graph, kind: str, dense_cap: int) -> None:
    if graph.n > dense_cap:
        raise ValueError(
            f"predictor '{kind}' builds dense {graph.n}x{graph.n} matrices; "
            f"the cap is {dense_cap} nodes (raise dense_cap to override)")


def score_global(graph: Graph, kind: str, pairs, params: Mapping | None = None,
                 *, dense_cap: int = DEFAULT_DENSE_CAP):
    """Dense whole-graph kernels: katz, mfi, simrank.

    Returns ``(scores, info)`` where ``info`` carries the resolved
    parameters and any convergence warnings.
    """
    kind = _normalize_kind(kind)
    if kind not in GLOBAL_KINDS:
        raise ValueError(f"'{kind}' is not a global index")
    _check_dense_cap(graph, kind, dense_cap)
    params = dict(params or {})
    arr = _as_pair_array(pairs, graph.n)
    u, v = (arr[:, 0], arr[:, 1]) if arr.size else (arr, arr)
    info: dict = {}
    warnings: list[str] = []

    if kind == "katz":
        beta = params.get("beta")
        lam = spectral_radius_estimate(graph)
        if beta is None:
            beta = default_katz_beta(graph)
        elif lam > 0 and beta * lam >= 1.0:
            raise ValueError(
                f"katz beta {beta} is at or beyond the divergence bound {1.0 / lam:.6g} "
                "(1 / spectral radius estimate)")
        m = np.eye(graph.n) - beta * graph.adjacency()
        s = np.linalg.solve(m, np.eye(graph.n)) - np.eye(graph.n)
        info["beta"] = float(beta)
        scores = s[u, v] if arr.size else np.empty(0)
    elif kind == "mfi":
        deg = graph.degrees.astype(np.float64)
        lap = np.diag(deg) - graph.adjacency()
        s = np.linalg.solve(np.eye(graph.n) + lap, np.eye(graph.n))
        scores = s[u, v] if arr.size else np.empty(0)
    else:  # simrank
        c = float(params.get("c", _PARAM_DEFAULTS["simrank"]["c"]))
        iters = int(params.get("iters", _PARAM_DEFAULTS["simrank"]["iters"]))
        tol = float(params.get("tol", _PARAM_DEFAULTS["simrank"]["tol"]))
        _validate_params("simrank", {"c": c, "iters": iters, "tol": tol})
        s, converged, delta = _simrank_matrix(graph, c, iters, tol)
        if not converged:
            warnings.append(
                f"simrank did not converge to tol={tol:g} within {iters} "
                f"iterations (last delta {delta:.3g})")
        info.update({"c": c, "iters": iters, "tol": tol})
        scores = s[u, v] if arr.size else np.empty(0)

    info["warnings"] = tuple(warnings)
    return np.asarray(scores, dtype=np.float64), info


def _simrank_matrix(graph: Graph, c: float, iters: int, tol: float):
    """Fixed-point iteration of the pairwise recursion in matrix form."""
    n = graph.n
    deg = graph.degrees.astype(np.float64)
    w = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    # column-normalized adjacency: W[i, j] = A[i, j] / deg(j)
    wmat = graph.adjacency_csr.multiply(w[np.newaxis, :]).tocsr()
    s = np.eye(n)
    delta = 0.0
    for _ in range(iters):
        t1 = wmat.T @ s              # W^T S
        s_new = (wmat.T @ t1.T).T    # (W^T S) W, using S symmetric
        s_new *= c
        np.fill_diagonal(s_new, 1.0)
        delta = float(np.max(np.abs(s_new - s))) if n else 0.0
        s = s_new
        if delta <= tol:
            return s, True, delta
    return s, False, delta


# ===== quasi-local indices ==================================================

def _l3_paths(graph: Graph, u: int, v: int):
    """Genuine length-3 paths u-z1-z2-v in ascending (z1, z2) order.

    A walk counts only if z1 != v, z2 != u and z1 != z2; the endpoints are
    never revisited.
    """
    nbr = graph.neighbor_sets
    out = []
    for z1 in sorted(nbr[u]):
        if z1 == v:
            continue
        through = nbr[z1] & nbr[v]
        for z2 in sorted(through):
            if z2 == u or z2 == z1:
                continue
            out.append((z1, z2))
    return out


def _ch2_terms(graph: Graph, u: int, v: int, community: set, members) -> float:
    """Sum of (1 + internal degree) / (1 + external degree) over members."""
    nbr = graph.neighbor_sets
    total = 0.0
    for z in members:
        di = len(nbr[z] & community)
        de = len(nbr[z] - community - {u, v})
        total += (1.0 + di) / (1.0 + de)
    return total


def score_quasi_local(graph: Graph, kind: str, pairs,
                      params: Mapping | None = None) -> np.ndarray:
    """Length-3 path counts and community-aware variants.

    ch2_l2
        Over common neighbors z, sum (1 + d_i(z)) / (1 + d_e(z)) where the
        local community is the common-neighbor set itself.
    cn_l3 / ra_l3
        Count of genuine length-3 paths, optionally weighted by
        1 / (k_z1 k_z2) (or the square-root variant).
    ch2_l3
        Over genuine length-3 paths, sqrt of the product of the two
        intermediate nodes' (1 + d_i) / (1 + d_e) ratios; the community is
        the set of all intermediates on qualifying paths.
    """
    kind = _normalize_kind(kind)
    if kind not in QUASI_LOCAL_KINDS:
        raise ValueError(f"'{kind}' is not a quasi-local index")
    params = dict(params or {})
    variant = params.get("variant", "product")
    arr = _as_pair_array(pairs, graph.n)
    nbr = graph.neighbor_sets
    deg = graph.degrees
    out = np.zeros(arr.shape[0])
    for row, (u, v) in enumerate(arr):
        u, v = int(u), int(v)
        if kind == "ch2_l2":
            community = set(nbr[u] & nbr[v])
            out[row] = _ch2_terms(graph, u, v, community, sorted(community))
            continue
        paths = _l3_paths(graph, u, v)
        if kind == "cn_l3":
            out[row] = float(len(paths))
        elif kind == "ra_l3":
            total = 0.0
            for z1, z2 in paths:
                prod = float(deg[z1] * deg[z2])
                total += 1.0 / math.sqrt(prod) if variant == "sqrt" else 1.0 / prod
            out[row] = total
        else:  # ch2_l3
            community = {z for path in paths for z in path}
            excluded = community | {u, v}
            ratio = {}
            for z in community:
                di = len(nbr[z] & community)
                de = len(nbr[z] - excluded)
                ratio[z] = (1.0 + di, 1.0 + de)
            total = 0.0
            for z1, z2 in paths:
                n1, d1 = ratio[z1]
                n2, d2 = ratio[z2]
                total += math.sqrt(n1 * n2) / math.sqrt(d1 * d2)
            out[row] = total
    return out


# ===== random-walk indices ==================================================

def _one_step_transition(graph: Graph):
    """Row-stochastic sparse transition matrix; isolated rows are zero."""
    deg = graph.degrees.astype(np.float64)
    w = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return graph.adjacency_csr.multiply(w[:, np.newaxis]).tocsr()


def walk_transition_power(graph: Graph, t: int) -> np.ndarray:
    """Dense t-step transition matrix, for diagnostics and conservation checks."""
    if t < 1:
        raise ValueError("t must be a positive integer")
    p = _one_step_transition(graph)
    step = p.toarray()
    for _ in range(t - 1):
        step = p @ step
    return step


def score_walk(graph: Graph, kind: str, pairs, params: Mapping | None = None,
               *, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Local (lrw) and superposed (srw) random-walk similarity.

    s(u, v) at horizon t is
    ``(k_u / 2|E|) pi_uv(t) + (k_v / 2|E|) pi_vu(t)``, where pi is the
    t-step transition probability of the simple random walk; srw sums the
    contribution over horizons 1..t. Isolated nodes have an all-zero
    transition row.
    """
    kind = _normalize_kind(kind)
    if kind not in WALK_KINDS:
        raise ValueError(f"'{kind}' is not a walk index")
    _check_dense_cap(graph, kind, dense_cap)
    params = dict(params or {})
    t = int(params.get("t", _PARAM_DEFAULTS[kind]["t"]))
    if t < 1:
        raise ValueError(f"{kind} t must be a positive integer")
    arr = _as_pair_array(pairs, graph.n)
    if graph.edge_count == 0 or arr.shape[0] == 0:
        return np.zeros(arr.shape[0])
    deg = graph.degrees.astype(np.float64)
    p = _one_step_transition(graph)
    step = p.toarray()
    acc = step.copy() if kind == "srw" else None
    for _ in range(t - 1):
        step = p @ step
        if acc is not None:
            acc += step
    pi = acc if kind == "srw" else step
    u, v = arr[:, 0], arr[:, 1]
    two_m = 2.0 * graph.edge_count
    return (deg[u] / two_m) * pi[u, v] + (deg[v] / two_m) * pi[v, u]


# ===== external scores ======================================================

def parse_score_file(source: str | Path | IO[str]):
    """Parse ``u v score`` lines; returns (label pairs, scores).

    Pairs are canonicalized; a pair listed twice raises, as do non-finite
    scores and malformed lines. Labels stay in the caller's vocabulary.
    """
    if isinstance(source, Path) or (
            isinstance(source, str) and "\n" not in source
            and not any(c.isspace() for c in source)):
        stream, own = open(source, "r", encoding="utf-8"), True
    elif isinstance(source, str):
        stream, own = io.StringIO(source), True
    else:
        stream, own = source, False
    pairs: list[tuple[int, int]] = []
    scores: list[float] = []
    seen: set[tuple[int, int]] = set()
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 3:
                raise ValueError(f"line {lineno}: expected 'u v score', got {len(tokens)} tokens")
            try:
                a, b = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ValueError(f"line {lineno}: non-integer node label") from None
            if a == b:
                raise ValueError(f"line {lineno}: self pair on node {a}")
            try:
                s = float(tokens[2])
            except ValueError:
                raise ValueError(f"line {lineno}: unreadable score '{tokens[2]}'") from None
            if not math.isfinite(s):
                raise ValueError(f"line {lineno}: non-finite score for pair ({a}, {b})")
            key = (a, b) if a < b else (b, a)
            if key in seen:
                raise ValueError(f"line {lineno}: duplicate pair ({key[0]}, {key[1]})")
            seen.add(key)
            pairs.append(key)
            scores.append(s)
    finally:
        if own:
            stream.close()
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2), np.asarray(scores)


def load_external_scores(source, graph: Graph, candidates) -> ScoreTable:
    """Attach file-based scores to a candidate set.

    Every candidate pair must be covered; unknown node labels and missing
    pairs raise with the offending labels named. Extra pairs outside the
    candidate set are ignored, so one file can serve several splits.
    """
    label_pairs, values = parse_score_file(source)
    lookup = graph.label_to_id
    table: dict[tuple[int, int], float] = {}
    for (a, b), s in zip(label_pairs, values):
        try:
            ia, ib = lookup[int(a)], lookup[int(b)]
        except KeyError as exc:
            raise ValueError(f"unknown node label {exc.args[0]} in score file") from None
        key = (ia, ib) if ia < ib else (ib, ia)
        table[key] = float(s)
    arr = _as_pair_array(candidates, graph.n)
    out = np.empty(arr.shape[0])
    missing: list[tuple[int, int]] = []
    for i, (u, v) in enumerate(arr):
        key = (int(u), int(v))
        if key in table:
            out[i] = table[key]
        else:
            missing.append((graph.node_label(key[0]), graph.node_label(key[1])))
    if missing:
        shown = ", ".join(f"({a}, {b})" for a, b in missing[:5])
        more = "" if len(missing) <= 5 else f" and {len(missing) - 5} more"
        raise ValueError(f"score file misses {len(missing)} candidate pair(s): {shown}{more}")
    return ScoreTable(pairs=arr, scores=out, algorithm="external", params={})


def export_scores(table: ScoreTable, graph: Graph | None = None) -> str:
    """Serialize a score table to the ``u v score`` format."""
    lines = []
    for (u, v), s in zip(table.pairs, table.scores):
        a = graph.node_label(int(u)) if graph is not None else int(u)
        b = graph.node_label(int(v)) if graph is not None else int(v)
        lines.append(f"{a} {b} {float(s)!r}")
    return "\n".join(lines) + "\n"


# ===== dispatcher ===========================================================

def score(graph: Graph, spec: AlgorithmSpec, pairs,
          *, dense_cap: int = DEFAULT_DENSE_CAP) -> ScoreTable:
    """Score candidate pairs with the given predictor spec."""
    arr = _as_pair_array(pairs, graph.n)
    kind = spec.kind
    params = dict(spec.params)
    warnings: tuple = ()
    if kind == "external":
        table = load_external_scores(params["path"], graph, arr)
        return ScoreTable(pairs=arr, scores=table.scores, algorithm=kind,
                          params={"path": str(params["path"])})
    if kind in LOCAL_KINDS:
        values = score_local(graph, kind, arr)
        params = {}
    elif kind in GLOBAL_KINDS:
        values, info = score_global(graph, kind, arr, params, dense_cap=dense_cap)
        warnings = info.pop("warnings", ())
        params = info
    elif kind in QUASI_LOCAL_KINDS:
        values = score_quasi_local(graph, kind, arr, params)
        params = {"variant": params["variant"]} if kind == "ra_l3" else {}
    else:
        values = score_walk(graph, kind, arr, params, dense_cap=dense_cap)
        params = {"t": int(params.get("t", _PARAM_DEFAULTS[kind]["t"]))}
    return ScoreTable(pairs=arr, scores=values, algorithm=kind,
                      params=params, warnings=warnings)
