"""Slow reference implementations used to cross-check the library.

Everything here is written as the most literal translation of each
definition: Python sets, scalar loops, exhaustive enumeration, explicit
quadrature. Nothing is shared with the package internals, so agreement is
meaningful.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import beta as beta_fn


def neighbor_sets(n, edges):
    nbrs = [set() for _ in range(n)]
    for u, v in edges:
        nbrs[int(u)].add(int(v))
        nbrs[int(v)].add(int(u))
    return nbrs


# ===== local indices ========================================================

def local_index(n, edges, kind, u, v):
    nbrs = neighbor_sets(n, edges)
    common = nbrs[u] & nbrs[v]
    if kind == "cn":
        return float(len(common))
    if kind == "ra":
        return float(sum(1.0 / len(nbrs[z]) for z in common))
    if kind == "pa":
        return float(len(nbrs[u]) * len(nbrs[v]))
    if kind == "ja":
        union = nbrs[u] | nbrs[v]
        return float(len(common) / len(union)) if union else 0.0
    raise ValueError(kind)


def ch2_l2(n, edges, u, v):
    nbrs = neighbor_sets(n, edges)
    community = nbrs[u] & nbrs[v]
    total = 0.0
    for z in community:
        d_int = len(nbrs[z] & community)
        d_ext = len(nbrs[z] - community - {u, v})
        total += (1.0 + d_int) / (1.0 + d_ext)
    return total


def l3_paths(n, edges, u, v):
    """All simple length-3 paths u - z1 - z2 - v, by exhaustive V^2 scan."""
    nbrs = neighbor_sets(n, edges)
    paths = []
    for z1 in range(n):
        for z2 in range(n):
            if z1 == z2 or z1 == v or z2 == u:
                continue
            if z1 in nbrs[u] and z2 in nbrs[z1] and v in nbrs[z2]:
                paths.append((z1, z2))
    return paths


def cn_l3(n, edges, u, v):
    return float(len(l3_paths(n, edges, u, v)))


def ra_l3(n, edges, u, v, variant="product"):
    nbrs = neighbor_sets(n, edges)
    total = 0.0
    for z1, z2 in l3_paths(n, edges, u, v):
        prod = len(nbrs[z1]) * len(nbrs[z2])
        total += 1.0 / prod if variant == "product" else 1.0 / math.sqrt(prod)
    return total


def ch2_l3(n, edges, u, v):
    nbrs = neighbor_sets(n, edges)
    paths = sorted(l3_paths(n, edges, u, v))
    community = set()
    for z1, z2 in paths:
        community.add(z1)
        community.add(z2)
    total = 0.0
    for z1, z2 in paths:
        d1_int = len(nbrs[z1] & community)
        d1_ext = len(nbrs[z1] - community - {u, v})
        d2_int = len(nbrs[z2] & community)
        d2_ext = len(nbrs[z2] - community - {u, v})
        total += math.sqrt((1.0 + d1_int) * (1.0 + d2_int)) / math.sqrt(
            (1.0 + d1_ext) * (1.0 + d2_ext))
    return total


# ===== matrix kernels =======================================================

def adjacency(n, edges):
    a = np.zeros((n, n))
    for u, v in edges:
        a[u, v] = a[v, u] = 1.0
    return a


def katz_dense_inverse(n, edges, beta):
    a = adjacency(n, edges)
    return np.linalg.inv(np.eye(n) - beta * a) - np.eye(n)


def mfi_inverse(n, edges):
    a = adjacency(n, edges)
    lap = np.diag(a.sum(axis=1)) - a
    return np.linalg.inv(np.eye(n) + lap)


def simrank_definitional(n, edges, c=0.8, iters=20):
    nbrs = neighbor_sets(n, edges)
    s = np.eye(n)
    for _ in range(iters):
        nxt = np.eye(n)
        for u in range(n):
            for v in range(u + 1, n):
                if not nbrs[u] or not nbrs[v]:
                    continue
                acc = 0.0
                for x in nbrs[u]:
                    for y in nbrs[v]:
                        acc += s[x, y]
                nxt[u, v] = nxt[v, u] = c * acc / (len(nbrs[u]) * len(nbrs[v]))
        s = nxt
    return s


def walk_probability(n, edges, t, start):
    """pi_t(start, .) by explicit enumeration of every t-step walk."""
    nbrs = neighbor_sets(n, edges)
    dist = np.zeros(n)

    def step(node, prob, remaining):
        if remaining == 0:
            dist[node] += prob
            return
        if not nbrs[node]:
            return
        share = prob / len(nbrs[node])
        for w in nbrs[node]:
            step(w, share, remaining - 1)

    step(start, 1.0, t)
    return dist


def lrw(n, edges, t, u, v):
    m = len(edges)
    deg = [len(s) for s in neighbor_sets(n, edges)]
    pi_uv = walk_probability(n, edges, t, u)[v]
    pi_vu = walk_probability(n, edges, t, v)[u]
    return deg[u] / (2.0 * m) * pi_uv + deg[v] / (2.0 * m) * pi_vu


def srw(n, edges, t, u, v):
    return float(sum(lrw(n, edges, tau, u, v) for tau in range(1, t + 1)))


# ===== ranking metrics ======================================================

def auc_pairwise(pos_scores, neg_scores):
    wins = 0.0
    for p in pos_scores:
        for q in neg_scores:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos_scores) * len(neg_scores))


def confusion_at(ranks, candidate_count, cutoff):
    tp = sum(1 for r in ranks if r <= cutoff)
    fp = cutoff - tp
    fn = len(ranks) - tp
    tn = candidate_count - cutoff - fn
    return tp, fp, fn, tn


def mcc_from_counts(tp, fp, fn, tn):
    denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    if denom == 0.0:
        return 0.0
    return (tp * tn - fp * fn) / denom


def ndcg_scalar(ranks, n):
    dcg = sum(1.0 / math.log2(1.0 + r) for r in ranks)
    idcg = sum(1.0 / math.log2(1.0 + i) for i in range(1, n + 1))
    return dcg / idcg


def aupr_scalar(ranks):
    """Trapezoid over the n recall segments with interpolated left heights."""
    r = sorted(int(x) for x in ranks)
    n = len(r)
    area = 0.0
    for i in range(1, n + 1):
        right = i / r[i - 1]
        if i == 1:
            left = 1.0 if r[0] == 1 else 0.0
        else:
            left = (i - 1) / (r[i - 1] - 1)
        area += 0.5 * (left + right) / n
    return area


def mroc_scalar(ranks, candidate_count, truncated=False):
    n = len(ranks)
    neg = candidate_count - n
    rset = set(int(r) for r in ranks)
    last = n if truncated else candidate_count
    pts = [(0.0, 0.0)]
    tp = 0
    for k in range(1, last + 1):
        if k in rset:
            tp += 1
        fp = k - tp
        nmtpr = math.log(1 + tp) / math.log(1 + n)
        nmfpr = math.log(1 + fp) / math.log(1 + neg)
        scaled = math.log(1 + fp * n / neg) / math.log(1 + n)
        if 1.0 - scaled == 0.0:
            corr = 0.0
        else:
            corr = (nmtpr - scaled) / (1.0 - scaled)
        mtpr = nmfpr + corr * (1.0 - nmfpr)
        pts.append((nmfpr, mtpr))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += 0.5 * (x1 - x0) * (y1 + y0)
    return area


def h_measure_quadrature(ranks, candidate_count, alpha=2.0, beta=2.0,
                         grid=1_000_000):
    """Beta-weighted expected minimum loss by brute midpoint quadrature.

    The minimum at each cost point is taken over every list-prefix
    operating point of the ranking (the full staircase, no hull), which is
    the definitional optimum for a finite candidate list.
    """
    n = len(ranks)
    neg = candidate_count - n
    pi1 = n / candidate_count
    pi0 = neg / candidate_count

    rset = set(int(r) for r in ranks)
    fprs, tprs = [0.0], [0.0]
    tp = 0
    for k in range(1, candidate_count + 1):
        if k in rset:
            tp += 1
        fprs.append((k - tp) / neg)
        tprs.append(tp / n)
    fprs = np.asarray(fprs)
    tprs = np.asarray(tprs)

    # loss_k(c) = c * pi0 * FPR_k + (1 - c) * pi1 * FNR_k, a line in c
    slope = pi0 * fprs - pi1 * (1.0 - tprs)
    inter = pi1 * (1.0 - tprs)

    norm = beta_fn(alpha, beta)
    num = 0.0
    den = 0.0
    chunk = 200_000
    for lo in range(0, grid, chunk):
        hi = min(lo + chunk, grid)
        c = (np.arange(lo, hi) + 0.5) / grid
        w = c ** (alpha - 1.0) * (1.0 - c) ** (beta - 1.0) / norm
        loss = np.min(c[:, None] * slope[None, :] + inter[None, :], axis=1)
        loss_triv = np.minimum(c * pi0, (1.0 - c) * pi1)
        num += float(np.sum(w * loss))
        den += float(np.sum(w * loss_triv))
    return 1.0 - num / den
