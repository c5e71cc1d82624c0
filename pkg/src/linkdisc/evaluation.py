"""Ranking of positives and the eight evaluation metrics.

Everything downstream of scoring works on a :class:`RankedOutcome`: the
sorted ranks of the positive pairs among all scored candidates. Ties are
resolved by an explicit policy. The closed-form metrics (precision, mcc,
ndcg, auc) accept tie-averaged fractional ranks; the curve metrics (aupr,
auc_precision, h_measure, auc_mroc) need integer ranks, so under the
default average policy they are evaluated on a seeded random resolution
instead (the seed is recorded on the outcome).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as _stats

from .graph import PairSet
from .predictors import ScoreTable

__all__ = [
    "ALL_METRICS",
    "CLOSED_FORM_METRICS",
    "CURVE_METRICS",
    "ConfusionCounts",
    "DISPLAY_NAMES",
    "HMeasureConfig",
    "RankedOutcome",
    "auc",
    "auc_mroc",
    "auc_pairwise",
    "auc_precision",
    "aupr",
    "confusion_counts",
    "evaluate_metrics",
    "h_measure",
    "mcc",
    "ndcg",
    "normalize_metric",
    "precision",
    "rank_positives",
]

CLOSED_FORM_METRICS = ("precision", "mcc", "ndcg", "auc")
CURVE_METRICS = ("aupr", "auc_precision", "h_measure", "auc_mroc")
ALL_METRICS = CLOSED_FORM_METRICS + CURVE_METRICS

DISPLAY_NAMES = {
    "precision": "Precision",
    "mcc": "MCC",
    "ndcg": "NDCG",
    "auc": "AUC",
    "aupr": "AUPR",
    "auc_precision": "AUC-Precision",
    "h_measure": "H-measure",
    "auc_mroc": "AUC-mROC",
}

_ALIASES = {v.lower(): k for k, v in DISPLAY_NAMES.items()}

TIE_POLICIES = ("average", "random", "optimistic", "pessimistic")


def normalize_metric(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key in ALL_METRICS:
        return key
    alias = name.strip().lower()
    if alias in _ALIASES:
        return _ALIASES[alias]
    raise ValueError(f"unknown metric '{name}'")


@dataclass(frozen=True)
class RankedOutcome:
    """Sorted ranks of the positives among C scored candidates.

    ``ranks`` may be fractional under the average tie policy; every other
    policy yields distinct integers in ``1..C``. ``tie_groups``, when
    present, records the score-level tie structure as ``(group size,
    positives in group)`` rows in descending score order; it is preserved
    so distribution-level constructions (the ROC of h_measure) can place
    thresholds only between distinct scores.
    """

    ranks: np.ndarray
    candidate_count: int
    tie_policy: str = "average"
    tie_seed: int | None = None
    tie_groups: np.ndarray | None = None

    def __post_init__(self):
        ranks = np.sort(np.asarray(self.ranks, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "ranks", ranks)
        n = ranks.size
        c = int(self.candidate_count)
        if n == 0:
            raise ValueError("outcome needs at least one positive")
        if c <= n:
            raise ValueError("candidate count must exceed the number of positives")
        if ranks[0] < 1.0 or ranks[-1] > c:
            raise ValueError(f"ranks must lie in [1, {c}]")
        if self.tie_policy not in TIE_POLICIES:
            raise ValueError(f"unknown tie policy '{self.tie_policy}'")

    @property
    def n(self) -> int:
        return int(self.ranks.size)

    @property
    def negative_count(self) -> int:
        return int(self.candidate_count - self.ranks.size)

    @property
    def has_integer_ranks(self) -> bool:
        return bool(np.all(self.ranks == np.floor(self.ranks)))


def _positive_mask(table: ScoreTable, positives, positive_indices) -> np.ndarray:
    mask = np.zeros(len(table), dtype=bool)
    if positive_indices is not None:
        idx = np.asarray(positive_indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= len(table)):
            raise ValueError("positive index out of range")
        mask[idx] = True
        return mask
    if positives is None:
        raise ValueError("positives are required")
    arr = positives.pairs if isinstance(positives, PairSet) else \
        np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    index = table.pair_index
    for u, v in arr:
        key = (int(min(u, v)), int(max(u, v)))
        if key not in index:
            raise ValueError(f"positive pair ({key[0]}, {key[1]}) is not in the score table")
        mask[index[key]] = True
    return mask


def _tie_group_table(scores: np.ndarray, mask: np.ndarray) -> np.ndarray | None:
    """Per-distinct-score (size, positives) rows, descending score."""
    values, counts = np.unique(scores, return_counts=True)
    if values.size == scores.size:
        return None
    pos_counts = np.zeros(values.size, dtype=np.int64)
    if mask.any():
        where = np.searchsorted(values, scores[mask])
        np.add.at(pos_counts, where, 1)
    groups = np.column_stack([counts, pos_counts])[::-1]
    return np.ascontiguousarray(groups)


def rank_positives(
    table: ScoreTable,
    positives=None,
    tie_policy: str = "average",
    seed: int | None = None,
    *,
    positive_indices: Sequence[int] | None = None,
) -> RankedOutcome:
    """Rank candidates by descending score and extract the positives.

    Tie policies: ``average`` assigns tied candidates their mid-rank;
    ``random`` shuffles each tie group (seeded); ``optimistic`` puts
    positives first within a group, ``pessimistic`` last. Positives may be
    given as pairs or, when the caller knows the table layout, as row
    indices.
    """
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy '{tie_policy}'")
    if len(table) == 0:
        raise ValueError("cannot rank an empty score table")
    mask = _positive_mask(table, positives, positive_indices)
    n_pos = int(mask.sum())
    if n_pos == 0:
        raise ValueError("positives are required")
    if n_pos >= len(table):
        raise ValueError("candidate set has no negatives")
    scores = table.scores
    groups = _tie_group_table(scores, mask)

    if tie_policy == "average":
        ranks_all = _stats.rankdata(-scores, method="average")
    else:
        if tie_policy == "random":
            tie_key = np.random.default_rng(seed).random(len(table))
        elif tie_policy == "optimistic":
            tie_key = (~mask).astype(np.int64)
        else:
            tie_key = mask.astype(np.int64)
        order = np.lexsort((tie_key, -scores))
        ranks_all = np.empty(len(table))
        ranks_all[order] = np.arange(1, len(table) + 1)

    return RankedOutcome(
        ranks=np.sort(ranks_all[mask]),
        candidate_count=len(table),
        tie_policy=tie_policy,
        tie_seed=seed if tie_policy == "random" else None,
        tie_groups=groups,
    )


def _require_integer_ranks(outcome: RankedOutcome, metric: str) -> np.ndarray:
    if not outcome.has_integer_ranks:
        raise ValueError(
            f"{metric} needs integer ranks; resolve ties with the random, "
            "optimistic or pessimistic policy")
    return outcome.ranks.astype(np.int64)


# ===== confusion-matrix metrics =============================================

@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def mcc_degenerate(self) -> bool:
        """True when any marginal of the confusion matrix is empty."""
        return 0 in (self.tp + self.fp, self.tp + self.fn,
                     self.tn + self.fp, self.tn + self.fn)


def confusion_counts(outcome: RankedOutcome, cutoff: int | None = None) -> ConfusionCounts:
    """Counts when the top ``cutoff`` candidates are predicted positive."""
    cut = outcome.n if cutoff is None else int(cutoff)
    if not 1 <= cut <= outcome.candidate_count:
        raise ValueError(f"cutoff must lie in [1, {outcome.candidate_count}]")
    tp = int(np.count_nonzero(outcome.ranks <= cut))
    fp = cut - tp
    return ConfusionCounts(tp=tp, fp=fp, fn=outcome.n - tp,
                           tn=outcome.negative_count - fp)


def precision(outcome: RankedOutcome, cutoff: int | None = None) -> float:
    """Fraction of true positives in the top-L list; L defaults to n."""
    counts = confusion_counts(outcome, cutoff)
    return counts.tp / (counts.tp + counts.fp)


def mcc(outcome: RankedOutcome, cutoff: int | None = None) -> float:
    """Matthews correlation at cutoff L (default n); 0 when degenerate.

    A zero marginal makes the usual quotient 0/0. Those outcomes carry no
    correlation signal, so the value is pinned to 0; callers that need to
    distinguish the case can inspect ``confusion_counts(...).mcc_degenerate``.
    """
    c = confusion_counts(outcome, cutoff)
    if c.mcc_degenerate:
        return 0.0
    num = c.tp * c.tn - c.fp * c.fn
    den = math.sqrt(float(c.tp + c.fp) * float(c.tp + c.fn)
                    * float(c.tn + c.fp) * float(c.tn + c.fn))
    return num / den


def ndcg(outcome: RankedOutcome) -> float:
    """Discounted cumulative gain over the ideal (all positives on top)."""
    gains = 1.0 / np.log2(1.0 + outcome.ranks)
    ideal = 1.0 / np.log2(1.0 + np.arange(1, outcome.n + 1))
    return float(gains.sum() / ideal.sum())


# ===== AUC ==================================================================

def auc(outcome: RankedOutcome, form: str = "exact") -> float:
    """Probability that a positive outranks a random negative.

    ``exact`` averages ``1 - (r_i - i) / |negatives|`` over the sorted
    positive ranks; with tie-averaged ranks this equals the pairwise
    definition with half credit for ties. ``approximate`` is the mean-rank
    shortcut ``1 - <r> / C``.
    """
    if form == "exact":
        i = np.arange(1, outcome.n + 1)
        return float(np.mean(1.0 - (outcome.ranks - i) / outcome.negative_count))
    if form == "approximate":
        return float(1.0 - np.mean(outcome.ranks) / outcome.candidate_count)
    raise ValueError(f"unknown auc form '{form}'")


def auc_pairwise(table: ScoreTable, positives=None, *,
                 positive_indices: Sequence[int] | None = None) -> float:
    """Definition-level AUC: compare every positive-negative score pair.

    Wins count 1, ties 1/2. Kept separate from :func:`auc` as an oracle
    route; the two must agree to floating precision on tie-averaged ranks.
    """
    mask = _positive_mask(table, positives, positive_indices)
    pos = table.scores[mask]
    neg = np.sort(table.scores[~mask])
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one positive and one negative")
    below = np.searchsorted(neg, pos, side="left")
    equal = np.searchsorted(neg, pos, side="right") - below
    credit = below.sum() + 0.5 * equal.sum()
    return float(credit / (pos.size * neg.size))


# ===== precision-recall area ================================================

def aupr(outcome: RankedOutcome) -> float:
    """Trapezoidal area under the precision-recall curve.

    Recall rises by 1/n at each positive rank r_i where precision is
    i / r_i; the segment entering it starts at the interpolated height
    (i - 1) / (r_i - 1). The first segment starts at precision 1 when the
    top candidate is a positive and at 0 otherwise.
    """
    r = _require_integer_ranks(outcome, "aupr")
    n = outcome.n
    total = 0.0
    for i in range(1, n + 1):
        ri = r[i - 1]
        if i == 1:
            h = 1.0 if ri == 1 else 0.0
        else:
            h = (i - 1) / (ri - 1)
        total += h + i / ri
    return total / (2 * n)


def auc_precision(outcome: RankedOutcome, form: str = "trapezoid") -> float:
    """Area under precision@k for k = 1..n.

    ``trapezoid`` treats the n samples as curve knots over k, giving
    ``[sum P@k - (P@1 + P@n) / 2] / (n - 1)``; ``literal`` divides the
    plain sum by n - 1 instead. Both collapse to P@1 when n = 1.
    """
    if form not in ("trapezoid", "literal"):
        raise ValueError(f"unknown auc_precision form '{form}'")
    r = _require_integer_ranks(outcome, "auc_precision")
    n = outcome.n
    k = np.arange(1, n + 1)
    p_at_k = np.searchsorted(r, k, side="right") / k
    if n == 1:
        return float(p_at_k[0])
    if form == "literal":
        return float(p_at_k.sum() / (n - 1))
    return float((p_at_k.sum() - 0.5 * (p_at_k[0] + p_at_k[-1])) / (n - 1))


# ===== H-measure ============================================================

@dataclass(frozen=True)
class HMeasureConfig:
    """Beta(alpha, beta) weighting of the misclassification-cost ratio."""

    alpha: float = 2.0
    beta: float = 2.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")

    @classmethod
    def matched_to_priors(cls, outcome: RankedOutcome) -> "HMeasureConfig":
        """alpha = pi_1 + 1, beta = pi_0 + 1, mode of the weight at pi_1."""
        pi1 = outcome.n / outcome.candidate_count
        return cls(alpha=pi1 + 1.0, beta=(1.0 - pi1) + 1.0)


def _roc_corner_points(outcome: RankedOutcome) -> list[tuple[float, float]]:
    """(FP, TP) operating points, thresholds only between distinct scores."""
    neg = outcome.negative_count
    pts: list[tuple[float, float]] = [(0.0, 0.0)]
    if outcome.tie_groups is not None:
        tp = fp = 0
        for size, pos in outcome.tie_groups:
            tp += int(pos)
            fp += int(size) - int(pos)
            pts.append((float(fp), float(tp)))
    else:
        r = _require_integer_ranks(outcome, "h_measure")
        for i, ri in enumerate(r, start=1):
            pts.append((float(ri - i), float(i)))
        if pts[-1] != (float(neg), float(outcome.n)):
            pts.append((float(neg), float(outcome.n)))
    return pts


def _upper_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    hull: list[tuple[float, float]] = []
    for pt in points:
        while len(hull) >= 2:
            (ox, oy), (ax, ay) = hull[-2], hull[-1]
            if (ax - ox) * (pt[1] - oy) - (ay - oy) * (pt[0] - ox) >= 0:
                hull.pop()
            else:
                break
        if hull and hull[-1] == pt:
            continue
        hull.append(pt)
    return hull


def h_measure(outcome: RankedOutcome, config: HMeasureConfig | None = None) -> float:
    """Expected-minimum-loss skill score under a Beta cost weighting.

    The ROC upper convex hull gives, for every cost ratio, the optimal
    operating point; each hull vertex is optimal on one cost interval whose
    endpoints follow from the adjacent hull slopes. The Beta-weighted loss
    integrates in closed form over those intervals via regularized
    incomplete-beta terms, and is normalized by the loss of the best
    trivial classifier. 1 is a perfect ranking, 0 adds nothing to the
    priors.
    """
    cfg = config or HMeasureConfig()
    n = outcome.n
    neg = outcome.negative_count
    c = outcome.candidate_count
    pi1 = n / c
    pi0 = neg / c

    raw = _roc_corner_points(outcome)
    hull = _upper_hull([(fp / neg, tp / n) for fp, tp in raw])

    a, b = cfg.alpha, cfg.beta
    frac1 = a / (a + b)
    frac2 = b / (a + b)

    def int_c(lo: float, hi: float) -> float:
        # integral of c * Beta(a, b; c) dc over [lo, hi]
        return frac1 * (_stats.beta.cdf(hi, a + 1, b) - _stats.beta.cdf(lo, a + 1, b))

    def int_1mc(lo: float, hi: float) -> float:
        return frac2 * (_stats.beta.cdf(hi, a, b + 1) - _stats.beta.cdf(lo, a, b + 1))

    # cost value where adjacent hull vertices trade optimality
    switches: list[float] = []
    for (f0, t0), (f1, t1) in zip(hull, hull[1:]):
        df, dt = f1 - f0, t1 - t0
        if df <= 0.0:
            switches.append(1.0)
        else:
            slope = dt / df
            switches.append(pi1 * slope / (pi0 + pi1 * slope))

    loss = 0.0
    for j, (f, t) in enumerate(hull):
        lo = switches[j] if j < len(switches) else 0.0
        hi = switches[j - 1] if j > 0 else 1.0
        if hi <= lo:
            continue
        loss += pi0 * f * int_c(lo, hi) + pi1 * (1.0 - t) * int_1mc(lo, hi)

    loss_max = pi0 * int_c(0.0, pi1) + pi1 * int_1mc(pi1, 1.0)
    return float(1.0 - loss / loss_max)


# ===== mROC =================================================================

def auc_mroc(outcome: RankedOutcome, sweep: str = "full") -> float:
    """Area under the realigned log-log ROC curve.

    Both rates are log-scaled (nmTPR, nmFPR) and the vertical is then
    realigned so a random predictor tracks the diagonal in expectation.
    The correction term has denominator 1 - log_(1+n)(1 + FP k n/|U-E|),
    which vanishes only once every negative is retrieved; the term is
    defined as 0 there. ``full`` sweeps all C list lengths; ``truncated``
    stops at k = n. The area is a trapezoid over nmFPR, anchored at (0, 0).
    """
    if sweep not in ("full", "truncated"):
        raise ValueError(f"unknown auc_mroc sweep '{sweep}'")
    r = _require_integer_ranks(outcome, "auc_mroc")
    n = outcome.n
    neg = outcome.negative_count
    c = outcome.candidate_count

    hits = np.zeros(c)
    hits[r - 1] = 1.0
    tp = np.cumsum(hits)
    k = np.arange(1, c + 1, dtype=np.float64)
    fp = k - tp
    if sweep == "truncated":
        tp, fp = tp[:n], fp[:n]

    log_n1 = math.log1p(n)
    nmtpr = np.log1p(tp) / log_n1
    nmfpr = np.log1p(fp) / math.log1p(neg)
    scaled = np.log1p(fp * n / neg) / log_n1
    denom = 1.0 - scaled
    corr = np.divide(nmtpr - scaled, denom,
                     out=np.zeros_like(denom), where=denom != 0.0)
    mtpr = nmfpr + corr * (1.0 - nmfpr)

    x = np.concatenate(([0.0], nmfpr))
    y = np.concatenate(([0.0], mtpr))
    return float(np.sum(0.5 * np.diff(x) * (y[1:] + y[:-1])))


# ===== one-call evaluation ==================================================

def evaluate_metrics(
    table: ScoreTable,
    positives=None,
    metrics: Sequence[str] = ALL_METRICS,
    *,
    tie_policy: str = "average",
    tie_seed: int = 0,
    h_config: HMeasureConfig | None = None,
    positive_indices: Sequence[int] | None = None,
) -> dict:
    """Evaluate several metrics from one score table.

    Under the ``average`` policy the curve metrics are computed on a
    seeded random tie resolution (``tie_seed``), as they need integer
    ranks; every other policy already yields integers and is used as is.
    Returns ``{metric_id: value}`` in the requested order.
    """
    ids = [normalize_metric(m) for m in metrics]
    closed_outcome = rank_positives(table, positives, tie_policy,
                                    seed=tie_seed if tie_policy == "random" else None,
                                    positive_indices=positive_indices)
    curve_outcome = closed_outcome
    if tie_policy == "average" and any(m in CURVE_METRICS for m in ids):
        curve_outcome = rank_positives(table, positives, "random", seed=tie_seed,
                                       positive_indices=positive_indices)
    values: dict = {}
    for m in ids:
        if m == "precision":
            values[m] = precision(closed_outcome)
        elif m == "mcc":
            values[m] = mcc(closed_outcome)
        elif m == "ndcg":
            values[m] = ndcg(closed_outcome)
        elif m == "auc":
            values[m] = auc(closed_outcome)
        elif m == "aupr":
            values[m] = aupr(curve_outcome)
        elif m == "auc_precision":
            values[m] = auc_precision(curve_outcome)
        elif m == "h_measure":
            values[m] = h_measure(curve_outcome, h_config)
        else:
            values[m] = auc_mroc(curve_outcome)
    return values
