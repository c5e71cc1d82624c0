"""Paired-trial experiments and the discriminability of metrics.

A metric discriminates between two retention rates q_i < q_j when it
almost never judges the poorer rate at least as good as the richer one.
Each trial shares its edge split across the whole q grid, so the per-pair
violation frequencies are paired comparisons; the fraction of pairs whose
violation frequency stays below a significance level p* is the
discriminability d. Grey relational analysis then compares the d profiles
of different groups (algorithms, networks) metric by metric.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .evaluation import evaluate_metrics, normalize_metric
from .graph import Graph, non_edges
from .predictors import DEFAULT_DENSE_CAP, AlgorithmSpec, score
from .sampling import TrialPlan, derive_trial_seed, retain_fraction, split_edges

__all__ = [
    "DiscriminabilityResult",
    "ExperimentError",
    "GreyCorrelation",
    "PValueMatrix",
    "RankRow",
    "ScoreTensor",
    "correlation_matrix",
    "discriminability_score",
    "grey_correlation",
    "pvalue_matrix",
    "rank_metrics",
    "run_experiment",
    "seeds_for_trial",
    "sweep_pstar",
]


class ExperimentError(RuntimeError):
    """A trial failed; the message carries the (trial, q) context."""


@dataclass(frozen=True)
class ScoreTensor:
    """Metric values for every (trial, q, metric) cell of an experiment."""

    values: np.ndarray
    metric_ids: tuple
    plan: TrialPlan
    algorithm: str = ""
    trial_seeds: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        expected = (self.plan.trials, len(self.plan.q_grid), len(self.metric_ids))
        if v.shape != expected:
            raise ValueError(f"values must have shape {expected}, got {v.shape}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "metric_ids", tuple(self.metric_ids))

    @property
    def q_grid(self) -> tuple:
        return self.plan.q_grid

    def metric_index(self, metric: str) -> int:
        key = normalize_metric(metric)
        try:
            return self.metric_ids.index(key)
        except ValueError:
            raise ValueError(f"metric '{metric}' is not in this tensor") from None

    def metric_values(self, metric: str) -> np.ndarray:
        """(trials, q) slice for one metric."""
        return self.values[:, :, self.metric_index(metric)]


def seeds_for_trial(plan: TrialPlan, trial_index: int) -> dict:
    """The derived seeds one trial consumes, stage by stage."""
    if plan.retention_mode == "nested":
        retain = [derive_trial_seed(plan.master_seed, trial_index, "retain")] * len(plan.q_grid)
    else:
        retain = [derive_trial_seed(plan.master_seed, trial_index, f"retain:{qi}")
                  for qi in range(len(plan.q_grid))]
    return {
        "trial": trial_index,
        "split": derive_trial_seed(plan.master_seed, trial_index, "split"),
        "retain": retain,
        "tie": [derive_trial_seed(plan.master_seed, trial_index, f"tie:{qi}")
                for qi in range(len(plan.q_grid))],
    }


def _run_trial(graph: Graph, negatives: np.ndarray, algorithm: AlgorithmSpec,
               metric_ids: tuple, plan: TrialPlan, tie_policy: str,
               dense_cap: int, trial_index: int):
    seeds = seeds_for_trial(plan, trial_index)
    split = split_edges(graph, plan.test_fraction, seeds["split"])
    candidates = np.vstack([split.test, negatives])
    positive_rows = np.arange(len(split.test))
    out = np.empty((len(plan.q_grid), len(metric_ids)))
    for qi, q in enumerate(plan.q_grid):
        sample = retain_fraction(split, q, seeds["retain"][qi], plan.retention_mode)
        train = Graph.from_edges(graph.n, sample.retained)
        try:
            table = score(train, algorithm, candidates, dense_cap=dense_cap)
            vals = evaluate_metrics(table, metrics=metric_ids,
                                    tie_policy=tie_policy,
                                    tie_seed=seeds["tie"][qi],
                                    positive_indices=positive_rows)
        except Exception as exc:
            raise ExperimentError(
                f"trial {trial_index}, q={q:g}: predictor '{algorithm.kind}' "
                f"failed: {exc}") from exc
        out[qi] = [vals[m] for m in metric_ids]
    return trial_index, out


_WORKER_PAYLOAD: dict = {}


def _init_worker(payload):
    _WORKER_PAYLOAD["args"] = payload


def _worker_trial(trial_index: int):
    return _run_trial(*_WORKER_PAYLOAD["args"], trial_index)


def run_experiment(
    graph: Graph,
    algorithm: AlgorithmSpec,
    metrics: Sequence[str],
    plan: TrialPlan,
    *,
    tie_policy: str = "average",
    workers: int = 1,
    dense_cap: int = DEFAULT_DENSE_CAP,
    resume: Mapping[int, np.ndarray] | None = None,
    on_trial: Callable[[int, np.ndarray], None] | None = None,
) -> ScoreTensor:
    """Run the paired protocol: T trials, each split once and degraded to
    every q, scoring the fixed candidate set E_probe + (U - E).

    Trials are pure functions of (plan, trial index), so results are
    byte-identical for any ``workers`` count and trials can be resumed from
    ``resume`` (a map of trial index to a previously computed (q, metric)
    slice). ``on_trial`` is invoked after each newly computed trial, in
    trial order.
    """
    metric_ids = tuple(normalize_metric(m) for m in metrics)
    if not metric_ids:
        raise ValueError("at least one metric is required")
    negatives = non_edges(graph).pairs
    if negatives.shape[0] == 0:
        raise ValueError("graph is complete; no non-edges to rank against")

    n_q, n_m = len(plan.q_grid), len(metric_ids)
    values = np.empty((plan.trials, n_q, n_m))
    pending = []
    for t in range(plan.trials):
        if resume is not None and t in resume:
            slice_ = np.asarray(resume[t], dtype=np.float64)
            if slice_.shape != (n_q, n_m):
                raise ValueError(f"resume slice for trial {t} has shape {slice_.shape}, "
                                 f"expected {(n_q, n_m)}")
            values[t] = slice_
        else:
            pending.append(t)

    payload = (graph, negatives, algorithm, metric_ids, plan, tie_policy, dense_cap)
    if workers <= 1 or len(pending) <= 1:
        for t in pending:
            _, out = _run_trial(*payload, t)
            values[t] = out
            if on_trial is not None:
                on_trial(t, out)
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(payload,)) as pool:
            for t, out in pool.map(_worker_trial, pending):
                values[t] = out
                if on_trial is not None:
                    on_trial(t, out)

    seeds = tuple(seeds_for_trial(plan, t) for t in range(plan.trials))
    return ScoreTensor(values=values, metric_ids=metric_ids, plan=plan,
                       algorithm=algorithm.label(), trial_seeds=seeds)


# ===== p-values and the discriminability score ==============================

@dataclass(frozen=True)
class PValueMatrix:
    """Pairwise violation frequencies over the q grid.

    ``p[i, j]`` for i < j is the fraction of trials where the metric at
    q_i was at least the metric at q_j (ties count as violations). The
    matrix is kept symmetric with a unit diagonal.
    """

    p: np.ndarray
    q_grid: tuple
    metric: str = ""
    algorithm: str = ""

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        n = len(self.q_grid)
        if p.shape != (n, n):
            raise ValueError("p must be square over the q grid")
        if not np.allclose(np.diag(p), 1.0):
            raise ValueError("diagonal p-values must be 1")
        if not np.array_equal(p, p.T):
            raise ValueError("p must be symmetric")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("p-values must lie in [0, 1]")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q_grid", tuple(self.q_grid))


def pvalue_matrix(tensor: ScoreTensor, metric: str) -> PValueMatrix:
    """Paired violation frequencies for one metric of a tensor."""
    vals = tensor.metric_values(metric)
    n = vals.shape[1]
    p = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            pij = float(np.mean(vals[:, i] >= vals[:, j]))
            p[i, j] = pij
            p[j, i] = pij
    return PValueMatrix(p=p, q_grid=tensor.q_grid, metric=metric,
                        algorithm=tensor.algorithm)


@dataclass(frozen=True)
class DiscriminabilityResult:
    s_matrix: np.ndarray
    d: float
    p_star: float
    q_grid: tuple
    metric: str = ""
    algorithm: str = ""


def discriminability_score(matrix: PValueMatrix, p_star: float) -> DiscriminabilityResult:
    """Fraction of q pairs whose violation frequency stays below p*.

    The n diagonal cells can never fire (their p-value is 1), so d is at
    most (n^2 - n) / n^2.
    """
    if not 0.0 < p_star <= 1.0:
        raise ValueError("p_star must lie in (0, 1]")
    s = (matrix.p < p_star).astype(np.int8)
    n = s.shape[0]
    return DiscriminabilityResult(
        s_matrix=s, d=float(s.sum() / (n * n)), p_star=float(p_star),
        q_grid=matrix.q_grid, metric=matrix.metric, algorithm=matrix.algorithm)


def sweep_pstar(matrix: PValueMatrix, grid: Sequence[float]) -> list:
    """(p*, d) curve over a significance grid; d is non-decreasing in p*."""
    return [(float(p), discriminability_score(matrix, p).d) for p in grid]


# ===== grey relational analysis =============================================

@dataclass(frozen=True)
class GreyCorrelation:
    xi_ij: float
    xi_ji: float
    r: float


def _grey_xi(reference, comparison, rho: float) -> float:
    ref = np.asarray(reference, dtype=np.float64)
    cmp_ = np.asarray(comparison, dtype=np.float64)
    diffs = np.abs(cmp_ - ref)
    dmin, dmax = float(diffs.min()), float(diffs.max())
    if dmax == 0.0:
        return 1.0
    den = diffs + rho * dmax
    terms = np.divide(dmin + rho * dmax, den,
                      out=np.ones_like(den), where=den > 0.0)
    return float(terms.mean())


def grey_correlation(x_i, x_j, rho: float = 0.5) -> GreyCorrelation:
    """Grey relational coefficient between two equal-length sequences.

    The min/max in the coefficient are taken over the pairwise absolute
    differences of the two sequences under comparison, so the directed
    coefficients coincide here; identical sequences give 1 by convention.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    a = np.asarray(x_i, dtype=np.float64)
    b = np.asarray(x_j, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("sequences must be equal-length non-empty vectors")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("sequences must be finite")
    xi_ij = _grey_xi(a, b, rho)
    xi_ji = _grey_xi(b, a, rho)
    return GreyCorrelation(xi_ij=xi_ij, xi_ji=xi_ji, r=0.5 * (xi_ij + xi_ji))


def correlation_matrix(sequences: Mapping[str, Sequence[float]],
                       rho: float = 0.5):
    """Symmetric grey correlation matrix over named sequences.

    Returns ``(labels, R)`` where R has a unit diagonal.
    """
    labels = list(sequences.keys())
    if len(labels) < 2:
        raise ValueError("need at least two sequences to correlate")
    lengths = {len(np.asarray(sequences[k]).reshape(-1)) for k in labels}
    if len(lengths) != 1:
        raise ValueError("sequences must have equal length")
    n = len(labels)
    r = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            g = grey_correlation(sequences[labels[i]], sequences[labels[j]], rho)
            r[i, j] = g.r
            r[j, i] = g.r
    return labels, r


# ===== metric ranking =======================================================

@dataclass(frozen=True)
class RankRow:
    group: str
    metric: str
    d: float
    rank: int


def rank_metrics(groups: Mapping[str, Mapping[str, float]]) -> list:
    """Rank metrics by descending d within each group.

    Ties share a rank and the next metric resumes at its positional rank
    (1, 1, 3 for two leaders), so distinct values always yield a
    permutation of 1..m. Tied metrics are ordered by name for display.
    """
    rows: list[RankRow] = []
    for group, table in groups.items():
        items = sorted(table.items(), key=lambda kv: (-kv[1], kv[0]))
        ds = [d for _, d in items]
        for pos, (metric, d) in enumerate(items):
            rank = 1 + sum(1 for other in ds if other > d)
            rows.append(RankRow(group=group, metric=metric, d=float(d), rank=rank))
    return rows
