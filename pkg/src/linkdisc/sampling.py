"""Edge splitting and retention sampling for paired evaluation trials.

The protocol: edges are split once per trial into a training set and a
probe (test) set, then the training set is degraded to a retention rate q.
Discarded training edges vanish from the trial entirely. No connectivity
repair is attempted; predictors must cope with whatever the sample leaves.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph

__all__ = [
    "EdgeSplit",
    "RetentionSample",
    "TrialPlan",
    "derive_trial_seed",
    "retain_fraction",
    "round_half_up",
    "split_edges",
]

RETENTION_MODES = ("independent", "nested")

DEFAULT_Q_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_TEST_FRACTION = 0.1


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero for positive x."""
    return int(math.floor(x + 0.5))


def derive_trial_seed(master_seed: int, trial_index: int, stage_label: str) -> int:
    """Derive a stable 64-bit stream seed for one randomization stage.

    The mixing is a fixed keyed hash of ``master:trial:stage``, so seeds are
    reproducible across processes and machines (unlike ``hash()``) and
    distinct stages never share a stream.
    """
    msg = f"{master_seed}:{trial_index}:{stage_label}".encode()
    digest = hashlib.blake2b(msg, digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class EdgeSplit:
    """A disjoint partition of a graph's edges into train and test rows."""

    graph: Graph
    train: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        if len(self.train) + len(self.test) != self.graph.edge_count:
            raise ValueError("split does not cover the edge set")
        if len(self.test) == 0:
            raise ValueError("test set is empty")
        if len(self.train) == 0:
            raise ValueError("training set is empty")


@dataclass(frozen=True)
class RetentionSample:
    """Training edges kept at retention rate q; the rest are discarded."""

    retained: np.ndarray
    q: float
    mode: str


def split_edges(graph: Graph, test_fraction: float, seed: int) -> EdgeSplit:
    """Partition edges into training and probe sets.

    The probe size is ``max(1, round(test_fraction * |E|))`` with half-up
    rounding, capped at ``|E| - 1`` so the training side is never empty.
    Selection is a seeded uniform draw over the canonical edge rows.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    m = graph.edge_count
    if m < 2:
        raise ValueError("graph needs at least 2 edges to split")
    k = max(1, round_half_up(test_fraction * m))
    k = min(k, m - 1)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    test_rows = np.sort(perm[:k])
    train_rows = np.sort(perm[k:])
    return EdgeSplit(graph=graph, train=graph.edges[train_rows], test=graph.edges[test_rows])


def retain_fraction(
    split: EdgeSplit,
    q: float,
    trial_seed: int,
    mode: str = "independent",
) -> RetentionSample:
    """Keep ``round(q * |train|)`` training edges (at least one).

    independent
        A fresh uniform subset for every call; distinct q values should be
        driven by distinct derived seeds.
    nested
        One seeded permutation of the training edges; the sample is its
        prefix, so with a shared ``trial_seed`` the retained sets form a
        chain along increasing q.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    if mode not in RETENTION_MODES:
        raise ValueError(f"unknown retention mode '{mode}'")
    m = len(split.train)
    size = max(1, round_half_up(q * m))
    size = min(size, m)
    rng = np.random.default_rng(trial_seed)
    if mode == "independent":
        rows = rng.choice(m, size=size, replace=False)
    else:
        rows = rng.permutation(m)[:size]
    rows = np.sort(rows)
    return RetentionSample(retained=split.train[rows], q=float(q), mode=mode)


@dataclass(frozen=True)
class TrialPlan:
    """Shape of a paired experiment: q grid, trial count, master seed."""

    q_grid: tuple = DEFAULT_Q_GRID
    trials: int = 100
    master_seed: int = 0
    retention_mode: str = "independent"
    test_fraction: float = DEFAULT_TEST_FRACTION

    def __post_init__(self):
        grid = tuple(float(q) for q in self.q_grid)
        object.__setattr__(self, "q_grid", grid)
        if len(grid) < 2:
            raise ValueError("q grid needs at least two points")
        if any(not 0.0 < q < 1.0 for q in grid):
            raise ValueError("q values must lie strictly between 0 and 1")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("q grid must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.retention_mode not in RETENTION_MODES:
            raise ValueError(f"unknown retention mode '{self.retention_mode}'")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie strictly between 0 and 1")
