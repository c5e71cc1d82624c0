"""Experiment harness: run configs, result tables, and the results manifest.

File conventions: tables are comma-separated with a header row, ``.``
decimal separator and 12 significant digits. A run directory holds
``node_labels.csv``, ``trials.csv``, one ``pvalues_<algorithm>_<metric>.csv``
per pair, ``discriminability.csv``, ``ranking.csv`` and ``manifest.json``.
Every output byte is determined by (config, master seed); the manifest adds
wall-clock timings and checksums on top.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .discriminability import (
    discriminability_score,
    pvalue_matrix,
    rank_metrics,
    run_experiment,
)
from .evaluation import ALL_METRICS, TIE_POLICIES, evaluate_metrics, normalize_metric
from .graph import Graph, generate_ba, generate_er, load_edge_list
from .predictors import (
    DEFAULT_DENSE_CAP,
    AlgorithmSpec,
    ScoreTable,
    parse_score_file,
)
from .sampling import (
    DEFAULT_Q_GRID,
    DEFAULT_TEST_FRACTION,
    RETENTION_MODES,
    TrialPlan,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "cmd_correlate",
    "cmd_metrics",
    "cmd_report",
    "cmd_run",
    "format_value",
    "read_table",
    "write_table",
]


class ConfigError(ValueError):
    """An invalid run configuration; the message names the offending field."""


# ===== table serialization ==================================================

def format_value(x) -> str:
    """Cell formatting: floats at 12 significant digits, rest verbatim."""
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_table(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_table(path: Path):
    """Read a result table; returns (header, rows of strings)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise ValueError(f"{path}: empty table")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ===== run configuration ====================================================

_CONFIG_KEYS = {
    "network", "algorithms", "metrics", "q_grid", "trials", "master_seed",
    "retention_mode", "test_fraction", "p_star", "tie_policy", "output_dir",
    "workers", "dense_cap",
}


@dataclass(frozen=True)
class RunConfig:
    """Validated description of one experiment run."""

    network: dict
    algorithms: tuple
    metrics: tuple
    q_grid: tuple = DEFAULT_Q_GRID
    trials: int = 100
    master_seed: int = 0
    retention_mode: str = "independent"
    test_fraction: float = DEFAULT_TEST_FRACTION
    p_star: tuple = (0.01,)
    tie_policy: str = "average"
    output_dir: str = "results"
    workers: int = 1
    dense_cap: int = DEFAULT_DENSE_CAP

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config: expected a JSON object at the top level")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"config: unknown key(s) {sorted(unknown)}")

        network = data.get("network")
        if not isinstance(network, dict):
            raise ConfigError("network: required and must be an object")
        network = dict(network)
        if "path" in network:
            extra = set(network) - {"path", "one_based", "allow_isolates", "largest_component"}
            if extra:
                raise ConfigError(f"network: unknown key(s) {sorted(extra)}")
            path = Path(network["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            if not path.is_file():
                raise ConfigError(f"network.path: no such file '{network['path']}'")
            network["path"] = str(path)
        elif "model" in network:
            extra = set(network) - {"model", "n", "m", "seed"}
            if extra:
                raise ConfigError(f"network: unknown key(s) {sorted(extra)}")
            if network.get("model") not in ("er", "ba"):
                raise ConfigError("network.model: must be 'er' or 'ba'")
            for key in ("n", "m"):
                if not isinstance(network.get(key), int):
                    raise ConfigError(f"network.{key}: required integer")
            network.setdefault("seed", 0)
        else:
            raise ConfigError("network: needs either 'path' or 'model'")

        algos_raw = data.get("algorithms")
        if not isinstance(algos_raw, list) or not algos_raw:
            raise ConfigError("algorithms: required non-empty list")
        algorithms = []
        for i, entry in enumerate(algos_raw):
            if not isinstance(entry, dict) or "kind" not in entry:
                raise ConfigError(f"algorithms[{i}]: expected an object with a 'kind'")
            params = {k: v for k, v in entry.items() if k != "kind"}
            if entry["kind"] == "external" and "path" in params and base_dir is not None:
                p = Path(params["path"])
                params["path"] = str(p if p.is_absolute() else base_dir / p)
            try:
                algorithms.append(AlgorithmSpec(entry["kind"], params))
            except ValueError as exc:
                raise ConfigError(f"algorithms[{i}]: {exc}") from None

        metrics_raw = data.get("metrics", "all")
        if metrics_raw == "all":
            metrics = ALL_METRICS
        else:
            if not isinstance(metrics_raw, list) or not metrics_raw:
                raise ConfigError("metrics: expected 'all' or a non-empty list")
            try:
                metrics = tuple(normalize_metric(m) for m in metrics_raw)
            except ValueError as exc:
                raise ConfigError(f"metrics: {exc}") from None
            if len(set(metrics)) != len(metrics):
                raise ConfigError("metrics: duplicate entries")

        q_grid = tuple(data.get("q_grid", DEFAULT_Q_GRID))
        trials = data.get("trials", 100)
        if not isinstance(trials, int) or trials < 1:
            raise ConfigError("trials: must be a positive integer")
        master_seed = data.get("master_seed", 0)
        if not isinstance(master_seed, int):
            raise ConfigError("master_seed: must be an integer")
        retention_mode = data.get("retention_mode", "independent")
        if retention_mode not in RETENTION_MODES:
            raise ConfigError(f"retention_mode: must be one of {RETENTION_MODES}")
        test_fraction = data.get("test_fraction", DEFAULT_TEST_FRACTION)

        p_star_raw = data.get("p_star", [0.01])
        if isinstance(p_star_raw, (int, float)):
            p_star_raw = [p_star_raw]
        if not isinstance(p_star_raw, list) or not p_star_raw:
            raise ConfigError("p_star: expected a value or non-empty list")
        p_star = []
        for p in p_star_raw:
            if not isinstance(p, (int, float)) or not 0.0 < float(p) <= 1.0:
                raise ConfigError("p_star: values must lie in (0, 1]")
            p_star.append(float(p))
        if sorted(p_star) != p_star:
            raise ConfigError("p_star: list must be ascending")

        tie_policy = data.get("tie_policy", "average")
        if tie_policy not in TIE_POLICIES:
            raise ConfigError(f"tie_policy: must be one of {TIE_POLICIES}")
        output_dir = data.get("output_dir", "results")
        if base_dir is not None and not Path(output_dir).is_absolute():
            output_dir = str(base_dir / output_dir)
        workers = data.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError("workers: must be a positive integer")
        dense_cap = data.get("dense_cap", DEFAULT_DENSE_CAP)
        if not isinstance(dense_cap, int) or dense_cap < 1:
            raise ConfigError("dense_cap: must be a positive integer")

        try:
            plan = TrialPlan(q_grid=q_grid, trials=trials, master_seed=master_seed,
                             retention_mode=retention_mode, test_fraction=test_fraction)
        except ValueError as exc:
            raise ConfigError(f"q_grid/trials/test_fraction: {exc}") from None

        return cls(network=network, algorithms=tuple(algorithms), metrics=metrics,
                   q_grid=plan.q_grid, trials=trials, master_seed=master_seed,
                   retention_mode=retention_mode, test_fraction=float(test_fraction),
                   p_star=tuple(p_star), tie_policy=tie_policy,
                   output_dir=str(output_dir), workers=workers, dense_cap=dense_cap)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config: no such file '{path}'")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: not valid JSON ({exc})") from None
        return cls.from_mapping(data, base_dir=path.parent)

    def as_mapping(self) -> dict:
        return {
            "network": dict(self.network),
            "algorithms": [dict(kind=a.kind, **{k: v for k, v in a.params.items()
                                                if v is not None})
                           for a in self.algorithms],
            "metrics": list(self.metrics),
            "q_grid": list(self.q_grid),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "retention_mode": self.retention_mode,
            "test_fraction": self.test_fraction,
            "p_star": list(self.p_star),
            "tie_policy": self.tie_policy,
            "output_dir": self.output_dir,
            "workers": self.workers,
            "dense_cap": self.dense_cap,
        }

    def canonical_json(self) -> str:
        # the seed-relevant identity of the run: everything except execution
        # knobs (output_dir, workers) that must not affect result bytes
        data = self.as_mapping()
        data.pop("output_dir")
        data.pop("workers")
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def plan(self) -> TrialPlan:
        return TrialPlan(q_grid=self.q_grid, trials=self.trials,
                         master_seed=self.master_seed,
                         retention_mode=self.retention_mode,
                         test_fraction=self.test_fraction)


def load_network(network: dict) -> Graph:
    if "path" in network:
        return load_edge_list(
            Path(network["path"]),
            one_based=bool(network.get("one_based", False)),
            allow_isolates=bool(network.get("allow_isolates", False)),
            largest_component=bool(network.get("largest_component", False)),
        )
    n, m, seed = network["n"], network["m"], network.get("seed", 0)
    if network["model"] == "er":
        return generate_er(n, m, seed)
    return generate_ba(n, m, seed)


def _algorithm_labels(algorithms) -> list:
    labels = []
    seen: dict = {}
    for spec in algorithms:
        base = spec.label()
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    return labels


# ===== cmd_run ==============================================================

def cmd_run(config: RunConfig, *, workers: int | None = None,
            output_dir: str | Path | None = None) -> Path:
    """Execute a run config and write the results directory.

    Completed trials are checkpointed under ``_checkpoints/`` and reused on
    a rerun with an identical config, so interrupted experiments resume
    without re-randomization; the directory is removed once the run
    finishes. Returns the output directory.
    """
    t_start = time.perf_counter()
    graph = load_network(config.network)
    plan = config.plan()
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_workers = workers if workers is not None else config.workers
    config_hash = hashlib.sha256(config.canonical_json().encode()).hexdigest()

    labels = _algorithm_labels(config.algorithms)
    tensors = []
    timings: dict = {}
    ckpt_root = out / "_checkpoints"
    for spec, label in zip(config.algorithms, labels):
        t0 = time.perf_counter()
        ckpt_dir = ckpt_root / label
        resume = _load_checkpoints(ckpt_dir, config_hash)
        ckpt_dir.mkdir(parents=True, exist_ok=True)

        def on_trial(t, values, _dir=ckpt_dir):
            payload = {"config_sha256": config_hash, "trial": t,
                       "values": values.tolist()}
            (_dir / f"trial_{t:06d}.json").write_text(json.dumps(payload))

        tensor = run_experiment(graph, spec, config.metrics, plan,
                                tie_policy=config.tie_policy,
                                workers=n_workers, dense_cap=config.dense_cap,
                                resume=resume or None, on_trial=on_trial)
        tensors.append(tensor)
        timings[label] = round(time.perf_counter() - t0, 6)

    files = _write_result_tables(out, config, graph, labels, tensors)
    if ckpt_root.exists():
        shutil.rmtree(ckpt_root)

    manifest = {
        "version": __version__,
        "config": config.as_mapping(),
        "config_sha256": config_hash,
        "algorithm_labels": labels,
        "trial_seeds": list(tensors[0].trial_seeds),
        "files": {name: {"sha256": _sha256(out / name),
                         "bytes": (out / name).stat().st_size}
                  for name in files},
        "timings": {"total_seconds": round(time.perf_counter() - t_start, 6),
                    "per_algorithm_seconds": timings},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return out


def _load_checkpoints(ckpt_dir: Path, config_hash: str) -> dict:
    resume: dict = {}
    if not ckpt_dir.is_dir():
        return resume
    for path in sorted(ckpt_dir.glob("trial_*.json")):
        try:
            payload = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError):
            continue
        if payload.get("config_sha256") != config_hash:
            continue
        resume[int(payload["trial"])] = np.asarray(payload["values"])
    return resume


def _write_result_tables(out: Path, config: RunConfig, graph: Graph,
                         labels: list, tensors: list) -> list:
    files: list[str] = []

    write_table(out / "node_labels.csv", ["node_id", "label"],
                [[i, graph.node_label(i)] for i in range(graph.n)])
    files.append("node_labels.csv")

    rows = []
    for label, tensor in zip(labels, tensors):
        for t in range(tensor.plan.trials):
            for qi, q in enumerate(tensor.q_grid):
                for mi, metric in enumerate(tensor.metric_ids):
                    rows.append([label, t, float(q), metric,
                                 float(tensor.values[t, qi, mi])])
    write_table(out / "trials.csv", ["algorithm", "trial", "q", "metric", "value"], rows)
    files.append("trials.csv")

    disc_rows = []
    rank_groups: dict = {}
    for label, tensor in zip(labels, tensors):
        for metric in tensor.metric_ids:
            pmat = pvalue_matrix(tensor, metric)
            name = f"pvalues_{label}_{metric}.csv"
            header = ["q"] + [format_value(float(q)) for q in tensor.q_grid]
            write_table(out / name, header,
                        [[float(q)] + [float(x) for x in row]
                         for q, row in zip(tensor.q_grid, pmat.p)])
            files.append(name)
            for p_star in config.p_star:
                res = discriminability_score(pmat, p_star)
                disc_rows.append([label, metric, float(p_star), res.d])
                rank_groups.setdefault((label, p_star), {})[metric] = res.d
    write_table(out / "discriminability.csv",
                ["algorithm", "metric", "p_star", "d"], disc_rows)
    files.append("discriminability.csv")

    rank_rows = []
    for (label, p_star), table in rank_groups.items():
        for row in rank_metrics({label: table}):
            rank_rows.append([label, float(p_star), row.metric, row.d, row.rank])
    write_table(out / "ranking.csv",
                ["algorithm", "p_star", "metric", "d", "rank"], rank_rows)
    files.append("ranking.csv")
    return files


# ===== cmd_metrics ==========================================================

def _parse_pair_lines(path: Path) -> np.ndarray:
    pairs = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ValueError(f"{path}: line {lineno}: expected two node labels")
        try:
            a, b = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: non-integer node label") from None
        if a == b:
            raise ValueError(f"{path}: line {lineno}: self pair on node {a}")
        pairs.append((min(a, b), max(a, b)))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def cmd_metrics(scores_path: str | Path, positives_path: str | Path,
                metrics=ALL_METRICS, tie_policy: str = "average",
                seed: int = 0) -> list:
    """Evaluate metrics for an external score file against a positives file.

    Returns rows ``(metric_id, value, parameter string)``; this is the same
    code path as library evaluation, so values match library calls exactly.
    """
    pairs, values = parse_score_file(Path(scores_path))
    table = ScoreTable(pairs=pairs, scores=values, algorithm="external")
    positives = _parse_pair_lines(Path(positives_path))
    if positives.shape[0] == 0:
        raise ValueError(f"{positives_path}: positives file lists no pairs")
    ids = [normalize_metric(m) for m in metrics]
    out = evaluate_metrics(table, positives, ids, tie_policy=tie_policy, tie_seed=seed)
    rows = []
    from .evaluation import CURVE_METRICS
    for m in ids:
        if m in CURVE_METRICS and tie_policy == "average":
            params = f"tie=random;seed={seed}"
        else:
            params = f"tie={tie_policy}"
        if m == "h_measure":
            params += ";alpha=2;beta=2"
        rows.append((m, out[m], params))
    return rows


# ===== cmd_correlate ========================================================

def _read_discriminability_groups(path: Path, p_star: float | None):
    header, rows = read_table(path)
    cols = {name: i for i, name in enumerate(header)}
    if "metric" not in cols or "d" not in cols:
        raise ValueError(f"{path}: needs 'metric' and 'd' columns")
    if "p_star" in cols:
        stars = sorted({row[cols["p_star"]] for row in rows})
        if p_star is not None:
            want = format_value(float(p_star))
            if want not in stars:
                raise ValueError(f"{path}: no rows at p_star={p_star:g} "
                                 f"(present: {', '.join(stars)})")
            rows = [row for row in rows if row[cols["p_star"]] == want]
        elif len(stars) > 1:
            raise ValueError(f"{path}: several p_star values "
                             f"({', '.join(stars)}); pick one with --p-star")
    groups: dict = {}
    order: list = []
    for row in rows:
        alg = row[cols["algorithm"]] if "algorithm" in cols else ""
        if alg not in groups:
            groups[alg] = []
            order.append(alg)
        groups[alg].append((row[cols["metric"]], float(row[cols["d"]])))
    return [(alg, groups[alg]) for alg in order]


def cmd_correlate(paths, rho: float = 0.5, p_star: float | None = None):
    """Grey correlation matrix across the groups found in the given tables.

    Each table contributes one group per algorithm column value (the file
    stem alone when there is a single group). All groups must list the same
    metrics in the same order.
    """
    if len(paths) < 1:
        raise ValueError("at least one table is required")
    sequences: dict = {}
    metric_order: list | None = None
    for path in paths:
        path = Path(path)
        found = _read_discriminability_groups(path, p_star)
        for alg, pairs in found:
            label = f"{path.stem}:{alg}" if alg and len(found) > 1 else path.stem
            base, k = label, 2
            while label in sequences:
                label = f"{base}#{k}"
                k += 1
            metrics = [m for m, _ in pairs]
            if metric_order is None:
                metric_order = metrics
            elif metrics != metric_order:
                missing = sorted(set(metric_order) - set(metrics))
                extra = sorted(set(metrics) - set(metric_order))
                if missing or extra:
                    raise ValueError(
                        f"{path}: metric set differs from the first table "
                        f"(missing: {missing or '-'}, extra: {extra or '-'})")
                raise ValueError(f"{path}: metrics are ordered differently "
                                 "from the first table")
            sequences[label] = [d for _, d in pairs]
    if len(sequences) < 2:
        raise ValueError("need at least two groups to correlate")
    from .discriminability import correlation_matrix
    return correlation_matrix(sequences, rho)


# ===== cmd_report ===========================================================

def cmd_report(results_dir: str | Path, out_dir: str | Path | None = None) -> list:
    """Derive (p*, d) curves and rank tables from a finished run directory.

    Reads ``discriminability.csv``; the curve averages d over the run's
    algorithms per (metric, p*) cell. Re-running the report reproduces the
    same bytes. Returns the written paths.
    """
    results = Path(results_dir)
    disc = results / "discriminability.csv"
    if not disc.is_file():
        raise FileNotFoundError(
            f"{results}: not a results directory (missing discriminability.csv)")
    header, rows = read_table(disc)
    cols = {name: i for i, name in enumerate(header)}
    for needed in ("algorithm", "metric", "p_star", "d"):
        if needed not in cols:
            raise FileNotFoundError(f"{disc}: missing column '{needed}'")

    out = Path(out_dir) if out_dir is not None else results
    out.mkdir(parents=True, exist_ok=True)

    metric_order: list = []
    pstar_order: list = []
    cells: dict = {}
    groups: dict = {}
    for row in rows:
        metric, pstar = row[cols["metric"]], row[cols["p_star"]]
        d = float(row[cols["d"]])
        if metric not in metric_order:
            metric_order.append(metric)
        if pstar not in pstar_order:
            pstar_order.append(pstar)
        cells.setdefault((metric, pstar), []).append(d)
        groups.setdefault((row[cols["algorithm"]], pstar), {})[metric] = d

    curve_rows = []
    for metric in metric_order:
        for pstar in pstar_order:
            ds = cells.get((metric, pstar))
            if ds:
                curve_rows.append([metric, float(pstar), float(np.mean(ds))])
    curves = out / "curves.csv"
    write_table(curves, ["metric", "p_star", "d"], curve_rows)

    rank_rows = []
    for (alg, pstar), table in groups.items():
        for r in rank_metrics({alg: table}):
            rank_rows.append([alg, float(pstar), r.metric, r.d, r.rank])
    ranks = out / "rank_report.csv"
    write_table(ranks, ["algorithm", "p_star", "metric", "d", "rank"], rank_rows)
    return [curves, ranks]
