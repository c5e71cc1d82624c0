import numpy as np
import pytest

from linkdisc import (
    AlgorithmSpec,
    ExperimentError,
    PValueMatrix,
    ScoreTensor,
    TrialPlan,
    correlation_matrix,
    discriminability_score,
    generate_er,
    grey_correlation,
    pvalue_matrix,
    rank_metrics,
    run_experiment,
    seeds_for_trial,
    sweep_pstar,
)

PLAN3 = TrialPlan(q_grid=(0.3, 0.6, 0.9), trials=4)


@pytest.fixture(scope="module")
def graph():
    return generate_er(30, 60, seed=1)


@pytest.fixture(scope="module")
def tensor(graph):
    plan = TrialPlan(q_grid=(0.3, 0.6, 0.9), trials=6, master_seed=7)
    return run_experiment(graph, AlgorithmSpec(kind="ra"),
                          ("auc", "precision"), plan)


def _hand_tensor():
    # per-q value sequences over 4 trials, chosen so the violation
    # frequencies are 1/4, 0 and 0 for the pairs (1,2), (1,3), (2,3)
    q1 = [0.5, 0.6, 0.55, 0.58]
    q2 = [0.6, 0.62, 0.5, 0.7]
    q3 = [0.7, 0.8, 0.75, 0.9]
    values = np.stack([q1, q2, q3], axis=1)[:, :, None]
    return ScoreTensor(values=values, metric_ids=("auc",), plan=PLAN3)


class TestScoreTensor:
    def test_shape_validated(self):
        with pytest.raises(ValueError, match="shape"):
            ScoreTensor(values=np.zeros((4, 2, 1)), metric_ids=("auc",), plan=PLAN3)

    def test_metric_lookup(self):
        t = _hand_tensor()
        assert t.metric_values("AUC").shape == (4, 3)
        with pytest.raises(ValueError, match="not in this tensor"):
            t.metric_values("ndcg")


class TestPValues:
    def test_hand_example(self):
        m = pvalue_matrix(_hand_tensor(), "auc")
        assert m.p[0, 1] == pytest.approx(0.25)
        assert m.p[0, 2] == 0.0
        assert m.p[1, 2] == 0.0
        assert np.array_equal(m.p, m.p.T)
        assert np.all(np.diag(m.p) == 1.0)

    def test_identical_sequences_give_ones(self):
        values = np.full((5, 3, 1), 0.7)
        t = ScoreTensor(values=values, metric_ids=("auc",),
                        plan=TrialPlan(q_grid=(0.3, 0.6, 0.9), trials=5))
        m = pvalue_matrix(t, "auc")
        assert np.all(m.p == 1.0)

    def test_matrix_validation(self):
        grid = (0.3, 0.6)
        with pytest.raises(ValueError, match="square"):
            PValueMatrix(p=np.ones((3, 3)), q_grid=grid)
        with pytest.raises(ValueError, match="diagonal"):
            PValueMatrix(p=np.array([[0.5, 0.2], [0.2, 1.0]]), q_grid=grid)
        with pytest.raises(ValueError, match="symmetric"):
            PValueMatrix(p=np.array([[1.0, 0.2], [0.3, 1.0]]), q_grid=grid)
        with pytest.raises(ValueError, match="0, 1"):
            PValueMatrix(p=np.array([[1.0, 1.2], [1.2, 1.0]]), q_grid=grid)


class TestDiscriminability:
    def test_hand_example_score(self):
        m = pvalue_matrix(_hand_tensor(), "auc")
        res = discriminability_score(m, 0.01)
        assert res.d == pytest.approx(4 / 9)
        assert np.all(np.diag(res.s_matrix) == 0)
        assert np.array_equal(res.s_matrix, res.s_matrix.T)

    def test_sweep_hand_example(self):
        m = pvalue_matrix(_hand_tensor(), "auc")
        got = sweep_pstar(m, (0.01, 0.3, 1.0))
        assert got == [(0.01, pytest.approx(4 / 9)),
                       (0.3, pytest.approx(6 / 9)),
                       (1.0, pytest.approx(6 / 9))]

    def test_no_discrimination_when_all_ones(self):
        m = PValueMatrix(p=np.ones((3, 3)), q_grid=(0.3, 0.6, 0.9))
        assert discriminability_score(m, 1.0).d == 0.0

    def test_cap_reached_when_all_pairs_fire(self):
        n = 9
        p = np.zeros((n, n))
        np.fill_diagonal(p, 1.0)
        m = PValueMatrix(p=p, q_grid=tuple((i + 1) / 10 for i in range(n)))
        res = discriminability_score(m, 0.01)
        assert res.d == pytest.approx(72 / 81)
        assert res.d <= (n * n - n) / (n * n)

    def test_p_star_validated(self):
        m = PValueMatrix(p=np.ones((2, 2)), q_grid=(0.3, 0.6))
        for bad in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError, match="p_star"):
                discriminability_score(m, bad)


class TestRunExperiment:
    def test_tensor_shape_and_labels(self, tensor):
        assert tensor.values.shape == (6, 3, 2)
        assert tensor.metric_ids == ("auc", "precision")
        assert tensor.algorithm == "ra"
        assert len(tensor.trial_seeds) == 6
        assert np.isfinite(tensor.values).all()

    def test_worker_count_does_not_change_values(self, graph, tensor):
        plan = TrialPlan(q_grid=(0.3, 0.6, 0.9), trials=6, master_seed=7)
        other = run_experiment(graph, AlgorithmSpec(kind="ra"),
                               ("auc", "precision"), plan, workers=2)
        assert np.array_equal(tensor.values, other.values)
        assert tensor.trial_seeds == other.trial_seeds

    def test_structural_invariants_on_real_run(self, tensor):
        trials = tensor.plan.trials
        for metric in tensor.metric_ids:
            m = pvalue_matrix(tensor, metric)
            assert np.array_equal(m.p, m.p.T)
            assert np.all(np.diag(m.p) == 1.0)
            counts = m.p * trials
            assert np.allclose(counts, np.round(counts), atol=1e-9)
            sweep = sweep_pstar(m, (0.01, 0.05, 0.2, 0.5, 1.0))
            ds = [d for _, d in sweep]
            assert all(b >= a for a, b in zip(ds, ds[1:]))
            n = len(tensor.q_grid)
            assert all(d <= (n * n - n) / (n * n) for d in ds)

    def test_resume_reproduces_full_run(self, graph, tensor):
        plan = TrialPlan(q_grid=(0.3, 0.6, 0.9), trials=6, master_seed=7)
        partial = {0: tensor.values[0], 3: tensor.values[3]}
        resumed = run_experiment(graph, AlgorithmSpec(kind="ra"),
                                 ("auc", "precision"), plan, resume=partial)
        assert np.array_equal(resumed.values, tensor.values)

    def test_resume_slice_shape_checked(self, graph):
        plan = TrialPlan(q_grid=(0.3, 0.6, 0.9), trials=2)
        with pytest.raises(ValueError, match="resume slice"):
            run_experiment(graph, AlgorithmSpec(kind="ra"), ("auc",), plan,
                           resume={0: np.zeros((2, 2))})

    def test_on_trial_sees_pending_trials_in_order(self, graph, tensor):
        plan = TrialPlan(q_grid=(0.3, 0.6, 0.9), trials=6, master_seed=7)
        seen = []
        run_experiment(graph, AlgorithmSpec(kind="ra"), ("auc", "precision"),
                       plan, resume={0: tensor.values[0]},
                       on_trial=lambda t, out: seen.append(t))
        assert seen == [1, 2, 3, 4, 5]

    def test_failure_carries_trial_and_q_context(self, graph):
        plan = TrialPlan(q_grid=(0.3, 0.6), trials=1)
        spec = AlgorithmSpec(kind="katz", params={"beta": 0.9})
        with pytest.raises(ExperimentError, match=r"trial 0, q=0\.3"):
            run_experiment(graph, spec, ("auc",), plan)

    def test_empty_metrics_rejected(self, graph):
        with pytest.raises(ValueError, match="at least one metric"):
            run_experiment(graph, AlgorithmSpec(kind="ra"), (), PLAN3)

    def test_complete_graph_rejected(self):
        from linkdisc import Graph
        k5 = Graph.from_edges(5, [(u, v) for u in range(5)
                                  for v in range(u + 1, 5)])
        with pytest.raises(ValueError, match="complete"):
            run_experiment(k5, AlgorithmSpec(kind="cn"), ("auc",), PLAN3)


class TestTrialSeeds:
    def test_stage_seeds_distinct_within_trial(self):
        s = seeds_for_trial(PLAN3, 0)
        pool = [s["split"], *s["retain"], *s["tie"]]
        assert len(set(pool)) == len(pool)

    def test_nested_mode_reuses_retention_seed(self):
        plan = TrialPlan(q_grid=(0.3, 0.6, 0.9), trials=4,
                         retention_mode="nested")
        s = seeds_for_trial(plan, 2)
        assert len(set(s["retain"])) == 1
        assert len(set(s["tie"])) == 3

    def test_trials_draw_different_seeds(self):
        a = seeds_for_trial(PLAN3, 0)
        b = seeds_for_trial(PLAN3, 1)
        assert a["split"] != b["split"]
        assert set(a["retain"]).isdisjoint(b["retain"])


class TestGreyCorrelation:
    def test_identical_sequences(self):
        x = [0.2, 0.5, 0.9]
        g = grey_correlation(x, x)
        assert g.xi_ij == g.xi_ji == g.r == 1.0

    def test_hand_pair(self):
        g = grey_correlation([0.2, 0.4], [0.2, 0.5])
        assert g.xi_ij == pytest.approx(2 / 3, abs=1e-12)
        assert g.xi_ji == pytest.approx(2 / 3, abs=1e-12)
        assert g.r == pytest.approx(2 / 3, abs=1e-12)

    def test_rho_zero_keeps_matching_points(self):
        # at rho=0 a zero difference contributes its continuity limit 1
        # and every nonzero difference contributes dmin/diff = 0
        g = grey_correlation([0.2, 0.4], [0.2, 0.5], rho=0.0)
        assert g.r == pytest.approx(0.5, abs=1e-15)

    def test_rho_validated(self):
        for bad in (-0.1, 1.1):
            with pytest.raises(ValueError, match="rho"):
                grey_correlation([0.1, 0.2], [0.1, 0.3], rho=bad)

    def test_sequence_validation(self):
        with pytest.raises(ValueError, match="equal-length"):
            grey_correlation([0.1, 0.2], [0.1])
        with pytest.raises(ValueError, match="equal-length"):
            grey_correlation([], [])
        with pytest.raises(ValueError, match="finite"):
            grey_correlation([0.1, np.nan], [0.1, 0.2])

    def test_matrix_identity_and_symmetry(self):
        x = [0.44, 0.56, 0.67, 0.67, 0.56]
        labels, r = correlation_matrix({"a": x, "b": x, "c": [v + 0.1 for v in x]})
        assert labels == ["a", "b", "c"]
        assert r.shape == (3, 3)
        assert np.allclose(np.diag(r), 1.0)
        assert np.array_equal(r, r.T)
        assert r[0, 1] == 1.0
        assert 0.0 < r[0, 2] <= 1.0

    def test_matrix_needs_two_equal_length_sequences(self):
        with pytest.raises(ValueError, match="two sequences"):
            correlation_matrix({"a": [0.1, 0.2]})
        with pytest.raises(ValueError, match="equal length"):
            correlation_matrix({"a": [0.1, 0.2], "b": [0.1]})


class TestRankMetrics:
    def test_tie_shares_rank_and_gap_follows(self):
        rows = rank_metrics({"g": {"m1": 0.9, "m2": 0.9, "m3": 0.1}})
        assert [(r.metric, r.rank) for r in rows] == [("m1", 1), ("m2", 1), ("m3", 3)]

    def test_single_metric(self):
        rows = rank_metrics({"g": {"auc": 0.5}})
        assert rows[0].rank == 1

    def test_distinct_values_yield_permutation(self):
        rng = np.random.default_rng(20)
        vals = {f"m{i}": float(v) for i, v in enumerate(rng.permutation(8) / 10.0)}
        rows = rank_metrics({"g": vals})
        assert sorted(r.rank for r in rows) == list(range(1, 9))
        assert all(a.d >= b.d for a, b in zip(rows, rows[1:]))
