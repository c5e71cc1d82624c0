import numpy as np
import pytest

from linkdisc import (
    Graph,
    GraphFormatError,
    generate_ba,
    generate_er,
    graph_to_text,
    load_edge_list,
    non_edges,
)


class TestLoadEdgeList:
    def test_two_edge_path(self):
        g = load_edge_list("1 2\n2 3")
        assert g.n == 3
        assert g.edge_count == 2

    def test_undirected_deduplication(self):
        g = load_edge_list("1 2\n2 1")
        assert g.n == 2
        assert g.edge_count == 1

    def test_self_loop_rejected_with_line_number(self):
        with pytest.raises(GraphFormatError, match="line 1"):
            load_edge_list("1 1")

    def test_self_loop_line_number_counts_comments(self):
        with pytest.raises(GraphFormatError, match="line 3"):
            load_edge_list("# comment\n1 2\n4 4")

    def test_non_integer_token(self):
        with pytest.raises(GraphFormatError, match="line 2"):
            load_edge_list("1 2\n2 x")

    def test_wrong_token_count(self):
        with pytest.raises(GraphFormatError, match="line 1"):
            load_edge_list("1 2 3")

    def test_comments_and_blank_lines_skipped(self):
        g = load_edge_list("# header comment\n\n1 2  # trailing\n2 3\n")
        assert g.n == 3 and g.edge_count == 2

    def test_labels_remapped_to_dense_ids(self):
        g = load_edge_list("10 30\n30 20")
        assert g.n == 3
        assert sorted(g.node_label(i) for i in range(3)) == [10, 20, 30]
        # edges expressed in dense ids reference the remapped labels
        for u, v in g.edges:
            assert {g.node_label(u), g.node_label(v)} in ({10, 30}, {20, 30})

    def test_header_declares_isolates(self):
        g = load_edge_list("N 5\n0 1\n1 2", allow_isolates=True)
        assert g.n == 5
        assert g.degrees.tolist() == [1, 2, 1, 0, 0]

    def test_header_isolates_require_flag(self):
        with pytest.raises(GraphFormatError):
            load_edge_list("N 5\n0 1\n1 2")

    def test_header_with_one_based_labels(self):
        g = load_edge_list("N 3\n1 2\n2 3", one_based=True)
        assert g.n == 3 and g.edge_count == 2

    def test_header_label_out_of_range(self):
        with pytest.raises(GraphFormatError):
            load_edge_list("N 3\n0 5")

    def test_largest_component_filter(self):
        g = load_edge_list("0 1\n1 2\n3 4", largest_component=True)
        assert g.n == 3 and g.edge_count == 2

    def test_no_implicit_preprocessing(self):
        g = load_edge_list("0 1\n1 2\n3 4")
        assert g.n == 5 and g.edge_count == 3

    def test_loads_from_file(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("1 2\n2 3\n")
        assert load_edge_list(path).edge_count == 2

    def test_roundtrip_through_text(self):
        g = generate_er(20, 40, seed=3)
        g2 = load_edge_list(graph_to_text(g))
        assert g2.n == g.n
        assert np.array_equal(g2.edges, g.edges)


class TestGraphInvariants:
    def test_from_edges_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self loop"):
            Graph.from_edges(3, [(0, 0)])

    def test_from_edges_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            Graph.from_edges(3, [(0, 5)])

    def test_canonical_edges_sorted_unique(self):
        g = Graph.from_edges(4, [(2, 1), (1, 2), (3, 0)])
        assert g.edges.tolist() == [[0, 3], [1, 2]]

    def test_degree_sum_is_twice_edges(self):
        for seed in range(5):
            g = generate_er(30, 60, seed=seed)
            assert g.degrees.sum() == 2 * g.edge_count

    def test_neighbor_sets_match_edges(self):
        g = Graph.from_edges(5, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)])
        assert g.neighbor_sets[1] == frozenset({0, 2, 3})
        assert g.has_edge(3, 4) and g.has_edge(4, 3)
        assert not g.has_edge(0, 4)


class TestNonEdges:
    def test_complete_graph_has_none(self):
        g = generate_er(5, 10, seed=0)
        assert len(non_edges(g)) == 0

    def test_path_single_non_edge(self):
        g = load_edge_list("1 2\n2 3")
        ne = non_edges(g)
        assert len(ne) == 1
        u, v = ne.pairs[0]
        assert not g.has_edge(u, v)

    def test_count_identity(self):
        g = generate_er(50, 100, seed=1)
        assert len(non_edges(g)) == 1225 - 100

    def test_count_identity_random(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = int(rng.integers(5, 40))
            mmax = n * (n - 1) // 2
            m = int(rng.integers(0, mmax + 1))
            g = generate_er(n, m, seed=int(rng.integers(1 << 30)))
            assert len(non_edges(g)) + g.edge_count == mmax

    def test_canonical_order_stable(self):
        g = generate_er(20, 50, seed=2)
        a = non_edges(g).pairs
        b = non_edges(g).pairs
        assert np.array_equal(a, b)
        # lexicographic and strictly increasing
        keys = a[:, 0] * g.n + a[:, 1]
        assert (np.diff(keys) > 0).all()
        assert (a[:, 0] < a[:, 1]).all()

    def test_role_tag(self):
        g = load_edge_list("1 2\n2 3")
        assert non_edges(g).role == "negatives"


class TestGenerateER:
    def test_edgeless(self):
        g = generate_er(10, 0, seed=0)
        assert g.n == 10 and g.edge_count == 0

    def test_complete_k5(self):
        g = generate_er(5, 10, seed=0)
        assert g.edge_count == 10
        assert len(non_edges(g)) == 0

    def test_exact_count_and_determinism(self):
        a = generate_er(100, 300, seed=42)
        b = generate_er(100, 300, seed=42)
        assert a.edge_count == 300
        assert np.array_equal(a.edges, b.edges)

    def test_seed_changes_edges(self):
        a = generate_er(100, 300, seed=1)
        b = generate_er(100, 300, seed=2)
        assert not np.array_equal(a.edges, b.edges)

    def test_m_out_of_range(self):
        with pytest.raises(ValueError):
            generate_er(5, 11, seed=0)
        with pytest.raises(ValueError):
            generate_er(5, -1, seed=0)

    def test_edges_are_simple_and_in_range(self):
        g = generate_er(40, 200, seed=9)
        assert (g.edges[:, 0] < g.edges[:, 1]).all()
        assert g.edges.min() >= 0 and g.edges.max() < 40
        assert len(np.unique(g.edges, axis=0)) == 200


class TestGenerateBA:
    def test_tree_edge_count(self):
        g = generate_ba(5, 1, seed=0)
        assert g.edge_count == 4
        assert g.largest_component().n == 5

    def test_edge_count_formula(self):
        g = generate_ba(6, 2, seed=0)
        assert g.edge_count == 3 + 3 * 2

    def test_seed_clique_boundary(self):
        g = generate_ba(4, 3, seed=0)
        assert g.edge_count == 6
        assert len(non_edges(g)) == 0

    def test_n_too_small(self):
        with pytest.raises(ValueError):
            generate_ba(3, 3, seed=0)
        with pytest.raises(ValueError):
            generate_ba(5, 0, seed=0)

    def test_determinism_and_formula(self):
        for n, m, seed in [(50, 3, 0), (120, 2, 5), (30, 4, 11)]:
            a = generate_ba(n, m, seed)
            b = generate_ba(n, m, seed)
            assert np.array_equal(a.edges, b.edges)
            assert a.edge_count == m * (m + 1) // 2 + (n - m - 1) * m

    def test_connected(self):
        g = generate_ba(80, 2, seed=3)
        assert g.largest_component().n == 80
