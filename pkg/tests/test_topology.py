import numpy as np
import pytest
import scipy.linalg

from factories import random_connected_graph
from poscon import topology
from poscon.errors import DimensionMismatch
from poscon.topology import (Graph, SwitchingSchedule, is_connected, lambda2,
                             laplacian, min_algebraic_connectivity,
                             periodic_schedule, sigma_at)

# algebraic connectivity of the two eight-node reference graphs, pinned from
# a dense symmetric eigensolve oracle before the build
LAMBDA2_G1 = 0.5508811680406327
LAMBDA2_G2 = 0.2508824522534782


def ldl_negative_count(S):
    """Inertia oracle independent of the eigensolver route."""
    _, d, _ = scipy.linalg.ldl(S)
    count = 0
    k = 0
    while k < d.shape[0]:
        if k + 1 < d.shape[0] and abs(d[k, k + 1]) > 1e-14:
            # 2x2 block contributes one negative iff its determinant < 0,
            # two negatives iff det > 0 and trace < 0
            det = d[k, k] * d[k + 1, k + 1] - d[k, k + 1] * d[k + 1, k]
            tr = d[k, k] + d[k + 1, k + 1]
            count += 1 if det < 0 else (2 if tr < 0 else 0)
            k += 2
        else:
            if d[k, k] < 0:
                count += 1
            k += 1
    return count


class TestGraph:
    def test_rejects_self_loop(self):
        with pytest.raises(DimensionMismatch):
            Graph(n=3, edges=((1, 1),))

    def test_rejects_out_of_range(self):
        with pytest.raises(DimensionMismatch):
            Graph(n=3, edges=((1, 4),))

    def test_deduplicates_edges(self):
        g = Graph(n=3, edges=((1, 2), (2, 1)))
        assert g.edges == ((1, 2),)


class TestLaplacian:
    def test_two_node(self):
        g = Graph(n=2, edges=((1, 2),))
        np.testing.assert_array_equal(laplacian(g), [[1, -1], [-1, 1]])

    def test_three_node_path(self):
        g = Graph(n=3, edges=((1, 2), (2, 3)))
        np.testing.assert_array_equal(
            laplacian(g), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])

    def test_empty_graph(self):
        np.testing.assert_array_equal(laplacian(Graph(n=3)), np.zeros((3, 3)))

    def test_random_structure(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            g = random_connected_graph(rng, int(rng.integers(2, 11)))
            L = laplacian(g)
            np.testing.assert_array_equal(L, L.T)
            np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=0.0)
            w = np.linalg.eigvalsh(L)
            assert abs(w[0]) <= 1e-9


class TestLambda2:
    def test_two_node(self):
        assert lambda2(Graph(n=2, edges=((1, 2),))) == pytest.approx(2.0)

    def test_three_node_path_char_poly(self):
        # spectrum of the path Laplacian is {0, 1, 3}: det(L - s I) =
        # -s (s^2 - 4 s + 3), roots 0, 1, 3
        assert lambda2(Graph(n=3, edges=((1, 2), (2, 3)))) == pytest.approx(1.0)

    def test_reference_graphs_pinned(self, ref_graphs):
        g1, g2 = ref_graphs
        assert lambda2(g1) == pytest.approx(LAMBDA2_G1, abs=1e-9)
        assert lambda2(g2) == pytest.approx(LAMBDA2_G2, abs=1e-9)
        assert min_algebraic_connectivity(ref_graphs) == pytest.approx(
            LAMBDA2_G2, abs=1e-9)

    def test_reference_graphs_inertia_oracle(self, ref_graphs):
        # L - (lambda2 + eps) I must have exactly two eigenvalues below the
        # shift (0 and lambda2); L - (lambda2 - eps) I exactly one
        for g, lam in zip(ref_graphs, (LAMBDA2_G1, LAMBDA2_G2)):
            L = laplacian(g)
            eps = 1e-6
            assert ldl_negative_count(L - (lam + eps) * np.eye(8)) == 2
            assert ldl_negative_count(L - (lam - eps) * np.eye(8)) == 1

    def test_connectivity_equivalence(self):
        rng = np.random.default_rng(13)
        for _ in range(60):
            n = int(rng.integers(2, 11))
            m = int(rng.integers(0, n * (n - 1) // 2 + 1))
            edges = set()
            while len(edges) < m:
                i, j = rng.integers(1, n + 1, size=2)
                if i != j:
                    edges.add(tuple(sorted((int(i), int(j)))))
            g = Graph(n=n, edges=tuple(edges))
            assert (lambda2(g) > 1e-9) == is_connected(g)


class TestIsConnected:
    def test_reference_tree_graph(self, ref_graphs):
        assert is_connected(ref_graphs[1])

    def test_disjoint_edges(self):
        assert not is_connected(Graph(n=4, edges=((1, 2), (3, 4))))

    def test_single_node(self):
        assert is_connected(Graph(n=1))


class TestSchedule:
    def test_periodic_alternation(self, ref_graphs):
        s = periodic_schedule(ref_graphs, [0, 1], period=10.0, horizon=40.0)
        assert sigma_at(s, 0.0) == 0
        assert sigma_at(s, 9.999) == 0
        assert sigma_at(s, 10.0) == 1
        assert sigma_at(s, 20.0) == 0
        assert sigma_at(s, 39.0) == 1

    def test_single_graph(self, ref_graphs):
        s = topology.single_graph_schedule(ref_graphs[0])
        for t in (0.0, 5.0, 1000.0):
            assert sigma_at(s, t) == 0

    def test_right_continuity_at_switch(self, ref_graphs):
        s = SwitchingSchedule(graphs=ref_graphs, switch_times=(0.0, 3.0),
                              active=(0, 1), tau=1.0)
        assert sigma_at(s, 3.0) == 1

    def test_rejects_dwell_violation(self, ref_graphs):
        with pytest.raises(DimensionMismatch):
            SwitchingSchedule(graphs=ref_graphs, switch_times=(0.0, 0.5),
                              active=(0, 1), tau=1.0)

    def test_periodic_respects_dwell_by_construction(self, ref_graphs):
        s = periodic_schedule(ref_graphs, [0, 1], period=2.5, horizon=30.0)
        gaps = np.diff(s.switch_times)
        assert np.all(gaps >= s.tau - 1e-12)

    def test_intervals_cover_horizon(self, ref_graphs):
        s = periodic_schedule(ref_graphs, [0, 1], period=10.0, horizon=35.0)
        iv = s.intervals(35.0)
        assert iv[0][0] == 0.0
        assert iv[-1][1] == 35.0
        for (a, b, _), (c, _, _) in zip(iv, iv[1:]):
            assert b == c

    def test_negative_time_rejected(self, ref_graphs):
        s = topology.single_graph_schedule(ref_graphs[0])
        with pytest.raises(DimensionMismatch):
            sigma_at(s, -1.0)
