import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgcn.graph import (
    GraphBatch,
    SpatialGraph,
    batch,
    build_grid_graph,
    knn_graph,
    relative_positions,
    snap,
    split,
)


def chebyshev_oracle(rows, cols, k):
    """Brute-force neighbour lists of a grid by scanning all pixel pairs."""
    out = []
    for i in range(rows * cols):
        ri, ci = divmod(i, cols)
        out.append([j for j in range(rows * cols)
                    if max(abs(divmod(j, cols)[0] - ri), abs(divmod(j, cols)[1] - ci)) <= k])
    return out


class TestSpatialGraph:
    def test_from_neighbors_roundtrip(self):
        g = SpatialGraph.from_neighbors(np.ones((3, 2)), np.zeros((3, 2)), [[1, 2], [0], [0]])
        assert g.neighbor_lists() == [[1, 2], [0], [0]]
        assert (g.n, g.d, g.t, g.num_edges) == (3, 2, 2, 4)
        assert g.is_symmetric()

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            SpatialGraph.from_neighbors(np.ones((2, 1)), None, [[1], [2]])

    def test_unsorted_or_duplicate_lists(self):
        with pytest.raises(ValueError):
            SpatialGraph.from_neighbors(np.ones((3, 1)), None, [[2, 1], [], []])
        with pytest.raises(ValueError):
            SpatialGraph.from_neighbors(np.ones((3, 1)), None, [[1, 1], [], []])

    def test_undirected_flag_checked(self):
        with pytest.raises(ValueError):
            SpatialGraph.from_neighbors(np.ones((2, 1)), None, [[1], []], undirected=True)

    def test_position_rows_must_match(self):
        with pytest.raises(ValueError):
            SpatialGraph.from_neighbors(np.ones((2, 1)), np.zeros((3, 2)), [[], []])

    def test_positions_are_on_the_lattice(self):
        p = np.array([[0.1, 1.0 / 3.0]])
        g = SpatialGraph.from_neighbors(np.ones((1, 1)), p, [[]])
        assert np.array_equal(g.positions, snap(p))
        assert np.max(np.abs(g.positions - p)) <= 2.0**-43

    def test_relative_positions(self):
        g = SpatialGraph.from_neighbors(np.ones((2, 1)), [[0.0, 0.0], [1.0, 2.0]], [[1], [0]])
        assert np.array_equal(relative_positions(g.positions, g.indptr, g.indices), [[1.0, 2.0], [-1.0, -2.0]])


class TestGridGraph:
    def test_single_pixel(self):
        g = build_grid_graph(np.array([[0.5]]), 1)
        assert g.n == 1 and g.neighbor_lists() == [[0]]

    def test_two_by_two(self):
        g = build_grid_graph(np.zeros((2, 2)), 1)
        assert g.n == 4
        assert all(len(nb) == 4 for nb in g.neighbor_lists())

    def test_center_of_three_by_three(self):
        g = build_grid_graph(np.zeros((3, 3)), 1)
        assert len(g.neighbors(4)) == 9

    def test_empty_image(self):
        with pytest.raises(ValueError):
            build_grid_graph(np.zeros((0, 3)), 1)

    def test_negative_radius(self):
        with pytest.raises(ValueError):
            build_grid_graph(np.zeros((2, 2)), -1)

    def test_positions_row_col(self):
        g = build_grid_graph(np.zeros((2, 3)), 0)
        assert np.array_equal(g.positions, [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]])

    @pytest.mark.parametrize("rows,cols,k", [(4, 5, 1), (5, 3, 2), (6, 6, 0), (3, 7, 3)])
    def test_matches_brute_force(self, rows, cols, k):
        g = build_grid_graph(np.zeros((rows, cols)), k)
        assert g.neighbor_lists() == chebyshev_oracle(rows, cols, k)
        assert g.is_symmetric()

    def test_features_roundtrip(self):
        img = np.random.default_rng(0).random((5, 7))
        g = build_grid_graph(img, 2)
        assert np.array_equal(g.features[:, 0].reshape(5, 7), img)

    def test_interior_count(self):
        k = 2
        g = build_grid_graph(np.zeros((9, 10)), k)
        for i in range(g.n):
            r, c = divmod(i, 10)
            if k <= r < 9 - k and k <= c < 10 - k:
                assert len(g.neighbors(i)) == (2 * k + 1) ** 2


class TestKnn:
    def test_collinear(self):
        g = knn_graph([[0.0], [1.0], [10.0]], np.ones((3, 1)), 1)
        assert g.neighbor_lists() == [[1], [0, 2], [1]]

    def test_pair(self):
        g = knn_graph([[0.0, 0.0], [3.0, 4.0]], np.ones((2, 1)), 1)
        assert g.neighbor_lists() == [[1], [0]]

    def test_equilateral_tie_goes_to_lower_index(self):
        tri = [[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]]
        g = knn_graph(tri, np.ones((3, 1)), 1)
        # node 2 is equidistant from 0 and 1 and picks 0
        assert g.neighbor_lists() == [[1, 2], [0], [0]]
        assert g.num_edges >= 3

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            knn_graph([[0.0], [1.0]], np.ones((2, 1)), 2)
        with pytest.raises(ValueError):
            knn_graph([[0.0], [1.0]], np.ones((2, 1)), 0)

    def test_duplicate_points_allowed(self):
        g = knn_graph([[0.0], [0.0], [5.0]], np.ones((3, 1)), 1)
        assert 1 in g.neighbors(0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 12), st.integers(0, 10**6))
    def test_symmetric_and_degree(self, n, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, n))
        g = knn_graph(rng.normal(size=(n, 3)), np.ones((n, 1)), k)
        assert g.is_symmetric()
        assert all(len(nb) >= k for nb in g.neighbor_lists())
        assert all(i not in nb for i, nb in enumerate(g.neighbor_lists()))


class TestBatch:
    def graphs(self):
        a = SpatialGraph.from_neighbors(np.ones((2, 1)), [[0.0, 0.0], [1.0, 0.0]], [[1], [0]], label=0)
        b = SpatialGraph.from_neighbors(2 * np.ones((3, 1)), np.zeros((3, 2)), [[1], [2], [0]], label=1)
        return a, b

    def test_single_graph(self):
        a, _ = self.graphs()
        bt = batch([a])
        assert np.array_equal(bt.indices, a.indices)
        assert np.array_equal(bt.segment, [0, 0])

    def test_offsets(self):
        a, b = self.graphs()
        bt = batch([a, b])
        assert bt.n == 5
        assert np.array_equal(bt.indices[a.num_edges:], b.indices + 2)
        assert bt.num_edges == a.num_edges + b.num_edges
        assert np.array_equal(bt.segment, [0, 0, 1, 1, 1])
        assert bt.labels == [0, 1]

    def test_no_edge_crosses_graphs(self):
        rng = np.random.default_rng(1)
        gs = [build_grid_graph(rng.random((int(rng.integers(1, 5)), 3)), 1) for _ in range(6)]
        bt = batch(gs)
        seg = bt.segment
        src = np.repeat(np.arange(bt.n), np.diff(bt.indptr))
        assert np.array_equal(seg[src], seg[bt.indices])
        assert np.all(np.diff(seg) >= 0)

    def test_errors(self):
        a, _ = self.graphs()
        with pytest.raises(ValueError):
            batch([])
        wide = SpatialGraph.from_neighbors(np.ones((1, 3)), np.zeros((1, 2)), [[]])
        with pytest.raises(ValueError):
            batch([a, wide])
        deep = SpatialGraph.from_neighbors(np.ones((1, 1)), np.zeros((1, 3)), [[]])
        with pytest.raises(ValueError):
            batch([a, deep])

    def test_split_inverts_batch(self):
        a, b = self.graphs()
        back = split(batch([a, b, a]))
        for orig, got in zip([a, b, a], back):
            assert got.neighbor_lists() == orig.neighbor_lists()
            assert np.array_equal(got.features, orig.features)
            assert np.array_equal(got.positions, orig.positions)
            assert got.label == orig.label

    def test_is_graph_batch(self):
        assert isinstance(batch(list(self.graphs())), GraphBatch)
