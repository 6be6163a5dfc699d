import numpy as np
import pytest
from scipy.signal import correlate2d

from sgcn.cnn_equiv import choose_u, conv2d_oracle, sgcn_emulate_conv, theorem_params
from sgcn.graph import build_grid_graph, relative_positions


class TestOracle:
    def test_one_by_one(self):
        H = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(conv2d_oracle([[2.5]], H), 2.5 * H)

    def test_identity_tap(self):
        F = np.zeros((3, 3))
        F[1, 1] = 1.0
        H = np.random.default_rng(0).random((4, 5))
        assert np.array_equal(conv2d_oracle(F, H), H)

    def test_single_right_tap(self):
        F = np.zeros((3, 3))
        F[1, 2] = 1.0  # f_{0,1}
        assert np.array_equal(conv2d_oracle(F, [[1.0, 2.0], [3.0, 4.0]]), [[2.0, 0.0], [4.0, 0.0]])

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_agrees_with_scipy(self, k):
        rng = np.random.default_rng(k)
        F = rng.normal(size=(2 * k + 1, 2 * k + 1))
        H = rng.normal(size=(9, 7))
        assert np.allclose(conv2d_oracle(F, H), correlate2d(H, F, mode="same"), rtol=0, atol=1e-12)

    def test_linear_in_both_arguments(self):
        rng = np.random.default_rng(1)
        F1, F2 = rng.normal(size=(2, 3, 3))
        H1, H2 = rng.normal(size=(2, 6, 6))
        assert np.allclose(conv2d_oracle(F1 + 2 * F2, H1), conv2d_oracle(F1, H1) + 2 * conv2d_oracle(F2, H1))
        assert np.allclose(conv2d_oracle(F1, H1 - H2), conv2d_oracle(F1, H1) - conv2d_oracle(F1, H2))

    def test_even_filter_rejected(self):
        with pytest.raises(ValueError):
            conv2d_oracle(np.ones((2, 2)), np.ones((3, 3)))


class TestChooseU:
    @pytest.mark.parametrize("k,lo,hi", [(0, 0, 0), (1, -4, 4), (2, -12, 12)])
    def test_injective(self, k, lo, hi):
        u = choose_u(k)
        assert np.array_equal(u, [1.0, 2 * k + 1.0])
        vals = sorted(a * u[0] + b * u[1] for a in range(-k, k + 1) for b in range(-k, k + 1))
        assert len(set(vals)) == (2 * k + 1) ** 2
        assert (vals[0], vals[-1]) == (lo, hi)

    def test_negative(self):
        with pytest.raises(ValueError):
            choose_u(-1)


class TestTheoremParams:
    def test_single_tap(self):
        p = theorem_params([[3.5]])
        assert np.array_equal(p.offsets, [[0.0, 0.0]])
        assert np.array_equal(p.biases, [1.0])
        assert np.array_equal(p.weights, [3.5])

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_residual(self, k):
        F = np.random.default_rng(k).normal(size=(2 * k + 1, 2 * k + 1))
        assert theorem_params(F).residual(F) <= 1e-10

    def test_linearity(self):
        rng = np.random.default_rng(2)
        F1, F2 = rng.normal(size=(2, 5, 5))
        w = theorem_params(F1 + F2).weights
        assert np.allclose(w, theorem_params(F1).weights + theorem_params(F2).weights, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("k", [1, 2])
    def test_gate_structure(self, k):
        p = theorem_params(np.ones((2 * k + 1, 2 * k + 1)))
        proj = p.offsets @ p.u
        assert np.all(np.diff(proj) < 0)
        pre = proj[None, :] + p.biases[:, None]  # pre[m, i] = u.p_i + b_m
        n = p.n
        for m in range(n):
            assert np.all(pre[m, :m + 1] > 0)
            assert np.all(pre[m, m + 1:] <= 0)

    @pytest.mark.parametrize("k", [1, 2])
    def test_gates_on_grid_nodes(self, k):
        # per node, per offset: filter m opens exactly on offsets p_1..p_m
        p = theorem_params(np.ones((2 * k + 1, 2 * k + 1)))
        g = build_grid_graph(np.zeros((2 * k + 3, 2 * k + 3)), k)
        rel = relative_positions(g.positions, g.indptr, g.indices)
        rank = {tuple(o): i for i, o in enumerate(p.offsets)}
        ranks = np.array([rank[tuple(r)] for r in rel])
        gates = np.maximum(rel @ p.u[:, None] + p.biases[None, :], 0.0)  # (edges, n)
        assert np.array_equal(gates > 0, ranks[:, None] <= np.arange(p.n)[None, :])


class TestEmulation:
    def test_random_small(self):
        rng = np.random.default_rng(3)
        H, F = rng.normal(size=(8, 8)), rng.normal(size=(3, 3))
        assert np.max(np.abs(sgcn_emulate_conv(F, H) - conv2d_oracle(F, H))) <= 1e-9

    def test_zero_filter(self):
        H = np.random.default_rng(4).normal(size=(6, 5))
        assert np.max(np.abs(sgcn_emulate_conv(np.zeros((3, 3)), H))) <= 1e-12

    def test_identity_filter(self):
        F = np.zeros((5, 5))
        F[2, 2] = 1.0
        H = np.random.default_rng(5).normal(size=(6, 7))
        assert np.max(np.abs(sgcn_emulate_conv(F, H) - H)) <= 1e-9

    def test_hundred_trials(self):
        rng = np.random.default_rng(6)
        worst = 0.0
        for _ in range(100):
            k = int(rng.integers(0, 3))
            rows, cols = rng.integers(5, 29, size=2)
            H = rng.uniform(-1, 1, size=(rows, cols))
            F = rng.uniform(-1, 1, size=(2 * k + 1, 2 * k + 1))
            worst = max(worst, np.max(np.abs(sgcn_emulate_conv(F, H) - correlate2d(H, F, mode="same"))))
        assert worst <= 1e-9
