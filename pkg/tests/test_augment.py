import numpy as np
import pytest

from sgcn.augment import (
    AugmentPolicy,
    augment_batch,
    augment_graph,
    check_rotation,
    pairwise_distances,
    read_conformer_pool,
    rotate,
    sample_rotation,
    test_time_predict as tta_predict,
    translate,
    write_conformer_pool,
)
from sgcn.graph import batch, knn_graph
from sgcn.layers import SgcnModel


def molecule(rng, n=9):
    return knn_graph(rng.normal(size=(n, 3)) * 2.0, rng.normal(size=(n, 4)), 3)


def rot2(theta):
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


class TestRotate:
    def test_identity_angle(self):
        g = knn_graph(np.random.default_rng(0).normal(size=(5, 2)), np.ones((5, 1)), 2)
        assert np.array_equal(rotate(g, rot2(0.0)).positions, g.positions)

    def test_quarter_turn(self):
        g = knn_graph([[1.0, 0.0], [3.0, 0.0]], np.ones((2, 1)), 1)
        out = rotate(g, rot2(np.pi / 2)).positions
        assert np.allclose(out[0], [0.0, 1.0], atol=1e-15)

    def test_isometry(self):
        rng = np.random.default_rng(1)
        g = molecule(rng)
        for _ in range(20):
            moved = rotate(g, sample_rotation(3, rng))
            assert np.max(np.abs(pairwise_distances(moved.positions) - pairwise_distances(g.positions))) <= 1e-12
            assert moved.neighbor_lists() == g.neighbor_lists()
            assert np.array_equal(moved.features, g.features)

    def test_rejects_bad_matrices(self):
        g = molecule(np.random.default_rng(2))
        with pytest.raises(ValueError):
            rotate(g, np.diag([1.0, 1.0, -1.0]))
        with pytest.raises(ValueError):
            rotate(g, 1.01 * np.eye(3))
        with pytest.raises(ValueError):
            rotate(g, np.eye(2))

    def test_check_rotation_shape(self):
        with pytest.raises(ValueError):
            check_rotation(np.ones((2, 3)))


class TestSampleRotation:
    @pytest.mark.parametrize("dim", [2, 3])
    def test_proper_rotation(self, dim):
        rng = np.random.default_rng(3)
        for _ in range(50):
            R = sample_rotation(dim, rng)
            assert np.max(np.abs(R.T @ R - np.eye(dim))) <= 1e-10
            assert abs(np.linalg.det(R) - 1.0) <= 1e-10

    def test_seeded_reproducible(self):
        a = sample_rotation(2, np.random.default_rng(7))
        b = sample_rotation(2, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_uniformity(self):
        rng = np.random.default_rng(4)
        e1 = np.array([1.0, 0.0, 0.0])
        mean = np.mean([sample_rotation(3, rng) @ e1 for _ in range(10_000)], axis=0)
        assert np.linalg.norm(mean) <= 0.05

    def test_bad_dim(self):
        with pytest.raises(ValueError):
            sample_rotation(4, np.random.default_rng(0))


class TestPolicy:
    def test_validation(self):
        with pytest.raises(ValueError):
            AugmentPolicy(rotation_dim=4)
        with pytest.raises(ValueError):
            AugmentPolicy(translate_sigma=-1.0)
        with pytest.raises(ValueError):
            AugmentPolicy(conformer_pool_size=-1)
        with pytest.raises(ValueError):
            AugmentPolicy(test_time_samples=0)

    def test_identity(self):
        assert AugmentPolicy().is_identity
        assert not AugmentPolicy(rotate=True).is_identity


class TestAugmentBatch:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.graphs = [molecule(rng, n) for n in (6, 8, 7)]
        self.model = SgcnModel.init(rng, 3, 4, [8, 8], [2, 2], 2)

    def test_all_off_is_identity(self):
        b = batch(self.graphs)
        assert augment_batch(b, AugmentPolicy(), rng=np.random.default_rng(0)) is b

    def test_translation_only_is_exact(self):
        b = batch(self.graphs)
        moved = augment_batch(b, AugmentPolicy(translate_sigma=10.0), rng=np.random.default_rng(1))
        assert not np.array_equal(moved.positions, b.positions)
        assert np.array_equal(self.model.predict(moved), self.model.predict(b))

    def test_translate_keeps_distances(self):
        g = self.graphs[0]
        moved = translate(g, [1.5, -2.25, 3.0])
        assert np.max(np.abs(pairwise_distances(moved.positions) - pairwise_distances(g.positions))) <= 1e-10

    def test_single_conformer_no_rotation_fixed(self):
        rng = np.random.default_rng(2)
        pools = [[g.positions + 1.0] for g in self.graphs]
        policy = AugmentPolicy(conformer_pool_size=1)
        b = batch(self.graphs)
        first = augment_batch(b, policy, pools, rng)
        for _ in range(3):
            assert np.array_equal(augment_batch(b, policy, pools, rng).positions, first.positions)

    def test_conformer_choice_reproducible(self):
        pools = [[g.positions + float(c) for c in range(5)] for g in self.graphs]
        policy = AugmentPolicy(conformer_pool_size=5)
        b = batch(self.graphs)
        picks = []
        for seed in (11, 11):
            out = augment_batch(b, policy, pools, np.random.default_rng(seed))
            picks.append(out.positions - b.positions)
        assert np.array_equal(picks[0], picks[1])

    def test_conformers_drawn_from_first_c(self):
        g = self.graphs[0]
        pool = [g.positions + float(c) for c in range(6)]
        rng = np.random.default_rng(3)
        seen = {int(round((augment_graph(g, AugmentPolicy(conformer_pool_size=3), pool, rng).positions
                           - g.positions)[0, 0])) for _ in range(200)}
        assert seen == {0, 1, 2}

    def test_topology_mismatch(self):
        pools = [[np.zeros((2, 3))] for _ in self.graphs]
        with pytest.raises(ValueError):
            augment_batch(batch(self.graphs), AugmentPolicy(conformer_pool_size=1), pools,
                          np.random.default_rng(0))

    def test_pool_count_mismatch(self):
        with pytest.raises(ValueError):
            augment_batch(batch(self.graphs), AugmentPolicy(rotate=True), [None], np.random.default_rng(0))

    def test_rotation_changes_outputs(self):
        b = batch(self.graphs)
        out = augment_batch(b, AugmentPolicy(rotate=True), rng=np.random.default_rng(4))
        assert not np.allclose(self.model.predict(out), self.model.predict(b))


class TestTestTimePredict:
    def setup_method(self):
        rng = np.random.default_rng(6)
        self.g = molecule(rng)
        self.model = SgcnModel.init(rng, 3, 4, [8], [2], 3)

    def test_plain(self):
        out = tta_predict(self.model, self.g, AugmentPolicy(), 1, rng=np.random.default_rng(0))
        assert np.array_equal(out, self.model.predict(batch([self.g]))[0])

    def test_translation_mean_exact(self):
        out = tta_predict(self.model, self.g, AugmentPolicy(translate_sigma=3.0), 8, rng=np.random.default_rng(0))
        assert np.array_equal(out, self.model.predict(batch([self.g]))[0])

    def test_is_mean_of_samples(self):
        policy = AugmentPolicy(rotate=True)
        out = tta_predict(self.model, self.g, policy, 4, rng=np.random.default_rng(9))
        rng = np.random.default_rng(9)
        copies = [augment_graph(self.g, policy, None, rng) for _ in range(4)]
        singles = self.model.predict(batch(copies))
        assert np.allclose(out, singles.mean(axis=0), rtol=0, atol=1e-12)
        assert np.allclose(out, singles[::-1].mean(axis=0), rtol=0, atol=1e-12)

    def test_samples_positive(self):
        with pytest.raises(ValueError):
            tta_predict(self.model, self.g, AugmentPolicy(), 0)


class TestConformerFile:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(7)
        pools = {"a": [rng.normal(size=(3, 3)) for _ in range(2)], "b": [rng.normal(size=(1, 3))]}
        path = tmp_path / "conf.txt"
        write_conformer_pool(path, pools)
        assert path.read_text().splitlines()[0] == "a 3 2"
        back = read_conformer_pool(path)
        assert list(back) == ["a", "b"]
        for key in pools:
            for x, y in zip(pools[key], back[key]):
                assert np.array_equal(x, y)

    def test_truncated(self, tmp_path):
        path = tmp_path / "conf.txt"
        path.write_text("a 3 1\n0 0 0\n1 1 1\n")
        with pytest.raises(ValueError):
            read_conformer_pool(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "conf.txt"
        path.write_text("a 3\n")
        with pytest.raises(ValueError):
            read_conformer_pool(path)
