import numpy as np
import pytest
from scipy.stats import spearmanr

from conftest import build_graph

from mlgb.generator import (CalibrationError, CorruptionConfig, GeneratorConfig,
                            LabelSphere, attachment_probability,
                            calibrate_homophily, corrupt_features,
                            generate_graph, generate_multilabel_points,
                            measure_homophily_grid, parameter_grid)
from mlgb.labelsim import label_homophily


class TestStageOnePoints:
    def test_single_sphere_labels_everything_inside_it(self):
        cfg = GeneratorConfig(num_nodes=50, num_labels=1, num_features=3,
                              seed=1)
        points, labels, spheres = generate_multilabel_points(cfg)
        assert labels.shape == (50, 1)
        assert labels.all()  # every point sits in its chosen (only) sphere

    def test_membership_matches_direct_distance_check(self):
        cfg = GeneratorConfig(num_nodes=80, num_labels=6, num_features=4,
                              seed=3)
        points, labels, spheres = generate_multilabel_points(cfg)
        for i in range(cfg.num_nodes):
            for l, sphere in enumerate(spheres):
                inside = np.sqrt(((points[i] - sphere.center) ** 2).sum()) \
                    <= sphere.radius
                assert bool(labels[i, l]) == bool(inside), (i, l)

    def test_points_inside_unit_sphere_with_at_least_one_label(self):
        cfg = GeneratorConfig(num_nodes=200, num_labels=8, num_features=5,
                              seed=9)
        points, labels, spheres = generate_multilabel_points(cfg)
        assert (np.linalg.norm(points, axis=1) <= 1.0 + 1e-12).all()
        assert (labels.sum(axis=1) >= 1).all()
        for sphere in spheres:
            assert np.linalg.norm(sphere.center) + sphere.radius <= 1.0 + 1e-12

    def test_deterministic_per_seed(self):
        cfg = GeneratorConfig(num_nodes=30, num_labels=4, num_features=3,
                              seed=12)
        a = generate_multilabel_points(cfg)
        b = generate_multilabel_points(cfg)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])

    def test_synthetic_label_distribution_targets(self):
        # full-scale stage-1 draw: label-count median ~3 and mean ~3.2
        cfg = GeneratorConfig(num_nodes=3000, num_labels=20, num_features=10,
                              seed=16)
        _, labels, _ = generate_multilabel_points(cfg)
        counts = labels.sum(axis=1)
        assert abs(np.median(counts) - 3) <= 1
        assert abs(counts.mean() - 3.2) <= 0.8

    def test_sphere_containment_validated(self):
        with pytest.raises(ValueError, match="not contained"):
            LabelSphere(center=np.array([0.9, 0.0]), radius=0.5)


class TestAttachmentProbability:
    def test_zero_distance_is_certain(self):
        assert attachment_probability(0.0, 8.8, 0.12) == 1.0

    def test_characteristic_distance_is_half(self):
        for alpha in (0.5, 1.0, 5.0, 8.8):
            for b in (0.01, 0.12, 0.25):
                assert attachment_probability(b, alpha, b) == pytest.approx(0.5)

    def test_hand_value(self):
        # (0.2/0.12)^8.8 = (5/3)^8.8 -> p ~ 0.0110
        p = attachment_probability(0.2, 8.8, 0.12)
        assert p == pytest.approx(1.0 / (1.0 + (5 / 3) ** 8.8))
        assert p == pytest.approx(0.0110, abs=5e-4)

    def test_monotone_in_distance(self):
        d = np.linspace(0, 1, 50)
        p = attachment_probability(d, 4.0, 0.1)
        assert (np.diff(p) <= 1e-15).all()
        assert ((p > 0) & (p <= 1)).all()

    def test_alpha_monotonicity_split_at_b(self):
        b = 0.1
        alphas = np.array([0.5, 1, 2, 4, 8])
        below = np.array([attachment_probability(0.05, a, b) for a in alphas])
        above = np.array([attachment_probability(0.3, a, b) for a in alphas])
        assert (np.diff(below) >= -1e-15).all()
        assert (np.diff(above) <= 1e-15).all()

    def test_alpha_zero_gives_half_everywhere(self):
        assert attachment_probability(0.0, 0.0, 0.1) == pytest.approx(0.5)
        assert attachment_probability(0.7, 0.0, 0.1) == pytest.approx(0.5)


class TestGenerateGraph:
    def test_identical_labels_connect_surely(self):
        labels = np.ones((2, 3), dtype=np.int8)
        points = np.zeros((2, 2))
        g = generate_graph(points, labels, alpha=4.0, b=0.1, seed=0)
        assert g.num_edges == 1

    def test_huge_alpha_connects_only_identical_pairs(self):
        rng = np.random.default_rng(4)
        labels = (rng.random((60, 6)) < 0.4).astype(np.int8)
        # stage-1 points always carry at least one label; unlabeled pairs
        # would connect at d=0 yet count 0 toward homophily
        for i in np.flatnonzero(labels.sum(axis=1) == 0):
            labels[i, 0] = 1
        points = rng.normal(size=(60, 2))
        g = generate_graph(points, labels, alpha=1000.0, b=0.01, seed=2)
        if g.num_edges:
            assert label_homophily(g) == 1.0
        for u, v in g.edges:
            assert np.array_equal(labels[u], labels[v])

    def test_deterministic_and_independent_of_backend(self):
        from mlgb.kernels import get_backend

        rng = np.random.default_rng(8)
        labels = (rng.random((70, 5)) < 0.3).astype(np.int8)
        points = rng.normal(size=(70, 3))
        a = generate_graph(points, labels, 3.0, 0.1, seed=5)
        b = generate_graph(points, labels, 3.0, 0.1, seed=5)
        assert np.array_equal(a.edges, b.edges)
        try:
            cy = get_backend("cython")
        except ImportError:
            pytest.skip("compiled kernel unavailable")
        npk = get_backend("numpy")
        e_cy = cy.sample_pair_edges(labels.astype(np.uint8), 3.0, 0.1, 5)
        e_np = npk.sample_pair_edges(labels.astype(np.uint8), 3.0, 0.1, 5)
        assert np.array_equal(e_cy[0], e_np[0])
        assert np.array_equal(e_cy[1], e_np[1])

    def test_edge_frequency_tracks_probability(self):
        # two nodes with a fixed hamming distance: edge frequency over many
        # seeds approximates the analytic probability
        labels = np.array([[1, 0, 0, 0], [1, 1, 0, 0]], dtype=np.int8)
        d = 1 / 4
        p = attachment_probability(d, 2.0, 0.2)
        hits = sum(generate_graph(np.zeros((2, 1)), labels, 2.0, 0.2, s).num_edges
                   for s in range(2000))
        assert hits / 2000 == pytest.approx(p, abs=0.03)


@pytest.fixture(scope="module")
def stage1_calibration():
    cfg = GeneratorConfig(num_nodes=400, num_labels=12, num_features=8,
                          seed=16)
    points, labels, _ = generate_multilabel_points(cfg)
    return points, labels


@pytest.fixture(scope="module")
def stage1_small():
    cfg = GeneratorConfig(num_nodes=300, num_labels=10, num_features=6,
                          seed=16)
    points, labels, _ = generate_multilabel_points(cfg)
    return points, labels


class TestCalibration:

    def test_grid_shape(self):
        grid = parameter_grid()
        assert len(grid) == 20
        alphas = [a for a, _ in grid]
        bs = [b for _, b in grid]
        assert alphas == sorted(alphas)
        assert bs == sorted(bs, reverse=True)
        assert min(bs) == pytest.approx(0.0125)
        assert max(bs) == pytest.approx(0.25)

    def test_target_one_gives_near_pure_homophily(self, stage1_calibration):
        points, labels = stage1_calibration
        alpha, b, g = calibrate_homophily(points, labels, 1.0, seed=3)
        assert g.num_edges >= 1
        assert label_homophily(g) >= 0.95

    def test_mid_target_within_tolerance(self, stage1_calibration):
        points, labels = stage1_calibration
        for target in (0.3, 0.5):
            _, _, g = calibrate_homophily(points, labels, target, seed=3)
            assert abs(label_homophily(g) - target) <= 0.05

    def test_low_target_denser_than_high_target(self, stage1_calibration):
        points, labels = stage1_calibration
        _, _, low = calibrate_homophily(points, labels, 0.25, seed=3)
        _, _, high = calibrate_homophily(points, labels, 0.8, seed=3)
        assert low.num_edges > high.num_edges

    def test_unreachable_target_reports_range(self, stage1_calibration):
        points, labels = stage1_calibration
        with pytest.raises(CalibrationError, match="achievable range"):
            calibrate_homophily(points, labels, 1e-6, seed=3)

    def test_grid_reuse_matches_fresh_run(self, stage1_calibration):
        points, labels = stage1_calibration
        grid = measure_homophily_grid(points, labels, seed=3)
        a = calibrate_homophily(points, labels, 0.5, seed=3,
                                grid_measurements=grid)
        b = calibrate_homophily(points, labels, 0.5, seed=3)
        assert a[0] == b[0] and a[1] == b[1]
        assert np.array_equal(a[2].edges, b[2].edges)


class TestCorruptFeatures:
    def test_full_ratio_keeps_all_columns(self):
        g = build_graph(edges=[(0, 1)], labels=[[1], [1]],
                        features=np.arange(20.0).reshape(2, 10))
        out = corrupt_features(g, CorruptionConfig(original_ratio=1.0), seed=0)
        assert out.num_features == 20
        assert np.array_equal(out.features[:, :10], g.features)
        assert np.array_equal(out.edges, g.edges)
        assert np.array_equal(out.labels, g.labels)

    def test_zero_ratio_is_pure_noise(self):
        g = build_graph(edges=[(0, 1)], labels=[[1], [1]],
                        features=np.arange(20.0).reshape(2, 10))
        out = corrupt_features(g, CorruptionConfig(original_ratio=0.0), seed=0)
        assert out.num_features == 10
        assert not np.array_equal(out.features[:, :10], g.features)
        assert np.array_equal(out.labels, g.labels)

    def test_half_ratio_arithmetic(self):
        g = build_graph(edges=[(0, 1)], labels=[[1], [1]],
                        features=np.arange(20.0).reshape(2, 10))
        out = corrupt_features(g, CorruptionConfig(original_ratio=0.5), seed=1)
        assert out.num_features == 15
        assert np.array_equal(out.features[:, :5], g.features[:, :5])

    def test_noise_is_seeded(self):
        g = build_graph(edges=[(0, 1)], labels=[[1], [1]],
                        features=np.zeros((2, 4)))
        a = corrupt_features(g, CorruptionConfig(original_ratio=0.5), seed=3)
        b = corrupt_features(g, CorruptionConfig(original_ratio=0.5), seed=3)
        c = corrupt_features(g, CorruptionConfig(original_ratio=0.5), seed=4)
        assert np.array_equal(a.features, b.features)
        assert not np.array_equal(a.features, c.features)


class TestHomophilyResponse:
    """Directional response of measured homophily to the two parameters."""

    def test_alpha_increases_homophily(self, stage1_small):
        points, labels = stage1_small
        alphas = np.arange(0, 10.01, 0.5)
        hs = []
        for alpha in alphas:
            g = generate_graph(points, labels, alpha, 0.05, seed=1)
            hs.append(label_homophily(g) if g.num_edges else 0.0)
        rho = spearmanr(alphas, hs).statistic
        assert rho > 0.9

    def test_b_decreases_homophily(self, stage1_small):
        points, labels = stage1_small
        bs = np.arange(0.0125, 0.2501, 0.0125)
        hs = []
        for b in bs:
            g = generate_graph(points, labels, 5.0, b, seed=1)
            hs.append(label_homophily(g) if g.num_edges else 0.0)
        rho = spearmanr(bs, hs).statistic
        assert rho < -0.9
