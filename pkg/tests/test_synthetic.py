import numpy as np
import pytest

from lvreg.geometry import residuals
from lvreg.synthetic import SyntheticSpec, synthesize_pair

from conftest import stable_geodesic


class TestSynthesizePair:
    def test_exact_outlier_count(self):
        spec = SyntheticSpec(n_points=1000, n_correspondences=1000, outlier_rate=0.7, seed=1)
        *_, true_inliers = synthesize_pair(spec)
        assert len(true_inliers) == 300

    def test_labels_exact_for_seed_grid(self):
        for seed in range(10):
            spec = SyntheticSpec(n_points=300, n_correspondences=200, outlier_rate=0.6,
                                 noise_sigma=0.003, seed=seed)
            source, target, corrs, gt, true_inliers = synthesize_pair(spec)
            res = residuals(gt, corrs.source, corrs.target)
            inlier_mask = np.zeros(len(corrs), dtype=bool)
            inlier_mask[true_inliers] = True
            assert np.all(res[inlier_mask] < spec.residual_threshold)
            assert np.all(res[~inlier_mask] >= spec.residual_threshold)
            # outliers carry the full construction margin
            assert np.all(res[~inlier_mask] >= spec.outlier_margin_factor * spec.residual_threshold)

    def test_deterministic_under_seed(self):
        spec = SyntheticSpec(n_points=200, n_correspondences=80, outlier_rate=0.5,
                             noise_sigma=0.002, seed=77)
        a = synthesize_pair(spec)
        b = synthesize_pair(spec)
        assert np.array_equal(a[0].points, b[0].points)
        assert np.array_equal(a[1].points, b[1].points)
        assert np.array_equal(a[2].source, b[2].source)
        assert np.array_equal(a[3].rotation, b[3].rotation)
        assert np.array_equal(a[4], b[4])

    def test_noiseless_residual_bound(self):
        # with a loose labeling threshold the Gaussian tail is intact:
        # virtually every inlier residual stays below 4 * sigma * sqrt(3)
        spec = SyntheticSpec(n_points=10_000, n_correspondences=10_000, outlier_rate=0.0,
                             noise_sigma=0.003, residual_threshold=0.05, seed=3)
        source, target, corrs, gt, _ = synthesize_pair(spec)
        res = residuals(gt, corrs.source, corrs.target)
        bound = 4 * spec.noise_sigma * np.sqrt(3.0)
        assert np.mean(res <= bound) >= 0.999

    def test_requested_transform_magnitudes(self):
        spec = SyntheticSpec(n_points=100, n_correspondences=50, seed=5,
                             rotation_magnitude_deg=25.0, translation_magnitude=0.4)
        source, target, corrs, gt, _ = synthesize_pair(spec)
        assert np.degrees(stable_geodesic(gt.rotation, np.eye(3))) == pytest.approx(25.0, abs=1e-6)
        assert np.linalg.norm(gt.translation) == pytest.approx(0.4, abs=1e-9)

    def test_zero_noise_means_exact_correspondences(self):
        spec = SyntheticSpec(n_points=150, n_correspondences=150, outlier_rate=0.0,
                             noise_sigma=0.0, seed=8)
        source, target, corrs, gt, true_inliers = synthesize_pair(spec)
        assert len(true_inliers) == 150
        assert np.allclose(residuals(gt, corrs.source, corrs.target), 0.0, atol=1e-12)

    def test_surface_models_respect_extent(self):
        for model in ("multi-plane", "random-blobs"):
            spec = SyntheticSpec(n_points=500, n_correspondences=100, seed=2,
                                 surface_model=model, scene_extent=1.0)
            source, *_ = synthesize_pair(spec)
            # loose sanity bound: points concentrate within a few extents
            assert np.percentile(np.abs(source.points), 99) < 2.0

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n_points=10, n_correspondences=20)
        with pytest.raises(ValueError):
            SyntheticSpec(outlier_rate=1.0)
        with pytest.raises(ValueError):
            SyntheticSpec(surface_model="torus")
