import numpy as np
import pytest

from irt_rank.core import ConfigError
from irt_rank.segmentation import kmeans1d, segment


def exhaustive_two_class_split(values):
    """Best single threshold minimizing within-class variance (brute force)."""
    s = np.sort(values.ravel())
    best_cost, best_split = None, None
    for i in range(1, s.size):
        left, right = s[:i], s[i:]
        cost = left.size * np.var(left) + right.size * np.var(right)
        if best_cost is None or cost < best_cost:
            best_cost, best_split = cost, 0.5 * (s[i - 1] + s[i])
    return best_split


class TestSegment:
    def test_two_valued_order(self):
        frame = np.array([[1.0, 5.0], [5.0, 1.0]])
        seg = segment(frame, 2)
        assert np.array_equal(seg.labels, [[0, 1], [1, 0]])

    def test_constant_frame(self):
        seg = segment(np.full((4, 4), 3.0), 2)
        assert np.all(seg.labels == 0)
        assert seg.phi == 2

    def test_phi_below_two_rejected(self):
        with pytest.raises(ConfigError):
            segment(np.zeros((3, 3)), 1)

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            segment(np.zeros((3, 3)), 2, method="otsu")

    def test_kmeans_matches_exhaustive_split(self):
        rng = np.random.default_rng(11)
        values = np.concatenate([rng.normal(0.0, 0.5, 500),
                                 rng.normal(10.0, 0.5, 500)])
        frame = values.reshape(25, 40)
        seg = segment(frame, 2)
        oracle = exhaustive_two_class_split(frame)
        assert abs(seg.thresholds[0] - oracle) < 1.0      # same inter-mode gap
        assert np.array_equal(seg.labels.ravel() == 1, frame.ravel() > oracle)

    def test_affine_invariant_labels(self):
        rng = np.random.default_rng(12)
        frame = rng.integers(0, 1024, size=(16, 16)).astype(np.float64) / 256.0
        for method in ("kmeans1d", "equal_width"):
            base = segment(frame, 4, method=method)
            moved = segment(2.0 * frame + 0.5, 4, method=method)
            assert np.array_equal(base.labels, moved.labels), method

    def test_fewer_distinct_values_than_phases(self):
        frame = np.tile(np.array([[0.0, 1.0]]), (4, 2))
        seg = segment(frame, 4)
        assert set(np.unique(seg.labels)) == {0, 1}
        assert seg.labels.max() < seg.phi

    def test_equal_width_ties_go_lower(self):
        # cuts at 0.25/0.50/0.75 after normalization; 0.5 exactly -> phase 1
        frame = np.array([[0.0, 0.5, 1.0, 0.25]])
        seg = segment(frame, 4, method="equal_width")
        assert seg.labels.tolist() == [[0, 1, 3, 0]]

    def test_thresholds_in_frame_units(self):
        frame = np.array([[10.0, 20.0], [30.0, 40.0]])
        seg = segment(frame, 2, method="equal_width")
        assert 10.0 < seg.thresholds[0] < 40.0


class TestKmeans1d:
    def test_objective_never_increases(self):
        rng = np.random.default_rng(13)
        values = np.concatenate([rng.normal(m, 0.3, 200) for m in (0, 3, 7, 12)])
        trace = []
        kmeans1d(values, 4, objective_trace=trace)
        assert len(trace) >= 2
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))

    def test_deterministic(self):
        rng = np.random.default_rng(14)
        values = rng.normal(size=1000)
        c1, t1 = kmeans1d(values, 3)
        c2, t2 = kmeans1d(values, 3)
        assert np.array_equal(c1, c2) and np.array_equal(t1, t2)

    def test_centers_sorted(self):
        rng = np.random.default_rng(15)
        centers, thresholds = kmeans1d(rng.normal(size=500), 5)
        assert np.all(np.diff(centers) > 0)
        assert np.all(np.diff(thresholds) > 0)

    def test_heavily_tied_data(self):
        values = np.array([0.0] * 90 + [1.0] * 10)
        centers, _ = kmeans1d(values, 2)
        assert centers[0] == pytest.approx(0.0)
        assert centers[1] == pytest.approx(1.0)
