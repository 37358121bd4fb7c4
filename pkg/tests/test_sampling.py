import numpy as np
import pytest

from irt_rank.core import ConfigError, DataError
from irt_rank.sampling import (DEFAULT_NOS, SamplingPlan, sample_positions,
                               sample_windows, size_schedule)


class TestSizeSchedule:
    def test_paper_roi_dimensions(self):
        assert size_schedule(118, 118, 4) == list(range(2, 60))

    def test_n_min_from_phase_count(self):
        assert size_schedule(30, 30, 5)[0] == 3      # 2x2 holds only 4 < 5 pixels
        assert size_schedule(30, 30, 4)[0] == 2
        assert size_schedule(30, 30, 10)[0] == 4

    def test_minimal_image(self):
        assert size_schedule(4, 4, 2) == [2]

    def test_too_small_image(self):
        with pytest.raises(DataError):
            size_schedule(3, 3, 2)

    def test_stride_thins_schedule(self):
        sizes = size_schedule(40, 40, 4, stride=3)
        assert sizes == list(range(2, 21, 3))


class TestStaticGrid:
    def test_grid_anchors(self):
        plan = SamplingPlan(strategy="static_grid", sizes=(3,))
        windows = sample_windows(10, 10, 3, plan)
        anchors = {(w.y, w.x) for w in windows}
        assert anchors == {(y, x) for y in (0, 3, 6) for x in (0, 3, 6)}

    def test_grid_disjoint_and_coverage(self):
        plan = SamplingPlan(strategy="static_grid", sizes=(4,))
        windows = sample_windows(18, 13, 4, plan)
        assert len(windows) == (18 // 4) * (13 // 4)
        covered = np.zeros((13, 18), int)
        for w in windows:
            covered[w.y:w.y + w.n, w.x:w.x + w.n] += 1
        assert covered.max() == 1
        assert covered.sum() == len(windows) * 16


class TestRandomSampling:
    def test_full_enumeration_when_few_placements(self):
        plan = SamplingPlan(nos_set=DEFAULT_NOS, seed=5, sizes=(9,))
        windows = sample_windows(10, 10, 9, plan)
        assert len(windows) == 4        # (10-9+1)^2 placements, all used
        assert len({(w.y, w.x) for w in windows}) == 4

    def test_nos_cap_and_reproducibility(self):
        plan = SamplingPlan(nos_set=DEFAULT_NOS, seed=123, sizes=(2,))
        first = sample_windows(118, 118, 2, plan)
        second = sample_windows(118, 118, 2, plan)
        assert len(first) == DEFAULT_NOS
        assert len({(w.y, w.x) for w in first}) == DEFAULT_NOS
        assert [(w.y, w.x) for w in first] == [(w.y, w.x) for w in second]

    def test_count_is_min_of_nos_and_total(self):
        plan = SamplingPlan(nos_set=50, seed=1, sizes=(2,))
        ys, xs = sample_positions(12, 9, 2, plan)
        assert ys.size == 50
        ys, xs = sample_positions(8, 8, 6, plan)
        assert ys.size == 9             # 3*3 < 50

    def test_permutation_and_rejection_paths_distinct_windows(self):
        # total <= 4*nos exercises the permutation branch, larger totals the
        # rejection branch; both must give distinct reproducible positions
        for width, nos in ((30, 300), (118, 439)):
            plan = SamplingPlan(nos_set=nos, seed=9, sizes=(2,))
            ys, xs = sample_positions(width, width, 2, plan)
            assert ys.size == nos
            assert len(set(zip(ys.tolist(), xs.tolist()))) == nos
            ys2, xs2 = sample_positions(width, width, 2, plan)
            assert np.array_equal(ys, ys2) and np.array_equal(xs, xs2)

    def test_windows_inside_image(self):
        plan = SamplingPlan(nos_set=200, seed=2, sizes=(5,))
        for w in sample_windows(17, 11, 5, plan):
            assert 0 <= w.x <= 17 - 5 and 0 <= w.y <= 11 - 5

    def test_seed_changes_sample(self):
        a = sample_positions(50, 50, 3, SamplingPlan(nos_set=100, seed=1, sizes=(3,)))
        b = sample_positions(50, 50, 3, SamplingPlan(nos_set=100, seed=2, sizes=(3,)))
        assert not np.array_equal(a[0], b[0]) or not np.array_equal(a[1], b[1])

    def test_oversized_window_rejected(self):
        plan = SamplingPlan(sizes=(12,))
        with pytest.raises(DataError):
            sample_positions(10, 10, 12, plan)


class TestPlanValidation:
    def test_sizes_strictly_increasing(self):
        with pytest.raises(ConfigError):
            SamplingPlan(sizes=(2, 2, 3))

    def test_nos_positive(self):
        with pytest.raises(ConfigError):
            SamplingPlan(nos_set=0)

    def test_unknown_strategy(self):
        with pytest.raises(ConfigError):
            SamplingPlan(strategy="spiral")
