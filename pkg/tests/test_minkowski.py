import math

import numpy as np
import pytest

from irt_rank.core import ConfigError
from irt_rank.minkowski import (build_phase_tables, functionals,
                                functionals_window, window_functionals_batch)
from irt_rank.sampling import Window
from irt_rank.segmentation import SegmentedImage

from oracles import minkowski_triple


def as_triple(t):
    return (t.m0, t.m1, t.m2)


class TestFunctionals:
    def test_single_pixel(self):
        mask = np.zeros((3, 3), bool)
        mask[1, 1] = True
        assert as_triple(functionals(mask)) == (1, 4, 1)

    def test_full_square(self):
        assert as_triple(functionals(np.ones((4, 4), bool))) == (16, 16, 1)

    def test_ring_and_isolated(self):
        ring = np.ones((3, 3), bool)
        ring[1, 1] = False
        assert as_triple(functionals(ring)) == (8, 16, 0)
        two = np.zeros((4, 4), bool)
        two[0, 0] = two[2, 2] = True
        assert functionals(two).m2 == 2

    def test_empty_foreground(self):
        assert as_triple(functionals(np.zeros((3, 3), bool))) == (0, 0, 0)

    def test_diagonal_connectivity(self):
        diag = np.eye(2, dtype=bool)
        assert functionals(diag, connectivity=8).m2 == 1
        assert functionals(diag, connectivity=4).m2 == 2

    def test_paper_normalization_scales(self):
        mask = np.ones((3, 3), bool)
        raw = functionals(mask)
        paper = functionals(mask, normalization="paper")
        assert paper.m0 == raw.m0
        assert paper.m1 == pytest.approx(raw.m1 / (2 * math.pi))
        assert paper.m2 == pytest.approx(raw.m2 / math.pi)

    def test_unknown_normalization(self):
        with pytest.raises(ConfigError):
            functionals(np.ones((2, 2), bool), normalization="other")


class TestOracleEquivalence:
    def test_exhaustive_3x3(self):
        for code in range(512):
            mask = np.array([(code >> k) & 1 for k in range(9)],
                            dtype=bool).reshape(3, 3)
            for conn in (8, 4):
                got = as_triple(functionals(mask, connectivity=conn))
                assert got == minkowski_triple(mask, conn), (code, conn)

    def test_random_8x8(self):
        rng = np.random.default_rng(1234)
        for _ in range(300):
            mask = rng.random((8, 8)) < rng.uniform(0.2, 0.8)
            assert as_triple(functionals(mask)) == minkowski_triple(mask, 8)

    def test_translation_invariance(self):
        rng = np.random.default_rng(7)
        mask = rng.random((5, 5)) < 0.5
        padded = np.zeros((9, 9), bool)
        padded[2:7, 3:8] = mask
        assert as_triple(functionals(mask)) == as_triple(functionals(padded))

    def test_additivity_disjoint_components(self):
        a = np.zeros((10, 10), bool)
        a[1:3, 1:4] = True
        b = np.zeros((10, 10), bool)
        b[6:9, 5:9] = True
        b[7, 6] = False
        both = a | b
        fa, fb, fab = functionals(a), functionals(b), functionals(both)
        assert fab.m0 == fa.m0 + fb.m0
        assert fab.m2 == fa.m2 + fb.m2
        assert fab.m1 == fa.m1 + fb.m1   # holds for non-adjacent components


class TestFunctionalsWindow:
    def make_segmented(self, labels, phi):
        return SegmentedImage(labels=np.asarray(labels, dtype=np.int32), phi=phi,
                              thresholds=np.linspace(0.1, 0.9, phi - 1))

    def test_uniform_window(self):
        seg = self.make_segmented(np.ones((8, 8), int), 2)
        out = functionals_window(seg, Window(x=1, y=2, n=4), phase=1)
        assert as_triple(out) == (16, 16, 1)

    def test_absent_phase(self):
        seg = self.make_segmented(np.zeros((6, 6), int), 3)
        out = functionals_window(seg, Window(x=0, y=0, n=3), phase=2)
        assert as_triple(out) == (0, 0, 0)

    def test_window_out_of_bounds(self):
        seg = self.make_segmented(np.zeros((4, 4), int), 2)
        with pytest.raises(Exception, match="bounds"):
            functionals_window(seg, Window(x=2, y=2, n=3), phase=0)

    def test_matches_extracted_submask(self):
        rng = np.random.default_rng(42)
        labels = rng.integers(0, 3, (6, 6))
        seg = self.make_segmented(labels, 3)
        for _ in range(20):
            n = int(rng.integers(1, 7))
            x = int(rng.integers(0, 7 - n))
            y = int(rng.integers(0, 7 - n))
            for phase in range(3):
                sub = labels[y:y + n, x:x + n] == phase
                got = functionals_window(seg, Window(x=x, y=y, n=n), phase)
                assert as_triple(got) == as_triple(functionals(sub))


class TestBatchKernel:
    def test_matches_single_window_path(self):
        rng = np.random.default_rng(3)
        for conn in (8, 4):
            labels = rng.integers(0, 4, (12, 15))
            tables = build_phase_tables(labels, 4, connectivity=conn)
            for n in (1, 2, 3, 5, 7):
                ys = np.arange(0, 12 - n + 1, 2)
                xs = np.arange(0, 15 - n + 1, 3)[:ys.size]
                ys = ys[:xs.size]
                for phase in range(4):
                    m0, m1, m2 = window_functionals_batch(tables[phase], ys, xs, n)
                    for i, (y, x) in enumerate(zip(ys, xs)):
                        sub = labels[y:y + n, x:x + n] == phase
                        expect = functionals(sub, connectivity=conn)
                        assert (m0[i], m1[i], m2[i]) == as_triple(expect)
