import numpy as np
import pytest

from irt_rank.core import (DataError, ImageSequence, Rect, crop_roi,
                           exclude_frames, load_sequence, normalize01_frame,
                           read_mask_pgm, save_sequence, write_mask_pgm)


def make_seq(frames, axis=None, kind="time"):
    frames = np.asarray(frames, dtype=np.float64)
    if axis is None:
        axis = np.arange(frames.shape[0], dtype=np.float64)
    return ImageSequence(frames=frames, axis_kind=kind, axis_values=np.asarray(axis))


class TestStackIO:
    def test_round_trip_identity(self, tmp_path):
        values = np.array([[[1.0, -2.5], [3.25, 0.0]],
                           [[4.0, 5.5], [-6.75, 7.0]],
                           [[0.125, 9.0], [10.0, 11.5]]], dtype=np.float32)
        seq = make_seq(values.astype(np.float64), axis=[0.0, 0.1, 0.2])
        save_sequence(seq, tmp_path / "stack")
        back = load_sequence(tmp_path / "stack")
        assert np.array_equal(back.frames, seq.frames)
        assert np.array_equal(back.axis_values, seq.axis_values)
        assert back.axis_kind == "time"

    def test_double_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        seq = make_seq(rng.normal(size=(4, 5, 6)).astype(np.float32))
        save_sequence(seq, tmp_path / "a")
        first = load_sequence(tmp_path / "a")
        save_sequence(first, tmp_path / "b")
        assert (tmp_path / "a" / "data.raw").read_bytes() == \
               (tmp_path / "b" / "data.raw").read_bytes()

    def test_truncated_raw_rejected(self, tmp_path):
        seq = make_seq(np.zeros((3, 2, 2)), axis=[0.0, 0.1, 0.2])
        save_sequence(seq, tmp_path / "stack")
        raw = (tmp_path / "stack" / "data.raw").read_bytes()
        (tmp_path / "stack" / "data.raw").write_bytes(raw[:-1])
        with pytest.raises(DataError, match="bytes"):
            load_sequence(tmp_path / "stack")

    def test_non_monotone_axis_rejected(self, tmp_path):
        seq = make_seq(np.zeros((2, 2, 2)), axis=[0.0, 0.1])
        save_sequence(seq, tmp_path / "stack")
        header = (tmp_path / "stack" / "header.json").read_text()
        (tmp_path / "stack" / "header.json").write_text(
            header.replace("0.1", "0.0"))
        with pytest.raises(DataError, match="increasing"):
            load_sequence(tmp_path / "stack")

    def test_missing_files(self, tmp_path):
        with pytest.raises(DataError, match="missing"):
            load_sequence(tmp_path / "nowhere")


class TestCropRoi:
    def test_full_frame_identity(self):
        seq = make_seq(np.arange(2 * 4 * 4, dtype=float).reshape(2, 4, 4))
        out = crop_roi(seq, Rect(0, 0, 4, 4))
        assert np.array_equal(out.frames, seq.frames)

    def test_index_arithmetic(self):
        frame = np.arange(16, dtype=float).reshape(4, 4)
        seq = make_seq(frame[None])
        out = crop_roi(seq, Rect(1, 1, 2, 2))
        assert np.array_equal(out.frames[0], frame[1:3, 1:3])

    def test_out_of_bounds(self):
        seq = make_seq(np.zeros((1, 4, 4)))
        with pytest.raises(DataError, match="bounds"):
            crop_roi(seq, Rect(3, 3, 2, 2))

    def test_nested_crops_compose(self):
        rng = np.random.default_rng(1)
        seq = make_seq(rng.normal(size=(2, 10, 12)))
        a = Rect(2, 1, 8, 7)
        b = Rect(1, 2, 4, 3)
        nested = crop_roi(crop_roi(seq, a), b)
        composed = crop_roi(seq, Rect(a.x0 + b.x0, a.y0 + b.y0, b.w, b.h))
        assert np.array_equal(nested.frames, composed.frames)


class TestExcludeFrames:
    def test_keep_all_identity(self):
        seq = make_seq(np.random.default_rng(2).normal(size=(5, 2, 2)))
        out = exclude_frames(seq, [(0, 4)])
        assert np.array_equal(out.frames, seq.frames)

    def test_keep_range(self):
        seq = make_seq(np.arange(10, dtype=float)[:, None, None] * np.ones((10, 2, 2)))
        out = exclude_frames(seq, [(2, 9)])
        assert out.n_frames == 8
        assert out.axis_values[0] == seq.axis_values[2]

    def test_empty_result(self):
        seq = make_seq(np.zeros((3, 2, 2)))
        with pytest.raises(DataError, match="range"):
            exclude_frames(seq, [(5, 6)])

    def test_disjoint_ranges(self):
        seq = make_seq(np.zeros((10, 2, 2)))
        out = exclude_frames(seq, [(0, 1), (8, 9)])
        assert out.n_frames == 4


class TestNormalize01:
    def test_affine_map(self):
        out = normalize01_frame(np.array([[2.0, 4.0, 6.0]]))
        assert np.array_equal(out, [[0.0, 0.5, 1.0]])

    def test_constant_maps_to_zeros(self):
        assert np.array_equal(normalize01_frame(np.full((3, 3), 7.0)), np.zeros((3, 3)))

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        frame = rng.normal(size=(6, 6))
        once = normalize01_frame(frame)
        assert np.array_equal(normalize01_frame(once), once)

    def test_positive_affine_invariance(self):
        # binary-exact data and transform parameters make this bit-exact
        rng = np.random.default_rng(4)
        frame = rng.integers(0, 512, size=(8, 8)).astype(np.float64) / 256.0
        assert np.array_equal(normalize01_frame(frame),
                              normalize01_frame(3.0 * frame + 0.5))

    def test_non_finite_rejected(self):
        with pytest.raises(DataError, match="finite"):
            normalize01_frame(np.array([[1.0, np.nan]]))


class TestPgmMasks:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        mask = rng.integers(0, 2, size=(7, 9)).astype(bool)
        write_mask_pgm(mask, tmp_path / "m.pgm")
        assert np.array_equal(read_mask_pgm(tmp_path / "m.pgm"), mask)

    def test_nonzero_is_true(self, tmp_path):
        path = tmp_path / "gray.pgm"
        path.write_bytes(b"P5\n3 1\n255\n" + bytes([0, 1, 200]))
        assert np.array_equal(read_mask_pgm(path), [[False, True, True]])

    def test_comment_in_header(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 1\n255\n" + bytes([255, 0]))
        assert np.array_equal(read_mask_pgm(path), [[True, False]])


class TestSequenceInvariants:
    def test_axis_strictly_increasing(self):
        with pytest.raises(DataError, match="increasing"):
            make_seq(np.zeros((2, 2, 2)), axis=[0.1, 0.1])

    def test_axis_length_match(self):
        with pytest.raises(DataError, match="length"):
            make_seq(np.zeros((2, 2, 2)), axis=[0.0, 0.1, 0.2])

    def test_bad_axis_kind(self):
        with pytest.raises(DataError, match="axis_kind"):
            make_seq(np.zeros((1, 2, 2)), kind="wavelength")

    def test_frames_immutable(self):
        seq = make_seq(np.zeros((1, 2, 2)))
        with pytest.raises(ValueError):
            seq.frames[0, 0, 0] = 1.0
