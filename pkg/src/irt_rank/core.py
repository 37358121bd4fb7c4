"""Data model and I/O for image stacks, ROIs, masks and basic preprocessing.

A stack on disk is a directory holding ``header.json`` plus ``data.raw``:
frames concatenated in index order, each frame row-major, 32-bit
little-endian IEEE-754. In memory everything is float64.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

AXIS_KINDS = ("time", "frequency", "coefficient")


class DataError(ValueError):
    """Input data violates a format contract or invariant."""


class ConfigError(ValueError):
    """A configuration value is invalid or inconsistent."""


class NumericError(RuntimeError):
    """A numeric routine cannot produce a reliable result."""


def _frozen_array(a, dtype=np.float64):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle: top-left anchor plus extents."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise DataError(f"rect extents must be >= 1, got {self.w}x{self.h}")
        if self.x0 < 0 or self.y0 < 0:
            raise DataError(f"rect anchor must be non-negative, got ({self.x0}, {self.y0})")

    def inside(self, width, height):
        return self.x0 + self.w <= width and self.y0 + self.h <= height


@dataclass(frozen=True)
class ImageSequence:
    """Ordered stack of equally sized frames plus axis metadata.

    frames:      (n_frames, height, width) float64
    axis_kind:   "time" (s), "frequency" (Hz) or "coefficient" (index)
    axis_values: strictly increasing, one entry per frame
    """

    frames: np.ndarray
    axis_kind: str
    axis_values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frames", _frozen_array(self.frames))
        object.__setattr__(self, "axis_values", _frozen_array(self.axis_values))
        if self.frames.ndim != 3 or self.frames.shape[0] == 0:
            raise DataError(f"frames must be a non-empty (n, h, w) stack, got shape {self.frames.shape}")
        if self.axis_kind not in AXIS_KINDS:
            raise DataError(f"axis_kind must be one of {AXIS_KINDS}, got {self.axis_kind!r}")
        if self.axis_values.shape != (self.frames.shape[0],):
            raise DataError("axis_values length must match the number of frames")
        if not np.all(np.diff(self.axis_values) > 0):
            raise DataError("axis_values must be strictly increasing")

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]


def load_sequence(path):
    """Load a stack directory (header.json + data.raw) into an ImageSequence."""
    path = Path(path)
    header_path = path / "header.json"
    data_path = path / "data.raw"
    if not header_path.is_file():
        raise DataError(f"missing header file: {header_path}")
    if not data_path.is_file():
        raise DataError(f"missing data file: {data_path}")
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{header_path}: invalid JSON ({exc})") from exc

    for key in ("width", "height", "n_frames", "axis_kind", "axis_values", "dtype", "layout"):
        if key not in header:
            raise DataError(f"{header_path}: missing key {key!r}")
    if header["dtype"] != "f32le":
        raise DataError(f"unsupported dtype {header['dtype']!r} (expected 'f32le')")
    if header["layout"] != "frame_major_row_major":
        raise DataError(f"unsupported layout {header['layout']!r}")

    width = int(header["width"])
    height = int(header["height"])
    n_frames = int(header["n_frames"])
    raw = data_path.read_bytes()
    expected = width * height * n_frames * 4
    if len(raw) != expected:
        raise DataError(f"{data_path}: expected {expected} bytes, found {len(raw)}")

    values = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise DataError(f"{data_path}: non-finite values in stack")
    frames = values.reshape(n_frames, height, width)
    return ImageSequence(frames=frames, axis_kind=header["axis_kind"],
                         axis_values=np.asarray(header["axis_values"], dtype=np.float64))


def save_sequence(seq, path):
    """Write an ImageSequence as header.json + data.raw (values narrowed to f32)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    header = {
        "width": seq.width,
        "height": seq.height,
        "n_frames": seq.n_frames,
        "axis_kind": seq.axis_kind,
        "axis_values": [float(v) for v in seq.axis_values],
        "dtype": "f32le",
        "layout": "frame_major_row_major",
    }
    (path / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    (path / "data.raw").write_bytes(seq.frames.astype("<f4").tobytes())


def crop_roi(seq, rect):
    """Crop every frame to `rect`; the axis is unchanged."""
    if not rect.inside(seq.width, seq.height):
        raise DataError(f"rect {rect} exceeds frame bounds {seq.width}x{seq.height}")
    frames = seq.frames[:, rect.y0:rect.y0 + rect.h, rect.x0:rect.x0 + rect.w]
    return ImageSequence(frames=frames, axis_kind=seq.axis_kind, axis_values=seq.axis_values)


def exclude_frames(seq, keep):
    """Keep only the frames in the given inclusive index ranges.

    keep: iterable of (first, last) pairs, e.g. [(2, 9)] keeps frames 2..9.
    """
    mask = np.zeros(seq.n_frames, dtype=bool)
    for first, last in keep:
        if first < 0 or last >= seq.n_frames or first > last:
            raise DataError(f"keep range ({first}, {last}) outside [0, {seq.n_frames - 1}]")
        mask[first:last + 1] = True
    if not mask.any():
        raise DataError("frame exclusion removed every frame")
    return ImageSequence(frames=seq.frames[mask], axis_kind=seq.axis_kind,
                         axis_values=seq.axis_values[mask])


def normalize01_frame(frame):
    """Min-max map a frame onto [0, 1]; a constant frame maps to all zeros."""
    frame = np.asarray(frame, dtype=np.float64)
    if not np.all(np.isfinite(frame)):
        raise DataError("frame contains non-finite values")
    lo = frame.min()
    hi = frame.max()
    if hi == lo:
        return np.zeros_like(frame)
    return (frame - lo) / (hi - lo)


def read_mask_pgm(path):
    """Read an 8-bit binary PGM (P5); nonzero pixels become True."""
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(raw):
            raise DataError(f"{path}: truncated PGM header")
        c = raw[pos:pos + 1]
        if c in b" \t\r\n":
            pos += 1
        elif c == b"#":
            pos = raw.index(b"\n", pos) + 1
        else:
            end = pos
            while end < len(raw) and raw[end:end + 1] not in b" \t\r\n":
                end += 1
            tokens.append(raw[pos:end])
            pos = end
    if tokens[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if not 0 < maxval < 256:
        raise DataError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace after maxval
    pixels = raw[pos:pos + width * height]
    if len(pixels) != width * height:
        raise DataError(f"{path}: expected {width * height} pixel bytes, found {len(pixels)}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width) != 0


def write_mask_pgm(mask, path):
    """Write a boolean mask as an 8-bit binary PGM (True -> 255)."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise DataError(f"mask must be 2D, got shape {mask.shape}")
    height, width = mask.shape
    header = f"P5\n{width} {height}\n255\n".encode()
    Path(path).write_bytes(header + (mask.astype(np.uint8) * 255).tobytes())


def parallel_map(fn, items, workers=1):
    """Map `fn` over `items`, optionally across worker processes.

    Results keep input order; `fn` must be picklable when workers > 1.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
