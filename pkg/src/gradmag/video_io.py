"""Bit-exact clip and tensor I/O.

A clip lives on disk as a directory holding ``meta.json`` (width, height,
fps, frame_count) plus one binary PPM (P6, maxval 255) file per frame,
named ``frame_000001.ppm`` onward. Tensors use a small binary container:
the 8-byte magic ``DMAGTNSR``, a little-endian u32 header length, a JSON
header ``{"shape": [...], "dtype": "f32"|"f64"|"u8"}`` space-padded so the
full prefix is a multiple of 64 bytes, then the row-major little-endian
payload. Both formats round-trip byte-exactly.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

TENSOR_MAGIC = b"DMAGTNSR"

_DTYPE_TO_NUMPY = {"f32": "<f4", "f64": "<f8", "u8": "u1"}
_NUMPY_TO_DTYPE = {np.dtype("<f4"): "f32", np.dtype("<f8"): "f64", np.dtype("u1"): "u8"}


@dataclass
class VideoClip:
    """An ordered stack of 8-bit RGB frames plus a frame rate.

    ``frames`` is a (T, H, W, 3) uint8 array; frame t of the 1-indexed
    stream is ``frames[t - 1]``.
    """

    fps: float
    frames: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.dtype != np.uint8:
            raise FormatError(f"clip frames must be uint8, got {self.frames.dtype}")
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise FormatError(f"clip frames must be (T, H, W, 3), got {self.frames.shape}")
        if not self.fps > 0:
            raise FormatError(f"fps must be positive, got {self.fps}")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


def write_ppm(path, image: np.ndarray) -> None:
    """Write one (H, W, 3) uint8 image as binary PPM (P6, maxval 255)."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"PPM image must be (H, W, 3), got {image.shape}")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(image.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary PPM (P6, maxval 255) into a (H, W, 3) uint8 array."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise FormatError(f"{path}: not a P6 PPM")
    # Header: magic, width, height, maxval separated by whitespace, with
    # optional '#' comment lines, then exactly one whitespace byte.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        m = re.match(rb"\d+", data[pos:])
        if m is None:
            raise FormatError(f"{path}: malformed PPM header")
        fields.append(int(m.group()))
        pos += m.end()
    pos += 1  # the single whitespace byte after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: maxval must be 255, got {maxval}")
    expected = h * w * 3
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise FormatError(f"{path}: truncated pixel data ({len(payload)} of {expected} bytes)")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3)


def _frame_name(index: int) -> str:
    return f"frame_{index:06d}.ppm"


def write_clip(clip: VideoClip, path) -> None:
    """Write a clip directory: meta.json plus one PPM per frame."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "width": clip.width,
        "height": clip.height,
        "fps": clip.fps,
        "frame_count": clip.num_frames,
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    for t in range(clip.num_frames):
        write_ppm(root / _frame_name(t + 1), clip.frames[t])


def read_clip(path) -> VideoClip:
    """Read a clip directory written by :func:`write_clip`.

    Raises FormatError on missing/short frame files (with the frame index),
    mismatched frame dimensions, or frame_count < 2.
    """
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise FormatError(f"{root}: missing meta.json")
    meta = json.loads(meta_path.read_text())
    for key in ("width", "height", "fps", "frame_count"):
        if key not in meta:
            raise FormatError(f"{meta_path}: missing field {key!r}")
    w, h, fps, count = meta["width"], meta["height"], meta["fps"], meta["frame_count"]
    if count < 2:
        raise FormatError(f"{root}: frame_count must be >= 2, got {count}")
    frames = np.empty((count, h, w, 3), dtype=np.uint8)
    for t in range(1, count + 1):
        frame_path = root / _frame_name(t)
        if not frame_path.is_file():
            raise FormatError(f"{root}: missing frame {t} ({frame_path.name})")
        try:
            frame = read_ppm(frame_path)
        except FormatError as exc:
            raise FormatError(f"frame {t}: {exc}") from exc
        if frame.shape != (h, w, 3):
            raise FormatError(
                f"frame {t}: dimensions {frame.shape[1]}x{frame.shape[0]} "
                f"do not match meta {w}x{h}"
            )
        frames[t - 1] = frame
    return VideoClip(fps=float(fps), frames=frames)


def save_tensor(path, array: np.ndarray) -> None:
    """Write an array to the binary tensor container (f32/f64/u8 only)."""
    array = np.ascontiguousarray(array)
    if array.dtype not in _NUMPY_TO_DTYPE:
        raise FormatError(f"unsupported tensor dtype {array.dtype}; use f32, f64 or u8")
    header = json.dumps(
        {"shape": list(array.shape), "dtype": _NUMPY_TO_DTYPE[array.dtype]}
    ).encode()
    prefix_len = len(TENSOR_MAGIC) + 4 + len(header)
    header += b" " * (-prefix_len % 64)
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(array.astype(array.dtype.newbyteorder("<"), copy=False).tobytes())


def load_tensor(path) -> np.ndarray:
    """Read an array written by :func:`save_tensor`."""
    data = Path(path).read_bytes()
    if data[:8] != TENSOR_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:8]!r}")
    (header_len,) = struct.unpack("<I", data[8:12])
    try:
        header = json.loads(data[12 : 12 + header_len])
    except (ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: malformed tensor header") from exc
    if header.get("dtype") not in _DTYPE_TO_NUMPY:
        raise FormatError(f"{path}: unknown dtype {header.get('dtype')!r}")
    shape = tuple(int(n) for n in header["shape"])
    if any(n <= 0 for n in shape) and shape != ():
        raise FormatError(f"{path}: non-positive extent in shape {shape}")
    dtype = np.dtype(_DTYPE_TO_NUMPY[header["dtype"]])
    count = int(np.prod(shape)) if shape else 1
    payload = data[12 + header_len :]
    if len(payload) < count * dtype.itemsize:
        raise FormatError(f"{path}: truncated payload")
    return np.frombuffer(payload[: count * dtype.itemsize], dtype=dtype).reshape(shape).copy()
