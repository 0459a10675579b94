"""PGM (P2 plain / P5 raw) reading and writing, plus micrograph preprocessing."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import BadMagic, InvalidArgument, MalformedHeader, SampleOutOfRange, TruncatedPayload
from .grid import BinaryImage


@dataclass
class PgmImage:
    width: int
    height: int
    maxval: int
    samples: np.ndarray  # (height, width) integers

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int64).reshape(self.height, self.width)
        if not 0 < self.maxval <= 65535:
            raise InvalidArgument(f"maxval {self.maxval} outside [1, 65535]")

    def __eq__(self, other):
        return (
            isinstance(other, PgmImage)
            and (self.width, self.height, self.maxval) == (other.width, other.height, other.maxval)
            and np.array_equal(self.samples, other.samples)
        )


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header(data: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` integer tokens after the magic; return them and the offset past them."""
    pos = 2
    out = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeader("header ended early")
        try:
            out.append(int(m.group(1)))
        except ValueError:
            raise MalformedHeader(f"bad header token {m.group(1)!r}") from None
        pos = m.end()
    return out, pos


def read_pgm(data: bytes) -> PgmImage:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise BadMagic(f"not a P2/P5 PGM file (magic {magic!r})")
    (width, height, maxval), pos = _header(data, 3)
    if width < 1 or height < 1:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise MalformedHeader(f"maxval {maxval} outside [1, 65535]")
    count = width * height

    if magic == b"P2":
        tokens = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(tokens) < count:
            raise TruncatedPayload(f"expected {count} samples, found {len(tokens)}")
        try:
            samples = np.array([int(t) for t in tokens[:count]], dtype=np.int64)
        except ValueError:
            raise MalformedHeader("non-integer sample in plain PGM") from None
    else:
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise TruncatedPayload("missing raster data")
        pos += 1
        dtype = ">u1" if maxval < 256 else ">u2"
        nbytes = count * np.dtype(dtype).itemsize
        raw = data[pos : pos + nbytes]
        if len(raw) < nbytes:
            raise TruncatedPayload(f"expected {nbytes} raster bytes, found {len(raw)}")
        samples = np.frombuffer(raw, dtype=dtype).astype(np.int64)

    if samples.min() < 0 or samples.max() > maxval:
        raise SampleOutOfRange(f"sample outside [0, {maxval}]")
    return PgmImage(width, height, maxval, samples)


def encode_pgm(img: PgmImage, plain: bool = False) -> bytes:
    head = f"{'P2' if plain else 'P5'}\n{img.width} {img.height}\n{img.maxval}\n".encode("ascii")
    if plain:
        rows = [" ".join(map(str, row)) for row in img.samples.tolist()]
        return head + ("\n".join(rows) + "\n").encode("ascii")
    dtype = ">u1" if img.maxval < 256 else ">u2"
    return head + img.samples.astype(dtype).tobytes()


def to_pgm(img, maxval: int = 255) -> PgmImage:
    """Quantise to PGM samples.

    Binary images map black to 0 and white to ``maxval``. Real images are
    clipped to [0, 1] and rounded to the nearest level, so the quantisation
    error is at most 1 / (2 maxval).
    """
    if isinstance(img, PgmImage):
        return img
    if isinstance(img, BinaryImage):
        samples = np.where(img.bits, 0, maxval)
    else:
        y = np.asarray(img, dtype=float)
        samples = np.rint(np.clip(y, 0.0, 1.0) * maxval)
    h, w = samples.shape
    return PgmImage(w, h, maxval, samples.astype(np.int64))


def write_pgm(img, maxval: int = 255) -> bytes:
    return encode_pgm(to_pgm(img, maxval))


def normalize(img: PgmImage) -> np.ndarray:
    """Samples divided by maxval, so intensities lie in [0, 1]."""
    return img.samples.astype(float) / img.maxval


def downsample2x(img) -> np.ndarray:
    """Mean of each 2x2 block; an odd trailing row or column is dropped."""
    y = np.asarray(img, dtype=float)
    h, w = y.shape
    if h < 2 or w < 2:
        raise InvalidArgument(f"cannot halve a {h}x{w} image")
    y = y[: h - h % 2, : w - w % 2]
    return (y[0::2, 0::2] + y[0::2, 1::2] + y[1::2, 0::2] + y[1::2, 1::2]) / 4.0
