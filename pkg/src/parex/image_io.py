"""Grayscale image and mask containers, binary PGM codec, synthetic masks.

Images are 8-bit luma stored row-major as ``(height, width)`` numpy arrays.
Masks use ``True`` for KNOWN pixels and ``False`` for pixels that must be
extrapolated.  On disk a mask is a PGM where sample 0 means UNKNOWN and any
nonzero sample means KNOWN ("holes are black").

Randomness (``gen_scatter_mask``) uses ``numpy.random.default_rng(seed)``,
i.e. PCG64 seeded through ``SeedSequence``.  The generator and the order of
draws are part of the output contract: changing either changes golden masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ImageBuffer",
    "PixelMask",
    "PgmError",
    "PgmMagicError",
    "PgmHeaderError",
    "PgmMaxvalError",
    "PgmTruncatedError",
    "read_pgm",
    "write_pgm",
    "mask_from_pgm",
    "mask_to_pgm",
    "gen_scatter_mask",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    if not arr.flags.writeable and arr.flags.c_contiguous:
        return arr
    arr = np.array(arr, order="C")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """Immutable 8-bit grayscale image.

    ``pixels[y, x]`` is the sample at column ``x`` and row ``y``.
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"image must be 2-D, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"image must be at least 1x1, got {px.shape[1]}x{px.shape[0]}")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("image samples must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen(px))

    @classmethod
    def from_samples(cls, width: int, height: int, samples) -> "ImageBuffer":
        data = np.asarray(bytearray(samples) if isinstance(samples, (bytes, bytearray)) else samples)
        if data.size != width * height:
            raise ValueError(f"expected {width * height} samples, got {data.size}")
        return cls(data.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def samples(self) -> bytes:
        return self.pixels.tobytes()

    def at(self, x: int, y: int) -> int:
        return int(self.pixels[y, x])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class PixelMask:
    """Immutable known/unknown flags; ``True`` = KNOWN."""

    flags: np.ndarray

    def __post_init__(self) -> None:
        fl = np.asarray(self.flags)
        if fl.ndim != 2 or fl.shape[0] < 1 or fl.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2-D array, got shape {fl.shape}")
        object.__setattr__(self, "flags", _frozen(fl.astype(bool, copy=False)))

    @classmethod
    def all_known(cls, width: int, height: int) -> "PixelMask":
        return cls(np.ones((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.flags.shape[1]

    @property
    def height(self) -> int:
        return self.flags.shape[0]

    @property
    def missing_count(self) -> int:
        return int(self.flags.size - np.count_nonzero(self.flags))

    @property
    def missing_fraction(self) -> float:
        return self.missing_count / self.flags.size

    def matches(self, image: ImageBuffer) -> bool:
        return self.flags.shape == image.pixels.shape

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PixelMask):
            return NotImplemented
        return self.flags.shape == other.flags.shape and bool(np.array_equal(self.flags, other.flags))

    def __repr__(self) -> str:
        return f"PixelMask({self.width}x{self.height}, missing={self.missing_fraction:.4f})"


class PgmError(ValueError):
    """Base class for PGM decoding failures."""


class PgmMagicError(PgmError):
    pass


class PgmHeaderError(PgmError):
    pass


class PgmMaxvalError(PgmError):
    pass


class PgmTruncatedError(PgmError):
    pass


_WHITESPACE = b" \t\n\r\v\f"


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last token.
    """
    tokens: list[bytes] = []
    pos, n = 0, len(data)
    while len(tokens) < count:
        while pos < n and (data[pos] in _WHITESPACE or data[pos] == 0x23):
            if data[pos] == 0x23:  # '#': comment runs to end of line
                end = data.find(b"\n", pos)
                pos = n if end < 0 else end + 1
            else:
                pos += 1
        if pos >= n:
            raise PgmHeaderError(f"header ended after {len(tokens)} of {count} fields")
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != 0x23:
            pos += 1
        tokens.append(data[start:pos])
    if pos >= n or data[pos] not in _WHITESPACE:
        raise PgmHeaderError("header must end with a single whitespace byte")
    return tokens, pos + 1


def read_pgm(data: bytes) -> ImageBuffer:
    """Decode a binary (P5) PGM with maxval 255."""
    data = bytes(data)
    if data[:2] != b"P5":
        raise PgmMagicError(f"not a binary PGM: magic {data[:2]!r}")
    if len(data) < 3 or (data[2] not in _WHITESPACE and data[2] != 0x23):
        raise PgmMagicError("magic must be followed by whitespace")
    tokens, offset = _header_tokens(data[2:], 3)
    offset += 2
    if not all(t.isdigit() for t in tokens):
        raise PgmHeaderError(f"header fields must be unsigned decimals: {tokens!r}")
    width, height, maxval = (int(t) for t in tokens)
    if width < 1 or height < 1:
        raise PgmHeaderError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise PgmMaxvalError(f"unsupported maxval {maxval} (only 255)")
    need = width * height
    payload = data[offset : offset + need]
    if len(payload) < need:
        raise PgmTruncatedError(f"payload has {len(payload)} of {need} bytes")
    return ImageBuffer(np.frombuffer(payload, dtype=np.uint8).reshape(height, width))


def write_pgm(image: ImageBuffer) -> bytes:
    return b"P5\n%d %d\n255\n" % (image.width, image.height) + image.samples


def mask_from_pgm(data: bytes) -> PixelMask:
    return PixelMask(read_pgm(data).pixels != 0)


def mask_to_pgm(mask: PixelMask) -> bytes:
    return write_pgm(ImageBuffer(np.where(mask.flags, 255, 0).astype(np.uint8)))


def gen_scatter_mask(width: int, height: int, target_fraction: float, block: int, seed: int) -> PixelMask:
    """Punch ``block`` x ``block`` holes at random anchors until the target is met.

    Anchors are drawn uniformly over positions where the square fits inside
    the image; squares may overlap.  Drawing stops at the first square that
    brings the missing fraction to ``target_fraction`` or above, so the
    overshoot is bounded by ``block**2 / (width * height)``.
    """
    if not 0.0 <= target_fraction <= 1.0:
        raise ValueError(f"target fraction {target_fraction} outside [0, 1]")
    if block < 1 or block > min(width, height):
        raise ValueError(f"block {block} must lie in [1, {min(width, height)}]")
    known = np.ones((height, width), dtype=bool)
    target = int(np.ceil(target_fraction * width * height - 1e-9))
    rng = np.random.default_rng(seed)
    missing = 0
    span_x, span_y = width - block + 1, height - block + 1
    while missing < target:
        # Draw in batches; consume anchors one at a time so the stopping
        # point does not depend on the batch size.
        anchors = rng.integers(0, [span_x, span_y], size=(4096, 2))
        for ax, ay in anchors:
            patch = known[ay : ay + block, ax : ax + block]
            missing += int(np.count_nonzero(patch))
            patch[...] = False
            if missing >= target:
                break
    return PixelMask(known)
