"""Binary framing for master/worker messages.

Every frame is::

    magic "TFRM" | version u8 | variant u8 | payload length u32 BE | payload

Payload layouts (all integers big-endian)::

    ASSIGN   tile_id u32, halo x,y,w,h u32, core x,y,w,h u32,
             algo name (u16 length + UTF-8), params (u32 length + JSON),
             pixels (halo.w * halo.h bytes, row-major),
             mask bits (halo.h rows of ceil(halo.w / 8) bytes, MSB first,
             1 = KNOWN, padding bits zero)
    RESULT   tile_id u32, width u32, height u32, elapsed_us u64, pixels
    SHUTDOWN (empty)
    ERROR    tile_id u32, UTF-8 text (rest of payload)

The TCP handshake is a bare ``magic | version`` exchange ahead of any frame.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Union

import numpy as np

from ..image_io import ImageBuffer, PixelMask
from ..tiling import Rect

__all__ = [
    "MAGIC",
    "VERSION",
    "HEADER_SIZE",
    "MAX_PAYLOAD",
    "Variant",
    "Assign",
    "Result",
    "Shutdown",
    "Error",
    "WireMessage",
    "ProtocolError",
    "BadMagicError",
    "BadVersionError",
    "TruncatedFrameError",
    "LengthOverrunError",
    "UnknownVariantError",
    "MalformedPayloadError",
    "encode",
    "decode",
    "parse_header",
    "read_frame",
    "handshake_bytes",
    "check_handshake",
]

MAGIC = b"TFRM"
VERSION = 1
HEADER = struct.Struct(">4sBBI")
HEADER_SIZE = HEADER.size  # 10
MAX_PAYLOAD = 1 << 30


class Variant(enum.IntEnum):
    ASSIGN = 1
    RESULT = 2
    SHUTDOWN = 3
    ERROR = 4


class ProtocolError(Exception):
    """Base class for every framing or payload decoding failure."""


class BadMagicError(ProtocolError):
    pass


class BadVersionError(ProtocolError):
    pass


class TruncatedFrameError(ProtocolError):
    pass


class LengthOverrunError(ProtocolError):
    """Declared lengths disagree with the bytes actually present."""


class UnknownVariantError(ProtocolError):
    pass


class MalformedPayloadError(ProtocolError):
    pass


@dataclass(frozen=True, eq=False)
class Assign:
    tile_id: int
    halo: Rect
    core: Rect
    algo: str
    params: dict[str, Any]
    pixels: ImageBuffer
    mask: PixelMask

    def __post_init__(self) -> None:
        object.__setattr__(self, "halo", Rect(*self.halo))
        object.__setattr__(self, "core", Rect(*self.core))
        size = (self.halo.w, self.halo.h)
        if (self.pixels.width, self.pixels.height) != size or (self.mask.width, self.mask.height) != size:
            raise ValueError("payload dimensions must equal the halo size")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Assign):
            return NotImplemented
        return (
            self.tile_id == other.tile_id
            and self.halo == other.halo
            and self.core == other.core
            and self.algo == other.algo
            and self.params == other.params
            and self.pixels == other.pixels
            and self.mask == other.mask
        )


@dataclass(frozen=True)
class Result:
    tile_id: int
    pixels: ImageBuffer
    elapsed_us: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Shutdown:
    pass


@dataclass(frozen=True)
class Error:
    tile_id: int
    text: str


WireMessage = Union[Assign, Result, Shutdown, Error]

_U32 = struct.Struct(">I")
_U16 = struct.Struct(">H")
_RECT2 = struct.Struct(">9I")
_RESULT = struct.Struct(">IIIQ")


def _frame(variant: Variant, payload: bytes) -> bytes:
    return HEADER.pack(MAGIC, VERSION, int(variant), len(payload)) + payload


def encode(msg: WireMessage) -> bytes:
    if isinstance(msg, Assign):
        name = msg.algo.encode("utf-8")
        params = json.dumps(msg.params, sort_keys=True, separators=(",", ":")).encode("utf-8")
        payload = b"".join(
            (
                _RECT2.pack(msg.tile_id, *msg.halo, *msg.core),
                _U16.pack(len(name)),
                name,
                _U32.pack(len(params)),
                params,
                msg.pixels.samples,
                np.packbits(msg.mask.flags, axis=1).tobytes(),
            )
        )
        return _frame(Variant.ASSIGN, payload)
    if isinstance(msg, Result):
        head = _RESULT.pack(msg.tile_id, msg.pixels.width, msg.pixels.height, msg.elapsed_us)
        return _frame(Variant.RESULT, head + msg.pixels.samples)
    if isinstance(msg, Shutdown):
        return _frame(Variant.SHUTDOWN, b"")
    if isinstance(msg, Error):
        return _frame(Variant.ERROR, _U32.pack(msg.tile_id) + msg.text.encode("utf-8"))
    raise TypeError(f"not a wire message: {msg!r}")


def parse_header(header: bytes) -> tuple[Variant, int]:
    """Validate the fixed 10-byte header; return variant and payload length."""
    if len(header) < HEADER_SIZE:
        if header[: len(MAGIC)] != MAGIC[: len(header)]:
            raise BadMagicError(f"bad magic {bytes(header[:4])!r}")
        raise TruncatedFrameError(f"frame header has {len(header)} of {HEADER_SIZE} bytes")
    magic, version, variant, length = HEADER.unpack_from(header)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersionError(f"unsupported protocol version {version}")
    try:
        kind = Variant(variant)
    except ValueError:
        raise UnknownVariantError(f"unknown variant {variant}") from None
    if length > MAX_PAYLOAD:
        raise LengthOverrunError(f"declared payload length {length} exceeds limit {MAX_PAYLOAD}")
    return kind, length


class _Reader:
    def __init__(self, data: memoryview) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> memoryview:
        if self.pos + n > len(self.data):
            raise LengthOverrunError(f"{what} needs {n} bytes, {len(self.data) - self.pos} left in payload")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st: struct.Struct, what: str) -> tuple:
        return st.unpack(self.take(st.size, what))

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise LengthOverrunError(f"{len(self.data) - self.pos} unexpected trailing payload bytes")


def _text(raw: memoryview, what: str) -> str:
    try:
        return bytes(raw).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedPayloadError(f"{what} is not valid UTF-8") from exc


def _decode_payload(kind: Variant, payload: memoryview) -> WireMessage:
    rd = _Reader(payload)
    if kind is Variant.SHUTDOWN:
        rd.finish()
        return Shutdown()
    if kind is Variant.ERROR:
        (tile_id,) = rd.unpack(_U32, "tile id")
        return Error(tile_id, _text(rd.take(len(payload) - rd.pos, "text"), "error text"))
    if kind is Variant.RESULT:
        tile_id, w, h, elapsed = rd.unpack(_RESULT, "result header")
        if w < 1 or h < 1:
            raise MalformedPayloadError(f"result has empty size {w}x{h}")
        pixels = rd.take(w * h, "result pixels")
        rd.finish()
        arr = np.frombuffer(pixels, dtype=np.uint8).reshape(h, w)
        return Result(tile_id, ImageBuffer(arr), elapsed)
    # ASSIGN
    fields_ = rd.unpack(_RECT2, "assign header")
    tile_id, halo, core = fields_[0], Rect(*fields_[1:5]), Rect(*fields_[5:9])
    if halo.w < 1 or halo.h < 1 or core.w < 1 or core.h < 1:
        raise MalformedPayloadError(f"empty rectangle in assign: halo {halo}, core {core}")
    if not halo.contains(core):
        raise MalformedPayloadError(f"core {core} lies outside halo {halo}")
    (name_len,) = rd.unpack(_U16, "algo name length")
    algo = _text(rd.take(name_len, "algo name"), "algo name")
    (params_len,) = rd.unpack(_U32, "params length")
    raw_params = _text(rd.take(params_len, "params"), "params")
    try:
        params = json.loads(raw_params)
    except (ValueError, RecursionError) as exc:
        raise MalformedPayloadError("params are not valid JSON") from exc
    if not isinstance(params, dict):
        raise MalformedPayloadError("params must be a JSON object")
    pixels = rd.take(halo.w * halo.h, "assign pixels")
    row_bytes = (halo.w + 7) // 8
    bits = rd.take(row_bytes * halo.h, "mask bits")
    rd.finish()
    image = ImageBuffer(np.frombuffer(pixels, dtype=np.uint8).reshape(halo.h, halo.w))
    packed = np.frombuffer(bits, dtype=np.uint8).reshape(halo.h, row_bytes)
    spare = 8 * row_bytes - halo.w
    if spare and np.any(packed[:, -1] & ((1 << spare) - 1)):
        raise MalformedPayloadError("nonzero padding bits in mask rows")
    flags = np.unpackbits(packed, axis=1, count=halo.w).astype(bool)
    return Assign(tile_id, halo, core, algo, params, image, PixelMask(flags))


def decode(frame: bytes) -> WireMessage:
    """Decode exactly one complete frame."""
    view = memoryview(frame)
    kind, length = parse_header(view[:HEADER_SIZE])
    available = len(view) - HEADER_SIZE
    if available < length:
        raise TruncatedFrameError(f"payload has {available} of {length} declared bytes")
    if available > length:
        raise LengthOverrunError(f"{available - length} bytes beyond the declared payload length")
    return _decode_payload(kind, view[HEADER_SIZE:])


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks, remaining = [], n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream: BinaryIO) -> bytes | None:
    """Read one raw frame from a byte stream; ``None`` on clean EOF."""
    header = _read_exact(stream, HEADER_SIZE)
    if not header:
        return None
    _, length = parse_header(header)
    payload = _read_exact(stream, length)
    if len(payload) < length:
        raise TruncatedFrameError(f"stream ended after {len(payload)} of {length} payload bytes")
    return header + payload


def handshake_bytes() -> bytes:
    return MAGIC + bytes([VERSION])


def check_handshake(data: bytes) -> None:
    if len(data) < len(MAGIC) + 1:
        raise TruncatedFrameError("handshake truncated")
    if data[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad handshake magic {bytes(data[:4])!r}")
    if data[len(MAGIC)] != VERSION:
        raise BadVersionError(f"peer speaks protocol version {data[len(MAGIC)]}, expected {VERSION}")
