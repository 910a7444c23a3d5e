"""Halo expansion, payload extraction, core cropping and merging."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .image_io import ImageBuffer, PixelMask
from .tiling import Rect, TileLayout

__all__ = [
    "ExpandedTile",
    "expand",
    "expand_layout",
    "extract",
    "crop_core",
    "merge",
    "Canvas",
    "overhead_pixels",
]


@dataclass(frozen=True)
class ExpandedTile:
    core: Rect
    halo: Rect
    d: int

    @property
    def core_offset(self) -> tuple[int, int]:
        """Position of the core inside the halo, as ``(x, y)``."""
        return self.core.x - self.halo.x, self.core.y - self.halo.y


def expand(tile: Rect, d: int, width: int, height: int) -> ExpandedTile:
    """Grow ``tile`` by ``d`` on every side, clamped to the image."""
    if d < 0:
        raise ValueError(f"overlap must be >= 0, got {d}")
    x0, y0 = max(0, tile.x - d), max(0, tile.y - d)
    x1, y1 = min(width, tile.x_end + d), min(height, tile.y_end + d)
    return ExpandedTile(tile, Rect(x0, y0, x1 - x0, y1 - y0), d)


def expand_layout(layout: TileLayout, d: int) -> list[ExpandedTile]:
    return [expand(t, d, layout.image_w, layout.image_h) for t in layout.tiles]


def extract(image: ImageBuffer, mask: PixelMask, et: ExpandedTile) -> tuple[ImageBuffer, PixelMask]:
    h = et.halo
    sl = np.s_[h.y : h.y_end, h.x : h.x_end]
    return ImageBuffer(image.pixels[sl]), PixelMask(mask.flags[sl])


def crop_core(processed: ImageBuffer, et: ExpandedTile) -> ImageBuffer:
    if (processed.width, processed.height) != (et.halo.w, et.halo.h):
        raise ValueError(
            f"processed tile is {processed.width}x{processed.height}, halo is {et.halo.w}x{et.halo.h}"
        )
    ox, oy = et.core_offset
    return ImageBuffer(processed.pixels[oy : oy + et.core.h, ox : ox + et.core.w])


class Canvas:
    """Output buffer that accepts core crops one at a time.

    Single writer: only the owner (the master) may call :meth:`place`.
    Each tile may be placed once; placing an already-filled tile raises.
    """

    def __init__(self, layout: TileLayout) -> None:
        self.layout = layout
        self._pixels = np.zeros((layout.image_h, layout.image_w), dtype=np.uint8)
        self._placed = [False] * len(layout.tiles)

    def place(self, index: int, core: ImageBuffer) -> None:
        tile = self.layout.tiles[index]
        if self._placed[index]:
            raise ValueError(f"tile {index} already merged")
        if (core.width, core.height) != (tile.w, tile.h):
            raise ValueError(f"core for tile {index} is {core.width}x{core.height}, expected {tile.w}x{tile.h}")
        self._pixels[tile.y : tile.y_end, tile.x : tile.x_end] = core.pixels
        self._placed[index] = True

    @property
    def complete(self) -> bool:
        return all(self._placed)

    @property
    def missing(self) -> list[int]:
        return [i for i, done in enumerate(self._placed) if not done]

    def result(self) -> ImageBuffer:
        if not self.complete:
            raise ValueError(f"tiles not merged yet: {self.missing}")
        return ImageBuffer(self._pixels)


def merge(layout: TileLayout, cores: Sequence[ImageBuffer]) -> ImageBuffer:
    if len(cores) != len(layout.tiles):
        raise ValueError(f"{len(cores)} cores for {len(layout.tiles)} tiles")
    canvas = Canvas(layout)
    for i, core in enumerate(cores):
        canvas.place(i, core)
    return canvas.result()


def overhead_pixels(tiles: Sequence[ExpandedTile]) -> int:
    """Extra pixels shipped because of the overlap stripes."""
    return sum(et.halo.area - et.core.area for et in tiles)
