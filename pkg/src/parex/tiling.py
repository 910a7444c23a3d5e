"""Tile layouts: the compact row-based planner, vertical stripes, and a
brute-force guillotine search used as the expensive near-optimal baseline.

All planners return a :class:`TileLayout` whose tiles exactly cover the
image without overlap, ordered row-major (by ``y`` then ``x``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, partial
from itertools import accumulate, repeat
from typing import NamedTuple

import numpy as np

__all__ = [
    "Rect",
    "TileLayout",
    "Violation",
    "DegenerateTilingError",
    "STRATEGIES",
    "plan",
    "plan_proposed",
    "plan_vertical",
    "plan_optimal",
    "interior_boundary",
    "area_imbalance",
    "validate",
]

STRATEGIES = ("proposed", "vertical", "optimal")


class Rect(NamedTuple):
    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def x_end(self) -> int:
        return self.x + self.w

    @property
    def y_end(self) -> int:
        return self.y + self.h

    def transposed(self) -> "Rect":
        return Rect(self.y, self.x, self.h, self.w)

    def contains(self, other: "Rect") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.x_end <= self.x_end
            and other.y_end <= self.y_end
        )


_new_rect = partial(tuple.__new__, Rect)  # Rect from an (x, y, w, h) tuple, skipping _make


@dataclass(frozen=True)
class TileLayout:
    image_w: int
    image_h: int
    tiles: tuple[Rect, ...]
    strategy: str
    n: int

    def __len__(self) -> int:
        return len(self.tiles)


class DegenerateTilingError(ValueError):
    """A planner would have produced an empty (zero-width or zero-height) tile."""


@dataclass(frozen=True)
class Violation:
    kind: str  # "count" | "bounds" | "empty" | "overlap" | "gap"
    x: int
    y: int
    tile: int | None = None

    def __str__(self) -> str:
        where = f" (tile {self.tile})" if self.tile is not None else ""
        return f"{self.kind} at ({self.x},{self.y}){where}"


def _check_args(width: int, height: int, n: int) -> None:
    if width < 1 or height < 1:
        raise ValueError(f"image must be at least 1x1, got {width}x{height}")
    if n < 1:
        raise ValueError(f"tile count must be >= 1, got {n}")
    if n > width * height:
        raise DegenerateTilingError(f"{n} tiles do not fit into {width * height} pixels")


def _split_evenly(total: int, parts: int, index: int) -> int:
    # 1-based index; the first ``total % parts`` shares get the extra unit.
    q, rem = divmod(total, parts)
    return q + 1 if index <= rem else q


def _proposed_landscape(width: int, height: int, n: int) -> list[Rect]:
    ratio = width / height
    n_rows = max(1, round(math.sqrt(n / ratio)))
    tiles: list[Rect] = []
    y = 0
    for i in range(1, n_rows + 1):
        n_cols = _split_evenly(n, n_rows, i)
        if n_cols < 1:
            raise DegenerateTilingError(f"row {i} receives no tiles ({n} tiles over {n_rows} rows)")
        if i == n_rows:
            h = height - y
        else:
            h = (height * n_cols) // n + ((height * n_cols) % n) // n_rows
        if h < 1:
            raise DegenerateTilingError(f"row {i} has height {h} (y offset {y}, image height {height})")
        q, rem = divmod(width, n_cols)
        if q < 1:
            raise DegenerateTilingError(f"row {i}, column {rem + 1} has width 0 ({n_cols} columns over {width} px)")
        # columns j <= rem are one pixel wider
        widths = [q + 1] * rem + [q] * (n_cols - rem)
        xs = [0, *accumulate(widths[:-1])]
        tiles.extend(map(_new_rect, zip(xs, repeat(y), widths, repeat(h))))
        y += h
    return tiles


def plan_proposed(width: int, height: int, n: int) -> TileLayout:
    """Compact row-based tiling in O(n).

    The row count follows the aspect ratio, tiles are spread over rows as
    evenly as possible (earlier rows take the remainder), each row height is
    proportional to its tile count, and the last row absorbs rounding.
    Portrait images are planned transposed and mapped back.
    """
    _check_args(width, height, n)
    if height > width:
        tiles = [t.transposed() for t in _proposed_landscape(height, width, n)]
        tiles.sort(key=lambda t: (t.y, t.x))
    else:
        tiles = _proposed_landscape(width, height, n)
    return TileLayout(width, height, tuple(tiles), "proposed", n)


def plan_vertical(width: int, height: int, n: int) -> TileLayout:
    """``n`` full-height stripes; widths differ by at most one, wider first."""
    _check_args(width, height, n)
    if n > width:
        raise DegenerateTilingError(f"{n} vertical stripes do not fit into width {width}")
    tiles = []
    x = 0
    for j in range(1, n + 1):
        w = _split_evenly(width, n, j)
        tiles.append(Rect(x, 0, w, height))
        x += w
    return TileLayout(width, height, tuple(tiles), "vertical", n)


# Split encoding inside the search: (axis, cut, k) where axis 0 is a vertical
# cut at x=cut and axis 1 a horizontal cut at y=cut; k tiles go to the
# left/top part.
_INF = float("inf")


def _cut_positions(length: int, k: int, n: int) -> range:
    # floor/ceil of the area-proportional position: both lie within 1 px
    lo = max(1, (length * k) // n)
    hi = min(length - 1, -(-length * k // n))
    return range(lo, hi + 1)


def plan_optimal(width: int, height: int, n: int, max_n: int = 12) -> TileLayout:
    """Exhaustive recursive guillotine search minimising interior boundary.

    Every rectangle is split by one full cut into two parts receiving k and
    n-k tiles, with the cut at the floor or ceiling of the area-proportional
    position.  Optimality holds only within this guillotine family.  Ties
    prefer vertical cuts, then smaller cut coordinates, then smaller k.
    Sub-results are memoised per rectangle size for the duration of one
    call; the number of distinct sub-problems still grows quickly with n.
    """
    _check_args(width, height, n)
    if n > max_n:
        raise ValueError(f"optimal tiling limited to {max_n} tiles, got {n}")

    @lru_cache(maxsize=None)
    def best(w: int, h: int, k_total: int) -> tuple[float, tuple | None]:
        if k_total == 1:
            return 0.0, None
        if w * h < k_total:
            return _INF, None
        best_cost, best_split = _INF, None
        for axis, length, cut_len in ((0, w, h), (1, h, w)):
            candidates = sorted(
                (cut, k) for k in range(1, k_total) for cut in _cut_positions(length, k, k_total)
            )
            for cut, k in candidates:
                if axis == 0:
                    a, b = best(cut, h, k), best(w - cut, h, k_total - k)
                else:
                    a, b = best(w, cut, k), best(w, h - cut, k_total - k)
                cost = cut_len + a[0] + b[0]
                if cost < best_cost:
                    best_cost, best_split = cost, (axis, cut, k)
        return best_cost, best_split

    cost, _ = best(width, height, n)
    if cost == _INF:
        raise DegenerateTilingError(f"no guillotine tiling of {width}x{height} into {n} tiles")

    tiles: list[Rect] = []

    def emit(x: int, y: int, w: int, h: int, k: int) -> None:
        _, split = best(w, h, k)
        if split is None:
            tiles.append(Rect(x, y, w, h))
            return
        axis, cut, kk = split
        if axis == 0:
            emit(x, y, cut, h, kk)
            emit(x + cut, y, w - cut, h, k - kk)
        else:
            emit(x, y, w, cut, kk)
            emit(x, y + cut, w, h - cut, k - kk)

    emit(0, 0, width, height, n)
    tiles.sort(key=lambda t: (t.y, t.x))
    return TileLayout(width, height, tuple(tiles), "optimal", n)


def plan(strategy: str, width: int, height: int, n: int) -> TileLayout:
    if strategy == "proposed":
        return plan_proposed(width, height, n)
    if strategy == "vertical":
        return plan_vertical(width, height, n)
    if strategy == "optimal":
        return plan_optimal(width, height, n)
    raise ValueError(f"unknown tiling strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")


def interior_boundary(layout: TileLayout) -> int:
    """Total length of edges shared by adjacent tiles.

    For an exact cover every interior edge appears in two tile perimeters
    and every image-border edge in one.
    """
    perimeters = sum(2 * (t.w + t.h) for t in layout.tiles)
    return (perimeters - 2 * (layout.image_w + layout.image_h)) // 2


def area_imbalance(layout: TileLayout) -> float:
    areas = [t.area for t in layout.tiles]
    mean = sum(areas) / len(areas)
    return (max(areas) - min(areas)) / mean


def validate(layout: TileLayout) -> Violation | None:
    """Return the first invariant violation, or ``None`` for a valid layout.

    Empty tiles and out-of-bounds tiles are reported first, then the
    rasterised cover is scanned in row-major order for overlaps and gaps.
    """
    if len(layout.tiles) != layout.n:
        return Violation("count", 0, 0)
    frame = Rect(0, 0, layout.image_w, layout.image_h)
    for idx, t in enumerate(layout.tiles):
        if t.w < 1 or t.h < 1:
            return Violation("empty", t.x, t.y, idx)
        if t.x < 0 or t.y < 0 or not frame.contains(t):
            return Violation("bounds", t.x, t.y, idx)
    cover = np.zeros((layout.image_h, layout.image_w), dtype=np.int32)
    for t in layout.tiles:
        cover[t.y : t.y_end, t.x : t.x_end] += 1
    bad = np.flatnonzero(cover != 1)
    if bad.size:
        y, x = divmod(int(bad[0]), layout.image_w)
        kind = "overlap" if cover[y, x] > 1 else "gap"
        owner = None
        if kind == "overlap":
            owner = next(i for i, t in enumerate(layout.tiles) if t.contains(Rect(x, y, 1, 1)))
        return Violation(kind, x, y, owner)
    return None
