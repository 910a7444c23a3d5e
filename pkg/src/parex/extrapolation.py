"""Pluggable per-tile extrapolation algorithms.

An extrapolator takes an image and a mask and returns an image of the same
size in which every UNKNOWN pixel has been assigned and every KNOWN pixel is
untouched.  Each one declares an ``influence_radius``: the output at a pixel
never depends on input farther away than that (Chebyshev distance).  The
tiled runtime is exact whenever the overlap is at least this radius.

Two algorithms are registered:

``diffusion``
    Jacobi averaging of the 4-neighbourhood for K iterations.  Radius K.
``fse-lite``
    Block-wise greedy sparse model over 2-D DFT basis functions, fitted on a
    weighted support window around each block.  Blocks are modelled from
    the originally known pixels only (no reuse of reconstructed values), so
    the radius is ``block_size + support_margin``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, ClassVar, Mapping

import numpy as np

from .image_io import ImageBuffer, PixelMask

__all__ = [
    "FALLBACK_VALUE",
    "DiffusionParams",
    "FseLiteParams",
    "Extrapolator",
    "DiffusionExtrapolator",
    "FseLiteExtrapolator",
    "UnknownAlgorithmError",
    "ALGORITHMS",
    "registry_lookup",
    "diffusion_extrapolate",
    "fse_lite_extrapolate",
    "fse_lite_trace",
    "fill_constant",
]

# Value given to unknown pixels that no known pixel can reach.
FALLBACK_VALUE = 128


def _to_uint8(values: np.ndarray) -> np.ndarray:
    # round half up, then clamp
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def _check_inputs(image: ImageBuffer, mask: PixelMask) -> None:
    if not mask.matches(image):
        raise ValueError(
            f"mask is {mask.width}x{mask.height} but image is {image.width}x{image.height}"
        )


@dataclass(frozen=True)
class DiffusionParams:
    iterations: int = 32

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"diffusion iterations must be >= 1, got {self.iterations}")


@dataclass(frozen=True)
class FseLiteParams:
    block_size: int = 4
    support_margin: int | None = None  # defaults to 2 * block_size
    model_iterations: int = 100
    gamma: float = 0.5
    rho: float = 0.8

    def __post_init__(self) -> None:
        if self.block_size < 2:
            raise ValueError(f"block size must be >= 2, got {self.block_size}")
        if self.support_margin is None:
            object.__setattr__(self, "support_margin", 2 * self.block_size)
        if self.support_margin < 0:
            raise ValueError(f"support margin must be >= 0, got {self.support_margin}")
        if self.model_iterations < 1:
            raise ValueError(f"model iterations must be >= 1, got {self.model_iterations}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")


def diffusion_extrapolate(image: ImageBuffer, mask: PixelMask, params: DiffusionParams = DiffusionParams()) -> ImageBuffer:
    """Fill unknown pixels by ``params.iterations`` synchronous neighbour averages.

    An unknown pixel takes the mean of those 4-neighbours that already hold
    a value (known pixels, or unknown pixels reached in an earlier step).
    Pixels still unreached at the end get :data:`FALLBACK_VALUE`.
    """
    _check_inputs(image, mask)
    known = mask.flags
    unknown = ~known
    if not unknown.any():
        return image
    vals = np.where(known, image.pixels.astype(np.float64), 0.0)
    reached = known.copy()
    for _ in range(params.iterations):
        total = np.zeros_like(vals)
        count = np.zeros(vals.shape, dtype=np.int64)
        # fixed neighbour order: up, down, left, right
        total[1:, :] += vals[:-1, :]
        count[1:, :] += reached[:-1, :]
        total[:-1, :] += vals[1:, :]
        count[:-1, :] += reached[1:, :]
        total[:, 1:] += vals[:, :-1]
        count[:, 1:] += reached[:, :-1]
        total[:, :-1] += vals[:, 1:]
        count[:, :-1] += reached[:, 1:]
        update = unknown & (count > 0)
        vals = np.where(update, total / np.maximum(count, 1), vals)
        reached = known | update
    filled = np.where(reached, vals, float(FALLBACK_VALUE))
    return ImageBuffer(np.where(known, image.pixels, _to_uint8(filled)))


def _fse_values(image: ImageBuffer, mask: PixelMask, params: FseLiteParams) -> np.ndarray:
    from ._fse_kernel import fse_image

    return fse_image(
        image.pixels.astype(np.float64),
        np.ascontiguousarray(mask.flags),
        params.block_size,
        params.support_margin,
        params.model_iterations,
        float(params.gamma),
        float(params.rho),
        float(FALLBACK_VALUE),
    )


def fse_lite_extrapolate(image: ImageBuffer, mask: PixelMask, params: FseLiteParams = FseLiteParams()) -> ImageBuffer:
    """Block-wise sparse Fourier extrapolation.

    For each ``B x B`` block holding unknown pixels, a window grown by the
    support margin is modelled by greedy selection of DFT basis functions.
    Known pixels are weighted ``rho ** (Chebyshev distance to the block)``
    and unknown pixels get weight zero.  Each iteration picks the bin with
    the largest weighted inner product against the residual and adds
    ``gamma`` times its projection coefficient, together with the conjugate
    bin.  Unknown pixels of the block take the rounded model value.
    """
    _check_inputs(image, mask)
    if mask.missing_count == 0:
        return image
    values = _fse_values(image, mask, params)
    return ImageBuffer(np.where(mask.flags, image.pixels, _to_uint8(values)))


def fse_lite_trace(
    window: np.ndarray,
    weights: np.ndarray,
    block: tuple[int, int, int, int],
    iterations: int = 100,
    gamma: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the greedy model on one window and record the residual energy.

    ``block`` is ``(y0, y1, x0, x1)`` in window coordinates.  Returns the
    model on the block and the weighted residual energy before the first
    and after every iteration.
    """
    from ._fse_kernel import model_window

    y0, y1, x0, x1 = block
    energies = np.zeros(iterations + 1)
    model = model_window(
        np.ascontiguousarray(window, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        y0, y1, x0, x1, iterations, float(gamma), energies,
    )
    return model, energies


def fill_constant(image: ImageBuffer, mask: PixelMask, value: int = FALLBACK_VALUE) -> ImageBuffer:
    """Trivial baseline: every unknown pixel becomes ``value``."""
    _check_inputs(image, mask)
    return ImageBuffer(np.where(mask.flags, image.pixels, np.uint8(value)))


class UnknownAlgorithmError(KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


class Extrapolator:
    """A named algorithm bound to its parameters."""

    name: ClassVar[str]
    params_type: ClassVar[type]

    def __init__(self, params: Any = None) -> None:
        self.params = params if params is not None else self.params_type()

    @classmethod
    def from_dict(cls, values: Mapping[str, Any] | None) -> "Extrapolator":
        values = dict(values or {})
        allowed = {f.name for f in fields(cls.params_type)}
        extra = set(values) - allowed
        if extra:
            raise ValueError(f"unknown parameters for {cls.name}: {sorted(extra)}")
        return cls(cls.params_type(**values))

    def params_dict(self) -> dict[str, Any]:
        return asdict(self.params)

    @property
    def influence_radius(self) -> int | None:
        """Upper bound on spatial dependency; ``None`` means unbounded."""
        return None

    def extrapolate(self, image: ImageBuffer, mask: PixelMask) -> ImageBuffer:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params!r})"


class DiffusionExtrapolator(Extrapolator):
    name = "diffusion"
    params_type = DiffusionParams

    @property
    def influence_radius(self) -> int:
        return self.params.iterations

    def extrapolate(self, image: ImageBuffer, mask: PixelMask) -> ImageBuffer:
        return diffusion_extrapolate(image, mask, self.params)


class FseLiteExtrapolator(Extrapolator):
    name = "fse-lite"
    params_type = FseLiteParams

    @property
    def influence_radius(self) -> int:
        return self.params.block_size + self.params.support_margin

    def extrapolate(self, image: ImageBuffer, mask: PixelMask) -> ImageBuffer:
        return fse_lite_extrapolate(image, mask, self.params)


ALGORITHMS: dict[str, type[Extrapolator]] = {
    cls.name: cls for cls in (DiffusionExtrapolator, FseLiteExtrapolator)
}


def registry_lookup(name: str, params: Mapping[str, Any] | None = None) -> Extrapolator:
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise UnknownAlgorithmError(
            f"unknown algorithm {name!r}; available: {', '.join(sorted(ALGORITHMS))}"
        ) from None
    return cls.from_dict(params)
