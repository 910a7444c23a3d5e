"""Master and worker loops.

The master plans the layout, expands every tile by the overlap, sends all
ASSIGN frames (tile ``i`` to worker ``i mod n``) before waiting for any
reply, then crops and merges replies in whatever order they arrive.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from ..extrapolation import Extrapolator, registry_lookup
from ..image_io import ImageBuffer, PixelMask
from ..overlap import Canvas, crop_core, expand_layout, extract, overhead_pixels
from ..tiling import TileLayout, plan
from . import protocol
from .protocol import Assign, Error, ProtocolError, Result, Shutdown
from .transport import ConnectionLost, Transport, WorkerEndpoint

__all__ = [
    "NO_TILE",
    "MasterConfig",
    "TileStat",
    "RunStats",
    "RunAborted",
    "WorkerFailure",
    "DuplicateResultError",
    "run_master",
    "run_worker",
]

log = logging.getLogger(__name__)

# tile id used in ERROR replies that do not belong to any tile
NO_TILE = 0xFFFFFFFF


def _us(seconds: float) -> int:
    return int(round(seconds * 1e6))


@dataclass(frozen=True)
class MasterConfig:
    tiles: int
    overlap: int
    strategy: str = "proposed"
    algo: str = "fse-lite"
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class TileStat:
    tile_id: int
    worker: int
    assign_us: int  # dispatch time, relative to the start of the run
    duration_us: int = 0  # processing time measured on the worker
    halo_pixels: int = 0


@dataclass
class RunStats:
    layout: TileLayout
    tiles: list[TileStat]
    plan_us: int = 0
    distribute_us: int = 0
    compute_span_us: int = 0  # busiest worker's total processing time
    merge_us: int = 0
    total_us: int = 0
    overhead_pixels: int = 0


class RunAborted(Exception):
    def __init__(self, tile_id: int, reason: str) -> None:
        super().__init__(f"tile {tile_id}: {reason}")
        self.tile_id = tile_id
        self.reason = reason


class WorkerFailure(RunAborted):
    """A worker reported an ERROR or its connection dropped."""


class DuplicateResultError(ProtocolError):
    def __init__(self, tile_id: int) -> None:
        super().__init__(f"duplicate result for tile {tile_id}")
        self.tile_id = tile_id


def run_master(
    image: ImageBuffer,
    mask: PixelMask,
    config: MasterConfig,
    transport: Transport,
    timeout: float | None = None,
) -> tuple[ImageBuffer, RunStats]:
    """Run one tiled extrapolation over ``transport``.

    The transport is left open so a worker pool can serve several runs.
    After an abort, replies for the failed run may still be queued; close
    the transport rather than reusing it.
    """
    if not mask.matches(image):
        raise ValueError(f"mask is {mask.width}x{mask.height} but image is {image.width}x{image.height}")
    # resolve defaults here so every worker receives the complete parameter set
    algo = registry_lookup(config.algo, config.params)
    params = algo.params_dict()

    t0 = time.perf_counter()
    layout = plan(config.strategy, image.width, image.height, config.tiles)
    t_plan = time.perf_counter()
    tiles = expand_layout(layout, config.overlap)

    n = transport.n_workers
    stats = RunStats(layout, [], overhead_pixels=overhead_pixels(tiles))
    assigned: dict[int, list[int]] = {w: [] for w in range(n)}
    for i, et in enumerate(tiles):
        worker = i % n
        sub_image, sub_mask = extract(image, mask, et)
        frame = protocol.encode(Assign(i, et.halo, et.core, algo.name, params, sub_image, sub_mask))
        stats.tiles.append(TileStat(i, worker, _us(time.perf_counter() - t0), halo_pixels=et.halo.area))
        transport.send(worker, frame)
        assigned[worker].append(i)
    t_sent = time.perf_counter()

    canvas = Canvas(layout)
    done: set[int] = set()
    merge_s = 0.0
    while len(done) < len(tiles):
        try:
            worker, frame = transport.recv(timeout)
        except ConnectionLost as exc:
            pending = [i for i in assigned.get(exc.worker, []) if i not in done]
            raise WorkerFailure(pending[0] if pending else NO_TILE, str(exc)) from exc
        t_msg = time.perf_counter()
        msg = protocol.decode(frame)
        if isinstance(msg, Error):
            raise WorkerFailure(msg.tile_id, f"worker {worker} failed: {msg.text}")
        if not isinstance(msg, Result):
            raise ProtocolError(f"unexpected {type(msg).__name__} from worker {worker}")
        if msg.tile_id >= len(tiles):
            raise ProtocolError(f"result for unknown tile {msg.tile_id}")
        if msg.tile_id in done:
            raise DuplicateResultError(msg.tile_id)
        et = tiles[msg.tile_id]
        try:
            core = crop_core(msg.pixels, et)
        except ValueError as exc:
            raise ProtocolError(f"result for tile {msg.tile_id}: {exc}") from exc
        canvas.place(msg.tile_id, core)
        done.add(msg.tile_id)
        stats.tiles[msg.tile_id].duration_us = msg.elapsed_us
        merge_s += time.perf_counter() - t_msg

    output = canvas.result()
    t_end = time.perf_counter()
    stats.plan_us = _us(t_plan - t0)
    stats.distribute_us = _us(t_sent - t_plan)
    stats.merge_us = _us(merge_s)
    stats.total_us = _us(t_end - t0)
    busy: dict[int, int] = {}
    for ts in stats.tiles:
        busy[ts.worker] = busy.get(ts.worker, 0) + ts.duration_us
    stats.compute_span_us = max(busy.values())
    return output, stats


def run_worker(
    endpoint: WorkerEndpoint,
    registry: Callable[[str, dict], Extrapolator] = registry_lookup,
) -> None:
    """Serve ASSIGN frames until SHUTDOWN or end of stream.

    Algorithm failures and undecodable frames are answered with ERROR and
    the loop keeps going.
    """
    while True:
        frame = endpoint.recv()
        if frame is None:
            return
        try:
            msg = protocol.decode(frame)
        except ProtocolError as exc:
            endpoint.send(protocol.encode(Error(NO_TILE, f"undecodable frame: {exc}")))
            continue
        if isinstance(msg, Shutdown):
            return
        if not isinstance(msg, Assign):
            endpoint.send(protocol.encode(Error(NO_TILE, f"unexpected {type(msg).__name__} at worker")))
            continue
        try:
            algo = registry(msg.algo, msg.params)
            start = time.perf_counter()
            out = algo.extrapolate(msg.pixels, msg.mask)
            elapsed = _us(time.perf_counter() - start)
        except Exception as exc:  # report any algorithm failure to the master
            log.warning("tile %d failed: %s", msg.tile_id, exc)
            reply = Error(msg.tile_id, f"{type(exc).__name__}: {exc}")
        else:
            reply = Result(msg.tile_id, out, elapsed)
        endpoint.send(protocol.encode(reply))
