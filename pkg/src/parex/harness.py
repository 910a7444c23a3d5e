"""Benchmarks: planning time, overlap sweep, speedup and quality loss.

All experiments write rows with one fixed CSV header (see ``COLUMNS``);
columns that do not apply to an experiment are left empty.  Times are
integer microseconds.  Everything except the timing columns is a pure
function of the inputs and seeds.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import IO, Any, Callable, Iterable, Sequence

import numpy as np

from .distribution import MasterConfig, local_transport, run_master
from .extrapolation import registry_lookup
from .image_io import ImageBuffer, PixelMask, gen_scatter_mask
from .metrics import psnr, ssim
from .tiling import DegenerateTilingError, area_imbalance, interior_boundary, plan

__all__ = [
    "SCHEMA_VERSION",
    "SCENE_VERSION",
    "COLUMNS",
    "BenchReport",
    "standard_scene",
    "standard_mask",
    "apply_mask",
    "time_call",
    "bench_tiling_time",
    "bench_overlap",
    "bench_speedup",
    "bench_quality_delta",
]

SCHEMA_VERSION = 1
SCENE_VERSION = 1

COLUMNS = (
    "schema",
    "experiment",
    "strategy",
    "algo",
    "width",
    "height",
    "tiles",
    "workers",
    "overlap",
    "plan_ns",
    "plan_us",
    "wall_us",
    "speedup",
    "psnr_db",
    "ssim",
    "ref_psnr_db",
    "ref_ssim",
    "delta_psnr_db",
    "delta_ssim",
    "overhead_pixels",
    "boundary",
    "imbalance",
)

# Scatter-mask analogues of the two evaluation masks (14 % and 62 % missing).
MASK_FRACTIONS = {"mask1": 0.14, "mask2": 0.62}
MASK_BLOCK = 4


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


@dataclass
class BenchReport:
    rows: list[dict[str, Any]] = field(default_factory=list)

    def add(self, **values: Any) -> dict[str, Any]:
        unknown = set(values) - set(COLUMNS)
        if unknown:
            raise KeyError(f"unknown report columns: {sorted(unknown)}")
        row = {c: values.get(c) for c in COLUMNS}
        row["schema"] = SCHEMA_VERSION
        self.rows.append(row)
        return row

    def extend(self, other: "BenchReport") -> None:
        self.rows.extend(other.rows)

    def select(self, **where: Any) -> list[dict[str, Any]]:
        return [r for r in self.rows if all(r[k] == v for k, v in where.items())]

    def write_csv(self, out: IO[str]) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in COLUMNS])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @staticmethod
    def read_csv(text: str) -> list[dict[str, str]]:
        """Strict reader: the header must match ``COLUMNS`` exactly."""
        reader = csv.reader(io.StringIO(text), strict=True)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for line_no, rec in enumerate(reader, start=2):
            if len(rec) != len(COLUMNS):
                raise ValueError(f"line {line_no}: {len(rec)} fields, expected {len(COLUMNS)}")
            rows.append(dict(zip(COLUMNS, rec)))
        return rows


def standard_scene(size: int = 512, seed: int = 0) -> ImageBuffer:
    """Versioned synthetic test image: three plane waves plus a smooth ramp.

    Draw order from ``default_rng(seed)``: for each wave period, angle,
    phase, amplitude; then ramp angle and ramp amplitude.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.full((size, size), 128.0)
    for _ in range(3):
        period = rng.uniform(12.0, 64.0)
        angle = rng.uniform(0.0, np.pi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        amp = rng.uniform(15.0, 30.0)
        proj = xx * np.cos(angle) + yy * np.sin(angle)
        img += amp * np.sin(2.0 * np.pi * proj / period + phase)
    ramp_angle = rng.uniform(0.0, 2.0 * np.pi)
    ramp_amp = rng.uniform(10.0, 25.0)
    u = (xx * np.cos(ramp_angle) + yy * np.sin(ramp_angle)) / size
    img += ramp_amp * (u - u.mean())
    return ImageBuffer(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8))


def standard_mask(name: str, size: int = 512, seed: int = 0) -> PixelMask:
    return gen_scatter_mask(size, size, MASK_FRACTIONS[name], MASK_BLOCK, seed)


def apply_mask(image: ImageBuffer, mask: PixelMask) -> ImageBuffer:
    """Zero the unknown pixels so no algorithm can peek at ground truth."""
    return ImageBuffer(np.where(mask.flags, image.pixels, 0).astype(np.uint8))


def time_call(fn: Callable[[], Any], repeats: int = 11, warmup: int = 1) -> int:
    """Median wall time of ``fn`` in nanoseconds."""
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeats):
        t = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t)
    return int(statistics.median(samples))


def bench_tiling_time(
    width: int,
    height: int,
    n_max: int,
    optimal_max: int = 12,
    repeats: int = 11,
    strategies: Sequence[str] = ("proposed", "vertical", "optimal"),
) -> BenchReport:
    report = BenchReport()
    for n in range(1, n_max + 1):
        for strategy in strategies:
            if strategy == "optimal" and n > optimal_max:
                continue
            try:
                layout = plan(strategy, width, height, n)
            except DegenerateTilingError:
                continue
            ns = time_call(lambda: plan(strategy, width, height, n), repeats=repeats)
            report.add(
                experiment="tiling",
                strategy=strategy,
                width=width,
                height=height,
                tiles=n,
                plan_ns=ns,
                plan_us=int(round(ns / 1000)),
                boundary=interior_boundary(layout),
                imbalance=area_imbalance(layout),
            )
    return report


def _whole(ground_truth: ImageBuffer, mask: PixelMask, algo: str, params: dict | None):
    return registry_lookup(algo, params).extrapolate(apply_mask(ground_truth, mask), mask)


def bench_overlap(
    ground_truth: ImageBuffer,
    mask: PixelMask,
    d_list: Iterable[int],
    tiles: int,
    workers: int,
    algo: str = "fse-lite",
    params: dict | None = None,
    strategy: str = "proposed",
) -> BenchReport:
    """PSNR against ground truth for every overlap width in ``d_list``."""
    source = apply_mask(ground_truth, mask)
    reference = _whole(ground_truth, mask, algo, params)
    ref_psnr, ref_ssim = psnr(reference, ground_truth), ssim(reference, ground_truth)
    report = BenchReport()
    config = dict(tiles=tiles, strategy=strategy, algo=algo, params=dict(params or {}))
    with local_transport(workers) as transport:
        for d in d_list:
            out, stats = run_master(source, mask, MasterConfig(overlap=d, **config), transport)
            p, s = psnr(out, ground_truth), ssim(out, ground_truth)
            report.add(
                experiment="overlap",
                strategy=strategy,
                algo=algo,
                width=ground_truth.width,
                height=ground_truth.height,
                tiles=tiles,
                workers=workers,
                overlap=d,
                plan_us=stats.plan_us,
                wall_us=stats.total_us,
                psnr_db=p,
                ssim=s,
                ref_psnr_db=ref_psnr,
                ref_ssim=ref_ssim,
                delta_psnr_db=p - ref_psnr,
                delta_ssim=s - ref_ssim,
                overhead_pixels=stats.overhead_pixels,
                boundary=interior_boundary(stats.layout),
            )
    return report


def bench_speedup(
    ground_truth: ImageBuffer,
    mask: PixelMask,
    n_list: Iterable[int],
    d: int = 32,
    algo: str = "fse-lite",
    params: dict | None = None,
    strategy: str = "proposed",
    repeats: int = 1,
) -> BenchReport:
    """Wall time with ``n`` tiles on ``n`` local workers, relative to ``n = 1``.

    Worker start-up is outside the timed region; the median over
    ``repeats`` runs of the master is reported.
    """
    source = apply_mask(ground_truth, mask)
    n_values = list(n_list)
    if 1 not in n_values:
        n_values.insert(0, 1)
    times: dict[int, int] = {}
    rows = []
    for n in n_values:
        config = MasterConfig(tiles=n, overlap=d, strategy=strategy, algo=algo, params=dict(params or {}))
        walls, last = [], None
        with local_transport(n) as transport:
            for _ in range(max(1, repeats)):
                out, stats = run_master(source, mask, config, transport)
                walls.append(stats.total_us)
                last = (out, stats)
        times[n] = int(statistics.median(walls))
        rows.append((n, last))
    report = BenchReport()
    for n, (out, stats) in rows:
        report.add(
            experiment="speedup",
            strategy=strategy,
            algo=algo,
            width=ground_truth.width,
            height=ground_truth.height,
            tiles=n,
            workers=n,
            overlap=d,
            plan_us=stats.plan_us,
            wall_us=times[n],
            speedup=times[1] / times[n],
            psnr_db=psnr(out, ground_truth),
            overhead_pixels=stats.overhead_pixels,
            boundary=interior_boundary(stats.layout),
        )
    return report


def bench_quality_delta(
    ground_truth: ImageBuffer,
    mask: PixelMask,
    tiles: int,
    d: int,
    algo: str = "fse-lite",
    params: dict | None = None,
    strategy: str = "proposed",
    workers: int | None = None,
) -> BenchReport:
    """Quality of the tiled run minus quality of the whole-image run."""
    report = bench_overlap(
        ground_truth, mask, [d], tiles, workers or min(tiles, 4), algo, params, strategy
    )
    for row in report.rows:
        row["experiment"] = "quality"
    return report
