"""Command line interface.

Masks are PGM files where black (0) marks pixels to extrapolate and any
other value marks known pixels.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import harness
from .distribution import (
    MasterConfig,
    ProtocolError,
    RunAborted,
    TransportError,
    connect_worker,
    local_transport,
    run_master,
    run_worker,
    tcp_transport,
)
from .extrapolation import ALGORITHMS, UnknownAlgorithmError
from .image_io import (
    PgmError,
    gen_scatter_mask,
    mask_from_pgm,
    mask_to_pgm,
    read_pgm,
    write_pgm,
)
from .metrics import psnr, ssim
from .tiling import STRATEGIES, DegenerateTilingError, area_imbalance, interior_boundary, plan

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4
EXIT_DEGENERATE = 5
EXIT_WORKER = 6

log = logging.getLogger("parex")


def _address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected host:port, got {text!r}")
    return host or "0.0.0.0", int(port)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_algo_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", default="fse-lite", choices=sorted(ALGORITHMS))
    p.add_argument("--diff-iters", type=int, help="diffusion: Jacobi iterations (default 32)")
    p.add_argument("--fse-block", type=int, help="fse-lite: block size (default 4)")
    p.add_argument("--fse-margin", type=int, help="fse-lite: support margin (default 2 x block)")
    p.add_argument("--fse-iters", type=int, help="fse-lite: model iterations (default 100)")
    p.add_argument("--fse-gamma", type=float, help="fse-lite: coefficient step (default 0.5)")
    p.add_argument("--fse-rho", type=float, help="fse-lite: weight decay per pixel (default 0.8)")


def _algo_params(args: argparse.Namespace) -> dict:
    if args.algo == "diffusion":
        pairs = {"iterations": args.diff_iters}
    else:
        pairs = {
            "block_size": args.fse_block,
            "support_margin": args.fse_margin,
            "model_iterations": args.fse_iters,
            "gamma": args.fse_gamma,
            "rho": args.fse_rho,
        }
    return {k: v for k, v in pairs.items() if v is not None}


def _scene_inputs(args: argparse.Namespace):
    if args.image:
        truth = read_pgm(Path(args.image).read_bytes())
        if args.mask:
            mask = mask_from_pgm(Path(args.mask).read_bytes())
        else:
            mask = gen_scatter_mask(truth.width, truth.height, harness.MASK_FRACTIONS[args.mask_name], harness.MASK_BLOCK, args.seed)
    else:
        truth = harness.standard_scene(args.size, args.seed)
        mask = harness.standard_mask(args.mask_name, args.size, args.seed)
    return truth, mask


def _emit_report(report: harness.BenchReport, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            report.write_csv(fh)
    else:
        report.write_csv(sys.stdout)


def cmd_tile_plan(args: argparse.Namespace) -> int:
    t = time.perf_counter()
    layout = plan(args.strategy, args.width, args.height, args.tiles)
    micros = int(round((time.perf_counter() - t) * 1e6))
    print("index,x,y,w,h")
    for i, r in enumerate(layout.tiles):
        print(f"{i},{r.x},{r.y},{r.w},{r.h}")
    print("boundary,imbalance,plan_micros")
    print(f"{interior_boundary(layout)},{area_imbalance(layout)!r},{micros}")
    return EXIT_OK


def cmd_extrapolate(args: argparse.Namespace) -> int:
    image = read_pgm(Path(args.input).read_bytes())
    mask = mask_from_pgm(Path(args.mask).read_bytes())
    config = MasterConfig(args.tiles, args.overlap, args.tiling, args.algo, _algo_params(args))
    if args.transport == "tcp":
        if args.listen is None:
            raise SystemExit("--transport tcp needs --listen host:port")
        host, port = args.listen
        n = args.expect_workers or args.workers
        log.info("waiting for %d workers on %s:%d", n, host, port)
        transport = tcp_transport(host, port, n, accept_timeout=args.accept_timeout)
    else:
        transport = local_transport(args.workers)
    with transport:
        out, stats = run_master(image, mask, config, transport)
    Path(args.output).write_bytes(write_pgm(out))
    if args.stats:
        print("tiles,workers,overlap,plan_us,distribute_us,compute_span_us,merge_us,total_us,overhead_pixels")
        print(
            f"{len(stats.tiles)},{transport.n_workers},{args.overlap},{stats.plan_us},{stats.distribute_us},"
            f"{stats.compute_span_us},{stats.merge_us},{stats.total_us},{stats.overhead_pixels}"
        )
    return EXIT_OK


def cmd_worker(args: argparse.Namespace) -> int:
    host, port = args.connect
    endpoint = connect_worker(host, port, timeout=args.timeout)
    try:
        run_worker(endpoint)
    finally:
        endpoint.close()
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    a = read_pgm(Path(args.a).read_bytes())
    b = read_pgm(Path(args.b).read_bytes())
    region = None
    if args.metric_region == "missing":
        if not args.mask:
            raise SystemExit("--metric-region missing needs --mask")
        region = mask_from_pgm(Path(args.mask).read_bytes())
    print("psnr_db,ssim")
    print(f"{psnr(a, b, region)!r},{ssim(a, b)!r}")
    return EXIT_OK


def cmd_gen_scene(args: argparse.Namespace) -> int:
    Path(args.out).write_bytes(write_pgm(harness.standard_scene(args.size, args.seed)))
    return EXIT_OK


def cmd_gen_mask(args: argparse.Namespace) -> int:
    mask = gen_scatter_mask(args.width, args.height, args.fraction, args.block, args.seed)
    Path(args.out).write_bytes(mask_to_pgm(mask))
    return EXIT_OK


def cmd_bench_tiling(args: argparse.Namespace) -> int:
    _emit_report(harness.bench_tiling_time(args.width, args.height, args.max_tiles, args.optimal_max, args.repeats), args.out)
    return EXIT_OK


def cmd_bench_overlap(args: argparse.Namespace) -> int:
    truth, mask = _scene_inputs(args)
    report = harness.bench_overlap(truth, mask, args.overlaps, args.tiles, args.workers, args.algo, _algo_params(args), args.tiling)
    _emit_report(report, args.out)
    return EXIT_OK


def cmd_bench_speedup(args: argparse.Namespace) -> int:
    truth, mask = _scene_inputs(args)
    report = harness.bench_speedup(truth, mask, args.nodes, args.overlap, args.algo, _algo_params(args), args.tiling, args.repeats)
    _emit_report(report, args.out)
    return EXIT_OK


def cmd_bench_quality(args: argparse.Namespace) -> int:
    truth, mask = _scene_inputs(args)
    report = harness.BenchReport()
    for n in args.tiles:
        report.extend(harness.bench_quality_delta(truth, mask, n, args.overlap, args.algo, _algo_params(args), args.tiling, args.workers))
    _emit_report(report, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parex", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tile-plan", help="print a tile layout as CSV")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--tiles", type=int, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="proposed")
    p.set_defaults(func=cmd_tile_plan)

    p = sub.add_parser("extrapolate", help="tiled extrapolation of a PGM image (mask: 0 = unknown)")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True, help="PGM mask; black (0) pixels are extrapolated")
    p.add_argument("--output", required=True)
    p.add_argument("--tiles", type=int, default=4)
    p.add_argument("--overlap", type=int, default=32)
    p.add_argument("--tiling", choices=STRATEGIES, default="proposed")
    p.add_argument("--transport", choices=("local", "tcp"), default="local")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--listen", type=_address, help="tcp: address to listen on")
    p.add_argument("--expect-workers", type=int, help="tcp: number of workers to wait for")
    p.add_argument("--accept-timeout", type=float, default=120.0)
    p.add_argument("--stats", action="store_true", help="print run statistics as CSV")
    _add_algo_flags(p)
    p.set_defaults(func=cmd_extrapolate)

    p = sub.add_parser("worker", help="serve tiles for a master over TCP")
    p.add_argument("--connect", type=_address, required=True)
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=cmd_worker)

    p = sub.add_parser("metrics", help="print PSNR and SSIM of two PGM images")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--metric-region", choices=("all", "missing"), default="all")
    p.add_argument("--mask", help="mask selecting the missing region")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("gen-scene", help="write the synthetic benchmark scene")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("gen-mask", help="write a random block-scatter mask")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--block", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_mask)

    def bench(name: str, help_: str, func) -> argparse.ArgumentParser:
        b = sub.add_parser(name, help=help_)
        b.add_argument("--out", help="CSV output path (default stdout)")
        b.add_argument("--seed", type=int, default=0)
        b.set_defaults(func=func)
        return b

    def scene_flags(b: argparse.ArgumentParser) -> None:
        b.add_argument("--image", help="ground-truth PGM (default: synthetic scene)")
        b.add_argument("--mask", help="mask PGM (default: scatter mask)")
        b.add_argument("--mask-name", choices=sorted(harness.MASK_FRACTIONS), default="mask2")
        b.add_argument("--size", type=int, default=512)
        b.add_argument("--tiling", choices=STRATEGIES, default="proposed")
        _add_algo_flags(b)

    p = bench("bench-tiling", "time the tiling planners", cmd_bench_tiling)
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--max-tiles", type=int, default=32)
    p.add_argument("--optimal-max", type=int, default=12)
    p.add_argument("--repeats", type=int, default=11)

    p = bench("bench-overlap", "PSNR versus overlap width", cmd_bench_overlap)
    scene_flags(p)
    p.add_argument("--overlaps", type=_int_list, default=[0, 1, 2, 4, 8, 16, 32, 64])
    p.add_argument("--tiles", type=int, default=16)
    p.add_argument("--workers", type=int, default=4)

    p = bench("bench-speedup", "speedup versus number of workers", cmd_bench_speedup)
    scene_flags(p)
    p.add_argument("--nodes", type=_int_list, default=[1, 2, 4])
    p.add_argument("--overlap", type=int, default=32)
    p.add_argument("--repeats", type=int, default=1)

    p = bench("bench-quality", "quality loss of tiled versus whole-image runs", cmd_bench_quality)
    scene_flags(p)
    p.add_argument("--tiles", type=_int_list, default=[4, 16])
    p.add_argument("--overlap", type=int, default=32)
    p.add_argument("--workers", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DegenerateTilingError as exc:
        print(f"parex: degenerate tiling: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ProtocolError, TransportError) as exc:
        print(f"parex: protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except RunAborted as exc:
        print(f"parex: run aborted: {exc}", file=sys.stderr)
        return EXIT_WORKER
    except (OSError, PgmError) as exc:
        print(f"parex: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, UnknownAlgorithmError) as exc:
        print(f"parex: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
