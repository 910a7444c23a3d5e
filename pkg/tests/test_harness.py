import hashlib
import math

import numpy as np
import pytest

from parex.harness import (
    COLUMNS,
    SCENE_VERSION,
    SCHEMA_VERSION,
    BenchReport,
    apply_mask,
    bench_overlap,
    bench_quality_delta,
    bench_speedup,
    bench_tiling_time,
    standard_mask,
    standard_scene,
    time_call,
)

TIMING = {"plan_ns", "plan_us", "wall_us", "speedup"}


def stable(report):
    return [{k: v for k, v in row.items() if k not in TIMING} for row in report.rows]


@pytest.fixture(scope="module")
def small_job():
    truth = standard_scene(64, seed=3)
    return truth, standard_mask("mask2", 64, seed=3)


# golden digests of the default scene and mask; changing either needs a version bump
SCENE_SHA256 = "60a758b176ad0857aa058bc6f333a1eb47e47b32b27aaff14051f4d38f68d970"
MASK2_SHA256 = "1155fd98e65fce91cfe57293e1f70375ecd52c8cd7beb1827ad003ea9d2029b7"


def test_scene_is_versioned_and_seeded():
    a, b = standard_scene(64, 1), standard_scene(64, 1)
    assert a == b and a != standard_scene(64, 2)
    assert a.pixels.std() > 10 and 0 < a.pixels.min() and a.pixels.max() < 255
    assert SCENE_VERSION == 1
    assert hashlib.sha256(standard_scene().samples).hexdigest() == SCENE_SHA256
    assert hashlib.sha256(standard_mask("mask2").flags.tobytes()).hexdigest() == MASK2_SHA256


def test_standard_masks():
    m1, m2 = standard_mask("mask1", 128), standard_mask("mask2", 128)
    assert m1.missing_fraction == pytest.approx(0.14, abs=0.01)
    assert m2.missing_fraction == pytest.approx(0.62, abs=0.01)


def test_apply_mask_zeros_holes():
    truth = standard_scene(16)
    mask = standard_mask("mask2", 16)
    src = apply_mask(truth, mask)
    assert not src.pixels[~mask.flags].any()
    assert np.array_equal(src.pixels[mask.flags], truth.pixels[mask.flags])


def test_report_rejects_unknown_columns():
    with pytest.raises(KeyError):
        BenchReport().add(colour="red")


def test_csv_strict_roundtrip():
    report = BenchReport()
    report.add(experiment="x", tiles=3, psnr_db=math.inf, ssim=0.5, speedup=1.0)
    report.add(experiment="y", width=10)
    text = report.to_csv()
    assert text.splitlines()[0] == ",".join(COLUMNS)
    rows = BenchReport.read_csv(text)
    assert [r["experiment"] for r in rows] == ["x", "y"]
    assert rows[0]["psnr_db"] == "inf" and rows[0]["schema"] == str(SCHEMA_VERSION)
    assert float(rows[0]["ssim"]) == 0.5 and rows[1]["ssim"] == ""
    with pytest.raises(ValueError):
        BenchReport.read_csv(text.replace("schema", "version", 1))
    with pytest.raises(ValueError):
        BenchReport.read_csv(text + "1,2\n")


def test_time_call_is_median():
    calls = []
    assert time_call(lambda: calls.append(1), repeats=5, warmup=2) >= 0
    assert len(calls) == 7


def test_bench_tiling(small_job):
    report = bench_tiling_time(200, 100, 14, optimal_max=4, repeats=3)
    assert {r["strategy"] for r in report.rows} == {"proposed", "vertical", "optimal"}
    assert max(r["tiles"] for r in report.select(strategy="optimal")) == 4
    one = report.select(tiles=1)
    assert {r["boundary"] for r in one} == {0}
    for row in report.rows:
        assert row["plan_us"] == round(row["plan_ns"] / 1000)


def test_bench_overlap_and_reproducibility(small_job):
    truth, mask = small_job
    params = {"iterations": 6}
    a = bench_overlap(truth, mask, [0, 6, 64], 4, 2, "diffusion", params)
    b = bench_overlap(truth, mask, [0, 6, 64], 4, 2, "diffusion", params)
    assert stable(a) == stable(b)
    rows = a.rows
    assert [r["overlap"] for r in rows] == [0, 6, 64]
    # d >= K is exact; d large enough to cover the image is exact too
    assert rows[1]["psnr_db"] == rows[1]["ref_psnr_db"]
    assert rows[2]["delta_psnr_db"] == 0 and rows[2]["delta_ssim"] == 0
    assert rows[0]["overhead_pixels"] == 0 < rows[1]["overhead_pixels"]


def test_bench_quality_delta(small_job):
    truth, mask = small_job
    params = {"iterations": 4}
    row = bench_quality_delta(truth, mask, 6, 4, "diffusion", params).rows[0]
    assert row["experiment"] == "quality"
    assert row["delta_psnr_db"] == 0 and row["delta_ssim"] == 0
    single = bench_quality_delta(truth, mask, 1, 0, "fse-lite", {"model_iterations": 5}).rows[0]
    assert single["delta_psnr_db"] == 0


def test_bench_speedup(small_job):
    truth, mask = small_job
    report = bench_speedup(truth, mask, [2, 3], d=4, algo="diffusion", params={"iterations": 4})
    assert [r["tiles"] for r in report.rows] == [1, 2, 3]
    assert report.rows[0]["speedup"] == 1.0
    overhead = [r["overhead_pixels"] for r in report.rows]
    assert overhead == sorted(overhead) and overhead[0] < overhead[-1]
    assert len({r["psnr_db"] for r in report.rows}) == 1


def test_report_select_and_extend():
    a, b = BenchReport(), BenchReport()
    a.add(experiment="p", tiles=1)
    b.add(experiment="q", tiles=1)
    a.extend(b)
    assert len(a.select(tiles=1)) == 2 and len(a.select(experiment="q")) == 1
