import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_image, random_mask
from oracles import diffusion_reference, fse_image_reference, greedy_fourier_reference
from parex.extrapolation import (
    ALGORITHMS,
    DiffusionParams,
    FseLiteParams,
    UnknownAlgorithmError,
    diffusion_extrapolate,
    fill_constant,
    fse_lite_extrapolate,
    fse_lite_trace,
    registry_lookup,
)
from parex.image_io import ImageBuffer, PixelMask, gen_scatter_mask
from parex.metrics import psnr


def test_diffusion_three_pixels():
    img = ImageBuffer.from_samples(3, 1, [100, 0, 200])
    mask = PixelMask(np.array([[True, False, True]]))
    for k in (1, 5):
        assert diffusion_extrapolate(img, mask, DiffusionParams(k)).samples == bytes([100, 150, 200])


def test_diffusion_surrounded_pixel():
    img = ImageBuffer(np.full((3, 3), 77))
    flags = np.ones((3, 3), dtype=bool)
    flags[1, 1] = False
    assert diffusion_extrapolate(img, PixelMask(flags)).at(1, 1) == 77


def test_diffusion_unreached_gets_fallback():
    img = ImageBuffer(np.full((1, 10), 9))
    flags = np.zeros((1, 10), dtype=bool)
    flags[0, 0] = True
    out = diffusion_extrapolate(img, PixelMask(flags), DiffusionParams(3))
    assert list(out.pixels[0]) == [9, 9, 9, 9] + [128] * 6


def test_diffusion_rounds_half_up():
    img = ImageBuffer.from_samples(3, 1, [100, 0, 101])
    mask = PixelMask(np.array([[True, False, True]]))
    assert diffusion_extrapolate(img, mask, DiffusionParams(1)).at(1, 0) == 101


@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 6), st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_diffusion_matches_pixel_loop(w, h, k, seed):
    rng = np.random.default_rng(seed)
    img, mask = random_image(rng, w, h), random_mask(rng, w, h, missing=0.6)
    out = diffusion_extrapolate(img, mask, DiffusionParams(k))
    assert np.array_equal(out.pixels, diffusion_reference(img.pixels, mask.flags, k))


@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.data())
@settings(max_examples=40)
def test_diffusion_locality(k, seed, data):
    rng = np.random.default_rng(seed)
    w, h = 20, 18
    img, mask = random_image(rng, w, h), random_mask(rng, w, h, missing=0.5)
    px, py = data.draw(st.integers(0, w - 1)), data.draw(st.integers(0, h - 1))
    qx, qy = data.draw(st.integers(0, w - 1)), data.draw(st.integers(0, h - 1))
    if max(abs(px - qx), abs(py - qy)) <= k:
        return
    pixels = img.pixels.copy()
    pixels[qy, qx] ^= 0xFF
    flags = mask.flags.copy()
    flags[qy, qx] = not flags[qy, qx]
    params = DiffusionParams(k)
    a = diffusion_extrapolate(img, mask, params)
    b = diffusion_extrapolate(ImageBuffer(pixels), PixelMask(flags), params)
    assert a.at(px, py) == b.at(px, py)


@pytest.mark.parametrize(
    "fn",
    [
        lambda i, m: diffusion_extrapolate(i, m, DiffusionParams(4)),
        lambda i, m: fse_lite_extrapolate(i, m, FseLiteParams(model_iterations=10)),
        fill_constant,
    ],
)
def test_known_pixels_preserved_and_deterministic(fn, rng):
    img, mask = random_image(rng, 23, 17), random_mask(rng, 23, 17, missing=0.4)
    out = fn(img, mask)
    assert (out.width, out.height) == (23, 17)
    assert np.array_equal(out.pixels[mask.flags], img.pixels[mask.flags])
    assert out == fn(img, mask)


@pytest.mark.parametrize("fn", [diffusion_extrapolate, fse_lite_extrapolate])
def test_all_known_is_noop(fn, rng):
    img = random_image(rng, 12, 9)
    assert fn(img, PixelMask.all_known(12, 9)) == img


@pytest.mark.parametrize("fn", [diffusion_extrapolate, fse_lite_extrapolate])
def test_dimension_mismatch(fn, rng):
    with pytest.raises(ValueError):
        fn(random_image(rng, 5, 5), PixelMask.all_known(5, 4))


def test_fse_constant_image():
    img = ImageBuffer(np.full((24, 24), 173))
    mask = gen_scatter_mask(24, 24, 0.3, 2, 5)
    assert fse_lite_extrapolate(img, mask) == img


def test_fse_bin_aligned_sinusoid():
    # 20 px window (block 4 + margin 8 each side) holds two periods of 10 px
    x = np.arange(20)
    row = 128 + 60 * np.sin(2 * np.pi * x / 10)
    img = ImageBuffer(np.clip(np.floor(np.tile(row, (20, 1)) + 0.5), 0, 255))
    flags = np.ones((20, 20), dtype=bool)
    flags[8:12, 8:12] = False
    out = fse_lite_extrapolate(img, PixelMask(flags))
    err = np.abs(out.pixels.astype(int) - img.pixels.astype(int))
    assert err.max() <= 2


@given(st.integers(4, 22), st.integers(4, 22), st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_fse_matches_reference(w, h, seed):
    rng = np.random.default_rng(seed)
    img, mask = random_image(rng, w, h), random_mask(rng, w, h, missing=0.5)
    out = fse_lite_extrapolate(img, mask, FseLiteParams(model_iterations=12))
    assert np.array_equal(out.pixels, fse_image_reference(img.pixels, mask.flags, iterations=12))


def test_fse_trace_matches_reference(rng):
    f = rng.uniform(0, 255, (16, 14))
    weights = (rng.random((16, 14)) > 0.3) * 0.8 ** rng.integers(0, 6, (16, 14))
    model, energies = fse_lite_trace(f, weights, (6, 10, 5, 9), iterations=25)
    ref_model, ref_energies = greedy_fourier_reference(f, weights, 25, 0.5)
    np.testing.assert_allclose(model, ref_model[6:10, 5:9], atol=1e-6)
    np.testing.assert_allclose(energies, ref_energies, rtol=1e-9, atol=1e-6)


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 1.0))
@settings(max_examples=25)
def test_fse_energy_non_increasing(seed, gamma):
    rng = np.random.default_rng(seed)
    f = rng.uniform(0, 255, (20, 20))
    weights = (rng.random((20, 20)) > 0.4) * rng.uniform(0.1, 1, (20, 20))
    _, energies = fse_lite_trace(f, weights, (8, 12, 8, 12), iterations=40, gamma=gamma)
    assert np.all(np.diff(energies) <= 1e-9 * energies[0])


def bandlimited(size, seed):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    img = np.full((size, size), 128.0)
    for _ in range(2):
        fx, fy = rng.uniform(-0.08, 0.08, 2)
        img += rng.uniform(20, 40) * np.cos(2 * np.pi * (fx * xx + fy * yy) + rng.uniform(0, 6.3))
    return ImageBuffer(np.clip(np.floor(img + 0.5), 0, 255))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fse_quality_ordering(seed):
    truth = bandlimited(64, seed)
    mask = gen_scatter_mask(64, 64, 0.2, 1, seed)
    source = ImageBuffer(np.where(mask.flags, truth.pixels, 0))
    fse = psnr(fse_lite_extrapolate(source, mask), truth)
    flat = psnr(fill_constant(source, mask), truth)
    diff = psnr(diffusion_extrapolate(source, mask), truth)
    assert fse >= flat + 10
    assert fse > diff


def test_params_validation():
    with pytest.raises(ValueError):
        DiffusionParams(0)
    for bad in ({"block_size": 1}, {"gamma": 0.0}, {"gamma": 1.5}, {"rho": 1.0}, {"model_iterations": 0}, {"support_margin": -1}):
        with pytest.raises(ValueError):
            FseLiteParams(**bad)
    assert FseLiteParams().support_margin == 8
    assert FseLiteParams(block_size=3).support_margin == 6


def test_registry():
    assert set(ALGORITHMS) == {"diffusion", "fse-lite"}
    diffusion = registry_lookup("diffusion")
    assert diffusion.influence_radius == 32
    fse = registry_lookup("fse-lite")
    assert fse.params.block_size == 4
    assert fse.influence_radius == 12
    assert registry_lookup("diffusion", {"iterations": 5}).influence_radius == 5
    with pytest.raises(UnknownAlgorithmError, match="diffusion"):
        registry_lookup("bogus")
    with pytest.raises((KeyError, TypeError, ValueError)):
        registry_lookup("diffusion", {"iters": 3})
