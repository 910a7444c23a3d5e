import pytest
from hypothesis import assume, given, strategies as st

from oracles import brute_guillotine, proposed_rows_by_hand, raster_cover, shared_edge_length
from parex.tiling import (
    DegenerateTilingError,
    Rect,
    TileLayout,
    area_imbalance,
    interior_boundary,
    plan,
    plan_optimal,
    plan_proposed,
    plan_vertical,
    validate,
)


def rows_of(layout):
    rows = {}
    for t in layout.tiles:
        rows.setdefault(t.y, []).append(t)
    return [rows[y] for y in sorted(rows)]


def test_layout_1024x480_22():
    layout = plan_proposed(1024, 480, 22)
    rows = rows_of(layout)
    assert [len(r) for r in rows] == [8, 7, 7]
    assert [r[0].h for r in rows] == [178, 157, 145]
    assert [t.w for t in rows[0]] == [128] * 8
    assert [t.w for t in rows[1]] == [147, 147, 146, 146, 146, 146, 146]
    assert validate(layout) is None


def test_layout_1024x480_matches_hand_evaluation():
    rows = rows_of(plan_proposed(1024, 480, 22))
    expected = proposed_rows_by_hand(1024, 480, 22)
    assert [(len(r), r[0].h, [t.w for t in r]) for r in rows] == expected


def test_single_tile():
    assert plan_proposed(100, 100, 1).tiles == (Rect(0, 0, 100, 100),)


def test_two_by_two():
    layout = plan_proposed(600, 400, 4)
    assert layout.tiles == (Rect(0, 0, 300, 200), Rect(300, 0, 300, 200), Rect(0, 200, 300, 200), Rect(300, 200, 300, 200))


def test_portrait_is_transposed_landscape():
    land = plan_proposed(480, 1024, 22)
    assert validate(land) is None
    assert sorted(t.transposed() for t in land.tiles) == sorted(plan_proposed(1024, 480, 22).tiles)
    assert list(land.tiles) == sorted(land.tiles, key=lambda t: (t.y, t.x))


@pytest.mark.parametrize(
    "args, widths",
    [((100, 50, 4), [25, 25, 25, 25]), ((102, 50, 4), [26, 26, 25, 25]), ((5, 9, 5), [1] * 5)],
)
def test_vertical_examples(args, widths):
    layout = plan_vertical(*args)
    assert [t.w for t in layout.tiles] == widths
    assert all(t.h == args[1] and t.y == 0 for t in layout.tiles)


def test_optimal_examples():
    two = plan_optimal(100, 100, 2)
    assert sorted(two.tiles) == [Rect(0, 0, 50, 100), Rect(50, 0, 50, 100)]
    assert interior_boundary(two) == 100
    four = plan_optimal(100, 100, 4)
    assert sorted((t.w, t.h) for t in four.tiles) == [(50, 50)] * 4
    assert interior_boundary(four) == 200
    assert plan_optimal(37, 11, 1).tiles == (Rect(0, 0, 37, 11),)


def test_optimal_cap():
    with pytest.raises(ValueError):
        plan_optimal(100, 100, 13)


@pytest.mark.parametrize("w, h, n", [(7, 5, 3), (10, 10, 5), (9, 4, 6), (13, 6, 4), (6, 6, 7)])
def test_optimal_matches_brute_force(w, h, n):
    layout = plan_optimal(w, h, n)
    assert validate(layout) is None
    assert interior_boundary(layout) == brute_guillotine(w, h, n)


def test_boundary_examples():
    assert interior_boundary(plan_proposed(64, 64, 1)) == 0
    assert interior_boundary(plan_vertical(1024, 480, 22)) == 21 * 480
    assert interior_boundary(plan_proposed(1024, 480, 22)) == 5106


def test_imbalance_examples():
    assert area_imbalance(plan_proposed(600, 400, 4)) == 0
    assert area_imbalance(plan_vertical(102, 50, 4)) == pytest.approx(50 / 1275)
    assert area_imbalance(plan_proposed(1024, 480, 22)) <= 0.30


def test_vertical_one_equals_proposed_one():
    assert plan_vertical(300, 200, 1).tiles == plan_proposed(300, 200, 1).tiles


def _layout(tiles, w=4, h=4):
    return TileLayout(w, h, tuple(Rect(*t) for t in tiles), "manual", len(tiles))


def test_validate_reports_overlap():
    v = validate(_layout([(0, 0, 4, 2), (0, 0, 4, 2), (0, 2, 4, 2)]))
    assert v is not None and v.kind == "overlap" and (v.x, v.y) == (0, 0)


def test_validate_reports_gap():
    v = validate(_layout([(0, 0, 4, 2), (0, 2, 3, 2)]))
    assert v is not None and v.kind == "gap" and (v.x, v.y) == (3, 2)


def test_validate_reports_bounds():
    v = validate(_layout([(0, 0, 5, 4)]))
    assert v is not None and v.kind == "bounds"


def test_degenerate_errors():
    with pytest.raises(DegenerateTilingError):
        plan_proposed(3, 3, 10)
    with pytest.raises(DegenerateTilingError):
        plan_vertical(3, 3, 4)
    with pytest.raises(ValueError):
        plan_proposed(3, 3, 0)
    with pytest.raises(ValueError):
        plan("diagonal", 3, 3, 1)


def test_degenerate_error_names_row():
    # the row-height rule overshoots here, leaving the last row empty
    with pytest.raises(DegenerateTilingError, match="row"):
        plan_proposed(512, 512, 81)


dims = st.tuples(st.integers(1, 128), st.integers(1, 128)).flatmap(
    lambda wh: st.tuples(st.just(wh[0]), st.just(wh[1]), st.integers(1, min(wh[0] * wh[1], 40)))
)


@given(dims, st.sampled_from(["proposed", "vertical"]))
def test_exact_cover_or_documented_error(args, strategy):
    w, h, n = args
    try:
        layout = plan(strategy, w, h, n)
    except DegenerateTilingError:
        return
    assert validate(layout) is None
    assert raster_cover(w, h, layout.tiles)[1] is None
    assert len(layout) == n


@given(dims)
def test_boundary_matches_shared_edges(args):
    try:
        layout = plan_proposed(*args)
    except DegenerateTilingError:
        return
    assert interior_boundary(layout) == shared_edge_length(layout.tiles)


@given(dims)
def test_proposed_not_worse_than_stripes(args):
    w, h, n = args
    assume(w >= h and 2 <= n <= w)
    try:
        proposed = plan_proposed(w, h, n)
    except DegenerateTilingError:
        return
    assert interior_boundary(proposed) <= interior_boundary(plan_vertical(w, h, n))


@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 6))
def test_optimal_is_valid_and_lower_bound(w, h, n):
    assume(n <= w * h)
    best = plan_optimal(w, h, n)
    assert validate(best) is None
    try:
        proposed = plan_proposed(w, h, n)
    except DegenerateTilingError:
        return
    if w >= 2 * n and h >= 2 * n:
        assert interior_boundary(best) <= interior_boundary(proposed)
