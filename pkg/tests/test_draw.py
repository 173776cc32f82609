"""Draw tools: stencils, structure preservation, lambda stamping."""

import pytest

from conftest import draw_fig1, golden_source

from sketchlab.draw import (
    DrawRequest,
    draw_lambda,
    draw_shape,
    list_lambda_tools,
    seed_color,
)
from sketchlab.errors import UnknownLambda
from sketchlab.interp import evaluate
from sketchlab.parser import parse
from sketchlab.printer import unparse
from sketchlab.svg import render_svg


def test_rect_draw_matches_overview_stencil():
    p = draw_shape(parse("(blobs [])\n"), DrawRequest("rect", [(31, 100), (216, 269)], color_seed=33))
    expected = (
        "(def rect1\n"
        "  (let [left top right bot] [31 100 216 269]\n"
        "  (let bounds [left top right bot]\n"
        "  (let color 60\n"
        "    [ (rectangle color 'black' '0' 0 bounds) ]))))\n"
        "\n"
        "(blobs [ rect1 ])\n"
    )
    assert unparse(p) == expected


def test_fig1_reproduced_by_three_draws():
    assert unparse(draw_fig1()) == golden_source("fig1")


def test_append_keeps_simple_structure():
    p = draw_shape(parse("(blobs [])\n"), DrawRequest("rect", [(0, 0), (10, 10)], color_seed=1))
    p = draw_shape(p, DrawRequest("line", [(1, 1), (5, 5)], color_seed=2))
    assert [d.pattern.name for d in p.defs] == ["rect1", "line2"]
    assert [e.name for e in p.main.args[0].items] == ["rect1", "line2"]


def test_polygon_thaw_policy():
    """Boundary percentages stay plain; interior ones are thawed."""
    p = draw_shape(
        parse("(blobs [])\n"),
        DrawRequest("polygon", [(94, 263), (212.37, 246.8), (227, 123.68), (133.9, 101), (107.3, 151.22)], color_seed=0),
    )
    text = unparse(p)
    assert "[0 1]" in text            # extremes stay plain
    assert "[0.89? 0.90?]" in text    # interior points are hints
    assert "[1 0.14?]" in text


def test_output_growth_one_root_on_top():
    p = draw_fig1()
    before = evaluate(p)
    p2 = draw_shape(p, DrawRequest("oval", [(5, 5), (20, 25)], color_seed=4))
    after = evaluate(p2)
    assert len(after.roots) == len(before.roots) + 1
    assert after.roots[-1].tag == "ellipse"


def test_non_simple_program_wraps_with_addShapeToCanvas():
    p = parse("(let pad 5 (blobs []))\n")
    p2 = draw_shape(p, DrawRequest("rect", [(0, 0), (10, 10)], color_seed=1))
    assert "addShapeToCanvas" in unparse(p2)
    assert len(evaluate(p2).roots) == 1
    # drawing again still works on the wrapped form
    p3 = draw_shape(p2, DrawRequest("line", [(0, 0), (5, 5)], color_seed=2))
    assert len(evaluate(p3).roots) == 2


def test_stencil_determinism():
    req = DrawRequest("polygon", [(0, 0), (30, 60), (80, 10)], color_seed=12)
    a = draw_shape(parse("(blobs [])\n"), req)
    b = draw_shape(parse("(blobs [])\n"), req)
    assert unparse(a) == unparse(b)


def test_color_from_seed_range():
    for seed in range(0, 600, 37):
        assert 0 <= seed_color(seed) <= 500


def test_list_lambda_tools_fig3():
    p = parse(golden_source("fig3"))
    assert list_lambda_tools(p) == ["newGroup4"]


def test_list_lambda_tools_empty():
    assert list_lambda_tools(parse("(blobs [])\n")) == []


def test_prelude_functions_are_not_lambda_tools():
    # stretchyPolygon and friends live in the prelude, not the user file
    p = parse("(def f (λ (a [left top right bot]) [ ]))\n(blobs [])\n")
    assert list_lambda_tools(p) == ["f"]


def test_draw_lambda_replicates_latest_call():
    p = parse(golden_source("fig3"))
    p2 = draw_lambda(p, "newGroup4", (39, 227, 213, 317))
    entries = p2.main.args[0].items
    assert len(entries) == 2
    text = unparse(p2)
    assert "((newGroup4 5 202 60) [39 227 213 317])" in text


def test_two_stamps_have_independent_bounds():
    p = parse(golden_source("fig3"))
    p2 = draw_lambda(p, "newGroup4", (39, 227, 213, 317))
    p3 = draw_lambda(p2, "newGroup4", (69, 55, 160, 149))
    text = unparse(p3)
    assert "[39 227 213 317]" in text and "[69 55 160 149]" in text
    assert len(evaluate(p3).roots) == 3


def test_degenerate_stamp_normalized():
    p = parse(golden_source("fig3"))
    p2 = draw_lambda(p, "newGroup4", (50, 60, 50, 60))
    assert "[50 60 51 61]" in unparse(p2)


def test_unknown_lambda_rejected():
    with pytest.raises(UnknownLambda):
        draw_lambda(parse("(blobs [])\n"), "nope", (0, 0, 1, 1))


def test_draw_via_lambda_tool_request():
    p = parse(golden_source("fig3"))
    p2 = draw_shape(p, DrawRequest("lambda", [(10, 10), (60, 70)], fn_name="newGroup4"))
    assert "((newGroup4 5 202 60) [10 10 60 70])" in unparse(p2)
