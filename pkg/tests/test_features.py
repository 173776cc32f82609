"""Feature registry: catalog, coverage, and widget geometry."""

import pytest

from conftest import CORPUS_FILES

from sketchlab.features import (
    axis_of,
    feature_geometry,
    features_of,
    find_feature,
    widgets_of,
)
from sketchlab.interp import NumVal, evaluate_full, fold_trace, trace_locs
from sketchlab.parser import parse


def _load(path):
    p = parse(open(path, encoding="utf-8").read())
    canvas, env = evaluate_full(p)
    return p, canvas, env


def _fig1():
    return _load("tests/golden/fig1.little")


def test_rect_center_is_derived():
    p, c, env = _fig1()
    fs = features_of(p, c, env)
    boxcx = find_feature(fs, "rect1/boxCX")
    assert boxcx.kind == "derived"
    assert boxcx.value == pytest.approx((31 + 216) / 2)  # 123.5


def test_line_primitives():
    p, c, env = _fig1()
    fs = features_of(p, c, env)
    assert find_feature(fs, "line2/x1").value == 81
    assert find_feature(fs, "line2/y1").value == 76
    assert find_feature(fs, "line2/x1").kind == "primitive"


def test_empty_canvas_has_no_features():
    p = parse("(blobs [])\n")
    canvas, env = evaluate_full(p)
    assert features_of(p, canvas, env) == []


@pytest.mark.parametrize("path", CORPUS_FILES)
def test_equation_fidelity(path):
    p, c, env = _load(path)
    for f in features_of(p, c, env):
        folded = fold_trace(f.trace, c.loc_values)
        assert abs(folded - f.value) <= 1e-9 * max(1.0, abs(f.value)), f.id


@pytest.mark.parametrize("path", CORPUS_FILES)
def test_primitive_coverage(path):
    """Every numeric SVG attribute of every node is exactly one primitive."""
    p, c, env = _load(path)
    fs = features_of(p, c, env)
    prim_ids = [f.id for f in fs if f.kind == "primitive"]
    assert len(prim_ids) == len(set(prim_ids))

    count = 0

    def count_numeric(value):
        nonlocal count
        if isinstance(value, NumVal):
            count += 1
        elif isinstance(value, list):
            for v in value:
                count_numeric(v)

    def walk(node):
        for value in node.attrs.values():
            count_numeric(value)
        for child in node.children:
            walk(child)

    for root in c.roots:
        walk(root)
    assert count == len(prim_ids)


@pytest.mark.parametrize("path", CORPUS_FILES)
def test_derived_features_reference_own_shape(path):
    p, c, env = _load(path)
    fs = features_of(p, c, env)
    by_shape: dict[str, set[int]] = {}
    for f in fs:
        if f.kind == "primitive":
            by_shape.setdefault(f.shape, set()).update(trace_locs(f.trace))
    for f in fs:
        if f.kind == "derived":
            assert set(trace_locs(f.trace)) <= by_shape[f.shape], f.id


def test_rect_widget_catalog():
    p, c, env = _fig1()
    widgets = [w for w in widgets_of(p, c, env) if w.shape == "rect1"]
    kinds = {}
    for w in widgets:
        kinds.setdefault(w.kind, []).append(w)
    assert len(kinds["crosshair"]) == 9
    assert len(kinds["segment"]) == 2
    assert len(kinds["slider"]) == 1


def test_center_crosshair_geometry():
    p, c, env = _fig1()
    fs = features_of(p, c, env)
    geo = feature_geometry(find_feature(fs, "rect1/boxCX"), fs)
    assert geo["kind"] == "crosshair"
    assert (geo["x"], geo["y"]) == (pytest.approx(123.5), pytest.approx(184.5))


def test_width_segment_spans_mid_height():
    p, c, env = _fig1()
    fs = features_of(p, c, env)
    geo = feature_geometry(find_feature(fs, "rect1/width"), fs)
    assert geo["kind"] == "segment"
    assert (geo["x1"], geo["y1"]) == (31, pytest.approx(184.5))
    assert (geo["x2"], geo["y2"]) == (216, pytest.approx(184.5))


def test_color_slider_zone():
    p, c, env = _fig1()
    widgets = widgets_of(p, c, env)
    sliders = [w for w in widgets if w.kind == "slider" and w.shape == "rect1"]
    assert sliders[0].features == ["rect1/color"]
    zone = sliders[0].geometry
    assert zone["y"] < 100  # stacked above the shape's top edge


def test_polygon_vertex_features():
    p, c, env = _load("tests/corpus/polygon.little")
    fs = features_of(p, c, env)
    v1x = find_feature(fs, "polygon1/point:1:x")
    assert v1x.axis == "x"
    assert v1x.value == pytest.approx(94 + 0.89 * 133)  # 212.37
    # the surrounding bounds record is selectable too
    assert find_feature(fs, "polygon1/left").value == 94


def test_axis_classification():
    assert axis_of("left") == "x"
    assert axis_of("boxCY") == "y"
    assert axis_of("point:3:x") == "x"
    assert axis_of("width") == "scalar"
    assert axis_of("color") == "scalar"
