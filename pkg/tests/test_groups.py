"""Group, Abstract, Duplicate, Merge."""

import pytest

from conftest import golden_source

from sketchlab.errors import EmptySelection, NotStructurallyEquivalent
from sketchlab.groups import abstract, duplicate, group, merge
from sketchlab.interp import evaluate, evaluate_full
from sketchlab.livesync import apply_drag
from sketchlab.parser import parse
from sketchlab.printer import unparse
from sketchlab.svg import flatten_groups, render_svg
from sketchlab.syntax import Lam, ast_equal, literals


def test_group_overview_matches_fig3_structure():
    p = parse(golden_source("fig2"))
    g = group(p, [0, 1, 2])
    text = unparse(g)
    assert "(def newGroup4" in text
    assert "(def [left top right bot] [31 100 216 269])" in text
    assert "(def bounds [left top right bot])" in text
    assert "[ (group bounds (concat [ rect1 line2 line3 ])) ]" in text
    assert "(blobs [ newGroup4 ])" in text
    # the lifted constants dissolved into direct bounds references
    assert "rect1_left" not in text


def test_group_preserves_geometry():
    p = parse(golden_source("fig2"))
    before = render_svg(evaluate(p))
    after = render_svg(evaluate(group(p, [0, 1, 2])))
    assert flatten_groups(before) == flatten_groups(after)


def test_group_rewrites_inner_bounds_as_percentages():
    p = parse(open("tests/corpus/garden.little", encoding="utf-8").read())
    g = group(p, [0, 1, 2])
    text = unparse(g)
    assert "scaleBetween" in text
    assert "?" in text  # thawed percentages


def test_group_percentage_correctness():
    """scaleBetween(lo, hi, pct) reproduces each original coordinate."""
    src = open("tests/corpus/garden.little", encoding="utf-8").read()
    p = parse(src)
    before = evaluate(p)
    originals = [n.attrs["bounds"] for n in before.roots]
    g = group(p, [0, 1, 2])
    after = evaluate(g)
    inner = after.roots[0].children  # children of the group's g node
    k = 0
    for node in inner:
        if node.tag != "g":
            continue
        for i in range(4):
            assert node.attrs["bounds"][i].value == pytest.approx(
                originals[k][i].value, abs=1e-6
            )
        k += 1
    assert k == 3


def test_group_requires_two_blobs():
    p = parse(golden_source("fig2"))
    with pytest.raises(EmptySelection):
        group(p, [1])


def test_abstract_seven_design_parameters():
    p = parse(golden_source("fig3"))
    fn = p.defs[0].bound
    assert isinstance(fn, Lam)
    names = []
    for param in fn.params[:-1]:
        names.append(param.name)
    bounds = fn.params[-1]
    assert names == ["line2_width", "line2_color", "color"]
    assert [q.name for q in bounds.items] == ["left", "top", "right", "bot"]
    # 3 scalars + 4 bounds entries = seven design parameters
    assert len(names) + len(bounds.items) == 7


def test_abstract_preserves_output():
    p = parse(golden_source("fig2"))
    g = group(p, [0, 1, 2])
    before = render_svg(evaluate(g))
    res = abstract(g, 0)
    assert render_svg(evaluate(res.program)) == before


def test_abstract_bounds_only():
    src = (
        "(def box1\n"
        "  (let [left top right bot] [1 2 31 42]\n"
        "  (let bounds [left top right bot]\n"
        "    [ (rectangle 77! 'black' '0' 0 bounds) ])))\n"
        "\n(blobs [ box1 ])\n"
    )
    p = parse(src)
    res = abstract(p, 0)
    fn = res.program.defs[0].bound
    assert isinstance(fn, Lam) and len(fn.params) == 1  # bounds only
    assert "(box1 [1 2 31 42])" in unparse(res.program)


def test_abstract_without_bounds_pattern():
    src = (
        "(def wire1\n"
        "  (let [x1 y1 x2 y2] [1 2 31 42]\n"
        "  (let [color width] [99 3]\n"
        "    [ (line color width x1 y1 x2 y2) ])))\n"
        "\n(blobs [ wire1 ])\n"
    )
    p = parse(src)
    res = abstract(p, 0)
    assert not res.has_bounds
    fn = res.program.defs[0].bound
    assert [q.name for q in fn.params] == ["x1", "y1", "x2", "y2", "color", "width"]
    assert render_svg(evaluate(res.program)) == render_svg(evaluate(p))


def test_abstract_round_trip_structure(fig2_program=None):
    """Substituting the call arguments back reproduces the grouped body."""
    p = parse(golden_source("fig2"))
    g = group(p, [0, 1, 2])
    res = abstract(g, 0)
    fn = res.program.defs[0].bound
    call = res.program.main.args[0].items[0]
    # rebuild: bind the bounds tuple and each scalar param to its argument
    from sketchlab.syntax import Block, Def, EList, PList, PVar

    scalar_args = call.fn.args
    bounds_arg = call.args[0]
    rebuilt_defs = [Def(fn.params[-1], bounds_arg)]
    for param, arg in zip(fn.params[:-1], scalar_args):
        rebuilt_defs.append(Def(PVar(param.name), arg))
    rebuilt = Block(rebuilt_defs + list(fn.body.defs), fn.body.result)
    reference = g.defs[0].bound
    # beta-substituted body evaluates to the same nodes as the original def
    probe_a = parse("(blobs [])\n")
    probe_a.defs = [Def(PVar("g1"), rebuilt)]
    probe_b = parse("(blobs [])\n")
    probe_b.defs = [Def(PVar("g1"), reference)]
    from sketchlab.parser import parse as _parse

    src_a = unparse(probe_a).replace("(blobs [])", "(blobs [ g1 ])")
    src_b = unparse(probe_b).replace("(blobs [])", "(blobs [ g1 ])")
    assert render_svg(evaluate(_parse(src_a))) == render_svg(evaluate(_parse(src_b)))


def test_duplicate_fresh_locations():
    p = parse(golden_source("fig1"))
    p2 = duplicate(p, 0)
    assert [d.pattern.name for d in p2.defs] == ["rect1", "line2", "line3", "rect4"]
    assert ast_equal(p2.defs[0].bound, p2.defs[3].bound)
    locs_orig = {n.loc for n in literals(p2.defs[0].bound)}
    locs_copy = {n.loc for n in literals(p2.defs[3].bound)}
    assert not (locs_orig & locs_copy)


def test_duplicate_copy_is_independent():
    p = parse(golden_source("fig1"))
    p2 = duplicate(p, 0)
    c2 = evaluate(p2)
    p3, applied, _ = apply_drag(p2, c2, [3], 10, 0, "edge:left")
    c3 = evaluate(p3)
    assert c3.roots[3].attrs["left"].value == 41
    assert c3.roots[0].attrs["left"].value == 31  # original untouched


def test_duplicate_call_blob():
    p = parse(golden_source("fig3"))
    p2 = duplicate(p, 0)
    entries = p2.main.args[0].items
    assert len(entries) == 2
    assert ast_equal(entries[0], entries[1])
    assert len(evaluate(p2).roots) == 2


def test_merge_parameterizes_disagreements():
    """Three copies differing only in x-offset merge into one function."""
    p = parse(golden_source("fig1"))
    p2 = duplicate(p, 1)   # copy line2 twice
    p2 = duplicate(p2, 1)
    c = evaluate(p2)
    p3, _, _ = apply_drag(p2, c, [3], 40, 0, "interior")   # move first copy
    c = evaluate(p3)
    p4, _, _ = apply_drag(p3, c, [4], 80, 0, "interior")   # move second copy
    before = render_svg(evaluate(p4))
    merged = merge(p4, [1, 3, 4])
    assert render_svg(evaluate(merged)) == before
    fn = next(d.bound for d in merged.defs if isinstance(d.bound, Lam))
    assert len(fn.params) == 2  # x1 and x2 disagree; everything else shared
    calls = [e for e in merged.main.args[0].items if not hasattr(e, "name")]
    assert len(calls) == 3


def test_merge_of_verbatim_duplicates_has_no_parameters():
    p = parse(golden_source("fig1"))
    p2 = duplicate(p, 0)
    merged = merge(p2, [0, 3])
    fn = next(d.bound for d in merged.defs if isinstance(d.bound, Lam))
    assert fn.params == []
    text = unparse(merged)
    assert text.count("(rect1)") == 2


def test_merge_rejects_structural_mismatch():
    p = parse(golden_source("fig1"))
    with pytest.raises(NotStructurallyEquivalent):
        merge(p, [0, 1])  # a rect and a line


def test_merge_minimality():
    """A literal position becomes a parameter iff the copies disagree."""
    p = parse(golden_source("fig1"))
    p2 = duplicate(p, 1)
    c = evaluate(p2)
    p3, _, _ = apply_drag(p2, c, [3], 0, 25, "point:1")  # move one endpoint
    merged = merge(p3, [1, 3])
    fn = next(d.bound for d in merged.defs if isinstance(d.bound, Lam))
    assert len(fn.params) == 1  # only y1 differs
    assert fn.params[0].name == "y1"
