"""Drawing tools: stencil instantiation and lambda stamping.

A draw inserts readable stencil code for the new shape; with simple
program structure the shape def is appended and its name joins the
blobs list, otherwise the whole canvas is rebuilt through
addShapeToCanvas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidSelection, UnknownLambda
from .parser import parse
from .syntax import (
    App,
    Def,
    EList,
    Lam,
    Let,
    LocCounter,
    Num,
    PList,
    Program,
    PVar,
    Var,
    fmt_number,
    num,
    shape_name,
    walk,
)
from .features import blobs_list, is_simple

TOOLS = ("line", "rect", "oval", "polygon", "path", "lambda")


@dataclass
class DrawRequest:
    tool: str
    geometry: list  # of (x, y) pairs
    color_seed: int = 0
    fn_name: str | None = None  # lambda tool only


def seed_color(seed: int) -> int:
    return (int(seed) * 17) % 501


def _fresh_locs(d: Def, counter: LocCounter) -> Def:
    for node in walk(d.bound):
        if isinstance(node, Num):
            node.loc = counter.take()
    return d


def _parse_def(text: str, counter: LocCounter) -> Def:
    program = parse(text + "\n\n(blobs [])\n")
    return _fresh_locs(program.defs[0], counter)


def _norm_bounds(points: list) -> tuple[float, float, float, float]:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    left, top, right, bot = min(xs), min(ys), max(xs), max(ys)
    if right - left < 1:
        right = left + 1
    if bot - top < 1:
        bot = top + 1
    return left, top, right, bot


def _pct_text(v: float, lo: float, hi: float) -> str:
    """Percentage literal with its annotation: 0/1 plain, interior thawed."""
    ratio = (v - lo) / (hi - lo) if hi != lo else 0.0
    if ratio == 0:
        return "0"
    if ratio == 1:
        return "1"
    return f"{max(0.0, min(1.0, round(ratio, 2))):.2f}?"


def _stencil(name: str, req: DrawRequest) -> str:
    color = seed_color(req.color_seed)
    g = req.geometry
    if req.tool == "line":
        if len(g) != 2:
            raise InvalidSelection("a line needs exactly two points")
        (x1, y1), (x2, y2) = g
        coords = " ".join(fmt_number(v) for v in (x1, y1, x2, y2))
        return (
            f"(def {name}\n"
            f"  (let [x1 y1 x2 y2] [{coords}]\n"
            f"  (let [color width] [{color} 5]\n"
            f"    [ (line color width x1 y1 x2 y2) ])))"
        )
    if req.tool in ("rect", "oval"):
        if len(g) != 2:
            raise InvalidSelection(f"a {req.tool} needs exactly two drag corners")
        left, top, right, bot = _norm_bounds(g)
        coords = " ".join(fmt_number(v) for v in (left, top, right, bot))
        call = "(rectangle color 'black' '0' 0 bounds)" if req.tool == "rect" else "(oval color 'black' '0' bounds)"
        return (
            f"(def {name}\n"
            f"  (let [left top right bot] [{coords}]\n"
            f"  (let bounds [left top right bot]\n"
            f"  (let color {color}\n"
            f"    [ {call} ]))))"
        )
    if req.tool in ("polygon", "path"):
        if len(g) < 3:
            raise InvalidSelection(f"a {req.tool} needs at least three points")
        left, top, right, bot = _norm_bounds(g)
        coords = " ".join(fmt_number(v) for v in (left, top, right, bot))
        if req.tool == "polygon":
            pct_pairs = " ".join(
                f"[{_pct_text(x, left, right)} {_pct_text(y, top, bot)}]" for x, y in g
            )
            return (
                f"(def {name}\n"
                f"  (let [left top right bot] [{coords}]\n"
                f"  (let bounds [left top right bot]\n"
                f"  (let [color stroke width] [{color} 'black' 2]\n"
                f"  (let pcts [{pct_pairs}]\n"
                f"    [ (stretchyPolygon bounds color stroke width pcts) ])))))"
            )
        cmds = []
        for i, (x, y) in enumerate(g):
            verb = "M" if i == 0 else "L"
            cmds.append(f"['{verb}' [{_pct_text(x, left, right)} {_pct_text(y, top, bot)}]]")
        cmd_text = " ".join(cmds)
        return (
            f"(def {name}\n"
            f"  (let [left top right bot] [{coords}]\n"
            f"  (let bounds [left top right bot]\n"
            f"  (let [color stroke width] [{color} 'black' 2]\n"
            f"  (let cmds [{cmd_text}]\n"
            f"    [ (stretchyPath bounds color stroke width cmds) ])))))"
        )
    raise InvalidSelection(f"unknown draw tool {req.tool!r}")


def _append_blob(program: Program, new_def: Def | None, entry, counter: LocCounter) -> Program:
    """Install a new shape: simple programs stay simple, anything else is
    rebuilt through addShapeToCanvas."""
    if is_simple(program):
        blobs = blobs_list(program)
        new_blobs = EList(list(blobs.items) + [entry], padded=True)
        new_main = App(Var("blobs"), [new_blobs])
        defs = list(program.defs) + ([new_def] if new_def else [])
        return Program(defs, new_main, main_comments=program.main_comments,
                       end_comments=program.end_comments, next_loc=counter.next)
    if new_def is not None:
        name = new_def.pattern.name
        wrapper = Let(PVar(name), new_def.bound, App(Var("addShapeToCanvas"), [program.main, Var(name)]))
    else:
        wrapper = App(Var("addShapeToCanvas"), [program.main, entry])
    return Program(list(program.defs), wrapper, main_comments=program.main_comments,
                   end_comments=program.end_comments, next_loc=counter.next)


def draw_shape(program: Program, req: DrawRequest) -> Program:
    """Add a stencil instantiation for the request's shape (top z-order)."""
    if req.tool == "lambda":
        if not req.fn_name:
            raise UnknownLambda("the lambda tool needs a function name")
        return draw_lambda(program, req.fn_name, _norm_bounds(req.geometry))
    if not req.geometry:
        raise InvalidSelection("draw request has no geometry")
    counter = LocCounter(program.next_loc)
    base = {"rect": "rect", "oval": "oval", "line": "line", "polygon": "polygon", "path": "path"}[req.tool]
    name = shape_name(program, base)
    new_def = _parse_def(_stencil(name, req), counter)
    return _append_blob(program, new_def, Var(name), counter)


def list_lambda_tools(program: Program) -> list[str]:
    """Top-level functions whose final parameter is a 4-entry list pattern."""
    out = []
    for d in program.defs:
        if not isinstance(d.pattern, PVar) or not isinstance(d.bound, Lam):
            continue
        params = d.bound.params
        if not params:
            continue
        last = params[-1]
        if isinstance(last, PList) and len(last.items) == 4 and all(
            isinstance(p, PVar) for p in last.items
        ):
            out.append(d.pattern.name)
    return out


def _existing_call_args(program: Program, fn_name: str) -> list[Num] | None:
    """Scalar arguments of the most recent call to fn_name in the blobs list."""
    if not is_simple(program):
        return None
    found = None
    for entry in blobs_list(program).items:
        if (
            isinstance(entry, App)
            and isinstance(entry.fn, App)
            and isinstance(entry.fn.fn, Var)
            and entry.fn.fn.name == fn_name
        ):
            found = [a for a in entry.fn.args]
        elif isinstance(entry, App) and isinstance(entry.fn, Var) and entry.fn.name == fn_name:
            found = []
    return found


def draw_lambda(
    program: Program,
    fn_name: str,
    bounds: tuple[float, float, float, float],
    defaults: list[float] | None = None,
) -> Program:
    """Stamp a call to a user-defined stencil with the drawn bounding box."""
    if fn_name not in list_lambda_tools(program):
        raise UnknownLambda(f"{fn_name} is not a drawable function")
    fn_def = next(d for d in program.defs if isinstance(d.pattern, PVar) and d.pattern.name == fn_name)
    n_scalars = len(fn_def.bound.params) - 1
    counter = LocCounter(program.next_loc)

    prior = _existing_call_args(program, fn_name)
    if prior is not None and len(prior) == n_scalars:
        args = [
            Num(value=a.value, text=a.text, annot=a.annot, loc=counter.take())
            if isinstance(a, Num)
            else a
            for a in prior
        ]
    else:
        source = defaults if defaults is not None and len(defaults) == n_scalars else [0.0] * n_scalars
        args = [num(v, loc=counter.take()) for v in source]

    left, top, right, bot = bounds
    if right - left < 1:
        right = left + 1
    if bot - top < 1:
        bot = top + 1
    bounds_list = EList([num(v, loc=counter.take()) for v in (left, top, right, bot)])
    callee = App(Var(fn_name), args) if args else Var(fn_name)
    call = App(callee, [bounds_list]) if args else App(Var(fn_name), [bounds_list])
    return _append_blob(program, None, call, counter)
