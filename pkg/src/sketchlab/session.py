"""Session state machine: one editable program plus its derived state.

Every request kind of the wire protocol is handled here; mutations are
atomic (a failing transformation leaves the session untouched) and push
the prior source text onto a bounded undo stack.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .draw import DrawRequest, draw_shape, list_lambda_tools
from .errors import InvalidSelection, SketchlabError, ToolError, UnknownRequest
from .features import blobs_list, features_of, find_feature, is_simple, widgets_of
from .groups import abstract, duplicate, group, merge
from .interp import Canvas, Env, evaluate_full
from .livesync import AttrEdit, apply_drag, apply_output_edit
from .parser import parse
from .printer import unparse
from .relate import cleanup, dig_hole, make_equal
from .svg import render_svg
from .syntax import Program, Var

UNDO_LIMIT = 100

EMPTY_SOURCE = "(blobs [])\n"


@dataclass
class Session:
    program: Program
    canvas: Canvas
    env: Env
    selection: list[str] = field(default_factory=list)
    undo_stack: deque = field(default_factory=lambda: deque(maxlen=UNDO_LIMIT))
    ghosts_visible: bool = True
    lambda_defaults: dict = field(default_factory=dict)
    seed_counter: int = 0

    @classmethod
    def fresh(cls, seed: int = 0) -> "Session":
        program = parse(EMPTY_SOURCE)
        canvas, env = evaluate_full(program)
        return cls(program, canvas, env, seed_counter=seed)


MUTATING = {
    "load", "draw", "digHole", "makeEqual", "cleanUp", "group",
    "abstract", "duplicate", "merge", "drag", "setAttr",
}

ALL_KINDS = MUTATING | {
    "getCode", "getSvg", "listLambdas", "listFeatures",
    "select", "deselect", "clearSelection", "toggleGhosts", "undo",
}


def _blob_names(program: Program) -> list[str]:
    if not is_simple(program):
        return []
    out = []
    for i, entry in enumerate(blobs_list(program).items):
        out.append(entry.name if isinstance(entry, Var) else f"blob{i}")
    return out


def _state_payload(session: Session) -> dict:
    features = features_of(session.program, session.canvas, session.env)
    widgets = widgets_of(session.program, session.canvas, session.env)
    return {
        "code": unparse(session.program),
        "svg": render_svg(session.canvas, show_ghosts=session.ghosts_visible),
        "features": [
            {
                "id": f.id,
                "shape": f.shape,
                "name": f.name,
                "kind": f.kind,
                "axis": f.axis,
                "value": f.value,
            }
            for f in features
        ],
        "widgets": [
            {"kind": w.kind, "shape": w.shape, "features": w.features, "geometry": w.geometry}
            for w in widgets
        ],
        "lambdas": list_lambda_tools(session.program),
        "selection": list(session.selection),
        "blobs": _blob_names(session.program),
        "simple": is_simple(session.program),
        "ghostsVisible": session.ghosts_visible,
    }


def handle_request(session: Session, kind: str, payload: dict | None = None) -> dict:
    """Apply one protocol request; returns the response payload.

    Raises ToolError subclasses (and other SketchlabErrors) without
    modifying the session.
    """
    payload = payload or {}
    if kind not in ALL_KINDS:
        raise UnknownRequest(f"unknown request kind {kind!r}")

    extra: dict = {}
    if kind in ("getCode", "getSvg", "listLambdas", "listFeatures"):
        pass  # read-only; answered from current state
    elif kind == "select":
        fid = payload["feature"]
        features = features_of(session.program, session.canvas, session.env)
        find_feature(features, fid)  # validates
        if fid not in session.selection:
            session.selection.append(fid)
    elif kind == "deselect":
        fid = payload["feature"]
        if fid in session.selection:
            session.selection.remove(fid)
    elif kind == "clearSelection":
        session.selection.clear()
    elif kind == "toggleGhosts":
        session.ghosts_visible = not session.ghosts_visible
    elif kind == "undo":
        if session.undo_stack:
            source = session.undo_stack.pop()
            program = parse(source)
            canvas, env = evaluate_full(program)
            session.program, session.canvas, session.env = program, canvas, env
            session.selection.clear()
    else:
        extra = _apply_mutation(session, kind, payload)

    out = _state_payload(session)
    out.update(extra)
    return out


def _apply_mutation(session: Session, kind: str, payload: dict) -> dict:
    before = unparse(session.program)
    extra: dict = {}

    if kind == "load":
        program = parse(payload["source"])
    elif kind == "draw":
        seed = payload.get("colorSeed")
        if seed is None:
            seed = session.seed_counter
            session.seed_counter += 1
        req = DrawRequest(
            tool=payload["tool"],
            geometry=[tuple(p) for p in payload.get("geometry", [])],
            color_seed=int(seed),
            fn_name=payload.get("fnName"),
        )
        if req.tool == "lambda" and req.fn_name in session.lambda_defaults:
            from .draw import draw_lambda, _norm_bounds

            program = draw_lambda(
                session.program, req.fn_name, _norm_bounds(req.geometry),
                defaults=session.lambda_defaults.get(req.fn_name),
            )
        else:
            program = draw_shape(session.program, req)
    elif kind == "digHole":
        program, record = dig_hole(session.program, list(session.selection))
        extra["hole"] = {
            "lifted": record.lifted,
            "primed": record.primed,
            "derived": record.derived,
        }
    elif kind == "makeEqual":
        program, report = make_equal(session.program, list(session.selection))
        extra["groups"] = [{"axis": a, "features": ids} for a, ids in report.groups]
        extra["failures"] = report.failures
    elif kind == "cleanUp":
        program = cleanup(session.program)
    elif kind == "group":
        program = group(session.program, [int(i) for i in payload["blobs"]])
    elif kind == "abstract":
        result = abstract(session.program, int(payload["blob"]))
        program = result.program
        session.lambda_defaults[result.fn_name] = result.arg_values
        extra["fnName"] = result.fn_name
        extra["isLambdaTool"] = result.has_bounds
    elif kind == "duplicate":
        program = duplicate(session.program, int(payload["blob"]))
    elif kind == "merge":
        program = merge(session.program, [int(i) for i in payload["blobs"]])
    elif kind == "drag":
        program, applied, skipped = apply_drag(
            session.program,
            session.canvas,
            [int(i) for i in payload["nodePath"]],
            float(payload.get("dx", 0.0)),
            float(payload.get("dy", 0.0)),
            payload["zone"],
        )
        extra["applied"] = len(applied)
        extra["skipped"] = len(skipped)
    elif kind == "setAttr":
        edit = AttrEdit(
            node_path=[int(i) for i in payload["nodePath"]],
            attr_name=payload["attr"],
            new_value=float(payload["value"]),
        )
        program, loc = apply_output_edit(session.program, session.canvas, edit)
        extra["changedLoc"] = loc
    else:  # pragma: no cover
        raise UnknownRequest(kind)

    canvas, env = evaluate_full(program)  # a broken program never lands
    session.undo_stack.append(before)
    session.program, session.canvas, session.env = program, canvas, env
    session.selection.clear()
    return extra
