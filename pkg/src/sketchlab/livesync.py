"""Live synchronization: output edits become single-constant program edits.

Each attribute edit builds one value-trace equation (attribute trace =
requested value), picks one unfrozen constant, solves, and rewrites that
literal.  Drags expand to up to four attribute edits applied in
sequence; constants already consumed by an earlier edit of the same
gesture are excluded so edits cannot undo each other.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EvalError, InvalidSelection, NoSolution, Unsolvable
from .interp import Canvas, NumVal, Opaque, SvgNode, evaluate
from .solver import Equation, candidate_order, solve_for_loc, sym_eval
from .syntax import Program, rewrite_literal


@dataclass
class AttrEdit:
    node_path: list[int]
    attr_name: str
    new_value: float


def _promoted_child(node: SvgNode) -> SvgNode | None:
    non_ghost = [c for c in node.children if not c.ghost]
    if len(non_ghost) == 1 and non_ghost[0].tag in ("polygon", "path"):
        return non_ghost[0]
    return None


def resolve_attr(node: SvgNode, name: str) -> NumVal:
    """The traced number behind an attribute name on a node."""
    if name.startswith("point:"):
        _, idx, coord = name.split(":")
        target = node
        if node.tag == "g":
            child = _promoted_child(node)
            if child is None:
                raise InvalidSelection(f"no vertex features on this group ({name})")
            target = child
        if target.tag == "polygon":
            pairs = target.attrs.get("points", [])
        elif target.tag == "path":
            pairs = []
            for cmd in target.attrs.get("d", []):
                pairs.extend(cmd[1:])
        else:
            raise InvalidSelection(f"{target.tag} has no vertices")
        i = int(idx)
        if not 0 <= i < len(pairs):
            raise InvalidSelection(f"vertex {i} out of range")
        value = pairs[i][0 if coord == "x" else 1]
        if not isinstance(value, NumVal):
            raise InvalidSelection(f"vertex {i} is not numeric")
        return value
    if node.tag == "g" and name in ("left", "top", "right", "bot"):
        bounds = node.attrs.get("bounds")
        if not (isinstance(bounds, list) and len(bounds) == 4):
            raise InvalidSelection("group carries no bounds record")
        value = bounds[("left", "top", "right", "bot").index(name)]
        if not isinstance(value, NumVal):
            raise InvalidSelection(f"bound {name} is not numeric")
        return value
    value = node.attrs.get(name)
    if not isinstance(value, NumVal):
        raise InvalidSelection(f"attribute {name} is not numeric on <{node.tag}>")
    return value


def apply_output_edit(
    program: Program,
    canvas: Canvas,
    edit: AttrEdit,
    exclude: frozenset[int] = frozenset(),
) -> tuple[Program, int]:
    """Rewrite exactly one literal so the attribute becomes new_value.

    Returns the new program and the changed location; raises NoSolution
    when every candidate fails (program unchanged).
    """
    node = canvas.node_at(edit.node_path)
    nv = resolve_attr(node, edit.attr_name)
    env = {loc: (canvas.loc_values[loc], canvas.loc_annots[loc])
           for loc in canvas.loc_values}
    eq = Equation(lhs=nv.trace, rhs=Opaque(float(edit.new_value)), env=env)
    for loc in candidate_order(eq, exclude=exclude):
        try:
            solution = solve_for_loc(eq, loc)
            new_value = sym_eval(solution, eq.values())
        except (Unsolvable, ZeroDivisionError):
            continue
        return rewrite_literal(program, loc, new_value), loc
    raise NoSolution(f"no constant can satisfy {edit.attr_name} = {edit.new_value}")


_EDGE_ATTR = {"left": "left", "right": "right", "top": "top", "bot": "bot"}
_CORNER_ATTRS = {"tl": ("left", "top"), "tr": ("right", "top"),
                 "bl": ("left", "bot"), "br": ("right", "bot")}


def drag_edits(canvas: Canvas, node_path: list[int], dx: float, dy: float, zone: str) -> list[AttrEdit]:
    """Expand a drag gesture into absolute attribute edits (1 to 4)."""
    node = canvas.node_at(node_path)

    def edit(attr: str, delta: float) -> AttrEdit:
        current = resolve_attr(node, attr).value
        return AttrEdit(node_path, attr, current + delta)

    if node.tag == "line":
        if zone == "interior":
            return [edit("x1", dx), edit("y1", dy), edit("x2", dx), edit("y2", dy)]
        if zone in ("point:1", "point:2"):
            i = zone.split(":")[1]
            return [edit(f"x{i}", dx), edit(f"y{i}", dy)]
        raise InvalidSelection(f"zone {zone!r} does not apply to a line")
    if zone.startswith("point:"):
        i = zone.split(":")[1]
        return [edit(f"point:{i}:x", dx), edit(f"point:{i}:y", dy)]
    if node.tag in ("BOX", "ellipse", "g"):
        if zone == "interior":
            return [edit("left", dx), edit("top", dy), edit("right", dx), edit("bot", dy)]
        if zone.startswith("edge:"):
            attr = _EDGE_ATTR.get(zone.split(":")[1])
            if attr is None:
                raise InvalidSelection(f"unknown edge {zone!r}")
            return [edit(attr, dx if attr in ("left", "right") else dy)]
        if zone.startswith("corner:"):
            corner = _CORNER_ATTRS.get(zone.split(":")[1])
            if corner is None:
                raise InvalidSelection(f"unknown corner {zone!r}")
            return [edit(corner[0], dx), edit(corner[1], dy)]
    if node.tag in ("polygon", "path") and zone == "interior":
        raise InvalidSelection("drag the surrounding bounds to move a stretchy shape")
    raise InvalidSelection(f"zone {zone!r} does not apply to <{node.tag}>")


def apply_drag(
    program: Program,
    canvas: Canvas,
    node_path: list[int],
    dx: float,
    dy: float,
    zone: str,
) -> tuple[Program, list[tuple[AttrEdit, int]], list[AttrEdit]]:
    """Apply a drag; returns (program, applied (edit, loc) pairs, skipped edits).

    Edits are computed against the canvas at drag start and applied
    sequentially; the solvable subset is applied even if some edits fail.
    """
    from .interp import trace_locs

    edits = drag_edits(canvas, node_path, dx, dy, zone)
    applied: list[tuple[AttrEdit, int]] = []
    skipped: list[AttrEdit] = []
    used: set[int] = set()
    current_program = program
    current_canvas = canvas
    for e in edits:
        try:
            current_program, loc = apply_output_edit(
                current_program, current_canvas, e, exclude=frozenset(used)
            )
        except (NoSolution, InvalidSelection, EvalError):
            skipped.append(e)
            continue
        # every constant feeding an already-edited attribute is off-limits
        # for the rest of the gesture, so edits cannot undo each other
        used.update(trace_locs(resolve_attr(canvas.node_at(e.node_path), e.attr_name).trace))
        used.add(loc)
        applied.append((e, loc))
        current_canvas = evaluate(current_program)
    return current_program, applied, skipped
