"""The Relate workflow: Dig Hole, Make Equal, and Clean Up.

Dig Hole lifts the constants behind the selected features into named
top-level variables plus a primed hole definition the user can edit.
Make Equal solves one value-trace equation per follower feature,
eliminating one constant each time, then cleans up.  Clean Up is a
fixpoint of local inlining/removal rules that never changes the
rendered output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    InvalidSelection,
    NothingToLift,
    SolverFailed,
    Unsolvable,
)
from .features import Feature, features_of, find_feature, loc_axes
from .interp import Canvas, evaluate_full, trace_locs
from .printer import unparse
from .solver import (
    Equation,
    SLit,
    SOp,
    SRef,
    SymbolicExpr,
    candidate_order,
    solve_for_loc,
)
from .syntax import (
    App,
    Block,
    Def,
    EList,
    FROZEN,
    Lam,
    Let,
    LocCounter,
    Num,
    Op,
    PLAIN,
    PList,
    Program,
    PVar,
    Str,
    Var,
    contains,
    count_free,
    fmt_number,
    free_vars,
    fresh_name,
    literals,
    loc_map,
    map_children,
    pattern_vars,
    replace_node,
)

EQUAL_ATOL = 1e-6
PRIME = "'"


# ---------------------------------------------------------------------------
# Rendering symbolic expressions back into little code


def sym_to_expr(sym: SymbolicExpr, names: dict[int, str], counter: LocCounter):
    """Symbolic solution as surface code; structural constants are frozen."""
    if isinstance(sym, SRef):
        return Var(names[sym.loc])
    if isinstance(sym, SLit):
        return Num(value=sym.value, text=fmt_number(sym.value), annot=FROZEN, loc=counter.take())
    return Op(sym.op, [sym_to_expr(a, names, counter) for a in sym.args])


def sym_refs_ordered(sym: SymbolicExpr) -> list[int]:
    out: list[int] = []

    def visit(e):
        if isinstance(e, SRef):
            if e.loc not in out:
                out.append(e.loc)
        elif isinstance(e, SOp):
            for a in e.args:
                visit(a)

    visit(sym)
    return out


def trace_to_surface(trace, names: dict[int, str], counter: LocCounter):
    """A trace as surface code over lifted names (for derived-feature defs)."""
    from .interp import LocLeaf, OpNode, Opaque

    if isinstance(trace, LocLeaf):
        return Var(names[trace.loc])
    if isinstance(trace, Opaque):
        return Num(value=trace.value, text=fmt_number(trace.value), annot=FROZEN, loc=counter.take())
    return Op(trace.op, [trace_to_surface(a, names, counter) for a in trace.args])


# ---------------------------------------------------------------------------
# Locating literals inside the program


def containing_def_index(program: Program, target: Num) -> int:
    for i, d in enumerate(program.defs):
        if contains(d.bound, target):
            return i
    if contains(program.main, target):
        return len(program.defs)
    raise InvalidSelection("literal not found in the program")


def binder_path(program: Program, target: Num) -> list[str]:
    """Binder names from the enclosing def down to the literal."""
    names: list[str] = []

    def align(pattern, bound) -> None:
        # descend pattern/list pairs toward the component holding the target
        while isinstance(pattern, PList) and isinstance(bound, EList) and len(pattern.items) == len(bound.items):
            idx = next((i for i, item in enumerate(bound.items) if contains(item, target)), None)
            if idx is None:
                return
            pattern = pattern.items[idx]
            bound = bound.items[idx]
        if isinstance(pattern, PVar):
            names.append(pattern.name)

    def descend(e):
        if isinstance(e, Let):
            if contains(e.bound, target):
                align(e.pattern, e.bound)
                descend(e.bound)
            else:
                descend(e.body)
            return
        if isinstance(e, Block):
            for d in e.defs:
                if contains(d.bound, target):
                    align(d.pattern, d.bound)
                    descend(d.bound)
                    return
            descend(e.result)
            return
        if isinstance(e, Lam):
            descend(e.body)
            return
        for child in (c for c in _children(e) if contains(c, target)):
            descend(child)
            return

    idx = containing_def_index(program, target)
    if idx < len(program.defs):
        d = program.defs[idx]
        if isinstance(d.pattern, PVar):
            names.append(d.pattern.name)
        align(d.pattern, d.bound)
        descend(d.bound)
    else:
        descend(program.main)
    # drop duplicates from align+descend overlap, keep order
    seen = []
    for n in names:
        if not seen or seen[-1] != n:
            seen.append(n)
    return seen


def _children(e):
    from .syntax import child_exprs

    try:
        return child_exprs(e)
    except TypeError:
        return []


def lifted_style(d: Def) -> bool:
    """A lifted-constants def: names bound directly to numeric literals."""
    if isinstance(d.pattern, PVar):
        return isinstance(d.bound, Num)
    if isinstance(d.pattern, PList) and isinstance(d.bound, EList):
        return (
            len(d.pattern.items) == len(d.bound.items)
            and all(isinstance(p, PVar) for p in d.pattern.items)
            and all(isinstance(b, Num) for b in d.bound.items)
        )
    return False


def top_binding_for_loc(program: Program, loc: int) -> str | None:
    """Name of the lifted top-level binding holding this literal, if any."""
    for d in program.defs:
        if not lifted_style(d):
            continue
        if isinstance(d.pattern, PVar):
            if d.bound.loc == loc:
                return d.pattern.name
        else:
            for p, b in zip(d.pattern.items, d.bound.items):
                if b.loc == loc:
                    return p.name
    return None


def _def_axis(d: Def, axes: dict[int, str]) -> str | None:
    locs = [n.loc for n in literals(d.bound)]
    kinds = {axes.get(loc) for loc in locs}
    if kinds in ({"x"}, {"y"}):
        return kinds.pop()
    return None


def _rebuild(program: Program, defs, main=None) -> Program:
    return Program(
        defs,
        program.main if main is None else main,
        main_comments=program.main_comments,
        end_comments=program.end_comments,
        next_loc=program.next_loc,
    )


def lift_loc(program: Program, loc: int, axes: dict[int, str]) -> tuple[Program, str]:
    """Hoist one literal into a named top-level constant.

    New positional (x/y) constants merge into an existing same-axis
    lifted def (prepended); scalars always get their own def.  Returns
    the possibly-updated program and the binding name.
    """
    existing = top_binding_for_loc(program, loc)
    if existing is not None:
        return program, existing
    target = loc_map(program)[loc]
    name = "_".join(binder_path(program, target)) or "k"
    taken = _all_bound_names(program)
    if name in taken:
        base = name
        i = 2
        while f"{base}{i}" in taken:
            i += 1
        name = f"{base}{i}"
    def_index = containing_def_index(program, target)
    axis = axes.get(loc)

    defs = list(program.defs)
    # remove the literal from its use site
    source = defs[def_index] if def_index < len(defs) else None
    replacement = Var(name)
    if source is not None:
        defs[def_index] = Def(source.pattern, replace_node(source.bound, target, replacement), comments=source.comments)
        main = program.main
    else:
        main = replace_node(program.main, target, replacement)

    if axis in ("x", "y"):
        for i, d in enumerate(defs[:def_index]):
            if lifted_style(d) and _def_axis(d, axes) == axis:
                pattern_items = [PVar(name)] + (
                    list(d.pattern.items) if isinstance(d.pattern, PList) else [d.pattern]
                )
                bound_items = [target] + (
                    list(d.bound.items) if isinstance(d.bound, EList) else [d.bound]
                )
                defs[i] = Def(PList(pattern_items), EList(bound_items), comments=d.comments)
                return _rebuild(program, defs, main), name
    new_def = Def(PVar(name), target)
    defs.insert(def_index, new_def)
    return _rebuild(program, defs, main), name


def _all_bound_names(program: Program) -> set[str]:
    from .syntax import bound_names

    return bound_names(program)


# ---------------------------------------------------------------------------
# Dig Hole


@dataclass
class HoleRecord:
    lifted: list[str]
    primed: list[str]
    derived: list[str]


_DERIVED_SURFACE = {
    "boxCX": ("half_sum", "left", "right"),
    "boxCY": ("half_sum", "top", "bot"),
    "cx": ("half_sum", "left", "right"),
    "cy": ("half_sum", "top", "bot"),
    "midX": ("half_sum", "x1", "x2"),
    "midY": ("half_sum", "y1", "y2"),
    "width": ("diff", "left", "right"),
    "height": ("diff", "top", "bot"),
    "rx": ("half_diff", "left", "right"),
    "ry": ("half_diff", "top", "bot"),
}


def dig_hole(program: Program, selection: list[str]) -> tuple[Program, HoleRecord]:
    """Lift the selected features' constants and open a hole definition."""
    if len(selection) < 2:
        raise InvalidSelection("select at least two features before digging")
    canvas, env = evaluate_full(program)
    features = features_of(program, canvas, env)
    selected = [find_feature(features, fid) for fid in selection]
    axes = loc_axes(features)

    contributing: list[int] = []
    for f in selected:
        for loc in trace_locs(f.trace):
            if loc >= 0 and canvas.loc_annots.get(loc) != FROZEN and loc not in contributing:
                contributing.append(loc)
    if not contributing:
        raise NothingToLift("every contributing constant is frozen")

    counter = LocCounter(program.next_loc)
    names: dict[int, str] = {}
    fresh_locs: list[int] = []
    fresh_positions: list[int] = []
    lmap = loc_map(program)
    for loc in contributing:
        existing = top_binding_for_loc(program, loc)
        if existing is not None:
            names[loc] = existing
            continue
        target = lmap[loc]
        name = "_".join(binder_path(program, target)) or "k"
        taken = _all_bound_names(program) | set(names.values())
        if name in taken:
            i = 2
            while f"{name}{i}" in taken:
                i += 1
            name = f"{name}{i}"
        names[loc] = name
        fresh_locs.append(loc)
        fresh_positions.append(containing_def_index(program, target))

    defs = list(program.defs)
    main = program.main
    primed_map = {loc: names[loc] + PRIME for loc in contributing}

    # freshly lifted literals leave a primed variable at their use site
    for loc in fresh_locs:
        target = lmap[loc]
        idx = containing_def_index(program, target)
        replacement = Var(primed_map[loc])
        if idx < len(defs):
            d = defs[idx]
            defs[idx] = Def(d.pattern, replace_node(d.bound, target, replacement), comments=d.comments)
        else:
            main = replace_node(main, target, replacement)
    current = program

    insert_at = min(fresh_positions) if fresh_positions else 0
    hole_def = Def(
        PList([PVar(primed_map[loc]) for loc in contributing]),
        EList([Var(names[loc]) for loc in contributing]),
    )
    derived_defs: list[Def] = []
    derived_names: list[str] = []
    for f in selected:
        if f.kind != "derived":
            continue
        base = f.name.split(".")[-1]
        recipe = _DERIVED_SURFACE.get(base)
        if recipe is None:
            continue
        dname = f"{f.shape}_{base}"
        taken = _all_bound_names(current) | set(derived_names) | set(names.values())
        if dname in taken:
            i = 2
            while f"{dname}{i}" in taken:
                i += 1
            dname = f"{dname}{i}"
        expr = _derived_surface_expr(f, recipe, features, names, counter)
        if expr is None:
            continue
        derived_defs.append(Def(PVar(dname), expr))
        derived_names.append(dname)

    lifted_def = None
    if fresh_locs:
        if len(fresh_locs) == 1:
            lifted_def = Def(PVar(names[fresh_locs[0]]), lmap[fresh_locs[0]])
        else:
            lifted_def = Def(
                PList([PVar(names[loc]) for loc in fresh_locs]),
                EList([lmap[loc] for loc in fresh_locs]),
            )
    new_items = ([lifted_def] if lifted_def else []) + [hole_def] + derived_defs
    defs[insert_at:insert_at] = new_items

    # uses of reused (already-lifted) names stay untouched; the hole
    # simply re-binds them so every knob is visible in one place
    out = Program(defs, main, main_comments=program.main_comments,
                  end_comments=program.end_comments, next_loc=counter.next)
    record = HoleRecord(
        lifted=[names[loc] for loc in contributing],
        primed=[primed_map[loc] for loc in contributing],
        derived=derived_names,
    )
    return out, record


def _derived_surface_expr(f: Feature, recipe, features, names, counter):
    kind, a_name, b_name = recipe
    prefix = f.name[: len(f.name) - len(f.name.split(".")[-1])]
    base = {g.name: g for g in features if g.shape == f.shape}
    fa = base.get(prefix + a_name)
    fb = base.get(prefix + b_name)
    if fa is None or fb is None:
        return None
    try:
        ea = trace_to_surface(fa.trace, names, counter)
        eb = trace_to_surface(fb.trace, names, counter)
    except KeyError:
        return None  # a base constant was frozen away; skip the def
    two = Num(value=2.0, text="2", annot=FROZEN, loc=counter.take())
    if kind == "half_sum":
        return Op("/", [Op("+", [ea, eb]), two])
    if kind == "half_diff":
        return Op("/", [Op("-", [eb, ea]), two])
    return Op("-", [eb, ea])


# ---------------------------------------------------------------------------
# Make Equal


def _loc_env(canvas: Canvas) -> dict[int, tuple[float, str]]:
    return {loc: (canvas.loc_values[loc], canvas.loc_annots[loc]) for loc in canvas.loc_values}


def _aligned_binder(program: Program, target: Num):
    """The pattern variable directly bound to this literal, if any."""
    result: list[PVar] = []

    def check(pattern, bound):
        while isinstance(pattern, PList) and isinstance(bound, EList) and len(pattern.items) == len(bound.items):
            idx = next((i for i, item in enumerate(bound.items) if contains(item, target)), None)
            if idx is None:
                return
            pattern = pattern.items[idx]
            bound = bound.items[idx]
        if isinstance(pattern, PVar) and bound is target:
            result.append(pattern)

    def visit(e):
        if isinstance(e, Let):
            if contains(e.bound, target):
                check(e.pattern, e.bound)
                visit(e.bound)
            else:
                visit(e.body)
            return
        if isinstance(e, Block):
            for d in e.defs:
                if contains(d.bound, target):
                    check(d.pattern, d.bound)
                    visit(d.bound)
                    return
            visit(e.result)
            return
        for child in (c for c in _children(e) if contains(c, target)):
            visit(child)
            return

    for d in program.defs:
        if contains(d.bound, target):
            check(d.pattern, d.bound)
            visit(d.bound)
            return result[0] if result else None
    if contains(program.main, target):
        visit(program.main)
    return result[0] if result else None


def _wrap_with_k_let(program: Program, target: Num, rendered, kname: str) -> Program:
    """Replace the literal with a k-variable bound just above its use.

    kname is fresh, so no capture is possible anywhere in the program;
    the binding wraps the innermost let whose bound holds the literal.
    """
    idx = containing_def_index(program, target)
    defs = list(program.defs)
    main = program.main
    container = defs[idx].bound if idx < len(defs) else main

    replaced = replace_node(container, target, Var(kname))
    host = _find_let_with_use(replaced, kname)
    if host is not None:
        new_container = replace_node(replaced, host, Let(PVar(kname), rendered, host))
    else:
        new_container = Let(PVar(kname), rendered, replaced)
    if idx < len(defs):
        d = defs[idx]
        defs[idx] = Def(d.pattern, new_container, comments=d.comments)
    else:
        main = new_container
    return _rebuild(program, defs, main)


def _find_let_with_use(e, kname: str):
    """Innermost Let whose bound mentions kname (exactly one use exists)."""
    found = None
    node = e
    while True:
        if isinstance(node, Let) and count_free(node.bound, kname) > 0:
            found = node
            node = node.bound
            continue
        nested = [c for c in _children(node) if count_free(c, kname) > 0]
        if not nested:
            return found
        node = nested[0]


@dataclass
class MakeEqualReport:
    groups: list[tuple[str, list[str]]]
    failures: list[str] = field(default_factory=list)


def make_equal(program: Program, selection: list[str]) -> tuple[Program, MakeEqualReport]:
    """Equalize the selected features per axis group by eliminating one
    constant per follower, then clean up."""
    if len(selection) < 2:
        raise InvalidSelection("select at least two features to relate")
    canvas, env = evaluate_full(program)
    features = features_of(program, canvas, env)
    selected = [find_feature(features, fid) for fid in selection]

    groups: list[tuple[str, list[str]]] = []
    for f in selected:
        for axis, ids in groups:
            if axis == f.axis:
                ids.append(f.id)
                break
        else:
            groups.append((f.axis, [f.id]))
    if any(len(ids) < 2 for _, ids in groups):
        raise InvalidSelection("each axis group needs at least two features")

    report = MakeEqualReport(groups=groups)
    current = program
    for axis, ids in groups:
        snapshot = current
        try:
            current = _equalize_group(current, ids)
        except SolverFailed as exc:
            report.failures.append(str(exc))
            current = snapshot
            continue
        # verify the group before accepting it
        canvas, env = evaluate_full(current)
        features = features_of(current, canvas, env)
        try:
            values = [find_feature(features, fid).value for fid in ids]
        except InvalidSelection:
            values = []
        if not values or any(abs(v - values[0]) > EQUAL_ATOL for v in values):
            report.failures.append(f"group {ids} failed verification")
            current = snapshot
    if len(report.failures) == len(groups):
        raise SolverFailed("; ".join(report.failures))
    return cleanup(current), report


def _equalize_group(program: Program, ids: list[str]) -> Program:
    current = program
    rep_id = ids[0]
    for fol_id in ids[1:]:
        canvas, env = evaluate_full(current)
        features = features_of(current, canvas, env)
        axes = loc_axes(features)
        try:
            rep = find_feature(features, rep_id)
            fol = find_feature(features, fol_id)
        except InvalidSelection as exc:
            raise SolverFailed(f"feature vanished while equalizing: {exc}") from exc
        if rep.trace == fol.trace:
            continue  # already share one defining expression
        eq = Equation(lhs=fol.trace, rhs=rep.trace, env=_loc_env(canvas))
        solution = None
        target = None
        for cand in candidate_order(eq, lhs_first=True):
            try:
                solution = solve_for_loc(eq, cand)
                target = cand
                break
            except Unsolvable:
                continue
        if solution is None:
            raise SolverFailed(f"no solvable constant for {fol_id} = {rep_id}")
        current = _apply_solution(current, target, solution, axes)
    return current


def _apply_solution(program: Program, target_loc: int, solution, axes) -> Program:
    counter = LocCounter(program.next_loc)
    names: dict[int, str] = {}
    current = program
    for loc in sym_refs_ordered(solution):
        current, name = lift_loc(current, loc, axes)
        names[loc] = name
    current = Program(current.defs, current.main, main_comments=current.main_comments,
                      end_comments=current.end_comments, next_loc=counter.next)
    rendered = sym_to_expr(solution, names, counter)
    current = Program(current.defs, current.main, main_comments=current.main_comments,
                      end_comments=current.end_comments, next_loc=counter.next)

    target = loc_map(current).get(target_loc)
    if target is None:
        raise SolverFailed("eliminated constant vanished during lifting")
    top_name = top_binding_for_loc(current, target_loc)
    if top_name is not None:
        # a lifted constant: rebind its name to the solution in a def of
        # its own (placed after the lifted def so sibling names resolve)
        idx = containing_def_index(current, target)
        defs = list(current.defs)
        d = defs[idx]
        if isinstance(d.pattern, PVar):
            defs[idx] = Def(d.pattern, rendered, comments=d.comments)
        else:
            keep_p = [p for p, b in zip(d.pattern.items, d.bound.items) if b is not target]
            keep_b = [b for b in d.bound.items if b is not target]
            if len(keep_p) == 1:
                defs[idx] = Def(keep_p[0], keep_b[0], comments=d.comments)
            else:
                defs[idx] = Def(PList(keep_p), EList(keep_b), comments=d.comments)
            defs.insert(idx + 1, Def(PVar(top_name), rendered))
        return _rebuild(current, defs)
    if _aligned_binder(current, target) is not None:
        # directly bound to a name: rebind the position with the solution
        idx = containing_def_index(current, target)
        defs = list(current.defs)
        main = current.main
        if idx < len(defs):
            d = defs[idx]
            defs[idx] = Def(d.pattern, replace_node(d.bound, target, rendered), comments=d.comments)
        else:
            main = replace_node(main, target, rendered)
        return _rebuild(current, defs, main)
    kname = fresh_name(current, "k")
    return _wrap_with_k_let(current, target, rendered, kname)


# ---------------------------------------------------------------------------
# Clean Up

MAX_CLEANUP_ROUNDS = 50


def cleanup(program: Program) -> Program:
    """Inline aliases, drop dead definitions, and restore single-use
    lifted constants, to fixpoint; rendered output is unchanged."""
    current = program
    for _ in range(MAX_CLEANUP_ROUNDS):
        before = unparse(current)
        current = _cleanup_once(current)
        if unparse(current) == before:
            return current
    return current


def _cleanup_once(program: Program) -> Program:
    # def-level rules first, one rewrite per round, so that single-use
    # lifted literals are restored before alias inlining rewrites their
    # use sites
    for i, d in enumerate(list(program.defs)):
        # alias def: (def x y) with y a variable
        if isinstance(d.pattern, PVar) and isinstance(d.bound, Var):
            replaced = _substitute_top(program, i, d.pattern.name, d.bound)
            if replaced is not None:
                return replaced
        # unused def
        if isinstance(d.pattern, PVar):
            if _top_references(program, d, d.pattern.name) == 0:
                defs = list(program.defs)
                defs.pop(i)
                return _rebuild(program, defs)
            # primed helper bound to an expression, used exactly once
            if d.pattern.name.endswith(PRIME) and _top_references(program, d, d.pattern.name) == 1:
                replaced = _substitute_top(program, i, d.pattern.name, d.bound)
                if replaced is not None:
                    return replaced
            # single-use literal constant: put it back inline
            if isinstance(d.bound, Num) and d.bound.annot != FROZEN and _top_references(program, d, d.pattern.name) == 1:
                replaced = _substitute_top(program, i, d.pattern.name, d.bound)
                if replaced is not None:
                    return replaced
        if isinstance(d.pattern, PList) and isinstance(d.bound, EList) and len(d.pattern.items) == len(d.bound.items) and all(isinstance(p, PVar) for p in d.pattern.items):
            rewritten = _tuple_def_rules(program, i, d)
            if rewritten is not None:
                return rewritten
    # then normalize expressions (lets and nested blocks)
    defs = [Def(d.pattern, _cleanup_expr(d.bound), comments=d.comments) for d in program.defs]
    main = _cleanup_expr(program.main)
    return _rebuild(program, defs, main)


def _tuple_def_rules(program: Program, i: int, d: Def) -> Program | None:
    names = [p.name for p in d.pattern.items]
    bounds = list(d.bound.items)
    # drop unused components; inline aliases and single-use literals
    for j, (name, bound) in enumerate(zip(names, bounds)):
        refs = _top_references(program, d, name)
        if refs == 0:
            return _shrink_tuple_def(program, i, d, j)
        if isinstance(bound, Var):
            shrunk = _shrink_tuple_def(program, i, d, j)
            replaced = _substitute_everywhere(shrunk, name, bound) if shrunk else None
            if replaced is not None:
                return replaced
        if name.endswith(PRIME) and refs == 1 and not isinstance(bound, Num):
            shrunk = _shrink_tuple_def(program, i, d, j)
            replaced = _substitute_everywhere(shrunk, name, bound) if shrunk else None
            if replaced is not None:
                return replaced
        if isinstance(bound, Num) and bound.annot != FROZEN and refs == 1:
            shrunk = _shrink_tuple_def(program, i, d, j)
            replaced = _substitute_everywhere(shrunk, name, bound) if shrunk else None
            if replaced is not None:
                return replaced
    # split non-literal components into their own defs
    if any(not isinstance(b, Num) for b in bounds):
        defs = list(program.defs)
        keep = [(n, b) for n, b in zip(names, bounds) if isinstance(b, Num)]
        move = [(n, b) for n, b in zip(names, bounds) if not isinstance(b, Num)]
        new_defs = []
        if keep:
            if len(keep) == 1:
                new_defs.append(Def(PVar(keep[0][0]), keep[0][1], comments=d.comments))
            else:
                new_defs.append(Def(PList([PVar(n) for n, _ in keep]), EList([b for _, b in keep]), comments=d.comments))
        for n, b in move:
            new_defs.append(Def(PVar(n), b))
        defs[i:i + 1] = new_defs
        return _rebuild(program, defs)
    # singleton collapse
    if len(names) == 1:
        defs = list(program.defs)
        defs[i] = Def(PVar(names[0]), bounds[0], comments=d.comments)
        return _rebuild(program, defs)
    return None


def _shrink_tuple_def(program: Program, i: int, d: Def, drop: int) -> Program:
    names = [p for j, p in enumerate(d.pattern.items) if j != drop]
    bounds = [b for j, b in enumerate(d.bound.items) if j != drop]
    defs = list(program.defs)
    if not names:
        defs.pop(i)
    elif len(names) == 1:
        defs[i] = Def(names[0], bounds[0], comments=d.comments)
    else:
        defs[i] = Def(PList(names), EList(bounds), comments=d.comments)
    return _rebuild(program, defs)


def _top_references(program: Program, skip_def: Def, name: str) -> int:
    total = 0
    for d in program.defs:
        if d is skip_def:
            continue
        if name in pattern_vars(d.pattern):
            continue
        total += count_free(d.bound, name)
    total += count_free(program.main, name)
    return total


def _later_rebinding(program: Program, i: int, name: str) -> bool:
    return any(name in pattern_vars(d.pattern) for d in program.defs[i + 1:])


def _substitute_top(program: Program, i: int, name: str, replacement) -> Program | None:
    """Drop def i and replace uses of name by the expression, if safe."""
    if isinstance(replacement, Var) and _later_rebinding(program, i, replacement.name):
        return None
    defs = list(program.defs)
    defs.pop(i)
    shrunk = _rebuild(program, defs)
    return _substitute_everywhere(shrunk, name, replacement)


def _substitute_everywhere(program: Program, name: str, replacement) -> Program | None:
    fv = free_vars(replacement) if not isinstance(replacement, Num) else set()
    ok = True

    def sub(e, bound: frozenset):
        nonlocal ok
        if not ok:
            return e
        if isinstance(e, Var):
            if e.name == name and name not in bound:
                if fv & bound:
                    ok = False
                    return e
                return replacement
            return e
        if isinstance(e, (Num, Str)):
            return e
        if isinstance(e, Let):
            inner = bound | frozenset(pattern_vars(e.pattern))
            return Let(e.pattern, sub(e.bound, inner if e.rec else bound), sub(e.body, inner), rec=e.rec)
        if isinstance(e, Lam):
            inner = bound
            for p in e.params:
                inner = inner | frozenset(pattern_vars(p))
            return Lam(e.params, sub(e.body, inner))
        if isinstance(e, Block):
            scope = bound
            new_defs = []
            for d in e.defs:
                scope_self = scope | frozenset(pattern_vars(d.pattern))
                new_defs.append(Def(d.pattern, sub(d.bound, scope_self), comments=d.comments))
                scope = scope_self
            return Block(new_defs, sub(e.result, scope))
        return map_children(e, lambda c: sub(c, bound))

    new_defs = []
    for d in program.defs:
        if name in pattern_vars(d.pattern):
            new_defs.append(d)
            continue
        new_defs.append(Def(d.pattern, sub(d.bound, frozenset()), comments=d.comments))
    new_main = sub(program.main, frozenset())
    if not ok:
        return None
    return _rebuild(program, new_defs, new_main)


# -- expression-level cleanup (lets and nested blocks) ----------------------


def _cleanup_expr(e):
    if isinstance(e, (Num, Str, Var)):
        return e
    e = map_children(e, _cleanup_expr)
    if isinstance(e, Let):
        return _cleanup_let(e)
    if isinstance(e, Block):
        return _cleanup_block(e)
    return e


def _subst_expr(e, name: str, replacement):
    """Substitute inside one expression; None when capture would occur."""
    fv = free_vars(replacement) if not isinstance(replacement, (Num, Str)) else set()
    ok = True

    def sub(x, bound):
        nonlocal ok
        if not ok:
            return x
        if isinstance(x, Var):
            if x.name == name and name not in bound:
                if fv & bound:
                    ok = False
                return replacement
            return x
        if isinstance(x, (Num, Str)):
            return x
        if isinstance(x, Let):
            inner = bound | frozenset(pattern_vars(x.pattern))
            return Let(x.pattern, sub(x.bound, inner if x.rec else bound), sub(x.body, inner), rec=x.rec)
        if isinstance(x, Lam):
            inner = bound
            for p in x.params:
                inner = inner | frozenset(pattern_vars(p))
            return Lam(x.params, sub(x.body, inner))
        if isinstance(x, Block):
            scope = bound
            new_defs = []
            for d in x.defs:
                scope_self = scope | frozenset(pattern_vars(d.pattern))
                new_defs.append(Def(d.pattern, sub(d.bound, scope_self), comments=d.comments))
                scope = scope_self
            return Block(new_defs, sub(x.result, scope))
        return map_children(x, lambda c: sub(c, bound))

    result = sub(e, frozenset())
    return result if ok else None


def _cleanup_let(e: Let) -> object:
    # unused binding: drop the let entirely
    if isinstance(e.pattern, PVar):
        uses = count_free(e.body, e.pattern.name)
        if uses == 0:
            return e.body
        # alias: (let x y body) -> body[x := y]
        if isinstance(e.bound, Var):
            replaced = _subst_expr(e.body, e.pattern.name, e.bound)
            if replaced is not None:
                return replaced
        # primed single-use helper
        if e.pattern.name.endswith(PRIME) and uses == 1:
            replaced = _subst_expr(e.body, e.pattern.name, e.bound)
            if replaced is not None:
                return replaced
        return e
    if isinstance(e.pattern, PList) and isinstance(e.bound, EList) and len(e.pattern.items) == len(e.bound.items) and all(isinstance(p, PVar) for p in e.pattern.items):
        names = [p.name for p in e.pattern.items]
        bounds = list(e.bound.items)
        body = e.body
        # aliases and unused/primed components inline away
        for j, (name, bound) in enumerate(zip(names, bounds)):
            uses = count_free(body, name)
            keep_rest = lambda: Let(
                PList([PVar(n) for k, n in enumerate(names) if k != j]),
                EList([b for k, b in enumerate(bounds) if k != j]),
                body,
            ) if len(names) > 1 else body
            if uses == 0:
                return _cleanup_let(keep_rest()) if len(names) > 1 else body
            if isinstance(bound, Var):
                replaced = _subst_expr(body, name, bound)
                if replaced is not None:
                    shrunk = keep_rest()
                    if isinstance(shrunk, Let):
                        return _cleanup_let(Let(shrunk.pattern, shrunk.bound, replaced))
                    return replaced
            if name.endswith(PRIME) and uses == 1 and not isinstance(bound, Num):
                replaced = _subst_expr(body, name, bound)
                if replaced is not None:
                    shrunk = keep_rest()
                    if isinstance(shrunk, Let):
                        return _cleanup_let(Let(shrunk.pattern, shrunk.bound, replaced))
                    return replaced
        # split when expressions crept into a literal tuple (no cross refs)
        if any(not isinstance(b, Num) for b in bounds):
            cross = any(
                any(n in free_vars(b) for n in names[:j])
                for j, b in enumerate(bounds)
            )
            if not cross:
                out = body
                for name, bound in reversed(list(zip(names, bounds))):
                    out = Let(PVar(name), bound, out)
                return out
        if len(names) == 1:
            return Let(PVar(names[0]), bounds[0], e.body)
    return e


def _cleanup_block(e: Block) -> object:
    defs = list(e.defs)
    result = e.result
    for i, d in enumerate(defs):
        remaining = Block(defs[i + 1:], result)
        if isinstance(d.pattern, PVar):
            uses = count_free(remaining, d.pattern.name)
            if uses == 0:
                return _cleanup_block(Block(defs[:i] + defs[i + 1:], result)) if len(defs) > 1 else result
            if isinstance(d.bound, Var):
                replaced = _subst_expr(remaining, d.pattern.name, d.bound)
                if isinstance(replaced, Block):
                    return _cleanup_block(Block(defs[:i] + replaced.defs, replaced.result))
            if d.pattern.name.endswith(PRIME) and uses == 1:
                replaced = _subst_expr(remaining, d.pattern.name, d.bound)
                if isinstance(replaced, Block):
                    return _cleanup_block(Block(defs[:i] + replaced.defs, replaced.result))
        if isinstance(d.pattern, PList) and isinstance(d.bound, EList) and len(d.pattern.items) == len(d.bound.items) and all(isinstance(p, PVar) for p in d.pattern.items):
            names = [p.name for p in d.pattern.items]
            bounds = list(d.bound.items)
            for j, (name, bound) in enumerate(zip(names, bounds)):
                uses = count_free(remaining, name)
                if uses == 0 or isinstance(bound, Var):
                    new_d = None
                    if len(names) > 1:
                        new_d = Def(
                            PList([PVar(n) for k, n in enumerate(names) if k != j]),
                            EList([b for k, b in enumerate(bounds) if k != j]),
                            comments=d.comments,
                        )
                    if uses == 0:
                        new_defs = defs[:i] + ([new_d] if new_d else []) + defs[i + 1:]
                        return _cleanup_block(Block(new_defs, result))
                    replaced = _subst_expr(remaining, name, bound)
                    if isinstance(replaced, Block):
                        new_defs = defs[:i] + ([new_d] if new_d else []) + replaced.defs
                        return _cleanup_block(Block(new_defs, replaced.result))
            if len(names) == 1:
                defs2 = list(defs)
                defs2[i] = Def(PVar(names[0]), bounds[0], comments=d.comments)
                return _cleanup_block(Block(defs2, result))
    if not defs:
        return result
    return Block(defs, result)
