"""Group, Abstract, Duplicate and Merge over top-level blobs."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    EmptySelection,
    InvalidSelection,
    NoBoundsPattern,
    NotSimple,
    NotStructurallyEquivalent,
)
from .features import blobs_list, features_of, is_simple, loc_axes
from .interp import eval_expr, evaluate_full
from .relate import cleanup, lifted_style, _rebuild
from .svg import node_extent, union_extents
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
    PList,
    Program,
    PVar,
    Str,
    THAWED,
    Var,
    ast_equal,
    copy_with_fresh_locs,
    count_free,
    fmt_number,
    free_vars,
    map_children,
    num,
    pattern_equal,
    pattern_vars,
    shape_name,
    walk,
)

BOUNDS_NAMES = ["left", "top", "right", "bot"]
BOUNDS_AXES = ["x", "y", "x", "y"]


def _require_simple(program: Program):
    if not is_simple(program):
        raise NotSimple("this tool needs the simple (def ... blobs) structure")


def _blob_root_ranges(program: Program, env) -> list[tuple[int, int]]:
    """Half-open root-node index range produced by each blobs entry."""
    ranges = []
    start = 0
    for entry in blobs_list(program).items:
        value = eval_expr(entry, env)
        count = len(value) if isinstance(value, list) else 0
        ranges.append((start, start + count))
        start += count
    return ranges


def _entry_def_index(program: Program, entry) -> int | None:
    if not isinstance(entry, Var):
        return None
    for i, d in enumerate(program.defs):
        if isinstance(d.pattern, PVar) and d.pattern.name == entry.name:
            return i
    return None


# ---------------------------------------------------------------------------
# Group


def group(program: Program, selection: list[int]) -> Program:
    """Fuse the selected blobs into one bounds-driven group definition."""
    _require_simple(program)
    entries = blobs_list(program).items
    if len(set(selection)) < 2:
        raise EmptySelection("select at least two blobs to group")
    if any(not 0 <= i < len(entries) for i in selection):
        raise InvalidSelection("blob index out of range")
    selection = sorted(set(selection), key=selection.index)

    canvas, env = evaluate_full(program)
    features = features_of(program, canvas, env)
    axes = loc_axes(features)
    ranges = _blob_root_ranges(program, env)
    extents = []
    for i in selection:
        lo, hi = ranges[i]
        extents.extend(node_extent(n) for n in canvas.roots[lo:hi])
    gl, gt, gr, gb = union_extents(extents)

    name = shape_name(program, "newGroup")
    counter = LocCounter(program.next_loc)

    # selected defs (or synthesized defs for call blobs)
    selected_def_idx: list[int] = []
    synthesized: list[Def] = []
    member_names: list[str] = []
    for i in selection:
        entry = entries[i]
        di = _entry_def_index(program, entry)
        if di is not None:
            selected_def_idx.append(di)
            member_names.append(entry.name)
        else:
            inner = f"item{len(synthesized) + 1}"
            base = inner
            k = 1
            taken = {v for d in program.defs for v in pattern_vars(d.pattern)}
            while inner in taken:
                k += 1
                inner = f"{base}{k}"
            synthesized.append(Def(PVar(inner), entry))
            member_names.append(inner)

    supporting_idx = _supporting_defs(program, set(selected_def_idx))

    bounds_def = Def(
        PList([PVar(n) for n in BOUNDS_NAMES]),
        EList([num(v, loc=counter.take()) for v in (gl, gt, gr, gb)]),
    )
    alias_def = Def(PVar("bounds"), EList([Var(n) for n in BOUNDS_NAMES]))

    moved = [program.defs[i] for i in sorted(supporting_idx)]
    members = [program.defs[i] for i in sorted(selected_def_idx)] + synthesized
    rewritten = [_rewrite_bounds(d, (gl, gt, gr, gb), axes, counter) for d in moved + members]

    result = EList(
        [App(Var("group"), [Var("bounds"), App(Var("concat"), [EList([Var(n) for n in member_names], padded=True)])])],
        padded=True,
    )
    body = Block([bounds_def, alias_def] + rewritten, result)

    removed = set(selected_def_idx) | set(supporting_idx)
    first_sel_def = min(selected_def_idx) if selected_def_idx else len(program.defs)
    insert_at = first_sel_def - sum(1 for i in removed if i < first_sel_def)
    defs = [d for i, d in enumerate(program.defs) if i not in removed]
    # the new def must come after everything its body references
    needed = free_vars(body)
    for i, d in enumerate(defs):
        if needed & set(pattern_vars(d.pattern)):
            insert_at = max(insert_at, i + 1)
    defs.insert(insert_at, Def(PVar(name), body))

    new_entries = []
    placed = False
    for i, entry in enumerate(entries):
        if i in selection:
            if not placed:
                new_entries.append(Var(name))
                placed = True
            continue
        new_entries.append(entry)
    new_main = App(Var("blobs"), [EList(new_entries, padded=True)])

    out = Program(defs, new_main, main_comments=program.main_comments,
                  end_comments=program.end_comments, next_loc=counter.next)
    return cleanup(out)


def _supporting_defs(program: Program, selected: set[int]) -> set[int]:
    """Defs used exclusively by the selected blobs (they move into the group)."""
    supporting: set[int] = set()
    changed = True
    while changed:
        changed = False
        inside = selected | supporting
        for i, d in enumerate(program.defs):
            if i in inside:
                continue
            names = pattern_vars(d.pattern)
            if not names:
                continue
            uses_inside = 0
            uses_outside = 0
            for name in names:
                uses_outside += count_free(program.main, name)
                for j, other in enumerate(program.defs):
                    if j == i or name in pattern_vars(other.pattern):
                        continue
                    n = count_free(other.bound, name)
                    if j in inside:
                        uses_inside += n
                    else:
                        uses_outside += n
            if uses_inside > 0 and uses_outside == 0:
                supporting.add(i)
                changed = True
    return supporting


def _pct_num(ratio: float, lo: float, hi: float, original: float, counter: LocCounter) -> Num:
    """Thawed percentage literal; 2 dp when that reproduces the coordinate."""
    rounded = round(ratio, 2)
    if abs((lo + rounded * (hi - lo)) - original) <= 1e-6:
        text = f"{rounded:.2f}"
    else:
        text = repr(ratio)
    n = Num(value=float(text), text=text, annot=THAWED, loc=counter.take())
    return n


def _scaled(value: Num, axis: str, gbounds, counter: LocCounter):
    gl, gt, gr, gb = gbounds
    lo, hi = (gl, gr) if axis == "x" else (gt, gb)
    lo_name, hi_name = ("left", "right") if axis == "x" else ("top", "bot")
    if hi == lo:
        return Var(lo_name)
    ratio = (value.value - lo) / (hi - lo)
    if ratio == 0:
        return Var(lo_name)
    if ratio == 1:
        return Var(hi_name)
    return App(Var("scaleBetween"), [Var(lo_name), Var(hi_name), _pct_num(ratio, lo, hi, value.value, counter)])


def _rewrite_bounds(d: Def, gbounds, axes: dict[int, str], counter: LocCounter) -> Def:
    """Re-express a member def's bounding constants relative to the group."""

    def fix_tuple(pattern, bound):
        if (
            isinstance(pattern, PList)
            and isinstance(bound, EList)
            and [getattr(p, "name", None) for p in pattern.items] == BOUNDS_NAMES
            and all(isinstance(b, Num) for b in bound.items)
        ):
            return EList([
                _scaled(b, axis, gbounds, counter)
                for b, axis in zip(bound.items, BOUNDS_AXES)
            ])
        return None

    def visit(e):
        if isinstance(e, Let):
            fixed = fix_tuple(e.pattern, e.bound)
            bound = fixed if fixed is not None else visit(e.bound)
            return Let(e.pattern, bound, visit(e.body), rec=e.rec)
        if isinstance(e, Block):
            new_defs = []
            for item in e.defs:
                fixed = fix_tuple(item.pattern, item.bound)
                new_defs.append(Def(item.pattern, fixed if fixed is not None else visit(item.bound), comments=item.comments))
            return Block(new_defs, visit(e.result))
        if isinstance(e, App) and isinstance(e.args[-1] if e.args else None, EList):
            last = e.args[-1]
            if len(last.items) == 4 and all(isinstance(b, Num) for b in last.items):
                new_last = EList([
                    _scaled(b, axis, gbounds, counter)
                    for b, axis in zip(last.items, BOUNDS_AXES)
                ])
                return App(visit(e.fn), [visit(a) for a in e.args[:-1]] + [new_last], pos=e.pos)
        if isinstance(e, (Num, Str, Var)):
            return e
        return map_children(e, visit)

    if lifted_style(d):
        # lifted-constant defs: scale each positional component
        if isinstance(d.pattern, PVar):
            axis = axes.get(d.bound.loc)
            if axis in ("x", "y"):
                return Def(d.pattern, _scaled(d.bound, axis, gbounds, counter), comments=d.comments)
            return d
        new_items = []
        for p, b in zip(d.pattern.items, d.bound.items):
            axis = axes.get(b.loc)
            new_items.append(_scaled(b, axis, gbounds, counter) if axis in ("x", "y") else b)
        return Def(d.pattern, EList(new_items), comments=d.comments)

    fixed = fix_tuple(d.pattern, d.bound)
    if fixed is not None:
        return Def(d.pattern, fixed, comments=d.comments)
    return Def(d.pattern, visit(d.bound), comments=d.comments)


# ---------------------------------------------------------------------------
# Abstract


@dataclass
class AbstractResult:
    program: Program
    fn_name: str
    arg_values: list[float]
    has_bounds: bool


def abstract(program: Program, blob_index: int) -> AbstractResult:
    """Turn a blob definition into a reusable stencil function."""
    _require_simple(program)
    entries = blobs_list(program).items
    if not 0 <= blob_index < len(entries):
        raise InvalidSelection("blob index out of range")
    entry = entries[blob_index]
    di = _entry_def_index(program, entry)
    if di is None:
        raise InvalidSelection("only a definition blob can be abstracted")
    d = program.defs[di]
    name = d.pattern.name

    bounds_binding = _find_bounds_binding(d.bound)
    scalars = _scalar_bindings(d.bound, exclude=bounds_binding)

    body = d.bound
    for binding in scalars:
        body = _remove_binding(body, binding)
    bounds_nums: list[Num] = []
    if bounds_binding is not None:
        bounds_nums = list(bounds_binding[1].items)
        body = _remove_binding(body, bounds_binding)

    params = [PVar(p.name) for p, _ in scalars]
    if bounds_binding is not None:
        params.append(PList([PVar(n) for n in BOUNDS_NAMES]))
    fn = Lam(params, body)

    arg_nums = [b for _, b in scalars]
    callee = App(Var(name), list(arg_nums)) if arg_nums else Var(name)
    if bounds_binding is not None:
        call = App(callee, [EList(bounds_nums)]) if arg_nums else App(Var(name), [EList(bounds_nums)])
    else:
        call = App(Var(name), list(arg_nums))

    defs = list(program.defs)
    defs[di] = Def(d.pattern, fn, comments=d.comments)
    new_entries = list(entries)
    new_entries[blob_index] = call
    new_main = App(Var("blobs"), [EList(new_entries, padded=True)])
    out = _rebuild(program, defs, new_main)
    return AbstractResult(out, name, [n.value for n in arg_nums], bounds_binding is not None)


def _find_bounds_binding(body):
    """The (def/let [left top right bot] [l t r b]) literal binding, if any."""
    found: list[tuple] = []

    def check(pattern, bound):
        if (
            isinstance(pattern, PList)
            and isinstance(bound, EList)
            and [getattr(p, "name", None) for p in pattern.items] == BOUNDS_NAMES
            and all(isinstance(b, Num) for b in bound.items)
        ):
            found.append((pattern, bound))

    def visit(e):
        if found:
            return
        if isinstance(e, Block):
            for item in e.defs:
                check(item.pattern, item.bound)
                if found:
                    return
            visit(e.result)
            return
        if isinstance(e, Let):
            check(e.pattern, e.bound)
            if not found:
                visit(e.body)
            return

    visit(body)
    return found[0] if found else None


def _scalar_bindings(body, exclude) -> list[tuple[PVar, Num]]:
    """Named non-frozen constants in first-appearance order."""
    out: list[tuple[PVar, Num]] = []
    taken: set[str] = set()

    def consider(pattern, bound):
        if exclude is not None and pattern is exclude[0]:
            return
        if isinstance(pattern, PVar) and isinstance(bound, Num) and bound.annot != FROZEN:
            if pattern.name not in taken:
                out.append((pattern, bound))
                taken.add(pattern.name)
            return
        if (
            isinstance(pattern, PList)
            and isinstance(bound, EList)
            and len(pattern.items) == len(bound.items)
            and all(isinstance(p, PVar) for p in pattern.items)
            and all(isinstance(b, Num) for b in bound.items)
        ):
            for p, b in zip(pattern.items, bound.items):
                if b.annot != FROZEN and p.name not in taken:
                    out.append((p, b))
                    taken.add(p.name)

    def visit(e):
        if isinstance(e, Block):
            for item in e.defs:
                consider(item.pattern, item.bound)
                visit(item.bound)
            visit(e.result)
            return
        if isinstance(e, Let):
            consider(e.pattern, e.bound)
            visit(e.bound)
            visit(e.body)
            return
        if isinstance(e, (Num, Str, Var)):
            return
        from .syntax import child_exprs

        for c in child_exprs(e):
            visit(c)

    visit(body)
    return out


def _remove_binding(body, binding):
    """Erase a parameterized binding; bound values move to the call site."""
    pattern, bound = binding

    def visit(e):
        if isinstance(e, Let):
            if e.pattern is pattern:
                return visit(e.body)
            if isinstance(e.pattern, PList) and isinstance(e.bound, EList):
                shrunk = _shrink(e.pattern, e.bound, pattern)
                if shrunk is not None:
                    new_p, new_b = shrunk
                    if new_p is None:
                        return visit(e.body)
                    return Let(new_p, new_b, visit(e.body), rec=e.rec)
            return Let(e.pattern, visit(e.bound), visit(e.body), rec=e.rec)
        if isinstance(e, Block):
            new_defs = []
            for item in e.defs:
                if item.pattern is pattern:
                    continue
                if isinstance(item.pattern, PList) and isinstance(item.bound, EList):
                    shrunk = _shrink(item.pattern, item.bound, pattern)
                    if shrunk is not None:
                        new_p, new_b = shrunk
                        if new_p is not None:
                            new_defs.append(Def(new_p, new_b, comments=item.comments))
                        continue
                new_defs.append(Def(item.pattern, visit(item.bound), comments=item.comments))
            return Block(new_defs, visit(e.result))
        if isinstance(e, (Num, Str, Var)):
            return e
        return map_children(e, visit)

    return visit(body)


def _shrink(pattern: PList, bound: EList, target_pattern):
    """Remove the component whose pattern is the parameterized variable."""
    if not isinstance(target_pattern, PVar):
        return None
    names = [getattr(p, "name", None) for p in pattern.items]
    if target_pattern.name not in names:
        return None
    idx = names.index(target_pattern.name)
    if pattern.items[idx] is not target_pattern:
        return None
    new_p = [p for i, p in enumerate(pattern.items) if i != idx]
    new_b = [b for i, b in enumerate(bound.items) if i != idx]
    if not new_p:
        return None, None
    if len(new_p) == 1:
        return new_p[0], new_b[0]
    return PList(new_p), EList(new_b)


# ---------------------------------------------------------------------------
# Duplicate


def duplicate(program: Program, blob_index: int) -> Program:
    """Copy a blob verbatim under a fresh name with fresh literal locations."""
    _require_simple(program)
    entries = blobs_list(program).items
    if not 0 <= blob_index < len(entries):
        raise InvalidSelection("blob index out of range")
    entry = entries[blob_index]
    counter = LocCounter(program.next_loc)
    defs = list(program.defs)
    di = _entry_def_index(program, entry)
    if di is not None:
        base = entry.name.rstrip("0123456789'") or "shape"
        new_name = shape_name(program, base)
        copied = copy_with_fresh_locs(program.defs[di].bound, counter)
        defs.append(Def(PVar(new_name), copied))
        new_entry = Var(new_name)
    else:
        new_entry = copy_with_fresh_locs(entry, counter)
    new_main = App(Var("blobs"), [EList(list(entries) + [new_entry], padded=True)])
    return Program(defs, new_main, main_comments=program.main_comments,
                   end_comments=program.end_comments, next_loc=counter.next)


# ---------------------------------------------------------------------------
# Merge


def merge(program: Program, selection: list[int]) -> Program:
    """Re-combine structurally equal blobs into one parameterized function."""
    _require_simple(program)
    entries = blobs_list(program).items
    if len(set(selection)) < 2:
        raise EmptySelection("select at least two blobs to merge")
    selection = sorted(set(selection), key=selection.index)
    def_idx = []
    for i in selection:
        if not 0 <= i < len(entries):
            raise InvalidSelection("blob index out of range")
        di = _entry_def_index(program, entries[i])
        if di is None:
            raise NotStructurallyEquivalent("only definition blobs can be merged")
        def_idx.append(di)

    bodies = [program.defs[di].bound for di in def_idx]
    slots: list[list[Num]] = []
    _match_structure(bodies, slots, path="body")

    disagree = [tuple_ for tuple_ in slots if len({n.value for n in tuple_}) > 1]
    fn_name = program.defs[def_idx[0]].pattern.name

    # parameter names from the binder the first copy's literal sits under
    param_names: list[str] = []
    taken = set(pattern_vars(program.defs[def_idx[0]].pattern))
    from .relate import binder_path

    for tuple_ in disagree:
        path = binder_path(program, tuple_[0])
        base = path[-1] if path else "k"
        candidate = base
        i = 2
        while candidate in taken or candidate in param_names:
            candidate = f"{base}{i}"
            i += 1
        param_names.append(candidate)

    body = bodies[0]
    for name, tuple_ in zip(param_names, disagree):
        body = _replace_in(body, tuple_[0], Var(name))

    fn = Lam([PVar(n) for n in param_names], body)
    defs = []
    for i, d in enumerate(program.defs):
        if i == def_idx[0]:
            defs.append(Def(d.pattern, fn, comments=d.comments))
        elif i in def_idx:
            continue
        else:
            defs.append(d)

    calls = {}
    for k, i in enumerate(selection):
        args = [tuple_[k] for tuple_ in disagree]
        calls[i] = App(Var(fn_name), args)
    new_entries = [calls.get(i, e) for i, e in enumerate(entries)]
    new_main = App(Var("blobs"), [EList(new_entries, padded=True)])
    return _rebuild(program, defs, new_main)


def _replace_in(root, old, new):
    from .syntax import replace_node

    return replace_node(root, old, new)


def _match_structure(nodes: list, slots: list[list[Num]], path: str):
    kinds = {type(n) for n in nodes}
    if len(kinds) > 1:
        raise NotStructurallyEquivalent(f"shapes differ at {path}")
    first = nodes[0]
    if isinstance(first, Num):
        annots = {n.annot for n in nodes}
        if len(annots) > 1:
            raise NotStructurallyEquivalent(f"annotations differ at {path}")
        slots.append(list(nodes))
        return
    if isinstance(first, Str):
        if len({n.text for n in nodes}) > 1:
            raise NotStructurallyEquivalent(f"strings differ at {path}")
        return
    if isinstance(first, Var):
        if len({n.name for n in nodes}) > 1:
            raise NotStructurallyEquivalent(f"names differ at {path}")
        return
    if isinstance(first, Op):
        if len({n.name for n in nodes}) > 1 or len({len(n.args) for n in nodes}) > 1:
            raise NotStructurallyEquivalent(f"operators differ at {path}")
        for i in range(len(first.args)):
            _match_structure([n.args[i] for n in nodes], slots, f"{path}.{i}")
        return
    if isinstance(first, EList):
        if len({len(n.items) for n in nodes}) > 1:
            raise NotStructurallyEquivalent(f"list lengths differ at {path}")
        for i in range(len(first.items)):
            _match_structure([n.items[i] for n in nodes], slots, f"{path}[{i}]")
        return
    if isinstance(first, App):
        if len({len(n.args) for n in nodes}) > 1:
            raise NotStructurallyEquivalent(f"call arities differ at {path}")
        _match_structure([n.fn for n in nodes], slots, f"{path}.fn")
        for i in range(len(first.args)):
            _match_structure([n.args[i] for n in nodes], slots, f"{path}.{i}")
        return
    if isinstance(first, Let):
        if len({n.rec for n in nodes}) > 1 or not all(
            pattern_equal(first.pattern, n.pattern) for n in nodes
        ):
            raise NotStructurallyEquivalent(f"bindings differ at {path}")
        _match_structure([n.bound for n in nodes], slots, f"{path}=")
        _match_structure([n.body for n in nodes], slots, f"{path};")
        return
    if isinstance(first, Lam):
        if not all(
            len(n.params) == len(first.params)
            and all(pattern_equal(p, q) for p, q in zip(first.params, n.params))
            for n in nodes
        ):
            raise NotStructurallyEquivalent(f"parameters differ at {path}")
        _match_structure([n.body for n in nodes], slots, f"{path}λ")
        return
    if isinstance(first, Block):
        if len({len(n.defs) for n in nodes}) > 1:
            raise NotStructurallyEquivalent(f"block sizes differ at {path}")
        for i in range(len(first.defs)):
            if not all(pattern_equal(first.defs[i].pattern, n.defs[i].pattern) for n in nodes):
                raise NotStructurallyEquivalent(f"block bindings differ at {path}")
            _match_structure([n.defs[i].bound for n in nodes], slots, f"{path}#{i}")
        _match_structure([n.result for n in nodes], slots, f"{path}!")
        return
    from .syntax import If

    if isinstance(first, If):
        _match_structure([n.cond for n in nodes], slots, f"{path}?")
        _match_structure([n.then for n in nodes], slots, f"{path}:")
        _match_structure([n.els for n in nodes], slots, f"{path}|")
        return
    raise NotStructurallyEquivalent(f"unsupported node at {path}")
