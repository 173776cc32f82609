"""AST for the little language.

Every numeric literal carries a stable location id (loc) and its source
text, so programs can be transformed without disturbing how constants
were written.  Nodes are treated as immutable after construction;
transformations rebuild the spine they change and leave locs intact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

PLAIN = ""
FROZEN = "!"
THAWED = "?"

ARITH_OPS = ("+", "-", "*", "/")
COMPARE_OPS = ("<", ">", "<=", ">=", "=")
OPERATORS = ARITH_OPS + COMPARE_OPS


# ---------------------------------------------------------------------------
# Patterns


@dataclass(eq=False)
class PVar:
    name: str


@dataclass(eq=False)
class PList:
    items: list


Pattern = PVar | PList


def pattern_vars(p: Pattern) -> list[str]:
    if isinstance(p, PVar):
        return [p.name]
    out = []
    for item in p.items:
        out.extend(pattern_vars(item))
    return out


# ---------------------------------------------------------------------------
# Expressions


@dataclass(eq=False)
class Num:
    value: float
    text: str
    annot: str = PLAIN  # "", "!" (frozen) or "?" (thawed)
    loc: int = -1
    pos: tuple[int, int] | None = None


@dataclass(eq=False)
class Str:
    text: str


@dataclass(eq=False)
class Var:
    name: str
    pos: tuple[int, int] | None = None


@dataclass(eq=False)
class EList:
    items: list
    padded: bool = False  # rendered "[ a b ]" instead of "[a b]"


@dataclass(eq=False)
class Op:
    name: str
    args: list
    pos: tuple[int, int] | None = None


@dataclass(eq=False)
class Lam:
    params: list  # of Pattern
    body: object  # Expr or Block


@dataclass(eq=False)
class App:
    fn: object
    args: list
    pos: tuple[int, int] | None = None


@dataclass(eq=False)
class Let:
    pattern: Pattern
    bound: object
    body: object
    rec: bool = False


@dataclass(eq=False)
class If:
    cond: object
    then: object
    els: object


@dataclass(eq=False)
class Def:
    """One `(def p e)` item of a block or of the program top level."""

    pattern: Pattern
    bound: object
    comments: list[str] = field(default_factory=list)


@dataclass(eq=False)
class Block:
    """A def sequence ending in a result expression (function/def bodies)."""

    defs: list  # of Def
    result: object


Expr = Num | Str | Var | EList | Op | Lam | App | Let | If | Block


@dataclass(eq=False)
class Program:
    defs: list  # of Def
    main: object  # Expr
    main_comments: list[str] = field(default_factory=list)
    end_comments: list[str] = field(default_factory=list)
    next_loc: int = 0

    def items(self):
        return list(self.defs) + [self.main]


class LocCounter:
    """Hands out fresh literal locations while a transformation runs."""

    def __init__(self, start: int):
        self.next = start

    def take(self) -> int:
        loc = self.next
        self.next += 1
        return loc


# ---------------------------------------------------------------------------
# Construction helpers


def fmt_number(value: float) -> str:
    """Canonical decimal text for a computed number (6 dp, trimmed)."""
    rounded = round(float(value), 6)
    if rounded == int(rounded):
        return str(int(rounded))
    text = f"{rounded:.6f}".rstrip("0").rstrip(".")
    return text


def num(value: float, annot: str = PLAIN, loc: int = -1, text: str | None = None) -> Num:
    if text is None:
        text = fmt_number(value)
    return Num(value=float(text), text=text, annot=annot, loc=loc)


def child_exprs(e) -> list:
    """Direct expression children of a node (patterns excluded)."""
    if isinstance(e, (Num, Str, Var)):
        return []
    if isinstance(e, EList):
        return list(e.items)
    if isinstance(e, Op):
        return list(e.args)
    if isinstance(e, Lam):
        return [e.body]
    if isinstance(e, App):
        return [e.fn] + list(e.args)
    if isinstance(e, Let):
        return [e.bound, e.body]
    if isinstance(e, If):
        return [e.cond, e.then, e.els]
    if isinstance(e, Block):
        return [d.bound for d in e.defs] + [e.result]
    if isinstance(e, Def):
        return [e.bound]
    if isinstance(e, Program):
        return [d.bound for d in e.defs] + [e.main]
    raise TypeError(f"not an expression: {e!r}")


def walk(e):
    """Pre-order traversal over a node and its descendants."""
    yield e
    for child in child_exprs(e):
        yield from walk(child)


def literals(root) -> list[Num]:
    return [n for n in walk(root) if isinstance(n, Num)]


def loc_map(program: Program) -> dict[int, Num]:
    return {n.loc: n for n in literals(program)}


def contains(root, target) -> bool:
    return any(n is target for n in walk(root))


# ---------------------------------------------------------------------------
# Structural equality (formatting, locs and comments ignored)


def pattern_equal(a: Pattern, b: Pattern) -> bool:
    if isinstance(a, PVar) and isinstance(b, PVar):
        return a.name == b.name
    if isinstance(a, PList) and isinstance(b, PList):
        return len(a.items) == len(b.items) and all(
            pattern_equal(x, y) for x, y in zip(a.items, b.items)
        )
    return False


def ast_equal(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Num):
        return a.text == b.text and a.annot == b.annot
    if isinstance(a, Str):
        return a.text == b.text
    if isinstance(a, Var):
        return a.name == b.name
    if isinstance(a, EList):
        return len(a.items) == len(b.items) and all(
            ast_equal(x, y) for x, y in zip(a.items, b.items)
        )
    if isinstance(a, Op):
        return a.name == b.name and len(a.args) == len(b.args) and all(
            ast_equal(x, y) for x, y in zip(a.args, b.args)
        )
    if isinstance(a, Lam):
        return len(a.params) == len(b.params) and all(
            pattern_equal(p, q) for p, q in zip(a.params, b.params)
        ) and ast_equal(a.body, b.body)
    if isinstance(a, App):
        return ast_equal(a.fn, b.fn) and len(a.args) == len(b.args) and all(
            ast_equal(x, y) for x, y in zip(a.args, b.args)
        )
    if isinstance(a, Let):
        return a.rec == b.rec and pattern_equal(a.pattern, b.pattern) and ast_equal(
            a.bound, b.bound
        ) and ast_equal(a.body, b.body)
    if isinstance(a, If):
        return ast_equal(a.cond, b.cond) and ast_equal(a.then, b.then) and ast_equal(
            a.els, b.els
        )
    if isinstance(a, Def):
        return pattern_equal(a.pattern, b.pattern) and ast_equal(a.bound, b.bound)
    if isinstance(a, Block):
        return len(a.defs) == len(b.defs) and all(
            ast_equal(x, y) for x, y in zip(a.defs, b.defs)
        ) and ast_equal(a.result, b.result)
    if isinstance(a, Program):
        return len(a.defs) == len(b.defs) and all(
            ast_equal(x, y) for x, y in zip(a.defs, b.defs)
        ) and ast_equal(a.main, b.main)
    raise TypeError(f"not comparable: {a!r}")


# ---------------------------------------------------------------------------
# Names and scoping


def bound_names(root) -> set[str]:
    """Every name bound anywhere in the tree (defs, lets, lambda params)."""
    names: set[str] = set()

    def visit(e):
        if isinstance(e, (Program, Block)):
            for d in e.defs:
                names.update(pattern_vars(d.pattern))
        elif isinstance(e, Def):
            names.update(pattern_vars(e.pattern))
        elif isinstance(e, Let):
            names.update(pattern_vars(e.pattern))
        elif isinstance(e, Lam):
            for p in e.params:
                names.update(pattern_vars(p))
        for child in child_exprs(e):
            visit(child)

    visit(root)
    return names


def free_vars(e, bound: frozenset[str] = frozenset()) -> set[str]:
    if isinstance(e, Var):
        return set() if e.name in bound else {e.name}
    if isinstance(e, (Num, Str)):
        return set()
    if isinstance(e, Let):
        inner = bound | frozenset(pattern_vars(e.pattern))
        bound_side = inner if e.rec else bound
        return free_vars(e.bound, bound_side) | free_vars(e.body, inner)
    if isinstance(e, Lam):
        inner = bound
        for p in e.params:
            inner = inner | frozenset(pattern_vars(p))
        return free_vars(e.body, inner)
    if isinstance(e, (Block, Program)):
        out: set[str] = set()
        defs = e.defs
        result = e.result if isinstance(e, Block) else e.main
        scope = bound
        for d in defs:
            # def bodies may refer to their own and earlier bindings
            scope_with_self = scope | frozenset(pattern_vars(d.pattern))
            out |= free_vars(d.bound, scope_with_self)
            scope = scope_with_self
        out |= free_vars(result, scope)
        return out
    out = set()
    for child in child_exprs(e):
        out |= free_vars(child, bound)
    return out


def count_free(e, name: str, bound: frozenset[str] = frozenset()) -> int:
    """Occurrences of `name` in e that are not shadowed by inner binders."""
    if name in bound:
        return 0
    if isinstance(e, Var):
        return 1 if e.name == name else 0
    if isinstance(e, (Num, Str)):
        return 0
    if isinstance(e, Let):
        inner = bound | frozenset(pattern_vars(e.pattern))
        total = count_free(e.bound, name, inner if e.rec else bound)
        return total + count_free(e.body, name, inner)
    if isinstance(e, Lam):
        inner = bound
        for p in e.params:
            inner = inner | frozenset(pattern_vars(p))
        return count_free(e.body, name, inner)
    if isinstance(e, Block):
        total = 0
        scope = bound
        for d in e.defs:
            scope_with_self = scope | frozenset(pattern_vars(d.pattern))
            total += count_free(d.bound, name, scope_with_self)
            scope = scope_with_self
        return total + count_free(e.result, name, scope)
    return sum(count_free(child, name, bound) for child in child_exprs(e))


def count_references(program: Program, name: str, skip_def=None) -> int:
    """References to the top-level binding `name` across the program.

    The binding def itself is skipped (self-recursion does not keep a
    definition alive); a later top-level def rebinding the name shadows
    the remainder of the program.
    """
    total = 0
    for d in program.defs:
        if d is skip_def or name in pattern_vars(d.pattern):
            continue  # self-references inside the binder do not count
        total += count_free(d.bound, name)
    total += count_free(program.main, name)
    return total


def fresh_name(program: Program, base: str) -> str:
    """base + smallest positive integer suffix not bound anywhere in program."""
    taken = bound_names(program)
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def shape_name(program: Program, base: str) -> str:
    """Stencil naming: numbered by how many blobs the canvas already has.

    The first shape of a program becomes rect1, the next line2, and so
    on, so generated programs read like a drawing history.  Falls back
    to bumping when the positional name is taken.
    """
    taken = bound_names(program)
    main = program.main
    if (
        isinstance(main, App)
        and isinstance(main.fn, Var)
        and main.fn.name == "blobs"
        and len(main.args) == 1
        and isinstance(main.args[0], EList)
    ):
        i = len(main.args[0].items) + 1
    else:
        i = len(program.defs) + 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


# ---------------------------------------------------------------------------
# Rebuilding helpers


def map_children(e, fn):
    """Rebuild a node with fn applied to each direct expression child."""
    if isinstance(e, (Num, Str, Var)):
        return e
    if isinstance(e, EList):
        return EList([fn(x) for x in e.items], padded=e.padded)
    if isinstance(e, Op):
        return Op(e.name, [fn(x) for x in e.args], pos=e.pos)
    if isinstance(e, Lam):
        return Lam(e.params, fn(e.body))
    if isinstance(e, App):
        return App(fn(e.fn), [fn(x) for x in e.args], pos=e.pos)
    if isinstance(e, Let):
        return Let(e.pattern, fn(e.bound), fn(e.body), rec=e.rec)
    if isinstance(e, If):
        return If(fn(e.cond), fn(e.then), fn(e.els))
    if isinstance(e, Block):
        return Block([Def(d.pattern, fn(d.bound), comments=d.comments) for d in e.defs], fn(e.result))
    raise TypeError(f"cannot rebuild: {e!r}")


def replace_node(root, old, new):
    """Rebuild root with the node `old` (by identity) replaced by `new`."""
    if root is old:
        return new
    if isinstance(root, (Num, Str, Var)):
        return root
    if not contains(root, old):
        return root
    return map_children(root, lambda c: replace_node(c, old, new))


def rewrite_literal(program: Program, loc: int, value: float) -> Program:
    """Set the literal at `loc` to a new value (text reformatted)."""
    target = loc_map(program)[loc]
    if float(value) == target.value:
        return program  # unchanged, keep the literal exactly as written
    new_num = Num(value=0.0, text=fmt_number(value), annot=target.annot, loc=target.loc)
    new_num.value = float(new_num.text)
    new_defs = [Def(d.pattern, replace_node(d.bound, target, new_num), comments=d.comments) for d in program.defs]
    new_main = replace_node(program.main, target, new_num)
    return Program(
        new_defs,
        new_main,
        main_comments=program.main_comments,
        end_comments=program.end_comments,
        next_loc=program.next_loc,
    )


def substitute(e, mapping: dict[str, object]):
    """Replace free variable occurrences per mapping (values are exprs).

    Substitution stops under binders that shadow a mapped name; it never
    renames binders, so callers must ensure replacement expressions
    cannot be captured at any use site (see relate.cleanup).
    """
    if not mapping:
        return e
    if isinstance(e, Var):
        repl = mapping.get(e.name)
        return repl if repl is not None else e
    if isinstance(e, (Num, Str)):
        return e
    if isinstance(e, Let):
        inner = {k: v for k, v in mapping.items() if k not in pattern_vars(e.pattern)}
        bound_map = inner if e.rec else mapping
        return Let(e.pattern, substitute(e.bound, bound_map), substitute(e.body, inner), rec=e.rec)
    if isinstance(e, Lam):
        inner = dict(mapping)
        for p in e.params:
            for v in pattern_vars(p):
                inner.pop(v, None)
        return Lam(e.params, substitute(e.body, inner))
    if isinstance(e, Block):
        inner = dict(mapping)
        new_defs = []
        for d in e.defs:
            for v in pattern_vars(d.pattern):
                inner.pop(v, None)
            new_defs.append(Def(d.pattern, substitute(d.bound, inner), comments=d.comments))
        return Block(new_defs, substitute(e.result, inner))
    return map_children(e, lambda c: substitute(c, mapping))


def copy_with_fresh_locs(e, counter: LocCounter):
    """Deep copy; every literal gets a new location id."""
    if isinstance(e, Num):
        return Num(value=e.value, text=e.text, annot=e.annot, loc=counter.take())
    if isinstance(e, (Str, Var)):
        return e
    return map_children(e, lambda c: copy_with_fresh_locs(c, counter))


_IDENT_RE = re.compile(r"[A-Za-z_λ][A-Za-z0-9_]*'*$")


def is_identifier(name: str) -> bool:
    return bool(_IDENT_RE.match(name)) and name not in ("def", "let", "letrec", "if", "true", "false")
