"""Big-step evaluator producing an SVG canvas with value traces.

Every number computed at run time carries a trace relating it back to
the program literals (by location) and the operators applied to them.
Frozen literals and prelude constants evaluate to opaque leaves, which
keeps them out of reach of the solver and live synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EvalError
from .syntax import (
    App,
    Block,
    Def,
    EList,
    FROZEN,
    If,
    Lam,
    Let,
    Num,
    Op,
    PList,
    Program,
    PVar,
    Str,
    Var,
)

# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True)
class LocLeaf:
    loc: int


@dataclass(frozen=True)
class OpNode:
    op: str
    args: tuple


@dataclass(frozen=True)
class Opaque:
    value: float


Trace = LocLeaf | OpNode | Opaque


def trace_locs(t: Trace) -> list[int]:
    """Locations appearing in a trace, pre-order, duplicates removed."""
    out: list[int] = []

    def visit(node):
        if isinstance(node, LocLeaf):
            if node.loc not in out:
                out.append(node.loc)
        elif isinstance(node, OpNode):
            for a in node.args:
                visit(a)

    visit(t)
    return out


def fold_trace(t: Trace, values: dict[int, float]) -> float:
    """Re-evaluate a trace over current literal values."""
    if isinstance(t, LocLeaf):
        return values[t.loc]
    if isinstance(t, Opaque):
        return t.value
    args = [fold_trace(a, values) for a in t.args]
    if t.op == "+":
        return args[0] + args[1]
    if t.op == "-":
        return args[0] - args[1]
    if t.op == "*":
        return args[0] * args[1]
    if t.op == "/":
        if args[1] == 0:
            raise ZeroDivisionError("division by zero while folding trace")
        return args[0] / args[1]
    raise ValueError(f"unknown operator in trace: {t.op}")


@dataclass
class NumVal:
    value: float
    trace: Trace


# ---------------------------------------------------------------------------
# Runtime values


class Env:
    __slots__ = ("vars", "parent")

    def __init__(self, parent: "Env | None" = None):
        self.vars: dict[str, object] = {}
        self.parent = parent

    def lookup(self, name: str, pos=None):
        env = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            env = env.parent
        raise EvalError(f"unbound variable '{name}'", pos)

    def bind(self, name: str, value):
        self.vars[name] = value


@dataclass
class Closure:
    params: list
    body: object
    env: Env
    name: str = "<fn>"


@dataclass
class Builtin:
    name: str
    arity: int
    fn: object


# ---------------------------------------------------------------------------
# Evaluation


def bind_pattern(env: Env, pattern, value, pos=None):
    if isinstance(pattern, PVar):
        env.bind(pattern.name, value)
        return
    if not isinstance(value, list) or len(value) != len(pattern.items):
        got = len(value) if isinstance(value, list) else type(value).__name__
        raise EvalError(
            f"pattern expects a list of {len(pattern.items)}, got {got}", pos
        )
    for sub, item in zip(pattern.items, value):
        bind_pattern(env, sub, item, pos)


def as_number(v, what: str, pos=None) -> NumVal:
    if not isinstance(v, NumVal):
        raise EvalError(f"{what} must be a number, got {type(v).__name__}", pos)
    return v


def apply_value(fn, args: list, pos=None):
    if isinstance(fn, Builtin):
        if len(args) != fn.arity:
            raise EvalError(f"{fn.name} takes {fn.arity} arguments, got {len(args)}", pos)
        return fn.fn(*args)
    if isinstance(fn, Closure):
        if len(args) < len(fn.params):
            env = Env(fn.env)
            for p, a in zip(fn.params, args):
                bind_pattern(env, p, a, pos)
            return Closure(fn.params[len(args):], fn.body, env, fn.name)
        head, rest = args[: len(fn.params)], args[len(fn.params):]
        env = Env(fn.env)
        for p, a in zip(fn.params, head):
            bind_pattern(env, p, a, pos)
        result = eval_expr(fn.body, env)
        if rest:
            return apply_value(result, rest, pos)
        return result
    raise EvalError(f"cannot call a {type(fn).__name__}", pos)


def eval_expr(e, env: Env):
    if isinstance(e, Num):
        if e.annot == FROZEN or e.loc < 0:
            return NumVal(e.value, Opaque(e.value))
        return NumVal(e.value, LocLeaf(e.loc))
    if isinstance(e, Str):
        return e.text
    if isinstance(e, Var):
        return env.lookup(e.name, e.pos)
    if isinstance(e, EList):
        return [eval_expr(x, env) for x in e.items]
    if isinstance(e, Op):
        return eval_op(e, env)
    if isinstance(e, Lam):
        return Closure(e.params, e.body, env)
    if isinstance(e, App):
        fn = eval_expr(e.fn, env)
        args = [eval_expr(a, env) for a in e.args]
        return apply_value(fn, args, e.pos)
    if isinstance(e, Let):
        scope = Env(env)
        bound = eval_expr(e.bound, scope if e.rec else env)
        bind_pattern(scope, e.pattern, bound)
        if isinstance(bound, Closure) and isinstance(e.pattern, PVar):
            bound.name = e.pattern.name
        return eval_expr(e.body, scope)
    if isinstance(e, If):
        cond = eval_expr(e.cond, env)
        if not isinstance(cond, bool):
            raise EvalError("if condition must be a boolean")
        return eval_expr(e.then, env) if cond else eval_expr(e.els, env)
    if isinstance(e, Block):
        scope = Env(env)
        eval_defs(e.defs, scope)
        return eval_expr(e.result, scope)
    raise EvalError(f"cannot evaluate {type(e).__name__}")


def eval_defs(defs: list, scope: Env):
    for d in defs:
        value = eval_expr(d.bound, scope)
        bind_pattern(scope, d.pattern, value)
        if isinstance(value, Closure) and isinstance(d.pattern, PVar):
            value.name = d.pattern.name


def eval_op(e: Op, env: Env):
    left = eval_expr(e.args[0], env)
    right = eval_expr(e.args[1], env)
    if e.name in ("+", "-", "*", "/"):
        a = as_number(left, f"left operand of {e.name}", e.pos)
        b = as_number(right, f"right operand of {e.name}", e.pos)
        if e.name == "+":
            value = a.value + b.value
        elif e.name == "-":
            value = a.value - b.value
        elif e.name == "*":
            value = a.value * b.value
        else:
            if b.value == 0:
                raise EvalError("division by zero", e.pos)
            value = a.value / b.value
        return NumVal(value, OpNode(e.name, (a.trace, b.trace)))
    a = as_number(left, f"left operand of {e.name}", e.pos)
    b = as_number(right, f"right operand of {e.name}", e.pos)
    if e.name == "<":
        return a.value < b.value
    if e.name == ">":
        return a.value > b.value
    if e.name == "<=":
        return a.value <= b.value
    if e.name == ">=":
        return a.value >= b.value
    return a.value == b.value


# ---------------------------------------------------------------------------
# Canvas


@dataclass
class SvgNode:
    tag: str
    attrs: dict
    children: list
    ghost: bool = False


@dataclass
class Canvas:
    roots: list
    loc_values: dict[int, float]
    loc_annots: dict[int, str]

    def node_at(self, path: list[int]) -> SvgNode:
        nodes = self.roots
        node = None
        for idx in path:
            if not 0 <= idx < len(nodes):
                raise EvalError(f"no node at path {path}")
            node = nodes[idx]
            nodes = node.children
        if node is None:
            raise EvalError("empty node path")
        return node


def value_to_node(v) -> SvgNode:
    if not (isinstance(v, list) and len(v) == 3 and isinstance(v[0], str)):
        raise EvalError(f"not an SVG node value: {v!r}")
    tag, attrs_v, children_v = v
    if not isinstance(attrs_v, list) or not isinstance(children_v, list):
        raise EvalError(f"malformed SVG node '{tag}'")
    attrs: dict = {}
    ghost = False
    for pair in attrs_v:
        if not (isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str)):
            raise EvalError(f"malformed attribute on '{tag}': {pair!r}")
        name, val = pair
        if name == "ghost":
            ghost = val == "true"
            continue
        attrs[name] = val
    children = [value_to_node(c) for c in children_v]
    return SvgNode(tag, attrs, children, ghost=ghost)


def program_loc_tables(program: Program) -> tuple[dict[int, float], dict[int, str]]:
    values: dict[int, float] = {}
    annots: dict[int, str] = {}
    from .syntax import literals

    for n in literals(program):
        values[n.loc] = n.value
        annots[n.loc] = n.annot
    return values, annots


def evaluate_full(program: Program, base_env: Env | None = None) -> tuple[Canvas, Env]:
    """Evaluate a program; returns the canvas and the top-level environment."""
    from .prelude import prelude_env

    env = Env(base_env if base_env is not None else prelude_env())
    eval_defs(program.defs, env)
    result = eval_expr(program.main, env)
    if not isinstance(result, list):
        raise EvalError("main expression must produce a list of SVG nodes")
    roots = [value_to_node(v) for v in result]
    values, annots = program_loc_tables(program)
    return Canvas(roots, values, annots), env


def evaluate(program: Program, base_env: Env | None = None) -> Canvas:
    """Evaluate a program against the prelude into a canvas of SVG nodes."""
    return evaluate_full(program, base_env)[0]
