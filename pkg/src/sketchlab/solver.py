"""Value-trace equation solving.

An equation relates two traces over the current literal environment.
Solving eliminates exactly one location: the result is a symbolic
expression over the remaining locations whose value makes both sides
agree.  Only two strategies are attempted, symbolic isolation (the
target occurs once) and linear-coefficient collection; anything else is
Unsolvable by design.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoDegreesOfFreedom, Unsolvable
from .interp import LocLeaf, OpNode, Opaque, Trace, fold_trace, trace_locs
from .syntax import FROZEN, THAWED

VERIFY_RTOL = 1e-9
ZERO_COEFF = 1e-12


@dataclass(frozen=True)
class SRef:
    loc: int


@dataclass(frozen=True)
class SLit:
    value: float


@dataclass(frozen=True)
class SOp:
    op: str
    args: tuple


SymbolicExpr = SRef | SLit | SOp


@dataclass
class Equation:
    lhs: Trace
    rhs: Trace
    env: dict[int, tuple[float, str]]  # loc -> (value, annotation)

    def values(self) -> dict[int, float]:
        return {loc: v for loc, (v, _) in self.env.items()}


def equation_locs(eq: Equation) -> list[int]:
    locs = trace_locs(eq.lhs)
    for loc in trace_locs(eq.rhs):
        if loc not in locs:
            locs.append(loc)
    return locs


def candidate_order(eq: Equation, lhs_first: bool = False, exclude: frozenset[int] = frozenset()) -> list[int]:
    """Eliminable locations, most preferred first.

    Thawed constants always precede plain ones; with lhs_first the
    left-hand side's constants win ties (the side being solved toward
    the representative); final tie-break is the smallest location.
    """
    lhs_locs = set(trace_locs(eq.lhs))
    out = []
    for loc in equation_locs(eq):
        if loc in exclude:
            continue
        value_annot = eq.env.get(loc)
        if value_annot is None or value_annot[1] == FROZEN:
            continue
        annot_rank = 0 if value_annot[1] == THAWED else 1
        side_rank = 0 if (loc in lhs_locs or not lhs_first) else 1
        out.append((annot_rank, side_rank, loc))
    out.sort()
    return [loc for _, _, loc in out]


def choose_loc(eq: Equation) -> int:
    """The constant to eliminate: thawed first, then smallest location."""
    order = candidate_order(eq)
    if not order:
        raise NoDegreesOfFreedom("every constant in the equation is frozen")
    return order[0]


# ---------------------------------------------------------------------------
# Symbolic expressions


def trace_to_sym(t: Trace) -> SymbolicExpr:
    if isinstance(t, LocLeaf):
        return SRef(t.loc)
    if isinstance(t, Opaque):
        return SLit(t.value)
    return SOp(t.op, tuple(trace_to_sym(a) for a in t.args))


def sym_eval(e: SymbolicExpr, values: dict[int, float]) -> float:
    if isinstance(e, SRef):
        return values[e.loc]
    if isinstance(e, SLit):
        return e.value
    args = [sym_eval(a, values) for a in e.args]
    if e.op == "+":
        return args[0] + args[1]
    if e.op == "-":
        return args[0] - args[1]
    if e.op == "*":
        return args[0] * args[1]
    if args[1] == 0:
        raise ZeroDivisionError("symbolic division by zero")
    return args[0] / args[1]


def sym_refs(e: SymbolicExpr) -> set[int]:
    if isinstance(e, SRef):
        return {e.loc}
    if isinstance(e, SLit):
        return set()
    out: set[int] = set()
    for a in e.args:
        out |= sym_refs(a)
    return out


def _occurs(e: SymbolicExpr, loc: int) -> int:
    if isinstance(e, SRef):
        return 1 if e.loc == loc else 0
    if isinstance(e, SLit):
        return 0
    return sum(_occurs(a, loc) for a in e.args)


# ---------------------------------------------------------------------------
# Simplifier


def _rule(e: SymbolicExpr) -> SymbolicExpr:
    if not isinstance(e, SOp):
        return e
    a, b = e.args
    if isinstance(a, SLit) and isinstance(b, SLit):
        if not (e.op == "/" and b.value == 0):
            return SLit(sym_eval(e, {}))
    if e.op == "+":
        if isinstance(b, SLit) and b.value == 0:
            return a
        if isinstance(a, SLit) and a.value == 0:
            return b
    elif e.op == "-":
        if isinstance(b, SLit) and b.value == 0:
            return a
        if a == b:
            return SLit(0.0)
        # double negation: 0 - (0 - x)  ->  x
        if (
            isinstance(a, SLit)
            and a.value == 0
            and isinstance(b, SOp)
            and b.op == "-"
            and isinstance(b.args[0], SLit)
            and b.args[0].value == 0
        ):
            return b.args[1]
    elif e.op == "*":
        if isinstance(b, SLit) and b.value == 1:
            return a
        if isinstance(a, SLit) and a.value == 1:
            return b
        if (isinstance(a, SLit) and a.value == 0) or (isinstance(b, SLit) and b.value == 0):
            return SLit(0.0)
    elif e.op == "/":
        if isinstance(b, SLit) and b.value == 1:
            return a
        if a == b:
            return SLit(1.0)
        if isinstance(a, SLit) and a.value == 0:
            return SLit(0.0)
    return e


def simplify(e: SymbolicExpr) -> SymbolicExpr:
    """Local rewrites to fixpoint; preserves value wherever defined."""
    if isinstance(e, SOp):
        rebuilt = SOp(e.op, tuple(simplify(a) for a in e.args))
        reduced = _rule(rebuilt)
        if reduced != rebuilt:
            return simplify(reduced)
        return rebuilt
    return e


# ---------------------------------------------------------------------------
# Solving


def _isolate(side: SymbolicExpr, other: SymbolicExpr, target: int) -> SymbolicExpr:
    while not (isinstance(side, SRef) and side.loc == target):
        if not isinstance(side, SOp):
            raise Unsolvable("cannot isolate through this expression")
        a, b = side.args
        in_a = _occurs(a, target) > 0
        if side.op == "+":
            other = SOp("-", (other, b if in_a else a))
        elif side.op == "-":
            other = SOp("+", (other, b)) if in_a else SOp("-", (a, other))
        elif side.op == "*":
            other = SOp("/", (other, b if in_a else a))
        elif side.op == "/":
            other = SOp("*", (other, b)) if in_a else SOp("/", (a, other))
        else:
            raise Unsolvable(f"cannot invert operator {side.op}")
        side = a if in_a else b
    return other


def _linear(e: SymbolicExpr, target: int):
    """Decompose e as (coeff, offset) with e == coeff*target + offset.

    A None coefficient means zero (keeps the symbolic form exact).
    """
    if isinstance(e, SRef):
        if e.loc == target:
            return SLit(1.0), SLit(0.0)
        return None, e
    if isinstance(e, SLit):
        return None, e
    ca, ba = _linear(e.args[0], target)
    cb, bb = _linear(e.args[1], target)
    if e.op in ("+", "-"):
        if ca is None and cb is None:
            coeff = None
        elif ca is None:
            coeff = cb if e.op == "+" else SOp("-", (SLit(0.0), cb))
        elif cb is None:
            coeff = ca
        else:
            coeff = SOp(e.op, (ca, cb))
        return coeff, SOp(e.op, (ba, bb))
    if e.op == "*":
        if ca is not None and cb is not None:
            raise Unsolvable("equation is nonlinear in the chosen constant")
        if ca is not None:
            return SOp("*", (ca, bb)), SOp("*", (ba, bb))
        if cb is not None:
            return SOp("*", (ba, cb)), SOp("*", (ba, bb))
        return None, SOp("*", (ba, bb))
    if e.op == "/":
        if cb is not None:
            raise Unsolvable("the chosen constant appears in a denominator")
        if ca is not None:
            return SOp("/", (ca, bb)), SOp("/", (ba, bb))
        return None, SOp("/", (ba, bb))
    raise Unsolvable(f"unknown operator {e.op}")


def _verified(eq: Equation, target: int, solution: SymbolicExpr) -> bool:
    values = eq.values()
    try:
        solved = sym_eval(solution, values)
        patched = dict(values)
        patched[target] = solved
        lhs = fold_trace(eq.lhs, patched)
        rhs = fold_trace(eq.rhs, patched)
    except ZeroDivisionError:
        return False
    return abs(lhs - rhs) <= VERIFY_RTOL * max(1.0, abs(lhs))


def solve_for_loc(eq: Equation, target: int) -> SymbolicExpr:
    """Symbolic expression for `target` making lhs equal rhs.

    Raises Unsolvable for nonlinear occurrences or a vanishing
    coefficient (within 1e-12).
    """
    if target not in equation_locs(eq):
        raise Unsolvable("the chosen constant does not occur in the equation")
    if eq.env.get(target, (0.0, FROZEN))[1] == FROZEN:
        raise Unsolvable("the chosen constant is frozen")
    lhs = trace_to_sym(eq.lhs)
    rhs = trace_to_sym(eq.rhs)
    occurrences = _occurs(lhs, target) + _occurs(rhs, target)

    if occurrences == 1:
        if _occurs(lhs, target):
            solution = simplify(_isolate(lhs, rhs, target))
        else:
            solution = simplify(_isolate(rhs, lhs, target))
        if _verified(eq, target, solution):
            return solution

    ca, ba = _linear(lhs, target)
    cb, bb = _linear(rhs, target)
    if ca is None and cb is None:
        raise Unsolvable("the chosen constant cancelled out")
    if ca is None:
        coeff = SOp("-", (SLit(0.0), cb))
    elif cb is None:
        coeff = ca
    else:
        coeff = SOp("-", (ca, cb))
    values = eq.values()
    try:
        coeff_value = sym_eval(coeff, values)
    except ZeroDivisionError as exc:
        raise Unsolvable("degenerate coefficient") from exc
    if abs(coeff_value) <= ZERO_COEFF:
        raise Unsolvable("zero coefficient for the chosen constant")
    solution = simplify(SOp("/", (SOp("-", (bb, ba)), coeff)))
    if not _verified(eq, target, solution):
        raise Unsolvable("solution failed numeric verification")
    return solution
