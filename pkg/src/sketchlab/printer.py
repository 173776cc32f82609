"""Canonical pretty-printer for little programs.

The layout is a pure function of the AST (plus list padding recorded by
the parser), so parse(unparse(p)) reproduces p and unparsing is a
fixpoint on its own output.

Rendering contract: every render function returns text whose first line
carries no indentation (the caller places it) while continuation lines
are indented absolutely.
"""

from __future__ import annotations

from .syntax import (
    App,
    Block,
    Def,
    EList,
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

WIDTH = 64
LAMBDA = "λ"


def fmt_pattern(p) -> str:
    if isinstance(p, PVar):
        return p.name
    return "[" + " ".join(fmt_pattern(x) for x in p.items) + "]"


def fmt_inline(e) -> str:
    """Single-line rendering of an expression."""
    if isinstance(e, Num):
        return e.text + e.annot
    if isinstance(e, Str):
        return f"'{e.text}'"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, EList):
        inner = " ".join(fmt_inline(x) for x in e.items)
        if e.padded and e.items:
            return f"[ {inner} ]"
        return f"[{inner}]"
    if isinstance(e, Op):
        return f"({e.name} " + " ".join(fmt_inline(a) for a in e.args) + ")"
    if isinstance(e, App):
        parts = [fmt_inline(e.fn)] + [fmt_inline(a) for a in e.args]
        return "(" + " ".join(parts) + ")"
    if isinstance(e, Lam):
        params = " ".join(fmt_pattern(p) for p in e.params)
        body = fmt_inline(e.body)
        return f"({LAMBDA} ({params}) {body})"
    if isinstance(e, Let):
        kw = "letrec" if e.rec else "let"
        return f"({kw} {fmt_pattern(e.pattern)} {fmt_inline(e.bound)} {fmt_inline(e.body)})"
    if isinstance(e, If):
        return f"(if {fmt_inline(e.cond)} {fmt_inline(e.then)} {fmt_inline(e.els)})"
    if isinstance(e, Block):
        parts = [f"(def {fmt_pattern(d.pattern)} {fmt_inline(d.bound)})" for d in e.defs]
        parts.append(fmt_inline(e.result))
        return " ".join(parts)
    raise TypeError(f"cannot print {e!r}")


def _fits(text: str, col: int) -> bool:
    return "\n" not in text and col + len(text) <= WIDTH


def render(e, col: int) -> str:
    inline = fmt_inline(e)
    if _fits(inline, col):
        return inline
    if isinstance(e, EList):
        return _render_list(e, col)
    if isinstance(e, (App, Op)):
        return _render_call(e, col)
    if isinstance(e, Let):
        return _render_let_chain(e, col)
    if isinstance(e, Lam):
        return _render_lambda(e, col)
    if isinstance(e, Block):
        return _render_items(list(e.defs) + [e.result], col)
    if isinstance(e, If):
        pad = " " * (col + 2)
        return (
            f"(if {render(e.cond, col + 4)}\n"
            f"{pad}{render(e.then, col + 2)}\n"
            f"{pad}{render(e.els, col + 2)})"
        )
    return inline  # atoms never exceed the width by themselves


def _render_list(e: EList, col: int) -> str:
    if e.padded and len(e.items) == 1:
        return "[ " + render(e.items[0], col + 2) + " ]"
    if e.padded:
        pad = " " * (col + 2)
        body = "\n".join(pad + render(item, col + 2) for item in e.items)
        return "[\n" + body + "\n" + " " * col + "]"
    # fill-wrap, continuation aligned one past the bracket
    align = col + 1
    lines: list[str] = []
    current = ""
    cursor = align
    empty = True  # no element on the current line yet
    for item in e.items:
        part = fmt_inline(item)
        if not empty and cursor + 1 + len(part) > WIDTH:
            lines.append(current)
            current = " " * align
            cursor = align
            empty = True
        if not empty:
            current += " "
            cursor += 1
        current += part
        cursor += len(part)
        empty = False
    lines.append(current)
    lines[0] = "[" + lines[0]
    lines[-1] += "]"
    return "\n".join(lines)


def _render_call(e, col: int) -> str:
    head = e.name if isinstance(e, Op) else fmt_inline(e.fn)
    args = e.args
    open_part = f"({head} "
    align = col + len(open_part)
    if len(args) == 1:
        return open_part + render(args[0], align) + ")"
    lines: list[str] = []
    current = open_part  # always carries the head until first flush
    cursor = align
    empty = True  # nothing after the head on the current line yet
    first_line = True
    for arg in args:
        part = fmt_inline(arg)
        if align + len(part) > WIDTH:
            # oversized argument: render it multi-line in place
            rendered = render(arg, align)
            if empty:
                lines.append(current + rendered)
            else:
                lines.append(current)
                lines.append(" " * align + rendered)
            current = " " * align
            cursor = align
            empty = True
            first_line = False
            continue
        if not empty and cursor + 1 + len(part) > WIDTH:
            lines.append(current)
            current = " " * align
            cursor = align
            empty = True
            first_line = False
        if not empty:
            current += " "
            cursor += 1
        current += part
        cursor += len(part)
        empty = False
    if not empty or first_line:
        lines.append(current)
    lines[-1] += ")"
    return "\n".join(lines)


def _render_let_chain(e: Let, col: int) -> str:
    """Aligned let chain: every link at the same column, body two deeper."""
    links = []
    node = e
    while isinstance(node, Let):
        links.append(node)
        node = node.body
    pad = " " * col
    lines = []
    for i, link in enumerate(links):
        kw = "letrec" if link.rec else "let"
        header = f"({kw} {fmt_pattern(link.pattern)} "
        bound = render(link.bound, col + len(header))
        lines.append((pad if i else "") + header + bound)
    body = render(node, col + 2)
    lines.append(" " * (col + 2) + body + ")" * len(links))
    return "\n".join(lines)


def _render_lambda(e: Lam, col: int) -> str:
    params = " ".join(fmt_pattern(p) for p in e.params)
    pad = " " * (col + 2)
    return f"({LAMBDA} ({params})\n" + pad + render(e.body, col + 2) + ")"


def render_def(d: Def, col: int) -> str:
    head = f"(def {fmt_pattern(d.pattern)} "
    inline = fmt_inline(d.bound)
    if not isinstance(d.bound, (Lam, Let, Block)) and _fits(head + inline + ")", col):
        return head + inline + ")"
    pad = " " * (col + 2)
    return f"(def {fmt_pattern(d.pattern)}\n" + pad + render(d.bound, col + 2) + ")"


def _item_text(item, col: int) -> str:
    """Def or result expression, first line unpadded, comments attached."""
    pad = " " * col
    if isinstance(item, Def):
        lines = list(item.comments)
        lines.append(render_def(item, col))
        return ("\n" + pad).join(lines)
    return render(item, col)


def _render_items(items: list, col: int) -> str:
    """Item sequence with canonical blank lines: single-line items pack
    together; a blank separates any pair where either side is multi-line."""
    pad = " " * col
    rendered = [_item_text(item, col) for item in items]
    out = rendered[0]
    for prev, cur in zip(rendered, rendered[1:]):
        sep = "\n\n" if ("\n" in prev or "\n" in cur) else "\n"
        out += sep + pad + cur
    return out


def unparse(program: Program) -> str:
    """Deterministic canonical source text for a program."""
    items = list(program.defs) + [program.main]
    rendered = []
    for item in items:
        if item is program.main and program.main_comments:
            text = "\n".join(program.main_comments) + "\n" + render(item, 0)
        else:
            text = _item_text(item, 0)
        rendered.append(text)
    out = rendered[0]
    for prev, cur in zip(rendered, rendered[1:]):
        sep = "\n\n" if ("\n" in prev or "\n" in cur) else "\n"
        out += sep + cur
    for c in program.end_comments:
        out += "\n" + c
    return out + "\n"
