"""Lexer and parser for little source text.

Literal locations are assigned in pre-order while parsing, so reparsing
the unparser's output reproduces the same location sequence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
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
    OPERATORS,
    PList,
    PVar,
    Program,
    Str,
    Var,
    is_identifier,
)

_NUM_RE = re.compile(r"-?(\d+\.?\d*|\.\d+)")
_IDENT_START = re.compile(r"[A-Za-z_λ]")
_IDENT_CHAR = re.compile(r"[A-Za-z0-9_]")

KEYWORDS = ("def", "let", "letrec", "if")
LAMBDA_TOKENS = ("λ", "\\", "lambda")


@dataclass
class Token:
    kind: str  # punct | num | str | ident | op | comment | eof
    text: str
    line: int
    col: int
    annot: str = ""
    padded: bool = False  # for '[': whitespace follows immediately


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(k: int = 1):
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance()
            continue
        if c == ";":
            start = i
            while i < n and source[i] != "\n":
                advance()
            tokens.append(Token("comment", source[start:i].rstrip(), line, col))
            continue
        if c in "()[]":
            tok = Token("punct", c, line, col)
            if c == "[":
                tok.padded = i + 1 < n and source[i + 1] in " \t\r\n"
            tokens.append(tok)
            advance()
            continue
        if c == "'":
            start_line, start_col = line, col
            advance()
            start = i
            while i < n and source[i] not in "'\n":
                advance()
            if i >= n or source[i] != "'":
                raise ParseError("unterminated string", start_line, start_col)
            text = source[start:i]
            advance()
            tokens.append(Token("str", text, start_line, start_col))
            continue
        m = _NUM_RE.match(source, i)
        if m and (c.isdigit() or (c == "-" and i + 1 < n and (source[i + 1].isdigit() or source[i + 1] == "."))
                  or (c == "." and i + 1 < n and source[i + 1].isdigit())):
            text = m.group(0)
            start_line, start_col = line, col
            advance(len(text))
            annot = ""
            if i < n and source[i] in "!?":
                annot = source[i]
                advance()
            tokens.append(Token("num", text, start_line, start_col, annot=annot))
            continue
        if c in "+-*/<>=":
            start_line, start_col = line, col
            op = c
            advance()
            if c in "<>" and i < n and source[i] == "=":
                op += "="
                advance()
            tokens.append(Token("op", op, start_line, start_col))
            continue
        if _IDENT_START.match(c) or c == "\\":
            start_line, start_col = line, col
            start = i
            advance()
            while i < n and _IDENT_CHAR.match(source[i]):
                advance()
            while i < n and source[i] == "'":
                advance()
            tokens.append(Token("ident", source[start:i], start_line, start_col))
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = [t for t in tokens if t.kind != "comment"]
        self.comments = [t for t in tokens if t.kind == "comment"]
        self.pos = 0
        self.next_loc = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.take()
        if tok.text != text or tok.kind == "eof":
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def pending_comments(self, before: Token) -> list[str]:
        out = []
        while self.comments and (self.comments[0].line, self.comments[0].col) < (before.line, before.col):
            out.append(self.comments.pop(0).text)
        return out

    def fresh_loc(self) -> int:
        loc = self.next_loc
        self.next_loc += 1
        return loc

    # -- grammar -----------------------------------------------------------

    def program(self) -> Program:
        defs: list[Def] = []
        main = None
        main_comments: list[str] = []
        while self.peek().kind != "eof":
            leading = self.pending_comments(self.peek())
            item = self.item()
            if isinstance(item, Def):
                if main is not None:
                    tok = self.peek()
                    raise ParseError("definitions must precede the main expression", tok.line, tok.col)
                item.comments = leading
                defs.append(item)
            else:
                if main is not None:
                    tok = self.peek()
                    raise ParseError("only one main expression is allowed", tok.line, tok.col)
                main = item
                main_comments = leading
        if main is None:
            raise ParseError("program has no main expression", 0, 0)
        trailing = [t.text for t in self.comments]
        return Program(
            defs,
            main,
            main_comments=main_comments,
            end_comments=trailing,
            next_loc=self.next_loc,
        )

    def item(self):
        """A top-level or block item: either `(def p e...)` or an expression."""
        tok = self.peek()
        if tok.text == "(" and self.tokens[self.pos + 1].text == "def":
            return self.def_item()
        return self.expr()

    def def_item(self) -> Def:
        self.expect("(")
        self.expect("def")
        pattern = self.pattern()
        bound = self.body_until(")")
        self.expect(")")
        return Def(pattern, bound)

    def body_until(self, closer: str):
        """One expression, or a def block ending in an expression."""
        items = []
        comments: list[list[str]] = []
        while self.peek().text != closer:
            comments.append(self.pending_comments(self.peek()))
            items.append(self.item())
            if self.peek().kind == "eof":
                tok = self.peek()
                raise ParseError(f"missing {closer!r}", tok.line, tok.col)
        if not items:
            tok = self.peek()
            raise ParseError("empty body", tok.line, tok.col)
        if len(items) == 1 and not isinstance(items[0], Def):
            return items[0]
        *defs, result = items
        if isinstance(result, Def) or not all(isinstance(d, Def) for d in defs):
            tok = self.peek()
            raise ParseError("a body must be definitions followed by one expression", tok.line, tok.col)
        for d, cs in zip(defs, comments):
            d.comments = cs
        return Block(list(defs), result)

    def pattern(self):
        tok = self.take()
        if tok.kind == "ident" and tok.text not in KEYWORDS and tok.text not in LAMBDA_TOKENS:
            return PVar(tok.text)
        if tok.text == "[":
            items = []
            while self.peek().text != "]":
                if self.peek().kind == "eof":
                    raise ParseError("missing ']' in pattern", tok.line, tok.col)
                items.append(self.pattern())
            self.take()
            return PList(items)
        raise ParseError(f"bad pattern {tok.text!r}", tok.line, tok.col)

    def expr(self):
        tok = self.take()
        if tok.kind == "num":
            value = float(tok.text)
            return Num(value=value, text=tok.text, annot=tok.annot, loc=self.fresh_loc(), pos=(tok.line, tok.col))
        if tok.kind == "str":
            return Str(tok.text)
        if tok.kind == "ident" and tok.text not in KEYWORDS and tok.text not in LAMBDA_TOKENS:
            return Var(tok.text, pos=(tok.line, tok.col))
        if tok.text == "[":
            items = []
            while self.peek().text != "]":
                if self.peek().kind == "eof":
                    raise ParseError("missing ']'", tok.line, tok.col)
                items.append(self.expr())
            self.take()
            return EList(items, padded=tok.padded)
        if tok.text == "(":
            return self.form(tok)
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.col)

    def form(self, open_tok: Token):
        head = self.peek()
        if head.kind == "op":
            self.take()
            args = []
            while self.peek().text != ")":
                args.append(self.expr())
            self.expect(")")
            if len(args) != 2:
                raise ParseError(f"operator {head.text!r} takes two arguments", head.line, head.col)
            return Op(head.text, args, pos=(head.line, head.col))
        if head.text in ("let", "letrec"):
            self.take()
            pattern = self.pattern()
            bound = self.expr()
            body = self.body_until(")")
            self.expect(")")
            return Let(pattern, bound, body, rec=head.text == "letrec")
        if head.text in LAMBDA_TOKENS:
            self.take()
            self.expect("(")
            params = []
            while self.peek().text != ")":
                params.append(self.pattern())
            self.expect(")")
            body = self.body_until(")")
            self.expect(")")
            return Lam(params, body)
        if head.text == "if":
            self.take()
            cond = self.expr()
            then = self.expr()
            els = self.expr()
            self.expect(")")
            return If(cond, then, els)
        if head.text == "def":
            raise ParseError("def is not allowed here", head.line, head.col)
        fn = self.expr()
        args = []
        while self.peek().text != ")":
            if self.peek().kind == "eof":
                raise ParseError("missing ')'", open_tok.line, open_tok.col)
            args.append(self.expr())
        self.expect(")")
        return App(fn, args, pos=(open_tok.line, open_tok.col))


def parse(source: str) -> Program:
    """Parse little source into a Program with pre-order literal locations."""
    return _Parser(tokenize(source)).program()


def parse_expr(source: str):
    """Parse a single expression (testing convenience)."""
    parser = _Parser(tokenize(source))
    e = parser.expr()
    if parser.peek().kind != "eof":
        tok = parser.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return e
