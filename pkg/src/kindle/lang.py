"""Front end for the analyzed language: lexer, parser, AST.

The language is a C subset: integer declarations first, then statements
built from assignment, ``nondet()`` input, ``if``/``else``, ``while`` and
``assert``.  Integers are unbounded.  The parser lowers surface sugar so
later passes only see the core operator set:

    a - b    becomes  a + (-b)
    a != b   becomes  !(a == b)
    a <= b   becomes  (a < b) || (a == b)
    a > b    becomes  b < a
    a >= b   becomes  !(a < b)

Core binary operators: + * / % == < ^ | || & && >> <<; unary: ! ~ -.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

BINARY_OPS = {"+", "*", "/", "%", "==", "<", "^", "|", "||", "&", "&&", ">>", "<<"}
UNARY_OPS = {"!", "~", "-"}


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


# -- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Stmt:
    pos: Tuple[int, int] = field(default=(0, 0), kw_only=True)


@dataclass
class Assign(Stmt):
    var: str
    expr: Expr


@dataclass
class Havoc(Stmt):
    """x = nondet();"""
    var: str


@dataclass
class If(Stmt):
    cond: Expr
    then: List[Stmt]
    orelse: List[Stmt]


@dataclass
class While(Stmt):
    cond: Expr
    body: List[Stmt]


@dataclass
class Assert(Stmt):
    cond: Expr


@dataclass
class Program:
    decls: List[str]
    body: List[Stmt]


# -- Lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
      (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
    | (?P<num>\d+)
    | (?P<ident>[A-Za-z_]\w*)
    | (?P<op>==|!=|<=|>=|&&|\|\||<<|>>|[-+*/%^&|~!<>=;(){},])
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class Token:
    kind: str  # 'num' | 'ident' | 'op' | 'eof'
    text: str
    line: int
    col: int


def tokenize(src: str) -> List[Token]:
    toks = []
    pos = 0
    line, col = 1, 1
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            toks.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


# -- Parser ----------------------------------------------------------------

# precedence tiers, loosest first; comparison tier handled separately
_TIERS = [["||"], ["&&"], ["|"], ["^"], ["&"],
          ["==", "!="], ["<", "<=", ">", ">="],
          ["<<", ">>"], ["+", "-"], ["*", "/", "%"]]


class _Parser:
    def __init__(self, toks: List[Token]):
        self.toks = toks
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or (t.kind == "eof" and text != ""):
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def at_ident(self) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text not in ("if", "else", "while",
                                                    "assert", "int", "nondet")

    def program(self) -> Program:
        decls = []
        while self.peek().text == "int":
            self.next()
            t = self.peek()
            if not self.at_ident():
                raise ParseError("expected variable name", t.line, t.col)
            decls.append(self.next().text)
            self.expect(";")
        body = []
        while self.peek().kind != "eof":
            body.append(self.stmt())
        return Program(decls, body)

    def stmt(self) -> Stmt:
        t = self.peek()
        if t.text == "if":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = []
            if self.peek().text == "else":
                self.next()
                orelse = self.block()
            return If(cond, then, orelse, pos=(t.line, t.col))
        if t.text == "while":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.block(), pos=(t.line, t.col))
        if t.text == "assert":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.expect(";")
            return Assert(cond, pos=(t.line, t.col))
        if self.at_ident():
            name = self.next().text
            self.expect("=")
            if self.peek().text == "nondet":
                self.next()
                self.expect("(")
                self.expect(")")
                self.expect(";")
                return Havoc(name, pos=(t.line, t.col))
            e = self.expr()
            self.expect(";")
            return Assign(name, e, pos=(t.line, t.col))
        raise ParseError(f"expected statement, found {t.text!r}", t.line, t.col)

    def block(self) -> List[Stmt]:
        if self.peek().text == "{":
            self.next()
            out = []
            while self.peek().text != "}":
                if self.peek().kind == "eof":
                    t = self.peek()
                    raise ParseError("unterminated block", t.line, t.col)
                out.append(self.stmt())
            self.next()
            return out
        return [self.stmt()]

    def expr(self, tier: int = 0) -> Expr:
        if tier == len(_TIERS):
            return self.unary()
        ops = _TIERS[tier]
        left = self.expr(tier + 1)
        while self.peek().text in ops and self.peek().kind == "op":
            op = self.next().text
            right = self.expr(tier + 1)
            left = _lower_binary(op, left, right)
        return left

    def unary(self) -> Expr:
        t = self.peek()
        if t.text in UNARY_OPS and t.kind == "op":
            self.next()
            return Unary(t.text, self.unary())
        return self.atom()

    def atom(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return Num(int(t.text))
        if t.kind == "ident" and t.text not in ("if", "else", "while",
                                                "assert", "int", "nondet"):
            return Var(t.text)
        if t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"expected expression, found {t.text!r}", t.line, t.col)


def _lower_binary(op: str, a: Expr, b: Expr) -> Expr:
    if op == "-":
        return Binary("+", a, Unary("-", b))
    if op == "!=":
        return Unary("!", Binary("==", a, b))
    if op == "<=":
        return Binary("||", Binary("<", a, b), Binary("==", a, b))
    if op == ">":
        return Binary("<", b, a)
    if op == ">=":
        return Unary("!", Binary("<", a, b))
    return Binary(op, a, b)


def parse(source_text: str) -> Program:
    """Parse source text, lower sugar, check declarations."""
    prog = _Parser(tokenize(source_text)).program()
    _check_vars(prog)
    return prog


def _check_vars(prog: Program) -> None:
    seen = set()
    for d in prog.decls:
        if d in seen:
            raise ParseError(f"duplicate declaration of {d!r}", 0, 0)
        seen.add(d)

    def expr_vars(e: Expr):
        if isinstance(e, Var):
            yield e.name
        elif isinstance(e, Unary):
            yield from expr_vars(e.operand)
        elif isinstance(e, Binary):
            yield from expr_vars(e.left)
            yield from expr_vars(e.right)

    def check(stmts: List[Stmt]):
        for s in stmts:
            used = []
            if isinstance(s, (Assign, Havoc)):
                used.append(s.var)
            if isinstance(s, Assign):
                used.extend(expr_vars(s.expr))
            elif isinstance(s, (If, While, Assert)):
                used.extend(expr_vars(s.cond))
            for v in used:
                if v not in seen:
                    raise ParseError(f"use of undeclared variable {v!r}", *s.pos)
            if isinstance(s, If):
                check(s.then)
                check(s.orelse)
            elif isinstance(s, While):
                check(s.body)

    check(prog.body)


def expr_to_str(e: Expr) -> str:
    """Render an expression for diagnostics and CFA dumps."""
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return f"{e.op}{expr_to_str(e.operand)}"
    if isinstance(e, Binary):
        return f"({expr_to_str(e.left)} {e.op} {expr_to_str(e.right)})"
    raise TypeError(f"not an expression: {e!r}")
