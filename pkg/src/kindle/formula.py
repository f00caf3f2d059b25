"""First-order integer terms with SMT-LIB2 rendering.

Everything the encoder, the invariant generator, and the solver client
exchange is a Term: integer literals, constant symbols, and applications
of the usual arithmetic, comparison, and boolean operators.  Terms are
immutable and hash-consed only by dataclass equality; the helpers below
do just enough simplification (flattening, unit elimination) to keep the
emitted scripts readable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Set, Tuple, Union


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class App:
    op: str
    args: Tuple["Term", ...]


Term = Union[IntLit, Sym, App]

TRUE = App("true", ())
FALSE = App("false", ())

# operators rendered with SMT-LIB spellings; everything else is assumed
# to be an uninterpreted function that the client must declare
_BUILTIN_OPS = {"+", "-", "*", "div", "mod", "ite", "=", "distinct",
                "<", "<=", ">", ">=", "and", "or", "not", "=>",
                "true", "false"}

_BOOL_RESULT_OPS = {"=", "distinct", "<", "<=", ">", ">=",
                    "and", "or", "not", "=>", "true", "false"}


def num(value: int) -> IntLit:
    return IntLit(value)


def sym(name: str) -> Sym:
    return Sym(name)


def _flatten(op: str, xs: Iterable[Term], unit: Term, zero: Term) -> Term:
    flat = []
    for x in xs:
        if x == unit:
            continue
        if x == zero:
            return zero
        if isinstance(x, App) and x.op == op:
            flat.extend(x.args)
        else:
            flat.append(x)
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    return App(op, tuple(flat))


def t_and(*xs: Term) -> Term:
    return _flatten("and", xs, TRUE, FALSE)


def t_or(*xs: Term) -> Term:
    return _flatten("or", xs, FALSE, TRUE)


def t_not(x: Term) -> Term:
    if x == TRUE:
        return FALSE
    if x == FALSE:
        return TRUE
    if isinstance(x, App) and x.op == "not":
        return x.args[0]
    return App("not", (x,))


def t_implies(a: Term, b: Term) -> Term:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    return App("=>", (a, b))


def t_eq(a: Term, b: Term) -> Term:
    if a == b:
        return TRUE
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return FALSE
    return App("=", (a, b))


def t_lt(a: Term, b: Term) -> Term:
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return TRUE if a.value < b.value else FALSE
    return App("<", (a, b))


def t_le(a: Term, b: Term) -> Term:
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return TRUE if a.value <= b.value else FALSE
    return App("<=", (a, b))


def t_ge(a: Term, b: Term) -> Term:
    return t_le(b, a)


def t_gt(a: Term, b: Term) -> Term:
    return t_lt(b, a)


def t_add(*xs: Term) -> Term:
    lits = sum(x.value for x in xs if isinstance(x, IntLit))
    rest = [x for x in xs if not isinstance(x, IntLit)]
    if not rest:
        return IntLit(lits)
    if lits:
        rest.append(IntLit(lits))
    return rest[0] if len(rest) == 1 else App("+", tuple(rest))


def t_sub(a: Term, b: Term) -> Term:
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return IntLit(a.value - b.value)
    if b == IntLit(0):
        return a
    return App("-", (a, b))


def t_neg(a: Term) -> Term:
    if isinstance(a, IntLit):
        return IntLit(-a.value)
    return App("-", (a,))


def t_mul(a: Term, b: Term) -> Term:
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return IntLit(a.value * b.value)
    if a == IntLit(1):
        return b
    if b == IntLit(1):
        return a
    if a == IntLit(0) or b == IntLit(0):
        return IntLit(0)
    return App("*", (a, b))


def t_ite(c: Term, a: Term, b: Term) -> Term:
    if c == TRUE:
        return a
    if c == FALSE:
        return b
    return App("ite", (c, a, b))


def t_div(a: Term, b: Term) -> Term:
    return App("div", (a, b))


def t_mod(a: Term, b: Term) -> Term:
    return App("mod", (a, b))


def render(t: Term) -> str:
    """SMT-LIB2 text; negative literals come out as (- n)."""
    if isinstance(t, IntLit):
        return str(t.value) if t.value >= 0 else "(- %d)" % -t.value
    if isinstance(t, Sym):
        return t.name
    if not t.args:
        return t.op
    return "(%s %s)" % (t.op, " ".join(render(a) for a in t.args))


def substitute(t: Term, mapping: Dict[str, Term]) -> Term:
    if isinstance(t, Sym):
        return mapping.get(t.name, t)
    if isinstance(t, App) and t.args:
        return App(t.op, tuple(substitute(a, mapping) for a in t.args))
    return t


def collect_syms(t: Term, into: Set[str]) -> None:
    if isinstance(t, Sym):
        into.add(t.name)
    elif isinstance(t, App):
        for a in t.args:
            collect_syms(a, into)


def symbols(*terms: Term) -> FrozenSet[str]:
    out: Set[str] = set()
    for t in terms:
        collect_syms(t, out)
    return frozenset(out)


def collect_ufs(t: Term, into: Set[Tuple[str, int]]) -> None:
    """Uninterpreted applications: any operator outside the builtin set."""
    if isinstance(t, App):
        if t.op not in _BUILTIN_OPS:
            into.add((t.op, len(t.args)))
        for a in t.args:
            collect_ufs(a, into)


def uses_nonlinear(t: Term) -> bool:
    """Multiplication of two non-literal terms, or any div/mod."""
    if isinstance(t, App):
        if t.op == "*" and sum(1 for a in t.args
                               if not isinstance(a, IntLit)) > 1:
            return True
        if t.op in ("div", "mod"):
            return True
        return any(uses_nonlinear(a) for a in t.args)
    return False


def is_bool(t: Term) -> bool:
    return isinstance(t, App) and t.op in _BOOL_RESULT_OPS
