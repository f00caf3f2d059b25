"""Control-flow automata and lowering from the AST.

A CFA has integer locations, a distinguished entry and error location, and
edges labeled with one of three operations: assume(expr), assign(var, expr)
or havoc(var).  ``assert(e)`` lowers to an assume(!e) edge into the error
location plus an assume(e) edge continuing, the condition kept whole on
both edges; ``if`` and ``while`` lower to assume-guarded branches whose
top-level ``&&``/``||``/``!`` are decomposed into nested assume edges
(short-circuit evaluation).  Inside arithmetic the boolean operators
remain strict 0/1-valued.

Location identifiers are assigned in lowering order, so identical source
yields an identical CFA.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Set, Tuple

from .lang import (Assert, Assign, Binary, Expr, Havoc, If, Num, Program,
                   Stmt, Unary, Var, While, expr_to_str)


@dataclass(frozen=True)
class Assume:
    expr: Expr  # edge passes iff expr evaluates nonzero

    def __str__(self) -> str:
        return f"assume {expr_to_str(self.expr)}"


@dataclass(frozen=True)
class AssignOp:
    var: str
    expr: Expr

    def __str__(self) -> str:
        return f"{self.var} := {expr_to_str(self.expr)}"


@dataclass(frozen=True)
class HavocOp:
    var: str

    def __str__(self) -> str:
        return f"havoc {self.var}"


Op = Assume | AssignOp | HavocOp


@dataclass(frozen=True)
class Edge:
    src: int
    op: Op
    dst: int

    def __str__(self) -> str:
        return f"{self.src} --{self.op}--> {self.dst}"


@dataclass(frozen=True)
class CFA:
    n_locations: int
    entry: int
    error: int
    edges: Tuple[Edge, ...]
    vars: Tuple[str, ...]

    @property
    def locations(self) -> range:
        return range(self.n_locations)

    def out_edges(self, loc: int) -> List[Edge]:
        return [e for e in self.edges if e.src == loc]

    def in_edges(self, loc: int) -> List[Edge]:
        return [e for e in self.edges if e.dst == loc]


ASSUME_TRUE = Assume(Num(1))


def _neg(e: Expr) -> Expr:
    if isinstance(e, Unary) and e.op == "!":
        return e.operand
    return Unary("!", e)


class _Lowerer:
    def __init__(self, prog: Program):
        self.prog = prog
        self.edges: List[Edge] = []
        self.entry = 0
        self.error = 1
        self.counter = 2

    def fresh(self) -> int:
        loc = self.counter
        self.counter += 1
        return loc

    def edge(self, src: int, op: Op, dst: int) -> None:
        self.edges.append(Edge(src, op, dst))

    def lower(self) -> CFA:
        end = self.stmts(self.prog.body, self.entry)
        del end  # program exit carries no marking
        return CFA(self.counter, self.entry, self.error,
                   tuple(self.edges), tuple(self.prog.decls))

    def stmts(self, body: List[Stmt], cur: int) -> int:
        for s in body:
            cur = self.stmt(s, cur)
        return cur

    def stmt(self, s: Stmt, cur: int) -> int:
        if isinstance(s, Assign):
            nxt = self.fresh()
            self.edge(cur, AssignOp(s.var, s.expr), nxt)
            return nxt
        if isinstance(s, Havoc):
            nxt = self.fresh()
            self.edge(cur, HavocOp(s.var), nxt)
            return nxt
        if isinstance(s, Assert):
            # the whole condition stays on the two edges so the error
            # edge names every variable the check depends on
            nxt = self.fresh()
            self.edge(cur, Assume(s.cond), nxt)
            self.edge(cur, Assume(_neg(s.cond)), self.error)
            return nxt
        if isinstance(s, If):
            then_start = self.fresh()
            else_start = self.fresh()
            self.cond(s.cond, cur, then_start, else_start)
            then_end = self.stmts(s.then, then_start)
            else_end = self.stmts(s.orelse, else_start)
            join = self.fresh()
            self.edge(then_end, ASSUME_TRUE, join)
            self.edge(else_end, ASSUME_TRUE, join)
            return join
        if isinstance(s, While):
            # the loop head is where control re-enters; keep the entry
            # location clean of back edges
            if cur == self.entry:
                head = self.fresh()
                self.edge(cur, ASSUME_TRUE, head)
            else:
                head = cur
            body_start = self.fresh()
            exit_loc = self.fresh()
            self.cond(s.cond, head, body_start, exit_loc)
            body_end = self.stmts(s.body, body_start)
            self.edge(body_end, ASSUME_TRUE, head)
            return exit_loc
        raise TypeError(f"not a statement: {s!r}")

    def cond(self, e: Expr, cur: int, t_target: int, f_target: int) -> None:
        """Emit assume edges so control reaches t_target iff e is nonzero."""
        if isinstance(e, Binary) and e.op == "&&":
            mid = self.fresh()
            self.cond(e.left, cur, mid, f_target)
            self.cond(e.right, mid, t_target, f_target)
        elif isinstance(e, Binary) and e.op == "||":
            mid = self.fresh()
            self.cond(e.left, cur, t_target, mid)
            self.cond(e.right, mid, t_target, f_target)
        elif isinstance(e, Unary) and e.op == "!":
            self.cond(e.operand, cur, f_target, t_target)
        else:
            self.edge(cur, Assume(e), t_target)
            self.edge(cur, Assume(Unary("!", e)), f_target)


def build_cfa(prog: Program) -> CFA:
    return _Lowerer(prog).lower()


# -- graph analyses --------------------------------------------------------

def reachable(cfa: CFA) -> Set[int]:
    seen = {cfa.entry}
    stack = [cfa.entry]
    succ: Dict[int, List[int]] = {}
    for e in cfa.edges:
        succ.setdefault(e.src, []).append(e.dst)
    while stack:
        u = stack.pop()
        for v in succ.get(u, []):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def dominators(cfa: CFA) -> Dict[int, FrozenSet[int]]:
    """Dominator sets over locations reachable from entry (iterative)."""
    reach = reachable(cfa)
    preds: Dict[int, List[int]] = {loc: [] for loc in reach}
    for e in cfa.edges:
        if e.src in reach and e.dst in reach:
            preds[e.dst].append(e.src)
    dom = {loc: frozenset(reach) for loc in reach}
    dom[cfa.entry] = frozenset({cfa.entry})
    changed = True
    while changed:
        changed = False
        for loc in reach:
            if loc == cfa.entry:
                continue
            ps = [dom[p] for p in preds[loc]]
            new = frozenset.intersection(*ps) | {loc} if ps else frozenset({loc})
            if new != dom[loc]:
                dom[loc] = new
                changed = True
    return dom


def back_edges(cfa: CFA) -> List[Edge]:
    """Edges whose target dominates their source."""
    dom = dominators(cfa)
    return [e for e in cfa.edges
            if e.src in dom and e.dst in dom[e.src]]


def loop_heads(cfa: CFA) -> List[int]:
    """Targets of back edges, in location order."""
    return sorted({e.dst for e in back_edges(cfa)})


def dump_cfa(cfa: CFA) -> str:
    """One edge per line: ``src --op--> dst``."""
    lines = [f"entry {cfa.entry}", f"error {cfa.error}",
             f"vars {' '.join(cfa.vars)}"]
    lines += [str(e) for e in cfa.edges]
    return "\n".join(lines)
