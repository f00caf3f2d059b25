"""Concrete interpreter and bounded brute-force explorer.

This is the ground-truth oracle: a small-step interpreter over CFAs plus a
minimal-loop-iteration counterexample search.  Semantics shared with the
SMT encoding: unbounded integers, ``/`` truncates toward zero, ``%`` is
Euclidean (non-negative remainder), ``>>`` is arithmetic.  Division or
modulo by zero halts the path without reaching the error location (a
"trap"), as does a negative or absurdly large shift amount.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .cfa import CFA, Assume, AssignOp, Edge, HavocOp, back_edges
from .intervals import ediv_int, tdiv_int
from .lang import Binary, Expr, Num, Unary, Var

ERROR_REACHED = "error-reached"
COMPLETED = "completed"
BUDGET = "step-budget-exhausted"
TRAP = "trap"

_SHIFT_CAP = 512


class Trap(Exception):
    """Evaluation halted the path (division by zero, bad shift)."""


def eval_expr(e: Expr, env: Dict[str, int]) -> int:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Unary):
        v = eval_expr(e.operand, env)
        if e.op == "-":
            return -v
        if e.op == "~":
            return ~v
        if e.op == "!":
            return 1 if v == 0 else 0
        raise ValueError(f"unknown unary op {e.op}")
    if isinstance(e, Binary):
        a = eval_expr(e.left, env)
        b = eval_expr(e.right, env)
        op = e.op
        if op == "+":
            return a + b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise Trap("division by zero")
            return tdiv_int(a, b)
        if op == "%":
            if b == 0:
                raise Trap("modulo by zero")
            return a - b * ediv_int(a, b)
        if op == "==":
            return 1 if a == b else 0
        if op == "<":
            return 1 if a < b else 0
        if op == "&&":
            return 1 if a != 0 and b != 0 else 0
        if op == "||":
            return 1 if a != 0 or b != 0 else 0
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        if op == "<<":
            if b < 0 or b > _SHIFT_CAP:
                raise Trap("shift amount out of range")
            return a << b
        if op == ">>":
            if b < 0 or b > _SHIFT_CAP:
                raise Trap("shift amount out of range")
            return a >> b
        raise ValueError(f"unknown binary op {op}")
    raise TypeError(f"not an expression: {e!r}")


@dataclass(frozen=True)
class ConcreteState:
    location: int
    env: Tuple[Tuple[str, int], ...]

    def env_dict(self) -> Dict[str, int]:
        return dict(self.env)

    def __str__(self) -> str:
        vs = ", ".join(f"{k}={v}" for k, v in self.env)
        return f"loc {self.location}: {vs}"


def _state(loc: int, env: Dict[str, int], order: Sequence[str]) -> ConcreteState:
    return ConcreteState(loc, tuple((v, env[v]) for v in order))


@dataclass
class Trace:
    initial: ConcreteState
    steps: List[Tuple[Edge, ConcreteState]] = field(default_factory=list)
    nondet_choices: List[int] = field(default_factory=list)

    @property
    def final(self) -> ConcreteState:
        return self.steps[-1][1] if self.steps else self.initial

    def render(self) -> str:
        lines = [str(self.initial)]
        for edge, st in self.steps:
            lines.append(f"  [{edge.op}]")
            lines.append(str(st))
        lines.append(f"choices: {self.nondet_choices}")
        return "\n".join(lines)


def run(cfa: CFA, choices: Sequence[int], max_steps: int = 10000
        ) -> Tuple[str, Trace]:
    """Execute deterministically: at each location the first edge whose
    guard holds is taken; havoc edges consume the next choice (path ends
    when choices run out)."""
    env = {v: 0 for v in cfa.vars}
    trace = Trace(_state(cfa.entry, env, cfa.vars))
    loc = cfa.entry
    choices = list(choices)
    ci = 0
    steps = 0
    while True:
        if loc == cfa.error:
            return ERROR_REACHED, trace
        if steps >= max_steps:
            return BUDGET, trace
        taken = None
        try:
            for e in cfa.out_edges(loc):
                if isinstance(e.op, Assume):
                    if eval_expr(e.op.expr, env) != 0:
                        taken = e
                        break
                else:
                    taken = e
                    break
        except Trap:
            return TRAP, trace
        if taken is None:
            return COMPLETED, trace
        if isinstance(taken.op, AssignOp):
            try:
                env[taken.op.var] = eval_expr(taken.op.expr, env)
            except Trap:
                return TRAP, trace
        elif isinstance(taken.op, HavocOp):
            if ci >= len(choices):
                return COMPLETED, trace
            env[taken.op.var] = choices[ci]
            trace.nondet_choices.append(choices[ci])
            ci += 1
        loc = taken.dst
        trace.steps.append((taken, _state(loc, env, cfa.vars)))
        steps += 1


@dataclass
class _Node:
    loc: int
    env: Tuple[int, ...]
    iters: int
    parent: Optional["_Node"]
    edge: Optional[Edge]
    choice: Optional[int]
    touched: bool = False


def shortest_cex(cfa: CFA, choice_domain: Iterable[int],
                 max_loop_iterations: int, max_expansions: int = 200000,
                 head: Optional[int] = None) -> Optional[Tuple[Trace, int]]:
    """Search for an error trace with a minimal number of loop iterations.

    Branches only at havoc edges, over the given choice domain; returns
    None if no error is reachable within the iteration bound.  By default
    an iteration is one back-edge traversal.  With ``head`` given, it is
    one *return* to that location instead: the first arrival is free and
    every later arrival costs one, so a trace that reaches ``head`` n
    times has n-1 iterations and a trace that bypasses it has zero.
    """
    domain = sorted(set(choice_domain))
    backs = set(back_edges(cfa))
    order = cfa.vars

    def key(env: Dict[str, int]) -> Tuple[int, ...]:
        return tuple(env[v] for v in order)

    start = _Node(cfa.entry, key({v: 0 for v in cfa.vars}), 0, None, None,
                  None, touched=(cfa.entry == head))
    best_iters: Dict[Tuple[int, Tuple[int, ...], bool], int] = {}
    heap: List[Tuple[int, int, _Node]] = [(0, 0, start)]
    seq = 1
    expansions = 0
    while heap and expansions < max_expansions:
        iters, _, node = heapq.heappop(heap)
        seen = best_iters.get((node.loc, node.env, node.touched))
        if seen is not None and seen < iters:
            continue
        if node.loc == cfa.error:
            return _rebuild(cfa, node), iters
        best_iters[(node.loc, node.env, node.touched)] = iters
        expansions += 1
        env = dict(zip(order, node.env))
        for e in cfa.out_edges(node.loc):
            if head is None:
                cost = 1 if e in backs else 0
                touched = False
            else:
                cost = 1 if (e.dst == head and node.touched) else 0
                touched = node.touched or e.dst == head
            nit = iters + cost
            if nit > max_loop_iterations:
                continue
            if isinstance(e.op, Assume):
                try:
                    if eval_expr(e.op.expr, env) == 0:
                        continue
                except Trap:
                    continue
                child = _Node(e.dst, node.env, nit, node, e, None, touched)
                heapq.heappush(heap, (nit, seq, child))
                seq += 1
            elif isinstance(e.op, AssignOp):
                try:
                    val = eval_expr(e.op.expr, env)
                except Trap:
                    continue
                nenv = dict(env)
                nenv[e.op.var] = val
                child = _Node(e.dst, key(nenv), nit, node, e, None, touched)
                heapq.heappush(heap, (nit, seq, child))
                seq += 1
            else:
                for c in domain:
                    nenv = dict(env)
                    nenv[e.op.var] = c
                    child = _Node(e.dst, key(nenv), nit, node, e, c, touched)
                    heapq.heappush(heap, (nit, seq, child))
                    seq += 1
    return None


def _rebuild(cfa: CFA, node: _Node) -> Trace:
    chain: List[_Node] = []
    cur: Optional[_Node] = node
    while cur is not None:
        chain.append(cur)
        cur = cur.parent
    chain.reverse()
    order = cfa.vars
    trace = Trace(ConcreteState(chain[0].loc, tuple(zip(order, chain[0].env))))
    for n in chain[1:]:
        st = ConcreteState(n.loc, tuple(zip(order, n.env)))
        assert n.edge is not None
        trace.steps.append((n.edge, st))
        if n.choice is not None:
            trace.nondet_choices.append(n.choice)
    return trace
