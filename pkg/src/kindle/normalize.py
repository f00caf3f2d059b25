"""Normalization of a CFA into a single monolithic loop.

Programs with several loops (sequential or nested) are rewritten so that
every loop head is reached through one shared head location H: each edge
into an original head h_i is redirected through a fresh relay that sets a
phase-selector variable (``pc := i``), and H dispatches back out via
``assume(pc == i)`` edges.  Every cycle then passes through H, so one
unrolling of H-to-H passages covers all loops at once.

Single-loop programs pass through unchanged (the selector stays unused);
loop-free programs get a detached head so downstream consumers can still
ask for "the" loop head.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from .cfa import (CFA, Assume, AssignOp, Edge, HavocOp, Op, back_edges,
                  loop_heads)
from .interp import Trap, eval_expr
from .lang import Binary, Expr, Num, Var


class UnsupportedProgram(Exception):
    pass


@dataclass(frozen=True)
class NormalizedCfa:
    cfa: CFA
    loop_head: int
    pc_var: str
    n_phases: int
    loop_modified: FrozenSet[str]
    termination_vars: FrozenSet[str]

    @property
    def source_vars(self) -> Tuple[str, ...]:
        """Declared program variables, without the synthetic selector."""
        return tuple(v for v in self.cfa.vars if v != self.pc_var)


def _fresh_pc_name(vars_: Tuple[str, ...]) -> str:
    name = "pc"
    while name in vars_:
        name += "_"
    return name


def _expr_vars(e: Expr) -> Set[str]:
    out: Set[str] = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            out.add(x.name)
        elif hasattr(x, "operand"):
            stack.append(x.operand)
        elif hasattr(x, "left"):
            stack.append(x.left)
            stack.append(x.right)
    return out


def to_single_loop(cfa: CFA) -> NormalizedCfa:
    heads = loop_heads(cfa)
    pc = _fresh_pc_name(cfa.vars)
    if len(heads) == 0:
        # detached head: no cycles exist, the loop body is empty
        out = CFA(cfa.n_locations + 1, cfa.entry, cfa.error, cfa.edges,
                  cfa.vars)
        return _finish(out, cfa.n_locations, pc, 0)
    if len(heads) == 1:
        return _finish(cfa, heads[0], pc, 1)

    edges: List[Edge] = []
    counter = cfa.n_locations
    head = counter
    counter += 1
    redirect = {h: i + 1 for i, h in enumerate(heads)}
    for e in cfa.edges:
        if e.dst in redirect:
            relay = counter
            counter += 1
            edges.append(Edge(e.src, e.op, relay))
            edges.append(Edge(relay, AssignOp(pc, Num(redirect[e.dst])), head))
        else:
            edges.append(e)
    for h, i in redirect.items():
        edges.append(Edge(head, Assume(Binary("==", Var(pc), Num(i))), h))
    out = CFA(counter, cfa.entry, cfa.error, tuple(edges), cfa.vars + (pc,))
    got = loop_heads(out)
    if got != [head]:
        raise UnsupportedProgram(
            f"loop normalization did not converge to one head: {got}")
    return _finish(out, head, pc, len(heads))


def _finish(cfa: CFA, head: int, pc: str, phases: int) -> NormalizedCfa:
    region = _loop_region(cfa, head)
    modified = set()
    termination = set()
    reaches_head = _reaches(cfa, head)
    for e in cfa.edges:
        inside = e.src in region and e.dst in reaches_head.union({head})
        if inside and isinstance(e.op, (AssignOp, HavocOp)):
            modified.add(e.op.var)
        # exit edges decide loop termination; edges into the error
        # location check the property and do not count
        if (e.src in region and e.dst not in reaches_head
                and e.dst != cfa.error and isinstance(e.op, Assume)):
            termination.update(_expr_vars(e.op.expr))
    termination.discard(pc)
    return NormalizedCfa(cfa, head, pc, phases,
                         frozenset(modified), frozenset(termination))


def _reaches(cfa: CFA, target: int) -> Set[int]:
    """Locations with a path to target."""
    preds: Dict[int, List[int]] = {}
    for e in cfa.edges:
        preds.setdefault(e.dst, []).append(e.src)
    seen = {target}
    stack = [target]
    while stack:
        u = stack.pop()
        for p in preds.get(u, []):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def _from(cfa: CFA, source: int) -> Set[int]:
    succ: Dict[int, List[int]] = {}
    for e in cfa.edges:
        succ.setdefault(e.src, []).append(e.dst)
    seen = {source}
    stack = [source]
    while stack:
        u = stack.pop()
        for v in succ.get(u, []):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _loop_region(cfa: CFA, head: int) -> Set[int]:
    """Locations on some cycle through head (reachable from it and able to
    return to it), head included."""
    return _from(cfa, head) & _reaches(cfa, head)


def loop_modified_vars(ncfa: NormalizedCfa) -> FrozenSet[str]:
    return ncfa.loop_modified


def termination_condition_vars(ncfa: NormalizedCfa) -> FrozenSet[str]:
    return ncfa.termination_vars


def preloop_constants(ncfa: NormalizedCfa) -> Dict[str, int]:
    """Constant-fold the straight-line prefix before the loop head.

    Follows unique out-edges from entry (passing constant-true assumes),
    folding assignments whose operands are all known.  Stops at the head,
    at any branching location, or at a data-dependent assume.  Variables
    havocked or assigned non-constant values drop out of the map.
    """
    cfa = ncfa.cfa
    env: Dict[str, int] = {v: 0 for v in cfa.vars}
    known: Set[str] = set(cfa.vars)
    loc = cfa.entry
    visited = set()
    while loc != ncfa.loop_head and loc not in visited:
        visited.add(loc)
        outs = cfa.out_edges(loc)
        if len(outs) != 1:
            break
        e = outs[0]
        op = e.op
        if isinstance(op, Assume):
            if _expr_vars(op.expr):
                break
            try:
                if eval_expr(op.expr, {}) == 0:
                    break
            except Trap:
                break
        elif isinstance(op, HavocOp):
            known.discard(op.var)
        else:
            if _expr_vars(op.expr) <= known:
                try:
                    env[op.var] = eval_expr(op.expr, env)
                    known.add(op.var)
                except Trap:
                    break
            else:
                known.discard(op.var)
        loc = e.dst
    return {v: env[v] for v in known}
