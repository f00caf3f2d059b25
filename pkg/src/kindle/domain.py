"""Interval-expression abstract domain.

An abstract state maps every program variable to a symbolic expression:
a tree of the language's operators whose leaves are either variables or
interval sets.  A variable bound to itself (``x -> var(x)``) carries no
constraint; a binding like ``y -> var(x) + [1,1]`` records the relation
y = x + 1.  The concretization of a state at location l is the set of
environments at l that satisfy every binding.

The analysis precision is a triple (Y, n, w): the set of variables whose
differing bindings keep states separate during merging, the maximum
expression depth (a leaf counts 1, every operator node adds 1 — n = 1
keeps plain intervals only), and whether merging widens.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional, Tuple, Union

from .cfa import Assume, AssignOp, Edge, HavocOp
from .intervals import IntervalSet
from .lang import Binary, Expr, Num, Unary, Var

UNION_OP = "∪"


@dataclass(frozen=True)
class SVar:
    name: str


@dataclass(frozen=True)
class SUnary:
    op: str
    operand: "SymExpr"


@dataclass(frozen=True)
class SBinary:
    op: str
    left: "SymExpr"
    right: "SymExpr"


SymExpr = Union[SVar, SUnary, SBinary, IntervalSet]

TOP = IntervalSet.top()
EMPTY = IntervalSet.empty()


def sym_depth(e: SymExpr) -> int:
    if isinstance(e, (SVar, IntervalSet)):
        return 1
    if isinstance(e, SUnary):
        return 1 + sym_depth(e.operand)
    return 1 + max(sym_depth(e.left), sym_depth(e.right))


def sym_vars(e: SymExpr) -> FrozenSet[str]:
    if isinstance(e, SVar):
        return frozenset({e.name})
    if isinstance(e, SUnary):
        return sym_vars(e.operand)
    if isinstance(e, SBinary):
        return sym_vars(e.left) | sym_vars(e.right)
    return frozenset()


def make_unary(op: str, x: SymExpr) -> SymExpr:
    if isinstance(x, IntervalSet):
        return _apply_unary(op, x)
    return SUnary(op, x)


def make_binary(op: str, a: SymExpr, b: SymExpr) -> SymExpr:
    if isinstance(a, IntervalSet) and isinstance(b, IntervalSet):
        return _apply_binary(op, a, b)
    return SBinary(op, a, b)


def _apply_unary(op: str, v: IntervalSet) -> IntervalSet:
    if op == "-":
        return v.neg()
    if op == "~":
        return v.bitnot()
    if op == "!":
        return v.not_truth()
    raise ValueError(f"unknown unary op {op}")


def _apply_binary(op: str, a: IntervalSet, b: IntervalSet) -> IntervalSet:
    if op == "+":
        return a.add(b)
    if op == "*":
        return a.mul(b)
    if op == "/":
        return a.tdiv(b)
    if op == "%":
        return a.emod(b)
    if op == "==":
        return a.eq_truth(b)
    if op == "<":
        return a.lt_truth(b)
    if op == "<<":
        return a.shl(b)
    if op == ">>":
        return a.shr(b)
    if op == "&":
        return a.bitand(b)
    if op == "|":
        return a.bitor(b)
    if op == "^":
        return a.bitxor(b)
    if op == UNION_OP:
        return a.union(b)
    if op in ("&&", "||"):
        ta, tb = a.truthiness(), b.truthiness()
        if ta.is_empty or tb.is_empty:
            return EMPTY
        zero, one = IntervalSet.point(0), IntervalSet.point(1)
        if op == "&&":
            if ta == zero or tb == zero:
                return zero
            if ta == one and tb == one:
                return one
        else:
            if ta == one or tb == one:
                return one
            if ta == zero and tb == zero:
                return zero
        return IntervalSet.range(0, 1)
    raise ValueError(f"unknown binary op {op}")


@dataclass(frozen=True)
class Precision:
    important: FrozenSet[str]
    depth: int
    widening: bool

    def __str__(self) -> str:
        ys = ",".join(sorted(self.important)) or "∅"
        return f"({{{ys}}}, {self.depth}, {'w' if self.widening else '-'})"


INITIAL_PRECISION = Precision(frozenset(), 1, True)


@dataclass(frozen=True)
class AbstractState:
    location: int
    bindings: Tuple[Tuple[str, SymExpr], ...]  # sorted by variable name
    # bottom is normally encoded as an empty value set for some variable,
    # which has no representation when the program declares none
    infeasible: bool = False

    @staticmethod
    def initial(location: int, vars_: Iterable[str]) -> "AbstractState":
        return AbstractState(location,
                             tuple((v, SVar(v)) for v in sorted(vars_)))

    def get(self, var: str) -> SymExpr:
        for v, e in self.bindings:
            if v == var:
                return e
        raise KeyError(var)

    def replace(self, updates: Dict[str, SymExpr]) -> "AbstractState":
        return AbstractState(self.location, tuple(
            (v, updates.get(v, e)) for v, e in self.bindings),
            self.infeasible)

    def at(self, location: int) -> "AbstractState":
        return AbstractState(location, self.bindings, self.infeasible)

    def value_of(self, var: str,
                 _guard: Optional[FrozenSet[str]] = None) -> IntervalSet:
        """Possible values of var as an interval set."""
        guard = _guard or frozenset({var})
        return self._eval(self.get(var), guard)

    def _eval(self, e: SymExpr, guard: FrozenSet[str]) -> IntervalSet:
        if isinstance(e, IntervalSet):
            return e
        if isinstance(e, SVar):
            if e.name in guard:
                return TOP  # self-referential binding constrains nothing
            return self._eval(self.get(e.name), guard | {e.name})
        if isinstance(e, SUnary):
            return _apply_unary(e.op, self._eval(e.operand, guard))
        return _apply_binary(e.op, self._eval(e.left, guard),
                             self._eval(e.right, guard))

    @property
    def is_bottom(self) -> bool:
        if self.infeasible:
            return True
        return any(self.value_of(v).is_empty for v, _ in self.bindings)

    def __str__(self) -> str:
        parts = []
        for v, e in self.bindings:
            if isinstance(e, SVar) and e.name == v:
                continue
            parts.append(f"{v} ∈ {self.value_of(v)}")
        return f"loc {self.location}: " + (", ".join(parts) or "⊤")


def eval_lang(e: Expr, state: AbstractState) -> IntervalSet:
    """Abstract value of a program expression in a state."""
    if isinstance(e, Num):
        return IntervalSet.point(e.value)
    if isinstance(e, Var):
        return state.value_of(e.name)
    if isinstance(e, Unary):
        return _apply_unary(e.op, eval_lang(e.operand, state))
    if isinstance(e, Binary):
        return _apply_binary(e.op, eval_lang(e.left, state),
                             eval_lang(e.right, state))
    raise TypeError(f"not an expression: {e!r}")


# -- transfer --------------------------------------------------------------

def _substitute(e: Expr, state: AbstractState, target: str,
                old_value: IntervalSet) -> SymExpr:
    """Program expression -> SymExpr with variables replaced by their
    current bindings; references to the assignment target become its old
    value (the binding must describe the pre-assignment variable)."""

    def subst_sym(se: SymExpr) -> SymExpr:
        if isinstance(se, SVar):
            return old_value if se.name == target else se
        if isinstance(se, SUnary):
            return make_unary(se.op, subst_sym(se.operand))
        if isinstance(se, SBinary):
            return make_binary(se.op, subst_sym(se.left), subst_sym(se.right))
        return se

    if isinstance(e, Num):
        return IntervalSet.point(e.value)
    if isinstance(e, Var):
        return subst_sym(state.get(e.name))
    if isinstance(e, Unary):
        return make_unary(e.op, _substitute(e.operand, state, target, old_value))
    if isinstance(e, Binary):
        return make_binary(e.op,
                           _substitute(e.left, state, target, old_value),
                           _substitute(e.right, state, target, old_value))
    raise TypeError(f"not an expression: {e!r}")


def _truncate(e: SymExpr, depth: int, state: AbstractState) -> SymExpr:
    """Enforce the precision's depth bound by evaluating deep subtrees."""
    if sym_depth(e) <= depth:
        return e
    if depth <= 1 or isinstance(e, (SVar, IntervalSet)):
        return state._eval(e, frozenset())
    if isinstance(e, SUnary):
        return make_unary(e.op, _truncate(e.operand, depth - 1, state))
    return make_binary(e.op, _truncate(e.left, depth - 1, state),
                       _truncate(e.right, depth - 1, state))


def _purge(state: AbstractState, var: str) -> AbstractState:
    """Rewrite bindings of other variables that mention var, replacing the
    reference by var's current value: after var changes, those bindings
    must keep describing the old variable."""
    old_value = state.value_of(var)

    def rewrite(se: SymExpr) -> SymExpr:
        if isinstance(se, SVar):
            return old_value if se.name == var else se
        if isinstance(se, SUnary):
            return make_unary(se.op, rewrite(se.operand))
        if isinstance(se, SBinary):
            return make_binary(se.op, rewrite(se.left), rewrite(se.right))
        return se

    updates = {}
    for v, se in state.bindings:
        if v != var and var in sym_vars(se):
            updates[v] = rewrite(se)
    return state.replace(updates) if updates else state


def transfer(state: AbstractState, edge: Edge, pi: Precision
             ) -> AbstractState:
    """Abstract post-state along one edge (possibly bottom)."""
    assert state.location == edge.src
    op = edge.op
    if isinstance(op, HavocOp):
        out = _purge(state, op.var).replace({op.var: TOP})
        return out.at(edge.dst)
    if isinstance(op, AssignOp):
        old_value = state.value_of(op.var)
        bound = _substitute(op.expr, state, op.var, old_value)
        bound = _truncate(bound, pi.depth, state)
        out = _purge(state, op.var).replace({op.var: bound})
        return out.at(edge.dst)
    # assume
    cond = eval_lang(op.expr, state)
    if cond.is_empty or cond == IntervalSet.point(0):
        return _bottom_at(edge.dst, state)
    restricted = _restrict(state, op.expr, True)
    if restricted is None:
        return _bottom_at(edge.dst, state)
    return restricted.at(edge.dst)


def _bottom_at(loc: int, like: AbstractState) -> AbstractState:
    return AbstractState(loc, tuple((v, EMPTY) for v, _ in like.bindings),
                         infeasible=True)


def _narrow(state: AbstractState, var: str, allowed: IntervalSet
            ) -> Optional[AbstractState]:
    cur = state.value_of(var)
    new = cur.intersect(allowed)
    if new.is_empty:
        return None
    if new == cur:
        return state
    return state.replace({var: new})


def _restrict(state: AbstractState, e: Expr, positive: bool
              ) -> Optional[AbstractState]:
    """Refine variable bindings under the assumption that e is true
    (positive) or false.  Returns None when the state becomes empty.
    Only bare-variable comparison sides are narrowed; anything else keeps
    its binding (sound: the definite-truth check already ran)."""
    if isinstance(e, Unary) and e.op == "!":
        return _restrict(state, e.operand, not positive)
    if isinstance(e, Binary) and e.op in ("&&", "||"):
        conjunctive = (e.op == "&&") == positive
        if conjunctive:
            # a && b assumed true, or a || b assumed false: both sides
            # restrict in sequence
            s = _restrict(state, e.left, positive)
            return _restrict(s, e.right, positive) if s else None
        # disjunctive information: either side may hold; narrow only when
        # exactly one side is possible at all
        a_possible = _side_possible(eval_lang(e.left, state), positive)
        b_possible = _side_possible(eval_lang(e.right, state), positive)
        if a_possible and not b_possible:
            return _restrict(state, e.left, positive)
        if b_possible and not a_possible:
            return _restrict(state, e.right, positive)
        return state
    if isinstance(e, Var):
        allowed = (IntervalSet.of((None, -1), (1, None)) if positive
                   else IntervalSet.point(0))
        return _narrow(state, e.name, allowed)
    if isinstance(e, Binary) and e.op == "==":
        return _restrict_eq(state, e.left, e.right, positive)
    if isinstance(e, Binary) and e.op == "<":
        return _restrict_lt(state, e.left, e.right, positive)
    return state


def _side_possible(val: IntervalSet, positive: bool) -> bool:
    t = val.truthiness()
    return t.contains(1) if positive else t.contains(0)


def _restrict_eq(state: AbstractState, lhs: Expr, rhs: Expr, positive: bool
                 ) -> Optional[AbstractState]:
    lv = eval_lang(lhs, state)
    rv = eval_lang(rhs, state)
    if positive:
        both = lv.intersect(rv)
        if isinstance(lhs, Var):
            state = _narrow(state, lhs.name, both)
            if state is None:
                return None
        if isinstance(rhs, Var):
            state = _narrow(state, rhs.name, both)
        return state
    # inequality: only a point on the other side cuts anything out
    if isinstance(lhs, Var) and rv.is_point:
        p = rv.as_point()
        state = _narrow(state, lhs.name,
                        IntervalSet.of((None, p - 1), (p + 1, None)))
        if state is None:
            return None
    if isinstance(rhs, Var) and lv.is_point:
        p = lv.as_point()
        state = _narrow(state, rhs.name,
                        IntervalSet.of((None, p - 1), (p + 1, None)))
    return state


def _restrict_lt(state: AbstractState, lhs: Expr, rhs: Expr, positive: bool
                 ) -> Optional[AbstractState]:
    lv = eval_lang(lhs, state)
    rv = eval_lang(rhs, state)
    if positive:  # lhs < rhs
        if isinstance(lhs, Var) and rv.max_bound() is not None:
            state = _narrow(state, lhs.name,
                            IntervalSet.range(None, rv.max_bound() - 1))
            if state is None:
                return None
        if isinstance(rhs, Var) and lv.min_bound() is not None:
            state = _narrow(state, rhs.name,
                            IntervalSet.range(lv.min_bound() + 1, None))
        return state
    # lhs >= rhs
    if isinstance(lhs, Var) and rv.min_bound() is not None:
        state = _narrow(state, lhs.name,
                        IntervalSet.range(rv.min_bound(), None))
        if state is None:
            return None
    if isinstance(rhs, Var) and lv.max_bound() is not None:
        state = _narrow(state, rhs.name,
                        IntervalSet.range(None, lv.max_bound()))
    return state


# -- lattice operators -----------------------------------------------------

def union_states(e1: AbstractState, e2: AbstractState) -> AbstractState:
    """Per-variable join.  Structurally equal bindings are kept (this
    preserves relations and makes the operator idempotent); otherwise both
    sides are evaluated to interval sets and unioned."""
    assert e1.location == e2.location
    out = []
    for (v, b1), (_, b2) in zip(e1.bindings, e2.bindings):
        if b1 == b2:
            out.append((v, b1))
        elif isinstance(b1, IntervalSet) and isinstance(b2, IntervalSet):
            out.append((v, b1.union(b2)))
        else:
            out.append((v, e1.value_of(v).union(e2.value_of(v))))
    return AbstractState(e1.location, tuple(out))


def widen_states(e1: AbstractState, e2: AbstractState) -> AbstractState:
    """e1 is the older state: every variable collapses to one interval
    covering both sides, with bounds that grew from e1 to e2 driven to
    infinity."""
    assert e1.location == e2.location
    out = []
    for (v, _), _ in zip(e1.bindings, e2.bindings):
        out.append((v, e1.value_of(v).widen(e2.value_of(v))))
    return AbstractState(e1.location, tuple(out))


def differ(e1: AbstractState, e2: AbstractState, pi: Precision) -> bool:
    """True when some important variable has different bindings
    (structural comparison; bindings are normalized at construction)."""
    return any(e1.get(v) != e2.get(v) for v in pi.important)


def merge(e1: AbstractState, e2: AbstractState, pi: Precision
          ) -> AbstractState:
    """Three-case merge: keep e2 untouched when an important variable
    differs; otherwise widen (e1 old, e2 new) or union per the precision."""
    if differ(e1, e2, pi):
        return e2
    if pi.widening:
        return widen_states(e1, e2)
    return union_states(e1, e2)


def covers(big: AbstractState, small: AbstractState) -> bool:
    """Per-variable entailment: every binding of big is implied by small.
    Incomparable symbolic bindings conservatively answer False."""
    if big.location != small.location:
        return False
    if small.is_bottom:
        return True
    for (v, bb), (_, sb) in zip(big.bindings, small.bindings):
        if bb == sb:
            continue
        if isinstance(bb, IntervalSet):
            if not bb.covers(small.value_of(v)):
                return False
        elif isinstance(bb, SVar) and bb.name == v:
            continue  # self-binding constrains nothing
        else:
            return False
    return True


def stop(state: AbstractState, reached: Iterable[AbstractState]) -> bool:
    """Fixed-point check: state is covered by something already reached."""
    if state.is_bottom:
        return True
    return any(covers(r, state) for r in reached
               if r.location == state.location)


# -- concretization --------------------------------------------------------

def _eval_concrete(se: SymExpr, env: Dict[str, int]) -> IntervalSet:
    if isinstance(se, IntervalSet):
        return se
    if isinstance(se, SVar):
        return IntervalSet.point(env[se.name])
    if isinstance(se, SUnary):
        return _apply_unary(se.op, _eval_concrete(se.operand, env))
    return _apply_binary(se.op, _eval_concrete(se.left, env),
                         _eval_concrete(se.right, env))


def concretization_holds(state: AbstractState, env: Dict[str, int]) -> bool:
    """Is the concrete environment a member of the state's concretization?
    True iff every variable's value lies in the evaluation of its binding
    with variable leaves taken from env."""
    return all(_eval_concrete(se, env).contains(env[v])
               for v, se in state.bindings)
