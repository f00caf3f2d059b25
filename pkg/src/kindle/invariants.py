"""Continuous invariant generation over the interval-expression domain.

The generator runs the abstract reachability analysis in rounds.  Every
round first refines the precision along a fixed schedule, then analyses
the program and, when the round finishes inside its budget, conjoins the
newly reached loop-head states onto the published invariant.  The
induction loop polls the published snapshot and re-checks its step case
whenever the version moved, so the two sides only share the small
`SnapshotStore` below.

Rounds that blow their budget publish nothing (an incomplete reached set
is not an invariant) but still advance the schedule.  Once the schedule
is exhausted the engine idles: the final snapshot simply stands.
"""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .cfa import Assume
from .cpa import cpa_algorithm
from .domain import (INITIAL_PRECISION, AbstractState, Precision, SBinary,
                     SUnary, SVar, SymExpr, sym_vars)
from .formula import (FALSE, TRUE, Term, num, sym, t_and, t_eq, t_ge, t_le,
                      t_mul, t_neg, t_or, t_sub)
from .formula import t_add
from .intervals import IntervalSet
from .lang import Binary, Expr, Num, Unary, Var
from .normalize import NormalizedCfa


class TerminalPrecision(Exception):
    """The schedule has no next precision; the final snapshot stands."""


@dataclass(frozen=True)
class InvariantSnapshot:
    """One published invariant: holds at the loop head on every run."""
    version: int
    loop_head_formula: Term
    proved_safe: bool = False


class SnapshotStore:
    """Atomic (version, formula) hand-off between generator and prover."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._current = InvariantSnapshot(0, TRUE, False)

    @property
    def current(self) -> InvariantSnapshot:
        with self._lock:
            return self._current

    def publish(self, formula: Term, proved_safe: bool = False
                ) -> InvariantSnapshot:
        with self._lock:
            snap = InvariantSnapshot(self._current.version + 1, formula,
                                     proved_safe)
            self._current = snap
            return snap


# -- variable selection ------------------------------------------------------


def _vars_in_order(e: Expr, out: List[str]) -> None:
    if isinstance(e, Var):
        if e.name not in out:
            out.append(e.name)
    elif isinstance(e, Unary):
        _vars_in_order(e.operand, out)
    elif isinstance(e, Binary):
        _vars_in_order(e.left, out)
        _vars_in_order(e.right, out)
    elif not isinstance(e, Num):
        raise TypeError(f"unexpected expression node {e!r}")


def select_variables(ncfa: NormalizedCfa, count: int) -> List[str]:
    """The count variables most relevant to the error location.

    Walks the automaton backwards from l_err and collects variables
    appearing in assume conditions, nearest first.  Within one condition
    the source order is kept; between conditions at the same distance
    the lexicographically smaller next name wins.  The loop-phase
    selector never counts as a program variable.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    cfa = ncfa.cfa
    depth: Dict[int, int] = {cfa.error: 0}
    frontier = [cfa.error]
    while frontier:
        nxt = []
        for loc in frontier:
            for e in cfa.in_edges(loc):
                if e.src not in depth:
                    depth[e.src] = depth[loc] + 1
                    nxt.append(e.src)
        frontier = nxt

    by_depth: Dict[int, List[List[str]]] = {}
    for e in cfa.edges:
        if isinstance(e.op, Assume) and e.dst in depth:
            names: List[str] = []
            _vars_in_order(e.op.expr, names)
            names = [v for v in names if v != ncfa.pc_var]
            if names:
                by_depth.setdefault(depth[e.dst], []).append(names)

    picked: List[str] = []
    for d in sorted(by_depth):
        seqs = by_depth[d]
        while True:
            heads = [s[0] for s in seqs if s]
            if not heads:
                break
            choice = min(heads)
            for s in seqs:
                while choice in s:
                    s.remove(choice)
            if choice not in picked:
                picked.append(choice)
    return picked[:count]


# -- the refinement schedule -------------------------------------------------


@dataclass(frozen=True)
class RefinementSchedule:
    """The fixed precision ladder, seed first, maximal precision last."""
    precisions: Tuple[Precision, ...]

    @property
    def terminal(self) -> Precision:
        return self.precisions[-1]

    @staticmethod
    def for_program(ncfa: NormalizedCfa) -> "RefinementSchedule":
        all_vars = frozenset(v for v in ncfa.cfa.vars if v != ncfa.pc_var)
        avail = select_variables(ncfa, max(1, len(ncfa.cfa.vars)))
        terminal = Precision(all_vars, 2, False)
        seq = [INITIAL_PRECISION]
        important = INITIAL_PRECISION.important
        depth, widening = 1, True
        size = 1
        refinement = 0
        while seq[-1] != terminal:
            refinement += 1
            if refinement == 2:
                depth = 2
            elif refinement == 4:
                widening = False
            else:
                # growth refinements double the tracked set until it
                # saturates, then jump to every program variable
                if size > len(avail):
                    important = all_vars
                else:
                    important = frozenset(avail[:size])
                size *= 2
            cand = Precision(important, depth, widening)
            if cand != seq[-1]:
                seq.append(cand)
        return RefinementSchedule(tuple(seq))


def refine_precision(pi: Precision, round_: int, ncfa: NormalizedCfa
                     ) -> Precision:
    """The precision after pi.  The round counter is accepted for callers
    that track it, but the schedule is a pure function of the precision."""
    del round_
    sched = RefinementSchedule.for_program(ncfa).precisions
    try:
        i = sched.index(pi)
    except ValueError:
        raise TerminalPrecision(f"{pi} is not on the schedule")
    if i + 1 == len(sched):
        raise TerminalPrecision(f"{pi} is the maximal precision")
    return sched[i + 1]


def static_precision(ncfa: NormalizedCfa, size: int, depth: int,
                     widening: bool) -> Precision:
    """A fixed (s, n, w) configuration: track the s most relevant
    variables at nesting depth n, with or without widening."""
    important = (frozenset() if size == 0
                 else frozenset(select_variables(ncfa, size)))
    return Precision(important, depth, widening)


# -- turning reached states into a formula -----------------------------------


def _encode_sym(e: SymExpr) -> Optional[Term]:
    """Exact term for a symbolic binding, or None if it has no exact
    rendering (a non-point interval leaf, or an operation the formula
    layer would need side conditions for)."""
    if isinstance(e, IntervalSet):
        p = e.as_point()
        return None if p is None else num(p)
    if isinstance(e, SVar):
        return sym(e.name)
    if isinstance(e, SUnary):
        if e.op != "-":
            return None
        sub = _encode_sym(e.operand)
        return None if sub is None else t_neg(sub)
    if isinstance(e, SBinary):
        if e.op not in ("+", "-", "*"):
            return None
        a, b = _encode_sym(e.left), _encode_sym(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return t_add(a, b)
        if e.op == "-":
            return t_sub(a, b)
        return t_mul(a, b)
    return None


def _membership(v: Term, vals: IntervalSet) -> Optional[Term]:
    """v ∈ vals as bound conjunctions, None when vals is everything."""
    if vals.is_top:
        return None
    if vals.is_empty:
        return FALSE
    parts = []
    for lo, hi in vals.pairs:
        if lo is not None and lo == hi:
            parts.append(t_eq(v, num(lo)))
        elif lo is None:
            parts.append(t_le(v, num(hi)))
        elif hi is None:
            parts.append(t_ge(v, num(lo)))
        else:
            parts.append(t_and(t_ge(v, num(lo)), t_le(v, num(hi))))
    return t_or(*parts)


def states_to_formula(reached: Iterable[AbstractState], loop_head: int,
                      skip: Iterable[str] = ()) -> Term:
    """Disjunction over the loop-head states, each one a conjunction of
    per-variable facts.  No state at the head means the head is
    unreachable, i.e. false."""
    blocked: Set[str] = set(skip)
    disjuncts: List[Term] = []
    for st in reached:
        if st.location != loop_head or st.is_bottom:
            continue
        parts: List[Term] = []
        for v, binding in st.bindings:
            if v in blocked:
                continue
            if isinstance(binding, SVar) and binding.name == v:
                continue  # a variable bound to itself carries no fact
            if (not isinstance(binding, IntervalSet)
                    and v not in sym_vars(binding)):
                exact = _encode_sym(binding)
                if exact is not None:
                    parts.append(t_eq(sym(v), exact))
                    continue
            member = _membership(sym(v), st.value_of(v))
            if member is not None:
                parts.append(member)
        disjuncts.append(t_and(*parts))
    return t_or(*disjuncts)


# -- the engine --------------------------------------------------------------


@dataclass
class InvariantEngineConfig:
    round_wall_budget: float = 10.0
    round_pop_budget: int = 20000


class InvariantEngine:
    """Runs the refinement rounds and publishes snapshots.

    Two driving modes: `run_rounds(r)` performs exactly r rounds on the
    calling thread with only the deterministic pop budget, for tests and
    the static configurations; `start()` walks the whole schedule on a
    background thread under the wall budget until proof, exhaustion, or
    `cancel()`.
    """

    def __init__(self, ncfa: NormalizedCfa,
                 store: Optional[SnapshotStore] = None,
                 config: Optional[InvariantEngineConfig] = None) -> None:
        self.ncfa = ncfa
        self.store = store or SnapshotStore()
        self.config = config or InvariantEngineConfig()
        self.schedule = RefinementSchedule.for_program(ncfa)
        self.rounds_run = 0
        self._cursor = 0
        self._cancel = threading.Event()
        self._thread: Optional[threading.Thread] = None

    # The seed precision is never analysed: a round refines first, then
    # runs, so round 1 already tracks the first selected variable.
    def _round_precisions(self) -> Sequence[Precision]:
        return self.schedule.precisions[1:]

    def _one_round(self, pi: Precision, deadline: Optional[float]) -> bool:
        cfa = self.ncfa.cfa
        init = AbstractState.initial(cfa.entry, cfa.vars)
        result = cpa_algorithm(self.ncfa, init, pi, cancel=self._cancel,
                               deadline=deadline,
                               max_pops=self.config.round_pop_budget)
        self.rounds_run += 1
        if not result.complete:
            return False
        head_states = result.at_location(self.ncfa.loop_head)
        learned = states_to_formula(head_states, self.ncfa.loop_head,
                                    skip=(self.ncfa.pc_var,))
        inv = t_and(self.store.current.loop_head_formula, learned)
        proved = not result.at_location(cfa.error)
        self.store.publish(inv, proved_safe=proved)
        return proved

    def run_rounds(self, rounds: int) -> InvariantSnapshot:
        """Deterministic synchronous mode: at most `rounds` further
        rounds, stopping early on a proof or the end of the schedule."""
        todo = self._round_precisions()
        while rounds > 0 and self._cursor < len(todo):
            pi = todo[self._cursor]
            self._cursor += 1
            rounds -= 1
            if self._one_round(pi, deadline=None):
                break
        return self.store.current

    def run_static(self, pi: Precision) -> InvariantSnapshot:
        """One budgeted round at a fixed precision."""
        self._one_round(pi, time.monotonic() + self.config.round_wall_budget)
        return self.store.current

    def start(self) -> None:
        self._thread = threading.Thread(target=self._walk_schedule,
                                        name="invariant-engine", daemon=True)
        self._thread.start()

    def _walk_schedule(self) -> None:
        todo = self._round_precisions()
        while self._cursor < len(todo):
            if self._cancel.is_set():
                return
            pi = todo[self._cursor]
            self._cursor += 1
            deadline = time.monotonic() + self.config.round_wall_budget
            if self._one_round(pi, deadline):
                return

    def cancel(self) -> None:
        self._cancel.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
