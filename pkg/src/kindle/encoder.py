"""SSA encoding of a normalized CFA into transition-system predicates.

The loop structure is summarized by three predicates over integer frames:
I constrains frame 0 to the states reachable at the loop head without
completing an iteration, T relates consecutive frames by one head-to-head
passage, and P says no error path launched from a frame's head state
fires.  Each is produced by enumerating the (acyclic, since every cycle
passes through the head) paths of the region and turning them into
guarded equalities over frame-indexed symbols.

Symbol conventions: ``v@3`` is the value of v at the third head arrival,
``v@3h1`` the second nondet draw of v during the following passage, and
``v@Ih0`` a draw on the way from program entry to the head.  T(i, i+1)
and P(i) deliberately share the ``v@ih*`` names: a transition and an
error path with a common prefix then agree on the draws along it, which
is what lets one satisfying assignment describe one concrete execution.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .cfa import CFA, Assume, AssignOp, HavocOp
from .formula import (FALSE, TRUE, App, IntLit, Term, num, substitute,
                      sym, t_add, t_and, t_div, t_eq, t_ge, t_gt, t_ite,
                      t_le, t_lt, t_mod, t_mul, t_neg, t_not, t_or, t_sub)
from .intervals import ediv_int, tdiv_int
from .interp import ERROR_REACHED, Trace, Trap, eval_expr, run
from .lang import Binary, Expr, Num, Unary, Var
from .normalize import NormalizedCfa, preloop_constants

_SHIFT_CAP = 512


class EncodingError(Exception):
    pass


class ExtractionError(Exception):
    pass


class HavocStrategy(enum.Enum):
    """How much of the step case's start frame is left unconstrained."""

    SOUND_ALL = "sound-all"
    SOUND_LOOP_MODIFIED = "sound-loop-modified"
    UNSOUND_TERMINATION_VARS = "unsound-termination-vars"


# -- expression lowering -----------------------------------------------------


def _enc_arith(e: Expr, env: Mapping[str, Term], side: List[Term]) -> Term:
    """Integer-valued term for e; trap conditions accumulate in side."""
    if isinstance(e, Num):
        return num(e.value)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Unary):
        if e.op == "-":
            return t_neg(_enc_arith(e.operand, env, side))
        if e.op == "~":
            return t_sub(t_neg(_enc_arith(e.operand, env, side)), num(1))
        if e.op == "!":
            return t_ite(t_eq(_enc_arith(e.operand, env, side), num(0)),
                         num(1), num(0))
        raise EncodingError(f"unknown unary op {e.op}")
    if isinstance(e, Binary):
        op = e.op
        if op in ("==", "<", "&&", "||"):
            return t_ite(_enc_bool(e, env, side), num(1), num(0))
        a = _enc_arith(e.left, env, side)
        b = _enc_arith(e.right, env, side)
        if op == "+":
            return t_add(a, b)
        if op == "*":
            return t_mul(a, b)
        if op == "/":
            return _enc_tdiv(a, b, side)
        if op == "%":
            return _enc_emod(a, b, side)
        if op in ("<<", ">>"):
            return _enc_shift(op, a, b, side)
        if op in ("&", "|", "^"):
            return _enc_bitwise(op, a, b)
        raise EncodingError(f"unknown binary op {op}")
    raise EncodingError(f"not an expression: {e!r}")


def _enc_bool(e: Expr, env: Mapping[str, Term], side: List[Term]) -> Term:
    """Boolean term for e used as a guard (truthy iff nonzero)."""
    if isinstance(e, Num):
        return TRUE if e.value != 0 else FALSE
    if isinstance(e, Unary) and e.op == "!":
        return t_not(_enc_bool(e.operand, env, side))
    if isinstance(e, Binary):
        if e.op == "&&":
            return t_and(_enc_bool(e.left, env, side),
                         _enc_bool(e.right, env, side))
        if e.op == "||":
            return t_or(_enc_bool(e.left, env, side),
                        _enc_bool(e.right, env, side))
        if e.op == "==":
            return t_eq(_enc_arith(e.left, env, side),
                        _enc_arith(e.right, env, side))
        if e.op == "<":
            return t_lt(_enc_arith(e.left, env, side),
                        _enc_arith(e.right, env, side))
    t = _enc_arith(e, env, side)
    return t_not(t_eq(t, num(0)))


def _enc_tdiv(a: Term, b: Term, side: List[Term]) -> Term:
    if isinstance(b, IntLit) and b.value == 0:
        side.append(FALSE)
        return num(0)
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return num(tdiv_int(a.value, b.value))
    side.append(t_not(t_eq(b, num(0))))
    exact = t_or(t_ge(a, num(0)), t_eq(t_mod(a, b), num(0)))
    fixup = t_ite(t_gt(b, num(0)), num(1), num(-1))
    return t_ite(exact, t_div(a, b), t_add(t_div(a, b), fixup))


def _enc_emod(a: Term, b: Term, side: List[Term]) -> Term:
    if isinstance(b, IntLit) and b.value == 0:
        side.append(FALSE)
        return num(0)
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return num(a.value - b.value * ediv_int(a.value, b.value))
    side.append(t_not(t_eq(b, num(0))))
    return t_mod(a, b)


def _enc_shift(op: str, a: Term, b: Term, side: List[Term]) -> Term:
    if isinstance(b, IntLit):
        if b.value < 0 or b.value > _SHIFT_CAP:
            side.append(FALSE)
            return num(0)
        scale = num(2 ** b.value)
        if op == "<<":
            return t_mul(a, scale)
        if isinstance(a, IntLit):
            return num(a.value >> b.value)
        return t_div(a, scale)
    side.append(t_and(t_ge(b, num(0)), t_le(b, num(_SHIFT_CAP))))
    name = "shl.uf" if op == "<<" else "ashr.uf"
    return App(name, (a, b))


_BITWISE = {"&": ("band.uf", lambda a, b: a & b),
            "|": ("bor.uf", lambda a, b: a | b),
            "^": ("bxor.uf", lambda a, b: a ^ b)}


def _enc_bitwise(op: str, a: Term, b: Term) -> Term:
    name, fold = _BITWISE[op]
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return num(fold(a.value, b.value))
    return App(name, (a, b))


# -- path enumeration --------------------------------------------------------


@dataclass(frozen=True)
class PathFormula:
    """One acyclic path as a guarded symbolic update.

    Guards and outputs are over placeholder symbols ``v@in`` (value at
    the path's start) and ``v@h<n>`` (the n-th draw of v along the
    path); instantiation at a frame renames both.
    """

    guards: Tuple[Term, ...]
    outputs: Tuple[Tuple[str, Term], ...]
    draws: Tuple[Tuple[str, int], ...]


def _explore(cfa: CFA, loc: int, env: Dict[str, Term],
             guards: List[Term], draws: List[Tuple[str, int]],
             occ: Dict[str, int], stops: Dict[int, str],
             out: Dict[str, List[PathFormula]]) -> None:
    for edge in cfa.out_edges(loc):
        side: List[Term] = []
        if isinstance(edge.op, Assume):
            g = _enc_bool(edge.op.expr, env, side)
            if g is FALSE or FALSE in side:
                continue
            new_env = env
            new_guards = guards + side + [g]
            new_draws, new_occ = draws, occ
        elif isinstance(edge.op, AssignOp):
            val = _enc_arith(edge.op.expr, env, side)
            if FALSE in side:
                continue
            new_env = dict(env)
            new_env[edge.op.var] = val
            new_guards = guards + side
            new_draws, new_occ = draws, occ
        else:
            v = edge.op.var
            n = occ.get(v, 0)
            new_occ = dict(occ)
            new_occ[v] = n + 1
            new_env = dict(env)
            new_env[v] = sym(f"{v}@h{n}")
            new_guards = guards
            new_draws = draws + [(v, n)]
        kind = stops.get(edge.dst)
        if kind is not None:
            out[kind].append(PathFormula(
                tuple(new_guards),
                tuple(sorted(new_env.items())),
                tuple(new_draws)))
        else:
            _explore(cfa, edge.dst, new_env, new_guards, new_draws,
                     new_occ, stops, out)


def _body_paths(ncfa: NormalizedCfa) -> Dict[str, List[PathFormula]]:
    cfa = ncfa.cfa
    env = {v: sym(f"{v}@in") for v in cfa.vars}
    out: Dict[str, List[PathFormula]] = {"trans": [], "err": []}
    stops = {ncfa.loop_head: "trans", cfa.error: "err"}
    _explore(cfa, ncfa.loop_head, env, [], [], {}, stops, out)
    return out


def _entry_paths(ncfa: NormalizedCfa) -> Dict[str, List[PathFormula]]:
    cfa = ncfa.cfa
    env: Dict[str, Term] = {v: num(0) for v in cfa.vars}
    out: Dict[str, List[PathFormula]] = {"init": [], "bypass": []}
    if cfa.entry == ncfa.loop_head:
        out["init"].append(PathFormula((), tuple(sorted(env.items())), ()))
        return out
    stops = {ncfa.loop_head: "init", cfa.error: "bypass"}
    _explore(cfa, cfa.entry, env, [], [], {}, stops, out)
    return out


# -- the transition system ---------------------------------------------------


def _frame_map(path: PathFormula, vars_: Sequence[str], i: int,
               prefix: Optional[str] = None) -> Dict[str, Term]:
    tag = f"{i}" if prefix is None else prefix
    mapping = {f"{v}@in": sym(f"{v}@{i}") for v in vars_}
    for v, n in path.draws:
        mapping[f"{v}@h{n}"] = sym(f"{v}@{tag}h{n}")
    return mapping


class TransitionSystem:
    """Frame-indexed predicates I, T, P for one normalized program."""

    def __init__(self, ncfa: NormalizedCfa):
        self.ncfa = ncfa
        body = _body_paths(ncfa)
        entry = _entry_paths(ncfa)
        self.trans_paths = tuple(body["trans"])
        self.error_paths = tuple(body["err"])
        self.init_paths = tuple(entry["init"])
        self.bypass_paths = tuple(entry["bypass"])

    @property
    def vars(self) -> Tuple[str, ...]:
        return self.ncfa.cfa.vars

    def frame_sym(self, v: str, i: int) -> Term:
        return sym(f"{v}@{i}")

    def init(self) -> Term:
        """Frame 0 holds a state at the first head arrival."""
        disjuncts = []
        for p in self.init_paths:
            m = _frame_map(p, self.vars, 0, prefix="I")
            eqs = [t_eq(sym(f"{v}@0"), substitute(t, m))
                   for v, t in p.outputs]
            disjuncts.append(t_and(*(substitute(g, m) for g in p.guards),
                                   *eqs))
        return t_or(*disjuncts)

    @lru_cache(maxsize=None)
    def trans(self, i: int) -> Term:
        """One head-to-head passage between frames i and i+1."""
        disjuncts = []
        for p in self.trans_paths:
            m = _frame_map(p, self.vars, i)
            eqs = [t_eq(sym(f"{v}@{i + 1}"), substitute(t, m))
                   for v, t in p.outputs]
            disjuncts.append(t_and(*(substitute(g, m) for g in p.guards),
                                   *eqs))
        return t_or(*disjuncts)

    @lru_cache(maxsize=None)
    def not_prop(self, i: int) -> Term:
        """Some error path fires from frame i's head state."""
        disjuncts = []
        for p in self.error_paths:
            m = _frame_map(p, self.vars, i)
            disjuncts.append(t_and(*(substitute(g, m) for g in p.guards)))
        return t_or(*disjuncts)

    def prop(self, i: int) -> Term:
        return t_not(self.not_prop(i))

    def bypass(self) -> Term:
        """An error path from program entry that never meets the head."""
        disjuncts = []
        for p in self.bypass_paths:
            m = _frame_map(p, self.vars, 0, prefix="I")
            disjuncts.append(t_and(*(substitute(g, m) for g in p.guards)))
        return t_or(*disjuncts)

    def inv_at(self, inv: Term, i: int) -> Term:
        """Instantiate an invariant over source names at frame i."""
        return substitute(inv, {v: sym(f"{v}@{i}") for v in self.vars})

    def strategy_constraint(self, strategy: HavocStrategy) -> Term:
        """Frame-0 pinning for the step case, per havoc strategy."""
        ncfa = self.ncfa
        if strategy is HavocStrategy.SOUND_ALL:
            kept: frozenset = frozenset()
        elif strategy is HavocStrategy.SOUND_LOOP_MODIFIED:
            kept = frozenset(self.vars) - ncfa.loop_modified
        elif strategy is HavocStrategy.UNSOUND_TERMINATION_VARS:
            kept = frozenset(self.vars) - ncfa.termination_vars
        else:
            raise EncodingError(f"unknown strategy {strategy!r}")
        consts = preloop_constants(ncfa)
        parts = [t_eq(sym(f"{v}@0"), num(consts[v]))
                 for v in sorted(kept)
                 if v in consts and v != ncfa.pc_var]
        if ncfa.n_phases >= 2:
            pc0 = sym(f"{ncfa.pc_var}@0")
            parts.append(t_ge(pc0, num(1)))
            parts.append(t_le(pc0, num(ncfa.n_phases)))
        return t_and(*parts)


def build_ts(ncfa: NormalizedCfa) -> TransitionSystem:
    return TransitionSystem(ncfa)


# -- the three k-induction formulas ------------------------------------------


def encode_base_case(ts: TransitionSystem, k: int, omit_below: int = 0
                     ) -> Term:
    """Satisfiable iff a counterexample within k iterations exists.

    ``omit_below`` drops the violation disjuncts for frames below it
    (they were checked at smaller bounds), including the head-bypassing
    entry paths that count as iteration zero.
    """
    if k < 1:
        raise EncodingError("base case needs k >= 1")
    if not 0 <= omit_below <= k:
        raise EncodingError("omit_below out of range")
    acc = ts.not_prop(k)
    for n in range(k - 1, omit_below - 1, -1):
        acc = t_or(ts.not_prop(n), t_and(ts.trans(n), acc))
    chain = [ts.trans(i) for i in range(omit_below)]
    main = t_and(ts.init(), *chain, acc)
    if omit_below == 0:
        return t_or(main, ts.bypass())
    return main


def encode_forward_condition(ts: TransitionSystem, k: int) -> Term:
    """Unsatisfiable iff no execution completes k loop iterations."""
    if k < 1:
        raise EncodingError("forward condition needs k >= 1")
    return t_and(ts.init(), *(ts.trans(i) for i in range(k)))


def encode_step_frames(ts: TransitionSystem, k: int,
                       strategy: HavocStrategy = HavocStrategy.SOUND_ALL
                       ) -> Term:
    """The invariant-free part of the step case: k consecutive safe
    iterations from an arbitrary state followed by a violation.  Kept
    separate so a solver can hold the frames on its assertion stack and
    try successive invariants as retractable deltas."""
    if k < 1:
        raise EncodingError("step case needs k >= 1")
    parts = [ts.strategy_constraint(strategy)]
    for i in range(k):
        parts.append(ts.prop(i))
        parts.append(ts.trans(i))
    parts.append(ts.not_prop(k))
    return t_and(*parts)


def encode_step_invariants(ts: TransitionSystem, k: int, inv: Term) -> Term:
    """The invariant instantiated at every frame of a k-step case."""
    return t_and(*(ts.inv_at(inv, i) for i in range(k + 1)))


def encode_step_case(ts: TransitionSystem, k: int, inv: Term,
                     strategy: HavocStrategy = HavocStrategy.SOUND_ALL
                     ) -> Term:
    """k consecutive safe iterations from an arbitrary invariant state
    followed by a violation; unsatisfiable proves safety for sound
    strategies.  Frames are anonymous: the start frame is constrained
    only by the strategy and the invariant (asserted at every frame)."""
    return t_and(encode_step_frames(ts, k, strategy),
                 encode_step_invariants(ts, k, inv))


# -- counterexample reconstruction -------------------------------------------


def extract_trace(model: Mapping[str, int], ts: TransitionSystem, k: int,
                  max_steps: int = 100000) -> Trace:
    """Turn a base-case model into a concrete error trace.

    Replays the program, feeding each nondet draw from the model symbol
    for the current frame (absent symbols were unconstrained and default
    to 0), then validates the choice list against the interpreter.
    """
    cfa = ts.ncfa.cfa
    head = ts.ncfa.loop_head
    env = {v: 0 for v in cfa.vars}
    choices: List[int] = []
    frame = 0 if cfa.entry == head else -1
    occ: Dict[str, int] = {}
    loc = cfa.entry
    for _ in range(max_steps):
        if loc == cfa.error:
            break
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
            if taken is not None and isinstance(taken.op, AssignOp):
                env[taken.op.var] = eval_expr(taken.op.expr, env)
        except Trap as exc:
            raise ExtractionError(f"model replay trapped: {exc}")
        if taken is None:
            raise ExtractionError("model replay exits without an error")
        if isinstance(taken.op, HavocOp):
            v = taken.op.var
            n = occ.get(v, 0)
            occ[v] = n + 1
            tag = "I" if frame < 0 else str(frame)
            val = model.get(f"{v}@{tag}h{n}", 0)
            env[v] = val
            choices.append(val)
        loc = taken.dst
        if loc == head:
            frame += 1
            occ = {}
            if frame > k:
                raise ExtractionError("model replay overruns the bound")
    else:
        raise ExtractionError("model replay does not terminate")
    verdict, trace = run(cfa, choices, max_steps=max_steps)
    if verdict != ERROR_REACHED:
        raise ExtractionError(
            f"extracted choices replay to {verdict}, not an error")
    return trace
