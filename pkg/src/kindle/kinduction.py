"""Iterative-deepening k-induction with three queries per bound.

Each bound k runs the base case (bounded search for a violation), the
forward condition (is there any run of k full iterations left?), and the
inductive step.  The step case re-reads the currently known invariant in
a repeat loop, so a strengthening published mid-bound is used
immediately instead of waiting for the next k.

Two solver sessions are held for the whole run.  The base/forward
session keeps the initial predicate and the transition chain on its
assertion stack and grows it as k does; the violation disjunction for a
bound is pushed, checked, and popped before the next chain link is
asserted.  The step session gets the strategy-constrained frames for the
current k under one push and each candidate invariant under a nested
push, so a stronger invariant never re-sends the frames.  The two stacks
cannot share a session: step frames are anonymous while the base stack
pins frame 0 to the initial states, over the same symbols.

A ``FALSE`` verdict is only reported after its model has been replayed
to the error location by the concrete interpreter; a failed replay is
treated like a solver ``unknown`` for that bound.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from .encoder import (ExtractionError, HavocStrategy, build_ts,
                      encode_base_case, encode_step_frames,
                      encode_step_invariants, extract_trace)
from .formula import TRUE
from .interp import Trace
from .invariants import InvariantSnapshot, SnapshotStore
from .normalize import NormalizedCfa
from .smt import SolverSession

RESULT_TRUE = "TRUE"
RESULT_FALSE = "FALSE"
RESULT_UNKNOWN = "UNKNOWN"

SOURCE_FORWARD = "forward-condition"
SOURCE_INDUCTION = "induction"
SOURCE_ENGINE = "invariant-engine"

REASON_K_MAX = "k_max-exhausted"
REASON_TIMEOUT = "timeout"
REASON_UNKNOWN = "solver-unknown"


class VerifyError(Exception):
    """A configuration the verifier cannot run."""


def _inc_default(k: int) -> int:
    return k + 1


@dataclass(frozen=True)
class KInductionConfig:
    k_init: int = 1
    k_max: int = 100
    inc: Callable[[int], int] = _inc_default
    strategy: HavocStrategy = HavocStrategy.SOUND_ALL
    # skip violation depths already covered by smaller bounds; off
    # re-checks the full disjunction each round for cross-checking
    omit_checked: bool = True
    solver_cmd: Optional[Tuple[str, ...]] = None
    solver_timeout: float = 60.0
    wall_budget: Optional[float] = None

    def __post_init__(self):
        if self.k_init < 1:
            raise VerifyError("k_init must be at least 1")
        if self.k_max < self.k_init:
            raise VerifyError("k_max must be at least k_init")


@dataclass(frozen=True)
class Verdict:
    result: str
    final_k: int
    proof_source: Optional[str] = None
    invariant_version: int = 0
    trace: Optional[Trace] = None
    reason: Optional[str] = None

    @property
    def is_true(self) -> bool:
        return self.result == RESULT_TRUE

    @property
    def is_false(self) -> bool:
        return self.result == RESULT_FALSE

    def __str__(self) -> str:
        if self.result == RESULT_TRUE:
            return (f"TRUE (k={self.final_k}, via {self.proof_source}, "
                    f"invariant v{self.invariant_version})")
        if self.result == RESULT_FALSE:
            return f"FALSE (k={self.final_k})"
        return f"UNKNOWN ({self.reason}, k={self.final_k})"


_NO_SNAPSHOT = InvariantSnapshot(0, TRUE)


def get_currently_known_invariant(store: Optional[SnapshotStore]
                                  ) -> InvariantSnapshot:
    """Latest published snapshot; version 0 / true when nothing ran."""
    if store is None:
        return _NO_SNAPSHOT
    return store.current


class _Deadline:
    def __init__(self, budget: Optional[float]):
        self.at = None if budget is None else time.monotonic() + budget

    @property
    def hit(self) -> bool:
        return self.at is not None and time.monotonic() >= self.at


def verify(ncfa: NormalizedCfa,
           cfg: Optional[KInductionConfig] = None,
           store: Optional[SnapshotStore] = None,
           base_session: Optional[SolverSession] = None,
           step_session: Optional[SolverSession] = None) -> Verdict:
    """Run the deepening loop until a verdict or k_max.

    ``store`` is the invariant channel; pass the one given to a running
    (or pre-run) engine, or None to run with the trivial invariant.
    Caller-supplied sessions are reset and left open for reuse; owned
    ones are closed on exit.
    """
    cfg = cfg or KInductionConfig()
    owned = []
    if base_session is None:
        base_session = SolverSession(cfg.solver_cmd, timeout=cfg.solver_timeout)
        owned.append(base_session)
    else:
        base_session.reset()
    if step_session is None:
        step_session = SolverSession(cfg.solver_cmd, timeout=cfg.solver_timeout)
        owned.append(step_session)
    else:
        step_session.reset()
    try:
        return _verify(ncfa, cfg, store, base_session, step_session)
    finally:
        for s in owned:
            s.close()


def _verify(ncfa: NormalizedCfa, cfg: KInductionConfig,
            store: Optional[SnapshotStore],
            base_sess: SolverSession, step_sess: SolverSession) -> Verdict:
    ts = build_ts(ncfa)
    deadline = _Deadline(cfg.wall_budget)
    # the base stack may only hold conjuncts common to every later
    # query: the first base round still carries the head-bypassing
    # disjunct, so the initial predicate goes on only after it
    init_asserted = False
    chain_depth = 0      # transition links asserted on the base stack
    checked_through = -1  # highest violation frame verified absent
    saw_unknown = False

    k = last_k = cfg.k_init
    while k <= cfg.k_max:
        if deadline.hit:
            return Verdict(RESULT_UNKNOWN, k, reason=REASON_TIMEOUT)

        snap = get_currently_known_invariant(store)
        if snap.proved_safe:
            return Verdict(RESULT_TRUE, k, SOURCE_ENGINE, snap.version)

        # base case: any violation within k iterations?
        omit = checked_through + 1 if cfg.omit_checked else 0
        base_sess.push()
        base_sess.add([encode_base_case(ts, k, omit_below=omit)])
        verdict, model = base_sess.check_sat(want_model=True)
        base_sess.pop()
        if verdict == "sat":
            try:
                trace = extract_trace(model or {}, ts, k)
            except ExtractionError:
                saw_unknown = True
            else:
                return Verdict(RESULT_FALSE, k, trace=trace)
        elif verdict == "unknown":
            saw_unknown = True
        else:
            checked_through = k

        # a violation this round (found or merely possible) makes both
        # positive checks moot: forward-condition TRUE needs a clean
        # sweep, and a step proof cannot rule out the skipped depths
        if verdict == "unsat":
            # the chain is also held back to the verified depth, or a
            # later omitted disjunction would be forced to extend past
            # its violation frame
            if not init_asserted:
                base_sess.add([ts.init()])
                init_asserted = True
            while chain_depth < k:
                base_sess.add([ts.trans(chain_depth)])
                chain_depth += 1
            fwd, _ = base_sess.check_sat()
            if fwd == "unsat":
                return Verdict(RESULT_TRUE, k, SOURCE_FORWARD, snap.version)
            if fwd == "unknown":
                saw_unknown = True

            # inductive step, retried while the engine publishes
            step_sess.push()
            step_sess.add([encode_step_frames(ts, k, cfg.strategy)])
            try:
                while True:
                    snap = get_currently_known_invariant(store)
                    if snap.proved_safe:
                        return Verdict(RESULT_TRUE, k, SOURCE_ENGINE,
                                       snap.version)
                    if deadline.hit:
                        return Verdict(RESULT_UNKNOWN, k,
                                       reason=REASON_TIMEOUT)
                    delta = encode_step_invariants(ts, k,
                                                   snap.loop_head_formula)
                    sv, _ = step_sess.check([delta])
                    if sv == "unsat":
                        return Verdict(RESULT_TRUE, k, SOURCE_INDUCTION,
                                       snap.version)
                    if sv == "unknown":
                        saw_unknown = True
                        break
                    current = get_currently_known_invariant(store)
                    if current.version == snap.version:
                        break
            finally:
                step_sess.pop()

        nk = cfg.inc(k)
        if nk <= k:
            raise VerifyError(f"inc must grow the bound, got {k} -> {nk}")
        last_k, k = k, nk

    reason = REASON_UNKNOWN if saw_unknown else REASON_K_MAX
    return Verdict(RESULT_UNKNOWN, last_k, reason=reason)
