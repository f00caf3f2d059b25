"""SSA encodings of the base, forward, and step queries.

Everything here that admits an independent check is checked against the
concrete interpreter: base-case verdicts against the brute-force
shortest-counterexample search (arrival metering), and every extracted
trace is replayed.  Iteration counting is head-arrival based: frame i
holds the state at the (i+1)-th arrival at the loop head, so sat at
bound k means an error within k iterations.
"""
import pytest

from kindle.cfa import build_cfa
from kindle.encoder import (EncodingError, HavocStrategy, build_ts,
                            encode_base_case, encode_forward_condition,
                            encode_step_case, extract_trace)
from kindle.formula import (TRUE, num, render, sym, t_and, t_eq, t_ge,
                            t_le, t_or)
from kindle.interp import ERROR_REACHED, TRAP, run, shortest_cex
from kindle.lang import parse
from kindle.normalize import to_single_loop
from kindle.smt import SolverSession


def ts_of(src: str):
    return build_ts(to_single_loop(build_cfa(parse(src))))


@pytest.fixture(scope="module")
def sess():
    with SolverSession(timeout=30) as s:
        yield s


@pytest.fixture(scope="module")
def safe_ts(safe_ncfa):
    return build_ts(safe_ncfa)


@pytest.fixture(scope="module")
def unsafe_ts(unsafe_ncfa):
    return build_ts(unsafe_ncfa)


# The invariant the ladder of refinements eventually produces for the
# cyclic state machine: s stays in 1..4 and the counters agree except
# while x2 is catching up.
S, X1, X2 = sym("s"), sym("x1"), sym("x2")
LADDER = t_and(t_ge(S, num(1)), t_le(S, num(4)),
               t_or(t_eq(S, num(2)), t_eq(X1, X2)))


def test_path_enumeration_counts(safe_ts, unsafe_ts):
    assert (len(unsafe_ts.trans_paths), len(unsafe_ts.error_paths)) == (6, 1)
    assert (len(unsafe_ts.init_paths), len(unsafe_ts.bypass_paths)) == (1, 0)
    assert (len(safe_ts.trans_paths), len(safe_ts.error_paths)) == (6, 1)
    assert (len(safe_ts.init_paths), len(safe_ts.bypass_paths)) == (1, 0)


def test_init_pins_preloop_assignments(sess, unsafe_ts):
    init = unsafe_ts.init()
    want = t_and(t_eq(sym("s@0"), num(1)), t_eq(sym("x1@0"), num(0)),
                 t_eq(sym("x2@0"), num(0)))
    assert sess.check([init])[0] == "sat"
    # init must entail the straight-line prefix values
    from kindle.formula import t_not
    assert sess.check([init, t_not(want)])[0] == "unsat"


def test_trans_encodes_the_increment(sess):
    ts = ts_of("int x; x = 0; while (x < 10) { x = x + 1; }")
    t = ts.trans(0)
    pinned = t_eq(sym("x@0"), num(3))
    assert sess.check([t, pinned, t_eq(sym("x@1"), num(4))])[0] == "sat"
    assert sess.check([t, pinned, t_eq(sym("x@1"), num(5))])[0] == "unsat"


def test_inv_at_renames_source_vars(safe_ts):
    assert render(safe_ts.inv_at(t_ge(S, num(1)), 3)) == "(<= 1 s@3)"


def test_base_case_threshold_on_unsafe(sess, unsafe_ts):
    assert sess.check([encode_base_case(unsafe_ts, 1)])[0] == "unsat"
    assert sess.check([encode_base_case(unsafe_ts, 2)])[0] == "unsat"
    verdict, model = sess.check([encode_base_case(unsafe_ts, 3)],
                                want_model=True)
    assert verdict == "sat"
    trace = extract_trace(model, unsafe_ts, 3)
    head = unsafe_ts.ncfa.loop_head
    arrivals = sum(1 for e, _ in trace.steps if e.dst == head)
    assert arrivals == 4  # three full iterations, error on the fourth visit
    status, _ = run(unsafe_ts.ncfa.cfa, trace.nondet_choices)
    assert status == ERROR_REACHED


def test_base_case_unsat_through_eight_on_safe(sess, safe_ts):
    for k in range(1, 9):
        assert sess.check([encode_base_case(safe_ts, k)])[0] == "unsat", k


def test_forward_condition_on_bounded_loop(sess):
    ts = ts_of("int i; i = 0; while (i < 2) { i = i + 1; }")
    assert sess.check([encode_forward_condition(ts, 2)])[0] == "sat"
    assert sess.check([encode_forward_condition(ts, 3)])[0] == "unsat"


def test_forward_condition_on_unbounded_loop(sess, safe_ts):
    # the machine can always keep running, so no bound ever closes it
    assert sess.check([encode_forward_condition(safe_ts, 10)])[0] == "sat"


def test_step_case_with_trivial_invariant_never_closes(sess, safe_ts):
    for k in range(1, 9):
        v, _ = sess.check([encode_step_case(safe_ts, k, TRUE)])
        assert v == "sat", k


def test_step_case_counterexample_shape(sess, safe_ts):
    # the only way to violate from an anonymous start is to climb s from
    # below: s is forced through -3 .. 1 with the counters never touched
    verdict, model = sess.check([encode_step_case(safe_ts, 4, TRUE)],
                                want_model=True)
    assert verdict == "sat"
    assert [model[f"s@{i}"] for i in range(5)] == [-3, -2, -1, 0, 1]


def test_step_case_closes_at_four_with_lower_bound(sess, safe_ts):
    bound = t_ge(S, num(1))
    for k in (1, 2, 3):
        assert sess.check([encode_step_case(safe_ts, k, bound)])[0] == "sat"
    assert sess.check([encode_step_case(safe_ts, 4, bound)])[0] == "unsat"


def test_step_case_closes_with_ladder(sess, safe_ts):
    # the ladder contradicts the violating frame outright (s = 1 forces
    # x1 = x2 under it), so every bound closes, in particular k = 2
    for k in (1, 2, 3, 4):
        assert sess.check([encode_step_case(safe_ts, k, LADDER)])[0] == "unsat"


def test_step_case_monotone_in_invariant_strength(sess, safe_ts):
    # LADDER implies s >= 1, and s >= 1 already closes k=4, so the
    # stronger invariant must close it too
    assert sess.check([encode_step_case(safe_ts, 4, t_ge(S, num(1)))]
                      )[0] == "unsat"
    assert sess.check([encode_step_case(safe_ts, 4, LADDER)])[0] == "unsat"


def test_unsound_strategy_produces_the_wrong_proof(sess, unsafe_ts):
    unsound = HavocStrategy.UNSOUND_TERMINATION_VARS
    v1, _ = sess.check([encode_step_case(unsafe_ts, 1, TRUE, unsound)])
    assert v1 == "unsat"  # "proves" a program with a real bug
    v3, _ = sess.check([encode_step_case(unsafe_ts, 3, TRUE, unsound)])
    assert v3 == "sat"  # deep enough to contain the actual counterexample


def test_pinning_unmodified_vars_enables_proofs(sess):
    ts = ts_of("""
      int lim; int i;
      lim = 5;
      i = 0;
      while (i < lim) { i = i + 1; assert(i <= 5); }
    """)
    # with lim anonymous the step case is sat at every k; pinning the
    # loop-unmodified lim back to 5 closes it immediately
    for k in (1, 3):
        v, _ = sess.check([encode_step_case(ts, k, TRUE,
                                            HavocStrategy.SOUND_ALL)])
        assert v == "sat"
    v, _ = sess.check([encode_step_case(ts, 1, TRUE,
                                        HavocStrategy.SOUND_LOOP_MODIFIED)])
    assert v == "unsat"


def test_phase_selector_is_range_constrained():
    ts = ts_of("""
      int i; int n; int f;
      i = 0; n = 0;
      while (i < 1) { i = i + 1; n = n + 1; }
      i = 0;
      while (i < 2) { f = nondet(); if (f != 0) { n = n + 1; } i = i + 1; }
      assert(n < 3);
    """)
    got = render(ts.strategy_constraint(HavocStrategy.SOUND_ALL))
    assert got == "(and (<= 1 pc@0) (<= pc@0 2))"


def test_omitting_checked_frames_drops_the_entry_violation(sess):
    ts = ts_of("int x; x = 1; assert(x == 0); while (x < 9) { x = x + 1; }")
    assert sess.check([encode_base_case(ts, 1)])[0] == "sat"
    assert sess.check([encode_base_case(ts, 1, omit_below=1)])[0] == "unsat"


def test_bound_arguments_are_validated(safe_ts):
    with pytest.raises(EncodingError):
        encode_base_case(safe_ts, 0)
    with pytest.raises(EncodingError):
        encode_base_case(safe_ts, 2, omit_below=3)
    with pytest.raises(EncodingError):
        encode_forward_condition(safe_ts, 0)
    with pytest.raises(EncodingError):
        encode_step_case(safe_ts, 0, TRUE)


# Programs whose nondet draws feed only zero tests, so the interpreter's
# {0, 1} choice domain covers everything the solver can do with them.
AGREEMENT_PROGRAMS = {
    "two-phases": """
      int i; int n; int f;
      i = 0; n = 0;
      while (i < 1) { i = i + 1; n = n + 1; }
      i = 0;
      while (i < 2) { f = nondet(); if (f != 0) { n = n + 1; } i = i + 1; }
      assert(n < 3);
    """,
    "nested": """
      int i; int j; int c;
      i = 0; c = 0;
      while (i < 2) {
        j = 0;
        while (j < 1) { c = c + 1; j = j + 1; }
        i = i + 1;
      }
      assert(c < 2);
    """,
    "division": """
      int x; int f;
      x = 9;
      while (x < 40) {
        f = nondet();
        if (f != 0) { x = x + x / 2; } else { x = x + 3; }
        assert(!(x == 18));
      }
    """,
    "shift-and-mod": """
      int a; int f;
      a = 1;
      while (a < 64) {
        f = nondet();
        if (f != 0) { a = a << 1; } else { a = a + 1; }
        assert(!(a % 16 == 0 && 31 < a));
      }
    """,
}


@pytest.mark.parametrize("name", sorted(AGREEMENT_PROGRAMS))
def test_base_case_agrees_with_interpreter(sess, name):
    ncfa = to_single_loop(build_cfa(parse(AGREEMENT_PROGRAMS[name])))
    ts = build_ts(ncfa)
    found = shortest_cex(ncfa.cfa, {0, 1}, 12, head=ncfa.loop_head)
    least = None if found is None else found[1]
    for k in range(1, 7):
        verdict, model = sess.check([encode_base_case(ts, k)],
                                    want_model=True)
        expected = "sat" if least is not None and least <= k else "unsat"
        assert verdict == expected, (name, k, least)
        if verdict == "sat":
            extract_trace(model, ts, k)  # raises unless the replay errors


def test_model_draws_can_leave_small_domains(sess):
    # the error needs 10 / f == 0, i.e. |f| > 10: invisible to a {0, 1}
    # search but routine for the solver, and the replay must still agree
    ts = ts_of("int x; int f; f = nondet(); x = 10 / f; assert(!(x == 0));")
    verdict, model = sess.check([encode_base_case(ts, 1)], want_model=True)
    assert verdict == "sat"
    trace = extract_trace(model, ts, 1)
    assert abs(trace.nondet_choices[0]) > 10
    status, _ = run(ts.ncfa.cfa, [0])
    assert status == TRAP  # dividing by the zero draw halts silently
