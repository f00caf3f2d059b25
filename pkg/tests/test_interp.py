"""Interpreter semantics and the brute-force counterexample search."""
import itertools

from hypothesis import given
from hypothesis import strategies as st

from kindle.cfa import build_cfa
from kindle.interp import (BUDGET, COMPLETED, ERROR_REACHED, TRAP, eval_expr,
                           run, shortest_cex)
from kindle.lang import parse


def prog(src):
    return build_cfa(parse(src))


def test_unsafe_example_error_at_three_iterations(unsafe_cfa):
    verdict, trace = run(unsafe_cfa, [1, 1, 1, 0])
    assert verdict == ERROR_REACHED
    assert trace.final.env_dict()["s"] == 4
    assert trace.nondet_choices == [1, 1, 1, 0]


def test_unsafe_example_completes_on_early_exit(unsafe_cfa):
    verdict, trace = run(unsafe_cfa, [0])
    assert verdict == COMPLETED
    assert trace.final.env_dict()["s"] == 1


def test_safe_example_never_errors_exhaustively(safe_cfa):
    for n in range(7):
        for choices in itertools.product([0, 1], repeat=n):
            verdict, _ = run(safe_cfa, list(choices))
            assert verdict != ERROR_REACHED


def test_budget_zero(safe_cfa):
    assert run(safe_cfa, [], max_steps=0)[0] == BUDGET
    assert run(prog(""), [], max_steps=0)[0] == BUDGET


def test_trap_on_division_by_zero():
    cfa = prog("int x; int y; y = nondet(); x = 1 / y;")
    assert run(cfa, [0])[0] == TRAP
    assert run(cfa, [2])[0] == COMPLETED


def test_trap_in_condition_halts_without_error():
    cfa = prog("int y; y = 0; assert(1 / y == 0);")
    assert run(cfa, [])[0] == TRAP


def test_shortest_cex_on_unsafe_example(unsafe_cfa):
    found = shortest_cex(unsafe_cfa, {0, 1}, 6)
    assert found is not None
    trace, iters = found
    assert iters == 3
    assert trace.final.location == unsafe_cfa.error
    # the found trace replays deterministically
    verdict, replay = run(unsafe_cfa, trace.nondet_choices)
    assert verdict == ERROR_REACHED
    assert replay.final.env == trace.final.env


def test_shortest_cex_on_safe_example(safe_cfa):
    assert shortest_cex(safe_cfa, {0, 1}, 8) is None


def test_arrival_counting_agrees_on_unsafe_example(unsafe_ncfa):
    found = shortest_cex(unsafe_ncfa.cfa, {0, 1}, 6,
                         head=unsafe_ncfa.loop_head)
    assert found is not None
    trace, iters = found
    assert iters == 3
    assert trace.nondet_choices == [1, 1, 1, 0]


def test_arrival_counting_on_safe_example(safe_ncfa):
    assert shortest_cex(safe_ncfa.cfa, {0, 1}, 8,
                        head=safe_ncfa.loop_head) is None


def test_arrival_counting_bypass_is_free():
    # an error path that never visits the head costs no iterations even
    # though the head is the place iterations are metered at
    cfa = prog("int x; x = 3; assert(x == 0); while (x < 9) { x = x + 1; }")
    from kindle.normalize import to_single_loop
    ncfa = to_single_loop(cfa)
    found = shortest_cex(ncfa.cfa, {0, 1}, 0, head=ncfa.loop_head)
    assert found is not None
    assert found[1] == 0


def test_shortest_cex_loop_free():
    cfa = prog("int x; x = 1; assert(x == 0);")
    trace, iters = shortest_cex(cfa, {0, 1}, 2)
    assert iters == 0
    assert trace.final.location == cfa.error


def test_error_in_first_body_pass_counts_zero_iterations():
    # iterations = completed back-edge traversals, so a violation inside
    # the first pass through the body happens at iteration count 0
    cfa = prog("int i; int f; i = 0;"
               "while (i < 9) { f = nondet(); if (f == 1) assert(i < 0); i = i + 1; }")
    _, iters = shortest_cex(cfa, {0, 1}, 9)
    assert iters == 0  # f = 1 on the very first pass already violates

    cfa = prog("int i; i = 0; while (i < 9) { assert(i < 5); i = i + 1; }")
    _, iters = shortest_cex(cfa, {0, 1}, 9)
    assert iters == 5  # five completed iterations bring i to 5


def test_shortest_cex_minimum_requires_completed_iterations():
    cfa = prog("int i; int f; i = 0;"
               "while (i < 9) { f = nondet(); assert(!(f == 1 && i == 2)); i = i + 1; }")
    _, iters = shortest_cex(cfa, {0, 1}, 9)
    assert iters == 2


def test_eval_semantics_div_trunc_mod_euclid():
    env = {}
    assert eval_expr(parse("int z; z = 7 / 2;").body[0].expr, env) == 3
    assert eval_expr(parse("int z; z = (0 - 7) / 2;").body[0].expr, env) == -3
    assert eval_expr(parse("int z; z = (0 - 7) % 3;").body[0].expr, env) == 2
    assert eval_expr(parse("int z; z = 7 % (0 - 3);").body[0].expr, env) == 1


def test_eval_shift_and_bitwise():
    e = parse("int z; z = (0 - 5) >> 1;").body[0].expr
    assert eval_expr(e, {}) == -3  # arithmetic shift, floors
    assert eval_expr(parse("int z; z = 3 << 2;").body[0].expr, {}) == 12
    assert eval_expr(parse("int z; z = ~5;").body[0].expr, {}) == -6
    assert eval_expr(parse("int z; z = 12 & 10;").body[0].expr, {}) == 8


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_comparison_ops_are_01(a, b):
    env = {"a": a, "b": b}
    lt = parse("int a; int b; a = a < b;").body[0].expr
    eq = parse("int a; int b; a = a == b;").body[0].expr
    assert eval_expr(lt, env) == (1 if a < b else 0)
    assert eval_expr(eq, env) == (1 if a == b else 0)


def test_strict_boolean_ops():
    env = {"a": -3, "b": 0}
    e = parse("int a; int b; a = a && b;").body[0].expr
    assert eval_expr(e, env) == 0
    e = parse("int a; int b; a = a || b;").body[0].expr
    assert eval_expr(e, env) == 1


def test_choice_exhaustion_completes(safe_cfa):
    verdict, _ = run(safe_cfa, [])
    assert verdict == COMPLETED
