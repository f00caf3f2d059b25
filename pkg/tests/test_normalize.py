"""Single-loop normalization: trace equivalence and variable classification."""
import itertools

import pytest

from kindle.cfa import build_cfa, loop_heads
from kindle.interp import run
from kindle.lang import parse
from kindle.normalize import (loop_modified_vars, preloop_constants,
                              termination_condition_vars, to_single_loop)


def norm(src):
    return to_single_loop(build_cfa(parse(src)))


def assert_trace_equivalent(cfa, ncfa, max_len=4, domain=(0, 1)):
    for n in range(max_len + 1):
        for choices in itertools.product(domain, repeat=n):
            v1, _ = run(cfa, list(choices))
            v2, _ = run(ncfa.cfa, list(choices))
            assert v1 == v2, f"choices {choices}: {v1} vs {v2}"


def test_single_loop_is_identity(safe_cfa, safe_ncfa):
    assert safe_ncfa.cfa == safe_cfa
    assert safe_ncfa.loop_head == loop_heads(safe_cfa)[0]
    assert safe_ncfa.pc_var not in safe_cfa.vars
    assert safe_ncfa.n_phases == 1


def test_loop_free_program_gets_detached_head():
    n = norm("int x; x = 1; assert(x == 1);")
    assert n.n_phases == 0
    assert n.cfa.out_edges(n.loop_head) == []
    assert n.cfa.in_edges(n.loop_head) == []
    assert n.loop_modified == frozenset()


def test_sequential_loops_collapse_to_one_head():
    src = ("int i; int f; i = 0;"
           "while (i < 2) { i = i + 1; }"
           "while (i < 5) { i = i + 2; }"
           "assert(i < 7);")
    cfa = build_cfa(parse(src))
    n = to_single_loop(cfa)
    assert n.n_phases == 2
    assert loop_heads(n.cfa) == [n.loop_head]
    assert n.pc_var in n.cfa.vars
    assert_trace_equivalent(cfa, n)


def test_nested_loops_collapse_to_one_head():
    src = ("int i; int j; i = 0;"
           "while (i < 2) { j = 0; while (j < 2) { j = j + 1; } i = i + 1; }"
           "assert(i == 2);")
    cfa = build_cfa(parse(src))
    n = to_single_loop(cfa)
    assert n.n_phases == 2
    assert loop_heads(n.cfa) == [n.loop_head]
    assert_trace_equivalent(cfa, n)


def test_branch_guarded_loop_normalizes():
    src = ("int c; int i; c = nondet(); i = 0;"
           "if (c == 1) { while (i < 2) { i = i + 1; } }"
           "while (i < 4) { i = i + 1; }"
           "assert(i == 4);")
    cfa = build_cfa(parse(src))
    n = to_single_loop(cfa)
    assert loop_heads(n.cfa) == [n.loop_head]
    assert_trace_equivalent(cfa, n)


def test_unsafe_normalization_preserves_the_bug():
    src = ("int i; int f; i = 0;"
           "while (i < 2) { i = i + 1; }"
           "while (i < 5) { f = nondet(); i = i + 1; }"
           "assert(i < 5);")
    cfa = build_cfa(parse(src))
    n = to_single_loop(cfa)
    assert_trace_equivalent(cfa, n, max_len=4)


def test_loop_modified_vars_on_safe_example(safe_ncfa):
    assert loop_modified_vars(safe_ncfa) == {"s", "x1", "x2", "cont"}


def test_loop_modified_empty_body():
    n = norm("int x; while (x == 0) { } x = 1;")
    assert loop_modified_vars(n) == frozenset()


def test_loop_modified_single_var():
    n = norm("int x; int y; y = 1; while (x < 3) { x = x + 1; }")
    assert loop_modified_vars(n) == {"x"}


def test_termination_vars_exclude_non_condition_state(safe_ncfa):
    # s is updated in the body but never tested on a loop-exit edge
    tv = termination_condition_vars(safe_ncfa)
    assert tv == {"cont"}
    assert "s" not in tv


def test_termination_vars_both_comparison_sides():
    n = norm("int i; int n; while (i < n) { i = i + 1; }")
    assert termination_condition_vars(n) == {"i", "n"}


def test_termination_vars_constant_condition():
    n = norm("int x; while (1) { x = x + 1; }")
    assert termination_condition_vars(n) == frozenset()


def test_pc_var_never_in_termination_vars():
    src = ("int i; i = 0;"
           "while (i < 2) { i = i + 1; }"
           "while (i < 5) { i = i + 1; }")
    n = norm(src)
    assert n.pc_var not in termination_condition_vars(n)


def test_preloop_constants_on_safe_example(safe_ncfa):
    consts = preloop_constants(safe_ncfa)
    assert consts["s"] == 1
    assert consts["x1"] == 0
    assert consts["x2"] == 0
    assert "cont" not in consts  # havocked before the loop


def test_preloop_constants_fold_arithmetic():
    n = norm("int a; int b; a = 2; b = a * 3 + 1; while (b < 99) { b = b + 1; }")
    consts = preloop_constants(n)
    assert consts["a"] == 2
    assert consts["b"] == 7


def test_preloop_constants_stop_at_branch():
    n = norm("int a; int c; c = nondet(); if (c == 0) { a = 1; } "
             "while (a < 3) { a = a + 1; }")
    consts = preloop_constants(n)
    assert "c" not in consts
    # the walk stops at the branch, before a is conditionally assigned
    assert consts.get("a") == 0


def test_pc_name_avoids_collision():
    n = norm("int pc; while (pc < 2) { pc = pc + 1; }")
    assert n.pc_var != "pc"
