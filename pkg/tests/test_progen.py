"""Generator guarantees: determinism, flag discipline, honest labels."""
import random

import pytest

from kindle import lang
from kindle.cfa import HavocOp, build_cfa
from kindle.interp import ERROR_REACHED, run, shortest_cex
from kindle.lang import parse
from kindle.normalize import to_single_loop
from kindle.progen import (FLAG_NAMES, GenConfig, corpus, exhaustive_verdict,
                           labeled_corpus, random_program)

FREE_CFG = GenConfig()
BOUNDED_CFG = GenConfig(bounded_only=True, redraw_in_loops=False,
                        max_body=2, loop_bound=(2, 3))


@pytest.fixture(scope="module")
def free_corpus():
    return corpus(60, 11, FREE_CFG)


@pytest.fixture(scope="module")
def bounded_corpus():
    return corpus(40, 12, BOUNDED_CFG)


@pytest.fixture(scope="module")
def labeled():
    return labeled_corpus(20, 7)


# -- walking the tree --------------------------------------------------------


def walk_stmts(stmts):
    for s in stmts:
        yield s
        if isinstance(s, lang.If):
            yield from walk_stmts(s.then)
            yield from walk_stmts(s.orelse)
        elif isinstance(s, lang.While):
            yield from walk_stmts(s.body)


def mentions(e, names):
    if isinstance(e, lang.Var):
        return e.name in names
    if isinstance(e, lang.Binary):
        return mentions(e.left, names) or mentions(e.right, names)
    if isinstance(e, lang.Unary):
        return mentions(e.operand, names)
    return False


def flags_only_zero_tested(e, flags):
    """Every flag occurrence is the left side of an ==0 or !=0 test."""
    if isinstance(e, lang.Binary):
        if (e.op in ("==", "!=") and isinstance(e.left, lang.Var)
                and e.left.name in flags):
            return isinstance(e.right, lang.Num) and e.right.value == 0
        return (flags_only_zero_tested(e.left, flags)
                and flags_only_zero_tested(e.right, flags))
    if isinstance(e, lang.Unary):
        return flags_only_zero_tested(e.operand, flags)
    if isinstance(e, lang.Var):
        return e.name not in flags
    return True


# -- determinism -------------------------------------------------------------


def test_corpus_is_deterministic():
    assert corpus(20, 5) == corpus(20, 5)


def test_corpus_varies_with_seed():
    assert corpus(20, 5) != corpus(20, 6)


def test_corpus_has_no_duplicates(free_corpus):
    assert len(set(free_corpus)) == len(free_corpus)


def test_labeled_corpus_is_deterministic():
    assert labeled_corpus(6, 3) == labeled_corpus(6, 3)


def test_single_draws_are_reproducible():
    a = random_program(random.Random(42))
    b = random_program(random.Random(42))
    assert a == b


# -- every program is well formed --------------------------------------------


def test_free_corpus_parses_and_normalizes(free_corpus):
    for src in free_corpus:
        ncfa = to_single_loop(build_cfa(parse(src)))
        assert ncfa.loop_head is not None


def test_bounded_corpus_parses_and_normalizes(bounded_corpus):
    for src in bounded_corpus:
        to_single_loop(build_cfa(parse(src)))


def test_size_limits_hold(free_corpus, bounded_corpus):
    for src in free_corpus + bounded_corpus:
        prog = parse(src)
        assert len(prog.decls) <= FREE_CFG.max_vars
        loops = [s for s in walk_stmts(prog.body) if isinstance(s, lang.While)]
        assert len(loops) <= FREE_CFG.max_loops


def test_every_program_ends_in_an_assert(free_corpus):
    for src in free_corpus:
        prog = parse(src)
        assert isinstance(prog.body[-1], lang.Assert)


def test_bounded_shape_has_no_flag_loops(bounded_corpus):
    for src in bounded_corpus:
        prog = parse(src)
        flags = {v for v in prog.decls if v in FLAG_NAMES}
        for s in walk_stmts(prog.body):
            if isinstance(s, lang.While):
                assert not mentions(s.cond, flags)


# -- flag discipline ---------------------------------------------------------


def test_flag_discipline(free_corpus, bounded_corpus):
    for src in free_corpus + bounded_corpus:
        prog = parse(src)
        flags = {v for v in prog.decls if v in FLAG_NAMES}
        data = set(prog.decls) - flags
        assert flags and data
        for s in walk_stmts(prog.body):
            if isinstance(s, lang.Havoc):
                assert s.var in flags
            elif isinstance(s, lang.Assign):
                if s.var in flags:
                    assert isinstance(s.expr, lang.Num)
                    assert s.expr.value in (0, 1)
                else:
                    assert not mentions(s.expr, flags)
            elif isinstance(s, lang.Assert):
                assert not mentions(s.cond, flags)
            elif isinstance(s, (lang.If, lang.While)):
                assert flags_only_zero_tested(s.cond, flags)


# -- the exhaustive oracle ---------------------------------------------------


def test_oracle_on_a_straight_line_safe_program():
    cfa = build_cfa(parse(
        "int x;\nx = 0;\nwhile (x < 3) { x = x + 1; }\nassert(x == 3);\n"))
    assert exhaustive_verdict(cfa) == ("safe", None)


def test_oracle_finds_the_flag_guarded_bug():
    cfa = build_cfa(parse(
        "int x; int f;\nx = 0;\nf = nondet();\n"
        "if (f != 0) { x = 5; }\nassert(x == 0);\n"))
    verdict, witness = exhaustive_verdict(cfa)
    assert verdict == "unsafe"
    status, _ = run(cfa, witness)
    assert status == ERROR_REACHED


def test_oracle_gives_up_on_a_free_loop():
    cfa = build_cfa(parse(
        "int x; int f;\nx = 0;\nf = nondet();\n"
        "while (f != 0) { x = x + 1; f = nondet(); }\nassert(x >= 0);\n"))
    verdict, witness = exhaustive_verdict(cfa)
    assert verdict == "undecided"
    assert witness is None


def test_oracle_gives_up_on_divergence():
    cfa = build_cfa(parse(
        "int x;\nx = 0;\nwhile (0 < 1) { x = x + 1; }\nassert(x >= 0);\n"))
    assert exhaustive_verdict(cfa, max_steps=500) == ("undecided", None)


def test_oracle_respects_the_run_budget():
    cfa = build_cfa(parse(
        "int x; int f;\nx = 0;\nf = nondet();\n"
        "while (f != 0) { f = nondet(); }\nassert(x == 0);\n"))
    assert exhaustive_verdict(cfa, max_runs=3) == ("undecided", None)


# -- labels are ground truth -------------------------------------------------


def test_labels_match_the_oracle(labeled):
    assert len(labeled) == 20
    for src, expected in labeled:
        cfa = build_cfa(parse(src))
        verdict, witness = exhaustive_verdict(cfa)
        assert verdict == ("safe" if expected == "true" else "unsafe")
        if verdict == "unsafe":
            status, _ = run(cfa, witness)
            assert status == ERROR_REACHED


def test_true_labels_survive_a_bounded_search(labeled):
    checked = 0
    for src, expected in labeled:
        if expected != "true" or checked >= 5:
            continue
        cfa = build_cfa(parse(src))
        assert shortest_cex(cfa, choice_domain=(0, 1),
                            max_loop_iterations=8) is None
        checked += 1
    assert checked > 0


def test_balanced_corpus_splits_evenly():
    pairs = labeled_corpus(10, 9, balance=True)
    labels = [e for _, e in pairs]
    assert labels.count("true") == 5
    assert labels.count("false") == 5


def test_labeled_corpus_has_both_kinds(labeled):
    labels = {e for _, e in labeled}
    assert labels == {"true", "false"}
