"""Solver sessions: queries, scoping, models, crash recovery."""
import time

import pytest

from kindle.formula import (App, num, sym, t_add, t_and, t_eq, t_ge, t_le,
                            t_mul)
from kindle.smt import (SolverError, SolverSession, default_solver_cmd,
                        one_shot_check, parse_model)


@pytest.fixture(scope="module")
def sess():
    with SolverSession(timeout=30) as s:
        yield s


def test_default_solver_cmd_is_a_command():
    cmd = default_solver_cmd()
    assert isinstance(cmd, list) and cmd


def test_sat_with_model(sess):
    x, y = sym("x@0"), sym("y@0")
    verdict, model = sess.check([t_eq(x, num(3)), t_eq(y, num(-7))],
                                want_model=True)
    assert verdict == "sat"
    assert model == {"x@0": 3, "y@0": -7}


def test_unsat(sess):
    x = sym("x@0")
    verdict, model = sess.check([t_and(t_ge(x, num(1)), t_le(x, num(0)))])
    assert verdict == "unsat"
    assert model is None


def test_check_restores_stack_depth(sess):
    before = sess.depth
    sess.check([t_eq(sym("a"), num(1))])
    assert sess.depth == before


def test_nested_scopes(sess):
    p = sym("p")
    sess.push()
    sess.add([t_ge(p, num(5))])
    sess.push()
    sess.add([t_le(p, num(3))])
    assert sess.check_sat()[0] == "unsat"
    sess.pop()
    assert sess.check_sat()[0] == "sat"
    sess.pop()


def test_pop_below_ground_raises(sess):
    while sess.depth > 0:
        sess.pop()
    with pytest.raises(SolverError):
        sess.pop()


def test_nonlinear_terms(sess):
    p = sym("p")
    verdict, model = sess.check([t_eq(t_mul(p, p), num(49)),
                                 t_ge(p, num(0))], want_model=True)
    assert verdict == "sat"
    assert model["p"] == 7


def test_uninterpreted_functions_are_functional(sess):
    p, q = sym("p"), sym("q")
    app = App("shl.uf", (p, q))
    verdict, _ = sess.check([t_eq(app, num(12)), t_eq(app, num(13))])
    assert verdict == "unsat"


def test_redeclaration_across_pop_is_harmless(sess):
    x = sym("x@0")
    for _ in range(3):
        verdict, _ = sess.check([t_eq(x, num(1))])
        assert verdict == "sat"


def test_many_rapid_queries_stay_uncorrupted(sess):
    # Regression: the wasm shim used to garble commands under rapid
    # fire because string arguments lived on a recycled stack slot.
    for i in range(60):
        a = sym("a@%d" % i)
        verdict, model = sess.check(
            [t_eq(a, num(i)), t_eq(sym("b"), t_add(a, num(1)))],
            want_model=True)
        assert verdict == "sat", i
        assert model["a@%d" % i] == i and model["b"] == i + 1


def test_recovers_after_solver_death():
    with SolverSession(timeout=30) as s:
        p = sym("p")
        s.push()
        s.add([t_ge(p, num(5)), t_le(p, num(5))])
        assert s.check_sat()[0] == "sat"
        s._proc.kill()
        s._proc.wait()
        time.sleep(0.1)
        verdict, _ = s.check_sat()
        assert verdict in ("sat", "unknown")
        assert s.restarts >= 1
        verdict2, model = s.check_sat(want_model=True)
        assert verdict2 == "sat"
        assert model["p"] == 5
        s.pop()


def test_timeout_reports_unknown_and_session_survives():
    with SolverSession(timeout=30) as s:
        assert s.check([t_eq(sym("a"), num(1))])[0] == "sat"
        original = s._read_line
        calls = {"n": 0}

        def flaky(deadline):
            if calls["n"] == 0:
                calls["n"] += 1
                from kindle.smt import _Timeout
                raise _Timeout()
            return original(deadline)

        s._read_line = flaky
        assert s.check_sat()[0] == "unknown"
        s._read_line = original
        assert s.check([t_eq(sym("a"), num(2))])[0] == "sat"


def test_reset_forgets_assertions():
    with SolverSession(timeout=30) as s:
        s.add([t_eq(sym("a"), num(1)), t_eq(sym("a"), num(2))])
        assert s.check_sat()[0] == "unsat"
        s.reset()
        assert s.check([t_eq(sym("a"), num(3))])[0] == "sat"


def test_one_shot_check():
    verdict, model = one_shot_check([t_eq(sym("z"), num(42))],
                                    want_model=True)
    assert verdict == "sat"
    assert model["z"] == 42


def test_parse_model_plain_and_negative():
    text = ("(\n  (define-fun x@0 () Int\n    3)\n"
            "  (define-fun y@0 () Int\n    (- 7))\n)\n")
    assert parse_model(text) == {"x@0": 3, "y@0": -7}


def test_parse_model_with_model_keyword_and_quoted_name():
    text = ("(model\n  (define-fun |weird name| () Int 11)\n"
            "  (define-fun plain () Int -2)\n)\n")
    assert parse_model(text) == {"weird name": 11, "plain": -2}


def test_parse_model_ignores_non_int_entries():
    text = ("(\n  (define-fun f ((a Int)) Int 0)\n"
            "  (define-fun ok () Int 5)\n)\n")
    out = parse_model(text)
    assert out["ok"] == 5
    assert "f" not in out
