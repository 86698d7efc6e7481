import time

import pytest

from pnreach.smt import (
    SessionDead,
    SmtResult,
    SolverConfig,
    SolverSpawnError,
    UsageError,
    open_session,
    resolve_solver_command,
)


def test_open_and_trivial_checks():
    with open_session() as s:
        s.assert_formula("true")
        assert s.check().is_sat
        s.assert_formula("false")
        assert s.check().is_unsat


def test_missing_binary_spawn_error():
    with pytest.raises(SolverSpawnError):
        open_session(SolverConfig(command=("/nonexistent/solver-binary",)))


def test_not_a_solver_fails_handshake():
    with pytest.raises(SolverSpawnError):
        open_session(SolverConfig(command=("/bin/cat",), open_timeout_s=1.5))


def test_declare_assert_check_model():
    with open_session() as s:
        s.declare_int("x")
        s.assert_formula("(>= x 0)")
        res = s.check()
        assert res.is_sat
        assert res.model["x"] >= 0


def test_push_pop_scope_semantics():
    with open_session() as s:
        s.declare_int("x")
        s.assert_formula("(>= x 0)")
        assert s.check().is_sat
        s.push()
        s.assert_formula("(<= x (- 1))")
        assert s.check().is_unsat
        s.pop()
        assert s.check().is_sat


def test_pop_at_depth_zero_is_usage_error():
    with open_session() as s:
        with pytest.raises(UsageError):
            s.pop()


def test_duplicate_declaration_rejected_client_side():
    with open_session() as s:
        s.declare_int("x")
        with pytest.raises(UsageError):
            s.declare_int("x")
        s.push()
        s.declare_int("y")
        s.pop()
        s.declare_int("y")  # fine again after pop


def test_model_soundness_spot_check():
    with open_session() as s:
        for name in ("a", "b"):
            s.declare_int(name)
        terms = ["(>= a 2)", "(<= (+ a b) 7)", "(= b (+ a 1))"]
        for t in terms:
            s.assert_formula(t)
        res = s.check()
        assert res.is_sat
        a, b = res.model["a"], res.model["b"]
        assert a >= 2 and a + b <= 7 and b == a + 1


def test_timeout_budget_returns_unknown():
    cfg = SolverConfig(budget_ms=1)
    with open_session(cfg) as s:
        for i in range(40):
            s.declare_int(f"v{i}")
        # a pile of interlocked constraints; 1 ms cannot finish the drain+check
        for i in range(39):
            s.assert_formula(f"(<= (* 3 v{i}) (+ (* 2 v{i+1}) 1))")
        res = s.check()
        assert res.is_unknown and res.reason in ("timeout", "crash")
        with pytest.raises(SessionDead):
            s.assert_formula("true")


def test_dead_session_fails_fast():
    s = open_session()
    s.interrupt()
    with pytest.raises(SessionDead):
        s.assert_formula("true")
    res_alive = not s.alive
    assert res_alive
    s.close()


def test_assertion_count_bookkeeping_push_pop():
    # session state after push/pop equals the state before push
    with open_session() as s:
        s.declare_int("x")
        s.assert_formula("(= x 3)")
        before = s.check()
        s.push()
        s.assert_formula("(= x 4)")
        assert s.check().is_unsat
        s.pop()
        after = s.check()
        assert before.is_sat and after.is_sat
        assert after.model["x"] == 3
        assert s.depth == 0


def test_quoted_symbol_roundtrip():
    with open_session() as s:
        s.declare_int("p@0")
        s.assert_formula("(= |p@0| 2)")
        res = s.check()
        assert res.is_sat
        assert res.model["p@0"] == 2


def test_resolve_solver_command_explicit():
    assert resolve_solver_command("mysolver --flag") == ("mysolver", "--flag")
