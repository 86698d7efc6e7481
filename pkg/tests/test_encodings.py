import random

import pytest

from pnreach.encodings import (
    EncodingError,
    StepVars,
    bool_term,
    encode_bool,
    encode_initial,
    encode_nonneg,
    encode_reduction,
    encode_state_equation,
    encode_step,
    declare_state_equation_vars,
    declare_step_vars,
    find_trap,
    marking_from_model,
    sigma_var,
    trap_constraint,
)
from pnreach.model import (
    LinearExpr,
    Marking,
    Not,
    Or,
    PetriNet,
    ReductionSystem,
    compare,
    evaluate,
    fire,
)
from pnreach.smt import open_session
from nets import net_a, net_b, net_c, net_d
from oracle import is_trap, qualifying_trap_exists

lp = LinearExpr.of_place


def test_encode_nonneg_forms():
    a = net_a()
    assert encode_nonneg(a, StepVars(0)) == "(and (>= p@0 0) (>= q@0 0))"
    empty = PetriNet("e", [], [], {}, {}, {})
    assert encode_nonneg(empty, StepVars(0)) == "true"
    b = net_b()
    assert encode_nonneg(b, StepVars(0)) == "(>= p@0 0)"


def test_encode_initial_forms():
    assert encode_initial(net_a(), StepVars(0)) == "(and (= p@0 1) (= q@0 0))"
    assert encode_initial(net_b(), StepVars(0)) == "(= p@0 1)"
    zero = PetriNet("z", ["x", "y"], [], {}, {}, {})
    assert encode_initial(zero, StepVars(0)) == "(and (= x@0 0) (= y@0 0))"


def test_encode_step_forms():
    a = net_a()
    step = encode_step(a, StepVars(0), StepVars(1))
    assert step == "(and (>= p@0 1) (= p@1 (- p@0 1)) (= q@1 (+ q@0 1)))"
    b = net_b()
    assert encode_step(b, StepVars(0), StepVars(1)) == "(and (>= p@0 1) (= p@1 (+ p@0 1)))"
    none = PetriNet("n", ["p"], [], {}, {}, {"p": 1})
    assert encode_step(none, StepVars(0), StepVars(1)) == "false"
    with pytest.raises(EncodingError):
        encode_step(a, StepVars(2), StepVars(2))


def test_encode_bool_paper_example():
    f = Or((compare(lp("p") + lp("q"), ">=", lp("r")), compare(lp("p"), "<=", 5)))
    term = encode_bool(f, StepVars(3))
    assert term == "(or (>= (+ p@3 q@3) r@3) (<= p@3 5))"
    assert encode_bool(Not(compare(lp("p"), "=", 0)), StepVars(0)) == "(not (= p@0 0))"


def test_encode_state_equation_net_d():
    # b's incidence row is zero: post - pre = 0
    term = encode_state_equation(net_d())
    assert "(= a@0 (+ 1 (- @sigma@t1)))" in term
    assert "(= b@0 0)" in term


def test_state_equation_sat_agrees_with_reachability():
    net = net_a()
    with open_session() as s:
        declare_state_equation_vars(s, net)
        s.assert_formula(encode_state_equation(net))
        s.push()
        s.assert_formula("(= p@0 0)")
        s.assert_formula("(= q@0 1)")
        assert s.check().is_sat
        s.pop()
        s.push()
        s.assert_formula("(= p@0 1)")
        s.assert_formula("(= q@0 1)")
        assert s.check().is_unsat  # p + q = 1 forced by the equation
        s.pop()


def test_trap_constraint_forms():
    assert trap_constraint({"a", "b"}) == "(>= (+ a@0 b@0) 1)"
    assert trap_constraint({"p"}) == "(>= p@0 1)"
    with pytest.raises(EncodingError):
        trap_constraint(set())


def test_find_trap_net_d():
    net = net_d()
    candidate = Marking({"a": 0, "b": 0}, domain=net.places)
    with open_session() as s:
        trap = find_trap(s, net, candidate)
    assert trap == {"a", "b"}
    assert is_trap(net, trap)
    m0 = net.initial_marking
    assert sum(m0.tokens(p) for p in trap) >= 1
    assert sum(candidate.tokens(p) for p in trap) == 0


def test_find_trap_none_on_net_a_reachable():
    net = net_a()
    for candidate in (Marking({"p": 1, "q": 0}, domain=net.places),
                      Marking({"p": 0, "q": 1}, domain=net.places)):
        with open_session() as s:
            assert find_trap(s, net, candidate) is None
        assert not qualifying_trap_exists(net, candidate)


def test_find_trap_transitionless_net():
    net = PetriNet("iso", ["p", "q"], [], {}, {}, {"p": 2})
    candidate = Marking({"p": 0, "q": 5}, domain=net.places)
    with open_session() as s:
        trap = find_trap(s, net, candidate)
    # any initially marked, candidate-empty set qualifies; p is the only one
    assert trap == {"p"}


def test_find_trap_matches_saturation_oracle_random():
    rng = random.Random(5)
    for _ in range(40):
        nplaces = rng.randint(1, 4)
        places = [f"p{i}" for i in range(nplaces)]
        trans = [f"t{i}" for i in range(rng.randint(0, 4))]
        pre = {t: {p: rng.randint(0, 1) for p in places} for t in trans}
        post = {t: {p: rng.randint(0, 1) for p in places} for t in trans}
        net = PetriNet("r", places, trans, pre, post,
                       {p: rng.randint(0, 2) for p in places})
        candidate = Marking({p: rng.randint(0, 1) for p in places}, domain=places)
        with open_session() as s:
            trap = find_trap(s, net, candidate)
        assert (trap is not None) == qualifying_trap_exists(net, candidate)
        if trap is not None:
            assert is_trap(net, trap)
            assert sum(net.initial_marking.tokens(p) for p in trap) >= 1
            assert sum(candidate.tokens(p) for p in trap) == 0


def test_step_models_replay_random_nets():
    rng = random.Random(11)
    for _ in range(10):
        nplaces = rng.randint(1, 3)
        places = [f"p{i}" for i in range(nplaces)]
        trans = [f"t{i}" for i in range(rng.randint(1, 3))]
        pre = {t: {p: rng.randint(0, 2) for p in places} for t in trans}
        post = {t: {p: rng.randint(0, 2) for p in places} for t in trans}
        net = PetriNet("r", places, trans, pre, post,
                       {p: rng.randint(0, 2) for p in places})
        k = rng.randint(1, 4)
        with open_session() as s:
            for i in range(k + 1):
                declare_step_vars(s, net, StepVars(i))
                s.assert_formula(encode_nonneg(net, StepVars(i)))
            s.assert_formula(encode_initial(net, StepVars(0)))
            for i in range(k):
                s.assert_formula(encode_step(net, StepVars(i), StepVars(i + 1)))
            res = s.check()
            if not res.is_sat:
                continue
            markings = [marking_from_model(net, res.model, StepVars(i))
                        for i in range(k + 1)]
        assert markings[0] == net.initial_marking
        for before, after in zip(markings, markings[1:]):
            successors = set()
            for t in net.transitions:
                try:
                    successors.add(fire(net, before, t))
                except Exception:
                    pass
            assert after in successors


def test_state_equation_overapproximates_reachable():
    # every marking reachable within 6 steps satisfies the state equation
    from oracle import bfs_markings

    for net in (net_a(), net_c(), net_d()):
        markings = bfs_markings(net, cap=500)
        with open_session() as s:
            declare_state_equation_vars(s, net)
            s.assert_formula(encode_state_equation(net))
            for m in markings:
                s.push()
                for p in net.places:
                    s.assert_formula(f"(= {StepVars(0).var(p)} {m.tokens(p)})")
                assert s.check().is_sat, (net.name, m)
                s.pop()


def test_encode_bool_agrees_with_evaluate():
    rng = random.Random(17)
    places = ["p", "q"]
    from test_model import _random_expr

    for _ in range(25):
        f = _random_expr(rng, places, 2)
        m = Marking({p: rng.randint(0, 3) for p in places}, domain=places)
        with open_session() as s:
            for p in places:
                s.declare_int(StepVars(0).var(p))
                s.assert_formula(f"(= {StepVars(0).var(p)} {m.tokens(p)})")
            s.assert_formula(encode_bool(f, StepVars(0)))
            assert s.check().is_sat == evaluate(m, f)


def test_encode_reduction_forms():
    # a = p + q with reduced place a
    sys1 = ReductionSystem(
        frozenset({"p", "q"}), frozenset({"a"}),
        (compare(lp("a"), "=", lp("p") + lp("q")),),
    )
    term = encode_reduction(sys1, lambda p: f"{p}@o", lambda p: f"{p}@r")
    assert "(= a@r (+ p@o q@o))" in term
    assert "(>= p@o 0)" in term and "(>= q@o 0)" in term

    # constant place: p = 1
    sys2 = ReductionSystem(
        frozenset({"p"}), frozenset(),
        (compare(lp("p"), "=", 1),),
    )
    assert "(= p@o 1)" in encode_reduction(sys2, lambda p: f"{p}@o", lambda p: f"{p}@r")

    # identity over same place sets: p_1 = p_2 equalities
    sys3 = ReductionSystem.identity({"p"})
    term3 = encode_reduction(sys3, lambda p: f"{p}@o", lambda p: f"{p}@r")
    assert "(= p@o p@r)" in term3
