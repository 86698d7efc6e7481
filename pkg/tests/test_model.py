import random

import pytest

from pnreach.model import (
    And,
    Atom,
    EvaluationError,
    FiringError,
    LinearExpr,
    Marking,
    ModelError,
    Not,
    Or,
    PetriNet,
    Query,
    Trace,
    TRUE,
    compare,
    conj,
    deadlock_expr,
    disj,
    enabled_transitions,
    evaluate,
    fire,
    fireable_expr,
    normalize,
    push_negations,
)
from nets import net_a, net_b, net_c, net_d


def lp(name):
    return LinearExpr.of_place(name)


def test_evaluate_paper_example():
    # (p + q >= r) or (p <= 5) at m = {p:1, q:0, r:3}
    m = Marking({"p": 1, "q": 0, "r": 3})
    f = Or((compare(lp("p") + lp("q"), ">=", lp("r")), compare(lp("p"), "<=", 5)))
    assert evaluate(m, f) is True


def test_evaluate_constants_and_negation():
    assert evaluate(Marking({"p": 0}), TRUE) is True
    m = Marking({"p": 2, "q": 2})
    assert evaluate(m, Not(compare(lp("p"), "=", lp("q")))) is False


def test_evaluate_unbound_place_names_place():
    m = Marking({"p": 1})
    with pytest.raises(EvaluationError, match="'r'"):
        evaluate(m, compare(lp("r"), ">=", 1))


def test_fire_single_token_move():
    net = net_a()
    m1 = fire(net, net.initial_marking, "t")
    assert m1 == Marking({"q": 1})
    assert m1.tokens("p") == 0


def test_fire_weight_arithmetic():
    net = net_b()
    assert fire(net, net.initial_marking, "t") == Marking({"p": 2})


def test_fire_not_enabled():
    net = net_a()
    m = Marking({"q": 1}, domain=net.places)
    with pytest.raises(FiringError, match="not enabled"):
        fire(net, m, "t")
    with pytest.raises(FiringError, match="unknown"):
        fire(net, net.initial_marking, "nope")


def test_enabled_transitions():
    net = net_a()
    assert enabled_transitions(net, net.initial_marking) == {"t"}
    dead = Marking({"q": 1}, domain=net.places)
    assert enabled_transitions(net, dead) == frozenset()
    netb = net_b()
    assert enabled_transitions(netb, Marking({"p": 5}, domain=netb.places)) == {"t"}


def test_normalize_ag_duality():
    q = Query("x", "AG", compare(lp("p"), ">=", 1))
    n = normalize(q)
    assert n.answer_if_reachable is False
    assert n.goal == compare(lp("p"), "<=", 0)


def test_normalize_ef_identity():
    q = Query("x", "EF", compare(lp("q"), ">=", 1))
    n = normalize(q)
    assert n.answer_if_reachable is True
    assert n.goal == compare(lp("q"), ">=", 1)


def test_normalize_double_negation():
    body = Not(And((compare(lp("p"), "=", 0), compare(lp("q"), "=", 0))))
    n = normalize(Query("x", "AG", body))
    assert n.goal == And((compare(lp("p"), "=", 0), compare(lp("q"), "=", 0)))


def test_strict_comparisons_rewritten():
    a = compare(lp("p"), "<", 5)
    assert a.op == "<=" and a.rhs.constant == 4
    b = compare(lp("p"), ">", 5)
    assert b.op == ">=" and b.rhs.constant == 6


def test_net_validation():
    with pytest.raises(ModelError):
        PetriNet("bad", ["p", "p"], [], {}, {}, {})
    with pytest.raises(ModelError):
        PetriNet("bad", ["x"], ["x"], {}, {}, {})
    with pytest.raises(ModelError):
        PetriNet("bad", ["p"], ["t"], {"t": {"p": -1}}, {}, {})
    with pytest.raises(ModelError):
        PetriNet("bad", ["p"], ["t"], {}, {}, {"q": 1})


def test_firing_preserves_nonnegativity_random():
    rng = random.Random(7)
    for _ in range(50):
        nplaces = rng.randint(1, 4)
        places = [f"p{i}" for i in range(nplaces)]
        ntrans = rng.randint(1, 4)
        pre = {}
        post = {}
        trans = [f"t{i}" for i in range(ntrans)]
        for t in trans:
            pre[t] = {p: rng.randint(0, 2) for p in places}
            post[t] = {p: rng.randint(0, 2) for p in places}
        net = PetriNet(
            "rand", places, trans, pre, post,
            {p: rng.randint(0, 3) for p in places},
        )
        m = net.initial_marking
        for _ in range(20):
            en = sorted(enabled_transitions(net, m))
            if not en:
                break
            m = fire(net, m, rng.choice(en))
            assert all(m.tokens(p) >= 0 for p in net.places)


def _random_expr(rng, places, depth):
    if depth == 0 or rng.random() < 0.4:
        lhs = LinearExpr.build(
            rng.randint(-2, 2),
            [(rng.randint(-2, 2), rng.choice(places)) for _ in range(rng.randint(1, 2))],
        )
        rhs = LinearExpr.of_const(rng.randint(-2, 4))
        return compare(lhs, rng.choice(["=", "<=", ">=", "<", ">"]), rhs)
    kind = rng.choice(["not", "and", "or"])
    if kind == "not":
        return Not(_random_expr(rng, places, depth - 1))
    parts = tuple(_random_expr(rng, places, depth - 1) for _ in range(2))
    return And(parts) if kind == "and" else Or(parts)


def test_evaluate_negation_property():
    rng = random.Random(23)
    places = ["p", "q", "r"]
    for _ in range(200):
        f = _random_expr(rng, places, 3)
        m = Marking({p: rng.randint(0, 4) for p in places})
        assert evaluate(m, Not(f)) == (not evaluate(m, f))
        # push_negations preserves semantics and leaves no Not nodes
        g = push_negations(f)
        assert evaluate(m, g) == evaluate(m, f)


def test_normalize_roundtrip_property():
    rng = random.Random(31)
    places = ["p", "q"]
    for _ in range(200):
        f = _random_expr(rng, places, 2)
        m = Marking({p: rng.randint(0, 3) for p in places})
        goal = normalize(Query("x", "AG", f)).goal
        assert evaluate(m, goal) == (not evaluate(m, f))


def test_trace_replay_and_validate():
    net = net_c()
    tr = Trace.replay(net, ["t1", "t2", "t1"])
    assert tr.final_marking == Marking({"b": 1})
    tr.validate(net)
    with pytest.raises(FiringError):
        Trace.replay(net, ["t2"])


def test_fireable_and_deadlock_exprs():
    net = net_a()
    f = fireable_expr(net, "t")
    assert evaluate(net.initial_marking, f) is True
    assert evaluate(Marking({"q": 1}, domain=net.places), f) is False
    d = deadlock_expr(net)
    assert evaluate(net.initial_marking, d) is False
    assert evaluate(Marking({"q": 1}, domain=net.places), d) is True
    # net-d is deadlocked initially: t1 never enabled
    netd = net_d()
    assert evaluate(netd.initial_marking, deadlock_expr(netd)) is True


def test_conj_disj_folding():
    assert conj([]) == TRUE
    assert disj([]).value is False
    a = compare(lp("p"), ">=", 1)
    assert conj([TRUE, a]) == a
    assert disj([a, TRUE]) == TRUE
