"""QF-LIA encodings of nets, formulas, the state equation, traps, and
reduction systems.

Marking variables follow the fixed ``place@k`` naming scheme (step index
``k``), which exported certificates also use.  Auxiliary variables start
with ``@`` (``@sigma@t`` for firing counts, ``@trap@p`` for trap
selectors); identifiers starting with ``@`` are rejected by the parsers, so
these can never collide with place variables.

Everything here is pure term construction except :func:`find_trap`, which
runs one query on its caller's session.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .model import (
    And,
    Atom,
    BoolConst,
    BoolExpr,
    LinearExpr,
    Marking,
    Not,
    Or,
    PetriNet,
)
from .liasolver.sexpr import quote_symbol
from .smt import SolverSession

NameFn = Callable[[str], str]


class EncodingError(Exception):
    pass


@dataclass(frozen=True)
class StepVars:
    """Variables of one unrolling step: one integer per place, ``place@k``."""

    index: int

    def var(self, place: str) -> str:
        return f"{place}@{self.index}"


def sigma_var(transition: str) -> str:
    return f"@sigma@{transition}"


def _sym(name: str) -> str:
    return quote_symbol(name)


def _int(value: int) -> str:
    return str(value) if value >= 0 else f"(- {-value})"


def _conj(parts: Iterable[str]) -> str:
    parts = [p for p in parts if p != "true"]
    if any(p == "false" for p in parts):
        return "false"
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return "(and " + " ".join(parts) + ")"


def _disj(parts: Iterable[str]) -> str:
    parts = [p for p in parts if p != "false"]
    if any(p == "true" for p in parts):
        return "true"
    if not parts:
        return "false"
    if len(parts) == 1:
        return parts[0]
    return "(or " + " ".join(parts) + ")"


def linear_term(expr: LinearExpr, var_of: NameFn) -> str:
    parts: list[str] = []
    for coeff, place in expr.terms:
        name = _sym(var_of(place))
        if coeff == 1:
            parts.append(name)
        elif coeff == -1:
            parts.append(f"(- {name})")
        else:
            parts.append(f"(* {_int(coeff)} {name})")
    if expr.constant or not parts:
        parts.append(_int(expr.constant))
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def bool_term(expr: BoolExpr, var_of: NameFn) -> str:
    """Structure-preserving translation of a formula to an SMT-LIB term."""
    if isinstance(expr, BoolConst):
        return "true" if expr.value else "false"
    if isinstance(expr, Atom):
        return f"({expr.op} {linear_term(expr.lhs, var_of)} {linear_term(expr.rhs, var_of)})"
    if isinstance(expr, Not):
        return f"(not {bool_term(expr.operand, var_of)})"
    if isinstance(expr, And):
        return _conj([bool_term(op, var_of) for op in expr.operands])
    if isinstance(expr, Or):
        return _disj([bool_term(op, var_of) for op in expr.operands])
    raise EncodingError(f"not a boolean expression: {expr!r}")


def encode_bool(expr: BoolExpr, vars: StepVars) -> str:
    return bool_term(expr, vars.var)


def encode_nonneg(net: PetriNet, vars: StepVars) -> str:
    return _conj([f"(>= {_sym(vars.var(p))} 0)" for p in net.places])


def encode_initial(net: PetriNet, vars: StepVars) -> str:
    m0 = net.initial_marking
    return _conj(
        [f"(= {_sym(vars.var(p))} {_int(m0.tokens(p))})" for p in net.places]
    )


def encode_step(net: PetriNet, now: StepVars, nxt: StepVars) -> str:
    """One-step transition relation: some transition fires (no stuttering).

    Every place gets an explicit update equality, including places the
    transition does not touch.  A net without transitions yields ``false``.
    """
    if now.index == nxt.index:
        raise EncodingError("step encoding needs distinct step indices")
    disjuncts = []
    for t in net.transitions:
        enabled = [
            f"(>= {_sym(now.var(p))} {_int(w)})" for p, w in sorted(net.pre(t).items())
        ]
        updates = []
        for p in net.places:
            delta = net.incidence(p, t)
            cur = _sym(now.var(p))
            if delta == 0:
                updates.append(f"(= {_sym(nxt.var(p))} {cur})")
            elif delta > 0:
                updates.append(f"(= {_sym(nxt.var(p))} (+ {cur} {delta}))")
            else:
                updates.append(f"(= {_sym(nxt.var(p))} (- {cur} {-delta}))")
        disjuncts.append(_conj(enabled + updates))
    return _disj(disjuncts)


def declare_step_vars(session: SolverSession, net: PetriNet, vars: StepVars) -> None:
    for p in net.places:
        session.declare_int(vars.var(p))


def encode_state_equation(net: PetriNet, vars: Optional[StepVars] = None) -> str:
    """Marking reachability over-approximation: m = m0 + C * sigma.

    Includes non-negativity of every firing count and marking variable.
    """
    vars = vars or StepVars(0)
    m0 = net.initial_marking
    parts: list[str] = []
    for t in net.transitions:
        parts.append(f"(>= {_sym(sigma_var(t))} 0)")
    for p in net.places:
        terms = [_int(m0.tokens(p))]
        for t in net.transitions:
            c = net.incidence(p, t)
            if c == 0:
                continue
            sig = _sym(sigma_var(t))
            if c == 1:
                terms.append(sig)
            elif c == -1:
                terms.append(f"(- {sig})")
            else:
                terms.append(f"(* {_int(c)} {sig})")
        rhs = terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"
        parts.append(f"(= {_sym(vars.var(p))} {rhs})")
        parts.append(f"(>= {_sym(vars.var(p))} 0)")
    return _conj(parts)


def declare_state_equation_vars(session: SolverSession, net: PetriNet,
                                vars: Optional[StepVars] = None) -> None:
    vars = vars or StepVars(0)
    declare_step_vars(session, net, vars)
    for t in net.transitions:
        session.declare_int(sigma_var(t))


def trap_constraint(trap: Iterable[str]) -> str:
    """At least one token among the trap's places (step-0 variables)."""
    places = sorted(trap)
    if not places:
        raise EncodingError("trap constraint needs a non-empty place set")
    vars = StepVars(0)
    if len(places) == 1:
        return f"(>= {_sym(vars.var(places[0]))} 1)"
    total = "(+ " + " ".join(_sym(vars.var(p)) for p in places) + ")"
    return f"(>= {total} 1)"


def _selector_sum(places: Iterable[str], weight_of=None) -> str:
    parts = []
    for p in places:
        s = _sym(f"@trap@{p}")
        w = 1 if weight_of is None else weight_of(p)
        if w == 1:
            parts.append(s)
        elif w:
            parts.append(f"(* {_int(w)} {s})")
    if not parts:
        return "0"
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def find_trap(session: SolverSession, net: PetriNet, candidate: Marking) -> Optional[frozenset[str]]:
    """Search for an initially marked trap that is empty in ``candidate``.

    One query with a 0/1 selector per place: S must satisfy the trap
    condition (every transition consuming from S produces into S), carry at
    least one initial token, and carry none in the candidate marking.
    Returns None when no such trap exists (or the solver gave up).
    """
    m0 = net.initial_marking
    session.push()
    try:
        for p in net.places:
            session.declare_int(f"@trap@{p}")
            session.assert_formula(f"(>= {_sym(f'@trap@{p}')} 0)")
            session.assert_formula(f"(<= {_sym(f'@trap@{p}')} 1)")
        for t in net.transitions:
            consuming = sorted(net.pre(t))
            producing = sorted(net.post(t))
            if not consuming:
                continue
            antecedent = f"(>= {_selector_sum(consuming)} 1)"
            if producing:
                consequent = f"(>= {_selector_sum(producing)} 1)"
            else:
                consequent = "false"
            session.assert_formula(f"(=> {antecedent} {consequent})")
        marked = [p for p in net.places if m0.tokens(p) > 0]
        session.assert_formula(
            f"(>= {_selector_sum(marked, m0.tokens)} 1)"
        )
        nonempty = [p for p in net.places if candidate.tokens(p) > 0]
        session.assert_formula(f"(= {_selector_sum(nonempty, candidate.tokens)} 0)")
        result = session.check()
        if not result.is_sat:
            return None
        trap = frozenset(
            p for p in net.places if result.model.get(f"@trap@{p}", 0) == 1
        )
        return trap or None
    finally:
        if session.alive:
            session.pop()


def encode_reduction(
    system,
    original_var: NameFn,
    reduced_var: NameFn,
) -> str:
    """Conjunction of the reduction equations plus original non-negativity.

    Variables of reduced (and auxiliary) places render through
    ``reduced_var``; original-only places through ``original_var``.  Places
    surviving in both nets also get an identity equation tying the two
    namespaces together.
    """
    reduced_side = set(system.reduced_places) | set(system.aux_places)

    def var_of(place: str) -> str:
        if place in reduced_side:
            return reduced_var(place)
        if place in system.original_places:
            return original_var(place)
        raise EncodingError(f"equation variable '{place}' is not declared")

    parts = [bool_term(eq, var_of) for eq in system.equations]
    for place in sorted(system.original_places & set(system.reduced_places)):
        parts.append(f"(= {_sym(original_var(place))} {_sym(reduced_var(place))})")
    for place in sorted(system.original_places):
        parts.append(f"(>= {_sym(original_var(place))} 0)")
    return _conj(parts)


def marking_from_model(net: PetriNet, model: dict[str, int], vars: StepVars) -> Marking:
    return Marking(
        {p: model.get(vars.var(p), 0) for p in net.places}, domain=net.places
    )
