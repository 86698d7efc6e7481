"""Exact decision procedure for conjunctions of linear integer constraints.

A constraint is ``(coeffs, bound, is_eq)`` and denotes
``sum(c * x for x, c in coeffs.items()) <= bound`` (or ``== bound``).
Satisfiability over unbounded integers is decided with the Omega test:
interval propagation, integer equality elimination (with the symmetric-mod
reduction when no unit coefficient exists), then variable elimination by
dark-shadow projection with splinter enumeration when the projection is
inexact.  A satisfying assignment is reconstructed on the way back up.

Everything here is exact integer arithmetic; on pathological inputs the
work budget runs out and :class:`TheoryBudgetExceeded` is raised, which the
caller reports as ``unknown``.
"""

from __future__ import annotations

from math import gcd
from typing import Iterable, Optional

Constraint = tuple[dict[str, int], int, bool]

_AUX = "!aux"


class TheoryBudgetExceeded(Exception):
    pass


class _Budget:
    __slots__ = ("left",)

    def __init__(self, units: int):
        self.left = units

    def spend(self, n: int = 1) -> None:
        self.left -= n
        if self.left <= 0:
            raise TheoryBudgetExceeded()


def _ceil_div(a: int, b: int) -> int:
    # b > 0
    return -((-a) // b)


def _normalize(c: Constraint) -> Optional[Constraint] | str:
    """Drop zero coefficients and divide by the gcd.

    Returns the normalized constraint, None when trivially true, or the
    string "unsat" when trivially false.
    """
    coeffs, bound, is_eq = c
    coeffs = {v: a for v, a in coeffs.items() if a}
    if not coeffs:
        ok = (bound == 0) if is_eq else (bound >= 0)
        return None if ok else "unsat"
    g = 0
    for a in coeffs.values():
        g = gcd(g, a)
    if g > 1:
        if is_eq:
            if bound % g:
                return "unsat"
            bound //= g
        else:
            bound = bound // g  # floor keeps integer solutions exactly
        coeffs = {v: a // g for v, a in coeffs.items()}
    return (coeffs, bound, is_eq)


def _substitute(c: Constraint, var: str, expr_coeffs: dict[str, int], expr_const: int) -> Constraint:
    coeffs, bound, is_eq = c
    a = coeffs.get(var)
    if not a:
        return c
    nc = dict(coeffs)
    del nc[var]
    for v, cv in expr_coeffs.items():
        nc[v] = nc.get(v, 0) + a * cv
    return (nc, bound - a * expr_const, is_eq)


def _mod_hat(a: int, m: int) -> int:
    """Symmetric residue of a modulo m, in (-m/2, m/2]."""
    r = a % m
    return r if 2 * r <= m else r - m


def _simplify(cons: Iterable[Constraint]) -> Optional[list[Constraint]]:
    """Normalize and deduplicate; None means UNSAT."""
    seen = set()
    out: list[Constraint] = []
    for c in cons:
        norm = _normalize(c)
        if norm is None:
            continue
        if norm == "unsat":
            return None
        coeffs, bound, is_eq = norm
        key = (tuple(sorted(coeffs.items())), bound, is_eq)
        if key in seen:
            continue
        seen.add(key)
        out.append(norm)
    return out


def _propagate_bounds(
    cons: list[Constraint], budget: _Budget
) -> Optional[dict[str, int]]:
    """Interval propagation; returns fixed variables, or None on infeasibility.

    Best effort only: a bounded number of tightening rounds, purely as an
    accelerator.  Completeness comes from the elimination stages.
    """
    lo: dict[str, int] = {}
    hi: dict[str, int] = {}
    rows: list[tuple[dict[str, int], int]] = []
    for coeffs, bound, is_eq in cons:
        rows.append((coeffs, bound))
        if is_eq:
            rows.append(({v: -a for v, a in coeffs.items()}, -bound))

    for _ in range(40):
        budget.spend(len(rows))
        changed = False
        for coeffs, bound in rows:
            # minimal achievable value of the row excluding each var in turn
            mins: dict[str, Optional[int]] = {}
            total_min: Optional[int] = 0
            for v, a in coeffs.items():
                if a > 0:
                    term_min = None if v not in lo else a * lo[v]
                else:
                    term_min = None if v not in hi else a * hi[v]
                mins[v] = term_min
                if total_min is not None:
                    total_min = None if term_min is None else total_min + term_min
            unknown = [v for v, m in mins.items() if m is None]
            for v, a in coeffs.items():
                if len(unknown) > 1 or (len(unknown) == 1 and unknown[0] != v):
                    continue
                rest = 0
                for w, m in mins.items():
                    if w != v and m is not None:
                        rest += m
                room = bound - rest
                if a > 0:
                    new_hi = room // a
                    if v not in hi or new_hi < hi[v]:
                        hi[v] = new_hi
                        changed = True
                else:
                    # a < 0: a*v <= room  =>  v >= ceil(room / a)
                    new_lo = _ceil_div(-room, -a)
                    if v not in lo or new_lo > lo[v]:
                        lo[v] = new_lo
                        changed = True
                if v in lo and v in hi and lo[v] > hi[v]:
                    return None
        if not changed:
            break
    return {v: lo[v] for v in lo if v in hi and lo[v] == hi[v]}


def _pick_equality(cons: list[Constraint]) -> Optional[int]:
    best = None
    best_min = None
    for i, (coeffs, _, is_eq) in enumerate(cons):
        if not is_eq:
            continue
        m = min(abs(a) for a in coeffs.values())
        if m == 1:
            return i
        if best_min is None or m < best_min:
            best, best_min = i, m
    return best


def _solve(cons: list[Constraint], budget: _Budget, depth: int = 0) -> Optional[dict[str, int]]:
    budget.spend(1 + len(cons))
    if depth > 600:
        raise TheoryBudgetExceeded()
    simplified = _simplify(cons)
    if simplified is None:
        return None
    cons = simplified
    if not cons:
        return {}

    fixed = _propagate_bounds(cons, budget)
    if fixed is None:
        return None
    if fixed:
        reduced = [c for c in (_substitute_many(c, fixed) for c in cons)]
        model = _solve(reduced, budget, depth + 1)
        if model is None:
            return None
        model.update(fixed)
        return model

    eq_i = _pick_equality(cons)
    if eq_i is not None:
        return _eliminate_equality(cons, eq_i, budget, depth)
    return _omega_step(cons, budget, depth)


def _substitute_many(c: Constraint, values: dict[str, int]) -> Constraint:
    coeffs, bound, is_eq = c
    if not any(v in coeffs for v in values):
        return c
    nc = dict(coeffs)
    nb = bound
    for v, val in values.items():
        a = nc.pop(v, 0)
        nb -= a * val
    return (nc, nb, is_eq)


def _eliminate_equality(
    cons: list[Constraint], eq_i: int, budget: _Budget, depth: int
) -> Optional[dict[str, int]]:
    coeffs, bound, _ = cons[eq_i]
    unit_var = None
    for v, a in coeffs.items():
        if abs(a) == 1:
            unit_var = v
            break
    if unit_var is not None:
        s = coeffs[unit_var]  # +1 or -1
        expr_const = s * bound
        expr_coeffs = {v: -s * a for v, a in coeffs.items() if v != unit_var}
        rest = [
            _substitute(c, unit_var, expr_coeffs, expr_const)
            for j, c in enumerate(cons)
            if j != eq_i
        ]
        model = _solve(rest, budget, depth + 1)
        if model is None:
            return None
        val = expr_const + sum(cv * model.get(v, 0) for v, cv in expr_coeffs.items())
        for v in expr_coeffs:
            model.setdefault(v, 0)
        model[unit_var] = val
        return model

    # no unit coefficient: symmetric-mod reduction introduces a fresh
    # variable whose defining equation does have one
    m = min(abs(a) for a in coeffs.values()) + 1
    aux = f"{_AUX}{depth}!{len(cons)}"
    new_coeffs = {v: _mod_hat(a, m) for v, a in coeffs.items()}
    new_coeffs = {v: a for v, a in new_coeffs.items() if a}
    new_coeffs[aux] = -m
    new_eq: Constraint = (new_coeffs, _mod_hat(bound, m), True)
    return _solve(cons + [new_eq], budget, depth + 1)


def _omega_step(cons: list[Constraint], budget: _Budget, depth: int) -> Optional[dict[str, int]]:
    occurrence: dict[str, tuple[int, int]] = {}
    for coeffs, _, _ in cons:
        for v, a in coeffs.items():
            lowers, uppers = occurrence.get(v, (0, 0))
            if a < 0:
                lowers += 1
            else:
                uppers += 1
            occurrence[v] = (lowers, uppers)

    def score(v: str) -> tuple[int, int]:
        lowers, uppers = occurrence[v]
        if lowers == 0 or uppers == 0:
            return (0, 0)
        exact = _is_exact_candidate(cons, v)
        return (1 if not exact else 0, lowers * uppers)

    var = min(occurrence, key=lambda v: (score(v), v))

    rest: list[Constraint] = []
    lowers: list[tuple[int, dict[str, int], int]] = []  # b*x >= coeffs·y + const
    uppers: list[tuple[int, dict[str, int], int]] = []  # c*x <= coeffs·y + const
    for coeffs, bound, is_eq in cons:
        assert not is_eq
        a = coeffs.get(var, 0)
        if a == 0:
            rest.append((coeffs, bound, is_eq))
            continue
        others = {v: cv for v, cv in coeffs.items() if v != var}
        if a > 0:
            # a*x <= bound - others·y
            uppers.append((a, {v: -cv for v, cv in others.items()}, bound))
        else:
            # (-a)*x >= others·y - bound
            lowers.append((-a, others, -bound))

    if not lowers or not uppers:
        model = _solve(rest, budget, depth + 1)
        if model is None:
            return None
        model[var] = _pick_one_sided(lowers, uppers, model)
        return model

    budget.spend(len(lowers) * len(uppers))

    def pair_constraint(lower, upper, slack: int) -> Constraint:
        b, bcf, bct = lower
        c, gcf, gct = upper
        # c*beta <= b*gamma - slack
        coeffs: dict[str, int] = {}
        for v, cv in bcf.items():
            coeffs[v] = coeffs.get(v, 0) + c * cv
        for v, cv in gcf.items():
            coeffs[v] = coeffs.get(v, 0) - b * cv
        return (coeffs, b * gct - c * bct - slack, False)

    exact = all(b == 1 or c == 1 for b, _, _ in lowers for c, _, _ in uppers)
    if exact:
        projected = rest + [
            pair_constraint(lo, up, 0) for lo in lowers for up in uppers
        ]
        model = _solve(projected, budget, depth + 1)
        if model is None:
            return None
        model[var] = _pick_between(lowers, uppers, model)
        return model

    dark = rest + [
        pair_constraint(lo, up, (lo[0] - 1) * (up[0] - 1))
        for lo in lowers
        for up in uppers
    ]
    model = _solve(dark, budget, depth + 1)
    if model is not None:
        model[var] = _pick_between(lowers, uppers, model)
        return model

    real = rest + [pair_constraint(lo, up, 0) for lo in lowers for up in uppers]
    if _solve(real, budget, depth + 1) is None:
        return None

    # inexact projection: enumerate splinters close to some lower bound
    c_max = max(c for c, _, _ in uppers)
    for b, bcf, bct in lowers:
        i_max = (b * c_max - b - c_max) // c_max
        for i in range(i_max + 1):
            budget.spend(10)
            eq_coeffs = dict(bcf)
            eq_coeffs[var] = eq_coeffs.get(var, 0) - b
            # b*x = beta + i   <=>   beta_coeffs·y - b*x = -(bct + i)
            splinter: Constraint = (eq_coeffs, -(bct + i), True)
            model = _solve(cons + [splinter], budget, depth + 1)
            if model is not None:
                return model
    return None


def _is_exact_candidate(cons: list[Constraint], var: str) -> bool:
    has_nonunit_lower = False
    has_nonunit_upper = False
    for coeffs, _, _ in cons:
        a = coeffs.get(var, 0)
        if a < -1:
            has_nonunit_lower = True
        elif a > 1:
            has_nonunit_upper = True
    return not (has_nonunit_lower and has_nonunit_upper)


def _eval_affine(coeffs: dict[str, int], const: int, model: dict[str, int]) -> int:
    return const + sum(cv * model.get(v, 0) for v, cv in coeffs.items())


def _pick_one_sided(lowers, uppers, model) -> int:
    if lowers:
        return max(_ceil_div(_eval_affine(cf, ct, model), b) for b, cf, ct in lowers)
    if uppers:
        return min(_eval_affine(cf, ct, model) // c for c, cf, ct in uppers)
    return 0


def _pick_between(lowers, uppers, model) -> int:
    lo = max(_ceil_div(_eval_affine(cf, ct, model), b) for b, cf, ct in lowers)
    hi = min(_eval_affine(cf, ct, model) // c for c, cf, ct in uppers)
    if lo > hi:  # must not happen: projection guaranteed an integer point
        raise AssertionError("omega reconstruction found empty interval")
    return lo


def solve_conjunction(
    constraints: Iterable[Constraint], budget_units: int = 2_000_000
) -> Optional[dict[str, int]]:
    """Decide a conjunction; returns a model (complete over the constraint
    variables, defaulting to 0 for unconstrained ones) or None when UNSAT.

    Raises :class:`TheoryBudgetExceeded` when the work budget runs out.
    """
    cons = [(dict(c[0]), c[1], c[2]) for c in constraints]
    variables = set()
    for coeffs, _, _ in cons:
        variables.update(coeffs)
    budget = _Budget(budget_units)
    model = _solve(cons, budget, 0)
    if model is None:
        return None
    out = {v: model.get(v, 0) for v in variables}
    for coeffs, bound, is_eq in cons:
        value = sum(a * out[v] for v, a in coeffs.items())
        if (value != bound) if is_eq else (value > bound):
            raise AssertionError("omega model fails a constraint")
    return out
