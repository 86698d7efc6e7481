"""From SMT-LIB terms to a Boolean skeleton, and the DPLL(T) search loop.

Terms are compiled into a tree over linear-arithmetic atoms; integer
equalities are split into a conjunction of two inequalities so the theory
solver only ever sees ``<=`` literals.  The skeleton goes through a Tseitin
transformation and a small chronological DPLL search; total or
clause-covering partial assignments are checked against the theory, and
theory conflicts come back as blocking clauses.
"""

from __future__ import annotations

from math import gcd
from typing import Optional

from .theory import TheoryBudgetExceeded, solve_conjunction

BOOL_SORT = "Bool"
INT_SORT = "Int"


class SolverUsageError(Exception):
    """Malformed input term or command misuse; reported as (error ...)."""


# Node kinds: ("const", bool) | ("bvar", name) | ("atom", atom_index)
#             | ("not", node) | ("and", nodes) | ("or", nodes)


class TermCompiler:
    """Compiles parsed s-expressions into skeleton nodes and atoms.

    An atom is a canonical pair ``(coeff_items, bound)`` meaning
    ``sum(c*x) <= bound``; equalities never become atoms.
    """

    def __init__(self, sorts: dict[str, str]):
        self.sorts = sorts
        self.atoms: list[tuple[tuple[tuple[str, int], ...], int]] = []
        self._atom_index: dict[tuple, int] = {}

    # -- linear layer

    def to_linear(self, term) -> tuple[dict[str, int], int]:
        """Returns (coeffs, const)."""
        if isinstance(term, str):
            if term.lstrip("-").isdigit():
                # bare negative numerals accepted leniently (like z3)
                return {}, int(term)
            sort = self.sorts.get(term)
            if sort is None:
                raise SolverUsageError(f"unknown constant '{term}'")
            if sort != INT_SORT:
                raise SolverUsageError(f"'{term}' is not an Int")
            return {term: 1}, 0
        if not term:
            raise SolverUsageError("empty term")
        head = term[0]
        args = term[1:]
        if head == "+":
            coeffs: dict[str, int] = {}
            const = 0
            for a in args:
                c2, k2 = self.to_linear(a)
                const += k2
                for v, c in c2.items():
                    coeffs[v] = coeffs.get(v, 0) + c
            return coeffs, const
        if head == "-":
            if not args:
                raise SolverUsageError("'-' needs arguments")
            first_c, first_k = self.to_linear(args[0])
            if len(args) == 1:
                return {v: -c for v, c in first_c.items()}, -first_k
            coeffs = dict(first_c)
            const = first_k
            for a in args[1:]:
                c2, k2 = self.to_linear(a)
                const -= k2
                for v, c in c2.items():
                    coeffs[v] = coeffs.get(v, 0) - c
            return coeffs, const
        if head == "*":
            coeffs, const = {}, 1
            lin: Optional[tuple[dict[str, int], int]] = None
            scalar = 1
            for a in args:
                c2, k2 = self.to_linear(a)
                if c2:
                    if lin is not None:
                        raise SolverUsageError("non-linear product")
                    lin = (c2, k2)
                else:
                    scalar *= k2
            if lin is None:
                return {}, scalar
            c2, k2 = lin
            return {v: scalar * c for v, c in c2.items()}, scalar * k2
        raise SolverUsageError(f"not an integer term: {head}")

    # -- boolean layer

    def _atom(self, coeffs: dict[str, int], bound: int):
        """Canonical <=-atom node ("atom", i), or a constant node."""
        coeffs = {v: c for v, c in coeffs.items() if c}
        if not coeffs:
            return ("const", 0 <= bound)
        g = 0
        for c in coeffs.values():
            g = gcd(g, c)
        if g > 1:
            coeffs = {v: c // g for v, c in coeffs.items()}
            bound //= g
        key = (tuple(sorted(coeffs.items())), bound)
        idx = self._atom_index.get(key)
        if idx is None:
            idx = len(self.atoms)
            self.atoms.append(key)
            self._atom_index[key] = idx
        return ("atom", idx)

    def _le(self, lhs, rhs, shift: int = 0):
        """lhs <= rhs + shift as an atom node."""
        lc, lk = self.to_linear(lhs)
        rc, rk = self.to_linear(rhs)
        coeffs = dict(lc)
        for v, c in rc.items():
            coeffs[v] = coeffs.get(v, 0) - c
        return self._atom(coeffs, rk + shift - lk)

    def to_bool(self, term):
        if isinstance(term, str):
            if term == "true":
                return ("const", True)
            if term == "false":
                return ("const", False)
            sort = self.sorts.get(term)
            if sort is None:
                raise SolverUsageError(f"unknown constant '{term}'")
            if sort != BOOL_SORT:
                raise SolverUsageError(f"'{term}' is not a Bool")
            return ("bvar", term)
        if not term:
            raise SolverUsageError("empty term")
        head = term[0]
        args = term[1:]
        if head == "not":
            if len(args) != 1:
                raise SolverUsageError("'not' takes one argument")
            return ("not", self.to_bool(args[0]))
        if head == "and":
            return ("and", tuple(self.to_bool(a) for a in args))
        if head == "or":
            return ("or", tuple(self.to_bool(a) for a in args))
        if head == "=>":
            if len(args) < 2:
                raise SolverUsageError("'=>' takes at least two arguments")
            result = self.to_bool(args[-1])
            for a in reversed(args[:-1]):
                result = ("or", (("not", self.to_bool(a)), result))
            return result
        if head == "xor":
            if len(args) != 2:
                raise SolverUsageError("'xor' takes two arguments")
            a, b = (self.to_bool(x) for x in args)
            return ("or", (("and", (a, ("not", b))), ("and", (("not", a), b))))
        if head == "ite":
            if len(args) != 3:
                raise SolverUsageError("'ite' takes three arguments")
            c = self.to_bool(args[0])
            a, b = self.to_bool(args[1]), self.to_bool(args[2])
            return ("and", (("or", (("not", c), a)), ("or", (c, b))))
        if head in ("<=", "<", ">=", ">", "="):
            if len(args) < 2:
                raise SolverUsageError(f"'{head}' takes at least two arguments")
            parts = []
            for x, y in zip(args, args[1:]):
                parts.append(self._compare(head, x, y))
            return parts[0] if len(parts) == 1 else ("and", tuple(parts))
        if head == "distinct":
            if len(args) != 2:
                raise SolverUsageError("'distinct' supports two arguments")
            return ("not", self._compare("=", args[0], args[1]))
        raise SolverUsageError(f"not a boolean term: {head}")

    def _compare(self, op: str, x, y):
        if op == "=" and self._is_bool_term(x):
            a, b = self.to_bool(x), self.to_bool(y)
            return (
                "or",
                (("and", (a, b)), ("and", (("not", a), ("not", b)))),
            )
        if op == "<=":
            return self._le(x, y)
        if op == "<":
            return self._le(x, y, shift=-1)
        if op == ">=":
            return self._le(y, x)
        if op == ">":
            return self._le(y, x, shift=-1)
        # integer equality: two inequalities
        return ("and", (self._le(x, y), self._le(y, x)))

    def _is_bool_term(self, term) -> bool:
        if isinstance(term, str):
            if term in ("true", "false"):
                return True
            return self.sorts.get(term) == BOOL_SORT
        if not term:
            return False
        return term[0] in ("not", "and", "or", "=>", "xor", "ite", "<=", "<",
                           ">=", ">", "=", "distinct") and term[0] not in ("+", "-", "*")


def evaluate_node(node, bool_model: dict[str, bool], int_model: dict[str, int],
                  atoms) -> bool:
    kind = node[0]
    if kind == "const":
        return node[1]
    if kind == "bvar":
        return bool_model.get(node[1], False)
    if kind == "atom":
        coeff_items, bound = atoms[node[1]]
        return sum(c * int_model.get(v, 0) for v, c in coeff_items) <= bound
    if kind == "not":
        return not evaluate_node(node[1], bool_model, int_model, atoms)
    if kind == "and":
        return all(evaluate_node(x, bool_model, int_model, atoms) for x in node[1])
    if kind == "or":
        return any(evaluate_node(x, bool_model, int_model, atoms) for x in node[1])
    raise AssertionError(f"bad node {node!r}")


class SkeletonSolver:
    """DPLL over the Tseitin CNF of the asserted nodes, with theory checks."""

    def __init__(self, asserted_nodes, atoms, bool_names=(),
                 max_conflicts: int = 400_000):
        self.atoms = atoms
        self.max_conflicts = max_conflicts
        self.num_atoms = len(atoms)
        self.bool_names: dict[str, int] = {}
        self.clauses: list[list[int]] = []
        self._aux_count = 0
        self._node_var: dict = {}
        for name in bool_names:
            self._bool_var(name)
        for node in asserted_nodes:
            lit = self._encode(node)
            self.clauses.append([lit])

    # variable numbering: 1..num_atoms are atoms; then bool vars; then aux
    def _new_var(self) -> int:
        self._aux_count += 1
        return self.num_atoms + len(self.bool_names) + self._aux_count

    def _bool_var(self, name: str) -> int:
        if name not in self.bool_names:
            if self._aux_count:
                # numbering requires all Bool constants registered up front
                raise AssertionError("bool vars must be registered before encoding")
            self.bool_names[name] = self.num_atoms + len(self.bool_names) + 1
        return self.bool_names[name]

    def _encode(self, node) -> int:
        key = node
        cached = self._node_var.get(key)
        if cached is not None:
            return cached
        kind = node[0]
        if kind == "const":
            v = self._new_var()
            self.clauses.append([v] if node[1] else [-v])
        elif kind == "bvar":
            v = self._bool_var(node[1])
        elif kind == "atom":
            v = node[1] + 1
        elif kind == "not":
            v = -self._encode(node[1])
        elif kind in ("and", "or"):
            lits = [self._encode(x) for x in node[1]]
            v = self._new_var()
            if kind == "and":
                for lit in lits:
                    self.clauses.append([-v, lit])
                self.clauses.append([v] + [-lit for lit in lits])
            else:
                for lit in lits:
                    self.clauses.append([-lit, v])
                self.clauses.append([-v] + lits)
        else:
            raise AssertionError(f"bad node {node!r}")
        self._node_var[key] = v
        return v

    @property
    def num_vars(self) -> int:
        return self.num_atoms + len(self.bool_names) + self._aux_count

    def solve(self, theory_budget: int = 2_000_000):
        """Returns ("sat", int_model, bool_model), ("unsat", None, None) or
        ("unknown", None, None)."""
        nv = self.num_vars
        assign: list[int] = [0] * (nv + 1)  # 0 unknown, 1 true, -1 false
        trail: list[tuple[int, bool]] = []  # (var, is_decision)
        conflicts = 0

        def value(lit: int) -> int:
            v = assign[abs(lit)]
            return v if lit > 0 else -v

        def set_lit(lit: int, decision: bool) -> None:
            assign[abs(lit)] = 1 if lit > 0 else -1
            trail.append((abs(lit), decision))

        def propagate() -> bool:
            """Unit propagation to fixpoint; False on conflict."""
            changed = True
            while changed:
                changed = False
                for clause in self.clauses:
                    unassigned = None
                    n_unassigned = 0
                    satisfied = False
                    for lit in clause:
                        val = value(lit)
                        if val > 0:
                            satisfied = True
                            break
                        if val == 0:
                            n_unassigned += 1
                            unassigned = lit
                            if n_unassigned > 1:
                                break
                    if satisfied:
                        continue
                    if n_unassigned == 0:
                        return False
                    if n_unassigned == 1:
                        set_lit(unassigned, decision=False)
                        changed = True
            return True

        def all_clauses_satisfied() -> bool:
            return all(any(value(lit) > 0 for lit in c) for c in self.clauses)

        def backtrack() -> bool:
            """Undo to the last unflipped decision; flip it. False if none."""
            while trail:
                var, was_decision = trail.pop()
                old = assign[var]
                assign[var] = 0
                if was_decision:
                    # flipped value is forced now, not a decision
                    set_lit(-var if old > 0 else var, decision=False)
                    return True
            return False

        def theory_check():
            """None if consistent (records model), else a blocking clause."""
            literals = []
            for i in range(self.num_atoms):
                val = assign[i + 1]
                if val:
                    literals.append((i, val > 0))
            constraints = []
            for idx, pol in literals:
                coeff_items, bound = self.atoms[idx]
                if pol:
                    constraints.append((dict(coeff_items), bound, False))
                else:
                    constraints.append(
                        ({v: -c for v, c in coeff_items}, -bound - 1, False)
                    )
            model = solve_conjunction(constraints, budget_units=theory_budget)
            if model is not None:
                self._int_model = model
                return None
            # deletion-based minimization of the conflict
            core = list(range(len(literals)))
            if len(core) <= 60:
                i = 0
                while i < len(core):
                    trial = [constraints[j] for k, j in enumerate(core) if k != i]
                    try:
                        if solve_conjunction(trial, budget_units=theory_budget) is None:
                            core.pop(i)
                            continue
                    except TheoryBudgetExceeded:
                        pass
                    i += 1
            clause = []
            for j in core:
                idx, pol = literals[j]
                clause.append(-(idx + 1) if pol else (idx + 1))
            if not clause:
                return "unsat"
            return clause

        self._int_model = {}
        while True:
            if not propagate():
                conflicts += 1
                if conflicts > self.max_conflicts:
                    return ("unknown", None, None)
                if not backtrack():
                    return ("unsat", None, None)
                continue
            if all_clauses_satisfied():
                result = theory_check()
                if result is None:
                    bool_model = {
                        name: assign[var] > 0 for name, var in self.bool_names.items()
                    }
                    return ("sat", self._int_model, bool_model)
                if result == "unsat":
                    return ("unsat", None, None)
                self.clauses.append(result)
                conflicts += 1
                if conflicts > self.max_conflicts:
                    return ("unknown", None, None)
                # the new clause is falsified by the current assignment
                if not backtrack():
                    return ("unsat", None, None)
                continue
            # decide: first unassigned variable, atoms first
            decided = False
            for v in range(1, nv + 1):
                if assign[v] == 0:
                    set_lit(v, decision=True)
                    decided = True
                    break
            if not decided:
                # fully assigned but some clause unsatisfied: conflict
                if not backtrack():
                    return ("unsat", None, None)
