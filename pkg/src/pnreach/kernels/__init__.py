"""Explicit-state kernels: random walk and breadth-first enumeration.

Two interchangeable backends implement the same interface: ``_speed``, a
Cython extension compiled at install time, and ``_pure``, plain Python.
The compiled backend is picked automatically when the extension built;
``PNREACH_PURE=1`` forces the pure one.  Both are deterministic and
bit-identical in behavior (same RNG, same BFS order), which the test suite
checks; ``benchmarks/bench_kernels.py`` compares their speed.

The input to a backend is produced by :func:`compile_net` and
:func:`compile_goal`: plain index-based tables, independent of the backend.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from ..model import And, Atom, BoolConst, BoolExpr, Not, Or, PetriNet

OP_ATOM = 0
OP_TRUE = 1
OP_FALSE = 2
OP_NOT = 3
OP_AND = 4
OP_OR = 5

CMP_EQ = 0
CMP_LE = 1
CMP_GE = 2


@dataclass(frozen=True)
class NetCode:
    """Index-based net tables: place i, transition j."""

    places: tuple[str, ...]
    transitions: tuple[str, ...]
    m0: tuple[int, ...]
    pre: tuple[tuple[tuple[int, int], ...], ...]    # per t: (place, weight)
    post: tuple[tuple[tuple[int, int], ...], ...]
    delta: tuple[tuple[tuple[int, int], ...], ...]  # per t: (place, effect)


@dataclass(frozen=True)
class GoalCode:
    """Comparison atoms over place indices plus a postfix boolean program."""

    atoms: tuple[tuple[tuple[tuple[int, int], ...], int, int], ...]
    prog: tuple[tuple[int, int], ...]  # (opcode, argument)


def compile_net(net: PetriNet) -> NetCode:
    index = {p: i for i, p in enumerate(net.places)}
    pre = []
    post = []
    delta = []
    for t in net.transitions:
        pre_t = tuple(sorted((index[p], w) for p, w in net.pre(t).items()))
        post_t = tuple(sorted((index[p], w) for p, w in net.post(t).items()))
        touched = set(net.pre(t)) | set(net.post(t))
        delta_t = tuple(
            sorted(
                (index[p], net.incidence(p, t))
                for p in touched
                if net.incidence(p, t)
            )
        )
        pre.append(pre_t)
        post.append(post_t)
        delta.append(delta_t)
    m0 = tuple(net.initial_marking.tokens(p) for p in net.places)
    return NetCode(net.places, net.transitions, m0, tuple(pre), tuple(post), tuple(delta))


def compile_goal(net: PetriNet, expr: BoolExpr) -> GoalCode:
    index = {p: i for i, p in enumerate(net.places)}
    atoms: list[tuple[tuple[tuple[int, int], ...], int, int]] = []
    prog: list[tuple[int, int]] = []

    def emit_atom(atom: Atom) -> None:
        diff = atom.lhs - atom.rhs
        pairs = tuple(sorted((index[p], c) for c, p in diff.terms))
        cmp_code = {"=": CMP_EQ, "<=": CMP_LE, ">=": CMP_GE}[atom.op]
        atoms.append((pairs, diff.constant, cmp_code))
        prog.append((OP_ATOM, len(atoms) - 1))

    def walk(node: BoolExpr) -> None:
        if isinstance(node, BoolConst):
            prog.append((OP_TRUE if node.value else OP_FALSE, 0))
        elif isinstance(node, Atom):
            emit_atom(node)
        elif isinstance(node, Not):
            walk(node.operand)
            prog.append((OP_NOT, 0))
        elif isinstance(node, (And, Or)):
            opcode = OP_AND if isinstance(node, And) else OP_OR
            if not node.operands:
                prog.append((OP_TRUE if opcode == OP_AND else OP_FALSE, 0))
                return
            walk(node.operands[0])
            for child in node.operands[1:]:
                walk(child)
                prog.append((opcode, 0))
        else:
            raise TypeError(f"not a boolean expression: {node!r}")

    walk(expr)
    return GoalCode(tuple(atoms), tuple(prog))


from . import _pure  # noqa: E402

_BACKENDS = {"pure": _pure}
if os.environ.get("PNREACH_PURE") != "1":
    try:
        from . import _speed  # noqa: E402

        _BACKENDS["compiled"] = _speed
    except ImportError:
        pass

COMPILED_AVAILABLE = "compiled" in _BACKENDS
DEFAULT_BACKEND = "compiled" if COMPILED_AVAILABLE else "pure"


def get_backend(name: str | None = None):
    """Resolve a backend module by name ("pure", "compiled", None=best)."""
    if name in (None, "auto"):
        name = DEFAULT_BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend '{name}' is not available") from None
