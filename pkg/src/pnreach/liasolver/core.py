"""SMT-LIB2 command interpreter around the skeleton/theory core."""

from __future__ import annotations

import sys
from typing import Optional, TextIO

from .sexpr import SexprError, SexprReader, quote_symbol, render
from .skeleton import (
    BOOL_SORT,
    INT_SORT,
    SkeletonSolver,
    SolverUsageError,
    TermCompiler,
    evaluate_node,
)
from .theory import TheoryBudgetExceeded


class _Frame:
    __slots__ = ("sorts", "asserts")

    def __init__(self) -> None:
        self.sorts: dict[str, str] = {}
        self.asserts: list[object] = []


class Server:
    """One solver session: scoped declarations/assertions plus check-sat."""

    def __init__(self, out: TextIO = sys.stdout):
        self.out = out
        self.frames = [_Frame()]
        self.print_success = False
        self.status: Optional[str] = None
        self.int_model: dict[str, int] = {}
        self.bool_model: dict[str, bool] = {}

    # -- plumbing

    def _reply(self, text: str) -> None:
        self.out.write(text + "\n")
        self.out.flush()

    def _error(self, message: str) -> None:
        message = message.replace("\\", "\\\\").replace('"', '""')
        self._reply(f'(error "{message}")')

    def _success(self) -> None:
        if self.print_success:
            self._reply("success")

    def _sorts(self) -> dict[str, str]:
        merged: dict[str, str] = {}
        for frame in self.frames:
            merged.update(frame.sorts)
        return merged

    def _asserts(self) -> list[object]:
        out: list[object] = []
        for frame in self.frames:
            out.extend(frame.asserts)
        return out

    # -- command dispatch; returns False when the session should end

    def execute(self, form: object) -> bool:
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            self._error("expected a command")
            return True
        cmd, *args = form
        handler = getattr(self, "_cmd_" + cmd.replace("-", "_"), None)
        if handler is None:
            self._error(f"unsupported command '{cmd}'")
            return True
        try:
            return handler(args) is not False
        except SolverUsageError as exc:
            self._error(str(exc))
        except SexprError as exc:
            self._error(str(exc))
        return True

    # -- setup commands

    def _cmd_set_logic(self, args) -> None:
        self._success()

    def _cmd_set_info(self, args) -> None:
        self._success()

    def _cmd_set_option(self, args) -> None:
        if len(args) == 2 and args[0] == ":print-success":
            self.print_success = args[1] == "true"
        self._success()

    def _cmd_get_info(self, args) -> None:
        key = args[0] if args else ""
        if key == ":name":
            self._reply('(:name "pnreach-smt")')
        elif key == ":reason-unknown":
            self._reply('(:reason-unknown "incomplete")')
        else:
            self._reply(f'({key} "")')

    def _cmd_echo(self, args) -> None:
        text = args[0] if args else '""'
        if isinstance(text, str) and text.startswith('"') and text.endswith('"'):
            text = text[1:-1].replace('""', '"')
        self._reply(str(text))

    # -- declarations and assertions

    def _declare(self, name: str, sort: str) -> None:
        if sort not in (INT_SORT, BOOL_SORT):
            raise SolverUsageError(f"unsupported sort '{sort}'")
        if name in self._sorts():
            raise SolverUsageError(f"'{name}' already declared")
        self.frames[-1].sorts[name] = sort
        self._success()

    def _cmd_declare_const(self, args) -> None:
        if len(args) != 2 or not isinstance(args[0], str) or not isinstance(args[1], str):
            raise SolverUsageError("declare-const takes a name and a sort")
        self._declare(args[0], args[1])

    def _cmd_declare_fun(self, args) -> None:
        if len(args) != 3 or not isinstance(args[0], str):
            raise SolverUsageError("declare-fun takes name, argument sorts, sort")
        if args[1] != []:
            raise SolverUsageError("uninterpreted functions are not supported")
        if not isinstance(args[2], str):
            raise SolverUsageError("bad sort")
        self._declare(args[0], args[2])

    def _cmd_assert(self, args) -> None:
        if len(args) != 1:
            raise SolverUsageError("assert takes one term")
        # validate eagerly so errors point at the offending assert
        compiler = TermCompiler(self._sorts())
        compiler.to_bool(args[0])
        self.frames[-1].asserts.append(args[0])
        self.status = None
        self._success()

    def _cmd_push(self, args) -> None:
        n = int(args[0]) if args else 1
        for _ in range(n):
            self.frames.append(_Frame())
        self._success()

    def _cmd_pop(self, args) -> None:
        n = int(args[0]) if args else 1
        if n >= len(self.frames):
            raise SolverUsageError("pop below the initial frame")
        for _ in range(n):
            self.frames.pop()
        self.status = None
        self._success()

    def _cmd_reset(self, args) -> None:
        self.frames = [_Frame()]
        self.print_success = False
        self.status = None
        self._success()

    def _cmd_exit(self, args) -> bool:
        return False

    # -- solving

    def _cmd_check_sat(self, args) -> None:
        sorts = self._sorts()
        compiler = TermCompiler(sorts)
        try:
            nodes = [compiler.to_bool(t) for t in self._asserts()]
            bool_names = [n for n, s in sorts.items() if s == BOOL_SORT]
            solver = SkeletonSolver(nodes, compiler.atoms, bool_names=bool_names)
            status, int_model, bool_model = solver.solve()
            if status == "sat":
                # defensive re-evaluation: never report a wrong model
                for node in nodes:
                    if not evaluate_node(node, bool_model, int_model, compiler.atoms):
                        status, int_model, bool_model = "unknown", None, None
                        break
        except TheoryBudgetExceeded:
            status, int_model, bool_model = "unknown", None, None
        except (AssertionError, RecursionError):
            status, int_model, bool_model = "unknown", None, None
        self.status = status
        if status == "sat":
            self.int_model = {
                name: int_model.get(name, 0)
                for name, sort in sorts.items()
                if sort == INT_SORT
            }
            self.bool_model = {
                name: bool_model.get(name, False)
                for name, sort in sorts.items()
                if sort == BOOL_SORT
            }
        self._reply(status)

    def _cmd_get_model(self, args) -> None:
        if self.status != "sat":
            raise SolverUsageError("model is not available")
        lines = ["("]
        for name in sorted(self.int_model):
            lines.append(
                f"  (define-fun {quote_symbol(name)} () Int "
                f"{_render_int(self.int_model[name])})"
            )
        for name in sorted(self.bool_model):
            value = "true" if self.bool_model[name] else "false"
            lines.append(f"  (define-fun {quote_symbol(name)} () Bool {value})")
        lines.append(")")
        self._reply("\n".join(lines))

    def _cmd_get_value(self, args) -> None:
        if self.status != "sat":
            raise SolverUsageError("model is not available")
        if len(args) != 1 or not isinstance(args[0], list):
            raise SolverUsageError("get-value takes a list of terms")
        compiler = TermCompiler(self._sorts())
        parts = []
        for term in args[0]:
            if compiler._is_bool_term(term):
                node = compiler.to_bool(term)
                val = evaluate_node(node, self.bool_model, self.int_model, compiler.atoms)
                parts.append(f"({render(term)} {'true' if val else 'false'})")
            else:
                coeffs, const = compiler.to_linear(term)
                val = const + sum(
                    c * self.int_model.get(v, 0) for v, c in coeffs.items()
                )
                parts.append(f"({render(term)} {_render_int(val)})")
        self._reply("(" + " ".join(parts) + ")")


def _render_int(value: int) -> str:
    return str(value) if value >= 0 else f"(- {-value})"


def run(stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout) -> int:
    sys.setrecursionlimit(1_000_000)
    server = Server(stdout)
    reader = SexprReader()
    while True:
        line = stdin.readline()
        if not line:
            return 0
        try:
            reader.feed(line)
            forms = reader.pop_forms()
        except SexprError as exc:
            server._error(str(exc))
            reader = SexprReader()
            continue
        for form in forms:
            if not server.execute(form):
                return 0
