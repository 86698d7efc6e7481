"""Client side of the SMT integration: one child solver process per session.

A :class:`SolverSession` owns a subprocess that speaks the SMT-LIB2 text
protocol on its standard streams.  Any conforming solver works; the command
is taken from the configuration, the ``PNREACH_SMT`` environment variable,
a ``z3`` binary on PATH, or falls back to the bundled ``pnreach-smt``
solver.  Sessions are synchronous: ``:print-success`` is enabled and every
command's acknowledgement is consumed, so protocol errors surface with
their message instead of desynchronizing the stream.

A session is confined to one task at a time.  ``interrupt()`` (used by
cancellation and budget expiry) kills the child; the session is then dead
and every later call raises :class:`SessionDead`.
"""

from __future__ import annotations

import logging
import os
import selectors
import shlex
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from .liasolver.sexpr import SexprError, SexprReader

log = logging.getLogger("pnreach.smt")

_session_counter = 0


class SmtError(Exception):
    pass


class SolverSpawnError(SmtError):
    pass


class SessionDead(SmtError):
    pass


class ProtocolError(SmtError):
    pass


class UsageError(SmtError):
    pass


def bundled_solver_command() -> tuple[str, ...]:
    return (sys.executable, "-m", "pnreach.liasolver")


def resolve_solver_command(explicit: Optional[str] = None) -> tuple[str, ...]:
    """Solver command resolution: flag value, PNREACH_SMT, z3, bundled."""
    if explicit:
        return tuple(shlex.split(explicit))
    env = os.environ.get("PNREACH_SMT")
    if env:
        return tuple(shlex.split(env))
    z3 = shutil.which("z3")
    if z3:
        return (z3, "-in")
    return bundled_solver_command()


@dataclass(frozen=True)
class SolverConfig:
    command: tuple[str, ...] = field(default_factory=bundled_solver_command)
    budget_ms: Optional[int] = None  # per check-sat, None = no limit
    open_timeout_s: float = 20.0

    def with_budget(self, budget_ms: Optional[int]) -> "SolverConfig":
        return SolverConfig(self.command, budget_ms, self.open_timeout_s)


@dataclass(frozen=True)
class SmtResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: Optional[dict[str, int]] = None
    bool_model: Optional[dict[str, bool]] = None
    reason: Optional[str] = None

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"

    @property
    def is_unknown(self) -> bool:
        return self.status == "unknown"


class SolverSession:
    """A stateful SMT-LIB2 conversation, fixed to the QF_LIA logic."""

    def __init__(self, config: SolverConfig):
        global _session_counter
        _session_counter += 1
        self.id = _session_counter
        self.config = config
        self._dead = False
        self._pending_acks = 0
        self._depth = 0
        self._declared: list[set[str]] = [set()]
        self._forms: list[object] = []
        self._reader = SexprReader()
        try:
            self._proc = subprocess.Popen(
                list(config.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise SolverSpawnError(f"cannot spawn solver {config.command}: {exc}") from exc
        self._selector = selectors.DefaultSelector()
        self._selector.register(self._proc.stdout, selectors.EVENT_READ)
        deadline = time.monotonic() + config.open_timeout_s
        try:
            self._send("(set-option :print-success true)")
            self._pending_acks += 1
            self._send("(set-logic QF_LIA)")
            self._pending_acks += 1
            self._drain_acks(deadline)
        except SmtError as exc:
            self.kill()
            raise SolverSpawnError(f"solver handshake failed: {exc}") from exc

    # -- low-level I/O

    def _send(self, line: str) -> None:
        if self._dead:
            raise SessionDead("session is dead")
        log.debug("[s%d] -> %s", self.id, line)
        try:
            self._proc.stdin.write(line.encode() + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._die()
            raise SessionDead(f"solver pipe closed: {exc}") from exc

    def _read_form(self, deadline: Optional[float]):
        while not self._forms:
            if deadline is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError()
            else:
                remaining = None
            wait = 0.25 if remaining is None else min(remaining, 0.25)
            events = self._selector.select(wait)
            if not events:
                if self._proc.poll() is not None:
                    self._die()
                    raise ProtocolError("solver process exited")
                continue
            chunk = os.read(self._proc.stdout.fileno(), 65536)
            if not chunk:
                self._die()
                raise ProtocolError("solver closed its output")
            text = chunk.decode(errors="replace")
            for piece in text.splitlines(keepends=True):
                log.debug("[s%d] <- %s", self.id, piece.rstrip("\n"))
            try:
                self._reader.feed(text)
            except SexprError as exc:
                self._die()
                raise ProtocolError(f"unparsable solver output: {exc}") from exc
            self._forms.extend(self._reader.pop_forms())
        return self._forms.pop(0)

    def _drain_acks(self, deadline: Optional[float]) -> None:
        while self._pending_acks:
            form = self._read_form(deadline)
            if form == "success":
                self._pending_acks -= 1
                continue
            self._die()
            raise ProtocolError(f"solver error: {_error_text(form)}")

    def _die(self) -> None:
        self._dead = True
        self.kill()

    # -- session state

    @property
    def alive(self) -> bool:
        return not self._dead

    @property
    def depth(self) -> int:
        return self._depth

    def _visible(self, name: str) -> bool:
        return any(name in scope for scope in self._declared)

    # -- commands

    def declare_int(self, name: str) -> None:
        if self._visible(name):
            raise UsageError(f"'{name}' already declared in this scope")
        from .liasolver.sexpr import quote_symbol

        self._declared[-1].add(name)
        self._send(f"(declare-const {quote_symbol(name)} Int)")
        self._pending_acks += 1

    def assert_formula(self, term: str) -> None:
        self._send(f"(assert {term})")
        self._pending_acks += 1

    def push(self) -> None:
        self._send("(push 1)")
        self._pending_acks += 1
        self._depth += 1
        self._declared.append(set())

    def pop(self) -> None:
        if self._depth == 0:
            raise UsageError("pop with no matching push")
        self._send("(pop 1)")
        self._pending_acks += 1
        self._depth -= 1
        self._declared.pop()

    def check(self) -> SmtResult:
        """check-sat with the per-query budget; fetches the model on sat.

        On budget expiry the solver process is killed and
        ``SmtResult("unknown", reason="timeout")`` is returned; the session
        is dead afterwards.
        """
        if self._dead:
            raise SessionDead("session is dead")
        deadline = None
        if self.config.budget_ms is not None:
            deadline = time.monotonic() + self.config.budget_ms / 1000.0
        try:
            self._drain_acks(deadline)
            self._send("(check-sat)")
            form = self._read_form(deadline)
            if form == "sat":
                model, bool_model = self._fetch_model(deadline)
                return SmtResult("sat", model, bool_model)
            if form == "unsat":
                return SmtResult("unsat")
            if form == "unknown":
                return SmtResult("unknown", reason="solver")
            self._die()
            raise ProtocolError(f"unexpected check-sat reply: {_error_text(form)}")
        except TimeoutError:
            self._die()
            return SmtResult("unknown", reason="timeout")
        except (ProtocolError, SessionDead):
            if not self._dead:
                self._die()
            return SmtResult("unknown", reason="crash")

    def _fetch_model(self, deadline):
        self._send("(get-model)")
        form = self._read_form(deadline)
        if not isinstance(form, list):
            raise ProtocolError(f"unexpected get-model reply: {form!r}")
        ints: dict[str, int] = {}
        bools: dict[str, bool] = {}

        def walk(node) -> None:
            if isinstance(node, list):
                if len(node) >= 5 and node[0] == "define-fun" and node[2] == []:
                    name, sort, value = node[1], node[3], node[4]
                    if sort == "Int":
                        ints[name] = _parse_int_value(value)
                    elif sort == "Bool":
                        bools[name] = value == "true"
                    return
                for child in node:
                    walk(child)

        walk(form)
        return ints, bools

    # -- lifecycle

    def interrupt(self) -> None:
        """Hard-stop the child process; the session becomes dead."""
        self._die()

    def kill(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        self._dead = True
        try:
            self._selector.close()
        except Exception:
            pass
        if proc.poll() is None:
            try:
                proc.kill()
            except OSError:
                pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass
        for stream in (proc.stdin, proc.stdout):
            try:
                if stream:
                    stream.close()
            except OSError:
                pass

    def close(self) -> None:
        if not self._dead and self._proc.poll() is None:
            try:
                self._send("(exit)")
            except SmtError:
                pass
        self.kill()

    def __enter__(self) -> "SolverSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self) -> None:
        try:
            self.kill()
        except Exception:
            pass


def open_session(config: Optional[SolverConfig] = None) -> SolverSession:
    """Spawn a solver child; the session is initialized for QF_LIA."""
    return SolverSession(config or SolverConfig())


def _parse_int_value(value) -> int:
    if isinstance(value, str):
        if value.lstrip("-").isdigit():
            return int(value)
    elif isinstance(value, list) and len(value) == 2 and value[0] == "-":
        return -_parse_int_value(value[1])
    raise ProtocolError(f"unparsable model value: {value!r}")


def _error_text(form) -> str:
    if isinstance(form, list) and form and form[0] == "error":
        parts = [str(p).strip('"') for p in form[1:]]
        return " ".join(parts)
    return str(form)
