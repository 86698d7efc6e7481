"""S-expression tokenizer and incremental reader for the SMT-LIB2 syntax."""

from __future__ import annotations

SIMPLE_SYMBOL_CHARS = set(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    "~!@$%^&*_-+=<>.?/"
)


class SexprError(Exception):
    pass


def is_simple_symbol(name: str) -> bool:
    return (
        bool(name)
        and not name[0].isdigit()
        and all(ch in SIMPLE_SYMBOL_CHARS for ch in name)
    )


def quote_symbol(name: str) -> str:
    """Render a symbol, |quoting| it when it is not a simple symbol."""
    if is_simple_symbol(name):
        return name
    if "|" in name or "\\" in name:
        raise SexprError(f"symbol not representable in SMT-LIB: {name!r}")
    return f"|{name}|"


class SexprReader:
    """Incremental reader: feed text chunks, pop complete top-level forms.

    Forms are returned as nested lists of token strings.  Quoted symbols are
    unquoted; string literals keep their double quotes so later stages can
    tell them apart from symbols.
    """

    def __init__(self) -> None:
        self._tokens: list[str] = []
        self._depth = 0
        self._ready: list[object] = []
        self._buf = ""

    def feed(self, text: str) -> None:
        self._buf += text
        self._scan()

    def at_toplevel(self) -> bool:
        return self._depth == 0 and not self._tokens and not self._buf.strip()

    def _scan(self) -> None:
        buf = self._buf
        i = 0
        n = len(buf)
        while i < n:
            ch = buf[i]
            if ch in " \t\r\n":
                i += 1
                continue
            if ch == ";":
                j = buf.find("\n", i)
                if j < 0:
                    self._buf = buf[i:]
                    return
                i = j + 1
                continue
            if ch == "(" or ch == ")":
                self._push(ch)
                i += 1
                continue
            if ch == "|":
                j = buf.find("|", i + 1)
                if j < 0:
                    self._buf = buf[i:]
                    return
                self._push(buf[i + 1 : j])
                i = j + 1
                continue
            if ch == '"':
                j = i + 1
                closed = -1
                while j < n:
                    if buf[j] == '"':
                        if j + 1 < n and buf[j + 1] == '"':
                            j += 2
                            continue
                        closed = j
                        break
                    j += 1
                if closed < 0:
                    self._buf = buf[i:]
                    return
                self._push(buf[i : closed + 1])
                i = closed + 1
                continue
            j = i
            while j < n and buf[j] not in ' \t\r\n();"|':
                j += 1
            if j == n:
                # token may continue in the next chunk
                self._buf = buf[i:]
                return
            self._push(buf[i:j])
            i = j
        self._buf = ""

    def finish(self) -> None:
        """Flush a trailing token at end of input (no more chunks coming)."""
        tail = self._buf.strip()
        self._buf = ""
        if tail and not tail.startswith(";") and not tail.startswith(("|", '"')):
            self._push(tail)

    def _push(self, token: str) -> None:
        if token == "(":
            self._depth += 1
            self._tokens.append(token)
        elif token == ")":
            if self._depth == 0:
                raise SexprError("unbalanced ')'")
            self._depth -= 1
            self._tokens.append(token)
        else:
            self._tokens.append(token)
        if self._depth == 0:
            form = _parse_tokens(self._tokens)
            self._tokens = []
            self._ready.append(form)

    def pop_forms(self) -> list[object]:
        out = self._ready
        self._ready = []
        return out


def _parse_tokens(tokens: list[str]) -> object:
    pos = 0

    def parse() -> object:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while tokens[pos] != ")":
                items.append(parse())
            pos += 1
            return items
        if tok == ")":
            raise SexprError("unexpected ')'")
        return tok

    form = parse()
    if pos != len(tokens):
        raise SexprError("trailing tokens in form")
    return form


def parse_all(text: str) -> list[object]:
    """Parse a complete document into a list of top-level forms."""
    reader = SexprReader()
    reader.feed(text)
    reader.finish()
    if not reader.at_toplevel():
        raise SexprError("unbalanced input")
    return reader.pop_forms()


def render(form: object) -> str:
    if isinstance(form, list):
        return "(" + " ".join(render(f) for f in form) + ")"
    return str(form)
