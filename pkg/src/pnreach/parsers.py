"""Input formats: PNML nets, textual nets, MCC properties, equation systems.

All parsers are pure functions and safe to call concurrently.  Identifiers
may not start with ``@`` (reserved for encoder-internal variables) and may
not contain ``|`` or ``\\`` (not representable as SMT-LIB symbols).
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Union

from .model import (
    And,
    BoolExpr,
    LinearExpr,
    Not,
    Or,
    PetriNet,
    Query,
    ReductionSystem,
    compare,
    conj,
    deadlock_expr,
    disj,
    fireable_expr,
)


class ParseError(Exception):
    pass


_FORBIDDEN_ID_CHARS = set('|\\(),*# \t\r\n"')


def _check_identifier(name: str, context: str) -> str:
    if not name or name.startswith("@") or name == "->" or any(
        ch in _FORBIDDEN_ID_CHARS for ch in name
    ):
        raise ParseError(f"{context}: illegal identifier '{name}'")
    return name


# ---------------------------------------------------------------------------
# Textual net format
#
#   net <name>                  (optional)
#   pl <place> (<tokens>)
#   tr <name> <in>... -> <out>...        each item: place or place*weight
#
# '#' starts a comment; places first used in a transition are created with
# zero tokens.

_PL_RE = re.compile(r"^pl\s+(\S+)\s*\(\s*(-?\d+)\s*\)\s*$")


def _parse_arc_item(item: str, lineno: int) -> tuple[str, int]:
    if "*" in item:
        name, _, weight_text = item.partition("*")
        try:
            weight = int(weight_text)
        except ValueError:
            raise ParseError(f"line {lineno}: bad weight in '{item}'") from None
    else:
        name, weight = item, 1
    if weight <= 0:
        raise ParseError(f"line {lineno}: weight must be positive in '{item}'")
    return _check_identifier(name, f"line {lineno}"), weight


def parse_net(text: str, name: str = "net") -> PetriNet:
    places: dict[str, int] = {}
    declared_places: set[str] = set()
    transitions: list[str] = []
    pre: dict[str, dict[str, int]] = {}
    post: dict[str, dict[str, int]] = {}

    def ensure_place(p: str) -> None:
        if p not in places:
            places[p] = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        keyword = fields[0]
        if keyword == "net":
            if len(fields) != 2:
                raise ParseError(f"line {lineno}: expected 'net <name>'")
            name = _check_identifier(fields[1], f"line {lineno}")
            continue
        if keyword == "pl":
            match = _PL_RE.match(line)
            if not match:
                raise ParseError(f"line {lineno}: expected 'pl <name> (<tokens>)'")
            pname = _check_identifier(match.group(1), f"line {lineno}")
            tokens = int(match.group(2))
            if tokens < 0:
                raise ParseError(f"line {lineno}: negative initial marking")
            if pname in declared_places:
                raise ParseError(f"line {lineno}: duplicate place '{pname}'")
            declared_places.add(pname)
            places[pname] = tokens
            continue
        if keyword == "tr":
            if len(fields) < 2:
                raise ParseError(f"line {lineno}: expected 'tr <name> ...'")
            tname = _check_identifier(fields[1], f"line {lineno}")
            if tname in pre:
                raise ParseError(f"line {lineno}: duplicate transition '{tname}'")
            rest = fields[2:]
            if "->" not in rest:
                raise ParseError(f"line {lineno}: transition needs '->'")
            arrow = rest.index("->")
            ins, outs = rest[:arrow], rest[arrow + 1 :]
            if "->" in outs:
                raise ParseError(f"line {lineno}: more than one '->'")
            transitions.append(tname)
            pre[tname] = {}
            post[tname] = {}
            for item in ins:
                p, w = _parse_arc_item(item, lineno)
                ensure_place(p)
                pre[tname][p] = pre[tname].get(p, 0) + w
            for item in outs:
                p, w = _parse_arc_item(item, lineno)
                ensure_place(p)
                post[tname][p] = post[tname].get(p, 0) + w
            continue
        raise ParseError(f"line {lineno}: unknown item '{keyword}'")

    return PetriNet(name, list(places), transitions, pre, post,
                    {p: n for p, n in places.items() if n})


def serialize_net(net: PetriNet) -> str:
    lines = [f"net {net.name}"]
    for p in net.places:
        lines.append(f"pl {p} ({net.initial_marking.tokens(p)})")
    for t in net.transitions:
        def items(row):
            return " ".join(
                p if w == 1 else f"{p}*{w}" for p, w in sorted(row.items())
            )
        lines.append(f"tr {t} {items(net.pre(t))} -> {items(net.post(t))}".replace("  ", " "))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# PNML (ISO/IEC 15909-2 place/transition core)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _find_text(elem: ET.Element, *path: str) -> str | None:
    node = elem
    for name in path:
        node = next((c for c in node if _local(c.tag) == name), None)
        if node is None:
            return None
    return (node.text or "").strip()


def parse_pnml(data: Union[bytes, str]) -> PetriNet:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc
    net_elem = root if _local(root.tag) == "net" else next(
        (e for e in root.iter() if _local(e.tag) == "net"), None
    )
    if net_elem is None:
        raise ParseError("no <net> element")
    name = net_elem.get("id", "net")

    places: dict[str, int] = {}
    transition_ids: list[str] = []
    arcs: list[tuple[str, str, str, int]] = []

    def walk(elem: ET.Element) -> None:
        for child in elem:
            tag = _local(child.tag)
            if tag == "place":
                pid = child.get("id")
                if pid is None:
                    raise ParseError("place without id")
                _check_identifier(pid, f"place '{pid}'")
                if pid in places:
                    raise ParseError(f"duplicate place id '{pid}'")
                text = _find_text(child, "initialMarking", "text")
                try:
                    tokens = int(text) if text else 0
                except ValueError:
                    raise ParseError(f"place '{pid}': bad initialMarking") from None
                if tokens < 0:
                    raise ParseError(f"place '{pid}': negative initialMarking")
                places[pid] = tokens
            elif tag == "transition":
                tid = child.get("id")
                if tid is None:
                    raise ParseError("transition without id")
                _check_identifier(tid, f"transition '{tid}'")
                if tid in transition_ids:
                    raise ParseError(f"duplicate transition id '{tid}'")
                transition_ids.append(tid)
            elif tag == "arc":
                aid = child.get("id", "?")
                source, target = child.get("source"), child.get("target")
                if not source or not target:
                    raise ParseError(f"arc '{aid}': missing source/target")
                text = _find_text(child, "inscription", "text")
                try:
                    weight = int(text) if text else 1
                except ValueError:
                    raise ParseError(f"arc '{aid}': bad inscription") from None
                if weight < 1:
                    raise ParseError(f"arc '{aid}': weight must be >= 1")
                arcs.append((aid, source, target, weight))
            elif tag in ("page", "net"):
                walk(child)
            # toolspecific, graphics, name, NUPN units: ignored

    walk(net_elem)

    pre: dict[str, dict[str, int]] = {t: {} for t in transition_ids}
    post: dict[str, dict[str, int]] = {t: {} for t in transition_ids}
    tset = set(transition_ids)
    for aid, source, target, weight in arcs:
        if source in places and target in tset:
            pre[target][source] = pre[target].get(source, 0) + weight
        elif source in tset and target in places:
            post[source][target] = post[source].get(target, 0) + weight
        elif source in places and target in places:
            raise ParseError(f"arc '{aid}': connects two places")
        elif source in tset and target in tset:
            raise ParseError(f"arc '{aid}': connects two transitions")
        else:
            raise ParseError(f"arc '{aid}': references unknown node")

    return PetriNet(name, list(places), transition_ids, pre, post,
                    {p: n for p, n in places.items() if n})


# ---------------------------------------------------------------------------
# MCC property XML (reachability fragment)


@dataclass(frozen=True)
class PropertyError:
    id: str
    reason: str


def parse_mcc_properties(
    data: Union[bytes, str], net: PetriNet
) -> tuple[list[Query], list[PropertyError]]:
    """Parse the reachability fragment; one Query per supported property.

    Unsupported properties (nested temporal operators etc.) are reported in
    the error list under their id; the remaining properties still parse.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc

    queries: list[Query] = []
    errors: list[PropertyError] = []
    properties = [e for e in root.iter() if _local(e.tag) == "property"]
    for idx, prop in enumerate(properties):
        pid = _find_text(prop, "id") or f"property-{idx}"
        formula = next((c for c in prop if _local(c.tag) == "formula"), None)
        if formula is None:
            errors.append(PropertyError(pid, "missing formula"))
            continue
        try:
            queries.append(_parse_formula(pid, formula, net))
        except ParseError as exc:
            errors.append(PropertyError(pid, str(exc)))
    return queries, errors


def _only_child(elem: ET.Element, pid: str) -> ET.Element:
    children = list(elem)
    if len(children) != 1:
        raise ParseError(f"property {pid}: <{_local(elem.tag)}> needs one child")
    return children[0]


def _parse_formula(pid: str, formula: ET.Element, net: PetriNet) -> Query:
    top = _only_child(formula, pid)
    tag = _local(top.tag)
    if tag == "exists-path":
        inner = _only_child(top, pid)
        if _local(inner.tag) != "finally":
            raise ParseError(f"property {pid}: expected <finally> under <exists-path>")
        quantifier = "EF"
    elif tag == "all-paths":
        inner = _only_child(top, pid)
        if _local(inner.tag) != "globally":
            raise ParseError(f"property {pid}: expected <globally> under <all-paths>")
        quantifier = "AG"
    else:
        raise ParseError(f"property {pid}: unsupported top-level <{tag}>")
    body = _parse_state_formula(pid, _only_child(inner, pid), net)
    return Query(pid, quantifier, body)


_TEMPORAL_TAGS = {"exists-path", "all-paths", "finally", "globally", "next", "until"}

_COMPARISONS = {
    "integer-le": "<=",
    "integer-ge": ">=",
    "integer-eq": "=",
    "integer-lt": "<",
    "integer-gt": ">",
}


def _parse_state_formula(pid: str, elem: ET.Element, net: PetriNet) -> BoolExpr:
    tag = _local(elem.tag)
    if tag in _TEMPORAL_TAGS:
        raise ParseError(f"property {pid}: nested temporal operator <{tag}>")
    if tag == "conjunction":
        return conj(_parse_state_formula(pid, c, net) for c in elem)
    if tag == "disjunction":
        return disj(_parse_state_formula(pid, c, net) for c in elem)
    if tag == "negation":
        return Not(_parse_state_formula(pid, _only_child(elem, pid), net))
    if tag == "deadlock":
        return deadlock_expr(net)
    if tag == "is-fireable":
        names = [(c.text or "").strip() for c in elem if _local(c.tag) == "transition"]
        if not names:
            raise ParseError(f"property {pid}: <is-fireable> needs transitions")
        for t in names:
            if not net.has_transition(t):
                raise ParseError(f"property {pid}: unknown transition '{t}'")
        return disj(fireable_expr(net, t) for t in names)
    if tag in _COMPARISONS:
        operands = list(elem)
        if len(operands) != 2:
            raise ParseError(f"property {pid}: <{tag}> needs two operands")
        lhs = _parse_int_operand(pid, operands[0], net)
        rhs = _parse_int_operand(pid, operands[1], net)
        return compare(lhs, _COMPARISONS[tag], rhs)
    raise ParseError(f"property {pid}: unsupported element <{tag}>")


def _parse_int_operand(pid: str, elem: ET.Element, net: PetriNet) -> LinearExpr:
    tag = _local(elem.tag)
    if tag == "integer-constant":
        try:
            return LinearExpr.of_const(int((elem.text or "").strip()))
        except ValueError:
            raise ParseError(f"property {pid}: bad integer constant") from None
    if tag == "tokens-count":
        places = [(c.text or "").strip() for c in elem if _local(c.tag) == "place"]
        if not places:
            raise ParseError(f"property {pid}: <tokens-count> needs places")
        for p in places:
            if not net.has_place(p):
                raise ParseError(f"property {pid}: unknown place '{p}'")
        return LinearExpr.build(0, [(1, p) for p in places])
    if tag == "integer-sum":
        result = LinearExpr.of_const(0)
        for child in elem:
            result = result + _parse_int_operand(pid, child, net)
        return result
    if tag == "integer-difference":
        operands = [_parse_int_operand(pid, c, net) for c in elem]
        if not operands:
            raise ParseError(f"property {pid}: empty <integer-difference>")
        result = operands[0]
        for other in operands[1:]:
            result = result - other
        return result
    raise ParseError(f"property {pid}: unsupported operand <{tag}>")


# ---------------------------------------------------------------------------
# Reduction equation systems
#
#   # reduced places: <names>
#   c0 + c1*v1 + ... = d0 + d1*w1 + ...

_HEADER_RE = re.compile(r"^#\s*reduced\s+places\s*:\s*(.*)$")


def parse_reduction_system(text: str, original_places) -> ReductionSystem:
    original = frozenset(original_places)
    reduced: frozenset[str] | None = None
    equations = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        header = _HEADER_RE.match(line)
        if header is not None:
            names = [n for n in re.split(r"[,\s]+", header.group(1).strip()) if n]
            reduced = frozenset(_check_identifier(n, f"line {lineno}") for n in names)
            continue
        if line.startswith("#"):
            continue
        if reduced is None:
            raise ParseError(f"line {lineno}: missing '# reduced places:' header")
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected an equation")
        lhs_text, _, rhs_text = line.partition("=")
        lhs = _parse_linear(lhs_text, lineno)
        rhs = _parse_linear(rhs_text, lineno)
        known = original | reduced
        unknown = (lhs.places() | rhs.places()) - known
        if unknown:
            raise ParseError(
                f"line {lineno}: undeclared variable(s) {sorted(unknown)}"
            )
        equations.append(compare(lhs, "=", rhs))
    if reduced is None:
        raise ParseError("missing '# reduced places:' header")
    return ReductionSystem(original, reduced, tuple(equations))


def serialize_reduction_system(system: ReductionSystem) -> str:
    reduced = sorted(set(system.reduced_places) | set(system.aux_places))
    lines = ["# reduced places: " + " ".join(reduced)]
    for eq in system.equations:
        lines.append(f"{_linear_text(eq.lhs)} = {_linear_text(eq.rhs)}")
    return "\n".join(lines) + "\n"


def _linear_text(expr: LinearExpr) -> str:
    parts = []
    if expr.constant or not expr.terms:
        parts.append(str(expr.constant))
    for coeff, place in expr.terms:
        if coeff == 1:
            parts.append(f"+ {place}")
        elif coeff == -1:
            parts.append(f"- {place}")
        elif coeff >= 0:
            parts.append(f"+ {coeff}*{place}")
        else:
            parts.append(f"- {-coeff}*{place}")
    text = " ".join(parts)
    if text.startswith("+ "):
        text = text[2:]
    return text


_TERM_RE = re.compile(r"^(?:(-?\d+)\s*\*\s*)?(\S+)$|^(-?\d+)$")


def _parse_linear(text: str, lineno: int) -> LinearExpr:
    text = text.strip()
    if not text:
        raise ParseError(f"line {lineno}: empty expression side")
    # split into signed chunks
    chunks = re.findall(r"[+-]?[^+-]+", text)
    constant = 0
    terms: list[tuple[int, str]] = []
    for chunk in chunks:
        chunk = chunk.strip()
        sign = 1
        if chunk.startswith("+"):
            chunk = chunk[1:].strip()
        elif chunk.startswith("-"):
            sign = -1
            chunk = chunk[1:].strip()
        if not chunk:
            raise ParseError(f"line {lineno}: dangling sign")
        match = _TERM_RE.match(chunk)
        if match is None:
            raise ParseError(f"line {lineno}: bad term '{chunk}'")
        if match.group(3) is not None:
            constant += sign * int(match.group(3))
            continue
        coeff = int(match.group(1)) if match.group(1) else 1
        name = match.group(2)
        if name.isdigit():
            constant += sign * coeff * int(name)
        else:
            terms.append((sign * coeff, _check_identifier(name, f"line {lineno}")))
    return LinearExpr.build(constant, terms)
