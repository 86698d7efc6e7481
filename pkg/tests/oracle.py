"""Independent reference implementations used as test oracles.

Deliberately primitive: plain BFS over Marking objects with model.fire, and
the classical saturation computation for traps.  Nothing here shares code
with the kernels, encodings, or checkers it is used to check.
"""

from collections import deque

from pnreach.model import evaluate, fire, enabled_transitions, normalize


def bfs_markings(net, cap=200_000):
    """All reachable markings, or None when the cap is hit."""
    seen = {net.initial_marking}
    queue = deque([net.initial_marking])
    while queue:
        m = queue.popleft()
        for t in net.transitions:
            try:
                nxt = fire(net, m, t)
            except Exception:
                continue
            if nxt not in seen:
                if len(seen) >= cap:
                    return None
                seen.add(nxt)
                queue.append(nxt)
    return seen


def goal_reachable(net, goal, cap=200_000):
    """True/False by exhaustive search, or None when the cap is hit."""
    if evaluate(net.initial_marking, goal):
        return True
    seen = {net.initial_marking}
    queue = deque([net.initial_marking])
    while queue:
        m = queue.popleft()
        for t in net.transitions:
            if not all(m.tokens(p) >= w for p, w in net.pre(t).items()):
                continue
            nxt = fire(net, m, t)
            if nxt in seen:
                continue
            if evaluate(nxt, goal):
                return True
            if len(seen) >= cap:
                return None
            seen.add(nxt)
            queue.append(nxt)
    return False


def decide_query(net, query, cap=200_000):
    """Enumeration verdict for a query, or None when the cap is hit."""
    n = normalize(query)
    reachable = goal_reachable(net, n.goal, cap)
    if reachable is None:
        return None
    return n.answer_if_reachable if reachable else n.answer_if_unreachable


def is_trap(net, places):
    """Syntactic trap check: consumers of the set also produce into it."""
    s = set(places)
    for t in net.transitions:
        consumes = any(net.pre_weight(t, p) > 0 for p in s)
        produces = any(net.post_weight(t, p) > 0 for p in s)
        if consumes and not produces:
            return False
    return True


def maximal_trap_within(net, allowed):
    """Greatest trap contained in ``allowed`` (saturation fixpoint)."""
    s = set(allowed)
    changed = True
    while changed and s:
        changed = False
        for t in net.transitions:
            if any(net.post_weight(t, q) > 0 for q in s):
                continue
            consumed = {p for p in s if net.pre_weight(t, p) > 0}
            if consumed:
                s -= consumed
                changed = True
    return s


def qualifying_trap_exists(net, candidate):
    """Oracle for find_trap: marked-at-m0 trap that is empty in candidate."""
    zero = {p for p in net.places if candidate.tokens(p) == 0}
    trap = maximal_trap_within(net, zero)
    m0 = net.initial_marking
    return bool(trap) and sum(m0.tokens(p) for p in trap) >= 1
