"""Pure-Python kernel backend; the reference for the compiled twin."""

from __future__ import annotations

from collections import deque

from . import CMP_EQ, CMP_GE, CMP_LE, OP_AND, OP_ATOM, OP_FALSE, OP_NOT, OP_OR, OP_TRUE

BACKEND_NAME = "pure"

_MASK = (1 << 64) - 1


def _xorshift(state: int) -> int:
    state ^= state >> 12
    state ^= (state << 25) & _MASK
    state ^= state >> 27
    return state & _MASK


def eval_goal(goal, marking) -> bool:
    """Evaluate a compiled goal on an indexable marking vector."""
    stack: list[bool] = []
    atoms = goal.atoms
    for op, arg in goal.prog:
        if op == OP_ATOM:
            pairs, const, cmp_code = atoms[arg]
            value = const
            for idx, coeff in pairs:
                value += coeff * marking[idx]
            if cmp_code == CMP_EQ:
                stack.append(value == 0)
            elif cmp_code == CMP_LE:
                stack.append(value <= 0)
            else:
                stack.append(value >= 0)
        elif op == OP_TRUE:
            stack.append(True)
        elif op == OP_FALSE:
            stack.append(False)
        elif op == OP_NOT:
            stack[-1] = not stack[-1]
        elif op == OP_AND:
            b = stack.pop()
            stack[-1] = stack[-1] and b
        else:  # OP_OR
            b = stack.pop()
            stack[-1] = stack[-1] or b
    return stack[-1]


class RandomWalker:
    """Repeated uniform random walks from m0, restarting on deadlock or
    when a walk exceeds ``walk_cap`` steps.  Deterministic given the seed.
    """

    def __init__(self, net_code, goal, seed: int, walk_cap: int = 10_000):
        self.net = net_code
        self.goal = goal
        self.walk_cap = walk_cap
        self.state = (seed or 1) & _MASK
        self.steps_done = 0
        self.restarts = 0
        self._marking = list(net_code.m0)
        self._trace: list[int] = []
        self.found: list[int] | None = None

    def run(self, step_budget: int) -> str:
        """Advance up to ``step_budget`` steps; "found" or "budget"."""
        if self.found is not None:
            return "found"
        net = self.net
        goal = self.goal
        marking = self._marking
        trace = self._trace
        n_trans = len(net.transitions)
        enabled: list[int] = []
        remaining = step_budget
        while remaining > 0:
            if eval_goal(goal, marking):
                self.found = list(trace)
                self._trace = trace
                return "found"
            enabled.clear()
            for t in range(n_trans):
                ok = True
                for idx, w in net.pre[t]:
                    if marking[idx] < w:
                        ok = False
                        break
                if ok:
                    enabled.append(t)
            if not enabled or len(trace) >= self.walk_cap:
                marking[:] = net.m0
                trace.clear()
                self.restarts += 1
                remaining -= 1
                self.steps_done += 1
                continue
            self.state = _xorshift(self.state)
            t = enabled[self.state % len(enabled)]
            for idx, d in net.delta[t]:
                marking[idx] += d
            trace.append(t)
            remaining -= 1
            self.steps_done += 1
        self._marking = marking
        return "budget"


class Enumerator:
    """Breadth-first exploration with a visited set and parent pointers.

    Statuses from :meth:`run`: "found" (goal marking reached, shortest
    trace available), "exhausted" (full state space explored), "cap"
    (state cap hit), "more" (chunk budget used up, call again).
    """

    def __init__(self, net_code, goal, state_cap: int = 1_000_000):
        self.net = net_code
        self.goal = goal
        self.state_cap = state_cap
        m0 = tuple(net_code.m0)
        self._states: list[tuple[int, ...]] = [m0]
        self._index: dict[tuple[int, ...], int] = {m0: 0}
        self._parent: list[int] = [-1]
        self._via: list[int] = [-1]
        self._queue = deque([0])
        self.status = "more"
        self._goal_state = -1
        if eval_goal(goal, m0):
            self.status = "found"
            self._goal_state = 0

    @property
    def visited_count(self) -> int:
        return len(self._states)

    def run(self, chunk: int) -> str:
        if self.status != "more":
            return self.status
        net = self.net
        goal = self.goal
        states = self._states
        index = self._index
        queue = self._queue
        n_trans = len(net.transitions)
        processed = 0
        while queue:
            if processed >= chunk:
                return "more"
            state_id = queue.popleft()
            marking = states[state_id]
            processed += 1
            for t in range(n_trans):
                ok = True
                for idx, w in net.pre[t]:
                    if marking[idx] < w:
                        ok = False
                        break
                if not ok:
                    continue
                successor = list(marking)
                for idx, d in net.delta[t]:
                    successor[idx] += d
                key = tuple(successor)
                if key in index:
                    continue
                if len(states) >= self.state_cap:
                    self.status = "cap"
                    return self.status
                index[key] = len(states)
                states.append(key)
                self._parent.append(state_id)
                self._via.append(t)
                if eval_goal(goal, key):
                    self.status = "found"
                    self._goal_state = len(states) - 1
                    return self.status
                queue.append(len(states) - 1)
        self.status = "exhausted"
        return self.status

    def trace(self) -> list[int]:
        """Transition indices of a shortest path to the goal marking."""
        if self._goal_state < 0:
            raise ValueError("no goal state found")
        path: list[int] = []
        node = self._goal_state
        while self._parent[node] >= 0:
            path.append(self._via[node])
            node = self._parent[node]
        path.reverse()
        return path

    def markings(self):
        """All visited markings (only meaningful once exhausted)."""
        return list(self._states)
