"""PLAY-tree moves and the memoized depth-first consistency check.

An instantaneous description (ID) is ``(q, w, rl, violated)`` where ``w`` is
the unread part of the input grammar as a sentential form.  A terminal move
consumes the leading event through a super-step; a nonterminal move expands
the leading variable with each of its productions in order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from lscsim.eesl import Grammar, Var
from lscsim.engine import (
    ACTIVE,
    DEFAULT_MAX_INTERNAL_STEPS,
    SimState,
    initial_state,
    superstep,
)
from lscsim.model import BEGIN_P, END_P, MARKER_EVENTS, SystemModel


class UnsupportedGrammarError(ValueError):
    """The input grammar is not right-linear."""


@dataclass(frozen=True, order=True)
class ID:
    q: tuple
    w: tuple
    rl: tuple
    violated: bool = False

    @classmethod
    def of(cls, state: SimState, w: tuple) -> "ID":
        return cls(state.q, w, state.rl, state.violated)

    @property
    def state(self) -> SimState:
        return SimState(self.q, self.rl, self.violated)

    @property
    def head(self):
        return self.w[0] if self.w else None


@dataclass(frozen=True)
class Trace:
    """Event sequence of a branch, markers included."""

    events: tuple[str, ...] = ()

    def __add__(self, event: str) -> "Trace":
        return Trace(self.events + (event,))

    def __len__(self):
        return len(self.events)

    def prefix(self, n: int) -> "Trace":
        return Trace(self.events[:n])

    def items(self) -> list:
        """Marker-free view; a parallel group becomes a tuple of its events."""
        out: list = []
        groups: list[list[str]] = []
        for a in self.events:
            if a == BEGIN_P:
                groups.append([])
            elif a == END_P:
                if groups:
                    done = tuple(groups.pop())
                    (groups[-1].extend(done) if groups else out.append(done))
            elif a in MARKER_EVENTS:
                continue
            elif groups:
                groups[-1].append(a)
            else:
                out.append(a)
        for g in groups:  # unterminated group at a violating leaf
            out.append(tuple(g))
        return out


@dataclass
class Verdict:
    consistent: bool
    trace: Trace | None = None
    explored: set = field(default_factory=set, repr=False)
    warnings: list[str] = field(default_factory=list)

    @property
    def ids_explored(self) -> int:
        return len(self.explored)


def _check_form(w: tuple) -> None:
    ok = (
        len(w) == 0
        or (len(w) == 1 and isinstance(w[0], Var))
        or (len(w) == 2 and not isinstance(w[0], Var) and isinstance(w[1], Var))
        or (len(w) == 1 and not isinstance(w[0], Var))
    )
    if not ok:
        raise AssertionError(f"sentential form {w!r} is not right-linear")


def root_id(model: SystemModel, grammar: Grammar) -> ID:
    return ID.of(initial_state(model), (grammar.start,))


def terminal_move(
    model: SystemModel, id_: ID, max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS
) -> list[ID]:
    if id_.violated or not id_.w or isinstance(id_.w[0], Var):
        raise ValueError("terminal move needs a non-violating ID headed by an event")
    rest = id_.w[1:]
    _check_form(rest)
    nexts = superstep(model, id_.state, id_.w[0], max_internal_steps)
    return sorted(ID.of(s, rest) for s in nexts)


def nonterminal_move(grammar: Grammar, id_: ID) -> list[ID]:
    if id_.violated or not id_.w or not isinstance(id_.w[0], Var):
        raise ValueError("nonterminal move needs a non-violating ID headed by a variable")
    out = []
    for p in grammar.productions_for(id_.w[0]):
        w = p.body + id_.w[1:]
        _check_form(w)
        out.append(ID(id_.q, w, id_.rl, id_.violated))
    return out


def _require_right_linear(grammar: Grammar) -> None:
    if not grammar.is_right_linear():
        raise UnsupportedGrammarError("only right-linear grammars are supported")


def mdft(
    model: SystemModel,
    grammar: Grammar,
    id_: ID,
    tr: Trace = Trace(),
    gt: set | None = None,
    max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS,
    warnings: list | None = None,
) -> tuple[bool, Trace]:
    """Memoized depth-first traversal of the PLAY-tree below ``id_``.

    Returns ``(True, trace)`` for the first violating leaf met in depth-first
    order, ``(False, tr)`` otherwise.  ``gt`` collects every expanded ID and
    may be shared between calls.
    """
    _require_right_linear(grammar)
    if gt is None:
        gt = set()

    def enter(node: ID, trace: Trace):
        if node.violated:
            return True, trace
        if not node.w:
            if warnings is not None and any(c.mode == ACTIVE for c in node.rl):
                warnings.append(f"input ended inside a main chart: {node.state.describe()}")
            return False, trace
        if node in gt:
            return False, trace
        gt.add(node)
        head = node.w[0]
        if isinstance(head, Var):
            return None, iter([(c, trace) for c in nonterminal_move(grammar, node)])
        trace = trace + head
        return None, iter([(c, trace) for c in terminal_move(model, node, max_internal_steps)])

    verdict, it = enter(id_, tr)
    if verdict is not None:
        return verdict, it
    stack = [it]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            continue
        verdict, payload = enter(*nxt)
        if verdict:
            return True, payload
        if verdict is None:
            stack.append(payload)
    return False, tr


def _fails_exactly(model: SystemModel, grammar: Grammar, events: tuple, max_internal_steps: int) -> bool:
    """Whether some branch with exactly this event sequence ends in violation."""
    frontier = {root_id(model, grammar)}
    for k, a in enumerate(events):
        heads = set()
        todo = list(frontier)
        seen = set(todo)
        while todo:
            node = todo.pop()
            if not node.w:
                continue
            if isinstance(node.w[0], Var):
                for c in nonterminal_move(grammar, node):
                    if c not in seen:
                        seen.add(c)
                        todo.append(c)
            elif node.w[0] == a:
                heads.add(node)
        frontier = set()
        for node in heads:
            for c in terminal_move(model, node, max_internal_steps):
                if c.violated:
                    if k == len(events) - 1:
                        return True
                else:
                    frontier.add(c)
        if not frontier:
            return False
    return False


def minimize_failure_trace(
    model: SystemModel,
    grammar: Grammar,
    t: Trace,
    max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS,
) -> Trace:
    """Shortest prefix of ``t`` that is itself the event sequence of a failure branch."""
    for n in range(1, len(t) + 1):
        if _fails_exactly(model, grammar, t.events[:n], max_internal_steps):
            return t.prefix(n)
    raise RuntimeError(f"trace {t.events} does not reproduce a violation")


def check_consistency(
    model: SystemModel,
    grammar: Grammar,
    max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS,
) -> Verdict:
    gt: set = set()
    warnings: list = []
    violated, trace = mdft(
        model, grammar, root_id(model, grammar), Trace(), gt, max_internal_steps, warnings
    )
    if not violated:
        return Verdict(True, None, gt, sorted(set(warnings)))
    least = minimize_failure_trace(model, grammar, trace, max_internal_steps)
    return Verdict(False, least, gt, sorted(set(warnings)))


def sentential_forms(grammar: Grammar) -> set:
    forms = {(), (grammar.start,)}
    for p in grammar.productions:
        forms.add(p.body)
        forms.update(p.body[i:] for i in range(len(p.body)))
    forms.update((v,) for v in grammar.variables)
    return forms


def id_space_bound(model: SystemModel, grammar: Grammar) -> int:
    """Upper bound on the number of distinct IDs: |Q| · |W| · |RL| · 2."""
    q_space = math.prod(len(dom) for dom in model.domains.values())
    copies = sum(len(c.layout.legal_cuts()) for c in model.charts)
    return q_space * len(sentential_forms(grammar)) * (2 ** copies) * 2


def reachable_ids(
    model: SystemModel, grammar: Grammar, max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS
) -> set[ID]:
    """Every ID of the PLAY-tree, found breadth-first without pruning by verdict."""
    root = root_id(model, grammar)
    seen = {root}
    todo = [root]
    while todo:
        node = todo.pop()
        if node.violated or not node.w:
            continue
        if isinstance(node.w[0], Var):
            children: Iterable[ID] = nonterminal_move(grammar, node)
        else:
            children = terminal_move(model, node, max_internal_steps)
        for c in children:
            if c not in seen:
                seen.add(c)
                todo.append(c)
    return seen
