"""Reference implementations kept deliberately naive.

They share only the single-step transition with the package: no memo
tables, no deduplication of interleavings, no automata.
"""
from __future__ import annotations

import random
from collections import deque
from itertools import combinations

from lscsim.eesl import Atom, Concat, Empty, Par, Shuffle, Star, Test, Union, Var
from lscsim.engine import apply_step, enabled_internal_events, initial_state
from lscsim.model import (
    BEGIN_P,
    END_P,
    TEST_SF,
    Assignment,
    Chart,
    Comparison,
    Condition,
    Message,
    ObjectDecl,
    SystemModel,
    Temp,
    VarDecl,
    VarRef,
)


# ---------------------------------------------------------------------------
# languages


def shuffles(u: tuple, v: tuple) -> set:
    n = len(u) + len(v)
    out = set()
    for picks in combinations(range(n), len(u)):
        w, i, j = [], 0, 0
        for k in range(n):
            if k in picks:
                w.append(u[i])
                i += 1
            else:
                w.append(v[j])
                j += 1
        out.add(tuple(w))
    return out


def ast_words(node, max_len: int) -> set:
    """Words of length <= max_len denoted by an EESL syntax tree."""
    if isinstance(node, Empty):
        return {()}
    if isinstance(node, Atom):
        return {(node.name,)} if max_len >= 1 else set()
    if isinstance(node, Test):
        return {(TEST_SF, node.atom.name)} if max_len >= 2 else set()
    if isinstance(node, Union):
        return ast_words(node.left, max_len) | ast_words(node.right, max_len)
    if isinstance(node, Concat):
        left = ast_words(node.left, max_len)
        right = ast_words(node.right, max_len)
        return {a + b for a in left for b in right if len(a) + len(b) <= max_len}
    if isinstance(node, Star):
        inner = {w for w in ast_words(node.inner, max_len) if w}
        out = {()}
        frontier = {()}
        while frontier:
            frontier = {a + b for a in frontier for b in inner if len(a) + len(b) <= max_len} - out
            out |= frontier
        return out
    if isinstance(node, (Par, Shuffle)):
        cap = max_len - 2 if isinstance(node, Par) else max_len
        left = ast_words(node.left, cap)
        right = ast_words(node.right, cap)
        mixed = set()
        for a in left:
            for b in right:
                if len(a) + len(b) <= cap:
                    mixed |= shuffles(a, b)
        if isinstance(node, Shuffle):
            return mixed
        body = left | right | mixed
        return {(BEGIN_P,) + w + (END_P,) for w in body if len(w) <= cap} if cap >= 0 else set()
    raise TypeError(node)


def prefixes(words) -> set:
    return {w[:k] for w in words for k in range(len(w) + 1)}


# ---------------------------------------------------------------------------
# simulation without deduplication


def naive_superstep(model, state, a, limit: int = 200) -> set:
    """Stable successors, found by trying every interleaving one by one."""
    out = set()

    def run(s, depth):
        if depth > limit:
            raise RecursionError("internal events do not settle")
        if s.violated:
            out.add(s)
            return
        evs = enabled_internal_events(model, s)
        if not evs:
            out.add(s)
            return
        for ev in evs:
            for t in apply_step(model, s, ev):
                run(t, depth + 1)

    for first in apply_step(model, state, a):
        run(first, 0)
    return out


def failing_runs(model, word) -> bool:
    """Whether feeding ``word`` can end in a violation exactly at its last event."""
    states = {initial_state(model)}
    for k, a in enumerate(word):
        nxt = set()
        for s in states:
            for t in naive_superstep(model, s, a):
                if t.violated:
                    if k == len(word) - 1:
                        return True
                else:
                    nxt.add(t)
        states = nxt
        if not states:
            return False
    return False


def brute_verdict(model, words) -> tuple[bool, tuple | None]:
    """(consistent, shortest failing prefix) over a finite language."""
    cands = sorted(prefixes(words) - {()}, key=lambda w: (len(w), w))
    fails = [w for w in cands if failing_runs(model, w)]
    if not fails:
        return True, None
    return False, fails[0]


def least_failing_prefix(model, trace) -> tuple | None:
    for n in range(1, len(trace) + 1):
        if failing_runs(model, trace[:n]):
            return tuple(trace[:n])
    return None


def graph_nodes(model, dfa) -> set:
    """(q, rl) of every stable state outside parallel groups, by plain BFS."""
    start = (initial_state(model), dfa.start, 0)
    seen = {start}
    nodes = {(start[0].q, start[0].rl)}
    queue = deque([start])
    while queue:
        s, d, depth = queue.popleft()
        for a, nd in zip(dfa.alphabet, dfa.delta[d]):
            if not _live(dfa, nd):
                continue
            ndepth = depth + (a == BEGIN_P) - (a == END_P)
            for t in naive_superstep(model, s, a):
                if t.violated:
                    continue
                if ndepth == 0:
                    nodes.add((t.q, t.rl))
                item = (t, nd, ndepth)
                if item not in seen:
                    seen.add(item)
                    queue.append(item)
    return nodes


def _live(dfa, q) -> bool:
    seen = {q}
    todo = [q]
    while todo:
        p = todo.pop()
        if p in dfa.accepting:
            return True
        for d in dfa.delta[p]:
            if d not in seen:
                seen.add(d)
                todo.append(d)
    return False


def nomemo_dfs(model, grammar, root, depth_bound: int) -> bool:
    """Plain DFS over the PLAY-tree, cut off after ``depth_bound`` terminal moves.
    Returns True when a violating leaf is found."""
    def visit(state, w, depth):
        if state.violated:
            return True
        if not w or depth > depth_bound:
            return False
        head = w[0]
        if isinstance(head, Var):
            return any(visit(state, p.body + w[1:], depth) for p in grammar.productions_for(head))
        return any(visit(t, w[1:], depth + 1) for t in naive_superstep(model, state, head))

    return visit(root, (grammar.start,), 0)


# ---------------------------------------------------------------------------
# random models


EXTERNALS = ("a", "b")
INTERNALS = ("e1", "e2", "e3")


def random_model(rng: random.Random) -> SystemModel:
    """Small random model whose internal events only ever flow upward (e1 < e2 < e3),
    so every super-step settles."""
    n_obj = rng.randint(1, 2)
    objects = []
    for k in range(n_obj):
        size = rng.randint(1, 3)
        dom = tuple(f"v{j}" for j in range(size))
        objects.append(ObjectDecl(f"O{k}", (VarDecl("x", dom, dom[0]),)))
    names = [o.name for o in objects]
    doms = {o.name: o.vars[0].domain for o in objects}
    charts = []
    for c in range(rng.randint(1, 3)):
        trigger_ix = rng.randint(-1, len(INTERNALS) - 2)  # -1 means an external trigger
        obj = rng.choice(names)
        other = rng.choice(names)
        pre = []
        if trigger_ix < 0:
            pre.append(Message("Env", obj, rng.choice(EXTERNALS), Temp.HOT))
            if rng.random() < 0.3:
                pre.append(Message("Env", obj, rng.choice(EXTERNALS), Temp.HOT))
            low = 0
        else:
            pre.append(Message(other, obj, INTERNALS[trigger_ix], Temp.HOT))
            low = trigger_ix + 1
        if rng.random() < 0.3:
            pre.append(Condition(obj, (Comparison(VarRef(obj, "x"), "=", rng.choice(doms[obj])),), Temp.COLD))
        main = []
        for _ in range(rng.randint(1, 3)):
            kind = rng.random()
            target = rng.choice(names)
            if kind < 0.35:
                main.append(Assignment(target, "x", rng.choice(doms[target])))
            elif kind < 0.7:
                op = rng.choice(["=", "!="])
                pred = (Comparison(VarRef(target, "x"), op, rng.choice(doms[target])),)
                main.append(Condition(target, pred, rng.choice([Temp.HOT, Temp.COLD])))
            elif kind < 0.85 and low < len(INTERNALS):
                ev = INTERNALS[rng.randint(low, len(INTERNALS) - 1)]
                main.append(Message(obj, target, ev, rng.choice([Temp.HOT, Temp.COLD])))
            else:
                # an external event expected inside the main chart
                main.append(Message("Env", target, rng.choice(EXTERNALS), rng.choice([Temp.HOT, Temp.COLD])))
        instances = tuple(dict.fromkeys(["Env"] + names))
        charts.append(Chart(f"C{c}", instances, tuple(pre), tuple(main), rng.random() < 0.2))
    return SystemModel(tuple(objects), EXTERNALS, tuple(charts))


def random_finite_expr(rng: random.Random, depth: int = 3):
    """Random star-free expression over ``a``/``b``; may contain a parallel group."""
    if depth == 0 or rng.random() < 0.3:
        return Atom(rng.choice(EXTERNALS)) if rng.random() < 0.9 else Empty()
    kind = rng.random()
    left = random_finite_expr(rng, depth - 1)
    right = random_finite_expr(rng, depth - 1)
    if kind < 0.4:
        return Union(left, right)
    if kind < 0.9:
        return Concat(left, right)
    return Par(Atom(rng.choice(EXTERNALS)), Atom(rng.choice(EXTERNALS)))


def longest_word(node) -> int:
    """Length of the longest word of a star-free expression."""
    if isinstance(node, Empty):
        return 0
    if isinstance(node, Atom):
        return 1
    if isinstance(node, Test):
        return 2
    if isinstance(node, Union):
        return max(longest_word(node.left), longest_word(node.right))
    if isinstance(node, (Concat, Shuffle)):
        return longest_word(node.left) + longest_word(node.right)
    if isinstance(node, Par):
        return longest_word(node.left) + longest_word(node.right) + 2
    raise TypeError(node)


def random_language(rng: random.Random, max_len: int = 4):
    """A star-free expression all of whose words have length <= max_len."""
    while True:
        node = random_finite_expr(rng)
        if longest_word(node) <= max_len:
            return node
