"""External event sequence expressions and their right-linear grammars.

Surface syntax (ASCII forms in parentheses)::

    S ::= S + S | S · S (S . S, or juxtaposition) | S* | (S)
        | S ‖ S (S || S) | a | ⟨a⟩ (<a>) | λ

Precedence from tightest: ``*``, ``·``, ``‖``, ``+``; binary operators are
left-associative.  Compilation goes through a Thompson NFA, ε-elimination,
subset construction and Moore minimisation, and reads one production per
DFA transition off the result, so every compiled grammar is right-linear and
unambiguous.
"""
from __future__ import annotations

import re
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable
from typing import Union as OneOf

from lscsim.model import BEGIN_P, END_P, MARKER_EVENTS, RESERVED_NAMES, TEST_SF


class EeslError(ValueError):
    pass


class EeslSyntaxError(EeslError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"at {pos}: {message}")
        self.pos = pos


# ---------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Union:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Concat:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Star:
    inner: "Node"


@dataclass(frozen=True)
class Par:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Test:
    atom: Atom


@dataclass(frozen=True)
class Shuffle:
    """Interleavings of two sub-languages; only produced by :func:`desugar`."""

    left: "Node"
    right: "Node"


Node = OneOf[Empty, Atom, Union, Concat, Star, Par, Test, Shuffle]


def to_text(node: Node) -> str:
    """Fully parenthesised ASCII rendering that :func:`parse_eesl` reads back."""
    if isinstance(node, Empty):
        return "λ"
    if isinstance(node, Atom):
        return node.name
    if isinstance(node, Test):
        return f"<{node.atom.name}>"
    if isinstance(node, Star):
        return f"({to_text(node.inner)})*"
    op = {Union: " + ", Concat: " . ", Par: " || ", Shuffle: " ~ "}[type(node)]
    return f"({to_text(node.left)}{op}{to_text(node.right)})"


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\|\||‖|[()*+.·⋅<>⟨⟩]|λ|ε))"
)
_OPS = {"‖": "||", "·": ".", "⋅": ".", "⟨": "<", "⟩": ">", "ε": "λ"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise EeslSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.group("ident") is not None:
            name = m.group("ident")
            toks.append(("λ", "λ", m.start("ident")) if name == "lambda" else ("ident", name, m.start("ident")))
        else:
            op = m.group("op")
            toks.append((_OPS.get(op, op), op, m.start("op")))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, alphabet):
        self.toks = _tokenize(text)
        self.i = 0
        self.alphabet = alphabet

    @property
    def kind(self) -> str:
        return self.toks[self.i][0]

    def fail(self, msg: str):
        kind, text, pos = self.toks[self.i]
        raise EeslSyntaxError(f"{msg}, found {text or 'end of input'!r}", pos)

    def take(self, kind: str):
        if self.kind != kind:
            self.fail(f"expected {kind!r}")
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.union()
        if self.kind != "eof":
            self.fail("unexpected token")
        return node

    def union(self) -> Node:
        node = self.par()
        while self.kind == "+":
            self.i += 1
            node = Union(node, self.par())
        return node

    def par(self) -> Node:
        node = self.concat()
        while self.kind == "||":
            self.i += 1
            node = Par(node, self.concat())
        return node

    def concat(self) -> Node:
        node = self.postfix()
        while self.kind in (".", "ident", "(", "<", "λ"):
            if self.kind == ".":
                self.i += 1
            node = Concat(node, self.postfix())
        return node

    def postfix(self) -> Node:
        node = self.primary()
        while self.kind == "*":
            self.i += 1
            node = Star(node)
        return node

    def primary(self) -> Node:
        kind = self.kind
        if kind == "ident":
            return self.atom()
        if kind == "λ":
            self.i += 1
            return Empty()
        if kind == "(":
            self.i += 1
            node = self.union()
            self.take(")")
            return node
        if kind == "<":
            self.i += 1
            atom = self.atom()
            self.take(">")
            return Test(atom)
        self.fail("expected an event, '(' , '<' or 'λ'")

    def atom(self) -> Atom:
        _, name, pos = self.take("ident")
        if self.alphabet is not None and name not in self.alphabet and name not in RESERVED_NAMES:
            raise EeslError(f"unknown event {name!r} at {pos}")
        return Atom(name)


def parse_eesl(text: str, alphabet: Iterable[str] | None = None) -> Node:
    """Parse an expression; names are checked against ``alphabet`` when given."""
    return _Parser(text, None if alphabet is None else frozenset(alphabet)).parse()


# ---------------------------------------------------------------------------
# rewrites


def desugar(node: Node) -> Node:
    """Rewrite ``‖`` and ``⟨⟩`` into plain regular operators (plus Shuffle)."""
    if isinstance(node, (Empty, Atom, Shuffle)):
        return node
    if isinstance(node, Test):
        return Concat(Atom(TEST_SF), node.atom)
    if isinstance(node, Star):
        return Star(desugar(node.inner))
    left, right = desugar(node.left), desugar(node.right)
    if isinstance(node, Par):
        if isinstance(left, Atom) and isinstance(right, Atom):
            mixed = Union(Concat(left, right), Concat(right, left))
        else:
            mixed = Shuffle(left, right)
        body = Union(left, Union(right, mixed))
        return Concat(Atom(BEGIN_P), Concat(body, Atom(END_P)))
    return type(node)(left, right)


def apply_testing_mode(node: Node) -> Node:
    """Put a ``testSF`` trigger before every event and every parallel group.

    Apply once, before :func:`desugar`.
    """
    if isinstance(node, Atom):
        if node.name in RESERVED_NAMES:
            return node
        return Concat(Atom(TEST_SF), node)
    if isinstance(node, Par):
        return Concat(Atom(TEST_SF), node)
    if isinstance(node, (Empty, Test)):
        return node
    if isinstance(node, Star):
        return Star(apply_testing_mode(node.inner))
    return type(node)(apply_testing_mode(node.left), apply_testing_mode(node.right))


# ---------------------------------------------------------------------------
# automata


@dataclass
class Nfa:
    """Thompson-style NFA; label ``None`` is an ε-move."""

    n: int = 0
    start: int = 0
    accepting: set = field(default_factory=set)
    edges: list = field(default_factory=list)  # (src, label, dst)

    def new_state(self) -> int:
        self.n += 1
        return self.n - 1

    def add(self, src: int, label, dst: int) -> None:
        self.edges.append((src, label, dst))


def thompson(node: Node) -> Nfa:
    nfa = Nfa()
    start, end = _build(nfa, node)
    nfa.start = start
    nfa.accepting = {end}
    return nfa


def _build(nfa: Nfa, node: Node) -> tuple[int, int]:
    s, e = nfa.new_state(), nfa.new_state()
    if isinstance(node, Empty):
        nfa.add(s, None, e)
    elif isinstance(node, Atom):
        nfa.add(s, node.name, e)
    elif isinstance(node, Union):
        for part in (node.left, node.right):
            ps, pe = _build(nfa, part)
            nfa.add(s, None, ps)
            nfa.add(pe, None, e)
    elif isinstance(node, Concat):
        ls, le = _build(nfa, node.left)
        rs, re_ = _build(nfa, node.right)
        nfa.add(s, None, ls)
        nfa.add(le, None, rs)
        nfa.add(re_, None, e)
    elif isinstance(node, Star):
        is_, ie = _build(nfa, node.inner)
        nfa.add(s, None, e)
        nfa.add(s, None, is_)
        nfa.add(ie, None, is_)
        nfa.add(ie, None, e)
    elif isinstance(node, Shuffle):
        _embed_shuffle(nfa, node, s, e)
    else:
        raise EeslError(f"{type(node).__name__} must be desugared before compilation")
    return s, e


def _embed_shuffle(nfa: Nfa, node: Shuffle, s: int, e: int) -> None:
    left = eliminate_epsilon(thompson(node.left))
    right = eliminate_epsilon(thompson(node.right))
    ids = {}

    def state(pair):
        if pair not in ids:
            ids[pair] = nfa.new_state()
            todo.append(pair)
        return ids[pair]

    todo: list = []
    nfa.add(s, None, state((left.start, right.start)))
    while todo:
        p, q = pair = todo.pop()
        src = ids[pair]
        for label, dsts in sorted(left.delta.get(p, {}).items()):
            for d in sorted(dsts):
                nfa.add(src, label, state((d, q)))
        for label, dsts in sorted(right.delta.get(q, {}).items()):
            for d in sorted(dsts):
                nfa.add(src, label, state((p, d)))
        if p in left.accepting and q in right.accepting:
            nfa.add(src, None, e)


@dataclass
class EpsFreeNfa:
    start: int
    accepting: frozenset
    delta: dict  # state -> {label: set(states)}


def eliminate_epsilon(nfa: Nfa) -> EpsFreeNfa:
    eps: dict[int, list[int]] = {}
    moves: dict[int, list[tuple[str, int]]] = {}
    for src, label, dst in nfa.edges:
        if label is None:
            eps.setdefault(src, []).append(dst)
        else:
            moves.setdefault(src, []).append((label, dst))

    def closure(q: int) -> set[int]:
        seen = {q}
        stack = [q]
        while stack:
            for d in eps.get(stack.pop(), ()):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen

    delta: dict = {}
    accepting = set()
    todo = [nfa.start]
    seen = {nfa.start}
    while todo:
        q = todo.pop()
        cl = closure(q)
        if cl & nfa.accepting:
            accepting.add(q)
        out: dict = {}
        for p in cl:
            for label, d in moves.get(p, ()):
                out.setdefault(label, set()).add(d)
        delta[q] = out
        for dsts in out.values():
            for d in dsts:
                if d not in seen:
                    seen.add(d)
                    todo.append(d)
    return EpsFreeNfa(nfa.start, frozenset(accepting), delta)


@dataclass
class Dfa:
    """Complete DFA over ``alphabet``; states are ``0..n-1``."""

    alphabet: tuple[str, ...]
    start: int
    accepting: frozenset
    delta: list  # delta[state][k] = successor on alphabet[k]

    @property
    def n(self) -> int:
        return len(self.delta)

    def accepts(self, word: Iterable[str]) -> bool:
        q = self.start
        index = {a: k for k, a in enumerate(self.alphabet)}
        for a in word:
            if a not in index:
                return False
            q = self.delta[q][index[a]]
        return q in self.accepting


def determinize(nfa: EpsFreeNfa) -> Dfa:
    alphabet = tuple(sorted({a for out in nfa.delta.values() for a in out}))
    start = frozenset({nfa.start})
    ids = {start: 0}
    order = [start]
    delta = []
    k = 0
    while k < len(order):
        subset = order[k]
        row = []
        for a in alphabet:
            nxt = frozenset(d for q in subset for d in nfa.delta.get(q, {}).get(a, ()))
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
            row.append(ids[nxt])
        delta.append(row)
        k += 1
    accepting = frozenset(i for i, s in enumerate(order) if s & nfa.accepting)
    return Dfa(alphabet, 0, accepting, delta)


def minimize(dfa: Dfa) -> Dfa:
    """Moore partition refinement, then breadth-first renumbering."""
    block = [1 if q in dfa.accepting else 0 for q in range(dfa.n)]
    while True:
        sig = [(block[q], tuple(block[d] for d in dfa.delta[q])) for q in range(dfa.n)]
        ids: dict = {}
        new = [ids.setdefault(s, len(ids)) for s in sig]
        if len(ids) == len(set(block)):
            block = new
            break
        block = new
    # renumber blocks in BFS order from the start block
    order = {block[dfa.start]: 0}
    rep = {}
    for q in range(dfa.n):
        rep.setdefault(block[q], q)
    queue = deque([block[dfa.start]])
    while queue:
        b = queue.popleft()
        for d in dfa.delta[rep[b]]:
            if block[d] not in order:
                order[block[d]] = len(order)
                queue.append(block[d])
    delta = [None] * len(order)
    for b, i in order.items():
        delta[i] = [order[block[d]] for d in dfa.delta[rep[b]]]
    accepting = frozenset(order[block[q]] for q in dfa.accepting if block[q] in order)
    return Dfa(dfa.alphabet, 0, accepting, delta)


# ---------------------------------------------------------------------------
# grammars


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self):
        return self.name


Symbol = OneOf[str, Var]


@dataclass(frozen=True)
class Production:
    head: Var
    body: tuple  # of Symbol

    def __str__(self):
        return f"{self.head} -> {' '.join(map(str, self.body)) or 'λ'}"


@dataclass(frozen=True)
class Grammar:
    variables: tuple[Var, ...]
    terminals: tuple[str, ...]
    start: Var
    productions: tuple[Production, ...]

    @cached_property
    def by_head(self) -> dict:
        out: dict = {v: [] for v in self.variables}
        for p in self.productions:
            out.setdefault(p.head, []).append(p)
        return out

    def productions_for(self, var: Var) -> list[Production]:
        return self.by_head.get(var, [])

    def is_right_linear(self) -> bool:
        for p in self.productions:
            body = p.body
            if len(body) == 0:
                continue
            if len(body) == 1 and not isinstance(body[0], Var):
                continue
            if len(body) == 2 and not isinstance(body[0], Var) and isinstance(body[1], Var):
                continue
            return False
        return True

    def dump(self) -> str:
        """One line per variable: ``A -> a B | λ``."""
        lines = []
        for v in self.variables:
            alts = [" ".join(map(str, p.body)) or "λ" for p in self.productions_for(v)]
            lines.append(f"{v} -> {' | '.join(alts)}" if alts else f"{v} ->")
        return "\n".join(lines) + "\n"

    def dead_variables(self) -> list[Var]:
        return [v for v in self.variables if not self.productions_for(v)]


def dfa_to_grammar(dfa: Dfa) -> Grammar:
    # keep only states that can still reach acceptance
    live = set(dfa.accepting)
    changed = True
    while changed:
        changed = False
        for q in range(dfa.n):
            if q not in live and any(d in live for d in dfa.delta[q]):
                live.add(q)
                changed = True
    names = {}
    queue = deque([dfa.start])
    names[dfa.start] = Var("V0")
    while queue:
        q = queue.popleft()
        for d in dfa.delta[q]:
            if d in live and d not in names:
                names[d] = Var(f"V{len(names)}")
                queue.append(d)
    prods = []
    used = set()
    for q, var in names.items():
        if q in dfa.accepting:
            prods.append(Production(var, ()))
        for a, d in zip(dfa.alphabet, dfa.delta[q]):
            if d in live:
                prods.append(Production(var, (a, names[d])))
                used.add(a)
    variables = tuple(sorted(names.values(), key=lambda v: int(v.name[1:])))
    prods.sort(key=lambda p: (int(p.head.name[1:]), len(p.body) > 0, p.body[:1]))
    return Grammar(variables, tuple(sorted(used)), names[dfa.start], tuple(prods))


def _check_plain(node: Node) -> None:
    if isinstance(node, (Par, Test)):
        raise EeslError(f"{type(node).__name__} must be desugared before compilation")
    for child in ("left", "right", "inner"):
        if hasattr(node, child) and not isinstance(node, Shuffle):
            _check_plain(getattr(node, child))


def compile_to_dfa(node: Node) -> Dfa:
    _check_plain(node)
    return minimize(determinize(eliminate_epsilon(thompson(node))))


def compile_to_grammar(node: Node) -> Grammar:
    """Right-linear, unambiguous grammar for a desugared expression."""
    return dfa_to_grammar(compile_to_dfa(node))


def compile_eesl(text: str, alphabet: Iterable[str] | None = None, testing: bool = False) -> Grammar:
    node = parse_eesl(text, alphabet)
    if testing:
        node = apply_testing_mode(node)
    return compile_to_grammar(desugar(node))


# ---------------------------------------------------------------------------
# grammar enumeration (used for checks and debugging)


def leftmost_derivations(grammar: Grammar, max_len: int) -> Counter:
    """Count leftmost derivations of every word of length ``<= max_len``.

    Sentential forms whose terminal count exceeds ``max_len`` are pruned;
    this terminates for grammars without ε/unit cycles, which includes every
    compiled grammar.
    """
    counts: Counter = Counter()
    stack = [((), (grammar.start,))]
    while stack:
        done, rest = stack.pop()
        if not rest:
            counts[done] += 1
            continue
        head = rest[0]
        if not isinstance(head, Var):
            if len(done) < max_len:
                stack.append((done + (head,), rest[1:]))
            continue
        for p in grammar.productions_for(head):
            form = p.body + rest[1:]
            if len(done) + sum(1 for s in form if not isinstance(s, Var)) <= max_len:
                stack.append((done, form))
    return counts


def grammar_words(grammar: Grammar, max_len: int) -> set[tuple[str, ...]]:
    return set(leftmost_derivations(grammar, max_len))


def marker_free(word: Iterable[str]) -> tuple[str, ...]:
    return tuple(a for a in word if a not in MARKER_EVENTS)
