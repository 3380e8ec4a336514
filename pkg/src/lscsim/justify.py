"""Evidence for verdicts: super-state transition graphs, AG/EF checks, traces.

Graph nodes are stable super states merged by ``(q, rl)``.  Each edge
stands for one observed super-step; a parallel group ``beginP ... endP`` is a
single edge whose label lists the group's events in execution order.
Marker events never show up in labels, so a ``testSF`` super-step gives an
edge with an empty label.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from lscsim.eesl import Grammar, Var
from lscsim.engine import DEFAULT_MAX_INTERNAL_STEPS, SimState, initial_state, superstep_detail
from lscsim.model import BEGIN_P, END_P, MARKER_EVENTS, SystemModel
from lscsim.playtree import Trace, UnsupportedGrammarError, Verdict

AG = "AG"
EF = "EF"

# events allowed inside one parallel group before we give up
GROUP_LIMIT = 64


class GraphError(RuntimeError):
    """The transition graph cannot be built for this run."""


class UnknownPropertyError(KeyError):
    pass


@dataclass
class TransitionGraph:
    nodes: dict = field(default_factory=dict)  # (q, rl) -> node index, in discovery order
    states: list = field(default_factory=list)
    edges: dict = field(default_factory=dict)  # (src, dst) -> set of labels
    marks: dict = field(default_factory=dict)  # node index -> set of chart names
    testing_charts: tuple = ()

    def add_node(self, state: SimState) -> int:
        key = (state.q, state.rl)
        if key not in self.nodes:
            self.nodes[key] = len(self.states)
            self.states.append(state)
            self.marks[self.nodes[key]] = set()
        return self.nodes[key]

    def add_edge(self, src: int, dst: int, label: str) -> None:
        self.edges.setdefault((src, dst), set()).add(label)

    def node_text(self, i: int) -> str:
        return self.states[i].describe()

    def edge_label(self, src: int, dst: int) -> str:
        return ";".join(sorted(x for x in self.edges[(src, dst)] if x))

    def satisfied(self, i: int, prop: str | None = None) -> bool:
        if prop is None:
            return bool(self.marks[i])
        return prop in self.marks[i]

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class CtlQuery:
    mode: str
    property: str

    def __post_init__(self):
        if self.mode not in (AG, EF):
            raise ValueError(f"unknown CTL mode {self.mode!r}")


def build_transition_graph(
    model: SystemModel,
    grammar: Grammar,
    max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS,
    verdict: Verdict | None = None,
) -> TransitionGraph:
    """Breadth-first exploration of every stable super state the input can reach."""
    if verdict is not None and not verdict.consistent:
        raise GraphError("no transition graph for an inconsistent run")
    if not grammar.is_right_linear():
        raise UnsupportedGrammarError("only right-linear grammars are supported")

    graph = TransitionGraph(testing_charts=tuple(model.testing_charts))
    root = initial_state(model)
    top = graph.add_node(root)
    # (state, w, group depth, source node, label so far, charts that emitted propertyHold)
    start = (root, (grammar.start,), 0, top, (), frozenset())
    queue = deque([start])
    seen = {start}

    def push(item):
        if item not in seen:
            seen.add(item)
            queue.append(item)

    while queue:
        state, w, depth, src, label, held = queue.popleft()
        if not w:
            continue
        head = w[0]
        if isinstance(head, Var):
            for p in grammar.productions_for(head):
                push((state, p.body + w[1:], depth, src, label, held))
            continue
        results = superstep_detail(model, state, head, max_internal_steps)
        for nxt, emitted in sorted(results, key=lambda r: (r[0], sorted(r[1]))):
            if nxt.violated:
                raise GraphError(f"violation reached after {head!r}; run the consistency check first")
            d = depth + (head == BEGIN_P) - (head == END_P)
            lab = label if head in MARKER_EVENTS else label + (head,)
            hold = held | emitted
            if d == 0:
                dst = graph.add_node(nxt)
                graph.marks[dst] |= hold
                graph.add_edge(src, dst, ",".join(lab))
                push((nxt, w[1:], 0, dst, (), frozenset()))
            else:
                if len(lab) > GROUP_LIMIT:
                    raise GraphError("parallel group does not end")
                push((nxt, w[1:], d, src, lab, hold))
    return graph


def eval_ctl(graph: TransitionGraph, query: CtlQuery) -> bool:
    if query.property not in graph.testing_charts:
        raise UnknownPropertyError(f"no testing chart named {query.property!r}")
    marks = [graph.satisfied(i, query.property) for i in range(len(graph))]
    if query.mode == AG:
        return all(marks)
    return any(marks)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(graph: TransitionGraph, prop: str | None = None) -> str:
    """DOT text; nodes satisfying ``prop`` (or any property) are filled green."""
    lines = ["digraph supersteps {", "  rankdir=LR;", "  node [shape=box];"]
    for i in range(len(graph)):
        attrs = f"label={_quote(graph.node_text(i))}"
        if graph.satisfied(i, prop):
            attrs += ", style=filled, fillcolor=green"
        lines.append(f"  n{i} [{attrs}];")
    for src, dst in sorted(graph.edges):
        lines.append(f"  n{src} -> n{dst} [label={_quote(graph.edge_label(src, dst))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_trace(t: Trace) -> str:
    parts = []
    for item in t.items():
        parts.append("[" + ",".join(item) + "]" if isinstance(item, tuple) else item)
    return "·".join(parts)
