"""System model, chart structure and the textual chart DSL.

A model file looks like::

    object RBC { var conf in {false, true, abort} init false; }
    external createOrder, createAbort, createConfirm;

    chart CreateOrder {
      instances: Env, RBC, STC;
      prechart:
        msg Env->RBC createOrder hot;
      main:
        assign RBC.conf := false;
        msg RBC->STC sendOrder hot;
    }

Semicolons are optional; ``#`` and ``//`` start comments.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence, Union

BEGIN_P = "beginP"
END_P = "endP"
TEST_SF = "testSF"
PROPERTY_HOLD = "propertyHold"
SYNC = "SYNC"

#: Events the simulator generates itself from the input language.
MARKER_EVENTS = frozenset({BEGIN_P, END_P, TEST_SF})
RESERVED_NAMES = frozenset({BEGIN_P, END_P, TEST_SF, PROPERTY_HOLD, SYNC})

ENV = "Env"
PAR_CONTROL = "ParControl"
TEST_CONTROL = "testControl"
VIRTUAL_LIFELINES = frozenset({ENV, PAR_CONTROL, TEST_CONTROL})


class ModelError(Exception):
    """Raised when a chart-DSL source cannot be turned into a valid model."""


class DslSyntaxError(ModelError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class SemanticError(ModelError):
    def __init__(self, diagnostics: Sequence["Diagnostic"]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = list(diagnostics)


class Temp(str, Enum):
    HOT = "hot"
    COLD = "cold"


@dataclass(frozen=True)
class VarDecl:
    name: str
    domain: tuple[str, ...]
    init: str


@dataclass(frozen=True)
class ObjectDecl:
    name: str
    vars: tuple[VarDecl, ...] = ()


@dataclass(frozen=True)
class VarRef:
    obj: str
    var: str

    def __str__(self):
        return f"{self.obj}.{self.var}"


Operand = Union[VarRef, str]


@dataclass(frozen=True)
class Comparison:
    left: Operand
    op: str  # "=" or "!="
    right: Operand

    def evaluate(self, q: dict) -> bool:
        lhs = q[(self.left.obj, self.left.var)] if isinstance(self.left, VarRef) else self.left
        rhs = q[(self.right.obj, self.right.var)] if isinstance(self.right, VarRef) else self.right
        return (lhs == rhs) if self.op == "=" else (lhs != rhs)

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


# A predicate is a conjunction; a term is a Comparison or a boolean constant.
Predicate = tuple


def eval_predicate(pred: Predicate, q: dict) -> bool:
    return all(t if isinstance(t, bool) else t.evaluate(q) for t in pred)


def format_predicate(pred: Predicate) -> str:
    if not pred:
        return "true"
    return " && ".join(("true" if t else "false") if isinstance(t, bool) else str(t) for t in pred)


@dataclass(frozen=True)
class Message:
    src: str
    dst: str
    event: str
    temp: Temp = Temp.HOT

    @property
    def lifelines(self) -> tuple[str, ...]:
        return (self.src,) if self.src == self.dst else (self.src, self.dst)


@dataclass(frozen=True)
class Condition:
    instance: str
    predicate: Predicate
    temp: Temp = Temp.HOT

    @property
    def lifelines(self) -> tuple[str, ...]:
        return (self.instance,)


@dataclass(frozen=True)
class Assignment:
    instance: str
    var: str
    value: str

    @property
    def lifelines(self) -> tuple[str, ...]:
        return (self.instance,)


@dataclass(frozen=True)
class Sync:
    instances: tuple[str, ...]

    @property
    def lifelines(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.instances))


Element = Union[Message, Condition, Assignment, Sync]


@dataclass(frozen=True)
class ChartLayout:
    """Per-lifeline placement of a chart's elements.

    A cut is a tuple with one location index per lifeline, in the chart's
    instance order.
    """

    elements: tuple
    n_pre: int
    lanes: tuple[tuple[int, ...], ...]
    slots: tuple[tuple[tuple[int, int], ...], ...]
    pre_end: tuple[int, ...]
    triggers: frozenset
    message_events: frozenset

    @property
    def initial_cut(self) -> tuple[int, ...]:
        return (0,) * len(self.lanes)

    @property
    def final_cut(self) -> tuple[int, ...]:
        return tuple(len(lane) for lane in self.lanes)

    def is_enabled(self, i: int, cut: Sequence[int]) -> bool:
        return all(cut[l] == p for l, p in self.slots[i])

    def is_passed(self, i: int, cut: Sequence[int]) -> bool:
        l, p = self.slots[i][0]
        return cut[l] > p

    def in_main(self, cut: Sequence[int]) -> bool:
        return all(c >= e for c, e in zip(cut, self.pre_end))

    def frontier(self, cut: Sequence[int]) -> list[int]:
        """Elements whose next location is the current one on every lifeline."""
        seen = []
        for l, lane in enumerate(self.lanes):
            if cut[l] < len(lane):
                i = lane[cut[l]]
                if i not in seen and self.is_enabled(i, cut):
                    seen.append(i)
        return sorted(seen)

    def advance(self, i: int, cut: Sequence[int]) -> tuple[int, ...]:
        new = list(cut)
        for l, _ in self.slots[i]:
            new[l] += 1
        return tuple(new)

    def is_legal(self, cut: Sequence[int]) -> bool:
        if len(cut) != len(self.lanes):
            return False
        if any(c < 0 or c > len(lane) for c, lane in zip(cut, self.lanes)):
            return False
        for slots in self.slots:
            passed = {cut[l] > p for l, p in slots}
            if len(passed) > 1:
                return False
        return True

    def legal_cuts(self) -> list[tuple[int, ...]]:
        ranges = [range(len(lane) + 1) for lane in self.lanes]
        return [c for c in itertools.product(*ranges) if self.is_legal(c)]


@dataclass(frozen=True)
class Chart:
    name: str
    instances: tuple[str, ...]
    prechart: tuple = ()
    main: tuple = ()
    atomic: bool = False

    @cached_property
    def layout(self) -> ChartLayout:
        elements = tuple(self.prechart) + tuple(self.main)
        index = {name: k for k, name in enumerate(self.instances)}
        lanes: list[list[int]] = [[] for _ in self.instances]
        slots = []
        for i, el in enumerate(elements):
            s = []
            for inst in el.lifelines:
                l = index[inst]
                s.append((l, len(lanes[l])))
                lanes[l].append(i)
            slots.append(tuple(s))
        pre_end = tuple(sum(1 for i in lane if i < len(self.prechart)) for lane in lanes)
        first = range(len(self.prechart)) if self.prechart else range(len(elements))
        triggers = frozenset(
            elements[i].event
            for i in first
            if isinstance(elements[i], Message) and all(p == 0 for _, p in slots[i])
        )
        return ChartLayout(
            elements=elements,
            n_pre=len(self.prechart),
            lanes=tuple(tuple(lane) for lane in lanes),
            slots=tuple(slots),
            pre_end=pre_end,
            triggers=triggers,
            message_events=frozenset(e.event for e in elements if isinstance(e, Message)),
        )

    @property
    def emits_property(self) -> bool:
        return any(isinstance(e, Message) and e.event == PROPERTY_HOLD for e in self.main)


@dataclass(frozen=True)
class SystemModel:
    objects: tuple[ObjectDecl, ...] = ()
    external_events: tuple[str, ...] = ()
    charts: tuple[Chart, ...] = ()

    @cached_property
    def domains(self) -> dict[tuple[str, str], tuple[str, ...]]:
        return {(o.name, v.name): v.domain for o in self.objects for v in o.vars}

    @cached_property
    def chart_map(self) -> dict[str, Chart]:
        return {c.name: c for c in self.charts}

    @cached_property
    def sigma(self) -> frozenset:
        return frozenset(self.external_events)

    @cached_property
    def internal_events(self) -> frozenset:
        names = set()
        for c in self.charts:
            names |= c.layout.message_events
        return frozenset(names - self.sigma - MARKER_EVENTS)

    @cached_property
    def known_events(self) -> frozenset:
        return self.sigma | self.internal_events | MARKER_EVENTS | {PROPERTY_HOLD}

    @property
    def testing_charts(self) -> list[str]:
        return [c.name for c in self.charts if c.emits_property]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    where: str = ""

    def __str__(self):
        return f"[{self.code}] {self.where}: {self.message}" if self.where else f"[{self.code}] {self.message}"


# ---------------------------------------------------------------------------
# validation


def _operand_vars(term) -> list[VarRef]:
    if isinstance(term, bool):
        return []
    return [o for o in (term.left, term.right) if isinstance(o, VarRef)]


def validate_model(model: SystemModel, states: Iterable = ()) -> list[Diagnostic]:
    """Check every structural invariant of ``model``.

    ``states`` may hold simulator states (anything with ``q`` and ``rl``
    attributes); their values and running-copy cuts are checked as well.
    """
    diags: list[Diagnostic] = []
    add = lambda code, msg, where="": diags.append(Diagnostic(code, msg, where))

    seen_objs = set()
    for obj in model.objects:
        if obj.name in seen_objs:
            add("object-duplicate", f"object {obj.name!r} declared twice", obj.name)
        seen_objs.add(obj.name)
        if obj.name in VIRTUAL_LIFELINES or obj.name in RESERVED_NAMES:
            add("object-reserved", f"{obj.name!r} is a reserved name", obj.name)
        seen_vars = set()
        for var in obj.vars:
            where = f"{obj.name}.{var.name}"
            if var.name in seen_vars:
                add("var-duplicate", "variable declared twice", where)
            seen_vars.add(var.name)
            if not var.domain:
                add("domain-empty", "domain is empty", where)
            elif var.init not in var.domain:
                add("init-domain", f"initial value {var.init!r} not in domain", where)

    seen_events = set()
    for ev in model.external_events:
        if ev in RESERVED_NAMES:
            add("event-reserved", f"{ev!r} is reserved and cannot be an external event", ev)
        if ev in seen_events:
            add("event-duplicate", f"external event {ev!r} declared twice", ev)
        seen_events.add(ev)

    domains = model.domains
    seen_charts = set()
    for chart in model.charts:
        _validate_chart(chart, seen_objs, domains, add)
        if chart.name in seen_charts:
            add("chart-duplicate", f"chart {chart.name!r} declared twice", chart.name)
        seen_charts.add(chart.name)

    if not diags:
        for k, state in enumerate(states):
            _validate_state(model, state, f"state[{k}]", add)
    return diags


def _validate_chart(chart: Chart, objects: set, domains: dict, add) -> None:
    where = chart.name
    lifelines = set()
    for inst in chart.instances:
        if inst in lifelines:
            add("lifeline-duplicate", f"lifeline {inst!r} listed twice", where)
        lifelines.add(inst)
        if inst not in objects and inst not in VIRTUAL_LIFELINES:
            add("lifeline-unknown", f"unknown object {inst!r}", where)
    if not chart.prechart and not chart.main:
        add("chart-empty", "prechart and main chart are both empty", where)

    for part, elements in (("prechart", chart.prechart), ("main", chart.main)):
        for k, el in enumerate(elements):
            loc = f"{where}.{part}[{k}]"
            missing = [i for i in el.lifelines if i not in lifelines]
            if missing:
                add("element-lifeline", f"references missing lifeline(s) {', '.join(missing)}", loc)
            if isinstance(el, Message):
                if el.event == SYNC:
                    add("event-reserved", "SYNC cannot be used as a message name", loc)
            elif isinstance(el, Condition):
                for term in el.predicate:
                    for ref in _operand_vars(term):
                        if (ref.obj, ref.var) not in domains:
                            add("condition-var", f"unknown variable {ref}", loc)
                        elif ref.obj not in lifelines:
                            add("condition-lifeline", f"{ref.obj} is not a lifeline of the chart", loc)
                    if isinstance(term, Comparison):
                        _check_literal_operands(term, domains, loc, add)
            elif isinstance(el, Assignment):
                if part == "prechart":
                    add("prechart-assignment", "assignments are not allowed in a prechart", loc)
                key = (el.instance, el.var)
                if key not in domains:
                    add("assign-owner", f"{el.instance} has no variable {el.var!r}", loc)
                elif el.value not in domains[key]:
                    add("assign-domain", f"{el.value!r} not in domain of {el.instance}.{el.var}", loc)
            elif isinstance(el, Sync):
                if not el.instances:
                    add("sync-empty", "sync lists no instances", loc)


def _check_literal_operands(term: Comparison, domains: dict, loc: str, add) -> None:
    pairs = ((term.left, term.right), (term.right, term.left))
    for ref, other in pairs:
        if isinstance(ref, VarRef) and isinstance(other, str):
            dom = domains.get((ref.obj, ref.var))
            if dom is not None and other not in dom:
                add("condition-domain", f"{other!r} not in domain of {ref}", loc)


def _validate_state(model: SystemModel, state, where: str, add) -> None:
    domains = model.domains
    q = dict(state.q)
    for key, value in q.items():
        if key not in domains:
            add("state-var", f"unknown variable {key[0]}.{key[1]}", where)
        elif value not in domains[key]:
            add("state-domain", f"{value!r} not in domain of {key[0]}.{key[1]}", where)
    for copy in state.rl:
        chart = model.chart_map.get(copy.chart)
        loc = f"{where}.{copy.chart}"
        if chart is None:
            add("copy-chart", f"unknown chart {copy.chart!r}", loc)
            continue
        lay = chart.layout
        if not lay.is_legal(copy.cut):
            add("cut-illegal", f"cut {copy.cut} is not downward-closed", loc)
            continue
        active = lay.in_main(copy.cut)
        if active != (copy.mode == "Active"):
            add("copy-mode", f"mode {copy.mode} does not match cut {copy.cut}", loc)


# ---------------------------------------------------------------------------
# DSL parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>(?:\#|//)[^\n]*)
  | (?P<punct>->|:=|!=|≠|&&|∧|[{}(),;:.=&])
  | (?P<ident>[A-Za-z0-9_]+)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"object", "var", "in", "init", "external", "chart", "atomic", "instances",
             "prechart", "main", "msg", "cond", "assign", "sync"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("punct", "ident"):
            toks.append(_Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise DslSyntaxError(f"{msg}, found {found!r}", tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "eof":
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        tok = self.tok
        if not self.accept(text):
            self.error(f"expected {text!r}")
        return tok

    def ident(self, what: str = "identifier") -> str:
        tok = self.tok
        if tok.kind != "ident":
            self.error(f"expected {what}")
        self.i += 1
        return tok.text

    def ident_list(self) -> list[str]:
        names = [self.ident()]
        while self.accept(","):
            names.append(self.ident())
        return names

    def end_stmt(self):
        while self.accept(";"):
            pass

    # model := (object | external | chart)*
    def parse(self) -> SystemModel:
        objects, events, charts = [], [], []
        self.end_stmt()
        while self.tok.kind != "eof":
            if self.accept("object"):
                objects.append(self.object_decl())
            elif self.accept("external"):
                events.extend(self.ident_list())
            elif self.accept("chart"):
                charts.append(self.chart())
            else:
                self.error("expected 'object', 'external' or 'chart'")
            self.end_stmt()
        return SystemModel(tuple(objects), tuple(events), tuple(charts))

    def object_decl(self) -> ObjectDecl:
        name = self.ident("object name")
        self.expect("{")
        self.end_stmt()
        vars_ = []
        while self.accept("var"):
            vname = self.ident("variable name")
            self.expect("in")
            self.expect("{")
            domain = self.ident_list() if self.tok.text != "}" else []
            self.expect("}")
            self.expect("init")
            init = self.ident("initial value")
            vars_.append(VarDecl(vname, tuple(domain), init))
            self.end_stmt()
        self.expect("}")
        return ObjectDecl(name, tuple(vars_))

    def chart(self) -> Chart:
        name = self.ident("chart name")
        atomic = self.accept("atomic")
        self.expect("{")
        self.end_stmt()
        self.expect("instances")
        self.expect(":")
        instances = self.ident_list()
        self.end_stmt()
        prechart: list = []
        main: list = []
        if self.accept("prechart"):
            self.expect(":")
            self.end_stmt()
            prechart = self.elements()
        if self.accept("main"):
            self.expect(":")
            self.end_stmt()
            main = self.elements()
        self.expect("}")
        return Chart(name, tuple(instances), tuple(prechart), tuple(main), atomic)

    def temp(self, default: Temp = Temp.HOT) -> Temp:
        if self.accept("hot"):
            return Temp.HOT
        if self.accept("cold"):
            return Temp.COLD
        return default

    def elements(self) -> list:
        out = []
        while self.tok.text in ("msg", "cond", "assign", "sync"):
            kw = self.ident()
            if kw == "msg":
                src = self.ident("source instance")
                self.expect("->")
                dst = self.ident("target instance")
                event = self.ident("event name")
                out.append(Message(src, dst, event, self.temp()))
            elif kw == "cond":
                inst = self.ident("instance")
                self.expect("(")
                pred = self.predicate()
                self.expect(")")
                out.append(Condition(inst, pred, self.temp()))
            elif kw == "assign":
                inst = self.ident("instance")
                self.expect(".")
                var = self.ident("variable")
                self.expect(":=")
                out.append(Assignment(inst, var, self.ident("literal")))
            else:
                out.append(Sync(tuple(self.ident_list())))
            self.end_stmt()
        return out

    def predicate(self) -> tuple:
        terms = [self.term()]
        while self.tok.text in ("&&", "∧", "&", "and"):
            self.i += 1
            terms.append(self.term())
        return tuple(terms)

    def term(self):
        tok = self.tok
        if tok.text in ("true", "false") and self.peek().text not in ("=", "!=", "≠"):
            self.i += 1
            return tok.text == "true"
        left = self.operand()
        if self.accept("="):
            op = "="
        elif self.accept("!=") or self.accept("≠"):
            op = "!="
        else:
            self.error("expected '=' or '!='")
        return Comparison(left, op, self.operand())

    def operand(self) -> Operand:
        name = self.ident("operand")
        if self.accept("."):
            return VarRef(name, self.ident("variable"))
        return name


def parse_model(text: str) -> SystemModel:
    """Parse chart-DSL source into a validated :class:`SystemModel`.

    Raises :class:`DslSyntaxError` (with line/column) or
    :class:`SemanticError` (with the full diagnostic list).
    """
    model = _Parser(text).parse()
    diags = validate_model(model)
    if diags:
        raise SemanticError(diags)
    return model


def _format_element(el) -> str:
    if isinstance(el, Message):
        return f"msg {el.src}->{el.dst} {el.event} {el.temp.value};"
    if isinstance(el, Condition):
        return f"cond {el.instance} ({format_predicate(el.predicate)}) {el.temp.value};"
    if isinstance(el, Assignment):
        return f"assign {el.instance}.{el.var} := {el.value};"
    return f"sync {', '.join(el.instances)};"


def pretty_print(model: SystemModel) -> str:
    lines = []
    for obj in model.objects:
        lines.append(f"object {obj.name} {{")
        for v in obj.vars:
            lines.append(f"  var {v.name} in {{{', '.join(v.domain)}}} init {v.init};")
        lines.append("}")
    if model.external_events:
        lines.append(f"external {', '.join(model.external_events)};")
    for chart in model.charts:
        lines.append("")
        lines.append(f"chart {chart.name}{' atomic' if chart.atomic else ''} {{")
        lines.append(f"  instances: {', '.join(chart.instances)};")
        lines.append("  prechart:")
        lines.extend(f"    {_format_element(el)}" for el in chart.prechart)
        lines.append("  main:")
        lines.extend(f"    {_format_element(el)}" for el in chart.main)
        lines.append("}")
    return "\n".join(lines) + "\n"
