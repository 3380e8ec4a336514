"""Step and super-step semantics over simulator states.

A simulator state is ``(q, rl, violated)``: the object variable values, the
set of running chart copies, and the violation flag.  ``apply_step`` is the
single-event transition; ``superstep`` feeds one environment event and then
runs enabled internal events in every interleaving until nothing is left.

Rules for a message event ``e`` (``apply_step``):

1. every chart whose prechart can start with ``e`` gets a fresh copy, unless
   an identical fresh copy is already running;
2. every copy where ``e`` is enabled advances past it;
3. a copy that still expects ``e`` later but not now is out of order: a
   prechart copy is dropped, a main-chart copy is dropped when its cut is
   cold and sets the violation flag when its cut is hot;
4. copies that reach the end of their main chart are removed.

Conditions, assignments and syncs are copy-local steps.  A false condition
drops a prechart copy, exits a main chart when cold, and violates when hot.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from lscsim.model import (
    MARKER_EVENTS,
    PROPERTY_HOLD,
    Assignment,
    Chart,
    Condition,
    Message,
    Sync,
    SystemModel,
    Temp,
    eval_predicate,
    format_predicate,
)

PRE_ACTIVE = "PreActive"
ACTIVE = "Active"

EXTERNAL = "external"
INTERNAL = "internal"
HIDDEN = "hidden"

DEFAULT_MAX_INTERNAL_STEPS = 10_000


class DivergenceError(RuntimeError):
    """An internal-event chain did not reach a stable state."""


class EventError(ValueError):
    """An event name is not known to the model."""


class ContractError(RuntimeError):
    """An operation was called outside its precondition."""


@dataclass(frozen=True, order=True)
class RunningCopy:
    chart: str
    mode: str
    cut: tuple[int, ...]

    def __str__(self):
        return f"{self.chart}<{self.mode}@{','.join(map(str, self.cut))}>"


@dataclass(frozen=True, order=True)
class SimState:
    q: tuple  # sorted (((obj, var), value), ...)
    rl: tuple[RunningCopy, ...] = ()
    violated: bool = False

    @property
    def values(self) -> dict:
        return dict(self.q)

    def describe(self) -> str:
        vals = ", ".join(f"{o}.{v}={x}" for (o, v), x in self.q)
        text = "{" + vals + "}"
        if self.rl:
            text += " RL=[" + ", ".join(map(str, self.rl)) + "]"
        if self.violated:
            text += " VIOLATED"
        return text


@dataclass(frozen=True, order=True)
class SystemEvent:
    name: str
    kind: str = EXTERNAL
    # copy-local (hidden) steps carry the copy and element they belong to
    chart: str | None = None
    cut: tuple | None = None
    element: int | None = None

    def __str__(self):
        return self.name


Event = Union[SystemEvent, str]


def initial_state(model: SystemModel) -> SimState:
    q = sorted(((o.name, v.name), v.init) for o in model.objects for v in o.vars)
    return SimState(tuple(q), (), False)


def classify(model: SystemModel, name: str) -> str:
    if name in model.sigma or name in MARKER_EVENTS:
        return EXTERNAL
    return INTERNAL


def _settle(chart: Chart, cut: tuple[int, ...]) -> RunningCopy | None:
    lay = chart.layout
    if lay.in_main(cut):
        if cut == lay.final_cut:
            return None
        return RunningCopy(chart.name, ACTIVE, cut)
    return RunningCopy(chart.name, PRE_ACTIVE, cut)


def _live(lay, copy: RunningCopy) -> list[int]:
    """Frontier elements the copy may take in its current mode."""
    active = copy.mode == ACTIVE
    return [i for i in lay.frontier(copy.cut) if (i >= lay.n_pre) == active]


def _is_hot(lay, copy: RunningCopy) -> bool:
    for i in _live(lay, copy):
        el = lay.elements[i]
        if getattr(el, "temp", Temp.HOT) is Temp.HOT:
            return True
    return False


def _pending_events(lay, cut) -> set:
    return {
        el.event
        for i, el in enumerate(lay.elements)
        if isinstance(el, Message) and not lay.is_passed(i, cut)
    }


def _message_step(model: SystemModel, state: SimState, name: str) -> tuple[SimState, frozenset]:
    charts = model.chart_map
    copies = list(state.rl)
    present = set(copies)
    for chart in model.charts:
        lay = chart.layout
        if name in lay.triggers:
            fresh = RunningCopy(chart.name, PRE_ACTIVE if lay.n_pre else ACTIVE, lay.initial_cut)
            if fresh not in present:
                copies.append(fresh)
                present.add(fresh)

    violated = state.violated
    emitters = set()
    out = []
    for copy in copies:
        chart = charts[copy.chart]
        lay = chart.layout
        hit = next(
            (i for i in _live(lay, copy)
             if isinstance(lay.elements[i], Message) and lay.elements[i].event == name),
            None,
        )
        if hit is not None:
            if name == PROPERTY_HOLD and copy.mode == ACTIVE:
                emitters.add(chart.name)
            nxt = _settle(chart, lay.advance(hit, copy.cut))
            if nxt is not None:
                out.append(nxt)
        elif name in _pending_events(lay, copy.cut):
            if copy.mode == ACTIVE:
                if _is_hot(lay, copy):
                    violated = True
                    out.append(copy)
            # prechart copies and cold main charts are dropped
        else:
            out.append(copy)
    return SimState(state.q, tuple(sorted(set(out))), violated), frozenset(emitters)


def _local_step(model: SystemModel, state: SimState, ev: SystemEvent) -> SimState:
    chart = model.chart_map[ev.chart]
    lay = chart.layout
    copy = next((c for c in state.rl if c.chart == ev.chart and c.cut == ev.cut), None)
    if copy is None or ev.element not in _live(lay, copy):
        raise ContractError(f"step {ev.name} is not enabled")
    el = lay.elements[ev.element]
    rest = [c for c in state.rl if c != copy]
    q = state.q
    violated = state.violated
    advance = True
    if isinstance(el, Condition):
        if not eval_predicate(el.predicate, dict(q)):
            advance = False
            if ev.element >= lay.n_pre and el.temp is Temp.HOT:
                violated = True
                rest.append(copy)
    elif isinstance(el, Assignment):
        vals = dict(q)
        vals[(el.instance, el.var)] = el.value
        q = tuple(sorted(vals.items()))
    if advance:
        nxt = _settle(chart, lay.advance(ev.element, copy.cut))
        if nxt is not None:
            rest.append(nxt)
    return SimState(q, tuple(sorted(set(rest))), violated)


def _resolve(model: SystemModel, e: Event) -> SystemEvent:
    if isinstance(e, SystemEvent):
        return e
    if e not in model.known_events:
        raise EventError(f"unknown event {e!r}")
    return SystemEvent(e, classify(model, e))


def step_with_emitters(model: SystemModel, state: SimState, e: Event) -> tuple[SimState, frozenset]:
    """Like :func:`apply_step` but also reports which charts emitted ``propertyHold``."""
    if state.violated:
        raise ContractError("no moves from a violating state")
    ev = _resolve(model, e)
    if ev.kind == HIDDEN:
        return _local_step(model, state, ev), frozenset()
    return _message_step(model, state, ev.name)


def apply_step(model: SystemModel, state: SimState, e: Event) -> frozenset[SimState]:
    return frozenset({step_with_emitters(model, state, e)[0]})


def enabled_internal_events(model: SystemModel, state: SimState) -> list[SystemEvent]:
    """Internal and hidden steps the system may take next, in canonical order.

    While a copy of an atomic chart is inside its main chart and has
    something to do, only that copy's steps are offered.
    """
    if state.violated:
        raise ContractError("no internal events in a violating state")
    keyed = []
    atomic_keyed = []
    for copy in state.rl:
        chart = model.chart_map[copy.chart]
        lay = chart.layout
        for i in _live(lay, copy):
            el = lay.elements[i]
            l, p = lay.slots[i][0]
            key = (chart.name, l, p, copy.cut)
            if isinstance(el, Message):
                if copy.mode != ACTIVE or classify(model, el.event) == EXTERNAL:
                    continue
                ev = SystemEvent(el.event, INTERNAL)
            else:
                ev = SystemEvent(_step_name(el), HIDDEN, chart.name, copy.cut, i)
            keyed.append((key, ev))
            if chart.atomic and copy.mode == ACTIVE:
                atomic_keyed.append((key, ev))
    chosen = atomic_keyed or keyed
    chosen.sort(key=lambda kv: (kv[0], kv[1]))
    out = []
    seen = set()
    for _, ev in chosen:
        ident = ev.name if ev.kind == INTERNAL else ev
        if ident not in seen:
            seen.add(ident)
            out.append(ev)
    return out


def _step_name(el) -> str:
    if isinstance(el, Condition):
        return f"cond {el.instance}({format_predicate(el.predicate)})"
    if isinstance(el, Assignment):
        return f"assign {el.instance}.{el.var}:={el.value}"
    if isinstance(el, Sync):
        return f"sync {','.join(el.instances)}"
    raise TypeError(el)


def is_stable(model: SystemModel, state: SimState) -> bool:
    return state.violated or not enabled_internal_events(model, state)


def superstep_detail(
    model: SystemModel,
    state: SimState,
    a: str,
    max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS,
) -> frozenset[tuple[SimState, frozenset]]:
    """All stable successors of ``state`` under ``a``, each paired with the
    set of charts that emitted ``propertyHold`` on the way there."""
    if a not in model.sigma and a not in MARKER_EVENTS:
        raise EventError(f"{a!r} is not an environment event")
    if state.violated:
        return frozenset({(state, frozenset())})
    if not is_stable(model, state):
        raise ContractError("superstep requires a stable state")

    first, holds = step_with_emitters(model, state, a)
    results: set = set()
    visited: set = set()

    def successors(node):
        s, h = node
        if s.violated:
            return None
        events = enabled_internal_events(model, s)
        if not events:
            return None
        out = []
        for ev in events:
            nxt, emitted = step_with_emitters(model, s, ev)
            out.append((nxt, h | emitted))
        return out

    root = (first, holds)
    visited.add(root)
    succ = successors(root)
    if succ is None:
        return frozenset({root})
    stack = [(root, iter(succ))]
    on_path = {root}
    while stack:
        node, it = stack[-1]
        child = next(it, None)
        if child is None:
            stack.pop()
            on_path.discard(node)
            continue
        if child in on_path:
            raise DivergenceError(f"internal events cycle after {a!r} from {state.describe()}")
        if child in visited:
            continue
        visited.add(child)
        succ = successors(child)
        if succ is None:
            results.add(child)
            continue
        if len(stack) >= max_internal_steps:
            raise DivergenceError(f"more than {max_internal_steps} internal steps after {a!r}")
        stack.append((child, iter(succ)))
        on_path.add(child)
    return frozenset(results)


def superstep(
    model: SystemModel,
    state: SimState,
    a: str,
    max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS,
) -> frozenset[SimState]:
    return frozenset(s for s, _ in superstep_detail(model, state, a, max_internal_steps))


def run_word(
    model: SystemModel,
    word: Iterable[str],
    max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS,
) -> set[SimState]:
    """States reachable after feeding ``word`` from the initial state;
    violating states stop absorbing events."""
    states = {initial_state(model)}
    for a in word:
        nxt = set()
        for s in states:
            nxt |= superstep(model, s, a, max_internal_steps)
        states = nxt
    return states


__all__ = [
    "ACTIVE",
    "PRE_ACTIVE",
    "ContractError",
    "DivergenceError",
    "EventError",
    "RunningCopy",
    "SimState",
    "SystemEvent",
    "apply_step",
    "enabled_internal_events",
    "initial_state",
    "is_stable",
    "run_word",
    "superstep",
    "superstep_detail",
]
