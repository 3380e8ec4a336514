import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ORDER_LOOP, ANY_ORDER, PAR_RUN, web, web_anti, web_equal, web_path
from oracles import graph_nodes, random_language, random_model
from lscsim.eesl import compile_eesl, compile_to_dfa, compile_to_grammar, desugar, parse_eesl, apply_testing_mode
from lscsim.justify import (
    AG,
    EF,
    CtlQuery,
    GraphError,
    UnknownPropertyError,
    build_transition_graph,
    emit_dot,
    eval_ctl,
    format_trace,
)
from lscsim.model import MARKER_EVENTS, parse_model
from lscsim.playtree import Trace, check_consistency


def graph_for(model, expr, testing=False):
    g = compile_eesl(expr, model.sigma, testing=testing)
    return build_transition_graph(model, g, verdict=check_consistency(model, g))


def test_order_loop_graph():
    graph = graph_for(web(), ORDER_LOOP)
    assert len(graph) == 1
    labels = [graph.edge_label(s, d) for s, d in graph.edges]
    assert labels == ["createAbort;createConfirm;createOrder"]
    events = [e for lab in labels for e in lab.split(";")]
    assert sorted(events) == sorted(set(events)) == ["createAbort", "createConfirm", "createOrder"]
    assert all(not graph.marks[i] for i in range(len(graph)))


def test_order_loop_dot():
    dot = emit_dot(graph_for(web(), ORDER_LOOP))
    assert dot == (
        "digraph supersteps {\n"
        "  rankdir=LR;\n"
        "  node [shape=box];\n"
        '  n0 [label="{RBC.conf=false, STC.conf=false}"];\n'
        '  n0 -> n0 [label="createAbort;createConfirm;createOrder"];\n'
        "}\n"
    )


def test_single_node_dot_without_edges():
    m = parse_model("object A { var x in {p} init p; }\nexternal go;")
    g = compile_eesl("λ", m.sigma)
    dot = emit_dot(build_transition_graph(m, g))
    assert dot.count("->") == 0 and '  n0 [label="{A.x=p}"];' in dot


def test_parallel_edge_label():
    graph = graph_for(web(), PAR_RUN)
    labels = {graph.edge_label(s, d) for s, d in graph.edges}
    assert any("createAbort,createConfirm" in lab for lab in labels)
    assert any("createConfirm,createAbort" in lab for lab in labels)
    for lab in labels:
        for ev in lab.replace(",", ";").split(";"):
            assert ev not in MARKER_EVENTS


def test_equality_chart_holds_everywhere():
    graph = graph_for(web_equal(), PAR_RUN, testing=True)
    assert len(graph) >= 3
    assert all(graph.satisfied(i, "EqualConf") for i in range(len(graph)))
    assert eval_ctl(graph, CtlQuery(AG, "EqualConf"))
    assert eval_ctl(graph, CtlQuery(EF, "EqualConf"))
    assert "fillcolor=green" in emit_dot(graph, "EqualConf")


def test_path_chart_reachable_not_global():
    graph = graph_for(web_path(), PAR_RUN, testing=True)
    marks = [graph.satisfied(i, "AbortThenConfirm") for i in range(len(graph))]
    assert any(marks) and not all(marks)
    assert eval_ctl(graph, CtlQuery(EF, "AbortThenConfirm"))
    assert not eval_ctl(graph, CtlQuery(AG, "AbortThenConfirm"))
    # the satisfied node is the one where the order ended up confirmed
    sat = [graph.states[i].values for i, ok in enumerate(marks) if ok]
    assert {v[("RBC", "conf")] for v in sat} == {"true"}


def test_no_testing_charts_no_marks():
    graph = graph_for(web(), PAR_RUN)
    assert not any(graph.marks.values())
    with pytest.raises(UnknownPropertyError):
        eval_ctl(graph, CtlQuery(AG, "EqualConf"))


def test_bad_ctl_mode():
    with pytest.raises(ValueError):
        CtlQuery("AF", "EqualConf")


def test_refuses_inconsistent_runs():
    m = web_anti()
    g = compile_eesl(ANY_ORDER, m.sigma)
    v = check_consistency(m, g)
    with pytest.raises(GraphError):
        build_transition_graph(m, g, verdict=v)
    with pytest.raises(GraphError):
        build_transition_graph(m, g)


def test_dot_is_byte_identical():
    a = emit_dot(graph_for(web_path(), PAR_RUN, testing=True), "AbortThenConfirm")
    b = emit_dot(graph_for(web_path(), PAR_RUN, testing=True), "AbortThenConfirm")
    assert a == b


def test_dot_escapes_quotes():
    from lscsim.justify import _quote
    assert _quote('say "hi" \\ bye') == '"say \\"hi\\" \\\\ bye"'


def test_format_trace():
    assert format_trace(Trace(("createOrder", "createConfirm", "createAbort"))) == \
        "createOrder·createConfirm·createAbort"
    assert format_trace(Trace()) == ""
    assert format_trace(Trace(("x", "testSF", "beginP", "a", "b", "endP", "y"))) == "x·[a,b]·y"


@pytest.mark.parametrize("make,expr,testing", [
    (web, ORDER_LOOP, False),
    (web, ANY_ORDER, False),
    (web, PAR_RUN, False),
    (web_equal, PAR_RUN, True),
    (web_path, PAR_RUN, True),
])
def test_nodes_match_independent_bfs(make, expr, testing):
    m = make()
    node = parse_eesl(expr, m.sigma)
    if testing:
        node = apply_testing_mode(node)
    node = desugar(node)
    graph = build_transition_graph(m, compile_to_grammar(node))
    assert set(graph.nodes) == graph_nodes(m, compile_to_dfa(node))


def test_ag_implies_ef_on_fixtures():
    for make, prop in ((web_equal, "EqualConf"), (web_path, "AbortThenConfirm")):
        graph = graph_for(make(), PAR_RUN, testing=True)
        if eval_ctl(graph, CtlQuery(AG, prop)):
            assert eval_ctl(graph, CtlQuery(EF, prop))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**7))
def test_random_graph_nodes_match_bfs(seed):
    rng = random.Random(seed)
    m = random_model(rng)
    node = desugar(random_language(rng))
    g = compile_to_grammar(node)
    if not check_consistency(m, g).consistent:
        return
    graph = build_transition_graph(m, g)
    assert set(graph.nodes) == graph_nodes(m, compile_to_dfa(node))
    # every edge endpoint is a node and every label is marker-free
    for (s, d), labels in graph.edges.items():
        assert 0 <= s < len(graph) and 0 <= d < len(graph)
        assert not any(x in MARKER_EVENTS for lab in labels for x in lab.split(","))
