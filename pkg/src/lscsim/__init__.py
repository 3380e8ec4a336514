"""Simulator and consistency checker for universal live sequence charts."""

from lscsim.model import (
    Chart,
    Condition,
    Diagnostic,
    Message,
    ModelError,
    ObjectDecl,
    SystemModel,
    parse_model,
    pretty_print,
    validate_model,
)
from lscsim.engine import (
    DivergenceError,
    SimState,
    apply_step,
    enabled_internal_events,
    initial_state,
    is_stable,
    superstep,
)
from lscsim.eesl import (
    apply_testing_mode,
    compile_eesl,
    compile_to_grammar,
    desugar,
    parse_eesl,
)
from lscsim.playtree import ID, Trace, Verdict, check_consistency, mdft, minimize_failure_trace
from lscsim.justify import (
    CtlQuery,
    TransitionGraph,
    build_transition_graph,
    emit_dot,
    eval_ctl,
    format_trace,
)

__all__ = [
    "Chart",
    "Condition",
    "CtlQuery",
    "Diagnostic",
    "DivergenceError",
    "ID",
    "Message",
    "ModelError",
    "ObjectDecl",
    "SimState",
    "SystemModel",
    "Trace",
    "TransitionGraph",
    "Verdict",
    "apply_step",
    "apply_testing_mode",
    "build_transition_graph",
    "check_consistency",
    "compile_eesl",
    "compile_to_grammar",
    "desugar",
    "emit_dot",
    "enabled_internal_events",
    "eval_ctl",
    "format_trace",
    "initial_state",
    "is_stable",
    "mdft",
    "minimize_failure_trace",
    "parse_eesl",
    "parse_model",
    "pretty_print",
    "superstep",
    "validate_model",
]
