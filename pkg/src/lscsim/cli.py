"""Command-line entry point.

Exit codes: 0 consistent, 1 inconsistent, 2 usage/model/grammar error,
3 divergence of internal events.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from lscsim.eesl import EeslError, compile_eesl
from lscsim.engine import DEFAULT_MAX_INTERNAL_STEPS, DivergenceError
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
from lscsim.model import ModelError, parse_model
from lscsim.playtree import UnsupportedGrammarError, check_consistency

EXIT_CONSISTENT = 0
EXIT_INCONSISTENT = 1
EXIT_ERROR = 2
EXIT_DIVERGENCE = 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    models: list
    eesl: str | None = None
    eesl_file: str | None = None
    testing: bool = False
    ctl: str | None = None
    prop: str | None = None
    dot: str | None = None
    max_internal_steps: int = DEFAULT_MAX_INTERNAL_STEPS

    def validate(self) -> None:
        if self.ctl and not self.testing:
            raise UsageError("--ctl requires --testing")
        if self.ctl and not self.prop:
            raise UsageError("--ctl requires --property")
        if self.prop and not self.ctl:
            raise UsageError("--property requires --ctl")
        if self.max_internal_steps < 1:
            raise UsageError("--max-internal-steps must be at least 1")
        if self.eesl is None and self.eesl_file is None:
            raise UsageError("one of --eesl or --eesl-file is required")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def run_check(cfg: RunConfig) -> tuple[int, list[str], list[str]]:
    """Run one check; returns (exit code, stdout lines, stderr lines)."""
    out: list[str] = []
    err: list[str] = []
    try:
        cfg.validate()
        text = "\n".join(_read(p) for p in cfg.models)
        model = parse_model(text)
        expr = cfg.eesl if cfg.eesl is not None else _read(cfg.eesl_file).strip()
        grammar = compile_eesl(expr, model.sigma, testing=cfg.testing)
        verdict = check_consistency(model, grammar, cfg.max_internal_steps)
        err.extend(f"warning: {w}" for w in verdict.warnings)
        if not verdict.consistent:
            out.append("INCONSISTENT")
            out.append(f"trace: {format_trace(verdict.trace)}")
            return EXIT_INCONSISTENT, out, err
        out.append("CONSISTENT")
        if cfg.ctl or cfg.dot:
            graph = build_transition_graph(model, grammar, cfg.max_internal_steps, verdict)
            if cfg.ctl:
                result = eval_ctl(graph, CtlQuery(cfg.ctl, cfg.prop))
                out.append(f"{cfg.ctl}: {'true' if result else 'false'}")
            if cfg.dot:
                try:
                    Path(cfg.dot).write_text(emit_dot(graph, cfg.prop), encoding="utf-8")
                except OSError as exc:
                    raise UsageError(f"cannot write {cfg.dot}: {exc.strerror or exc}") from exc
        return EXIT_CONSISTENT, out, err
    except DivergenceError as exc:
        err.append(f"error: divergence: {exc}")
        return EXIT_DIVERGENCE, out, err
    except (UsageError, ModelError, EeslError, UnsupportedGrammarError, GraphError) as exc:
        err.append(f"error: {exc}")
        return EXIT_ERROR, out, err
    except UnknownPropertyError as exc:
        err.append(f"error: {exc.args[0]}")
        return EXIT_ERROR, out, err


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lscsim", description="Consistency checking for universal LSC models."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="check a model against an external event specification")
    check.add_argument("--model", action="append", required=True, metavar="FILE",
                       help="model file; repeat to concatenate several files")
    check.add_argument("--eesl", metavar="EXPR", help="external event specification")
    check.add_argument("--eesl-file", metavar="FILE", help="read the specification from a file")
    check.add_argument("--testing", action="store_true", help="inject testSF before each event")
    check.add_argument("--ctl", choices=[AG, EF])
    check.add_argument("--property", dest="prop", metavar="NAME", help="testing chart name")
    check.add_argument("--dot", metavar="FILE", help="write the transition graph as DOT")
    check.add_argument("--max-internal-steps", type=int, default=DEFAULT_MAX_INTERNAL_STEPS,
                       metavar="N")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        models=args.model,
        eesl=args.eesl,
        eesl_file=args.eesl_file,
        testing=args.testing,
        ctl=args.ctl,
        prop=args.prop,
        dot=args.dot,
        max_internal_steps=args.max_internal_steps,
    )
    code, out, err = run_check(cfg)
    for line in out:
        sys.stdout.write(line + "\n")
    for line in err:
        sys.stderr.write(line + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
