"""Command-line front end for ``.gomt`` problem files.

A problem file is plain SMT-LIB plus two directives::

    (declare-objective <id> <term> <order> [:assuming <formula>])
    (optimize <id> | (lex <id>+) | (pareto <id>+) | (minmax <id>+ <order>)
                   | (maxmin <id>+ <order>) | (boxed <id>+))

with ``<order> ::= (asc <sort>) | (desc <sort>) | (defined ((a σ) (b σ)) <formula>)``.
A tuple objective is written ``(tup t1 t2 ...)``; a defined order on tuples
declares its parameters with ``(Tuple σ1 σ2 ...)`` and refers to their
components as ``a.0``, ``a.1`` and so on.
"""

from __future__ import annotations

import argparse
import json
import re
import shlex
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import engine
from .backend import Backend, SolverConfig
from .engine import (
    ANYTIME_BEST,
    EPSILON_OPTIMAL,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED_STATUS,
    UNKNOWN_STATUS,
    Budget,
    ProblemInstance,
    render_value,
    value_to_json,
)
from .errors import GomtError, ParseError, SemanticError, SolverUnknown
from .orders import (
    ObjectiveSpec,
    boxed_combine,
    builtin_order,
    defined_order,
    lex_combine,
    maxmin_combine,
    minmax_combine,
    pareto_combine,
)
from .smtlib import (
    Atom,
    SList,
    error_at,
    is_symbol,
    parse_sort_sexpr,
    parse_term_sexpr,
    parse_value,
    read_all,
    read_one,
)
from .terms import BOOL, TRUE, TupleSort, Var, and_

EXIT_CODES = {
    OPTIMAL: 0,
    EPSILON_OPTIMAL: 0,
    ANYTIME_BEST: 1,
    UNKNOWN_STATUS: 1,
    INFEASIBLE: 2,
    UNBOUNDED_STATUS: 3,
}
EXIT_USAGE = 4

_IGNORED = {"check-sat", "get-model", "get-objectives", "exit", "set-info"}
_ANNOTATIONS = {
    ":gomt-strategy": "strategy",
    ":gomt-tau-mode": "tau_mode",
    ":gomt-max-iterations": "max_iterations",
    ":gomt-epsilon": "epsilon",
    ":gomt-timeout": "timeout",
}


@dataclass
class ProblemScript:
    declarations: dict = field(default_factory=dict)  # name -> Var, in file order
    assertions: list = field(default_factory=list)
    objectives: dict = field(default_factory=dict)  # id -> ObjectiveSpec
    directive: object = None  # the optimize s-expression
    problem: ProblemInstance | None = None
    logic: str | None = None
    annotations: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Script parsing
# ---------------------------------------------------------------------------


def _sort(e):
    if isinstance(e, SList) and e and is_symbol(e[0], "Tuple"):
        if len(e) < 2:
            raise error_at(e, "empty tuple sort")
        return TupleSort(*(_sort(x) for x in e[1:]))
    return parse_sort_sexpr(e)


def _symbol(e, what):
    if not is_symbol(e):
        raise error_at(e, f"expected {what}")
    return e.text


def _operand(e, ctx):
    if isinstance(e, SList) and e and is_symbol(e[0], "tup"):
        if len(e) < 2:
            raise error_at(e, "empty tuple")
        return tuple(_operand(x, ctx) for x in e[1:])
    return parse_term_sexpr(e, ctx)


def _param(name, sort):
    """A Var for a scalar parameter, a nested tuple of Vars otherwise."""
    if sort.kind == "Tuple":
        return tuple(_param(f"{name}.{i}", s) for i, s in enumerate(sort.components))
    return Var(name, sort)


def _bind(ctx, p):
    if isinstance(p, tuple):
        for q in p:
            _bind(ctx, q)
    else:
        ctx[p.name] = p


def _order(e, ctx):
    if not (isinstance(e, SList) and e and is_symbol(e[0])):
        raise error_at(e, "expected (asc S), (desc S) or (defined ...)")
    head = e[0].text
    if head in ("asc", "desc"):
        if len(e) != 2:
            raise error_at(e, f"{head} takes exactly one sort")
        return builtin_order(head, _sort(e[1]))
    if head == "defined":
        if len(e) != 3 or not isinstance(e[1], SList) or len(e[1]) != 2:
            raise error_at(e, "expected (defined ((a S) (b S)) body)")
        params = []
        for p in e[1]:
            if not (isinstance(p, SList) and len(p) == 2):
                raise error_at(p, "expected (name sort)")
            params.append(_param(_symbol(p[0], "parameter name"), _sort(p[1])))
        local = dict(ctx)
        for p in params:
            _bind(local, p)
        body = parse_term_sexpr(e[2], local)
        return defined_order(params[0], params[1], body)
    raise error_at(e[0], f"unknown order form {head!r}")


def _ids(items, script):
    out = []
    for x in items:
        name = _symbol(x, "objective id")
        if name not in script.objectives:
            raise SemanticError(f"{x.line}:{x.col}: undeclared objective {name!r}")
        out.append(script.objectives[name])
    return out


def _build_objective(e, script, ctx):
    if is_symbol(e):
        return _ids([e], script)[0]
    if not (isinstance(e, SList) and len(e) >= 2 and is_symbol(e[0])):
        raise error_at(e, "malformed optimize directive")
    kind = e[0].text
    if kind in ("lex", "pareto", "boxed"):
        comps = _ids(e[1:], script)
        if kind == "lex":
            return lex_combine(comps)
        if kind == "pareto":
            return pareto_combine(comps)
        # Global assertions belong to every independent sub-problem.
        phi = and_(*script.assertions)
        comps = [ObjectiveSpec(c.term, c.order, and_(c.constraint, phi)) for c in comps]
        return boxed_combine(comps)
    if kind in ("minmax", "maxmin"):
        if len(e) < 3:
            raise error_at(e, f"{kind} needs objective ids and an order")
        comps = _ids(e[1:-1], script)
        base = _order(e[-1], ctx)
        fn = minmax_combine if kind == "minmax" else maxmin_combine
        return fn([c.term for c in comps], base, [c.constraint for c in comps])
    raise error_at(e[0], f"unknown combinator {kind!r}")


def parse_script(text: str) -> ProblemScript:
    """Parse a problem file. Raises ParseError or a semantic GomtError."""
    script = ProblemScript()
    ctx = {}
    for cmd in read_all(text):
        if not (isinstance(cmd, SList) and cmd and is_symbol(cmd[0])):
            raise error_at(cmd, "expected a command")
        head = cmd[0].text
        if head == "declare-const" or head == "declare-fun":
            if head == "declare-fun":
                if len(cmd) != 4 or not (isinstance(cmd[2], SList) and not cmd[2]):
                    raise error_at(cmd, "only nullary declare-fun is supported")
                cmd = SList([cmd[0], cmd[1], cmd[3]], cmd.line, cmd.col)
            if len(cmd) != 3:
                raise error_at(cmd, "expected (declare-const name sort)")
            name = _symbol(cmd[1], "variable name")
            if name in ctx:
                raise SemanticError(f"{cmd.line}:{cmd.col}: {name!r} declared twice")
            v = Var(name, parse_sort_sexpr(cmd[2]))
            ctx[name] = v.sort
            script.declarations[name] = v
        elif head == "assert":
            if len(cmd) != 2:
                raise error_at(cmd, "assert takes one formula")
            f = parse_term_sexpr(cmd[1], ctx)
            if f.sort != BOOL:
                raise SemanticError(f"{cmd.line}:{cmd.col}: assertion is not a formula")
            script.assertions.append(f)
        elif head == "set-logic":
            script.logic = _symbol(cmd[1], "logic name") if len(cmd) == 2 else None
            if script.logic is None:
                raise error_at(cmd, "set-logic takes one name")
        elif head == "set-option":
            if len(cmd) != 3 or not (isinstance(cmd[1], Atom) and cmd[1].kind == "keyword"):
                raise error_at(cmd, "expected (set-option :key value)")
            key = _ANNOTATIONS.get(cmd[1].text)
            if key is not None:
                script.annotations[key] = str(cmd[2])
        elif head == "declare-objective":
            _declare_objective(cmd, script, ctx)
        elif head == "optimize":
            if script.directive is not None:
                raise error_at(cmd, "more than one optimize directive")
            if len(cmd) != 2:
                raise error_at(cmd, "optimize takes one objective or combinator")
            script.directive = cmd[1]
        elif head in _IGNORED:
            continue
        else:
            raise error_at(cmd[0], f"unsupported command {head!r}")
    if script.directive is None:
        raise ParseError("no optimize directive", 1, 1)
    objective = _build_objective(script.directive, script, ctx)
    phi = TRUE if objective.combinator == "boxed" else and_(*script.assertions)
    decls = set(script.declarations.values()) | set(getattr(objective, "fresh_vars", ()))
    script.problem = ProblemInstance.build(objective, phi, decls)
    return script


def _declare_objective(cmd, script, ctx):
    if len(cmd) not in (4, 6):
        raise error_at(cmd, "expected (declare-objective id term order [:assuming formula])")
    name = _symbol(cmd[1], "objective id")
    if name in script.objectives:
        raise SemanticError(f"{cmd.line}:{cmd.col}: objective {name!r} declared twice")
    term = _operand(cmd[2], ctx)
    order = _order(cmd[3], ctx)
    constraint = TRUE
    if len(cmd) == 6:
        if not (isinstance(cmd[4], Atom) and cmd[4].text == ":assuming"):
            raise error_at(cmd[4], "expected :assuming")
        constraint = parse_term_sexpr(cmd[5], ctx)
    script.objectives[name] = ObjectiveSpec(term, order, constraint)


def parse_model(text: str, problem: ProblemInstance) -> dict:
    """Parse ``"x=4, y=(- 3) s=\\"za\\""`` into an assignment by variable name."""
    sorts = {v.name: v.sort for v in problem.declarations}
    out = {}
    i, n = 0, len(text)
    name_re = re.compile(r"[\s,;]*([^\s=,;]+)\s*=\s*")
    while True:
        m = name_re.match(text, i)
        if not m:
            if text[i:].strip(" \t\n,;"):
                raise ParseError(f"cannot read model near {text[i:i + 20]!r}", 1, i + 1)
            break
        name, i = m.group(1), m.end()
        if name not in sorts:
            raise SemanticError(f"model mentions undeclared variable {name!r}")
        j = i
        if j < n and text[j] == "(":
            depth = 0
            while j < n:
                depth += {"(": 1, ")": -1}.get(text[j], 0)
                j += 1
                if depth == 0:
                    break
        elif j < n and text[j] == '"':
            j = text.index('"', j + 1) + 1 if '"' in text[j + 1:] else n
        else:
            while j < n and text[j] not in " \t\n,;":
                j += 1
        raw = text[i:j]
        if re.fullmatch(r"-\d+(\.\d+)?", raw):
            raw = f"(- {raw[1:]})"
        elif re.fullmatch(r"-?\d+/\d+", raw):
            num, den = raw.lstrip("-").split("/")
            raw = f"(/ {num}.0 {den}.0)" if not raw.startswith("-") else f"(- (/ {num}.0 {den}.0))"
        out[name] = _model_value(raw, sorts[name])
        i = j
    return out


def _model_value(raw, sort):
    return parse_value(read_one(raw), sort)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _objective_text(values):
    return render_value(values if isinstance(values, tuple) else (values,))


def format_outcome(outcome) -> str:
    lines = [f"status: {outcome.status}"]
    if outcome.best is not None:
        lines.append(f"objective: {_objective_text(outcome.best_values)}")
        lines.append("model:")
        for name in sorted(outcome.best):
            lines.append(f"  {name} = {render_value(outcome.best[name])}")
    if outcome.reason and outcome.status not in (OPTIMAL, INFEASIBLE):
        lines.append(f"reason: {outcome.reason}")
    lines.append(f"iterations: {outcome.iterations}")
    lines.append(f"solver_calls: {outcome.solver_calls}")
    return "\n".join(lines)


def outcome_json(outcome) -> str:
    vals = outcome.best_values
    obj = {
        "status": outcome.status,
        "objective_values": None if vals is None else value_to_json(vals if isinstance(vals, tuple) else (vals,)),
        "model": None if outcome.best is None else {k: value_to_json(v) for k, v in sorted(outcome.best.items())},
        "iterations": outcome.iterations,
        "solver_calls": outcome.solver_calls,
    }
    return json.dumps(obj, sort_keys=True)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="gomt", description="Generalized optimization modulo theories solver")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file", help="problem file (.gomt)")
        sp.add_argument("--backend", help="solver executable (default: $GOMT_BACKEND or z3)")
        sp.add_argument("--backend-args", help="solver arguments, shell-quoted")
        sp.add_argument("--logic", help="SMT-LIB logic (default: the file's set-logic, else ALL)")
        sp.add_argument("--timeout", type=int, help="per-query solver timeout in ms")
        sp.add_argument("--json", action="store_true", help="emit one JSON object")

    s = sub.add_parser("solve", help="optimize a problem file")
    common(s)
    s.add_argument("--strategy", choices=engine.STRATEGIES)
    s.add_argument("--tau-mode", choices=("seq", "set"))
    s.add_argument("--parallel", type=int, default=1, help="forks in set mode")
    s.add_argument("--max-iterations", type=int)
    s.add_argument("--epsilon", help="termination width for dense objectives")
    s.add_argument("--trace", help="write the derivation as JSON lines")

    c = sub.add_parser("check", help="certify that a model is optimal")
    common(c)
    c.add_argument("--model", required=True, help='assignment such as "x=4 y=(- 2)"')
    return p


def _config(args, script):
    kw = {}
    if args.backend:
        kw["executable"] = args.backend
    if args.backend_args is not None:
        kw["args"] = shlex.split(args.backend_args)
    kw["logic"] = args.logic or script.logic or "ALL"
    timeout = args.timeout if args.timeout is not None else script.annotations.get("timeout")
    if timeout is not None:
        kw["timeout_ms"] = int(timeout)
    return SolverConfig(**kw)


def _fail(msg, code=EXIT_USAGE):
    print(f"gomt: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else EXIT_USAGE
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        return _fail(f"cannot read {args.file}: {exc.strerror}")
    try:
        script = parse_script(text)
        config = _config(args, script)
    except ParseError as exc:
        return _fail(f"PARSE_ERROR: {exc}")
    except (GomtError, ValueError) as exc:
        code = getattr(exc, "code", "SEMANTIC_ERROR")
        return _fail(f"{code}: {exc}")
    if args.command == "check":
        return _check(args, script, config)
    return _solve(args, script, config)


def _check(args, script, config):
    try:
        assignment = parse_model(args.model, script.problem)
    except GomtError as exc:
        return _fail(f"{exc.code}: {exc}")
    try:
        with Backend(config) as b:
            ok = engine.certificate_check(script.problem, assignment, b)
    except SolverUnknown as exc:
        return _fail(f"UNKNOWN: {exc.reason}", 1)
    except GomtError as exc:
        return _fail(f"{exc.code}: {exc}", EXIT_USAGE if exc.code == "INCOMPLETE_ASSIGNMENT" else 1)
    if args.json:
        print(json.dumps({"certificate": "pass" if ok else "fail"}))
    else:
        print(f"certificate: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _solve(args, script, config):
    ann = script.annotations
    try:
        strategy = args.strategy or ann.get("strategy", "linear")
        tau_mode = args.tau_mode or ann.get("tau_mode", "seq")
        if strategy not in engine.STRATEGIES or tau_mode not in ("seq", "set"):
            raise ValueError("bad strategy or tau mode annotation")
        kw = {}
        max_it = args.max_iterations if args.max_iterations is not None else ann.get("max_iterations")
        if max_it is not None:
            kw["max_iterations"] = int(max_it)
        eps = args.epsilon if args.epsilon is not None else ann.get("epsilon")
        if eps is not None:
            kw["epsilon"] = Fraction(eps)
            if kw["epsilon"] <= 0:
                raise ValueError("epsilon must be positive")
        budget = Budget(**kw)
        if args.parallel < 1:
            raise ValueError("--parallel must be at least 1")
    except (ValueError, ZeroDivisionError) as exc:
        return _fail(f"usage: {exc}")
    backend = Backend(config)
    try:
        if tau_mode == "set" and args.parallel > 1:
            outcome = engine.run_parallel(script.problem, args.parallel, lambda: Backend(config),
                                          strategy=strategy, budget=budget)
        else:
            outcome = engine.run(script.problem, strategy, backend=backend, budget=budget, tau_mode=tau_mode)
    except GomtError as exc:
        backend.close()
        code = EXIT_USAGE if exc.code == "UNSUPPORTED_OBJECTIVE" else 1
        return _fail(f"{exc.code}: {exc}", code)
    backend.close()
    if args.trace:
        try:
            engine.write_trace(args.trace, outcome.trace, backend.stderr_log)
        except OSError as exc:
            print(f"gomt: cannot write trace: {exc.strerror}", file=sys.stderr)
    print(outcome_json(outcome) if args.json else format_outcome(outcome))
    return EXIT_CODES.get(outcome.status, 1)


if __name__ == "__main__":
    sys.exit(main())
