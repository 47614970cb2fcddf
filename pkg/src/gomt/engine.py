"""The optimization calculus: states, the three rules, strategies, certificates.

A derivation keeps a best assignment, a formula ``delta`` describing the
part of the search space not yet excluded, and a sequence of branch
formulas whose disjunction is equivalent to ``delta`` modulo the
constraint. ``split`` refines the first branch, ``sat`` jumps to a better
solution found in it, and ``close`` drops it once it is empty.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .backend import SAT, UNBOUNDED, UNKNOWN, UNSAT, Backend, SatResult
from .errors import (
    EmptyTau,
    IncompleteAssignment,
    SolverUnknown,
    UndeclaredSymbol,
    UnsoundCut,
    UnsoundSplit,
    UnsupportedObjective,
)
from .orders import ObjectiveSpec, leaves, rebuild, to_operand
from .smtlib import parse_term, parse_value, print_term, print_value
from .terms import (
    INT,
    REAL,
    TRUE,
    BitVecValue,
    and_,
    eq,
    free_vars,
    iff,
    implies,
    not_,
    or_,
)

OPTIMAL = "OPTIMAL"
ANYTIME_BEST = "ANYTIME_BEST"
EPSILON_OPTIMAL = "EPSILON_OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED_STATUS = "UNBOUNDED"
UNKNOWN_STATUS = "UNKNOWN"


@dataclass(frozen=True)
class Budget:
    max_iterations: int = 10000
    wall_timeout: float = 60.0
    epsilon: Fraction = Fraction(1, 10**6)


@dataclass(frozen=True)
class ProblemInstance:
    objective: object  # ObjectiveSpec or CombinedObjective
    constraint: object  # full constraint, objective constraints included
    declarations: tuple

    @classmethod
    def build(cls, objective, constraint=TRUE, declarations=None):
        parts = [c for c in (objective.constraint, constraint) if c != TRUE]
        phi = and_(*parts)
        used = set(free_vars(phi))
        for leaf in leaves(objective.operand):
            used |= free_vars(leaf)
        if declarations is None:
            declarations = used
        declarations = tuple(sorted(set(declarations), key=lambda v: v.name))
        missing = used - set(declarations)
        if missing:
            names = ", ".join(sorted(v.name for v in missing))
            raise UndeclaredSymbol(f"undeclared variables: {names}")
        return cls(objective, phi, declarations)

    @property
    def order(self):
        return self.objective.order

    @property
    def operand(self):
        return self.objective.operand

    @property
    def leaf_terms(self):
        return leaves(self.objective.operand)

    def better(self, values):
        return self.order.precedes(self.operand, values)

    def values_from(self, result: SatResult):
        return rebuild(self.operand, [result.values[t] for t in self.leaf_terms])

    def pins(self, assignment):
        out = []
        for v in self.declarations:
            if v.name not in assignment:
                raise IncompleteAssignment(f"no value for {v.name}")
            out.append(eq(v, to_operand(assignment[v.name], v.sort)))
        return out


@dataclass(frozen=True)
class EngineState:
    best: dict
    best_values: object
    delta: object
    branches: tuple

    @property
    def top(self):
        if not self.branches:
            raise EmptyTau("the branch sequence is empty")
        return self.branches[0]

    def with_top(self, index):
        b = self.branches
        return replace(self, branches=(b[index],) + b[:index] + b[index + 1:])


def is_saturated(state: EngineState) -> bool:
    return not state.branches


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


def value_to_json(v):
    if isinstance(v, tuple):
        return [value_to_json(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, BitVecValue):
        return str(v)
    return v


def render_value(v) -> str:
    """SMT-LIB style rendering; tuples become parenthesized lists."""
    if isinstance(v, tuple):
        return "(" + " ".join(render_value(x) for x in v) + ")"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return print_value(v, INT)
    if isinstance(v, Fraction):
        return print_value(v, REAL)
    if isinstance(v, BitVecValue):
        return str(v)
    if isinstance(v, str):
        return '"' + v + '"'
    return str(v)


@dataclass
class TraceRecord:
    rule: str  # init | split | sat | close
    branch: str | None
    verdict: str | None
    best_values: object = None
    model: dict | None = None
    pieces: list | None = None
    oracle: str = "solve"
    time: float = 0.0

    def to_json(self):
        return {
            "rule": self.rule,
            "branch": self.branch,
            "verdict": self.verdict,
            "best_values": value_to_json(self.best_values),
            "model": {k: value_to_json(v) for k, v in (self.model or {}).items()} or None,
            "pieces": self.pieces,
            "oracle": self.oracle,
            "time": round(self.time, 6),
        }


def write_trace(path, records, stderr_log=()):
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json()) + "\n")
        for text in stderr_log:
            fh.write(json.dumps({"rule": "solver-stderr", "text": text}) + "\n")


def read_trace(path) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


# ---------------------------------------------------------------------------
# Derivation rules
# ---------------------------------------------------------------------------


class Derivation:
    """Applies rules to states of one problem, recording a trace.

    ``cut`` may return an extra formula to conjoin to every Better formula;
    the constraint must entail it, which is checked once per distinct cut.
    """

    def __init__(self, problem: ProblemInstance, backend: Backend, monitor=None, cut=None):
        self.problem = problem
        self.backend = backend
        self.monitor = monitor
        self.cut = cut
        self.trace = []
        self._cuts_ok = set()

    # helpers ----------------------------------------------------------------

    def _solve(self, formula, eval_terms=()):
        res = self.backend.solve(formula, self.problem.declarations, eval_terms)
        if res.status == UNKNOWN:
            raise SolverUnknown(res.reason)
        return res

    def better(self, values):
        f = self.problem.better(values)
        if self.cut is None:
            return f
        extra = self.cut(self.problem, values)
        if extra is None:
            return f
        if extra not in self._cuts_ok:
            if not self.backend.check_entailment(self.problem.constraint, extra, self.problem.declarations):
                raise UnsoundCut(f"cut {print_term(extra)} is not entailed by the constraint")
            self._cuts_ok.add(extra)
        return and_(f, extra)

    def _record(self, rule, branch, verdict, state=None, pieces=None, oracle="solve", t0=None):
        rec = TraceRecord(
            rule,
            print_term(branch) if branch is not None else None,
            verdict,
            state.best_values if state is not None else None,
            dict(state.best) if state is not None else None,
            [print_term(p) for p in pieces] if pieces is not None else None,
            oracle,
            time.monotonic() - t0 if t0 is not None else 0.0,
        )
        self.trace.append(rec)

    def _observe(self, rule, before, after):
        if self.monitor is not None:
            self.monitor.observe(self, rule, before, after)

    def _witness_result(self, formula, witness):
        """Check a given assignment against ``formula``; return it as a SatResult."""
        pins = self.problem.pins(witness)
        res = self._solve(and_(formula, *pins), self.problem.leaf_terms)
        if res.status != SAT:
            return None
        return res

    # rules ------------------------------------------------------------------

    def init(self, initial=None):
        """Initial state from a first solution, or None if the constraint is unsatisfiable.

        ``initial`` replays a known starting assignment; it must satisfy the
        constraint.
        """
        t0 = time.monotonic()
        phi = self.problem.constraint
        if initial is not None:
            res = self._witness_result(phi, initial)
            if res is None:
                raise ValueError("the given initial assignment does not satisfy the constraint")
        else:
            res = self._solve(phi, self.problem.leaf_terms)
            if res.status == UNSAT:
                self._record("init", phi, UNSAT, t0=t0)
                return None
        values = self.problem.values_from(res)
        delta = self.better(values)
        state = EngineState(dict(res.assignment), values, delta, (delta,))
        self._record("init", phi, SAT, state, t0=t0)
        self._observe("init", None, state)
        return state

    def f_split(self, state, pieces, check=True):
        t0 = time.monotonic()
        if not state.branches:
            raise EmptyTau("cannot split: the branch sequence is empty")
        pieces = tuple(pieces)
        if not pieces:
            raise UnsoundSplit("a split needs at least one piece")
        top = state.top
        if check:
            ok = self.backend.check_entailment(self.problem.constraint, iff(top, or_(*pieces)),
                                               self.problem.declarations)
            if not ok:
                raise UnsoundSplit("pieces are not equivalent to the branch they replace")
        new = replace(state, branches=pieces + state.branches[1:])
        self._record("split", top, None, new, pieces=list(pieces), t0=t0)
        self._observe("split", state, new)
        return new

    def _apply_sat(self, state, res, top, t0, oracle="solve"):
        values = self.problem.values_from(res)
        delta = and_(state.delta, self.better(values))
        new = EngineState(dict(res.assignment), values, delta, (delta,))
        self._record("sat", top, SAT, new, oracle=oracle, t0=t0)
        self._observe("sat", state, new)
        return new

    def _apply_close(self, state, top, t0, oracle="solve"):
        new = replace(state, delta=and_(state.delta, not_(top)), branches=state.branches[1:])
        self._record("close", top, UNSAT, new, oracle=oracle, t0=t0)
        self._observe("close", state, new)
        return new

    def f_sat(self, state, witness=None):
        """Jump to a solution in the top branch; None if the branch is empty.

        With ``witness`` the given assignment is used instead of asking the
        solver for one, after checking it lies in the branch.
        """
        t0 = time.monotonic()
        top = state.top
        formula = and_(self.problem.constraint, top)
        if witness is not None:
            res = self._witness_result(formula, witness)
        else:
            res = self._solve(formula, self.problem.leaf_terms)
            if res.status != SAT:
                res = None
        if res is None:
            return None
        return self._apply_sat(state, res, top, t0)

    def f_close(self, state):
        """Drop the top branch if it has no solutions; None otherwise."""
        t0 = time.monotonic()
        top = state.top
        res = self._solve(and_(self.problem.constraint, top))
        if res.status != UNSAT:
            return None
        return self._apply_close(state, top, t0)

    def sat_or_close(self, state):
        """One solver call deciding between F-Sat and F-Close."""
        t0 = time.monotonic()
        top = state.top
        res = self._solve(and_(self.problem.constraint, top), self.problem.leaf_terms)
        if res.status == SAT:
            return "sat", self._apply_sat(state, res, top, t0)
        return "close", self._apply_close(state, top, t0)

    def optimize_or_close(self, state):
        """F-Sat with the native optimizer in place of Solve."""
        t0 = time.monotonic()
        top = state.top
        obj = self.problem.objective
        res = self.backend.optimize(and_(self.problem.constraint, top), obj, self.problem.declarations)
        if res.status == UNKNOWN:
            raise SolverUnknown(res.reason)
        if res.status == UNBOUNDED:
            raise _Unbounded(res.reason)
        if res.status == SAT:
            # the optimizer only reports the objective term; fill in the rest
            values = {obj.term: res.values[obj.term]}
            res = SatResult(SAT, res.assignment, values)
            return "sat", self._apply_sat(state, res, top, t0, oracle="optimize")
        return "close", self._apply_close(state, top, t0, oracle="optimize")


class _Unbounded(Exception):
    pass


class EpsilonReached(Exception):
    """Raised by a splitter when the dense-order window is below epsilon."""


# ---------------------------------------------------------------------------
# Splitters
# ---------------------------------------------------------------------------


class Splitter:
    """Chooses F-Split pieces. ``trusted`` splitters skip the soundness check."""

    trusted = False

    def pieces(self, deriv: Derivation, state: EngineState):
        return None

    def notify(self, rule, before, after):
        pass


def _is_builtin_single(obj):
    return isinstance(obj, ObjectiveSpec) and obj.order.builtin is not None


class BisectionSplitter(Splitter):
    """Binary search on a single objective with a built-in numeric or bitvector order.

    Works on a "goodness" scale where smaller is better, so ascending and
    descending orders share one code path. The better half is always the
    first piece. Without a known bound the window grows by doubling steps.
    """

    trusted = True

    def __init__(self, problem: ProblemInstance, epsilon=Fraction(1, 10**6)):
        obj = problem.objective
        if not _is_builtin_single(obj):
            raise UnsupportedObjective("bisection needs a single objective with a built-in order")
        self.direction, self.sort = obj.order.builtin
        if not (self.sort in (INT, REAL) or self.sort.kind == "BitVec"):
            raise UnsupportedObjective(f"bisection over {self.sort} is not supported")
        self.term = obj.term
        self.order = obj.order
        self.epsilon = Fraction(epsilon)
        self.lo = 0 if self.sort.kind == "BitVec" else None
        self.step = 1
        self.pivot = None
        self.pending = False

    def _g(self, v):
        if self.sort.kind == "BitVec":
            top = (1 << self.sort.width) - 1
            return v.value if self.direction == "asc" else top - v.value
        return v if self.direction == "asc" else -v

    def _from_g(self, g):
        if self.sort.kind == "BitVec":
            top = (1 << self.sort.width) - 1
            return BitVecValue(self.sort.width, g if self.direction == "asc" else top - g)
        return g if self.direction == "asc" else -g

    def pieces(self, deriv, state):
        if self.pending:
            return None
        c = self._g(state.best_values)
        dense = self.sort == REAL
        if self.lo is None:
            pivot = c - self.step
        else:
            size = c - self.lo
            if dense:
                if size < self.epsilon:
                    raise EpsilonReached()
                pivot = self.lo + size / 2
            else:
                if size <= 1:
                    return None
                pivot = self.lo + size // 2
        self.pivot = pivot
        self.pending = True
        cond = self.order.precedes(self.term, self._from_g(pivot))
        top = state.top
        return [and_(top, cond), and_(top, not_(cond))]

    def notify(self, rule, before, after):
        if rule == "close" and self.pending:
            self.lo = self.pivot
            self.pending = False
        elif rule == "sat":
            self.pending = False
            if self.lo is None:
                self.step *= 2


class LexSplitter(Splitter):
    """Optimize lexicographic components one level at a time.

    At level k the top branch is split into "component k improves" and its
    complement. Once the improving piece is closed, every better solution
    must agree with the current best on component k, so the search moves to
    level k + 1. The last level is searched without splitting.
    """

    trusted = True

    def __init__(self, problem: ProblemInstance):
        obj = problem.objective
        if getattr(obj, "combinator", None) != "lex":
            raise UnsupportedObjective("the lexicographic splitter needs a lex objective")
        self.components = obj.components
        self.level = 0
        self.pending = False

    def pieces(self, deriv, state):
        if self.pending or self.level >= len(self.components) - 1:
            return None
        comp = self.components[self.level]
        cond = comp.order.precedes(comp.term, state.best_values[self.level])
        self.pending = True
        top = state.top
        return [and_(top, cond), and_(top, not_(cond))]

    def notify(self, rule, before, after):
        if rule == "close" and self.pending:
            self.level += 1
            self.pending = False
        elif rule == "sat":
            self.pending = False


class MultiDirectionalSplitter(Splitter):
    """Split a fresh branch into conjunctions of per-component improve/not-improve parts.

    Pieces with more improving components come first. Only branches equal to
    the current ``delta`` (that is, right after a new solution) are split.
    """

    trusted = True

    def __init__(self, problem: ProblemInstance):
        obj = problem.objective
        if getattr(obj, "combinator", "single") == "single":
            raise UnsupportedObjective("multi-directional splitting needs a multi-objective problem")
        self.components = obj.components

    def pieces(self, deriv, state):
        if len(state.branches) != 1 or state.top is not state.delta:
            return None
        goods = [c.order.precedes(c.term, v) for c, v in zip(self.components, state.best_values)]
        n = len(goods)
        masks = sorted(range(1 << n), key=lambda m: (-bin(m).count("1"), m))
        top = state.top
        out = []
        for m in masks:
            parts = [goods[i] if m >> i & 1 else not_(goods[i]) for i in range(n)]
            out.append(and_(top, *parts))
        return out


def default_splitter(problem, epsilon=Fraction(1, 10**6)):
    obj = problem.objective
    comb = getattr(obj, "combinator", "single")
    if comb == "single":
        if _is_builtin_single(obj) and (obj.order.builtin[1] in (INT, REAL)
                                        or obj.order.builtin[1].kind == "BitVec"):
            return BisectionSplitter(problem, epsilon)
        return None
    if comb == "lex":
        return LexSplitter(problem)
    return MultiDirectionalSplitter(problem)


# ---------------------------------------------------------------------------
# Running a strategy
# ---------------------------------------------------------------------------


@dataclass
class RunOutcome:
    status: str
    best: dict | None = None
    best_values: object = None
    state: EngineState | None = None
    trace: list = field(default_factory=list)
    iterations: int = 0
    splits: int = 0
    solver_calls: int = 0
    reason: str = ""


STRATEGIES = ("linear", "binary", "hybrid")


def run(problem: ProblemInstance, strategy="linear", backend=None, budget=None, splitter=None,
        initial=None, tau_mode="seq", select=None, cut=None, monitor=None, check_splits=None):
    """Run a derivation to saturation or until the budget is exhausted.

    ``strategy`` is "linear", "binary" or "hybrid", or a :class:`Splitter`
    instance (a binary-style search with custom pieces).
    """
    budget = budget or Budget()
    own_backend = backend is None
    backend = backend or Backend()
    calls0 = backend.solver_calls
    if isinstance(strategy, Splitter):
        splitter, strategy = strategy, "binary"
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if tau_mode not in ("seq", "set"):
        raise ValueError(f"unknown tau mode {tau_mode!r}")
    if strategy == "hybrid":
        obj = problem.objective
        if not (_is_builtin_single(obj) and (obj.order.builtin[1] in (INT, REAL)
                                             or obj.order.builtin[1].kind == "BitVec")):
            raise UnsupportedObjective("hybrid search needs a single built-in Int, Real or BitVec objective")
        if not backend.config.can_optimize:
            raise UnsupportedObjective("the configured solver cannot optimize")
    if strategy == "binary" and splitter is None:
        splitter = default_splitter(problem, budget.epsilon)
    if tau_mode == "set" and select is None:
        select = lambda branches: 0  # noqa: E731

    deriv = Derivation(problem, backend, monitor=monitor, cut=cut)
    start = time.monotonic()
    iterations = 0
    splits = 0
    state = None

    def outcome(status, reason=""):
        if own_backend:
            backend.close()
        return RunOutcome(
            status,
            dict(state.best) if state is not None else None,
            state.best_values if state is not None else None,
            state,
            deriv.trace,
            iterations,
            splits,
            backend.solver_calls - calls0,
            reason,
        )

    try:
        state = deriv.init(initial)
    except SolverUnknown as exc:
        return outcome(UNKNOWN_STATUS, exc.reason)
    if state is None:
        return outcome(INFEASIBLE)

    last_rule = "init"
    try:
        while state.branches:
            if iterations >= budget.max_iterations or time.monotonic() - start > budget.wall_timeout:
                return outcome(ANYTIME_BEST, "budget exhausted")
            if tau_mode == "set" and len(state.branches) > 1:
                idx = select(state.branches)
                state = state.with_top(idx)
            if strategy == "linear":
                rule, state2 = deriv.sat_or_close(state)
            elif strategy == "hybrid":
                if last_rule == "sat":
                    rule, state2 = deriv.sat_or_close(state)
                else:
                    rule, state2 = deriv.optimize_or_close(state)
            else:
                pieces = splitter.pieces(deriv, state) if splitter is not None else None
                if pieces:
                    trusted = splitter.trusted if check_splits is None else not check_splits
                    state2 = deriv.f_split(state, pieces, check=not trusted)
                    rule = "split"
                    splits += 1
                else:
                    rule, state2 = deriv.sat_or_close(state)
                if splitter is not None:
                    splitter.notify(rule, state, state2)
            iterations += 1
            state, last_rule = state2, rule
    except SolverUnknown as exc:
        return outcome(UNKNOWN_STATUS, exc.reason)
    except _Unbounded as exc:
        return outcome(UNBOUNDED_STATUS, str(exc))
    except EpsilonReached:
        return outcome(EPSILON_OPTIMAL, "window below epsilon")
    return outcome(OPTIMAL)


def run_parallel(problem, forks=2, backend_factory=None, **kwargs):
    """Set-mode search in independent forks with different branch selection.

    Fork ``i`` always picks branch ``i mod len(branches)``. The outcome of the
    lowest-numbered fork that reached OPTIMAL is returned, otherwise that of
    fork 0.
    """
    backend_factory = backend_factory or Backend

    def one(i):
        sel = lambda branches: i % len(branches)  # noqa: E731
        b = backend_factory()
        try:
            return run(problem, backend=b, tau_mode="set", select=sel, **kwargs)
        finally:
            b.close()

    with ThreadPoolExecutor(max_workers=forks) as pool:
        outcomes = list(pool.map(one, range(forks)))
    for o in outcomes:
        if o.status == OPTIMAL:
            return o
    return outcomes[0]


def _model_from_json(problem, model):
    if model is None:
        return None
    out = {}
    for v in problem.declarations:
        if v.name not in model:
            continue
        raw = model[v.name]
        if v.sort.kind == "BitVec":
            out[v.name] = parse_value(raw, v.sort)
        elif v.sort == REAL:
            out[v.name] = Fraction(raw)
        else:
            out[v.name] = raw
    return out


def replay(problem, records, backend, cut=None):
    """Re-apply a recorded rule sequence; returns the final state.

    ``records`` are trace dictionaries as produced by :func:`write_trace`.
    Split pieces are re-parsed and recorded models are reused as witnesses,
    so the final state matches the original whatever models the solver
    would pick now. Every step is still checked against the solver.
    """
    ctx = {v.name: v.sort for v in problem.declarations}
    deriv = Derivation(problem, backend, cut=cut)
    state = None
    for rec in records:
        rule = rec.get("rule")
        if rule == "init":
            if rec.get("verdict") == UNSAT:
                return None
            state = deriv.init(_model_from_json(problem, rec.get("model")))
        elif rule == "split":
            pieces = [parse_term(p, ctx) for p in rec["pieces"]]
            state = deriv.f_split(state, pieces, check=False)
        elif rule == "sat":
            witness = _model_from_json(problem, rec.get("model"))
            nxt = deriv.f_sat(state, witness=witness)
            if nxt is None:
                raise ValueError("replay diverged: recorded solution is not in the branch")
            state = nxt
        elif rule == "close":
            nxt = deriv.f_close(state)
            if nxt is None:
                raise ValueError("replay diverged: recorded close step found a solution")
            state = nxt
    return state


# ---------------------------------------------------------------------------
# Certificates and invariant checks
# ---------------------------------------------------------------------------


def certificate_check(problem: ProblemInstance, assignment: dict, backend=None) -> bool:
    """True iff the assignment satisfies the constraint and nothing is better.

    Raises :class:`SolverUnknown` when the solver cannot decide.
    """
    own = backend is None
    backend = backend or Backend()
    try:
        pins = problem.pins(assignment)
        res = backend.solve(and_(problem.constraint, *pins), problem.declarations, problem.leaf_terms)
        if res.status == UNKNOWN:
            raise SolverUnknown(res.reason)
        if res.status == UNSAT:
            return False
        values = problem.values_from(res)
        res2 = backend.solve(and_(problem.constraint, problem.better(values)), problem.declarations)
        if res2.status == UNKNOWN:
            raise SolverUnknown(res2.reason)
        return res2.status == UNSAT
    finally:
        if own:
            backend.close()


@dataclass
class Violation:
    check: str
    rule: str
    detail: str


class InvariantMonitor:
    """Checks the derivation invariants after every rule application.

    Violations and undecided checks are collected rather than raised, so a
    whole run can be audited at once.
    """

    def __init__(self, backend: Backend):
        self.backend = backend
        self.violations = []
        self.unknowns = []
        self.checks = 0

    def _entails(self, deriv, name, rule, gamma, psi):
        self.checks += 1
        try:
            ok = self.backend.check_entailment(gamma, psi, deriv.problem.declarations)
        except SolverUnknown as exc:
            self.unknowns.append((name, rule, exc.reason))
            return
        if not ok:
            self.violations.append(Violation(name, rule, print_term(psi)))

    def _status(self, deriv, formula):
        self.checks += 1
        return self.backend.solve(formula, deriv.problem.declarations).status

    def observe(self, deriv, rule, before, after):
        problem = deriv.problem
        phi = problem.constraint
        if rule in ("init", "sat"):
            st = self._status(deriv, and_(phi, *problem.pins(after.best)))
            if st == UNKNOWN:
                self.unknowns.append(("best satisfies constraint", rule, ""))
            elif st != SAT:
                self.violations.append(Violation("best satisfies constraint", rule, str(after.best)))
        if rule == "sat" and before is not None:
            dom = problem.order.precedes(after.best_values, before.best_values)
            st = self._status(deriv, dom)
            if st == UNKNOWN:
                self.unknowns.append(("improvement", rule, ""))
            elif st != SAT:
                self.violations.append(Violation(
                    "improvement", rule,
                    f"{render_value(after.best_values)} does not beat {render_value(before.best_values)}"))
        for b in after.branches:
            self._entails(deriv, "branch implies delta", rule, phi, implies(b, after.delta))
        self._entails(deriv, "branches equal delta", rule, phi, iff(or_(*after.branches), after.delta))
        if not after.branches:
            st = self._status(deriv, and_(phi, after.delta))
            if st == UNKNOWN:
                self.unknowns.append(("saturation empties delta", rule, ""))
            elif st != UNSAT:
                self.violations.append(Violation("saturation empties delta", rule, print_term(after.delta)))


__all__ = [
    "Budget",
    "ProblemInstance",
    "EngineState",
    "Derivation",
    "TraceRecord",
    "RunOutcome",
    "Splitter",
    "BisectionSplitter",
    "LexSplitter",
    "MultiDirectionalSplitter",
    "InvariantMonitor",
    "certificate_check",
    "is_saturated",
    "run",
    "run_parallel",
    "replay",
    "write_trace",
    "read_trace",
    "render_value",
    "value_to_json",
    "OPTIMAL",
    "ANYTIME_BEST",
    "EPSILON_OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED_STATUS",
    "UNKNOWN_STATUS",
]
