"""Brute-force ground truth on bounded domains.

Solutions are enumerated with blocking clauses, dominance between the
resulting objective values is decided by ground solver queries, and a
pure-Python comparator for the built-in orders and combinators gives an
independent second opinion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .backend import SAT, UNKNOWN, Backend, Session, SolverConfig, declaration_lines
from .engine import INFEASIBLE, OPTIMAL, ProblemInstance
from .errors import CapExceeded, SolverUnknown, UnsupportedSort
from .orders import LEX, MAXMIN, MINMAX, PARETO, OrderSpec, rebuild, to_operand
from .smtlib import parse_value, print_symbol, print_term
from .terms import BOOL, INT, REAL, STRING, STRING_ALPHABET, eq, not_, or_

DEFAULT_CAP = 10**6


@dataclass
class DomainBounds:
    """Finite ranges for the declared variables.

    Bitvectors and Booleans are always finite. Integers need ``ints[name] =
    (lo, hi)``; strings need ``strings[name] = (max_len, alphabet)``. Reals
    cannot be bounded into a finite domain.
    """

    ints: dict = field(default_factory=dict)
    strings: dict = field(default_factory=dict)
    default_int: tuple | None = None
    default_string: tuple | None = None
    cap: int = DEFAULT_CAP

    def size(self, declarations) -> int:
        total = 1
        for v in declarations:
            total *= self._size_of(v)
        return total

    def _size_of(self, v):
        if v.sort == BOOL:
            return 2
        if v.sort.kind == "BitVec":
            return 1 << v.sort.width
        if v.sort == INT:
            lo, hi = self._int(v)
            return max(0, hi - lo + 1)
        if v.sort == STRING:
            n, alpha = self._string(v)
            k = len(alpha)
            return sum(k**i for i in range(n + 1))
        raise UnsupportedSort(f"cannot enumerate variables of sort {v.sort}")

    def _int(self, v):
        b = self.ints.get(v.name, self.default_int)
        if b is None:
            raise UnsupportedSort(f"integer variable {v.name} needs bounds")
        return b

    def _string(self, v):
        b = self.strings.get(v.name, self.default_string)
        if b is None:
            raise UnsupportedSort(f"string variable {v.name} needs a length bound")
        n, alpha = b
        for ch in alpha:
            if ch not in STRING_ALPHABET:
                raise UnsupportedSort(f"alphabet character {ch!r} outside 'a'-'z'")
        return n, alpha

    def constraint_lines(self, declarations) -> list:
        out = []
        for v in declarations:
            name = print_symbol(v.name)
            if v.sort == INT:
                lo, hi = self._int(v)
                out.append(f"(assert (and (<= {_int_text(lo)} {name}) (<= {name} {_int_text(hi)})))")
            elif v.sort == STRING:
                n, alpha = self._string(v)
                chars = [f'(str.to_re "{c}")' for c in sorted(set(alpha))]
                if not chars:
                    out.append(f'(assert (= {name} ""))')
                else:
                    re_text = chars[0] if len(chars) == 1 else "(re.union " + " ".join(chars) + ")"
                    out.append(f"(assert (str.in_re {name} (re.* {re_text})))")
                    out.append(f"(assert (<= (str.len {name}) {n}))")
            elif v.sort == REAL:
                raise UnsupportedSort("real variables cannot be enumerated")
        return out


def _int_text(k):
    return f"(- {-k})" if k < 0 else str(k)


@dataclass
class Entry:
    assignment: dict
    values: object


def enumerate_solutions(problem: ProblemInstance, bounds: DomainBounds, backend: Backend | None = None):
    """All in-bounds assignments satisfying the constraint, with objective values.

    String problems are sharded on the values of the first string variable
    so each push/pop scope only accumulates a few blocking clauses.
    """
    decls = list(problem.declarations)
    size = bounds.size(decls)
    if size > bounds.cap:
        raise CapExceeded(f"domain has {size} assignments, cap is {bounds.cap}")
    config = backend.config if backend is not None else SolverConfig()
    sess = Session(config)
    out = []
    try:
        for line in declaration_lines(decls):
            sess.expect_success(line)
        for line in bounds.constraint_lines(decls):
            sess.expect_success(line)
        sess.expect_success(f"(assert {print_term(problem.constraint)})")
        shard = next((v for v in decls if v.sort == STRING), None)
        if shard is None:
            _enumerate_scope(sess, problem, decls, backend, out, size)
        else:
            n, alpha = bounds._string(shard)
            for value in _strings(n, alpha):
                sess.expect_success("(push 1)")
                sess.expect_success(f"(assert {print_term(_pin(shard, value))})")
                _enumerate_scope(sess, problem, decls, backend, out, size)
                sess.expect_success("(pop 1)")
    finally:
        if backend is not None:
            backend.transcript.extend(sess.transcript)
        sess.close()
    return out


def _strings(n, alpha):
    chars = sorted(set(alpha))
    for k in range(n + 1):
        for combo in itertools.product(chars, repeat=k):
            yield "".join(combo)


def _enumerate_scope(sess, problem, decls, backend, out, size):
    terms = problem.leaf_terms
    asked = list(decls) + list(terms)
    while True:
        if backend is not None:
            backend.solver_calls += 1
        resp = sess.command("(check-sat)")
        if resp.text == UNKNOWN:
            raise SolverUnknown("enumeration query undecided")
        if resp.text != SAT:
            return
        if not asked:
            out.append(Entry({}, ()))
            return
        text = "(get-value (" + " ".join(print_term(t) for t in asked) + "))"
        vals = [parse_value(pair[1], t.sort) for t, pair in zip(asked, sess.command(text))]
        assignment = {v.name: x for v, x in zip(decls, vals[: len(decls)])}
        out.append(Entry(assignment, rebuild(problem.operand, vals[len(decls):])))
        if len(out) > size:
            raise CapExceeded("enumeration did not terminate within the domain size")
        block = or_(*(not_(_pin(v, assignment[v.name])) for v in decls))
        sess.expect_success(f"(assert {print_term(block)})")


def _pin(v, value):
    return eq(v, to_operand(value, v.sort))


def _value_key(v):
    return repr(v)


def distinct_values(entries) -> list:
    seen = {}
    for e in entries:
        seen.setdefault(_value_key(e.values), e.values)
    return list(seen.values())


def minimal_elements(entries, objective, backend: Backend | None = None) -> list:
    """Entries whose objective values no other entry's values dominate."""
    entries = list(entries)
    if not entries:
        return []
    own = backend is None
    backend = backend or Backend()
    try:
        order = objective.order
        # Antichain sweep: by transitivity, anything dominated by a discarded
        # value is also dominated by a kept one, so comparing against the
        # current front suffices.
        front = []
        for v in distinct_values(entries):
            queries = [order.precedes(m, v) for m in front] + [order.precedes(v, m) for m in front]
            statuses = backend.check_batch(queries, declarations=()) if queries else []
            if UNKNOWN in statuses:
                raise SolverUnknown("a dominance query was undecided")
            k = len(front)
            if any(st == SAT for st in statuses[:k]):
                continue
            front = [m for m, st in zip(front, statuses[k:]) if st != SAT] + [v]
        minimal_keys = {_value_key(v) for v in front}
        return [e for e in entries if _value_key(e.values) in minimal_keys]
    finally:
        if own:
            backend.close()


@dataclass
class ValidationReport:
    passed: bool
    detail: str
    minimal_values: list = field(default_factory=list)
    solutions: int = 0


def validate(problem: ProblemInstance, bounds: DomainBounds, outcome, backend: Backend | None = None):
    """Compare an engine outcome with the enumerated minimal elements."""
    entries = enumerate_solutions(problem, bounds, backend)
    if outcome.status == INFEASIBLE:
        ok = not entries
        return ValidationReport(ok, "no solutions" if ok else f"{len(entries)} solutions exist",
                                solutions=len(entries))
    if outcome.status != OPTIMAL:
        return ValidationReport(False, f"cannot validate status {outcome.status}", solutions=len(entries))
    if not entries:
        return ValidationReport(False, "engine found a solution but the bounded domain has none")
    minimal = distinct_values(minimal_elements(entries, problem.objective, backend))
    keys = {_value_key(v) for v in minimal}
    ok = _value_key(outcome.best_values) in keys
    detail = "objective value is minimal" if ok else "objective value is dominated"
    return ValidationReport(ok, detail, minimal, len(entries))


# ---------------------------------------------------------------------------
# Independent comparator
# ---------------------------------------------------------------------------


def _leaf_less(sort, a, b):
    if sort.kind == "BitVec":
        return a.value < b.value
    if sort in (INT, REAL, STRING):
        return a < b
    raise UnsupportedSort(f"no built-in comparison on {sort}")


def python_precedes(order: OrderSpec, a, b) -> bool:
    """Decide ``a`` strictly precedes ``b`` in plain Python.

    Only built-in orders and the combinators over them are supported.
    Python's ``<`` on strings over 'a'-'z' coincides with ``str.<``.
    """
    if order.kind == "atomic":
        if order.builtin is None:
            raise NotImplementedError("user-defined orders have no Python evaluation")
        direction, sort = order.builtin
        return _leaf_less(sort, a, b) if direction == "asc" else _leaf_less(sort, b, a)
    kids = order.children
    n = len(kids)

    def weak(o, x, y):
        return x == y or python_precedes(o, x, y)

    if order.kind == LEX:
        for j in range(n):
            if python_precedes(kids[j], a[j], b[j]):
                return True
            if a[j] != b[j]:
                return False
        return False
    if order.kind == PARETO:
        return all(weak(kids[i], a[i], b[i]) for i in range(n)) and any(
            python_precedes(kids[i], a[i], b[i]) for i in range(n))
    if order.kind in (MINMAX, MAXMIN):
        base = kids[0]
        if order.kind == MINMAX:
            ai = [i for i in range(n) if all(weak(base, a[k], a[i]) for k in range(n))]
            bj = [j for j in range(n) if all(weak(base, b[k], b[j]) for k in range(n))]
            return any(python_precedes(base, a[i], b[j]) for i in ai for j in bj)
        ai = [i for i in range(n) if all(weak(base, a[i], a[k]) for k in range(n))]
        bj = [j for j in range(n) if all(weak(base, b[j], b[k]) for k in range(n))]
        return any(python_precedes(base, b[j], a[i]) for i in ai for j in bj)
    raise ValueError(f"unknown order kind {order.kind!r}")


def ground_precedes(order: OrderSpec, pairs, backend: Backend) -> list:
    """Solver verdicts for many ground dominance questions, in one process."""
    formulas = [order.precedes(a, b) for a, b in pairs]
    statuses = backend.check_batch(formulas, declarations=())
    if UNKNOWN in statuses:
        raise SolverUnknown("a ground dominance query was undecided")
    return [st == SAT for st in statuses]


__all__ = [
    "DomainBounds",
    "Entry",
    "enumerate_solutions",
    "minimal_elements",
    "distinct_values",
    "validate",
    "ValidationReport",
    "python_precedes",
    "ground_precedes",
]
