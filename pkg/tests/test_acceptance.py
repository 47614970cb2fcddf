"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``PASS criterion N`` or ``FAIL criterion N`` line; the
lines are also collected in the terminal summary.
"""

import itertools
import random
from fractions import Fraction

import pytest

from gomt.backend import SAT, Backend
from gomt.engine import (
    EPSILON_OPTIMAL,
    INFEASIBLE,
    OPTIMAL,
    UNKNOWN_STATUS,
    Budget,
    Derivation,
    InvariantMonitor,
    certificate_check,
    is_saturated,
    run,
)
from gomt.oracle import DomainBounds, python_precedes, validate
from gomt.orders import ObjectiveSpec, builtin_order, lex_combine, maxmin_combine, minmax_combine, pareto_combine
from gomt.terms import INT, STRING, BitVecSort, BitVecValue, Var, and_, app, not_

import problems
from problems import I, S


@pytest.fixture(scope="module")
def backend():
    b = Backend()
    yield b
    b.close()


def test_max_square_all_strategies(acceptance):
    with acceptance(1, "largest x with x*x < 20 is 4 under linear, binary and hybrid") as note:
        for strategy in ("linear", "binary", "hybrid"):
            out = run(problems.max_square(), strategy)
            note(f"{strategy}={out.status} x={out.best and out.best['x']}")
            assert out.status == OPTIMAL and out.best == {"x": 4}, strategy


def test_absolute_value_order(acceptance, backend):
    with acceptance(2, "absolute-value order: optimum is +-4 and both certify") as note:
        p = problems.max_abs_square()
        out = run(p)
        note(f"{out.status} x={out.best and out.best['x']}")
        assert out.status == OPTIMAL and out.best["x"] in (-4, 4)
        assert certificate_check(p, {"x": 4}, backend)
        assert certificate_check(p, {"x": -4}, backend)


def test_shortest_largest_string(acceptance):
    with acceptance(3, "shortest-then-largest string containing 'a' is \"za\"") as note:
        out = run(problems.shortest_largest_string())
        note(f"{out.status} x={out.best and out.best['x']!r}")
        assert out.status == OPTIMAL and out.best["x"] == "za"


def test_bitvector_gap_binary(acceptance, backend):
    with acceptance(4, "4-bit gap problem: binary gives n=0010, minimal over the full domain") as note:
        p = problems.bitvector_gap()
        out = run(p, "binary")
        note(f"{out.status} n={out.best_values}")
        assert out.status == OPTIMAL and out.best["n"] == BitVecValue(4, 2)
        report = validate(p, DomainBounds(), out, backend)
        note(f"{report.solutions} solutions enumerated")
        assert report.passed, report.detail


def test_string_pareto_replay_and_linear(acceptance, backend):
    with acceptance(5, "string pareto: scripted derivation ends at (1, \"z\"), linear run certifies") as note:
        p = problems.string_pareto()
        w, x = Var("w", STRING), Var("x", STRING)
        lw = app("str.len", w)
        ge = app("str.<=", S("aabaa"), x)
        gt = app("str.<", S("aabaa"), x)
        d = Derivation(p, backend)
        st = d.init(initial={"x": "aabaa", "s": "a", "w": "aba"})
        st = d.f_split(st, [and_(app("<", lw, I(3)), ge), and_(app("<=", lw, I(3)), gt)])
        st = d.f_split(st, [and_(app("<", lw, I(2)), ge), and_(app("<=", I(2), lw), app("<", lw, I(3)), ge)])
        st = d.f_sat(st, witness={"x": "b", "s": "", "w": "b"})
        st = d.f_sat(st, witness={"x": "z", "s": "", "w": "z"})
        assert d.f_sat(st) is None
        st = d.f_close(st)
        note(f"replay final {st.best_values}")
        assert is_saturated(st) and st.best_values == (1, "z")

        out = run(p, "linear")
        note(f"linear {out.status} {out.best_values}")
        assert out.status == OPTIMAL
        assert certificate_check(p, out.best, backend)


def test_nonlinear_real_epsilon_and_hybrid(acceptance):
    with acceptance(6, "min x+y with x*y=1: binary within 1e-6, hybrid exactly 2") as note:
        eps = Fraction(1, 10**6)
        p = problems.min_sum_hyperbola()
        out = run(p, "binary", budget=Budget(epsilon=eps))
        note(f"binary {out.status} {float(out.best_values):.9f}")
        assert out.status == EPSILON_OPTIMAL and out.best_values <= 2 + eps
        b = Backend()
        try:
            if b.config.can_optimize:
                out = run(p, "hybrid", backend=b)
                note(f"hybrid {out.status} {out.best_values}")
                assert out.status == OPTIMAL and out.best_values == 2
            else:
                note("hybrid skipped: solver cannot optimize")
        finally:
            b.close()


def test_soft_constraints(acceptance, backend):
    with acceptance(7, "two soft constraints: minimum violation count is 0") as note:
        p = problems.soft_constraints()
        for strategy in ("linear", "binary"):
            out = run(p, strategy)
            note(f"{strategy} {out.status} {out.best_values}")
            assert out.status == OPTIMAL and out.best_values == 0
        assert certificate_check(p, {"x": 2, "y": 1}, backend)


def _bound(problem):
    obj = problem.objective
    comps = getattr(obj, "components", None) or [obj]
    width = max(v.sort.width for v in problem.declarations)
    return (1 << width) * len(comps)


def test_random_bitvector_problems(acceptance):
    with acceptance(8, "50 random bit-vector problems: invariants, iteration bound, certificates, oracle") as note:
        rng = random.Random(20240611)
        counts = {"optimal": 0, "infeasible": 0, "unknown": 0}
        violations = []
        monitor_backend = Backend(incremental=True)
        check_backend = Backend()
        try:
            for i in range(50):
                kind = rng.choice(["single", "lex", "pareto"])
                p = problems.random_bitvector_problem(rng, kind)
                strategy = {"single": rng.choice(["linear", "binary"]), "lex": "binary", "pareto": "linear"}[kind]
                monitor = InvariantMonitor(monitor_backend)
                engine_backend = Backend(incremental=True)
                try:
                    out = run(p, strategy, backend=engine_backend, monitor=monitor)
                finally:
                    engine_backend.close()
                tag = f"#{i} {kind}/{strategy}"
                if out.status == UNKNOWN_STATUS or monitor.unknowns:
                    counts["unknown"] += 1
                    continue
                violations += [f"{tag}: {v.check} after {v.rule}" for v in monitor.violations]
                if out.iterations > _bound(p) + out.splits:
                    violations.append(f"{tag}: {out.iterations} iterations > {_bound(p)} + {out.splits}")
                if out.status == INFEASIBLE:
                    counts["infeasible"] += 1
                elif out.status == OPTIMAL:
                    counts["optimal"] += 1
                    if not certificate_check(p, out.best, check_backend):
                        violations.append(f"{tag}: certificate failed")
                else:
                    violations.append(f"{tag}: unexpected status {out.status}")
                report = validate(p, DomainBounds(), out, check_backend)
                if not report.passed:
                    violations.append(f"{tag}: oracle {report.detail}")
        finally:
            monitor_backend.close()
            check_backend.close()
        note(", ".join(f"{k}={v}" for k, v in counts.items()))
        note(f"violations={len(violations)}")
        assert not violations, violations[:5]


B2 = BitVecSort(2)
BV2 = [BitVecValue(2, k) for k in range(4)]
AZ = ["".join(c) for n in range(3) for c in itertools.product("az", repeat=n)]


def _agreement(backend, obj, domain):
    # One ground query for the whole table; per-pair queries only to locate a mismatch.
    pairs = list(itertools.product(domain, repeat=2))
    formulas = [obj.order.precedes(a, b) for a, b in pairs]
    expected = [python_precedes(obj.order, a, b) for a, b in pairs]
    table = and_(*(f if e else not_(f) for f, e in zip(formulas, expected)))
    if backend.check_batch([table], declarations=()) == [SAT]:
        return []
    statuses = backend.check_batch(formulas, declarations=())
    return [p for p, st, e in zip(pairs, statuses, expected) if (st == SAT) != e]


def test_combinators_match_comparator(acceptance, backend):
    with acceptance(9, "lex/pareto/minmax/maxmin formulas agree with the direct comparator") as note:
        x, y = Var("x", B2), Var("y", B2)
        s, t = Var("s", STRING), Var("t", STRING)
        objectives = []
        for dx, dy in itertools.product(["asc", "desc"], repeat=2):
            bvs = [ObjectiveSpec(x, builtin_order(dx, B2)), ObjectiveSpec(y, builtin_order(dy, B2))]
            strs = [ObjectiveSpec(s, builtin_order(dx, STRING)), ObjectiveSpec(t, builtin_order(dy, STRING))]
            objectives += [(lex_combine(bvs), BV2), (pareto_combine(bvs), BV2),
                           (lex_combine(strs), AZ), (pareto_combine(strs), AZ)]
        for d in ("asc", "desc"):
            objectives += [(minmax_combine([x, y], builtin_order(d, B2)), BV2),
                           (maxmin_combine([x, y], builtin_order(d, B2)), BV2),
                           (minmax_combine([s, t], builtin_order(d, STRING)), AZ),
                           (maxmin_combine([s, t], builtin_order(d, STRING)), AZ)]
        mismatches = []
        for obj, base in objectives:
            mismatches += _agreement(backend, obj, list(itertools.product(base, repeat=2)))
        note(f"{len(objectives)} objectives, {len(mismatches)} mismatches")
        assert not mismatches, mismatches[:5]

        b = BitVecValue.from_bits
        lo = lex_combine([ObjectiveSpec(x, builtin_order("asc", B2)), ObjectiveSpec(y, builtin_order("desc", B2))])
        chain = [(b("01"), b("11")), (b("01"), b("10")), (b("11"), b("10"))]
        a_, b_ = Var("a", INT), Var("b", INT)
        mn = minmax_combine([a_, b_], builtin_order("asc", INT))
        mx = maxmin_combine([a_, b_], builtin_order("asc", INT))
        instances = [lo.order.precedes(chain[0], chain[1]), lo.order.precedes(chain[1], chain[2]),
                     mn.order.precedes((5, 0), (6, 6)), mx.order.precedes((6, 6), (5, 0))]
        assert backend.check_batch(instances, declarations=()) == [SAT] * 4
        assert python_precedes(mn.order, (5, 0), (6, 6)) and python_precedes(mx.order, (6, 6), (5, 0))
