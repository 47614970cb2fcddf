import itertools
import random

import pytest

from gomt.backend import SAT, Backend
from gomt.engine import INFEASIBLE, OPTIMAL, ProblemInstance, RunOutcome, run
from gomt.errors import CapExceeded, UnsupportedSort
from gomt.oracle import (
    DomainBounds,
    distinct_values,
    enumerate_solutions,
    minimal_elements,
    python_precedes,
    validate,
)
from gomt.orders import ObjectiveSpec, builtin_order
from gomt.terms import FALSE, INT, REAL, BitVecValue, Var, and_, eq, value_to_term

import problems

B4 = lambda k: BitVecValue(4, k)  # noqa: E731


@pytest.fixture(scope="module")
def backend():
    b = Backend()
    yield b
    b.close()


def test_enumerates_bounded_integers(backend):
    entries = enumerate_solutions(problems.max_square(), DomainBounds(ints={"x": (-10, 10)}), backend)
    assert sorted(e.assignment["x"] for e in entries) == list(range(-4, 5))
    assert all(e.values == e.assignment["x"] for e in entries)


def test_false_constraint_has_no_solutions(backend):
    x = Var("x", INT)
    p = ProblemInstance.build(ObjectiveSpec(x, builtin_order("asc", INT)), FALSE, [x])
    assert enumerate_solutions(p, DomainBounds(ints={"x": (0, 3)}), backend) == []


def test_bitvector_problem_solutions(backend):
    entries = enumerate_solutions(problems.bitvector_gap(), DomainBounds(), backend)
    found = {(e.assignment["n"], e.assignment["x"], e.assignment["y"]) for e in entries}
    assert (B4(2), B4(7), B4(5)) in found
    assert (B4(2), B4(6), B4(4)) in found


def test_cap_and_unsupported_domains(backend):
    p = problems.bitvector_gap()
    with pytest.raises(CapExceeded):
        enumerate_solutions(p, DomainBounds(cap=100), backend)
    with pytest.raises(UnsupportedSort):
        enumerate_solutions(problems.min_sum_hyperbola(), DomainBounds(), backend)
    with pytest.raises(UnsupportedSort):
        enumerate_solutions(problems.max_square(), DomainBounds(), backend)
    with pytest.raises(UnsupportedSort):
        DomainBounds(strings={"s": (2, "aB")}).size([Var("s", problems.S("a").sort)])


def test_domain_size():
    x, s = Var("x", INT), Var("s", problems.S("").sort)
    bounds = DomainBounds(ints={"x": (-2, 2)}, strings={"s": (2, "az")})
    assert bounds.size([x, s]) == 5 * (1 + 2 + 4)


@pytest.mark.parametrize("seed", range(6))
def test_enumeration_is_complete(backend, seed):
    rng = random.Random(seed)
    width = 1 + seed % 3
    p = problems.random_bitvector_problem(rng, "single", width)
    entries = enumerate_solutions(p, DomainBounds(), backend)
    domain = [BitVecValue(width, k) for k in range(1 << width)]
    ground = []
    assignments = list(itertools.product(domain, repeat=len(p.declarations)))
    for values in assignments:
        pins = [eq(v, value_to_term(c)) for v, c in zip(p.declarations, values)]
        ground.append(and_(p.constraint, *pins))
    direct = sum(st == SAT for st in backend.check_batch(ground, p.declarations))
    assert len(entries) == direct
    assert len({tuple(sorted(e.assignment.items(), key=lambda kv: kv[0])) for e in entries}) == len(entries)


def test_minimal_elements_under_absolute_value(backend):
    p = problems.max_abs_square()
    entries = enumerate_solutions(p, DomainBounds(ints={"x": (-10, 10)}), backend)
    mins = minimal_elements(entries, p.objective, backend)
    assert sorted(distinct_values(mins)) == [-4, 4]


def test_single_entry_is_minimal(backend):
    p = problems.max_square()
    entries = enumerate_solutions(p, DomainBounds(ints={"x": (3, 3)}), backend)
    assert minimal_elements(entries, p.objective, backend) == entries


def test_substring_pareto_minima(backend):
    p = problems.substring_pareto()
    bounds = DomainBounds(strings={"w": (3, "abz"), "x": (3, "abz")})
    entries = enumerate_solutions(p, bounds, backend)
    mins = set(distinct_values(minimal_elements(entries, p.objective, backend)))
    assert (1, "z") in mins and (0, "") in mins
    assert mins == {(0, ""), (1, "z"), (2, "zz"), (3, "zzz")}
    for e in entries:
        for m in mins:
            assert not python_precedes(p.order, e.values, m)


def test_validate_engine_outcome(backend):
    p = problems.bitvector_gap()
    out = run(p, "binary")
    report = validate(p, DomainBounds(), out, backend)
    assert report.passed and report.minimal_values == [B4(2)]
    forged = RunOutcome(OPTIMAL, {"n": B4(1), "x": B4(3), "y": B4(2)}, B4(1))
    assert not validate(p, DomainBounds(), forged, backend).passed


def test_validate_infeasible(backend):
    x = Var("x", INT)
    p = ProblemInstance.build(ObjectiveSpec(x, builtin_order("asc", INT)), FALSE, [x])
    assert validate(p, DomainBounds(ints={"x": (0, 3)}), RunOutcome(INFEASIBLE), backend).passed


def test_python_comparator_rejects_defined_orders():
    with pytest.raises(NotImplementedError):
        python_precedes(problems.max_abs_square().order, 1, 2)
    assert python_precedes(builtin_order("desc", REAL), 2, 1)
