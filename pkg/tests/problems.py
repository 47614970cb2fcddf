"""Problem instances shared by the test modules."""

from fractions import Fraction

from gomt.engine import ProblemInstance
from gomt.orders import ObjectiveSpec, builtin_order, defined_order, lex_combine, pareto_combine
from gomt.terms import (
    INT,
    REAL,
    STRING,
    BitVecSort,
    BitVecValue,
    Const,
    Var,
    and_,
    app,
    eq,
    ite,
    or_,
)


def I(n):
    return Const(n, INT)


def R(q):
    return Const(Fraction(q), REAL)


def S(s):
    return Const(s, STRING)


def bv(width, k):
    return Const(BitVecValue(width, k), BitVecSort(width))


def abs_(t):
    return ite(app("<", t, I(0)), app("-", t), t)


def max_square():
    """Largest integer whose square is below 20."""
    x = Var("x", INT)
    return ProblemInstance.build(ObjectiveSpec(x, builtin_order("desc", INT)), app("<", app("*", x, x), I(20)))


def max_abs_square():
    """Same constraint, ordered by absolute value (two incomparable optima)."""
    x = Var("x", INT)
    v1, v2 = Var("v1", INT), Var("v2", INT)
    order = defined_order(v1, v2, app("<", abs_(v2), abs_(v1)))
    return ProblemInstance.build(ObjectiveSpec(x, order), app("<", app("*", x, x), I(20)))


def min_sum_hyperbola():
    """min x + y subject to x*y = 1, x > 0 (nonlinear real)."""
    x, y = Var("x", REAL), Var("y", REAL)
    phi = and_(eq(app("*", x, y), R(1)), app(">", x, R(0)))
    return ProblemInstance.build(ObjectiveSpec(app("+", x, y), builtin_order("asc", REAL)), phi)


def soft_constraints():
    """Two soft linear constraints counted by an ite sum; hard x, y >= 0."""
    x, y = Var("x", REAL), Var("y", REAL)
    s1 = app(">=", app("-", app("+", app("*", R(4), x), y), R(4)), R(0))
    s2 = app(">=", app("-", app("+", app("*", R(2), x), app("*", R(3), y)), R(6)), R(0))
    t = app("+", ite(s1, I(0), I(1)), ite(s2, I(0), I(1)))
    phi = and_(app(">=", x, R(0)), app(">=", y, R(0)))
    return ProblemInstance.build(ObjectiveSpec(t, builtin_order("asc", INT)), phi)


def shortest_largest_string():
    """tup(x, len x): shortest first, then the largest string; x contains "a"."""
    x = Var("x", STRING)
    a1, b1, a2, b2 = Var("a1", STRING), Var("b1", INT), Var("a2", STRING), Var("b2", INT)
    order = defined_order((a1, b1), (a2, b2),
                          or_(app("<", b1, b2), and_(eq(b1, b2), app("str.<", a2, a1))))
    phi = and_(app("str.contains", x, S("a")), app(">", app("str.len", x), I(1)))
    return ProblemInstance.build(ObjectiveSpec((x, app("str.len", x)), order), phi)


BV4 = BitVecSort(4)


def bitvector_gap():
    """Maximize n where n = x - y and y lies in [2^n, 2^(n+1)) (4-bit)."""
    n, x, y = Var("n", BV4), Var("x", BV4), Var("y", BV4)
    b = lambda k: bv(4, k)  # noqa: E731
    phi = and_(
        app("bvule", y, x),
        app("bvule", b(2), x),
        app("bvule", x, b(8)),
        app("bvule", app("bvshl", b(1), n), y),
        app("bvult", y, app("bvshl", b(1), app("bvadd", n, b(1)))),
        eq(n, app("bvsub", x, y)),
    )
    return ProblemInstance.build(ObjectiveSpec(n, builtin_order("desc", BV4)), phi)


def string_pareto():
    """Pareto over (len w asc, x desc) with x = s.w.s and len s < len w."""
    w, x, s = Var("w", STRING), Var("x", STRING), Var("s", STRING)
    lw = app("str.len", w)
    o1 = ObjectiveSpec(lw, builtin_order("asc", INT), app("<", app("str.len", s), lw))
    o2 = ObjectiveSpec(x, builtin_order("desc", STRING), eq(x, app("str.++", s, w, s)))
    return ProblemInstance.build(pareto_combine([o1, o2]))


def substring_pareto():
    """Pareto over (len w asc, x desc) with len w < 4 and x a substring of w."""
    w, x = Var("w", STRING), Var("x", STRING)
    o1 = ObjectiveSpec(app("str.len", w), builtin_order("asc", INT), app("<", app("str.len", w), I(4)))
    o2 = ObjectiveSpec(x, builtin_order("desc", STRING), app("str.contains", w, x))
    return ProblemInstance.build(pareto_combine([o1, o2]))


def bv2_lex():
    """Lex over (x asc, y + z desc) on 2-bit vectors, no constraint."""
    B2 = BitVecSort(2)
    x, y, z = Var("x", B2), Var("y", B2), Var("z", B2)
    return ProblemInstance.build(lex_combine([
        ObjectiveSpec(x, builtin_order("asc", B2)),
        ObjectiveSpec(app("bvadd", y, z), builtin_order("desc", B2)),
    ]))


def _random_atoms(rng, vs, width):
    sort = BitVecSort(width)
    k = lambda: Const(BitVecValue(width, rng.randrange(1 << width)), sort)  # noqa: E731
    atoms = []
    for _ in range(rng.randint(1, 3)):
        a, b = rng.choice(vs), rng.choice(vs + [k()])
        lhs = app(rng.choice(["bvadd", "bvmul", "bvsub"]), a, b) if rng.random() < 0.5 else a
        atoms.append(app(rng.choice(["bvule", "bvult", "=", "distinct"]), lhs, rng.choice(vs + [k()])))
    return atoms


def random_bitvector_problem(rng, kind="single", width=None):
    """Random constraint over 1-3 bit-vectors of width <= 3.

    ``kind`` is "single", "lex" or "pareto"; the combined kinds get two
    components, each a variable or a variable plus a constant.
    """
    width = width or rng.randint(1, 3)
    sort = BitVecSort(width)
    vs = [Var(f"v{i}", sort) for i in range(rng.randint(1, 3))]

    def component():
        t = rng.choice(vs)
        if rng.random() < 0.3:
            t = app("bvadd", t, Const(BitVecValue(width, rng.randrange(1 << width)), sort))
        return ObjectiveSpec(t, builtin_order(rng.choice(["asc", "desc"]), sort))

    if kind == "single":
        obj = component()
    else:
        comps = [component(), component()]
        obj = lex_combine(comps) if kind == "lex" else pareto_combine(comps)
    return ProblemInstance.build(obj, and_(*_random_atoms(rng, vs, width)), vs)
