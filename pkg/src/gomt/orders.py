"""Definable strict partial orders, multi-objective combinators and Better.

An *operand* is either a term or a (possibly nested) tuple of operands. Tuple
operands never reach the solver: every comparison between tuples is expanded
into a formula over their components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ArityMismatch, ExtraFreeVars, SortMismatch, UnsupportedSort
from .terms import (
    BOOL,
    INT,
    REAL,
    STRING,
    Const,
    Sort,
    Term,
    TupleSort,
    Var,
    and_,
    app,
    eq,
    free_vars,
    or_,
    substitute,
    value_to_term,
)

LEX, PARETO, MINMAX, MAXMIN, BOXED, SINGLE = "lex", "pareto", "minmax", "maxmin", "boxed", "single"


# ---------------------------------------------------------------------------
# Operand helpers
# ---------------------------------------------------------------------------


def operand_sort(x) -> Sort:
    if isinstance(x, tuple):
        return TupleSort(*(operand_sort(c) for c in x))
    return x.sort


def leaves(x) -> list:
    """Flatten an operand (or value tuple) into its leaves, left to right."""
    if isinstance(x, tuple):
        out = []
        for c in x:
            out.extend(leaves(c))
        return out
    return [x]


def rebuild(shape, flat):
    """Inverse of :func:`leaves`: refill ``shape`` with items from ``flat``."""
    it = iter(flat)

    def go(s):
        if isinstance(s, tuple):
            return tuple(go(c) for c in s)
        return next(it)

    out = go(shape)
    return out


def to_operand(x, sort: Sort):
    """Lift a value, term or tuple thereof to an operand of ``sort``."""
    if sort.kind == "Tuple":
        if not isinstance(x, tuple):
            raise SortMismatch(f"expected a tuple of sort {sort}, got {x!r}")
        if len(x) != len(sort.components):
            raise ArityMismatch(f"expected {len(sort.components)} components, got {len(x)}")
        return tuple(to_operand(c, s) for c, s in zip(x, sort.components))
    if isinstance(x, Term):
        if x.sort != sort:
            raise SortMismatch(f"operand {x} has sort {x.sort}, expected {sort}")
        return x
    if isinstance(x, tuple):
        raise SortMismatch(f"expected {sort}, got a tuple")
    if sort == REAL and not isinstance(x, bool) and isinstance(x, (int, float)):
        x = Fraction(x)
    t = value_to_term(x)
    if t.sort != sort:
        raise SortMismatch(f"value {x!r} has sort {t.sort}, expected {sort}")
    return t


def equal_formula(a, b) -> Term:
    """Structural equality of two operands of the same shape."""
    if isinstance(a, tuple):
        return and_(*(equal_formula(x, y) for x, y in zip(a, b)))
    return eq(a, b)


# ---------------------------------------------------------------------------
# Orders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderSpec:
    """A strict partial order, atomic (defining formula) or combined.

    ``param1``/``param2`` are variables, or nested tuples of variables when
    the order compares tuples directly. ``body`` holds for (param1, param2)
    exactly when param1 strictly precedes (is better than) param2.
    """

    kind: str  # "atomic" | lex | pareto | minmax | maxmin
    param1: object = None
    param2: object = None
    body: Term | None = None
    children: tuple = ()
    totality_hint: bool = False
    well_founded_hint: bool = False
    builtin: tuple | None = None  # (direction, sort) for built-in orders

    @property
    def sort(self) -> Sort:
        if self.kind == "atomic":
            return operand_sort(self.param1)
        return TupleSort(*(c.sort for c in self.children))

    @property
    def arity(self) -> int:
        return len(self.children) if self.kind != "atomic" else 1

    def precedes(self, a, b) -> Term:
        """Formula stating that operand ``a`` strictly precedes ``b``."""
        a = to_operand(a, self.sort)
        b = to_operand(b, self.sort)
        if self.kind == "atomic":
            mapping = dict(zip(leaves(self.param1), leaves(a)))
            mapping.update(zip(leaves(self.param2), leaves(b)))
            return substitute(self.body, mapping)
        kids = self.children
        if self.kind == LEX:
            disj = []
            for j in range(len(kids)):
                eqs = [equal_formula(a[i], b[i]) for i in range(j)]
                disj.append(and_(*eqs, kids[j].precedes(a[j], b[j])))
            return or_(*disj)
        if self.kind == PARETO:
            weak = [kids[i].weakly_precedes(a[i], b[i]) for i in range(len(kids))]
            strict = or_(*(kids[j].precedes(a[j], b[j]) for j in range(len(kids))))
            return and_(*weak, strict)
        if self.kind in (MINMAX, MAXMIN):
            base = kids[0]
            n = len(kids)
            disj = []
            for i in range(n):
                for j in range(n):
                    if self.kind == MINMAX:
                        side = [base.weakly_precedes(a[k], a[i]) for k in range(n)]
                        side += [base.weakly_precedes(b[k], b[j]) for k in range(n)]
                        core = base.precedes(a[i], b[j])
                    else:
                        side = [base.weakly_precedes(a[i], a[k]) for k in range(n)]
                        side += [base.weakly_precedes(b[j], b[k]) for k in range(n)]
                        core = base.precedes(b[j], a[i])
                    disj.append(and_(*side, core))
            return or_(*disj)
        raise ValueError(f"unknown order kind {self.kind!r}")

    def weakly_precedes(self, a, b) -> Term:
        return reflexive_closure_formula(self, a, b)


_NUMERIC_OPS = {"asc": "<", "desc": ">"}
_BV_OPS = {"asc": "bvult", "desc": "bvugt"}


def builtin_order(direction: str, sort: Sort) -> OrderSpec:
    """The standard order on ``sort``; ``asc`` prefers smaller values."""
    if direction not in ("asc", "desc"):
        raise ValueError(f"direction must be 'asc' or 'desc', got {direction!r}")
    v1, v2 = Var("v1", sort), Var("v2", sort)
    if sort in (INT, REAL):
        body = app(_NUMERIC_OPS[direction], v1, v2)
        wf = False
    elif sort.kind == "BitVec":
        body = app(_BV_OPS[direction], v1, v2)
        wf = True
    elif sort == STRING:
        # desc is the dual of str.<, not a reversed-character ordering
        body = app("str.<", v1, v2) if direction == "asc" else app("str.<", v2, v1)
        wf = direction == "asc"
    else:
        raise UnsupportedSort(f"no built-in order on {sort}")
    return OrderSpec("atomic", v1, v2, body, totality_hint=True, well_founded_hint=wf,
                     builtin=(direction, sort))


def defined_order(param1, param2, body: Term, totality_hint=False, well_founded_hint=False) -> OrderSpec:
    """An order given by a formula over two parameters.

    The order axioms are the caller's obligation and are not checked.
    """
    if operand_sort(param1) != operand_sort(param2):
        raise SortMismatch("order parameters must share one sort")
    if body.sort != BOOL:
        raise SortMismatch(f"order body must be a formula, got sort {body.sort}")
    params = leaves(param1) + leaves(param2)
    for p in params:
        if not isinstance(p, Var):
            raise SortMismatch(f"order parameter {p!r} is not a variable")
    if len(set(params)) != len(params):
        raise SortMismatch("order parameters must be distinct variables")
    extra = free_vars(body) - set(params)
    if extra:
        names = ", ".join(sorted(v.name for v in extra))
        raise ExtraFreeVars(f"order body mentions variables other than its parameters: {names}")
    return OrderSpec("atomic", param1, param2, body, totality_hint=totality_hint,
                     well_founded_hint=well_founded_hint)


def reflexive_closure_formula(order: OrderSpec, a, b) -> Term:
    a = to_operand(a, order.sort)
    b = to_operand(b, order.sort)
    return or_(order.precedes(a, b), equal_formula(a, b))


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectiveSpec:
    term: object  # Term or tuple operand
    order: OrderSpec
    constraint: Term = Const(True, BOOL)

    def __post_init__(self):
        if operand_sort(self.term) != self.order.sort:
            raise SortMismatch(f"objective of sort {operand_sort(self.term)} "
                               f"cannot use an order on {self.order.sort}")
        if self.constraint.sort != BOOL:
            raise SortMismatch("objective constraint must be a formula")

    @property
    def combinator(self):
        return SINGLE

    @property
    def operand(self):
        return self.term

    @property
    def components(self):
        return (self,)


@dataclass(frozen=True)
class CombinedObjective:
    components: tuple
    combinator: str
    order: OrderSpec
    conjoined_constraint: Term
    renaming: tuple = ()  # ((original Var, fresh Var, component index), ...)
    fresh_vars: tuple = field(default=())

    @property
    def operand(self):
        return tuple(c.term for c in self.components)

    @property
    def term(self):
        return self.operand

    @property
    def constraint(self):
        return self.conjoined_constraint


def _check_components(components):
    components = tuple(components)
    if not components:
        raise ArityMismatch("need at least one objective")
    for c in components:
        if not isinstance(c, ObjectiveSpec):
            raise SortMismatch(f"{c!r} is not an ObjectiveSpec")
    return components


def _combine(kind, components, children):
    order = OrderSpec(kind, children=tuple(children))
    constraint = and_(*(c.constraint for c in components))
    return CombinedObjective(components, kind, order, constraint)


def lex_combine(components) -> CombinedObjective:
    components = _check_components(components)
    return _combine(LEX, components, [c.order for c in components])


def pareto_combine(components) -> CombinedObjective:
    components = _check_components(components)
    return _combine(PARETO, components, [c.order for c in components])


def _shared_base(terms, base_order, constraints):
    terms = tuple(terms)
    if not terms:
        raise ArityMismatch("need at least one objective")
    if constraints is None:
        constraints = [Const(True, BOOL)] * len(terms)
    constraints = list(constraints)
    if len(constraints) != len(terms):
        raise ArityMismatch("one constraint per objective term is required")
    return tuple(ObjectiveSpec(t, base_order, c) for t, c in zip(terms, constraints))


def minmax_combine(terms, base_order: OrderSpec, constraints=None) -> CombinedObjective:
    """Prefer tuples whose worst component (under ``base_order``) is best."""
    comps = _shared_base(terms, base_order, constraints)
    return _combine(MINMAX, comps, [base_order] * len(comps))


def maxmin_combine(terms, base_order: OrderSpec, constraints=None) -> CombinedObjective:
    """Prefer tuples whose best component (under ``base_order``) is best."""
    comps = _shared_base(terms, base_order, constraints)
    return _combine(MAXMIN, comps, [base_order] * len(comps))


def _objective_vars(c: ObjectiveSpec):
    out = set(free_vars(c.constraint))
    for leaf in leaves(c.term):
        out |= free_vars(leaf)
    return out


def boxed_combine(components) -> CombinedObjective:
    """Independent sub-problems as one Pareto problem over renamed copies.

    Variables shared between sub-problems get a fresh copy per sub-problem,
    named ``<name>__box<i>`` (1-based), bumped with a numeric suffix when the
    name is already taken.
    """
    components = _check_components(components)
    var_sets = [_objective_vars(c) for c in components]
    taken = {v.name for vs in var_sets for v in vs}
    renamed = []
    renaming = []
    fresh = []
    for i, c in enumerate(components):
        others = set()
        for j, vs in enumerate(var_sets):
            if j != i:
                others |= vs
        shared = sorted(var_sets[i] & others, key=lambda v: v.name)
        mapping = {}
        for v in shared:
            name = f"{v.name}__box{i + 1}"
            bump = 1
            while name in taken:
                bump += 1
                name = f"{v.name}__box{i + 1}_{bump}"
            taken.add(name)
            nv = Var(name, v.sort)
            mapping[v] = nv
            renaming.append((v, nv, i))
            fresh.append(nv)
        term = rebuild(c.term, [substitute(leaf, mapping) for leaf in leaves(c.term)])
        renamed.append(ObjectiveSpec(term, c.order, substitute(c.constraint, mapping)))
    po = pareto_combine(renamed)
    return CombinedObjective(po.components, BOXED, po.order, po.conjoined_constraint,
                             tuple(renaming), tuple(fresh))


def project_boxed(obj: CombinedObjective, assignment: dict) -> list:
    """Split an assignment of a boxed problem into one assignment per sub-problem.

    Keys are variable names. Fresh copies are mapped back to the original
    names and removed.
    """
    n = len(obj.components)
    fresh_names = {nv.name for _, nv, _ in obj.renaming}
    out = []
    for i in range(n):
        a = {k: v for k, v in assignment.items() if k not in fresh_names}
        for orig, nv, idx in obj.renaming:
            if idx == i and nv.name in assignment:
                a[orig.name] = assignment[nv.name]
        out.append(a)
    return out


def dominance_formula(obj, lhs, rhs) -> Term:
    """Tuple-free formula stating that ``lhs`` strictly precedes ``rhs``."""
    return obj.order.precedes(lhs, rhs)


def better(obj, observed, cut: Term | None = None) -> Term:
    """Formula satisfied by solutions strictly better than ``observed``.

    ``cut`` is an extra formula conjoined to the result; the engine is
    responsible for checking it is entailed by the constraint.
    """
    f = obj.order.precedes(obj.operand, observed)
    return f if cut is None else and_(f, cut)


def objective_leaf_terms(obj) -> list:
    return leaves(obj.operand)

