"""Sorted terms, literal values and substitution.

Terms are immutable. A formula is a term of sort Bool. Tuples never appear
inside terms: multi-objective code carries plain Python tuples of terms
(see :mod:`gomt.orders`) and expands them componentwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from .errors import ArityMismatch, SortMismatch, UnrepresentableValue, UnsupportedSort

STRING_ALPHABET = "abcdefghijklmnopqrstuvwxyz"
_ALPHABET_RE = re.compile(r"[a-z]*\Z")


@dataclass(frozen=True)
class Sort:
    kind: str
    width: int = 0
    components: tuple = ()

    def __post_init__(self):
        if self.kind == "BitVec":
            if not isinstance(self.width, int) or self.width < 1:
                raise UnsupportedSort(f"bitvector width must be >= 1, got {self.width!r}")
        elif self.kind == "Tuple":
            if len(self.components) < 1:
                raise UnsupportedSort("tuple sort needs at least one component")
        elif self.kind not in ("Bool", "Int", "Real", "String"):
            raise UnsupportedSort(f"unknown sort kind {self.kind!r}")

    @property
    def is_numeric(self):
        return self.kind in ("Int", "Real")

    def __str__(self):
        if self.kind == "BitVec":
            return f"(_ BitVec {self.width})"
        if self.kind == "Tuple":
            return "(Tuple " + " ".join(str(c) for c in self.components) + ")"
        return self.kind


BOOL = Sort("Bool")
INT = Sort("Int")
REAL = Sort("Real")
STRING = Sort("String")


def BitVecSort(width: int) -> Sort:
    return Sort("BitVec", width)


def TupleSort(*components: Sort) -> Sort:
    return Sort("Tuple", components=tuple(components))


@dataclass(frozen=True)
class BitVecValue:
    """Unsigned bitvector literal of a fixed width."""

    width: int
    value: int

    def __post_init__(self):
        if self.width < 1 or not 0 <= self.value < (1 << self.width):
            raise UnrepresentableValue(f"{self.value} does not fit in {self.width} bits")

    @classmethod
    def from_bits(cls, bits: str) -> "BitVecValue":
        return cls(len(bits), int(bits, 2))

    @property
    def bits(self) -> str:
        return format(self.value, f"0{self.width}b")

    def __str__(self):
        return "#b" + self.bits


Value = Union[bool, int, Fraction, BitVecValue, str, tuple]


def check_string(s: str) -> str:
    if not _ALPHABET_RE.match(s):
        raise UnrepresentableValue(f"string {s!r} uses characters outside 'a'-'z'")
    return s


def value_sort(v) -> Sort:
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, int):
        return INT
    if isinstance(v, Fraction):
        return REAL
    if isinstance(v, BitVecValue):
        return BitVecSort(v.width)
    if isinstance(v, str):
        check_string(v)
        return STRING
    if isinstance(v, tuple):
        return TupleSort(*(value_sort(c) for c in v))
    raise UnrepresentableValue(f"no sort for value {v!r}")


class Term:
    """Base class for :class:`Var`, :class:`Const` and :class:`App`."""

    __slots__ = ()
    sort: Sort

    def __str__(self):
        from .smtlib import print_term

        return print_term(self)


@dataclass(frozen=True, repr=False)
class Var(Term):
    name: str
    sort: Sort

    def __post_init__(self):
        if self.sort.kind == "Tuple":
            raise UnsupportedSort("tuple-sorted variables are not allowed in terms")

    def __repr__(self):
        return f"Var({self.name!r}, {self.sort})"


@dataclass(frozen=True, repr=False)
class Const(Term):
    value: object
    sort: Sort

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class App(Term):
    op: str
    args: tuple
    sort: Sort

    def __repr__(self):
        return f"App({self.op!r}, {list(self.args)!r})"


TRUE = Const(True, BOOL)
FALSE = Const(False, BOOL)


def value_to_term(v) -> Const:
    """Literal term for a non-tuple value."""
    if isinstance(v, tuple):
        raise UnrepresentableValue("tuple values have no literal form; expand componentwise")
    if isinstance(v, float):
        v = Fraction(v)
    return Const(v, value_sort(v))


def var(name: str, sort: Sort) -> Var:
    return Var(name, sort)


# ---------------------------------------------------------------------------
# Operator signatures
# ---------------------------------------------------------------------------


def _need(args, lo, hi=None):
    if len(args) < lo or (hi is not None and len(args) > hi):
        want = f"{lo}" if hi == lo else f"{lo}..{hi if hi is not None else ''}"
        raise ArityMismatch(f"expected {want} arguments, got {len(args)}")


def _all_sort(op, args, sort):
    for a in args:
        if a.sort != sort:
            raise SortMismatch(f"{op}: expected {sort}, got {a.sort}")


def _same_sort(op, args):
    first = args[0].sort
    for a in args[1:]:
        if a.sort != first:
            raise SortMismatch(f"{op}: arguments of sorts {first} and {a.sort}")
    return first


def _coerce_numeric(op, args):
    """Promote Int literals to Real when mixed with Real operands."""
    sorts = {a.sort for a in args}
    if sorts == {INT, REAL}:
        out = []
        for a in args:
            if a.sort == INT:
                if not isinstance(a, Const):
                    raise SortMismatch(f"{op}: cannot mix Int term {a} with Real operands")
                a = Const(Fraction(a.value), REAL)
            out.append(a)
        return tuple(out)
    return args


def _arith(op, args):
    _need(args, 1 if op == "-" else 2)
    args = _coerce_numeric(op, args)
    s = _same_sort(op, args)
    if not s.is_numeric:
        raise SortMismatch(f"{op}: expected Int or Real, got {s}")
    return args, s


def _div_real(op, args):
    _need(args, 2)
    args = tuple(Const(Fraction(a.value), REAL) if isinstance(a, Const) and a.sort == INT else a for a in args)
    _all_sort(op, args, REAL)
    return args, REAL


def _int_binary(op, args):
    _need(args, 2, 2)
    _all_sort(op, args, INT)
    return args, INT


def _compare(op, args):
    _need(args, 2)
    args = _coerce_numeric(op, args)
    s = _same_sort(op, args)
    if not s.is_numeric:
        raise SortMismatch(f"{op}: expected Int or Real, got {s}")
    return args, BOOL


def _bool_nary(op, args):
    _need(args, 1)
    _all_sort(op, args, BOOL)
    return args, BOOL


def _not(op, args):
    _need(args, 1, 1)
    _all_sort(op, args, BOOL)
    return args, BOOL


def _implies(op, args):
    _need(args, 2)
    _all_sort(op, args, BOOL)
    return args, BOOL


def _equality(op, args):
    _need(args, 2)
    args = _coerce_numeric(op, args)
    _same_sort(op, args)
    return args, BOOL


def _ite(op, args):
    _need(args, 3, 3)
    if args[0].sort != BOOL:
        raise SortMismatch(f"ite: condition has sort {args[0].sort}")
    branches = _coerce_numeric(op, args[1:])
    s = _same_sort(op, branches)
    return (args[0],) + branches, s


def _bv_binary(op, args):
    _need(args, 2, 2)
    s = _same_sort(op, args)
    if s.kind != "BitVec":
        raise SortMismatch(f"{op}: expected bitvectors, got {s}")
    return args, s


def _bv_compare(op, args):
    args, _ = _bv_binary(op, args)
    return args, BOOL


def _str_concat(op, args):
    _need(args, 2)
    _all_sort(op, args, STRING)
    return args, STRING


def _str_len(op, args):
    _need(args, 1, 1)
    _all_sort(op, args, STRING)
    return args, INT


def _str_pred(op, args):
    _need(args, 2, 2)
    _all_sort(op, args, STRING)
    return args, BOOL


SIGNATURES = {
    "not": _not,
    "and": _bool_nary,
    "or": _bool_nary,
    "xor": _bool_nary,
    "=>": _implies,
    "=": _equality,
    "distinct": _equality,
    "ite": _ite,
    "+": _arith,
    "-": _arith,
    "*": _arith,
    "/": _div_real,
    "div": _int_binary,
    "mod": _int_binary,
    "<": _compare,
    "<=": _compare,
    ">": _compare,
    ">=": _compare,
    "bvadd": _bv_binary,
    "bvsub": _bv_binary,
    "bvmul": _bv_binary,
    "bvudiv": _bv_binary,
    "bvurem": _bv_binary,
    "bvshl": _bv_binary,
    "bvult": _bv_compare,
    "bvule": _bv_compare,
    "bvugt": _bv_compare,
    "bvuge": _bv_compare,
    "str.++": _str_concat,
    "str.len": _str_len,
    "str.contains": _str_pred,
    "str.<": _str_pred,
    "str.<=": _str_pred,
}


def _numeric_literal(t):
    return isinstance(t, Const) and t.sort.is_numeric


def app(op: str, *args: Term) -> Term:
    """Build a well-sorted application.

    Negation of a numeric literal and division of two numeric literals are
    folded into literals so that printed rationals parse back to the same
    term.
    """
    try:
        check = SIGNATURES[op]
    except KeyError:
        raise SortMismatch(f"unknown operator {op!r}") from None
    for a in args:
        if not isinstance(a, Term):
            raise SortMismatch(f"{op}: argument {a!r} is not a term")
    args, sort = check(op, tuple(args))
    if op == "-" and len(args) == 1 and _numeric_literal(args[0]):
        return Const(-args[0].value, sort)
    if op == "/" and all(_numeric_literal(a) for a in args) and args[1].value != 0:
        return Const(Fraction(args[0].value) / Fraction(args[1].value), REAL)
    return App(op, args, sort)


def and_(*xs: Term) -> Term:
    if not xs:
        return TRUE
    if len(xs) == 1:
        return xs[0]
    return app("and", *xs)


def or_(*xs: Term) -> Term:
    if not xs:
        return FALSE
    if len(xs) == 1:
        return xs[0]
    return app("or", *xs)


def not_(x: Term) -> Term:
    return app("not", x)


def eq(a: Term, b: Term) -> Term:
    return app("=", a, b)


def implies(a: Term, b: Term) -> Term:
    return app("=>", a, b)


def iff(a: Term, b: Term) -> Term:
    return app("=", a, b)


def ite(c: Term, a: Term, b: Term) -> Term:
    return app("ite", c, a, b)


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------


def free_vars(s: Term) -> frozenset:
    out = set()
    stack = [s]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            out.add(t)
        elif isinstance(t, App):
            stack.extend(t.args)
    return frozenset(out)


def substitute(s: Term, mapping: Mapping[Var, Term]) -> Term:
    """Simultaneously replace variables by terms of the same sort."""
    for v, t in mapping.items():
        if not isinstance(v, Var):
            raise SortMismatch(f"substitution key {v!r} is not a variable")
        if v.sort != t.sort:
            raise SortMismatch(f"cannot replace {v.name}: {v.sort} by a term of sort {t.sort}")
    if not mapping:
        return s
    memo = {}

    def go(t):
        if isinstance(t, Var):
            return mapping.get(t, t)
        if isinstance(t, Const):
            return t
        key = id(t)
        if key not in memo:
            new_args = tuple(go(a) for a in t.args)
            if all(n is o for n, o in zip(new_args, t.args)):
                memo[key] = t
            else:
                memo[key] = app(t.op, *new_args)
        return memo[key]

    return go(s)
