"""SMT-LIB 2.6 text: s-expression reading, term printing and parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from .errors import ParseError, SortMismatch, UndeclaredSymbol, UnsupportedSort
from .terms import (
    BOOL,
    INT,
    REAL,
    STRING,
    BitVecSort,
    BitVecValue,
    Const,
    Sort,
    Term,
    Var,
    app,
    check_string,
    SIGNATURES,
)


@dataclass(frozen=True)
class Atom:
    kind: str  # symbol | keyword | numeral | decimal | string | binary | hex
    text: str
    line: int = 0
    col: int = 0

    def __str__(self):
        return self.text


class SList(list):
    """A parenthesized list that remembers where it opened."""

    def __init__(self, items=(), line=0, col=0):
        super().__init__(items)
        self.line = line
        self.col = col

    def __str__(self):
        return "(" + " ".join(str(x) for x in self) + ")"


SExpr = Union[Atom, SList]

_SYMBOL_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789~!@$%^&*_-+=<>.?/")
_SIMPLE_SYMBOL = re.compile(r"[A-Za-z~!@$%^&*_\-+=<>.?/][A-Za-z0-9~!@$%^&*_\-+=<>.?/]*\Z")
_RESERVED = {"let", "forall", "exists", "match", "par", "_", "!", "as", "NUMERAL", "DECIMAL", "STRING",
             "BINARY", "HEXADECIMAL"}


def pos_of(e):
    if isinstance(e, Atom):
        return e.line, e.col
    return getattr(e, "line", None), getattr(e, "col", None)


def error_at(e, message):
    line, col = pos_of(e)
    return ParseError(message, line, col)


def tokenize(text: str):
    """Yield atoms and bare '(' / ')' markers as (kind, text, line, col)."""
    i, n = 0, len(text)
    line, line_start = 1, 0
    while i < n:
        c = text[i]
        col = i - line_start + 1
        if c == "\n":
            line += 1
            line_start = i + 1
            i += 1
        elif c.isspace():
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield (c, c, line, col)
            i += 1
        elif c == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise ParseError("unterminated string literal", line, col)
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                if text[j] == "\n":
                    line += 1
                    line_start = j + 1
                buf.append(text[j])
                j += 1
            yield ("string", "".join(buf), line, col)
            i = j + 1
        elif c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise ParseError("unterminated quoted symbol", line, col)
            body = text[i + 1:j]
            if "\\" in body:
                raise ParseError("backslash in quoted symbol", line, col)
            line += body.count("\n")
            if "\n" in body:
                line_start = i + 1 + body.rfind("\n") + 1
            yield ("symbol", body, line, col)
            i = j + 1
        elif c == "#":
            m = re.compile(r"#b[01]+|#x[0-9A-Fa-f]+").match(text, i)
            if not m:
                raise ParseError("malformed bitvector literal", line, col)
            kind = "binary" if m.group(0)[1] == "b" else "hex"
            yield (kind, m.group(0)[2:], line, col)
            i = m.end()
        elif c.isdigit():
            m = re.compile(r"(0|[1-9][0-9]*)(\.[0-9]+)?").match(text, i)
            end = m.end()
            if end < n and text[end] in _SYMBOL_CHARS:
                raise ParseError(f"malformed numeral near {text[i:end + 1]!r}", line, col)
            yield ("decimal" if m.group(2) else "numeral", m.group(0), line, col)
            i = end
        elif c == ":" or c in _SYMBOL_CHARS:
            j = i + 1
            while j < n and text[j] in _SYMBOL_CHARS:
                j += 1
            if c == ":":
                if j == i + 1:
                    raise ParseError("empty keyword", line, col)
                yield ("keyword", text[i:j], line, col)
            else:
                yield ("symbol", text[i:j], line, col)
            i = j
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)


def read_all(text: str) -> list:
    """Read every top-level s-expression in ``text``."""
    stack = [SList()]
    for kind, tok, line, col in tokenize(text):
        if kind == "(":
            stack.append(SList(line=line, col=col))
        elif kind == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(Atom(kind, tok, line, col))
    if len(stack) > 1:
        open_list = stack[-1]
        raise ParseError("unbalanced '(': missing ')'", open_list.line, open_list.col)
    return list(stack[0])


def read_one(text: str) -> SExpr:
    items = read_all(text)
    if len(items) != 1:
        raise ParseError(f"expected exactly one expression, found {len(items)}", 1, 1)
    return items[0]


def is_symbol(e, name=None):
    return isinstance(e, Atom) and e.kind == "symbol" and (name is None or e.text == name)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def print_symbol(name: str) -> str:
    if _SIMPLE_SYMBOL.match(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise ParseError(f"symbol {name!r} cannot be written in SMT-LIB")
    return f"|{name}|"


def print_sort(s: Sort) -> str:
    if s.kind == "Tuple":
        raise UnsupportedSort("tuple sorts have no SMT-LIB form")
    return str(s)


def _print_rational(q: Fraction) -> str:
    neg = q < 0
    q = abs(q)
    if q.denominator == 1:
        body = f"{q.numerator}.0"
    else:
        body = f"(/ {q.numerator}.0 {q.denominator}.0)"
    return f"(- {body})" if neg else body


def print_value(v, sort: Sort) -> str:
    if sort == BOOL:
        return "true" if v else "false"
    if sort == INT:
        return f"(- {-v})" if v < 0 else str(v)
    if sort == REAL:
        return _print_rational(Fraction(v))
    if sort.kind == "BitVec":
        return str(v)
    if sort == STRING:
        return '"' + v.replace('"', '""') + '"'
    raise UnsupportedSort(f"cannot print value of sort {sort}")


def print_term(s: Term) -> str:
    out = []

    def go(t):
        if isinstance(t, Var):
            out.append(print_symbol(t.name))
        elif isinstance(t, Const):
            out.append(print_value(t.value, t.sort))
        else:
            out.append("(")
            out.append(t.op)
            for a in t.args:
                out.append(" ")
                go(a)
            out.append(")")

    go(s)
    return "".join(out)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_sort_sexpr(e: SExpr) -> Sort:
    if isinstance(e, Atom):
        if e.kind == "symbol" and e.text in ("Bool", "Int", "Real", "String"):
            return Sort(e.text)
        raise error_at(e, f"unknown sort {e.text!r}")
    if (len(e) == 3 and is_symbol(e[0], "_") and is_symbol(e[1], "BitVec")
            and isinstance(e[2], Atom) and e[2].kind == "numeral"):
        width = int(e[2].text)
        if width < 1:
            raise error_at(e, "bitvector width must be positive")
        return BitVecSort(width)
    raise error_at(e, "malformed sort")


def parse_sort(text: str) -> Sort:
    return parse_sort_sexpr(read_one(text))


def _decode_string(raw: str) -> str:
    # z3 renders characters outside printable ASCII as \u{...}
    def repl(m):
        return chr(int(m.group(1) or m.group(2), 16))

    return re.sub(r"\\u\{([0-9A-Fa-f]{1,5})\}|\\u([0-9A-Fa-f]{4})", repl, raw)


def _literal(e: Atom) -> Term:
    if e.kind == "numeral":
        return Const(int(e.text), INT)
    if e.kind == "decimal":
        return Const(Fraction(e.text), REAL)
    if e.kind == "binary":
        return Const(BitVecValue(len(e.text), int(e.text, 2)), BitVecSort(len(e.text)))
    if e.kind == "hex":
        w = 4 * len(e.text)
        return Const(BitVecValue(w, int(e.text, 16)), BitVecSort(w))
    if e.kind == "string":
        try:
            s = check_string(_decode_string(e.text))
        except Exception as exc:
            raise error_at(e, str(exc)) from None
        return Const(s, STRING)
    raise error_at(e, f"unexpected {e.kind} {e.text!r}")


def _lookup(context, name, e):
    if context is None or name not in context:
        raise UndeclaredSymbol(f"{e.line}:{e.col}: undeclared symbol {name!r}")
    entry = context[name]
    if isinstance(entry, Term):
        return entry
    return Var(name, entry)


def parse_term_sexpr(e: SExpr, context: Mapping | None = None) -> Term:
    """Convert an s-expression to a term.

    ``context`` maps symbol names to a :class:`Sort` or directly to a
    :class:`Term` (used for order parameters and tuple components).
    """
    if isinstance(e, Atom):
        if e.kind == "symbol":
            if e.text == "true":
                return Const(True, BOOL)
            if e.text == "false":
                return Const(False, BOOL)
            return _lookup(context, e.text, e)
        return _literal(e)
    if not e:
        raise error_at(e, "empty application")
    head = e[0]
    if isinstance(head, SList):
        if (len(head) == 3 and is_symbol(head[0], "_") and isinstance(head[1], Atom)
                and head[1].text.startswith("bv") and head[1].text[2:].isdigit()):
            raise error_at(e, "indexed bitvector literal cannot be applied")
        raise error_at(e, "unsupported operator form")
    if is_symbol(head, "_"):
        # (_ bvN w)
        if (len(e) == 3 and isinstance(e[1], Atom) and e[1].text.startswith("bv")
                and e[1].text[2:].isdigit() and isinstance(e[2], Atom) and e[2].kind == "numeral"):
            w = int(e[2].text)
            val = int(e[1].text[2:])
            if w < 1 or val >= (1 << w):
                raise error_at(e, "bitvector literal out of range")
            return Const(BitVecValue(w, val), BitVecSort(w))
        raise error_at(e, "unsupported indexed term")
    if not is_symbol(head):
        raise error_at(head, f"expected operator, got {head.text!r}")
    op = head.text
    if op not in SIGNATURES:
        raise error_at(head, f"unknown operator {op!r}")
    args = [parse_term_sexpr(a, context) for a in e[1:]]
    try:
        return app(op, *args)
    except SortMismatch as exc:
        raise SortMismatch(f"{e.line}:{e.col}: {exc}") from None
    except ParseError:
        raise
    except Exception as exc:
        code = getattr(exc, "code", None)
        if code == "ARITY_MISMATCH":
            raise error_at(e, str(exc)) from None
        raise


def parse_term(text: str, context: Mapping | None = None) -> Term:
    return parse_term_sexpr(read_one(text), context)


def parse_value(text_or_sexpr, sort: Sort):
    """Parse a literal as printed by a solver into a Python value of ``sort``."""
    e = read_one(text_or_sexpr) if isinstance(text_or_sexpr, str) else text_or_sexpr
    t = parse_term_sexpr(e, {})
    if not isinstance(t, Const):
        raise error_at(e, f"expected a literal value, got {print_term(t)}")
    if sort == REAL and t.sort == INT:
        return Fraction(t.value)
    if t.sort != sort:
        raise SortMismatch(f"literal of sort {t.sort} where {sort} was expected")
    return t.value
