"""SMT-LIB 2.6 subprocess client.

Every query either runs in a fresh solver process (the default) or inside a
``push``/``pop`` scope of one long-lived process (``incremental=True``).
The client enables ``:print-success`` so each command yields exactly one
response, which keeps framing simple and detects protocol drift early.
"""

from __future__ import annotations

import os
import select
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field

from .errors import ProtocolError, SolverCrash, SolverUnknown, UnsupportedObjective
from .orders import ObjectiveSpec, to_operand
from .smtlib import Atom, SList, parse_value, print_sort, print_symbol, print_term, read_one
from .terms import INT, REAL, STRING, Term, and_, eq, free_vars, not_

SAT, UNSAT, UNKNOWN, UNBOUNDED = "sat", "unsat", "unknown", "unbounded"

_DEFAULT_ARGS = {"z3": ["-in"], "cvc5": ["--lang=smt2", "--incremental"]}


@dataclass
class SolverConfig:
    executable: str = field(default_factory=lambda: os.environ.get("GOMT_BACKEND", "z3"))
    args: list | None = None
    logic: str = "ALL"
    timeout_ms: int = 30000
    supports_optimize: bool | None = None
    produce_models: bool = True

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")

    @property
    def flavor(self):
        return os.path.basename(self.executable).split(".")[0].lower()

    def command(self):
        args = self.args if self.args is not None else _DEFAULT_ARGS.get(self.flavor, [])
        return [self.executable] + list(args)

    @property
    def can_optimize(self):
        if self.supports_optimize is not None:
            return self.supports_optimize
        return self.flavor == "z3"


@dataclass
class SatResult:
    status: str
    assignment: dict | None = None  # variable name -> value
    values: dict | None = None  # Term -> value
    reason: str = ""

    @property
    def is_sat(self):
        return self.status == SAT


def declaration_lines(declarations) -> list:
    lines = []
    for v in declarations:
        lines.append(f"(declare-const {print_symbol(v.name)} {print_sort(v.sort)})")
    for v in declarations:
        if v.sort == STRING:
            # strings range over 'a'..'z' only
            lines.append(f'(assert (str.in_re {print_symbol(v.name)} (re.* (re.range "a" "z"))))')
    return lines


def _sorted_decls(declarations):
    return sorted(set(declarations), key=lambda v: v.name)


def _scan_sexpr(buf: bytes):
    """Return the end offset of the first complete s-expression, or None."""
    i, n = 0, len(buf)
    while i < n and buf[i] in b" \t\r\n":
        i += 1
    if i == n:
        return None
    depth = 0
    while i < n:
        c = buf[i]
        if c == ord('"'):
            i += 1
            while True:
                if i >= n:
                    return None
                if buf[i] == ord('"'):
                    if i + 1 < n and buf[i + 1] == ord('"'):
                        i += 2
                        continue
                    if i + 1 >= n and depth == 0:
                        return None
                    break
                i += 1
            i += 1
            if depth == 0:
                return i
            continue
        if c == ord("|"):
            j = buf.find(b"|", i + 1)
            if j < 0:
                return None
            i = j + 1
            if depth == 0:
                return i
            continue
        if c == ord("("):
            depth += 1
        elif c == ord(")"):
            depth -= 1
            if depth == 0:
                return i + 1
        elif depth == 0:
            j = i
            while j < n and buf[j] not in b" \t\r\n()":
                j += 1
            if j == n:
                return None
            return j
        i += 1
    return None


class Session:
    """One solver process. Single owner; not thread-safe."""

    def __init__(self, config: SolverConfig):
        self.config = config
        self.transcript = []
        self._buf = b""
        exe = shutil.which(config.executable) or config.executable
        self._stderr = tempfile.TemporaryFile()
        try:
            self.proc = subprocess.Popen(
                [exe] + config.command()[1:],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=self._stderr,
            )
        except OSError as exc:
            raise SolverCrash(f"cannot start solver {config.executable!r}: {exc}") from None
        self.dead = False
        self.expect_success("(set-option :print-success true)")
        if config.produce_models:
            self.expect_success("(set-option :produce-models true)")
        if config.flavor == "z3":
            self.expect_success(f"(set-option :timeout {config.timeout_ms})")
        if config.logic:
            self.expect_success(f"(set-logic {config.logic})")

    def stderr_text(self):
        try:
            self._stderr.seek(0)
            return self._stderr.read().decode(errors="replace")
        except (OSError, ValueError):
            return ""

    def send(self, text: str):
        data = (text + "\n").encode()
        self.transcript.append(data)
        try:
            self.proc.stdin.write(data)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self.dead = True
            raise SolverCrash(f"solver exited unexpectedly: {self.stderr_text().strip()}") from None

    def read(self, deadline: float | None = None):
        fd = self.proc.stdout.fileno()
        while True:
            end = _scan_sexpr(self._buf)
            if end is not None:
                raw, self._buf = self._buf[:end], self._buf[end:]
                return read_one(raw.decode())
            wait = None if deadline is None else max(0.0, deadline - time.monotonic())
            ready, _, _ = select.select([fd], [], [], wait)
            if not ready:
                self.kill()
                raise TimeoutError("solver did not answer in time")
            chunk = os.read(fd, 65536)
            if not chunk:
                self.dead = True
                code = self.proc.wait()
                raise SolverCrash(f"solver closed its output (exit {code}): {self.stderr_text().strip()}")
            self._buf += chunk

    def command(self, text: str, deadline: float | None = None):
        """Send one command and return its response s-expression."""
        self.send(text)
        resp = self.read(deadline)
        if isinstance(resp, SList) and resp and isinstance(resp[0], Atom) and resp[0].text == "error":
            msg = resp[1].text if len(resp) > 1 and isinstance(resp[1], Atom) else str(resp)
            raise ProtocolError(f"solver rejected {text[:80]!r}: {msg}")
        return resp

    def expect_success(self, text: str):
        resp = self.command(text)
        if not (isinstance(resp, Atom) and resp.text in ("success", "unsupported")):
            raise ProtocolError(f"unexpected response to {text[:80]!r}: {resp}")

    def kill(self):
        self.dead = True
        try:
            self.proc.kill()
            self.proc.wait()
        except OSError:
            pass

    def close(self):
        if self.dead:
            self._stderr.close()
            return
        try:
            self.send("(exit)")
            self.proc.stdin.close()
            self.proc.wait(timeout=2)
        except (SolverCrash, OSError, subprocess.TimeoutExpired):
            self.proc.kill()
            self.proc.wait()
        self.dead = True
        self._stderr.close()


def _hard_deadline(config):
    return time.monotonic() + config.timeout_ms / 1000.0 * 1.5 + 2.0


class Backend:
    """Solve / entailment / optimize oracle on top of :class:`Session`."""

    def __init__(self, config: SolverConfig | None = None, incremental: bool = False):
        self.config = config or SolverConfig()
        self.incremental = incremental
        self.solver_calls = 0
        self.transcript = []
        self.stderr_log = []
        self._session = None

    # -- session management -------------------------------------------------

    def _open(self):
        if self.incremental:
            if self._session is None or self._session.dead:
                self._session = Session(self.config)
            return self._session
        return Session(self.config)

    def _release(self, sess, failed=False):
        self.transcript.extend(sess.transcript)
        sess.transcript = []
        if not self.incremental or failed:
            err = sess.stderr_text()
            if err.strip():
                self.stderr_log.append(err)
            sess.close() if not sess.dead else sess.kill()
            if sess is self._session:
                self._session = None

    def close(self):
        if self._session is not None:
            self._release(self._session, failed=True)
            self._session = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- queries ------------------------------------------------------------

    def _check(self, sess, deadline):
        resp = sess.command("(check-sat)", deadline)
        if not isinstance(resp, Atom) or resp.text not in (SAT, UNSAT, UNKNOWN):
            raise ProtocolError(f"unexpected check-sat response: {resp}")
        return resp.text

    def _reason(self, sess, deadline):
        try:
            resp = sess.command("(get-info :reason-unknown)", deadline)
        except ProtocolError:
            return "unknown"
        if isinstance(resp, SList) and len(resp) >= 2:
            return str(resp[1])
        return "unknown"

    def _get_values(self, sess, terms, deadline):
        if not terms:
            return []
        text = "(get-value (" + " ".join(print_term(t) for t in terms) + "))"
        resp = sess.command(text, deadline)
        if not isinstance(resp, SList) or len(resp) != len(terms):
            raise ProtocolError(f"malformed get-value response: {resp}")
        out = []
        for t, pair in zip(terms, resp):
            if not isinstance(pair, SList) or len(pair) != 2:
                raise ProtocolError(f"malformed get-value entry: {pair}")
            out.append(parse_value(pair[1], t.sort))
        return out

    def _run(self, declarations, body_lines, eval_terms, optimize_lines=()):
        declarations = _sorted_decls(declarations)
        eval_terms = list(eval_terms)
        self.solver_calls += 1
        sess = self._open()
        deadline = _hard_deadline(self.config)
        scoped = self.incremental
        failed = False
        try:
            if scoped:
                sess.expect_success("(push 1)")
            for line in declaration_lines(declarations):
                sess.expect_success(line)
            for line in body_lines:
                sess.expect_success(line)
            objective_resp = None
            for line in optimize_lines:
                sess.expect_success(line)
            status = self._check(sess, deadline)
            result = SatResult(status)
            if status == SAT:
                if optimize_lines:
                    objective_resp = sess.command("(get-objectives)", deadline)
                    if _mentions_infinity(objective_resp):
                        result = SatResult(UNBOUNDED, reason=str(objective_resp))
                if result.status == SAT:
                    vals = self._get_values(sess, list(declarations) + eval_terms, deadline)
                    k = len(declarations)
                    result.assignment = {v.name: x for v, x in zip(declarations, vals[:k])}
                    result.values = dict(zip(eval_terms, vals[k:]))
            elif status == UNKNOWN:
                result.reason = self._reason(sess, deadline)
            if scoped:
                sess.expect_success("(pop 1)")
            return result
        except TimeoutError:
            failed = True
            return SatResult(UNKNOWN, reason="timeout")
        except BaseException:
            failed = True
            raise
        finally:
            self._release(sess, failed)

    def solve(self, formula: Term, declarations=None, eval_terms=()) -> SatResult:
        """Check satisfiability; on SAT return a model and the requested values."""
        if declarations is None:
            declarations = free_vars(formula)
            for t in eval_terms:
                declarations |= free_vars(t)
        return self._run(declarations, [f"(assert {print_term(formula)})"], eval_terms)

    def status(self, formula: Term, declarations=None) -> str:
        return self.solve(formula, declarations).status

    def check_entailment(self, gamma: Term, psi: Term, declarations=None) -> bool:
        """True iff gamma entails psi. Raises :class:`SolverUnknown` when undecided."""
        res = self.solve(and_(gamma, not_(psi)), declarations)
        if res.status == UNKNOWN:
            raise SolverUnknown(res.reason)
        return res.status == UNSAT

    def check_batch(self, formulas, declarations=None) -> list:
        """Satisfiability status of many formulas in one solver process."""
        formulas = list(formulas)
        if declarations is None:
            declarations = set()
            for f in formulas:
                declarations |= free_vars(f)
        declarations = _sorted_decls(declarations)
        sess = Session(self.config)
        failed = False
        out = []
        try:
            for line in declaration_lines(declarations):
                sess.expect_success(line)
            for f in formulas:
                self.solver_calls += 1
                deadline = _hard_deadline(self.config)
                sess.expect_success("(push 1)")
                sess.expect_success(f"(assert {print_term(f)})")
                out.append(self._check(sess, deadline))
                sess.expect_success("(pop 1)")
            return out
        except TimeoutError:
            failed = True
            out.extend([UNKNOWN] * (len(formulas) - len(out)))
            return out
        finally:
            self.transcript.extend(sess.transcript)
            if failed:
                sess.kill()
            else:
                sess.close()

    def optimize(self, formula: Term, objective: ObjectiveSpec, declarations=None) -> SatResult:
        """Native OMT call for a built-in order over Int, Real or BitVec.

        Always runs in a fresh process because objectives persist across
        scopes in common solvers.
        """
        if not self.config.can_optimize:
            raise UnsupportedObjective(f"solver {self.config.executable!r} has no optimize support")
        order = getattr(objective, "order", None)
        builtin = getattr(order, "builtin", None)
        if not isinstance(objective, ObjectiveSpec) or builtin is None:
            raise UnsupportedObjective("only built-in asc/desc orders can be optimized natively")
        direction, sort = builtin
        if not (sort in (INT, REAL) or sort.kind == "BitVec"):
            raise UnsupportedObjective(f"native optimization of {sort} is not supported")
        term = objective.term
        if declarations is None:
            declarations = free_vars(formula) | free_vars(term)
        cmd = "minimize" if direction == "asc" else "maximize"
        saved = self.incremental
        self.incremental = False
        try:
            return self._run(declarations, [f"(assert {print_term(formula)})"], [term],
                             [f"({cmd} {print_term(term)})"])
        finally:
            self.incremental = saved

    def spot_check(self, formula: Term, assignment: dict, declarations) -> str:
        """Re-solve ``formula`` with every declared variable pinned to its value."""
        pins = [eq(v, to_operand(assignment[v.name], v.sort)) for v in declarations]
        return self.solve(and_(formula, *pins), declarations).status


def _mentions_infinity(e) -> bool:
    if isinstance(e, Atom):
        return e.kind == "symbol" and e.text in ("oo", "epsilon", "infinity")
    return any(_mentions_infinity(x) for x in e)


# Module-level conveniences mirroring the backend operations.


def solve(config, declarations, formula, eval_terms=()) -> SatResult:
    with Backend(config) as b:
        return b.solve(formula, declarations, eval_terms)


def check_entailment(config, declarations, gamma, psi) -> bool:
    with Backend(config) as b:
        return b.check_entailment(gamma, psi, declarations)


def optimize(config, declarations, formula, objective) -> SatResult:
    with Backend(config) as b:
        return b.optimize(formula, objective, declarations)
