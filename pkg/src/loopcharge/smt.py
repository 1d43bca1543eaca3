"""Solver-neutral constraint programs and a textual bridge to an optimizing SMT solver.

Programs carry integer/boolean variables, assertions over linear integer
arithmetic with the usual boolean connectives, and an ordered list of
minimization objectives (evaluated lexicographically). They are emitted as
SMT-LIB 2 text and solved by an external process (``z3 -in`` or the bundled
Node shim around the z3 WASM build); the process's check-sat/objectives/model
answers are parsed back.
"""

from __future__ import annotations

import os
import re
import shlex
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import BridgeError, EncodingError

Term = tuple

# --- term constructors -------------------------------------------------------------


def var(name: str) -> Term:
    return ("var", name)


def num(k: int) -> Term:
    return ("int", int(k))


def bool_(b: bool) -> Term:
    return ("bool", bool(b))


TRUE = bool_(True)
FALSE = bool_(False)


def add(*terms: Term) -> Term:
    if not terms:
        return num(0)
    return terms[0] if len(terms) == 1 else ("add",) + terms


def mul(k: int, t: Term) -> Term:
    return ("mul", int(k), t)


def sub(a: Term, b: Term) -> Term:
    return add(a, mul(-1, b))


def eq(a: Term, b: Term) -> Term:
    return ("eq", a, b)


def ne(a: Term, b: Term) -> Term:
    return ("ne", a, b)


def le(a: Term, b: Term) -> Term:
    return ("le", a, b)


def lt(a: Term, b: Term) -> Term:
    return ("lt", a, b)


def ge(a: Term, b: Term) -> Term:
    return ("ge", a, b)


def gt(a: Term, b: Term) -> Term:
    return ("gt", a, b)


def and_(*terms: Term) -> Term:
    terms = tuple(t for t in terms if t != TRUE)
    if not terms:
        return TRUE
    return terms[0] if len(terms) == 1 else ("and",) + terms


def or_(*terms: Term) -> Term:
    terms = tuple(t for t in terms if t != FALSE)
    if not terms:
        return FALSE
    return terms[0] if len(terms) == 1 else ("or",) + terms


def not_(t: Term) -> Term:
    return ("not", t)


def implies(a: Term, b: Term) -> Term:
    return ("implies", a, b)


def ite(c: Term, a: Term, b: Term) -> Term:
    return ("ite", c, a, b)


# --- program -----------------------------------------------------------------------

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


@dataclass(frozen=True)
class Var:
    name: str
    sort: str = "int"  # "int" | "bool"
    lo: Optional[int] = None
    hi: Optional[int] = None


class ConstraintProgram:
    """Variables, assertions and ordered minimization objectives."""

    def __init__(self):
        self.vars: list[Var] = []
        self._names: set[str] = set()
        self.assertions: list[Term] = []
        self.objectives: list[Term] = []

    def new_var(self, name: str, sort: str = "int",
                lo: Optional[int] = None, hi: Optional[int] = None) -> Term:
        if not _NAME_RE.match(name):
            raise EncodingError(f"bad variable name {name!r}")
        if name in self._names:
            raise EncodingError(f"duplicate variable {name!r}")
        if sort not in ("int", "bool"):
            raise EncodingError(f"unsupported sort {sort!r}")
        self._names.add(name)
        self.vars.append(Var(name, sort, lo, hi))
        return var(name)

    def add(self, term: Term) -> None:
        if term != TRUE:
            self.assertions.append(term)

    def minimize(self, term: Term) -> None:
        self.objectives.append(term)


def _emit_term(t: Term, names: set[str]) -> str:
    op = t[0]
    if op == "int":
        k = t[1]
        return str(k) if k >= 0 else f"(- {-k})"
    if op == "bool":
        return "true" if t[1] else "false"
    if op == "var":
        if t[1] not in names:
            raise EncodingError(f"undeclared variable {t[1]!r}")
        return t[1]
    if op == "add":
        return "(+ " + " ".join(_emit_term(x, names) for x in t[1:]) + ")"
    if op == "mul":
        k = t[1]
        lit = str(k) if k >= 0 else f"(- {-k})"
        return f"(* {lit} {_emit_term(t[2], names)})"
    if op in ("eq", "le", "lt", "ge", "gt"):
        sym = {"eq": "=", "le": "<=", "lt": "<", "ge": ">=", "gt": ">"}[op]
        return f"({sym} {_emit_term(t[1], names)} {_emit_term(t[2], names)})"
    if op == "ne":
        return f"(not (= {_emit_term(t[1], names)} {_emit_term(t[2], names)}))"
    if op in ("and", "or"):
        return f"({op} " + " ".join(_emit_term(x, names) for x in t[1:]) + ")"
    if op == "not":
        return f"(not {_emit_term(t[1], names)})"
    if op == "implies":
        return f"(=> {_emit_term(t[1], names)} {_emit_term(t[2], names)})"
    if op == "ite":
        return (f"(ite {_emit_term(t[1], names)} {_emit_term(t[2], names)} "
                f"{_emit_term(t[3], names)})")
    raise EncodingError(f"unsupported term shape {op!r}")


OBJECTIVE_PREFIX = "objective."


def emit_smtlib(prog: ConstraintProgram, objectives: Optional[Sequence[Term]] = None,
                declare_only: bool = False) -> str:
    """Deterministic SMT-LIB 2 text for the program (byte-stable per program).

    Objectives become fresh defined variables so ``(get-objectives)`` output is
    trivially parseable. ``objectives`` overrides the program's own list (used
    by the portable lexicographic modes); with ``declare_only`` the objective
    variables are defined but no ``(minimize ...)`` command is emitted, turning
    the query into plain satisfiability with readable objective values.
    """
    names = set(n.name for n in prog.vars)
    lines = ["(set-option :produce-models true)"]
    objs = list(prog.objectives if objectives is None else objectives)
    if len(objs) > 1 and not declare_only:
        lines.append("(set-option :opt.priority lex)")
    for v in prog.vars:
        sort = "Int" if v.sort == "int" else "Bool"
        lines.append(f"(declare-const {v.name} {sort})")
        if v.lo is not None:
            lines.append(f"(assert (<= {num(v.lo)[1]} {v.name}))")
        if v.hi is not None:
            lines.append(f"(assert (<= {v.name} {num(v.hi)[1]}))")
    for a in prog.assertions:
        lines.append(f"(assert {_emit_term(a, names)})")
    for k, objective in enumerate(objs):
        obj_name = f"{OBJECTIVE_PREFIX}{k}"
        lines.append(f"(declare-const {obj_name} Int)")
        lines.append(f"(assert (= {obj_name} {_emit_term(objective, names)}))")
        if not declare_only:
            lines.append(f"(minimize {obj_name})")
    lines.append("(check-sat)")
    if objs and not declare_only:
        lines.append("(get-objectives)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# --- solver output parsing ---------------------------------------------------------


def _tokenize(text: str):
    token = ""
    in_str = False
    for ch in text:
        if in_str:
            if ch == '"':
                in_str = False
                yield token + '"'
                token = ""
            else:
                token += ch
            continue
        if ch == '"':
            in_str = True
            token = '"'
        elif ch in "()":
            if token:
                yield token
                token = ""
            yield ch
        elif ch.isspace():
            if token:
                yield token
                token = ""
        else:
            token += ch
    if token:
        yield token


def _parse_sexprs(text: str) -> list:
    """All top-level s-expressions (atoms as strings, lists as Python lists)."""
    stack: list[list] = []
    forms: list = []
    for tok in _tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise BridgeError("unbalanced ')' in solver output", text[:400])
            done = stack.pop()
            (stack[-1] if stack else forms).append(done)
        else:
            (stack[-1] if stack else forms).append(tok)
    if stack:
        raise BridgeError("unbalanced '(' in solver output", text[:400])
    return forms


def _as_int(form) -> int:
    if isinstance(form, str):
        return int(form)
    if isinstance(form, list) and len(form) == 2 and form[0] == "-":
        return -_as_int(form[1])
    raise BridgeError(f"cannot parse integer from {form!r}")


def _decode_value(form, sort: str):
    if sort == "bool":
        if form == "true":
            return True
        if form == "false":
            return False
        raise BridgeError(f"cannot parse boolean from {form!r}")
    return _as_int(form)


@dataclass(frozen=True)
class SolveOutcome:
    status: str  # "optimal" | "satisfiable" | "unsatisfiable" | "timeout"
    model: dict[str, Union[int, bool]] = field(default_factory=dict)
    objective_values: tuple[int, ...] = ()
    wall_time: float = 0.0


def parse_solver_output(text: str, prog: ConstraintProgram,
                        n_objectives: int) -> SolveOutcome:
    forms = _parse_sexprs(text)
    status = None
    objectives: dict[int, int] = {}
    model: dict[str, Union[int, bool]] = {}
    sorts = {v.name: v.sort for v in prog.vars}
    errors = []
    for form in forms:
        if form in ("sat", "unsat", "unknown"):
            if status is None:
                status = form
        elif isinstance(form, list) and form and form[0] == "error":
            errors.append(form)
        elif isinstance(form, list) and form and form[0] == "objectives":
            for entry in form[1:]:
                if (isinstance(entry, list) and len(entry) == 2
                        and isinstance(entry[0], str)
                        and entry[0].startswith(OBJECTIVE_PREFIX)):
                    try:
                        objectives[int(entry[0][len(OBJECTIVE_PREFIX):])] = _as_int(entry[1])
                    except BridgeError:
                        pass  # unbounded/interval forms appear on unsat answers
        elif isinstance(form, list):
            entries = form[1:] if form and form[0] == "model" else form
            for entry in entries:
                if (isinstance(entry, list) and len(entry) >= 5
                        and entry[0] == "define-fun" and isinstance(entry[1], str)):
                    name = entry[1]
                    if name in sorts:
                        model[name] = _decode_value(entry[4], sorts[name])
                    elif name.startswith(OBJECTIVE_PREFIX):
                        objectives.setdefault(int(name[len(OBJECTIVE_PREFIX):]),
                                              _as_int(entry[4]))
    if status is None:
        raise BridgeError("no check-sat answer in solver output", text[:400])
    if status == "unknown":
        raise BridgeError("solver answered 'unknown'", text[:400])
    if status == "unsat":
        return SolveOutcome("unsatisfiable")
    # fill variables the solver left unmentioned with their smallest legal value
    for v in prog.vars:
        if v.name not in model:
            model[v.name] = False if v.sort == "bool" else (v.lo if v.lo is not None else 0)
    if n_objectives and len(objectives) != n_objectives:
        raise BridgeError(
            f"expected {n_objectives} objective values, got {sorted(objectives)}", text[:400]
        )
    values = tuple(objectives[k] for k in range(n_objectives))
    return SolveOutcome("optimal" if n_objectives else "satisfiable", model, values)


# --- solving -----------------------------------------------------------------------


def _repo_shim() -> Optional[Path]:
    here = Path(__file__).resolve()
    for root in [*here.parents, Path.cwd()]:
        shim = root / "solver" / "shim.js"
        if shim.exists() and (shim.parent / "node_modules").exists():
            return shim
    return None


def default_solver_command() -> list[str]:
    """Environment override, then a ``z3`` binary, then the bundled Node shim."""
    env = os.environ.get("LOOPCHARGE_SOLVER_CMD")
    if env:
        return shlex.split(env)
    if shutil.which("z3"):
        return ["z3", "-in"]
    shim = _repo_shim()
    if shim and shutil.which("node"):
        return ["node", str(shim)]
    raise BridgeError(
        "no SMT solver found: set LOOPCHARGE_SOLVER_CMD, put 'z3' on PATH, "
        "or run 'npm install' inside the repository's solver/ directory"
    )


@dataclass(frozen=True)
class SolverConfig:
    """How to reach the optimizing solver.

    ``lex_mode`` "native" sends all objectives in one query (z3 handles the
    priority ordering); "two_pass" solves objective by objective, pinning each
    optimum, for solvers without native lexicographic support; "iterative"
    avoids the optimization engine entirely, binary-searching each objective
    with plain satisfiability queries (lighter on memory for large systems).
    """

    command: Optional[Sequence[str]] = None
    timeout_secs: float = 10800.0
    lex_mode: str = "native"
    dump_path: Optional[Path] = None

    def resolved_command(self) -> list[str]:
        return list(self.command) if self.command else default_solver_command()


def _run_solver(text: str, config: SolverConfig) -> tuple[str, float]:
    cmd = config.resolved_command()
    start = time.monotonic()
    try:
        proc = subprocess.run(
            cmd, input=text.encode(), capture_output=True,
            timeout=config.timeout_secs,
        )
    except subprocess.TimeoutExpired:
        return "", -1.0
    except OSError as exc:
        raise BridgeError(f"cannot run solver {cmd!r}: {exc}") from None
    wall = time.monotonic() - start
    out = proc.stdout.decode(errors="replace")
    if proc.returncode not in (0, 1) and not out.strip():
        raise BridgeError(
            f"solver {cmd!r} exited with {proc.returncode}",
            (out + proc.stderr.decode(errors="replace"))[:800],
        )
    return out, wall


def _dump(text: str, config: SolverConfig, tag: str) -> None:
    if config.dump_path is not None:
        path = Path(config.dump_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        suffix = f".{tag}" if tag else ""
        path.with_suffix(path.suffix + suffix).write_text(text)


def _staged_copy(prog: ConstraintProgram, extra: list[Term]) -> ConstraintProgram:
    staged = ConstraintProgram()
    staged.vars = list(prog.vars)
    staged._names = set(v.name for v in prog.vars)
    staged.assertions = list(prog.assertions) + extra
    return staged


def _solve_iterative(prog: ConstraintProgram, config: SolverConfig) -> SolveOutcome:
    """Lexicographic minimization by bound-tightening satisfiability queries.

    Binary-searches each objective in turn (objectives must take non-negative
    values), pinning optima before moving on. Avoids the solver's optimization
    engine, which keeps memory flat on large systems.
    """
    deadline = time.monotonic() + config.timeout_secs
    pinned: list[int] = []
    model: dict[str, Union[int, bool]] = {}
    total_wall = 0.0

    def query(objective: Term, bound: Optional[int], tag: str):
        nonlocal total_wall
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return None
        extra = [eq(prog.objectives[j], num(v)) for j, v in enumerate(pinned)]
        if bound is not None:
            extra.append(le(objective, num(bound)))
        staged = _staged_copy(prog, extra)
        text = emit_smtlib(staged, objectives=[objective], declare_only=True)
        _dump(text, config, tag)
        out, wall = _run_solver(text, SolverConfig(config.command, remaining,
                                                   config.lex_mode, None))
        if wall < 0:
            return None
        total_wall += wall
        return parse_solver_output(out, staged, 0)

    for k, objective in enumerate(prog.objectives):
        # optimistic first shot: a zero-bound query propagates much harder
        # than an unbounded probe and settles the objective outright when the
        # optimum sits at the lower bound
        outcome = query(objective, 0, f"obj{k}.le0")
        if outcome is None:
            return SolveOutcome("timeout", wall_time=total_wall)
        if outcome.status != "unsatisfiable":
            model = outcome.model
            pinned.append(_model_objective(outcome, prog, objective))
            continue
        outcome = query(objective, None, f"obj{k}.probe")
        if outcome is None:
            return SolveOutcome("timeout", wall_time=total_wall)
        if outcome.status == "unsatisfiable":
            return SolveOutcome("unsatisfiable", wall_time=total_wall)
        best = _model_objective(outcome, prog, objective)
        model = outcome.model
        if best < 0:
            raise EncodingError("iterative mode requires non-negative objectives")
        lo = 1  # zero was just refuted
        while lo < best:
            mid = (lo + best) // 2
            outcome = query(objective, mid, f"obj{k}.le{mid}")
            if outcome is None:
                return SolveOutcome("timeout", wall_time=total_wall)
            if outcome.status == "unsatisfiable":
                lo = mid + 1
            else:
                best = _model_objective(outcome, prog, objective)
                model = outcome.model
        pinned.append(best)
    return SolveOutcome("optimal", model, tuple(pinned), total_wall)


def _model_objective(outcome: SolveOutcome, prog: ConstraintProgram,
                     objective: Term) -> int:
    """Evaluate the objective term under the outcome's model."""
    return _eval_term(objective, outcome.model)


def _eval_term(t: Term, model) -> int:
    op = t[0]
    if op == "int":
        return t[1]
    if op == "bool":
        return t[1]
    if op == "var":
        return model[t[1]]
    if op == "add":
        return sum(_eval_term(x, model) for x in t[1:])
    if op == "mul":
        return t[1] * _eval_term(t[2], model)
    if op == "ite":
        return _eval_term(t[2], model) if _eval_term(t[1], model) else _eval_term(t[3], model)
    if op == "eq":
        return _eval_term(t[1], model) == _eval_term(t[2], model)
    if op == "ne":
        return _eval_term(t[1], model) != _eval_term(t[2], model)
    if op == "le":
        return _eval_term(t[1], model) <= _eval_term(t[2], model)
    if op == "lt":
        return _eval_term(t[1], model) < _eval_term(t[2], model)
    if op == "ge":
        return _eval_term(t[1], model) >= _eval_term(t[2], model)
    if op == "gt":
        return _eval_term(t[1], model) > _eval_term(t[2], model)
    if op == "and":
        return all(_eval_term(x, model) for x in t[1:])
    if op == "or":
        return any(_eval_term(x, model) for x in t[1:])
    if op == "not":
        return not _eval_term(t[1], model)
    if op == "implies":
        return (not _eval_term(t[1], model)) or _eval_term(t[2], model)
    raise EncodingError(f"cannot evaluate term {op!r}")


def solve(prog: ConstraintProgram, config: SolverConfig = SolverConfig()) -> SolveOutcome:
    """Emit, run and parse. Lexicographic order follows the objective list."""
    n_obj = len(prog.objectives)
    if config.lex_mode == "iterative" and n_obj:
        return _solve_iterative(prog, config)
    if n_obj <= 1 or config.lex_mode == "native":
        text = emit_smtlib(prog)
        _dump(text, config, "")
        out, wall = _run_solver(text, config)
        if wall < 0:
            return SolveOutcome("timeout")
        try:
            outcome = parse_solver_output(out, prog, n_obj)
        except BridgeError:
            raise
        return SolveOutcome(outcome.status, outcome.model, outcome.objective_values, wall)

    # portable two-pass mode: pin each objective at its optimum, then solve the next
    pinned: list[int] = []
    total_wall = 0.0
    model: dict[str, Union[int, bool]] = {}
    names = set(v.name for v in prog.vars)
    for k in range(n_obj):
        staged = ConstraintProgram()
        staged.vars = list(prog.vars)
        staged._names = set(names)
        staged.assertions = list(prog.assertions)
        for j, val in enumerate(pinned):
            staged.assertions.append(eq(prog.objectives[j], num(val)))
        text = emit_smtlib(staged, objectives=[prog.objectives[k]])
        _dump(text, config, f"pass{k}")
        out, wall = _run_solver(text, config)
        if wall < 0:
            return SolveOutcome("timeout")
        total_wall += wall
        outcome = parse_solver_output(out, staged, 1)
        if outcome.status == "unsatisfiable":
            return SolveOutcome("unsatisfiable", wall_time=total_wall)
        pinned.append(outcome.objective_values[0])
        model = outcome.model
    return SolveOutcome("optimal", model, tuple(pinned), total_wall)
