"""CNF clause database, DIMACS I/O and a complete SAT decision procedure.

The built-in solver is conflict-driven clause learning with two-watched-
literal propagation, first-UIP learning, activity-based branching and Luby
restarts.  It is fully deterministic: branching picks the unassigned variable
of highest activity, lowest index winning ties, and the default phase is
false.  A "static" branching mode (lowest index first, phase chosen to
satisfy some currently unsatisfied clause containing the positive literal)
is available for small formulas where reproducible enumeration-style models
matter; restarts are disabled there.

Every satisfying assignment is re-verified against the clause database
before it is returned.  A configurable conflict budget turns into a distinct
``UNKNOWN`` status rather than being conflated with UNSAT.
"""

from __future__ import annotations

import enum
import heapq
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

SAT_TIMEOUT_ENV = "XPLAIN_SAT_TIMEOUT_MS"

_UNDEF, _TRUE, _FALSE = 0, 1, 2


class DimacsError(ValueError):
    """Malformed DIMACS input."""


class ExternalSolverError(RuntimeError):
    """Base class for external-solver adapter failures."""


class ExternalSolverProcessError(ExternalSolverError):
    """The solver process could not be launched or died abnormally."""


class ExternalSolverOutputError(ExternalSolverError):
    """The solver output had no usable verdict, or its model was wrong."""


class ExternalSolverTimeout(ExternalSolverError):
    """The solver exceeded its wall-clock allowance."""


class SatStatus(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass
class SatOutcome:
    """Solver verdict; ``model[v]`` is the value of variable v when SAT."""

    status: SatStatus
    model: list[bool] | None = None
    stats: dict = field(default_factory=dict)

    def value(self, var: int) -> bool:
        if self.model is None:
            raise ValueError("no model available")
        return self.model[var]


@dataclass
class CnfFormula:
    """Clauses over variables 1..num_vars; literals are nonzero signed ints."""

    num_vars: int
    clauses: list[list[int]] = field(default_factory=list)

    def add(self, clause) -> None:
        clause = list(clause)
        for lit in clause:
            if lit == 0:
                raise ValueError("0 is not a literal")
            self.num_vars = max(self.num_vars, abs(lit))
        self.clauses.append(clause)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)


class VarPool:
    """Hands out fresh solver variables, with injective named handles."""

    def __init__(self) -> None:
        self._next = 1
        self._handles: dict = {}

    def fresh(self) -> int:
        var = self._next
        self._next += 1
        return var

    def var(self, key) -> int:
        """The variable registered for ``key``, allocating it on first use."""
        got = self._handles.get(key)
        if got is None:
            got = self._handles[key] = self.fresh()
        return got

    def lookup(self, key) -> int:
        return self._handles[key]

    @property
    def num_vars(self) -> int:
        return self._next - 1

    def handles(self) -> dict:
        return dict(self._handles)


def satisfies(clause, model: list[bool]) -> bool:
    return any(model[lit] if lit > 0 else not model[-lit] for lit in clause)


def verify_model(formula: CnfFormula, model: list[bool]) -> bool:
    """Independent pass checking every clause against a model."""
    return all(satisfies(clause, model) for clause in formula.clauses)


class SatSolver:
    """Incremental CDCL solver.

    Clauses may be added between ``solve`` calls; learned clauses are kept.
    ``solve`` accepts assumption literals that hold for that call only.
    """

    def __init__(
        self,
        num_vars: int = 0,
        *,
        branching: str = "activity",
        conflict_budget: int | None = None,
        seed: int = 0,
    ) -> None:
        if branching not in ("activity", "static"):
            raise ValueError("branching must be 'activity' or 'static'")
        self.branching = branching
        self.conflict_budget = conflict_budget
        self.seed = seed  # reserved; the engine itself is deterministic
        self.num_vars = 0
        self._vals: list[int] = [0, 0]  # per literal code, 0/1/2
        self._level = [0]
        self._reason = [-1]
        self._activity = [0.0]
        self._saved_phase = [False]
        self._watches: list[list[int]] = [[], []]
        self._pos_occ: list[list[int]] = [[]]
        self._clauses: list[list[int]] = []  # watched DB incl. learned, as codes
        self._num_original = 0
        self._original: list[list[int]] = []  # as added, signed, for verification
        self._trail: list[int] = []
        self._trail_lim: list[int] = []
        self._qhead = 0
        self._heap: list[tuple[float, int]] = []
        self._var_inc = 1.0
        self._var_decay = 0.95
        self._unsat = False
        self.stats = {"decisions": 0, "conflicts": 0, "propagations": 0, "solves": 0}
        if num_vars:
            self._ensure_var(num_vars)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_formula(cls, formula: CnfFormula, **kwargs) -> "SatSolver":
        solver = cls(formula.num_vars, **kwargs)
        for clause in formula.clauses:
            solver.add_clause(clause)
        return solver

    def _ensure_var(self, var: int) -> None:
        while self.num_vars < var:
            self.num_vars += 1
            self._vals.extend((0, 0))
            self._watches.extend(([], []))
            self._level.append(0)
            self._reason.append(-1)
            self._activity.append(0.0)
            self._saved_phase.append(False)
            self._pos_occ.append([])
            heapq.heappush(self._heap, (0.0, self.num_vars))

    def add_clause(self, lits) -> None:
        """Add a clause (at decision level 0, i.e. between solve calls)."""
        assert not self._trail_lim, "clauses can only be added between solve calls"
        signed = []
        seen = set()
        for lit in lits:
            if lit == 0:
                raise ValueError("0 is not a literal")
            if -lit in seen:
                return  # tautology, always satisfied
            if lit not in seen:
                seen.add(lit)
                signed.append(lit)
            self._ensure_var(abs(lit))
        self._original.append(list(signed))
        if self._unsat:
            return
        codes = []
        for lit in signed:
            code = (abs(lit) << 1) | (lit < 0)
            v = self._vals[code]
            if v == _TRUE:
                return  # satisfied at level 0
            if v != _FALSE:
                codes.append(code)
        if not codes:
            self._unsat = True
            return
        if len(codes) == 1:
            self._enqueue(codes[0], -1)
            if self._propagate() >= 0:
                self._unsat = True
            return
        self._attach(codes, learned=False)

    def _attach(self, codes: list[int], learned: bool) -> int:
        idx = len(self._clauses)
        self._clauses.append(codes)
        if not learned:
            self._num_original += 1
        self._watches[codes[0]].append(idx)
        self._watches[codes[1]].append(idx)
        for code in codes:
            if not code & 1:
                self._pos_occ[code >> 1].append(idx)
        return idx

    # -- assignment machinery -----------------------------------------------

    def _enqueue(self, code: int, reason: int) -> None:
        var = code >> 1
        self._vals[code] = _TRUE
        self._vals[code ^ 1] = _FALSE
        self._level[var] = len(self._trail_lim)
        self._reason[var] = reason
        self._trail.append(code)

    def _propagate(self) -> int:
        """Unit propagation; returns the conflicting clause index or -1."""
        vals = self._vals
        clauses = self._clauses
        watches = self._watches
        while self._qhead < len(self._trail):
            p = self._trail[self._qhead]
            self._qhead += 1
            self.stats["propagations"] += 1
            false_code = p ^ 1
            ws = watches[false_code]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                cl = clauses[ci]
                if cl[0] == false_code:
                    cl[0], cl[1] = cl[1], false_code
                first = cl[0]
                if vals[first] == _TRUE:
                    ws[j] = ci
                    j += 1
                    continue
                moved = False
                for k in range(2, len(cl)):
                    ck = cl[k]
                    if vals[ck] != _FALSE:
                        cl[1], cl[k] = ck, cl[1]
                        watches[ck].append(ci)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = ci
                j += 1
                if vals[first] == _FALSE:
                    while i < n:  # conflict: keep the rest of the watch list
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    return ci
                self._enqueue(first, ci)
            del ws[j:]
        return -1

    def _cancel_until(self, target_level: int) -> None:
        if len(self._trail_lim) <= target_level:
            return
        bound = self._trail_lim[target_level]
        for code in reversed(self._trail[bound:]):
            var = code >> 1
            self._saved_phase[var] = not code & 1
            self._vals[code] = _UNDEF
            self._vals[code ^ 1] = _UNDEF
            self._reason[var] = -1
            heapq.heappush(self._heap, (-self._activity[var], var))
        del self._trail[bound:]
        del self._trail_lim[target_level:]
        self._qhead = len(self._trail)

    # -- conflict analysis ---------------------------------------------------

    def _bump(self, var: int) -> None:
        self._activity[var] += self._var_inc
        if self._activity[var] > 1e100:
            for v in range(1, self.num_vars + 1):
                self._activity[v] *= 1e-100
            self._var_inc *= 1e-100
            self._heap = [
                (-self._activity[v], v)
                for v in range(1, self.num_vars + 1)
                if self._vals[v << 1] == _UNDEF
            ]
            heapq.heapify(self._heap)
        elif self._vals[var << 1] == _UNDEF:
            heapq.heappush(self._heap, (-self._activity[var], var))

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        """First-UIP learning; returns (learned clause codes, backjump level)."""
        current = len(self._trail_lim)
        seen = [False] * (self.num_vars + 1)
        learnt: list[int] = []
        path = 0
        p = -1
        index = len(self._trail)
        cl = self._clauses[confl]
        while True:
            start = 0 if p == -1 else 1
            for q in cl[start:]:
                var = q >> 1
                if not seen[var] and self._level[var] > 0:
                    seen[var] = True
                    self._bump(var)
                    if self._level[var] >= current:
                        path += 1
                    else:
                        learnt.append(q)
            while True:
                index -= 1
                p = self._trail[index]
                if seen[p >> 1]:
                    break
            path -= 1
            seen[p >> 1] = False
            if path == 0:
                break
            cl = self._clauses[self._reason[p >> 1]]
        learnt.insert(0, p ^ 1)
        if len(learnt) == 1:
            return learnt, 0
        # Move the literal with the highest remaining level to position 1.
        best = max(range(1, len(learnt)), key=lambda i: self._level[learnt[i] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self._level[learnt[1] >> 1]

    # -- branching ------------------------------------------------------------

    def _pick_branch(self) -> int | None:
        if self.branching == "static":
            for var in range(1, self.num_vars + 1):
                if self._vals[var << 1] == _UNDEF:
                    return (var << 1) | (0 if self._greedy_phase(var) else 1)
            return None
        heap = self._heap
        while heap:
            neg_act, var = heapq.heappop(heap)
            if self._vals[var << 1] != _UNDEF or -neg_act != self._activity[var]:
                continue
            return (var << 1) | (0 if self._saved_phase[var] else 1)
        for var in range(1, self.num_vars + 1):
            if self._vals[var << 1] == _UNDEF:
                return (var << 1) | (0 if self._saved_phase[var] else 1)
        return None

    def _greedy_phase(self, var: int) -> bool:
        """True iff the positive literal occurs in a currently unsatisfied clause."""
        vals = self._vals
        for ci in self._pos_occ[var]:
            satisfied = False
            for code in self._clauses[ci]:
                if vals[code] == _TRUE:
                    satisfied = True
                    break
            if not satisfied:
                return True
        return False

    # -- main search -----------------------------------------------------------

    def solve(self, assumptions=(), conflict_budget: int | None = None) -> SatOutcome:
        """Decide the current clause set under the given assumption literals."""
        self.stats["solves"] += 1
        if self._unsat:
            return SatOutcome(SatStatus.UNSAT, stats=dict(self.stats))
        assumps = []
        for lit in assumptions:
            self._ensure_var(abs(lit))
            assumps.append((abs(lit) << 1) | (lit < 0))
        budget = conflict_budget if conflict_budget is not None else self.conflict_budget
        conflicts_here = 0
        restart_unit = 100
        luby_index = 1
        restart_limit = _luby(luby_index) * restart_unit if self.branching == "activity" else None
        conflicts_since_restart = 0

        while True:
            confl = self._propagate()
            if confl >= 0:
                self.stats["conflicts"] += 1
                conflicts_here += 1
                conflicts_since_restart += 1
                if not self._trail_lim:
                    self._unsat = True
                    return SatOutcome(SatStatus.UNSAT, stats=dict(self.stats))
                if budget is not None and conflicts_here > budget:
                    self._cancel_until(0)
                    return SatOutcome(SatStatus.UNKNOWN, stats=dict(self.stats))
                learnt, back_level = self._analyze(confl)
                self._cancel_until(back_level)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    idx = self._attach(learnt, learned=True)
                    self._enqueue(learnt[0], idx)
                self._var_inc /= self._var_decay
                continue
            if restart_limit is not None and conflicts_since_restart >= restart_limit:
                conflicts_since_restart = 0
                luby_index += 1
                restart_limit = _luby(luby_index) * restart_unit
                self._cancel_until(0)
                continue
            level = len(self._trail_lim)
            if level < len(assumps):
                code = assumps[level]
                value = self._vals[code]
                if value == _TRUE:
                    self._trail_lim.append(len(self._trail))
                    continue
                if value == _FALSE:
                    self._cancel_until(0)
                    return SatOutcome(SatStatus.UNSAT, stats=dict(self.stats))
                self._trail_lim.append(len(self._trail))
                self._enqueue(code, -1)
                continue
            decision = self._pick_branch()
            if decision is None:
                model = [False] * (self.num_vars + 1)
                for var in range(1, self.num_vars + 1):
                    model[var] = self._vals[var << 1] == _TRUE
                self._cancel_until(0)
                outcome = SatOutcome(SatStatus.SAT, model=model, stats=dict(self.stats))
                self._check_model(outcome.model, assumptions)
                return outcome
            self.stats["decisions"] += 1
            self._trail_lim.append(len(self._trail))
            self._enqueue(decision, -1)

    def _check_model(self, model: list[bool], assumptions) -> None:
        for clause in self._original:
            for lit in clause:
                if model[lit] if lit > 0 else not model[-lit]:
                    break
            else:
                raise AssertionError(f"solver produced a model violating {clause}")
        for lit in assumptions:
            if (model[lit] if lit > 0 else not model[-lit]) is not True:
                raise AssertionError(f"solver model violates assumption {lit}")

    @property
    def num_clauses(self) -> int:
        return len(self._original)


def _luby(i: int) -> int:
    # Luby restart sequence 1,1,2,1,1,2,4,...
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while (1 << k) - 1 != i:
        k -= 1
        i -= (1 << k) - 1
    return 1 << (k - 1) if k else 1


def solve(formula: CnfFormula, assumptions=(), **kwargs) -> SatOutcome:
    """One-shot decision of ``formula`` with the built-in solver."""
    return SatSolver.from_formula(formula, **kwargs).solve(assumptions)


# ---------------------------------------------------------------------------
# DIMACS


def write_dimacs(formula: CnfFormula, comments: list[str] | None = None) -> str:
    lines = []
    for comment in comments or ():
        lines.append(f"c {comment}")
    lines.append(f"p cnf {formula.num_vars} {len(formula.clauses)}")
    for clause in formula.clauses:
        lines.append(" ".join(map(str, clause)) + " 0")
    return "\n".join(lines) + "\n"


def read_dimacs(text: str) -> CnfFormula:
    num_vars = None
    num_clauses = None
    tokens: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError(f"line {lineno}: duplicate problem line")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: expected 'p cnf <vars> <clauses>'")
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: non-numeric problem line") from None
            continue
        if num_vars is None:
            raise DimacsError(f"line {lineno}: clause before the problem line")
        try:
            tokens.extend(int(tok) for tok in line.split())
        except ValueError:
            raise DimacsError(f"line {lineno}: non-numeric literal") from None
    if num_vars is None:
        raise DimacsError("missing problem line")
    clauses: list[list[int]] = []
    current: list[int] = []
    for tok in tokens:
        if tok == 0:
            clauses.append(current)
            current = []
            continue
        if abs(tok) > num_vars:
            raise DimacsError(f"literal {tok} out of range (header declares {num_vars} vars)")
        current.append(tok)
    if current:
        raise DimacsError("last clause is not 0-terminated")
    if len(clauses) != num_clauses:
        raise DimacsError(
            f"header declares {num_clauses} clauses but {len(clauses)} were given"
        )
    return CnfFormula(num_vars, clauses)


# ---------------------------------------------------------------------------
# External solver adapter


def _timeout_seconds(timeout_ms: int | None) -> float | None:
    if timeout_ms is None:
        env = os.environ.get(SAT_TIMEOUT_ENV)
        if env:
            timeout_ms = int(env)
    return timeout_ms / 1000.0 if timeout_ms else None


def solve_external(
    formula: CnfFormula, solver_command: str, *, timeout_ms: int | None = None
) -> SatOutcome:
    """Run an off-the-shelf solver process on ``formula``.

    The command receives a DIMACS file as its last argument (or at a
    ``{file}`` placeholder); output is parsed for ``s`` and ``v`` lines and
    the exit status is ignored, as is conventional for SAT solvers.  A SAT
    answer is re-verified locally before being trusted.
    """
    argv = shlex.split(solver_command)
    if not argv:
        raise ExternalSolverProcessError("empty solver command")
    timeout = _timeout_seconds(timeout_ms)
    with tempfile.NamedTemporaryFile(
        "w", suffix=".cnf", prefix="xplain_", delete=False
    ) as handle:
        handle.write(write_dimacs(formula))
        path = handle.name
    try:
        if any("{file}" in arg for arg in argv):
            argv = [arg.replace("{file}", path) for arg in argv]
        else:
            argv = argv + [path]
        try:
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=timeout
            )
        except subprocess.TimeoutExpired as exc:
            raise ExternalSolverTimeout(
                f"solver exceeded {timeout:.3f}s: {solver_command}"
            ) from exc
        except OSError as exc:
            raise ExternalSolverProcessError(
                f"cannot launch solver {solver_command!r}: {exc}"
            ) from exc
    finally:
        try:
            os.unlink(path)
        except OSError:
            pass
    status: SatStatus | None = None
    value_tokens: list[int] = []
    for line in proc.stdout.splitlines():
        if line.startswith("s "):
            verdict = line[2:].strip().upper()
            if verdict == "SATISFIABLE":
                status = SatStatus.SAT
            elif verdict == "UNSATISFIABLE":
                status = SatStatus.UNSAT
            elif verdict == "UNKNOWN":
                status = SatStatus.UNKNOWN
            else:
                raise ExternalSolverOutputError(f"unrecognized status line {line!r}")
        elif line.startswith("v "):
            try:
                value_tokens.extend(int(tok) for tok in line[2:].split())
            except ValueError:
                raise ExternalSolverOutputError(f"bad value line {line!r}") from None
    if status is None:
        raise ExternalSolverOutputError(
            "solver produced no 's' line (stderr: %s)" % proc.stderr.strip()[:200]
        )
    if status != SatStatus.SAT:
        return SatOutcome(status)
    model = [False] * (formula.num_vars + 1)
    for lit in value_tokens:
        if lit == 0:
            continue
        if abs(lit) > formula.num_vars:
            raise ExternalSolverOutputError(f"model literal {lit} out of range")
        model[abs(lit)] = lit > 0
    if not verify_model(formula, model):
        raise ExternalSolverOutputError("solver model does not satisfy the formula")
    return SatOutcome(SatStatus.SAT, model=model)
