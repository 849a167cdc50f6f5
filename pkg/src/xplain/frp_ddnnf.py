"""Feature relevancy for circuit classifiers, decided by one SAT call.

The encoding instantiates two replicas of the circuit over a shared block of
per-feature selector variables s_i ("feature i is fixed to its instance
value").  Each node j gets an indicator n_j per replica, meaning "the
sub-circuit rooted at j is satisfiable given the selected features".  The
fixed replica is forced inconsistent at the root, so any model's selected
set forces the prediction; the freed replica treats the target feature as
never selected and its root must flip exactly when the target is selected.
A model therefore decodes to a weak explanation containing the target whose
minimal explanations all contain the target; UNSAT means the target occurs
in no minimal explanation.

Only class-0 instances are encoded directly; class-1 queries run on the
complement circuit (synthesized for FBDDs, caller-supplied otherwise).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .circuit import (
    AND,
    FALSE,
    LIT,
    OR,
    TRUE,
    Circuit,
    Instance,
    NegationUnavailable,
    evaluate,
    negate,
)
from .cnfsat import CnfFormula, SatSolver, SatStatus, VarPool, write_dimacs
from .xpcore import CircuitOracle, FeatureSet, MemoOracle, extract_axp, verify_witness

FIXED_REPLICA = 0


@dataclass
class FrpEncoding:
    """CNF query asking for a weak explanation that pins the target feature."""

    formula: CnfFormula
    selector: dict[int, int]  # feature -> variable
    indicator: dict[tuple[int, int], int]  # (replica, node) -> variable
    target: int
    num_nodes: int

    def decode_selected(self, model: list[bool]) -> FeatureSet:
        return frozenset(i for i, var in self.selector.items() if model[var])

    def to_dimacs(self) -> str:
        comments = [f"s {i} -> {var}" for i, var in sorted(self.selector.items())]
        return write_dimacs(self.formula, comments=comments)


@dataclass
class FrpWitness:
    """Certificate that the target feature occurs in some minimal explanation."""

    target: int
    weak_set: FeatureSet
    axp: FeatureSet


@dataclass
class RelevancyResult:
    answer: str  # "yes", "no" or "unknown"
    target: int
    witness: FrpWitness | None = None
    stats: dict = field(default_factory=dict)


def encode(circuit: Circuit, instance: Instance, target: int) -> FrpEncoding:
    """Build the two-replica selector/indicator CNF for a class-0 instance."""
    if instance.predicted_class != 0:
        raise ValueError("the encoding applies to class-0 instances; negate first")
    if not 1 <= target <= circuit.num_features:
        raise ValueError(f"target feature {target} out of range")
    if instance.num_features != circuit.num_features:
        raise ValueError("instance does not match the circuit's feature count")

    pool = VarPool()
    selector = {i: pool.var(("s", i)) for i in range(1, circuit.num_features + 1)}
    indicator: dict[tuple[int, int], int] = {}
    for replica in (FIXED_REPLICA, target):
        for j in range(circuit.num_nodes):
            indicator[(replica, j)] = pool.var(("n", replica, j))

    formula = CnfFormula(pool.num_vars)
    values = instance.values
    for replica in (FIXED_REPLICA, target):
        for j, node in enumerate(circuit.nodes):
            n = indicator[(replica, j)]
            kind = node.kind
            if kind == LIT:
                satisfied = bool(values[node.feature - 1]) == node.positive
                if satisfied:
                    # Consistent with the instance: holds whether or not the
                    # feature is selected.
                    formula.add([n])
                elif node.feature == replica:
                    # The freed replica treats its own selector as off, so an
                    # inconsistent leaf on the target stays satisfiable.
                    formula.add([n])
                else:
                    # Satisfiable exactly when the feature is left free.
                    s = selector[node.feature]
                    formula.add([-n, -s])
                    formula.add([n, s])
            elif kind == OR:
                child_vars = [indicator[(replica, c)] for c in node.children]
                formula.add([-n] + child_vars)
                for cv in child_vars:
                    formula.add([-cv, n])
            elif kind == AND:
                child_vars = [indicator[(replica, c)] for c in node.children]
                for cv in child_vars:
                    formula.add([-n, cv])
                formula.add([n] + [-cv for cv in child_vars])
            elif kind == TRUE:
                formula.add([n])
            elif kind == FALSE:
                formula.add([-n])
    root = circuit.root
    # Selected features must keep the prediction at 0 ...
    formula.add([-indicator[(FIXED_REPLICA, root)]])
    # ... and dropping the target must make the prediction flip.
    s_t = selector[target]
    n_t_root = indicator[(target, root)]
    formula.add([-s_t, n_t_root])
    formula.add([s_t, -n_t_root])
    # The target itself is selected.
    formula.add([s_t])
    return FrpEncoding(formula, selector, indicator, target, circuit.num_nodes)


def _working_circuit(
    circuit: Circuit, instance: Instance, negated_circuit: Circuit | None
) -> tuple[Circuit, Instance]:
    """Reduce a class-1 query to a class-0 query on the complement."""
    if instance.predicted_class == 0:
        return circuit, instance
    if negated_circuit is None:
        try:
            negated_circuit = negate(circuit)
        except NegationUnavailable:
            raise NegationUnavailable(
                "relevancy on a class-1 instance needs the complement circuit; "
                "pass negated_circuit for non-FBDD inputs"
            ) from None
    if evaluate(negated_circuit, instance.values) != 0:
        raise ValueError(
            "supplied negated circuit does not classify the instance as 0"
        )
    return negated_circuit, Instance(instance.values, 0)


def decide_relevancy(
    circuit: Circuit,
    instance: Instance,
    target: int,
    *,
    negated_circuit: Circuit | None = None,
    solver_command: str | None = None,
    conflict_budget: int | None = None,
) -> RelevancyResult:
    """Is the target feature in some minimal explanation of the instance?

    A "yes" ships a verified witness: a weak explanation that still forces
    the prediction, stops doing so once the target is freed, and the minimal
    explanation extracted from it (which therefore contains the target).
    """
    if evaluate(circuit, instance.values) != instance.predicted_class:
        raise ValueError("instance class does not match the circuit prediction")
    working, working_instance = _working_circuit(circuit, instance, negated_circuit)

    started = time.perf_counter()
    encoding = encode(working, working_instance, target)
    if solver_command:
        from .cnfsat import solve_external

        outcome = solve_external(encoding.formula, solver_command)
    else:
        solver = SatSolver.from_formula(encoding.formula)
        outcome = solver.solve(conflict_budget=conflict_budget)

    oracle = MemoOracle(CircuitOracle(working, working_instance))
    stats = {
        "sat_calls": 1,
        "cnf_vars": encoding.formula.num_vars,
        "cnf_clauses": encoding.formula.num_clauses,
        "predict_calls": 0,
    }
    if outcome.status == SatStatus.UNKNOWN:
        stats["wall_ms"] = (time.perf_counter() - started) * 1000.0
        return RelevancyResult("unknown", target, stats=stats)
    if outcome.status == SatStatus.UNSAT:
        stats["wall_ms"] = (time.perf_counter() - started) * 1000.0
        return RelevancyResult("no", target, stats=stats)

    weak_set = encoding.decode_selected(outcome.model)
    axp = extract_axp(oracle, weak_set).features
    verify_witness(oracle, target, weak_set, axp)
    stats["predict_calls"] = oracle.inner.calls
    stats["wall_ms"] = (time.perf_counter() - started) * 1000.0
    return RelevancyResult("yes", target, FrpWitness(target, weak_set, axp), stats)
