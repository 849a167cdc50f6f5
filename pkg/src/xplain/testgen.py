"""Ground-truth oracles and adversarial instance generators.

``enumerate_axps`` walks the subset lattice and is the reference answer for
every relevancy/necessity query at small feature counts.  The two ``gen_*``
constructions turn a CNF into a classifier whose target-feature relevancy
equals the CNF's satisfiability, giving test instances with a known answer
computed by an independent satisfiability check.  Random generators produce
decomposable circuits (by variable partitioning) and monotone threshold
models for property-style corpora.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circuit import (
    Circuit,
    Instance,
    compile_decision_nodes,
    evaluate,
    evaluate_all,
    make_instance,
    and_node,
    literal,
    or_node,
)
from .cnfsat import CnfFormula, SatStatus, solve
from .frp_mono import FunctionModel, LinearThresholdModel, MonotoneModel
from .xpcore import ClassifierOracle, FeatureSet, full_set, is_axp

ENUMERATION_MAX_FEATURES = 20
_EXHAUSTIVE_SAT_MAX_VARS = 16


class SizeGuardError(ValueError):
    """The exhaustive walk was asked to cover too large a space."""


# ---------------------------------------------------------------------------
# Brute-force oracles


class TruthTableOracle:
    """Weak-explanation test from a full truth table (boolean classifiers).

    Completely independent of the conditioning/bounds code paths: the table
    is filled by plain evaluation and queries inspect it with bit masks.
    """

    def __init__(self, table: np.ndarray, instance: Instance):
        self.num_features = instance.num_features
        if len(table) != 1 << self.num_features:
            raise ValueError("truth table size does not match the feature count")
        self.table = np.asarray(table, dtype=np.uint8)
        self.instance = instance
        self._points = np.arange(1 << self.num_features, dtype=np.uint32)
        self._v_bits = 0
        for i, v in enumerate(instance.values):
            if v:
                self._v_bits |= 1 << i
        self.calls = 0

    @classmethod
    def from_circuit(cls, circuit: Circuit, instance: Instance) -> "TruthTableOracle":
        if circuit.num_features > ENUMERATION_MAX_FEATURES:
            raise SizeGuardError("truth table limited to small feature counts")
        return cls(evaluate_all(circuit).astype(np.uint8), instance)

    @classmethod
    def from_predict(cls, predict, instance: Instance) -> "TruthTableOracle":
        m = instance.num_features
        if m > _EXHAUSTIVE_SAT_MAX_VARS:
            raise SizeGuardError("truth table limited to small feature counts")
        table = np.empty(1 << m, dtype=np.uint8)
        for p in range(1 << m):
            point = tuple((p >> i) & 1 for i in range(m))
            table[p] = predict(point)
        return cls(table, instance)

    def waxp(self, features: FeatureSet) -> bool:
        self.calls += 1
        mask = 0
        for f in features:
            mask |= 1 << (f - 1)
        agrees = (self._points & mask) == (self._v_bits & mask)
        return bool(np.all(self.table[agrees] == self.instance.predicted_class))


# ---------------------------------------------------------------------------
# Exhaustive enumeration of all minimal explanations


@dataclass(frozen=True)
class AxpSet:
    """The complete set of minimal explanations of one instance."""

    axps: frozenset[FeatureSet]
    num_features: int

    @property
    def relevant_features(self) -> FeatureSet:
        out: set[int] = set()
        for axp in self.axps:
            out |= axp
        return frozenset(out)

    @property
    def necessary_features(self) -> FeatureSet:
        if not self.axps:
            return frozenset()
        out = set(full_set(self.num_features))
        for axp in self.axps:
            out &= axp
        return frozenset(out)

    def is_relevant(self, feature: int) -> bool:
        return feature in self.relevant_features

    def is_necessary(self, feature: int) -> bool:
        return feature in self.necessary_features

    def as_sorted_lists(self) -> list[list[int]]:
        return sorted(sorted(axp) for axp in self.axps)


def enumerate_axps(oracle: ClassifierOracle, max_features: int = ENUMERATION_MAX_FEATURES) -> AxpSet:
    """All minimal explanations, by ascending-cardinality subset walk.

    Strict supersets of already-found explanations cannot be minimal and are
    skipped outright; every other candidate is tested for sufficiency and
    then explicitly for minimality via single-feature deletions.
    """
    m = oracle.num_features
    if m > max_features:
        raise SizeGuardError(f"enumeration over {m} features exceeds the guard ({max_features})")
    features = sorted(full_set(m))
    found: list[FeatureSet] = []
    for size in range(0, m + 1):
        for combo in itertools.combinations(features, size):
            candidate = frozenset(combo)
            if any(axp <= candidate for axp in found):
                continue
            if not oracle.waxp(candidate):
                continue
            if all(not oracle.waxp(candidate - {j}) for j in candidate):
                found.append(candidate)
    return AxpSet(frozenset(found), m)


# ---------------------------------------------------------------------------
# Independent satisfiability check


def exhaustive_sat(formula: CnfFormula) -> bool:
    """Truth-table satisfiability; the reference answer for small formulas."""
    n = formula.num_vars
    if n > _EXHAUSTIVE_SAT_MAX_VARS:
        raise SizeGuardError(f"exhaustive satisfiability limited to {_EXHAUSTIVE_SAT_MAX_VARS} vars")
    points = np.arange(1 << n, dtype=np.uint32)
    alive = np.ones(1 << n, dtype=bool)
    for clause in formula.clauses:
        satisfied = np.zeros(1 << n, dtype=bool)
        for lit in clause:
            bit = (points >> (abs(lit) - 1)) & 1
            satisfied |= (bit == 1) if lit > 0 else (bit == 0)
        alive &= satisfied
        if not alive.any():
            return False
    return bool(alive.any())


def _cnf_is_satisfiable(formula: CnfFormula) -> bool:
    if formula.num_vars <= _EXHAUSTIVE_SAT_MAX_VARS:
        return exhaustive_sat(formula)
    return solve(formula).status == SatStatus.SAT


# ---------------------------------------------------------------------------
# Reductions from CNF satisfiability


@dataclass
class ReductionArtifact:
    """Classifier built from a CNF so that target relevancy == satisfiability."""

    kind: str  # "mono-cnf" or "fbdd-cnf"
    source: CnfFormula
    instance: Instance
    target: int
    expected_relevant: bool
    model: MonotoneModel | None = None
    circuit: Circuit | None = None
    decision_entries: list | None = None  # fbdd-format serialization payload


def format_fbdd_entries(entries: Sequence[tuple], var_count: int) -> str:
    """Serialize decision entries into the ``fbdd`` text format."""
    lines = [f"fbdd {len(entries)} {var_count}"]
    for entry in entries:
        if entry[0] == "T":
            lines.append(f"T {1 if entry[1] else 0}")
        else:
            _, var, lo, hi = entry
            lines.append(f"N {var} {lo} {hi}")
    return "\n".join(lines) + "\n"


def _is_trivially_satisfiable(formula: CnfFormula) -> bool:
    if not formula.clauses:
        return True
    common = set(formula.clauses[0])
    for clause in formula.clauses[1:]:
        common &= set(clause)
        if not common:
            return False
    return bool(common)


def build_mono_reduction_predictor(formula: CnfFormula):
    """Predictor of the monotone classifier encoding a CNF.

    Features 2..2k+1 are positive stand-ins for the k variables and their
    negations; feature 1 gates the rewritten formula.  The prediction is 1
    exactly when some variable's pair of stand-ins are both 1 (built-in,
    always-available explanations) or the gate is up and the rewritten,
    all-positive formula is satisfied.
    """
    k = formula.num_vars
    positive_clauses = [
        sorted({lit if lit > 0 else -lit + k for lit in clause})
        for clause in formula.clauses
    ]

    def predict(point: tuple) -> int:
        x = [v > 0.5 for v in point]  # x[0] is the gate, x[i] the stand-ins
        if any(x[i] and x[i + k] for i in range(1, k + 1)):
            return 1
        if x[0] and all(any(x[idx] for idx in clause) for clause in positive_clauses):
            return 1
        return 0

    return predict, 2 * k + 1


def gen_mono_from_cnf(formula: CnfFormula) -> ReductionArtifact:
    """Monotone classifier whose gate feature is relevant iff the CNF is SAT.

    The all-ones instance predicts 1 through the stand-in pairs; an
    explanation avoiding every pair must use the gate and encodes a
    satisfying assignment.  Rejects trivially satisfiable input (a literal
    common to all clauses collapses the pair explanations).
    """
    if formula.num_vars < 1:
        raise ValueError("the reduction needs at least one variable")
    if any(not clause for clause in formula.clauses):
        raise ValueError("empty clauses are not allowed")
    if _is_trivially_satisfiable(formula):
        raise ValueError("trivially satisfiable input (some literal occurs in all clauses)")
    predict, num_features = build_mono_reduction_predictor(formula)
    model = FunctionModel(predict, num_features, 2, [(0.0, 1.0)] * num_features)
    values = (1.0,) * num_features
    predicted = model.predict(values)
    assert predicted == 1, "the all-ones point must predict 1"
    instance = Instance(values, predicted)
    return ReductionArtifact(
        kind="mono-cnf",
        source=formula,
        instance=instance,
        target=1,
        expected_relevant=_cnf_is_satisfiable(formula),
        model=model,
    )


def gen_fbdd_from_cnf(formula: CnfFormula) -> ReductionArtifact:
    """Read-once branching program whose root feature is relevant iff SAT.

    Every literal occurrence gets a private feature; a satisfied-occurrence
    chain evaluates the renamed formula behind the gate feature, and the
    gate-down branch accepts exactly the points that pick inconsistent
    values for some original variable.  The instance satisfies every renamed
    literal and raises the gate, predicting class 1 (so relevancy queries
    exercise the complement circuit).
    """
    m0 = formula.num_vars
    n = len(formula.clauses)
    if m0 < 1 or n < 1:
        raise ValueError("the reduction needs at least one variable and one clause")
    clauses = []
    for index, clause in enumerate(formula.clauses, start=1):
        if not clause:
            raise ValueError(f"clause {index} is empty")
        deduped = sorted(set(clause), key=lambda lit: (abs(lit), lit < 0))
        if any(-lit in deduped for lit in deduped):
            raise ValueError(f"clause {index} is tautological; drop it first")
        clauses.append(deduped)

    def occurrence_feature(clause_index: int, var: int) -> int:
        return (clause_index - 1) * m0 + var + 1

    num_features = n * m0 + 1
    entries: list[tuple] = [("T", True), ("T", False)]
    true_idx, false_idx = 0, 1

    # Chain of per-clause programs: satisfying any literal advances to the
    # next clause, exhausting a clause fails the whole formula.
    next_clause = true_idx
    for i in range(n, 0, -1):
        cursor = false_idx
        for lit in reversed(clauses[i - 1]):
            feature = occurrence_feature(i, abs(lit))
            if lit > 0:
                entries.append(("N", feature, cursor, next_clause))
            else:
                entries.append(("N", feature, next_clause, cursor))
            cursor = len(entries) - 1
        next_clause = cursor
    formula_root = next_clause

    # Gate-down branch: accept any point asserting both a positive and a
    # negative occurrence of the same original variable.
    occurrences_pos: dict[int, list[int]] = {j: [] for j in range(1, m0 + 1)}
    occurrences_neg: dict[int, list[int]] = {j: [] for j in range(1, m0 + 1)}
    for i, clause in enumerate(clauses, start=1):
        for lit in clause:
            (occurrences_pos if lit > 0 else occurrences_neg)[abs(lit)].append(i)
    blocks = [j for j in range(1, m0 + 1) if occurrences_pos[j] and occurrences_neg[j]]

    next_block = false_idx
    for j in reversed(blocks):
        # Negative-occurrence disjunction: satisfied when some negative
        # occurrence is set to 0; exhausting it falls through to next block.
        cursor_neg = next_block
        for i in reversed(occurrences_neg[j]):
            feature = occurrence_feature(i, j)
            entries.append(("N", feature, true_idx, cursor_neg))
            cursor_neg = len(entries) - 1
        # Positive-occurrence disjunction gates into the negative one.
        cursor_pos = next_block
        for i in reversed(occurrences_pos[j]):
            feature = occurrence_feature(i, j)
            entries.append(("N", feature, cursor_pos, cursor_neg))
            cursor_pos = len(entries) - 1
        next_block = cursor_pos
    conflict_root = next_block

    entries.append(("N", 1, conflict_root, formula_root))
    circuit = compile_decision_nodes(entries, len(entries) - 1, num_features)

    values = [0] * num_features
    values[0] = 1
    for i, clause in enumerate(clauses, start=1):
        for lit in clause:
            values[occurrence_feature(i, abs(lit)) - 1] = 1 if lit > 0 else 0
    predicted = evaluate(circuit, values)
    assert predicted == 1, "the occurrence-satisfying point must predict 1"
    instance = Instance(tuple(values), predicted)
    return ReductionArtifact(
        kind="fbdd-cnf",
        source=formula,
        instance=instance,
        target=1,
        expected_relevant=_cnf_is_satisfiable(formula),
        circuit=circuit,
        decision_entries=entries,
    )


def reduction_ground_formula(artifact: ReductionArtifact):
    """Direct evaluator of the reduction's defining formula (for testing)."""
    if artifact.kind != "fbdd-cnf":
        raise ValueError("only the branching-program reduction has one")
    formula = artifact.source
    m0 = formula.num_vars

    def direct(point: tuple) -> int:
        def occ(i: int, var: int) -> bool:
            return bool(point[(i - 1) * m0 + var])

        renamed_ok = all(
            any(occ(i, abs(lit)) == (lit > 0) for lit in clause)
            for i, clause in enumerate(formula.clauses, start=1)
        )
        conflict = False
        for j in range(1, m0 + 1):
            pos = [i for i, cl in enumerate(formula.clauses, start=1) if j in cl]
            neg = [i for i, cl in enumerate(formula.clauses, start=1) if -j in cl]
            if any(occ(i, j) for i in pos) and any(not occ(k, j) for k in neg):
                conflict = True
                break
        gate = bool(point[0])
        return int((gate and renamed_ok) or (not gate and conflict))

    return direct


# ---------------------------------------------------------------------------
# Random corpora


def random_circuit(seed: int, num_features: int, depth: int = 3) -> Circuit:
    """Random decomposable circuit; AND nodes partition their feature set.

    Retries the seed-derived stream until the classifier is non-constant
    (checked by truth table at small feature counts, by satisfiability of
    both classes otherwise is skipped and the circuit accepted).
    """
    rng = random.Random(("circuit", seed, num_features, depth).__repr__())
    for _ in range(64):
        nodes: list = []

        def build(available: list[int], budget: int) -> int:
            if budget <= 0 or len(available) == 1 or rng.random() < 0.2:
                feature = rng.choice(available)
                nodes.append(literal(feature, rng.random() < 0.5))
                return len(nodes) - 1
            if len(available) >= 2 and rng.random() < 0.5:
                parts = _partition(rng, available, rng.randint(2, min(3, len(available))))
                children = [build(part, budget - 1) for part in parts]
                nodes.append(and_node(children))
            else:
                width = rng.randint(2, 3)
                children = [build(list(available), budget - 1) for _ in range(width)]
                nodes.append(or_node(children))
            return len(nodes) - 1

        root = build(list(range(1, num_features + 1)), depth)
        circuit = Circuit(nodes, root, num_features)
        if num_features <= ENUMERATION_MAX_FEATURES:
            table = evaluate_all(circuit)
            if table.all() or not table.any():
                continue
        return circuit
    raise RuntimeError("could not draw a non-constant circuit")


def random_circuit_sized(seed: int, num_features: int, target_nodes: int) -> Circuit:
    """Random decomposable circuit with at least ``target_nodes`` nodes.

    The root is an AND over a feature partition (so class-0 points stay
    common); below it, OR nodes reuse their feature set and AND nodes
    partition it, with a node budget split across children.  The budget is
    inflated and retried until the size target is met.  Used for scale tests
    and benchmark corpora.
    """
    if num_features < 4:
        raise ValueError("sized circuits need at least 4 features")
    rng = random.Random(("sized", seed, num_features, target_nodes).__repr__())

    def build(nodes: list, available: list[int], budget: int) -> int:
        if budget <= 2 or len(available) == 1:
            feature = rng.choice(available)
            nodes.append(literal(feature, rng.random() < 0.5))
            return len(nodes) - 1
        if len(available) >= 2 and rng.random() < 0.4:
            width = rng.randint(2, min(3, len(available)))
            parts = _partition(rng, available, width)
            share = max(1, (budget - 1) // width)
            children = [build(nodes, part, share) for part in parts]
            nodes.append(and_node(children))
        else:
            width = rng.randint(2, 3)
            share = max(1, (budget - 1) // width)
            children = [build(nodes, list(available), share) for _ in range(width)]
            nodes.append(or_node(children))
        return len(nodes) - 1

    budget = target_nodes
    for _ in range(12):
        nodes: list = []
        width = min(4, num_features)
        parts = _partition(rng, list(range(1, num_features + 1)), width)
        share = max(1, budget // width)
        children = [build(nodes, part, share) for part in parts]
        nodes.append(and_node(children))
        circuit = Circuit(nodes, len(nodes) - 1, num_features)
        if circuit.num_nodes >= target_nodes:
            return circuit
        budget = int(budget * 1.7)
    raise RuntimeError("could not reach the requested circuit size")


def _partition(rng: random.Random, items: list[int], parts: int) -> list[list[int]]:
    shuffled = list(items)
    rng.shuffle(shuffled)
    cuts = sorted(rng.sample(range(1, len(shuffled)), parts - 1))
    out = []
    prev = 0
    for cut in cuts + [len(shuffled)]:
        out.append(shuffled[prev:cut])
        prev = cut
    return out


def random_fbdd(seed: int, num_features: int) -> Circuit:
    """Random read-once branching program (non-constant)."""
    rng = random.Random(("fbdd", seed, num_features).__repr__())
    for _ in range(64):
        entries: list[tuple] = [("T", True), ("T", False)]

        def build(available: list[int]) -> int:
            if not available or rng.random() < 0.25:
                return 0 if rng.random() < 0.5 else 1
            feature = rng.choice(available)
            remaining = [f for f in available if f != feature]
            lo = build(remaining)
            hi = build(remaining)
            entries.append(("N", feature, lo, hi))
            return len(entries) - 1

        root = build(list(range(1, num_features + 1)))
        if entries[root][0] == "T":
            continue
        circuit = compile_decision_nodes(entries, root, num_features)
        table = evaluate_all(circuit)
        if table.all() or not table.any():
            continue
        return circuit
    raise RuntimeError("could not draw a non-constant branching program")


def random_monotone(seed: int, num_features: int, num_classes: int = 2) -> LinearThresholdModel:
    """Random nonnegative-weight threshold model over [0, 1] features."""
    rng = random.Random(("monotone", seed, num_features, num_classes).__repr__())
    weights = [round(rng.uniform(0.0, 1.0), 3) for _ in range(num_features)]
    if all(w == 0 for w in weights):
        weights[rng.randrange(num_features)] = 1.0
    total = sum(weights)
    thresholds = sorted(
        round(rng.uniform(0.15 * total, 0.85 * total), 3) for _ in range(num_classes - 1)
    )
    return LinearThresholdModel(weights, thresholds)


def random_instance_point(rng: random.Random, num_features: int) -> tuple:
    return tuple(rng.randint(0, 1) for _ in range(num_features))


def random_cnf3(seed: int, num_vars: int, num_clauses: int, *, nontrivial: bool = True) -> CnfFormula:
    """Random 3-CNF with distinct variables per clause (no tautologies)."""
    rng = random.Random(("cnf3", seed, num_vars, num_clauses).__repr__())
    for _ in range(256):
        clauses = []
        for _ in range(num_clauses):
            width = min(3, num_vars)
            chosen = rng.sample(range(1, num_vars + 1), width)
            clauses.append([v if rng.random() < 0.5 else -v for v in chosen])
        formula = CnfFormula(num_vars, clauses)
        if nontrivial and _is_trivially_satisfiable(formula):
            continue
        return formula
    raise RuntimeError("could not draw a nontrivial formula")


# ---------------------------------------------------------------------------
# Corpus manifest


def manifest_entry(
    kind: str,
    *,
    seed: int | None = None,
    params: dict | None = None,
    files: dict | None = None,
    instance: Instance | None = None,
    target: int | None = None,
    expected: dict | None = None,
) -> dict:
    entry: dict = {"kind": kind}
    if seed is not None:
        entry["seed"] = seed
    if params:
        entry["params"] = params
    if files:
        entry["files"] = files
    if instance is not None:
        entry["instance"] = list(instance.values)
        entry["class"] = instance.predicted_class
    if target is not None:
        entry["target"] = target
    if expected is not None:
        entry["expected"] = expected
    return entry


def write_manifest(entries: Iterable[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(json.dumps(entry, sort_keys=True) + "\n")


def read_manifest(path) -> list[dict]:
    entries = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries
