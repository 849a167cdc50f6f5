"""NNF-family circuits used as binary classifiers.

Circuits are rooted DAGs of literal / AND / OR / constant nodes over features
1..m.  Nodes are stored in an array with children preceding parents, so every
query below is a single bottom-up (or top-down) pass.  AND nodes are expected
to be decomposable (children over disjoint features); ``validate`` checks this
and ``is_consistent`` relies on it.

Two text formats are accepted: the line-oriented ``nnf`` format (literal /
AND / OR nodes, root last) and a ``fbdd`` decision-node format which is
compiled to literal/AND/OR form through the Shannon expansion
``f = (x and f|x=1) or (not x and f|x=0)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

LIT = "L"
AND = "A"
OR = "O"
TRUE = "T"
FALSE = "F"

DDNNF = "ddnnf"
FBDD = "fbdd"

# Determinism of OR nodes is only checked exhaustively up to this many features.
DETERMINISM_CHECK_MAX_FEATURES = 16

_EVAL_CHUNK = 1 << 12


class CircuitParseError(ValueError):
    """Raised on malformed circuit files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NegationUnavailable(RuntimeError):
    """Negating this circuit is not supported; a companion negated circuit
    must be supplied by the caller instead."""


class NotDecomposableError(ValueError):
    """An AND node has children with overlapping feature supports."""


@dataclass(frozen=True)
class Node:
    """One circuit node.

    ``kind`` is one of LIT/AND/OR/TRUE/FALSE.  Literals carry ``feature`` and
    ``positive``; AND/OR carry ``children`` (indices of earlier nodes).  The
    ``decision_feature`` of an OR node is informational (0 when unknown).
    """

    kind: str
    feature: int = 0
    positive: bool = True
    children: tuple[int, ...] = ()
    decision_feature: int = 0


def literal(feature: int, positive: bool = True) -> Node:
    return Node(LIT, feature=feature, positive=positive)


def and_node(children: Sequence[int]) -> Node:
    return Node(AND, children=tuple(children))


def or_node(children: Sequence[int], decision_feature: int = 0) -> Node:
    return Node(OR, children=tuple(children), decision_feature=decision_feature)


def true_node() -> Node:
    return Node(TRUE)


def false_node() -> Node:
    return Node(FALSE)


@dataclass
class Circuit:
    """Immutable-after-construction circuit classifier.

    ``nodes`` lists children before parents; ``root`` indexes the output
    node; ``num_features`` is m; ``kind`` is the declared family tag.
    """

    nodes: list[Node]
    root: int
    num_features: int
    kind: str = DDNNF
    _decomposable: bool | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.nodes)
        if not 0 <= self.root < n:
            raise ValueError(f"root index {self.root} out of range")
        if self.num_features < 1:
            raise ValueError("num_features must be positive")
        for idx, node in enumerate(self.nodes):
            for child in node.children:
                if not 0 <= child < idx:
                    raise ValueError(
                        f"node {idx}: child {child} does not precede its parent"
                    )
            if node.kind == LIT and not 1 <= node.feature <= self.num_features:
                raise ValueError(f"node {idx}: feature {node.feature} out of range")
            if node.kind in (AND, OR) and not node.children:
                raise ValueError(f"node {idx}: {node.kind} node without children")

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return sum(len(node.children) for node in self.nodes)

    def support(self) -> frozenset[int]:
        """Features appearing on leaves reachable from the root."""
        return _node_supports(self)[self.root]


@dataclass(frozen=True)
class Instance:
    """A point in feature space together with its predicted class."""

    values: tuple
    predicted_class: int

    @property
    def num_features(self) -> int:
        return len(self.values)


# A partial assignment maps a subset of features (1..m) to their fixed values.
PartialAssignment = Mapping[int, bool]


def make_instance(circuit: Circuit, values: Sequence, declared_class: int | None = None) -> Instance:
    """Build an instance for ``circuit``, checking the predicted class.

    The class is computed by evaluation; if ``declared_class`` is given it
    must agree.
    """
    values = tuple(int(v) for v in values)
    if len(values) != circuit.num_features:
        raise ValueError(
            f"instance has {len(values)} values, circuit expects {circuit.num_features}"
        )
    if any(v not in (0, 1) for v in values):
        raise ValueError("circuit instances must be boolean (0/1) points")
    predicted = evaluate(circuit, values)
    if declared_class is not None and declared_class != predicted:
        raise ValueError(
            f"declared class {declared_class} differs from the circuit prediction {predicted}"
        )
    return Instance(values, predicted)


# ---------------------------------------------------------------------------
# Queries


def evaluate(circuit: Circuit, point: Sequence) -> int:
    """Evaluate the classifier on a full assignment; returns 0 or 1."""
    if len(point) != circuit.num_features:
        raise ValueError("point length does not match the number of features")
    values = [False] * len(circuit.nodes)
    for idx, node in enumerate(circuit.nodes):
        kind = node.kind
        if kind == LIT:
            values[idx] = bool(point[node.feature - 1]) == node.positive
        elif kind == AND:
            values[idx] = all(values[c] for c in node.children)
        elif kind == OR:
            values[idx] = any(values[c] for c in node.children)
        elif kind == TRUE:
            values[idx] = True
        else:
            values[idx] = False
    return int(values[circuit.root])


def condition(circuit: Circuit, assignment: PartialAssignment) -> Circuit:
    """Replace literals on fixed features by constant nodes (the cofactor).

    Structure is otherwise preserved: same node count, indices and root.
    """
    for f in assignment:
        if not 1 <= f <= circuit.num_features:
            raise ValueError(f"feature {f} out of range")
    if not assignment:
        nodes = list(circuit.nodes)
    else:
        nodes = []
        for node in circuit.nodes:
            if node.kind == LIT and node.feature in assignment:
                sat = bool(assignment[node.feature]) == node.positive
                nodes.append(true_node() if sat else false_node())
            else:
                nodes.append(node)
    out = Circuit(nodes, circuit.root, circuit.num_features, circuit.kind)
    # Conditioning only shrinks supports, so decomposability carries over.
    if circuit._decomposable:
        out._decomposable = True
    return out


def is_consistent(circuit: Circuit) -> bool:
    """True iff some assignment to the free features satisfies the root.

    One bottom-up pass: a (non-constant) literal is always satisfiable, an OR
    needs one satisfiable child, an AND needs all of them.  The AND rule is
    only sound on decomposable circuits, so non-decomposable input is
    rejected.
    """
    if not _ensure_decomposable(circuit):
        raise NotDecomposableError(
            "is_consistent requires a decomposable circuit; run validate() for details"
        )
    return _consistent_under(circuit, {})


def consistent_under(circuit: Circuit, assignment: PartialAssignment) -> bool:
    """``is_consistent(condition(circuit, assignment))`` without the copy."""
    if not _ensure_decomposable(circuit):
        raise NotDecomposableError(
            "consistency queries require a decomposable circuit"
        )
    return _consistent_under(circuit, assignment)


def _consistent_under(circuit: Circuit, assignment: PartialAssignment) -> bool:
    values = [False] * len(circuit.nodes)
    for idx, node in enumerate(circuit.nodes):
        kind = node.kind
        if kind == LIT:
            fixed = assignment.get(node.feature)
            values[idx] = True if fixed is None else bool(fixed) == node.positive
        elif kind == AND:
            values[idx] = all(values[c] for c in node.children)
        elif kind == OR:
            values[idx] = any(values[c] for c in node.children)
        elif kind == TRUE:
            values[idx] = True
        else:
            values[idx] = False
    return bool(values[circuit.root])


def negate(circuit: Circuit) -> Circuit:
    """Complement classifier for FBDD-shaped circuits (terminal swap).

    Sound only for circuits in Shannon decision form, where swapping the
    constant terminals negates every cofactor recursively.  For anything else
    a companion negated circuit has to be supplied by the caller, so
    ``NegationUnavailable`` is raised.
    """
    if circuit.kind != FBDD:
        raise NegationUnavailable(
            "only FBDD circuits are negated in place; supply a negated circuit file"
        )
    problems = _fbdd_structure(circuit)[1]
    if problems:
        raise NegationUnavailable(
            "circuit is not in decision form (%s); cannot negate by terminal swap"
            % problems[0]
        )
    nodes = []
    for node in circuit.nodes:
        if node.kind == TRUE:
            nodes.append(false_node())
        elif node.kind == FALSE:
            nodes.append(true_node())
        else:
            nodes.append(node)
    out = Circuit(nodes, circuit.root, circuit.num_features, FBDD)
    out._decomposable = circuit._decomposable
    return out


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    """Outcome of structural checks; empty violation lists mean a clean input."""

    num_nodes: int
    num_features: int
    kind: str
    unreachable: tuple[int, ...]
    decomposability_violations: list[tuple[int, frozenset[int]]]
    fbdd_violations: list[str]
    determinism: str  # "ok", "assumed" (too many features to enumerate) or "violated"
    determinism_violations: list[tuple[int, tuple[int, ...]]]

    @property
    def is_decomposable(self) -> bool:
        return not self.decomposability_violations

    @property
    def is_clean(self) -> bool:
        return (
            not self.decomposability_violations
            and not self.fbdd_violations
            and self.determinism in ("ok", "assumed")
        )

    def summary(self) -> str:
        parts = [
            f"{self.kind} circuit: {self.num_nodes} nodes, {self.num_features} features",
            f"unreachable nodes: {len(self.unreachable)}",
            f"decomposability violations: {len(self.decomposability_violations)}",
            f"determinism: {self.determinism}",
        ]
        if self.kind == FBDD:
            parts.append(f"decision-form violations: {len(self.fbdd_violations)}")
        return "; ".join(parts)


def _reachable(circuit: Circuit) -> list[bool]:
    seen = [False] * len(circuit.nodes)
    stack = [circuit.root]
    while stack:
        idx = stack.pop()
        if seen[idx]:
            continue
        seen[idx] = True
        stack.extend(circuit.nodes[idx].children)
    return seen


def _node_supports(circuit: Circuit) -> list[frozenset[int]]:
    supports: list[frozenset[int]] = []
    for node in circuit.nodes:
        if node.kind == LIT:
            supports.append(frozenset((node.feature,)))
        elif node.children:
            acc: set[int] = set()
            for c in node.children:
                acc.update(supports[c])
            supports.append(frozenset(acc))
        else:
            supports.append(frozenset())
    return supports


def _decomposability_violations(circuit: Circuit) -> list[tuple[int, frozenset[int]]]:
    supports = _node_supports(circuit)
    violations = []
    for idx, node in enumerate(circuit.nodes):
        if node.kind != AND or len(node.children) < 2:
            continue
        union_size = len(frozenset().union(*(supports[c] for c in node.children)))
        total = sum(len(supports[c]) for c in node.children)
        if union_size != total:
            overlap: set[int] = set()
            seen: set[int] = set()
            for c in node.children:
                overlap.update(supports[c] & seen)
                seen.update(supports[c])
            violations.append((idx, frozenset(overlap)))
    return violations


def _ensure_decomposable(circuit: Circuit) -> bool:
    if circuit._decomposable is None:
        circuit._decomposable = not _decomposability_violations(circuit)
    return circuit._decomposable


def evaluate_all(circuit: Circuit, features: Sequence[int] | None = None) -> np.ndarray:
    """Root truth value on every point of the feature space, as a bool array.

    Point index ``p`` encodes feature i through bit ``i - 1``.  Work is
    chunked so that large circuits over few features stay in modest memory.
    """
    m = circuit.num_features
    total = 1 << m
    out = np.empty(total, dtype=bool)
    for start in range(0, total, _EVAL_CHUNK):
        stop = min(start + _EVAL_CHUNK, total)
        points = np.arange(start, stop, dtype=np.uint32)
        out[start:stop] = _evaluate_rows(circuit, points)[circuit.root]
    return out


def _evaluate_rows(circuit: Circuit, points: np.ndarray) -> list[np.ndarray]:
    rows: list[np.ndarray] = []
    for node in circuit.nodes:
        if node.kind == LIT:
            bit = (points >> (node.feature - 1)) & 1
            rows.append(bit.astype(bool) if node.positive else bit == 0)
        elif node.kind == AND:
            acc = rows[node.children[0]].copy()
            for c in node.children[1:]:
                acc &= rows[c]
            rows.append(acc)
        elif node.kind == OR:
            acc = rows[node.children[0]].copy()
            for c in node.children[1:]:
                acc |= rows[c]
            rows.append(acc)
        elif node.kind == TRUE:
            rows.append(np.ones(len(points), dtype=bool))
        else:
            rows.append(np.zeros(len(points), dtype=bool))
    return rows


def _determinism_violations(circuit: Circuit) -> list[tuple[int, tuple[int, ...]]]:
    violations = []
    m = circuit.num_features
    or_nodes = [
        (idx, node) for idx, node in enumerate(circuit.nodes)
        if node.kind == OR and len(node.children) >= 2
    ]
    if not or_nodes:
        return violations
    flagged: set[int] = set()
    for start in range(0, 1 << m, _EVAL_CHUNK):
        stop = min(start + _EVAL_CHUNK, 1 << m)
        points = np.arange(start, stop, dtype=np.uint32)
        rows = _evaluate_rows(circuit, points)
        for idx, node in or_nodes:
            if idx in flagged:
                continue
            counts = sum(rows[c].astype(np.uint8) for c in node.children)
            bad = np.nonzero(counts >= 2)[0]
            if bad.size:
                p = int(points[bad[0]])
                point = tuple((p >> i) & 1 for i in range(m))
                violations.append((idx, point))
                flagged.add(idx)
    return violations


def _fbdd_structure(circuit: Circuit):
    """Match the compiled Shannon form.

    Returns ``(decisions, problems)`` where ``decisions`` maps the index of
    each reachable decision OR to ``(feature, low_target, high_target)``.
    """
    decisions: dict[int, tuple[int, int, int]] = {}
    problems: list[str] = []
    seen: set[int] = set()
    stack = [circuit.root]
    nodes = circuit.nodes
    while stack:
        idx = stack.pop()
        if idx in seen:
            continue
        seen.add(idx)
        node = nodes[idx]
        if node.kind in (TRUE, FALSE):
            continue
        if node.kind != OR or len(node.children) != 2:
            problems.append(f"node {idx} is not a 2-way decision")
            continue
        branches = []
        for child in node.children:
            cnode = nodes[child]
            if cnode.kind != AND or len(cnode.children) != 2:
                branches = []
                break
            lits = [c for c in cnode.children if nodes[c].kind == LIT]
            subs = [c for c in cnode.children if nodes[c].kind != LIT]
            if len(lits) != 1 or len(subs) != 1:
                branches = []
                break
            branches.append((nodes[lits[0]], subs[0]))
        if len(branches) != 2:
            problems.append(f"node {idx} children are not literal-guarded branches")
            continue
        (lit_a, sub_a), (lit_b, sub_b) = branches
        if lit_a.feature != lit_b.feature or lit_a.positive == lit_b.positive:
            problems.append(f"node {idx} does not branch on one feature")
            continue
        hi, lo = (sub_a, sub_b) if lit_a.positive else (sub_b, sub_a)
        decisions[idx] = (lit_a.feature, lo, hi)
        stack.append(lo)
        stack.append(hi)
    return decisions, problems


def _read_once_violations(circuit: Circuit, decisions: dict[int, tuple[int, int, int]]) -> list[str]:
    # Propagate the set of features tested on any root-to-node path; a
    # decision whose feature already occurs upstream repeats on that path.
    path_vars: dict[int, set[int]] = {circuit.root: set()}
    violations = []
    for idx in sorted(decisions, reverse=True):
        feature, lo, hi = decisions[idx]
        here = path_vars.setdefault(idx, set())
        if feature in here:
            violations.append(f"feature {feature} repeats on a path through node {idx}")
        downstream = here | {feature}
        for target in (lo, hi):
            path_vars.setdefault(target, set()).update(downstream)
    return violations


def validate(circuit: Circuit) -> ValidationReport:
    """Structural report: reachability, decomposability, FBDD shape and
    (at small feature counts) OR-node determinism."""
    reachable = _reachable(circuit)
    unreachable = tuple(i for i, r in enumerate(reachable) if not r)
    decomp = _decomposability_violations(circuit)
    circuit._decomposable = not decomp

    fbdd_violations: list[str] = []
    if circuit.kind == FBDD:
        decisions, problems = _fbdd_structure(circuit)
        fbdd_violations.extend(problems)
        if not problems:
            fbdd_violations.extend(_read_once_violations(circuit, decisions))

    if circuit.num_features <= DETERMINISM_CHECK_MAX_FEATURES:
        det_violations = _determinism_violations(circuit)
        determinism = "violated" if det_violations else "ok"
    else:
        det_violations = []
        determinism = "assumed"

    return ValidationReport(
        num_nodes=len(circuit.nodes),
        num_features=circuit.num_features,
        kind=circuit.kind,
        unreachable=unreachable,
        decomposability_violations=decomp,
        fbdd_violations=fbdd_violations,
        determinism=determinism,
        determinism_violations=det_violations,
    )


# ---------------------------------------------------------------------------
# Text formats


def _tokenized_lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("c "):
            continue
        yield lineno, stripped.split()


def parse_nnf(text: str) -> Circuit:
    """Parse the ``nnf`` node-list format.

    Header ``nnf <node-count> <edge-count> <var-count>``; then one node per
    line in topological order: ``L <lit>``, ``A <k> <children...>`` (``A 0``
    is the true constant), ``O <j> <k> <children...>`` (``O 0 0`` is false).
    The root is the last node.
    """
    lines = _tokenized_lines(text)
    try:
        header_line, header = next(lines)
    except StopIteration:
        raise CircuitParseError("empty circuit file") from None
    if len(header) != 4 or header[0] != "nnf":
        raise CircuitParseError("expected header 'nnf <nodes> <edges> <vars>'", header_line)
    try:
        node_count, _edge_count, var_count = (int(tok) for tok in header[1:])
    except ValueError:
        raise CircuitParseError("non-numeric header fields", header_line) from None
    if node_count < 1 or var_count < 1:
        raise CircuitParseError("node and variable counts must be positive", header_line)

    nodes: list[Node] = []
    for lineno, tokens in lines:
        idx = len(nodes)
        tag = tokens[0]
        try:
            if tag == "L":
                if len(tokens) != 2:
                    raise CircuitParseError("literal takes one argument", lineno)
                lit = int(tokens[1])
                if lit == 0 or abs(lit) > var_count:
                    raise CircuitParseError(f"feature index {lit} out of range", lineno)
                nodes.append(literal(abs(lit), lit > 0))
            elif tag == "A":
                count = int(tokens[1])
                children = [int(tok) for tok in tokens[2:]]
                if len(children) != count:
                    raise CircuitParseError("AND child count mismatch", lineno)
                if count == 0:
                    nodes.append(true_node())
                else:
                    _check_children(children, idx, lineno)
                    nodes.append(and_node(children))
            elif tag == "O":
                decision = int(tokens[1])
                count = int(tokens[2])
                children = [int(tok) for tok in tokens[3:]]
                if len(children) != count:
                    raise CircuitParseError("OR child count mismatch", lineno)
                if count == 0:
                    nodes.append(false_node())
                else:
                    _check_children(children, idx, lineno)
                    nodes.append(or_node(children, decision_feature=decision))
            else:
                raise CircuitParseError(f"unknown node tag {tag!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, CircuitParseError):
                raise
            raise CircuitParseError(f"malformed node line: {exc}", lineno) from None
        if len(nodes) > node_count:
            raise CircuitParseError("more nodes than declared in the header", lineno)
    if len(nodes) != node_count:
        raise CircuitParseError(
            f"header declares {node_count} nodes but {len(nodes)} were given"
        )
    return Circuit(nodes, len(nodes) - 1, var_count, DDNNF)


def _check_children(children: list[int], idx: int, lineno: int) -> None:
    for child in children:
        if child < 0:
            raise CircuitParseError(f"negative child index {child}", lineno)
        if child >= idx:
            raise CircuitParseError(
                f"child {child} is a forward reference from node {idx}", lineno
            )


def parse_fbdd(text: str) -> Circuit:
    """Parse the decision-node format and compile it via Shannon expansion.

    Header ``fbdd <node-count> <var-count>``; lines ``T 1``, ``T 0`` or
    ``N <var> <lo-child> <hi-child>`` with children preceding parents; the
    root is the last line.
    """
    lines = _tokenized_lines(text)
    try:
        header_line, header = next(lines)
    except StopIteration:
        raise CircuitParseError("empty circuit file") from None
    if len(header) != 3 or header[0] != "fbdd":
        raise CircuitParseError("expected header 'fbdd <nodes> <vars>'", header_line)
    try:
        node_count, var_count = int(header[1]), int(header[2])
    except ValueError:
        raise CircuitParseError("non-numeric header fields", header_line) from None
    if node_count < 1 or var_count < 1:
        raise CircuitParseError("node and variable counts must be positive", header_line)

    entries: list[tuple] = []  # ("T", value) or ("N", var, lo, hi)
    for lineno, tokens in lines:
        idx = len(entries)
        if tokens[0] == "T":
            if len(tokens) != 2 or tokens[1] not in ("0", "1"):
                raise CircuitParseError("terminal takes a 0/1 argument", lineno)
            entries.append(("T", tokens[1] == "1"))
        elif tokens[0] == "N":
            if len(tokens) != 4:
                raise CircuitParseError("decision node takes var, lo and hi", lineno)
            try:
                var, lo, hi = (int(tok) for tok in tokens[1:])
            except ValueError:
                raise CircuitParseError("non-numeric decision fields", lineno) from None
            if not 1 <= var <= var_count:
                raise CircuitParseError(f"feature index {var} out of range", lineno)
            _check_children([lo, hi], idx, lineno)
            entries.append(("N", var, lo, hi))
        else:
            raise CircuitParseError(f"unknown node tag {tokens[0]!r}", lineno)
        if len(entries) > node_count:
            raise CircuitParseError("more nodes than declared in the header", lineno)
    if len(entries) != node_count:
        raise CircuitParseError(
            f"header declares {node_count} nodes but {len(entries)} were given"
        )
    return compile_decision_nodes(entries, len(entries) - 1, var_count)


def compile_decision_nodes(entries: Sequence[tuple], root: int, var_count: int) -> Circuit:
    """Shannon-expand a decision-node list into a literal/AND/OR circuit.

    ``entries[i]`` is ``("T", bool)`` or ``("N", var, lo, hi)`` with ``lo``
    and ``hi`` indices of earlier entries.
    """
    nodes: list[Node] = []
    lit_cache: dict[tuple[int, bool], int] = {}
    const_cache: dict[bool, int] = {}
    compiled: list[int] = []

    def _const(value: bool) -> int:
        if value not in const_cache:
            nodes.append(true_node() if value else false_node())
            const_cache[value] = len(nodes) - 1
        return const_cache[value]

    def _lit(feature: int, positive: bool) -> int:
        key = (feature, positive)
        if key not in lit_cache:
            nodes.append(literal(feature, positive))
            lit_cache[key] = len(nodes) - 1
        return lit_cache[key]

    for entry in entries:
        if entry[0] == "T":
            compiled.append(_const(entry[1]))
        else:
            _, var, lo, hi = entry
            nodes.append(and_node((_lit(var, True), compiled[hi])))
            hi_branch = len(nodes) - 1
            nodes.append(and_node((_lit(var, False), compiled[lo])))
            lo_branch = len(nodes) - 1
            nodes.append(or_node((hi_branch, lo_branch), decision_feature=var))
            compiled.append(len(nodes) - 1)
    return Circuit(nodes, compiled[root], var_count, FBDD)


def parse_circuit(text: str) -> Circuit:
    """Dispatch on the header keyword (``nnf`` or ``fbdd``)."""
    for _, tokens in _tokenized_lines(text):
        if tokens[0] == "nnf":
            return parse_nnf(text)
        if tokens[0] == "fbdd":
            return parse_fbdd(text)
        raise CircuitParseError(f"unknown circuit format {tokens[0]!r}", 1)
    raise CircuitParseError("empty circuit file")


def format_nnf(circuit: Circuit) -> str:
    """Serialize to the ``nnf`` format.  The root must be the last node."""
    if circuit.root != len(circuit.nodes) - 1:
        raise ValueError("nnf serialization expects the root to be the last node")
    lines = [f"nnf {circuit.num_nodes} {circuit.num_edges} {circuit.num_features}"]
    for node in circuit.nodes:
        if node.kind == LIT:
            lines.append(f"L {node.feature if node.positive else -node.feature}")
        elif node.kind == AND:
            lines.append("A %d %s" % (len(node.children), " ".join(map(str, node.children))))
        elif node.kind == OR:
            lines.append(
                "O %d %d %s"
                % (node.decision_feature, len(node.children), " ".join(map(str, node.children)))
            )
        elif node.kind == TRUE:
            lines.append("A 0")
        else:
            lines.append("O 0 0")
    return "\n".join(lines) + "\n"
