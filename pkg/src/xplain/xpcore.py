"""Classifier-agnostic explanation predicates.

Everything here talks to a classifier through one abstract capability: given
a feature subset X, does fixing the features in X to their instance values
force the prediction?  That predicate ("weak explanation") is monotone in X,
which is what makes one-pass deletion extraction and the single-call
necessity test below correct.
"""

from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Iterable, Protocol, Sequence

from .circuit import Circuit, Instance, NegationUnavailable, consistent_under, negate

FeatureSet = frozenset[int]


class PreconditionError(ValueError):
    """An operation was called on inputs violating its stated precondition."""


class ClassifierOracle(Protocol):
    """Minimal interface the explanation predicates need."""

    num_features: int
    instance: Instance

    def waxp(self, features: FeatureSet) -> bool:
        """True iff fixing ``features`` to the instance values forces the class."""


class ExplanationStatus(enum.Enum):
    WEAK = "weak"
    AXP = "axp"


@dataclass(frozen=True)
class Explanation:
    features: FeatureSet
    status: ExplanationStatus


def full_set(num_features: int) -> FeatureSet:
    return frozenset(range(1, num_features + 1))


def _check_subset(features: Iterable[int], num_features: int) -> FeatureSet:
    fs = frozenset(features)
    if any(not 1 <= f <= num_features for f in fs):
        raise ValueError(f"feature set {sorted(fs)} not within 1..{num_features}")
    return fs


# ---------------------------------------------------------------------------
# Oracles


class CircuitOracle:
    """Weak-explanation test for circuit classifiers.

    For a class-0 instance, X forces the prediction iff the circuit
    conditioned on X is inconsistent.  For class 1 the same test runs on the
    complement circuit, which is synthesized for FBDDs and must be supplied
    for anything else.
    """

    def __init__(
        self,
        circuit: Circuit,
        instance: Instance,
        negated_circuit: Circuit | None = None,
    ) -> None:
        if instance.num_features != circuit.num_features:
            raise ValueError("instance does not match the circuit's feature count")
        self.circuit = circuit
        self.instance = instance
        self.num_features = circuit.num_features
        self.calls = 0
        if instance.predicted_class == 0:
            self._target = circuit
        else:
            if negated_circuit is None:
                try:
                    negated_circuit = negate(circuit)
                except NegationUnavailable:
                    raise NegationUnavailable(
                        "class-1 queries need the complement circuit; pass one "
                        "explicitly for non-FBDD inputs"
                    ) from None
            self._target = negated_circuit

    def waxp(self, features: FeatureSet) -> bool:
        self.calls += 1
        values = self.instance.values
        fixed = {f: values[f - 1] for f in features}
        return not consistent_under(self._target, fixed)


class FunctionOracle:
    """Brute-force weak-explanation test for an arbitrary boolean classifier.

    Enumerates every completion of the free features, so it is only usable at
    small feature counts; it exists to serve as an independent reference.
    """

    def __init__(self, predict: Callable[[tuple], int], instance: Instance, max_features: int = 20):
        self.num_features = instance.num_features
        if self.num_features > max_features:
            raise ValueError("brute-force oracle limited to small feature counts")
        self.predict = predict
        self.instance = instance
        self.calls = 0

    def waxp(self, features: FeatureSet) -> bool:
        self.calls += 1
        free = [f for f in range(1, self.num_features + 1) if f not in features]
        base = list(self.instance.values)
        target = self.instance.predicted_class
        for mask in range(1 << len(free)):
            point = list(base)
            for bit, f in enumerate(free):
                point[f - 1] = (mask >> bit) & 1
            if self.predict(tuple(point)) != target:
                return False
        return True


class MemoOracle:
    """LRU-cached wrapper; explanation queries re-test overlapping sets."""

    def __init__(self, inner: ClassifierOracle, capacity: int = 1 << 16):
        self.inner = inner
        self.num_features = inner.num_features
        self.instance = inner.instance
        self.capacity = capacity
        self._cache: OrderedDict[FeatureSet, bool] = OrderedDict()
        self.hits = 0
        self.misses = 0

    def waxp(self, features: FeatureSet) -> bool:
        features = frozenset(features)
        cached = self._cache.get(features)
        if cached is not None:
            self.hits += 1
            self._cache.move_to_end(features)
            return cached
        self.misses += 1
        value = self.inner.waxp(features)
        self.prime(features, value)
        return value

    def prime(self, features: FeatureSet, value: bool) -> None:
        """Record an externally computed answer (e.g. from a bounds probe)."""
        self._cache[frozenset(features)] = value
        if len(self._cache) > self.capacity:
            self._cache.popitem(last=False)


# ---------------------------------------------------------------------------
# Predicates


def is_weak_axp(oracle: ClassifierOracle, features: Iterable[int]) -> bool:
    """Does fixing ``features`` to the instance values force the prediction?"""
    return oracle.waxp(_check_subset(features, oracle.num_features))


def is_axp(oracle: ClassifierOracle, features: Iterable[int]) -> bool:
    """Subset-minimal weak explanation test: |X| + 1 oracle calls."""
    fs = _check_subset(features, oracle.num_features)
    if not oracle.waxp(fs):
        return False
    return all(not oracle.waxp(fs - {j}) for j in fs)


def extract_axp(
    oracle: ClassifierOracle,
    seed: Iterable[int] | None = None,
    order: Sequence[int] | None = None,
) -> Explanation:
    """Shrink a weak explanation to a minimal one by one-pass deletion.

    Features are dropped in ascending index order (or the supplied ``order``)
    whenever the remainder still forces the prediction; monotonicity of the
    weak-explanation predicate makes a single pass sufficient.  At most
    ``len(seed)`` oracle calls.
    """
    if seed is None:
        seed = full_set(oracle.num_features)
    fs = _check_subset(seed, oracle.num_features)
    if not oracle.waxp(fs):
        raise PreconditionError(
            f"seed {sorted(fs)} is not a weak explanation; nothing to shrink"
        )
    if order is None:
        order = sorted(fs)
    else:
        if set(order) != set(fs):
            raise ValueError("deletion order must be a permutation of the seed set")
    current = set(fs)
    for j in order:
        trial = current - {j}
        if oracle.waxp(frozenset(trial)):
            current = trial
    return Explanation(frozenset(current), ExplanationStatus.AXP)


def is_necessary(oracle: ClassifierOracle, target: int) -> bool:
    """Does ``target`` occur in every minimal explanation?

    Single oracle call: some minimal explanation avoids the target exactly
    when all the other features together already force the prediction.
    """
    if not 1 <= target <= oracle.num_features:
        raise ValueError(f"feature {target} out of range")
    rest = full_set(oracle.num_features) - {target}
    return not oracle.waxp(rest)


def verify_witness(
    oracle: ClassifierOracle, target: int, weak_set: FeatureSet, axp: FeatureSet
) -> None:
    """Machine-check a relevancy witness; raises AssertionError on violation."""
    assert target in weak_set, f"target {target} missing from the weak set"
    assert oracle.waxp(weak_set), "witness weak set does not force the prediction"
    assert not oracle.waxp(weak_set - {target}), (
        "witness weak set still forces the prediction without the target"
    )
    assert axp <= weak_set, "explanation is not contained in its weak set"
    assert target in axp, f"target {target} missing from the extracted explanation"
    assert is_axp(oracle, axp), "extracted explanation is not subset-minimal"
