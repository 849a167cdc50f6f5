"""Feature relevancy and necessity for black-box monotonic classifiers.

A monotonic classifier is queried only through ``predict``; monotonicity
makes the weak-explanation test two predictions: fix the candidate features
to the instance values, push every other feature to its lower/upper bound,
and compare the two predicted classes.

Relevancy is decided by abstraction refinement: a small CNF over per-feature
selector variables over-approximates the candidate sets that could certify
the target feature, and each SAT model (a picked set P containing the
target) is either returned as a witness or refuted by a new clause --
positive over the non-picked features when P is not a weak explanation,
negative over P minus the target when P stays sufficient even with the
target freed.  Either clause eliminates at least the current model, so the
loop terminates; UNSAT means the target is in no minimal explanation.
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .cnfsat import SatSolver, SatStatus, CnfFormula, solve_external
from .frp_ddnnf import FrpWitness, RelevancyResult
from .xpcore import FeatureSet, MemoOracle, extract_axp, full_set

PREDICT_TIMEOUT_ENV = "XPLAIN_PREDICT_TIMEOUT_MS"


class ModelSpecError(ValueError):
    """Malformed monotone model specification."""


class PredictionFailure(RuntimeError):
    """The model could not produce a prediction (process death, bad output)."""


class PredictionTimeout(PredictionFailure):
    """A subprocess model exceeded its per-call allowance."""


class MonotonicityError(RuntimeError):
    """Observed predictions contradict the declared monotonicity."""


def _format_value(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


class MonotoneModel:
    """Base class: ordered classes 0..K-1, per-feature bounds, predict().

    Implementations must be monotone: raising any feature value never lowers
    the predicted class index.  That contract is the caller's to uphold; see
    ``monotonicity_audit`` for a sampling check.
    """

    def __init__(self, num_features: int, num_classes: int, bounds: Sequence[tuple]):
        if num_features < 1 or num_classes < 2:
            raise ModelSpecError("need at least one feature and two classes")
        if len(bounds) != num_features:
            raise ModelSpecError("bounds must cover every feature")
        for i, (lo, hi) in enumerate(bounds, start=1):
            if not lo <= hi:
                raise ModelSpecError(f"feature {i}: lower bound exceeds upper bound")
        self.num_features = num_features
        self.num_classes = num_classes
        self.bounds = [(float(lo), float(hi)) for lo, hi in bounds]
        self.predict_calls = 0

    def lower(self, feature: int) -> float:
        return self.bounds[feature - 1][0]

    def upper(self, feature: int) -> float:
        return self.bounds[feature - 1][1]

    @property
    def discrete(self) -> bool:
        return all(lo.is_integer() and hi.is_integer() for lo, hi in self.bounds)

    def predict(self, values: Sequence) -> int:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class LinearThresholdModel(MonotoneModel):
    """Nonnegative-weight linear score cut by sorted thresholds.

    The predicted class index is the number of thresholds at or below the
    weighted sum, which is monotone by nonnegativity of the weights.
    """

    def __init__(self, weights: Sequence[float], thresholds: Sequence[float], bounds=None):
        weights = [float(w) for w in weights]
        if any(w < 0 for w in weights):
            raise ModelSpecError("weights must be nonnegative for monotonicity")
        thresholds = [float(t) for t in thresholds]
        if sorted(thresholds) != thresholds:
            raise ModelSpecError("thresholds must be sorted ascending")
        if not thresholds:
            raise ModelSpecError("at least one threshold is required")
        if bounds is None:
            bounds = [(0.0, 1.0)] * len(weights)
        super().__init__(len(weights), len(thresholds) + 1, bounds)
        self.weights = weights
        self.thresholds = thresholds

    def predict(self, values: Sequence) -> int:
        self.predict_calls += 1
        score = sum(w * float(v) for w, v in zip(self.weights, values))
        k = 0
        for threshold in self.thresholds:
            if threshold <= score:
                k += 1
        return k


class FunctionModel(MonotoneModel):
    """Monotone model backed by an in-process callable (tests, reductions)."""

    def __init__(self, fn: Callable[[tuple], int], num_features: int, num_classes: int, bounds=None):
        if bounds is None:
            bounds = [(0.0, 1.0)] * num_features
        super().__init__(num_features, num_classes, bounds)
        self._fn = fn

    def predict(self, values: Sequence) -> int:
        self.predict_calls += 1
        return int(self._fn(tuple(values)))


class ExternModel(MonotoneModel):
    """Monotone model served by a child process.

    Protocol: one space-separated point per line on stdin, one 0-based class
    index per line on stdout.  The process is started lazily and serialized
    per model object.
    """

    def __init__(
        self,
        command: str,
        num_features: int,
        num_classes: int,
        bounds,
        *,
        timeout_ms: int | None = None,
    ):
        super().__init__(num_features, num_classes, bounds)
        self.command = command
        self._timeout_ms = timeout_ms
        self._proc: subprocess.Popen | None = None
        self._buffer = b""

    def _timeout_seconds(self) -> float | None:
        timeout_ms = self._timeout_ms
        if timeout_ms is None:
            env = os.environ.get(PREDICT_TIMEOUT_ENV)
            if env:
                timeout_ms = int(env)
        return timeout_ms / 1000.0 if timeout_ms else None

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            argv = shlex.split(self.command)
            try:
                self._proc = subprocess.Popen(
                    argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
                )
            except OSError as exc:
                raise PredictionFailure(f"cannot launch model {self.command!r}: {exc}") from exc
            self._buffer = b""
        return self._proc

    def _read_line(self) -> str:
        proc = self._proc
        timeout = self._timeout_seconds()
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([proc.stdout], [], [], timeout)
            if not ready:
                raise PredictionTimeout(
                    f"model {self.command!r} did not answer within {timeout:.3f}s"
                )
            chunk = os.read(proc.stdout.fileno(), 4096)
            if not chunk:
                raise PredictionFailure(f"model {self.command!r} closed its output")
            self._buffer += chunk
        line, _, self._buffer = self._buffer.partition(b"\n")
        return line.decode()

    def predict(self, values: Sequence) -> int:
        self.predict_calls += 1
        proc = self._ensure_process()
        line = " ".join(_format_value(float(v)) for v in values)
        try:
            proc.stdin.write((line + "\n").encode())
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise PredictionFailure(f"model {self.command!r} rejected input: {exc}") from exc
        answer = self._read_line().strip()
        try:
            k = int(answer)
        except ValueError:
            raise PredictionFailure(
                f"model {self.command!r} answered {answer!r}, expected a class index"
            ) from None
        if not 0 <= k < self.num_classes:
            raise PredictionFailure(
                f"model {self.command!r} answered class {k}, outside 0..{self.num_classes - 1}"
            )
        return k

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=2)
            except Exception:
                self._proc.kill()
        self._proc = None

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


# ---------------------------------------------------------------------------
# Model spec files


def load_model(text: str, *, base_dir: str | None = None, timeout_ms: int | None = None) -> MonotoneModel:
    """Parse a monotone model spec.

    Line 1: ``monotone <m> <K>``.  Then ``d <i> <lambda> <mu>`` per feature,
    and either ``linear w_1 .. w_m : theta_1 .. theta_{K-1}`` or
    ``extern <command>`` (command run from ``base_dir``).
    """
    header = None
    bounds: dict[int, tuple[float, float]] = {}
    predictor_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "monotone":
            if header is not None:
                raise ModelSpecError(f"line {lineno}: duplicate header")
            if len(tokens) != 3:
                raise ModelSpecError(f"line {lineno}: expected 'monotone <m> <K>'")
            header = (int(tokens[1]), int(tokens[2]))
        elif tokens[0] == "d":
            if len(tokens) != 4:
                raise ModelSpecError(f"line {lineno}: expected 'd <i> <lambda> <mu>'")
            bounds[int(tokens[1])] = (float(tokens[2]), float(tokens[3]))
        elif tokens[0] in ("linear", "extern"):
            if predictor_line is not None:
                raise ModelSpecError(f"line {lineno}: duplicate predictor line")
            predictor_line = (lineno, line)
        else:
            raise ModelSpecError(f"line {lineno}: unknown directive {tokens[0]!r}")
    if header is None:
        raise ModelSpecError("missing 'monotone <m> <K>' header")
    if predictor_line is None:
        raise ModelSpecError("missing 'linear ...' or 'extern ...' line")
    m, k = header
    missing = [i for i in range(1, m + 1) if i not in bounds]
    if missing:
        raise ModelSpecError(f"missing bound lines for features {missing}")
    ordered_bounds = [bounds[i] for i in range(1, m + 1)]

    lineno, line = predictor_line
    if line.startswith("linear"):
        body = line[len("linear"):]
        if ":" not in body:
            raise ModelSpecError(f"line {lineno}: linear needs 'weights : thresholds'")
        left, right = body.split(":", 1)
        weights = [float(tok) for tok in left.split()]
        thresholds = [float(tok) for tok in right.split()]
        if len(weights) != m:
            raise ModelSpecError(f"line {lineno}: expected {m} weights")
        if len(thresholds) != k - 1:
            raise ModelSpecError(f"line {lineno}: expected {k - 1} thresholds")
        return LinearThresholdModel(weights, thresholds, ordered_bounds)
    command = line[len("extern"):].strip()
    if not command:
        raise ModelSpecError(f"line {lineno}: empty extern command")
    if base_dir:
        command = command.replace("{dir}", base_dir)
    return ExternModel(command, m, k, ordered_bounds, timeout_ms=timeout_ms)


def format_model(model: LinearThresholdModel) -> str:
    lines = [f"monotone {model.num_features} {model.num_classes}"]
    for i, (lo, hi) in enumerate(model.bounds, start=1):
        lines.append(f"d {i} {_format_value(lo)} {_format_value(hi)}")
    lines.append(
        "linear %s : %s"
        % (
            " ".join(_format_value(w) for w in model.weights),
            " ".join(_format_value(t) for t in model.thresholds),
        )
    )
    return "\n".join(lines) + "\n"


def make_model_instance(model: MonotoneModel, values: Sequence, declared_class: int | None = None):
    """Validate a point against the model and attach its predicted class."""
    from .circuit import Instance

    values = tuple(float(v) for v in values)
    if len(values) != model.num_features:
        raise ValueError(
            f"instance has {len(values)} values, model expects {model.num_features}"
        )
    for i, v in enumerate(values, start=1):
        if not model.lower(i) <= v <= model.upper(i):
            raise ValueError(f"feature {i} value {v} outside [{model.lower(i)}, {model.upper(i)}]")
    predicted = model.predict(values)
    if declared_class is not None and declared_class != predicted:
        raise ValueError(
            f"declared class {declared_class} differs from the model prediction {predicted}"
        )
    return Instance(values, predicted)


def monotonicity_audit(model: MonotoneModel, *, pairs: int = 1000, seed: int = 0) -> list:
    """Sample ordered point pairs and report predictions that decrease.

    Advisory: passing the audit does not prove monotonicity, but any reported
    pair is a definite counterexample.
    """
    import random

    rng = random.Random(seed)
    discrete = model.discrete
    violations = []
    for _ in range(pairs):
        low_point = []
        high_point = []
        for i in range(1, model.num_features + 1):
            lo, hi = model.lower(i), model.upper(i)
            if discrete:
                a = rng.randint(int(lo), int(hi))
                b = rng.randint(a, int(hi))
            else:
                a = rng.uniform(lo, hi)
                b = rng.uniform(a, hi)
            low_point.append(a)
            high_point.append(b)
        k_low = model.predict(low_point)
        k_high = model.predict(high_point)
        if k_low > k_high:
            violations.append((tuple(low_point), tuple(high_point), k_low, k_high))
    return violations


# ---------------------------------------------------------------------------
# Bounds probe and the weak-explanation test


@dataclass(frozen=True)
class BoundsProbe:
    """Predictions at the two extreme completions of a picked feature set."""

    point_low: tuple
    point_high: tuple
    class_low: int
    class_high: int

    @property
    def forces_prediction(self) -> bool:
        return self.class_low == self.class_high


def bounds(model: MonotoneModel, instance, picked: FeatureSet) -> BoundsProbe:
    """Probe the picked set: non-picked features swing to their bounds."""
    values = instance.values
    point_low = tuple(
        values[i - 1] if i in picked else model.lower(i)
        for i in range(1, model.num_features + 1)
    )
    point_high = tuple(
        values[i - 1] if i in picked else model.upper(i)
        for i in range(1, model.num_features + 1)
    )
    probe = BoundsProbe(
        point_low, point_high, model.predict(point_low), model.predict(point_high)
    )
    c = instance.predicted_class
    if not probe.class_low <= c <= probe.class_high:
        raise MonotonicityError(
            f"bound probes straddle the instance class the wrong way "
            f"({probe.class_low} .. {c} .. {probe.class_high}); the model is not monotone"
        )
    return probe


def waxp_mono(model: MonotoneModel, instance, picked) -> bool:
    """Weak-explanation test in two predictions: both extremes agree."""
    return bounds(model, instance, frozenset(picked)).forces_prediction


class MonotoneOracle:
    """xpcore-compatible oracle dispatching to the bounds test."""

    def __init__(self, model: MonotoneModel, instance):
        self.model = model
        self.instance = instance
        self.num_features = model.num_features

    def waxp(self, features: FeatureSet) -> bool:
        return waxp_mono(self.model, self.instance, features)


def is_necessary_mono(model: MonotoneModel, instance, target: int) -> bool:
    """Necessity in two predictions: everything else must fail to suffice."""
    if not 1 <= target <= model.num_features:
        raise ValueError(f"feature {target} out of range")
    rest = full_set(model.num_features) - {target}
    return not waxp_mono(model, instance, rest)


# ---------------------------------------------------------------------------
# Refinement clause builders


def positive_clause(oracle, picked: FeatureSet, *, shrink: bool = False) -> list[int]:
    """Clause requiring a future pick outside ``picked``.

    Sound when ``picked`` is not a weak explanation: by monotonicity no subset
    of it is one either.  With ``shrink`` on, complement features are greedily
    dropped while the enlarged set still fails the weak-explanation test,
    giving a stronger clause at up to two predictions per drop.
    """
    everything = full_set(oracle.num_features)
    complement = sorted(everything - picked)
    if shrink:
        kept = list(complement)
        for i in complement:
            trial = [j for j in kept if j != i]
            if not trial:
                break
            if not oracle.waxp(everything - frozenset(trial)):
                kept = trial
        complement = kept
    return [+i for i in complement]


def negative_clause(oracle, picked: FeatureSet, target: int, *, shrink: bool = False) -> list[int]:
    """Clause forbidding supersets of ``picked`` minus the target.

    Sound when ``picked`` minus the target is itself a weak explanation: any
    superset then contains a minimal explanation avoiding the target.  With
    ``shrink`` on, literals are greedily dropped while the reduced set keeps
    forcing the prediction.
    """
    core = sorted(picked - {target})
    if shrink:
        kept = list(core)
        for i in core:
            trial = [j for j in kept if j != i]
            if oracle.waxp(frozenset(trial)):
                kept = trial
        core = kept
    return [-i for i in core]


# ---------------------------------------------------------------------------
# Hypothesis CNF and the decision loop


class HypothesisCnf:
    """Selector-variable CNF whose models are the unexplored candidate sets.

    The target selector is enforced per call as a solver assumption, never a
    unit clause, so negative clauses may mention the target without
    contradiction.  Every added clause must be sign-pure: positive clauses
    re-open features outside a failed pick, negative clauses retire picks.
    """

    def __init__(self, num_features: int, target: int, *, solver_command: str | None = None):
        if not 1 <= target <= num_features:
            raise ValueError(f"target feature {target} out of range")
        self.num_features = num_features
        self.target = target
        self.clauses: list[list[int]] = []
        self.solver_command = solver_command
        self._solver = None
        if solver_command is None:
            self._solver = SatSolver(num_features, branching="static")

    def add_clause(self, clause: Sequence[int]) -> None:
        clause = list(clause)
        if not clause:
            raise ValueError("refinement clauses are never empty")
        signs = {lit > 0 for lit in clause}
        if len(signs) != 1:
            raise ValueError(f"refinement clause {clause} mixes polarities")
        if any(not 1 <= abs(lit) <= self.num_features for lit in clause):
            raise ValueError(f"clause {clause} mentions unknown selectors")
        self.clauses.append(clause)
        if self._solver is not None:
            self._solver.add_clause(clause)

    def next_candidate(self):
        """One oracle call: a not-yet-eliminated set containing the target."""
        if self._solver is not None:
            return self._solver.solve([self.target])
        formula = CnfFormula(self.num_features, [list(c) for c in self.clauses])
        formula.add([self.target])
        return solve_external(formula, self.solver_command)

    def decode(self, model: list[bool]) -> FeatureSet:
        return frozenset(i for i in range(1, self.num_features + 1) if model[i])


@dataclass(frozen=True)
class TraceStep:
    """One refinement iteration, in the shape of the worked-trace tables."""

    selectors: tuple[int, ...]  # 0/1 per feature; empty when the space is exhausted
    picked: tuple[int, ...]
    complement: tuple[int, ...]
    class_low: int | None
    class_high: int | None
    action: str  # "positive-clause", "negative-clause", "witness", "exhausted"
    clause: tuple[int, ...] | None


@dataclass
class MonoRelevancyResult:
    answer: str  # "yes", "no" or "unknown"
    target: int
    witness: FrpWitness | None = None
    stats: dict = field(default_factory=dict)
    trace: list[TraceStep] = field(default_factory=list)


def decide_relevancy_mono(
    model: MonotoneModel,
    instance,
    target: int,
    *,
    shrink: bool = False,
    max_iterations: int | None = None,
    solver_command: str | None = None,
) -> MonoRelevancyResult:
    """Abstraction-refinement decision of target-feature relevancy.

    Each iteration guesses a candidate set from the hypothesis CNF (one SAT
    call), spends at most four predictions classifying it, and either stops
    with a verified witness or refines the CNF with a clause the current
    candidate falsifies.  Returns "unknown" only when the iteration budget
    runs out.
    """
    if not 1 <= target <= model.num_features:
        raise ValueError(f"target feature {target} out of range")
    started = time.perf_counter()
    base_predicts = model.predict_calls
    oracle = MemoOracle(MonotoneOracle(model, instance))
    hypothesis = HypothesisCnf(model.num_features, target, solver_command=solver_command)
    trace: list[TraceStep] = []
    sat_calls = 0

    def _stats() -> dict:
        return {
            "sat_calls": sat_calls,
            "predict_calls": model.predict_calls - base_predicts,
            "cnf_vars": model.num_features,
            "cnf_clauses": len(hypothesis.clauses),
            "wall_ms": (time.perf_counter() - started) * 1000.0,
        }

    iterations = 0
    while True:
        if max_iterations is not None and iterations >= max_iterations:
            return MonoRelevancyResult("unknown", target, stats=_stats(), trace=trace)
        iterations += 1
        outcome = hypothesis.next_candidate()
        sat_calls += 1
        if outcome.status == SatStatus.UNKNOWN:
            return MonoRelevancyResult("unknown", target, stats=_stats(), trace=trace)
        if outcome.status == SatStatus.UNSAT:
            trace.append(TraceStep((), (), (), None, None, "exhausted", None))
            return MonoRelevancyResult("no", target, stats=_stats(), trace=trace)

        picked = hypothesis.decode(outcome.model)
        assert target in picked, "assumption lost: candidate must contain the target"
        selectors = tuple(
            1 if i in picked else 0 for i in range(1, model.num_features + 1)
        )
        complement = tuple(sorted(full_set(model.num_features) - picked))
        probe = bounds(model, instance, picked)
        oracle.prime(picked, probe.forces_prediction)

        if not probe.forces_prediction:
            clause = positive_clause(oracle, picked, shrink=shrink)
            assert not any(abs(lit) in picked for lit in clause), (
                "positive clause must be falsified by the candidate that spawned it"
            )
            hypothesis.add_clause(clause)
            trace.append(
                TraceStep(
                    selectors, tuple(sorted(picked)), complement,
                    probe.class_low, probe.class_high, "positive-clause", tuple(clause),
                )
            )
            continue

        if not oracle.waxp(picked - {target}):
            # The loop has already established that `picked` forces the
            # prediction and stops doing so without the target, so every
            # minimal explanation inside it contains the target; deletion
            # extraction therefore yields one.  Minimality of the result
            # follows from monotonicity of the weak-explanation predicate
            # (each kept feature failed a deletion on a superset).
            axp = extract_axp(oracle, picked).features
            assert target in axp, "extracted explanation lost the target feature"
            trace.append(
                TraceStep(
                    selectors, tuple(sorted(picked)), complement,
                    probe.class_low, probe.class_high, "witness", None,
                )
            )
            witness = FrpWitness(target, picked, axp)
            return MonoRelevancyResult("yes", target, witness, stats=_stats(), trace=trace)

        clause = negative_clause(oracle, picked, target, shrink=shrink)
        assert all(abs(lit) in picked for lit in clause), (
            "negative clause must be falsified by the candidate that spawned it"
        )
        hypothesis.add_clause(clause)
        trace.append(
            TraceStep(
                selectors, tuple(sorted(picked)), complement,
                probe.class_low, probe.class_high, "negative-clause", tuple(clause),
            )
        )


def decide_relevancy_mono_as_result(*args, **kwargs) -> RelevancyResult:
    """Adapter returning the circuit-style result shape."""
    mono = decide_relevancy_mono(*args, **kwargs)
    return RelevancyResult(mono.answer, mono.target, mono.witness, mono.stats)
