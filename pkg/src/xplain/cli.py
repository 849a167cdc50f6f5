"""Command-line front end.

Loads a classifier (circuit or monotone model spec, dispatched on the file
header), an instance, and answers necessity / relevancy / explanation /
enumeration queries, one JSON object per line on stdout.  Exit codes for the
query commands: 0 = yes, 1 = no, 2 = error, 3 = unknown (resource limit).
Diagnostics go to stderr only.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from dataclasses import dataclass, field

from .circuit import (
    Circuit,
    CircuitParseError,
    Instance,
    NegationUnavailable,
    evaluate,
    format_nnf,
    make_instance,
    parse_circuit,
)
from .cnfsat import ExternalSolverError
from .frp_ddnnf import decide_relevancy, encode
from .frp_mono import (
    ModelSpecError,
    MonotoneModel,
    MonotoneOracle,
    MonotonicityError,
    PredictionFailure,
    decide_relevancy_mono,
    format_model,
    is_necessary_mono,
    load_model,
    make_model_instance,
    monotonicity_audit,
)
from .testgen import (
    ENUMERATION_MAX_FEATURES,
    TruthTableOracle,
    enumerate_axps,
    format_fbdd_entries,
    gen_fbdd_from_cnf,
    gen_mono_from_cnf,
    manifest_entry,
    random_circuit,
    random_monotone,
    read_manifest,
    write_manifest,
)
from .xpcore import (
    CircuitOracle,
    MemoOracle,
    PreconditionError,
    extract_axp,
    full_set,
    is_necessary,
)
from .cnfsat import read_dimacs

EXIT_YES = 0
EXIT_NO = 1
EXIT_ERROR = 2
EXIT_UNKNOWN = 3

_USER_ERRORS = (
    ValueError,
    CircuitParseError,
    ModelSpecError,
    NegationUnavailable,
    PreconditionError,
    MonotonicityError,
    PredictionFailure,
    ExternalSolverError,
    OSError,
)


@dataclass
class QueryRecord:
    """One stdout line; field names are part of the output contract."""

    query: str
    model: str
    instance: list
    predicted_class: int
    feature: int | None = None
    answer: str | None = None  # "yes" / "no" / "unknown"
    witness: list[int] | None = None
    weak_set: list[int] | None = None
    stats: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "query": self.query,
            "model": self.model,
            "instance": self.instance,
            "class": self.predicted_class,
            "feature": self.feature,
            "answer": self.answer,
            "witness": self.witness,
            "stats": self.stats,
        }
        if self.weak_set is not None:
            payload["weak_set"] = self.weak_set
        payload.update(self.extra)
        return json.dumps(payload)


def _emit(record: QueryRecord) -> None:
    print(record.to_json())
    sys.stdout.flush()


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


# ---------------------------------------------------------------------------
# Loading helpers


def _load_classifier(path: str, *, audit_pairs: int = 0):
    """Returns ("circuit", Circuit) or ("mono", MonotoneModel)."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    head = text.lstrip().split(None, 1)
    if not head:
        raise ValueError(f"{path}: empty model file")
    keyword = head[0]
    if keyword in ("nnf", "fbdd"):
        return "circuit", parse_circuit(text)
    if keyword == "monotone":
        model = load_model(text, base_dir=os.path.dirname(os.path.abspath(path)))
        if audit_pairs:
            violations = monotonicity_audit(model, pairs=audit_pairs)
            if violations:
                a, b, ka, kb = violations[0]
                raise MonotonicityError(
                    f"{path}: prediction drops from {ka} to {kb} on an ordered pair "
                    f"({a} <= {b})"
                )
        return "mono", model
    raise ValueError(f"{path}: unrecognized model header {keyword!r}")


def _parse_values(text: str, kind: str):
    tokens = [tok for tok in text.replace(",", " ").split() if tok]
    if kind == "circuit":
        return [int(tok) for tok in tokens]
    return [float(tok) for tok in tokens]


def _build_instance(kind: str, classifier, values, declared_class):
    if kind == "circuit":
        return make_instance(classifier, values, declared_class)
    return make_model_instance(classifier, values, declared_class)


def _load_negation(path: str | None) -> Circuit | None:
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as handle:
        return parse_circuit(handle.read())


def _circuit_oracle(circuit: Circuit, instance: Instance, negation: Circuit | None):
    return MemoOracle(CircuitOracle(circuit, instance, negation))


def _answer_exit(answer: str) -> int:
    return {"yes": EXIT_YES, "no": EXIT_NO, "unknown": EXIT_UNKNOWN}[answer]


# ---------------------------------------------------------------------------
# Query commands


def cmd_necessity(args) -> int:
    kind, classifier = _load_classifier(args.model)
    values = _parse_values(args.instance, kind)
    instance = _build_instance(kind, classifier, values, args.declared_class)
    started = time.perf_counter()
    if kind == "circuit":
        oracle = _circuit_oracle(classifier, instance, _load_negation(args.negation))
        necessary = is_necessary(oracle, args.feature)
        predict_calls = oracle.inner.calls
    else:
        base = classifier.predict_calls
        necessary = is_necessary_mono(classifier, instance, args.feature)
        predict_calls = classifier.predict_calls - base
    answer = "yes" if necessary else "no"
    _emit(
        QueryRecord(
            "necessity",
            args.model,
            list(instance.values),
            instance.predicted_class,
            feature=args.feature,
            answer=answer,
            stats={
                "sat_calls": 0,
                "predict_calls": predict_calls,
                "cnf_vars": 0,
                "cnf_clauses": 0,
                "wall_ms": (time.perf_counter() - started) * 1000.0,
            },
        )
    )
    return _answer_exit(answer)


def _relevancy_record(args, kind, instance, result) -> QueryRecord:
    record = QueryRecord(
        "relevancy",
        args.model,
        list(instance.values),
        instance.predicted_class,
        feature=args.feature,
        answer=result.answer,
        stats=result.stats,
    )
    if result.witness is not None:
        record.witness = sorted(result.witness.axp)
        if args.witness:
            record.weak_set = sorted(result.witness.weak_set)
    return record


def cmd_relevancy(args) -> int:
    kind, classifier = _load_classifier(args.model)
    values = _parse_values(args.instance, kind)
    instance = _build_instance(kind, classifier, values, args.declared_class)
    solver_command = None if args.solver in (None, "builtin") else args.solver
    if kind == "circuit":
        result = decide_relevancy(
            classifier,
            instance,
            args.feature,
            negated_circuit=_load_negation(args.negation),
            solver_command=solver_command,
            conflict_budget=args.budget,
        )
    else:
        result = decide_relevancy_mono(
            classifier,
            instance,
            args.feature,
            shrink=args.shrink,
            max_iterations=args.budget,
            solver_command=solver_command,
        )
    _emit(_relevancy_record(args, kind, instance, result))
    return _answer_exit(result.answer)


def cmd_axp(args) -> int:
    kind, classifier = _load_classifier(args.model)
    values = _parse_values(args.instance, kind)
    instance = _build_instance(kind, classifier, values, args.declared_class)
    started = time.perf_counter()
    if kind == "circuit":
        oracle = _circuit_oracle(classifier, instance, _load_negation(args.negation))
        counter = lambda: oracle.inner.calls  # noqa: E731
    else:
        base = classifier.predict_calls
        oracle = MemoOracle(MonotoneOracle(classifier, instance))
        counter = lambda: classifier.predict_calls - base  # noqa: E731
    seed = None
    if args.seed_set:
        seed = frozenset(int(tok) for tok in args.seed_set.replace(",", " ").split())
    explanation = extract_axp(oracle, seed)
    _emit(
        QueryRecord(
            "axp",
            args.model,
            list(instance.values),
            instance.predicted_class,
            answer="yes",
            witness=sorted(explanation.features),
            stats={
                "sat_calls": 0,
                "predict_calls": counter(),
                "cnf_vars": 0,
                "cnf_clauses": 0,
                "wall_ms": (time.perf_counter() - started) * 1000.0,
            },
        )
    )
    return EXIT_YES


def cmd_enumerate(args) -> int:
    kind, classifier = _load_classifier(args.model)
    values = _parse_values(args.instance, kind)
    instance = _build_instance(kind, classifier, values, args.declared_class)
    num_features = (
        classifier.num_features if kind == "circuit" else classifier.num_features
    )
    if num_features > ENUMERATION_MAX_FEATURES:
        return _fail(
            f"enumeration is guarded to {ENUMERATION_MAX_FEATURES} features "
            f"(model has {num_features})"
        )
    started = time.perf_counter()
    if kind == "circuit":
        oracle = _circuit_oracle(classifier, instance, _load_negation(args.negation))
    else:
        oracle = MemoOracle(MonotoneOracle(classifier, instance))
    axps = enumerate_axps(oracle)
    _emit(
        QueryRecord(
            "enumerate",
            args.model,
            list(instance.values),
            instance.predicted_class,
            answer="yes",
            stats={
                "sat_calls": 0,
                "predict_calls": 0,
                "cnf_vars": 0,
                "cnf_clauses": 0,
                "wall_ms": (time.perf_counter() - started) * 1000.0,
            },
            extra={
                "axps": axps.as_sorted_lists(),
                "relevant": sorted(axps.relevant_features),
                "necessary": sorted(axps.necessary_features),
            },
        )
    )
    return EXIT_YES


# ---------------------------------------------------------------------------
# Generation


def _gen_instance_expectations(oracle, num_features):
    axps = enumerate_axps(oracle)
    return {
        "axps": axps.as_sorted_lists(),
        "relevant": sorted(axps.relevant_features),
        "necessary": sorted(axps.necessary_features),
    }


def cmd_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    entries = []
    rng = random.Random(args.seed)
    if args.kind in ("mono-cnf", "fbdd-cnf"):
        if not args.cnf:
            return _fail("--cnf is required for the reduction generators")
        with open(args.cnf, "r", encoding="utf-8") as handle:
            formula = read_dimacs(handle.read())
        base = os.path.splitext(os.path.basename(args.cnf))[0]
        if args.kind == "mono-cnf":
            artifact = gen_mono_from_cnf(formula)
            cnf_copy = os.path.join(args.out, f"{base}.cnf")
            with open(cnf_copy, "w", encoding="utf-8") as handle:
                from .cnfsat import write_dimacs

                handle.write(write_dimacs(formula))
            model_path = os.path.join(args.out, f"{base}.mono")
            with open(model_path, "w", encoding="utf-8") as handle:
                handle.write(f"monotone {artifact.model.num_features} 2\n")
                for i in range(1, artifact.model.num_features + 1):
                    handle.write(f"d {i} 0 1\n")
                handle.write(
                    "extern %s -m xplain.serve mono-cnf {dir}/%s.cnf\n"
                    % (sys.executable, base)
                )
            files = {"model": model_path, "cnf": cnf_copy}
        else:
            artifact = gen_fbdd_from_cnf(formula)
            model_path = os.path.join(args.out, f"{base}.fbdd")
            with open(model_path, "w", encoding="utf-8") as handle:
                handle.write(
                    format_fbdd_entries(
                        artifact.decision_entries, artifact.circuit.num_features
                    )
                )
            files = {"model": model_path}
        entries.append(
            manifest_entry(
                args.kind,
                files=files,
                instance=artifact.instance,
                target=artifact.target,
                expected={"relevant": artifact.expected_relevant},
            )
        )
    elif args.kind == "random-circuit":
        for index in range(args.count):
            seed = rng.randrange(1 << 30)
            circuit = random_circuit(seed, args.features, args.depth)
            path = os.path.join(args.out, f"circuit_{index:03d}.nnf")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(format_nnf(circuit))
            instance = _sample_circuit_instance(circuit, rng)
            expected = None
            if circuit.num_features <= 16:
                oracle = TruthTableOracle.from_circuit(circuit, instance)
                expected = _gen_instance_expectations(oracle, circuit.num_features)
            entries.append(
                manifest_entry(
                    "circuit",
                    seed=seed,
                    params={"features": args.features, "depth": args.depth},
                    files={"model": path},
                    instance=instance,
                    expected=expected,
                )
            )
    elif args.kind == "random-monotone":
        for index in range(args.count):
            seed = rng.randrange(1 << 30)
            model = random_monotone(seed, args.features, args.classes)
            path = os.path.join(args.out, f"monotone_{index:03d}.mono")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(format_model(model))
            values = tuple(float(rng.randint(0, 1)) for _ in range(model.num_features))
            instance = make_model_instance(model, values)
            expected = None
            if model.num_features <= 16:
                oracle = MemoOracle(MonotoneOracle(model, instance))
                expected = _gen_instance_expectations(oracle, model.num_features)
            entries.append(
                manifest_entry(
                    "monotone",
                    seed=seed,
                    params={"features": args.features, "classes": args.classes},
                    files={"model": path},
                    instance=instance,
                    expected=expected,
                )
            )
    else:
        return _fail(f"unknown generator kind {args.kind!r}")
    manifest_path = os.path.join(args.out, "manifest.jsonl")
    write_manifest(entries, manifest_path)
    print(f"wrote {len(entries)} artifact(s) and {manifest_path}", file=sys.stderr)
    return 0


def _sample_circuit_instance(circuit: Circuit, rng: random.Random) -> Instance:
    # Prefer class-0 points: those queries need no complement circuit.
    fallback = None
    for _ in range(256):
        values = tuple(rng.randint(0, 1) for _ in range(circuit.num_features))
        predicted = evaluate(circuit, values)
        if predicted == 0:
            return Instance(values, 0)
        fallback = Instance(values, predicted)
    return fallback


# ---------------------------------------------------------------------------
# Benchmark


def _bench_one(task: dict) -> dict:
    kind, classifier = _load_classifier(task["model"])
    values = task["values"]
    instance = _build_instance(kind, classifier, values, None)
    feature = task["feature"]
    if kind == "circuit":
        result = decide_relevancy(
            classifier,
            instance,
            feature,
            conflict_budget=task.get("budget"),
        )
    else:
        result = decide_relevancy_mono(
            classifier,
            instance,
            feature,
            shrink=task.get("shrink", False),
            max_iterations=task.get("budget"),
        )
        classifier.close()
    record = {
        "query": "relevancy",
        "model": task["model"],
        "instance": list(values),
        "class": instance.predicted_class,
        "feature": feature,
        "answer": result.answer,
        "witness": sorted(result.witness.axp) if result.witness else None,
        "stats": result.stats,
    }
    return record


def _bench_tasks(args) -> list[dict]:
    model_paths: list[str] = []
    if os.path.isdir(args.models):
        for name in sorted(os.listdir(args.models)):
            if name.endswith((".nnf", ".fbdd", ".mono")):
                model_paths.append(os.path.join(args.models, name))
    elif args.models.endswith(".jsonl"):
        for entry in read_manifest(args.models):
            model_paths.append(entry["files"]["model"])
    else:
        model_paths.append(args.models)
    if not model_paths:
        raise ValueError(f"no model files found under {args.models}")

    rng = random.Random(args.seed)
    tasks = []
    for path in model_paths:
        kind, classifier = _load_classifier(path)
        m = classifier.num_features
        if kind == "circuit":
            support = sorted(classifier.support()) or list(range(1, m + 1))
        else:
            support = list(range(1, m + 1))
            classifier.close()
        for _ in range(args.queries):
            if kind == "circuit":
                instance = _sample_circuit_instance(classifier, rng)
                values = list(instance.values)
            else:
                values = [float(rng.randint(0, 1)) for _ in range(m)]
            tasks.append(
                {
                    "model": path,
                    "values": values,
                    "feature": rng.choice(support),
                    "budget": args.budget,
                    "shrink": args.shrink,
                }
            )
    return tasks


def cmd_bench(args) -> int:
    tasks = _bench_tasks(args)
    if args.jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(args.jobs) as pool:
            records = pool.map(_bench_one, tasks)
    else:
        records = [_bench_one(task) for task in tasks]
    for record in records:
        print(json.dumps(record))
    from .report import summarize, write_report

    summary = {"summary": summarize(records)}
    print(json.dumps(summary))
    if args.report_dir:
        paths = write_report(records, args.report_dir)
        print("report written: " + ", ".join(sorted(paths.values())), file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _add_instance_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("model", help="classifier file (.nnf, .fbdd or monotone spec)")
    parser.add_argument("--instance", required=True, help="comma-separated feature values")
    parser.add_argument(
        "--class",
        dest="declared_class",
        type=int,
        default=None,
        help="declared class; verified against the classifier",
    )
    parser.add_argument(
        "--negation",
        default=None,
        help="companion negated-circuit file (class-1 queries on general circuits)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xplain",
        description="Feature necessity and relevancy queries for classifier explanations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("necessity", help="is the feature in every explanation?")
    _add_instance_args(p)
    p.add_argument("--feature", type=int, required=True)
    p.set_defaults(func=cmd_necessity)

    p = sub.add_parser("relevancy", help="is the feature in some explanation?")
    _add_instance_args(p)
    p.add_argument("--feature", type=int, required=True)
    p.add_argument("--witness", action="store_true", help="include the weak set in the record")
    p.add_argument("--solver", default="builtin", help="'builtin' or an external solver command")
    p.add_argument("--shrink", action="store_true", help="shrink refinement clauses (monotone)")
    p.add_argument("--budget", type=int, default=None, help="conflict/iteration budget")
    p.set_defaults(func=cmd_relevancy)

    p = sub.add_parser("axp", help="extract one minimal explanation")
    _add_instance_args(p)
    p.add_argument("--seed-set", default=None, help="starting weak set, e.g. '1,2,3'")
    p.set_defaults(func=cmd_axp)

    p = sub.add_parser("enumerate", help="enumerate all minimal explanations (small m)")
    _add_instance_args(p)
    p.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; single instance runs serially")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("gen", help="generate classifier corpora with known answers")
    p.add_argument("--kind", required=True,
                   choices=["mono-cnf", "fbdd-cnf", "random-circuit", "random-monotone"])
    p.add_argument("--cnf", default=None, help="DIMACS input for the reduction generators")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="relevancy benchmark over a model corpus")
    p.add_argument("--models", required=True, help="model file, directory, or manifest.jsonl")
    p.add_argument("--queries", type=int, default=10, help="queries per model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--shrink", action="store_true")
    p.add_argument("--report-dir", default=None, help="write summary.csv and figures here")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
