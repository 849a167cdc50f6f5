"""Monotone models, bounds probes, refinement clauses and the decision loop."""

import random
import sys

import pytest

from xplain.circuit import Instance
from xplain.frp_mono import (
    ExternModel,
    FunctionModel,
    HypothesisCnf,
    LinearThresholdModel,
    ModelSpecError,
    MonotoneOracle,
    MonotonicityError,
    PredictionFailure,
    PredictionTimeout,
    bounds,
    decide_relevancy_mono,
    format_model,
    is_necessary_mono,
    load_model,
    make_model_instance,
    monotonicity_audit,
    negative_clause,
    positive_clause,
    waxp_mono,
)
from xplain.testgen import enumerate_axps, random_monotone
from xplain.xpcore import FunctionOracle, MemoOracle, is_axp

from conftest import VOTE_MODEL_TEXT


# Deterministic refinement trace of the vote model for target 4 under the
# static lowest-index / clause-satisfying-phase solver policy.  The first
# four clauses coincide with the worked-example run; the tail is the sound
# continuation until the hypothesis space is exhausted.
VOTE_T4_CLAUSES = [
    (1, 2, 3),
    (2, 3),
    (-1, -2),
    (-1, -3),
    (1, 3),
    (1, 2),
    (-2, -3),
]
VOTE_T4_ACTIONS = [
    "positive-clause",
    "positive-clause",
    "negative-clause",
    "negative-clause",
    "positive-clause",
    "positive-clause",
    "negative-clause",
    "exhausted",
]


class TestModelLoading:
    def test_vote_model_spec(self):
        model = load_model(VOTE_MODEL_TEXT)
        assert isinstance(model, LinearThresholdModel)
        assert model.num_features == 4 and model.num_classes == 2
        assert model.predict((1, 1, 0, 0)) == 1
        assert model.predict((1, 0, 0, 1)) == 0

    def test_format_round_trip(self):
        model = load_model(VOTE_MODEL_TEXT)
        again = load_model(format_model(model))
        assert again.weights == model.weights
        assert again.thresholds == model.thresholds
        assert again.bounds == model.bounds

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("monotone 2 2\nd 1 0 1\nlinear 1 1 : 1", "missing bound"),
            ("monotone 2 2\nd 1 0 1\nd 2 0 1\nlinear 1 : 1", "expected 2 weights"),
            ("monotone 2 2\nd 1 0 1\nd 2 0 1\nlinear 1 1 : 1 2", "expected 1 thresholds"),
            ("monotone 2 2\nd 1 0 1\nd 2 0 1\nlinear -1 1 : 1", "nonnegative"),
            ("d 1 0 1\nlinear 1 : 1", "missing 'monotone"),
            ("monotone 2 2\nd 1 0 1\nd 2 0 1\nfoo bar", "unknown directive"),
            ("monotone 1 2\nd 1 1 0\nlinear 1 : 1", "lower bound exceeds"),
            ("monotone 1 2\nd 1 0 1\n", "missing 'linear"),
        ],
    )
    def test_spec_errors(self, text, fragment):
        with pytest.raises(ModelSpecError, match=fragment):
            load_model(text)

    def test_instance_checks(self, vote_model):
        inst = make_model_instance(vote_model, (1, 1, 1, 1), 1)
        assert inst.predicted_class == 1
        with pytest.raises(ValueError, match="differs"):
            make_model_instance(vote_model, (1, 1, 1, 1), 0)
        with pytest.raises(ValueError, match="outside"):
            make_model_instance(vote_model, (1, 1, 1, 7))

    def test_audit_accepts_monotone_and_flags_decreasing(self):
        assert monotonicity_audit(load_model(VOTE_MODEL_TEXT), pairs=300) == []
        decreasing = FunctionModel(lambda p: int(p[0] < 0.5), 2, 2)
        violations = monotonicity_audit(decreasing, pairs=300)
        assert violations
        low, high, k_low, k_high = violations[0]
        assert k_low > k_high and all(a <= b for a, b in zip(low, high))


class TestBounds:
    def test_vote_probe_rows(self, vote_model, vote_instance):
        probe = bounds(vote_model, vote_instance, frozenset({1, 2}))
        assert (probe.class_low, probe.class_high) == (1, 1)
        probe = bounds(vote_model, vote_instance, frozenset({4}))
        assert (probe.class_low, probe.class_high) == (0, 1)
        assert probe.point_low == (0.0, 0.0, 0.0, 1.0)
        assert probe.point_high == (1.0, 1.0, 1.0, 1.0)

    def test_full_pick_pins_both_probes(self, vote_model, vote_instance):
        probe = bounds(vote_model, vote_instance, frozenset({1, 2, 3, 4}))
        assert probe.class_low == probe.class_high == vote_instance.predicted_class

    def test_two_predictions_per_probe(self, vote_model, vote_instance):
        before = vote_model.predict_calls
        bounds(vote_model, vote_instance, frozenset({1}))
        assert vote_model.predict_calls - before == 2

    def test_non_monotone_model_caught(self):
        decreasing = FunctionModel(lambda p: int(p[0] < 0.5), 1, 2)
        instance = Instance((1.0,), 0)
        with pytest.raises(MonotonicityError):
            bounds(decreasing, instance, frozenset())


class TestWaxpMono:
    def test_vote_goldens(self, vote_model, vote_instance):
        assert waxp_mono(vote_model, vote_instance, {1, 4}) is False
        assert waxp_mono(vote_model, vote_instance, {1, 2, 4}) is True
        assert waxp_mono(vote_model, vote_instance, set()) is False

    def test_empty_set_fails_for_nonconstant_models(self):
        rng = random.Random(3)
        for seed in range(20):
            model = random_monotone(seed, rng.randint(2, 6))
            # Pick a point; non-constant means the full swing changes the class.
            values = tuple(float(rng.randint(0, 1)) for _ in range(model.num_features))
            instance = make_model_instance(model, values)
            lo = tuple(model.lower(i) for i in range(1, model.num_features + 1))
            hi = tuple(model.upper(i) for i in range(1, model.num_features + 1))
            if model.predict(lo) != model.predict(hi):
                assert waxp_mono(model, instance, set()) is False


class TestClauseBuilders:
    def test_positive_rows(self, vote_model, vote_instance):
        oracle = MemoOracle(MonotoneOracle(vote_model, vote_instance))
        assert positive_clause(oracle, frozenset({4})) == [1, 2, 3]
        assert positive_clause(oracle, frozenset({1, 4})) == [2, 3]

    def test_negative_rows(self, vote_model, vote_instance):
        oracle = MemoOracle(MonotoneOracle(vote_model, vote_instance))
        assert negative_clause(oracle, frozenset({1, 2, 4}), 4) == [-1, -2]
        assert negative_clause(oracle, frozenset({1, 3, 4}), 4) == [-1, -3]

    def test_positive_shrink(self, vote_model, vote_instance):
        # Greedy ascending drops feature 1 and keeps {2, 3}: a two-literal clause.
        oracle = MemoOracle(MonotoneOracle(vote_model, vote_instance))
        assert positive_clause(oracle, frozenset({4}), shrink=True) == [2, 3]

    def test_negative_shrink_keeps_sufficiency(self, vote_model, vote_instance):
        oracle = MemoOracle(MonotoneOracle(vote_model, vote_instance))
        clause = negative_clause(oracle, frozenset({1, 2, 3, 4}), 4, shrink=True)
        kept = frozenset(-lit for lit in clause)
        assert oracle.waxp(kept)
        assert len(clause) == 2


class TestHypothesisCnf:
    def test_polarity_purity_enforced(self):
        hyp = HypothesisCnf(4, 4)
        hyp.add_clause([1, 2])
        hyp.add_clause([-1, -3])
        with pytest.raises(ValueError, match="mixes"):
            hyp.add_clause([1, -2])
        with pytest.raises(ValueError, match="never empty"):
            hyp.add_clause([])

    def test_candidates_contain_target(self):
        hyp = HypothesisCnf(4, 2)
        out = hyp.next_candidate()
        assert hyp.decode(out.model) == frozenset({2})


class TestDecide:
    def test_target_4_irrelevant_with_pinned_trace(self, vote_model, vote_instance):
        result = decide_relevancy_mono(vote_model, vote_instance, 4)
        assert result.answer == "no"
        assert result.stats["sat_calls"] == 8
        assert result.stats["predict_calls"] == 20
        assert [s.action for s in result.trace] == VOTE_T4_ACTIONS
        assert [s.clause for s in result.trace if s.clause] == VOTE_T4_CLAUSES
        # The first four steps follow the worked-example refinement exactly.
        assert [s.picked for s in result.trace[:4]] == [
            (4,),
            (1, 4),
            (1, 2, 4),
            (1, 3, 4),
        ]
        assert [(s.class_low, s.class_high) for s in result.trace[:4]] == [
            (0, 1),
            (0, 1),
            (1, 1),
            (1, 1),
        ]

    def test_target_1_witness(self, vote_model, vote_instance):
        result = decide_relevancy_mono(vote_model, vote_instance, 1)
        assert result.answer == "yes"
        assert sorted(result.witness.weak_set) == [1, 2]
        assert sorted(result.witness.axp) == [1, 2]
        assert result.stats["sat_calls"] == 2
        assert [s.action for s in result.trace] == ["positive-clause", "witness"]
        assert result.trace[0].clause == (2, 3, 4)

    def test_target_3_relevant(self, vote_model, vote_instance):
        result = decide_relevancy_mono(vote_model, vote_instance, 3)
        assert result.answer == "yes"
        assert sorted(result.witness.axp) in ([1, 3], [2, 3])

    def test_witness_invariants_and_budget(self, vote_model, vote_instance):
        m = vote_model.num_features
        for target in (1, 2, 3):
            result = decide_relevancy_mono(vote_model, vote_instance, target)
            witness = result.witness
            assert waxp_mono(vote_model, vote_instance, witness.weak_set)
            assert not waxp_mono(
                vote_model, vote_instance, witness.weak_set - {target}
            )
            oracle = MonotoneOracle(vote_model, vote_instance)
            assert is_axp(oracle, witness.axp) and target in witness.axp
            assert (
                result.stats["predict_calls"]
                <= 4 * result.stats["sat_calls"] + 2 * m
            )

    def test_unknown_on_iteration_budget(self, vote_model, vote_instance):
        result = decide_relevancy_mono(vote_model, vote_instance, 4, max_iterations=1)
        assert result.answer == "unknown"

    def test_deterministic_reruns(self, vote_model, vote_instance):
        first = decide_relevancy_mono(vote_model, vote_instance, 4)
        second = decide_relevancy_mono(vote_model, vote_instance, 4)
        assert first.trace == second.trace
        assert first.stats["sat_calls"] == second.stats["sat_calls"]

    def test_shrink_still_correct(self, vote_model, vote_instance):
        for target in (1, 2, 3, 4):
            plain = decide_relevancy_mono(vote_model, vote_instance, target)
            shrunk = decide_relevancy_mono(
                vote_model, vote_instance, target, shrink=True
            )
            assert plain.answer == shrunk.answer

    def test_external_solver_backend(self, vote_model, vote_instance, dpll_command):
        result = decide_relevancy_mono(
            vote_model, vote_instance, 4, solver_command=dpll_command
        )
        assert result.answer == "no"


class TestNecessity:
    def test_vote_has_no_necessary_features(self, vote_model, vote_instance):
        for target in range(1, 5):
            assert is_necessary_mono(vote_model, vote_instance, target) is False

    def test_single_feature_model(self):
        model = LinearThresholdModel([1.0], [1.0])
        instance = make_model_instance(model, (1.0,), 1)
        assert is_necessary_mono(model, instance, 1) is True

    def test_two_predictions(self, vote_model, vote_instance):
        before = vote_model.predict_calls
        is_necessary_mono(vote_model, vote_instance, 2)
        assert vote_model.predict_calls - before == 2


class TestOracleAgreement:
    def test_threshold_models_match_enumeration(self):
        rng = random.Random(99)
        checked = 0
        for seed in range(60):
            m = rng.randint(3, 9)
            model = random_monotone(seed, m, rng.choice([2, 2, 3]))
            values = tuple(float(rng.randint(0, 1)) for _ in range(m))
            instance = make_model_instance(model, values)
            reference = enumerate_axps(MemoOracle(MonotoneOracle(model, instance)))
            for target in range(1, m + 1):
                result = decide_relevancy_mono(model, instance, target)
                assert (result.answer == "yes") == reference.is_relevant(target)
                assert is_necessary_mono(model, instance, target) == reference.is_necessary(
                    target
                )
                checked += 1
        assert checked > 200

    def test_boolean_models_match_fully_independent_brute_force(self):
        # Independent route: enumerate completions point by point, with no
        # bounds shortcuts anywhere.
        rng = random.Random(5)
        for seed in range(25):
            m = rng.randint(2, 7)
            model = random_monotone(seed, m)
            values = tuple(float(rng.randint(0, 1)) for _ in range(m))
            instance = make_model_instance(model, values)
            brute = FunctionOracle(
                lambda p, model=model: model.predict(p), instance
            )
            reference = enumerate_axps(brute)
            for target in range(1, m + 1):
                result = decide_relevancy_mono(model, instance, target)
                assert (result.answer == "yes") == reference.is_relevant(target)


class TestExternModel:
    @pytest.fixture()
    def served_vote(self, tmp_path):
        spec = tmp_path / "vote.mono"
        spec.write_text(VOTE_MODEL_TEXT)
        command = f"{sys.executable} -m xplain.serve linear {spec}"
        model = ExternModel(command, 4, 2, [(0, 1)] * 4)
        yield model
        model.close()

    def test_agrees_with_in_process_model(self, served_vote, vote_model):
        rng = random.Random(0)
        for _ in range(25):
            point = tuple(float(rng.randint(0, 1)) for _ in range(4))
            assert served_vote.predict(point) == vote_model.predict(point)

    def test_full_decision_through_subprocess(self, served_vote):
        instance = make_model_instance(served_vote, (1, 1, 1, 1), 1)
        result = decide_relevancy_mono(served_vote, instance, 4)
        assert result.answer == "no"
        result = decide_relevancy_mono(served_vote, instance, 1)
        assert sorted(result.witness.axp) == [1, 2]

    def test_dead_process_surfaces_distinctly(self):
        model = ExternModel(f"{sys.executable} -c 'pass'", 2, 2, [(0, 1)] * 2)
        with pytest.raises(PredictionFailure):
            model.predict((0.0, 1.0))

    def test_garbage_output_surfaces_distinctly(self):
        script = "import sys; sys.stdin.readline(); print('banana')"
        model = ExternModel(f'{sys.executable} -c "{script}"', 2, 2, [(0, 1)] * 2)
        with pytest.raises(PredictionFailure, match="expected a class index"):
            model.predict((0.0, 1.0))
        model.close()

    def test_timeout_surfaces_distinctly(self):
        script = "import sys, time; sys.stdin.readline(); time.sleep(10)"
        model = ExternModel(
            f'{sys.executable} -c "{script}"', 2, 2, [(0, 1)] * 2, timeout_ms=300
        )
        with pytest.raises(PredictionTimeout):
            model.predict((0.0, 1.0))
        model.close()
