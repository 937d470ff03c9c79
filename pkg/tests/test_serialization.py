"""Problem files, POVM files, and JSON emission."""

import json
import math

import numpy as np
import pytest

from noisy_discrimination import (
    certify,
    dispatch_solve,
    iterative_solve,
    minimum_error_costs,
    random_ensemble,
    risk_operators,
    trine_ensemble,
    trine_leak_confusion,
    trine_povm,
)
from noisy_discrimination.errors import InvalidInput, ParseError, ValidationError
from noisy_discrimination.serialization import (
    SolveOptions,
    build_problem,
    certificate_to_json,
    complex_to_json,
    confusion_is_templated,
    dump_json,
    load_json,
    matrix_to_json,
    parse_povm,
    parse_povm_document,
    parse_problem,
    povm_to_json,
    result_to_json,
)
from noisy_discrimination.transform import modified_costs


def two_state_doc(**overrides):
    doc = {
        "dimension": 2,
        "states": [
            {"prior": 0.5, "vector": [1, 0]},
            {"prior": 0.5, "vector": [0, 1]},
        ],
    }
    doc.update(overrides)
    return doc


def trine_doc():
    h = 0.5 * math.sqrt(3.0)
    return {
        "dimension": 2,
        "states": [
            {"prior": 1 / 3, "vector": [1, 0]},
            {"prior": 1 / 3, "vector": [-0.5, h]},
            {"prior": 1 / 3, "vector": [-0.5, -h]},
        ],
    }


class TestLoadJson:
    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidInput, match="cannot read"):
            load_json(str(tmp_path / "nope.json"))

    def test_malformed_json_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "states": [1,\n}\n')
        with pytest.raises(ParseError) as excinfo:
            load_json(str(path))
        assert excinfo.value.line == 3
        assert excinfo.value.column >= 1

    def test_round_trip(self, tmp_path):
        path = tmp_path / "ok.json"
        path.write_text(dump_json({"a": [1.5, -2.25]}))
        assert load_json(str(path)) == {"a": [1.5, -2.25]}


class TestBuildProblem:
    def test_defaults(self):
        problem = build_problem(two_state_doc())
        assert problem.ensemble.size == 2 and problem.ensemble.dim == 2
        np.testing.assert_array_equal(
            problem.costs.entries, minimum_error_costs(2, 2).entries
        )
        np.testing.assert_array_equal(problem.confusion.entries, np.eye(2))
        assert problem.options == SolveOptions()

    def test_outcome_count_follows_confusion(self):
        doc = two_state_doc(
            confusion=[[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        )
        problem = build_problem(doc)
        assert problem.costs.n_outcomes == 3
        assert problem.costs.entries.shape == (3, 2)

    def test_outcome_count_follows_cost(self):
        doc = two_state_doc(cost=[[0, -1], [-1, 0], [0, 0]])
        problem = build_problem(doc)
        assert problem.confusion.size == 3

    def test_vector_normalization_and_phase(self):
        doc = two_state_doc()
        doc["states"][0]["vector"] = [[0, 2], [0, 0]]  # 2i|0>, unnormalized
        problem = build_problem(doc)
        np.testing.assert_allclose(
            problem.ensemble.states[0].matrix, np.diag([1.0, 0.0]), atol=1e-15
        )

    def test_matrix_states_with_complex_entries(self):
        doc = {
            "dimension": 2,
            "states": [
                {"prior": 0.5, "matrix": [[0.5, [0, -0.5]], [[0, 0.5], 0.5]]},
                {"prior": 0.5, "matrix": [[0.5, [0, 0.5]], [[0, -0.5], 0.5]]},
            ],
        }
        problem = build_problem(doc)
        assert problem.ensemble.states[0].matrix[0, 1] == -0.5j

    def test_unknown_top_level_key(self):
        with pytest.raises(ValidationError) as excinfo:
            build_problem(two_state_doc(extra=1))
        assert excinfo.value.path == "$.extra"

    def test_unknown_state_key(self):
        doc = two_state_doc()
        doc["states"][1]["ket"] = [0, 1]
        with pytest.raises(ValidationError) as excinfo:
            build_problem(doc)
        assert excinfo.value.path == "$.states[1].ket"

    def test_vector_matrix_exclusive(self):
        doc = two_state_doc()
        doc["states"][0]["matrix"] = [[1, 0], [0, 0]]
        with pytest.raises(ValidationError, match="exactly one"):
            build_problem(doc)
        del doc["states"][0]["matrix"]
        del doc["states"][0]["vector"]
        with pytest.raises(ValidationError, match="exactly one"):
            build_problem(doc)

    def test_zero_vector_rejected(self):
        doc = two_state_doc()
        doc["states"][0]["vector"] = [0, 0]
        with pytest.raises(ValidationError, match="numerically zero"):
            build_problem(doc)

    def test_prior_sum_path_and_residual(self):
        doc = two_state_doc()
        doc["states"][0]["prior"] = 0.48
        with pytest.raises(ValidationError) as excinfo:
            build_problem(doc)
        assert excinfo.value.path == "$.states[*].prior"
        assert excinfo.value.residual == pytest.approx(0.02)

    def test_state_trace_violation_path(self):
        doc = {
            "dimension": 2,
            "states": [{"prior": 1.0, "matrix": [[0.9, 0], [0, 0]]}],
        }
        with pytest.raises(ValidationError) as excinfo:
            build_problem(doc)
        assert excinfo.value.path == "$.states[0].matrix"
        assert excinfo.value.residual == pytest.approx(0.1)

    def test_confusion_column_violation(self):
        doc = two_state_doc(confusion=[[0.8, 0], [0.1, 1]])
        with pytest.raises(ValidationError) as excinfo:
            build_problem(doc)
        assert excinfo.value.path == "$.confusion"

    def test_multiple_violations_collected(self):
        doc = two_state_doc(confusion=[[0.8, 0], [0.1, 1]])
        doc["states"][0]["prior"] = 0.4
        with pytest.raises(ValidationError) as excinfo:
            build_problem(doc)
        assert "multiple violations" in str(excinfo.value)
        assert "$.confusion" in str(excinfo.value)

    def test_boolean_is_not_a_number(self):
        doc = two_state_doc()
        doc["states"][0]["prior"] = True
        with pytest.raises(ValidationError, match="real number"):
            build_problem(doc)


class TestOptions:
    def test_explicit_values(self):
        doc = two_state_doc(
            options={"tol": 1e-7, "max_iter": 50, "seed": 3, "assignment_search": True}
        )
        assert build_problem(doc).options == SolveOptions(1e-7, 50, 3, True)

    @pytest.mark.parametrize(
        "options,path",
        [
            ({"tol": 0}, "$.options.tol"),
            ({"tol": True}, "$.options.tol"),
            ({"max_iter": 0}, "$.options.max_iter"),
            ({"max_iter": 2.5}, "$.options.max_iter"),
            ({"seed": -1}, "$.options.seed"),
            ({"assignment_search": "yes"}, "$.options.assignment_search"),
            ({"verbose": True}, "$.options.verbose"),
        ],
    )
    def test_rejections(self, options, path):
        with pytest.raises(ValidationError) as excinfo:
            build_problem(two_state_doc(options=options))
        assert excinfo.value.path == path


class TestConfusionTemplates:
    def leak_doc(self):
        doc = trine_doc()
        doc["confusion"] = [
            ["1-2*$q", 0, 0],
            ["$q", 1, 0],
            ["$q", 0, 1],
        ]
        return doc

    def test_bound_parameter(self):
        problem = build_problem(self.leak_doc(), "q", 0.1)
        np.testing.assert_allclose(
            problem.confusion.entries,
            [[0.8, 0, 0], [0.1, 1, 0], [0.1, 0, 1]],
            atol=1e-15,
        )

    @pytest.mark.parametrize(
        "text,value,expected",
        [
            ("$q", 0.3, 0.3),
            ("2*$q", 0.3, 0.6),
            ("0.5+1*$q", 0.25, 0.75),
            ("1-$q", 0.25, 0.75),
            ("-0.5+2*$q", 0.5, 0.5),
            (" 1 - 2*$q ", 0.25, 0.5),
            ("0.75", 0.0, 0.75),
        ],
    )
    def test_affine_grammar(self, text, value, expected):
        # numeric partner entry keeps the column stochastic
        doc = two_state_doc(confusion=[[text, 0], [1 - expected, 1]])
        problem = build_problem(doc, "q", value)
        assert problem.confusion.entries[0, 0] == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("text", ["1$q", "$q*2", "$q+$q", "q", "one+$q"])
    def test_grammar_rejections(self, text):
        doc = two_state_doc(confusion=[[text, 0], [0, 1]])
        with pytest.raises(ValidationError):
            build_problem(doc, "q", 0.1)

    def test_template_without_binding(self):
        with pytest.raises(ValidationError, match="sweep parameter"):
            build_problem(self.leak_doc())

    def test_confusion_is_templated(self):
        assert confusion_is_templated(self.leak_doc(), "q") is True
        assert confusion_is_templated(self.leak_doc(), "p") is False
        assert confusion_is_templated(trine_doc(), "q") is False
        assert confusion_is_templated([], "q") is False


class TestParseProblemFile:
    def test_round_trip_through_disk(self, tmp_path):
        path = tmp_path / "trine.json"
        path.write_text(json.dumps(trine_doc()))
        problem = parse_problem(str(path))
        assert problem.ensemble.size == 3

    def test_shipped_examples_parse(self):
        problem = parse_problem("problems/trine.json")
        assert problem.ensemble.size == 3
        swept = parse_problem("problems/trine_leak_sweep.json", "q", 0.1)
        assert swept.confusion.entries[0, 0] == pytest.approx(0.8)


class TestPovmDocuments:
    def test_plain_document(self):
        povm, meta = parse_povm_document(
            {
                "dimension": 2,
                "operators": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]],
            }
        )
        assert povm.size == 2 and povm.dim == 2
        assert meta == {}

    def test_dim_hint(self):
        povm, _ = parse_povm_document(
            {"operators": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}, dim_hint=2
        )
        assert povm.dim == 2

    def test_missing_dimension(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_povm_document({"operators": [[[1]]]})
        assert excinfo.value.path == "$.dimension"

    def test_nested_solve_result(self):
        raw = {
            "cost": -1.0,
            "assignment": [1, 0],
            "inference_map": [0, 1],
            "povm": {
                "dimension": 2,
                "operators": [[[0, 0], [0, 1]], [[1, 0], [0, 0]]],
            },
        }
        povm, meta = parse_povm_document(raw)
        assert meta == {"assignment": (1, 0), "inference_map": (0, 1)}
        assert povm.operators[0][1, 1] == 1.0

    def test_unvalidated_operators_pass_through(self):
        # certifying a deliberately wrong POVM is a supported workflow
        povm, _ = parse_povm_document(
            {"dimension": 2, "operators": [[[2, 0], [0, 0]], [[0, 0], [0, 1]]]}
        )
        assert povm.operators[0][0, 0] == 2.0

    def test_bad_assignment_list(self):
        raw = {
            "assignment": [0, -1],
            "povm": {"dimension": 2, "operators": [[[1, 0], [0, 1]]]},
        }
        with pytest.raises(ValidationError) as excinfo:
            parse_povm_document(raw)
        assert excinfo.value.path == "$.assignment"

    def test_operator_shape_error_names_entry(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_povm_document({"dimension": 2, "operators": [[[1, 0]]]})
        assert excinfo.value.path == "$.operators[0]"

    def test_parse_povm_from_disk(self, tmp_path):
        path = tmp_path / "povm.json"
        path.write_text(
            dump_json(
                {"dimension": 2, "operators": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}
            )
        )
        povm, _ = parse_povm(str(path))
        assert povm.size == 2


class TestEmission:
    def test_complex_and_matrix_forms(self):
        assert complex_to_json(1.5 - 2.5j) == [1.5, -2.5]
        out = matrix_to_json(np.array([[1.0 + 1.0j]]))
        assert out == [[[1.0, 1.0]]]

    def test_povm_round_trip_bit_exact(self):
        problem = parse_problem("problems/trine.json")
        result = dispatch_solve(
            problem.ensemble, problem.costs, problem.confusion
        )
        text = dump_json(result_to_json(result))
        povm, _ = parse_povm_document(json.loads(text))
        for emitted, original in zip(povm.operators, result.povm.operators):
            np.testing.assert_array_equal(emitted, original)

    def test_result_payload_shape(self):
        problem = parse_problem("problems/trine.json")
        result = dispatch_solve(problem.ensemble, problem.costs, problem.confusion)
        payload = result_to_json(result)
        assert payload["strategy_kind"] == "mirror_symmetric"
        assert payload["assignment"] == [0, 1, 2]
        assert payload["inference_map"] == [0, 1, 2]
        assert payload["certificate"]["passed"] is True
        assert set(payload["certificate"]["residuals"]) == {
            "gamma_hermiticity_residual",
            "min_eig_gap",
            "stationarity_residual",
        }
        assert payload["mirror"]["a"] == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert "iterations" not in payload

    def test_iterative_payload_reports_iterations(self):
        rng = np.random.default_rng(8)
        w = risk_operators(
            modified_costs(minimum_error_costs(3, 3), trine_leak_confusion(0.1)),
            random_ensemble(3, 3, rng),
            "modified",
        )
        result = iterative_solve(w)
        payload = result_to_json(result)
        assert payload["iterations"] == result.iterations >= 1
        assert "mirror" not in payload

    def test_certificate_json(self):
        w = risk_operators(minimum_error_costs(3, 3), trine_ensemble())
        report = certify(trine_povm(), w, 1e-8)
        payload = certificate_to_json(report)
        assert payload["passed"] is True
        assert payload["tol"] == 1e-8
        assert json.loads(dump_json(payload)) == payload

    def test_dump_json_floats_round_trip(self):
        value = -2.0 / 3.0
        assert json.loads(dump_json({"x": value}))["x"] == value
