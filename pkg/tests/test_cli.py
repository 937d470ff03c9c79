"""Command-line interface, exercised in process through main(argv)."""

import csv
import json
import math

import pytest

from noisy_discrimination import two_state_noisy
from noisy_discrimination.cli import THREADS_ENV, main
from noisy_discrimination.serialization import build_problem


TRINE = "problems/trine.json"
SWEEP = "problems/trine_leak_sweep.json"


def write_doc(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def overlap_doc(**overrides):
    r = 1.0 / math.sqrt(2.0)
    doc = {
        "dimension": 2,
        "states": [
            {"prior": 0.5, "vector": [1, 0]},
            {"prior": 0.5, "vector": [r, r]},
        ],
    }
    doc.update(overrides)
    return doc


def qutrit_doc(**overrides):
    doc = {
        "dimension": 3,
        "states": [
            {"prior": 0.4, "vector": [1, 0, 0]},
            {"prior": 0.3, "vector": [0.6, 0.8, 0]},
            {"prior": 0.3, "vector": [0.0, 0.6, 0.8]},
        ],
    }
    doc.update(overrides)
    return doc


class TestSolve:
    def test_trine(self, capsys):
        assert main(["solve", "--input", TRINE]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["cost"] == pytest.approx(-2.0 / 3.0, abs=1e-9)
        assert payload["strategy_kind"] == "mirror_symmetric"
        assert payload["certificate"]["passed"] is True

    def test_flags_override_file_options(self, tmp_path, capsys):
        doc = overlap_doc(options={"tol": 1e-6})
        path = write_doc(tmp_path, "p.json", doc)
        assert main(["solve", "--input", path, "--tol", "1e-10"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["certificate"]["tol"] == 1e-10

    def test_invalid_priors_exit_1(self, tmp_path, capsys):
        doc = overlap_doc()
        doc["states"][0]["prior"] = 0.4
        path = write_doc(tmp_path, "bad.json", doc)
        assert main(["solve", "--input", path]) == 1
        err = capsys.readouterr().err
        assert "$.states[*].prior" in err

    def test_malformed_json_exit_1(self, tmp_path, capsys):
        path = tmp_path / "garbage.json"
        path.write_text("{not json")
        assert main(["solve", "--input", str(path)]) == 1
        assert "parse error" in capsys.readouterr().err

    def test_missing_file_exit_1(self, capsys):
        assert main(["solve", "--input", "no/such/file.json"]) == 1
        assert "invalid input" in capsys.readouterr().err

    def test_iteration_budget_exhausted_exit_2(self, tmp_path, capsys):
        path = write_doc(tmp_path, "q3.json", qutrit_doc())
        code = main(["solve", "--input", path, "--max-iter", "2", "--tol", "1e-12"])
        captured = capsys.readouterr()
        assert code == 2
        assert "convergence failure" in captured.err
        # the best iterate still comes out on stdout as a full result
        payload = json.loads(captured.out)
        assert payload["certificate"]["passed"] is False
        assert len(payload["povm"]["operators"]) == 3

    def test_argparse_problems_exit_1(self, capsys):
        assert main(["solve"]) == 1
        assert main(["frobnicate"]) == 1
        assert main([]) == 1
        capsys.readouterr()


class TestSweep:
    def run_sweep(self, tmp_path, capsys, steps="4", extra=()):
        out = str(tmp_path / "sweep.csv")
        code = main([
            "sweep", "--input", SWEEP, "--param", "q",
            "--from", "0", "--to", "0.3", "--steps", steps,
            "--output", out, *extra,
        ])
        captured = capsys.readouterr()
        return code, out, captured

    def test_header_and_values(self, tmp_path, capsys):
        code, out, captured = self.run_sweep(tmp_path, capsys)
        assert code == 0
        assert "wrote 4 rows" in captured.err
        with open(out, newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["q", "cost", "error_prob", "a", "theta", "strategy_kind"]
        assert len(rows) == 5
        clean = rows[1]
        assert float(clean[0]) == 0.0
        assert float(clean[1]) == pytest.approx(-2.0 / 3.0, abs=1e-9)
        assert float(clean[2]) == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert float(clean[3]) == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert float(clean[4]) == pytest.approx(math.pi / 3.0, abs=1e-9)
        assert clean[5] == "mirror_symmetric"
        # past the boundary the first operator is gone
        last = rows[-1]
        assert float(last[0]) == pytest.approx(0.3)
        assert float(last[3]) == 0.0

    def test_cells_are_full_precision(self, tmp_path, capsys):
        code, out, _ = self.run_sweep(tmp_path, capsys, steps="3")
        with open(out, newline="") as handle:
            rows = list(csv.reader(handle))
        for row in rows[1:]:
            for cell in row[:5]:
                if cell:
                    assert repr(float(cell)) == cell

    def test_single_step(self, tmp_path, capsys):
        code, out, _ = self.run_sweep(tmp_path, capsys, steps="1")
        assert code == 0
        with open(out, newline="") as handle:
            assert len(list(csv.reader(handle))) == 2

    def test_zero_steps_rejected(self, tmp_path, capsys):
        code, _, captured = self.run_sweep(tmp_path, capsys, steps="0")
        assert code == 1
        assert "--steps" in captured.err

    def test_untemplated_input_rejected(self, tmp_path, capsys):
        out = str(tmp_path / "x.csv")
        code = main([
            "sweep", "--input", TRINE, "--param", "q",
            "--from", "0", "--to", "0.3", "--steps", "2", "--output", out,
        ])
        assert code == 1
        assert "nothing to sweep" in capsys.readouterr().err

    def test_plot_renders_png(self, tmp_path, capsys):
        code, out, captured = self.run_sweep(
            tmp_path, capsys, steps="3", extra=("--plot",)
        )
        assert code == 0
        png = out[:-4] + ".png"
        assert f"wrote figure to {png}" in captured.err
        with open(png, "rb") as handle:
            assert handle.read(8) == b"\x89PNG\r\n\x1a\n"

    def test_thread_env_controls_workers(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "2")
        code, out, _ = self.run_sweep(tmp_path, capsys)
        assert code == 0
        monkeypatch.setenv(THREADS_ENV, "1")
        code, serial_out, _ = self.run_sweep(tmp_path, capsys)
        assert code == 0
        with open(out, newline="") as a, open(serial_out, newline="") as b:
            assert a.read() == b.read()

    @pytest.mark.parametrize("value", ["0", "-3", "lots"])
    def test_bad_thread_env(self, tmp_path, capsys, monkeypatch, value):
        monkeypatch.setenv(THREADS_ENV, value)
        code, _, captured = self.run_sweep(tmp_path, capsys)
        assert code == 1
        assert THREADS_ENV in captured.err


class TestCertify:
    def solve_to_file(self, tmp_path, capsys, problem=TRINE):
        assert main(["solve", "--input", problem]) == 0
        out = tmp_path / "result.json"
        out.write_text(capsys.readouterr().out)
        return str(out)

    def test_round_trip_passes(self, tmp_path, capsys):
        result = self.solve_to_file(tmp_path, capsys)
        assert main(["certify", "--input", TRINE, "--povm", result]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["passed"] is True
        assert payload["cost"] == pytest.approx(-2.0 / 3.0, abs=1e-9)

    def test_suboptimal_povm_fails(self, tmp_path, capsys):
        povm = write_doc(tmp_path, "basis.json", {
            "dimension": 2,
            "operators": [
                [[1, 0], [0, 0]],
                [[0, 0], [0, 1]],
                [[0, 0], [0, 0]],
            ],
        })
        assert main(["certify", "--input", TRINE, "--povm", povm]) == 1
        payload = json.loads(capsys.readouterr().out)
        assert payload["passed"] is False
        assert payload["residuals"]["min_eig_gap"] < -1e-3

    def test_dimension_mismatch_exit_1(self, tmp_path, capsys):
        povm = write_doc(tmp_path, "wrongdim.json", {
            "dimension": 3,
            "operators": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]],
        })
        assert main(["certify", "--input", TRINE, "--povm", povm]) == 1
        assert capsys.readouterr().err != ""

    def test_assignment_metadata_respected(self, tmp_path, capsys):
        # permuted result files certify because the wiring rides along
        result = self.solve_to_file(tmp_path, capsys)
        raw = json.loads(open(result).read())
        ops = raw["povm"]["operators"]
        raw["povm"]["operators"] = [ops[1], ops[2], ops[0]]
        raw["assignment"] = [1, 2, 0]
        permuted = write_doc(tmp_path, "permuted.json", raw)
        assert main(["certify", "--input", TRINE, "--povm", permuted]) == 0
        assert json.loads(capsys.readouterr().out)["passed"] is True


class TestOracle:
    def test_grid_two_state_matches_closed_form(self, tmp_path, capsys):
        path = write_doc(tmp_path, "pair.json", overlap_doc())
        assert main([
            "oracle", "--input", path, "--mode", "grid", "--resolution", "1e-3",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        problem = build_problem(overlap_doc())
        ref = two_state_noisy(problem.ensemble, problem.costs, problem.confusion)
        assert abs(payload["best_cost"] - ref.cost) < 1e-5
        assert payload["best_strategy_description"].keys() == {
            "polar", "azimuth", "swapped",
        }

    def test_grid_mirror_triple(self, capsys):
        assert main([
            "oracle", "--input", TRINE, "--mode", "grid", "--resolution", "1e-4",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["best_cost"] == pytest.approx(-2.0 / 3.0, abs=1e-7)
        assert payload["best_strategy_description"]["theta"] == pytest.approx(
            math.pi / 3.0, abs=2e-4
        )

    def test_grid_rejects_general_qutrit(self, tmp_path, capsys):
        path = write_doc(tmp_path, "q3.json", qutrit_doc())
        assert main(["oracle", "--input", path, "--mode", "grid"]) == 1
        assert "--mode random" in capsys.readouterr().err

    def test_random_is_deterministic(self, capsys):
        args = [
            "oracle", "--input", TRINE, "--mode", "random",
            "--samples", "2000", "--seed", "5",
        ]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first
        payload = json.loads(first)
        assert payload["best_cost"] >= -2.0 / 3.0 - 1e-9
        assert payload["samples_or_points"] == 2000

    def test_simulate_reports_estimate(self, capsys):
        args = [
            "oracle", "--input", TRINE, "--mode", "simulate",
            "--samples", "40000", "--seed", "1",
        ]
        assert main(args) == 0
        first = capsys.readouterr().out
        payload = json.loads(first)
        assert payload["trials"] == 40000 and payload["seed"] == 1
        assert abs(payload["mean_cost"] - (-2.0 / 3.0)) < 4 * payload["standard_error"]
        assert main(args) == 0
        assert capsys.readouterr().out == first

    def test_simulate_seed_defaults_to_file_options(self, tmp_path, capsys):
        doc = overlap_doc(options={"seed": 77})
        path = write_doc(tmp_path, "seeded.json", doc)
        args = ["oracle", "--input", path, "--mode", "simulate", "--samples", "1000"]
        assert main(args) == 0
        assert json.loads(capsys.readouterr().out)["seed"] == 77

    def test_bad_sample_count(self, capsys):
        assert main([
            "oracle", "--input", TRINE, "--mode", "random", "--samples", "0",
        ]) == 1
        assert "--samples" in capsys.readouterr().err
