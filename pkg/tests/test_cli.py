"""Command-line surface: subcommands, exit codes, report schema."""

from __future__ import annotations

import csv
import io
import json

import jsonschema
import pytest

from boxroots.cli import REPORT_SCHEMA, main

EXAMPLE4 = {
    "vars": ["x", "y", "z"],
    "equations": [
        "x - y + z",
        "y^2 + x + y + 2*z",
        "x^2 + y*z - 3*x - y + z",
    ],
    "box": [[-0.1, 0.1], [-0.1, 0.1], [-0.1, 0.1]],
}


@pytest.fixture
def example4_file(tmp_path):
    path = tmp_path / "example4.json"
    path.write_text(json.dumps(EXAMPLE4))
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestIsolate:
    def test_worked_example_certifies_one_box(self, capsys, example4_file):
        code, out, _ = run_cli(
            capsys, "isolate", example4_file, "--precision", "1e-6", "--format", "json"
        )
        assert code == 0
        report = json.loads(out)
        jsonschema.validate(report, REPORT_SCHEMA)
        assert len(report["result"]["certified"]) == 1
        box = report["result"]["certified"][0]
        assert all(lo <= 0.0 <= hi for lo, hi in box)
        assert report["result"]["suspected"] == []

    def test_empty_system(self, capsys, tmp_path):
        path = tmp_path / "none.json"
        path.write_text(
            json.dumps(
                {
                    "vars": ["x", "y"],
                    "equations": ["x^2 + 1", "y^2 + 1"],
                    "box": [[-1, 1], [-1, 1]],
                }
            )
        )
        code, out, _ = run_cli(capsys, "isolate", str(path))
        assert code == 0
        report = json.loads(out)
        assert report["result"]["certified"] == []
        assert report["result"]["refined"] == []

    def test_text_format(self, capsys, example4_file):
        code, out, _ = run_cli(capsys, "isolate", example4_file, "--format", "text")
        assert code == 0
        assert "certified: 1" in out

    def test_canonical_sort_order(self, capsys, tmp_path):
        path = tmp_path / "two.json"
        path.write_text(
            json.dumps(
                {
                    "vars": ["x"],
                    "equations": ["x^2 - 0.3"],
                    "box": [[-1, 1]],
                }
            )
        )
        code, out, _ = run_cli(capsys, "isolate", str(path), "--precision", "1e-8")
        report = json.loads(out)
        assert code == 0
        lows = [b[0][0] for b in report["result"]["certified"]]
        assert lows == sorted(lows)
        assert len(lows) == 2

    def test_input_error_exit_code(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"vars": ["x", "y"], "equations": ["x"]}))
        code, _, err = run_cli(capsys, "isolate", str(path))
        assert code == 1 and "error" in err

    def test_box_dimension_mismatch(self, capsys, example4_file):
        code, _, err = run_cli(capsys, "isolate", example4_file, "--box", "[[0,1]]")
        assert code == 1 and "dimensions" in err

    def test_missing_file(self, capsys):
        code, _, err = run_cli(capsys, "isolate", "/nonexistent/f.json")
        assert code == 1

    def test_truncation_exit_code(self, capsys, tmp_path):
        path = tmp_path / "multi.json"
        path.write_text(
            json.dumps(
                {
                    "vars": ["x", "y"],
                    "equations": ["x^2 - y", "x^2 + y"],
                    "box": [[-1, 1], [-1, 1]],
                }
            )
        )
        code, out, _ = run_cli(capsys, "isolate", str(path), "--max-boxes", "40")
        assert code == 2
        assert json.loads(out)["result"]["stats"]["incomplete"] is True

    def test_invert_dims_flag(self, capsys, tmp_path):
        path = tmp_path / "far.json"
        path.write_text(
            json.dumps(
                {
                    "vars": ["x"],
                    "equations": ["x - 2"],
                    "box": [[1, 4]],
                }
            )
        )
        code, out, _ = run_cli(
            capsys, "isolate", str(path), "--invert-dims", "1", "--box", "[[0.25, 1]]",
            "--precision", "1e-6",
        )
        assert code == 0
        report = json.loads(out)
        assert len(report["result"]["certified"]) == 1
        lo, hi = report["result"]["certified"][0][0]
        assert lo <= 0.5 <= hi


class TestGenerate:
    def test_generate_parses_back(self, capsys, tmp_path):
        out_path = tmp_path / "sys.json"
        code, _, _ = run_cli(
            capsys, "generate", "N2D5", "--seed", "1", "-o", str(out_path)
        )
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert len(payload["vars"]) == 2
        code2, out, _ = run_cli(
            capsys, "isolate", str(out_path), "--box", "[[-1,1],[-1,1]]",
            "--precision", "1e-3",
        )
        assert code2 in (0, 2)

    def test_generate_stdout_deterministic(self, capsys):
        code, out1, _ = run_cli(capsys, "generate", "N3D9", "--seed", "5")
        code, out2, _ = run_cli(capsys, "generate", "N3D9", "--seed", "5")
        assert out1 == out2
        payload = json.loads(out1)
        assert len(payload["vars"]) == 3

    def test_unknown_family(self, capsys):
        code, _, err = run_cli(capsys, "generate", "Q2D5")
        assert code == 1 and "family" in err


class TestSweep:
    def test_single_precision_row(self, capsys, example4_file):
        code, out, _ = run_cli(capsys, "sweep", example4_file, "--precisions", "1e-4")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["epsilon", "certified", "suspected", "refined", "time"]
        assert len(rows) == 2
        assert rows[1][1] == "1"

    def test_multi_precision_rows(self, capsys, example4_file):
        code, out, _ = run_cli(
            capsys, "sweep", example4_file, "--precisions", "1e-2,1e-4"
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert len(rows) == 3

    def test_infeasible_precision(self, capsys, example4_file):
        code, _, err = run_cli(capsys, "sweep", example4_file, "--precisions", "10")
        assert code == 1

    def test_bad_precision_list(self, capsys, example4_file):
        code, _, err = run_cli(capsys, "sweep", example4_file, "--precisions", "abc")
        assert code == 1


class TestCompareMK:
    def test_linear_system_both_methods(self, capsys, tmp_path):
        path = tmp_path / "lin.json"
        path.write_text(
            json.dumps(
                {
                    "vars": ["x", "y"],
                    "equations": ["x - 0.3", "x + y"],
                    "box": [[-1, 1], [-1, 1]],
                }
            )
        )
        code, out, _ = run_cli(capsys, "compare-mk", str(path), "--format", "json")
        assert code == 0
        rows = {r["method"]: r for r in json.loads(out)}
        assert rows["sm"]["certified"] == 1
        assert rows["mk"]["certified"] == 1

    def test_text_table(self, capsys, example4_file):
        code, out, _ = run_cli(
            capsys, "compare-mk", example4_file, "--precision", "1e-3", "--format", "text"
        )
        assert code == 0
        assert out.splitlines()[0] == "method,certified,suspected"


class TestShippedData:
    def test_elbow_file_parses(self):
        from importlib import resources

        from boxroots.systems import parse_system_json

        text = resources.files("boxroots").joinpath("data/elbow.json").read_text()
        system, box, extras = parse_system_json(text)
        assert system.n == 6
        assert box.bounds() == tuple(((0.0, 1.0),) * 6)
        assert extras["precision"] == 1e-6

    def test_sixrev_placeholder_has_no_coefficients(self):
        from importlib import resources

        payload = json.loads(
            resources.files("boxroots").joinpath("data/sixrev_placeholder.json").read_text()
        )
        assert payload["coefficients"] is None
