import copy
import json
import subprocess
import sys

import pytest

from renyi_cstar.cli import main
from renyi_cstar.decomp import SearchBudget
from renyi_cstar.engine import entropy_table
from renyi_cstar.errors import ProblemError
from renyi_cstar.problem import BUNDLED, REPORT_COLUMNS, load_problem, parse_csv, parse_problem, write_csv, write_text

QUBIT = {
    "algebra": {"block_dims": [2]},
    "dynamics": {"kind": "hamiltonian", "hamiltonian": [[0, 0], [0, 1]]},
    "beta": 1.0,
    "state": {"gibbs_weights": [1.0]},
    "alphas": [0.5, 2.0],
    "references": ["full", "invariant", "kms"],
    "search": {"restarts": 4, "iterations": 100, "seed": 42},
}


def write_problem(tmp_path, data, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def with_changes(**changes):
    data = copy.deepcopy(QUBIT)
    for dotted, value in changes.items():
        node = data
        *head, last = dotted.split("__")
        for k in head:
            node = node[k]
        if value is None:
            node.pop(last, None)
        else:
            node[last] = value
    return data


# ---------------------------------------------------------------- parsing


def test_parse_qubit():
    p = parse_problem(QUBIT)
    assert p.algebra.block_dims == (2,)
    assert p.budget == SearchBudget(restarts=4, iterations=100, seed=42)
    assert p.references == ("full", "invariant", "kms")


def test_parse_complex_pairs():
    data = with_changes(state={"matrix": [[[0.5, 0], [0, -0.5]], [[0, 0.5], [0.5, 0]]]})
    p = parse_problem(data)
    assert p.state.matrix[0, 1] == -0.5j


@pytest.mark.parametrize(
    "changes,path",
    [
        ({"state": {"matrix": [[[1, 0], [0, 0]]]}}, "state.matrix"),
        ({"state": {"matrix": [[[1, 0], [0, 0]], [[0, 0]]]}}, "state.matrix"),
        ({"state": {"matrix": [[[1, 0], [0, 0]], [[0, 0], [0.5, 0]]]}}, "state.matrix"),
        ({"state": {"matrix": [[[1, 0, 3], [0, 0]], [[0, 0], [0, 0]]]}}, "state.matrix[0][0]"),
        ({"algebra__block_dims": [0]}, "algebra.block_dims[0]"),
        ({"alphas": [-1]}, "alphas[0]"),
        ({"alphas": []}, "alphas"),
        ({"references": ["bogus"]}, "references[0]"),
        ({"dynamics__kind": "flow"}, "dynamics.kind"),
        ({"dynamics__hamiltonian": [[0, 1], [0, 0]]}, "dynamics"),
        ({"search__restarts": 0}, "search.restarts"),
        ({"search__extra": 1}, "search"),
        ({"beta": "hot"}, "beta"),
        ({"state": {"gibbs_weights": [0.5, 0.5]}}, "state.gibbs_weights"),
        ({"state": {}}, "state"),
    ],
)
def test_parse_errors_name_the_field(changes, path):
    with pytest.raises(ProblemError) as info:
        parse_problem(with_changes(**changes))
    assert info.value.path == path


def test_kms_reference_needs_beta():
    data = with_changes(beta=None, state={"matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]})
    with pytest.raises(ProblemError) as info:
        parse_problem(data)
    assert info.value.path == "references[2]"


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_problems_load(name):
    assert load_problem(name).name == name


def test_unknown_problem():
    with pytest.raises(ProblemError):
        load_problem("no_such_problem")


# ---------------------------------------------------------------- reports


def test_csv_roundtrip_is_exact():
    problem = parse_problem(QUBIT)
    text = write_csv(entropy_table(problem))
    parsed = parse_csv(text)
    assert text.splitlines()[0] == ",".join(REPORT_COLUMNS)
    assert len(parsed.rows) == 6
    again = "\n".join(
        [",".join(REPORT_COLUMNS)]
        + [
            ",".join(
                [
                    r["reference"],
                    format(r["alpha"], ".12g"),
                    format(r["value_bits"], ".12g"),
                    r["method"],
                    str(r["decomposition_size"]),
                    str(r["converged"]).lower(),
                    str(r["seed"]),
                ]
            )
            for r in parsed.rows
        ]
    )
    assert again + "\n" == text


def test_text_report_has_same_rows():
    problem = parse_problem(QUBIT)
    reports = entropy_table(problem)
    lines = write_text(reports).splitlines()
    assert lines[0].split() == list(REPORT_COLUMNS)
    assert len(lines) == 1 + len(reports)


# ---------------------------------------------------------------- commands


def test_entropy_qubit_rows(capsys):
    assert main(["entropy", "qubit_gibbs"]) == 0
    rows = parse_csv(capsys.readouterr().out).rows
    for ref in ("full", "invariant", "kms"):
        assert len([r for r in rows if r["reference"] == ref]) == 2


def test_entropy_pure_state_is_zero(capsys):
    assert main(["entropy", "pure_state"]) == 0
    assert all(r["value_bits"] == 0.0 for r in parse_csv(capsys.readouterr().out).rows)


def test_entropy_malformed_matrix(tmp_path, capsys):
    data = with_changes(state={"matrix": [[[1, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]]]})
    assert main(["entropy", write_problem(tmp_path, data)]) == 2
    assert "state.matrix" in capsys.readouterr().err


def test_entropy_unfit_reference_is_input_error(tmp_path, capsys):
    data = with_changes(state={"matrix": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]}, references=["invariant"])
    assert main(["entropy", write_problem(tmp_path, data)]) == 2
    assert "references" in capsys.readouterr().err


def test_entropy_writes_file_and_verification(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["entropy", "m2m2_gibbs", "-o", str(out), "--verify"]) == 0
    parsed = parse_csv(out.read_text())
    assert parsed.verification and all(v["status"] != "fail" for v in parsed.verification)


def test_seed_flag_is_recorded(capsys):
    assert main(["--seed", "7", "entropy", "qubit_gibbs"]) == 0
    assert {r["seed"] for r in parse_csv(capsys.readouterr().out).rows} == {7}


def test_entropy_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["entropy", "degenerate_h", "-o", str(a)]) == 0
    assert main(["entropy", "degenerate_h", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("name", BUNDLED)
def test_verify_bundled(name, capsys):
    assert main(["verify", name]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_verify_reports_skip_reason(tmp_path, capsys):
    data = with_changes(
        state={"matrix": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]}, references=["full"], beta=None
    )
    assert main(["verify", write_problem(tmp_path, data)]) == 0
    assert "SKIP invariant_equals_full" in capsys.readouterr().out


def test_verify_corrupted_expected_value(tmp_path, capsys):
    data = copy.deepcopy(QUBIT)
    data["expected"] = [{"reference": "kms", "alpha": 2.0, "value": 0.25}]
    assert main(["verify", write_problem(tmp_path, data)]) == 1
    assert "FAIL expected_value" in capsys.readouterr().out


def test_classical_alpha(capsys):
    assert main(["classical", "--dist", "0.5,0.25,0.25", "--alpha", "2"]) == 0
    assert "1.415037499279" in capsys.readouterr().out


def test_classical_campbell(capsys):
    assert main(["classical", "--dist", "0.25,0.25,0.25,0.25", "--beta", "1"]) == 0
    out = capsys.readouterr().out
    assert "campbell_lengths 2,2,2,2" in out
    assert "margin=0.000000000000 holds" in out


@pytest.mark.parametrize("dist", ["0.6,0.5", "a,b", "-0.5,1.5"])
def test_classical_invalid(dist, capsys):
    assert main(["classical", f"--dist={dist}"]) == 2


def test_classical_invalid_beta(capsys):
    assert main(["classical", "--dist", "0.5,0.5", "--beta", "-1"]) == 2


def test_help_documents_columns(capsys):
    with pytest.raises(SystemExit):
        main(["entropy", "--help"])
    assert ", ".join(REPORT_COLUMNS) in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "renyi_cstar", "classical", "--dist", "0.5,0.5", "--alpha", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and "1.000000000000" in proc.stdout


def test_budget_flags_override_problem(capsys):
    assert main(["--restarts", "2", "--iterations", "5", "--m-cap", "5", "entropy", "qubit_gibbs"]) == 0
    rows = parse_csv(capsys.readouterr().out).rows
    assert len(rows) == 6


@pytest.mark.parametrize("flags", [["--restarts", "0"], ["--iterations", "-1"], ["--m-cap", "0"], ["--seed", "-3"]])
def test_budget_flags_validated(flags, capsys):
    assert main([*flags, "entropy", "qubit_gibbs"]) == 2
    assert "must be >=" in capsys.readouterr().err
