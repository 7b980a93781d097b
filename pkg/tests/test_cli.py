import json
from pathlib import Path

import pytest

from bfdcqo import HuboHamiltonian, ground_states
from bfdcqo.cdsynth import CdProgram
from bfdcqo.cli import main
from bfdcqo.transpile import lower


def write_manifest(path: Path, body: str) -> Path:
    path.write_text(body)
    return path


@pytest.fixture
def sk8(tmp_path, capsys):
    assert main(["build", "sk", "--n", "8", "--seed", "2", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    return tmp_path / "sk-8-s2.hubo.json"


def test_build_families(tmp_path, capsys):
    assert main(["build", "protein", "GYDPETGTWG", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "qubits: 22" in out and "pauli_terms: 589" in out and "interaction_qubits: 9" in out
    assert (tmp_path / "protein-GYDPETGTWG.meta.json").exists()

    assert main(["build", "max4sat", "--n", "16", "--seed", "1", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "clauses: 155" in out
    cnf = tmp_path / "max4sat-16-s1.cnf"
    assert cnf.read_text().startswith("p cnf 16 155")

    assert main(["build", "max4sat", "--cnf", str(cnf), "--out", str(tmp_path), "--name", "again"]) == 0
    a = json.loads((tmp_path / "max4sat-16-s1.hubo.json").read_text())
    assert json.loads((tmp_path / "again.hubo.json").read_text()) == a

    assert main(["build", "sk", "--n", "36", "--out", str(tmp_path)]) == 0
    assert "pauli_terms: 666" in capsys.readouterr().out


def test_build_uses_output_root_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BFDCQO_OUTPUT_ROOT", str(tmp_path))
    assert main(["build", "sk", "--n", "4"]) == 0
    assert (tmp_path / "sk-4-s0.hubo.json").exists()


def test_oracle_command(sk8, tmp_path, capsys):
    assert main(["oracle", str(sk8), "--out", str(tmp_path / "o")]) == 0
    data = json.loads((tmp_path / "o" / "oracle.json").read_text())
    e0, states = ground_states(HuboHamiltonian.from_json(sk8))
    assert data["ground_energy"] == e0
    assert data["ground_states"] == states
    rows = (tmp_path / "o" / "spectrum.csv").read_text().splitlines()
    assert rows[0] == "energy,degeneracy"
    assert sum(int(r.split(",")[1]) for r in rows[1:]) == 256


def test_run_report_postprocess_lower(sk8, tmp_path, capsys):
    m = write_manifest(
        tmp_path / "run.toml",
        f"""
instance = "{sk8.name}"
output = "out"
seed = 3
iterations = 4
oracle = true

[cvar]
shots = 400

[pruning]
mode = "soft"
""",
    )
    assert main(["run", str(m)]) == 0
    out = capsys.readouterr().out
    assert "optimal found = true" in out
    run_dir = tmp_path / "out"
    result = json.loads((run_dir / "result.json").read_text())
    assert len(result["iterations"]) == 4
    assert result["summary"]["pruning_mode"] == "soft"
    assert result["summary"]["theta_cutoff"] == 0.05
    assert sorted(p.name for p in (run_dir / "histograms").iterdir()) == [f"iter_{i:02d}.csv" for i in range(4)]
    assert json.loads((run_dir / "samples.json").read_text())["shots"] == 1600

    program = run_dir / "programs" / "iter_00.json"
    prog = CdProgram.from_dict(json.loads(program.read_text()))
    assert prog.depth == result["iterations"][0]["pruning"]["retained"]
    assert main(["lower", str(program), "--out", str(tmp_path / "gates.json")]) == 0
    gates = json.loads((tmp_path / "gates.json").read_text())
    assert sum(g["gate"] == "zz" for g in gates) == result["iterations"][0]["zz_count"] == lower(prog).zz_count
    assert f"zz: {lower(prog).zz_count}" in capsys.readouterr().out

    assert main(["postprocess", str(run_dir / "samples.json"), str(sk8), "--out", str(tmp_path / "pp.json")]) == 0
    pp = json.loads((tmp_path / "pp.json").read_text())
    assert pp["energy"] <= pp["input_best_energy"]
    assert "locally_optimal: true" in capsys.readouterr().out

    assert main(["report", str(run_dir), "--csv", str(tmp_path / "r.csv")]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0].split()[0] == "run"
    assert "*" in table.splitlines()[1]
    csv_rows = (tmp_path / "r.csv").read_text().splitlines()
    assert csv_rows[0].startswith("run,family,qubits")
    assert csv_rows[1].endswith(",True")


def test_run_from_problem_table_is_deterministic(tmp_path, capsys):
    m = write_manifest(
        tmp_path / "run.json",
        json.dumps({"problem": {"family": "max4sat", "n": 8, "seed": 1}, "iterations": 2, "cvar": {"n_shots": 200}, "output": "a"}),
    )
    assert main(["run", str(m)]) == 0
    first = (tmp_path / "a" / "result.json").read_bytes()
    assert main(["run", str(m)]) == 0
    assert (tmp_path / "a" / "result.json").read_bytes() == first


def test_protein_run_reports_fold(tmp_path, capsys):
    table = tmp_path / "stub.csv"
    rows = ["res1,res2,energy"] + [f"{a},{b},-1.5" for a, b in [("A", "A"), ("A", "G"), ("G", "G"), ("A", "W"), ("G", "W"), ("W", "W")]]
    table.write_text("\n".join(rows) + "\n")
    m = write_manifest(
        tmp_path / "p.toml",
        """
output = "prot"
iterations = 2
[problem]
family = "protein"
sequence = "AGWAGW"
table = "stub.csv"
[cvar]
shots = 300
""",
    )
    assert main(["run", str(m)]) == 0
    summary = json.loads((tmp_path / "prot" / "result.json").read_text())["summary"]
    assert summary["fold"]["valid"]
    assert len(summary["fold"]["turns"]) == 5
    assert summary["theta_cutoff"] == 0.006


@pytest.mark.parametrize(
    "argv_builder, code",
    [
        (lambda p: ["report"], 2),
        (lambda p: ["build", "protein", "GYBX", "--out", str(p)], 2),
        (lambda p: ["build", "sk", "--out", str(p)], 2),
        (lambda p: ["build", "tsp"], 2),
        (lambda p: ["oracle", str(p / "missing.json")], 2),
    ],
)
def test_usage_errors(tmp_path, capsys, argv_builder, code):
    assert main(argv_builder(tmp_path)) == code


def test_manifest_errors(tmp_path, capsys):
    bad = write_manifest(tmp_path / "bad.toml", 'instance = "x.json"\ncolour = "red"\n')
    assert main(["run", str(bad)]) == 2
    both = write_manifest(tmp_path / "both.json", json.dumps({"instance": "x", "problem": {"family": "sk"}}))
    assert main(["run", str(both)]) == 2
    broken = write_manifest(tmp_path / "broken.toml", "instance = \n")
    assert main(["run", str(broken)]) == 2
    assert "invalid input" in capsys.readouterr().err


def test_capacity_error_exit_code(tmp_path, capsys):
    m = write_manifest(tmp_path / "big.json", json.dumps({"problem": {"family": "sk", "n": 30}, "iterations": 1}))
    assert main(["run", str(m)]) == 3
    assert "cap" in capsys.readouterr().err


def test_oracle_capacity_exit_code(tmp_path, capsys):
    assert main(["build", "sk", "--n", "30", "--out", str(tmp_path)]) == 0
    assert main(["oracle", str(tmp_path / "sk-30-s0.hubo.json")]) == 3
