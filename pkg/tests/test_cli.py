import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from bayesphase.cli import main, parse_int_range

PI = np.pi


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_mmse_noon3_flat(capsys):
    code, out, _ = run(capsys, "mmse", "--prior", "flat", "--state", "noon:3", "--format", "json")
    assert code == 0
    assert json.loads(out)["mmse"] == pytest.approx(PI ** 2 / 3 - 1 / 36, abs=1e-12)


def test_mmse_text_summary(capsys):
    code, out, _ = run(capsys, "mmse", "--prior", "trunc:0..3.14159265", "--state", "noon:1")
    assert code == 0
    value = float(out.split("mmse")[1].split()[0])
    assert value == pytest.approx(0.572467, abs=1e-6)
    assert "B operator" in out and "outcomes" in out


def test_mmse_single_fock(capsys):
    code, out, _ = run(capsys, "mmse", "--state", "coeffs:[1,0;0,0]", "--format", "csv")
    assert code == 0
    assert float(rows(out)[0]["re"]) == pytest.approx(PI ** 2 / 3, abs=1e-12)


@pytest.mark.parametrize("argv", [
    ["mmse", "--prior", "gauss"],
    ["mmse", "--state", "noon:0"],
    ["optimize", "--n", "0..2"],
    ["noon-curve", "--m", "7"],
])
def test_parse_failures_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_argparse_usage_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_numerical_failure_exit_3(capsys, monkeypatch):
    from bayesphase import cli
    from bayesphase.errors import DegeneratePosteriorError

    original = cli.build_parser

    def failing_parser():
        parser = original()

        def boom(args):
            raise DegeneratePosteriorError("zero evidence")

        parser._subparsers._group_actions[0].choices["mmse"].set_defaults(func=boom)
        return parser

    monkeypatch.setattr(cli, "build_parser", failing_parser)
    code, _, err = run(capsys, "mmse")
    assert code == 3 and "numerical failure" in err


def test_noon_curve(capsys):
    code, out, _ = run(capsys, "noon-curve", "--m", "0.1,2pi", "--n-max", "25")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["m", "n", "delta_trunc", "pipeline_delta"]
    for r in table:
        assert abs(float(r["delta_trunc"]) - float(r["pipeline_delta"])) < 1e-6
    narrow = [float(r["delta_trunc"]) for r in table if float(r["m"]) < 1]
    assert abs(int(np.argmin(narrow)) + 1 - 20) <= 2
    full = [r for r in table if float(r["m"]) > 6]
    for r in full:
        n = int(r["n"])
        assert float(r["delta_trunc"]) == pytest.approx(PI ** 2 / 3 - 1 / (4 * n * n), abs=1e-10)


def test_optimize_table_layout(capsys):
    code, out, _ = run(capsys, "optimize", "--prior", "trunc:0..pi", "--n", "1..2")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["n", "delta_opt", "converged", "a_0", "a_1", "a_2"]
    assert float(table[0]["delta_opt"]) == pytest.approx(0.572467, abs=1e-6)
    assert table[0]["a_2"] == ""
    assert float(table[1]["a_1"]) == pytest.approx(0.626595, abs=2e-5)


def test_optimize_phases_columns(capsys):
    code, out, _ = run(capsys, "optimize", "--n", "1", "--phases", "--restarts", "4")
    assert code == 0
    assert list(rows(out)[0]) == ["n", "delta_opt", "converged", "a_0", "a_1", "arg_0", "arg_1"]


def test_bs_optimize(capsys):
    code, out, _ = run(capsys, "bs-optimize", "--n", "1,10,100")
    assert code == 0
    table = rows(out)
    assert [int(r["n"]) for r in table] == [1, 10, 100]
    for r in table:
        assert float(r["tau_opt"]) == pytest.approx(0.5, abs=1e-3)
    assert float(table[0]["mmse"]) == pytest.approx(3.03987, abs=1e-5)


def test_adaptive_csv_and_tree(capsys, tmp_path):
    tree_path = tmp_path / "tree.json"
    code, out, _ = run(capsys, "adaptive", "--prior", "trunc:0..pi", "--depth", "2", "--compare",
                       "--grid", "1025", "--restarts", "4", "--tree-out", str(tree_path))
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["s", "nodes", "adaptive_mmse", "expected_mmse", "mmse_spread",
                              "single_shot_mmse"]
    assert float(table[0]["adaptive_mmse"]) == pytest.approx(float(table[0]["single_shot_mmse"]), abs=1e-6)
    assert float(table[0]["single_shot_mmse"]) == pytest.approx(0.572467, abs=1e-6)
    data = json.loads(tree_path.read_text())
    assert set(data["nodes"]) == {"", "1", "2"}


def test_adaptive_json(capsys):
    code, out, _ = run(capsys, "adaptive", "--depth", "1", "--format", "json", "--compare",
                       "--restarts", "3")
    assert code == 0
    data = json.loads(out)
    assert data["comparison"][0]["adaptive_mmse"] == pytest.approx(PI ** 2 / 3 - 0.25, abs=1e-9)


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"prior": "trunc:0..pi/2", "n": "1..2", "restarts": 4}))
    code, out, _ = run(capsys, "optimize", "--config", str(cfg))
    assert code == 0 and len(rows(out)) == 2
    code, out, _ = run(capsys, "optimize", "--config", str(cfg), "--n", "1")
    table = rows(out)
    assert len(table) == 1
    assert float(table[0]["delta_opt"]) == pytest.approx(0.104296, abs=1e-6)


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"depth": 3}))
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "--config", str(cfg)])
    assert exc.value.code == 2


def test_out_file_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["optimize", "--prior", "trunc:0..1", "--n", "1..3", "--seed", "5",
                     "--restarts", "5", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert capsys.readouterr().out == ""


def test_parse_int_range():
    assert parse_int_range("1..3,7") == [1, 2, 3, 7]
    assert parse_int_range(4) == [4]
    assert parse_int_range([2, 5]) == [2, 5]


def test_console_module_entry():
    proc = subprocess.run([sys.executable, "-m", "bayesphase", "mmse", "--state", "noon:1",
                           "--format", "json"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["mmse"] == pytest.approx(PI ** 2 / 3 - 0.25, abs=1e-12)
