import csv
import io
import json
import subprocess
import sys

import pytest

from sicmeter import cli, experiments


def run_cli(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def run_json(args, capsys):
    code, out, err = run_cli([*args, "--format", "json"], capsys)
    assert code == 0, err
    return json.loads(out)


def test_measure_eigenstate(capsys):
    data = run_json(["measure", "--s", "0,0,1", "--m", "0,0,1"], capsys)
    col = {name: i for i, name in enumerate(data["columns"])}
    plus, minus = data["rows"]
    assert plus[col["beta"]] == 1
    assert plus[col["probability"]] == pytest.approx(1.0, abs=1e-12)
    assert [plus[col[k]] for k in ("post_sx", "post_sy", "post_sz")] == pytest.approx([0, 0, 1], abs=1e-12)
    assert minus[col["probability"]] == pytest.approx(0.0, abs=1e-12)
    assert minus[col["post_sx"]] is None
    assert data["seed"] == experiments.sampling.DEFAULT_SEED
    assert data["inputs"]["ordering"] == "deglex-v1+meter3"


def test_entropy_one_bit(capsys):
    data = run_json(["entropy", "--s", "0,0,1", "--m", "1,0,0"], capsys)
    assert data["summary"]["delta_h2"] == pytest.approx(1.0, abs=1e-12)


def test_chsh_tsirelson(capsys):
    data = run_json(["chsh", "--settings", "tsirelson"], capsys)
    assert data["summary"]["chsh"] == pytest.approx(2.8284271247461903, abs=1e-6)
    assert data["rows"][-1][2] == pytest.approx(data["summary"]["chsh"], abs=1e-9)
    assert data["ok"]


def test_axis_names_and_sic_state(capsys):
    data = run_json(["measure", "--s", "0.3,0.25,0.25,0.2", "--m", "-x"], capsys)
    assert data["inputs"]["m"] == [-1.0, 0.0, 0.0]
    assert data["inputs"]["s"] == pytest.approx([0.1 * 3**0.5, 0.1 * 3**0.5, 0.0], abs=1e-12)
    data = run_json(["measure", "--s", "-0.5,0,0.5", "--m", "-z"], capsys)
    assert data["inputs"]["s"] == [-0.5, 0.0, 0.5]


def test_csv_output_is_self_describing(capsys):
    code, out, _ = run_cli(["measure", "--s", "z", "--m", "x"], capsys)
    assert code == 0
    lines = out.splitlines()
    header = [line for line in lines if line.startswith("# ")]
    assert any(line.startswith("# seed: ") for line in header)
    assert lines[-1].startswith("# duration_s: ")
    table = list(csv.reader(io.StringIO("\n".join(l for l in lines if not l.startswith("#")))))
    assert table[0][0] == "beta"
    assert float(table[1][1]) == 0.5


def test_csv_uses_round_trip_precision(capsys):
    code, out, _ = run_cli(["measure", "--s", "0.1,0.2,0.3", "--m", "z"], capsys)
    assert code == 0
    body = [l for l in out.splitlines() if not l.startswith("#")][1:]
    prob = body[0].split(",")[1]
    assert float(prob) == pytest.approx(0.5 * (1 + 0.3), abs=1e-12)
    assert format(float(prob), ".17g") == prob


def test_oracle_diff_small(capsys):
    data = run_json(["oracle-diff", "--samples", "50"], capsys)
    assert {r[0] for r in data["rows"]} == {"states", "channels", "statistics", "collapse"}
    assert all(r[1] < 1e-9 for r in data["rows"])


def test_oracle_diff_zero_samples_is_usage_error(capsys):
    code, out, err = run_cli(["oracle-diff", "--samples", "0"], capsys)
    assert code == cli.EXIT_USAGE
    assert out == ""
    assert json.loads(err)["error"] == "config"


def test_oracle_diff_is_repeatable(capsys):
    first = run_json(["oracle-diff", "--samples", "30", "--seed", "7"], capsys)
    second = run_json(["oracle-diff", "--samples", "30", "--seed", "7"], capsys)
    assert first["rows"] == second["rows"]


@pytest.mark.parametrize(
    "args",
    [
        ["measure", "--s", "1,1,0"],
        ["measure", "--m", "0,0,2"],
        ["measure", "--s", "1,2"],
        ["measure", "--xyz", "1,0"],
        ["nonsense"],
        ["measure", "--format", "xml"],
    ],
)
def test_bad_input_exits_with_usage_code(args, capsys):
    code, _, err = run_cli(args, capsys)
    assert code == cli.EXIT_USAGE
    record = json.loads(err)
    assert set(record) >= {"error", "message"}


def test_missing_config_file_is_io_error(tmp_path, capsys):
    code, _, err = run_cli(["--config", str(tmp_path / "absent.cfg")], capsys)
    assert code == cli.EXIT_IO
    assert json.loads(err)["error"] == "io"


def test_unwritable_output_is_io_error(tmp_path, capsys):
    code, _, err = run_cli(["measure", "--out", str(tmp_path / "no" / "such" / "file.csv")], capsys)
    assert code == cli.EXIT_IO


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# entropy run\nexperiment = entropy\ns = 0,0,1\nm = 0,0,1\nseed = 5\n")
    data = run_json(["--config", str(cfg)], capsys)
    assert data["summary"]["delta_h2"] == pytest.approx(0.0, abs=1e-12)
    assert data["seed"] == 5
    data = run_json(["--config", str(cfg), "--m", "1,0,0", "--seed", "9"], capsys)
    assert data["summary"]["delta_h2"] == pytest.approx(1.0, abs=1e-12)
    assert data["seed"] == 9


def test_config_accepts_dashed_keys(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("experiment = chain\nchain-len = 3\nreset-meter = true\n")
    data = run_json(["--config", str(cfg)], capsys)
    assert data["inputs"]["chain_len"] == 3


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("experiment = measure\ncolour = blue\n")
    code, _, err = run_cli(["--config", str(cfg)], capsys)
    assert code == cli.EXIT_USAGE
    assert "colour" in json.loads(err)["message"]


def test_invariant_failure_exit_code(monkeypatch, capsys):
    def broken(cfg):
        rec = experiments.run_measure(cfg)
        rec.ok = False
        rec.failure = {"offending_samples": {"s": [0, 0, 1]}}
        return rec

    monkeypatch.setitem(experiments.RUNNERS, "measure", broken)
    code, out, err = run_cli(["measure"], capsys)
    assert code == cli.EXIT_INVARIANT
    assert json.loads(err)["details"] == {"offending_samples": {"s": [0, 0, 1]}}


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sicmeter", "entropy", "--s", "z", "--m", "x", "--format", "json"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["summary"]["delta_h2"] == pytest.approx(1.0)
