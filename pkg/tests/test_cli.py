import json

import pytest
from click.testing import CliRunner

from artifact.circuit import parse, serialize
from artifact.checks import single_gate_circuit
from artifact.cli import main
from artifact.experiment import read_csv


@pytest.fixture
def runner():
    return CliRunner()


def test_build_writes_artifacts_and_is_deterministic(runner, tmp_path):
    r = runner.invoke(main, ["build", "-R", "4", "-L", "0", "--out", str(tmp_path / "a")])
    assert r.exit_code == 0, r.output
    assert "N=10 depth=10" in r.output and "grid validation: ok" in r.output
    runner.invoke(main, ["build", "-R", "4", "-L", "0", "--out", str(tmp_path / "b")])
    for name in ("circuit.txt", "layout.csv", "decoder.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    c = parse((tmp_path / "a" / "circuit.txt").read_text())
    assert c.n == 10 and c.n_out == 2


def test_trial_and_replay(runner, tmp_path):
    faults = tmp_path / "f.txt"
    args = ["trial", "-R", "4", "-p", "0.05", "--seed", "3", "--index", "9"]
    a = runner.invoke(main, args + ["--save-faults", str(faults)])
    assert a.exit_code == 0, a.output
    assert a.output.startswith("trial=9 ")
    b = runner.invoke(main, args + ["--replay", str(faults)])
    assert b.output == a.output


def test_trial_rejects_bad_replay(runner, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("X t=999 q=0\n")
    r = runner.invoke(main, ["trial", "-R", "4", "--replay", str(bad)])
    assert r.exit_code == 2


def _sweep(runner, tmp_path, name, workers, p=(0.0, 0.05)):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps({"R": [4], "L": [0], "p": list(p), "trials": 300, "seed": 2}))
    out = tmp_path / f"{name}.csv"
    r = runner.invoke(main, ["sweep", "--config", str(cfg), "--workers", str(workers), "--out", str(out),
                             "--no-timing"])
    assert r.exit_code == 0, r.output
    return r, out


def test_sweep_is_reproducible_across_worker_counts(runner, tmp_path):
    r1, a = _sweep(runner, tmp_path, "one", 1)
    _, b = _sweep(runner, tmp_path, "two", 2)
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a.read_text())
    assert rows[0].p == 0.0 and rows[0].success_rate == 1.0 and rows[0].wall_time == 0.0
    assert rows[1].success_rate < 1.0
    assert rows[0].wilson_lo <= rows[0].success_rate <= rows[0].wilson_hi
    assert "wrote" in r1.output


@pytest.mark.parametrize("payload", [{"trials": 0}, {"p": [2.0]}, {"colour": "red"}, {"noise": "pink"}])
def test_sweep_config_errors_exit_2(runner, tmp_path, payload):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(payload))
    r = runner.invoke(main, ["sweep", "--config", str(cfg)])
    assert r.exit_code == 2


def test_sweep_unreadable_config(runner, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert runner.invoke(main, ["sweep", "--config", str(cfg)]).exit_code == 2


def test_verify_quick(runner):
    r = runner.invoke(main, ["verify", "--quick"])
    assert r.exit_code == 0, r.output
    lines = r.output.strip().splitlines()
    assert len(lines) == 13 and all(line.startswith("PASS ") for line in lines)


def test_inspect_gadget(runner):
    r = runner.invoke(main, ["inspect", "gadget", "EC"])
    assert r.exit_code == 0 and "qubits=21 depth=81" in r.output
    r = runner.invoke(main, ["inspect", "gadget", "Gate-Ga", "--gate", "H", "--check"])
    assert r.exit_code == 0, r.output
    assert runner.invoke(main, ["inspect", "gadget", "Gate-Ga"]).exit_code == 2
    assert runner.invoke(main, ["inspect", "gadget", "Gate-Ga", "--gate", "T"]).exit_code == 2


def test_transform(runner, tmp_path):
    src = tmp_path / "h.txt"
    src.write_text(serialize(single_gate_circuit("H")))
    out = tmp_path / "o.txt"
    r = runner.invoke(main, ["transform", str(src), "--pass", "teleport", "--pass", "inflate:m=1", "--out", str(out)])
    assert r.exit_code == 0, r.output
    c = parse(out.read_text())
    assert c.depth > 1
    assert runner.invoke(main, ["transform", str(src), "--pass", "nope"]).exit_code == 2
    assert runner.invoke(main, ["transform", str(src), "--pass", "inflate:m=x"]).exit_code == 2
    src.write_text("garbage\n")
    assert runner.invoke(main, ["transform", str(src), "--pass", "inflate"]).exit_code == 2
