import csv
import json
import subprocess
import sys
from importlib import resources

import pytest

from apnn.cli import main

QUICK = resources.files("apnn").joinpath("configs", "quick.toml")


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    run, ref = root / "run", root / "ref"
    assert main(["train", "--config", str(QUICK), "--out", str(run), "--quiet"]) == 0
    assert main(["reference", "--config", str(QUICK), "--out", str(ref)]) == 0
    assert main(["evaluate", "--run", str(run), "--reference", str(ref)]) == 0
    return root, run, ref


def test_train_writes_run_directory(pipeline):
    _, run, _ = pipeline
    assert {p.name for p in (run / "checkpoints").iterdir()} == {"rho.ckpt", "g.ckpt", "phi.ckpt"}
    log = [json.loads(s) for s in (run / "log.jsonl").read_text().splitlines()]
    assert [r["iter"] for r in log] == [10, 20]
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["config"]["problem"]["id"] == "landau"
    assert manifest["seeds"] == {"training": 0, "nets": 0}
    assert {"started", "finished", "git_describe", "artifacts"} <= set(manifest)


def test_manifest_reproduces_the_run_bit_identically(pipeline, tmp_path):
    _, run, _ = pipeline
    again = tmp_path / "again"
    assert main(["train", "--config", str(run / "manifest.json"), "--out", str(again), "--quiet"]) == 0
    strip = lambda p: [{k: v for k, v in json.loads(s).items() if k != "seconds"}
                       for s in p.read_text().splitlines()]
    assert strip(run / "log.jsonl") == strip(again / "log.jsonl")
    for name in ("rho", "g", "phi"):
        assert (run / "checkpoints" / f"{name}.ckpt").read_bytes() == (again / "checkpoints" / f"{name}.ckpt").read_bytes()


def test_reference_and_evaluation_outputs(pipeline):
    _, run, ref = pipeline
    assert (ref / "solution.csv").read_text().splitlines()[0] == "t,x,rho,phi,E,flux"
    assert json.loads((ref / "manifest.json").read_text())["notes"]["kind"] == "kinetic"
    out = run / "evaluation"
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"problem", "method", "epsilon", "metric", "quantity", "time", "value"}
    assert any(r["metric"] == "rel_l2" and r["quantity"] == "rho" and float(r["time"]) == 0.5 for r in rows)
    for name in ("rho.svg", "E.svg", "energy.svg"):
        assert (out / name).exists()


def test_seed_override(pipeline, tmp_path):
    assert main(["train", "--config", str(QUICK), "--out", str(tmp_path), "--seed", "5", "--quiet"]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["seeds"]["training"] == 5


def test_malformed_config_exits_2_with_position(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[problem]\nid = "landau"\n[method]\nname = "mm"\n[penalties]\nresidul = 1.0\n')
    for cmd in (["train", "--out", str(tmp_path / "r")], ["reference", "--out", str(tmp_path / "s")]):
        assert main([cmd[0], "--config", str(bad), *cmd[1:]]) == 2
        assert f"{bad}:6:1: penalties.residul" in capsys.readouterr().err
    (tmp_path / "broken.toml").write_text("[problem\n")
    assert main(["reference", "--config", str(tmp_path / "broken.toml"), "--out", str(tmp_path)]) == 2


def test_missing_inputs_exit_3(pipeline, tmp_path):
    _, run, _ = pipeline
    assert main(["train", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path)]) == 3
    assert main(["evaluate", "--run", str(run), "--reference", str(tmp_path / "noref")]) == 3
    assert main(["evaluate", "--run", str(tmp_path / "norun"), "--reference", str(tmp_path)]) == 3


def test_bad_thread_count_is_a_config_error(tmp_path, monkeypatch):
    monkeypatch.setenv("APNN_THREADS", "0")
    assert main(["reference", "--config", str(QUICK), "--out", str(tmp_path)]) == 2


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["train"])
    assert err.value.code == 2


def test_numeric_failure_exits_4(tmp_path):
    cfg = tmp_path / "div.toml"
    cfg.write_text(QUICK.read_text().replace("[training]\n", "[training]\ndivergence_threshold = 1e-30\n"
                                               "divergence_patience = 2\n"))
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "r"), "--quiet"]) == 4


def test_verify_passes_every_property(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1].endswith("properties passed")
    assert all(line.startswith("PASS") for line in out[:-1])


def test_console_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "apnn.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify" in res.stdout
