import json
import os

import pytest

from odds.cli import main, parse_ladder, run, sweep
from odds.config import parse_config
from odds.errors import ConfigError
from odds.report import body

TWO_CARD = {"experiment": "shuffle", "params": {"part": "two-card", "p": 0.9, "n": 3, "N": 10**6}, "seed": 3}


def write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_two_card_row(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["shuffle", "--config", write(tmp_path, TWO_CARD), "--out", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[2:]]
    mean = next(r for r in rows if r[3] == "two_card_mean")
    assert float(mean[5]) == pytest.approx(0.512, abs=1e-15) and float(mean[6]) == 0.004
    assert mean[7] == "true"


def test_same_run_twice_is_byte_identical(tmp_path):
    cfg = write(tmp_path, TWO_CARD)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["shuffle", "--config", cfg, "--out", str(a)])
    main(["shuffle", "--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_worker_count_does_not_change_body():
    cfg = parse_config({"experiment": "sphere", "params": {"n": [3, 30], "N": 2000}, "seed": 9, "replicates": 3})
    one, three = run(cfg, workers=1), run(cfg, workers=3)
    assert one == three
    assert [r.param_value.split(";")[0] for r in one] == ["0"] * 5 + ["1"] * 5 + ["2"] * 5


def test_replicates_use_distinct_streams():
    cfg = parse_config({"experiment": "shuffle", "params": {"part": "two-card", "N": 1000}, "replicates": 2})
    rows = [r for r in run(cfg, 1) if r.statistic == "two_card_mean"]
    assert rows[0].value != rows[1].value


def test_exit_status_follows_rows(tmp_path, capsys):
    failing = dict(TWO_CARD, params=dict(TWO_CARD["params"], tol=1e-9))
    assert main(["shuffle", "--config", write(tmp_path, failing), "--out", str(tmp_path / "f.csv")]) == 1
    assert "FAIL shuffle" in capsys.readouterr().err
    assert main(["shuffle", "--config", write(tmp_path, TWO_CARD), "--out", str(tmp_path / "p.csv")]) == 0


def test_validation_fails_before_running(tmp_path, capsys):
    cfg = write(tmp_path, {"experiment": "kelvin", "params": {"m_B": 0}})
    out = tmp_path / "k.csv"
    assert main(["kelvin", "--config", cfg, "--out", str(out)]) == 2
    assert "m_B must be > 0" in capsys.readouterr().err
    assert not out.exists()


def test_experiment_mismatch(tmp_path, capsys):
    assert main(["wheel", "--config", write(tmp_path, TWO_CARD)]) == 2
    assert "shuffle" in capsys.readouterr().err


def test_unwritable_output(tmp_path, capsys):
    cfg = write(tmp_path, TWO_CARD)
    assert main(["shuffle", "--config", cfg, "--out", str(tmp_path / "missing" / "r.csv")]) == 2
    assert "cannot write" in capsys.readouterr().err


def test_atomic_write_leaves_no_temp_files(tmp_path):
    out = tmp_path / "r.jsonl"
    main(["shuffle", "--config", write(tmp_path, TWO_CARD), "--out", str(out), "--format", "jsonl"])
    assert sorted(os.listdir(tmp_path)) == ["c.json", "r.jsonl"]
    lines = out.read_text().splitlines()
    meta = json.loads(lines[0])["meta"]
    assert meta["seed"] == 3 and meta["odds_version"] == "0.1.0" and len(meta["config_sha256"]) == 64
    assert all(json.loads(line)["experiment"] == "shuffle" for line in lines[1:])


def test_cli_overrides(tmp_path):
    out = tmp_path / "r.csv"
    main(["shuffle", "--config", write(tmp_path, TWO_CARD), "--seed", "11", "--replicates", "2", "--out", str(out)])
    text = out.read_text()
    assert "seed=11" in text.splitlines()[0]
    assert "replicate;p;n;N,1;0.9;3;1000000" in text


def test_env_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("ODDS_WORKERS", "zero")
    assert main(["shuffle", "--config", write(tmp_path, TWO_CARD)]) == 2


def test_parse_ladder():
    assert parse_ladder("M=10,100, 1000") == ("M", [10, 100, 1000])
    assert parse_ladder("density=uniform,ramp") == ("density", ["uniform", "ramp"])
    for bad in ("M=", "M= , ", "=1,2", "M"):
        with pytest.raises(ConfigError):
            parse_ladder(bad)


def test_empty_ladder_is_an_error(tmp_path, capsys):
    cfg = write(tmp_path, {"experiment": "wheel"})
    assert main(["sweep", "--config", cfg, "--ladder", "M="]) == 2
    assert "empty" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        sweep(parse_config(cfg), "M", [])


def test_bad_ladder_point_aborts_before_running(monkeypatch):
    import odds.cli as cli
    monkeypatch.setattr(cli, "_execute", lambda *a: pytest.fail("ran before validating"))
    with pytest.raises(ConfigError, match="M must be ≥ 1"):
        sweep(parse_config({"experiment": "wheel"}), "M", [10, 0])
    with pytest.raises(ConfigError, match="unknown parameter"):
        sweep(parse_config({"experiment": "wheel"}), "speling", [1])


def test_wheel_halving_sweep():
    cfg = parse_config({"experiment": "wheel", "params": {"densities": 20}})
    rows = sweep(cfg, "M", [100, 200, 400])
    summary = rows[-1]
    assert summary.statistic == "bound_halving" and summary.param_key == "M"
    assert summary.passed and abs(summary.value - 0.5) <= 0.1
    assert all(r.param_key.startswith("M") for r in rows)


def test_sphere_sweep_decreasing_summary(tmp_path):
    cfg = write(tmp_path, {"experiment": "sphere", "params": {"N": 20000}, "seed": 2})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["sweep", "--config", cfg, "--ladder", "n=3,30,300", "--workers", "1", "--out", str(a)])
    main(["sweep", "--config", cfg, "--ladder", "n=3,30,300", "--workers", "2", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    last = a.read_text().splitlines()[-1].split(",")
    assert last[:4] == ["sphere", "n", "ladder", "ks_normal_decreasing"] and last[-1] == "true"
    assert "ladder=n=3,30,300" in a.read_text().splitlines()[0]
    assert body(a.read_text()).count("\n") == 1 + 3 * 2 + 1
