import json

import pytest

from valence_forge import cli


def run(args, capsys):
    code = cli.main(args)
    return code, capsys.readouterr()


def test_construct_writes_state(tmp_path, capsys):
    code, out = run(["construct", "--N", "5", "--eps", "0.0078125", "--depth", "2", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    state = json.loads((tmp_path / "state.json").read_text())
    assert state["manifest"]["total"] == 20
    assert "PASS construct.roots" in out.out


def test_verify_after_construct(tmp_path, capsys):
    assert run(["construct", "--depth", "1", "--out-dir", str(tmp_path)], capsys)[0] == 0
    code, out = run(["verify", "--samples", "40", "--state", str(tmp_path / "state.json"),
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    assert (tmp_path / "verify.csv").read_text().startswith("check_id,node,bound,observed_max,margin,pass")
    lines = (tmp_path / "verify.jsonl").read_text().splitlines()
    assert len(lines) == 4 * 9 + 1
    assert "PASS verify.lemma7" in out.out


def test_dimension_prints_formula(tmp_path, capsys):
    code, out = run(["dimension", "--N", "5", "--eps", "0.0078125", "--gamma1", "3e-5",
                     "--out-dir", str(tmp_path), "--svg"], capsys)
    assert code == 0
    assert "d(N) = 0.074" in out.out
    assert (tmp_path / "dimension.svg").read_text().startswith("<svg")


def test_becker_command(tmp_path, capsys):
    code, out = run(["becker", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    assert len((tmp_path / "becker.jsonl").read_text().splitlines()) == 12


def test_config_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 4, "depth": 1, "threads": 3}))
    parser = cli.build_parser()
    monkeypatch.setenv(cli.THREADS_ENV, "7")
    got = cli.resolve_config(parser.parse_args(["construct", "--config", str(cfg), "--N", "6"]))
    assert got["N"] == 6 and got["depth"] == 1 and got["threads"] == 3
    assert got["gamma1"] == pytest.approx(got["eps"] * got["beta1"] / 2)
    got = cli.resolve_config(parser.parse_args(["construct"]))
    assert got["threads"] == 7 and got["N"] == 5 and got["tol"] == 1e-12
    got = cli.resolve_config(parser.parse_args(["construct", "--threads", "2"]))
    assert got["threads"] == 2


@pytest.mark.parametrize("args", [
    ["construct", "--eps", "0.5"],
    ["construct", "--depth", "0"],
    ["verify", "--state", "/nonexistent/state.json"],
    ["gmap"],
])
def test_precondition_errors_exit_2(tmp_path, capsys, args):
    code, out = run(args + ["--out-dir", str(tmp_path)], capsys)
    assert code == 2
    assert "error" in out.err


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(["construct", "--config", str(cfg), "--out-dir", str(tmp_path)], capsys)[0] == 2
    cfg.write_text("{not json")
    assert run(["construct", "--config", str(cfg), "--out-dir", str(tmp_path)], capsys)[0] == 2


def test_bad_thread_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    assert run(["construct", "--out-dir", str(tmp_path)], capsys)[0] == 2


def test_unknown_command(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["transmogrify"])
    assert exc.value.code == 2


def test_check_failure_exit_1(tmp_path, capsys):
    assert run(["construct", "--depth", "1", "--out-dir", str(tmp_path)], capsys)[0] == 0
    path = tmp_path / "state.json"
    data = json.loads(path.read_text())
    data["records"]["2"]["omega"] = 0.004  # far off the centring root
    path.write_text(json.dumps(data))
    code, out = run(["verify", "--samples", "20", "--out-dir", str(tmp_path)], capsys)
    assert code == 1
    assert "FAIL verify.centering" in out.out
