import pytest

from symmlab import cli, selftest


def _write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return str(p)


def test_verify_exit_zero(tmp_path, capsys):
    path = _write(tmp_path, f'case = "e"\ndomain = "ellipse"\neccentricity = 1.2\nh = 0.1\noutput_dir = "{tmp_path}"\n')
    assert cli.main(["verify", "--config", path]) == 0
    out = capsys.readouterr().out
    assert "D_nonneg: PASS" in out and (tmp_path / "e" / "report.json").exists()


def test_config_error_exit_two(tmp_path, capsys):
    assert cli.main(["verify", "--config", _write(tmp_path, "p = 0.5\n")]) == 2
    assert cli.main(["verify", "--config", str(tmp_path / "missing.toml")]) == 2
    assert "error:" in capsys.readouterr().err


def test_failed_verdict_exit_one(tmp_path, monkeypatch):
    path = _write(tmp_path, 'domain = "ellipse"\neccentricity = 1.2\nh = 0.1\n')
    real = cli.pipeline.analyze

    def broken(*a, **k):
        rep, extra = real(*a, **k)
        rep.verdicts[0] = cli.pipeline.Verdict("D_nonneg", "FAIL")
        return rep, extra

    monkeypatch.setattr(cli.pipeline, "analyze", broken)
    assert cli.main(["verify", "--config", path]) == 1


def test_radial_eval(tmp_path, capsys):
    path = _write(tmp_path, "h = 0.1\n")
    assert cli.main(["radial", "eval", "--s", "1.0", "--config", path]) == 0
    assert "v=" in capsys.readouterr().out
    assert cli.main(["radial", "eval", "--s", "9.0", "--config", path]) == 2


def test_solve(tmp_path, capsys):
    path = _write(tmp_path, f'case = "s"\nh = 0.1\noutput_dir = "{tmp_path}"\n')
    assert cli.main(["solve", "--config", path]) == 0
    assert (tmp_path / "s" / "solution.txt").exists()


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    assert capsys.readouterr().out.rstrip().endswith("14/14 passed")


def test_selftest_detects_wrong_kappa(monkeypatch):
    monkeypatch.setattr(selftest.geometry.constants, "kappa", lambda N: 3.5)
    assert selftest.oracle_square_deficit().status == "FAIL"
    assert selftest.oracle_triangle_deficit().status == "FAIL"


def test_usage_error():
    with pytest.raises(SystemExit):
        cli.main(["nope"])
