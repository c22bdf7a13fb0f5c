import json

import pytest

from photon_tam import cli, results
from photon_tam import spectra as sp
from photon_tam import states as st


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sweep_single_point(capsys):
    code, out, _ = run(["sweep", "--a-min", "0.5", "--a-max", "0.5", "--steps", "1"], capsys)
    assert code == 0
    meta = results.read_csv_comments(out)
    assert meta["config"]["a_min"] == 0.5
    rows = [ln.split(",") for ln in out.splitlines() if not ln.startswith("#")]
    assert rows[0] == results.RECORD_HEADER
    by_obs = {r[0]: r for r in rows[1:]}
    assert float(by_obs["Sz"][2]) == pytest.approx(0.4839, abs=1e-4)
    assert float(by_obs["Jz"][2]) == pytest.approx(1.0, abs=1e-8)
    assert float(by_obs["Sz"][6]) == pytest.approx(sp.f_of_a(0.5), abs=1e-15)


def test_outputs_are_byte_identical(tmp_path, capsys):
    path = tmp_path / "a.csv"
    runs = []
    for _ in range(2):
        assert cli.main(["distribution", "--observable", "Szprime", "--a", "0.2", "--out", str(path)]) == 0
        runs.append(path.read_bytes())
    assert runs[0] == runs[1]


def test_distribution_joint_and_lzprime(capsys):
    code, out, _ = run(["distribution", "--observable", "joint", "--a", "0.1", "--format", "json"], capsys)
    assert code == 0
    tab = json.loads(out)
    best = max(tab["table"]["rows"], key=lambda r: r[2])
    assert best[:2] == [0, 1]
    assert tab["metadata"]["mass_deficit"] < 1e-6
    code, out, _ = run(["distribution", "--observable", "Lzprime", "--a", "0.1", "--format", "json"], capsys)
    data = json.loads(out)
    assert data["metadata"]["j0_leakage"] < 1e-10
    assert data["table"]["total_mass"] == pytest.approx(1.0, abs=1e-6)


def test_distribution_szprime_csv(capsys):
    code, out, _ = run(["distribution", "--observable", "Szprime", "--a", "0.1"], capsys)
    rows = [ln.split(",") for ln in out.splitlines() if not ln.startswith("#")][1:]
    assert sum(float(r[4]) for r in rows) == pytest.approx(1.0, abs=1e-6)


def test_state_and_inspect(tmp_path, capsys):
    path = tmp_path / "state.txt"
    assert cli.main(["state", "--a", "0.1", "--n-phi", "16", "--out", str(path)]) == 0
    code, out, _ = run(["inspect", str(path), "--format", "json"], capsys)
    info = json.loads(out)
    direct = st.gaussian_state(0.1, st.auto_grid(0.1, (48, 48, 16)))
    assert info["norm"] == pytest.approx(st.norm(direct), abs=1e-12)
    assert info["transversality_residual"] < 1e-14
    assert info["helicity_expectation"] == pytest.approx(1.0, abs=1e-10)
    path.write_text("\n".join(path.read_text().splitlines()[:-3]))
    code, _, err = run(["inspect", str(path)], capsys)
    assert code == 1 and "expected" in err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\na_min = 0.3\na_max = 0.3\nsteps = 1\nformat = json\n")
    code, out, _ = run(["sweep", "--config", str(cfg), "--a-max", "0.4", "--steps", "2"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["config"]["a_min"] == 0.3 and data["config"]["a_max"] == 0.4
    assert sorted({r["a"] for r in data["records"]}) == [0.3, 0.4]


@pytest.mark.parametrize(
    "text",
    ["nonsense\n", "bogus = 1\n", "n_p = many\n"],
)
def test_malformed_config_exits_2(tmp_path, capsys, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = run(["sweep", "--config", str(cfg)], capsys)
    assert code == 2 and "config error" in err


def test_invalid_values_exit_2(capsys):
    assert run(["sweep", "--a-min", "2", "--a-max", "1"], capsys)[0] == 2
    assert run(["distribution", "--a", "-1"], capsys)[0] == 2
    assert run(["verify", "--n-phi", "15"], capsys)[0] == 2
    assert run(["verify", "--checks", "nope"], capsys)[0] == 2


def test_tightened_verify_exits_1(capsys):
    code, out, err = run(["verify", "--checks", "so3_algebra", "--tolerance-scale", "1e-6"], capsys)
    assert code == 1 and "so3_algebra" in err and "FAIL" in out


def test_verify_subset_passes(capsys):
    code, out, _ = run(["verify", "--checks", "frame_spectrum,so3_algebra", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_verify_exit_status_follows_reports(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, _, err = run(["verify", "--format", "json", "--out", str(out_path)], capsys)
    payload = json.loads(out_path.read_text())
    failed = [r["name"] for r in payload["reports"] if r["status"] != "pass"]
    assert code == (1 if failed else 0)
    assert all(name in err for name in failed)
