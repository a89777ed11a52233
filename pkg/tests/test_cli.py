import json

import pytest

from fisherflow.cli import main


@pytest.fixture()
def square_spec_file(tmp_path):
    p = tmp_path / "square.json"
    p.write_text(json.dumps({"kind": "rectangle", "h": 0.1, "width": 1.0, "height": 1.0}))
    return str(p)


@pytest.fixture()
def star_spec_file(tmp_path):
    p = tmp_path / "star.json"
    p.write_text(json.dumps({"kind": "polar_star", "h": 0.1, "r0": 1.0, "a": 0.5, "k": 3}))
    return str(p)


class TestUsage:
    def test_no_command_is_usage_error(self, capsys):
        assert main([]) == 2

    def test_verify_without_exp_is_usage_error(self, capsys):
        assert main(["verify"]) == 2

    def test_missing_spec_file(self, tmp_path, capsys):
        rc = main(["mesh", "--spec", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
        assert rc == 2

    def test_malformed_spec_file(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["mesh", "--spec", str(p), "--out", str(tmp_path)]) == 2

    def test_invalid_spec_fields(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"kind": "rectangle", "h": 0.1, "r0": 1.0}))
        assert main(["mesh", "--spec", str(p), "--out", str(tmp_path)]) == 2

    def test_unknown_experiment(self, square_spec_file, tmp_path, capsys):
        rc = main(
            ["verify", "--exp", "nosuch", "--spec", square_spec_file,
             "--out", str(tmp_path / "o")]
        )
        assert rc == 2


class TestMesh:
    def test_writes_mesh_and_curvature(self, star_spec_file, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["mesh", "--spec", star_spec_file, "--out", str(out)])
        assert rc == 0
        mesh = json.loads((out / "mesh.json").read_text())
        curv = json.loads((out / "curvature.json").read_text())
        assert curv["mesh_checksum"] == mesh["checksum"]
        assert curv["S"] == pytest.approx(16.0, abs=0.1)
        assert (out / "manifest.json").exists()

    def test_convex_domain_reports_zero_defect(self, square_spec_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["mesh", "--spec", square_spec_file, "--out", str(out)]) == 0
        curv = json.loads((out / "curvature.json").read_text())
        assert curv["S"] == 0.0


class TestVerify:
    def test_list_experiments(self, capsys):
        assert main(["verify", "--list"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        names = [ln.split()[0] for ln in lines]
        assert "fisher_convex" in names
        assert "porous_fisher" in names
        assert names == sorted(names)

    def test_single_experiment_writes_reports(self, square_spec_file, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(
            ["verify", "--exp", "exact_chain_rule", "--spec", square_spec_file,
             "--out", str(out), "--seed", "7"]
        )
        assert rc == 0
        text = capsys.readouterr().out
        assert "PASS exact_chain_rule/" in text
        rep = json.loads((out / "exact_chain_rule.json").read_text())
        assert rep["experiment"] == "exact_chain_rule"
        assert (out / "exact_chain_rule.csv").exists()

    def test_out_dir_from_environment(self, square_spec_file, tmp_path, capsys, monkeypatch):
        env_out = tmp_path / "envout"
        monkeypatch.setenv("FISHERFLOW_OUT", str(env_out))
        rc = main(
            ["verify", "--exp", "exact_chain_rule", "--spec", square_spec_file]
        )
        assert rc == 0
        assert (env_out / "exact_chain_rule.json").exists()


class TestFlow:
    def test_heat_flow_saves_curve(self, square_spec_file, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(
            ["flow", "--spec", square_spec_file, "--flow", "heat",
             "--T", "0.01", "--dt", "1e-3", "--out", str(out)]
        )
        assert rc == 0
        assert (out / "curve" / "curve.json").exists()

    def test_heat_flow_requires_dt(self, square_spec_file, tmp_path, capsys):
        rc = main(
            ["flow", "--spec", square_spec_file, "--flow", "heat",
             "--T", "0.01", "--out", str(tmp_path / "o")]
        )
        assert rc == 2

    def test_jko_flow_requires_compatible_horizon(self, square_spec_file, tmp_path, capsys):
        rc = main(
            ["flow", "--spec", square_spec_file, "--flow", "jko",
             "--T", "0.013", "--tau", "0.005", "--out", str(tmp_path / "o")]
        )
        assert rc == 2

    def test_jko_flow_saves_curve(self, square_spec_file, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(
            ["flow", "--spec", square_spec_file, "--flow", "jko",
             "--T", "0.02", "--tau", "0.01", "--eps", "2e-3", "--out", str(out)]
        )
        assert rc == 0
        manifest = json.loads((out / "curve" / "curve.json").read_text())
        assert manifest["provenance"] == "jko"
