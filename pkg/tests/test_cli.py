"""Command-line interface tests, run in-process through main(argv).

Covers every subcommand, the documented exit codes, and the rule that a
config file overrides command-line flags.
"""
import json

import numpy as np
import numpy.testing as npt
import pytest

from kanlmm import analysis, cli, kan, odeint


def run_cli(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def traj_csv(tmp_path_factory):
    """A small linear-system trajectory shared across the module."""
    path = tmp_path_factory.mktemp("data") / "linear.csv"
    rc = run_cli("gen", "--system", "linear", "--h", "0.02", "--out", str(path))
    assert rc == 0
    return path


TRAIN_QUICK = ["--scheme", "am", "--steps", "1", "--k", "3", "--grid", "4",
               "--hidden", "2", "--lr", "0.05", "--iters", "5"]


class TestGen:
    def test_writes_expected_grid(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        assert run_cli("gen", "--system", "linear", "--h", "0.1", "--out", str(out)) == 0
        traj = odeint.load_trajectory(out)
        assert traj.n_steps == 10 and traj.dim == 2
        npt.assert_allclose(traj.states[0], [0.0, 1.0])
        assert "wrote" in capsys.readouterr().out

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("gen", "--system", "opinion", "--dim", "8", "--seed", "3",
                "--t1", "0.5", "--h", "0.05", "--out", str(a))
        run_cli("gen", "--system", "opinion", "--dim", "8", "--seed", "3",
                "--t1", "0.5", "--h", "0.05", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_system_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli("gen", "--system", "lorenz", "--out", str(tmp_path / "t.csv"))
        assert exc.value.code == 2

    def test_wrong_x0_length(self, tmp_path):
        rc = run_cli("gen", "--system", "linear", "--x0", "1,2,3",
                     "--out", str(tmp_path / "t.csv"))
        assert rc == cli.EXIT_USAGE

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_integration_failure_exit_code(self, tmp_path):
        rc = run_cli("gen", "--system", "glycolytic", "--x0", "1e300,1,1,1,1,1,1",
                     "--t1", "0.1", "--h", "0.01", "--out", str(tmp_path / "t.csv"))
        assert rc == cli.EXIT_INTEGRATION


class TestSolveGrid:
    def test_with_known_field(self, traj_csv, tmp_path, capsys):
        out = tmp_path / "grid.csv"
        rc = run_cli("solve-grid", "--data", str(traj_csv), "--scheme", "am",
                     "--steps", "1", "--system", "linear", "--out", str(out))
        assert rc == 0
        header = out.read_text().splitlines()[0]
        assert header == "t,x1,x2,fhat1,fhat2,ftrue1,ftrue2"
        table = np.loadtxt(out, delimiter=",", skiprows=1)
        fhat, ftrue = table[:, 3:5], table[:, 5:7]
        assert np.max(np.abs(fhat - ftrue)) < 1e-2  # O(h^2) at h = 0.02
        assert "kappa2" in capsys.readouterr().out

    def test_without_reference_field(self, traj_csv, tmp_path):
        out = tmp_path / "grid.csv"
        assert run_cli("solve-grid", "--data", str(traj_csv), "--out", str(out)) == 0
        assert out.read_text().splitlines()[0] == "t,x1,x2,fhat1,fhat2"

    def test_missing_data_file(self, tmp_path):
        rc = run_cli("solve-grid", "--data", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "grid.csv"))
        assert rc == cli.EXIT_IO


class TestTrain:
    def test_writes_model_and_report(self, traj_csv, tmp_path, capsys):
        model, report = tmp_path / "m.json", tmp_path / "r.json"
        rc = run_cli("train", "--data", str(traj_csv), *TRAIN_QUICK,
                     "--system", "linear", "--out", str(model), "--report", str(report))
        assert rc == 0
        net = kan.load_model(model)
        assert (net.d_in, net.d_out, net.hidden) == (2, 2, 2)
        doc = json.loads(report.read_text())
        assert len(doc["loss_trace"]) == 5
        assert doc["config"]["intervals"] == 4
        assert doc["seminorm_error"] is not None
        assert "seminorm" in capsys.readouterr().out

    def test_model_bytes_reproducible(self, traj_csv, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            rc = run_cli("train", "--data", str(traj_csv), *TRAIN_QUICK,
                         "--seed", "7", "--out", str(path))
            assert rc == 0
        assert a.read_bytes() == b.read_bytes()

    def test_divergence_exit_code(self, traj_csv, tmp_path):
        rc = run_cli("train", "--data", str(traj_csv), "--grid", "4", "--hidden", "2",
                     "--lr", "1e8", "--iters", "60", "--out", str(tmp_path / "m.json"))
        assert rc == cli.EXIT_DIVERGED

    def test_config_file_overrides_flags(self, traj_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"iters": 3, "seed": 5}))
        report = tmp_path / "r.json"
        rc = run_cli("train", "--data", str(traj_csv), *TRAIN_QUICK,
                     "--iters", "999", "--config", str(cfg),
                     "--out", str(tmp_path / "m.json"), "--report", str(report))
        assert rc == 0
        doc = json.loads(report.read_text())
        assert len(doc["loss_trace"]) == 3
        assert doc["config"]["seed"] == 5

    def test_unknown_config_key_rejected(self, traj_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"momentum": 0.9}))
        rc = run_cli("train", "--data", str(traj_csv), *TRAIN_QUICK,
                     "--config", str(cfg), "--out", str(tmp_path / "m.json"))
        assert rc == cli.EXIT_USAGE

    def test_malformed_config_rejected(self, traj_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        rc = run_cli("train", "--data", str(traj_csv), *TRAIN_QUICK,
                     "--config", str(cfg), "--out", str(tmp_path / "m.json"))
        assert rc == cli.EXIT_USAGE


@pytest.fixture(scope="module")
def model_json(traj_csv, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.json"
    rc = run_cli("train", "--data", str(traj_csv), *TRAIN_QUICK, "--out", str(path))
    assert rc == 0
    return path


class TestPredict:
    def test_round_trip(self, model_json, tmp_path):
        out = tmp_path / "pred.csv"
        rc = run_cli("predict", "--model", str(model_json), "--x0", "0,1",
                     "--t1", "0.1", "--h", "0.01", "--out", str(out))
        assert rc == 0
        traj = odeint.load_trajectory(out)
        assert traj.dim == 2 and traj.n_steps == 10

    def test_wrong_x0_length(self, model_json, tmp_path):
        rc = run_cli("predict", "--model", str(model_json), "--x0", "1",
                     "--t1", "0.1", "--out", str(tmp_path / "p.csv"))
        assert rc == cli.EXIT_USAGE

    def test_missing_model(self, tmp_path):
        rc = run_cli("predict", "--model", str(tmp_path / "nope.json"), "--x0", "0,1",
                     "--t1", "0.1", "--out", str(tmp_path / "p.csv"))
        assert rc == cli.EXIT_IO

    def test_corrupt_model(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"version": 1}')
        rc = run_cli("predict", "--model", str(bad), "--x0", "0,1",
                     "--t1", "0.1", "--out", str(tmp_path / "p.csv"))
        assert rc == cli.EXIT_MODEL


class TestBounds:
    def test_report_printed_and_saved(self, tmp_path, capsys):
        out = tmp_path / "bounds.json"
        rc = run_cli("bounds", "--d", "2", "--k", "3", "--grid", "64",
                     "--hidden", "5", "--out", str(out))
        assert rc == 0
        text = capsys.readouterr().out
        assert "upper_bound" in text and "vc_lower_bound_shape" in text
        doc = json.loads(out.read_text())
        assert doc["upper_bound"] == pytest.approx(15.0 / 64.0, rel=1e-12)
        assert doc["inputs"]["P_pieces"] == 66

    def test_lipschitz_from_model(self, model_json, capsys):
        rc = run_cli("bounds", "--d", "2", "--model", str(model_json))
        assert rc == 0
        expected = analysis.lipschitz_estimate(kan.load_model(model_json))
        assert f"L = {expected}" in capsys.readouterr().out

    def test_bad_holder_alpha(self):
        assert run_cli("bounds", "--d", "2", "--alpha", "0") == cli.EXIT_USAGE


def test_unknown_experiment_name_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli("experiment", "nope", "--out-dir", str(tmp_path))
    assert exc.value.code == 2


def test_scheme_flag_rejects_unknown_family(traj_csv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli("train", "--data", str(traj_csv), "--scheme", "rk4",
                "--out", str(tmp_path / "m.json"))
    assert exc.value.code == 2
