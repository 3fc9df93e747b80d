import io
import json
import subprocess
import sys

import numpy as np
import pytest

from sunqsde import ModelValidationError, StateSpaceModel, ThetaContext, random_model
from sunqsde import io as sio
from sunqsde.cli import RunConfig, UsageError, main, run

SLH = {"alpha": [0.0, 0.0, 1.0], "Lambda": [[[0.3, 0.1], [0.0, 0.2], [0.5, 0.0]]]}


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run_cli(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def model_file(tmp_path):
    m = random_model(ThetaContext.for_n(2), 1, seed=0)
    return write(tmp_path / "model.json", sio.model_to_dict(m))


@pytest.fixture
def zero_file(tmp_path):
    return write(tmp_path / "zero.json", sio.model_to_dict(StateSpaceModel.zeros(2, 1)))


class TestModelSchema:
    def test_round_trip_is_lossless(self):
        m = random_model(ThetaContext.for_n(3), 2, seed=1)
        back = sio.model_from_dict(json.loads(sio.dumps(sio.model_to_dict(m))))
        for name in ("A0", "A", "B1", "B2", "C1", "C2"):
            assert np.array_equal(getattr(back, name), getattr(m, name))

    def test_valid_su2_file(self, model_file):
        from sunqsde.cli import validate_model_file
        m = validate_model_file(model_file)
        assert m.s == 3 and m.A.shape == (3, 3)

    def test_wrong_shape_names_field(self):
        d = sio.model_to_dict(StateSpaceModel.zeros(2, 1))
        d["A"] = np.zeros((4, 4)).tolist()
        with pytest.raises(ModelValidationError, match="A has shape 4 x 4, expected 3 x 3"):
            sio.model_from_dict(d)

    def test_complex_entry_rejected(self):
        d = sio.model_to_dict(StateSpaceModel.zeros(2, 1))
        d["A"][0][1] = [0.0, 1.0]
        with pytest.raises(ModelValidationError, match=r"A\[0, 1\] is complex"):
            sio.model_from_dict(d)

    def test_complex_pairs_with_zero_imag_accepted(self):
        d = sio.model_to_dict(StateSpaceModel.zeros(2, 1))
        d["A"] = [[[1.0, 0.0]] * 3] * 3
        assert np.array_equal(sio.model_from_dict(d).A, np.ones((3, 3)))

    @pytest.mark.parametrize("field", ["n", "B2"])
    def test_missing_field(self, field):
        d = sio.model_to_dict(StateSpaceModel.zeros(2, 1))
        del d[field]
        with pytest.raises(ModelValidationError) as exc:
            sio.model_from_dict(d)
        assert exc.value.field == field

    def test_non_numeric_entry(self):
        d = sio.model_to_dict(StateSpaceModel.zeros(2, 1))
        d["C1"] = [["a", 0, 0]]
        with pytest.raises(ModelValidationError):
            sio.model_from_dict(d)

    def test_slh_round_trip(self):
        p = sio.slh_from_dict(SLH)
        assert p.Lambda[0, 0] == 0.3 + 0.1j
        assert sio.slh_to_dict(p) == SLH

    def test_density_formats(self):
        assert np.array_equal(sio.density_from_json([[1, 0], [0, 0]]), np.diag([1, 0]))
        grid = [[[0.5, 0], [0, -0.5]], [[0, 0.5], [0.5, 0]]]
        rho = sio.density_from_json({"rho": grid}, 2)
        assert rho[0, 1] == -0.5j
        assert sio.density_to_json(rho) == grid
        with pytest.raises(ModelValidationError):
            sio.density_from_json([[1, 0], [0, 0]], 3)


class TestCommands:
    def test_check_identities_passes(self, capsys):
        code, out, _ = run_cli(capsys, "check-identities", "--n", "3", "--tol", "1e-9", "--trials", "10")
        rep = json.loads(out)
        assert code == 0 and rep["passed"] and rep["n"] == 3
        assert "ff_jacobi" in {e["identity"] for e in rep["entries"]}

    def test_basis_export(self, capsys):
        code, out, _ = run_cli(capsys, "basis", "--n", "2")
        d = json.loads(out)
        assert code == 0 and d["f"][0][1][2] == 1.0

    def test_synth_then_check(self, capsys, monkeypatch, tmp_path):
        slh = write(tmp_path / "slh.json", SLH)
        code, model_json, _ = run_cli(capsys, "synth", "--slh", slh)
        assert code == 0
        for cmd in ("check-realizable", "check-preservation", "oracle"):
            code, out, _ = run_cli(capsys, cmd, stdin=model_json, monkeypatch=monkeypatch)
            assert code == 0, (cmd, out)
        code, out, _ = run_cli(capsys, "extract-slh", stdin=model_json, monkeypatch=monkeypatch)
        back = json.loads(out)
        assert np.allclose(back["alpha"], SLH["alpha"], atol=1e-14)
        assert np.allclose(back["Lambda"], SLH["Lambda"], atol=1e-15)

    def test_zero_model_is_realizable(self, capsys, zero_file):
        code, out, _ = run_cli(capsys, "check-realizable", "--model", zero_file)
        assert code == 0 and json.loads(out)["passed"]

    def test_failure_still_writes_report(self, capsys, tmp_path):
        m = random_model(ThetaContext.for_n(2), 1, seed=0, kind="generic")
        path = write(tmp_path / "g.json", sio.model_to_dict(m))
        code, out, _ = run_cli(capsys, "check-preservation", "--model", path)
        assert code == 1 and json.loads(out)["passed"] is False
        code, out, _ = run_cli(capsys, "oracle", "--model", path)
        assert code == 1 and json.loads(out)["max_norm"] > 1e-3

    def test_bad_shape_exits_2(self, capsys, tmp_path):
        d = sio.model_to_dict(StateSpaceModel.zeros(2, 1))
        d["A"] = np.zeros((4, 4)).tolist()
        code, out, err = run_cli(capsys, "check-realizable", "--model", write(tmp_path / "bad.json", d))
        assert code == 2 and out == ""
        assert "A has shape 4 x 4, expected 3 x 3" in err

    def test_malformed_json_exits_2(self, capsys, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        code, _, err = run_cli(capsys, "check-realizable", "--model", str(p))
        assert code == 2 and "malformed JSON" in err

    def test_missing_file_exits_2(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "oracle", "--model", str(tmp_path / "nope.json"))
        assert code == 2 and "cannot read" in err

    def test_usage_errors_exit_2(self, capsys):
        assert main(["basis"]) == 2
        assert main(["check-identities", "--n", "1"]) == 2
        assert main(["check-identities", "--n", "2", "--tol", "-1"]) == 2
        assert main(["no-such-command"]) == 2
        capsys.readouterr()

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        assert "check-realizable" in capsys.readouterr().out

    def test_env_tolerance(self, capsys, monkeypatch, tmp_path):
        m = random_model(ThetaContext.for_n(2), 1, seed=0).perturbed("B1", (0, 0, 1), 1e-6)
        path = write(tmp_path / "p.json", sio.model_to_dict(m))
        monkeypatch.setenv("SUNQSDE_TOL", "1e-3")
        code, out, _ = run_cli(capsys, "check-realizable", "--model", path)
        assert code == 0 and json.loads(out)["tol"] == 1e-3
        code, _, _ = run_cli(capsys, "check-realizable", "--model", path, "--tol", "1e-9")
        assert code == 1
        monkeypatch.setenv("SUNQSDE_TOL", "tiny")
        code, _, err = run_cli(capsys, "check-realizable", "--model", path)
        assert code == 2 and "SUNQSDE_TOL" in err

    def test_reports_are_byte_identical(self, capsys, tmp_path):
        outs = []
        for i in range(2):
            target = tmp_path / f"r{i}.json"
            assert main(["check-identities", "--n", "2", "--seed", "5", "--trials", "5", "-o", str(target)]) == 0
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]

    def test_random_model_command(self, capsys):
        code, out, _ = run_cli(capsys, "random-model", "--n", "3", "--nw", "2", "--seed", "4",
                               "--kind", "preservation-only")
        d = json.loads(out)
        assert code == 0 and d["n"] == 3 and np.asarray(d["B1"]).shape == (2, 8, 8)

    def test_batch_preserves_order_across_jobs(self, capsys, tmp_path, model_file, zero_file):
        g = random_model(ThetaContext.for_n(2), 1, seed=0, kind="generic")
        gfile = write(tmp_path / "g.json", sio.model_to_dict(g))
        paths = [model_file, gfile, zero_file]
        code1, out1, _ = run_cli(capsys, "check-preservation", "--model", *paths)
        code2, out2, _ = run_cli(capsys, "check-preservation", "--model", *paths, "--jobs", "2")
        assert code1 == code2 == 1
        assert out1 == out2
        rows = json.loads(out1)
        assert [r["source"] for r in rows] == paths
        assert [r["passed"] for r in rows] == [True, False, True]

    def test_simulate_csv_and_json(self, capsys, model_file, tmp_path):
        code, out, _ = run_cli(capsys, "simulate", "--model", model_file, "--t-end", "0.1",
                               "--format", "csv", "--with-mean")
        lines = out.splitlines()
        assert code == 0 and lines[0].startswith("t,r_ccr,r_accr,m1_re,m1_im")
        assert len(lines) == 102
        rho = write(tmp_path / "rho.json", [[0.5, 0], [0, 0.5]])
        code, out, _ = run_cli(capsys, "simulate", "--model", model_file, "--rho", rho, "--t-end", "0.1")
        d = json.loads(out)
        assert code == 0 and d["max_residual"] < 1e-9 and len(d["trajectory"]["t"]) == 101

    def test_simulate_bad_density_exits_2(self, capsys, model_file, tmp_path):
        rho = write(tmp_path / "rho.json", [[2, 0], [0, 0]])
        code, _, err = run_cli(capsys, "simulate", "--model", model_file, "--rho", rho)
        assert code == 2 and "trace" in err

    def test_csv_only_for_simulate(self):
        with pytest.raises(UsageError):
            run(RunConfig(command="synth", format="csv"))


def test_shell_pipe(tmp_path):
    slh = write(tmp_path / "slh.json", SLH)
    cli = [sys.executable, "-m", "sunqsde.cli"]
    synth = subprocess.run(cli + ["synth", "--slh", slh], capture_output=True, text=True, check=True)
    check = subprocess.run(cli + ["check-realizable", "--tol", "1e-9"], input=synth.stdout,
                           capture_output=True, text=True)
    assert check.returncode == 0, check.stderr
    assert json.loads(check.stdout)["passed"] is True
