import json
import subprocess
import sys

import pytest

from mfapc.cli import main, parse_sweep
from mfapc.config import RunConfig, dumps, loads
from mfapc.estimators import load_checkpoint
from mfapc.plots import write_plots
from mfapc.scenarios import preset
from mfapc.simkit import SimTrace


def run_cli(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def small_config(tmp_path):
    cfg = loads(dumps(RunConfig()).replace("steps = 500", "steps = 150"))
    path = tmp_path / "small.ini"
    path.write_text(dumps(cfg))
    return path


def summary(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


class TestRun:
    def test_example_outputs(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "run-example", "1.3", "--out", str(tmp_path))
        assert code == 0
        names = {p.name for p in tmp_path.iterdir()}
        assert {"config.echo", "trace.csv", "summary.txt", "tracking.svg", "inputs.svg", "pjm.svg", "lambda.svg"} <= names
        assert loads((tmp_path / "config.echo").read_text()) == preset("1.3")
        assert summary(tmp_path / "summary.txt")["diverged"] == "false"

    def test_divergence_is_a_warning(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "run-example", "remark2", "--out", str(tmp_path))
        assert code == 0 and out.startswith("warning:")
        assert summary(tmp_path / "summary.txt")["diverged"] == "true"

    def test_unknown_example(self, capsys):
        code, _, err = run_cli(capsys, "run-example", "9.9")
        assert code == 2 and "invalid choice" in err

    def test_config_run(self, capsys, tmp_path, small_config):
        code, _, _ = run_cli(capsys, "run", str(small_config), "--out", str(tmp_path / "o"))
        s = summary(tmp_path / "o" / "summary.txt")
        assert code == 0 and s["steps"] == "150" and float(s["rms_error"]) < 1e-3
        assert s["stability_verdict"] == "stable" and s["closed_loop_verdict"] == "stable"

    def test_seed_determinism(self, capsys, tmp_path):
        for d in ("a", "b"):
            run_cli(capsys, "run-example", "1.2", "--seed", "7", "--out", str(tmp_path / d))
        for name in ("trace.csv", "tracking.svg", "pjm.svg", "summary.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_config(self, capsys, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[controller]\nN = 1\nNu = 2\n")
        code, _, err = run_cli(capsys, "run", str(path))
        assert code == 2 and "controller.Nu" in err and "controller.N" in err

    def test_missing_config(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "run", str(tmp_path / "nope.ini"))
        assert code == 2

    def test_show_config(self, capsys):
        code, out, _ = run_cli(capsys, "show-config", "1.1")
        assert code == 0 and loads(out) == preset("1.1")

    def test_plots_regenerate_from_csv(self, capsys, tmp_path):
        run_cli(capsys, "run-example", "1.3", "--out", str(tmp_path / "run"))
        trace = SimTrace.from_csv(tmp_path / "run" / "trace.csv")
        write_plots(trace, tmp_path, include_lambda=True)
        for name in ("tracking.svg", "inputs.svg", "pjm.svg", "lambda.svg"):
            assert (tmp_path / name).read_bytes() == (tmp_path / "run" / name).read_bytes()


class TestStability:
    def test_single_lambda(self, capsys, tmp_path):
        pjm = tmp_path / "pjm.json"
        pjm.write_text(json.dumps([1.0]))
        code, out, _ = run_cli(capsys, "stability", "--pjm", str(pjm), "--N", "1", "--Nu", "1", "--lambda", "0.01")
        lines = dict(line.split("=", 1) for line in out.splitlines() if not line.startswith("root="))
        assert code == 0 and lines["verdict"] == "stable"
        assert float(lines["max_root_modulus"]) == pytest.approx(0.01 / 1.01, rel=1e-12)

    def test_sweep(self, capsys):
        code, out, _ = run_cli(
            capsys, "stability", "--plant", "example13", "--N", "2", "--Nu", "2", "--lambda-sweep=-0.45:1.0:0.05"
        )
        rows = out.strip().splitlines()
        assert code == 0 and rows[0].startswith("lambda,max_root_modulus,verdict")
        assert len(rows) == 1 + 30
        assert rows[1].split(",")[0] == "-0.45" and rows[-1].split(",")[0] == "1.0"

    @pytest.mark.parametrize("sweep", ["1:0:0.1", "0:1", "a:b:c", "0:1:0"])
    def test_malformed_sweep(self, capsys, sweep):
        code, _, _ = run_cli(capsys, "stability", "--plant", "example13", "--N", "1", "--Nu", "1", "--lambda-sweep", sweep)
        assert code == 2

    def test_sweep_grid(self):
        assert list(parse_sweep("-0.6:-0.4:0.1")) == [-0.6, -0.5, -0.4]


class TestGradcheck:
    @pytest.mark.parametrize("family", ["mlp", "rbf"])
    def test_pass(self, capsys, family):
        code, out, _ = run_cli(capsys, "gradcheck", "--family", family, "--trials", "20")
        assert code == 0 and out.rstrip().endswith("PASS")

    def test_zero_trials(self, capsys):
        code, _, _ = run_cli(capsys, "gradcheck", "--family", "mlp", "--trials", "0")
        assert code == 2


class TestTrain:
    def _config(self, tmp_path, threshold, max_epochs):
        text = dumps(preset("1.1"))
        text = text.replace("threshold = 0.002", f"threshold = {threshold!r}")
        text = text.replace("max_epochs = 75000", f"max_epochs = {max_epochs}")
        path = tmp_path / "train.ini"
        path.write_text(text)
        return path

    def test_loose_threshold_one_epoch(self, capsys, tmp_path):
        cfg = self._config(tmp_path, 1e9, 10)
        ckpt = tmp_path / "net.npz"
        code, out, _ = run_cli(capsys, "train", "--config", str(cfg), "--out", str(ckpt))
        assert code == 0 and out.startswith("epochs=1 ")
        net = load_checkpoint(ckpt)
        again = load_checkpoint(ckpt)
        assert net.forward([0.1, 0.2, 0.3, 0.4]).tobytes() == again.forward([0.1, 0.2, 0.3, 0.4]).tobytes()

    def test_epoch_cap(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "train", "--config", str(self._config(tmp_path, 0.002, 3)))
        assert code == 1 and "epochs=3" in out

    def test_checkpoint_drives_run(self, capsys, tmp_path):
        ckpt = tmp_path / "net.npz"
        run_cli(capsys, "train", "--config", str(self._config(tmp_path, 1e9, 10)), "--out", str(ckpt))
        text = dumps(preset("1.1")).replace("checkpoint = ", f"checkpoint = {ckpt}").replace("steps = 800", "steps = 20")
        cfg = tmp_path / "ck.ini"
        cfg.write_text(text)
        code, _, _ = run_cli(capsys, "run", str(cfg), "--out", str(tmp_path / "o"))
        assert code == 0 and "training_epochs" not in summary(tmp_path / "o" / "summary.txt")


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "mfapc.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "run-example" in res.stdout
