import json
from pathlib import Path

import pytest

from levy_sync import ParseError, ValidationError
from levy_sync.cli import load_config, main, parse_config, run
from levy_sync.plots import emit_plot

MINIMAL = """
[run]
schema = 1
experiment = sampler-check

[spec]
f = zero
g = zero
alpha = 2.0
sigma1 = 1.0
sigma2 = 1.0

[mc]
n_paths = 200000
master_seed = 1
"""


def write(tmp_path, text, name="config.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestParseConfig:
    def test_minimal_with_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.experiment == "sampler-check"
        assert cfg.emit_plots is True
        assert cfg.output_dir == Path("out")
        assert cfg.mc.p == 1.2
        assert cfg.mc.T == 5.0
        assert cfg.spec.law.alpha == 2.0
        assert cfg.mc.epsilon_list == (0.1, 0.05, 0.02, 0.01)

    def test_p_must_be_below_alpha(self):
        text = MINIMAL.replace("alpha = 2.0", "alpha = 1.5").replace(
            "n_paths = 200000", "n_paths = 200000\np = 1.8"
        )
        with pytest.raises(ValidationError, match="alpha"):
            parse_config(text)

    def test_epsilon_list_must_decrease(self):
        text = MINIMAL + "epsilon_list = 0.05, 0.1\n"
        with pytest.raises(ValidationError, match="decreasing"):
            parse_config(text)

    def test_unknown_key_rejected(self):
        text = MINIMAL + "typo_key = 3\n"
        with pytest.raises(ValidationError, match="typo_key"):
            parse_config(text)

    def test_unknown_section_rejected(self):
        with pytest.raises(ValidationError, match="mystery"):
            parse_config(MINIMAL + "\n[mystery]\nx = 1\n")

    def test_unknown_drift_rejected(self):
        text = MINIMAL.replace("f = zero", "f = foo")
        with pytest.raises(ValidationError, match="foo"):
            parse_config(text)

    def test_unknown_experiment_rejected(self):
        text = MINIMAL.replace("experiment = sampler-check", "experiment = nope")
        with pytest.raises(ValidationError, match="experiment"):
            parse_config(text)

    def test_bad_syntax_is_parse_error(self):
        with pytest.raises(ParseError):
            parse_config("[run\nexperiment = averaging\n")

    def test_bad_number_is_parse_error(self):
        with pytest.raises(ParseError, match="sigma1"):
            parse_config(MINIMAL.replace("sigma1 = 1.0", "sigma1 = abc"))

    def test_wrong_schema_rejected(self):
        with pytest.raises(ValidationError, match="schema"):
            parse_config(MINIMAL.replace("schema = 1", "schema = 99"))

    def test_shipped_configs_parse(self):
        for path in Path(__file__).resolve().parents[1].glob("configs/*.ini"):
            cfg = load_config(path)
            assert cfg.experiment in {
                "sampler-check", "averaging", "persistence", "moments",
                "attractor", "mixing", "holder",
            }


class TestMainEntry:
    def test_list_drifts(self, capsys):
        assert main(["list-drifts"]) == 0
        out = capsys.readouterr().out
        for name in ("linear", "tanh", "cubic", "zero", "const"):
            assert name in out

    def test_validate_ok(self, tmp_path, capsys):
        path = write(tmp_path, MINIMAL)
        assert main(["validate", str(path)]) == 0
        assert "sampler-check" in capsys.readouterr().out

    def test_validate_bad_config(self, tmp_path, capsys):
        path = write(tmp_path, MINIMAL.replace("f = zero", "f = foo"))
        assert main(["validate", str(path)]) == 1
        assert "foo" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert main(["run", "/nonexistent/config.ini"]) == 1


class TestRun:
    def test_sampler_check_passes(self, tmp_path):
        out = tmp_path / "out"
        path = write(tmp_path, MINIMAL)
        code = main(["run", str(path), "--output", str(out)])
        assert code == 0
        report = (out / "report.csv").read_text()
        assert "sample_variance" in report
        var_row = [l for l in report.splitlines() if "sample_variance" in l][0]
        assert abs(float(var_row.split(",")[2]) - 2.0) < 0.02
        manifest = json.loads((out / "manifest.jsonl").read_text())
        assert manifest["experiment"] == "sampler-check"
        assert not (out / "FAILED").exists()
        svgs = list(out.glob("*.svg"))
        assert svgs

    def test_no_plots_flag(self, tmp_path):
        out = tmp_path / "out"
        path = write(tmp_path, MINIMAL)
        assert main(["run", str(path), "--output", str(out), "--no-plots"]) == 0
        assert not list(out.glob("*.svg"))

    def test_seed_override_changes_manifest(self, tmp_path):
        path = write(tmp_path, MINIMAL)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["run", str(path), "--output", str(out1), "--no-plots"])
        main(["run", str(path), "--output", str(out2), "--no-plots", "--seed", "77"])
        m1 = json.loads((out1 / "manifest.jsonl").read_text())
        m2 = json.loads((out2 / "manifest.jsonl").read_text())
        assert m1["mc"]["master_seed"] == 1
        assert m2["mc"]["master_seed"] == 77

    def test_acceptance_failure_exit_2_and_marker(self, tmp_path):
        # zero drift: the IC ensemble never contracts, the singleton gate fails
        text = """
[run]
schema = 1
experiment = attractor

[spec]
f = zero
g = zero
sigma1 = 1.0
sigma2 = 1.0
alpha = 1.5

[mc]
n_paths = 1000
t = 1.0
master_seed = 2
mesh_points = 5
"""
        out = tmp_path / "out"
        path = write(tmp_path, text)
        code = main(["run", str(path), "--output", str(out), "--no-plots"])
        assert code == 2
        assert (out / "FAILED").exists()
        assert "attractor" in (out / "FAILED").read_text()
        assert (out / "report.csv").exists()  # partial outputs kept

    def test_persistence_linear_gap_decreases(self, tmp_path):
        text = """
[run]
schema = 1
experiment = persistence

[spec]
f = linear
f_params = 1.0
g = linear
g_params = 1.0
sigma1 = 0.5
sigma2 = 0.5
alpha = 1.5
x0 = 2.0
y0 = -1.0

[mc]
p = 1.2
n_paths = 1000
t = 2.0
master_seed = 3
nu_list = 1.0, 4.0, 16.0
mesh_points = 10
"""
        out = tmp_path / "out"
        path = write(tmp_path, text)
        assert main(["run", str(path), "--output", str(out), "--no-plots"]) == 0
        rows = [
            line.split(",")
            for line in (out / "report.csv").read_text().splitlines()[1:]
        ]
        gaps = [float(r[2]) for r in rows if r[1] == "stationary_gap_lp"]
        assert gaps == sorted(gaps, reverse=True)
        assert gaps[-1] < gaps[0]

    def test_byte_identical_reruns(self, tmp_path):
        path = write(tmp_path, MINIMAL)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["run", str(path), "--output", str(out1)]) == 0
        assert main(["run", str(path), "--output", str(out2)]) == 0
        for name in ("report.csv", "manifest.jsonl"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        svgs1 = sorted(p.name for p in out1.glob("*.svg"))
        svgs2 = sorted(p.name for p in out2.glob("*.svg"))
        assert svgs1 == svgs2
        for name in svgs1:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestEmitPlot:
    def _report(self):
        from levy_sync.mc import ExperimentReport
        from levy_sync.stats import Estimate

        rep = ExperimentReport("averaging", manifest={"sweep": "epsilon_list"})
        for eps, v in ((0.1, 0.3), (0.05, 0.2), (0.02, 0.12), (0.01, 0.07)):
            rep.add(eps, "slow_vs_averaged_lp", Estimate(v, 0.9 * v, 1.1 * v, 100))
        return rep

    def test_empty_report_rejected(self):
        from levy_sync.mc import ExperimentReport

        with pytest.raises(ValueError):
            emit_plot(ExperimentReport("averaging"), "loglog")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            emit_plot(self._report(), "spiderweb")

    def test_svg_output_and_determinism(self):
        rep = self._report()
        svg1 = emit_plot(rep, "loglog", "slow_vs_averaged_lp")
        svg2 = emit_plot(rep, "loglog", "slow_vs_averaged_lp")
        assert svg1.lstrip().startswith("<?xml")
        assert "<svg" in svg1
        assert svg1 == svg2

    def test_single_row_report(self):
        from levy_sync.mc import ExperimentReport
        from levy_sync.stats import Estimate

        rep = ExperimentReport("averaging", manifest={"sweep": "epsilon_list"})
        rep.add(0.1, "slow_vs_averaged_lp", Estimate(0.3, 0.29, 0.31, 100))
        svg = emit_plot(rep, "loglog")
        assert "<svg" in svg
