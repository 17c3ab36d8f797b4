import csv
import json

import numpy as np
import pytest

from lmg_dynamics.cli import MODELS, OUT_ENV, RunConfig, build_parser, main
from lmg_dynamics.core import ConfigError
from lmg_dynamics.traces import ModelTag, PopulationTrace, write_trace_csv


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parser_defaults():
    args = build_parser().parse_args(["evolve"])
    assert args.command == "evolve"
    assert args.n == 20
    assert args.direction == "forward"
    assert args.model == "full"
    assert args.rate_b is None
    assert args.manifest is None


def test_parser_rejects_unknown_model():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["evolve", "--model", "quantum"])


def test_spectrum_rows(tmp_path):
    assert main(["spectrum", "--n", "20", "--grid", "500", "--out", str(tmp_path)]) == 0
    data = rows(tmp_path / "spectrum.csv")
    assert len(data) == 21 * 500
    assert list(data[0]) == ["s", "level", "energy", "energy_per_spin", "x"]
    first = [float(r["energy"]) for r in data[:21]]
    np.testing.assert_allclose(first, np.arange(-10, 11), atol=1e-12)
    cgc = rows(tmp_path / "cgc.csv")
    assert float(cgc[0]["x_c"]) == 0.0 and float(cgc[-1]["x_c"]) == 1.0


def test_spectrum_even_sector(tmp_path):
    assert main(["spectrum", "--n", "8", "--grid", "11", "--sector", "even", "--out", str(tmp_path)]) == 0
    assert len(rows(tmp_path / "spectrum.csv")) == 5 * 11


@pytest.mark.parametrize("argv", [
    ["spectrum", "--n", "21"],
    ["evolve", "--n", "6", "--grid", "11", "--steps", "105"],
    ["evolve", "--n", "6", "--total-time", "-1"],
    ["evolve", "--n", "6", "--model", "rate", "--initial", "broken"],
    ["fit", "--n", "6", "--rate-b", "-0.1"],
])
def test_config_errors_exit_2(tmp_path, argv, capsys):
    assert main([*argv, "--out", str(tmp_path)]) == 2
    assert "error: --" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    from lmg_dynamics import cli
    from lmg_dynamics.core import NumericalError

    def boom(cfg):
        raise NumericalError("forced")

    monkeypatch.setattr(cli, "run_model", boom)
    assert main(["evolve", "--n", "4", "--out", str(tmp_path)]) == 3


@pytest.mark.parametrize("model", MODELS)
def test_evolve_each_model(tmp_path, model):
    argv = ["evolve", "--n", "8", "--grid", "41", "--steps", "400", "--total-time", "5",
            "--model", model, "--out", str(tmp_path)]
    assert main(argv) == 0
    data = rows(tmp_path / f"trace_{model}.csv")
    assert len(data) == 41 * 5
    summary = json.loads((tmp_path / f"summary_{model}.json").read_text())
    assert sum(summary["final_populations"]) == pytest.approx(1.0, abs=1e-6)
    manifest = json.loads((tmp_path / f"evolve_{model}.manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["config"]["model"] == model


def test_manifest_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["evolve", "--n", "6", "--grid", "21", "--steps", "200", "--model", "chain-fit"]
    assert main([*argv, "--out", str(a)]) == 0
    assert main(["evolve", "--manifest", str(a / "evolve_chain-fit.manifest.json"), "--out", str(b)]) == 0
    for name in ("trace_chain-fit.csv", "summary_chain-fit.json", "evolve_chain-fit.manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_manifest_command_mismatch(tmp_path):
    assert main(["spectrum", "--n", "4", "--grid", "5", "--out", str(tmp_path)]) == 0
    assert main(["evolve", "--manifest", str(tmp_path / "spectrum.manifest.json"), "--out", str(tmp_path)]) == 2


def test_manifest_schema_checked():
    with pytest.raises(ConfigError):
        RunConfig.from_manifest({"schema_version": 99, "config": {}})
    with pytest.raises(ConfigError):
        RunConfig.from_manifest({"schema_version": 1, "config": {"bogus": 1}})


def test_fit_outputs(tmp_path):
    assert main(["fit", "--n", "10", "--grid", "101", "--steps", "100", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "fit.json").read_text())
    assert report["gamma"] > 0
    assert len(report["min_gap"]) == 5
    data = rows(tmp_path / "couplings.csv")
    assert len(data) == 101 * 5
    assert set(data[0]) == {"s", "n", "exact", "exact_abs", "fitted", "gap"}
    assert len(rows(tmp_path / "rates.csv")) == 101 * 5


def trace_file(path, pops):
    grid = np.linspace(0, 1, len(pops))
    write_trace_csv(PopulationTrace(grid, np.array(pops, float), ModelTag.FULL), path)
    return str(path)


def test_compare_identical_and_disjoint(tmp_path, capsys):
    a = trace_file(tmp_path / "a.csv", [[1, 0], [0.5, 0.5]])
    b = trace_file(tmp_path / "b.csv", [[0, 1], [0.5, 0.5]])
    assert main(["compare", a, a, "--out", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["tvd_max"] == 0.0
    assert main(["compare", a, b, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "compare.json").read_text())
    assert report["tvd"] == [1.0, 0.0]
    assert report["argmax_divergence_max"] == 1


def test_compare_grid_mismatch(tmp_path):
    a = trace_file(tmp_path / "a.csv", [[1, 0], [0.5, 0.5]])
    b = trace_file(tmp_path / "b.csv", [[1, 0], [0.5, 0.5], [0, 1]])
    assert main(["compare", a, b]) == 2


def test_env_output_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert main(["spectrum", "--n", "4", "--grid", "5"]) == 0
    assert (tmp_path / "env" / "spectrum.csv").exists()
    assert main(["spectrum", "--n", "4", "--grid", "5", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "spectrum.csv").exists()
