import pytest

from config import ExperimentConfig
from errors import ParseError
from experiments import Check, ExperimentResult, list_presets, run_preset
from main import EXIT_FAILED_CHECK, EXIT_NOT_CONVERGED, EXIT_PARSE_ERROR, EXIT_PASS, exit_code, main

CUSTOM_1D = """\
domain = interval -1 1
v = zero
data = const 1
n = 17
"""


def test_list_presets():
    text = list_presets()
    for name in ("example-point", "example-twin", "example-obstacle", "oned-sweep", "verify-all"):
        assert name in text


def test_unknown_preset():
    with pytest.raises(ParseError):
        run_preset("example-moon", ExperimentConfig())


def test_list_command(capsys):
    assert main(["list"]) == EXIT_PASS
    assert "oned-sweep" in capsys.readouterr().out


def test_run_needs_preset_or_config(tmp_path):
    assert main(["run", "--out", str(tmp_path)]) == EXIT_PARSE_ERROR


def test_custom_config_run(tmp_path):
    path = tmp_path / "torsion.cfg"
    path.write_text(CUSTOM_1D, encoding="utf-8")
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--out", str(out)]) == EXIT_PASS
    for name in ("summary.txt", "torsion.csv", "zeroset.csv", "solution.csv", "verdicts.csv"):
        assert (out / name).is_file()
    summary = (out / "summary.txt").read_text(encoding="utf-8")
    assert summary.startswith("# custom:")
    assert "FAIL" not in summary


def test_malformed_potential_line(tmp_path):
    path = tmp_path / "broken.cfg"
    path.write_text("domain = disk 0 0 r=1\nv = point 0 0\n", encoding="utf-8")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_PARSE_ERROR
    assert not (tmp_path / "out" / "summary.txt").exists()


def test_potential_of_wrong_dimension(tmp_path):
    path = tmp_path / "mismatch.cfg"
    path.write_text("domain = interval -1 1\nv = point 0 0 alpha=3\n", encoding="utf-8")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_PARSE_ERROR


def test_exit_codes():
    ok = ExperimentResult("a", "s", [Check("x", True, 0.0)])
    failed = ExperimentResult("b", "s", [Check("x", False, -1.0)])
    stalled = ExperimentResult("c", "s", converged=False)
    assert exit_code([ok]) == EXIT_PASS
    assert exit_code([ok, failed]) == EXIT_FAILED_CHECK
    assert exit_code([ok, None]) == EXIT_FAILED_CHECK
    assert exit_code([failed, stalled]) == EXIT_NOT_CONVERGED


def test_check_margins():
    result = ExperimentResult("demo", "statement")
    assert result.check("loose", -1e-9, tol=1e-8).passed
    assert not result.check("strict", 0.0, strict=True).passed
    assert not result.check("nan", float("nan")).passed
    assert result.summary_text().splitlines()[1] == "CHECK loose PASS margin=-1.000000000000e-09"


def test_invariants_preset():
    result = run_preset("invariants", ExperimentConfig(resolutions=[17]))
    assert result.converged
    assert result.passed, [c for c in result.checks if not c.passed]
    assert "summary.txt" in result.files


def test_bounded_preset():
    result = run_preset("example-bounded", ExperimentConfig(resolutions=[33]))
    assert result.passed, [c for c in result.checks if not c.passed]


def test_twin_strong_planes_give_disjoint_superlevel_sets():
    result = run_preset("example-twin", ExperimentConfig(resolutions=[33], beta=3.0))
    assert result.converged
    assert result.passed, [c for c in result.checks if not c.passed]
    assert "superlevel.csv" in result.files
    relations = result.files["superlevel.csv"].splitlines()[1:]
    assert [line.split(",")[2] for line in relations] == ["disjoint"] * 3


def _csv_files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


@pytest.mark.slow
def test_verify_all_passes_and_is_deterministic(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["run", "verify-all", "--n", "33", "--out", str(first)]) == EXIT_PASS
    assert main(["run", "verify-all", "--n", "33", "--out", str(second)]) == EXIT_PASS
    produced = _csv_files(first)
    assert produced == _csv_files(second)
    for name in ("example-point/green_0.csv", "example-point/green_1.csv", "example-point/superlevel.csv"):
        assert name in {str(p) for p in produced}


@pytest.mark.slow
def test_point_refinement(tmp_path):
    code = main(["run", "example-point", "--alpha", "3", "--n", "33,65,129", "--out", str(tmp_path)])
    assert code == EXIT_PASS
    for name in ("torsion.csv", "zeroset.csv", "summary.txt", "refinement.csv", "superlevel.csv", "green_0.csv"):
        assert (tmp_path / name).is_file()
    summary = (tmp_path / "summary.txt").read_text(encoding="utf-8")
    assert "CHECK verdicts_stable PASS" in summary
    assert "CHECK representation_dirac PASS" in summary


@pytest.mark.slow
def test_point_verdicts_stable():
    result = run_preset("example-point", ExperimentConfig(resolutions=[65, 129]))
    assert result.converged
    assert result.passed, [c for c in result.checks if not c.passed]
    assert any(c.name == "verdicts_stable" for c in result.checks)


@pytest.mark.slow
def test_comb_verdicts_stable():
    result = run_preset("example-comb", ExperimentConfig(resolutions=[65, 129]))
    assert result.converged
    assert result.passed, [c for c in result.checks if not c.passed]
    assert any(c.name == "verdicts_stable" for c in result.checks)


@pytest.mark.slow
def test_twin_with_weak_second_plane():
    result = run_preset("example-twin", ExperimentConfig(resolutions=[65, 129], beta=1.5))
    assert result.converged
    assert result.passed, [c for c in result.checks if not c.passed]


@pytest.mark.slow
def test_obstacle_refinement():
    result = run_preset("example-obstacle", ExperimentConfig(resolutions=[65, 129]))
    assert result.converged
    assert result.passed, [c for c in result.checks if not c.passed]


@pytest.mark.slow
def test_obstacle_density_under_halving():
    result = run_preset("example-obstacle", ExperimentConfig(resolutions=[33, 65, 129], alpha=3.0))
    assert result.converged
    assert result.passed, [c for c in result.checks if not c.passed]
    rows = [line.split(",") for line in result.files["density.csv"].splitlines()[1:]]
    fractions = [float(row[2]) for row in rows]
    assert [row[3] for row in rows] == ["0", "0", "0"]
    assert fractions == sorted(fractions)
    assert fractions[-1] == 1.0


@pytest.mark.slow
def test_oned_sweep():
    result = run_preset("oned-sweep", ExperimentConfig())
    assert result.converged
    assert result.passed, [c for c in result.checks if not c.passed]
