import pytest

from config import ExperimentConfig, load_config, parse_experiment_file, parse_experiment_text, parse_ladder
from errors import ParseError


def test_parse_experiment_text():
    text = """
# twin slabs at coarse resolution
preset = custom
domain = rectangle -1 1 -1 1
v = hyperplane x1 c=-0.3 alpha=3 + hyperplane x1 c=0.4 alpha=3   # two planes
n = 17, 33
ladder = 1, 4, 12
tol_z = 0.05
"""
    cfg = parse_experiment_text(text)
    assert cfg.domain == "rectangle -1 1 -1 1"
    assert cfg.potential == "hyperplane x1 c=-0.3 alpha=3 + hyperplane x1 c=0.4 alpha=3"
    assert cfg.resolutions == [17, 33]
    assert cfg.ladder == (1.0, 4.0, 12)
    assert cfg.tau_z == 0.05
    assert cfg.lines["potential"] == 5
    assert cfg.data == "const 1"


def test_unknown_key_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_experiment_text("n = 17\n\ncolour = blue\n")
    assert exc.value.line == 3
    assert str(exc.value).startswith("line 3:")


@pytest.mark.parametrize(
    "text",
    [
        "n = 2",
        "n = 17, x",
        "ladder = 1, 0.5, 10",
        "ladder = 1, 2",
        "alpha = strong",
        "sampling = midpoint",
        "domain =",
        "just words",
    ],
)
def test_bad_lines(text):
    with pytest.raises(ParseError) as exc:
        parse_experiment_text(text)
    assert exc.value.line == 1


def test_parse_ladder_without_line():
    with pytest.raises(ParseError) as exc:
        parse_ladder("0, 2, 10")
    assert exc.value.line == 0
    assert not str(exc.value).startswith("line")


def test_overrides_skip_none():
    cfg = ExperimentConfig(alpha=3.0)
    updated = cfg.with_overrides(alpha=None, beta=1.5, resolutions=[65])
    assert updated.alpha == 3.0 and updated.beta == 1.5
    assert updated.resolutions == [65]
    assert cfg.beta is None


def test_parse_experiment_file(tmp_path):
    path = tmp_path / "twin.cfg"
    path.write_text("preset = example-twin\nbeta = 1.5\n", encoding="utf-8")
    cfg = parse_experiment_file(str(path))
    assert cfg.preset == "example-twin" and cfg.beta == 1.5


def test_load_config_reads_environment(monkeypatch):
    monkeypatch.setenv("SCHRO_TAU_Z", "0.05")
    monkeypatch.setenv("SCHRO_LOG_LEVEL", "debug")
    monkeypatch.setenv("SCHRO_LADDER_MAX_RUNGS", "30")
    cfg = load_config()
    assert cfg.TAU_Z == 0.05
    assert cfg.LOG_LEVEL == "DEBUG"
    assert cfg.LADDER_MAX_RUNGS == 30
