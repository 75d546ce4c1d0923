import math
from dataclasses import replace

import numpy as np
import pytest

from errors import ConfigurationError, InvalidArgument
from grid import DomainSpec, Field, build_grid
from potential import Constant, Hyperplane, Point, Zero
from schrodinger import MeasureData
from zeroset import analyze
from principles import (
    ComparisonParams,
    check_alternative,
    check_comparison,
    comparison_H,
    hopf_criterion_1d,
    kato_check,
    oned_regime_classifier,
    selective_solution,
)


@pytest.fixture
def disk33():
    return build_grid(DomainSpec.disk(0.0, 0.0, 1.0, 33))


def test_comparison_function():
    params = ComparisonParams(C=0.5, alpha=2.0)
    assert comparison_H(0.0, params) == 0.0
    assert comparison_H(3.0, params) == pytest.approx(1.0)
    assert comparison_H(0.5, params) == pytest.approx(0.25)
    np.testing.assert_allclose(comparison_H(np.array([0.5, 3.0]), params), [0.25, 1.0])
    with pytest.raises(InvalidArgument):
        comparison_H(-0.1, params)


def test_comparison_params_validation():
    with pytest.raises(InvalidArgument):
        ComparisonParams(C=0.5, alpha=1.0)
    with pytest.raises(InvalidArgument):
        ComparisonParams(C=0.0)


def test_comparison_with_zero_measure(disk33):
    result = check_comparison(disk33, Point((0.0, 0.0), 3.0), MeasureData())
    assert result.margin == 0.0
    assert not np.any(result.u.values) and not np.any(result.w.values)


def test_comparison_for_torsion_in_1d():
    g = build_grid(DomainSpec.interval(-1.0, 1.0, 33))
    result = check_comparison(g, Zero(), 1.0)
    assert result.margin >= -1e-6 * result.max_u


def test_comparison_for_dirac_near_point_singularity(disk33):
    result = check_comparison(disk33, Point((0.0, 0.0), 3.0), MeasureData.dirac((0.4, 0.1)))
    assert result.margin >= -1e-6 * result.max_u


def test_alternative_without_potential(disk33):
    report = analyze(disk33, Zero())
    verdict = check_alternative(report.zeta1, report)
    assert verdict.verdicts == ["positive"]
    assert not verdict.has_violation
    zero = check_alternative(Field.zeros(disk33), report)
    assert zero.verdicts == ["zero"]
    assert verdict.to_csv("demo").splitlines()[0] == "experiment,component,verdict,min,max"


def test_selective_datum_on_three_slabs(disk33):
    V = Hyperplane(0, -0.3, 3.0) + Hyperplane(0, 0.4, 3.0)
    report = analyze(disk33, V)
    labels = [report.labels.label_at(p) for p in ((-0.65, 0.0), (0.05, 0.0), (0.7, 0.0))]
    u, _ = selective_solution(disk33, V, report, [labels[1]])
    by_label = {e.component: e.verdict for e in check_alternative(u, report).entries}
    assert [by_label[label] for label in labels] == ["zero", "positive", "zero"]


def test_zero_component_carrying_mass_is_flagged(disk33):
    report = analyze(disk33, Zero())
    data = MeasureData.from_density(Field.constant(disk33, 1.0))
    verdict = check_alternative(Field.zeros(disk33), report, data=data)
    assert verdict.verdicts == ["violation"]
    assert verdict.entries[0].carries_data


def test_fringe_component_reports_zero_instead_of_violation(disk33):
    report = analyze(disk33, Zero())
    u = Field(disk33, np.maximum(disk33.coords[:, 0], 0.0))
    assert check_alternative(u, report).verdicts == ["violation"]
    fringe = replace(report, components=(replace(report.components[0], fringe=True),))
    verdict = check_alternative(u, fringe)
    assert verdict.verdicts == ["zero"]
    assert not verdict.has_violation


def test_hopf_diverges_for_strong_singularity():
    result = hopf_criterion_1d(Point((0.0,), 2.5), 0.0, 0.5)
    assert result.diverges
    assert result.value == math.inf
    assert len(result.partial_integrals) == 41


def test_hopf_value_for_weak_singularity():
    result = hopf_criterion_1d(Point((0.0,), 1.5), 0.0, 0.5)
    assert not result.diverges
    assert result.value == pytest.approx(2 * math.sqrt(0.5), abs=1e-6)


def test_hopf_without_potential():
    result = hopf_criterion_1d(Zero(), 0.0, 0.5)
    assert not result.diverges and result.value == 0.0


@pytest.mark.parametrize("alpha", [1.0, 1.5, 1.9, 2.0, 2.5, 3.0])
def test_hopf_flips_at_two(alpha):
    assert hopf_criterion_1d(Point((0.0,), alpha), 0.0, 0.5).diverges == (alpha >= 2)


def test_hopf_left_side_and_bad_arguments():
    assert hopf_criterion_1d(Point((0.0,), 2.5), 0.0, 0.5, side=-1).diverges
    with pytest.raises(InvalidArgument):
        hopf_criterion_1d(Zero(), 0.0, 0.5, side=0)
    with pytest.raises(ConfigurationError):
        hopf_criterion_1d(Constant(math.inf), 0.0, 0.5)


@pytest.mark.parametrize("center", [0.3, 0.01, -0.2])
def test_hopf_rejects_singularity_off_the_boundary_point(center):
    V = Point((center,), 3.0)
    side = -1 if center < 0 else 1
    with pytest.raises(ConfigurationError):
        hopf_criterion_1d(V, 0.0, 0.5, side=side)


def test_hopf_accepts_integrable_singularity_off_the_boundary_point():
    V = Point((0.0,), 2.5) + Point((0.3,), 0.5)
    assert hopf_criterion_1d(V, 0.0, 0.5).diverges
    assert not hopf_criterion_1d(Point((0.3,), 0.5), 0.0, 0.5).diverges


@pytest.mark.parametrize("alpha,expected", [(0.5, "Z_empty"), (1.5, "Z_everything"), (2.5, "Z_point")])
def test_oned_regimes(alpha, expected):
    verdict = oned_regime_classifier(alpha)
    assert verdict.verdict == expected
    assert not verdict.mismatch


def test_kato_inequality(disk33):
    rng = np.random.default_rng(2)
    V = Point((0.0, 0.0), 3.0)
    for _ in range(3):
        h = Field(disk33, rng.uniform(-1.0, 1.0, disk33.size))
        assert kato_check(disk33, V, h, 1e3) >= -1e-10


def test_positive_datum_makes_kato_tight(disk33):
    # with zeta_h > 0 everywhere both sides are the same integral
    assert kato_check(disk33, Zero(), 1.0, 1.0) == pytest.approx(0.0, abs=1e-10)
