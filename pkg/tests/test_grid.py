import numpy as np
import pytest

from errors import EmptyDomain, IncompatibleField, InvalidDomain, ParseError, ResolutionTooCoarse
from grid import (
    DomainSpec,
    Field,
    apply_neg_laplacian,
    build_grid,
    dirichlet_energy,
    field_to_csv,
    gradient_l1,
    integrate,
    norms,
    parse_domain,
)


@pytest.fixture
def line5():
    return build_grid(DomainSpec.interval(-1.0, 1.0, 5))


def test_interval_nodes(line5):
    assert line5.size == 3
    assert line5.h == pytest.approx(0.5)
    np.testing.assert_allclose(line5.coords[:, 0], [-0.5, 0.0, 0.5])


def test_disk_keeps_strict_interior():
    g = build_grid(DomainSpec.disk(0.0, 0.0, 1.0, 5))
    assert g.size == 9
    assert np.all(np.hypot(g.coords[:, 0], g.coords[:, 1]) < 1.0)


def test_too_coarse():
    with pytest.raises(ResolutionTooCoarse):
        build_grid(DomainSpec.interval(-1.0, 1.0, 2))


def test_rectangle_height_must_fit_spacing():
    with pytest.raises(InvalidDomain):
        build_grid(DomainSpec.rectangle(0.0, 1.0, 0.0, 0.3, 5))


def test_tiny_rectangle_has_no_interior():
    with pytest.raises((EmptyDomain, ResolutionTooCoarse)):
        build_grid(DomainSpec.rectangle(0.0, 1.0, 0.0, 0.25, 5))


def test_invalid_specs():
    with pytest.raises(InvalidDomain):
        DomainSpec.interval(1.0, -1.0)
    with pytest.raises(InvalidDomain):
        DomainSpec.disk(0.0, 0.0, 0.0)


def test_neighbors_mark_missing_with_minus_one(line5):
    np.testing.assert_array_equal(line5.neighbors, [[-1, 1], [0, 2], [1, -1]])


def test_laplacian_exact_on_quadratic():
    g = build_grid(DomainSpec.interval(-1.0, 1.0, 9))
    theta = Field.from_function(g, lambda x: (1 - x[:, 0] ** 2) / 2)
    np.testing.assert_allclose(apply_neg_laplacian(g, theta).values, 1.0, atol=1e-12)


def test_laplacian_of_zero(line5):
    assert np.all(apply_neg_laplacian(line5, Field.zeros(line5)).values == 0)


def test_bilinear_is_discrete_harmonic():
    g = build_grid(DomainSpec.rectangle(-1.0, 1.0, -1.0, 1.0, 9))
    u = Field.from_function(g, lambda x: x[:, 0] * x[:, 1])
    inner = np.all(g.neighbors >= 0, axis=1)
    assert inner.any()
    np.testing.assert_allclose(apply_neg_laplacian(g, u).values[inner], 0.0, atol=1e-12)


def test_integrate(line5):
    assert integrate(line5, Field.constant(line5, 1.0)) == pytest.approx(1.5)
    assert integrate(line5, Field.zeros(line5)) == 0.0
    assert integrate(line5, Field(line5, [0.375, 0.5, 0.375])) == pytest.approx(0.625)


def test_norms(line5):
    n = norms(Field.constant(line5, 2.0))
    assert (n.l1, n.linf, n.l1_weighted) == (pytest.approx(3.0), 2.0, None)
    weighted = norms(Field(line5, [1.0, -2.0, 1.0]), Field(line5, [1.0, 1.0, 0.0]))
    assert weighted.l1_weighted == pytest.approx(1.5)


def test_field_rejects_bad_values(line5):
    with pytest.raises(IncompatibleField):
        Field(line5, [1.0, 2.0])
    with pytest.raises(IncompatibleField):
        Field(line5, [1.0, np.nan, 0.0])


def test_field_arithmetic_checks_grid(line5):
    other = build_grid(DomainSpec.interval(-1.0, 1.0, 7))
    with pytest.raises(IncompatibleField):
        Field.zeros(line5) + Field.zeros(other)
    u = 2.0 * Field.constant(line5, 1.5) - 1.0
    np.testing.assert_allclose(u.values, 2.0)
    assert (-u).min() == -2.0


def test_field_values_are_read_only(line5):
    u = Field.zeros(line5)
    with pytest.raises(ValueError):
        u.values[0] = 1.0


def test_dirichlet_energy_matches_laplacian_pairing():
    g = build_grid(DomainSpec.disk(0.0, 0.0, 1.0, 17))
    rng = np.random.default_rng(3)
    u = Field(g, rng.normal(size=g.size))
    pairing = integrate(g, u * apply_neg_laplacian(g, u))
    assert dirichlet_energy(u) == pytest.approx(pairing, rel=1e-12)


def test_gradient_l1_of_plateau(line5):
    # total variation of a unit plateau with zero boundary values
    assert gradient_l1(Field.constant(line5, 1.0)) == pytest.approx(2.0)


def test_meets_box():
    obstacle = DomainSpec.disk(0.0, 0.0, 0.3)
    assert not obstacle.meets_box([[0.5, 0.0]], 0.1)[0]
    assert obstacle.meets_box([[0.5, 0.0]], 0.25)[0]


def test_parse_domain():
    assert parse_domain("disk 0 0 r=1", 17) == DomainSpec.disk(0.0, 0.0, 1.0, 17)
    assert parse_domain("rect -1 1 -1 1") == DomainSpec.rectangle(-1, 1, -1, 1)
    assert parse_domain("interval 0 2").measure == 2.0
    for bad in ("triangle 0 1", "disk 0 0", "interval a b", "interval 1 0"):
        with pytest.raises(ParseError):
            parse_domain(bad)


def test_csv_dump(line5):
    text = field_to_csv(Field(line5, [1.0, 2.0, 3.0]))
    lines = text.splitlines()
    assert lines[0] == "i,x,value"
    assert lines[1] == "1,-5.000000000000e-01,1.000000000000e+00"
    assert len(lines) == 4
    g = build_grid(DomainSpec.disk(0.0, 0.0, 1.0, 5))
    assert field_to_csv(Field.zeros(g)).startswith("i,j,x,y,value\n")
