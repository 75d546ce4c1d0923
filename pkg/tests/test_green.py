import numpy as np
import pytest

from errors import SourcesTooClose
from grid import DomainSpec, Field, build_grid
from linsolve import assemble_dense
from potential import Point, Tabulated, Zero
from schrodinger import MeasureData
from green import (
    fundamental_bound_margin,
    green_batch_csv,
    green_function,
    green_functions,
    measure_representation_check,
    representation_check,
    symmetry_defect,
)


@pytest.fixture
def line9():
    return build_grid(DomainSpec.interval(-1.0, 1.0, 9))


@pytest.fixture
def disk33():
    return build_grid(DomainSpec.disk(0.0, 0.0, 1.0, 33))


def test_triangle_in_1d(line9):
    G = green_function(line9, Zero(), (0.0,))
    np.testing.assert_allclose(G.field.values, (1 - np.abs(line9.coords[:, 0])) / 2, atol=1e-10)
    assert G.node == line9.nearest_node((0.0,))
    assert len(G.off_source()) == line9.size - 1


def test_symmetry_without_potential(line9):
    G_x, G_y = green_functions(line9, Zero(), [(-0.25,), (0.25,)])
    assert symmetry_defect(G_x, G_y) <= 1e-9


def test_sources_too_close(disk33):
    G_x, G_y = green_functions(disk33, Zero(), [(0.0, 0.0), (0.05, 0.0)])
    with pytest.raises(SourcesTooClose):
        symmetry_defect(G_x, G_y)


@pytest.mark.parametrize("spec", [DomainSpec.interval(-1.0, 1.0, 9), DomainSpec.rectangle(-1.0, 1.0, -1.0, 1.0, 9)])
def test_bounded_random_potential_against_dense_inverse(spec):
    g = build_grid(spec)
    rng = np.random.default_rng(7)
    weights = rng.uniform(0.0, 10.0, g.size)
    inverse = np.linalg.inv(assemble_dense(g, Field(g, weights)))
    batch = green_functions(g, Tabulated(g, weights), [g.coords[0], g.coords[g.size // 2], g.coords[-1]])
    for i, G in enumerate(batch):
        np.testing.assert_allclose(G.field.values, inverse[:, G.node] / g.cell_volume, atol=1e-8)
        for other in batch[i + 1:]:
            assert symmetry_defect(G, other) <= 1e-8


def test_symmetry_across_point_singularity(disk33):
    G_x, G_y = green_functions(disk33, Point((0.0, 0.0), 3.0), [(-0.4, 0.0), (0.4, 0.1)])
    scale = max(np.max(G_x.off_source()), np.max(G_y.off_source()))
    assert symmetry_defect(G_x, G_y) <= 0.02 * scale


def test_representation_with_zero_datum(disk33):
    assert representation_check(disk33, Zero(), 0.0, [(0.2, 0.2)]) == 0.0


def test_representation_formula(disk33):
    samples = [(0.5, 0.0), (-0.4, 0.3), (0.2, -0.6), (-0.3, -0.45), (0.6, 0.5)]
    assert representation_check(disk33, Point((0.0, 0.0), 3.0), 1.0, samples) <= 0.02


def test_representation_for_measure_data(disk33):
    mu = MeasureData.dirac((0.3, 0.3), 2.0)
    assert measure_representation_check(disk33, Point((0.0, 0.0), 3.0), mu, [(-0.5, 0.0), (0.0, -0.5)]) <= 0.02


def test_fundamental_solution_bound(disk33):
    G = green_function(disk33, Zero(), (0.2, -0.1))
    assert fundamental_bound_margin(G) >= -1e-8


def test_fundamental_bound_in_1d(line9):
    assert fundamental_bound_margin(green_function(line9, Zero(), (0.25,))) >= -1e-10


def test_batch_csv_names(line9):
    files = green_batch_csv(green_functions(line9, Zero(), [(-0.5,), (0.5,)]))
    assert sorted(files) == ["green_0.csv", "green_1.csv"]
    assert files["green_0.csv"].startswith("i,x,value\n")
