import numpy as np
import pytest

from errors import InvalidArgument, InvalidWeight
from grid import DomainSpec, Field, build_grid
from linsolve import SolveOptions, assemble_dense, cg_solve


@pytest.fixture
def line5():
    return build_grid(DomainSpec.interval(-1.0, 1.0, 5))


def test_torsion_on_three_nodes(line5):
    u, stats = cg_solve(line5, Field.zeros(line5), Field.constant(line5, 1.0))
    assert stats.converged
    np.testing.assert_allclose(u.values, [0.375, 0.5, 0.375], atol=1e-10)


def test_zero_rhs(line5):
    u, stats = cg_solve(line5, Field.constant(line5, 4.0), Field.zeros(line5))
    assert stats.iterations == 0 and stats.converged
    assert not np.any(u.values)


def test_weighted_three_nodes_against_dense(line5):
    W = Field.constant(line5, 4.0)
    A = assemble_dense(line5, W)
    np.testing.assert_allclose(A, [[12, -4, 0], [-4, 12, -4], [0, -4, 12]])
    u, _ = cg_solve(line5, W, Field.constant(line5, 1.0))
    np.testing.assert_allclose(u.values, np.linalg.solve(A, np.ones(3)), atol=1e-10)


def test_negative_weight(line5):
    with pytest.raises(InvalidWeight):
        cg_solve(line5, Field(line5, [1.0, -1.0, 1.0]), Field.constant(line5, 1.0))


@pytest.mark.parametrize("preconditioner", ["diagonal", "none"])
def test_random_disk_against_dense(preconditioner):
    g = build_grid(DomainSpec.disk(0.0, 0.0, 1.0, 17))
    rng = np.random.default_rng(11)
    W = Field(g, rng.uniform(0.0, 1e3, g.size))
    b = Field(g, rng.uniform(-1.0, 1.0, g.size))
    u, stats = cg_solve(g, W, b, SolveOptions(preconditioner=preconditioner))
    assert stats.converged
    oracle = np.linalg.solve(assemble_dense(g, W), b.values)
    np.testing.assert_allclose(u.values, oracle, atol=1e-9)


def test_warm_start_from_solution():
    g = build_grid(DomainSpec.disk(0.0, 0.0, 1.0, 17))
    W, b = Field.zeros(g), Field.constant(g, 1.0)
    u, _ = cg_solve(g, W, b, SolveOptions(rel_tol=1e-12))
    _, stats = cg_solve(g, W, b, SolveOptions(rel_tol=1e-8), x0=u)
    assert stats.iterations == 0


def test_iteration_cap_reports_failure():
    g = build_grid(DomainSpec.disk(0.0, 0.0, 1.0, 33))
    _, stats = cg_solve(g, Field.zeros(g), Field.constant(g, 1.0), SolveOptions(max_iter=2))
    assert not stats.converged
    assert stats.iterations == 2


def test_options_validation():
    with pytest.raises(InvalidArgument):
        SolveOptions(rel_tol=0.0)
    with pytest.raises(InvalidArgument):
        SolveOptions(preconditioner="ilu")
