import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config import config
from errors import InvalidArgument, InvalidWeight
from grid import Field, Grid

logger = logging.getLogger(__name__)

PRECONDITIONERS = ("none", "diagonal")


@dataclass(frozen=True)
class SolveOptions:
    rel_tol: float = config.CG_REL_TOL
    max_iter: Optional[int] = None  # None means 20 * node count
    preconditioner: str = "diagonal"

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise InvalidArgument(f"rel_tol must be positive, got {self.rel_tol}")
        if self.preconditioner not in PRECONDITIONERS:
            raise InvalidArgument(f"unknown preconditioner '{self.preconditioner}'")


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    residual: float
    converged: bool
    restarts: int = 0


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # pairwise np.sum keeps the reduction order fixed
    return float(np.sum(a * b))


def cg_solve(
    g: Grid,
    W: Field,
    b: Field,
    opts: Optional[SolveOptions] = None,
    x0: Optional[Field] = None,
) -> Tuple[Field, SolveStats]:
    """Preconditioned conjugate gradients for (-Laplacian_h + diag(W)) u = b"""
    opts = opts or SolveOptions()
    W.check_grid(g)
    b.check_grid(g)
    if np.any(W.values < 0):
        raise InvalidWeight(f"weight has {int(np.sum(W.values < 0))} negative entries")

    weight = W.values
    rhs = b.values
    max_iter = opts.max_iter if opts.max_iter is not None else 20 * g.size
    diag = 2 * g.dim / g.h ** 2 + weight
    inv_diag = 1.0 / diag if opts.preconditioner == "diagonal" else np.ones(g.size)

    def apply(x):
        return g.apply_stencil(x) + weight * x

    b_norm = np.sqrt(_dot(rhs, rhs))
    if b_norm == 0.0:
        return Field.zeros(g), SolveStats(0, 0.0, True)
    target = opts.rel_tol * b_norm

    x = np.array(x0.check_grid(g).values) if x0 is not None else np.zeros(g.size)
    r = rhs - apply(x)
    r_norm = np.sqrt(_dot(r, r))
    iterations, restarts = 0, 0

    while r_norm > target and iterations < max_iter:
        z = inv_diag * r
        p = z.copy()
        rz = _dot(r, z)
        while iterations < max_iter:
            Ap = apply(p)
            pAp = _dot(p, Ap)
            if pAp <= 0.0:
                break
            step = rz / pAp
            x += step * p
            r -= step * Ap
            iterations += 1
            if np.sqrt(_dot(r, r)) <= target:
                break
            z = inv_diag * r
            rz_next = _dot(r, z)
            p = z + (rz_next / rz) * p
            rz = rz_next

        # the recursive residual drifts; confirm against the true one
        r = rhs - apply(x)
        r_norm = np.sqrt(_dot(r, r))
        if r_norm > target and iterations < max_iter:
            restarts += 1
            logger.debug(f"CG restart {restarts} at iteration {iterations}, residual {r_norm / b_norm:.3e}")
            if restarts > 50:
                break

    converged = r_norm <= target
    stats = SolveStats(iterations, float(r_norm / b_norm), bool(converged), restarts)
    if not converged:
        logger.warning(f"❌ CG did not converge: {iterations} iterations, relative residual {stats.residual:.3e}")
    return Field(g, x), stats


def assemble_dense(g: Grid, W: Optional[Field] = None) -> np.ndarray:
    """Dense matrix of -Laplacian_h + diag(W); small grids only"""
    weight = W.check_grid(g).values if W is not None else np.zeros(g.size)
    A = np.diag(2 * g.dim / g.h ** 2 + weight)
    rows, slots = np.nonzero(g.neighbors >= 0)
    A[rows, g.neighbors[rows, slots]] -= 1.0 / g.h ** 2
    return A
