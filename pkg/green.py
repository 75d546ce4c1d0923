import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import config
from errors import SourcesTooClose
from grid import Field, Grid, field_to_csv
from linsolve import SolveOptions
from potential import Potential, TruncationLadder
from schrodinger import DataLike, LadderReport, MeasureData, _data_values, solve_ladder, solve_measure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GreenFunction:
    source: Tuple[float, ...]
    node: int
    field: Field
    report: LadderReport

    @property
    def grid(self) -> Grid:
        return self.field.grid

    def off_source(self) -> np.ndarray:
        """Values with the source node dropped"""
        return np.delete(self.field.values, self.node)


def green_function(
    g: Grid,
    V: Potential,
    x,
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
    mollify: Optional[float] = None,
) -> GreenFunction:
    """G_x: the duality solution with a unit atom at x"""
    mu = MeasureData.dirac(x)
    if mollify:
        mu = mu.mollified(mollify)
    u, report = solve_measure(g, V, mu, ladder, opts)
    source = tuple(float(c) for c in np.atleast_1d(x))
    return GreenFunction(source, g.nearest_node(source), u, report)


def green_functions(
    g: Grid,
    V: Potential,
    sources: Sequence,
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
    workers: Optional[int] = None,
) -> List[GreenFunction]:
    """Green functions for several sources, returned in source order"""
    with ThreadPoolExecutor(max_workers=workers or config.WORKERS) as pool:
        return list(pool.map(lambda x: green_function(g, V, x, ladder, opts), sources))


def green_batch_csv(batch: Sequence[GreenFunction]) -> Dict[str, str]:
    """One field dump per source, keyed `green_<index>.csv`"""
    return {f"green_{i}.csv": field_to_csv(G.field) for i, G in enumerate(batch)}


def symmetry_defect(G_x: GreenFunction, G_y: GreenFunction) -> float:
    """|G_x(y) - G_y(x)| read at the nodes nearest to the sources"""
    g = G_x.grid
    distance = math.dist(G_x.source, G_y.source)
    if distance < 2 * g.h or G_x.node == G_y.node:
        raise SourcesTooClose(f"sources {G_x.source} and {G_y.source} are {distance:.3g} apart (h={g.h:g})")
    return abs(float(G_x.field.values[G_y.node]) - float(G_y.field.values[G_x.node]))


def _relative_error(lhs: float, rhs: float) -> float:
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


def representation_check(
    g: Grid,
    V: Potential,
    f: DataLike,
    samples: Sequence,
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
    workers: Optional[int] = None,
) -> float:
    """Worst relative gap between zeta_f(x) and integral(G_x f) over the samples"""
    values = _data_values(g, f)
    u, _ = solve_ladder(g, V, f, ladder, opts)
    if not np.any(values):
        return 0.0
    worst = 0.0
    for G in green_functions(g, V, samples, ladder, opts, workers):
        rhs = g.cell_volume * float(np.sum(G.field.values * values))
        worst = max(worst, _relative_error(float(u.values[G.node]), rhs))
    return worst


def measure_representation_check(
    g: Grid,
    V: Potential,
    mu: MeasureData,
    samples: Sequence,
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
    workers: Optional[int] = None,
) -> float:
    """Worst relative gap between u(x) and integral(G_x dmu) for measure data"""
    u, report = solve_measure(g, V, mu, ladder, opts)
    if mu.is_zero:
        return 0.0
    b = mu.rhs(g, report.final_rung)
    worst = 0.0
    for G in green_functions(g, V, samples, ladder, opts, workers):
        rhs = g.cell_volume * float(np.sum(G.field.values * b))
        worst = max(worst, _relative_error(float(u.values[G.node]), rhs))
    return worst


def fundamental_bound(g: Grid, source_node: int) -> np.ndarray:
    """F(x - y) = log(d / |x - y|) / (2 pi) with d = 1.25 diam; +inf at the source"""
    d = 1.25 * g.spec.diameter
    r = np.sqrt(np.sum((g.coords - g.coords[source_node]) ** 2, axis=1))
    with np.errstate(divide="ignore"):
        return np.log(d / r) / (2.0 * math.pi)


def fundamental_bound_margin(G: GreenFunction) -> float:
    """Smallest slack in 0 <= G_x <= F(x - .) off the source node.

    In 1D the bound is replaced by G_x(source) itself.
    """
    g = G.grid
    values = G.off_source()
    floor = float(np.min(values, initial=math.inf))
    if g.dim == 1:
        upper = float(G.field.values[G.node]) - values
    else:
        upper = np.delete(fundamental_bound(g, G.node), G.node) - values
    return min(floor, float(np.min(upper, initial=math.inf)))
