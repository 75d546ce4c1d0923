import logging
import re
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from config import LabConfig, config
from errors import InvalidArgument, InvalidDomain, InvalidPotential, ParseError
from grid import DomainSpec, Field, Grid, _split_keywords, parse_domain

logger = logging.getLogger(__name__)

SAMPLING_MODES = ("node", "cell")

# midpoints of a 4-way split of [-1/2, 1/2]
_SUBCELL = np.array([-0.375, -0.125, 0.125, 0.375])


def _power_cell_mean(lo: np.ndarray, hi: np.ndarray, alpha: float) -> np.ndarray:
    """Mean of |s|^-alpha over [lo, hi]; callers exclude non-integrable segments"""
    with np.errstate(divide="ignore", invalid="ignore"):
        if alpha == 1.0:
            def antiderivative(s):
                return np.sign(s) * np.log(np.abs(s))
        else:
            def antiderivative(s):
                return np.sign(s) * np.abs(s) ** (1.0 - alpha) / (1.0 - alpha)
        return (antiderivative(hi) - antiderivative(lo)) / (hi - lo)


class Potential:
    """A Borel potential V: Omega -> [0, +inf]"""

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def singular_cells(self, g: Grid) -> np.ndarray:
        """Nodes whose closed cell meets a set where V is not locally integrable"""
        return np.zeros(g.size, dtype=bool)

    def cell_average(self, g: Grid) -> np.ndarray:
        infinite = self.singular_cells(g)
        offsets = np.stack(np.meshgrid(*([_SUBCELL] * g.dim), indexing="ij"), axis=-1).reshape(-1, g.dim)
        total = np.zeros(g.size)
        for offset in offsets:
            total += self.evaluate(g.coords + g.h * offset)
        averaged = total / offsets.shape[0]
        return np.where(infinite, np.inf, averaged)

    def describe(self) -> str:
        return type(self).__name__.lower()

    def __add__(self, other: "Potential") -> "Potential":
        left = self.terms if isinstance(self, Sum) else (self,)
        right = other.terms if isinstance(other, Sum) else (other,)
        return Sum(tuple(left) + tuple(right))


@dataclass(frozen=True)
class Zero(Potential):
    def evaluate(self, points):
        return np.zeros(np.asarray(points).shape[0])

    def cell_average(self, g):
        return np.zeros(g.size)

    def describe(self):
        return "zero"


@dataclass(frozen=True)
class Constant(Potential):
    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise InvalidPotential(f"constant potential must be nonnegative, got {self.value}")

    def evaluate(self, points):
        return np.full(np.asarray(points).shape[0], float(self.value))

    def singular_cells(self, g):
        return np.full(g.size, np.isinf(self.value))

    def cell_average(self, g):
        return np.full(g.size, float(self.value))

    def describe(self):
        return f"const {self.value:g}"


@dataclass(frozen=True)
class Point(Potential):
    """|x - a|^-alpha"""

    center: Tuple[float, ...]
    alpha: float

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        r = np.sqrt(np.sum((pts - np.asarray(self.center)) ** 2, axis=1))
        with np.errstate(divide="ignore"):
            return r ** (-self.alpha)

    def singular_cells(self, g):
        if self.alpha < g.dim:
            return np.zeros(g.size, dtype=bool)
        gap = np.max(np.abs(g.coords - np.asarray(self.center)), axis=1)
        return gap <= g.h / 2

    def cell_average(self, g):
        if g.dim != 1:
            return super().cell_average(g)
        s = g.coords[:, 0] - self.center[0]
        mean = _power_cell_mean(s - g.h / 2, s + g.h / 2, self.alpha)
        return np.where(self.singular_cells(g), np.inf, mean)

    def describe(self):
        return f"point {' '.join(f'{c:g}' for c in self.center)} alpha={self.alpha:g}"


@dataclass(frozen=True)
class Hyperplane(Potential):
    """|x_axis - c|^-alpha"""

    axis: int
    offset: float
    alpha: float

    def evaluate(self, points):
        s = np.abs(np.asarray(points, dtype=float)[:, self.axis] - self.offset)
        with np.errstate(divide="ignore"):
            return s ** (-self.alpha)

    def singular_cells(self, g):
        if self.alpha < 1:
            return np.zeros(g.size, dtype=bool)
        return np.abs(g.coords[:, self.axis] - self.offset) <= g.h / 2

    def cell_average(self, g):
        s = g.coords[:, self.axis] - self.offset
        mean = _power_cell_mean(s - g.h / 2, s + g.h / 2, self.alpha)
        return np.where(self.singular_cells(g), np.inf, mean)

    def describe(self):
        return f"hyperplane x{self.axis + 1} c={self.offset:g} alpha={self.alpha:g}"


@dataclass(frozen=True)
class Sum(Potential):
    terms: Tuple[Potential, ...]

    def evaluate(self, points):
        total = np.zeros(np.asarray(points).shape[0])
        for term in self.terms:
            total = total + term.evaluate(points)
        return total

    def singular_cells(self, g):
        mask = np.zeros(g.size, dtype=bool)
        for term in self.terms:
            mask |= term.singular_cells(g)
        return mask

    def cell_average(self, g):
        total = np.zeros(g.size)
        for term in self.terms:
            total = total + term.cell_average(g)
        return total

    def describe(self):
        return " + ".join(term.describe() for term in self.terms)


@dataclass(frozen=True)
class DistanceToSet(Potential):
    """d(x, obstacle)^-alpha, infinite on the closed obstacle"""

    obstacle: DomainSpec
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidPotential(f"distance potential needs alpha > 0, got {self.alpha}")

    def evaluate(self, points):
        d = self.obstacle.distance(points)
        with np.errstate(divide="ignore"):
            return d ** (-self.alpha)

    def singular_cells(self, g):
        return self.obstacle.meets_box(g.coords, g.h / 2)

    def describe(self):
        return f"distset {self.obstacle.describe()} alpha={self.alpha:g}"


@dataclass(frozen=True)
class InfiniteIndicator(Potential):
    """+inf on the closed region, 0 elsewhere"""

    region: DomainSpec

    def evaluate(self, points):
        return np.where(self.region.distance(points) <= 0.0, np.inf, 0.0)

    def singular_cells(self, g):
        return self.region.meets_box(g.coords, g.h / 2)

    def cell_average(self, g):
        return np.where(self.singular_cells(g), np.inf, 0.0)

    def describe(self):
        return f"indicator {self.region.describe()}"


class Tabulated(Potential):
    """Node values on a reference grid, read back at the nearest reference node"""

    def __init__(self, grid: Grid, values):
        vals = np.array(values, dtype=float).reshape(-1)
        if vals.shape[0] != grid.size:
            raise InvalidPotential(f"{vals.shape[0]} values for a grid of {grid.size} nodes")
        if np.any(np.isnan(vals)) or np.any(vals < 0):
            raise InvalidPotential("tabulated potential must be nonnegative")
        vals.flags.writeable = False
        self.grid = grid
        self.values = vals

    @classmethod
    def from_field(cls, f: Field) -> "Tabulated":
        return cls(f.grid, f.values)

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, self.grid.dim)
        return np.array([self.values[self.grid.nearest_node(p)] for p in pts])

    def singular_cells(self, g):
        return np.isinf(self.cell_average(g))

    def cell_average(self, g):
        if g.spec == self.grid.spec:
            return self.values.copy()
        return self.evaluate(g.coords)

    def describe(self):
        return f"tabulated({self.grid.size} nodes)"


class Custom(Potential):
    """Wraps a vectorised evaluator taking an (m, N) coordinate array"""

    def __init__(self, evaluator: Callable[[np.ndarray], np.ndarray], name: str = "custom"):
        self.evaluator = evaluator
        self.name = name

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        vals = np.broadcast_to(np.asarray(self.evaluator(pts), dtype=float), (pts.shape[0],))
        if np.any(np.isnan(vals)) or np.any(vals < 0):
            raise InvalidPotential(f"{self.name} returned negative or NaN values")
        return np.array(vals)

    def describe(self):
        return self.name


def eval(V: Potential, x) -> float:  # noqa: A001
    """V(x) as an extended nonnegative real"""
    p = np.asarray(x, dtype=float).reshape(1, -1)
    return float(V.evaluate(p)[0])


def sample(V: Potential, g: Grid, sampling: str = "node") -> np.ndarray:
    """Extended-real node samples: pointwise values or cell averages"""
    if sampling not in SAMPLING_MODES:
        raise InvalidArgument(f"sampling must be one of {SAMPLING_MODES}, got '{sampling}'")
    values = V.evaluate(g.coords) if sampling == "node" else V.cell_average(g)
    values = np.asarray(values, dtype=float)
    if np.any(np.isnan(values)) or np.any(values < 0):
        raise InvalidPotential(f"{V.describe()} is negative or undefined on the grid")
    return values


def truncate_to_field(V: Potential, g: Grid, k: float, sampling: str = "node") -> Field:
    """T_k(V) on the nodes: samples clamped to [0, k]"""
    if not k > 0:
        raise InvalidArgument(f"truncation level must be positive, got {k}")
    return Field(g, np.clip(sample(V, g, sampling), 0.0, k))


def infinite_mask(V: Potential, g: Grid, sampling: str = "cell") -> np.ndarray:
    """Nodes whose sample is +inf"""
    return np.isinf(sample(V, g, sampling))


@dataclass(frozen=True)
class TruncationLadder:
    """Increasing truncation levels; geometric k0 * ratio^j unless `k_values` is given"""

    k0: float = config.LADDER_K0
    ratio: float = config.LADDER_RATIO
    max_rungs: int = config.LADDER_MAX_RUNGS
    stop_tol: float = config.LADDER_STOP_TOL
    sampling: str = config.POTENTIAL_SAMPLING
    k_values: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not self.stop_tol > 0:
            raise InvalidArgument(f"stop_tol must be positive, got {self.stop_tol}")
        if self.sampling not in SAMPLING_MODES:
            raise InvalidArgument(f"sampling must be one of {SAMPLING_MODES}, got '{self.sampling}'")
        if self.k_values is not None:
            ks = tuple(float(k) for k in self.k_values)
            if not ks or ks[0] <= 0 or any(b <= a for a, b in zip(ks, ks[1:])):
                raise InvalidArgument(f"k_values must be positive and strictly increasing, got {ks}")
            object.__setattr__(self, "k_values", ks)
        elif not (self.k0 > 0 and self.ratio > 1 and self.max_rungs >= 1):
            raise InvalidArgument("ladder needs k0 > 0, ratio > 1 and max_rungs >= 1")

    @classmethod
    def from_config(cls, cfg: LabConfig = config) -> "TruncationLadder":
        return cls(cfg.LADDER_K0, cfg.LADDER_RATIO, cfg.LADDER_MAX_RUNGS, cfg.LADDER_STOP_TOL, cfg.POTENTIAL_SAMPLING)

    def levels(self) -> Tuple[float, ...]:
        if self.k_values is not None:
            return self.k_values
        return tuple(self.k0 * self.ratio ** j for j in range(self.max_rungs))


# -- descriptor parsing ------------------------------------------------------

_TERM_SPLIT = re.compile(r"\s\+\s")


def _number(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{what} must be a number, got '{text}'")


def _alpha(keywords: dict, term: str) -> float:
    if "alpha" not in keywords:
        raise ParseError(f"missing alpha= in '{term}'")
    return _number(keywords["alpha"], "alpha")


def _parse_axis(token: str) -> int:
    match = re.fullmatch(r"x([12])", token.lower())
    if not match:
        raise ParseError(f"hyperplane axis must be x1 or x2, got '{token}'")
    return int(match.group(1)) - 1


def parse_term(term: str) -> Potential:
    tokens = term.split()
    if not tokens:
        raise ParseError("empty potential term")
    kind, rest = tokens[0].lower(), tokens[1:]
    positional, keywords = _split_keywords(rest)

    try:
        if kind == "zero" and not rest:
            return Zero()
        if kind == "const" and len(positional) == 1:
            return Constant(_number(positional[0], "constant"))
        if kind == "point" and positional:
            return Point(tuple(_number(v, "coordinate") for v in positional), _alpha(keywords, term))
        if kind == "hyperplane" and len(positional) == 1:
            if "c" not in keywords:
                raise ParseError(f"missing c= in '{term}'")
            return Hyperplane(_parse_axis(positional[0]), _number(keywords["c"], "c"), _alpha(keywords, term))
        if kind == "distset":
            region = [t for t in rest if not t.lower().startswith("alpha=")]
            return DistanceToSet(parse_domain(region), _alpha(keywords, term))
        if kind == "indicator":
            return InfiniteIndicator(parse_domain(rest))
    except (InvalidPotential, InvalidDomain) as e:
        raise ParseError(e.message)
    raise ParseError(f"cannot parse potential term '{term}'")


def parse_potential(text: str) -> Potential:
    """Parse descriptors such as `hyperplane x1 c=-0.3 alpha=2 + point 0 0 alpha=3`"""
    terms = [t.strip() for t in _TERM_SPLIT.split(text.strip())]
    parsed = [parse_term(t) for t in terms]
    return parsed[0] if len(parsed) == 1 else Sum(tuple(parsed))


def check_dimension(V: Potential, g: Grid) -> None:
    """Reject point singularities whose dimension differs from the grid's"""
    terms = V.terms if isinstance(V, Sum) else (V,)
    for term in terms:
        if isinstance(term, Point) and len(term.center) != g.dim:
            raise InvalidPotential(f"{term.describe()} is not {g.dim}-dimensional")
        if isinstance(term, Hyperplane) and term.axis >= g.dim:
            raise InvalidPotential(f"{term.describe()} needs a {term.axis + 1}-dimensional grid")
        if isinstance(term, (DistanceToSet, InfiniteIndicator)):
            spec = term.obstacle if isinstance(term, DistanceToSet) else term.region
            if spec.dim != g.dim:
                raise InvalidPotential(f"{term.describe()} is not {g.dim}-dimensional")
