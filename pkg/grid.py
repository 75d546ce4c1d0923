import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from errors import EmptyDomain, IncompatibleField, InvalidDomain, ParseError, ResolutionTooCoarse

logger = logging.getLogger(__name__)

DOMAIN_KINDS = ("interval", "rectangle", "disk")


@dataclass(frozen=True)
class DomainSpec:
    """An interval, rectangle or disk with `n` nodes per axis"""

    kind: str
    bounds: Tuple[float, ...]
    n: int = 33

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise InvalidDomain(f"unknown domain kind '{self.kind}'")
        b = self.bounds
        if self.kind == "interval" and (len(b) != 2 or not b[0] < b[1]):
            raise InvalidDomain(f"interval needs a < b, got {b}")
        if self.kind == "rectangle" and (len(b) != 4 or not (b[0] < b[1] and b[2] < b[3])):
            raise InvalidDomain(f"rectangle needs ax < bx and ay < by, got {b}")
        if self.kind == "disk" and (len(b) != 3 or not b[2] > 0):
            raise InvalidDomain(f"disk needs a positive radius, got {b}")

    @classmethod
    def interval(cls, a: float, b: float, n: int = 33) -> "DomainSpec":
        return cls("interval", (float(a), float(b)), n)

    @classmethod
    def rectangle(cls, ax: float, bx: float, ay: float, by: float, n: int = 33) -> "DomainSpec":
        return cls("rectangle", (float(ax), float(bx), float(ay), float(by)), n)

    @classmethod
    def disk(cls, cx: float, cy: float, radius: float, n: int = 33) -> "DomainSpec":
        return cls("disk", (float(cx), float(cy), float(radius)), n)

    def with_resolution(self, n: int) -> "DomainSpec":
        return DomainSpec(self.kind, self.bounds, n)

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def diameter(self) -> float:
        b = self.bounds
        if self.kind == "interval":
            return b[1] - b[0]
        if self.kind == "rectangle":
            return math.hypot(b[1] - b[0], b[3] - b[2])
        return 2.0 * b[2]

    @property
    def measure(self) -> float:
        b = self.bounds
        if self.kind == "interval":
            return b[1] - b[0]
        if self.kind == "rectangle":
            return (b[1] - b[0]) * (b[3] - b[2])
        return math.pi * b[2] ** 2

    def _points(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim) if self.dim > 1 else pts.reshape(-1, 1)
        if pts.shape[1] != self.dim:
            raise InvalidDomain(f"expected {self.dim}-dimensional points, got shape {pts.shape}")
        return pts

    def contains(self, points) -> np.ndarray:
        """Strict membership in the open domain"""
        return self.boundary_distance(points) > 0.0

    def boundary_distance(self, points) -> np.ndarray:
        """Signed distance to the boundary, positive inside"""
        pts = self._points(points)
        b = self.bounds
        if self.kind == "interval":
            x = pts[:, 0]
            return np.minimum(x - b[0], b[1] - x)
        if self.kind == "rectangle":
            x, y = pts[:, 0], pts[:, 1]
            return np.minimum(np.minimum(x - b[0], b[1] - x), np.minimum(y - b[2], b[3] - y))
        return b[2] - np.hypot(pts[:, 0] - b[0], pts[:, 1] - b[1])

    def distance(self, points) -> np.ndarray:
        """Euclidean distance to the closed domain (zero inside)"""
        pts = self._points(points)
        b = self.bounds
        if self.kind == "interval":
            x = pts[:, 0]
            return np.maximum(np.maximum(b[0] - x, x - b[1]), 0.0)
        if self.kind == "rectangle":
            dx = np.maximum(np.maximum(b[0] - pts[:, 0], pts[:, 0] - b[1]), 0.0)
            dy = np.maximum(np.maximum(b[2] - pts[:, 1], pts[:, 1] - b[3]), 0.0)
            return np.hypot(dx, dy)
        return np.maximum(np.hypot(pts[:, 0] - b[0], pts[:, 1] - b[1]) - b[2], 0.0)

    def meets_box(self, centers, half: float) -> np.ndarray:
        """Whether the closed box centers + [-half, half]^N meets the closed domain"""
        pts = self._points(centers)
        b = self.bounds
        if self.kind == "interval":
            return (pts[:, 0] + half >= b[0]) & (pts[:, 0] - half <= b[1])
        if self.kind == "rectangle":
            return (
                (pts[:, 0] + half >= b[0]) & (pts[:, 0] - half <= b[1])
                & (pts[:, 1] + half >= b[2]) & (pts[:, 1] - half <= b[3])
            )
        # nearest point of the box to the disk centre
        nx = np.clip(b[0], pts[:, 0] - half, pts[:, 0] + half)
        ny = np.clip(b[1], pts[:, 1] - half, pts[:, 1] + half)
        return np.hypot(nx - b[0], ny - b[1]) <= b[2]

    def describe(self) -> str:
        b = self.bounds
        if self.kind == "interval":
            return f"interval {b[0]:g} {b[1]:g}"
        if self.kind == "rectangle":
            return f"rectangle {b[0]:g} {b[1]:g} {b[2]:g} {b[3]:g}"
        return f"disk {b[0]:g} {b[1]:g} r={b[2]:g}"


def _split_keywords(tokens: Sequence[str]) -> Tuple[list, dict]:
    positional, keywords = [], {}
    for token in tokens:
        if "=" in token:
            key, value = token.split("=", 1)
            keywords[key.strip().lower()] = value.strip()
        else:
            positional.append(token)
    return positional, keywords


def parse_domain(text: Union[str, Sequence[str]], n: int = 33) -> DomainSpec:
    """Parse `interval a b`, `rectangle ax bx ay by` (or `rect`) and `disk cx cy r=R`"""
    tokens = text.split() if isinstance(text, str) else list(text)
    if not tokens:
        raise ParseError("empty domain descriptor")
    kind, rest = tokens[0].lower(), tokens[1:]
    positional, keywords = _split_keywords(rest)
    try:
        values = [float(v) for v in positional]
        if kind == "interval" and len(values) == 2:
            return DomainSpec.interval(values[0], values[1], n)
        if kind in ("rectangle", "rect") and len(values) == 4:
            return DomainSpec.rectangle(*values, n=n)
        if kind == "disk":
            if "r" in keywords and len(values) == 2:
                return DomainSpec.disk(values[0], values[1], float(keywords["r"]), n)
            if len(values) == 3:
                return DomainSpec.disk(*values, n=n)
    except ValueError:
        raise ParseError(f"non-numeric value in domain '{' '.join(tokens)}'")
    except InvalidDomain as e:
        raise ParseError(e.message)
    raise ParseError(f"cannot parse domain '{' '.join(tokens)}'")


class Grid:
    """Interior nodes of a uniform lattice over a domain, in lattice raster order"""

    def __init__(self, spec: DomainSpec, h: float, origin: np.ndarray, shape: Tuple[int, ...], ij: np.ndarray):
        self.spec = spec
        self.h = float(h)
        self.dim = spec.dim
        self.origin = origin
        self.shape = shape
        self.ij = ij
        self.ij.flags.writeable = False
        self.coords = origin + h * ij
        self.coords.flags.writeable = False
        self.size = ij.shape[0]

        index_map = np.full(shape, -1, dtype=np.int64)
        index_map[tuple(ij.T)] = np.arange(self.size)
        self.index_map = index_map
        self.index_map.flags.writeable = False

        neighbors = np.full((self.size, 2 * self.dim), -1, dtype=np.int64)
        for axis in range(self.dim):
            for slot, step in ((2 * axis, -1), (2 * axis + 1, 1)):
                target = ij.copy()
                target[:, axis] += step
                inside = (target[:, axis] >= 0) & (target[:, axis] < shape[axis])
                rows = np.nonzero(inside)[0]
                neighbors[rows, slot] = index_map[tuple(target[rows].T)]
        self.neighbors = neighbors
        self.neighbors.flags.writeable = False

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def lookup(self, ij: Sequence[int]) -> int:
        """Row of a lattice index, or -1 when it is not an interior node"""
        idx = tuple(int(v) for v in ij)
        if any(v < 0 or v >= s for v, s in zip(idx, self.shape)):
            return -1
        return int(self.index_map[idx])

    def nearest_node(self, point) -> int:
        """Row of the interior node closest to `point`; ties go to the lowest row"""
        p = np.asarray(point, dtype=float).reshape(self.dim)
        d2 = np.sum((self.coords - p) ** 2, axis=1)
        return int(np.argmin(d2))

    def boundary_distance(self) -> np.ndarray:
        return self.spec.boundary_distance(self.coords)

    def apply_stencil(self, values: np.ndarray) -> np.ndarray:
        """(2N u(x) - sum of neighbours) / h^2 on a raw value array"""
        padded = np.append(values, 0.0)
        return (2 * self.dim * values - np.sum(padded[self.neighbors], axis=1)) / self.h ** 2

    def edge_differences(self, values: np.ndarray) -> np.ndarray:
        """Differences across every lattice edge touching an interior node, boundary edges included"""
        padded = np.append(values, 0.0)
        parts = []
        for axis in range(self.dim):
            back, forward = self.neighbors[:, 2 * axis], self.neighbors[:, 2 * axis + 1]
            parts.append(padded[forward] - values)
            parts.append(values[back < 0])
        return np.concatenate(parts)

    def to_lattice(self, values: np.ndarray, fill=0) -> np.ndarray:
        values = np.asarray(values)
        out = np.full(self.shape, fill, dtype=values.dtype)
        out[tuple(self.ij.T)] = values
        return out

    def from_lattice(self, array: np.ndarray) -> np.ndarray:
        return np.asarray(array)[tuple(self.ij.T)]

    def __repr__(self) -> str:
        return f"Grid({self.spec.describe()}, n={self.spec.n}, nodes={self.size}, h={self.h:g})"


def build_grid(spec: DomainSpec) -> Grid:
    """Uniform grid of the open domain; boundary nodes are implicit zeros"""
    if spec.n < 3:
        raise ResolutionTooCoarse(f"n must be at least 3, got {spec.n}")
    n = spec.n
    b = spec.bounds

    if spec.kind == "interval":
        h = (b[1] - b[0]) / (n - 1)
        ij = np.arange(1, n - 1, dtype=np.int64).reshape(-1, 1)
        grid = Grid(spec, h, np.array([b[0]]), (n,), ij)

    elif spec.kind == "rectangle":
        h = (b[1] - b[0]) / (n - 1)
        steps = (b[3] - b[2]) / h
        ny = int(round(steps)) + 1
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise InvalidDomain(f"rectangle height {b[3] - b[2]:g} is not a multiple of h={h:g}")
        if ny < 3:
            raise ResolutionTooCoarse(f"rectangle has only {ny} nodes across its height")
        ii, jj = np.meshgrid(np.arange(1, n - 1), np.arange(1, ny - 1), indexing="ij")
        ij = np.stack([ii.ravel(), jj.ravel()], axis=1).astype(np.int64)
        grid = Grid(spec, h, np.array([b[0], b[2]]), (n, ny), ij)

    else:
        cx, cy, r = b
        h = 2.0 * r / (n - 1)
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        ij = np.stack([ii.ravel(), jj.ravel()], axis=1).astype(np.int64)
        pts = np.array([cx - r, cy - r]) + h * ij
        keep = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) < r
        grid = Grid(spec, h, np.array([cx - r, cy - r]), (n, n), ij[keep])

    if grid.size == 0:
        raise EmptyDomain(f"{spec.describe()} has no interior nodes at n={n}")
    logger.debug(f"Built {grid!r}")
    return grid


def _same_grid(a: Grid, b: Grid) -> bool:
    return a is b or (a.spec == b.spec and a.size == b.size)


@dataclass(frozen=True, eq=False)
class Field:
    """One finite real value per interior node"""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.shape[0] != self.grid.size:
            raise IncompatibleField(f"{vals.shape[0]} values for a grid of {self.grid.size} nodes")
        if not np.all(np.isfinite(vals)):
            raise IncompatibleField("field values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.size, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        """Sample `fn` on the (size, N) coordinate array"""
        return cls(grid, np.broadcast_to(np.asarray(fn(grid.coords), dtype=float), (grid.size,)))

    def check_grid(self, grid: Grid) -> "Field":
        if not _same_grid(self.grid, grid):
            raise IncompatibleField(f"field lives on {self.grid!r}, expected {grid!r}")
        return self

    def _other(self, other) -> Union[np.ndarray, float]:
        if isinstance(other, Field):
            return other.check_grid(self.grid).values
        return float(other)

    def __add__(self, other) -> "Field":
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Field":
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other) -> "Field":
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other) -> "Field":
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def __abs__(self) -> "Field":
        return Field(self.grid, np.abs(self.values))

    def max(self) -> float:
        return float(np.max(self.values))

    def min(self) -> float:
        return float(np.min(self.values))

    def at(self, point) -> float:
        """Value at the node nearest to `point`"""
        return float(self.values[self.grid.nearest_node(point)])


@dataclass(frozen=True)
class FieldNorms:
    l1: float
    linf: float
    l1_weighted: Optional[float] = None


def apply_neg_laplacian(g: Grid, u: Field) -> Field:
    u.check_grid(g)
    return Field(g, g.apply_stencil(u.values))


def integrate(g: Grid, u: Field) -> float:
    u.check_grid(g)
    return float(g.cell_volume * np.sum(u.values))


def l1_weighted(u: Field, w: Field) -> float:
    w.check_grid(u.grid)
    return float(u.grid.cell_volume * np.sum(np.abs(u.values * w.values)))


def norms(u: Field, w: Optional[Field] = None) -> FieldNorms:
    g = u.grid
    return FieldNorms(
        l1=float(g.cell_volume * np.sum(np.abs(u.values))),
        linf=float(np.max(np.abs(u.values))),
        l1_weighted=l1_weighted(u, w) if w is not None else None,
    )


def gradient_l1(u: Field) -> float:
    """Discrete W^{1,1}_0 seminorm: h^N times the sum of |edge difference| / h"""
    g = u.grid
    return float(g.h ** (g.dim - 1) * np.sum(np.abs(g.edge_differences(u.values))))


def dirichlet_energy(u: Field) -> float:
    """Integral of the squared discrete gradient, equal to integrate(u * (-Laplacian u))"""
    g = u.grid
    return float(g.h ** (g.dim - 2) * np.sum(g.edge_differences(u.values) ** 2))


def field_to_csv(u: Union[Field, "np.ndarray"], grid: Optional[Grid] = None) -> str:
    """Dump in interior order as `i,j,x,y,value` (`i,x,value` in 1D)"""
    if isinstance(u, Field):
        grid, values = u.grid, u.values
    else:
        values = np.asarray(u, dtype=float)
    lines = ["i,x,value" if grid.dim == 1 else "i,j,x,y,value"]
    for row in range(grid.size):
        idx = ",".join(str(int(v)) for v in grid.ij[row])
        xy = ",".join("%.12e" % v for v in grid.coords[row])
        lines.append(f"{idx},{xy},{'%.12e' % values[row]}")
    return "\n".join(lines) + "\n"
