import logging
import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from errors import InvalidArgument, InvalidMeasure, ParseError
from grid import (
    Field,
    Grid,
    _split_keywords,
    dirichlet_energy,
    gradient_l1,
    integrate,
    l1_weighted,
    parse_domain,
)
from linsolve import SolveOptions, SolveStats, cg_solve
from potential import Potential, TruncationLadder, sample

logger = logging.getLogger(__name__)

DataLike = Union[Field, float, int]


@dataclass(frozen=True)
class Atom:
    location: Tuple[float, ...]
    weight: float


@dataclass(frozen=True, eq=False)
class MeasureData:
    """A finite nonnegative measure: optional density plus weighted Dirac atoms.

    Atoms become `weight / h^N` at the nearest node (`discrete_delta`) or a
    normalised smooth bump (`mollified`) whose radius at rung j is
    max(radius * shrink^j, h).
    """

    density: Optional[Field] = None
    atoms: Tuple[Atom, ...] = ()
    mollification: str = "discrete_delta"
    radius: float = 0.0
    shrink: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        for atom in self.atoms:
            if not atom.weight > 0 or not math.isfinite(atom.weight):
                raise InvalidMeasure(f"atom weight must be positive and finite, got {atom.weight}")
        if self.density is not None and np.any(self.density.values < 0):
            raise InvalidMeasure("density must be nonnegative")
        if self.mollification not in ("discrete_delta", "mollified"):
            raise InvalidMeasure(f"unknown mollification '{self.mollification}'")
        if self.mollification == "mollified" and not (self.radius > 0 and 0 < self.shrink <= 1):
            raise InvalidMeasure("mollified atoms need radius > 0 and 0 < shrink <= 1")

    @classmethod
    def from_density(cls, f: Field) -> "MeasureData":
        return cls(density=f)

    @classmethod
    def dirac(cls, point, weight: float = 1.0, **kwargs) -> "MeasureData":
        return cls(atoms=(Atom(tuple(float(c) for c in np.atleast_1d(point)), float(weight)),), **kwargs)

    def mollified(self, radius: float, shrink: float = 1.0) -> "MeasureData":
        return replace(self, mollification="mollified", radius=radius, shrink=shrink)

    def check_locations(self, g: Grid) -> None:
        if self.density is not None:
            self.density.check_grid(g)
        for atom in self.atoms:
            if len(atom.location) != g.dim or not g.spec.contains(np.array([atom.location]))[0]:
                raise InvalidMeasure(f"atom at {atom.location} is outside {g.spec.describe()}")

    def mass(self, g: Grid) -> float:
        total = integrate(g, self.density) if self.density is not None else 0.0
        return float(total + sum(atom.weight for atom in self.atoms))

    def _atom_profile(self, g: Grid, atom: Atom, rung: int) -> np.ndarray:
        profile = np.zeros(g.size)
        if self.mollification == "mollified":
            radius = max(self.radius * self.shrink ** rung, g.h)
            r = np.sqrt(np.sum((g.coords - np.asarray(atom.location)) ** 2, axis=1)) / radius
            inside = r < 1.0
            profile[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
        total = np.sum(profile)
        if total <= 0.0:
            profile[:] = 0.0
            profile[g.nearest_node(atom.location)] = 1.0
            total = 1.0
        # renormalised so the discrete mass equals the atom weight
        return atom.weight * profile / (total * g.cell_volume)

    def rhs(self, g: Grid, rung: int = 0) -> np.ndarray:
        """Right-hand side values for the given ladder rung"""
        b = np.array(self.density.check_grid(g).values) if self.density is not None else np.zeros(g.size)
        for atom in self.atoms:
            b += self._atom_profile(g, atom, rung)
        return b

    @property
    def is_zero(self) -> bool:
        return not self.atoms and (self.density is None or not np.any(self.density.values))


@dataclass(frozen=True)
class RungRecord:
    rung: int
    k: float
    l1_change: float
    cg_iters: int
    residual: float
    converged: bool
    singular_l1: float = 0.0


@dataclass
class LadderReport:
    rungs: List[RungRecord] = field(default_factory=list)
    converged: bool = False
    monotone_violation: float = 0.0
    sampling: str = "node"

    @property
    def final_k(self) -> float:
        return self.rungs[-1].k

    @property
    def final_rung(self) -> int:
        return self.rungs[-1].rung

    @property
    def solver_converged(self) -> bool:
        return all(r.converged for r in self.rungs)

    def to_csv(self) -> str:
        lines = ["rung,k,l1_change,cg_iters,residual"]
        for r in self.rungs:
            lines.append(f"{r.rung},{'%.12e' % r.k},{'%.12e' % r.l1_change},{r.cg_iters},{'%.12e' % r.residual}")
        return "\n".join(lines) + "\n"


def _data_values(g: Grid, f: DataLike) -> np.ndarray:
    if isinstance(f, Field):
        return f.check_grid(g).values
    return np.full(g.size, float(f))


def _solve_rung(g, W: np.ndarray, b: np.ndarray, opts, x0) -> Tuple[Field, SolveStats]:
    return cg_solve(g, Field(g, W), Field(g, b), opts, x0)


def solve_truncated(
    g: Grid,
    V: Potential,
    f: DataLike,
    k: float,
    sampling: str = "node",
    opts: Optional[SolveOptions] = None,
    x0: Optional[Field] = None,
) -> Field:
    """zeta_{f,k}: the minimiser of the energy with the potential truncated at k"""
    if not k > 0:
        raise InvalidArgument(f"truncation level must be positive, got {k}")
    W = np.clip(sample(V, g, sampling), 0.0, k)
    u, stats = _solve_rung(g, W, _data_values(g, f), opts, x0)
    if not stats.converged:
        logger.warning(f"solve_truncated at k={k:g} did not converge")
    return u


def _run_ladder(
    g: Grid,
    V: Potential,
    rhs_for: Callable[[int], np.ndarray],
    ladder: TruncationLadder,
    opts: Optional[SolveOptions],
    nonnegative: bool,
) -> Tuple[Field, LadderReport]:
    samples = sample(V, g, ladder.sampling)
    # values on +inf nodes decay like 1/k and never settle; they are tracked apart
    finite = ~np.isinf(samples)
    report = LadderReport(sampling=ladder.sampling)
    previous: Optional[Field] = None

    for rung, k in enumerate(ladder.levels()):
        u, stats = _solve_rung(g, np.clip(samples, 0.0, k), rhs_for(rung), opts, previous)
        change = math.nan
        if previous is not None:
            diff = float(np.sum(np.abs(u.values - previous.values)[finite]))
            size = float(np.sum(np.abs(u.values)[finite]))
            change = diff / size if size > 0 else (0.0 if diff == 0 else math.inf)
            if nonnegative:
                report.monotone_violation = max(
                    report.monotone_violation, float(np.max(u.values - previous.values, initial=0.0))
                )
        singular_l1 = g.cell_volume * float(np.sum(np.abs(u.values)[~finite]))
        report.rungs.append(
            RungRecord(rung, float(k), change, stats.iterations, stats.residual, stats.converged, singular_l1)
        )
        previous = u
        if change <= ladder.stop_tol:
            report.converged = True
            break

    if not report.converged:
        logger.warning(f"❌ Ladder exhausted after {len(report.rungs)} rungs (k={report.final_k:g})")
    return previous, report


def solve_ladder(
    g: Grid,
    V: Potential,
    f: DataLike,
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
) -> Tuple[Field, LadderReport]:
    """zeta_f as the limit of zeta_{f,k} over the ladder"""
    ladder = ladder or TruncationLadder()
    b = _data_values(g, f)
    return _run_ladder(g, V, lambda rung: b, ladder, opts, bool(np.all(b >= 0)))


def torsion(g: Grid, opts: Optional[SolveOptions] = None) -> Field:
    """theta: -Laplacian theta = 1 with zero boundary values"""
    theta, stats = cg_solve(g, Field.zeros(g), Field.constant(g, 1.0), opts)
    if not stats.converged:
        logger.warning("torsion solve did not converge")
    return theta


def solve_measure(
    g: Grid,
    V: Potential,
    mu: MeasureData,
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
) -> Tuple[Field, LadderReport]:
    """Duality solution for measure data through the truncation ladder"""
    ladder = ladder or TruncationLadder()
    mu.check_locations(g)
    if mu.mollification == "discrete_delta" or not mu.atoms:
        b = mu.rhs(g)
        return _run_ladder(g, V, lambda rung: b, ladder, opts, True)
    # a shrinking mollifier changes the datum between rungs, so monotonicity is not tracked
    return _run_ladder(g, V, lambda rung: mu.rhs(g, rung), ladder, opts, mu.shrink == 1.0)


def final_weight(g: Grid, V: Potential, report: LadderReport) -> Field:
    """T_K(V) at the final rung K of a ladder run"""
    return Field(g, np.clip(sample(V, g, report.sampling), 0.0, report.final_k))


def energy(g: Grid, W: Field, f: DataLike, u: Field) -> float:
    """E(u) = 1/2 integral(|grad u|^2 + W u^2) - integral(f u)"""
    W.check_grid(g)
    u.check_grid(g)
    quadratic = dirichlet_energy(u) + g.cell_volume * float(np.sum(W.values * u.values ** 2))
    return 0.5 * quadratic - g.cell_volume * float(np.sum(_data_values(g, f) * u.values))


@dataclass(frozen=True)
class Estimates:
    absorption_margin: float
    domination_margin: float
    sobolev_ratio: float
    laplacian_margin: float
    final_k: float


def verify_estimates(
    g: Grid,
    V: Potential,
    data: Union[DataLike, MeasureData],
    u: Field,
    report: LadderReport,
    opts: Optional[SolveOptions] = None,
) -> Estimates:
    """Absorption, domination, Sobolev and Laplacian-mass estimates at the final rung"""
    if isinstance(data, MeasureData):
        mu = data
        bounded = mu.density if not mu.atoms else None
        mass = mu.mass(g)
    else:
        values = _data_values(g, data)
        bounded = Field(g, values)
        mass = float(g.cell_volume * np.sum(np.abs(values)))

    W = final_weight(g, V, report)
    absorption = mass - l1_weighted(u, W)

    domination = math.nan
    if bounded is not None:
        sup = float(np.max(np.abs(bounded.values)))
        zeta1 = solve_truncated(g, V, 1.0, report.final_k, report.sampling, opts)
        domination = float(np.min(sup * zeta1.values - np.abs(u.values)))
    elif mass == 0:
        domination = 0.0

    laplacian_mass = float(g.cell_volume * np.sum(np.abs(g.apply_stencil(u.values))))
    return Estimates(
        absorption_margin=absorption,
        domination_margin=domination,
        sobolev_ratio=gradient_l1(u) / mass if mass > 0 else 0.0,
        laplacian_margin=2.0 * mass - laplacian_mass,
        final_k=report.final_k,
    )


# -- datum descriptors -------------------------------------------------------

_TERM_SPLIT = re.compile(r"\s\+\s")


def parse_data(text: str, g: Grid) -> MeasureData:
    """Parse `const c`, `indicator <region>`, `slab x1 lo hi` and `atom x [y] w=W` terms joined by `+`"""
    density = np.zeros(g.size)
    has_density = False
    atoms: List[Atom] = []
    mollify: Optional[float] = None

    for term in (t.strip() for t in _TERM_SPLIT.split(text.strip())):
        tokens = term.split()
        if not tokens:
            raise ParseError("empty datum term")
        kind, rest = tokens[0].lower(), tokens[1:]
        positional, keywords = _split_keywords(rest)
        try:
            if kind == "const" and len(positional) == 1:
                density += float(positional[0])
                has_density = True
            elif kind == "indicator":
                region = parse_domain(rest)
                density += region.distance(g.coords) <= 0.0
                has_density = True
            elif kind == "slab" and len(positional) == 3:
                axis = int(positional[0].lower().lstrip("x")) - 1
                lo, hi = float(positional[1]), float(positional[2])
                density += (g.coords[:, axis] > lo) & (g.coords[:, axis] < hi)
                has_density = True
            elif kind == "atom" and positional:
                atoms.append(Atom(tuple(float(v) for v in positional), float(keywords.get("w", 1.0))))
                if "mollify" in keywords:
                    mollify = float(keywords["mollify"])
            else:
                raise ParseError(f"cannot parse datum term '{term}'")
        except (ValueError, IndexError):
            raise ParseError(f"non-numeric value in datum term '{term}'")

    try:
        mu = MeasureData(density=Field(g, density) if has_density else None, atoms=tuple(atoms))
        return mu.mollified(mollify) if mollify else mu
    except InvalidMeasure as e:
        raise ParseError(e.message)
