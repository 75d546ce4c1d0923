import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from config import config
from errors import DegenerateTorsion, IncompatibleField, InvalidBump, InvalidSource
from green import green_functions
from grid import Field, Grid, field_to_csv, integrate
from linsolve import SolveOptions
from potential import Potential, TruncationLadder, infinite_mask
from schrodinger import (
    DataLike,
    LadderReport,
    MeasureData,
    _data_values,
    final_weight,
    solve_ladder,
    torsion,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NodeMask:
    grid: Grid
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.mask, dtype=bool).reshape(-1)
        if values.shape[0] != self.grid.size:
            raise IncompatibleField(f"mask of {values.shape[0]} nodes for a grid of {self.grid.size}")
        values.flags.writeable = False
        object.__setattr__(self, "mask", values)

    @classmethod
    def empty(cls, grid: Grid) -> "NodeMask":
        return cls(grid, np.zeros(grid.size, dtype=bool))

    @property
    def count(self) -> int:
        return int(np.sum(self.mask))

    @property
    def measure(self) -> float:
        return self.count * self.grid.cell_volume

    def nodes(self) -> np.ndarray:
        return np.nonzero(self.mask)[0]

    def __or__(self, other: "NodeMask") -> "NodeMask":
        return NodeMask(self.grid, self.mask | other.mask)

    def __and__(self, other: "NodeMask") -> "NodeMask":
        return NodeMask(self.grid, self.mask & other.mask)

    def __invert__(self) -> "NodeMask":
        return NodeMask(self.grid, ~self.mask)

    def issubset(self, other: "NodeMask") -> bool:
        return not np.any(self.mask & ~other.mask)

    def indicator(self) -> Field:
        return Field(self.grid, self.mask.astype(float))

    def to_csv(self) -> str:
        return field_to_csv(self.indicator())


@dataclass(frozen=True, eq=False)
class ComponentLabels:
    """Label per node (-1 on masked nodes) and node count per component"""

    grid: Grid
    labels: np.ndarray = field(repr=False)
    sizes: Tuple[int, ...] = ()

    @property
    def count(self) -> int:
        return len(self.sizes)

    def mask_of(self, label: int) -> NodeMask:
        return NodeMask(self.grid, self.labels == label)

    def label_at(self, point) -> int:
        return int(self.labels[self.grid.nearest_node(point)])


def detect_S(zeta1: Field, tau_rel: Optional[float] = None) -> NodeMask:
    """Nodes where the torsion-type solution is at most tau_rel times its maximum"""
    tau = config.TAU_S if tau_rel is None else tau_rel
    peak = zeta1.max()
    if peak <= 0:
        raise DegenerateTorsion("torsion-type solution is nowhere positive")
    return NodeMask(zeta1.grid, zeta1.values <= tau * peak)


def components(g: Grid, free: NodeMask) -> ComponentLabels:
    """Connected components of `free` under 2N-neighbour adjacency"""
    structure = ndimage.generate_binary_structure(g.dim, 1)
    lattice, count = ndimage.label(g.to_lattice(free.mask, fill=False), structure=structure)
    labels = g.from_lattice(lattice).astype(np.int64) - 1
    sizes = tuple(int(s) for s in np.bincount(labels[labels >= 0], minlength=count))
    return ComponentLabels(g, labels, sizes)


@dataclass(frozen=True, eq=False)
class Bump:
    """psi_c(y) = max(0, 1 - |y - c| / r)^2 on the grid"""

    center: int
    radius: float
    values: np.ndarray = field(repr=False)

    @classmethod
    def at(cls, g: Grid, center: int, radius: float) -> "Bump":
        c = g.coords[center]
        if g.spec.boundary_distance(c.reshape(1, -1))[0] < radius + 2 * g.h:
            raise InvalidBump(f"bump of radius {radius:g} at {tuple(c)} reaches within 2h of the boundary")
        r = np.sqrt(np.sum((g.coords - c) ** 2, axis=1))
        return cls(center, float(radius), np.maximum(0.0, 1.0 - r / radius) ** 2)


def bump_dictionary(
    g: Grid,
    S: NodeMask,
    component: NodeMask,
    radius: Optional[float] = None,
    max_bumps: int = 64,
) -> List[Bump]:
    """Bumps centred on S nodes next to the component, skipping those too close to the boundary"""
    r = max(4 * g.h, config.BUMP_RADIUS if radius is None else radius)
    padded = np.append(component.mask, False)
    touching = np.any(padded[g.neighbors], axis=1) & S.mask
    clearance = g.boundary_distance()
    centers = [c for c in np.nonzero(touching)[0] if clearance[c] >= r + 2 * g.h]
    if len(centers) > max_bumps:
        picks = np.unique(np.linspace(0, len(centers) - 1, max_bumps).round().astype(int))
        centers = [centers[i] for i in picks]
    return [Bump.at(g, int(c), r) for c in centers]


def _interface_scale(dim: int, radius: float) -> float:
    # integral of the bump along a line through its centre
    return 1.0 if dim == 1 else 2.0 * radius / 3.0


@dataclass(frozen=True)
class DefectEstimate:
    pairings: Tuple[float, ...]
    total_defect: float
    bumps: Tuple[Bump, ...] = ()


def defect_mass(
    g: Grid,
    W: Field,
    u: Field,
    data: MeasureData,
    bumps: Sequence[Bump],
    singular: Optional[NodeMask] = None,
    rung: int = 0,
) -> DefectEstimate:
    """Pairings lambda[psi] = <psi, mu> - <u, -Lap psi> - <W u, psi> with mu and W u taken off the singular nodes"""
    W.check_grid(g)
    u.check_grid(g)
    off = ~singular.mask if singular is not None else np.ones(g.size, dtype=bool)
    b = data.rhs(g, rung)
    near_boundary = g.boundary_distance() < 2 * g.h

    pairings = []
    best = 0.0
    for bump in bumps:
        psi = bump.values
        if np.any(psi[near_boundary] != 0):
            raise InvalidBump(f"bump at node {bump.center} does not vanish near the boundary")
        vol = g.cell_volume
        source = vol * float(np.sum(psi * b * off))
        diffusion = vol * float(np.sum(u.values * g.apply_stencil(psi)))
        absorption = vol * float(np.sum(W.values * u.values * psi * off))
        value = source - diffusion - absorption
        pairings.append(value)
        best = max(best, value / (float(np.max(psi)) * _interface_scale(g.dim, bump.radius)))
    return DefectEstimate(tuple(pairings), best, tuple(bumps))


@dataclass(frozen=True)
class ComponentVerdict:
    label: int
    node_count: int
    defect: float
    verdict: str
    fringe: bool = False
    report: Optional[LadderReport] = None


@dataclass(frozen=True, eq=False)
class ZeroSetReport:
    S: NodeMask
    Z: NodeMask
    labels: ComponentLabels
    components: Tuple[ComponentVerdict, ...]
    thresholds: Dict[str, float]
    zeta1: Optional[Field] = None
    singular: Optional[NodeMask] = None
    torsion_report: Optional[LadderReport] = None

    @property
    def z_measure(self) -> float:
        return self.Z.measure

    def verdict_of(self, label: int) -> str:
        return self.components[label].verdict

    def main_components(self) -> List[ComponentVerdict]:
        return [c for c in self.components if not c.fringe]

    def to_csv(self) -> str:
        lines = ["component,node_count,defect,verdict"]
        for c in self.components:
            lines.append(f"{c.label},{c.node_count},{'%.12e' % c.defect},{c.verdict}")
        return "\n".join(lines) + "\n"


def _classify_one(g, V, S, labels, label, size, singular, ladder, opts, tau_z, fraction) -> ComponentVerdict:
    if size < fraction * g.size:
        return ComponentVerdict(label, size, math.nan, "in_Z", fringe=True)
    component = labels.mask_of(label)
    f = component.indicator()
    u, report = solve_ladder(g, V, f, ladder, opts)
    bumps = bump_dictionary(g, S, component)
    estimate = defect_mass(
        g, final_weight(g, V, report), u, MeasureData.from_density(f), bumps, singular, report.final_rung
    )
    verdict = "in_Z" if estimate.total_defect > tau_z else "not_in_Z"
    logger.info(f"Component {label} ({size} nodes, {len(bumps)} bumps): defect {estimate.total_defect:.4e} -> {verdict}")
    return ComponentVerdict(label, size, estimate.total_defect, verdict, report=report)


def classify_and_build_Z(
    g: Grid,
    V: Potential,
    S: NodeMask,
    labels: ComponentLabels,
    ladder: Optional[TruncationLadder] = None,
    tau_z: Optional[float] = None,
    opts: Optional[SolveOptions] = None,
    workers: Optional[int] = None,
    zeta1: Optional[Field] = None,
) -> ZeroSetReport:
    """Per-component defect test; Z is S plus the components that carry a defect"""
    ladder = ladder or TruncationLadder()
    tau_z = config.TAU_Z if tau_z is None else tau_z
    fraction = config.MIN_COMPONENT_FRACTION
    singular = NodeMask(g, infinite_mask(V, g, ladder.sampling))

    def classify(label):
        return _classify_one(
            g, V, S, labels, label, labels.sizes[label], singular, ladder, opts, tau_z, fraction
        )

    with ThreadPoolExecutor(max_workers=workers or config.WORKERS) as pool:
        verdicts = tuple(pool.map(classify, range(labels.count)))

    z = np.array(S.mask)
    for c in verdicts:
        if c.verdict == "in_Z":
            z |= labels.labels == c.label
    thresholds = {"tau_s": float("nan"), "tau_z": tau_z, "min_component_fraction": fraction}
    return ZeroSetReport(S, NodeMask(g, z), labels, verdicts, thresholds, zeta1, singular)


def analyze(
    g: Grid,
    V: Potential,
    ladder: Optional[TruncationLadder] = None,
    tau_s: Optional[float] = None,
    tau_z: Optional[float] = None,
    opts: Optional[SolveOptions] = None,
    workers: Optional[int] = None,
) -> ZeroSetReport:
    """Torsion ladder, S, components and Z in one pass"""
    zeta1, torsion_report = solve_ladder(g, V, 1.0, ladder, opts)
    tau_s = config.TAU_S if tau_s is None else tau_s
    S = detect_S(zeta1, tau_s)
    labels = components(g, ~S)
    report = classify_and_build_Z(g, V, S, labels, ladder, tau_z, opts, workers, zeta1)
    report.thresholds["tau_s"] = tau_s
    return replace(report, torsion_report=torsion_report)


@dataclass(frozen=True)
class PairRelation:
    first: int
    second: int
    kind: str
    overlap: float


@dataclass(frozen=True, eq=False)
class SuperlevelReport:
    sets: Tuple[NodeMask, ...]
    relations: Tuple[PairRelation, ...]
    labels: ComponentLabels
    containment: Tuple[float, ...]

    @property
    def violations(self) -> List[PairRelation]:
        return [r for r in self.relations if r.kind == "violation"]

    def to_csv(self) -> str:
        lines = ["first,second,relation,overlap"]
        for r in self.relations:
            lines.append(f"{r.first},{r.second},{r.kind},{'%.12e' % r.overlap}")
        return "\n".join(lines) + "\n"


def _relation(a: np.ndarray, b: np.ndarray, tol: float = 0.02) -> Tuple[str, float]:
    inter = int(np.sum(a & b))
    union = int(np.sum(a | b))
    smaller = min(int(np.sum(a)), int(np.sum(b)))
    if union - inter <= tol * union:
        return "equal", (union - inter) / union if union else 0.0
    if inter <= tol * smaller:
        return "disjoint", inter / smaller if smaller else 0.0
    return "violation", inter / smaller


def superlevel_partition(
    g: Grid,
    V: Potential,
    sources: Sequence,
    ladder: Optional[TruncationLadder] = None,
    tau_rel: Optional[float] = None,
    S: Optional[NodeMask] = None,
    opts: Optional[SolveOptions] = None,
    workers: Optional[int] = None,
) -> SuperlevelReport:
    """U_x = {G_x > tau max G_x} inside the complement of S, with pairwise relations"""
    tau = config.TAU_U if tau_rel is None else tau_rel
    if S is None:
        S = detect_S(solve_ladder(g, V, 1.0, ladder, opts)[0])
    for x in sources:
        node = g.nearest_node(x)
        if S.mask[node]:
            raise InvalidSource(f"source {tuple(np.atleast_1d(x))} lies in the detected S")

    sets = []
    for G in green_functions(g, V, sources, ladder, opts, workers):
        peak = float(np.max(G.off_source(), initial=0.0))
        u = (G.field.values > tau * peak) & ~S.mask
        u[G.node] = True
        sets.append(NodeMask(g, u))

    relations = []
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            kind, overlap = _relation(sets[i].mask, sets[j].mask)
            relations.append(PairRelation(i, j, kind, overlap))

    graph = components(g, ~S)
    containment = []
    for s in sets:
        hits = np.bincount(graph.labels[s.mask & (graph.labels >= 0)], minlength=max(graph.count, 1))
        containment.append(float(np.max(hits)) / max(s.count, 1))

    # classes follow the first source whose set covers the node
    class_of = list(range(len(sets)))
    for r in relations:
        if r.kind == "equal":
            class_of[r.second] = class_of[r.first]
    labels = np.full(g.size, -1, dtype=np.int64)
    for i in reversed(range(len(sets))):
        labels[sets[i].mask] = class_of[i]
    distinct = sorted(set(class_of))
    remap = {c: n for n, c in enumerate(distinct)}
    labels = np.where(labels >= 0, np.vectorize(lambda v: remap.get(v, -1))(labels), -1)
    sizes = tuple(int(np.sum(labels == n)) for n in range(len(distinct)))
    return SuperlevelReport(tuple(sets), tuple(relations), ComponentLabels(g, labels, sizes), tuple(containment))


@dataclass(frozen=True)
class OrthogonalityResult:
    z_side: float
    free_side: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.z_side <= self.tolerance and self.free_side <= self.tolerance


def orthogonality(
    g: Grid,
    V: Potential,
    report: ZeroSetReport,
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
) -> OrthogonalityResult:
    """integral(zeta_{chi_free} chi_Z) and integral(zeta_{chi_Z} chi_free)"""
    z = report.Z.indicator()
    free = (~report.Z).indicator()
    u_free, _ = solve_ladder(g, V, free, ladder, opts)
    u_z, _ = solve_ladder(g, V, z, ladder, opts)
    theta = torsion(g, opts)
    return OrthogonalityResult(
        z_side=integrate(g, u_free * z),
        free_side=integrate(g, u_z * free),
        tolerance=1e-3 * g.spec.measure * theta.max(),
    )


def density_fraction(g: Grid, Z: NodeMask, node: int) -> float:
    """Fraction of the interior nodes in the 3^N block around `node` lying outside Z"""
    center = g.ij[node]
    offsets = np.stack(np.meshgrid(*([np.arange(-1, 2)] * g.dim), indexing="ij"), axis=-1).reshape(-1, g.dim)
    rows = [g.lookup(center + o) for o in offsets]
    rows = [r for r in rows if r >= 0]
    return float(np.mean([not Z.mask[r] for r in rows]))


def solve_admissible(
    g: Grid,
    V: Potential,
    f: DataLike,
    report: ZeroSetReport,
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
) -> Tuple[Field, LadderReport]:
    """Solution with datum f restricted to the complement of Z"""
    values = _data_values(g, f) * ~report.Z.mask
    return solve_ladder(g, V, Field(g, values), ladder, opts)
