import logging
import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate as quadrature

from config import config
from errors import ConfigurationError, InvalidArgument
from grid import DomainSpec, Field, Grid, build_grid
from linsolve import SolveOptions
from potential import Point, Potential, TruncationLadder, sample
from schrodinger import (
    DataLike,
    LadderReport,
    MeasureData,
    _data_values,
    solve_ladder,
    solve_measure,
    solve_truncated,
    torsion,
)
from zeroset import ZeroSetReport, analyze

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComparisonParams:
    """H(t) = ((alpha - 1) / (C alpha)) min(t^alpha, 1)"""

    C: float
    alpha: float = 2.0

    def __post_init__(self):
        if not self.alpha > 1:
            raise InvalidArgument(f"comparison exponent must exceed 1, got {self.alpha}")
        if not self.C > 0:
            raise InvalidArgument(f"comparison constant must be positive, got {self.C}")

    @classmethod
    def from_torsion(cls, theta: Field, alpha: float = 2.0) -> "ComparisonParams":
        return cls(C=theta.max(), alpha=alpha)

    @property
    def bound(self) -> float:
        return (self.alpha - 1) / (self.C * self.alpha)


def comparison_H(t: Union[float, np.ndarray], params: ComparisonParams):
    values = np.asarray(t, dtype=float)
    if np.any(values < 0):
        raise InvalidArgument("comparison function is defined for t >= 0 only")
    out = params.bound * np.minimum(values ** params.alpha, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ComparisonResult:
    margin: float
    max_u: float
    u: Field
    w: Field
    report: LadderReport

    @property
    def relative_margin(self) -> float:
        return self.margin / self.max_u if self.max_u > 0 else self.margin


def check_comparison(
    g: Grid,
    V: Potential,
    mu: Union[MeasureData, DataLike],
    ladder: Optional[TruncationLadder] = None,
    params: Optional[ComparisonParams] = None,
    opts: Optional[SolveOptions] = None,
) -> ComparisonResult:
    """min(u - zeta_{H(u)}) with both fields at the final rung of u"""
    if not isinstance(mu, MeasureData):
        mu = MeasureData.from_density(Field(g, _data_values(g, mu)))
    params = params or ComparisonParams.from_torsion(torsion(g, opts))
    u, report = solve_measure(g, V, mu, ladder, opts)
    datum = comparison_H(np.maximum(u.values, 0.0), params)
    w = solve_truncated(g, V, Field(g, datum), report.final_k, report.sampling, opts)
    return ComparisonResult(float(np.min(u.values - w.values)), max(u.max(), 0.0), u, w, report)


@dataclass(frozen=True)
class ComponentAlternative:
    component: int
    verdict: str
    min: float
    max: float
    carries_data: bool = False


@dataclass(frozen=True)
class AlternativeVerdict:
    entries: Tuple[ComponentAlternative, ...]
    tau_pos: float
    tau_zero: float

    @property
    def has_violation(self) -> bool:
        return any(e.verdict == "violation" for e in self.entries)

    @property
    def verdicts(self) -> List[str]:
        return [e.verdict for e in self.entries]

    def to_csv(self, experiment: str) -> str:
        lines = ["experiment,component,verdict,min,max"]
        for e in self.entries:
            lines.append(f"{experiment},{e.component},{e.verdict},{'%.12e' % e.min},{'%.12e' % e.max}")
        return "\n".join(lines) + "\n"


def check_alternative(
    u: Field,
    report: ZeroSetReport,
    tau_pos: Optional[float] = None,
    tau_zero: Optional[float] = None,
    data: Optional[MeasureData] = None,
) -> AlternativeVerdict:
    """Per component: positive, zero, or a violation of the dichotomy.

    Fringe components lie in Z without a solve and report zero whenever
    they are not positive. With `data`, a zero component that carries
    mass is a violation.
    """
    tau_pos = config.TAU_POS if tau_pos is None else tau_pos
    tau_zero = config.TAU_ZERO if tau_zero is None else tau_zero
    g = u.grid
    peak = max(u.max(), 0.0)
    b = data.rhs(g) if data is not None else None

    entries = []
    for c in report.components:
        mask = report.labels.labels == c.label
        values = u.values[mask]
        low, high = float(np.min(values)), float(np.max(values))
        if peak > 0 and low > tau_pos * peak:
            verdict = "positive"
        elif peak == 0 or high < tau_zero * peak:
            verdict = "zero"
        else:
            verdict = "zero" if c.fringe else "violation"
        carries = bool(b is not None and np.any(b[mask] > 0))
        if verdict == "zero" and carries and not c.fringe:
            verdict = "violation"
        entries.append(ComponentAlternative(c.label, verdict, low, high, carries))
    return AlternativeVerdict(tuple(entries), tau_pos, tau_zero)


@dataclass(frozen=True)
class HopfResult:
    diverges: bool
    partial_integrals: Tuple[float, ...]
    value: float


def _shell_meets_singularity(V: Potential, a: float, b: float, cells: int = 64) -> bool:
    """Whether some cell of a fine grid over [a, b] holds a non-integrable singularity of V"""
    h = (b - a) / cells
    g = build_grid(DomainSpec.interval(a - h, b + h, cells + 3))
    return bool(np.any(np.isinf(sample(V, g, "cell"))))


def hopf_criterion_1d(
    V: Potential,
    c: float,
    L: float,
    side: int = 1,
    weight_power: float = 1.0,
    shells: int = 41,
) -> HopfResult:
    """Dyadic-shell quadrature of V(x)|x - c|^p towards c.

    p = 1 is the Hopf integral; p = 0 tests integrability of V near c.
    """
    if side not in (1, -1) or not L > 0:
        raise InvalidArgument("side must be +1 or -1 and L positive")

    def integrand(x):
        return float(V.evaluate(np.array([[x]]))[0]) * abs(x - c) ** weight_power

    sums = []
    for j in range(shells):
        a, b = sorted((c + side * L * 2.0 ** (-j - 1), c + side * L * 2.0 ** (-j)))
        if b - a > 1e-9 * max(1.0, abs(c)) and _shell_meets_singularity(V, a, b):
            raise ConfigurationError(f"{V.describe()} is not integrable on [{a:g}, {b:g}] away from c={c:g}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", quadrature.IntegrationWarning)
            value, _ = quadrature.quad(integrand, a, b, limit=200)
        if j == 0 and not math.isfinite(value):
            raise ConfigurationError(f"{V.describe()} is not integrable away from c={c:g}")
        sums.append(value)

    tail = sums[-5:]
    diverges = sums[-1] > 0 and all(nxt >= prev * (1 - 1e-9) for prev, nxt in zip(tail, tail[1:]))
    total = math.inf if diverges else float(np.sum(sums))
    if not diverges and sums[-2] > 0:
        q = sums[-1] / sums[-2]
        if q < 1:
            total += sums[-1] * q / (1 - q)
    return HopfResult(diverges, tuple(sums), total)


@dataclass(frozen=True)
class RegimeVerdict:
    verdict: str
    quadrature_verdict: str
    pde_verdict: str
    report: ZeroSetReport

    @property
    def mismatch(self) -> bool:
        return self.quadrature_verdict != self.pde_verdict


def oned_regime_classifier(
    alpha: float,
    ladder: Optional[TruncationLadder] = None,
    n: int = 513,
    opts: Optional[SolveOptions] = None,
    workers: Optional[int] = None,
) -> RegimeVerdict:
    """Z_empty, Z_point or Z_everything for |x|^-alpha on (-1, 1)"""
    V = Point((0.0,), alpha)
    if not hopf_criterion_1d(V, 0.0, 0.5, weight_power=0).diverges:
        quadrature_verdict = "Z_empty"
    elif hopf_criterion_1d(V, 0.0, 0.5, weight_power=1).diverges:
        quadrature_verdict = "Z_point"
    else:
        quadrature_verdict = "Z_everything"

    g = build_grid(DomainSpec.interval(-1.0, 1.0, n))
    report = analyze(g, V, ladder, opts=opts, workers=workers)
    if report.Z.count == 0:
        pde_verdict = "Z_empty"
    elif report.Z.count == g.size:
        pde_verdict = "Z_everything"
    else:
        pde_verdict = "Z_point"

    if pde_verdict != quadrature_verdict:
        logger.warning(f"❌ alpha={alpha:g}: quadrature says {quadrature_verdict}, grid says {pde_verdict}")
    return RegimeVerdict(pde_verdict, quadrature_verdict, pde_verdict, report)


def kato_check(
    g: Grid,
    V: Potential,
    h: DataLike,
    k: float,
    sampling: str = "node",
    opts: Optional[SolveOptions] = None,
) -> float:
    """integral over {zeta_h > 0} of h zeta_1 minus integral of zeta_h^+"""
    values = _data_values(g, h)
    zeta_h = solve_truncated(g, V, h, k, sampling, opts)
    zeta_1 = solve_truncated(g, V, 1.0, k, sampling, opts)
    positive = zeta_h.values > 0
    bound = g.cell_volume * float(np.sum(values * zeta_1.values * positive))
    return bound - g.cell_volume * float(np.sum(np.maximum(zeta_h.values, 0.0)))


def selective_solution(
    g: Grid,
    V: Potential,
    report: ZeroSetReport,
    chosen: Sequence[int],
    ladder: Optional[TruncationLadder] = None,
    opts: Optional[SolveOptions] = None,
) -> Tuple[Field, LadderReport]:
    """Solution with datum the indicator of the chosen components"""
    mask = np.isin(report.labels.labels, list(chosen))
    return solve_ladder(g, V, Field(g, mask.astype(float)), ladder, opts)
