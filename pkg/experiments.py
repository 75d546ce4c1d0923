import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config import ExperimentConfig
from errors import LabError, ParseError
from green import (
    fundamental_bound_margin,
    green_batch_csv,
    green_function,
    green_functions,
    measure_representation_check,
    representation_check,
    symmetry_defect,
)
from grid import DomainSpec, Field, Grid, build_grid, dirichlet_energy, field_to_csv, parse_domain
from linsolve import assemble_dense
from potential import (
    DistanceToSet,
    Hyperplane,
    Point,
    Potential,
    Tabulated,
    Zero,
    TruncationLadder,
    check_dimension,
    parse_potential,
)
from principles import (
    check_alternative,
    check_comparison,
    hopf_criterion_1d,
    kato_check,
    oned_regime_classifier,
    selective_solution,
)
from schrodinger import (
    LadderReport,
    MeasureData,
    energy,
    final_weight,
    parse_data,
    solve_ladder,
    solve_measure,
    solve_truncated,
    torsion,
    verify_estimates,
)
from zeroset import (
    Bump,
    ZeroSetReport,
    analyze,
    defect_mass,
    density_fraction,
    orthogonality,
    solve_admissible,
    superlevel_partition,
)

logger = logging.getLogger(__name__)

SEED = 20240611
UNIT_DISK = DomainSpec.disk(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float

    def line(self) -> str:
        return f"CHECK {self.name} {'PASS' if self.passed else 'FAIL'} margin={'%.12e' % self.margin}"


@dataclass
class ExperimentResult:
    name: str
    statement: str
    checks: List[Check] = field(default_factory=list)
    files: Dict[str, str] = field(default_factory=dict)
    converged: bool = True

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, margin: float, tol: float = 0.0, strict: bool = False) -> Check:
        """Record a check that passes when margin >= -tol (margin > 0 when strict)"""
        margin = float(margin)
        passed = margin > 0 if strict else margin >= -tol
        if math.isnan(margin):
            passed = False
        entry = Check(name, passed, margin)
        self.checks.append(entry)
        logger.info(f"{'✅' if passed else '❌'} {self.name}: {name} margin={margin:.3e}")
        return entry

    def track(self, report: Optional[LadderReport]) -> None:
        if report is not None and not (report.converged and report.solver_converged):
            self.converged = False

    def summary_text(self) -> str:
        lines = [f"# {self.name}: {self.statement}"]
        lines.extend(c.line() for c in self.checks)
        return "\n".join(lines) + "\n"


def _ladder(cfg: ExperimentConfig) -> TruncationLadder:
    k0, ratio, rungs = cfg.ladder
    return TruncationLadder(k0, ratio, rungs, cfg.stop_tol, cfg.sampling)


def _resolutions(cfg: ExperimentConfig) -> List[int]:
    return sorted(set(cfg.resolutions))


def _analyze(result: ExperimentResult, g: Grid, V: Potential, cfg: ExperimentConfig) -> ZeroSetReport:
    report = analyze(g, V, _ladder(cfg), cfg.tau_s, cfg.tau_z)
    result.track(report.torsion_report)
    for c in report.components:
        result.track(c.report)
    return report


def _report_files(result: ExperimentResult, report: ZeroSetReport, tag: str = "") -> None:
    result.files[f"torsion{tag}.csv"] = field_to_csv(report.zeta1)
    result.files[f"ladder{tag}.csv"] = report.torsion_report.to_csv()
    result.files[f"zeroset{tag}.csv"] = report.to_csv()
    result.files[f"S{tag}.csv"] = report.S.to_csv()
    result.files[f"Z{tag}.csv"] = report.Z.to_csv()


def _solution_checks(
    result: ExperimentResult,
    g: Grid,
    V: Potential,
    f,
    u: Field,
    u_report: LadderReport,
    report: ZeroSetReport,
    cfg: ExperimentConfig,
    source: Tuple[float, ...],
    tag: str = "",
) -> None:
    """Absorption, domination, comparison and the alternative for one solution"""
    estimates = verify_estimates(g, V, f, u, u_report)
    result.check(f"absorption{tag}", estimates.absorption_margin, tol=1e-6)
    if not math.isnan(estimates.domination_margin):
        result.check(f"domination{tag}", estimates.domination_margin, tol=1e-6)
    result.check(f"laplacian_mass{tag}", estimates.laplacian_margin, tol=1e-6)

    comparison = check_comparison(g, V, MeasureData.dirac(source), _ladder(cfg))
    result.track(comparison.report)
    result.check(f"comparison{tag}", comparison.margin, tol=1e-6 * comparison.max_u)

    alternative = check_alternative(u, report, cfg.tau_pos, cfg.tau_zero)
    violations = sum(v == "violation" for v in alternative.verdicts)
    result.check(f"alternative{tag}", -float(violations))
    result.files[f"verdicts{tag}.csv"] = alternative.to_csv(result.name)


def _main_defect(report: ZeroSetReport, pick=max) -> float:
    defects = [c.defect for c in report.main_components()]
    return pick(defects) if defects else 0.0


# -- presets -------------------------------------------------------------------

def run_example_point(cfg: ExperimentConfig) -> ExperimentResult:
    alpha = 3.0 if cfg.alpha is None else cfg.alpha
    result = ExperimentResult("example-point", PRESETS["example-point"].statement)
    ladder = _ladder(cfg)
    V = Point((0.0, 0.0), alpha)
    a, far = (0.0, 0.0), (0.5, 0.0)
    resolutions = _resolutions(cfg)

    g = build_grid(UNIT_DISK.with_resolution(resolutions[-1]))
    report = _analyze(result, g, V, cfg)
    _report_files(result, report)
    _solution_checks(result, g, V, 1.0, report.zeta1, report.torsion_report, report, cfg, (0.4, 0.1))
    result.check("components_not_in_Z", cfg.tau_z - _main_defect(report))

    samples = [(0.5, 0.0), (-0.4, 0.3), (0.2, -0.6), (-0.3, -0.45), (0.6, 0.5)]
    result.check("representation", 0.02 - representation_check(g, V, 1.0, samples, ladder))
    dirac = MeasureData.dirac((0.4, 0.1))
    result.check("representation_dirac", 0.02 - measure_representation_check(g, V, dirac, samples, ladder))
    G_x, G_y = green_functions(g, V, [(-0.4, 0.0), (0.4, 0.0)], ladder)
    result.files.update(green_batch_csv([G_x, G_y]))
    scale = max(float(np.max(G_x.off_source())), float(np.max(G_y.off_source())))
    result.check("green_symmetry", 0.02 * scale - symmetry_defect(G_x, G_y))
    # Z shrinks to the single point a; only a small candidate ball is allowed
    result.check("Z_candidate_small", 0.05 * g.spec.measure - report.z_measure)

    # the complement of a point is connected, so every superlevel set is the same class
    superlevel = superlevel_partition(g, V, [(-0.4, 0.0), (0.4, 0.0), (0.0, 0.5)], ladder, S=report.S)
    result.files["superlevel.csv"] = superlevel.to_csv()
    result.check("superlevel_equal", -float(sum(r.kind != "equal" for r in superlevel.relations)))
    result.check("superlevel_contained", min(superlevel.containment) - 0.98)

    if len(resolutions) > 1:
        grids = [build_grid(UNIT_DISK.with_resolution(n)) for n in resolutions]
        expected = tuple(c.verdict for c in report.main_components())
        stable = True
        for gn in grids[:-1]:
            stable &= tuple(c.verdict for c in _analyze(result, gn, V, cfg).main_components()) == expected
        result.check("verdicts_stable", 0.0 if stable else -1.0)
        # compare the resolutions at one common truncation level
        levels = [solve_ladder(gn, V, 1.0, ladder)[1].final_k for gn in grids]
        common = max(levels)
        rows = ["n,h,value_at_a,value_far"]
        at_a, at_far = [], []
        for gn in grids:
            u = solve_truncated(gn, V, 1.0, common, ladder.sampling)
            at_a.append(u.at(a))
            at_far.append(u.at(far))
            rows.append(f"{gn.spec.n},{'%.12e' % gn.h},{'%.12e' % at_a[-1]},{'%.12e' % at_far[-1]}")
        result.files["refinement.csv"] = "\n".join(rows) + "\n"
        result.check("value_at_a_decreasing", min(p - q for p, q in zip(at_a, at_a[1:])), strict=True)
        change = max(abs(q - p) / abs(p) for p, q in zip(at_far, at_far[1:]))
        result.check("value_far_stable", 0.05 - change)
    return result


def _twin_variant(result: ExperimentResult, cfg: ExperimentConfig, alpha: float, beta: float, tag: str) -> None:
    a, b = -0.3, 0.4
    V = Hyperplane(0, a, alpha) + Hyperplane(0, b, beta)
    ladder = _ladder(cfg)
    sites = [(-0.65, 0.0), ((a + b) / 2, 0.0), (0.7, 0.0)]
    resolutions = _resolutions(cfg)

    g = build_grid(UNIT_DISK.with_resolution(resolutions[-1]))
    report = _analyze(result, g, V, cfg)
    _report_files(result, report, tag)
    _solution_checks(result, g, V, 1.0, report.zeta1, report.torsion_report, report, cfg, (-0.6, 0.0), tag)

    if beta < 2:
        u, u_report = solve_admissible(g, V, 1.0, report, ladder)
        result.track(u_report)
        result.files[f"admissible{tag}.csv"] = field_to_csv(u)
        x1 = g.coords[:, 0]
        peak = u.max()
        right = x1 >= a + 4 * g.h
        left = (x1 <= a - 4 * g.h) & (g.boundary_distance() >= 4 * g.h)
        result.check(f"zero_right_of_a{tag}", 1e-2 * peak - float(np.max(u.values[right])))
        result.check(f"positive_left_of_a{tag}", float(np.min(u.values[left])) - 1e-3 * peak, strict=True)
    else:
        result.check(f"three_components{tag}", -abs(len(report.main_components()) - 3))
        labels = [report.labels.label_at(p) for p in sites]
        u, u_report = selective_solution(g, V, report, [labels[1]], ladder)
        result.track(u_report)
        alternative = check_alternative(u, report, cfg.tau_pos, cfg.tau_zero)
        by_label = {e.component: e.verdict for e in alternative.entries}
        found = [by_label.get(label, "missing") for label in labels]
        result.check(f"middle_only{tag}", 0.0 if found == ["zero", "positive", "zero"] else -1.0)
        result.files[f"selective{tag}.csv"] = alternative.to_csv(result.name)
        # sources in different slabs never share a superlevel set
        superlevel = superlevel_partition(g, V, sites, ladder, S=report.S)
        result.files[f"superlevel{tag}.csv"] = superlevel.to_csv()
        result.check(f"superlevel_disjoint{tag}", -float(sum(r.kind != "disjoint" for r in superlevel.relations)))
        result.check(f"superlevel_contained{tag}", min(superlevel.containment) - 0.98)

    if len(resolutions) > 1:
        stable = True
        expected = [report.verdict_of(report.labels.label_at(p)) for p in sites]
        for n in resolutions[:-1]:
            coarse = build_grid(UNIT_DISK.with_resolution(n))
            other = _analyze(result, coarse, V, cfg)
            stable &= [other.verdict_of(other.labels.label_at(p)) for p in sites] == expected
        result.check(f"verdicts_stable{tag}", 0.0 if stable else -1.0)


def run_example_twin(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("example-twin", PRESETS["example-twin"].statement)
    alpha = 3.0 if cfg.alpha is None else cfg.alpha
    betas = [cfg.beta] if cfg.beta is not None else [1.5, 3.0]
    for beta in betas:
        _twin_variant(result, cfg, alpha, beta, "" if len(betas) == 1 else f"_beta{beta:g}")
    return result


def run_example_obstacle(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("example-obstacle", PRESETS["example-obstacle"].statement)
    obstacle = DomainSpec.disk(0.0, 0.0, 0.3)
    near_obstacle = (0.4, 0.0)
    alphas = [cfg.alpha] if cfg.alpha is not None else [1.5, 3.0]
    resolutions = _resolutions(cfg)

    for alpha in alphas:
        tag = "" if len(alphas) == 1 else f"_alpha{alpha:g}"
        V = DistanceToSet(obstacle, alpha)
        defects, verdicts, fractions = [], [], []
        density = ["n,h,fraction,in_Z"]
        for n in resolutions:
            g = build_grid(UNIT_DISK.with_resolution(n))
            report = _analyze(result, g, V, cfg)
            defects.append(_main_defect(report, min if alpha < 2 else max))
            verdicts.append(tuple(c.verdict for c in report.main_components()))
            node = g.nearest_node(near_obstacle)
            fractions.append(-1.0 if report.Z.mask[node] else density_fraction(g, report.Z, node))
            density.append(f"{n},{'%.12e' % g.h},{'%.12e' % fractions[-1]},{int(report.Z.mask[node])}")

        _report_files(result, report, tag)
        _solution_checks(result, g, V, 1.0, report.zeta1, report.torsion_report, report, cfg, (0.6, 0.0), tag)
        if alpha < 2:
            result.check(f"annulus_in_Z{tag}", defects[-1] - cfg.tau_z, strict=True)
        else:
            result.check(f"annulus_not_in_Z{tag}", cfg.tau_z - defects[-1])
            # Z may extend to where zeta_1 ~ 1/V drops below the S threshold
            reach = 2 * g.h + (cfg.tau_s * report.zeta1.max()) ** (1.0 / alpha)
            spread = float(np.max(obstacle.distance(g.coords[report.Z.mask]), initial=0.0))
            result.check(f"Z_near_obstacle{tag}", reach - spread)
            ortho = orthogonality(g, V, report, _ladder(cfg))
            result.check(f"orthogonality_Z{tag}", ortho.tolerance - ortho.z_side)
            result.check(f"orthogonality_free{tag}", ortho.tolerance - ortho.free_side)
        if len(resolutions) > 1:
            result.check(f"verdicts_stable{tag}", 0.0 if len(set(verdicts)) == 1 else -1.0)
            if alpha >= 2:
                result.check(f"defect_decreasing{tag}", min(p - q for p, q in zip(defects, defects[1:])), strict=True)
                # a not_in_Z node near the obstacle becomes a density point of the complement of Z
                result.files[f"density{tag}.csv"] = "\n".join(density) + "\n"
                growth = min(q - p for p, q in zip(fractions, fractions[1:]))
                result.check(f"density_to_one{tag}", min(growth, fractions[-1] - 1.0))
    return result


def run_oned_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("oned-sweep", PRESETS["oned-sweep"].statement)
    ladder = _ladder(cfg)

    rows = ["alpha,quadrature,pde,verdict"]
    for alpha, expected in ((0.5, "Z_empty"), (1.5, "Z_everything"), (2.5, "Z_point")):
        verdict = oned_regime_classifier(alpha, ladder)
        result.track(verdict.report.torsion_report)
        rows.append(f"{alpha:g},{verdict.quadrature_verdict},{verdict.pde_verdict},{verdict.verdict}")
        ok = verdict.verdict == expected and not verdict.mismatch
        result.check(f"regime_alpha{alpha:g}", 0.0 if ok else -1.0)
    result.files["regimes.csv"] = "\n".join(rows) + "\n"

    rows = ["alpha,diverges,value"]
    agree = 0
    for alpha in (1.0, 1.5, 1.9, 2.0, 2.5, 3.0):
        hopf = hopf_criterion_1d(Point((0.0,), alpha), 0.0, 0.5)
        agree += hopf.diverges == (alpha >= 2)
        rows.append(f"{alpha:g},{int(hopf.diverges)},{'%.12e' % hopf.value}")
        if alpha == 1.5:
            result.check("hopf_value_alpha1.5", 1e-6 - abs(hopf.value - 2 * math.sqrt(0.5)))
    result.files["hopf.csv"] = "\n".join(rows) + "\n"
    result.check("hopf_flips_at_2", float(agree - 6))
    return result


def run_example_comb(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("example-comb", PRESETS["example-comb"].statement)
    alpha = 3.0 if cfg.alpha is None else cfg.alpha
    offsets = (-0.6, -0.2, 0.2, 0.6)
    V = Hyperplane(0, offsets[0], alpha)
    for c in offsets[1:]:
        V = V + Hyperplane(0, c, alpha)

    resolutions = _resolutions(cfg)
    g = build_grid(UNIT_DISK.with_resolution(resolutions[-1]))
    report = _analyze(result, g, V, cfg)
    _report_files(result, report)
    _solution_checks(result, g, V, 1.0, report.zeta1, report.torsion_report, report, cfg, (0.0, 0.1))
    result.check("five_components", -abs(len(report.main_components()) - 5))

    sites = [(-0.8, 0.0), (-0.4, 0.0), (0.0, 0.0), (0.4, 0.0), (0.8, 0.0)]
    labels = [report.labels.label_at(p) for p in sites]
    chosen = labels[0::2]
    u, u_report = selective_solution(g, V, report, chosen, _ladder(cfg))
    result.track(u_report)
    alternative = check_alternative(u, report, cfg.tau_pos, cfg.tau_zero)
    by_label = {e.component: e.verdict for e in alternative.entries}
    found = [by_label.get(label, "missing") for label in labels]
    expected = ["positive", "zero", "positive", "zero", "positive"]
    result.check("selective_positivity", 0.0 if found == expected else -1.0)
    result.files["selective.csv"] = alternative.to_csv(result.name)

    if len(resolutions) > 1:
        stable = True
        verdicts = [report.verdict_of(label) for label in labels]
        for n in resolutions[:-1]:
            coarse = _analyze(result, build_grid(UNIT_DISK.with_resolution(n)), V, cfg)
            stable &= [coarse.verdict_of(coarse.labels.label_at(p)) for p in sites] == verdicts
        result.check("verdicts_stable", 0.0 if stable else -1.0)
    return result


def run_example_bounded(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("example-bounded", PRESETS["example-bounded"].statement)
    V = parse_potential("const 4 + hyperplane x1 c=0 alpha=-1")
    ladder = _ladder(cfg)
    g = build_grid(UNIT_DISK.with_resolution(_resolutions(cfg)[-1]))
    report = _analyze(result, g, V, cfg)
    _report_files(result, report)
    _solution_checks(result, g, V, 1.0, report.zeta1, report.torsion_report, report, cfg, (0.3, 0.2))
    result.check("S_empty", -float(report.S.count))
    result.check("Z_empty", -float(report.Z.count))

    rng = np.random.default_rng(SEED)
    f = Field(g, rng.uniform(0.0, 1.0, g.size))
    u, u_report = solve_ladder(g, V, f, ladder)
    result.track(u_report)
    bump = Bump.at(g, g.nearest_node((0.0, 0.0)), 0.2)
    estimate = defect_mass(g, final_weight(g, V, u_report), u, MeasureData.from_density(f), [bump])
    result.check("no_defect", 1e-4 * float(np.max(f.values)) - abs(estimate.total_defect))
    return result


def run_invariants(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("invariants", PRESETS["invariants"].statement)
    rng = np.random.default_rng(SEED)
    ladder = _ladder(cfg)
    n = _resolutions(cfg)[0]
    odd = 2 * (n // 2) + 1

    line = build_grid(DomainSpec.interval(-1.0, 1.0, odd))
    x = line.coords[:, 0]
    theta = torsion(line)
    result.check("torsion_1d_exact", 1e-9 - float(np.max(np.abs(theta.values - (1 - x ** 2) / 2))))
    G = green_function(line, Zero(), (0.0,), ladder)
    result.check("green_triangle", 1e-9 - float(np.max(np.abs(G.field.values - (1 - np.abs(x)) / 2))))

    slack = []
    for m in _resolutions(cfg):
        disk = build_grid(UNIT_DISK.with_resolution(m))
        slack.append(3 * disk.h - abs(torsion(disk).max() - 0.25))
    result.check("torsion_disk_max", min(slack))

    # random bounded potentials against a dense inverse
    worst = 0.0
    for spec in (DomainSpec.interval(-1.0, 1.0, 9), DomainSpec.rectangle(-1.0, 1.0, -1.0, 1.0, 9)):
        small = build_grid(spec)
        weights = rng.uniform(0.0, 10.0, small.size)
        V = Tabulated(small, weights)
        inverse = np.linalg.inv(assemble_dense(small, Field(small, weights)))
        sources = [small.coords[i] for i in (0, small.size // 2, small.size - 1)]
        batch = green_functions(small, V, sources, ladder)
        for i, Gi in enumerate(batch):
            oracle = inverse[:, Gi.node] / small.cell_volume
            worst = max(worst, float(np.max(np.abs(Gi.field.values - oracle))))
            for Gj in batch[i + 1:]:
                worst = max(worst, symmetry_defect(Gi, Gj))
    result.check("green_symmetry_dense", 1e-8 - worst)

    g = build_grid(UNIT_DISK.with_resolution(n))
    V = Point((0.0, 0.0), 3.0)
    zeta1, report = solve_ladder(g, V, 1.0, ladder)
    result.track(report)
    result.check("ladder_monotone", 10 * 1e-10 - report.monotone_violation)
    result.check("nonnegative", float(zeta1.min()) + 1e-8)

    K = report.final_k
    zeta1_K = solve_truncated(g, V, 1.0, K, ladder.sampling)
    domination = math.inf
    for _ in range(20):
        f = Field(g, rng.uniform(-1.0, 1.0, g.size))
        zeta_f = solve_truncated(g, V, f, K, ladder.sampling)
        domination = min(domination, float(np.min(np.max(np.abs(f.values)) * zeta1_K.values - np.abs(zeta_f.values))))
    result.check("domination_random", domination, tol=1e-8)

    kato = math.inf
    for _ in range(5):
        h_data = Field(g, rng.uniform(-1.0, 1.0, g.size))
        kato = min(kato, kato_check(g, V, h_data, 1e3, ladder.sampling))
    result.check("kato_inequality", kato, tol=1e-10)

    f1 = Field(g, rng.uniform(0.0, 1.0, g.size))
    f2 = Field(g, rng.uniform(0.0, 1.0, g.size))
    z1 = solve_truncated(g, V, f1, 1e3, ladder.sampling)
    z2 = solve_truncated(g, V, f2, 1e3, ladder.sampling)
    z12 = solve_truncated(g, V, f1 + f2, 1e3, ladder.sampling)
    result.check("linearity", 1e-8 - float(np.max(np.abs(z12.values - z1.values - z2.values))))
    left = g.cell_volume * float(np.sum(z1.values * f2.values))
    right = g.cell_volume * float(np.sum(z2.values * f1.values))
    result.check("duality_identity", 1e-8 - abs(left - right) / abs(left))

    W = final_weight(g, V, report)
    minimiser = solve_truncated(g, V, f1, K, ladder.sampling)
    base = energy(g, W, f1, minimiser)
    result.check("energy_minimiser", energy(g, W, f1, minimiser + 1e-3 * f2) - base)
    result.check("dirichlet_energy_nonnegative", dirichlet_energy(zeta1))

    disk_G = green_function(g, Zero(), (0.2, -0.1), ladder)
    result.check("fundamental_bound", fundamental_bound_margin(disk_G), tol=1e-8)
    return result


def run_custom(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("custom", PRESETS["custom"].statement)

    def parsed(attr: str, parse: Callable):
        try:
            return parse()
        except ParseError as e:
            raise ParseError(e.message, cfg.lines.get(attr, 0))
        except LabError as e:
            raise ParseError(e.message, cfg.lines.get(attr, 0))

    resolutions = _resolutions(cfg)
    spec = parsed("domain", lambda: parse_domain(cfg.domain, resolutions[-1]))
    V = parsed("potential", lambda: parse_potential(cfg.potential))
    g = build_grid(spec)
    parsed("potential", lambda: check_dimension(V, g))
    mu = parsed("data", lambda: parse_data(cfg.data, g))
    parsed("data", lambda: mu.check_locations(g))
    ladder = _ladder(cfg)

    report = _analyze(result, g, V, cfg)
    _report_files(result, report)
    u, u_report = solve_measure(g, V, mu, ladder)
    result.track(u_report)
    result.files["solution.csv"] = field_to_csv(u)
    result.files["solution_ladder.csv"] = u_report.to_csv()

    estimates = verify_estimates(g, V, mu, u, u_report)
    result.check("absorption", estimates.absorption_margin, tol=1e-6)
    result.check("laplacian_mass", estimates.laplacian_margin, tol=1e-6)
    if not math.isnan(estimates.domination_margin):
        result.check("domination", estimates.domination_margin, tol=1e-6)
    comparison = check_comparison(g, V, mu, ladder)
    result.track(comparison.report)
    result.check("comparison", comparison.margin, tol=1e-6 * comparison.max_u)
    alternative = check_alternative(u, report, cfg.tau_pos, cfg.tau_zero, data=mu)
    result.check("alternative", -float(sum(v == "violation" for v in alternative.verdicts)))
    result.files["verdicts.csv"] = alternative.to_csv(result.name)
    return result


@dataclass(frozen=True)
class Preset:
    name: str
    statement: str
    runner: Optional[Callable[[ExperimentConfig], ExperimentResult]] = None


PRESETS: Dict[str, Preset] = {
    "example-point": Preset(
        "example-point",
        "|x-a|^-alpha with alpha >= 2: every nontrivial solution vanishes only at a",
    ),
    "example-twin": Preset(
        "example-twin",
        "hyperplanes x1=a (alpha) and x1=b (beta): beta < 2 forces u = 0 on {x1 >= a}, beta >= 2 splits the disk in three",
    ),
    "example-obstacle": Preset(
        "example-obstacle",
        "d(x, obstacle)^-alpha: alpha < 2 admits only the trivial solution, alpha >= 2 has zero set the obstacle",
    ),
    "oned-sweep": Preset(
        "oned-sweep",
        "1D |x|^-alpha: Z empty for alpha < 1, everything for 1 <= alpha < 2, a point for alpha >= 2 (Hopf integral)",
    ),
    "example-comb": Preset(
        "example-comb",
        "several hyperplanes with alpha >= 2 uncouple the disk into independent slabs",
    ),
    "example-bounded": Preset(
        "example-bounded",
        "bounded potential: S and Z are empty and solutions are positive",
    ),
    "invariants": Preset(
        "invariants",
        "discrete identities: torsion exactness, Green symmetry, domination, Kato inequality, duality",
    ),
    "verify-all": Preset("verify-all", "every preset above, run concurrently"),
    "custom": Preset("custom", "domain, potential and datum read from a config file"),
}

_RUNNERS = {
    "example-point": run_example_point,
    "example-twin": run_example_twin,
    "example-obstacle": run_example_obstacle,
    "oned-sweep": run_oned_sweep,
    "example-comb": run_example_comb,
    "example-bounded": run_example_bounded,
    "invariants": run_invariants,
    "custom": run_custom,
}
for _name, _runner in _RUNNERS.items():
    PRESETS[_name] = Preset(_name, PRESETS[_name].statement, _runner)

VERIFY_ALL = (
    "invariants",
    "example-bounded",
    "example-point",
    "example-twin",
    "example-obstacle",
    "example-comb",
    "oned-sweep",
)


def list_presets() -> str:
    return "\n".join(f"{p.name:<18} {p.statement}" for p in PRESETS.values()) + "\n"


def run_preset(name: str, cfg: ExperimentConfig) -> ExperimentResult:
    preset = PRESETS.get(name)
    if preset is None or preset.runner is None:
        raise ParseError(f"unknown preset '{name}'", cfg.lines.get("preset", 0))
    logger.info(f"🚀 Running {name}")
    result = preset.runner(cfg)
    result.files["summary.txt"] = result.summary_text()
    return result
