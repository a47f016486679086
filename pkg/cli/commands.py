"""
子命令实现

每个 cmd_* 接收 RunConfig, 返回 Report; run_command 负责写出报告、
打印摘要, 并在证书不成立时抛出 CertificationError.
"""

import math
from typing import Any, Callable, Dict, List, Optional, Tuple

from loguru import logger
from rich.console import Console
from rich.table import Table

from backend.appendix_gaps import AppendixGaps, certify_cell, certify_gaussian_cell
from backend.config_manager import get_config
from backend.error_handler import CertificationError, ErrorContext, ParameterError
from backend.grid_dispatcher import run_grid
from backend.model_params import ModelParams
from backend.model_profiles import (
    WindowSettings,
    compute_profile_curve,
    k3_closed_form,
    profile_gauss_inf,
    profile_gauss_inf_derivative,
    profile_neg_inf,
    profile_neg_inf_derivative,
    profile_point,
)
from backend.needle1d import (
    brute_force_minimizer,
    convexity_check,
    halfline_profile,
    reduce_to_halfline,
    rigidity_detect,
)
from backend.numerics import ToleranceConfig, central_difference
from backend.spectral import (
    Grid1D,
    convergence_table,
    eigenfunction_compare,
    first_nonzero_eigenvalue,
    rayleigh_quotient,
)
from backend.warped2d import (
    Arc,
    GridMesh,
    HalfSpace,
    Mixed,
    WarpedProduct,
    grid_eps_boundary,
    halfspace_boundary,
    mixed_configurations,
    mixed_excess,
)
from backend.weighted_line import (
    IntervalUnion,
    WeightedLine,
    cosh_model_line,
    exp_model_line,
    gaussian_line,
    load_tabulated_potential,
    polynomial_trig_line,
)
from cli.report_writer import Report, write_report
from cli.run_config import Command, RunConfig

PROFILE_COLUMNS = ["theta", "value", "branch", "xi_star", "H_theta"]
APPENDIX_COLUMNS = ["K", "N", "D", "theta", "K1", "K2", "K3", "I_inf", "min_gap",
                    "K1_xi", "K2_xi", "K1_source", "K2_source"]
GAUSSIAN_COLUMNS = ["K", "D", "theta", "I_D", "I_inf", "gap", "xi_star", "gap_lower_bound"]
NEEDLE_COLUMNS = ["theta", "boundary", "model_value", "excess", "set_lo", "set_hi",
                  "brute_boundary", "resolution"]
SPECTRAL_COLUMNS = ["n", "h", "lambda1", "error", "order"]
WARPED_COLUMNS = ["theta", "set", "boundary", "lower_bound", "strict_excess", "grid_boundary"]
DERIVATIVE_COLUMNS = ["theta", "numeric", "analytic", "abs_error", "passed"]

# 轨迹检查的容差
MASS_DRIFT_TOL = 1e-9
BOUNDARY_INCREASE_TOL = 1e-12
LOWER_BOUND_SLACK = 1e-6
DERIVATIVE_STEP = 1e-4


# ==================== 一维空间 ====================

class SpaceSpec:
    """
    按 --density 构造的一维加权空间, 附带 (若已知) 模型谱数据

    Attributes:
        space: 加权直线
        exact_lambda: 已知的第一非零特征值
        eigenfunction / eigen_derivative: 已知的模型特征函数
    """

    def __init__(self, config: RunConfig, tol: ToleranceConfig):
        self.exact_lambda: Optional[float] = None
        self.eigenfunction: Optional[Callable[[float], float]] = None
        self.eigen_derivative: Optional[Callable[[float], float]] = None
        self.space = self._build(config, tol)

    def _build(self, config: RunConfig, tol: ToleranceConfig) -> WeightedLine:
        density = config.density
        if density == "gaussian":
            K, shift = config.K, config.shift
            self.exact_lambda = K
            self.eigenfunction = lambda t: t - shift
            self.eigen_derivative = lambda t: 1.0
            return gaussian_line(K, shift, tol)

        if density == "cosh":
            params = ModelParams(config.K, config.N)
            params.require_negative()
            rs, gamma = params.sqrt_sigma, config.gamma
            # N ≥ −1 时 sinh 不在 L²(m) 中, 不给出模型谱数据
            if params.rigidity_regime:
                self.exact_lambda = params.K * params.N / (params.N - 1.0)
                self.eigenfunction = lambda t: math.sinh(gamma + rs * t)
                self.eigen_derivative = lambda t: rs * math.cosh(gamma + rs * t)
            return cosh_model_line(params, gamma, config.k, tol)

        if density == "exp":
            params = config.params
            if not params.is_bounded:
                raise ParameterError("density 'exp' needs a finite --D")
            return exp_model_line(params.exp_rate, params.D, tol)

        if density == "poly":
            if not config.poly:
                raise ParameterError("density 'poly' needs --poly coefficients")
            return polynomial_trig_line(config.poly, config.trig, tol=tol)

        return load_tabulated_potential(config.table, tol)


# ==================== profile ====================

def cmd_profile(config: RunConfig) -> Report:
    """θ 网格上的模型轮廓"""
    params = config.params
    curve = compute_profile_curve(params, config.thetas, max_workers=config.threads,
                                  tol=config.tolerance(),
                                  settings=WindowSettings.from_app_config())
    rows = curve.to_rows()
    document = {**config.describe(), "rows": rows, "symmetry_defect": curve.symmetry_defect()}
    summary = {"params": str(params), "points": len(rows),
               "min value": min(curve.values), "max value": max(curve.values)}
    return Report(rows=rows, columns=PROFILE_COLUMNS, document=document, summary=summary)


# ==================== verify-appendix ====================

def _certify_appendix_cell(cell, tol: ToleranceConfig, settings: WindowSettings):
    params, D, theta = cell
    with ErrorContext(f"verify-appendix K={params.K} N={params.N} D={D} theta={theta}"):
        return certify_cell(params, D, theta, tol, settings)


def _certify_gaussian_cell(cell, tol: ToleranceConfig, settings: WindowSettings):
    K, D, theta = cell
    with ErrorContext(f"verify-appendix --gaussian K={K} D={D} theta={theta}"):
        return certify_gaussian_cell(K, D, theta, tol, settings)


def cmd_verify_appendix(config: RunConfig) -> Report:
    """有界直径负维数轮廓 (或截断高斯轮廓) 严格优于无界模型的证书"""
    if config.gaussian:
        return _verify_gaussian(config)

    tol = config.tolerance()
    settings = WindowSettings.from_app_config()
    cells = [(ModelParams(K, N), D, theta)
             for K in config.K_grid for N in config.N_grid
             for D in config.D_grid for theta in config.thetas]
    logger.info(f"[Commands] Certifying {len(cells)} appendix cells")
    results = run_grid(cells, lambda cell: _certify_appendix_cell(cell, tol, settings),
                       max_workers=config.threads)

    rows = [cell.to_dict() for cell in results]
    violations = [row for cell, row in zip(results, rows) if not cell.passed]

    limits = []
    for K in config.K_grid:
        for N in config.N_grid:
            for D in config.D_grid:
                gaps = AppendixGaps(ModelParams(K, N), D, 0.5, tol)
                limits.append({"K": K, "N": N, "D": D,
                               "K3_at_one": k3_closed_form(gaps.params, D, 1.0),
                               **gaps.tail_limits()})

    min_row = min(rows, key=lambda r: r["min_gap"])
    document = {"command": config.command.value, "cells": rows, "limits": limits,
                "min_gap": min_row["min_gap"], "violations": violations}
    summary = {"cells": len(rows), "violations": len(violations),
               "min gap": min_row["min_gap"],
               "attained at": f"N={min_row['N']}, D={min_row['D']}, theta={min_row['theta']}"}
    return Report(rows=rows, columns=APPENDIX_COLUMNS, document=document,
                  passed=not violations, summary=summary)


def _verify_gaussian(config: RunConfig) -> Report:
    tol = config.tolerance()
    settings = WindowSettings.from_app_config()
    cells = [(K, D, theta) for K in config.K_grid for D in config.D_grid for theta in config.thetas]
    logger.info(f"[Commands] Certifying {len(cells)} truncated Gaussian cells")
    results = run_grid(cells, lambda cell: _certify_gaussian_cell(cell, tol, settings),
                       max_workers=config.threads)

    rows = [cell.to_dict() for cell in results]
    violations = [row for cell, row in zip(results, rows) if not cell.passed]
    below_bound = [row for row in rows if row["gap"] < row["gap_lower_bound"]]
    if below_bound:
        logger.warning(f"[Commands] {len(below_bound)} cells fall below the closed-form gap bound")

    min_row = min(rows, key=lambda r: r["gap"])
    document = {"command": config.command.value, "gaussian": True, "cells": rows,
                "min_gap": min_row["gap"], "violations": violations,
                "below_gap_bound": below_bound}
    summary = {"cells": len(rows), "violations": len(violations), "min gap": min_row["gap"],
               "attained at": f"K={min_row['K']}, D={min_row['D']}, theta={min_row['theta']}"}
    return Report(rows=rows, columns=GAUSSIAN_COLUMNS, document=document,
                  passed=not violations, summary=summary)


# ==================== needle ====================

def _trajectory_checks(trajectory: List[Dict[str, Any]]) -> Dict[str, Any]:
    """质量守恒与边界单调不增"""
    mass0 = trajectory[0]["mass"]
    drift = max(abs(step["mass"] - mass0) for step in trajectory)
    increases = [i for i in range(1, len(trajectory))
                 if trajectory[i]["boundary"] > trajectory[i - 1]["boundary"] + BOUNDARY_INCREASE_TOL]
    return {"steps": len(trajectory) - 1, "mass_drift": drift,
            "measure_preserving": drift <= MASS_DRIFT_TOL,
            "boundary_non_increasing": not increases, "increasing_steps": increases,
            "ends_on_halfline": trajectory[-1]["is_halfline"]}


def cmd_needle(config: RunConfig) -> Report:
    """一维针线分析: 凸性、半直线轮廓、穷举对照、刚性检测与平移轨迹"""
    tol = config.tolerance()
    spec = SpaceSpec(config, tol)
    space = spec.space
    convexity = convexity_check(space, config.K, config.N)

    rows = []
    lower_bound_ok = True
    brute_ok = True
    for theta in config.thetas:
        report = halfline_profile(space, theta)
        model_value, _ = profile_point(config.params, theta, tol)
        (lo, hi), = report.set.components
        row = {"theta": theta, "boundary": report.profile_value, "model_value": model_value,
               "excess": report.profile_value - model_value, "set_lo": lo, "set_hi": hi,
               "brute_boundary": None, "resolution": None}
        if convexity.passed and report.profile_value < model_value - LOWER_BOUND_SLACK:
            lower_bound_ok = False
            logger.warning(f"[Commands] Half-line profile below the model at theta={theta}")
        if config.brute_force:
            brute = brute_force_minimizer(space, theta, 2, config.brute_grid)
            row["brute_boundary"] = brute.best.boundary
            row["resolution"] = brute.resolution
            if brute.best.boundary < report.profile_value - brute.resolution:
                brute_ok = False
                logger.warning(f"[Commands] Brute force beats the half-line at theta={theta}")
        rows.append(row)

    document: Dict[str, Any] = {**config.describe(), "space": space.name,
                                "convexity": convexity.to_dict(), "halfline": rows,
                                "lower_bound_holds": lower_bound_ok,
                                "brute_force_consistent": brute_ok}
    summary: Dict[str, Any] = {"space": space.name, "convexity margin": convexity.margin,
                               "lower bound holds": lower_bound_ok}
    passed = lower_bound_ok and brute_ok

    if config.rigidity:
        rigidity = rigidity_detect(space, config.K, config.N)
        document["rigidity"] = rigidity.to_dict()
        summary["matches model"] = rigidity.matches_model
        summary.update({k: v for k, v in rigidity.fitted().items()})

    if config.reduce_set:
        app = get_config()
        start = IntervalUnion.of(*config.reduce_set)
        trajectory = [r.to_dict() for r in reduce_to_halfline(
            space, start, max_steps=app.max_shift_steps, step_fraction=app.shift_step_fraction)]
        checks = _trajectory_checks(trajectory)
        document["trajectory"] = trajectory
        document["trajectory_checks"] = checks
        summary["shift steps"] = checks["steps"]
        passed = passed and checks["measure_preserving"] and checks["boundary_non_increasing"]

    return Report(rows=rows, columns=NEEDLE_COLUMNS, document=document, passed=passed,
                  summary=summary)


# ==================== spectral ====================

def cmd_spectral(config: RunConfig) -> Report:
    """加权 Laplacian 第一非零特征值的网格加密表"""
    tol = config.tolerance()
    tail_tol = get_config().spectral_tail_tol
    spec = SpaceSpec(config, tol)
    space = spec.space
    if not (space.domain.lo_infinite and space.domain.hi_infinite):
        raise ParameterError(f"spectral needs a density on the whole line, {space.name} is not",
                             recovery_hint="使用 gaussian / cosh / poly 密度")

    n_max = max(config.n_values)
    L = config.L
    if L is None:
        # 截断按特征函数 (未知时用 x) 的加权二阶矩尾部选取
        trial = spec.eigenfunction or (lambda t: t)
        L = Grid1D.for_space(space, n_max, tail_tol, weight=lambda t: trial(t) ** 2).L
    table = convergence_table(space, config.n_values, L, spec.exact_lambda, tail_tol)
    finest = first_nonzero_eigenvalue(space, Grid1D(L, n_max), tail_tol)

    document: Dict[str, Any] = {**config.describe(), "space": space.name, "L": L,
                                "exact": spec.exact_lambda, "table": table,
                                "result": finest.to_dict()}
    summary: Dict[str, Any] = {"space": space.name, "L": L, "lambda1": finest.lambda1}
    if spec.exact_lambda is not None:
        summary["exact"] = spec.exact_lambda
        summary["error"] = abs(finest.lambda1 - spec.exact_lambda)
    if spec.eigenfunction is not None:
        document["eigenfunction_distance"] = eigenfunction_compare(finest, spec.eigenfunction)
        document["model_rayleigh_quotient"] = rayleigh_quotient(space, spec.eigenfunction,
                                                                spec.eigen_derivative, tol)
        summary["eigenfunction distance"] = document["eigenfunction_distance"]
    orders = [row["order"] for row in table if row["order"] is not None]
    if orders:
        summary["last order"] = orders[-1]

    return Report(rows=table, columns=SPECTRAL_COLUMNS, document=document, summary=summary)


# ==================== warped ====================

def cmd_warped(config: RunConfig) -> Report:
    """翘曲积模型中半空间与混合集合的边界比较"""
    app = get_config()
    tol = config.tolerance()
    space = WarpedProduct(config.params, fiber_circumference=app.fiber_circumference, tol=tol)
    mesh = None
    if config.grid:
        mesh = GridMesh(space, config.n_t or app.mesh_n_t, config.n_fiber or app.mesh_n_fiber)

    rows = []
    entries = []
    passed = True
    for theta in config.thetas:
        r = space.level_for_mass(theta)
        I = halfspace_boundary(space, r)
        half_grid = grid_eps_boundary(space, mesh, HalfSpace(r), config.eps) if mesh else None
        rows.append({"theta": theta, "set": "halfspace", "boundary": I, "lower_bound": I,
                     "strict_excess": 0.0, "grid_boundary": half_grid})

        sets = [Mixed.at_common_mass(space, Arc(config.q1_start, config.q1), theta)]
        sets.extend(mixed_configurations(space, theta, config.sweep) if config.sweep else [])
        for mixed in sets:
            top = min(mixed.r, mixed.r_bar)
            b = config.b if config.b is not None else top - 1.0 / config.params.sqrt_sigma
            excess = mixed_excess(space, mixed, b)
            grid_value = grid_eps_boundary(space, mesh, mixed, config.eps) if mesh else None
            exceeds = excess.strict_excess > 0 and (grid_value is None or grid_value > half_grid)
            passed = passed and exceeds
            label = f"mixed[{mixed.q1.start:.6g},{mixed.q1.fraction:.6g}]"
            rows.append({"theta": theta, "set": label, "boundary": excess.exact_boundary,
                         "lower_bound": excess.lower_bound, "strict_excess": excess.strict_excess,
                         "grid_boundary": grid_value})
            entries.append({"theta": theta, "q1_start": mixed.q1.start,
                            "q1_fraction": mixed.q1.fraction, "r": mixed.r, "r_bar": mixed.r_bar,
                            "excess": excess.to_dict(), "grid_boundary": grid_value,
                            "halfspace_grid_boundary": half_grid, "exceeds_halfspace": exceeds})

    document: Dict[str, Any] = {**config.describe(), "eps": config.eps,
                                "mesh": ({"n_t": mesh.n_t, "n_fiber": mesh.n_fiber, "h_t": mesh.h_t,
                                          "L_t": mesh.L_t} if mesh else None),
                                "rows": rows, "mixed": entries}
    summary = {"params": str(config.params), "mixed sets": len(entries),
               "min strict excess": min(e["excess"]["strict_excess"] for e in entries),
               "all exceed half-space": passed}
    return Report(rows=rows, columns=WARPED_COLUMNS, document=document, passed=passed,
                  summary=summary)


# ==================== derivative-check ====================

def _profile_and_slope(params: ModelParams, tol: ToleranceConfig
                       ) -> Tuple[Callable[[float], float], Callable[[float], float]]:
    if params.is_gaussian:
        return (lambda t: profile_gauss_inf(params.K, t, tol),
                lambda t: profile_gauss_inf_derivative(params.K, t, tol))
    return (lambda t: profile_neg_inf(params, t, tol),
            lambda t: profile_neg_inf_derivative(params, t, tol))


def cmd_derivative_check(config: RunConfig) -> Report:
    """有限差分斜率对照解析导数 −K·a(θ) / (N−1)√σ·tanh(√σc(θ))"""
    params = config.params
    if params.is_bounded:
        raise ParameterError("derivative-check covers the unbounded-diameter profiles, use --D inf")
    tol = config.tolerance()
    profile, slope = _profile_and_slope(params, tol)

    rows = []
    for theta in config.thetas:
        numeric = central_difference(profile, theta, DERIVATIVE_STEP)
        analytic = slope(theta)
        error = abs(numeric - analytic)
        rows.append({"theta": theta, "numeric": numeric, "analytic": analytic,
                     "abs_error": error, "passed": error <= config.fd_tol})

    passed = all(row["passed"] for row in rows)
    document = {**config.describe(), "tolerance": config.fd_tol, "rows": rows,
                "violations": [row for row in rows if not row["passed"]]}
    summary = {"params": str(params), "max error": max(row["abs_error"] for row in rows),
               "tolerance": config.fd_tol}
    return Report(rows=rows, columns=DERIVATIVE_COLUMNS, document=document, passed=passed,
                  summary=summary)


# ==================== 调度 ====================

COMMANDS: Dict[Command, Callable[[RunConfig], Report]] = {
    Command.PROFILE: cmd_profile,
    Command.VERIFY_APPENDIX: cmd_verify_appendix,
    Command.NEEDLE: cmd_needle,
    Command.SPECTRAL: cmd_spectral,
    Command.WARPED: cmd_warped,
    Command.DERIVATIVE_CHECK: cmd_derivative_check,
}


def print_summary(config: RunConfig, report: Report, console: Optional[Console] = None) -> None:
    """控制台摘要 (写到标准错误, 不混入数据流)"""
    console = console or Console(stderr=True)
    table = Table(title=f"isoprofile {config.command.value}", show_header=False)
    table.add_column("item", style="cyan")
    table.add_column("value")
    for key, value in report.summary.items():
        text = f"{value:.10g}" if isinstance(value, float) else str(value)
        table.add_row(key, text)
    status = "[green]PASSED[/green]" if report.passed else "[red]FAILED[/red]"
    table.add_row("status", status)
    console.print(table)


def run_command(config: RunConfig, quiet: bool = False) -> Report:
    """
    执行子命令并写出报告

    Raises:
        CertificationError: 报告已写出, 但有证书不成立 (携带违例)
    """
    logger.info(f"[Commands] Running {config.command.value} with {config.params}")
    report = COMMANDS[config.command](config)
    write_report(report, config.output_format, config.output_path, get_config().output_dir)
    if not quiet:
        print_summary(config, report)
    if not report.passed:
        violations = report.document.get("violations") or [report.document.get("trajectory_checks")
                                                            or report.summary]
        raise CertificationError(f"{config.command.value}: certification failed",
                                 violations=violations,
                                 details="; ".join(str(v) for v in violations[:5]))
    return report
