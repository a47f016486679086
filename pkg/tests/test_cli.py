"""
命令行测试: θ 网格解析、运行配置、报告格式与各子命令的端到端运行
"""

import json
import math

import pandas as pd
import pytest

import main as cli_main
from backend.config_manager import get_config
from backend.error_handler import DomainError, ExitCode, ParameterError, RootFindingError, get_error_handler
from cli.report_writer import Report, render_csv, render_json, write_report
from cli.run_config import Command, OutputFormat, RunConfig, parse_intervals, parse_theta_grid

INV_M_1_MINUS2 = 0.3675525969
GAUSS_D2_HALF = 0.5845
COSH_LAMBDA = 2.0 / 3.0
QUIET = ["--log-file", "", "--quiet"]


@pytest.fixture(autouse=True)
def no_signal_handlers(monkeypatch):
    """测试进程内不改写信号处理"""
    monkeypatch.setattr(cli_main, "setup_signal_handlers", lambda: None)


def run(*argv):
    return cli_main.main([*argv, *QUIET])


# ==================== θ 网格 ====================

def test_parse_theta_range():
    values = parse_theta_grid("0.05:0.95:0.05")
    assert len(values) == 19
    assert values[0] == 0.05
    assert values[-1] == 0.95
    assert values[9] == 0.5


def test_parse_theta_list():
    assert parse_theta_grid(" 0.1, 0.5,0.9 ") == [0.1, 0.5, 0.9]


@pytest.mark.parametrize("text", ["", "0:0.5:0.1", "0.1:0.9", "0.5,0.2", "0.1:0.9:-0.1",
                                  "0.5,abc", "0.2,1.0", "0.3,0.3"])
def test_parse_theta_rejects(text):
    with pytest.raises(DomainError):
        parse_theta_grid(text)


def test_parse_intervals():
    assert parse_intervals("-inf:-1, 1:2") == [(-math.inf, -1.0), (1.0, 2.0)]
    with pytest.raises(ParameterError):
        parse_intervals("1:2:3")


# ==================== 运行配置 ====================

def test_run_config_build_rejects():
    with pytest.raises(ParameterError):
        RunConfig.build(command=Command.PROFILE, K=-1.0)
    with pytest.raises(ParameterError):
        RunConfig.build(command=Command.PROFILE, N=0.5)
    with pytest.raises(ParameterError):
        RunConfig.build(command=Command.VERIFY_APPENDIX, N_grid=[2.0])
    with pytest.raises(ParameterError):
        RunConfig.build(command=Command.NEEDLE, density="table")
    with pytest.raises(ParameterError):
        RunConfig.build(command=Command.SPECTRAL, n_values=[8])


def test_run_config_output_format():
    assert RunConfig.build(command=Command.PROFILE).output_format == OutputFormat.CSV
    assert RunConfig.build(command=Command.WARPED).output_format == OutputFormat.JSON
    assert RunConfig.build(command=Command.PROFILE,
                           output_path="a.json").output_format == OutputFormat.JSON
    assert RunConfig.build(command=Command.WARPED,
                           output_path="a.csv").output_format == OutputFormat.CSV
    assert RunConfig.build(command=Command.WARPED, output_path="a.csv",
                           format="json").output_format == OutputFormat.JSON


def test_run_config_tolerance_override():
    config = RunConfig.build(command=Command.PROFILE, N="-2", abs_tol=1e-9)
    tol = config.tolerance()
    assert tol.abs_tol == 1e-9
    assert tol.rel_tol == 1e-10
    assert config.params.N == -2.0
    assert config.describe() == {"command": "profile", "K": 1.0, "N": -2.0, "D": "inf"}


# ==================== 报告格式 ====================

def test_csv_uses_round_trip_precision():
    report = Report(rows=[{"theta": 0.1, "value": 1.0}], columns=["theta", "value"], document={})
    text = render_csv(report)
    assert text == "theta,value\n0.10000000000000001,1\n"


def test_json_is_sorted_and_handles_infinity():
    report = Report(rows=[], columns=[], document={"b": math.inf, "a": [1.5, -math.inf]})
    document = json.loads(render_json(report))
    assert document == {"a": [1.5, "-inf"], "b": "inf"}
    assert render_json(report).index('"a"') < render_json(report).index('"b"')


def test_csv_needs_columns(tmp_path):
    report = Report(rows=[], columns=[], document={"x": 1})
    with pytest.raises(ParameterError):
        write_report(report, OutputFormat.CSV, str(tmp_path / "x.csv"))
    path = write_report(report, OutputFormat.JSON, str(tmp_path / "x.json"))
    assert json.loads(open(path, encoding="utf-8").read()) == {"x": 1}


# ==================== profile ====================

def test_profile_command_is_symmetric_and_reproducible(output_dir):
    first, second = output_dir / "a.csv", output_dir / "b.csv"
    args = ["profile", "--K", "1", "--N", "-2", "--thetas", "0.1:0.9:0.1"]
    assert run(*args, "-o", str(first)) == ExitCode.OK
    assert run(*args, "-o", str(second)) == ExitCode.OK
    assert first.read_bytes() == second.read_bytes()
    assert b"\r\n" not in first.read_bytes()

    frame = pd.read_csv(first)
    assert list(frame.columns) == ["theta", "value", "branch", "xi_star", "H_theta"]
    assert len(frame) == 9
    values = frame["value"].to_numpy()
    assert values == pytest.approx(values[::-1], abs=1e-9)
    assert frame["value"][4] == pytest.approx(INV_M_1_MINUS2, abs=1e-8)


def test_profile_gaussian_bounded_diameter(output_dir):
    target = output_dir / "gauss.json"
    assert run("profile", "--K", "1", "--D", "2", "--thetas", "0.5", "-o", str(target)) == ExitCode.OK
    document = json.loads(target.read_text(encoding="utf-8"))
    assert document["D"] == 2.0
    assert document["rows"][0]["value"] == pytest.approx(GAUSS_D2_HALF, abs=1e-3)


def test_profile_invalid_parameters():
    assert run("profile", "--K", "-1") == ExitCode.INVALID_INPUT
    assert run("profile", "--N", "0.5") == ExitCode.INVALID_INPUT
    assert run("profile", "--thetas", "0.5,1.5") == ExitCode.INVALID_INPUT


# ==================== derivative-check ====================

def test_derivative_check_passes(output_dir):
    target = output_dir / "deriv.csv"
    assert run("derivative-check", "--K", "1", "--N", "-2", "-o", str(target)) == ExitCode.OK
    frame = pd.read_csv(target)
    assert list(frame["theta"]) == [0.2, 0.5, 0.8]
    assert frame["passed"].all()


def test_derivative_check_gaussian_passes(output_dir):
    target = output_dir / "deriv.json"
    assert run("derivative-check", "--K", "2", "-o", str(target)) == ExitCode.OK
    assert json.loads(target.read_text(encoding="utf-8"))["violations"] == []


def test_derivative_check_tight_tolerance_fails(output_dir):
    target = output_dir / "deriv.json"
    code = run("derivative-check", "--N", "-2", "--thetas", "0.2", "--fd-tol", "1e-16",
               "-o", str(target))
    assert code == ExitCode.CERTIFICATION_FAILED
    # 报告在失败前已写出
    assert len(json.loads(target.read_text(encoding="utf-8"))["violations"]) == 1


def test_derivative_check_rejects_bounded_diameter():
    assert run("derivative-check", "--N", "-2", "--D", "1") == ExitCode.INVALID_INPUT


def test_log_level_option_updates_config(output_dir):
    target = output_dir / "deriv.json"
    code = run("derivative-check", "--K", "2", "--log-level", "WARNING", "-o", str(target))
    assert code == ExitCode.OK
    assert get_config().log_level == "WARNING"
    assert get_config().log_file == ""


# ==================== verify-appendix ====================

def test_verify_appendix_single_cell(output_dir):
    target = output_dir / "appendix.json"
    code = run("verify-appendix", "--N", "-2", "--D", "1", "--thetas", "0.99", "-o", str(target))
    assert code == ExitCode.OK
    document = json.loads(target.read_text(encoding="utf-8"))
    assert document["violations"] == []
    assert document["min_gap"] > 0.0
    assert len(document["cells"]) == 1
    assert document["limits"][0]["K3_at_one"] == pytest.approx(0.3723, abs=1e-4)


def test_verify_appendix_gaussian(output_dir):
    target = output_dir / "gauss.csv"
    code = run("verify-appendix", "--gaussian", "--D", "2", "--thetas", "0.5", "-o", str(target))
    assert code == ExitCode.OK
    frame = pd.read_csv(target)
    assert len(frame) == 1
    assert frame["gap"][0] >= frame["gap_lower_bound"][0] > 0.0


def test_verify_appendix_rejects_positive_N():
    assert run("verify-appendix", "--N", "2", "--D", "1") == ExitCode.INVALID_INPUT
    assert run("verify-appendix", "--N", "-2", "--D", "inf") == ExitCode.INVALID_INPUT


def test_verify_appendix_numeric_failure_is_mapped(monkeypatch):
    def failing_cell(params, D, theta, tol, settings):
        raise RootFindingError("no sign change on bracket", last_bracket=(0.0, 1.0))

    monkeypatch.setattr("cli.commands.certify_cell", failing_cell)
    handler = get_error_handler()
    before = handler.get_error_statistics().get("RootFindingError", 0)
    code = run("verify-appendix", "--N", "-2", "--D", "1", "--thetas", "0.5")
    assert code == ExitCode.NUMERIC_FAILURE
    # 单元格上下文记录一次, 外层只做退出码映射
    assert handler.get_error_statistics()["RootFindingError"] == before + 1


# ==================== needle ====================

def test_needle_rigidity_on_model(output_dir):
    target = output_dir / "needle.json"
    code = run("needle", "--K", "1", "--N", "-2", "--density", "cosh", "--rigidity",
               "--thetas", "0.5", "-o", str(target))
    assert code == ExitCode.OK
    document = json.loads(target.read_text(encoding="utf-8"))
    assert document["convexity"]["passed"]
    assert document["lower_bound_holds"]
    rigidity = document["rigidity"]
    assert rigidity["matches_model"]
    assert rigidity["fitted"]["k"] == pytest.approx(1.0, rel=1e-9)
    assert rigidity["fitted"]["gamma"] == pytest.approx(0.0, abs=1e-9)
    assert document["halfline"][0]["boundary"] == pytest.approx(INV_M_1_MINUS2, abs=1e-8)


def test_needle_reduction_trajectory(output_dir):
    target = output_dir / "reduce.json"
    code = run("needle", "--K", "1", "--density", "gaussian", "--thetas", "0.5",
               "--reduce=-inf:-1,0.5:1", "-o", str(target))
    assert code == ExitCode.OK
    checks = json.loads(target.read_text(encoding="utf-8"))["trajectory_checks"]
    assert checks["measure_preserving"]
    assert checks["boundary_non_increasing"]


def test_needle_exp_needs_finite_diameter():
    assert run("needle", "--N", "-2", "--density", "exp") == ExitCode.INVALID_INPUT


# ==================== spectral ====================

def test_spectral_cosh_model(output_dir):
    target = output_dir / "spectral.json"
    code = run("spectral", "--K", "1", "--N", "-2", "--density", "cosh", "--L", "40",
               "--n", "2001,4001", "-o", str(target))
    assert code == ExitCode.OK
    document = json.loads(target.read_text(encoding="utf-8"))
    assert document["exact"] == pytest.approx(COSH_LAMBDA, rel=1e-14)
    assert document["result"]["lambda1"] == pytest.approx(COSH_LAMBDA, abs=1e-3)
    assert [row["n"] for row in document["table"]] == [2001, 4001]
    assert document["model_rayleigh_quotient"] == pytest.approx(COSH_LAMBDA, abs=1e-8)


def test_spectral_outside_rigidity_regime_has_no_model(output_dir):
    target = output_dir / "spectral.json"
    code = run("spectral", "--K", "1", "--N", "-0.5", "--density", "cosh", "--n", "501",
               "-o", str(target))
    assert code == ExitCode.OK
    document = json.loads(target.read_text(encoding="utf-8"))
    assert document["exact"] is None
    assert "eigenfunction_distance" not in document
    assert document["result"]["lambda1"] > 0.0


def test_spectral_gaussian_csv(output_dir):
    target = output_dir / "spectral.csv"
    code = run("spectral", "--K", "1", "--density", "gaussian", "--L", "8", "--n", "501,1001",
               "-o", str(target))
    assert code == ExitCode.OK
    frame = pd.read_csv(target)
    assert list(frame.columns) == ["n", "h", "lambda1", "error", "order"]
    assert frame["lambda1"].iloc[-1] == pytest.approx(1.0, abs=1e-2)


# ==================== warped ====================

def test_warped_mixed_exceeds_halfspace(output_dir):
    target = output_dir / "warped.json"
    code = run("warped", "--K", "1", "--N", "-2", "--theta", "0.5", "--sweep", "2",
               "-o", str(target))
    assert code == ExitCode.OK
    document = json.loads(target.read_text(encoding="utf-8"))
    assert len(document["mixed"]) == 3
    assert all(entry["exceeds_halfspace"] for entry in document["mixed"])
    assert document["rows"][0]["boundary"] == pytest.approx(INV_M_1_MINUS2, abs=1e-9)


def test_warped_needs_negative_N():
    assert run("warped", "--K", "1") == ExitCode.INVALID_INPUT
