"""Experiment orchestration behind the CLI subcommands."""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..certificate import (
    Bounds,
    Certificate,
    ComparisonReport,
    Feasibility,
    check_comparison,
    compute_constants,
    delta_feasibility,
    initial_mass,
    y_functional,
)
from ..material import BinOp, LawExpr, MaterialSet, Num, parse_law, validate_material
from ..solver import STEP_FAILURE, Trajectory, Verdict, run
from .config import ConfigError, SimConfig, SweepSpec

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = (
    "t", "int_ux2", "int_ux4", "int_vx2", "int_vx4", "int_thx2",
    "linf_theta", "theta_min", "mass", "w12_vminusau", "y_value_log",
)
SWEEP_COLUMNS = (
    "delta", "rep", "lip_gamma", "lip_f", "delta_star_log", "feasible",
    "verdict", "t_end", "max_y_log", "margin_log", "detail",
)
MASS_SLACK = 1e-9


def certificate_for(cfg: SimConfig, m: MaterialSet | None = None):
    """Certificate for the configured bounds; returns (cert, M, measured mass)."""
    m = cfg.material if m is None else m
    measured = initial_mass(cfg.initial_data(), cfg.grid, cfg.params)
    if cfg.M is None:
        M = measured
    else:
        if cfg.M < measured * (1 - MASS_SLACK):
            raise ConfigError(f"declared M = {cfg.M:g} is below the initial data's mass {measured:.6g}")
        M = cfg.M
    bounds = Bounds.from_material(m, cfg.omega_len, M, cfg.T_star)
    return compute_constants(cfg.params, bounds), M, measured


@dataclass
class RunResult:
    trajectory: Trajectory
    verdict: Verdict
    cert: Certificate
    comparison: ComparisonReport
    feasibility: Feasibility

    def verdict_line(self) -> str:
        return (
            f"verdict={self.verdict.kind} t_end={self.verdict.t_end:.10g} "
            f"margin_log={self.comparison.margin_log:.6g} "
            f"comparison={'pass' if self.comparison.passed else 'fail'}"
        )


def run_config(cfg: SimConfig, m: MaterialSet | None = None) -> RunResult:
    m = cfg.material if m is None else m
    cert, _, _ = certificate_for(cfg, m)
    p = cfg.params
    traj, verdict = run(cfg, m, y_monitor=lambda pack: y_functional(pack, cert, p))
    return RunResult(traj, verdict, cert, check_comparison(traj, cert), delta_feasibility(m, cert))


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def trajectory_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for s in result.trajectory.samples:
        pk = s.pack
        w.writerow([
            _num(s.t), _num(pk.int_ux2), _num(pk.int_ux4), _num(pk.int_vx2), _num(pk.int_vx4),
            _num(pk.int_thx2), _num(pk.linf_theta), _num(pk.theta_min), _num(s.mass), _num(s.w12),
            _num(s.y_log),
        ])
    v, c = result.verdict, result.comparison
    summary = [
        "summary",
        f"verdict={v.kind}",
        f"t_end={v.t_end!r}",
        f"reason={v.reason}",
        f"margin_log={c.margin_log!r}",
        f"comparison={'pass' if c.passed else 'fail'}",
        f"yhat0_ge_chiM1={'true' if c.yhat0_ok else 'false'}",
        f"y0_le_chiM1={'true' if c.y0_within_chiM1 else 'false'}",
        f"feasible={'true' if result.feasibility.feasible else 'false'}",
    ]
    summary += [""] * (len(TRAJECTORY_COLUMNS) - len(summary))
    w.writerow(summary)
    return buf.getvalue()


# ------------------------------------------------------------ sweep


def sweep_material(cfg: SimConfig, spec: SweepSpec, delta: float) -> MaterialSet:
    """gamma = gamma0 + d_g*shape_g, f = d_f*shape_f; other laws and bounds from cfg."""
    base = cfg.material
    dg, df = spec.gamma_scale * delta, spec.f_scale * delta
    f_shape = spec.f_shape or parse_law(f"s/(1+s)^{1 - base.alpha!r}")
    gamma = LawExpr(BinOp("+", Num(spec.gamma0), BinOp("*", Num(dg), spec.gamma_shape.ast)))
    f = LawExpr(BinOp("*", Num(df), f_shape.ast))
    return MaterialSet(
        gamma=gamma,
        Gamma=base.Gamma,
        f=f,
        F=base.F,
        gamma_lo=base.gamma_lo,
        gamma_hi=base.gamma_hi,
        C_F=base.C_F,
        alpha=base.alpha,
        lip_gamma=dg * spec.gamma_shape_lip,
        lip_f=df * spec.f_shape_lip,
    )


def sweep_row(cfg: SimConfig, spec: SweepSpec, delta: float, rep: int, cert: Certificate) -> list:
    row = {"delta": delta, "rep": rep, "delta_star_log": cert.log_delta_star, "detail": ""}
    try:
        m = sweep_material(cfg, spec, delta)
    except ValueError as exc:
        row.update(verdict="invalid_material", detail=str(exc))
        return _sweep_values(row)
    feas = delta_feasibility(m, cert)
    row.update(lip_gamma=m.lip_gamma, lip_f=m.lip_f, feasible="true" if feas.feasible else "false")
    report = validate_material(m, cfg.validate_s_max, cfg.validate_samples)
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed and not c.advisory]
        row.update(verdict="invalid_material", detail="failed " + " ".join(failed))
        return _sweep_values(row)
    try:
        p = cfg.params
        traj, verdict = run(cfg, m, y_monitor=lambda pack: y_functional(pack, cert, p))
        comp = check_comparison(traj, cert)
    except Exception as exc:  # a row failure must not stop the sweep
        row.update(verdict="error", detail=f"{type(exc).__name__}: {exc}")
        return _sweep_values(row)
    ylog = [s.y_log for s in traj.samples if s.y_log is not None]
    row.update(
        verdict=verdict.kind,
        t_end=verdict.t_end,
        max_y_log=max(ylog) if ylog else None,
        margin_log=comp.margin_log,
        detail=verdict.detail,
    )
    return _sweep_values(row)


def _sweep_values(row):
    out = []
    for key in SWEEP_COLUMNS:
        v = row.get(key)
        if v is None:
            out.append("")
        elif isinstance(v, float):
            out.append(repr(v))
        else:
            out.append(str(v))
    return out


def _sweep_task(args):
    return sweep_row(*args)


def run_sweep(cfg: SimConfig, spec: SweepSpec, jobs: int = 1) -> str:
    if not spec.deltas:
        raise ConfigError("sweep needs at least one delta")
    cert, _, _ = certificate_for(cfg)
    tasks = [(cfg, spec, d, r, cert) for d in spec.deltas for r in range(spec.repetitions)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def deltas_from_arg(arg: str):
    """Comma/whitespace separated list, or a path to a file holding one."""
    from pathlib import Path

    from .config import parse_reals

    path = Path(arg)
    text = path.read_text(encoding="utf-8") if path.is_file() else arg
    lines = [ln.split("#", 1)[0] for ln in text.splitlines()]
    try:
        return parse_reals(" ".join(lines))
    except ValueError as exc:
        raise ConfigError(f"--deltas: {exc}") from exc


def exit_code_for(verdict: Verdict) -> int:
    # blow-up is an observation, not a tool failure
    return 3 if verdict.kind == STEP_FAILURE else 0


def certify_text(cfg: SimConfig) -> tuple:
    cert, M, measured = certificate_for(cfg)
    feas = delta_feasibility(cfg.material, cert)
    lines = [
        cert.to_text(),
        f"initial_mass      {measured:.15g}",
        f"M                 {M:.15g}",
        f"feasible          {'true' if feas.feasible else 'false'} ({feas.detail})",
    ]
    if not math.isfinite(cert.log_delta_star):
        lines.append("warning: ln delta_star is not finite")
    return "\n".join(lines), cert, feas
