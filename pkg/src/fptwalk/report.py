"""Experiment driver: build instances from a config, run engines, write reports."""

import csv
from dataclasses import dataclass
import io
import json
import math
import os
from pathlib import Path
import shutil
import tempfile

import numpy as np

from . import diagnostics as diag
from .boundaries import UgCurve, is_non_increasing_from
from .config import ConfigError, ExperimentConfig, boundary_from_config, schedule_from_config
from .errors import BudgetExceeded, PreconditionViolated
from .exact import ExactResult, evolve, results_table, submartingale_check
from .increments import feasibility_check
from .montecarlo import SurvivalCurve, survival_curve
from .reference import SQRT_2_OVER_PI

STOPPING_TOL = 1e-10

ROW_FIELDS = ["n", "B", "survival", "survival_se", "ez_star", "ez_star_se", "ez_estimated",
              "r_n", "alpha_star", "lambda_n", "sqrt_lambda_n", "log_ratio", "sqrt_n_survival"]


def report_grid(n_max):
    """{ceil(n_max 2^-j)} together with every n <= 32."""
    pts = set(range(1, min(n_max, 32) + 1))
    j = 0
    while True:
        n = math.ceil(n_max / 2**j)
        pts.add(n)
        if n <= 1:
            break
        j += 1
    return sorted(pts)


@dataclass
class RatioReport:
    rows: list
    estimated: bool

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    def row(self, n):
        for r in self.rows:
            if r["n"] == n:
                return r
        raise KeyError(f"n={n} not in report")

    def ug_curve(self):
        """Knots (B_n^2, E Z*_n) for off-grid interpolation."""
        return UgCurve.from_knots([(r["B"] ** 2, r["ez_star"]) for r in self.rows])


def ratio_report(results, schedule, ns=None, with_lambda=True):
    """Rows of B_n, survival, E Z*_n, r_n = B_n P(T>n)/E Z*_n and alpha*_n = |r_n - sqrt(2/pi)|.

    ``results`` is an :class:`ExactResult` or an MC :class:`SurvivalCurve`.  For
    MC, E Z*_n is the sample mean of (S_n - g_n) 1{T > n}, i.e. survival times
    the conditional mean, and rows are flagged as estimated.
    """
    estimated = isinstance(results, SurvivalCurve)
    if ns is None:
        ns = [int(n) for n in results.ns] if estimated else report_grid(results.n_max)
    rows = []
    for n in ns:
        b = math.sqrt(schedule.cum_var(n))
        if estimated:
            s_est, z_est = results.estimate(n), results.ez_star(n)
            surv, surv_se, ez, ez_se = s_est.mean, s_est.std_error, z_est.mean, z_est.std_error
        else:
            if n > results.n_max:
                raise KeyError(f"n={n} beyond exact horizon {results.n_max}")
            surv, ez = float(results.survival[n - 1]), float(results.ez_star[n - 1])
            surv_se = ez_se = 0.0
        r_n = b * surv / ez if ez > 0 else math.nan
        lam = diag.lambda_n(schedule, n) if with_lambda else math.nan
        log_ratio = math.log(surv) / math.log(b) if surv > 0 and b > 1 else math.nan
        rows.append({"n": n, "B": b, "survival": surv, "survival_se": surv_se, "ez_star": ez,
                     "ez_star_se": ez_se, "ez_estimated": estimated, "r_n": r_n,
                     "alpha_star": abs(r_n - SQRT_2_OVER_PI), "lambda_n": lam,
                     "sqrt_lambda_n": math.sqrt(lam), "log_ratio": log_ratio,
                     "sqrt_n_survival": math.sqrt(n) * surv})
    return RatioReport(rows, estimated)


def _csv_text(rows, fields):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v
                    for k, v in r.items()})
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"


def _horizon(cfg):
    """Steps the schedule must cover: n_max, or longer when a diagnostic asks for it."""
    return max([cfg.n_max] + [int(item.get("N", 0)) for item in cfg.diagnostics])


def build_instance(cfg, horizon=None):
    horizon = horizon or cfg.n_max
    schedule = schedule_from_config(cfg.schedule, horizon)
    if schedule.n_max < horizon:
        raise ConfigError(f"schedule defines {schedule.n_max} steps, {horizon} needed")
    boundary = boundary_from_config(cfg.boundary, schedule)
    if boundary.n_max is not None and boundary.n_max < horizon:
        raise ConfigError(f"boundary table has {boundary.n_max} values, {horizon} needed")
    return schedule, boundary


def _exact_schedule(cfg, schedule):
    if schedule.lattice is not None:
        return schedule
    if cfg.lattice_span is not None:
        return schedule.lattice_approximation(cfg.lattice_span)
    if schedule.family == "truncated_pareto":
        return schedule.lattice_approximation()
    raise ConfigError(f"{schedule.family} schedule has no lattice; set lattice_span for the exact engine")


def _diagnostic(item, schedule, boundary, n_max):
    name = item["name"]
    N = int(item.get("N", n_max))
    if name == "lind_plus":
        return [diag.series_lind_plus(schedule, item.get("eps", 0.5), N).to_dict()]
    if name == "sum_minus":
        return [diag.series_sum_minus(schedule, boundary, N).to_dict()]
    if name == "sum_plus":
        return [diag.series_sum_plus(schedule, boundary, N).to_dict()]
    if name == "lind_plus_gamma":
        return [diag.series_lind_plus_gamma(schedule, item["gamma"], N).to_dict()]
    if name == "h_conditions":
        a, b = item.get("power", 0.5), item.get("log_power", 0.0)
        h = lambda k: np.maximum.accumulate(k**a / np.log(k + 2.0) ** b)  # noqa: E731
        return [v.to_dict() for v in diag.series_h_conditions(schedule, boundary, h, N)]
    if name == "lindeberg":
        n = int(item.get("n", N))
        return [{"name": "lindeberg", "n": n, "eps": item["eps"],
                 "value": diag.lindeberg_fraction(schedule, n, item["eps"])}]
    if name == "truncated_lindeberg":
        n = int(item.get("n", N))
        return [{"name": "truncated_lindeberg", "n": n, "alpha": item["alpha"], "eps": item["eps"],
                 "value": diag.truncated_lindeberg(schedule, n, item["alpha"], item["eps"])}]
    raise ConfigError(f"unknown diagnostic {name!r}")


def _report_lines(tag, rep):
    last = rep.rows[-1]
    lines = [f"{tag}: r_n={last['r_n']:.6g} at n={last['n']} vs sqrt(2/pi)={SQRT_2_OVER_PI:.6g}, "
             f"alpha*={last['alpha_star']:.3g}, sqrt(lambda_n)={last['sqrt_lambda_n']:.3g}"]
    lines.append(f"{tag}: log P(T>n)/log B_n={last['log_ratio']:.4g} at n={last['n']}")
    return lines


def execute(cfg, mode="report"):
    """Run ``cfg``; return ({filename: text}, summary lines).  Nothing touches disk."""
    schedule, boundary = build_instance(cfg)
    n = cfg.n_max
    if not feasibility_check(schedule, boundary, n):
        raise PreconditionViolated(f"survival to n={n} is impossible for this boundary")
    files = {"config.json": cfg.dumps() + "\n"}
    lines = []
    grid = [k for k in (cfg.report_grid or report_grid(n)) if k <= n]
    engines = {"exact": ("exact",), "mc": ("mc",), "diagnose": ()}.get(mode)
    if engines is None:
        engines = ("exact", "mc") if cfg.engine == "both" else (cfg.engine,)

    if "exact" in engines:
        ex_sched = _exact_schedule(cfg, schedule)
        res = evolve(ex_sched, boundary, n, keep_laws=False, max_states=cfg.max_states)
        table = results_table(res, boundary)
        files["exact.csv"] = _csv_text(table, list(table[0]))
        worst = max(r["stopping_residual"] for r in table)
        lines.append(f"exact: optional-stopping residual max={worst:.3g} [{'ok' if worst < STOPPING_TOL else 'FAIL'}]")
        cons = float(np.max(np.abs(res.survival + res.absorbed_mass + res.lost_mass - 1.0)))
        lines.append(f"exact: conservation error max={cons:.3g}")
        start = boundary.monotone_from
        if start is not None and start <= n and is_non_increasing_from(boundary, start, n):
            ok = submartingale_check(res, boundary, start)
            lines.append(f"exact: E Z*_n non-decreasing from n={start} [{'ok' if ok else 'FAIL'}]")
        rep = ratio_report(res, ex_sched, grid)
        files["report_exact.csv"] = _csv_text(rep.rows, ROW_FIELDS)
        lines += _report_lines("exact", rep)

    if "mc" in engines:
        mcfg = cfg.mc_config()
        curve = survival_curve(schedule, boundary, grid, mcfg)
        rep = ratio_report(curve, schedule, grid)
        files["report_mc.csv"] = _csv_text(rep.rows, ROW_FIELDS)
        files["estimates.json"] = _json_text(
            {"seed": mcfg.seed, "replications": mcfg.replications,
             "survival": {str(k): curve.estimate(k).to_dict() for k in grid},
             "ez_star": {str(k): curve.ez_star(k).to_dict() for k in grid}})
        est = curve.estimate(n)
        lines.append(f"mc: P(T>{n})={est.mean:.6g} +/- {est.std_error:.2g} "
                     f"({est.survivors} of {est.replications} paths)")
        lines += _report_lines("mc", rep)

    if mode in ("diagnose", "report") and cfg.diagnostics:
        if _horizon(cfg) > n:
            schedule, boundary = build_instance(cfg, _horizon(cfg))
        verdicts = []
        for item in cfg.diagnostics:
            verdicts += _diagnostic(item, schedule, boundary, n)
        files["verdicts.json"] = _json_text(verdicts)
        for v in verdicts:
            if "classification" in v:
                lines.append(f"diagnose: {v['name']} {v['classification']} "
                             f"(decade exponent {v['decade_exponent']:.3g})")
            else:
                lines.append(f"diagnose: {v['name']}={v['value']:.6g}")
    files["summary.txt"] = "\n".join(lines) + "\n"
    return files, lines


def write_atomic(out, files):
    """Write all files into a temp directory next to ``out`` and rename it into place."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        for name, text in files.items():
            (tmp / name).write_text(text)
        old = None
        if out.exists():
            old = out.with_name(f".{out.name}-old-{os.getpid()}")
            os.replace(out, old)
        os.replace(tmp, out)
        if old is not None:
            shutil.rmtree(old)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out


def run(cfg, mode="report", out=None, echo=print):
    """Execute ``cfg`` and write its artifacts; errors carry the instance in their message."""
    if not isinstance(cfg, ExperimentConfig):
        cfg = ExperimentConfig.from_dict(cfg)
    try:
        files, lines = execute(cfg, mode)
    except BudgetExceeded as exc:
        exc.args = (f"{_context(cfg)}, n reached {exc.n_reached}: {exc.args[0]}",) + exc.args[1:]
        raise
    except (ValueError, RuntimeError) as exc:
        if exc.args:
            exc.args = (f"{_context(cfg)}: {exc.args[0]}",) + exc.args[1:]
        raise
    path = write_atomic(out or cfg.output, files)
    if echo is not None:
        for line in lines:
            echo(line)
    return path


def _context(cfg):
    return f"[{cfg.schedule['family']} / {cfg.boundary['family']}, n_max={cfg.n_max}]"


# names used by the original interface description
Theorem2Report = RatioReport
theorem2_report = ratio_report

__all__ = ["RatioReport", "ratio_report", "Theorem2Report", "theorem2_report", "report_grid", "execute", "run", "write_atomic",
           "build_instance", "ExactResult"]
