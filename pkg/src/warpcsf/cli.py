"""Command line surface: run scenarios, grade warps, sweep, compare.

Subcommands
-----------
run <cfg>         integrate one scenario, write artifacts, grade checks
check-warp <cfg>  evaluate the warp conditions and print/write the report
sweep <cfg> --axis section.key --values v1,v2,...   one run per value
compare <cfg>     per-sample sandwich table against the two baseline circles

Exit codes: 0 all requested checks passed and no terminal error event,
1 a check failed or the flow hit a terminal event, 2 unusable input
(config errors, unknown names, violated preconditions).

Output directory resolution: --out flag, else [outputs] directory from the
config, else runs/<config stem>; relative paths are rooted at $WARPCSF_OUT
when that variable is set.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import flow as _flow
from . import reporting
from .config import config_hash, parse_config, serialize
from .diagnostics import DiagnosticsRecord
from .errors import WarpcsfError
from .warp import check_conditions

_ENV_OUT = "WARPCSF_OUT"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: Optional[float]
    detail: str

    def to_json_dict(self):
        worst = self.worst
        if worst is not None and not math.isfinite(worst):
            worst = None
        return {"passed": self.passed, "worst": worst, "detail": self.detail}


@dataclass
class RunSummary:
    """Everything a caller needs to grade one run.

    ``wall_time_s`` is printed to the console but kept out of summary.json
    so repeated runs of one scenario stay byte-identical.
    """

    terminal_event: _flow.FlowEvent
    graph_time: Optional[float]
    condition_report: object
    checks: tuple
    final_record: Optional[DiagnosticsRecord]
    initial_length: float
    samples: int
    config_digest: str
    wall_time_s: float

    @property
    def passed(self):
        return self.terminal_event.kind == "finished" and all(
            c.passed for c in self.checks
        )

    def to_json_dict(self):
        return {
            "terminalEvent": self.terminal_event.to_json_dict(),
            "graphTime": self.graph_time,
            "conditionReport": self.condition_report.to_json_dict(),
            "checks": {c.name: c.to_json_dict() for c in self.checks},
            "finalRecord": (
                self.final_record.to_json_dict() if self.final_record else None
            ),
            "initialLength": self.initial_length,
            "samples": self.samples,
            "configSha256": self.config_digest,
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# check grading

def _finite(vals):
    return [v for v in vals if v is not None and math.isfinite(v)]


def _chk_graph_time(traj, spec, cfg):
    within = float(spec.get("within", cfg.solver.t_end))
    t0 = traj.graph_time
    if t0 is None:
        return CheckResult("graph_time", False, None, "never became a graph")
    return CheckResult(
        "graph_time", t0 <= within, t0, f"graph from t = {t0:g} (limit {within:g})"
    )


def _chk_graph_preserved(traj, spec, cfg):
    if not traj.records:
        return CheckResult("graph_preserved", False, None, "no samples")
    worst = min(r.min_theta for r in traj.records)
    return CheckResult(
        "graph_preserved", worst > 0.0, worst, f"min Theta over run = {worst:.6g}"
    )


def _chk_v_monotone(traj, spec, cfg):
    slack = float(spec.get("slack", 1e-3))
    if not traj.records:
        return CheckResult("v_monotone", False, None, "no samples")
    if any(r.min_theta <= 0.0 for r in traj.records):
        return CheckResult("v_monotone", False, None, "curve left the graph regime")
    vs = [r.max_v for r in traj.records]
    rise = max(
        (vs[i + 1] - vs[i] for i in range(len(vs) - 1)), default=0.0
    )
    return CheckResult(
        "v_monotone",
        rise <= slack,
        rise,
        f"largest per-sample increase of max v = {rise:.3g} (slack {slack:g})",
    )


def _chk_lemma32(traj, spec, cfg):
    tol = float(spec.get("tol", 1e-8))
    slacks = _finite([r.lemma32_slack for r in traj.records])
    if not slacks:
        return CheckResult(
            "lemma32", True, None, "hypothesis never met on any sample (skipped)"
        )
    worst = min(slacks)
    return CheckResult(
        "lemma32",
        worst >= -tol,
        worst,
        f"min slack {worst:.3g} over {len(slacks)} checked samples",
    )


def _chk_comparison(traj, spec, cfg):
    oks = [r.comparison_ok for r in traj.records]
    if not oks:
        return CheckResult("comparison", False, None, "no samples")
    if any(o is None for o in oks):
        return CheckResult("comparison", False, None, "bounds were not evaluated")
    good = sum(1 for o in oks if o)
    frac = good / len(oks)
    return CheckResult(
        "comparison", good == len(oks), frac, f"{good}/{len(oks)} samples ordered"
    )


def _residual_check(name, field_name):
    def chk(traj, spec, cfg):
        limit = float(spec.get("max_resid", 1e-2))
        vals = _finite([getattr(r, field_name) for r in traj.records])
        if not vals:
            return CheckResult(name, False, None, "residual never evaluated")
        worst = max(vals)
        return CheckResult(
            name,
            worst <= limit,
            worst,
            f"max residual {worst:.3g} over {len(vals)} samples (limit {limit:g})",
        )

    return chk


def _chk_z_drop(traj, spec, cfg):
    drop = float(spec.get("drop", 1.0))
    if len(traj.records) < 2:
        return CheckResult("z_drop", False, None, "need at least two samples")
    actual = traj.records[0].z_max - traj.records[-1].z_max
    return CheckResult(
        "z_drop",
        actual >= drop,
        actual,
        f"z_max dropped by {actual:.4g} (required {drop:g})",
    )


def _chk_psi_decrease(traj, spec, cfg):
    factor = float(spec.get("factor", 0.5))
    t0 = traj.graph_time
    if t0 is None:
        return CheckResult("psi_decrease", False, None, "never became a graph")
    ref = traj.record_at_or_after(t0)
    last = traj.records[-1]
    if ref.psi <= 0.0:
        ok = last.psi <= 0.0
        return CheckResult("psi_decrease", ok, 0.0, "psi identically zero")
    ratio = last.psi / ref.psi
    return CheckResult(
        "psi_decrease",
        last.psi <= factor * ref.psi,
        ratio,
        f"psi(end)/psi(T0) = {ratio:.4g} (required <= {factor:g})",
    )


def _chk_kappa_trend(traj, spec, cfg):
    raw = spec.get("orders", "0,1,2")
    if isinstance(raw, int):
        orders = [raw]
    else:
        orders = [int(s) for s in str(raw).split(",") if s.strip()]
    t0 = traj.graph_time
    if t0 is None:
        return CheckResult("kappa_trend", False, None, "never became a graph")
    ts = [r.t for r in traj.records]
    i0 = next(i for i, t in enumerate(ts) if t >= t0 - 1e-12)
    ratios = []
    ok = True
    for m in orders:
        start = float(traj.trends[m][i0])
        end = float(traj.trends[m][-1])
        if start == 0.0:
            ok = ok and end == 0.0
            ratios.append(0.0)
        else:
            ratios.append(end / start)
            ok = ok and end < start
    worst = max(ratios) if ratios else None
    text = ", ".join(f"m={m}: {r:.3g}" for m, r in zip(orders, ratios))
    return CheckResult("kappa_trend", ok, worst, f"end/T0 ratios {text}")


_CHECK_FUNCS = {
    "graph_time": _chk_graph_time,
    "graph_preserved": _chk_graph_preserved,
    "v_monotone": _chk_v_monotone,
    "lemma32": _chk_lemma32,
    "comparison": _chk_comparison,
    "length_decay": _residual_check("length_decay", "res_length_decay"),
    "theta_pde": _residual_check("theta_pde", "res_theta_pde"),
    "kappa_pde": _residual_check("kappa_pde", "res_kappa_sq_pde"),
    "z_drop": _chk_z_drop,
    "psi_decrease": _chk_psi_decrease,
    "kappa_trend": _chk_kappa_trend,
}


def evaluate_checks(traj, cfg):
    return tuple(
        _CHECK_FUNCS[spec.name](traj, spec, cfg) for spec in cfg.checks
    )


# ---------------------------------------------------------------------------
# command implementations

def _resolve_out(flag_value, cfg, cfg_path):
    base = flag_value or (cfg.outputs.directory if cfg else "")
    if not base:
        stem = os.path.splitext(os.path.basename(cfg_path))[0]
        base = os.path.join("runs", stem)
    root = os.environ.get(_ENV_OUT, "")
    if root and not os.path.isabs(base):
        base = os.path.join(root, base)
    return base


def _say(quiet, *parts):
    if not quiet:
        print(*parts)


def execute_run(cfg, out_dir, quiet=False):
    """Run one scenario end to end and write its artifact set."""
    started = time.perf_counter()
    report = check_conditions(cfg.warp)
    traj = _flow.run(cfg)
    checks = evaluate_checks(traj, cfg)
    summary = RunSummary(
        terminal_event=traj.terminal,
        graph_time=traj.graph_time,
        condition_report=report,
        checks=checks,
        final_record=traj.records[-1] if traj.records else None,
        initial_length=traj.initial_length,
        samples=len(traj.records),
        config_digest=config_hash(cfg),
        wall_time_s=time.perf_counter() - started,
    )
    reporting.write_run_artifacts(
        out_dir,
        serialize(cfg),
        traj,
        cfg.warp,
        summary.to_json_dict(),
        cfg.outputs.formats,
        cfg.outputs.snapshot_every,
    )
    _say(quiet, f"wrote artifacts to {out_dir}")
    ev = summary.terminal_event
    _say(quiet, f"terminal: {ev.kind} at t = {ev.t:g}")
    if summary.graph_time is not None:
        _say(quiet, f"graph from t = {summary.graph_time:g}")
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        _say(quiet, f"{mark} {c.name}: {c.detail}")
    _say(
        quiet,
        f"{sum(c.passed for c in checks)}/{len(checks)} checks passed, "
        f"wall {summary.wall_time_s:.2f}s",
    )
    return summary


def cmd_run(args):
    cfg = parse_config(args.config)
    out_dir = _resolve_out(args.out, cfg, args.config)
    summary = execute_run(cfg, out_dir, args.quiet)
    return 0 if summary.passed else 1


def cmd_check_warp(args):
    cfg = parse_config(args.config)
    report = check_conditions(cfg.warp)
    d = report.to_json_dict()
    if not args.quiet:
        print(f"warp: {cfg.warp!r}")
        for key in ("c0", "c1", "c3", "c4"):
            mark = "satisfied" if d[key] else "violated"
            print(f"  {key}: {mark}")
        cs = " (grid estimate)" if report.c_estimated else ""
        ds = " (grid estimate)" if report.d_estimated else ""
        print(f"  C = {report.C:.6g}{cs}")
        print(f"  D = {report.D:.6g}{ds}")
        if report.c2_bound is not None:
            print(f"  initial length bound 1/(2C^2) = {report.c2_bound:.6g}")
        for note in report.notes:
            print(f"  note: {note}")
        for key, wit in sorted(report.witnesses.items()):
            print(f"  witness[{key}]: {wit}")
    out_dir = _resolve_out(args.out, cfg, args.config)
    path = os.path.join(out_dir, "conditions.json")
    reporting.write_text(path, reporting.summary_json_text(d))
    _say(args.quiet, f"wrote {path}")
    return 0


def _coerce_value(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _sweep_row(template, axis, value, row_dir):
    row = {
        "value": value,
        "initialLength": None,
        "terminalEvent": "",
        "graphTime": None,
        "checksPassed": "",
        "passed": False,
        "error": "",
    }
    try:
        cfg = template.with_value(axis, value)
        summary = execute_run(cfg, row_dir, quiet=True)
        row["initialLength"] = summary.initial_length
        row["terminalEvent"] = summary.terminal_event.kind
        row["graphTime"] = summary.graph_time
        row["checksPassed"] = (
            f"{sum(c.passed for c in summary.checks)}/{len(summary.checks)}"
        )
        row["passed"] = summary.passed
    except Exception as exc:  # per-row isolation
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(args):
    template = parse_config(args.config)
    values = [
        _coerce_value(s) for s in args.values.split(",") if s.strip()
    ]
    out_dir = _resolve_out(args.out, template, args.config)
    rows = [None] * len(values)
    jobs = max(1, args.jobs)

    def work(i):
        row_dir = os.path.join(out_dir, f"row_{i:02d}_{values[i]}")
        return i, _sweep_row(template, args.axis, values[i], row_dir)

    if jobs == 1 or len(values) <= 1:
        for i in range(len(values)):
            _, rows[i] = work(i)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            for i, row in pool.map(work, range(len(values))):
                rows[i] = row

    header = (
        "axis,value,initialLength,terminalEvent,graphTime,checksPassed,"
        "passed,error"
    )
    lines = [header]
    for row in rows:
        lines.append(
            ",".join(
                [
                    args.axis,
                    _fmt_cell(row["value"]),
                    _fmt_cell(row["initialLength"]),
                    row["terminalEvent"],
                    _fmt_cell(row["graphTime"]),
                    row["checksPassed"],
                    _fmt_cell(row["passed"]),
                    row["error"].replace(",", ";"),
                ]
            )
        )
    path = os.path.join(out_dir, "sweep.csv")
    reporting.write_text(path, "\n".join(lines) + "\n")
    if not args.quiet:
        for line in lines:
            print(line)
        print(f"wrote {path}")
    bad = [r for r in rows if r["error"]]
    return 0 if not bad else 1


def cmd_compare(args):
    cfg = parse_config(args.config)
    bounds = cfg.comparison_bounds
    if bounds is None:
        print(
            "compare needs a [check:comparison] section with z_lower/z_upper",
            file=sys.stderr,
        )
        return 2
    out_dir = _resolve_out(args.out, cfg, args.config)
    traj = _flow.run(cfg)
    ts = np.array([r.t for r in traj.records])
    lo = _flow.integrate_circle_heights(cfg.warp, bounds[0], ts)
    hi = _flow.integrate_circle_heights(cfg.warp, bounds[1], ts)

    circle_dev = None
    if cfg.curve_preset == "circle":
        z0 = float(dict(cfg.curve_params)["z0"])
        ode = _flow.integrate_circle_heights(cfg.warp, z0, ts)
        circle_dev = [
            max(abs(r.z_min - zo), abs(r.z_max - zo))
            for r, zo in zip(traj.records, ode)
        ]

    header = "t,baselineLower,zMin,zMax,baselineUpper,ordered"
    if circle_dev is not None:
        header += ",circleDeviation"
    lines = [header]
    all_ok = True
    for i, rec in enumerate(traj.records):
        ok = bool(lo[i] < rec.z_min and rec.z_max < hi[i])
        all_ok = all_ok and ok
        cells = [
            repr(float(ts[i])),
            repr(float(lo[i])),
            repr(float(rec.z_min)),
            repr(float(rec.z_max)),
            repr(float(hi[i])),
            "true" if ok else "false",
        ]
        if circle_dev is not None:
            cells.append(repr(float(circle_dev[i])))
        lines.append(",".join(cells))
    path = os.path.join(out_dir, "compare.csv")
    reporting.write_text(path, "\n".join(lines) + "\n")
    if not args.quiet:
        n_ok = sum(
            1 for i, r in enumerate(traj.records)
            if lo[i] < r.z_min and r.z_max < hi[i]
        )
        print(f"sandwich ordered at {n_ok}/{len(traj.records)} samples")
        if circle_dev is not None:
            print(f"sup circle-vs-ODE deviation = {max(circle_dev):.3e}")
        print(f"wrote {path}")
    finished = traj.terminal.kind == "finished"
    return 0 if (all_ok and finished) else 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="warpcsf",
        description="Curve shortening flow laboratory on warped cylinders.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="scenario config file (.cfg)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument(
            "--quiet", action="store_true", help="suppress console output"
        )

    sp = sub.add_parser("run", help="integrate one scenario and grade its checks")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("check-warp", help="evaluate warp conditions")
    common(sp)
    sp.set_defaults(func=cmd_check_warp)

    sp = sub.add_parser("sweep", help="run one scenario across parameter values")
    common(sp)
    sp.add_argument("--axis", required=True, help="config field, e.g. initial_curve.depth")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--jobs", type=int, default=1, help="concurrent rows")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="sandwich a run between baseline circles")
    common(sp)
    sp.set_defaults(func=cmd_compare)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WarpcsfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
