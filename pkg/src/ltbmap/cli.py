"""Command-line front end.

    ltbmap zlambda --omega 0
    ltbmap frw-check --omega 1 --z0 1 --c 1 --range 1:2
    ltbmap crossing --omega 0 --z0 1 --c-scale 1.2 --range 1:1.5
    ltbmap sweep zlambda --param omega_lambda --values 0,0.1,0.2

Every command writes ``<command>.csv``, ``<command>.json`` and two-column
``.dat`` files into ``--out``. Exit codes: 0 success, 2 singular
termination, 1 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import critical, decoupled, frw
from .exceptions import ConfigError, LtbMapError, StepUnderflowError, StraddleError
from .kernel import GeodesicState, LTBModel, classify_singularity, eval_kernel, integrate_general
from .luminosity import CosmoParams, LuminosityCurve
from .numerics import IvpSpec

log = logging.getLogger("ltbmap")

COMMANDS = ("zlambda", "trace", "trace-decoupled", "frw-check", "crossing", "bounds")
SWEEP_PARAMS = ("omega_lambda", "c", "c_scale", "xi0", "z0")
EXIT_OK, EXIT_CONFIG, EXIT_SINGULAR = 0, 1, 2

_ALIASES = {"omega": "omega_lambda", "m0": "M0"}


@dataclass
class Scenario:
    command: str = "zlambda"
    omega_lambda: float = 0.0
    z0: float = 1.0
    z1: float = 2.0
    model: str = "frw"
    c: float | None = None
    c_scale: float | None = None
    e0: float = 1.0
    p: float = 2.0
    xi0: float | None = None
    M0: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-13
    convention: str = "constraint_consistent"
    out: str = "ltbmap_out"
    samples: int = 201
    alpha: float = 0.1

    def validate(self) -> "Scenario":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", "command")
        if not 0.0 <= self.omega_lambda <= 1.0:
            raise ConfigError("must lie in [0, 1]", "omega_lambda")
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("tolerances must be positive", "rtol" if self.rtol <= 0 else "atol")
        if self.model not in ("frw", "power_law"):
            raise ConfigError("must be frw or power_law", "model")
        try:
            self.convention = frw.normalize_convention(self.convention)
        except ValueError as exc:
            raise ConfigError(str(exc), "convention") from None
        if self.c is not None and self.c <= 0:
            raise ConfigError("must be positive", "c")
        if self.c_scale is not None and self.c_scale <= 0:
            raise ConfigError("must be positive", "c_scale")
        if self.command != "zlambda" and not self.z0 > 0:
            raise ConfigError("must be positive", "z0")
        if self.samples < 2:
            raise ConfigError("need at least 2 samples", "samples")
        if self.command in ("trace-decoupled", "bounds") and self.xi0 is None:
            raise ConfigError("required for this command", "xi0")
        if self.command == "crossing" and self.omega_lambda >= 1.0:
            raise ConfigError("no critical redshift for omega_lambda = 1", "omega_lambda")
        return self

    @property
    def cosmo(self) -> CosmoParams:
        return CosmoParams(self.omega_lambda)

    @property
    def ivp(self) -> IvpSpec:
        return IvpSpec(rel_tol=self.rtol, abs_tol=self.atol)


@dataclass
class RunReport:
    scenario: dict[str, Any]
    exit_code: int = EXIT_OK
    status: str = "completed"
    results: dict[str, Any] = field(default_factory=dict)
    events: list[dict[str, Any]] = field(default_factory=list)
    certificates: list[dict[str, Any]] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)
    rows: list[list[float]] = field(default_factory=list)
    plots: dict[str, tuple[str, str]] = field(default_factory=dict)
    timing: float = 0.0

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        for key in ("columns", "rows", "plots"):
            out.pop(key)
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# --------------------------------------------------------------------------
# config handling

_FIELD_TYPES = {f.name: f.type for f in fields(Scenario)}


def _coerce(name: str, raw: str, line: int | None = None):
    kind = _FIELD_TYPES[name]
    text = raw.strip()
    try:
        if "float" in kind:
            if "None" in kind and text.lower() in ("", "none"):
                return None
            return float(text)
        if kind == "int":
            return int(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r}", name, line) from None
    return text


def _apply(values: dict[str, Any], key: str, raw: str, line: int | None = None) -> None:
    norm = key.strip().replace("-", "_")
    key = _ALIASES.get(norm.lower(), norm)
    if key == "range":
        parts = raw.split(":")
        if len(parts) != 2:
            raise ConfigError("expected a:b", "range", line)
        values["z0"] = _coerce("z0", parts[0], line)
        values["z1"] = _coerce("z1", parts[1], line)
        return
    if key not in _FIELD_TYPES:
        raise ConfigError("unknown key", key, line)
    values[key] = _coerce(key, raw, line)


def parse_config(text: str) -> dict[str, Any]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", None, lineno)
        key, raw = line.split("=", 1)
        _apply(values, key, raw, lineno)
    return values


# --------------------------------------------------------------------------
# output


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def csv_text(columns: Sequence[str], rows: Sequence[Sequence[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (int, float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_outputs(report: RunReport, out: Path, stem: str) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if report.columns:
        path = out / f"{stem}.csv"
        path.write_text(csv_text(report.columns, report.rows))
        written.append(path)
    path = out / f"{stem}.json"
    path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    written.append(path)
    for name, (xcol, ycol) in report.plots.items():
        i, j = report.columns.index(xcol), report.columns.index(ycol)
        lines = [f"# {xcol} {ycol}"] + [f"{_fmt(r[i])} {_fmt(r[j])}" for r in report.rows]
        path = out / f"{stem}_{name}.dat"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


# --------------------------------------------------------------------------
# commands


def _cmd_zlambda(s: Scenario, rep: RunReport) -> None:
    cp = critical.find_z_lambda(s.cosmo)
    cert = critical.verify_zlambda_bounds(s.cosmo, cp)
    rep.results.update({"omega_lambda": s.omega_lambda, "z_lambda": cp.z_lambda, "residual": cp.residual})
    rep.certificates.append(cert.to_dict())
    rep.columns = ["omega_lambda", "z_lambda", "residual"]
    rep.rows = [[s.omega_lambda, cp.z_lambda, cp.residual]]


def _frw_c(s: Scenario, curve: LuminosityCurve) -> float:
    if s.c is not None:
        return s.c
    if s.c_scale is not None:
        return s.c_scale * frw.c_lambda(s.cosmo, s.z0)
    return 1.0


def _general_setup(s: Scenario, curve: LuminosityCurve) -> tuple[LTBModel, GeodesicState]:
    if s.model == "frw":
        p = frw.FrwParams(_frw_c(s, curve), s.z0, s.convention)
        init = frw.initial_state(p, curve)
        if s.M0 is not None or s.xi0 is not None:
            M = s.M0 if s.M0 is not None else s.xi0 * curve.R(s.z0)
            init = replace(init, M=M)
        return p.model(), init
    c = s.c if s.c is not None else 1.0
    model = LTBModel.power_law(s.e0, s.p, c, 0.0)
    R = curve.R(s.z0)
    M = s.M0 if s.M0 is not None else (s.xi0 if s.xi0 is not None else 0.5) * R
    return model, GeodesicState(s.z0, R / c, 0.0, M)


def _events(traj) -> list[dict[str, Any]]:
    return [{"name": e.name, "z": e.z, "terminal": e.terminal} for e in traj.events]


def _cmd_trace(s: Scenario, rep: RunReport) -> None:
    curve = LuminosityCurve(s.cosmo)
    model, init = _general_setup(s, curve)
    try:
        traj = integrate_general(init, curve, model, s.z1, s.ivp)
    except StepUnderflowError as exc:
        traj = exc.trajectory
        rep.exit_code, rep.status = EXIT_SINGULAR, "underflow"
        rep.results["failure"] = str(exc)
    if traj.terminated:
        rep.exit_code, rep.status = EXIT_SINGULAR, "terminal_event"
    rep.events = _events(traj)
    rep.events += [
        {"classified": r.kind, "z": r.z_location, "possibly_removable": r.possibly_removable}
        for r in classify_singularity(traj, model, curve)
    ]
    rep.columns = ["z", "r", "t", "M", "R", "R_z", "detU", "denom_sol", "denom_geo"]
    for z in np.linspace(traj.z_start, traj.z_end, s.samples):
        r, t, M = traj(z)
        R = curve.R(z)
        k = eval_kernel(GeodesicState(z, r, t, M), R, model)
        rep.rows.append([z, r, t, M, R, curve.dRdz(z), k.detU, k.denom_sol, k.denom_geo])
    rep.plots = {"M": ("z", "M"), "t": ("z", "t")}
    rep.results["z_end"] = traj.z_end


def _cmd_trace_decoupled(s: Scenario, rep: RunReport) -> None:
    curve = LuminosityCurve(s.cosmo)
    model = decoupled.unit_model(s.c if s.c is not None else 1.0)
    init = decoupled.initial_state(curve, model, s.z0, s.xi0)
    run = decoupled.solve_decoupled(init, curve, model, s.z1, s.ivp)
    if run.xi.terminated:
        rep.exit_code, rep.status = EXIT_SINGULAR, "terminal_event"
    rep.events = _events(run.xi)
    rep.columns = ["z", "r", "t", "xi", "M", "R", "R_z"]
    for z in np.linspace(run.z_start, run.rt_z_end, s.samples):
        r, t, xi = run(z)
        R = curve.R(z)
        rep.rows.append([z, r, t, xi, xi * R, R, curve.dRdz(z)])
    rep.plots = {"xi": ("z", "xi"), "M": ("z", "M")}
    rep.results.update({"z_end": run.z_end, "rt_z_end": run.rt_z_end})


def _cmd_frw_check(s: Scenario, rep: RunReport) -> None:
    curve = LuminosityCurve(s.cosmo)
    p = frw.FrwParams(_frw_c(s, curve), s.z0, s.convention)
    lo, hi = sorted((s.z0, s.z1))
    report = frw.oracle_compare(p, curve, (lo, hi), s.ivp)
    rep.results.update(
        {
            "max_rel_deviation": report.max_rel_deviation,
            "per_component": report.per_component,
            "integration_status": report.status,
        }
    )
    audit = frw.audit_convention(p, np.linspace(p.eta_min / 2.0, 2.0, 41))
    rep.results["convention_audit"] = {
        "convention": audit.convention,
        "max_constraint_residual": audit.max_constraint_residual,
        "verdict": audit.verdict,
    }
    if p.convention == "constraint_consistent":
        try:
            geo = frw.geodesic_oracle_compare(p, curve.R(s.z0) / p.c, (lo, hi), s.ivp)
            rep.results["geodesic_oracle"] = {
                "max_rel_deviation": geo.max_rel_deviation,
                "z_range": list(geo.z_range),
                "status": geo.status,
            }
        except LtbMapError as exc:
            rep.results["geodesic_oracle"] = {"error": str(exc)}
    rep.columns = ["z", "r_closed", "t_closed", "M_closed", "a", "rho"]
    for z in np.linspace(lo, hi, s.samples):
        st = frw.closed_solution(z, p, curve)
        rep.rows.append([z, st.r, st.t, st.M, frw.scale_at(z, p), frw.energy_density(z, p)])
    rep.plots = {"t": ("z", "t_closed"), "M": ("z", "M_closed")}


def _cmd_crossing(s: Scenario, rep: RunReport) -> None:
    curve = LuminosityCurve(s.cosmo)
    c = _frw_c(s, curve) if (s.c is not None or s.c_scale is not None) else frw.c_lambda(s.cosmo, s.z0)
    p = frw.FrwParams(c, s.z0, s.convention)
    res = frw.cross_singularity(p, curve, (s.z0, s.z1), IvpSpec(rel_tol=min(s.rtol, 1e-11), abs_tol=s.atol))
    rep.results.update(
        {
            "c": res.c,
            "c_lambda": res.c_lambda,
            "z_lambda": res.z_lambda,
            "removable": res.removable,
            "regularized": res.regularized,
            "z_end": res.trajectory.z_end,
            **res.diagnostics,
        }
    )
    rep.events = _events(res.trajectory)
    if res.trajectory.terminated:
        rep.exit_code, rep.status = EXIT_SINGULAR, "terminal_event"
        kind = res.terminal_kind or "unknown"
        order = round(min(res.diagnostics["adot_exponent"], res.diagnostics["dtdz_exponent"]))
        rep.events.append(
            {
                "classified": kind,
                "z": res.trajectory.z_end,
                "order": order,
                "label": f"{kind}, order {order}",
                "dtdz_exponent": res.diagnostics.get("dtdz_exponent"),
                "adot_exponent": res.diagnostics.get("adot_exponent"),
            }
        )
    else:
        rep.events += [
            {"classified": r.kind, "z": r.z_location, "possibly_removable": r.possibly_removable} for r in res.reports
        ]
    rep.columns = ["z", "r", "t", "M", "R", "R_z", "t_closed"]
    for z in np.linspace(res.trajectory.z_start, res.trajectory.z_end, s.samples):
        r, t, M = res.trajectory(z)
        rep.rows.append([z, r, t, M, curve.R(z), curve.dRdz(z), frw.closed_solution(z, p, curve).t])
    rep.plots = {"t": ("z", "t")}


def _cmd_bounds(s: Scenario, rep: RunReport) -> None:
    curve = LuminosityCurve(s.cosmo)
    model = decoupled.unit_model(s.c if s.c is not None else 1.0)
    init = decoupled.initial_state(curve, model, s.z0, s.xi0)
    run = decoupled.solve_decoupled(init, curve, model, s.z1, s.ivp)
    certs = []
    try:
        up = decoupled.check_upprbnd(curve, (s.z0, run.z_end))
        rep.results["upprbnd"] = {"C": up.C, "C_remark": up.C_remark, "sign": up.sign, "kind": up.kind}
        certs.append(decoupled.verify_thm1(run, up.C))
    except StraddleError as exc:
        rep.results["upprbnd"] = {"error": str(exc)}
    certs.append(decoupled.verify_thm2(run))
    certs.append(decoupled.verify_growth_corollary(run, s.alpha))
    certs.append(decoupled.verify_monotonicity(run))
    rep.certificates = [c.to_dict() for c in certs]
    rep.columns = ["z", "xi", "M", "R"]
    for z in np.linspace(run.z_start, run.z_end, s.samples):
        xi = float(run.xi_at(z))
        R = curve.R(z)
        rep.rows.append([z, xi, xi * R, R])
    rep.plots = {"M": ("z", "M")}
    if run.xi.terminated:
        rep.exit_code, rep.status = EXIT_SINGULAR, "terminal_event"


_DISPATCH = {
    "zlambda": _cmd_zlambda,
    "trace": _cmd_trace,
    "trace-decoupled": _cmd_trace_decoupled,
    "frw-check": _cmd_frw_check,
    "crossing": _cmd_crossing,
    "bounds": _cmd_bounds,
}


def run_scenario(s: Scenario, write: bool = True) -> RunReport:
    s.validate()
    rep = RunReport(scenario=asdict(s))
    start = time.perf_counter()
    try:
        _DISPATCH[s.command](s, rep)
    except ConfigError:
        raise
    except (LtbMapError, ArithmeticError, ValueError) as exc:
        rep.exit_code, rep.status = EXIT_SINGULAR, "failed"
        rep.results["error"] = f"{type(exc).__name__}: {exc}"
    rep.timing = time.perf_counter() - start
    if write:
        write_outputs(rep, Path(s.out), s.command.replace("-", "_"))
    return rep


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepReport:
    parameter: str
    columns: list[str]
    rows: list[list[Any]]


_SWEEP_METRICS = {
    "zlambda": ("z_lambda",),
    "frw-check": ("max_rel_deviation",),
    "crossing": ("z_end", "adot_exponent"),
    "trace": ("z_end",),
    "trace-decoupled": ("z_end",),
    "bounds": (),
}


def sweep(s: Scenario, parameter: str, values: Sequence[float], workers: int = 4, write: bool = True) -> SweepReport:
    """One independent run per value; rows sorted by value, failures kept as rows."""
    if parameter not in SWEEP_PARAMS:
        raise ConfigError(f"must be one of {', '.join(SWEEP_PARAMS)}", "param")
    values = sorted(float(v) for v in values)
    s.validate()

    def one(v: float) -> list[Any]:
        sc = replace(s, **{parameter: v})
        try:
            rep = run_scenario(sc, write=False)
        except ConfigError as exc:
            return [v, EXIT_CONFIG, "config_error"] + [math.nan] * len(metrics) + [str(exc)]
        vals = [rep.results.get(m, math.nan) for m in metrics]
        vals = [v2 if isinstance(v2, (int, float)) else math.nan for v2 in vals]
        return [v, rep.exit_code, rep.status] + vals + [rep.results.get("error", "")]

    metrics = _SWEEP_METRICS[s.command]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(one, values))
    columns = [parameter, "exit_code", "status", *metrics, "error"]
    if write:
        out = Path(s.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"sweep_{s.command.replace('-', '_')}_{parameter}.csv").write_text(csv_text(columns, rows))
    return SweepReport(parameter, columns, rows)


# --------------------------------------------------------------------------
# argument parsing


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("scenario")
    g.add_argument("--config", help="key=value scenario file; flags override it")
    g.add_argument("--omega", dest="omega_lambda")
    g.add_argument("--z0")
    g.add_argument("--z1")
    g.add_argument("--range", dest="range", metavar="A:B")
    g.add_argument("--model", choices=("frw", "power_law"))
    g.add_argument("--c")
    g.add_argument("--c-scale", dest="c_scale")
    g.add_argument("--e0")
    g.add_argument("--p")
    g.add_argument("--xi0")
    g.add_argument("--M0", dest="M0")
    g.add_argument("--rtol")
    g.add_argument("--atol")
    g.add_argument("--convention", choices=("paper", "consistent", "paper_sqrt2", "constraint_consistent"))
    g.add_argument("--out")
    g.add_argument("--samples")
    g.add_argument("--alpha")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltbmap", description="Luminosity-distance to LTB mass map.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _common(sub.add_parser(name))
    sw = sub.add_parser("sweep", help="run one command over a list of parameter values")
    sw.add_argument("target", choices=COMMANDS)
    sw.add_argument("--param", required=True)
    sw.add_argument("--values", default="", help="comma-separated values")
    sw.add_argument("--workers", type=int, default=4)
    _common(sw)
    return parser


_FLAG_KEYS = ("omega_lambda", "z0", "z1", "range", "model", "c", "c_scale", "e0", "p", "xi0", "M0",
              "rtol", "atol", "convention", "out", "samples", "alpha")


def scenario_from_args(args: argparse.Namespace, command: str) -> Scenario:
    values: dict[str, Any] = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "config") from None
        values.update(parse_config(text))
    for key in _FLAG_KEYS:
        raw = getattr(args, key, None)
        if raw is not None:
            _apply(values, key, str(raw))
    values["command"] = command
    return Scenario(**values)


def _parse_values(text: str) -> list[float]:
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise ConfigError(f"cannot parse {tok!r}", "values") from None
    return out


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "sweep":
            s = scenario_from_args(args, args.target)
            rep = sweep(s, args.param, _parse_values(args.values), args.workers)
            sys.stdout.write(csv_text(rep.columns, rep.rows))
            return EXIT_OK
        s = scenario_from_args(args, args.command)
        rep = run_scenario(s)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    summary = {"status": rep.status, "exit_code": rep.exit_code, **rep.results}
    if rep.events:
        summary["events"] = rep.events
    if rep.certificates:
        summary["certificates"] = [
            {k: c[k] for k in ("claim_id", "verdict", "worst_margin", "applicable")} for c in rep.certificates
        ]
    sys.stdout.write(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return rep.exit_code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
