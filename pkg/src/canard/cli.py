"""Command line driver: reproducible analysis runs with file outputs.

Subcommands:
  analyze   fold, equilibria, normal-form record, criticality verdict and
            unfolding curves for one parameter set (or a raw coefficient
            record loaded from JSON)
  sweep     the same quantities over a one- or two-axis parameter grid,
            as CSV plus an SVG heatmap of sign(A)
  simulate  trajectory integration (optionally reversed time), CSV path
            output, and displacement-map cycle location when a bracket
            is configured
  sdi       slow-divergence-integral profile with cyclicity count
  verify    the seeded oracle suite from the verify module

Configuration comes from --config (flat key=value lines or a JSON
object); flags override file values.  Exit codes: 0 success, 1 invalid
input (DomainError), 2 numerical failure (NumericsError or failing
verify stages).  CSV output uses '.' as the decimal separator and always
carries a header row.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _svg
from .allee import (
    AlleeParams,
    a5_of_beta,
    boundary_roots,
    equilibria,
    fold_point,
    gamma_star,
    model_bifurcation_curves,
    normal_form_coeffs,
    psi_case_analysis,
)
from .dynamics import (
    FORWARD,
    REVERSED,
    IntegratorOptions,
    Section,
    allee_field,
    e4_trace,
    find_cycle,
    integrate,
)
from .errors import DomainError, NumericsError
from .normalform import (
    NormalFormCoefficients,
    analyze_record,
    compute_A,
    omega_coefficients,
)
from .sdi import cyclicity_report
from .verify import run_all

MODEL_KEYS = ("m", "n", "alpha", "beta", "gamma", "eps")

# |omega1| below this is treated as zero by the analyze verdict: published
# parameter sets carry about six decimals, which propagates to errors of
# this size in A.  Override with the classify_tol config key.
DEFAULT_CLASSIFY_TOL = 1e-5


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation: merged settings plus output plumbing."""

    command: str
    settings: Dict[str, object]
    output_dir: str
    seed: int


# ---------------------------------------------------------------------------
# configuration


def _parse_scalar(text: str):
    raw = text.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def load_config(path: str) -> Dict[str, object]:
    """Flat key=value lines ('#' comments) or a single JSON object."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read config file {path}: {exc}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise DomainError(f"config file {path} must hold a JSON object")
        return dict(data)
    out: Dict[str, object] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep or not key.strip():
            raise DomainError(f"config file {path} line {ln}: expected key=value, got {line!r}")
        out[key.strip()] = _parse_scalar(value)
    return out


def _as_float(settings: Dict[str, object], key: str,
              default: Optional[float] = None) -> float:
    if key not in settings:
        if default is None:
            raise DomainError(f"missing required setting {key!r}")
        return default
    try:
        return float(settings[key])  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise DomainError(f"setting {key!r} is not a number: {settings[key]!r}") from None


def _as_int(settings: Dict[str, object], key: str,
            default: Optional[int] = None) -> int:
    if key not in settings:
        if default is None:
            raise DomainError(f"missing required setting {key!r}")
        return default
    value = settings[key]
    if isinstance(value, bool) or (not isinstance(value, int)
                                   and int(_as_float(settings, key)) != _as_float(settings, key)):
        raise DomainError(f"setting {key!r} must be an integer, got {value!r}")
    return int(_as_float(settings, key))


def _model_params(settings: Dict[str, object]) -> AlleeParams:
    missing = [k for k in MODEL_KEYS if k not in settings]
    if missing:
        raise DomainError(f"missing parameter keys: {', '.join(missing)}")
    return AlleeParams.from_dict({k: _as_float(settings, k) for k in MODEL_KEYS})


def _direction(settings: Dict[str, object]) -> str:
    return REVERSED if bool(settings.get("reversed", False)) else FORWARD


# ---------------------------------------------------------------------------
# output helpers


def _write_text(out_dir: str, name: str, text: str) -> str:
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(out_dir: str, name: str, header: Sequence[str],
              rows: Sequence[Sequence[object]]) -> str:
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path: str) -> Tuple[List[str], List[List[str]]]:
    """Round-trip reader for this module's CSV files."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DomainError(f"CSV file {path} is empty (header row is mandatory)") from None
        rows = [row for row in reader]
    for row in rows:
        if len(row) != len(header):
            raise DomainError(f"CSV file {path} has a row of width {len(row)}, "
                              f"header has {len(header)}")
    return header, rows


def _write_json(out_dir: str, name: str, payload: dict) -> str:
    return _write_text(out_dir, name, json.dumps(payload, indent=2) + "\n")


# ---------------------------------------------------------------------------
# analyze


def _analysis_dict(nf: NormalFormCoefficients, tol: float) -> dict:
    analysis = analyze_record(nf, tol=tol)
    return {
        "A": analysis.A,
        "omega1": analysis.omega1,
        "omega2": analysis.omega2,
        "rho1": analysis.rho1,
        "rho3": analysis.rho3,
        "classification": analysis.classification.value,
    }


def _load_record(path: str) -> NormalFormCoefficients:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read coefficient file {path}: {exc}") from None
    try:
        return NormalFormCoefficients.from_json(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"coefficient file {path} is not valid JSON: {exc}") from None


def cmd_analyze(rc: RunConfig) -> Tuple[List[str], int]:
    tol = _as_float(rc.settings, "classify_tol", DEFAULT_CLASSIFY_TOL)
    if tol <= 0.0:
        raise DomainError(f"requires classify_tol > 0, got {tol}")
    if "coefficients" in rc.settings:
        nf = _load_record(str(rc.settings["coefficients"]))
        report = {
            "input": "coefficients",
            "classify_tol": tol,
            "record": nf.to_dict(),
            "analysis": _analysis_dict(nf, tol),
        }
        if "eps" in rc.settings:
            eps = _as_float(rc.settings, "eps")
            if eps <= 0.0:
                raise DomainError(f"requires eps > 0, got {eps}")
            ana = report["analysis"]
            report["eps"] = eps
            report["lambda_star"] = ana["rho1"] * eps + ana["rho3"] * eps * eps
        path = _write_json(rc.output_dir, "analyze.json", report)
        print(f"record classification: {report['analysis']['classification']} "
              f"(A = {report['analysis']['A']:.6g})")
        return [path], 0

    p = _model_params(rc.settings)
    xm, ym = fold_point(p.m, p.n)
    delta1, x1, x2 = boundary_roots(p.m, p.n)
    eq = equilibria(p)
    nf = normal_form_coeffs(p)
    ana = _analysis_dict(nf, tol)
    a5 = a5_of_beta(p)
    lam_h = -(a5 / 2.0) * p.eps
    lam_c = -(a5 / 2.0 + ana["A"] / 8.0) * p.eps
    psi = psi_case_analysis(p.m, p.n, p.alpha, p.gamma)
    gs = gamma_star(p.m, p.n, p.alpha, p.beta)
    trace4 = None if eq.E4 is None else e4_trace(p)
    curves = None
    if abs(p.gamma - gs) <= 1e-6:
        mc = model_bifurcation_curves(p)
        curves = {
            "beta_star": mc.beta_star, "beta_h": mc.beta_h, "beta_c": mc.beta_c,
            "conversion": mc.conversion,
        }
    report = {
        "input": "model",
        "params": p.to_dict(),
        "classify_tol": tol,
        "fold": [xm, ym],
        "boundary": {"delta1": delta1, "x1": x1, "x2": x2},
        "equilibria": eq.to_dict(),
        "e4_trace": trace4,
        "record": nf.to_dict(),
        "analysis": ana,
        "a5": a5,
        "curves": {"lambda_h": lam_h, "lambda_c": lam_c, "gap": lam_c - lam_h},
        "psi_case": {
            "psi": psi.psi, "m_star": psi.m_star, "n_threshold": psi.n_threshold,
            "tag": psi.tag, "predicted_sign": psi.predicted_sign,
        },
        "gamma_star": gs,
        "model_curves": curves,
    }
    path = _write_json(rc.output_dir, "analyze.json", report)
    print(f"fold at ({xm:.6g}, {ym:.6g}); "
          f"E4 {'absent' if eq.E4 is None else 'at (%.6g, %.6g)' % eq.E4.point}")
    print(f"A = {ana['A']:.6g}, omega1 = {ana['omega1']:.6g}, "
          f"omega2 = {ana['omega2']:.6g} -> {ana['classification']}")
    print(f"lambda_h = {lam_h:.6g}, lambda_c = {lam_c:.6g} (gap {lam_c - lam_h:.6g})")
    print(f"psi case: {psi.tag} (m* = {psi.m_star:.6g})")
    return [path], 0


# ---------------------------------------------------------------------------
# sweep


def parse_grid(descriptor: str) -> List[Tuple[str, List[float]]]:
    """Axis descriptors 'name=lo:hi:count' or 'name=value', comma separated;
    one or two axes drawn from the model parameter names."""
    if descriptor is None or not str(descriptor).strip():
        raise DomainError("empty grid: the grid descriptor has no axes")
    axes: List[Tuple[str, List[float]]] = []
    for part in str(descriptor).split(","):
        name, sep, body = part.partition("=")
        name, body = name.strip(), body.strip()
        if not sep or not name or not body:
            raise DomainError(f"grid axis {part!r} must look like name=lo:hi:count or name=value")
        if name not in MODEL_KEYS:
            raise DomainError(f"unknown grid axis {name!r} (choose from {', '.join(MODEL_KEYS)})")
        if any(name == seen for seen, _ in axes):
            raise DomainError(f"grid axis {name!r} appears twice")
        if ":" in body:
            pieces = body.split(":")
            if len(pieces) != 3:
                raise DomainError(f"grid axis {part!r} must look like name=lo:hi:count")
            try:
                lo, hi, count = float(pieces[0]), float(pieces[1]), int(pieces[2])
            except ValueError:
                raise DomainError(f"grid axis {part!r} has non-numeric fields") from None
            if count < 1:
                raise DomainError(f"empty grid: axis {name!r} has count {count}")
            values = [lo] if count == 1 else list(np.linspace(lo, hi, count))
        else:
            try:
                values = [float(body)]
            except ValueError:
                raise DomainError(f"grid axis {part!r} has a non-numeric value") from None
        axes.append((name, [float(v) for v in values]))
    if len(axes) > 2:
        raise DomainError(f"grid must have one or two axes, got {len(axes)}")
    return axes


def _sweep_row(settings: Dict[str, object], overrides: Dict[str, float]) -> dict:
    merged = dict(settings)
    merged.update(overrides)
    p = _model_params(merged)
    nf = normal_form_coeffs(p)
    a_val = compute_A(nf)
    om = omega_coefficients(nf)
    a5 = a5_of_beta(p)
    lam_h = -(a5 / 2.0) * p.eps
    lam_c = -(a5 / 2.0 + a_val / 8.0) * p.eps
    case = psi_case_analysis(p.m, p.n, p.alpha, p.gamma).tag
    return {"A": a_val, "omega1": om.omega1, "omega2": om.omega2,
            "lambda_h": lam_h, "lambda_c": lam_c, "case": case}


def cmd_sweep(rc: RunConfig) -> Tuple[List[str], int]:
    descriptor = rc.settings.get("grid")
    if descriptor is None:
        raise DomainError("sweep requires a grid descriptor (--grid or the grid config key)")
    axes = parse_grid(str(descriptor))
    x_name, x_values = axes[0]
    y_name, y_values = axes[1] if len(axes) == 2 else ("", [math.nan])

    header = [x_name] + ([y_name] if y_name else []) + [
        "A", "omega1", "omega2", "lambda_h", "lambda_c", "case"]
    rows: List[List[object]] = []
    cells: List[List[float]] = []
    for yv in y_values:
        cell_row: List[float] = []
        for xv in x_values:
            overrides = {x_name: xv}
            if y_name:
                overrides[y_name] = yv
            data = _sweep_row(rc.settings, overrides)
            row: List[object] = [xv] + ([yv] if y_name else [])
            row += [data["A"], data["omega1"], data["omega2"],
                    data["lambda_h"], data["lambda_c"], data["case"]]
            rows.append(row)
            cell_row.append(data["A"])
        cells.append(cell_row)

    csv_path = write_csv(rc.output_dir, "sweep.csv", header, rows)
    svg = _svg.heatmap(
        x_values, [0.0] if not y_name else y_values, cells,
        title="sign(A) over the sweep grid",
        x_label=x_name, y_label=y_name or "")
    svg_path = _write_text(rc.output_dir, "sweep.svg", svg)
    print(f"swept {len(rows)} grid points over "
          f"{x_name}{' x ' + y_name if y_name else ''}")
    return [csv_path, svg_path], 0


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(rc: RunConfig) -> Tuple[List[str], int]:
    p = _model_params(rc.settings)
    start = (_as_float(rc.settings, "start_x"), _as_float(rc.settings, "start_y"))
    opts = IntegratorOptions(
        rel_tol=_as_float(rc.settings, "rel_tol", 1e-8),
        abs_tol=_as_float(rc.settings, "abs_tol", 1e-10),
        t_max=_as_float(rc.settings, "t_max", 100.0),
        direction=_direction(rc.settings),
    )
    field = allee_field(p)
    traj = integrate(field, start, opts)
    rows = [[float(t), float(x), float(y)]
            for t, (x, y) in zip(traj.t, traj.y)]
    csv_path = write_csv(rc.output_dir, "trajectory.csv", ["t", "x", "y"], rows)
    end = traj.end_state
    summary = {
        "params": p.to_dict(),
        "start": [start[0], start[1]],
        "direction": opts.direction,
        "t_final": float(traj.t[-1]),
        "steps": int(len(traj.t)),
        "end_state": [float(end[0]), float(end[1])],
        "stiffness_suspected": bool(traj.stiffness_suspected),
    }
    paths = [csv_path]
    svg = _svg.polyline(
        [r[1] for r in rows], [r[2] for r in rows],
        title=f"trajectory ({opts.direction.lower()} time)",
        x_label="x", y_label="y", marker=(float(end[0]), float(end[1])))
    paths.append(_write_text(rc.output_dir, "trajectory.svg", svg))

    if "bracket_lo" in rc.settings or "bracket_hi" in rc.settings:
        lo = _as_float(rc.settings, "bracket_lo")
        hi = _as_float(rc.settings, "bracket_hi")
        if "section_x" in rc.settings:
            section_x = _as_float(rc.settings, "section_x")
        else:
            report = equilibria(p)
            if report.E4 is None:
                raise DomainError("cycle location requires the interior equilibrium "
                                  "to exist (set section_x explicitly otherwise)")
            section_x = report.E4.point[0]
        section = Section(section_x, 0.0)
        cyc = find_cycle(field, (lo, hi), section, opts)
        summary["cycle"] = cyc.to_dict()
        print(f"cycle: section point ({cyc.section_point[0]:.9g}, "
              f"{cyc.section_point[1]:.9g}), period = {cyc.period:.6g}, "
              f"multiplier = {cyc.multiplier:.6g} ({cyc.stability})")
    json_path = _write_json(rc.output_dir, "simulate.json", summary)
    paths.append(json_path)
    print(f"integrated {summary['steps']} steps to t = {summary['t_final']:.6g}; "
          f"end state ({end[0]:.6g}, {end[1]:.6g})")
    return paths, 0


# ---------------------------------------------------------------------------
# sdi


def cmd_sdi(rc: RunConfig) -> Tuple[List[str], int]:
    p = _model_params(rc.settings)
    grid_raw = rc.settings.get("grid", 24)
    try:
        grid_size = int(str(grid_raw))
    except ValueError:
        raise DomainError(f"sdi grid must be an integer count, got {grid_raw!r}") from None
    profile = cyclicity_report(p, grid_size)
    json_path = _write_json(rc.output_dir, "sdi.json",
                            dict(profile.to_dict(), params=p.to_dict()))
    csv_path = write_csv(rc.output_dir, "sdi.csv", ["s", "integral"],
                         [[s, v] for s, v in zip(profile.s_grid, profile.values)])
    svg = _svg.polyline(profile.s_grid, profile.values,
                        title="slow divergence integral profile",
                        x_label="depth s", y_label="I(s)")
    svg_path = _write_text(rc.output_dir, "sdi.svg", svg)
    print(f"I(s) over {len(profile.s_grid)} depths: zero_count = "
          f"{profile.zero_count}, case = {profile.case}")
    return [json_path, csv_path, svg_path], 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(rc: RunConfig) -> Tuple[List[str], int]:
    offset = _as_float(rc.settings, "omega2_offset", 0.0)
    report = run_all(seed=rc.seed, omega2_offset=offset)
    path = _write_json(rc.output_dir, "verify.json", report.to_dict())
    for line in report.lines():
        print(line)
    return [path], 0 if report.all_passed else 2


# ---------------------------------------------------------------------------
# argument plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse usage errors are validation errors
        raise DomainError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="canard",
                     description="Singular Hopf and canard analysis for planar "
                                 "slow-fast systems")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("analyze", "classify one parameter set or coefficient record"),
            ("sweep", "grid sweep with CSV rows and a sign(A) heatmap"),
            ("simulate", "integrate a trajectory; optionally locate a cycle"),
            ("sdi", "slow divergence integral profile"),
            ("verify", "run the seeded oracle suite")):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", help="flat key=value or JSON config file")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--seed", type=int, help="seed for seeded commands (default 2025)")
        sp.add_argument("--eps", type=float, help="override the eps parameter")
        sp.add_argument("--grid", help="sweep axes 'name=lo:hi:count[,name=...]'; "
                                       "point count for sdi")
        sp.add_argument("--reversed", action="store_true", default=None,
                        help="integrate in reversed time (simulate)")
        if name == "verify":
            sp.add_argument("--omega2-offset", type=float, dest="omega2_offset",
                            help="negative-control shift of the expected cubic constant")
    return parser


def assemble(args: argparse.Namespace) -> RunConfig:
    settings: Dict[str, object] = {}
    if args.config:
        settings.update(load_config(args.config))
    for key in ("eps", "grid", "reversed"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if getattr(args, "omega2_offset", None) is not None:
        settings["omega2_offset"] = args.omega2_offset
    if args.seed is not None:
        settings["seed"] = args.seed
    seed = _as_int(settings, "seed", 2025)
    out_dir = args.out
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise DomainError(f"cannot create output directory {out_dir}: {exc}") from None
    if not os.access(out_dir, os.W_OK):
        raise DomainError(f"output directory {out_dir} is not writable")
    return RunConfig(command=args.command, settings=settings,
                     output_dir=out_dir, seed=seed)


_COMMANDS = {
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "sdi": cmd_sdi,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        rc = assemble(args)
        paths, code = _COMMANDS[rc.command](rc)
        for path in paths:
            print(f"wrote {path}")
        return code
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
