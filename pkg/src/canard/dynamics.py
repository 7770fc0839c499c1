"""Trajectory integration, Poincaré return maps, and cycle detection.

Fields are integrated with the embedded 5(4) pair in _kernels (compiled
when numba is available).  Return maps use a vertical-ray section with
same-direction crossings located on the dense output; limit cycles are
found by bisection on the displacement map, with unstable cycles handled
in reversed time and their multiplier reported in the forward-time
convention."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from ._kernels import (
    STATUS_BAD_FIELD,
    STATUS_OK,
    STATUS_STIFF,
    STATUS_UNDERFLOW,
    allee_rhs,
    dense_eval,
    make_core,
)
from .allee import AlleeParams, critical_slope, equilibria, fold_point
from .errors import DomainError, NumericsError

FORWARD = "Forward"
REVERSED = "Reversed"


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    t_max: float = 100.0
    direction: str = FORWARD

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (0.0 < v <= 1e-2):
                raise DomainError(f"requires 0 < {name} <= 1e-2, got {v}")
        if not self.max_step > 0.0:
            raise DomainError(f"requires max_step > 0, got {self.max_step}")
        if not (math.isfinite(self.t_max) and self.t_max > 0.0):
            raise DomainError(f"requires finite t_max > 0, got {self.t_max}")
        if self.direction not in (FORWARD, REVERSED):
            raise DomainError(f"direction must be {FORWARD} or {REVERSED}")


@dataclass(frozen=True, eq=False)
class PlanarField:
    """A planar vector field as (rhs, parameter vector).  rhs has the
    signature (t, u, par) -> ndarray(2); compiled rhs functions get a
    compiled integration core automatically."""

    rhs: Callable
    par: np.ndarray
    name: str = "custom"


def allee_field(p: AlleeParams) -> PlanarField:
    par = np.array([p.m, p.n, p.alpha, p.beta, p.gamma, p.eps])
    return PlanarField(allee_rhs, par, "allee")


_CORE_CACHE: dict = {}


def _core_for(rhs):
    core = _CORE_CACHE.get(rhs)
    if core is None:
        core = make_core(rhs)
        _CORE_CACHE[rhs] = core
    return core


@dataclass(eq=False)
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    rcont: Optional[np.ndarray]
    direction: str
    stiffness_suspected: bool = False

    @property
    def end_state(self) -> np.ndarray:
        return self.y[-1].copy()

    def eval(self, tq):
        """Dense-output state at time(s) tq within [0, t[-1]]."""
        if self.rcont is None:
            raise NumericsError("trajectory was integrated without dense output")
        arr = np.atleast_1d(np.asarray(tq, dtype=float))
        if arr.size and (arr.min() < self.t[0] - 1e-12
                         or arr.max() > self.t[-1] + 1e-12):
            raise DomainError(
                f"query time outside [{self.t[0]}, {self.t[-1]}]")
        idx = np.clip(np.searchsorted(self.t, arr, side="right") - 1,
                      0, len(self.t) - 2)
        out = np.empty((arr.size, 2))
        for j in range(arr.size):
            i = idx[j]
            h = self.t[i + 1] - self.t[i]
            theta = 0.0 if h == 0.0 else (arr[j] - self.t[i]) / h
            theta = min(max(theta, 0.0), 1.0)
            out[j] = dense_eval(self.rcont[i], theta)
        return out[0] if np.isscalar(tq) or np.asarray(tq).ndim == 0 else out


def _run(field: PlanarField, x0, opts: IntegratorOptions, store_dense: bool):
    u0 = np.asarray(x0, dtype=float)
    if u0.shape != (2,) or not np.all(np.isfinite(u0)):
        raise DomainError(f"initial state must be a finite point, got {x0}")
    sign = -1.0 if opts.direction == REVERSED else 1.0
    core = _core_for(field.rhs)
    stiff = False
    rtol, atol = opts.rel_tol, opts.abs_tol
    for attempt in range(2):
        status, n, ts, ys, rc = core(field.par, u0, opts.t_max, rtol, atol,
                                     opts.max_step, sign, store_dense)
        if status == STATUS_STIFF and attempt == 0:
            warnings.warn(
                f"step-rejection streak on field '{field.name}': suspected "
                "stiffness, retrying with 100x tighter tolerances",
                RuntimeWarning, stacklevel=3)
            stiff = True
            rtol, atol = rtol * 1e-2, atol * 1e-2
            continue
        break
    if status == STATUS_UNDERFLOW:
        raise NumericsError("step size underflow (stiff or singular field)")
    if status == STATUS_BAD_FIELD:
        raise NumericsError(
            f"field '{field.name}' evaluation produced non-finite values")
    if status == STATUS_STIFF:
        raise NumericsError("persistent step rejection even after tightening")
    return Trajectory(ts[:n + 1].copy(), ys[:n + 1].copy(),
                      rc[:n].copy() if store_dense else None,
                      opts.direction, stiff)


def integrate(field: PlanarField, x0, opts: IntegratorOptions = IntegratorOptions()
              ) -> Trajectory:
    """Integrate field from x0 to opts.t_max with dense output.  The
    Reversed direction negates the field; the trajectory parameter still
    runs forward over [0, t_max]."""
    return _run(field, x0, opts, store_dense=True)


@dataclass(frozen=True)
class Section:
    """Vertical ray {x = x_sec, y > y_base}, crossed in a fixed
    x-direction (the direction of the starting point's velocity)."""

    x: float
    y_base: float


def _scan_crossings(field: PlanarField, traj: Trajectory, section: Section,
                    sign: float, limit: int):
    """Yield (t, y, xdot_sign) for crossings of the section line along the
    trajectory, refined on the dense output to a time width of 1e-10."""
    g = traj.y[:, 0] - section.x
    found = 0
    for i in range(len(traj.t) - 1):
        a, b = g[i], g[i + 1]
        if a == 0.0 and i > 0:
            theta = 0.0
        elif a * b < 0.0:
            lo, hi = 0.0, 1.0
            glo = a
            h = traj.t[i + 1] - traj.t[i]
            while (hi - lo) * h > 1e-10:
                mid = 0.5 * (lo + hi)
                gm = dense_eval(traj.rcont[i], mid)[0] - section.x
                if gm == 0.0:
                    lo = hi = mid
                    break
                if math.copysign(1.0, gm) == math.copysign(1.0, glo):
                    lo, glo = mid, gm
                else:
                    hi = mid
            theta = 0.5 * (lo + hi)
        else:
            continue
        t_hit = traj.t[i] + theta * (traj.t[i + 1] - traj.t[i])
        if t_hit <= 1e-12:
            continue
        state = dense_eval(traj.rcont[i], theta)
        if state[1] <= section.y_base:
            continue
        v = sign * np.asarray(field.rhs(t_hit, state, field.par), dtype=float)
        if abs(v[0]) <= 1e-12 * (abs(v[1]) + 1.0):
            raise NumericsError(f"tangential section crossing at t={t_hit}")
        yield float(t_hit), float(state[1]), math.copysign(1.0, v[0])
        found += 1
        if found >= limit:
            return


def section_crossings(field: PlanarField, start, section: Section,
                      opts: IntegratorOptions = IntegratorOptions(),
                      limit: int = 64):
    """Crossings of the section line by the orbit of start, as a list of
    (t, y, xdot_sign) tuples.  Used to seed displacement-map brackets from
    published initial values."""
    traj = _run(field, np.asarray(start, dtype=float), opts, store_dense=True)
    sign = -1.0 if opts.direction == REVERSED else 1.0
    return list(_scan_crossings(field, traj, section, sign, limit))


def bracket_from_crossings(field: PlanarField, starts, section: Section,
                           opts: IntegratorOptions = IntegratorOptions()
                           ) -> Tuple[float, float]:
    """Displacement bracket seeded from orbits: the first crossing height
    in each x-direction over the start points, sorted.  A spiral crossing
    the section in both directions straddles whatever it winds around."""
    first = {}
    for start in starts:
        for _t, y, d in section_crossings(field, start, section, opts, limit=8):
            if d not in first:
                first[d] = y
        if len(first) == 2:
            break
    if len(first) < 2:
        raise DomainError("seed orbits cross the section in one direction only")
    lo, hi = sorted(first.values())
    return lo, hi


def _first_return(field: PlanarField, section: Section, y0: float,
                  opts: IntegratorOptions) -> Tuple[float, float]:
    sign = -1.0 if opts.direction == REVERSED else 1.0
    start = np.array([section.x, y0])
    v0 = sign * np.asarray(field.rhs(0.0, start, field.par), dtype=float)
    if abs(v0[0]) <= 1e-12 * (abs(v0[1]) + 1.0):
        raise NumericsError("section crossing is tangential at the start point")
    want = math.copysign(1.0, v0[0])

    traj = _run(field, start, opts, store_dense=True)
    for t_hit, y_hit, xdir in _scan_crossings(field, traj, section, sign, 10 ** 9):
        if xdir == want:
            return y_hit, t_hit
    raise NumericsError(
        f"no same-direction return to x={section.x} within t_max={opts.t_max}")


def return_map(field: PlanarField, section: Section, y0: float,
               opts: IntegratorOptions = IntegratorOptions()) -> float:
    """Height of the first same-direction crossing of the section ray by
    the orbit started at (section.x, y0)."""
    return _first_return(field, section, y0, opts)[0]


@dataclass(frozen=True)
class CycleResult:
    section_point: Tuple[float, float]
    period: float
    multiplier: float
    stability: str
    converged: bool

    def __post_init__(self):
        if not self.period > 0.0:
            raise DomainError(f"cycle period must be positive, got {self.period}")

    def to_dict(self) -> dict:
        return {
            "section_point": list(self.section_point),
            "period": self.period,
            "multiplier": self.multiplier,
            "stability": self.stability,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_NEUTRAL_BAND = 1e-4


def find_cycle(field: PlanarField, bracket: Tuple[float, float],
               section: Section,
               opts: IntegratorOptions = IntegratorOptions()) -> CycleResult:
    """Bisection on the displacement d(y) = P(y) - y over the bracket.
    d must change sign across the bracket.  With Reversed options the
    cycle is located in reversed time (where it attracts) and the
    multiplier is reported in the forward-time convention (reciprocal)."""
    y_lo, y_hi = float(min(bracket)), float(max(bracket))
    if not (math.isfinite(y_lo) and math.isfinite(y_hi) and y_lo < y_hi):
        raise DomainError(f"invalid bracket {bracket}")
    width = y_hi - y_lo

    def disp(y):
        return return_map(field, section, y, opts) - y

    d_lo = disp(y_lo)
    d_hi = disp(y_hi)
    if d_lo == 0.0:
        y_star = y_lo
    elif d_hi == 0.0:
        y_star = y_hi
    elif math.copysign(1.0, d_lo) == math.copysign(1.0, d_hi):
        raise DomainError(
            f"displacement does not change sign over bracket ({d_lo:+.3e} at "
            f"{y_lo}, {d_hi:+.3e} at {y_hi}): no cycle is straddled")
    else:
        lo, hi, dl = y_lo, y_hi, d_lo
        for _ in range(80):
            if hi - lo <= 2e-9:
                break
            mid = 0.5 * (lo + hi)
            dm = disp(mid)
            if dm == 0.0:
                lo = hi = mid
                break
            if math.copysign(1.0, dm) == math.copysign(1.0, dl):
                lo, dl = mid, dm
            else:
                hi = mid
        y_star = 0.5 * (lo + hi)

    y_ret, period = _first_return(field, section, y_star, opts)
    converged = abs(y_ret - y_star) < 1e-8

    delta = 1e-5 * width
    mult = (return_map(field, section, y_star + delta, opts)
            - return_map(field, section, y_star - delta, opts)) / (2.0 * delta)
    if opts.direction == REVERSED:
        if mult == 0.0:
            raise NumericsError("zero reversed-time multiplier cannot be inverted")
        mult = 1.0 / mult
    size = abs(mult)
    if size < 1.0 - _NEUTRAL_BAND:
        stability = "Stable"
    elif size > 1.0 + _NEUTRAL_BAND:
        stability = "Unstable"
    else:
        stability = "Neutral"
    return CycleResult((section.x, y_star), period, mult, stability, converged)


def e4_trace(p: AlleeParams) -> float:
    """Jacobian trace at the interior equilibrium E4: on the critical
    curve it reduces to x4 F'(x4) - eps*gamma*y4."""
    rep = equilibria(p)
    if rep.E4 is None:
        raise DomainError(f"E4 does not exist at beta={p.beta}")
    x4, y4 = rep.E4.point
    return x4 * critical_slope(x4, p.m, p.n) - p.eps * p.gamma * y4


@dataclass(frozen=True)
class OnsetScan:
    beta_onset: float
    lambda_onset: float
    beta_predicted: float
    lambda_predicted: float

    def to_dict(self) -> dict:
        return {
            "beta_onset": self.beta_onset,
            "lambda_onset": self.lambda_onset,
            "beta_predicted": self.beta_predicted,
            "lambda_predicted": self.lambda_predicted,
        }


def hopf_onset_scan(p: AlleeParams, beta_range: Tuple[float, float],
                    steps: int) -> OnsetScan:
    """Locate the beta where the E4 trace crosses zero by scanning and
    bisection, and convert it to the template unfolding parameter.  The
    predicted values come from the leading-order onset curve
    lambda = gamma*y_M*eps/(2 Q)."""
    if steps < 2:
        raise DomainError(f"requires steps >= 2, got {steps}")
    b0, b1 = float(beta_range[0]), float(beta_range[1])
    if not b0 < b1:
        raise DomainError(f"invalid beta_range {beta_range}")

    def trace_at(beta):
        return e4_trace(AlleeParams(m=p.m, n=p.n, alpha=p.alpha, beta=beta,
                                    gamma=p.gamma, eps=p.eps))

    betas = np.linspace(b0, b1, steps)
    traces = [trace_at(b) for b in betas]
    lo = hi = None
    for i in range(steps - 1):
        if traces[i] == 0.0:
            lo = hi = betas[i]
            break
        if math.copysign(1.0, traces[i]) != math.copysign(1.0, traces[i + 1]):
            lo, hi = betas[i], betas[i + 1]
            break
    if lo is None:
        raise DomainError(
            f"E4 trace does not change sign over [{b0}, {b1}] with {steps} steps")
    if lo != hi:
        tl = trace_at(lo)
        for _ in range(200):
            if hi - lo <= 1e-15 * max(1.0, abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            tm = trace_at(mid)
            if tm == 0.0:
                lo = hi = mid
                break
            if math.copysign(1.0, tm) == math.copysign(1.0, tl):
                lo, tl = mid, tm
            else:
                hi = mid
    beta_onset = 0.5 * (lo + hi)

    xM, yM = fold_point(p.m, p.n)
    Q = math.sqrt(p.alpha * xM * yM)
    conversion = p.alpha * Q / (math.sqrt(p.m) - 1.0)
    beta_star = p.alpha * xM - p.gamma * yM
    lambda_pred = p.gamma * yM * p.eps / (2.0 * Q)
    return OnsetScan(
        beta_onset=beta_onset,
        lambda_onset=(beta_onset - beta_star) / conversion,
        beta_predicted=beta_star + lambda_pred * conversion,
        lambda_predicted=lambda_pred,
    )


REGION_X = (0.0, 1.0)
REGION_Y = (0.0, 2.0)


def region_excursion(p: AlleeParams, n_starts: int = 100, seed: int = 0,
                     t_max: float = 1e4, rel_tol: float = 1e-9,
                     abs_tol: float = 1e-12) -> float:
    """Worst excursion outside the box [0,1] x [0,2] over n_starts
    seeded uniform starts integrated to t_max.  The box is forward
    invariant for admissible parameters with (alpha-beta)/gamma <= 2, so
    the result should be at the integration-noise level."""
    rng = np.random.default_rng(seed)
    field = allee_field(p)
    core = _core_for(field.rhs)
    worst = 0.0
    for _ in range(n_starts):
        u0 = np.array([rng.uniform(*REGION_X), rng.uniform(*REGION_Y)])
        status, n, ts, ys, _ = core(field.par, u0, t_max, rel_tol, abs_tol,
                                    math.inf, 1.0, False)
        if status != STATUS_OK:
            raise NumericsError(f"invariance run failed with status {status}")
        xs = ys[:n + 1, 0]
        yv = ys[:n + 1, 1]
        exc = max(0.0,
                  float((-xs).max()), float((xs - REGION_X[1]).max()),
                  float((-yv).max()), float((yv - REGION_Y[1]).max()))
        worst = max(worst, exc)
    return worst
