"""Slow divergence integral along canard segments of the Allee model.

A canard cycle at depth s follows the attracting branch of the critical
curve from height y_M - s up to the fold, then the repelling branch back
down to the same height.  The accumulated fast divergence along that
slow passage,

    I(s) = integral of d f / d x in slow time,

controls the stability and the number of limit cycles such a canard can
spawn: I is smooth in s and its sign is pinned by an affine function
Phi(y), so I vanishes at most once and at most one cycle can bifurcate.

All evaluations thread an offset lambda0 through the predator mortality
(beta -> beta + lambda0), which is how the canard family is unfolded in
the model's own parameters."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Tuple

from scipy.integrate import IntegrationWarning, quad

from .allee import (
    AlleeParams,
    boundary_roots,
    critical_height,
    critical_slope,
    equilibria,
    fold_point,
    gamma_star,
)
from .errors import DomainError, NumericsError


def _shifted(p: AlleeParams, lambda0: float) -> AlleeParams:
    if lambda0 == 0.0:
        return p
    return AlleeParams(m=p.m, n=p.n, alpha=p.alpha, beta=p.beta + lambda0,
                       gamma=p.gamma, eps=p.eps)


def branch_inverse(y: float, p: AlleeParams) -> Tuple[float, float]:
    """Preimages of height y under the critical curve: F(x) = F(sigma) = y
    with sigma <= x_M <= x.  Solves x^2 + (y+n+m-1)x + m(n+y) = 0; the
    discriminant is (1-m-n-y)^2 - 4m(n+y), nonnegative exactly for
    y <= y_M."""
    _, yM = fold_point(p.m, p.n)
    if not (0.0 <= y <= yM):
        raise DomainError(f"requires 0 <= y <= y_M = {yM:.8g}, got y={y}")
    t = 1.0 - p.m - p.n - y
    disc = t * t - 4.0 * p.m * (p.n + y)
    if disc < 0.0:
        if disc < -1e-12 * max(1.0, t * t):
            raise DomainError(f"height y={y} lies above the fold (negative discriminant)")
        disc = 0.0
    root = math.sqrt(disc)
    x = 0.5 * (t + root)
    sigma = 0.5 * (t - root)
    for xi in (x, sigma):
        if abs(critical_height(xi, p.m, p.n) - y) > 1e-12:
            raise NumericsError(f"branch inverse at y={y} fails the F(x) = y check")
    return (x, sigma)


def h_slow(x: float, p: AlleeParams, lambda0: float = 0.0) -> float:
    """Fast divergence per unit slow height on the critical curve:
    x F'(x) / [F(x) (alpha x - (beta + lambda0) - gamma F(x))]."""
    F = critical_height(x, p.m, p.n)
    denom = F * (p.alpha * x - (p.beta + lambda0) - p.gamma * F)
    if denom == 0.0:
        raise NumericsError(f"slow flow vanishes at x={x}: h is singular there")
    return x * critical_slope(x, p.m, p.n) / denom


def psi_aux(x: float, p: AlleeParams, lambda0: float = 0.0) -> float:
    """(x - x_M) / [(m+x)^2 (alpha x - (beta+lambda0) - gamma F(x)) F(x)],
    the factor through which h(sigma) - h(x) factorizes."""
    F = critical_height(x, p.m, p.n)
    denom = (p.m + x) ** 2 * (p.alpha * x - (p.beta + lambda0) - p.gamma * F) * F
    if denom == 0.0:
        raise NumericsError(f"auxiliary factor singular at x={x}")
    return (p.m - math.sqrt(p.m) + x) / denom


def phi(y: float, p: AlleeParams) -> float:
    """Affine sign function of the integrand:
    (alpha+gamma) y + gamma + n (alpha+gamma) - sqrt(m) alpha - m (alpha+gamma)."""
    ag = p.alpha + p.gamma
    return ag * y + p.gamma + p.n * ag - math.sqrt(p.m) * p.alpha - p.m * ag


def phi_root(p: AlleeParams) -> float:
    """The unique zero y0 of phi (phi is increasing with slope alpha+gamma)."""
    ag = p.alpha + p.gamma
    return (math.sqrt(p.m) * p.alpha + (p.m - p.n) * ag - p.gamma) / ag


def factorization_gap(y: float, p: AlleeParams, lambda0: float = 0.0,
                      exponent: float = 1.5) -> Tuple[float, float]:
    """Both sides of the identity
    h(sigma) - h(x) = psi(sigma) psi(x) (sigma - x) m^exponent F(x) phi(y)
    at height y, for measuring the exponent.  The identity is exact (up
    to rounding) with exponent 3/2 when the predator nullcline passes
    through the fold (beta + lambda0 = alpha x_M - gamma y_M)."""
    x, sigma = branch_inverse(y, p)
    lhs = h_slow(sigma, p, lambda0) - h_slow(x, p, lambda0)
    rhs = (psi_aux(sigma, p, lambda0) * psi_aux(x, p, lambda0) * (sigma - x)
           * p.m ** exponent * critical_height(x, p.m, p.n) * phi(y, p))
    return (lhs, rhs)


def _depth_ceiling(p: AlleeParams) -> Tuple[float, float]:
    """(y_hat, s_max): admissible canard depths are 0 < s < s_max with
    s_max = y_M - y_hat, where y_hat is the height of the interior
    equilibrium on the repelling branch when it exists (the slow flow
    dies there), else 0."""
    _, yM = fold_point(p.m, p.n)
    rep = equilibria(p)
    yhat = rep.E3.point[1] if rep.E3 is not None else 0.0
    return (yhat, yM - yhat)


def _quad_checked(fn, lo, hi, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, _ = quad(fn, lo, hi, epsabs=1e-14, epsrel=1e-8, limit=200)
        except IntegrationWarning as exc:
            raise NumericsError(f"{what} quadrature did not converge: {exc}") from None
    if not math.isfinite(val):
        raise NumericsError(f"{what} quadrature returned a non-finite value")
    return val


def slow_divergence_integral(p: AlleeParams, lambda0: float, s: float) -> float:
    """I(s) via the height parametrization: the integral over
    y in (y_M - s, y_M) of h(x(y)) - h(sigma(y)), which runs up the
    attracting branch and back down the repelling one.  This form avoids
    the F'(x_M) = 0 turning point of the x parametrization."""
    peff = _shifted(p, lambda0)
    _, yM = fold_point(peff.m, peff.n)
    _, smax = _depth_ceiling(peff)
    if not (0.0 < s < smax):
        raise DomainError(f"requires 0 < s < {smax:.8g} (fold height minus y_hat), got s={s}")

    def integrand(y):
        x, sigma = branch_inverse(y, peff)
        return h_slow(x, peff) - h_slow(sigma, peff)

    return _quad_checked(integrand, yM - s, yM, "slow divergence (height form)")


def slow_divergence_integral_x(p: AlleeParams, lambda0: float, s: float) -> float:
    """Cross-check of I(s) in the x parametrization:
    -integral of h(x) F'(x) dx over (sigma_s, x_s), split at the fold
    where the integrand has a removable zero."""
    peff = _shifted(p, lambda0)
    xM, yM = fold_point(peff.m, peff.n)
    _, smax = _depth_ceiling(peff)
    if not (0.0 < s < smax):
        raise DomainError(f"requires 0 < s < {smax:.8g} (fold height minus y_hat), got s={s}")
    x_s, sigma_s = branch_inverse(yM - s, peff)

    def integrand(x):
        return h_slow(x, peff) * critical_slope(x, peff.m, peff.n)

    lo = _quad_checked(integrand, sigma_s, xM, "slow divergence (x form, repelling)")
    hi = _quad_checked(integrand, xM, x_s, "slow divergence (x form, attracting)")
    return -(lo + hi)


@dataclass(frozen=True)
class SdiProfile:
    s_grid: Tuple[float, ...]
    values: Tuple[float, ...]
    zero_count: int
    case: str

    def __post_init__(self):
        if len(self.s_grid) != len(self.values):
            raise DomainError("s_grid and values must have equal length")
        if any(b <= a for a, b in zip(self.s_grid, self.s_grid[1:])):
            raise DomainError("s_grid must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "s_grid": list(self.s_grid),
            "values": list(self.values),
            "zero_count": self.zero_count,
            "case": self.case,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _count_sign_changes(values) -> int:
    signs = [v for v in (math.copysign(1.0, v) if v != 0.0 else 0.0 for v in values)
             if v != 0.0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def cyclicity_report(p: AlleeParams, grid_size: int) -> SdiProfile:
    """Profile of I(s) over a uniform depth grid, with a sign-change
    count (refined once around each detected change) and the case tag
    from the phi analysis.  Requires the coincidence configuration
    gamma = gamma_star (within 1e-6) plus delta1 > 0 and 1 - m - n > 0;
    under these the zero count is at most one."""
    if grid_size < 2:
        raise DomainError(f"requires grid_size >= 2, got {grid_size}")
    gs = gamma_star(p.m, p.n, p.alpha, p.beta)
    if abs(p.gamma - gs) > 1e-6:
        raise DomainError(
            f"requires gamma = gamma_star within 1e-6 (gamma={p.gamma}, gamma_star={gs:.8g})")
    delta1, _, _ = boundary_roots(p.m, p.n)
    if delta1 <= 0.0:
        raise DomainError(f"requires delta1 > 0, got {delta1}")
    if 1.0 - p.m - p.n <= 0.0:
        raise DomainError(f"requires 1 - m - n > 0, got {1.0 - p.m - p.n}")

    _, yM = fold_point(p.m, p.n)
    _, smax = _depth_ceiling(p)
    grid = [smax * i / (grid_size + 1) for i in range(1, grid_size + 1)]
    values = [slow_divergence_integral(p, 0.0, s) for s in grid]

    refined_s = list(grid)
    refined_v = list(values)
    inserted = 0
    for i in range(len(grid) - 1):
        if values[i] != 0.0 and values[i + 1] != 0.0 and (
                math.copysign(1.0, values[i]) != math.copysign(1.0, values[i + 1])):
            mid = 0.5 * (grid[i] + grid[i + 1])
            refined_s.insert(i + 1 + inserted, mid)
            refined_v.insert(i + 1 + inserted, slow_divergence_integral(p, 0.0, mid))
            inserted += 1
    zero_count = _count_sign_changes(refined_v)

    y0 = phi_root(p)
    if y0 >= yM:
        case = "phi-negative"
    elif y0 <= 0.0:
        case = "phi-positive"
    else:
        case = "phi-sign-change"
    return SdiProfile(tuple(grid), tuple(values), zero_count, case)
