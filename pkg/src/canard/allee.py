"""Predator-prey model with a strong Allee effect in the prey.

Dimensionless fast-time form with predator time scale eps:

    dx/dt = f(x, y) = x*(x/(m+x) - n - x - y)
    dy/dt = eps * g(x, y) = eps * y*(alpha*x - beta - gamma*y)

The prey nullcline y = F(x) = x/(m+x) - n - x is the curved part of the
critical set; it has a fold at M = (x_M, y_M) with x_M = sqrt(m) - m,
y_M = 1 - n + m - 2*sqrt(m), which lies in the open first quadrant iff

    0 < n < 1   and   0 < m < (1 - sqrt(n))^2.

This module computes equilibria, the critical branches, the reduction of
the model to the canonical slow-fast normal form near M (done by generic
jet transformations, with the closed-form leading coefficients as a
cross-check), the criticality case analysis in m, and the Hopf/canard
bifurcation curves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .errors import DomainError, NumericsError
from .jet import jet_from_terms, jet_mul
from .normalform import NormalFormCoefficients, compute_A

PARAM_NAMES = ("m", "n", "alpha", "beta", "gamma", "eps")


def _require_admissible(m: float, n: float, allow_boundary: bool = False) -> None:
    if not (0.0 < n < 1.0):
        raise DomainError(f"requires 0 < n < 1, got n={n}")
    bound = (1.0 - math.sqrt(n)) ** 2
    if allow_boundary:
        if not (0.0 < m <= bound):
            raise DomainError(
                f"requires 0 < m <= (1 - sqrt(n))^2 = {bound:.6g}, got m={m}")
    elif not (0.0 < m < bound):
        raise DomainError(
            f"requires 0 < m < (1 - sqrt(n))^2 = {bound:.6g}, got m={m}")


@dataclass(frozen=True)
class AlleeParams:
    m: float
    n: float
    alpha: float
    beta: float
    gamma: float
    eps: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"parameter {name} is not finite")
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"requires {name} > 0, got {getattr(self, name)}")
        if not (0.0 < self.eps <= 0.1):
            raise DomainError(f"requires 0 < eps <= 0.1, got eps={self.eps}")
        # boundary m = (1 - sqrt(n))^2 is allowed: it is the collision
        # of the fold with the prey-only pair (y_M = 0, delta1 = 0)
        _require_admissible(self.m, self.n, allow_boundary=True)

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "AlleeParams":
        unknown = sorted(set(data) - set(PARAM_NAMES))
        if unknown:
            raise DomainError(f"unknown parameter keys: {', '.join(unknown)}")
        missing = sorted(set(PARAM_NAMES) - set(data))
        if missing:
            raise DomainError(f"missing parameter keys: {', '.join(missing)}")
        try:
            vals = {k: float(data[k]) for k in PARAM_NAMES}
        except (TypeError, ValueError):
            raise DomainError("parameters must be numbers") from None
        return cls(**vals)


def critical_height(x: float, m: float, n: float) -> float:
    """F(x) = x/(m+x) - n - x, the curved critical branch."""
    return x / (m + x) - n - x


def critical_slope(x: float, m: float, n: float) -> float:
    """F'(x) = m/(m+x)^2 - 1."""
    return m / (m + x) ** 2 - 1.0


def _F_derivative(x: float, m: float, k: int) -> float:
    """k-th derivative of F for k >= 2: (-1)^(k+1) k! m / (m+x)^(k+1)."""
    return (-1.0) ** (k + 1) * math.factorial(k) * m / (m + x) ** (k + 1)


def fold_point(m: float, n: float) -> Tuple[float, float]:
    """Fold (x_M, y_M) of the curved critical branch."""
    _require_admissible(m, n, allow_boundary=True)
    xM = math.sqrt(m) - m
    yM = 1.0 - n + m - 2.0 * math.sqrt(m)
    if abs(critical_slope(xM, m, n)) > 1e-10:
        raise NumericsError("fold point fails the F'(x_M) = 0 check")
    if _F_derivative(xM, m, 2) >= 0.0:
        raise NumericsError("fold point fails the F''(x_M) < 0 check")
    return (xM, yM)


def boundary_roots(m: float, n: float) -> Tuple[float, Optional[float], Optional[float]]:
    """Roots of F(x) = 0, i.e. x^2 + (m+n-1)x + mn = 0.

    Returns (delta1, x1, x2) with x1 <= x2; a double root is returned in
    both slots, and (delta1, None, None) when the roots are complex."""
    delta1 = (1.0 - m - n) ** 2 - 4.0 * m * n
    if delta1 < 0.0:
        return (delta1, None, None)
    root = math.sqrt(delta1)
    x1 = ((1.0 - m - n) - root) / 2.0
    x2 = ((1.0 - m - n) + root) / 2.0
    return (delta1, x1, x2)


@dataclass(frozen=True)
class CriticalBranches:
    """The three normally hyperbolic pieces of the critical set.

    The y-axis {x = 0, y >= 0} is attracting (fast eigenvalue -n - y).
    The graph y = F(x) is attracting on (x_M, x2) and repelling on
    (x1, x_M), where x1 < x_M < x2 are the positive F-roots around the
    fold."""

    m: float
    n: float
    x1: float
    x2: float
    fold: Tuple[float, float]

    @property
    def attracting_interval(self) -> Tuple[float, float]:
        return (self.fold[0], self.x2)

    @property
    def repelling_interval(self) -> Tuple[float, float]:
        return (self.x1, self.fold[0])

    def height(self, x: float) -> float:
        return critical_height(x, self.m, self.n)

    def fast_eigenvalue_on_graph(self, x: float) -> float:
        """d f / d x restricted to y = F(x): equals x * F'(x)."""
        return x * critical_slope(x, self.m, self.n)

    def fast_eigenvalue_on_axis(self, y: float) -> float:
        return -self.n - y


def critical_branches(m: float, n: float) -> CriticalBranches:
    _require_admissible(m, n)
    delta1, x1, x2 = boundary_roots(m, n)
    if x1 is None:
        raise NumericsError("critical curve has no positive roots despite valid (m, n)")
    return CriticalBranches(m, n, x1, x2, fold_point(m, n))


@dataclass(frozen=True)
class Equilibrium:
    point: Tuple[float, float]
    kind: str


@dataclass(frozen=True)
class EquilibriaReport:
    E0: Equilibrium
    delta1: float
    delta2: float
    E1: Optional[Equilibrium]
    E2: Optional[Equilibrium]
    E3: Optional[Equilibrium]
    E4: Optional[Equilibrium]
    fold: Tuple[float, float]

    def to_dict(self) -> Dict:
        def enc(e):
            return None if e is None else {"point": list(e.point), "kind": e.kind}
        return {
            "E0": enc(self.E0), "E1": enc(self.E1), "E2": enc(self.E2),
            "E3": enc(self.E3), "E4": enc(self.E4),
            "delta1": self.delta1, "delta2": self.delta2,
            "fold": list(self.fold),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def model_rhs(x: float, y: float, p: AlleeParams) -> Tuple[float, float]:
    """(dx/dt, dy/dt) of the model in fast time."""
    f = x * (x / (p.m + x) - p.n - x - y)
    g = y * (p.alpha * x - p.beta - p.gamma * y)
    return (f, p.eps * g)


def _jacobian(x: float, y: float, p: AlleeParams):
    fx = (2.0 * x * p.m + x * x) / (p.m + x) ** 2 - p.n - 2.0 * x - y
    fy = -x
    gx = p.eps * p.alpha * y
    gy = p.eps * (p.alpha * x - p.beta - 2.0 * p.gamma * y)
    return fx, fy, gx, gy


def _classify_point(x: float, y: float, p: AlleeParams) -> str:
    fx, fy, gx, gy = _jacobian(x, y, p)
    tr = fx + gy
    det = fx * gy - fy * gx
    if det < 0.0:
        return "saddle"
    disc = tr * tr - 4.0 * det
    shape = "node" if disc >= 0.0 else "focus"
    if tr < 0.0:
        return f"stable {shape}"
    if tr > 0.0:
        return f"unstable {shape}"
    return f"neutral {shape}"


def _checked(x: float, y: float, p: AlleeParams, kind: Optional[str] = None) -> Equilibrium:
    f, g = model_rhs(x, y, p)
    if max(abs(f), abs(g)) > 1e-10:
        raise NumericsError(f"equilibrium candidate ({x}, {y}) has residual > 1e-10")
    return Equilibrium((x, y), kind if kind is not None else _classify_point(x, y, p))


def equilibria(p: AlleeParams) -> EquilibriaReport:
    """All equilibria of the model with Jacobian-based type tags.

    The extinction state E0 = (0, 0) always exists.  The prey-only pair
    E1, E2 exists when the boundary quadratic has real roots; a double
    root is reported once, as E1 tagged degenerate.  The interior pair
    E3, E4 comes from the second quadratic, gated on x > 0, y >= 0."""
    E0 = _checked(0.0, 0.0, p, "stable node")
    delta1, x1, x2 = boundary_roots(p.m, p.n)
    E1 = E2 = None
    if x1 is not None and delta1 == 0.0:
        E1 = Equilibrium((x1, 0.0), "degenerate (boundary collision)")
    elif x1 is not None:
        E1 = _checked(x1, 0.0, p)
        E2 = _checked(x2, 0.0, p)

    ag = p.alpha + p.gamma
    b = (p.alpha * p.m - p.beta + p.gamma * (p.m + p.n - 1.0)) / ag
    c = p.m * (p.gamma * p.n - p.beta) / ag
    delta2 = b * b - 4.0 * c
    E3 = E4 = None
    if delta2 >= 0.0:
        root = math.sqrt(delta2)
        for slot, xr in (("E3", (-b - root) / 2.0), ("E4", (-b + root) / 2.0)):
            yr = (p.alpha * xr - p.beta) / p.gamma
            if xr > 0.0 and yr >= 0.0:
                eq = _checked(xr, yr, p)
                if slot == "E3":
                    E3 = eq
                else:
                    E4 = eq
    return EquilibriaReport(E0, delta1, delta2, E1, E2, E3, E4, fold_point(p.m, p.n))


def gamma_star(m: float, n: float, alpha: float, beta: float) -> float:
    """The gamma making the predator nullcline pass through the fold,
    i.e. the coincidence value solving beta + gamma*y_M = alpha*x_M."""
    xM, yM = fold_point(m, n)
    if yM == 0.0:
        raise DomainError("requires y_M > 0 (fold strictly inside the quadrant)")
    return (alpha * xM - beta) / yM


def _scale_factors(p: AlleeParams) -> Tuple[float, float, float, float, float]:
    xM, yM = fold_point(p.m, p.n)
    q2 = p.alpha * xM * yM
    if q2 <= 0.0:
        raise DomainError(f"requires alpha*x_M*y_M > 0, got {q2}")
    Q = math.sqrt(q2)
    rm = math.sqrt(p.m)
    sx = Q / (rm - 1.0)
    sy = p.alpha * yM / (rm - 1.0)
    return xM, yM, Q, sx, sy


def normal_form_coeffs(p: AlleeParams) -> NormalFormCoefficients:
    """Coefficient record of the model reduced to the canonical slow-fast
    template near the fold.

    The fold is translated to the origin and the axes/time are rescaled
    by generic jet operations (X = (x - x_M)/s_x, Y = (y - y_M)/s_y,
    tau = Q*t with Q = sqrt(alpha*x_M*y_M), s_x = Q/(sqrt(m)-1),
    s_y = alpha*y_M/(sqrt(m)-1)); the record is then read off the
    transformed jets.  The unfolding parameter of the template absorbs
    the offset beta - beta*, so the record itself does not depend on
    beta.  Entries that the template structure forces to vanish are
    checked to be zero within 1e-10 before the record is assembled."""
    xM, yM, Q, sx, sy = _scale_factors(p)
    deg = 4

    # fast part: f(x_M+u, y_M+v) = (x_M+u) * (sum_{k>=2} F^(k)/k! u^k - v),
    # then u = s_x X, v = s_y Y and division by s_x*Q
    fseries = {(k, 0): _F_derivative(xM, p.m, k) / math.factorial(k) * sx ** k
               for k in range(2, deg + 1)}
    fseries[(0, 1)] = -sy
    shell = jet_from_terms(2, deg, {(0, 0): xM, (1, 0): sx})
    fast = jet_mul(shell, jet_from_terms(2, deg, fseries))
    fast = jet_from_terms(2, deg, {k: v / (sx * Q) for k, v in fast.coeffs.items()})

    # slow part over (X, Y, L) where L is the template unfolding
    # parameter: beta - beta* = L * alpha * Q / (sqrt(m) - 1)
    lam_scale = p.alpha * Q / (math.sqrt(p.m) - 1.0)
    pred_shell = jet_from_terms(3, deg, {(0, 0, 0): yM, (0, 1, 0): sy})
    pred_lin = jet_from_terms(3, deg, {
        (1, 0, 0): p.alpha * sx, (0, 1, 0): -p.gamma * sy, (0, 0, 1): -lam_scale})
    slow = jet_mul(pred_shell, pred_lin)
    slow = jet_from_terms(3, deg, {k: v / (sy * Q) for k, v in slow.coeffs.items()})

    def expect(got: float, want: float, what: str) -> None:
        if abs(got - want) > 1e-10:
            raise NumericsError(f"template normalization failed: {what} = {got}, want {want}")

    expect(fast.coeff((0, 1)), -1.0, "fast Y coefficient")
    expect(fast.coeff((2, 0)), 1.0, "fast X^2 coefficient")
    expect(slow.coeff((1, 0, 0)), 1.0, "slow X coefficient")
    expect(slow.coeff((0, 0, 1)), -1.0, "slow L coefficient")
    expect(slow.coeff((0, 0, 2)), 0.0, "slow L^2 coefficient")

    vals = {
        "a10": -fast.coeff((1, 1)),
        "a01": -fast.coeff((0, 2)),
        "a20": -fast.coeff((2, 1)),
        "a11": -fast.coeff((1, 2)),
        "a02": -fast.coeff((0, 3)),
        "b10": fast.coeff((3, 0)),
        # the fast field has no eps-dependent block: every c entry is 0
        "d10": slow.coeff((2, 0, 0)),
        "d20": slow.coeff((3, 0, 0)),
        "e10": -slow.coeff((1, 0, 1)),
        "e01": -slow.coeff((0, 1, 1)),
        "e20": -slow.coeff((2, 0, 1)),
        "e11": -slow.coeff((1, 1, 1)),
        "e02": -slow.coeff((0, 2, 1)),
        "e30": -slow.coeff((3, 0, 1)),
        "e21": 0.0,
        "e12": 0.0,
        "e03": 0.0,
        "f00": slow.coeff((0, 1, 0)),
        "f10": slow.coeff((1, 1, 0)),
        "f01": slow.coeff((0, 2, 0)),
        "f20": slow.coeff((2, 1, 0)),
        "f11": slow.coeff((1, 2, 0)),
        "f02": slow.coeff((0, 3, 0)),
    }
    # degree-4 guard entries (x^2 y^2 etc.) are beyond the template order
    return NormalFormCoefficients.from_dict(vals)


def a5_of_beta(p: AlleeParams) -> float:
    """The slow linear damping coefficient with the actual beta folded in:
    (alpha*x_M - beta - 2*gamma*y_M)/Q.  At beta = beta* this equals the
    f00 entry of normal_form_coeffs."""
    xM, yM, Q, _, _ = _scale_factors(p)
    return (p.alpha * xM - p.beta - 2.0 * p.gamma * yM) / Q


@dataclass(frozen=True)
class PsiCaseReport:
    """Sign analysis of the criticality constant A = Psi(m)*y_M/(Q*(1-sqrt(m))).

    Psi(m) = 2*gamma*(1-sqrt(m)) + alpha - 3*alpha*sqrt(m) is strictly
    decreasing with root m* = ((alpha+2*gamma)/(3*alpha+2*gamma))^2, so
    the sign of A is the sign of Psi: positive below m*, negative above,
    zero at m*.  When n exceeds (2*alpha/(3*alpha+2*gamma))^2 every
    admissible m is below m*, hence A > 0 throughout."""

    psi: float
    m_star: float
    n_threshold: float
    tag: str
    predicted_sign: int


def psi_case_analysis(m: float, n: float, alpha: float, gamma: float) -> PsiCaseReport:
    _require_admissible(m, n)
    if alpha <= 0.0 or gamma <= 0.0:
        raise DomainError("requires alpha > 0 and gamma > 0")
    rm = math.sqrt(m)
    psi = 2.0 * gamma * (1.0 - rm) + alpha - 3.0 * alpha * rm
    m_star = ((alpha + 2.0 * gamma) / (3.0 * alpha + 2.0 * gamma)) ** 2
    n_threshold = (2.0 * alpha / (3.0 * alpha + 2.0 * gamma)) ** 2
    bound = (1.0 - math.sqrt(n)) ** 2
    tol = 1e-12 * (alpha + gamma)
    if n > n_threshold or m_star >= bound:
        tag, sign = "mstar-outside-range", 1
    elif abs(psi) <= tol:
        tag, sign = "m-at-mstar", 0
    elif m < m_star:
        tag, sign = "m-below-mstar", 1
    else:
        tag, sign = "m-above-mstar", -1
    return PsiCaseReport(psi, m_star, n_threshold, tag, sign)


def omega2_at_degeneracy(alpha: float, gamma: float, yM: float) -> float:
    """Closed form of omega2 on the degenerate stratum omega1 = 0.

    Evaluates gamma*(3a+2g)^2*sqrt(2*(a+2g)*yM)*(9*(3a+2g)*yM+4a)
    / (8*a^2*(a+2g)), which is positive for positive inputs; it agrees
    with omega_coefficients applied to the model record at m = m*."""
    if alpha <= 0.0 or gamma <= 0.0 or yM <= 0.0:
        raise DomainError("requires alpha, gamma, yM > 0")
    s = 3.0 * alpha + 2.0 * gamma
    t = alpha + 2.0 * gamma
    return (gamma * s * s * math.sqrt(2.0 * t * yM) * (9.0 * s * yM + 4.0 * alpha)
            / (8.0 * alpha * alpha * t))


@dataclass(frozen=True)
class ModelCurves:
    """Hopf and canard-explosion curves of the model near the fold.

    lambda_h, lambda_c are in template units; beta_h, beta_c are their
    model-space equivalents via beta = beta* + lambda * conversion, with
    conversion = alpha*Q/(sqrt(m)-1) (negative for m < 1: increasing
    lambda moves beta below beta*)."""

    lambda_h: float
    lambda_c: float
    beta_star: float
    beta_h: float
    beta_c: float
    conversion: float
    A: float


def model_bifurcation_curves(p: AlleeParams) -> ModelCurves:
    gs = gamma_star(p.m, p.n, p.alpha, p.beta)
    if abs(p.gamma - gs) > 1e-6:
        raise DomainError(
            f"requires gamma = gamma_star within 1e-6 (gamma={p.gamma}, gamma_star={gs:.8g})")
    delta1, _, _ = boundary_roots(p.m, p.n)
    if delta1 <= 0.0:
        raise DomainError(f"requires delta1 > 0, got {delta1}")
    if 1.0 - p.m - p.n <= 0.0:
        raise DomainError(f"requires 1 - m - n > 0, got {1.0 - p.m - p.n}")
    xM, yM, Q, _, _ = _scale_factors(p)
    a5 = a5_of_beta(p)
    A = compute_A(normal_form_coeffs(p))
    lambda_h = -(a5 / 2.0) * p.eps
    lambda_c = -(a5 / 2.0 + A / 8.0) * p.eps
    conversion = p.alpha * Q / (math.sqrt(p.m) - 1.0)
    beta_star = p.alpha * xM - p.gamma * yM
    return ModelCurves(
        lambda_h=lambda_h,
        lambda_c=lambda_c,
        beta_star=beta_star,
        beta_h=beta_star + lambda_h * conversion,
        beta_c=beta_star + lambda_c * conversion,
        conversion=conversion,
        A=A,
    )
