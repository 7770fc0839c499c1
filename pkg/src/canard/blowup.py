"""Numeric oracle for the closed-form Hopf quantities.

The pipeline mechanically reproduces the construction that the closed
forms in `normalform` summarize: rescale to the family chart (x = r*x1,
y = r^2*y1, lam = r*lam1, eps = r^2, time divided by r), locate the
equilibrium, translate it to the origin, bring the linear part to
rotation form, and apply the planar first-Lyapunov-coefficient formula.
Everything here is independent of the omega/rho polynomials, so a fit of
l1_blowup over an r-grid is an end-to-end check of those polynomials.

Stage tags of PlanarPolySystem:
  blown     rescaled system, origin not yet an equilibrium
  centered  equilibrium translated to the origin
  rotated   linear part equals a*I + b*R with R = [[0,-1],[1,0]], so b is
            the x-coefficient of the second component (rotation speed)
  hopf      rotated and trace below 1e-12 (on the Hopf curve)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, NumericsError
from .jet import (
    Jet,
    jet_add,
    jet_compose,
    jet_diff,
    jet_eval,
    jet_from_terms,
    jet_mul,
    jet_recenter,
    jet_scale,
)
from .normalform import NormalFormCoefficients, rho_coefficients

STAGES = ("blown", "centered", "rotated", "hopf")

BRANCH_USE_N10 = "UseN10"
BRANCH_USE_M01 = "UseM01"
BRANCH_AUTO = "Auto"

_JET_DEGREE = 4  # cubic stages plus one guard order

# r-grading of the blown-up coefficients: m_ij = r^mu_ij * O(1),
# n_ij = r^nu_ij * O(1).  Dividing by these powers gives the hatted
# values the equilibrium series is written in.
_MU = {(1, 0): 1, (0, 1): 0, (2, 0): 0, (1, 1): 1, (0, 2): 2,
       (3, 0): 1, (2, 1): 2, (1, 2): 3, (0, 3): 4}
_NU = {(0, 0): 0, (1, 0): 0, (0, 1): 1, (2, 0): 1, (1, 1): 2,
       (0, 2): 3, (3, 0): 2, (2, 1): 3, (1, 2): 4, (0, 3): 5}


@dataclass(frozen=True)
class PlanarPolySystem:
    """Planar polynomial vector field as a pair of 2-variable jets."""

    fx: Jet
    fy: Jet
    stage: str
    r: float
    lambda1: float
    branch: Optional[str] = None

    def __post_init__(self):
        if self.stage not in STAGES:
            raise DomainError(f"unknown stage tag {self.stage!r}")
        if self.fx.nvars != 2 or self.fy.nvars != 2:
            raise DomainError("system jets must have nvars = 2")
        if self.fx.degree != self.fy.degree:
            raise DomainError("system jets must share the degree bound")
        if self.r <= 0.0:
            raise DomainError(f"r must be positive, got {self.r}")

    def linear_part(self) -> np.ndarray:
        return np.array([
            [self.fx.coeff((1, 0)), self.fx.coeff((0, 1))],
            [self.fy.coeff((1, 0)), self.fy.coeff((0, 1))],
        ])


@dataclass(frozen=True)
class EquilibriumSeries:
    """Equilibrium of the blown-up system as a series in r.

    The coefficients are O(1); the prediction is (sum p_k r^k,
    sum q_k r^k), accurate to O(r^4)."""

    p: Tuple[float, float, float, float]
    q: Tuple[float, float, float, float]

    def predict(self, r: float) -> Tuple[float, float]:
        x = ((self.p[3] * r + self.p[2]) * r + self.p[1]) * r + self.p[0]
        y = ((self.q[3] * r + self.q[2]) * r + self.q[1]) * r + self.q[0]
        return (x, y)


def scaled_coefficient_tables(nf: NormalFormCoefficients, r: float, lambda1: float
                              ) -> Tuple[Dict[Tuple[int, int], float], Dict[Tuple[int, int], float]]:
    """Closed-form coefficients of the rescaled system at radius r."""
    if r <= 0.0:
        raise DomainError(f"r must be positive, got {r}")
    r2 = r * r
    m = {
        (1, 0): r * nf.c10,
        (0, 1): -1.0 + r2 * nf.c01,
        (2, 0): 1.0 + r2 * nf.c20,
        (1, 1): r * (r2 * nf.c11 - nf.a10),
        (0, 2): r2 * (r2 * nf.c02 - nf.a01),
        (3, 0): r * (nf.b10 + r2 * nf.c30),
        (2, 1): r2 * (r2 * nf.c21 - nf.a20),
        (1, 2): r2 * r * (r2 * nf.c12 - nf.a11),
        (0, 3): r2 * r2 * (r2 * nf.c03 - nf.a02),
    }
    n = {
        (0, 0): -lambda1,
        (1, 0): 1.0 - lambda1 * r * nf.e10,
        (0, 1): r * (nf.f00 - lambda1 * r * nf.e01),
        (2, 0): r * (nf.d10 - lambda1 * r * nf.e20),
        (1, 1): r2 * (nf.f10 - lambda1 * r * nf.e11),
        (0, 2): r2 * r * (nf.f01 - lambda1 * r * nf.e02),
        (3, 0): r2 * (nf.d20 - lambda1 * r * nf.e30),
        (2, 1): r2 * r * (nf.f20 - lambda1 * r * nf.e21),
        (1, 2): r2 * r2 * (nf.f11 - lambda1 * r * nf.e12),
        (0, 3): r2 * r2 * r * (nf.f02 - lambda1 * r * nf.e03),
    }
    return m, n


def blow_up(nf: NormalFormCoefficients, r: float, lambda1: float) -> PlanarPolySystem:
    """Rescaled system at radius r via the closed-form coefficient tables."""
    m, n = scaled_coefficient_tables(nf, r, lambda1)
    fx = jet_from_terms(2, _JET_DEGREE, m)
    fy = jet_from_terms(2, _JET_DEGREE, n)
    return PlanarPolySystem(fx, fy, "blown", r, lambda1)


def _template_jets(nf: NormalFormCoefficients, lam: float, eps: float) -> Tuple[Jet, Jet]:
    """The source system as 2-variable jets at numeric (lam, eps)."""
    h1 = {(0, 0): 1.0, (1, 0): nf.a10, (0, 1): nf.a01,
          (2, 0): nf.a20, (1, 1): nf.a11, (0, 2): nf.a02}
    h2 = {(0, 0): 1.0, (1, 0): nf.b10}
    h3 = {(1, 0): nf.c10, (0, 1): nf.c01, (2, 0): nf.c20, (1, 1): nf.c11,
          (0, 2): nf.c02, (3, 0): nf.c30, (2, 1): nf.c21, (1, 2): nf.c12,
          (0, 3): nf.c03}
    h4 = {(0, 0): 1.0, (1, 0): nf.d10, (2, 0): nf.d20}
    h5 = {(0, 0): 1.0, (1, 0): nf.e10, (0, 1): nf.e01, (2, 0): nf.e20,
          (1, 1): nf.e11, (0, 2): nf.e02, (3, 0): nf.e30, (2, 1): nf.e21,
          (1, 2): nf.e12, (0, 3): nf.e03}
    h6 = {(0, 0): nf.f00, (1, 0): nf.f10, (0, 1): nf.f01, (2, 0): nf.f20,
          (1, 1): nf.f11, (0, 2): nf.f02}

    def build(d):
        return jet_from_terms(2, _JET_DEGREE, d)

    x = jet_from_terms(2, _JET_DEGREE, {(1, 0): 1.0})
    y = jet_from_terms(2, _JET_DEGREE, {(0, 1): 1.0})
    fx = jet_add(
        jet_add(jet_scale(jet_mul(y, build(h1)), -1.0),
                jet_mul(jet_mul(x, x), build(h2))),
        jet_scale(build(h3), eps))
    fy = jet_add(
        jet_add(jet_mul(x, build(h4)), jet_scale(build(h5), -lam)),
        jet_mul(y, build(h6)))
    fy = jet_scale(fy, eps)
    return fx, fy


def blow_up_via_jets(nf: NormalFormCoefficients, r: float, lambda1: float) -> PlanarPolySystem:
    """Same rescaling done by jet composition; cross-checks the tables.

    Substitutes x = r*x1, y = r^2*y1 at numeric r into the source jets,
    then divides the fast component by r^2 and the slow one by r^3
    (the time rescaling)."""
    if r <= 0.0:
        raise DomainError(f"r must be positive, got {r}")
    lam = r * lambda1
    eps = r * r
    fx, fy = _template_jets(nf, lam, eps)
    sub_x = jet_from_terms(2, _JET_DEGREE, {(1, 0): r})
    sub_y = jet_from_terms(2, _JET_DEGREE, {(0, 1): eps})
    fx1 = jet_scale(jet_compose(fx, [sub_x, sub_y]), r ** -2)
    fy1 = jet_scale(jet_compose(fy, [sub_x, sub_y]), r ** -3)
    return PlanarPolySystem(fx1, fy1, "blown", r, lambda1)


def _hatted_tables(sys: PlanarPolySystem) -> Tuple[Dict, Dict]:
    r = sys.r
    m = {ij: sys.fx.coeff(ij) / r ** mu for ij, mu in _MU.items()}
    n = {ij: sys.fy.coeff(ij) / r ** nu for ij, nu in _NU.items()}
    return m, n


def equilibrium_series(sys: PlanarPolySystem) -> EquilibriumSeries:
    """Series coefficients of the blown-up equilibrium near the origin."""
    m, n = _hatted_tables(sys)
    m10, m01, m20, m11, m02 = m[(1, 0)], m[(0, 1)], m[(2, 0)], m[(1, 1)], m[(0, 2)]
    m30, m21, m12 = m[(3, 0)], m[(2, 1)], m[(1, 2)]
    n00, n10, n01, n20, n11, n02 = (n[(0, 0)], n[(1, 0)], n[(0, 1)],
                                    n[(2, 0)], n[(1, 1)], n[(0, 2)])
    n30, n21 = n[(3, 0)], n[(2, 1)]
    if n10 == 0.0:
        raise DomainError("slow linear coefficient n10 must be nonzero")
    if m01 == 0.0:
        raise DomainError("fast linear coefficient m01 must be nonzero")

    p0 = -n00 / n10
    q0 = -m20 * n00 ** 2 / (m01 * n10 ** 2)
    p1 = -(p0 ** 2 * n20 + q0 * n01) / n10
    q1 = -p0 * (p0 ** 2 * (m30 * n10 - 2 * m20 * n20)
                + q0 * (m11 * n10 - 2 * m20 * n01)
                + m10 * n10) / (m01 * n10)
    p2 = -(p0 * (p0 ** 2 * n30 + 2 * p1 * n20 + q0 * n11) + q1 * n01) / n10
    q2 = (p0 ** 2 * (p1 * (4 * m20 * n20 - 3 * m30 * n10)
                     + q0 * (2 * m20 * n11 - m21 * n10))
          + p0 * q1 * (2 * m20 * n01 - m11 * n10)
          - n10 * (p1 * q0 * m11 + p1 * (p1 * m20 + m10) + q0 ** 2 * m02)
          + 2 * p0 ** 4 * m20 * n30) / (m01 * n10)
    p3 = -(p0 * q1 * n11 + q0 * (p0 ** 2 * n21 + p1 * n11)
           + 3 * p1 * p0 ** 2 * n30 + 2 * p2 * p0 * n20 + p1 ** 2 * n20
           + q2 * n01 + q0 ** 2 * n02) / n10
    q3 = (2 * p0 ** 3 * m20 * (3 * p1 * n30 + q0 * n21)
          + p0 ** 2 * (p2 * (4 * m20 * n20 - 3 * m30 * n10)
                       + q1 * (2 * m20 * n11 - m21 * n10))
          + p0 * (2 * p1 * q0 * (m20 * n11 - m21 * n10)
                  + p1 ** 2 * (2 * m20 * n20 - 3 * m30 * n10)
                  + q2 * (2 * m20 * n01 - m11 * n10)
                  + q0 ** 2 * (2 * m20 * n02 - m12 * n10))
          - n10 * (p1 * q1 * m11 + q0 * (p2 * m11 + 2 * q1 * m02)
                   + p2 * (2 * p1 * m20 + m10))) / (m01 * n10)

    for v in (p0, p1, p2, p3, q0, q1, q2, q3):
        if not math.isfinite(v):
            raise NumericsError("equilibrium series coefficient overflowed")
    return EquilibriumSeries((p0, p1, p2, p3), (q0, q1, q2, q3))


def find_equilibrium(sys: PlanarPolySystem,
                     guess: Optional[Tuple[float, float]] = None,
                     tol: float = 1e-12,
                     max_iter: int = 50) -> Tuple[float, float]:
    """Newton refinement of the equilibrium, seeded by the series head."""
    if guess is None:
        guess = equilibrium_series(sys).predict(sys.r)
    dfx_dx = jet_diff(sys.fx, 0)
    dfx_dy = jet_diff(sys.fx, 1)
    dfy_dx = jet_diff(sys.fy, 0)
    dfy_dy = jet_diff(sys.fy, 1)
    x, y = float(guess[0]), float(guess[1])
    for _ in range(max_iter):
        fx = jet_eval(sys.fx, (x, y))
        fy = jet_eval(sys.fy, (x, y))
        # one extra step after meeting tol polishes the root to the
        # floating-point floor (downstream trace gates need the margin)
        converged = max(abs(fx), abs(fy)) < tol
        j11 = jet_eval(dfx_dx, (x, y))
        j12 = jet_eval(dfx_dy, (x, y))
        j21 = jet_eval(dfy_dx, (x, y))
        j22 = jet_eval(dfy_dy, (x, y))
        det = j11 * j22 - j12 * j21
        if det == 0.0 or not math.isfinite(det):
            raise NumericsError("singular Jacobian in equilibrium refinement")
        x -= (j22 * fx - j12 * fy) / det
        y -= (-j21 * fx + j11 * fy) / det
        if converged:
            return (x, y)
    raise NumericsError(f"equilibrium refinement did not reach {tol} in {max_iter} iterations")


def translate_to_equilibrium(sys: PlanarPolySystem, eq: Tuple[float, float]) -> PlanarPolySystem:
    """Recenter the system at eq; requires eq to be an equilibrium."""
    res = max(abs(jet_eval(sys.fx, eq)), abs(jet_eval(sys.fy, eq)))
    if res > 1e-10:
        raise DomainError(f"residual at proposed equilibrium is {res:.3e} > 1e-10")
    fx = jet_recenter(sys.fx, eq)
    fy = jet_recenter(sys.fy, eq)
    zero2 = (0, 0)
    fx = jet_from_terms(2, fx.degree, {k: v for k, v in fx.coeffs.items() if k != zero2})
    fy = jet_from_terms(2, fy.degree, {k: v for k, v in fy.coeffs.items() if k != zero2})
    return PlanarPolySystem(fx, fy, "centered", sys.r, sys.lambda1)


def _resolve_branch(branch: str, n10: float, m01: float) -> str:
    if branch == BRANCH_AUTO:
        return BRANCH_USE_N10 if abs(n10) >= abs(m01) else BRANCH_USE_M01
    if branch in (BRANCH_USE_N10, BRANCH_USE_M01):
        return branch
    raise DomainError(f"unknown branch {branch!r}")


def normalize_linear(sys: PlanarPolySystem, branch: str = BRANCH_AUTO) -> PlanarPolySystem:
    """Linear change of variables making the linear part a scaled rotation.

    After the transform the linear part is a*I + b*R with
    R = [[0, -1], [1, 0]], where a = trace/2 and b is read off the
    x-coefficient of the second component; eigenvalues are a +/- i*b.
    The two branches use different pivots and give different (similar)
    nonlinear parts; the Lyapunov coefficients of the branches agree up
    to the positive factor |m01_bar / n10_bar|."""
    m10 = sys.fx.coeff((1, 0))
    m01 = sys.fx.coeff((0, 1))
    n10 = sys.fy.coeff((1, 0))
    n01 = sys.fy.coeff((0, 1))
    M = -(m10 + n01)
    N = m10 * n01 - m01 * n10
    disc = 4.0 * N - M * M
    if disc <= 0.0:
        raise DomainError(f"4*N - M^2 = {disc:.3e} must be positive (complex eigenvalues)")
    use = _resolve_branch(branch, n10, m01)
    s = math.sqrt(disc)
    rt2 = math.sqrt(2.0)
    if use == BRANCH_USE_N10:
        if n10 == 0.0:
            raise DomainError("branch UseN10 requires n10 != 0")
        T = np.array([[-rt2 * n10, rt2 * (m10 - n01) / 2.0],
                      [0.0, rt2 / 2.0 * s]])
    else:
        if m01 == 0.0:
            raise DomainError("branch UseM01 requires m01 != 0")
        T = np.array([[rt2 * (n01 - m10) / 2.0, -rt2 * m01],
                      [rt2 / 2.0 * s, 0.0]])
    Tinv = np.linalg.inv(T)
    deg = sys.fx.degree
    sub0 = jet_from_terms(2, deg, {(1, 0): Tinv[0, 0], (0, 1): Tinv[0, 1]})
    sub1 = jet_from_terms(2, deg, {(1, 0): Tinv[1, 0], (0, 1): Tinv[1, 1]})
    fz1 = jet_compose(sys.fx, [sub0, sub1])
    fz2 = jet_compose(sys.fy, [sub0, sub1])
    g1 = jet_add(jet_scale(fz1, T[0, 0]), jet_scale(fz2, T[0, 1]))
    g2 = jet_add(jet_scale(fz1, T[1, 0]), jet_scale(fz2, T[1, 1]))
    stage = "hopf" if abs(g1.coeff((1, 0)) + g2.coeff((0, 1))) < 1e-12 else "rotated"
    return PlanarPolySystem(g1, g2, stage, sys.r, sys.lambda1, branch=use)


def _trace_half_at_equilibrium(nf: NormalFormCoefficients, r: float, lambda1: float) -> float:
    sys = blow_up(nf, r, lambda1)
    eq = find_equilibrium(sys)
    tr = (jet_eval(jet_diff(sys.fx, 0), eq) + jet_eval(jet_diff(sys.fy, 1), eq))
    return tr / 2.0


def hopf_lambda1(nf: NormalFormCoefficients, r: float,
                 tol: float = 1e-12, max_iter: int = 50) -> float:
    """The value of lambda1 putting the blown-up equilibrium on the Hopf
    curve (zero linear trace) at radius r.  Newton iteration with a
    finite-difference derivative, seeded by the series head rho1*r."""
    if not 0.0 < r <= 0.2:
        raise DomainError(f"r must lie in (0, 0.2], got {r}")
    lam = rho_coefficients(nf).rho1 * r
    for _ in range(max_iter):
        t = _trace_half_at_equilibrium(nf, r, lam)
        # one extra step after meeting tol polishes the residual to the
        # floating-point floor (the Lyapunov gate needs the margin)
        converged = abs(t) < tol
        h = 1e-6 * max(1.0, abs(lam))
        tp = _trace_half_at_equilibrium(nf, r, lam + h)
        tm = _trace_half_at_equilibrium(nf, r, lam - h)
        dt = (tp - tm) / (2.0 * h)
        if dt == 0.0 or not math.isfinite(dt):
            raise NumericsError("flat trace derivative in Hopf location")
        lam -= t / dt
        if converged:
            return lam
    raise NumericsError(f"Hopf location did not reach |trace|/2 < {tol} in {max_iter} iterations")


def lyapunov_DF(sys: PlanarPolySystem) -> float:
    """First Lyapunov coefficient of a system whose linear part is a
    scaled rotation (zero trace).  Uses the classical planar formula on
    the stored jet coefficients; beta0 is the rotation speed, read off
    the x-coefficient of the second component."""
    g1, g2 = sys.fx, sys.fy
    trace = g1.coeff((1, 0)) + g2.coeff((0, 1))
    if abs(trace) >= 1e-12:
        raise DomainError(f"|linear trace| = {abs(trace):.3e} must be < 1e-12")
    beta0 = g2.coeff((1, 0))
    if beta0 == 0.0:
        raise DomainError("rotation coefficient beta0 must be nonzero")
    fxx = 2.0 * g1.coeff((2, 0))
    fxy = g1.coeff((1, 1))
    fyy = 2.0 * g1.coeff((0, 2))
    gxx = 2.0 * g2.coeff((2, 0))
    gxy = g2.coeff((1, 1))
    gyy = 2.0 * g2.coeff((0, 2))
    fxxx = 6.0 * g1.coeff((3, 0))
    fxyy = 2.0 * g1.coeff((1, 2))
    gxxy = 2.0 * g2.coeff((2, 1))
    gyyy = 6.0 * g2.coeff((0, 3))
    cubic = fxxx + fxyy + gxxy + gyyy
    mixed = (fxy * (fxx + fyy) - gxy * (gxx + gyy) - fxx * gxx + fyy * gyy) / beta0
    return (cubic + mixed) / 16.0


def l1_blowup(nf: NormalFormCoefficients, r: float,
              branch: str = BRANCH_USE_M01) -> float:
    """Blown-up first Lyapunov coefficient at radius r, on the Hopf curve.

    Default branch is UseM01: the closed-form series L1(r) =
    (omega1/16) r + (omega2/32) r^3 is stated in that frame, and the
    branches differ by the positive factor |m01_bar / n10_bar| = 1 + O(r),
    which would contaminate coefficient fits done across branches."""
    lam = hopf_lambda1(nf, r)
    sys = blow_up(nf, r, lam)
    eq = find_equilibrium(sys)
    centered = translate_to_equilibrium(sys, eq)
    rotated = normalize_linear(centered, branch)
    return lyapunov_DF(rotated)


def fit_odd_series(samples: Sequence[Tuple[float, float]],
                   powers: Sequence[int]) -> Tuple[np.ndarray, float]:
    """Least-squares fit of v(r) = sum_k c_k r^(powers[k]).

    Returns (coefficients aligned with powers, max abs residual).
    Columns are scaled to unit infinity-norm before solving, since the
    plain Vandermonde in r << 1 is badly conditioned."""
    powers = list(powers)
    if len(samples) < 2 * len(powers):
        raise DomainError(
            f"need >= {2 * len(powers)} samples for {len(powers)} powers, got {len(samples)}")
    rs = np.array([float(r) for r, _ in samples])
    vs = np.array([float(v) for _, v in samples])
    if len(set(rs.tolist())) != len(rs):
        raise DomainError("sample radii must be distinct")
    A = np.column_stack([rs ** p for p in powers])
    scale = np.max(np.abs(A), axis=0)
    if np.any(scale == 0.0):
        raise NumericsError("design matrix has a zero column (rank-deficient)")
    sol, _, rank, _ = np.linalg.lstsq(A / scale, vs, rcond=None)
    if rank < len(powers):
        raise NumericsError("rank-deficient design matrix in series fit")
    coeffs = sol / scale
    residual = float(np.max(np.abs(A @ coeffs - vs)))
    return coeffs, residual


def sample_record(rng: np.random.Generator,
                  constrain_omega1: bool = False,
                  r_check: float = 0.1,
                  disc_floor: float = 0.05,
                  max_tries: int = 200) -> NormalFormCoefficients:
    """Random coefficient record, uniform on [-1, 1] per entry, rejected
    unless the rotation stays well-defined (4N - M^2 > disc_floor) at the
    Hopf point for r = r_check.  With constrain_omega1 the a10 entry is
    overwritten to force omega1 = 0 (the degenerate stratum)."""
    from .normalform import COEFF_NAMES

    for _ in range(max_tries):
        vals = {name: float(rng.uniform(-1.0, 1.0)) for name in COEFF_NAMES}
        if constrain_omega1:
            vals["a10"] = 3.0 * vals["b10"] - 2.0 * vals["d10"] - 2.0 * vals["f00"]
        nf = NormalFormCoefficients.from_dict(vals)
        try:
            lam = hopf_lambda1(nf, r_check)
            sys = blow_up(nf, r_check, lam)
            eq = find_equilibrium(sys)
            centered = translate_to_equilibrium(sys, eq)
            m10 = centered.fx.coeff((1, 0))
            m01 = centered.fx.coeff((0, 1))
            n10 = centered.fy.coeff((1, 0))
            n01 = centered.fy.coeff((0, 1))
            disc = 4.0 * (m10 * n01 - m01 * n10) - (m10 + n01) ** 2
        except (DomainError, NumericsError):
            continue
        if disc > disc_floor:
            return nf
    raise NumericsError(f"no acceptable record in {max_tries} draws")
