import math

import numpy as np
import pytest

from canard.allee import (
    AlleeParams,
    critical_height,
    fold_point,
    gamma_star,
    psi_case_analysis,
)
from canard.errors import DomainError
from canard.sdi import (
    SdiProfile,
    branch_inverse,
    cyclicity_report,
    factorization_gap,
    h_slow,
    phi,
    phi_root,
    slow_divergence_integral,
    slow_divergence_integral_x,
)


def coincident(m, n, alpha, gamma, eps=0.01):
    """Parameters with the predator nullcline through the fold."""
    xM, yM = fold_point(m, n)
    beta = alpha * xM - gamma * yM
    if beta <= 0.0:
        raise ValueError("inadmissible combination")
    return AlleeParams(m=m, n=n, alpha=alpha, beta=beta, gamma=gamma, eps=eps)


# a coincidence set whose phi changes sign inside (0, y_M)
P_CHANGE = coincident(0.28, 0.02, 0.8, 0.6)
# m above m*(0.8, 0.4) = 0.25: phi < 0 throughout
P_NEG = coincident(0.35, 0.1, 0.8, 0.4)


def random_coincident(rng, **kw):
    while True:
        n = float(rng.uniform(0.05, 0.5))
        bound = (1.0 - math.sqrt(n)) ** 2
        m = float(rng.uniform(0.3 * bound, 0.9 * bound))
        alpha = float(rng.uniform(0.3, 1.5))
        gamma = float(rng.uniform(0.1, 1.0))
        xM, yM = fold_point(m, n)
        beta = alpha * xM - gamma * yM
        if beta > 1e-3:
            return AlleeParams(m=m, n=n, alpha=alpha, beta=beta, gamma=gamma,
                               eps=0.01, **kw)


class TestBranchInverse:
    def test_fold_height_double_root(self):
        xM, yM = fold_point(P_CHANGE.m, P_CHANGE.n)
        x, sigma = branch_inverse(yM, P_CHANGE)
        assert abs(x - xM) < 1e-7
        assert abs(sigma - xM) < 1e-7

    def test_preimages_bracket_fold(self):
        xM, yM = fold_point(P_CHANGE.m, P_CHANGE.n)
        for frac in (0.1, 0.5, 0.9):
            x, sigma = branch_inverse(frac * yM, P_CHANGE)
            assert sigma < xM < x

    def test_heights_recovered(self):
        rng = np.random.default_rng(3)
        _, yM = fold_point(P_CHANGE.m, P_CHANGE.n)
        for _ in range(40):
            y = float(rng.uniform(0.0, yM))
            x, sigma = branch_inverse(y, P_CHANGE)
            assert abs(critical_height(x, P_CHANGE.m, P_CHANGE.n) - y) < 1e-12
            assert abs(critical_height(sigma, P_CHANGE.m, P_CHANGE.n) - y) < 1e-12

    def test_above_fold_rejected(self):
        _, yM = fold_point(P_CHANGE.m, P_CHANGE.n)
        with pytest.raises(DomainError):
            branch_inverse(yM + 0.01, P_CHANGE)
        with pytest.raises(DomainError):
            branch_inverse(-0.01, P_CHANGE)


class TestPhi:
    def test_slope(self):
        assert abs((phi(0.3, P_CHANGE) - phi(0.1, P_CHANGE)) / 0.2
                   - (P_CHANGE.alpha + P_CHANGE.gamma)) < 1e-12

    def test_root(self):
        assert abs(phi(phi_root(P_CHANGE), P_CHANGE)) < 1e-14

    def test_value_at_fold_height(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            p = random_coincident(rng)
            _, yM = fold_point(p.m, p.n)
            want = p.alpha + 2.0 * p.gamma - (3.0 * p.alpha + 2.0 * p.gamma) * math.sqrt(p.m)
            assert abs(phi(yM, p) - want) < 1e-12

    def test_near_zero_at_degenerate_parameters(self):
        # at m = m*(alpha, gamma) the fold height is the phi root; the
        # six-digit m below is the rounded m*, so phi(y_M) is only near 0
        p = coincident(0.263075, 0.1, 0.8, 0.4424)
        _, yM = fold_point(p.m, p.n)
        assert abs(phi(yM, p)) < 2e-4
        mstar = psi_case_analysis(0.2, 0.1, 0.8, 0.4424).m_star
        pstar = coincident(mstar, 0.1, 0.8, 0.4424)
        _, yMs = fold_point(pstar.m, pstar.n)
        assert abs(phi(yMs, pstar)) < 1e-12


class TestFactorization:
    def test_exact_with_three_halves(self):
        _, yM = fold_point(P_CHANGE.m, P_CHANGE.n)
        for frac in (0.2, 0.5, 0.8):
            lhs, rhs = factorization_gap(frac * yM, P_CHANGE, exponent=1.5)
            assert abs(lhs - rhs) < 1e-10 * abs(lhs)

    def test_other_exponent_fails(self):
        _, yM = fold_point(P_CHANGE.m, P_CHANGE.n)
        lhs, rhs = factorization_gap(0.5 * yM, P_CHANGE, exponent=2.0 / 3.0)
        assert abs(lhs - rhs) > 0.5 * abs(lhs)

    def test_pointwise_sign_opposes_phi(self):
        rng = np.random.default_rng(17)
        _, yM = fold_point(P_CHANGE.m, P_CHANGE.n)
        y0 = phi_root(P_CHANGE)
        for _ in range(20):
            y = float(rng.uniform(0.05 * yM, 0.98 * yM))
            if abs(y - y0) < 1e-3:
                continue
            x, sigma = branch_inverse(y, P_CHANGE)
            diff = h_slow(sigma, P_CHANGE) - h_slow(x, P_CHANGE)
            assert math.copysign(1.0, diff) == -math.copysign(1.0, phi(y, P_CHANGE))


class TestIntegral:
    def test_vanishes_with_depth(self):
        assert abs(slow_divergence_integral(P_CHANGE, 0.0, 1e-6)) < 1e-6

    def test_sign_follows_phi_positive_case(self):
        # y0 <= 0: phi > 0 on the whole height range
        p = coincident(0.2, 0.05, 0.8, 0.6)
        assert phi_root(p) <= 0.0
        _, yM = fold_point(p.m, p.n)
        for s in (0.1 * yM, 0.4 * yM, 0.8 * yM):
            assert slow_divergence_integral(p, 0.0, s) > 0.0

    def test_sign_follows_phi_negative_case(self):
        _, yM = fold_point(P_NEG.m, P_NEG.n)
        assert phi_root(P_NEG) >= yM
        for s in (0.1 * yM, 0.4 * yM, 0.8 * yM):
            assert slow_divergence_integral(P_NEG, 0.0, s) < 0.0

    def test_forms_agree(self):
        rng = np.random.default_rng(29)
        for _ in range(10):
            p = random_coincident(rng)
            _, yM = fold_point(p.m, p.n)
            s = float(rng.uniform(0.1, 0.9)) * yM
            iy = slow_divergence_integral(p, 0.0, s)
            ix = slow_divergence_integral_x(p, 0.0, s)
            assert abs(iy - ix) <= 1e-6 * max(abs(iy), 1e-12)

    def test_lambda0_threads_beta(self):
        p = P_CHANGE
        shifted = AlleeParams(m=p.m, n=p.n, alpha=p.alpha, beta=p.beta + 1e-3,
                              gamma=p.gamma, eps=p.eps)
        for x in (0.15, 0.3, 0.4):
            assert h_slow(x, p, 1e-3) == h_slow(x, shifted, 0.0)

    def test_interior_equilibrium_on_segment_is_flagged(self):
        # off the coincidence value the slow flow dies at E4 inside the
        # window, the integral genuinely diverges and quadrature says so
        from canard.errors import NumericsError

        with pytest.raises(NumericsError):
            slow_divergence_integral(P_CHANGE, 1e-3, 0.05)

    def test_depth_range_enforced(self):
        _, yM = fold_point(P_CHANGE.m, P_CHANGE.n)
        with pytest.raises(DomainError):
            slow_divergence_integral(P_CHANGE, 0.0, 0.0)
        with pytest.raises(DomainError):
            slow_divergence_integral(P_CHANGE, 0.0, yM * 1.01)


class TestCyclicityReport:
    def test_sign_change_case(self):
        prof = cyclicity_report(P_CHANGE, 24)
        assert prof.case == "phi-sign-change"
        assert prof.zero_count == 1
        assert len(prof.s_grid) == 24

    def test_negative_case(self):
        prof = cyclicity_report(P_NEG, 16)
        assert prof.case == "phi-negative"
        assert prof.zero_count == 0
        assert all(v < 0.0 for v in prof.values)

    def test_positive_case(self):
        p = coincident(0.2, 0.05, 0.8, 0.6)
        prof = cyclicity_report(p, 16)
        assert prof.case == "phi-positive"
        assert prof.zero_count == 0
        assert all(v > 0.0 for v in prof.values)

    def test_zero_count_bounded_on_random_sets(self):
        rng = np.random.default_rng(2025)
        for _ in range(10):
            p = random_coincident(rng)
            prof = cyclicity_report(p, 12)
            assert prof.zero_count <= 1

    def test_profile_continuity_under_refinement(self):
        coarse = cyclicity_report(P_CHANGE, 10)
        fine = cyclicity_report(P_CHANGE, 21)
        # coarse grid point i sits at fine grid point 2i+1 (same s_max split)
        for i, s in enumerate(coarse.s_grid):
            j = 2 * i + 1
            assert abs(fine.s_grid[j] - s) < 1e-12
            assert abs(fine.values[j] - coarse.values[i]) < 1e-7 * max(
                1.0, abs(coarse.values[i]))

    def test_gates(self):
        with pytest.raises(DomainError):
            cyclicity_report(P_CHANGE, 1)
        off = AlleeParams(m=P_CHANGE.m, n=P_CHANGE.n, alpha=P_CHANGE.alpha,
                          beta=P_CHANGE.beta + 0.01, gamma=P_CHANGE.gamma, eps=0.01)
        with pytest.raises(DomainError):
            cyclicity_report(off, 8)

    def test_profile_validation(self):
        with pytest.raises(DomainError):
            SdiProfile((0.1, 0.05), (1.0, 2.0), 0, "phi-positive")
        with pytest.raises(DomainError):
            SdiProfile((0.1, 0.2), (1.0,), 0, "phi-positive")

    def test_json_summary(self):
        import json

        prof = cyclicity_report(P_NEG, 6)
        data = json.loads(prof.to_json())
        assert data["zero_count"] == 0
        assert data["case"] == "phi-negative"
        assert len(data["s_grid"]) == 6
