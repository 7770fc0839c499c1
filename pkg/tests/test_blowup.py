import math

import numpy as np
import pytest

from canard.blowup import (
    BRANCH_AUTO,
    BRANCH_USE_M01,
    BRANCH_USE_N10,
    PlanarPolySystem,
    blow_up,
    blow_up_via_jets,
    equilibrium_series,
    find_equilibrium,
    fit_odd_series,
    hopf_lambda1,
    l1_blowup,
    lyapunov_DF,
    normalize_linear,
    sample_record,
    translate_to_equilibrium,
    _hatted_tables,
)
from canard.errors import DomainError, NumericsError
from canard.jet import jet_from_terms
from canard.normalform import (
    COEFF_NAMES,
    NormalFormCoefficients,
    omega_coefficients,
    rho_coefficients,
)

CANONICAL = NormalFormCoefficients()


def random_record(rng):
    return NormalFormCoefficients.from_dict(
        {name: float(rng.uniform(-1.0, 1.0)) for name in COEFF_NAMES})


def centered_series_tables(m, n, es, r):
    """Recentered coefficients predicted through O(r^3) from the hatted
    tables and the equilibrium series.  Every symbol here is the hatted
    (O(1)) value; the return approximates the actual recentered jet
    coefficients with O(r^4) error."""
    P0, P1, P2, P3 = es.p
    Q0, Q1, Q2, Q3 = es.q
    m10, m01, m20, m11, m02 = m[(1, 0)], m[(0, 1)], m[(2, 0)], m[(1, 1)], m[(0, 2)]
    m30, m21, m12 = m[(3, 0)], m[(2, 1)], m[(1, 2)]
    n10, n01, n20, n11, n02 = n[(1, 0)], n[(0, 1)], n[(2, 0)], n[(1, 1)], n[(0, 2)]
    n30, n21 = n[(3, 0)], n[(2, 1)]
    mbar = {
        (1, 0): (2 * P0 * m20
                 + (m10 + Q0 * m11 + 2 * P1 * m20 + 3 * P0 ** 2 * m30) * r
                 + (Q1 * m11 + 2 * P2 * m20 + 2 * P0 * Q0 * m21 + 6 * P0 * P1 * m30) * r ** 2
                 + (m12 * Q0 ** 2 + Q2 * m11 + 2 * P3 * m20
                    + 2 * (P1 * Q0 + P0 * Q1) * m21
                    + (3 * P1 ** 2 + 6 * P0 * P2) * m30) * r ** 3),
        (0, 1): (m01 + P0 * m11 * r
                 + (P0 ** 2 * m21 + P1 * m11 + 2 * Q0 * m02) * r ** 2
                 + (2 * P0 * Q0 * m12 + P2 * m11 + 2 * P0 * P1 * m21 + 2 * Q1 * m02) * r ** 3),
        (2, 0): (m20 + 3 * P0 * m30 * r + (Q0 * m21 + 3 * P1 * m30) * r ** 2
                 + (Q1 * m21 + 3 * P2 * m30) * r ** 3),
        (1, 1): m11 * r + 2 * P0 * m21 * r ** 2 + (2 * P1 * m21 + 2 * Q0 * m12) * r ** 3,
        (0, 2): m02 * r ** 2 + P0 * m12 * r ** 3,
        (3, 0): m30 * r,
        (2, 1): m21 * r ** 2,
        (1, 2): m12 * r ** 3,
        (0, 3): 0.0,
    }
    nbar = {
        (1, 0): (n10 + 2 * P0 * n20 * r
                 + (3 * P0 ** 2 * n30 + 2 * P1 * n20 + Q0 * n11) * r ** 2
                 + (2 * P0 * Q0 * n21 + 2 * P2 * n20 + 6 * P0 * P1 * n30 + Q1 * n11) * r ** 3),
        (0, 1): (n01 * r + P0 * n11 * r ** 2
                 + (n21 * P0 ** 2 + 2 * Q0 * n02 + P1 * n11) * r ** 3),
        (2, 0): n20 * r + 3 * P0 * n30 * r ** 2 + (3 * P1 * n30 + Q0 * n21) * r ** 3,
        (1, 1): n11 * r ** 2 + 2 * P0 * n21 * r ** 3,
        (0, 2): n02 * r ** 3,
        (3, 0): n30 * r ** 2,
        (2, 1): n21 * r ** 3,
        (1, 2): 0.0,
        (0, 3): 0.0,
    }
    return mbar, nbar


def centered_table_error(nf, r):
    sys = blow_up(nf, r, 0.1)
    eq = find_equilibrium(sys)
    centered = translate_to_equilibrium(sys, eq)
    m, n = _hatted_tables(sys)
    es = equilibrium_series(sys)
    mbar, nbar = centered_series_tables(m, n, es, r)
    err = 0.0
    for ij, want in mbar.items():
        err = max(err, abs(centered.fx.coeff(ij) - want))
    for ij, want in nbar.items():
        err = max(err, abs(centered.fy.coeff(ij) - want))
    return err


class TestBlowUp:
    def test_canonical_coefficients(self):
        sys = blow_up(CANONICAL, 0.1, 0.2)
        assert sys.fx.coeff((2, 0)) == 1.0
        assert sys.fx.coeff((0, 1)) == -1.0
        assert sys.fy.coeff((1, 0)) == 1.0
        assert sys.fy.coeff((0, 0)) == -0.2
        assert sys.fx.coeff((1, 0)) == 0.0

    def test_fast_forcing_linear_term(self):
        nf = NormalFormCoefficients(c10=0.5)
        sys = blow_up(nf, 0.1, 0.0)
        assert sys.fx.coeff((1, 0)) == pytest.approx(0.05)

    def test_slow_y_coefficient(self):
        nf = NormalFormCoefficients(f00=2.0, e01=1.0)
        sys = blow_up(nf, 0.1, 0.3)
        assert sys.fy.coeff((0, 1)) == pytest.approx(0.197)

    def test_positive_r_required(self):
        with pytest.raises(DomainError):
            blow_up(CANONICAL, 0.0, 0.1)
        with pytest.raises(DomainError):
            blow_up_via_jets(CANONICAL, -0.1, 0.1)

    def test_two_path_agreement(self):
        rng = np.random.default_rng(424242)
        for _ in range(50):
            nf = random_record(rng)
            r = float(rng.uniform(0.02, 0.15))
            lam = float(rng.uniform(-1.0, 1.0))
            a = blow_up(nf, r, lam)
            b = blow_up_via_jets(nf, r, lam)
            keys = set(a.fx.coeffs) | set(b.fx.coeffs) | set(a.fy.coeffs) | set(b.fy.coeffs)
            for k in keys:
                for ja, jb in ((a.fx, b.fx), (a.fy, b.fy)):
                    va, vb = ja.coeff(k), jb.coeff(k)
                    denom = max(abs(va), abs(vb))
                    if denom == 0.0:
                        continue
                    assert abs(va - vb) <= 1e-13 * denom, (k, va, vb)


class TestEquilibriumSeries:
    def test_canonical_head(self):
        sys = blow_up(CANONICAL, 0.07, 0.2)
        es = equilibrium_series(sys)
        assert es.p[0] == pytest.approx(0.2, rel=1e-14)
        assert es.q[0] == pytest.approx(0.04, rel=1e-14)
        for k in (1, 2, 3):
            assert es.p[k] == pytest.approx(0.0, abs=1e-14)
            assert es.q[k] == pytest.approx(0.0, abs=1e-14)

    def test_canonical_prediction(self):
        sys = blow_up(CANONICAL, 0.05, 0.2)
        assert equilibrium_series(sys).predict(0.05) == pytest.approx((0.2, 0.04))

    def test_order_four_accuracy(self):
        rng = np.random.default_rng(777)
        nf = random_record(rng)

        def gap(r):
            sys = blow_up(nf, r, 0.1)
            ex, ey = find_equilibrium(sys)
            px, py = equilibrium_series(sys).predict(r)
            return math.hypot(ex - px, ey - py)

        ratio = gap(0.05) / gap(0.025)
        assert 10.0 < ratio < 24.0  # 2^4 = 16 up to higher-order drift

    def test_vanishing_denominator(self):
        fx = jet_from_terms(2, 4, {(0, 1): -1.0, (2, 0): 1.0})
        fy = jet_from_terms(2, 4, {(0, 1): 1.0})  # no x term: n10 = 0
        sys = PlanarPolySystem(fx, fy, "blown", 0.1, 0.0)
        with pytest.raises(DomainError):
            equilibrium_series(sys)


class TestTranslate:
    def test_canonical_at_origin_unchanged(self):
        sys = blow_up(CANONICAL, 0.1, 0.0)
        centered = translate_to_equilibrium(sys, (0.0, 0.0))
        assert centered.fx.coeffs == sys.fx.coeffs
        assert centered.fy.coeffs == sys.fy.coeffs
        assert centered.stage == "centered"

    def test_linear_head_after_shift(self):
        sys = blow_up(CANONICAL, 0.1, 0.2)
        centered = translate_to_equilibrium(sys, (0.2, 0.04))
        # d/dx (-y + x^2) at x = 0.2
        assert centered.fx.coeff((1, 0)) == pytest.approx(0.4, rel=1e-13)

    def test_residual_gate(self):
        sys = blow_up(CANONICAL, 0.1, 0.2)
        with pytest.raises(DomainError):
            translate_to_equilibrium(sys, (0.21, 0.04))

    def test_centered_tables_order_r4(self):
        rng = np.random.default_rng(31337)
        nf = random_record(rng)
        e1 = centered_table_error(nf, 0.05)
        e2 = centered_table_error(nf, 0.025)
        assert e1 / e2 > 10.0
        assert e1 < 1e-3


class TestNormalizeLinear:
    def test_canonical_rotation(self):
        sys = blow_up(CANONICAL, 0.01, 0.0)
        centered = translate_to_equilibrium(sys, (0.0, 0.0))
        rot = normalize_linear(centered, BRANCH_USE_M01)
        assert rot.stage == "hopf"
        assert rot.fx.coeff((1, 0)) == pytest.approx(0.0, abs=1e-14)
        # rotation speed (x-coefficient of the slow component)
        assert rot.fy.coeff((1, 0)) == pytest.approx(-1.0, rel=1e-12)

    def test_trace_and_det_preserved(self):
        rng = np.random.default_rng(999)
        for _ in range(10):
            nf = random_record(rng)
            r = float(rng.uniform(0.02, 0.1))
            sys = blow_up(nf, r, float(rng.uniform(-0.5, 0.5)))
            centered = translate_to_equilibrium(sys, find_equilibrium(sys))
            J0 = centered.linear_part()
            rot = normalize_linear(centered, BRANCH_AUTO)
            J1 = rot.linear_part()
            assert np.trace(J1) == pytest.approx(np.trace(J0), abs=1e-12)
            assert np.linalg.det(J1) == pytest.approx(np.linalg.det(J0), rel=1e-12)

    def test_rotation_structure_and_eigenvalues(self):
        rng = np.random.default_rng(1001)
        nf = random_record(rng)
        r = 0.06
        sys = blow_up(nf, r, 0.05)
        centered = translate_to_equilibrium(sys, find_equilibrium(sys))
        for branch in (BRANCH_USE_N10, BRANCH_USE_M01):
            rot = normalize_linear(centered, branch)
            J = rot.linear_part()
            scale = abs(J[0, 1]) + abs(J[1, 0])
            assert abs(J[0, 0] - J[1, 1]) < 1e-12 * scale
            assert abs(J[0, 1] + J[1, 0]) < 1e-12 * scale
            a, b = J[0, 0], J[1, 0]
            eig = sorted(np.linalg.eigvals(J), key=lambda z: z.imag)
            want = sorted([complex(a, b), complex(a, -b)], key=lambda z: z.imag)
            for got, w in zip(eig, want):
                assert abs(got - w) < 1e-10 * max(1.0, abs(w))

    def test_real_eigenvalues_rejected(self):
        fx = jet_from_terms(2, 4, {(1, 0): 1.0})
        fy = jet_from_terms(2, 4, {(0, 1): 1.0})
        sys = PlanarPolySystem(fx, fy, "centered", 0.1, 0.0)
        with pytest.raises(DomainError):
            normalize_linear(sys, BRANCH_AUTO)

    def test_zero_pivot_rejected(self):
        # n10 = 0: UseN10 is impossible, UseM01 works
        fx = jet_from_terms(2, 4, {(0, 1): -1.0, (2, 0): 1.0})
        fy = jet_from_terms(2, 4, {(0, 1): 0.0})
        sys = PlanarPolySystem(fx, fy, "centered", 0.1, 0.0)
        with pytest.raises(DomainError):
            normalize_linear(sys, BRANCH_USE_N10)

    def test_unknown_branch(self):
        sys = blow_up(CANONICAL, 0.1, 0.0)
        centered = translate_to_equilibrium(sys, (0.0, 0.0))
        with pytest.raises(DomainError):
            normalize_linear(centered, "use-both")


class TestHopfLambda1:
    def test_canonical_is_zero(self):
        for r in (0.02, 0.1, 0.2):
            assert abs(hopf_lambda1(CANONICAL, r)) < 1e-12

    def test_pure_c10_tends_to_rho1(self):
        nf = NormalFormCoefficients(c10=1.0)
        lam = hopf_lambda1(nf, 0.01)
        assert lam / 0.01 == pytest.approx(-0.5, abs=1e-3)

    def test_even_coefficient_vanishes(self):
        # power 5 in the basis keeps the O(r^5) tail out of the r^2 slot
        rng = np.random.default_rng(2024)
        nf = random_record(rng)
        rs = [0.02 + 0.01 * k for k in range(9)]
        samples = [(r, hopf_lambda1(nf, r)) for r in rs]
        coeffs, _ = fit_odd_series(samples, [1, 2, 3, 5])
        assert abs(coeffs[1]) < 1e-6 * max(1.0, abs(coeffs[0]))
        rho = rho_coefficients(nf)
        assert coeffs[0] == pytest.approx(rho.rho1, rel=1e-6)
        assert coeffs[2] == pytest.approx(rho.rho3, rel=1e-3)

    def test_r_range_enforced(self):
        with pytest.raises(DomainError):
            hopf_lambda1(CANONICAL, 0.0)
        with pytest.raises(DomainError):
            hopf_lambda1(CANONICAL, 0.25)


class TestLyapunovDF:
    def lemma_system(self, fx_terms, fy_terms):
        return PlanarPolySystem(
            jet_from_terms(2, 4, fx_terms), jet_from_terms(2, 4, fy_terms),
            "hopf", 1.0, 0.0)

    def test_cubic_fast_term(self):
        sigma = 0.7
        sys = self.lemma_system({(0, 1): -1.0, (3, 0): sigma}, {(1, 0): 1.0})
        assert lyapunov_DF(sys) == pytest.approx(6.0 * sigma / 16.0, rel=1e-14)

    def test_linear_center(self):
        sys = self.lemma_system({(0, 1): -1.0}, {(1, 0): 1.0})
        assert lyapunov_DF(sys) == 0.0

    def test_quadratic_cross_terms(self):
        sys = self.lemma_system({(0, 1): -1.0, (2, 0): 1.0, (1, 1): 1.0}, {(1, 0): 1.0})
        assert lyapunov_DF(sys) == pytest.approx(0.125, rel=1e-14)

    def test_trace_gate(self):
        sys = self.lemma_system({(1, 0): 1e-6, (0, 1): -1.0}, {(1, 0): 1.0})
        with pytest.raises(DomainError):
            lyapunov_DF(sys)

    def test_zero_rotation_rejected(self):
        sys = self.lemma_system({(0, 1): -1.0}, {(0, 2): 1.0})
        with pytest.raises(DomainError):
            lyapunov_DF(sys)


class TestL1Blowup:
    def test_canonical_vanishes(self):
        for r in (0.05, 0.1):
            assert abs(l1_blowup(CANONICAL, r)) < 1e-13

    def test_pure_b10_leading_coefficient(self):
        nf = NormalFormCoefficients(b10=1.0)
        grid = (0.02, 0.04, 0.06, 0.08, 0.10)
        samples = [(r, l1_blowup(nf, r)) for r in grid]
        coeffs, _ = fit_odd_series(samples, [1, 3])
        assert coeffs[0] == pytest.approx(3.0 / 16.0, rel=1e-3)

    def test_branch_ratio_identity(self):
        # the branches rescale L1 by |m01_bar / n10_bar|; they are not equal
        rng = np.random.default_rng(60601)
        nf = sample_record(rng)
        r = 0.08
        lam = hopf_lambda1(nf, r)
        sys = blow_up(nf, r, lam)
        centered = translate_to_equilibrium(sys, find_equilibrium(sys))
        l1_m01 = lyapunov_DF(normalize_linear(centered, BRANCH_USE_M01))
        l1_n10 = lyapunov_DF(normalize_linear(centered, BRANCH_USE_N10))
        ratio = abs(centered.fx.coeff((0, 1)) / centered.fy.coeff((1, 0)))
        assert l1_n10 / l1_m01 == pytest.approx(ratio, rel=1e-9)
        assert l1_n10 / l1_m01 > 0.0

    def test_degenerate_record_cubic_coefficient(self):
        rng = np.random.default_rng(88)
        nf = sample_record(rng, constrain_omega1=True)
        om = omega_coefficients(nf)
        assert abs(om.omega1) < 1e-15
        grid = [0.02 * k for k in range(1, 9)]
        samples = [(r, l1_blowup(nf, r)) for r in grid]
        coeffs, _ = fit_odd_series(samples, [1, 3, 5, 7])
        assert coeffs[1] == pytest.approx(om.omega2 / 32.0, rel=1e-2)


class TestFitOddSeries:
    def test_exact_linear(self):
        samples = [(r, 2.0 * r) for r in (0.1, 0.2, 0.3, 0.4)]
        coeffs, residual = fit_odd_series(samples, [1, 3])
        assert coeffs[0] == pytest.approx(2.0, rel=1e-13)
        assert abs(coeffs[1]) < 1e-12
        assert residual < 1e-14

    def test_exact_cubic(self):
        samples = [(r, r + 0.5 * r ** 3) for r in (0.05, 0.1, 0.15, 0.2, 0.25)]
        coeffs, _ = fit_odd_series(samples, [1, 3])
        assert coeffs[0] == pytest.approx(1.0, rel=1e-12)
        assert coeffs[1] == pytest.approx(0.5, rel=1e-10)

    def test_noise_robustness(self):
        rng = np.random.default_rng(5)
        rs = np.linspace(0.05, 0.4, 12)
        samples = [(float(r), float(0.7 * r - 0.3 * r ** 3 + rng.normal(0.0, 1e-10)))
                   for r in rs]
        coeffs, _ = fit_odd_series(samples, [1, 3])
        assert coeffs[0] == pytest.approx(0.7, abs=1e-8)
        assert coeffs[1] == pytest.approx(-0.3, abs=1e-7)

    def test_sample_count_gate(self):
        with pytest.raises(DomainError):
            fit_odd_series([(0.1, 0.1), (0.2, 0.2), (0.3, 0.3)], [1, 3])

    def test_distinct_r_required(self):
        with pytest.raises(DomainError):
            fit_odd_series([(0.1, 0.1), (0.1, 0.2), (0.3, 0.3), (0.4, 0.4)], [1, 3])

    def test_rank_deficiency(self):
        samples = [(r, r) for r in (0.1, 0.2, 0.3, 0.4)]
        with pytest.raises(NumericsError):
            fit_odd_series(samples, [1, 1])


class TestSampleRecord:
    def test_deterministic_and_well_conditioned(self):
        nf1 = sample_record(np.random.default_rng(3))
        nf2 = sample_record(np.random.default_rng(3))
        assert nf1 == nf2
        lam = hopf_lambda1(nf1, 0.1)
        sys = blow_up(nf1, 0.1, lam)
        centered = translate_to_equilibrium(sys, find_equilibrium(sys))
        J = centered.linear_part()
        disc = 4.0 * np.linalg.det(J) - np.trace(J) ** 2
        assert disc > 0.05

    def test_constrained_sampling(self):
        nf = sample_record(np.random.default_rng(17), constrain_omega1=True)
        assert abs(omega_coefficients(nf).omega1) < 1e-15
