import itertools
import math

import numpy as np
import pytest

from canard.errors import DomainError
from canard.jet import (
    Jet,
    jet_add,
    jet_compose,
    jet_const,
    jet_diff,
    jet_eval,
    jet_from_terms,
    jet_mul,
    jet_recenter,
    jet_scale,
    jet_truncate,
    jet_var,
    jet_zero,
)


def j1(degree, **terms):
    # 1-var helper: j1(3, c0=1, c1=2) = 1 + 2x at D=3
    coeffs = {}
    for key, val in terms.items():
        coeffs[(int(key[1:]),)] = val
    return jet_from_terms(1, degree, coeffs)


def random_jet(rng, nvars, degree):
    coeffs = {}
    for mi in itertools.product(range(degree + 1), repeat=nvars):
        if sum(mi) <= degree:
            coeffs[mi] = float(rng.uniform(-2.0, 2.0))
    return jet_from_terms(nvars, degree, coeffs)


def jets_close(a, b, tol=1e-12):
    assert a.nvars == b.nvars
    d = min(a.degree, b.degree)
    for mi in itertools.product(range(d + 1), repeat=a.nvars):
        if sum(mi) <= d:
            if abs(a.coeff(mi) - b.coeff(mi)) > tol:
                return False
    return True


class TestAdd:
    def test_cancellation(self):
        a = j1(2, c0=1.0, c1=1.0)
        b = j1(2, c0=1.0, c1=-1.0)
        s = jet_add(a, b)
        assert s.coeff((0,)) == 2.0
        assert s.coeff((1,)) == 0.0
        assert s.coeff((2,)) == 0.0

    def test_additive_identity(self):
        a = j1(2, c2=1.0)
        s = jet_add(a, jet_zero(1, 2))
        assert jets_close(s, a)

    def test_truncation_of_higher_order_operand(self):
        a = j1(2, c0=1.0, c1=1.0, c2=1.0)
        cubic = jet_from_terms(1, 3, {(3,): 1.0})
        s = jet_add(a, jet_truncate(cubic, 2))
        assert s.degree == 2
        assert s.coeff((0,)) == 1.0
        assert s.coeff((1,)) == 1.0
        assert s.coeff((2,)) == 1.0

    def test_nvars_mismatch(self):
        with pytest.raises(DomainError):
            jet_add(jet_zero(1, 2), jet_zero(2, 2))


class TestMul:
    def test_difference_of_squares(self):
        a = j1(2, c0=1.0, c1=1.0)
        b = j1(2, c0=1.0, c1=-1.0)
        p = jet_mul(a, b)
        assert p.coeff((0,)) == 1.0
        assert p.coeff((1,)) == 0.0
        assert p.coeff((2,)) == -1.0

    def test_truncation_drops_square(self):
        a = j1(1, c0=1.0, c1=1.0)
        p = jet_mul(a, a)
        assert p.degree == 1
        assert p.coeff((0,)) == 1.0
        assert p.coeff((1,)) == 2.0

    def test_two_vars(self):
        x = jet_var(2, 2, 0)
        y = jet_var(2, 2, 1)
        p = jet_mul(x, y)
        assert p.coeff((1, 1)) == 1.0
        assert jet_eval(p, (3.0, 4.0)) == 12.0

    def test_nvars_mismatch(self):
        with pytest.raises(DomainError):
            jet_mul(jet_zero(1, 2), jet_zero(3, 2))


class TestCompose:
    def test_scaling_a_square(self):
        # bound 4 holds the composed true degree: x^2 under x = r*u -> r^2 u^2
        f = jet_from_terms(1, 4, {(2,): 1.0})
        ru = jet_from_terms(2, 4, {(1, 1): 1.0})
        g = jet_compose(f, [ru])
        assert g.nvars == 2
        assert g.coeff((2, 2)) == pytest.approx(1.0)
        assert sum(abs(v) for v in g.coeffs.values()) == pytest.approx(1.0)

    def test_quasi_homogeneous_rescale(self):
        # f(x,y) = -y + x^2 under x = r*x1, y = r^2*y1 becomes r^2*(-y1 + x1^2)
        f = jet_from_terms(2, 4, {(0, 1): -1.0, (2, 0): 1.0})
        r = jet_var(3, 4, 0)
        x1 = jet_var(3, 4, 1)
        y1 = jet_var(3, 4, 2)
        g = jet_compose(f, [jet_mul(r, x1), jet_mul(jet_mul(r, r), y1)])
        assert g.coeff((2, 0, 1)) == pytest.approx(-1.0)
        assert g.coeff((2, 2, 0)) == pytest.approx(1.0)
        # nothing else survives
        total = sum(abs(v) for v in g.coeffs.values())
        assert total == pytest.approx(2.0)

    def test_recenter_binomial(self):
        f = jet_from_terms(1, 2, {(2,): 1.0})
        g = jet_recenter(f, (0.5,))
        assert g.coeff((0,)) == pytest.approx(0.25)
        assert g.coeff((1,)) == pytest.approx(1.0)
        assert g.coeff((2,)) == pytest.approx(1.0)

    def test_constant_term_rejected(self):
        f = jet_from_terms(1, 3, {(3,): 1.0})
        shifted = j1(3, c0=1.0, c1=1.0)
        with pytest.raises(DomainError):
            jet_compose(f, [shifted])

    def test_arity_mismatch(self):
        f = jet_zero(2, 2)
        with pytest.raises(DomainError):
            jet_compose(f, [jet_var(1, 2, 0)])


class TestDiff:
    def test_mixed_monomial(self):
        f = jet_from_terms(2, 3, {(2, 1): 1.0})
        g = jet_diff(f, 0)
        assert g.coeff((1, 1)) == 2.0

    def test_constant(self):
        g = jet_diff(jet_const(2, 3, 5.0), 1)
        assert all(v == 0.0 for v in g.coeffs.values())

    def test_cubic(self):
        f = jet_from_terms(1, 3, {(3,): 1.0})
        g = jet_diff(f, 0)
        assert g.coeff((2,)) == 3.0

    def test_bad_index(self):
        with pytest.raises(DomainError):
            jet_diff(jet_zero(2, 2), 2)


class TestEval:
    def test_quadratic(self):
        f = j1(2, c0=1.0, c1=1.0, c2=1.0)
        assert jet_eval(f, (2.0,)) == 7.0

    def test_zero_jet(self):
        assert jet_eval(jet_zero(3, 4), (1.0, 2.0, 3.0)) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            jet_eval(jet_zero(2, 2), (1.0,))


class TestValidation:
    def test_degree_bound_enforced_on_construction(self):
        with pytest.raises(DomainError):
            jet_from_terms(1, 2, {(3,): 1.0})

    def test_nonfinite_rejected(self):
        with pytest.raises(DomainError):
            jet_from_terms(1, 2, {(1,): float("nan")})

    def test_query_beyond_bound_rejected(self):
        f = jet_zero(1, 2)
        with pytest.raises(DomainError):
            f.coeff((3,))

    def test_absent_entry_is_zero(self):
        f = jet_from_terms(2, 3, {(1, 0): 2.0})
        assert f.coeff((0, 1)) == 0.0


class TestAlgebraProperties:
    def test_commutativity_and_associativity(self):
        rng = np.random.default_rng(20260814)
        for _ in range(25):
            nvars = int(rng.integers(1, 4))
            deg = int(rng.integers(1, 5))
            a = random_jet(rng, nvars, deg)
            b = random_jet(rng, nvars, deg)
            c = random_jet(rng, nvars, deg)
            assert jets_close(jet_add(a, b), jet_add(b, a))
            assert jets_close(jet_mul(a, b), jet_mul(b, a))
            assert jets_close(jet_add(jet_add(a, b), c), jet_add(a, jet_add(b, c)))
            assert jets_close(jet_mul(jet_mul(a, b), c), jet_mul(a, jet_mul(b, c)))

    def test_identity_composition(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            nvars = int(rng.integers(1, 4))
            deg = int(rng.integers(1, 5))
            f = random_jet(rng, nvars, deg)
            ident = [jet_var(nvars, deg, i) for i in range(nvars)]
            assert jets_close(jet_compose(f, ident), f)

    def test_eval_compose_consistency(self):
        # true degrees (2 outer, 2 inner -> 4 composed) fit the bound of 4,
        # so composition loses nothing and must agree with pointwise eval
        rng = np.random.default_rng(20240311)
        for _ in range(20):
            f = jet_from_terms(2, 4, random_jet(rng, 2, 2).coeffs)
            g0 = jet_from_terms(
                2, 4, {k: v for k, v in random_jet(rng, 2, 2).coeffs.items() if sum(k) > 0})
            g1 = jet_from_terms(
                2, 4, {k: v for k, v in random_jet(rng, 2, 2).coeffs.items() if sum(k) > 0})
            h = jet_compose(f, [g0, g1])
            p = (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
            lhs = jet_eval(h, p)
            rhs = jet_eval(f, (jet_eval(g0, p), jet_eval(g1, p)))
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_mixed_partials_commute(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            f = random_jet(rng, 2, 4)
            assert jets_close(jet_diff(jet_diff(f, 0), 1), jet_diff(jet_diff(f, 1), 0))

    def test_recenter_matches_eval(self):
        rng = np.random.default_rng(5150)
        for _ in range(10):
            f = random_jet(rng, 2, 3)
            c = (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
            g = jet_recenter(f, c)
            u = (float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.5, 0.5)))
            assert jet_eval(g, u) == pytest.approx(
                jet_eval(f, (c[0] + u[0], c[1] + u[1])), rel=1e-11, abs=1e-11)

    def test_scale(self):
        f = j1(2, c0=1.0, c1=2.0)
        g = jet_scale(f, -3.0)
        assert g.coeff((0,)) == -3.0
        assert g.coeff((1,)) == -6.0

    def test_diff_of_product_leibniz(self):
        rng = np.random.default_rng(2718)
        for _ in range(10):
            a = random_jet(rng, 2, 4)
            b = random_jet(rng, 2, 4)
            lhs = jet_diff(jet_mul(a, b), 0)
            rhs = jet_add(jet_mul(jet_diff(a, 0), b), jet_mul(a, jet_diff(b, 0)))
            # product rule holds only below the truncation boundary
            d = 3
            for mi in itertools.product(range(d + 1), repeat=2):
                if sum(mi) <= d - 1:
                    assert lhs.coeff(mi) == pytest.approx(rhs.coeff(mi), abs=1e-12)
