"""Special-function checks against closed forms and independent oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special as sps

from orbitmart.special import NumericsError, Tolerance, cap_measure, reg_inc_beta, t_upper_tail


class TestRegIncBeta:
    @pytest.mark.parametrize("x", [0.0, 0.3, 1.0])
    def test_uniform_case(self, x):
        assert reg_inc_beta(x, 1.0, 1.0) == pytest.approx(x, abs=1e-14)

    @pytest.mark.parametrize("a", [0.5, 2.0, 7.5])
    def test_symmetric_beta_at_half(self, a):
        assert reg_inc_beta(0.5, a, a) == pytest.approx(0.5, abs=1e-13)

    def test_beta22_closed_form(self):
        # Beta(2, 2) CDF is x^2 (3 - 2x).
        x = 0.25
        assert reg_inc_beta(x, 2.0, 2.0) == pytest.approx(x * x * (3 - 2 * x), abs=1e-13)

    def test_endpoints(self):
        assert reg_inc_beta(0.0, 3.2, 0.7) == 0.0
        assert reg_inc_beta(1.0, 3.2, 0.7) == 1.0

    def test_monotone_in_x(self):
        grid = np.linspace(0, 1, 101)
        vals = [reg_inc_beta(float(x), 2.5, 0.5) for x in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_against_scipy_grid(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            a = float(rng.uniform(0.1, 60.0))
            b = float(rng.uniform(0.1, 60.0))
            x = float(rng.uniform())
            ref = sps.betainc(a, b, x)
            assert reg_inc_beta(x, a, b) == pytest.approx(ref, rel=1e-12, abs=1e-13)

    @given(
        # Dyadic x keeps 1 - x exactly representable, so the identity
        # probes the function rather than the input rounding.
        k=st.integers(1, 2 ** 20 - 1),
        a=st.floats(0.1, 40.0),
        b=st.floats(0.1, 40.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_symmetry_identity(self, k, a, b):
        x = k / 2 ** 20
        total = reg_inc_beta(x, a, b) + reg_inc_beta(1.0 - x, b, a)
        assert abs(total - 1.0) < 1e-12

    @pytest.mark.parametrize(
        "x,a,b", [(-0.1, 1, 1), (1.1, 1, 1), (0.5, 0, 1), (0.5, 1, -2)])
    def test_domain_errors(self, x, a, b):
        with pytest.raises(ValueError):
            reg_inc_beta(x, a, b)

    def test_nonconvergence_raises_with_inputs(self):
        tol = Tolerance(rel_eps=1e-12, max_iter=50)
        with pytest.raises(NumericsError) as excinfo:
            # Huge symmetric shapes need far more than 50 iterations.
            reg_inc_beta(0.4999, 2e5, 2e5, tol)
        assert "a" in excinfo.value.inputs


class TestTolerance:
    def test_defaults(self):
        tol = Tolerance()
        assert tol.rel_eps == 1e-12
        assert tol.max_iter == 300

    @pytest.mark.parametrize("eps", [0.0, -1e-9, 1e-3])
    def test_bad_eps(self, eps):
        with pytest.raises(ValueError):
            Tolerance(rel_eps=eps)

    def test_bad_max_iter(self):
        with pytest.raises(ValueError):
            Tolerance(max_iter=10)


class TestCapMeasure:
    @pytest.mark.parametrize("m", [1, 2, 3, 10, 1000])
    def test_hemisphere(self, m):
        assert cap_measure(0.0, m) == 0.5

    @pytest.mark.parametrize("m", [1, 2, 5, 100])
    def test_full_and_empty_caps(self, m):
        assert cap_measure(1.0, m) == 0.0
        assert cap_measure(-1.0, m) == 1.0

    def test_quarter_circle(self):
        # Arc above c on the unit circle has relative length arccos(c)/pi.
        c = 1.0 / math.sqrt(2.0)
        assert cap_measure(c, 2) == pytest.approx(0.25, abs=1e-12)

    def test_circle_closed_form(self):
        for c in np.linspace(-1, 1, 201):
            expected = math.acos(float(c)) / math.pi
            assert cap_measure(float(c), 2) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("m", [2, 3, 7, 50])
    def test_antisymmetry(self, m):
        for c in np.linspace(-0.999, 0.999, 61):
            total = cap_measure(float(c), m) + cap_measure(float(-c), m)
            assert abs(total - 1.0) < 1e-12

    @pytest.mark.parametrize("m", [2, 3, 10])
    def test_strictly_decreasing(self, m):
        grid = np.linspace(-1, 1, 101)
        vals = [cap_measure(float(c), m) for c in grid]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            cap_measure(0.5, 0)
        with pytest.raises(ValueError):
            cap_measure(1.5, 3)


class TestTUpperTail:
    @pytest.mark.parametrize("nu", [1, 2, 5, 30])
    def test_symmetry_point(self, nu):
        assert t_upper_tail(0.0, nu) == 0.5

    def test_cauchy_closed_form(self):
        expected = 1.0 - (0.5 + math.atan(1.0) / math.pi)
        assert t_upper_tail(1.0, 1) == pytest.approx(expected, abs=1e-13)

    def test_two_dof_closed_form(self):
        # With two degrees of freedom the CDF is 1/2 + x / (2 sqrt(2 + x^2)).
        expected = 0.5 - 1.0 / (2.0 * math.sqrt(3.0))
        assert t_upper_tail(1.0, 2) == pytest.approx(expected, abs=1e-13)

    @pytest.mark.parametrize("nu", [1, 2, 5, 30])
    def test_against_quadrature(self, nu):
        def density(x):
            return math.exp(math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2)) \
                / math.sqrt(nu * math.pi) * (1 + x * x / nu) ** (-(nu + 1) / 2)

        for t in np.linspace(-6, 6, 13):
            oracle, _ = integrate.quad(density, float(t), np.inf,
                                       epsabs=1e-13, epsrel=1e-13)
            assert t_upper_tail(float(t), nu) == pytest.approx(oracle, abs=1e-10)

    @pytest.mark.parametrize("nu", [1, 2, 5, 30, 200, 9999])
    def test_matches_cap_measure_substitution(self, nu):
        for t in np.linspace(-8, 8, 33):
            c = float(t) / math.sqrt(nu + t * t)
            assert abs(cap_measure(c, nu + 1) - t_upper_tail(float(t), nu)) < 1e-12

    def test_bad_dof(self):
        with pytest.raises(ValueError):
            t_upper_tail(1.0, 0)
