"""
Tests for Gauss rules, the log-weight rule and the log tensor identity.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from ht_quadrature.exceptions import InvalidArgumentError
from ht_quadrature.quadrature import (
    K_MAX,
    LEGENDRE,
    LOGJACOBI,
    clear_cache,
    gauss_legendre,
    gauss_log,
    graded_rule,
    log_moments,
    logtensor_apply,
    logtensor_points,
    tensor_apply,
)


class TestGaussLegendre:
    """Tests for the Gauss-Legendre rule on [0, 1]."""

    @pytest.mark.parametrize("K", [1, 2, 5, 12, 20, 30])
    def test_monomial_exactness(self, K):
        """Test int_0^1 x^d = 1/(d+1) for d <= 2K-1."""
        rule = gauss_legendre(K)
        for d in range(2 * K):
            assert rule.apply(rule.nodes ** d) == pytest.approx(1.0 / (d + 1), rel=1e-14)

    def test_one_point_rule(self):
        rule = gauss_legendre(1)

        assert rule.nodes[0] == 0.5
        assert rule.weights[0] == 1.0

    def test_symmetry(self):
        rule = gauss_legendre(7)

        np.testing.assert_allclose(rule.nodes + rule.nodes[::-1], 1.0, atol=1e-15)
        np.testing.assert_allclose(rule.weights, rule.weights[::-1], atol=1e-16)
        assert rule.weight_kind == LEGENDRE

    def test_against_numpy(self):
        x, w = np.polynomial.legendre.leggauss(16)
        rule = gauss_legendre(16)

        np.testing.assert_allclose(rule.nodes, 0.5 * (x + 1.0), atol=1e-15)
        np.testing.assert_allclose(rule.weights, 0.5 * w, atol=1e-15)

    @pytest.mark.parametrize("K", [0, K_MAX + 1])
    def test_order_range(self, K):
        with pytest.raises(InvalidArgumentError):
            gauss_legendre(K)

    def test_cached_rules_are_shared_and_read_only(self):
        clear_cache()
        rule = gauss_legendre(6)

        assert gauss_legendre(6) is rule
        with pytest.raises(ValueError):
            rule.nodes[0] = 0.0


class TestGaussLog:
    """Tests for the -ln(t) weighted rule."""

    def test_moments(self):
        """Test the closed form of the first modified moments."""
        m = log_moments(4)

        np.testing.assert_allclose(m, [1.0, -1.0 / 4, 1.0 / 36, -1.0 / 240], rtol=1e-15)

    @pytest.mark.parametrize("K", [1, 2, 4, 8, 16, 24])
    def test_monomial_exactness(self, K):
        """Test int_0^1 -ln(t) t^d = 1/(d+1)^2 for d <= 2K-1."""
        rule = gauss_log(K)
        for d in range(2 * K):
            assert rule.apply(rule.nodes ** d) == pytest.approx(1.0 / (d + 1) ** 2, rel=1e-13)

    def test_nodes_inside_and_weights_positive(self):
        rule = gauss_log(16)

        assert rule.weight_kind == LOGJACOBI
        assert np.all(rule.nodes > 0) and np.all(rule.nodes < 1)
        assert np.all(rule.weights > 0)
        assert rule.weights.sum() == pytest.approx(1.0, rel=1e-14)

    def test_one_point_rule(self):
        """Test the K=1 node is the mean 1/4 of the weight."""
        rule = gauss_log(1)

        assert rule.nodes[0] == pytest.approx(0.25)
        assert rule.weights[0] == pytest.approx(1.0)


class TestLogTensor:
    """Tests for the diagonal log-singular tensor rule."""

    def test_constant_function(self):
        """Test int int ln|s - t| = -3/2."""
        assert logtensor_apply(4, lambda s, t: np.ones_like(s)) == pytest.approx(-1.5, abs=1e-14)

    @pytest.mark.parametrize("a, b", [(1, 0), (0, 2), (2, 3), (4, 2), (5, 5)])
    def test_monomials_against_adaptive_reference(self, a, b):
        """Test exactness on s^a t^b with a + b <= 2K - 2."""
        K = 6

        def integrand(s, t):
            return s ** a * t ** b * math.log(abs(s - t)) if s != t else 0.0

        lower, _ = integrate.dblquad(integrand, 0, 1, 0, lambda t: t, epsabs=1e-14, epsrel=1e-14)
        upper, _ = integrate.dblquad(integrand, 0, 1, lambda t: t, 1, epsabs=1e-14, epsrel=1e-14)
        approx = logtensor_apply(K, lambda s, t: s ** a * t ** b)

        assert approx == pytest.approx(lower + upper, abs=5e-13)

    def test_points_inside_square(self):
        s, t, w = logtensor_points(5)

        assert s.shape == t.shape == w.shape == (4 * 25,)
        assert np.all((s > 0) & (s < 1) & (t > 0) & (t < 1))
        assert np.all(s != t)

    def test_tensor_apply(self):
        rule = gauss_legendre(3)

        assert tensor_apply(rule, rule, lambda x, y: x ** 2 * y ** 5) == pytest.approx(1.0 / 18, rel=1e-14)

    def test_tensor_apply_needs_legendre(self):
        with pytest.raises(InvalidArgumentError):
            tensor_apply(gauss_legendre(3), gauss_log(3), lambda x, y: x)


class TestGradedRule:
    """Tests for geometrically graded composite rules."""

    def test_polynomial_exact(self):
        x, w = graded_rule(0.0, 2.0, 4, levels=6)

        assert np.sum(w * x ** 7) == pytest.approx(2.0 ** 8 / 8, rel=1e-14)

    @pytest.mark.parametrize("toward", ["a", "b", "both"])
    def test_weights_sum_to_length(self, toward):
        x, w = graded_rule(1.0, 3.0, 5, toward=toward)

        assert np.sum(w) == pytest.approx(2.0, rel=1e-14)
        assert np.all((x > 1.0) & (x < 3.0))

    def test_resolves_endpoint_singularity(self):
        """Test int_0^1 t^(-1/4) = 4/3 with refinement toward 0."""
        x, w = graded_rule(0.0, 1.0, 12, levels=12)

        assert np.sum(w * x ** -0.25) == pytest.approx(4.0 / 3.0, rel=1e-7)

    def test_unknown_direction(self):
        with pytest.raises(InvalidArgumentError):
            graded_rule(0.0, 1.0, 3, toward="middle")
