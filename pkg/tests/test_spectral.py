"""
Tests for the spectral oracle, exact tails and pointwise appliers.
"""

import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial
from scipy import integrate, special

from ht_quadrature.config import SpectralConfig
from ht_quadrature.exceptions import DomainError, InvalidArgumentError, OracleConvergenceError
from ht_quadrature.mesh import DegreeVector, build_dofmap, make_dyadic, make_geometric, make_uniform
from ht_quadrature.quadrature import gauss_legendre
from ht_quadrature.shapefn import shape_table
from ht_quadrature.spectral import (
    PiecewisePolynomial,
    basis_jumps,
    frequencies,
    ht_apply_cauchy,
    ht_apply_lemma22,
    ht_apply_piecewise,
    ht_apply_spectral,
    ht_pointwise_lemma22,
    mode_integrals,
    oracle_matrix,
    partial_sum,
    poly_trig_integral,
    sine_coefficients,
    tail_correction,
    tail_sum,
)


def discretization(mesh, deg):
    return mesh, deg, build_dofmap(mesh, deg)


def random_piecewise(rng, T=1.0, n_pieces=3, degree=3):
    """Random piecewise polynomial on a random partition of (0, T)."""
    inner = np.sort(rng.uniform(0.1 * T, 0.9 * T, n_pieces - 1))
    breakpoints = np.concatenate([[0.0], inner, [T]])
    pieces = tuple(Polynomial(rng.normal(size=degree + 1)) for _ in range(n_pieces))
    return PiecewisePolynomial(breakpoints, pieces)


class TestPolyTrigIntegral:
    """Tests for exact polynomial times trigonometric integrals."""

    def test_constant_sine(self):
        T = 3.0
        lam = math.pi / (2 * T)

        assert poly_trig_integral([1.0], 0.0, T, lam, "sin") == pytest.approx(2 * T / math.pi, rel=1e-14)

    @pytest.mark.parametrize("k", [0, 1, 7, 500])
    def test_constant_cosine(self, k):
        T = 1.0
        lam = frequencies(T, k, k + 1)[0]

        assert poly_trig_integral([1.0], 0.0, T, lam, "cos") == pytest.approx((-1) ** k / lam, rel=1e-12)

    def test_linear_sine(self):
        """Test int_0^1 t sin(pi t/2) = 4/pi^2."""
        value = poly_trig_integral([0.0, 1.0], 0.0, 1.0, math.pi / 2, "sin")
        assert value == pytest.approx(4 / math.pi ** 2, rel=1e-14)

    @pytest.mark.parametrize("lam", [0.3, 5.0, 40.0, 900.0])
    def test_against_adaptive_quadrature(self, lam):
        poly = Polynomial([0.5, -1.0, 2.0, 0.25])
        a, b = 0.2, 1.7
        for kind, trig in (("sin", np.sin), ("cos", np.cos)):
            expected, _ = integrate.quad(
                lambda t: poly(t) * trig(lam * t), a, b, limit=2000, epsabs=1e-14, epsrel=1e-13
            )
            assert poly_trig_integral(poly, a, b, lam, kind) == pytest.approx(expected, abs=1e-12)

    def test_bad_arguments(self):
        with pytest.raises(InvalidArgumentError):
            poly_trig_integral([1.0], 1.0, 0.0, 1.0, "sin")
        with pytest.raises(InvalidArgumentError):
            poly_trig_integral([1.0], 0.0, 1.0, 1.0, "tan")


class TestModeIntegrals:
    """Tests for basis-function mode integrals."""

    def test_against_reference_quadrature(self):
        mesh, deg, dofmap = discretization(make_dyadic(3, 2.0), DegreeVector((1, 3, 2)))
        lam = frequencies(mesh.T, 0, 60)
        modes = mode_integrals(mesh, deg, dofmap, lam)
        dmodes = mode_integrals(mesh, deg, dofmap, lam, derivative=True)

        rule = gauss_legendre(40)
        expected = np.zeros((dofmap.M, lam.size), dtype=complex)
        dexpected = np.zeros_like(expected)
        for ell in range(1, mesh.N + 1):
            a, b = mesh.element(ell)
            h = b - a
            for panel in range(8):
                xi = (panel + rule.nodes) / 8
                w = rule.weights / 8
                phase = np.exp(1j * np.outer(a + h * xi, lam))
                dofs = dofmap.element_dofs[ell - 1]
                expected[dofs] += h * (shape_table(deg[ell], xi) * w) @ phase
                dexpected[dofs] += (shape_table(deg[ell], xi, 1) * w) @ phase

        np.testing.assert_allclose(modes.E, expected, atol=1e-13)
        np.testing.assert_allclose(dmodes.E, dexpected, atol=1e-12)
        np.testing.assert_array_equal(modes.S, modes.E.imag)

    def test_jumps_of_continuous_basis(self):
        """Test that values of basis functions do not jump at interior breakpoints."""
        mesh, deg, dofmap = discretization(make_uniform(3, 1.0), DegreeVector((2, 2, 2)))
        D = basis_jumps(mesh, deg, dofmap, False, 3)

        np.testing.assert_allclose(D[:, 1:-1, 0], 0.0, atol=1e-15)
        assert D[0, 0, 0] == -1.0
        assert D[3, 3, 0] == 1.0

    def test_piecewise_from_fe(self):
        mesh, deg, dofmap = discretization(make_uniform(2, 1.0), DegreeVector((1, 2)))
        coeffs = np.array([0.0, 1.0, 2.0, 4.0])
        v = PiecewisePolynomial.from_fe(mesh, deg, dofmap, coeffs)

        assert v(0.25) == pytest.approx(0.5)
        assert v(0.75) == pytest.approx(1.5 + 4.0 * (0.25 - 0.5))
        assert v(1.5) == 0.0
        assert v.degree == 2


class TestTailSums:
    """Tests for the exact tails sum_{k >= K} e^{i phi k} (k + 1/2)^{-q}."""

    @pytest.mark.parametrize("phi, q, K, n", [
        (0.3, 2, 10, 1000),
        (0.01, 2, 10, 300),
        (0.01, 1, 10, 300),
        (2.5, 1, 0, 200),
        (-1.2, 3, 4, 100),
        (math.pi, 4, 1, 50),
        (1e-4, 5, 30, 20000),
    ])
    def test_differences_match_explicit_sums(self, phi, q, K, n):
        """Test T(K) - T(K+n) = explicit sum over K <= k < K+n across regimes."""
        k = np.arange(K, K + n, dtype=float)
        explicit = np.sum(np.exp(1j * phi * k) * (k + 0.5) ** (-float(q)))

        difference = tail_sum(phi, q, K) - tail_sum(phi, q, K + n)

        assert abs(difference - explicit) <= 1e-12 * max(1.0, abs(explicit))

    def test_non_oscillating_is_trigamma(self):
        assert tail_sum(0.0, 2, 7).real == pytest.approx(float(special.polygamma(1, 7.5)), rel=1e-14)

    def test_negative_phase_is_conjugate(self):
        assert tail_sum(-0.7, 2, 5) == pytest.approx(np.conj(tail_sum(0.7, 2, 5)))

    def test_divergent_case(self):
        with pytest.raises(DomainError):
            tail_sum(0.0, 1, 3)
        with pytest.raises(InvalidArgumentError):
            tail_sum(0.5, 0, 3)

    @pytest.mark.parametrize("phi", [1e-5, 1e-6])
    @pytest.mark.parametrize("K", [100_000, 1_000_000])
    @pytest.mark.parametrize("q", [1, 2, 3])
    def test_small_phase_large_K(self, phi, q, K):
        """Test finite tails and exact differences where phi (K + 1/2) is of order one."""
        n = 200_000
        k = np.arange(K, K + n, dtype=float)
        explicit = np.sum(np.exp(1j * phi * k) * (k + 0.5) ** (-float(q)))

        head = tail_sum(phi, q, K)
        difference = head - tail_sum(phi, q, K + n)

        assert np.isfinite(head)
        assert abs(difference - explicit) <= 1e-9 * abs(head)

    @pytest.mark.parametrize("q", [1, 2])
    def test_generating_series_meets_euler_maclaurin(self, q):
        """Test a difference straddling the switch to the generating series at tiny phi."""
        phi, K, n = 1e-5, 9_500_000, 1_000_000
        k = np.arange(K, K + n, dtype=float)
        explicit = np.sum(np.exp(1j * phi * k) * (k + 0.5) ** (-float(q)))

        far = tail_sum(phi, q, K + n)
        difference = tail_sum(phi, q, K) - far

        assert np.isfinite(far)
        assert abs(difference - explicit) <= 1e-9 * abs(explicit)


class TestOracle:
    """Tests for the spectral matrix oracle."""

    @pytest.mark.parametrize("kind", ["M", "A", "B"])
    def test_truncation_independent(self, kind):
        """Test that accelerated results at different K_F agree."""
        mesh, deg, dofmap = discretization(make_uniform(4, 1.0), DegreeVector.uniform(4, 2))
        coarse = partial_sum(kind, mesh, deg, dofmap, 0, 300) + tail_correction(kind, mesh, deg, dofmap, 300)
        fine = partial_sum(kind, mesh, deg, dofmap, 0, 3000) + tail_correction(kind, mesh, deg, dofmap, 3000)

        np.testing.assert_allclose(coarse, fine, atol=1e-10)

    def test_certificate(self):
        mesh, deg, dofmap = discretization(make_uniform(4, 1.0), DegreeVector.uniform(4, 1))
        result = oracle_matrix("B", mesh, deg, dofmap, SpectralConfig(K_F=2000))

        assert result.certified
        assert result.matrix.shape == (5, 5)
        assert "<=" in result.metadata()["selfconsistency"]

    def test_strict_certificate_raises(self):
        mesh, deg, dofmap = discretization(make_uniform(2, 1.0), DegreeVector.uniform(2, 1))
        cfg = SpectralConfig(K_F=50, tol=1e-30, accelerate=False)

        with pytest.raises(OracleConvergenceError) as info:
            oracle_matrix("M", mesh, deg, dofmap, cfg)
        assert info.value.certificate > 0

    def test_lenient_certificate_returns(self):
        mesh, deg, dofmap = discretization(make_uniform(2, 1.0), DegreeVector.uniform(2, 1))
        cfg = SpectralConfig(K_F=50, tol=1e-30, accelerate=False, certify=False)

        result = oracle_matrix("M", mesh, deg, dofmap, cfg)

        assert not result.certified
        assert ">" in result.metadata()["selfconsistency"]

    @pytest.mark.parametrize("K_F", [100_000, 1_000_000])
    def test_tail_correction_finite_at_large_truncation(self, K_F):
        mesh, deg, dofmap = discretization(make_geometric(8, 1.0, 0.17), DegreeVector.linear(8))

        tail = tail_correction("B", mesh, deg, dofmap, K_F)

        assert np.all(np.isfinite(tail))

    @pytest.mark.slow
    def test_graded_mesh_large_truncation_agrees(self):
        """Test the accelerated B at K_F = 4000 and 100000 on a geometric hp mesh."""
        mesh, deg, dofmap = discretization(make_geometric(8, 1.0, 0.17), DegreeVector.linear(8))
        coarse = partial_sum("B", mesh, deg, dofmap, 0, 4000) + tail_correction("B", mesh, deg, dofmap, 4000)
        fine = partial_sum("B", mesh, deg, dofmap, 0, 100_000) + tail_correction("B", mesh, deg, dofmap, 100_000)

        np.testing.assert_allclose(coarse, fine, atol=1e-10 * np.max(np.abs(fine)))

    def test_graded_mesh_certified_at_defaults(self):
        """Test the certificate is judged against the matrix scale on a geometric hp mesh."""
        mesh, deg, dofmap = discretization(make_geometric(8, 1.0, 0.17), DegreeVector.linear(8))

        result = oracle_matrix("B", mesh, deg, dofmap)

        assert result.certified
        assert result.scale == pytest.approx(np.max(np.abs(result.matrix)))
        assert result.metadata()["scale"] > 1.0

    def test_unknown_kind(self):
        mesh, deg, dofmap = discretization(make_uniform(2, 1.0), DegreeVector.uniform(2, 1))

        with pytest.raises(InvalidArgumentError):
            oracle_matrix("C", mesh, deg, dofmap)

    def test_single_element_entry_positive(self):
        """Test <phi_2, H_T phi_2> > 0 for the hat at T on one element."""
        mesh, deg, dofmap = discretization(make_uniform(1, 1.0), DegreeVector((1,)))
        result = oracle_matrix("M", mesh, deg, dofmap)

        assert result.matrix[1, 1] > 0

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", ["M", "A", "B"])
    def test_accelerated_against_brute_force(self, kind):
        """Test against 10^6 unaccelerated modes with one Richardson step."""
        mesh, deg, dofmap = discretization(make_dyadic(3, 1.0), DegreeVector.uniform(3, 2))
        half = partial_sum(kind, mesh, deg, dofmap, 0, 500_000)
        full = half + partial_sum(kind, mesh, deg, dofmap, 500_000, 1_000_000)
        brute = 2.0 * full - half

        accelerated = oracle_matrix(kind, mesh, deg, dofmap, SpectralConfig(K_F=2000)).matrix
        rng = np.random.default_rng(5)
        i = rng.integers(0, dofmap.M, 20)
        j = rng.integers(0, dofmap.M, 20)

        np.testing.assert_allclose(accelerated[i, j], brute[i, j], atol=1e-9)


class TestPointwise:
    """Tests for the pointwise appliers."""

    def test_single_mode(self):
        t = np.linspace(0.0, 2.0, 9)

        np.testing.assert_allclose(ht_apply_spectral([1.0], t, 2.0), np.cos(np.pi * t / 4.0), atol=1e-15)
        assert ht_apply_spectral(np.zeros(5), 0.3, 2.0) == 0.0

    def test_parseval(self):
        """Test ||H_T v|| = ||v|| = sqrt(T/2) ||c|| for a truncated series."""
        T = 1.5
        c = np.random.default_rng(3).normal(size=40)
        rule = gauss_legendre(64)
        panels = 20
        t = ((np.arange(panels)[:, None] + rule.nodes[None, :]) * T / panels).ravel()
        w = np.tile(rule.weights * T / panels, panels)

        norm2 = np.sum(w * ht_apply_spectral(c, t, T) ** 2)

        assert norm2 == pytest.approx(T / 2 * np.sum(c ** 2), rel=1e-12)

    def test_sine_coefficients_of_linear_function(self):
        """Test v_k = (2/T) int t sin(lambda_k t) against the closed form."""
        T = 1.0
        v = PiecewisePolynomial(np.array([0.0, 1.0]), (Polynomial([0.0, 1.0]),))
        coeffs = sine_coefficients(v, 5)
        lam = frequencies(T, 0, 5)
        expected = 2.0 * (-1.0) ** np.arange(5) / lam ** 2

        np.testing.assert_allclose(coeffs, expected, rtol=1e-13)

    def test_physical_pieces(self):
        """Test t written piecewise in the physical variable keeps its sine coefficients."""
        v = PiecewisePolynomial.from_physical([0.0, 0.25, 1.0], [Polynomial([0.0, 1.0])] * 2)
        lam = frequencies(1.0, 0, 5)

        assert v.pieces[1](0.0) == pytest.approx(0.25)
        np.testing.assert_allclose(sine_coefficients(v, 5), 2.0 * (-1.0) ** np.arange(5) / lam ** 2, rtol=1e-12)

    def test_weakly_singular_zero_function(self):
        assert ht_pointwise_lemma22(Polynomial([0.0]), 0.2, 0.5, 0.3, 1.0) == 0.0

    def test_weakly_singular_against_cauchy_form(self):
        """Test the weakly singular form against the principal-value form on (0, T)."""
        T = 1.0
        f = Polynomial([0.3, -1.0, 2.0])
        for t in (0.1, 0.37, 0.8):
            weak = ht_pointwise_lemma22(f, 0.0, T, t, T)
            cauchy = ht_apply_cauchy(f, t, T)
            assert weak == pytest.approx(cauchy, abs=1e-9)

    def test_weakly_singular_against_spectral_random(self):
        """Test agreement with the accelerated spectral applier at interior points."""
        rng = np.random.default_rng(2024)
        for _ in range(3):
            v = random_piecewise(rng)
            t = rng.uniform(0.02, 0.98, 20)
            t = t[np.min(np.abs(t[:, None] - v.breakpoints[None, :]), axis=1) > 1e-3]

            np.testing.assert_allclose(ht_apply_lemma22(v, t), ht_apply_piecewise(v, t), atol=1e-8)

    @pytest.mark.slow
    def test_weakly_singular_against_spectral_many(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            v = random_piecewise(rng, T=2.0, n_pieces=4, degree=4)
            t = rng.uniform(0.05, 1.95, 20)
            t = t[np.min(np.abs(t[:, None] - v.breakpoints[None, :]), axis=1) > 1e-3]

            np.testing.assert_allclose(ht_apply_lemma22(v, t), ht_apply_piecewise(v, t), atol=1e-8)

    def test_boundary_variant_left(self):
        """Test t = a when f(a) = 0."""
        a, b, T = 0.25, 0.6, 1.0
        h = b - a
        v = PiecewisePolynomial(
            np.array([0.0, a, b, T]),
            (Polynomial([0.0]), Polynomial([0.0, h * h, -h * h]), Polynomial([0.0])),
        )
        f = Polynomial([-a * b, a + b, -1.0])

        assert ht_pointwise_lemma22(f, a, b, a, T) == pytest.approx(ht_apply_piecewise(v, a), abs=1e-8)

    def test_boundary_variant_right(self):
        """Test t = b when f(b) = 0."""
        a, b, T = 0.25, 0.6, 1.0
        h = b - a
        v = PiecewisePolynomial(
            np.array([0.0, a, b, T]),
            (Polynomial([0.0]), Polynomial([h, -h]), Polynomial([0.0])),
        )
        f = Polynomial([b, -1.0])

        assert ht_pointwise_lemma22(f, a, b, b, T) == pytest.approx(ht_apply_piecewise(v, b), abs=1e-8)

    def test_endpoint_singularity(self):
        with pytest.raises(DomainError):
            ht_pointwise_lemma22(Polynomial([1.0]), 0.2, 0.5, 0.5, 1.0)
        with pytest.raises(DomainError):
            ht_pointwise_lemma22(Polynomial([1.0]), 0.2, 0.5, 1.0, 1.0)
