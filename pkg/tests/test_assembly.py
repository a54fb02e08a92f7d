"""
Tests for local blocks, the J tables and global assembly.
"""

import numpy as np
import pytest
from scipy import integrate

from ht_quadrature.assembly import (
    Assembler,
    GRADING_RATIO,
    QuadConfig,
    assemble,
    compute_J,
    grading_levels,
    local_B,
    local_M,
    near_singular_rule,
)
from ht_quadrature.config import SpectralConfig
from ht_quadrature.exceptions import InvalidArgumentError
from ht_quadrature.kernels import RegCase
from ht_quadrature.mesh import DegreeVector, build_dofmap, make_dyadic, make_explicit, make_uniform
from ht_quadrature.shapefn import shape_table
from ht_quadrature.solver import gather_columns
from ht_quadrature.spectral import oracle_matrix
from ht_quadrature.studies import log_fit


def random_mesh(rng, N, T=1.0):
    """Random breakpoints with every element at most T/2."""
    while True:
        inner = np.sort(rng.uniform(0.0, T, N - 1))
        mesh = make_explicit(np.concatenate([[0.0], inner, [T]]), T)
        if mesh.theorem41_ok and np.min(mesh.h) > 1e-3 * T:
            return mesh


@pytest.fixture(scope="module")
def dyadic_case():
    """T = 10, dyadic N = 6, uniform p = 2 with its spectral references."""
    mesh = make_dyadic(6, 10.0)
    deg = DegreeVector.uniform(6, 2)
    dofmap = build_dofmap(mesh, deg)
    references = {kind: oracle_matrix(kind, mesh, deg, dofmap).matrix for kind in ("M", "A", "B")}
    return mesh, deg, dofmap, references


class TestQuadConfig:
    """Tests for quadrature order selection."""

    def test_defaults(self):
        cfg = QuadConfig.from_K(None, 2)

        assert cfg.K_reg == 12
        assert cfg.K_log == 5
        assert cfg.K_3 == cfg.K_4 == cfg.K_log

    def test_orders_raised_for_high_degree(self):
        cfg = QuadConfig.from_K(2, 9)

        assert cfg.K_reg == 5
        assert cfg.K_1 == cfg.K_2 == cfg.K_5 == 5

    @pytest.mark.parametrize("p_max", [1, 4, 9])
    def test_log_order_bound(self, p_max):
        """Test K_log = p_max + 1 is the smallest accepted log-rule order."""
        assert QuadConfig.from_K(8, p_max, K_log=p_max + 1).K_log == p_max + 1
        with pytest.raises(InvalidArgumentError):
            QuadConfig.from_K(8, p_max, K_log=p_max)

    def test_order_above_maximum(self):
        with pytest.raises(InvalidArgumentError):
            QuadConfig.from_K(65, 2)


class TestNearSingularRules:
    """Tests for the graded rules next to a log singularity outside the element."""

    @pytest.mark.parametrize("distance, levels", [(2.0, 0), (1.0, 0), (0.5, 1), (1e-3, 10)])
    def test_levels(self, distance, levels):
        assert grading_levels(distance) == levels
        if levels:
            assert GRADING_RATIO ** levels <= distance

    @pytest.mark.parametrize("delta", [0.5, 1e-2, 1e-4])
    def test_log_just_outside(self, delta):
        """Test int_0^1 ln(eta + delta) and its mirror at default K."""
        exact = (1 + delta) * np.log(1 + delta) - delta * np.log(delta) - 1.0
        eta, w = near_singular_rule(12, delta, "a")
        mirrored, w_b = near_singular_rule(12, delta, "b")

        assert np.sum(w * np.log(eta + delta)) == pytest.approx(exact, abs=1e-13)
        assert np.sum(w_b * np.log(1.0 + delta - mirrored)) == pytest.approx(exact, abs=1e-13)

    def test_weights_integrate_polynomials(self):
        eta, w = near_singular_rule(6, 1e-3, "both")

        assert np.sum(w) == pytest.approx(1.0, abs=1e-14)
        assert np.sum(w * eta ** 5) == pytest.approx(1.0 / 6.0, abs=1e-14)


class TestLocalBlocks:
    """Tests for element-pair blocks."""

    def test_block_shapes(self):
        mesh = make_uniform(3, 1.0)
        deg = DegreeVector((1, 3, 2))

        assert local_M(2, 3, mesh, deg).values.shape == (4, 3)
        assert local_B(3, 1, mesh, deg).values.shape == (3, 2)

    def test_boundary_gate_first_element_only(self):
        """Test boundary=False drops exactly the point term phi_1(0) calK(0, t) of row block k = 1."""
        mesh = make_dyadic(3, 2.0)
        deg = DegreeVector((2, 3, 2))
        assembler = Assembler(mesh, deg, QuadConfig.from_K(20, 3))

        for ell in range(1, mesh.N + 1):
            a, b = mesh.element(ell)
            h = b - a
            c = np.pi / (4.0 * mesh.T)
            log_tan = [
                integrate.quad(
                    lambda eta, m=m: shape_table(deg[ell], eta)[m] * np.log(np.tan(c * (a + h * eta))),
                    0.0, 1.0, limit=200, epsabs=1e-14,
                )[0]
                for m in range(deg[ell] + 1)
            ]
            full = assembler.local_M(1, ell).values
            gated = assembler.local_M(1, ell, boundary=False).values

            np.testing.assert_allclose(full[0] - gated[0], -(2.0 * h / np.pi) * np.array(log_tan), atol=1e-12)
            np.testing.assert_allclose(full[1:], gated[1:], atol=1e-15)
            A_full = assembler.local_A(1, ell).values
            A_gated = assembler.local_A(1, ell, boundary=False).values
            np.testing.assert_allclose(A_full[1:], A_gated[1:], atol=1e-15)
            assert np.max(np.abs(A_full[0] - A_gated[0])) > 0
            for k in (2, 3):
                M_k, A_k = assembler.local_M(k, ell), assembler.local_A(k, ell)
                np.testing.assert_array_equal(M_k.values, assembler.local_M(k, ell, boundary=False).values)
                np.testing.assert_array_equal(A_k.values, assembler.local_A(k, ell, boundary=False).values)

    def test_pair_cases(self):
        assembler = Assembler(make_uniform(3, 1.0), DegreeVector.uniform(3, 1))

        assert assembler.pair_case(1, 1)[0] == RegCase.FIRST
        assert assembler.pair_case(3, 3)[0] == RegCase.LAST
        assert assembler.pair_case(1, 3)[0] == RegCase.GENERAL
        assert Assembler(make_uniform(1, 1.0), DegreeVector((2,))).pair_case(1, 1)[0] == RegCase.SINGLE

    def test_pair_out_of_range(self):
        assembler = Assembler(make_uniform(2, 1.0), DegreeVector.uniform(2, 1))

        with pytest.raises(InvalidArgumentError):
            assembler.local_M(0, 1)
        with pytest.raises(InvalidArgumentError):
            assembler.compute_J(1, 1, 2)
        with pytest.raises(InvalidArgumentError):
            assembler.local("C", 1, 1)

    def test_degree_count_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            Assembler(make_uniform(3, 1.0), DegreeVector((1, 1)))


class TestJTables:
    """Tests for the J^0 / J^1 boundary integrals."""

    def test_last_element_vanishes(self):
        mesh = make_dyadic(4, 2.0)
        deg = DegreeVector.uniform(4, 3)

        assert np.all(compute_J(4, 4, 1, mesh, deg) == 0.0)
        for ell in range(1, 4):
            np.testing.assert_array_equal(compute_J(4, ell, 1, mesh, deg), 0.0)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_shared_breakpoint_identity(self, seed):
        """Test J^0_{k,l} = J^1_{k-1,l}, both built from t_{k-1}."""
        rng = np.random.default_rng(seed)
        mesh = random_mesh(rng, 5)
        deg = DegreeVector(tuple(int(p) for p in rng.integers(1, 5, mesh.N)))
        assembler = Assembler(mesh, deg, QuadConfig.from_K(24, deg.p_max))

        for k in range(2, mesh.N + 1):
            for ell in range(1, mesh.N + 1):
                np.testing.assert_allclose(
                    assembler.compute_J(k, ell, 0), assembler.compute_J(k - 1, ell, 1), atol=1e-12
                )


class TestGlobalAssembly:
    """Tests for assembled matrices."""

    def test_tilde_is_trailing_block(self):
        matrix = assemble("A", make_uniform(4, 1.0), DegreeVector.uniform(4, 1))

        assert matrix.M == 5
        np.testing.assert_array_equal(matrix.tilde, matrix.values[1:, 1:])

    def test_threads_deterministic(self):
        mesh = make_dyadic(4, 1.0)
        deg = DegreeVector.linear(4)
        serial = assemble("B", mesh, deg, threads=1)
        parallel = assemble("B", mesh, deg, threads=4)

        np.testing.assert_array_equal(serial.values, parallel.values)

    def test_broken_gathers_to_global(self):
        mesh = make_uniform(3, 1.0)
        deg = DegreeVector((2, 1, 3))
        assembler = Assembler(mesh, deg)

        for kind in ("M", "A", "B"):
            gathered = gather_columns(assembler.assemble_broken(kind), assembler.dofmap)
            np.testing.assert_allclose(gathered, assembler.assemble(kind).values, atol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            assemble("C", make_uniform(2, 1.0), DegreeVector.uniform(2, 1))

    @pytest.mark.parametrize("kind", ["M", "A", "B"])
    def test_matches_oracle_at_K20(self, dyadic_case, kind):
        mesh, deg, dofmap, references = dyadic_case
        qcfg = QuadConfig.from_K(20, deg.p_max)

        assembled = assemble(kind, mesh, deg, dofmap, qcfg).values

        assert np.max(np.abs(assembled - references[kind])) <= 1e-9

    def test_linear_B_matches_oracle(self):
        """Test the p = 1 case, where only the J terms contribute."""
        mesh = make_uniform(4, 1.0)
        deg = DegreeVector.uniform(4, 1)
        dofmap = build_dofmap(mesh, deg)
        reference = oracle_matrix("B", mesh, deg, dofmap, SpectralConfig(K_F=2000)).matrix

        assembled = assemble("B", mesh, deg, dofmap, QuadConfig.from_K(20, 1)).values

        np.testing.assert_allclose(assembled, reference, atol=1e-9)

    def test_single_element(self):
        mesh = make_uniform(1, 1.0)
        deg = DegreeVector((3,))
        dofmap = build_dofmap(mesh, deg)
        reference = oracle_matrix("M", mesh, deg, dofmap).matrix

        assembled = assemble("M", mesh, deg, dofmap, QuadConfig.from_K(20, 3)).values

        np.testing.assert_allclose(assembled, reference, atol=1e-8)

    @pytest.mark.slow
    def test_exponential_convergence_in_K(self, dyadic_case):
        """Test a log-linear decay in K up to the rounding floor, and 1e-9 at K = 20."""
        mesh, deg, dofmap, references = dyadic_case
        K_values = list(range(2, 21))
        for kind in ("M", "A", "B"):
            errors = []
            for K in K_values:
                assembled = assemble(kind, mesh, deg, dofmap, QuadConfig.from_K(K, deg.p_max)).values
                errors.append(np.max(np.abs(assembled - references[kind])))
            # points on the rounding floor carry no rate
            decaying = [(K, err) for K, err in zip(K_values, errors) if err > 1e-12]
            fit = log_fit([K for K, _ in decaying], [err for _, err in decaying])

            assert len(decaying) >= 3
            assert fit["correlation"] <= -0.97
            assert errors[-1] <= 1e-9

    @pytest.mark.parametrize("kind", ["M", "A", "B"])
    def test_scaling_in_T(self, kind):
        """Test M scales like c, A is invariant and B scales like 1/c under t -> c t."""
        mesh = make_dyadic(4, 1.0)
        deg = DegreeVector((1, 2, 3, 2))
        qcfg = QuadConfig.from_K(20, deg.p_max)
        power = {"M": 1, "A": 0, "B": -1}[kind]
        base = assemble(kind, mesh, deg, qcfg=qcfg).values
        for c in (0.1, 10.0):
            scaled = assemble(kind, mesh.scaled(c), deg, qcfg=qcfg).values

            np.testing.assert_allclose(scaled, c ** power * base, rtol=1e-12, atol=1e-13 * c ** power)

    def test_strongly_graded_neighbours_at_defaults(self):
        """Test a T = 10 mesh with a 0.037 element next to a 1.97 one against the oracle."""
        mesh = make_explicit([0.0, 1.97, 2.007, 4.0, 7.0, 10.0])
        deg = DegreeVector((4, 2, 3, 4, 1))
        dofmap = build_dofmap(mesh, deg)
        assembler = Assembler(mesh, deg, dofmap=dofmap)

        for kind in ("M", "A", "B"):
            reference = oracle_matrix(kind, mesh, deg, dofmap).matrix
            assert np.max(np.abs(assembler.assemble(kind).values - reference)) <= 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_random_meshes_at_defaults(self, seed):
        """Test default orders against the oracle on random meshes with N <= 5, p <= 4."""
        rng = np.random.default_rng(100 + seed)
        T = (1.0, 10.0)[seed % 2]
        mesh = random_mesh(rng, int(rng.integers(3, 6)), T)
        deg = DegreeVector(tuple(int(p) for p in rng.integers(1, 5, mesh.N)))
        dofmap = build_dofmap(mesh, deg)
        assembler = Assembler(mesh, deg, dofmap=dofmap)

        for kind in ("M", "A", "B"):
            reference = oracle_matrix(kind, mesh, deg, dofmap).matrix
            assert np.max(np.abs(assembler.assemble(kind).values - reference)) <= 1e-9
