import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis.strategies import integers

from DecoLab import numerics
from DecoLab.exceptions import (
    InvalidProbabilityVectorError,
    NotHermitianError,
    NotNormalizedError,
    NotPSDError,
)


class TestHermitianEig(unittest.TestCase):
    """Test suite for the Hermitian eigendecomposition"""

    def setUp(self):
        self.rng = np.random.default_rng(1234)

    def test_eigenvalues_descending_and_reconstruct(self):
        """Test eigenvalues come sorted descending and reconstruct the input"""
        m = numerics.random_hermitian(5, self.rng)
        spectrum = numerics.hermitian_eig(m)

        self.assertTrue(np.all(np.diff(spectrum.eigenvalues) <= 0))
        np.testing.assert_allclose(spectrum.reconstruct(), m, atol=1e-12)

    def test_eigenvectors_orthonormal(self):
        """Test eigenvector columns are orthonormal"""
        m = numerics.random_hermitian(4, self.rng)
        v = numerics.hermitian_eig(m).eigenvectors

        np.testing.assert_allclose(v.conj().T @ v, np.eye(4), atol=1e-12)

    def test_phase_convention_deterministic(self):
        """Test the largest component of each eigenvector is real and positive"""
        m = numerics.random_hermitian(3, self.rng)
        v = numerics.hermitian_eig(m).eigenvectors

        for j in range(3):
            pivot = v[np.argmax(np.abs(v[:, j])), j]
            self.assertAlmostEqual(pivot.imag, 0.0, places=14)
            self.assertGreater(pivot.real, 0.0)

    def test_non_hermitian_rejected(self):
        """Test a non-Hermitian matrix raises NotHermitianError"""
        with self.assertRaises(NotHermitianError):
            numerics.hermitian_eig([[1, 1j], [1j, 1]])

    def test_non_square_rejected(self):
        """Test a rectangular matrix raises NotHermitianError"""
        with self.assertRaises(NotHermitianError):
            numerics.hermitian_eig(np.ones((2, 3)))

    def test_numerical_rank_relative(self):
        """Test rank counts eigenvalues above tol times the largest"""
        self.assertEqual(numerics.numerical_rank(np.array([2.0, 1.0, 1e-13])), 2)
        self.assertEqual(numerics.numerical_rank(np.array([0.0, 0.0])), 0)


class TestPSD(unittest.TestCase):
    """Test suite for PSD checks and factorizations"""

    def test_check_psd_reports_min_eigenvalue(self):
        """Test NotPSDError carries the offending eigenvalue"""
        with self.assertRaises(NotPSDError) as ctx:
            numerics.check_psd([[1, 2], [2, 1]])

        self.assertAlmostEqual(ctx.exception.min_eigenvalue, -1.0, places=12)

    def test_check_psd_tolerates_rounding(self):
        """Test tiny negative eigenvalues within tolerance pass"""
        m = np.array([[1.0, 1.0], [1.0, 1.0]]) - 1e-14 * np.eye(2)
        spectrum = numerics.check_psd(m)

        self.assertAlmostEqual(spectrum.eigenvalues[0], 2.0, places=12)

    def test_psd_factor_qubit_example(self):
        """Test the Gram factor of [[1, .6], [.6, 1]] is (1, 0), (0.6, 0.8)"""
        g = numerics.psd_factor([[1, 0.6], [0.6, 1]])

        self.assertEqual(g.shape, (2, 2))
        np.testing.assert_allclose(g[:, 0], [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(g[:, 1], [0.6, 0.8], atol=1e-12)

    def test_psd_factor_rank_deficient(self):
        """Test a rank-one matrix factors into a single row"""
        g = numerics.psd_factor(np.ones((3, 3)))

        self.assertEqual(g.shape, (1, 3))
        np.testing.assert_allclose(numerics.gram(g), np.ones((3, 3)), atol=1e-12)

    def test_psd_factor_reconstructs_random(self):
        """Test G^H G reproduces random correlation matrices"""
        rng = np.random.default_rng(7)
        for d in range(2, 6):
            xi = numerics.random_correlation_matrix(d, rng, rank=2)
            g = numerics.psd_factor(xi)
            self.assertEqual(g.shape[0], 2)
            np.testing.assert_allclose(numerics.gram(g), xi, atol=1e-10)

    def test_schur_product_shapes(self):
        """Test the Schur product is entrywise and needs equal shapes"""
        a = np.array([[1, 2], [3, 4]])
        np.testing.assert_array_equal(numerics.schur_product(a, a), [[1, 4], [9, 16]])
        with self.assertRaises(ValueError):
            numerics.schur_product(a, np.ones((3, 3)))


class TestEntropy(unittest.TestCase):
    """Test suite for entropies"""

    def test_maximally_mixed_entropy(self):
        """Test S(I/d) = log2 d"""
        for d in (2, 3, 4):
            self.assertAlmostEqual(
                numerics.von_neumann_entropy(numerics.unit_trace_maximally_mixed(d)), np.log2(d), places=12
            )

    def test_pure_state_entropy_zero(self):
        """Test a pure state has zero entropy"""
        psi = np.array([1, 1j]) / np.sqrt(2)
        self.assertAlmostEqual(numerics.von_neumann_entropy(np.outer(psi, psi.conj())), 0.0, places=12)

    def test_unnormalized_rejected(self):
        """Test a trace-two matrix raises NotNormalizedError"""
        with self.assertRaises(NotNormalizedError) as ctx:
            numerics.von_neumann_entropy(np.eye(2))

        self.assertAlmostEqual(ctx.exception.trace, 2.0)

    def test_normalize_option(self):
        """Test normalize=True divides by the trace"""
        self.assertAlmostEqual(numerics.von_neumann_entropy(np.eye(2), normalize=True), 1.0, places=12)

    def test_shannon_entropy(self):
        """Test the binary entropy of (0.8, 0.2)"""
        self.assertAlmostEqual(numerics.shannon_entropy([0.8, 0.2]), 0.7219280948873623, places=12)
        self.assertEqual(numerics.shannon_entropy([1.0, 0.0]), 0.0)

    def test_invalid_probability_vectors(self):
        """Test negative entries and bad sums are rejected"""
        for p in ([0.5, 0.6], [-0.1, 1.1], [], [np.nan, 1.0]):
            with self.assertRaises(InvalidProbabilityVectorError):
                numerics.check_probability_vector(p)


class TestFidelityAndPartialTrace(unittest.TestCase):
    """Test suite for fidelity and partial traces"""

    def setUp(self):
        self.rng = np.random.default_rng(99)

    def test_pure_state_fidelity(self):
        """Test fidelity of pure states is the squared overlap"""
        a = numerics.random_density_matrix(3, self.rng, pure=True)
        b = numerics.random_density_matrix(3, self.rng, pure=True)
        expected = float(np.real(np.trace(a @ b)))

        self.assertAlmostEqual(numerics.state_fidelity(a, b), expected, places=9)

    def test_pure_state_fidelity_many_pairs(self):
        """Test rank-one inputs match Tr[ab] to 1e-10 across seeded pairs"""
        for d in (2, 3, 4, 6):
            for _ in range(25):
                a = numerics.random_density_matrix(d, self.rng, pure=True)
                b = numerics.random_density_matrix(d, self.rng, pure=True)
                expected = float(np.real(np.trace(a @ b)))

                self.assertLess(abs(numerics.state_fidelity(a, b) - expected), 1e-10)

    def test_fidelity_symmetric(self):
        """Test F(a, b) = F(b, a) for pure, mixed and rank-deficient pairs"""
        for d in (2, 3, 5):
            for _ in range(20):
                a = numerics.random_density_matrix(d, self.rng, pure=True)
                b = numerics.random_density_matrix(d, self.rng)
                c = numerics.random_density_matrix(d, self.rng, pure=True)
                # rank two in dimension d >= 3
                low = 0.5 * (a + c)
                for x, y in ((a, b), (a, c), (b, low), (low, a)):
                    self.assertLess(
                        abs(numerics.state_fidelity(x, y) - numerics.state_fidelity(y, x)), 1e-10
                    )

    def test_fidelity_with_itself(self):
        """Test F(rho, rho) = 1"""
        rho = numerics.random_density_matrix(4, self.rng)
        self.assertAlmostEqual(numerics.state_fidelity(rho, rho), 1.0, places=9)

    def test_partial_trace_of_product(self):
        """Test tracing out one factor of a product state"""
        a = numerics.random_density_matrix(2, self.rng)
        b = numerics.random_density_matrix(3, self.rng)
        joint = np.kron(a, b)

        np.testing.assert_allclose(numerics.partial_trace(joint, [2, 3], keep=[0]), a, atol=1e-12)
        np.testing.assert_allclose(numerics.partial_trace(joint, [2, 3], keep=[1]), b, atol=1e-12)

    def test_partial_trace_three_parties(self):
        """Test keeping the middle factor of a three-party product"""
        parts = [numerics.random_density_matrix(d, self.rng) for d in (2, 2, 3)]
        joint = np.kron(np.kron(parts[0], parts[1]), parts[2])

        np.testing.assert_allclose(numerics.partial_trace(joint, [2, 2, 3], keep=[1]), parts[1], atol=1e-12)


class TestRandomGenerators(unittest.TestCase):
    """Test suite for the seeded generators"""

    @settings(max_examples=30, deadline=None)
    @given(integers(min_value=0, max_value=2**32 - 1), integers(min_value=2, max_value=6))
    def test_random_correlation_matrix_valid(self, seed, d):
        """Test generated correlation matrices have unit diagonal and are PSD"""
        rng = np.random.default_rng(seed)
        xi = numerics.random_correlation_matrix(d, rng)

        np.testing.assert_allclose(np.diag(xi), np.ones(d), atol=1e-15)
        self.assertTrue(numerics.is_hermitian(xi))
        numerics.check_psd(xi)

    def test_random_correlation_matrix_rank(self):
        """Test the rank argument bounds the numerical rank"""
        rng = np.random.default_rng(3)
        xi = numerics.random_correlation_matrix(5, rng, rank=2)

        self.assertEqual(numerics.hermitian_eig(xi).rank(), 2)

    def test_random_phase_vector_gauge(self):
        """Test the first phase is zero"""
        phases = numerics.random_phase_vector(4, np.random.default_rng(0))

        self.assertEqual(phases[0], 0.0)
        self.assertTrue(np.all((phases >= 0) & (phases < 2 * np.pi)))

    def test_random_density_matrix_valid(self):
        """Test random density matrices pass validation"""
        rng = np.random.default_rng(5)
        for pure in (False, True):
            numerics.check_density(numerics.random_density_matrix(4, rng, pure=pure))


if __name__ == '__main__':
    unittest.main()
