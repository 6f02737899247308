import unittest

import numpy as np

from DecoLab import channel, numerics
from DecoLab.exceptions import (
    DiagonalNotUnitError,
    DimensionMismatchError,
    InvalidParameterError,
    NotHermitianError,
    NotNormalizedError,
    NotPSDError,
    ProjectorsIncompleteError,
    ProjectorsNotOrthogonalError,
)
from DecoLab.reference_matrices import EXTREMAL_D4, PLUS_STATE, QUBIT_06


class TestValidateCorrelation(unittest.TestCase):
    """Test suite for correlation-matrix validation"""

    def test_extremal_example_is_strict_rank_two(self):
        """Test the ququart example validates as strict with rank 2"""
        ch = channel.make_channel(EXTREMAL_D4)

        self.assertTrue(ch.strict)
        self.assertEqual(ch.rank, 2)
        self.assertEqual(ch.dim, 4)

    def test_all_ones_is_border_map(self):
        """Test the all-ones matrix is valid but not strict"""
        ch = channel.make_channel(np.ones((3, 3)))

        self.assertFalse(ch.strict)
        self.assertTrue(channel.is_border_map(ch))
        self.assertEqual(ch.rank, 1)

    def test_diagonal_entry_reported(self):
        """Test a non-unit diagonal reports its index"""
        with self.assertRaises(DiagonalNotUnitError) as ctx:
            channel.validate_correlation([[1, 0], [0, 0.9]])

        self.assertEqual(ctx.exception.index, 1)

    def test_not_psd(self):
        """Test an off-diagonal modulus above one breaks PSD"""
        with self.assertRaises(NotPSDError):
            channel.validate_correlation([[1, 1.5], [1.5, 1]])

    def test_not_hermitian(self):
        """Test a non-Hermitian input is rejected before the diagonal check"""
        with self.assertRaises(NotHermitianError):
            channel.validate_correlation([[1, 0.5], [0.2, 1]])

    def test_single_level_rejected(self):
        """Test a 1x1 matrix is not accepted as a correlation matrix"""
        with self.assertRaises(DimensionMismatchError):
            channel.validate_correlation([[1.0]])

    def test_channel_is_immutable(self):
        """Test the stored correlation matrix cannot be written"""
        ch = channel.make_channel(QUBIT_06)

        with self.assertRaises(ValueError):
            ch.xi[0, 1] = 0.0


class TestSchurAction(unittest.TestCase):
    """Test suite for the Schur action in both pictures"""

    def setUp(self):
        self.rng = np.random.default_rng(2024)
        self.ch = channel.make_channel(QUBIT_06)

    def test_identity_channel_preserves_state(self):
        """Test the all-ones channel leaves states unchanged"""
        rho = numerics.random_density_matrix(3, self.rng)
        out = channel.apply_schrodinger(channel.identity_channel(3), rho)

        np.testing.assert_allclose(out.rho, rho, atol=1e-15)

    def test_complete_dephasing_kills_coherences(self):
        """Test xi = I keeps only the diagonal"""
        rho = numerics.random_density_matrix(3, self.rng)
        out = channel.apply_schrodinger(channel.complete_dephasing(3), rho)

        np.testing.assert_allclose(out.rho, channel.dephase_limit(rho).rho, atol=1e-15)

    def test_plus_state_coherence(self):
        """Test the qubit map shrinks |+><+| coherences to 0.3"""
        out = channel.apply_schrodinger(self.ch, PLUS_STATE)

        self.assertAlmostEqual(out.rho[0, 1], 0.3)
        self.assertAlmostEqual(out.rho[0, 0], 0.5)

    def test_unital_heisenberg(self):
        """Test the Heisenberg map fixes the identity"""
        np.testing.assert_allclose(channel.apply_heisenberg(self.ch, np.eye(2)), np.eye(2), atol=1e-12)

    def test_duality(self):
        """Test Tr[E(O) rho] = Tr[O E_S(rho)]"""
        ch = channel.make_channel(numerics.random_correlation_matrix(4, self.rng))
        o = numerics.random_hermitian(4, self.rng)
        rho = numerics.random_density_matrix(4, self.rng)

        left = np.trace(channel.apply_heisenberg(ch, o) @ rho)
        right = np.trace(o @ channel.apply_schrodinger(ch, rho).rho)
        self.assertAlmostEqual(left, right, places=12)

    def test_output_is_density_matrix(self):
        """Test the Schrodinger action keeps trace one and positivity"""
        for d in range(2, 6):
            for rank in (1, 2, d):
                ch = channel.make_channel(numerics.random_correlation_matrix(d, self.rng, rank=rank))
                rho = numerics.random_density_matrix(d, self.rng, pure=(rank == 1))
                out = channel.apply_schrodinger(ch, rho).rho

                self.assertAlmostEqual(float(np.real(np.trace(out))), 1.0, places=12)
                np.testing.assert_allclose(out, out.conj().T, atol=1e-15)
                self.assertGreaterEqual(float(np.min(np.linalg.eigvalsh(out))), -1e-12)

    def test_diagonal_observables_fixed(self):
        """Test diagonal observables pass through the Heisenberg map unchanged"""
        for d in (2, 3, 5):
            ch = channel.make_channel(numerics.random_correlation_matrix(d, self.rng))
            o = np.diag(self.rng.normal(size=d))

            np.testing.assert_allclose(channel.apply_heisenberg(ch, o), o, atol=1e-15)

    def test_dephased_state_is_fixed_point(self):
        """Test dephase_limit is idempotent and left alone by every channel"""
        ch = channel.make_channel(numerics.random_correlation_matrix(4, self.rng))
        limit = channel.dephase_limit(numerics.random_density_matrix(4, self.rng)).rho

        np.testing.assert_array_equal(channel.dephase_limit(limit).rho, limit)
        np.testing.assert_allclose(channel.apply_schrodinger(ch, limit).rho, limit, atol=1e-15)

    def test_dimension_mismatch(self):
        """Test applying a qubit channel to a qutrit state raises"""
        with self.assertRaises(DimensionMismatchError):
            channel.apply_schrodinger(self.ch, np.eye(3) / 3)

    def test_density_matrix_validation(self):
        """Test density_matrix rejects non-unit trace"""
        with self.assertRaises(NotNormalizedError):
            channel.density_matrix(np.eye(2))
        self.assertEqual(channel.density_matrix(PLUS_STATE).dim, 2)


class TestIterationAndComposition(unittest.TestCase):
    """Test suite for iterates and compositions"""

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_iterate_is_entrywise_power(self):
        """Test the n-th iterate multiplies moduli n times"""
        ch = channel.make_channel([[1, 0.5], [0.5, 1]])
        rho = PLUS_STATE
        out = channel.apply_schrodinger(channel.iterate(ch, 3), rho)

        self.assertAlmostEqual(abs(out.rho[0, 1]), 0.0625, places=15)

    def test_iterate_zero_is_identity(self):
        """Test n = 0 returns the identity channel"""
        ch = channel.make_channel(QUBIT_06)

        np.testing.assert_array_equal(channel.iterate(ch, 0).xi, np.ones((2, 2)))

    def test_iterate_negative_rejected(self):
        """Test a negative iteration count raises InvalidParameterError"""
        with self.assertRaises(InvalidParameterError):
            channel.iterate(channel.make_channel(QUBIT_06), -1)

    def test_iterate_matches_repeated_application(self):
        """Test iterate agrees with applying the channel n times"""
        ch = channel.make_channel(numerics.random_correlation_matrix(3, self.rng))
        rho = numerics.random_density_matrix(3, self.rng)
        state = rho
        for _ in range(5):
            state = channel.apply_schrodinger(ch, state).rho

        np.testing.assert_allclose(channel.apply_schrodinger(channel.iterate(ch, 5), rho).rho, state, atol=1e-12)

    def test_strict_iterates_reach_dephase_limit(self):
        """Test 60 steps of a strict channel land within 1e-9 of the diagonal part"""
        matrices = [
            [[1, 0.5, 0.3], [0.5, 1, 0.4], [0.3, 0.4, 1]],
            [[1, 0.3 + 0.4j], [0.3 - 0.4j, 1]],
            QUBIT_06,
        ]
        for xi in matrices:
            ch = channel.make_channel(xi)
            self.assertTrue(ch.strict)
            rho = numerics.random_density_matrix(ch.dim, self.rng)
            out = channel.apply_schrodinger(channel.iterate(ch, 60), rho).rho

            np.testing.assert_allclose(out, channel.dephase_limit(rho).rho, atol=1e-9)

    def test_schur_product_closure(self):
        """Test the composition of two channels is again a valid correlation matrix"""
        for d in range(2, 6):
            for rank in (1, 2, d):
                a = channel.make_channel(numerics.random_correlation_matrix(d, self.rng, rank=rank))
                b = channel.make_channel(numerics.random_correlation_matrix(d, self.rng))
                product = channel.compose(a, b).xi

                corr = channel.validate_correlation(product)
                self.assertEqual(corr.dim, d)
                self.assertGreaterEqual(float(np.min(np.linalg.eigvalsh(product))), -1e-12)
                np.testing.assert_allclose(np.diag(product), np.ones(d), atol=1e-15)

    def test_compose_commutes_exactly(self):
        """Test compose(a, b) and compose(b, a) are bit-identical"""
        a = channel.make_channel(numerics.random_correlation_matrix(4, self.rng))
        b = channel.make_channel(numerics.random_correlation_matrix(4, self.rng))

        np.testing.assert_array_equal(channel.compose(a, b).xi, channel.compose(b, a).xi)

    def test_compose_with_identity(self):
        """Test composing with the identity channel changes nothing"""
        a = channel.make_channel(numerics.random_correlation_matrix(3, self.rng))

        np.testing.assert_array_equal(channel.compose(a, channel.identity_channel(3)).xi, a.xi)

    def test_compose_dimension_mismatch(self):
        """Test composing different dimensions raises"""
        with self.assertRaises(DimensionMismatchError):
            channel.compose(channel.identity_channel(2), channel.identity_channel(3))


class TestKraus(unittest.TestCase):
    """Test suite for canonical Kraus operators"""

    def setUp(self):
        self.rng = np.random.default_rng(77)

    def test_kraus_matches_schur_action(self):
        """Test canonical Kraus operators reproduce the Schur action in both pictures"""
        for d in range(2, 7):
            for _ in range(10):
                rank = int(self.rng.integers(1, d + 1))
                ch = channel.make_channel(numerics.random_correlation_matrix(d, self.rng, rank=rank))
                ks = channel.canonical_kraus(ch)
                o = numerics.random_hermitian(d, self.rng)
                rho = numerics.random_density_matrix(d, self.rng)

                self.assertEqual(len(ks.operators), ch.rank)
                np.testing.assert_allclose(
                    channel.apply_kraus_heisenberg(ks, o), channel.apply_heisenberg(ch, o), atol=1e-10
                )
                np.testing.assert_allclose(
                    channel.apply_kraus_schrodinger(ks, rho), channel.apply_schrodinger(ch, rho).rho, atol=1e-10
                )

    def test_kraus_completeness(self):
        """Test sum E_i^H E_i = I"""
        ks = channel.canonical_kraus(channel.make_channel(EXTREMAL_D4))

        self.assertTrue(ks.canonical)
        self.assertLess(ks.completeness_error(), 1e-10)

    def test_channel_from_kraus_round_trip(self):
        """Test the Schur form is recovered from the Kraus operators"""
        ch = channel.make_channel(numerics.random_correlation_matrix(4, self.rng))
        back = channel.channel_from_kraus(channel.canonical_kraus(ch))

        np.testing.assert_allclose(back.xi, ch.xi, atol=1e-12)

    def test_identity_channel_single_operator(self):
        """Test the all-ones map has one Kraus operator equal to I"""
        ks = channel.canonical_kraus(channel.identity_channel(3))

        self.assertEqual(len(ks.operators), 1)
        np.testing.assert_allclose(np.abs(ks.diagonals[0]), np.ones(3), atol=1e-12)


class TestPartialDecoherence(unittest.TestCase):
    """Test suite for block decoherence"""

    def setUp(self):
        self.p0 = np.diag([1.0, 1.0, 0.0])
        self.p1 = np.diag([0.0, 0.0, 1.0])
        self.rng = np.random.default_rng(5)

    def test_blocks_scaled_by_xi(self):
        """Test off-diagonal blocks are scaled and diagonal blocks kept"""
        o = numerics.random_hermitian(3, self.rng)
        out = channel.apply_partial_decoherence([[1, 0.5], [0.5, 1]], [self.p0, self.p1], o)

        np.testing.assert_allclose(out[:2, :2], o[:2, :2], atol=1e-15)
        np.testing.assert_allclose(out[:2, 2], 0.5 * o[:2, 2], atol=1e-15)
        self.assertAlmostEqual(out[2, 2], o[2, 2])

    def test_rank_one_projectors_match_schur(self):
        """Test rank-one projectors reduce to the plain Schur action"""
        xi = numerics.random_correlation_matrix(3, self.rng)
        projectors = [np.diag(np.eye(3)[k]) for k in range(3)]
        o = numerics.random_hermitian(3, self.rng)

        np.testing.assert_allclose(
            channel.apply_partial_decoherence(xi, projectors, o),
            channel.apply_heisenberg(channel.make_channel(xi), o),
            atol=1e-12,
        )

    def test_overlapping_projectors(self):
        """Test overlapping projectors raise"""
        with self.assertRaises(ProjectorsNotOrthogonalError):
            channel.apply_partial_decoherence(np.eye(2), [self.p0, np.eye(3)], np.eye(3))

    def test_incomplete_projectors(self):
        """Test projectors missing a block raise"""
        with self.assertRaises(ProjectorsIncompleteError):
            channel.apply_partial_decoherence(np.eye(2), [self.p0, np.zeros((3, 3))], np.eye(3))

    def test_projector_count_mismatch(self):
        """Test the projector count must match the block dimension"""
        with self.assertRaises(DimensionMismatchError):
            channel.apply_partial_decoherence(np.eye(3), [self.p0, self.p1], np.eye(3))


if __name__ == '__main__':
    unittest.main()
