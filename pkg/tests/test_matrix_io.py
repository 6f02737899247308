import io
import os
import tempfile
import unittest

import numpy as np

from DecoLab import matrix_io
from DecoLab.exceptions import MatrixFileError
from DecoLab.reference_matrices import EXTREMAL_D4


class TestParseMatrix(unittest.TestCase):
    """Test suite for parsing matrix documents"""

    def test_parse_qubit(self):
        """Test a well-formed document parses to a complex array"""
        text = '{"dim": 2, "entries": [[[1, 0], [0.6, 0.1]], [[0.6, -0.1], [1, 0]]]}'
        m = matrix_io.parse_matrix(text)

        self.assertEqual(m.dtype, np.complex128)
        self.assertEqual(m[0, 1], 0.6 + 0.1j)
        self.assertEqual(m[1, 0], 0.6 - 0.1j)

    def test_malformed_json_position(self):
        """Test malformed JSON reports its line and column"""
        text = '{"dim": 2,\n "entries": [[[1, 0], [0, 0]],, [[0, 0], [1, 0]]]}'

        with self.assertRaises(MatrixFileError) as ctx:
            matrix_io.parse_matrix(text, "bad.json")

        self.assertTrue(ctx.exception.position.startswith("line 2, column "))
        self.assertIn("bad.json", str(ctx.exception))

    def test_wrong_row_count(self):
        """Test 'entries' must hold dim rows"""
        with self.assertRaises(MatrixFileError):
            matrix_io.parse_matrix('{"dim": 2, "entries": [[[1, 0], [0, 0]]]}')

    def test_wrong_entry_shape(self):
        """Test each entry must be an [re, im] pair"""
        with self.assertRaises(MatrixFileError):
            matrix_io.parse_matrix('{"dim": 1, "entries": [[[1, 0, 0]]]}')

    def test_non_numeric_entry(self):
        """Test strings and booleans are rejected"""
        for entry in ('["1", 0]', '[true, 0]', '[NaN, 0]'):
            with self.assertRaises(MatrixFileError):
                matrix_io.parse_matrix('{"dim": 1, "entries": [[%s]]}' % entry)

    def test_missing_keys(self):
        """Test a document without 'dim' is rejected"""
        with self.assertRaises(MatrixFileError):
            matrix_io.matrix_from_document({"entries": []})

    def test_bad_dimension(self):
        """Test non-positive dimensions are rejected"""
        with self.assertRaises(MatrixFileError):
            matrix_io.matrix_from_document({"dim": 0, "entries": []})


class TestReadWrite(unittest.TestCase):
    """Test suite for matrix files"""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmpdir.name, "xi.json")

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_write_then_read_is_exact(self):
        """Test floats survive a file round trip bit for bit"""
        matrix_io.write_matrix(EXTREMAL_D4, self.path)

        np.testing.assert_array_equal(matrix_io.read_matrix(self.path), EXTREMAL_D4)

    def test_missing_file(self):
        """Test a missing file raises MatrixFileError"""
        with self.assertRaises(MatrixFileError):
            matrix_io.read_matrix(os.path.join(self.tmpdir.name, "missing.json"))

    def test_dump_matrix_stream(self):
        """Test dump_matrix writes one JSON document per line"""
        stream = io.StringIO()
        matrix_io.dump_matrix(np.eye(2), stream)

        self.assertTrue(stream.getvalue().endswith("\n"))
        np.testing.assert_array_equal(matrix_io.parse_matrix(stream.getvalue()), np.eye(2))

    def test_rectangular_rejected(self):
        """Test only square matrices are written"""
        with self.assertRaises(MatrixFileError):
            matrix_io.matrix_to_document(np.ones((2, 3)))


if __name__ == '__main__':
    unittest.main()
