import os
import unittest
from typing import Final, final

from jacforecast.cli import ini

# Directory holding the fixture files.
TEST_DATA: Final[str] = os.path.join(os.path.dirname(__file__), "test_data")


@final
class TestINI(unittest.TestCase):
    """Tests the ini module."""

    def setUp(self) -> None:
        ini.clear()

    def tearDown(self) -> None:
        ini.clear()

    def test_get_section_options(self) -> None:
        """Tests the get_section_options function."""
        self.assertTrue(ini.read_options(os.path.join(TEST_DATA, "valid-ini-file.ini"), on_error=self.fail))

        # Keys are normalized; empty values fall back; DEFAULT merges in.
        self.assertEqual(ini.get_section_options("train"),
                         {"seed": "11", "learning_rate": "0.01", "max_epochs": "3"})
        self.assertEqual(ini.get_section_options("generate"),
                         {"seed": "11", "n_jobs": "40", "signal_strength": "0.5"})

        # Missing section: DEFAULT only.
        self.assertEqual(ini.get_section_options("evaluate"), {"seed": "11"})

    def test_parse_bool(self) -> None:
        """Tests the parse_bool function."""
        for value in ("1", "on", "true", "Y", " yes "):
            self.assertIs(ini.parse_bool(value), True)

        for value in ("0", "off", "FALSE", "n", "no"):
            self.assertIs(ini.parse_bool(value), False)

        for value in ("", "maybe", "2"):
            self.assertIsNone(ini.parse_bool(value))

    def test_read_options(self) -> None:
        """Tests the read_options function."""
        errors = []

        # 1) File does not exist.
        self.assertFalse(ini.read_options("", on_error=errors.append))
        self.assertEqual(errors, ["'': no such file or directory"])
        self.assertEqual(ini.get_section_options("train"), {})
        errors.clear()

        # 2) Valid file.
        self.assertTrue(ini.read_options(os.path.join(TEST_DATA, "valid-ini-file.ini"), on_error=errors.append))
        self.assertEqual(errors, [])
        self.assertEqual(ini.get_section_options("evaluate"), {"seed": "11"})

        # 3) Invalid file clears the previous options, DEFAULT included.
        invalid_path = os.path.join(TEST_DATA, "invalid-ini-file.ini")
        self.assertFalse(ini.read_options(invalid_path, on_error=errors.append))
        self.assertEqual(errors, [f"{invalid_path!r}: invalid configuration file"])
        self.assertEqual(ini.get_section_options("train"), {})
        self.assertEqual(ini.get_section_options("evaluate"), {})


if __name__ == "__main__":
    unittest.main()
