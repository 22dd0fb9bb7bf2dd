import os
import tempfile
import unittest
from typing import final

from jacforecast.cli import io
from jacforecast.pipeline import tables


@final
class TestTables(unittest.TestCase):
    """Tests the tables module."""

    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def path(self, name: str, *lines: str) -> str:
        """Return the path of a scratch file, written first when ``lines`` are given."""
        path = os.path.join(self.directory.name, name)

        if lines:
            io.write_text_file(path, lines=lines, on_error=self.fail)

        return path

    def test_format(self) -> None:
        """Tests the format_csv_row and format_jsonl_record functions."""
        self.assertEqual(tables.format_csv_row(["a", 1, 2.5, "x,y"]), 'a,1,2.5,"x,y"')
        self.assertEqual(tables.format_jsonl_record({"job_id": "J1", "title": "Ingénieur"}),
                         '{"job_id":"J1","title":"Ingénieur"}')

    def test_iter_csv_records(self) -> None:
        """Tests the iter_csv_records function."""
        errors = []
        path = self.path("rows.csv", "job_id,day", "J1,1", "J2", "", "J3,7")

        records = list(tables.iter_csv_records(path, required=["job_id", "day"], on_error=errors.append))
        self.assertEqual(records, [(2, {"job_id": "J1", "day": "1"}), (5, {"job_id": "J3", "day": "7"})])
        self.assertEqual(errors, [f"{path!r}: line 3: expected 2 fields, found 1"])
        errors.clear()

        # Quoted field spanning two lines, then a short row.
        quoted = self.path("quoted.csv", "job_id,day", "\"J1\nJ2\",1", "", "J3", "J4,4")
        records = list(tables.iter_csv_records(quoted, required=["job_id"], on_error=errors.append))
        self.assertEqual(records, [(2, {"job_id": "J1\nJ2", "day": "1"}), (6, {"job_id": "J4", "day": "4"})])
        self.assertEqual(errors, [f"{quoted!r}: line 5: expected 2 fields, found 1"])
        errors.clear()

        # Missing column.
        self.assertEqual(list(tables.iter_csv_records(path, required=["split"], on_error=errors.append)), [])
        self.assertEqual(errors, [f"{path!r}: line 1: missing column(s) split"])
        errors.clear()

        # Empty file.
        empty = self.path("empty.csv")
        io.write_text_file(empty, lines=[], on_error=self.fail)
        self.assertEqual(list(tables.iter_csv_records(empty, required=[], on_error=errors.append)), [])
        self.assertEqual(errors, [f"{empty!r}: empty file (header expected)"])

    def test_iter_jsonl_records(self) -> None:
        """Tests the iter_jsonl_records function."""
        errors = []
        path = self.path("records.jsonl", '{"a":1}', "", "[1,2]", "{bad", '{"b":2}')

        records = list(tables.iter_jsonl_records(path, on_error=errors.append))
        self.assertEqual(records, [(1, {"a": 1}), (5, {"b": 2})])
        self.assertEqual(len(errors), 2)
        self.assertEqual(errors[0], f"{path!r}: line 3: expected a JSON object")
        self.assertTrue(errors[1].startswith(f"{path!r}: line 4: invalid JSON"))

    def test_iter_tsv_fields(self) -> None:
        """Tests the iter_tsv_fields function."""
        path = self.path("skills.tsv", "python\t0.5\t1", "  ", "sql\t2")

        self.assertEqual(list(tables.iter_tsv_fields(path, on_error=self.fail)),
                         [(1, ["python", "0.5", "1"]), (3, ["sql", "2"])])

    def test_json_documents(self) -> None:
        """Tests the read_json and write_json functions."""
        errors = []
        path = self.path("config.json")

        self.assertTrue(tables.write_json(path, {"b": [1, 2], "a": "x"}, on_error=self.fail))
        self.assertEqual(tables.read_json(path, on_error=self.fail), {"a": "x", "b": [1, 2]})

        with open(path, encoding="utf-8") as f:
            self.assertTrue(f.read().startswith('{\n  "a": "x"'))

        self.assertIsNone(tables.read_json(self.path("list.json", "[1]"), on_error=errors.append))
        self.assertIsNone(tables.read_json(self.path("bad.json", "{"), on_error=errors.append))
        self.assertIsNone(tables.read_json(self.path("missing.json"), on_error=errors.append))
        self.assertEqual(len(errors), 3)

    def test_write_tables(self) -> None:
        """Tests the write_csv and write_jsonl functions."""
        csv_path = self.path("out.csv")
        jsonl_path = self.path("out.jsonl")

        self.assertTrue(tables.write_csv(csv_path, header=["job_id", "value"], rows=[("J1", 3), ("J2", 0.5)],
                                         on_error=self.fail))
        self.assertTrue(tables.write_jsonl(jsonl_path, records=[{"x": 1}, {"y": "z"}], on_error=self.fail))

        with open(csv_path, encoding="utf-8") as f:
            self.assertEqual(f.read(), "job_id,value\nJ1,3\nJ2,0.5\n")

        self.assertEqual([record for _, record in tables.iter_jsonl_records(jsonl_path, on_error=self.fail)],
                         [{"x": 1}, {"y": "z"}])


if __name__ == "__main__":
    unittest.main()
