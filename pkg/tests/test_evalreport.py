import os
import tempfile
import unittest
from typing import final

import numpy as np

from jacforecast.cli import io
from jacforecast.pipeline import evalreport, synthgen
from jacforecast.pipeline.datamodel import Dataset, Observation
from jacforecast.pipeline.errors import DataError
from jacforecast.pipeline.evalreport import GroupBy, Metric, Prediction, ScoredPrediction

SCORED = [
    ScoredPrediction("J1", 1, 1, 1.4),
    ScoredPrediction("J2", 1, 2, 0.5),
    ScoredPrediction("J1", 3, 5, 3.0),
    ScoredPrediction("J3", 3, 1, -0.2),
    ScoredPrediction("J2", 7, 2, 2.6),
    ScoredPrediction("J3", 7, 4, 6.0),
]


@final
class TestEvalreport(unittest.TestCase):
    """Tests the evalreport module."""

    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def test_emit_series_csv(self) -> None:
        """Tests the emit_series_csv function."""
        jobs = synthgen.generate_corpus(synthgen.GenConfig(n_jobs=2, seed=1)).jobs
        a, b = jobs
        dataset = Dataset(jobs, (Observation(a, 7, 3), Observation(b, 1, 1), Observation(a, 1, 1),
                                 Observation(a, 3, 2)))
        predictions = [Prediction(a, 1, 1.5), Prediction(a, 7, 2.25), Prediction(b, 1, 0.0)]
        path = os.path.join(self.directory.name, "series.csv")

        self.assertEqual(evalreport.emit_series_csv([a], dataset, predictions, path), 3)

        with open(path, encoding="utf-8") as f:
            self.assertEqual(f.read(), f"job_id,t,actual,predicted\n{a},1,1,1.5\n{a},3,2,\n{a},7,3,2.25\n")

        self.assertEqual(evalreport.emit_series_csv([], dataset, predictions, path), 0)

        with open(path, encoding="utf-8") as f:
            self.assertEqual(f.read(), "job_id,t,actual,predicted\n")

        with self.assertRaisesRegex(DataError, "unknown job_id 'J9'"):
            evalreport.emit_series_csv(["J9"], dataset, predictions, path)

    def test_evaluate_grouped(self) -> None:
        """Tests the evaluate_grouped function against hand-computed values."""
        report = evalreport.evaluate_grouped(SCORED, GroupBy.DAY)

        self.assertEqual([(row.group_by, row.group, row.metric, row.n) for row in report.rows], [
            (GroupBy.DAY, 1, Metric.MAE, 2), (GroupBy.DAY, 1, Metric.MALE, 2),
            (GroupBy.DAY, 3, Metric.MAE, 2), (GroupBy.DAY, 3, Metric.MALE, 2),
            (GroupBy.DAY, 7, Metric.MAE, 2), (GroupBy.DAY, 7, Metric.MALE, 2),
            (GroupBy.OVERALL, "all", Metric.MAE, 6), (GroupBy.OVERALL, "all", Metric.MALE, 6),
        ])

        expected = {
            (1, Metric.MAE): 0.95, (1, Metric.MALE): 0.5,
            (3, Metric.MAE): 1.5, (3, Metric.MALE): 1.5,
            (7, Metric.MAE): 1.3, (7, Metric.MALE): 1.5,
        }

        for (day, metric), value in expected.items():
            self.assertAlmostEqual(report.value(GroupBy.DAY, day, metric), value)

        self.assertAlmostEqual(report.value(GroupBy.OVERALL, "all", Metric.MAE), 1.25)
        self.assertAlmostEqual(report.value(GroupBy.OVERALL, "all", Metric.MALE), 7 / 6)

        # Overall MAE is the n-weighted mean of the group MAEs.
        groups = [row for row in report.rows if row.group_by is GroupBy.DAY and row.metric is Metric.MAE]
        self.assertAlmostEqual(sum(row.value * row.n for row in groups) / sum(row.n for row in groups),
                               report.value(GroupBy.OVERALL, "all", Metric.MAE), places=12)

        by_jac = evalreport.evaluate_grouped(SCORED, [GroupBy.JAC])
        self.assertEqual([row.group for row in by_jac.rows if row.metric is Metric.MAE], [1, 2, 4, 5, "all"])
        self.assertAlmostEqual(by_jac.value(GroupBy.JAC, 1, Metric.MAE), 0.7)
        self.assertAlmostEqual(by_jac.value(GroupBy.JAC, 2, Metric.MAE), 1.05)

        both = evalreport.evaluate_grouped(SCORED, [GroupBy.JAC, GroupBy.DAY])
        self.assertEqual([row.group_by for row in both.rows][::2], [GroupBy.DAY] * 3 + [GroupBy.JAC] * 4
                         + [GroupBy.OVERALL])

        counted = evalreport.evaluate_grouped([ScoredPrediction("J1", 1, 1, 1.0), ScoredPrediction("J2", 1, 1, 2.0),
                                               ScoredPrediction("J3", 1, 5, 5.0)], GroupBy.JAC)
        self.assertEqual([(row.group, row.n) for row in counted.rows if row.metric is Metric.MAE],
                         [(1, 2), (5, 1), ("all", 3)])

        with self.assertRaises(KeyError):
            report.value(GroupBy.JAC, 1, Metric.MAE)

        with self.assertRaisesRegex(DataError, "no predictions to evaluate"):
            evalreport.evaluate_grouped([], GroupBy.DAY)

    def test_join_predictions(self) -> None:
        """Tests the join_predictions function."""
        errors = []
        observations = [Observation("J1", 1, 2), Observation("J1", 7, 4)]
        predictions = [Prediction("J1", 7, 3.5), Prediction("J1", 3, 1.0)]

        self.assertEqual(evalreport.join_predictions(predictions, observations, on_error=errors.append),
                         [ScoredPrediction("J1", 7, 4, 3.5)])
        self.assertEqual(errors, ["no observation for job 'J1' at t=3"])

    def test_metrics(self) -> None:
        """Tests the mae and male functions."""
        self.assertEqual(evalreport.mae([2, 5], [2, 5]), 0.0)
        self.assertEqual(evalreport.mae([1, 3], [2, 5]), 1.5)
        self.assertEqual(evalreport.mae([-0.4], [0]), 0.0)
        self.assertEqual(evalreport.male([1, 3], [1, 3]), 0.0)
        self.assertEqual(evalreport.male([1.4, 2.6], [1, 2]), 0.5)
        self.assertEqual(evalreport.male([0.5, 2.5], [1, 3]), 0.0)
        self.assertEqual(evalreport.male([-0.3, 0.6], [0, 0]), 0.5)
        np.testing.assert_array_equal(evalreport.round_half_up(np.array([0.49, 0.5, 1.5, 2.5])), [0, 1, 2, 3])

        rng = np.random.default_rng(3)

        for _ in range(1000):
            labels = rng.integers(0, 20, size=int(rng.integers(1, 10)))
            integers = rng.integers(0, 20, size=labels.size)
            reals = rng.uniform(-2, 20, size=labels.size)

            self.assertEqual(evalreport.male(integers, labels), evalreport.mae(integers, labels))
            self.assertLessEqual(abs(evalreport.male(reals, labels) - evalreport.mae(reals, labels)), 0.5)

            order = rng.permutation(labels.size)
            self.assertAlmostEqual(evalreport.mae(reals[order], labels[order]), evalreport.mae(reals, labels))

        with self.assertRaisesRegex(DataError, "length mismatch"):
            evalreport.mae([1, 2], [1])

        with self.assertRaisesRegex(DataError, "no predictions to score"):
            evalreport.male([], [])

    def test_prediction_files(self) -> None:
        """Tests writing and reading predictions and reports."""
        errors = []
        path = os.path.join(self.directory.name, "predictions.csv")
        predictions = [Prediction("J1", 7, 2.5), Prediction("J2", 30, 0.1)]

        self.assertTrue(evalreport.write_predictions(path, predictions))
        self.assertEqual(evalreport.read_predictions(path), predictions)

        io.write_text_file(path, lines=["job_id,t,prediction", "J1,7,2.5", "J1,x,1", "J2,1,inf", "J1,7,3"],
                           on_error=self.fail)
        self.assertEqual(evalreport.read_predictions(path, on_error=errors.append), [Prediction("J1", 7, 2.5)])
        self.assertEqual(errors, [
            f"{path!r}: line 3: malformed day or prediction",
            f"{path!r}: line 4: non-finite prediction",
            f"{path!r}: line 5: duplicate prediction for job 'J1' at t=7",
        ])

        report_path = os.path.join(self.directory.name, "report.csv")
        self.assertTrue(evalreport.write_report(report_path, evalreport.evaluate_grouped(SCORED[:2], GroupBy.DAY)))

        with open(report_path, encoding="utf-8") as f:
            self.assertEqual(f.read(), "group_by,group,metric,value,n\nday,1,MAE,0.950,2\nday,1,MALE,0.500,2\n"
                                       "overall,all,MAE,0.950,2\noverall,all,MALE,0.500,2\n")


if __name__ == "__main__":
    unittest.main()
