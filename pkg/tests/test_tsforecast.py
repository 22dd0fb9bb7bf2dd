import unittest
from typing import final

import numpy as np

from jacforecast.pipeline import synthgen, tsforecast
from jacforecast.pipeline.datamodel import Dataset, Observation
from jacforecast.pipeline.errors import ConfigError, ForecastError, ShortSeriesError
from jacforecast.pipeline.evalreport import Prediction
from jacforecast.pipeline.tsforecast import CountSeries, CrostonVariant, HistoryMode, SeriesTransform, ShortHistory


def reference_ses(values: list[float], alpha: float) -> float:
    """Return the SES level by direct recursion."""
    level = values[0]

    for value in values[1:]:
        level = alpha * value + (1 - alpha) * level

    return level


def reference_croston(values: list[float], alpha: float) -> float:
    """Return the classic Croston rate by stepping through the series."""
    size = interval = None
    since = 0

    for value in values:
        since += 1

        if value > 0:
            size = value if size is None else alpha * value + (1 - alpha) * size
            interval = since if interval is None else alpha * since + (1 - alpha) * interval
            since = 0

    return size / interval if size is not None else 0.0


def reference_tsb(values: list[float], alpha_d: float, alpha_p: float) -> float:
    """Return the TSB forecast by stepping through the series."""
    demands = [value for value in values if value > 0]
    probability = 1.0 if values[0] > 0 else 0.0
    size = demands[0] if demands else 0.0

    for index, value in enumerate(values):
        if index > 0:
            probability = alpha_p * (1.0 if value > 0 else 0.0) + (1 - alpha_p) * probability

        if value > 0:
            size = alpha_d * value + (1 - alpha_d) * size

    return probability * size


def reference_adida(values: list[float], size: int, alpha: float) -> float:
    """Return the ADIDA forecast from explicitly summed buckets."""
    kept = values[len(values) % size:]
    buckets = [sum(kept[start:start + size]) for start in range(0, len(kept), size)]

    return reference_ses(buckets, alpha) / size


@final
class TestTsforecast(unittest.TestCase):
    """Tests the tsforecast module."""

    def test_adida(self) -> None:
        """Tests the adida function."""
        forecast = tsforecast.adida([1, 0, 2, 0, 0, 3], bucket_size=2, alpha=0.5, h=2)
        self.assertEqual(forecast.values, (1.125, 1.125))
        self.assertEqual(forecast.parameters, {"bucket_size": 2, "alpha": 0.5})

        # The oldest remainder is dropped.
        self.assertAlmostEqual(tsforecast.adida([9, 1, 0, 2, 0, 0, 3], bucket_size=2, alpha=0.5).final, 1.125)

        self.assertEqual(tsforecast.aggregation_level([0, 2, 0, 0, 3]), 3)
        self.assertEqual(tsforecast.aggregation_level([0, 0]), 1)
        self.assertEqual(tsforecast.adida([0, 2, 0, 0, 3]).parameters["bucket_size"], 3)

        with self.assertRaisesRegex(ShortSeriesError, "shorter than one bucket"):
            tsforecast.adida([1, 2], bucket_size=3)

        with self.assertRaises(ForecastError):
            tsforecast.adida([1, 2], bucket_size=0)

    def test_autoregressive(self) -> None:
        """Tests the autoregressive and fit_autoregression functions."""
        self.assertAlmostEqual(tsforecast.autoregressive([5, 5, 5, 5, 5], lags=[2]).final, 5.0, places=9)

        # A noiseless process is recovered exactly.
        values = [2.0, 3.0]

        for _ in range(10):
            values.append(1.0 + 0.5 * values[-2])

        fit = tsforecast.fit_autoregression(values, [2])
        self.assertAlmostEqual(fit.intercept, 1.0, delta=1e-8)
        self.assertAlmostEqual(fit.coefficients[0], 0.5, delta=1e-8)

        forecast = tsforecast.autoregressive(values, lags=[2], h=2)
        self.assertAlmostEqual(forecast.values[0], 1.0 + 0.5 * values[-2], delta=1e-8)
        self.assertAlmostEqual(forecast.values[1], 1.0 + 0.5 * values[-1], delta=1e-8)
        self.assertEqual(forecast.parameters["lags"], [2])

        with self.assertRaisesRegex(ShortSeriesError, "too few observations"):
            tsforecast.autoregressive([1, 2], lags=[2])

        for lags in ([], [0], [1, 1]):
            with self.assertRaises(ForecastError):
                tsforecast.fit_autoregression(values, lags)

    def test_build_series(self) -> None:
        """Tests the build_series function."""
        observations = [Observation("J1", t, jac) for t, jac in ((3, 2), (1, 1), (2, 1), (4, 4), (30, 9))]

        daily = tsforecast.build_series("J1", observations, 30, history=HistoryMode.DAILY)
        np.testing.assert_array_equal(daily.series.values, [1, 1, 2, 4])
        self.assertEqual((daily.horizon, daily.last_value), (26, 4.0))

        increments = tsforecast.build_series("J1", observations, 30, HistoryMode.DAILY, SeriesTransform.INCREMENTS)
        np.testing.assert_array_equal(increments.series.values, [1, 0, 1, 2])

        sparse = [Observation("J2", 7, 3), Observation("J2", 14, 5), Observation("J2", 30, 6)]
        observed = tsforecast.build_series("J2", sparse, 30, history=HistoryMode.OBSERVED)
        np.testing.assert_array_equal(observed.series.values, [3, 5])
        self.assertEqual(observed.horizon, 1)

        with self.assertRaisesRegex(ForecastError, r"job 'J2': gap in daily history \(missing day 1\)"):
            tsforecast.build_series("J2", sparse, 30, history=HistoryMode.DAILY)

        with self.assertRaisesRegex(ForecastError, "job 'J2': no history before day 7"):
            tsforecast.build_series("J2", sparse, 7)

        with self.assertRaises(ForecastError):
            CountSeries("J1", np.array([1.0, -1.0]))

    def test_croston(self) -> None:
        """Tests the Croston variants."""
        series = [0, 2, 0, 0, 3]

        classic = tsforecast.croston(series, alpha=0.1)
        self.assertAlmostEqual(classic.final, 1.0)
        self.assertEqual(classic.method, "croston-classic")
        self.assertAlmostEqual(tsforecast.croston(series, alpha=0.1, variant=CrostonVariant.SBA).final, 0.95)
        self.assertEqual(tsforecast.croston([0, 0, 0]).final, 0.0)

        optimized = tsforecast.croston(series, variant="optimized")
        self.assertIn(optimized.parameters["alpha"], tsforecast.CROSTON_ALPHA_GRID)
        self.assertEqual(optimized.final, tsforecast.croston(series, alpha=optimized.parameters["alpha"]).final)

        with self.assertRaises(ForecastError):
            tsforecast.croston(series, alpha=0.0)

        with self.assertRaises(ValueError):
            tsforecast.croston(series, variant="bootstrap")

    def test_forecast_corpus(self) -> None:
        """Tests the forecast_corpus function."""
        jobs = synthgen.generate_corpus(synthgen.GenConfig(n_jobs=4, seed=1)).jobs
        a, b, c, d = jobs
        observations = (*(Observation(a, t, jac) for t, jac in ((1, 1), (2, 2), (3, 2), (4, 3), (7, 6))),
                        Observation(b, 1, 1), Observation(b, 3, 2), Observation(c, 7, 1),
                        *(Observation(d, t, 1) for t in (1, 2)))
        dataset = Dataset(jobs, observations)
        skips, visited = [], []

        result = tsforecast.forecast_corpus(dataset, "window-average", 7, history=HistoryMode.DAILY,
                                            on_skip=skips.append, on_job=visited.append)

        self.assertEqual(result.predictions, (Prediction(a, 7, 7 / 3),))
        self.assertEqual(result.skipped, (b, c, d))
        self.assertEqual(visited, [a, b, c, d])
        self.assertEqual(skips, [
            f"job {b!r}: gap in daily history (missing day 2)",
            f"job {c!r}: no history before day 7",
            f"job {d!r}: series of length 2 is shorter than the window of 3",
        ])

        # Increments are forecast per step and added to the last count.
        result = tsforecast.forecast_corpus(dataset, "window-average", 7, history=HistoryMode.DAILY,
                                            transform=SeriesTransform.INCREMENTS, job_ids=[a], on_skip=self.fail)
        self.assertEqual(len(result.predictions), 1)
        self.assertAlmostEqual(result.predictions[0].prediction, 3.0 + 3 * (2 / 3))

        # Observed history uses the sparse horizons as consecutive steps.
        result = tsforecast.forecast_corpus(dataset, "ses", 3, parameters={"alpha": 1.0},
                                            history=HistoryMode.OBSERVED, job_ids=[b], on_skip=self.fail)
        self.assertEqual(result.predictions, (Prediction(b, 3, 1.0),))

        # Series too short for the method fall back to SES when asked; missing histories are still skipped.
        skips.clear()
        fallbacks = []
        result = tsforecast.forecast_corpus(dataset, "window-average", 7, history=HistoryMode.DAILY,
                                            short_history=ShortHistory.SES, on_skip=skips.append,
                                            on_fallback=fallbacks.append)
        self.assertEqual(result.predictions, (Prediction(a, 7, 7 / 3), Prediction(d, 7, 1.0)))
        self.assertEqual((result.skipped, result.fallbacks), ((b, c), (d,)))
        self.assertEqual(len(skips), 2)
        self.assertEqual(fallbacks,
                         [f"job {d!r}: series of length 2 is shorter than the window of 3; forecast with ses instead"])

        result = tsforecast.forecast_corpus(dataset, "ar", 7, history=HistoryMode.OBSERVED,
                                            short_history=ShortHistory.SES, job_ids=[b], on_skip=self.fail)
        self.assertEqual((result.predictions, result.fallbacks), ((Prediction(b, 7, 1.5),), (b,)))

    def test_oracles(self) -> None:
        """Tests every level method against direct recursions on random short series."""
        rng = np.random.default_rng(17)

        for _ in range(200):
            values = [float(v) for v in rng.choice([0, 0, 0, 1, 2, 5], size=int(rng.integers(3, 13)))]
            alpha = float(rng.uniform(0.05, 1.0))

            self.assertAlmostEqual(tsforecast.ses(values, alpha).final, reference_ses(values, alpha), delta=1e-9)
            self.assertAlmostEqual(tsforecast.croston(values, alpha).final, reference_croston(values, alpha),
                                   delta=1e-9)
            self.assertAlmostEqual(tsforecast.croston(values, alpha, CrostonVariant.SBA).final,
                                   reference_croston(values, alpha) * (1 - alpha / 2), delta=1e-9)
            self.assertAlmostEqual(tsforecast.tsb(values, alpha, 0.2).final, reference_tsb(values, alpha, 0.2),
                                   delta=1e-9)
            self.assertAlmostEqual(tsforecast.window_average(values, 3).final, sum(values[-3:]) / 3, delta=1e-9)
            self.assertAlmostEqual(tsforecast.adida(values, 2, alpha).final, reference_adida(values, 2, alpha),
                                   delta=1e-9)
            self.assertAlmostEqual(tsforecast.adida(values, 1, alpha).final, tsforecast.ses(values, alpha).final,
                                   delta=1e-9)
            levels = range(1, max(1, len(values) // 2) + 1)
            self.assertAlmostEqual(tsforecast.imapa(values, alpha).final,
                                   sum(reference_adida(values, size, alpha) for size in levels) / len(levels),
                                   delta=1e-9)

            # The optimized variant minimizes the one-step in-sample error over the grid.
            def in_sample_error(candidate: float) -> float:
                return sum((values[t] - reference_croston(values[:t], candidate)) ** 2 for t in range(1, len(values)))

            chosen = tsforecast.croston(values, variant=CrostonVariant.OPTIMIZED).parameters["alpha"]
            best = min(in_sample_error(candidate) for candidate in tsforecast.CROSTON_ALPHA_GRID)
            self.assertLessEqual(in_sample_error(chosen), best + 1e-9)

    def test_registry(self) -> None:
        """Tests the FORECASTERS registry and run_forecaster."""
        self.assertEqual(set(tsforecast.FORECASTERS), {"ses", "croston", "croston-sba", "croston-optimized", "tsb",
                                                       "adida", "imapa", "window-average", "ar"})
        self.assertEqual(tsforecast.FORECASTERS["ses"].defaults, {"alpha": 0.5})
        self.assertEqual(tsforecast.FORECASTERS["tsb"].defaults, {"alpha_d": 0.3, "alpha_p": 0.2})

        forecast = tsforecast.run_forecaster("ses", [2, 4], 3, {"alpha": None})
        self.assertEqual(forecast.values, (3.0, 3.0, 3.0))
        self.assertEqual(forecast.parameters, {"alpha": 0.5})
        self.assertAlmostEqual(tsforecast.run_forecaster("croston-sba", [0, 2, 0, 0, 3], 1).final, 0.95)
        self.assertEqual(tsforecast.run_forecaster("ar", [5, 5, 5, 5, 5], 1, {"lags": [1, 2]}).parameters["lags"],
                         [1, 2])

        with self.assertRaisesRegex(ConfigError, "unknown forecasting method"):
            tsforecast.run_forecaster("arima", [1, 2], 1)

        with self.assertRaisesRegex(ConfigError, "does not take: window"):
            tsforecast.run_forecaster("ses", [1, 2], 1, {"window": 2})

    def test_ses(self) -> None:
        """Tests the ses function."""
        self.assertEqual(tsforecast.ses([2, 4], alpha=0.5).final, 3.0)
        self.assertEqual(tsforecast.ses([7]).values, (7.0,))
        self.assertEqual(tsforecast.ses([1, 2, 3], alpha=1.0, h=4).values, (3.0,) * 4)

        for invalid in ([], [1, float("nan")], [1, -2]):
            with self.assertRaises(ForecastError):
                tsforecast.ses(invalid)

        with self.assertRaises(ForecastError):
            tsforecast.ses([1, 2], alpha=1.5)

        with self.assertRaisesRegex(ForecastError, "horizon must be >= 1"):
            tsforecast.ses([1, 2], h=0)

    def test_tsb_and_window(self) -> None:
        """Tests the tsb and window_average functions."""
        self.assertAlmostEqual(tsforecast.tsb([5, 0], alpha_d=0.3, alpha_p=0.2).final, 4.0)
        self.assertEqual(tsforecast.tsb([0, 0, 0]).final, 0.0)
        self.assertEqual(tsforecast.window_average([1, 2, 3, 4], window=3).final, 3.0)

        with self.assertRaisesRegex(ShortSeriesError, "shorter than the window"):
            tsforecast.window_average([1, 2], window=3)

        with self.assertRaises(ForecastError):
            tsforecast.tsb([1, 2], alpha_p=0.0)


if __name__ == "__main__":
    unittest.main()
