"""Forecasting pipeline: data model, synthetic corpora, feature fusion, text casting, MLP training, time-series
baselines, and evaluation."""
