"""Regression metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fvkit.errors import LengthMismatch


@dataclass(frozen=True)
class Metrics:
    mse: float
    rmse: float
    mae: float
    r2: float  # nan when the truth is constant

    def as_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "mae": self.mae,
                "r2": None if math.isnan(self.r2) else self.r2}


def evaluate(pred, truth) -> Metrics:
    y_hat = np.asarray(pred, dtype=np.float64).ravel()
    y = np.asarray(truth, dtype=np.float64).ravel()
    if y.size != y_hat.size:
        raise LengthMismatch(f"{y_hat.size} predictions for {y.size} targets")
    if y.size == 0:
        raise LengthMismatch("no values to evaluate")
    err = y - y_hat
    sse = float(np.sum(err * err))
    mse = sse / y.size
    mae = float(np.sum(np.abs(err))) / y.size
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else math.nan
    return Metrics(mse, math.sqrt(mse), mae, r2)


def spearman(a, b) -> float:
    """Rank correlation with average ranks for ties; nan if either side is constant."""
    ra, rb = _ranks(np.asarray(a, float)), _ranks(np.asarray(b, float))
    da, db = ra - ra.mean(), rb - rb.mean()
    denom = math.sqrt(float(np.sum(da * da)) * float(np.sum(db * db)))
    return float(np.sum(da * db)) / denom if denom > 0 else math.nan


def _ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0
        i = j + 1
    return ranks
