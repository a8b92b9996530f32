"""Prediction tasks, labels, metrics and paired significance testing.

Three tasks over a horizon h (in trading steps): the raw value at t+h,
the percentage change between t+h and t+h-1, and the direction of that
change. Ties in direction labels resolve to "decrease" so the binary
convention is total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Sequence

from .ingest import FinancialSeries

TASKS = ("next-value", "pct-change", "direction-change")
REGRESSION_TASKS = ("next-value", "pct-change")
HORIZONS = (1, 7, 30)

# discordant-pair count below which the exact binomial test is used
MCNEMAR_EXACT_LIMIT = 25


@dataclass(frozen=True)
class TaskSpec:
    target: str
    task: str
    horizon: int
    model_kind: str = "F"

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.horizon not in HORIZONS:
            raise ValueError(f"horizon must be one of {HORIZONS}")
        if self.model_kind not in ("F", "T", "TF"):
            raise ValueError("model kind must be F, T or TF")

    @property
    def is_regression(self) -> bool:
        return self.task in REGRESSION_TASKS


@dataclass(frozen=True)
class LabelSeries:
    task: str
    horizon: int
    dates: tuple[date, ...]
    values: tuple


def direction_of(previous: float, current: float) -> str:
    """Direction of the move previous -> current; a flat move is a decrease."""
    return "increase" if current > previous else "decrease"


def make_labels(series: FinancialSeries, task: str, horizon: int) -> LabelSeries:
    """Label each date t from the values at t+h and t+h-1.

    Dates whose horizon falls past the end of the series are omitted.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    dates = series.dates
    values = series.values
    n = len(values)
    if n <= horizon:
        raise ValueError(f"series of length {n} cannot support horizon {horizon}")
    out_dates: list[date] = []
    out_values: list = []
    for i in range(n - horizon):
        ahead = values[i + horizon]
        before = values[i + horizon - 1]
        if task == "next-value":
            label = ahead
        elif task == "pct-change":
            if before == 0:
                raise ZeroDivisionError(f"zero base value at {dates[i + horizon - 1]}")
            label = 100.0 * (ahead - before) / before
        else:
            label = direction_of(before, ahead)
        out_dates.append(dates[i])
        out_values.append(label)
    return LabelSeries(task=task, horizon=horizon, dates=tuple(out_dates), values=tuple(out_values))


@dataclass(frozen=True)
class MetricsReport:
    task: str
    n: int
    mse: float | None = None
    accuracy: float | None = None
    f1: float | None = None
    predictions: tuple = ()

    def to_dict(self) -> dict:
        out = {"task": self.task, "n": self.n}
        if self.mse is not None:
            out["mse"] = self.mse
        if self.accuracy is not None:
            out["accuracy"] = self.accuracy
            out["f1"] = self.f1
        return out


def evaluate(predictions: Sequence, labels: Sequence, task: str) -> MetricsReport:
    """MSE for regression; accuracy and increase-positive F1 for classification."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} predictions vs {len(labels)} labels")
    if len(labels) == 0:
        raise ValueError("nothing to evaluate")
    pairs = tuple(zip(predictions, labels))
    if task in REGRESSION_TASKS:
        mse = sum((float(p) - float(y)) ** 2 for p, y in pairs) / len(pairs)
        return MetricsReport(task=task, n=len(pairs), mse=mse, predictions=pairs)
    correct = sum(1 for p, y in pairs if p == y)
    tp = sum(1 for p, y in pairs if p == "increase" and y == "increase")
    fp = sum(1 for p, y in pairs if p == "increase" and y == "decrease")
    fn = sum(1 for p, y in pairs if p == "decrease" and y == "increase")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricsReport(
        task=task,
        n=len(pairs),
        accuracy=correct / len(pairs),
        f1=f1,
        predictions=pairs,
    )


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    p_value: float
    method: str


def mcnemar(a_correct: Sequence, b_correct: Sequence) -> McNemarResult:
    """Paired test on two models' per-sample correctness vectors.

    b counts samples only model A got right, c samples only model B got
    right. Small discordant counts use the exact two-sided binomial
    test; otherwise the chi-square statistic with continuity correction.
    """
    if len(a_correct) != len(b_correct):
        raise ValueError("correctness vectors differ in length")
    b = sum(1 for x, y in zip(a_correct, b_correct) if x and not y)
    c = sum(1 for x, y in zip(a_correct, b_correct) if not x and y)
    n = b + c
    if n < MCNEMAR_EXACT_LIMIT:
        if n == 0:
            return McNemarResult(b=b, c=c, p_value=1.0, method="exact")
        k = min(b, c)
        tail = sum(math.comb(n, i) for i in range(k + 1)) / 2.0 ** n
        return McNemarResult(b=b, c=c, p_value=min(1.0, 2.0 * tail), method="exact")
    statistic = (abs(b - c) - 1.0) ** 2 / n
    p = math.erfc(math.sqrt(statistic / 2.0))  # chi-square(1) survival
    return McNemarResult(b=b, c=c, p_value=p, method="chi-square-corrected")
