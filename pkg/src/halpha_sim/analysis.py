"""Group construction, cross-run aggregation, and CSV export.

Agents are split per run into a low and a high group around the run's median
initial h (agents exactly at the median are excluded). Group means of
h-alpha are computed per run and period, then averaged across runs with
equal weights.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .engine import RunResult
from .errors import DataError


@dataclass(frozen=True)
class GroupSplit:
    """Agent ids below, above, and exactly at the run's median initial h."""

    low: np.ndarray
    high: np.ndarray
    excluded: np.ndarray
    median: int


def split_groups(initial_h) -> GroupSplit:
    """Split agents by initial h around the run median (lower median for even counts)."""
    values = np.asarray(initial_h)
    if values.size == 0:
        raise ValueError("cannot split an empty population")
    median = int(np.sort(values)[(values.size - 1) // 2])
    low = np.flatnonzero(values < median)
    high = np.flatnonzero(values > median)
    excluded = np.flatnonzero(values == median)
    if low.size == 0 and high.size == 0:
        warnings.warn(
            "every agent has the same initial h; low and high groups are empty",
            stacklevel=2,
        )
    return GroupSplit(low=low, high=high, excluded=excluded, median=median)


@dataclass(frozen=True)
class ExperimentResult:
    """Cross-run h-alpha trajectories for the low and high groups.

    ``difference`` equals ``mean_h_alpha_high - mean_h_alpha_low`` at every
    period. Per-run group means are kept alongside the aggregate; entries are
    NaN for runs whose group is empty.
    """

    periods: np.ndarray  # (P,) period numbers
    mean_h_alpha_low: np.ndarray  # (P,)
    mean_h_alpha_high: np.ndarray  # (P,)
    difference: np.ndarray  # (P,)
    per_run_low: np.ndarray  # (R, P)
    per_run_high: np.ndarray  # (R, P)
    run_indices: np.ndarray  # (R,)
    low_sizes: np.ndarray  # (R,)
    high_sizes: np.ndarray  # (R,)
    median_initial_h: np.ndarray  # (R,)


def _mean_over_runs(per_run: np.ndarray) -> np.ndarray:
    # nanmean without the all-NaN RuntimeWarning
    present = ~np.isnan(per_run)
    counts = present.sum(axis=0)
    totals = np.where(present, per_run, 0.0).sum(axis=0)
    return np.where(counts > 0, totals / np.maximum(counts, 1), np.nan)


def aggregate(runs: list[RunResult], splits: list[GroupSplit] | None = None) -> ExperimentResult:
    """Average per-run group means of h-alpha across runs, period by period.

    ``splits`` defaults to ``split_groups`` on each run's initial h. Groups
    are fixed by initial h and never reassigned in later periods.
    """
    if not runs:
        raise DataError("no runs to aggregate")
    if splits is None:
        splits = [split_groups(run.initial_h) for run in runs]
    if len(splits) != len(runs):
        raise DataError(f"got {len(splits)} group splits for {len(runs)} runs")

    n_periods = len(runs[0].periods)
    for run in runs:
        if len(run.periods) != n_periods:
            raise DataError(
                f"run {run.run_index} has {len(run.periods)} periods, expected {n_periods}"
            )

    per_run_low = np.full((len(runs), n_periods), np.nan)
    per_run_high = np.full((len(runs), n_periods), np.nan)
    for r, (run, split) in enumerate(zip(runs, splits)):
        h_alpha = np.stack([pm.h_alpha for pm in run.periods])  # (P, n)
        if split.low.size:
            per_run_low[r] = h_alpha[:, split.low].mean(axis=1)
        if split.high.size:
            per_run_high[r] = h_alpha[:, split.high].mean(axis=1)

    mean_low = _mean_over_runs(per_run_low)
    mean_high = _mean_over_runs(per_run_high)
    return ExperimentResult(
        periods=np.array([pm.period for pm in runs[0].periods]),
        mean_h_alpha_low=mean_low,
        mean_h_alpha_high=mean_high,
        difference=mean_high - mean_low,
        per_run_low=per_run_low,
        per_run_high=per_run_high,
        run_indices=np.array([run.run_index for run in runs]),
        low_sizes=np.array([s.low.size for s in splits]),
        high_sizes=np.array([s.high.size for s in splits]),
        median_initial_h=np.array([s.median for s in splits]),
    )


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.6f}"


def export_csv(result: ExperimentResult, per_run: bool = False) -> bytes:
    """Render trajectories as UTF-8 CSV with LF line endings.

    Aggregated form: ``period,group,mean_h_alpha`` with groups low, high,
    diff per period, values to six decimals (empty field for an empty
    group). With ``per_run`` a leading ``run`` column is added and one row
    triple is emitted per run and period.
    """
    lines = []
    if per_run:
        lines.append("run,period,group,mean_h_alpha")
        for r, run_index in enumerate(result.run_indices):
            for t, period in enumerate(result.periods):
                low = result.per_run_low[r, t]
                high = result.per_run_high[r, t]
                lines.append(f"{run_index},{period},low,{_fmt(low)}")
                lines.append(f"{run_index},{period},high,{_fmt(high)}")
                lines.append(f"{run_index},{period},diff,{_fmt(high - low)}")
    else:
        lines.append("period,group,mean_h_alpha")
        for t, period in enumerate(result.periods):
            lines.append(f"{period},low,{_fmt(result.mean_h_alpha_low[t])}")
            lines.append(f"{period},high,{_fmt(result.mean_h_alpha_high[t])}")
            lines.append(f"{period},diff,{_fmt(result.difference[t])}")
    return ("\n".join(lines) + "\n").encode("utf-8")
