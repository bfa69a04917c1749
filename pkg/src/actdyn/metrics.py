"""Robustness metrics over fitted ratios, and simulation error.

The spread of the fitted ratios, normalized by the spectral radius, measures
how sensitive a community's activity is to parameter changes; its inverse
(the system mass) measures inertia, and mass times activity gives the
momentum needed to stop or accelerate the community.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import SimulationTrace
from .errors import InputError
from .estimate import RatioSeries
from .preprocess import ActivitySeries

LAST_MONTH_WEEKS = 4


@dataclass(frozen=True)
class MomentumReport:
    rho: float
    system_mass: float
    activity_mean_weekly: float
    activity_last_month: float
    momentum_average: float
    momentum_last_month: float

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def render_table(self, label: str = "dataset") -> str:
        """One-row table: mass and momenta, averages with last-month in brackets."""
        activity = (
            f"{self.activity_mean_weekly:,.1f} ({self.activity_last_month:,.1f})"
        )
        momentum_cell = (
            f"{self.momentum_average:,.1f} ({self.momentum_last_month:,.1f})"
        )
        headers = [
            "Dataset",
            "Activity (last month)",
            "rho",
            "System Mass",
            "Activity Momentum (last month)",
        ]
        cells = [
            label,
            activity,
            f"{self.rho:.4f}",
            f"{self.system_mass:.2f}",
            momentum_cell,
        ]
        widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
        head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
        row = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return head + "\n" + row


def _ratio_values(ratios) -> np.ndarray:
    if isinstance(ratios, RatioSeries):
        return ratios.ratios()
    return np.asarray(ratios, dtype=float)


def normalized_ratio_sd(ratios, kappa1: float) -> float:
    """Population standard deviation of the ratios over the spectral radius."""
    values = _ratio_values(ratios)
    if values.size < 2:
        raise InputError("need at least 2 ratios to compute a standard deviation")
    if not (kappa1 > 0):
        raise InputError("kappa1 must be > 0")
    return float(np.std(values) / kappa1)


def momentum(rho: float, weekly_activity: Sequence[float]) -> MomentumReport:
    """System mass 1/rho and its momenta against the raw weekly activity.

    Average momentum uses the mean weekly activity; last-month momentum uses
    the summed activity of the final 4 weeks (fewer if the series is shorter).
    """
    if not (rho > 0):
        raise InputError("rho must be > 0 (zero variance: mass undefined)")
    activity = np.asarray(weekly_activity, dtype=float)
    if activity.size == 0:
        raise InputError("weekly activity series is empty")
    mass = 1.0 / rho
    mean_weekly = float(activity.mean())
    last_month = float(activity[-LAST_MONTH_WEEKS:].sum())
    return MomentumReport(
        rho=rho,
        system_mass=mass,
        activity_mean_weekly=mean_weekly,
        activity_last_month=last_month,
        momentum_average=mass * mean_weekly,
        momentum_last_month=mass * last_month,
    )


def rmse_per_user_week(
    empirical: ActivitySeries, predicted: SimulationTrace
) -> float:
    """Root mean squared error per user and week between a series and a trace.

    The trace must hold one state per week of the series, each state over
    the same users in the same order (align the series to the network
    first; see estimate.align_series_to_network).
    """
    matrix = predicted.values_matrix()
    if matrix.shape != empirical.values.shape:
        raise InputError(
            f"prediction shape {matrix.shape} does not match "
            f"empirical {empirical.values.shape}"
        )
    diff = empirical.values - matrix
    return float(np.sqrt(np.mean(diff * diff)))
