"""Fitting the decay/influence ratio to observed weekly activity.

One scalar parameter is fitted per window of consecutive weeks by least
squares: each week's activity is simulated one observation step forward
from the preceding empirical week, and the squared error of the aggregate
(or of the per-user vector) against the next empirical week is averaged
over the window's transitions. The optimizer is gradient descent with a
Newton step when the local curvature allows it, both built on central
finite differences of the scalar objective, with backtracking so accepted
steps never increase the objective.

The sliding-window protocol fits one ratio per target week from the weeks
immediately preceding it and is what the robustness metrics consume.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .dynamics import (
    ActivityState,
    DynamicsParams,
    SimulationTrace,
    _euler_observation_step,
    euler_integrate,
)
from .errors import InputError, NumericalError
from .graph import CollaborationNetwork
from .preprocess import ActivitySeries
from .spectral import largest_eigenvalue

MIN_RATIO = 1e-9  # iterates are projected to stay strictly positive


class ObjectiveKind(Enum):
    AGGREGATE_SUM = "aggregate"
    PER_USER = "peruser"


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: ObjectiveKind = ObjectiveKind.AGGREGATE_SUM
    regularization_gamma: float = 0.0

    def __post_init__(self):
        if self.regularization_gamma < 0:
            raise InputError("regularization_gamma must be >= 0")


@dataclass(frozen=True)
class EstimationConfig:
    """Optimizer and window controls.

    ratio_init None means "start from the network's spectral radius".
    dtau/tau_per_step parameterize the integrator used inside the objective
    (one observation step per empirical week).
    """

    T_weeks: int = 4
    learning_rate_eta: float = 1e-4
    convergence_eps: float = 1e-12
    max_iterations: int = 20_000
    use_newton: bool = True
    ratio_init: float | None = None
    dtau: float = 0.01
    tau_per_step: float = 1.0

    def __post_init__(self):
        if self.T_weeks < 1:
            raise InputError("T_weeks must be >= 1")
        if not (self.learning_rate_eta > 0):
            raise InputError("learning_rate_eta must be > 0")
        if not (self.convergence_eps > 0):
            raise InputError("convergence_eps must be > 0")
        if self.max_iterations < 1:
            raise InputError("max_iterations must be >= 1")
        if self.ratio_init is not None and not (self.ratio_init > 0):
            raise InputError("ratio_init must be > 0")

    def dynamics_params(self, ratio: float) -> DynamicsParams:
        return DynamicsParams(ratio=ratio, dtau=self.dtau,
                              tau_per_step=self.tau_per_step)


@dataclass(frozen=True)
class FitResult:
    ratio: float
    converged: bool
    iterations: int
    final_objective: float


@dataclass(frozen=True)
class RatioEntry:
    """One sliding-window fit; error is set instead of ratio on failure."""

    target_week: date
    window_weeks: tuple[date, ...]
    ratio: float | None
    converged: bool
    iterations: int
    final_objective: float | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.ratio is not None


@dataclass(frozen=True)
class RatioSeries:
    entries: tuple[RatioEntry, ...]

    @property
    def target_weeks(self) -> list[date]:
        return [e.target_week for e in self.entries]

    def ratios(self) -> np.ndarray:
        """Ratio values of the successful entries, in target-week order."""
        return np.array([e.ratio for e in self.entries if e.ok])

    def ok_entries(self) -> list[RatioEntry]:
        return [e for e in self.entries if e.ok]

    def __len__(self):
        return len(self.entries)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["target_week", "ratio", "converged", "iterations", "objective"]
            )
            for e in self.entries:
                writer.writerow(
                    [
                        e.target_week.isoformat(),
                        repr(e.ratio) if e.ratio is not None else "",
                        "true" if e.converged else "false",
                        e.iterations,
                        repr(e.final_objective)
                        if e.final_objective is not None
                        else "",
                    ]
                )


def read_ratio_series_csv(path: str | Path) -> RatioSeries:
    entries: list[RatioEntry] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["target_week", "ratio", "converged", "iterations", "objective"]
        if header is None or [h.strip().lower() for h in header] != expected:
            raise InputError(f"{path}: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise InputError(f"{path}:{lineno}: expected 5 fields")
            week_raw, ratio_raw, conv_raw, iter_raw, obj_raw = (
                c.strip() for c in row
            )
            try:
                week = date.fromisoformat(week_raw)
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            if ratio_raw:
                entries.append(
                    RatioEntry(
                        target_week=week,
                        window_weeks=(),
                        ratio=float(ratio_raw),
                        converged=conv_raw.lower() == "true",
                        iterations=int(iter_raw or 0),
                        final_objective=float(obj_raw) if obj_raw else None,
                    )
                )
            else:
                entries.append(
                    RatioEntry(
                        target_week=week,
                        window_weeks=(),
                        ratio=None,
                        converged=False,
                        iterations=int(iter_raw or 0),
                        final_objective=None,
                        error="recorded failure",
                    )
                )
    if not entries:
        raise InputError(f"{path}: no ratio rows")
    return RatioSeries(tuple(entries))


# -- alignment ---------------------------------------------------------------


def align_series_to_network(
    series: ActivitySeries, net: CollaborationNetwork
) -> ActivitySeries:
    """Expand a series to the network's user set, in network index order.

    Users present in the network but absent from the series get zero rows
    (the preprocessing filter removes quiet users from the series only).
    Series users unknown to the network are a contract violation.
    """
    unknown = [u for u in series.users if not net.has_user(u)]
    if unknown:
        raise InputError(
            f"activity series contains users not in the network: {unknown[:5]}"
            + ("..." if len(unknown) > 5 else "")
        )
    values = np.zeros((net.n, series.n_weeks))
    for row, user in enumerate(series.users):
        values[net.index_of(user)] = series.values[row]
    return ActivitySeries(
        users=net.users,
        weeks=list(series.weeks),
        values=values,
        provenance=series.provenance,
        week_day_counts=series.week_day_counts,
    )


# -- objective ----------------------------------------------------------------


def simulate_one_week(
    net: CollaborationNetwork,
    x_k: np.ndarray,
    ratio: float,
    dyn: DynamicsParams | None = None,
) -> np.ndarray:
    """Advance the empirical state of week k by one observation step."""
    dyn = dyn if dyn is not None else DynamicsParams(ratio=ratio)
    if dyn.ratio != ratio:
        dyn = replace(dyn, ratio=ratio)
    trace = euler_integrate(net, x_k, dyn, n_steps=1)
    if trace.diverged:
        raise NumericalError(f"one-week simulation diverged at ratio {ratio}")
    return trace.final_state.x


def _window_matrix(window: ActivitySeries, net: CollaborationNetwork) -> np.ndarray:
    if window.n_weeks < 2:
        raise InputError("window needs at least 2 consecutive weeks")
    return align_series_to_network(window, net).values


def _make_objective(
    matrix: np.ndarray,
    net: CollaborationNetwork,
    spec: ObjectiveSpec,
    kappa1: float,
    cfg: EstimationConfig,
) -> Callable[[float], float]:
    """Objective J(ratio) over all transitions of the aligned window matrix.

    Divergence inside any simulated week maps to +inf so the optimizer
    backs away from pathological ratios.
    """
    adj = net.adjacency_operator()
    substeps = math.ceil(cfg.tau_per_step / cfg.dtau)
    h = cfg.tau_per_step / substeps
    seeds = matrix[:, :-1]
    targets = matrix[:, 1:]
    n_trans = seeds.shape[1]
    aggregate = spec.kind is ObjectiveKind.AGGREGATE_SUM
    target_aggs = targets.sum(axis=0)
    gamma = spec.regularization_gamma

    def objective_at(ratio: float) -> float:
        total = 0.0
        for k in range(n_trans):
            x, blew_up = _euler_observation_step(
                adj, seeds[:, k].copy(), ratio, h, substeps
            )
            if blew_up or not np.all(np.isfinite(x)):
                return math.inf
            if aggregate:
                err = target_aggs[k] - x.sum()
                total += err * err
            else:
                diff = targets[:, k] - x
                total += float(diff @ diff)
        value = total / n_trans
        if gamma > 0.0:
            value += gamma * (kappa1 - ratio) ** 2
        return value

    return objective_at


def objective(
    window: ActivitySeries,
    net: CollaborationNetwork,
    ratio: float,
    spec: ObjectiveSpec,
    kappa1: float,
    cfg: EstimationConfig | None = None,
) -> float:
    """Least-squares cost of `ratio` on a window of consecutive weeks.

    Mean over the window's transitions of the squared aggregate error
    (or squared per-user error norm), plus the optional
    gamma*(kappa1 - ratio)^2 regularizer.
    """
    cfg = cfg or EstimationConfig()
    matrix = _window_matrix(window, net)
    return _make_objective(matrix, net, spec, kappa1, cfg)(ratio)


# -- scalar optimizer -----------------------------------------------------------


def _minimize_scalar(
    fun: Callable[[float], float],
    init: float,
    cfg: EstimationConfig,
) -> FitResult:
    r = init
    f_r = fun(r)
    iterations = 0
    converged = False

    while iterations < cfg.max_iterations:
        iterations += 1
        h = min(1e-6 * max(1.0, r), 0.5 * r)
        f_plus = fun(r + h)
        f_minus = fun(r - h)
        if math.isfinite(f_plus) and math.isfinite(f_minus):
            gradient = (f_plus - f_minus) / (2.0 * h)
            step = -cfg.learning_rate_eta * gradient
            if cfg.use_newton:
                curvature = (f_plus - 2.0 * f_r + f_minus) / (h * h)
                if curvature > 0.0:
                    step = -gradient / curvature
        else:
            # the difference straddles the divergence boundary; nudge toward
            # the finite side and let backtracking size the move
            step = 0.5 * r if not math.isfinite(f_minus) else -0.25 * r

        accepted = False
        candidate, f_candidate = r, f_r
        for _ in range(31):  # initial step plus up to 30 halvings
            candidate = max(r + step, MIN_RATIO)
            f_candidate = fun(candidate)
            if f_candidate <= f_r:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True  # no descent at finite-difference resolution
            break

        update = abs(candidate - r)
        r, f_r = candidate, f_candidate
        if update < cfg.convergence_eps:
            converged = True
            break

    return FitResult(
        ratio=r, converged=converged, iterations=iterations, final_objective=f_r
    )


def fit_ratio(
    window: ActivitySeries,
    net: CollaborationNetwork,
    cfg: EstimationConfig | None = None,
    spec: ObjectiveSpec | None = None,
    kappa1: float | None = None,
) -> FitResult:
    """Fit the ratio on one window of consecutive weeks.

    Starts from cfg.ratio_init (the spectral radius by default); if the
    objective is infinite there, restarts once from twice the spectral
    radius. An all-zero window has a constant-zero objective and is
    rejected as unidentifiable.
    """
    cfg = cfg or EstimationConfig()
    spec = spec or ObjectiveSpec()
    matrix = _window_matrix(window, net)
    if not np.any(matrix):
        raise InputError("all-zero window: no identifiable ratio")
    if kappa1 is None:
        kappa1 = largest_eigenvalue(net).kappa1

    fun = _make_objective(matrix, net, spec, kappa1, cfg)
    init = cfg.ratio_init if cfg.ratio_init is not None else max(kappa1, MIN_RATIO)
    if not math.isfinite(fun(init)):
        init = 2.0 * max(kappa1, MIN_RATIO)
        if not math.isfinite(fun(init)):
            raise NumericalError(
                "objective diverges at the spectral-radius start and at twice "
                "the spectral radius; check dtau against the data scale"
            )
    return _minimize_scalar(fun, init, cfg)


# -- sliding-window protocol ------------------------------------------------------


def sliding_window_fit(
    series: ActivitySeries,
    net: CollaborationNetwork,
    cfg: EstimationConfig | None = None,
    spec: ObjectiveSpec | None = None,
) -> RatioSeries:
    """One fitted ratio per target week, from the weeks preceding it.

    Target weeks start at index T_weeks-1, so the first fit runs on the
    lead weeks (one fewer than T_weeks); every later fit sees a full
    T_weeks-deep window. A series of 52+3 weeks with the default T_weeks=4
    therefore yields exactly 52 ratios. Window failures are recorded
    per entry; the call fails only if every window fails.
    """
    cfg = cfg or EstimationConfig()
    spec = spec or ObjectiveSpec()
    if series.n_weeks < cfg.T_weeks:
        raise InputError(
            f"series has {series.n_weeks} weeks; need at least T_weeks={cfg.T_weeks}"
        )
    kappa1 = largest_eigenvalue(net).kappa1

    entries: list[RatioEntry] = []
    for t in range(cfg.T_weeks - 1, series.n_weeks):
        start = max(0, t - cfg.T_weeks)
        if t - start < 2:
            continue  # not even one transition to fit on (tiny T_weeks)
        window = series.window(start, t)
        week_labels = tuple(series.weeks[start:t])
        try:
            fit = fit_ratio(window, net, cfg, spec, kappa1=kappa1)
            entries.append(
                RatioEntry(
                    target_week=series.weeks[t],
                    window_weeks=week_labels,
                    ratio=fit.ratio,
                    converged=fit.converged,
                    iterations=fit.iterations,
                    final_objective=fit.final_objective,
                )
            )
        except (InputError, NumericalError) as exc:
            entries.append(
                RatioEntry(
                    target_week=series.weeks[t],
                    window_weeks=week_labels,
                    ratio=None,
                    converged=False,
                    iterations=0,
                    final_objective=None,
                    error=str(exc),
                )
            )
    if not any(e.ok for e in entries):
        raise NumericalError(
            "estimation failed on every sliding window; first error: "
            + (entries[0].error or "unknown")
        )
    return RatioSeries(tuple(entries))


def predict_weeks(
    series: ActivitySeries,
    net: CollaborationNetwork,
    ratios: RatioSeries,
    cfg: EstimationConfig | None = None,
    chain: bool = False,
) -> SimulationTrace:
    """Simulate each target week from the week before it.

    Each successful ratio entry simulates one observation step seeded from
    the empirical state of the preceding week (or, with chain=True, from
    the previous prediction). The returned trace holds exactly one state
    per predicted week, in target order; weeks whose entry failed or whose
    simulation diverged are flagged in step_diverged and carry the seed
    state unchanged.
    """
    cfg = cfg or EstimationConfig()
    aligned = align_series_to_network(series, net)
    week_index = {w: i for i, w in enumerate(aligned.weeks)}
    adj = net.adjacency_operator()
    substeps = math.ceil(cfg.tau_per_step / cfg.dtau)
    h = cfg.tau_per_step / substeps

    states: list[ActivityState] = []
    flags: list[bool] = []
    previous_prediction: np.ndarray | None = None
    for k, entry in enumerate(ratios.entries):
        idx = week_index.get(entry.target_week)
        if idx is None or idx == 0:
            raise InputError(
                f"target week {entry.target_week} has no preceding week in the series"
            )
        seed = (
            previous_prediction
            if chain and previous_prediction is not None
            else aligned.values[:, idx - 1]
        )
        if entry.ok:
            x, blew_up = _euler_observation_step(
                adj, seed.copy(), entry.ratio, h, substeps
            )
            if blew_up:
                x, ok = seed.copy(), False
            else:
                ok = True
        else:
            x, ok = seed.copy(), False
        states.append(ActivityState(x, (k + 1) * cfg.tau_per_step))
        flags.append(not ok)
        previous_prediction = x

    aggregate = np.array([s.x.sum() for s in states])
    negativity = sum(1 for s in states if np.any(s.x < 0))
    return SimulationTrace(
        states=states,
        aggregate=aggregate,
        diverged=any(flags),
        negativity_events=negativity,
        step_diverged=flags,
    )
