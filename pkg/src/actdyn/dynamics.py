"""The dimensionless activity-dynamics model and its Euler integrator.

Each user i carries a relative activity x_i. Activity decays intrinsically
at rate `ratio` (the single model parameter, the decay/influence-growth
ratio) and grows through a saturating influence of each neighbor:

    dx_i/dtau = -ratio * x_i + sum_j A_ij * x_j / sqrt(1 + x_j^2)

The zero state is always a fixed point; it attracts iff the adjacency
spectral radius is below `ratio`. Integration is forward Euler over
dimensionless time tau, grouped into observation steps (one per empirical
data point, e.g. a week).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError
from .graph import CollaborationNetwork

DIVERGENCE_BOUND = 1e9

# -- states and parameters ----------------------------------------------------


@dataclass(frozen=True)
class ActivityState:
    """Per-user relative activity at dimensionless time tau."""

    x: np.ndarray
    tau: float


@dataclass(frozen=True)
class DynamicsParams:
    """Integration controls.

    ratio is the decay/influence ratio (> 0). Each observation step covers
    tau_per_step of dimensionless time, split into ceil(tau_per_step/dtau)
    equal Euler sub-steps (so the step lands exactly on tau_per_step).
    """

    ratio: float
    dtau: float = 0.01
    tau_per_step: float = 1.0

    def __post_init__(self):
        if not (self.ratio > 0):
            raise InputError(f"ratio must be > 0, got {self.ratio}")
        if not (self.dtau > 0):
            raise InputError(f"dtau must be > 0, got {self.dtau}")
        if self.tau_per_step < self.dtau:
            raise InputError("tau_per_step must be >= dtau")

    @property
    def substeps(self) -> int:
        return math.ceil(self.tau_per_step / self.dtau)


@dataclass(frozen=True)
class PeerInfluenceParams:
    """Dimensional influence parameters; only the helpers below use them.

    q is the saturation value of the influence function (activity/time),
    a_c the soft activity threshold. Their ratio mu = q/a_c is the
    influence growth rate at zero activity.
    """

    q: float
    a_c: float

    def __post_init__(self):
        if not (self.q > 0 and self.a_c > 0):
            raise InputError("q and a_c must be positive")

    @property
    def mu(self) -> float:
        return self.q / self.a_c


@dataclass
class SimulationTrace:
    """Trajectory sampled at observation steps (index 0 is the initial state).

    aggregate[k] is the plain sum of states[k].x. step_diverged marks, per
    recorded step, whether integration blew past the divergence bound while
    producing it; diverged is the any() of those flags. negativity_events
    counts recorded states with at least one negative entry.
    """

    states: list[ActivityState]
    aggregate: np.ndarray
    diverged: bool
    negativity_events: int
    step_diverged: list[bool] = field(default_factory=list)

    @property
    def final_state(self) -> ActivityState:
        return self.states[-1]

    def values_matrix(self) -> np.ndarray:
        """(n_users, n_recorded_steps) matrix of the recorded states."""
        return np.column_stack([s.x for s in self.states])

    def write_aggregate_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "tau", "aggregate_activity"])
            for k, (state, agg) in enumerate(zip(self.states, self.aggregate)):
                writer.writerow([k, repr(state.tau), repr(float(agg))])

    def write_per_user_csv(self, path: str | Path, users: Sequence[str]) -> None:
        if len(users) != self.states[0].x.shape[0]:
            raise InputError("user list does not match state dimension")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "tau", *users])
            for k, state in enumerate(self.states):
                writer.writerow([k, repr(state.tau), *(repr(float(v)) for v in state.x)])

    def summary(self, *, ratio: float, kappa1: float, stable: bool) -> dict:
        return {
            "ratio": ratio,
            "kappa1": kappa1,
            "stable": stable,
            "diverged": self.diverged,
            "negativity_events": self.negativity_events,
        }

    def write_summary_json(self, path: str | Path, **kwargs) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(**kwargs), fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- model building blocks ----------------------------------------------------


def peer_influence(xj):
    """Saturating influence of a neighbor at relative activity xj.

    x/sqrt(1+x^2): odd, strictly increasing, bounded in (-1, 1). Accepts
    scalars or arrays.
    """
    xj = np.asarray(xj, dtype=float)
    result = xj / np.sqrt(1.0 + xj * xj)
    return result if result.ndim else float(result)


def dimensional_influence(a, p: PeerInfluenceParams):
    """Influence in activity units: q*a/sqrt(a_c^2 + a^2)."""
    a = np.asarray(a, dtype=float)
    result = p.q * a / np.sqrt(p.a_c**2 + a * a)
    return result if result.ndim else float(result)


def influence_growth_rate(a: float, p: PeerInfluenceParams) -> float:
    """Slope of the dimensional influence function at activity a.

    q*a_c^2/(a_c^2+a^2)^(3/2); maximal at a=0 where it equals mu = q/a_c
    (returned exactly there).
    """
    if a == 0:
        return p.q / p.a_c
    return p.q * p.a_c**2 / (p.a_c**2 + a * a) ** 1.5


def to_relative_activity(a, a_c: float):
    """x = a / a_c."""
    return np.asarray(a, dtype=float) / a_c


def to_dimensional_activity(x, a_c: float):
    """a = x * a_c."""
    return np.asarray(x, dtype=float) * a_c


def to_dimensionless_time(t, p: PeerInfluenceParams):
    """tau = mu * t."""
    return np.asarray(t, dtype=float) * p.mu


def decay_influence_ratio(decay_rate: float, p: PeerInfluenceParams) -> float:
    """The model parameter lambda/mu from dimensional rates."""
    if not (decay_rate > 0):
        raise InputError("decay rate must be positive")
    return decay_rate / p.mu


def derivative(
    net: CollaborationNetwork, state: ActivityState, ratio: float
) -> np.ndarray:
    """Right-hand side of the dynamics equation at the given state."""
    x = state.x
    return -ratio * x + net.apply_adjacency(peer_influence(x))


def linearized_coefficient_decay(
    kappa_r: float, ratio: float, tau: float, c0: float
) -> float:
    """Closed-form modal coefficient near the zero fixed point.

    c_r(tau) = c0 * exp((-ratio + kappa_r) * tau); the test-side oracle for
    small-perturbation behavior of the integrator.
    """
    return c0 * math.exp((-ratio + kappa_r) * tau)


# -- integration ----------------------------------------------------------------


def _euler_observation_step(
    adj, x: np.ndarray, ratio: float, h: float, substeps: int
) -> tuple[np.ndarray, bool]:
    """Advance x (in place) by substeps Euler updates of size h.

    Returns (state, diverged). Each update is
    x <- x + h * (-ratio*x + adj @ (x/sqrt(1+x^2))), written with scratch
    buffers because this loop dominates every estimator run.
    """
    g = np.empty_like(x)
    coupling = np.empty_like(x) if isinstance(adj, np.ndarray) else None
    decay = 1.0 - h * ratio
    for _ in range(substeps):
        np.multiply(x, x, out=g)
        g += 1.0
        np.sqrt(g, out=g)
        np.divide(x, g, out=g)
        if coupling is None:
            c = adj @ g
        else:
            np.dot(adj, g, out=coupling)
            c = coupling
        x *= decay
        c *= h
        x += c
        np.abs(x, out=g)
        if not g.max() <= DIVERGENCE_BOUND:  # also catches NaN
            return x, True
    return x, False


def euler_integrate(
    net: CollaborationNetwork,
    x0: np.ndarray,
    params: DynamicsParams,
    n_steps: int,
) -> SimulationTrace:
    """Forward-Euler trajectory over n_steps observation steps.

    The trace records the initial state and the state after each observation
    step. On divergence (any |x_i| beyond the bound) integration halts at
    the offending step with diverged=True; negative activities are recorded,
    never clamped (oscillation through zero is genuine model behavior).
    """
    if n_steps < 1:
        raise InputError("n_steps must be >= 1")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (net.n,):
        raise InputError(f"x0 length {x.shape} does not match n={net.n}")
    if not np.all(np.isfinite(x)):
        raise InputError("x0 must be finite")

    substeps = params.substeps
    h = params.tau_per_step / substeps
    adj = net.adjacency_operator()

    states = [ActivityState(x.copy(), 0.0)]
    step_diverged = [False]
    for k in range(1, n_steps + 1):
        x, blew_up = _euler_observation_step(adj, x, params.ratio, h, substeps)
        states.append(ActivityState(x.copy(), k * params.tau_per_step))
        step_diverged.append(blew_up)
        if blew_up:
            break

    aggregate = np.array([s.x.sum() for s in states])
    negativity = sum(1 for s in states if np.any(s.x < 0))
    return SimulationTrace(
        states=states,
        aggregate=aggregate,
        diverged=any(step_diverged),
        negativity_events=negativity,
        step_diverged=step_diverged,
    )


# -- stability -------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityResult:
    """Classification of the zero-activity fixed point."""

    stable: bool
    marginal: bool = False

    def __str__(self):
        label = "stable" if self.stable else "unstable"
        return f"{label} (marginal)" if self.marginal else label


def classify_stability(kappa1: float, ratio: float) -> StabilityResult:
    """Master stability test: the inactive state attracts iff kappa1 < ratio.

    Exact equality is the measure-zero boundary; it is classified unstable
    and flagged marginal rather than hidden.
    """
    if not (np.isfinite(kappa1) and np.isfinite(ratio)):
        raise InputError("kappa1 and ratio must be finite")
    if not (ratio > 0):
        raise InputError("ratio must be > 0")
    if kappa1 == ratio:
        return StabilityResult(stable=False, marginal=True)
    return StabilityResult(stable=kappa1 < ratio)


def find_active_fixed_point(
    net: CollaborationNetwork,
    ratio: float,
    x_init: np.ndarray,
    tol: float = 1e-8,
    max_tau: float = 1000.0,
    dtau: float = 0.01,
    zero_threshold: float = 1e-4,
) -> np.ndarray | None:
    """Integrate from x_init until the flow stalls; return the active state.

    Returns the converged vector once ||dx/dtau||_inf < tol, or None when
    the trajectory instead collapses to zero (max-norm below
    zero_threshold), diverges, or max_tau runs out.
    """
    x_init = np.asarray(x_init, dtype=float)
    if np.any(x_init <= 0):
        raise InputError("x_init must be entrywise positive")
    params = DynamicsParams(ratio=ratio, dtau=dtau, tau_per_step=1.0)
    adj = net.adjacency_operator()
    substeps = params.substeps
    h = params.tau_per_step / substeps

    x = x_init.copy()
    tau = 0.0
    while tau < max_tau:
        x, blew_up = _euler_observation_step(adj, x, ratio, h, substeps)
        tau += params.tau_per_step
        if blew_up:
            return None
        dx = -ratio * x + adj @ peer_influence(x)
        if np.max(np.abs(dx)) < tol:
            if np.max(np.abs(x)) < zero_threshold:
                return None  # fell into the inactive fixed point
            return x
    return None
