"""Scheduler-side state and the round objective.

The scheduler minimizes  -T_L + zeta * E_P  where

    T_L = (sum_k D_k * V_k * S_k)**(1-beta) / (1-beta)

with V_k one of staleness T_k, last reported loss L_k, or their product
C_k = T_k * L_k. The scheduler only ever sees quantities reported by
previously scheduled UEs (plus the one-time bootstrap broadcast); it never
reads live losses of unscheduled UEs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .energy import EnergyBreakdown, round_energy

MEASURES = ("staleness", "loss", "sl")


@dataclass(frozen=True)
class ObjectiveParams:
    zeta: float = 5.0
    beta: float = 0.7
    measure: str = "sl"

    def __post_init__(self) -> None:
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.zeta < 0:
            raise ValueError("zeta must be >= 0")
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}")


@dataclass(frozen=True)
class SchedulerState:
    """Immutable per-round snapshot of staleness and last reported losses."""

    staleness: np.ndarray   # int64, rounds since last scheduled (T_k)
    last_loss: np.ndarray   # float64, loss from the most recent report (L_k)
    sl: np.ndarray          # float64, staleness-loss product (C_k)

    @classmethod
    def initial(cls, bootstrap_losses: np.ndarray) -> "SchedulerState":
        """State before round 0: staleness 1 everywhere, losses from the
        one-time cost-free broadcast evaluation of the initial model."""
        losses = np.asarray(bootstrap_losses, dtype=float).copy()
        if losses.ndim != 1 or losses.size == 0:
            raise ValueError("bootstrap_losses must be a non-empty 1-D array")
        if np.any(losses < 0):
            raise ValueError("bootstrap losses must be >= 0")
        staleness = np.ones(losses.size, dtype=np.int64)
        return cls(staleness=staleness, last_loss=losses, sl=staleness * losses)

    @property
    def k(self) -> int:
        return self.staleness.size


def update_state(state: SchedulerState, prev_mask: np.ndarray,
                 reported_losses: dict[int, float]) -> SchedulerState:
    """Advance the state by one round.

    Staleness follows T_k <- (T_k + 1) * (1 - S_k): scheduled UEs reset to 0,
    everyone else ages by one. Losses are overwritten only for scheduled UEs,
    whose reports must all be present (and no others).
    """
    prev_mask = np.asarray(prev_mask)
    if prev_mask.shape != (state.k,):
        raise ValueError("prev_mask length does not match the state")
    scheduled = set(np.flatnonzero(prev_mask).tolist())
    reported = set(reported_losses)
    missing = scheduled - reported
    if missing:
        raise ValueError(f"missing loss report for scheduled UE {min(missing)}")
    extra = reported - scheduled
    if extra:
        raise ValueError(f"loss report from unscheduled UE {min(extra)}")
    staleness = (state.staleness + 1) * (1 - prev_mask.astype(np.int64))
    last_loss = state.last_loss.copy()
    for ue, loss in reported_losses.items():
        if loss < 0:
            raise ValueError(f"negative loss report from UE {ue}")
        last_loss[ue] = loss
    return SchedulerState(staleness=staleness, last_loss=last_loss,
                          sl=staleness * last_loss)


def measure_values(state: SchedulerState, measure: str) -> np.ndarray:
    """Per-UE V_k for the configured measure."""
    if measure == "staleness":
        return state.staleness.astype(float)
    if measure == "loss":
        return state.last_loss.astype(float)
    if measure == "sl":
        return state.sl.astype(float)
    raise ValueError(f"measure must be one of {MEASURES}")


def cr_value(mask: np.ndarray, state: SchedulerState, data_sizes: np.ndarray,
             params: ObjectiveParams) -> float:
    """Convergence-reference value of a schedule.

    (sum_k D_k * V_k * S_k)**(1-beta) / (1-beta); an empty weighted sum is 0.
    """
    mask = np.asarray(mask, dtype=float)
    sizes = np.asarray(data_sizes, dtype=float)
    if mask.shape != (state.k,) or sizes.shape != (state.k,):
        raise ValueError("mask and data_sizes must match the state length")
    total = float((sizes * measure_values(state, params.measure)) @ mask)
    if total < 0:
        raise ValueError("weighted measure sum is negative")
    if total == 0:
        return 0.0
    return total ** (1.0 - params.beta) / (1.0 - params.beta)


def objective_value(mask: np.ndarray, state: SchedulerState,
                    breakdown: EnergyBreakdown, data_sizes: np.ndarray,
                    params: ObjectiveParams) -> float:
    """Scheduling objective to minimize: -CR + zeta * round energy."""
    return -cr_value(mask, state, data_sizes, params) + params.zeta * round_energy(mask, breakdown)


def fitness_scale(objective_values: np.ndarray) -> np.ndarray:
    """Map objective values to non-negative selection fitness.

    With O = -objective, returns Q = c * (O - O_min) where
    c = O_avg / (O_avg - O_min), so the worst individual scores 0 and the
    population mean equals O_avg. When O_avg is not positive the affine
    coefficient loses its meaning, so c falls back to 1; selection behavior
    is unchanged because roulette probabilities and trial-vs-target
    comparisons are invariant to the positive scale c. A population with no
    spread gets all-ones fitness.
    """
    obj = np.asarray(objective_values, dtype=float)
    if obj.ndim != 1 or obj.size == 0:
        raise ValueError("objective_values must be a non-empty 1-D array")
    o = -obj
    o_min = float(o.min())
    if float(o.max()) == o_min:
        return np.ones_like(o)
    o_avg = float(o.mean())
    c = o_avg / (o_avg - o_min)
    if c <= 0:
        c = 1.0
    return c * (o - o_min)


@dataclass
class EvaluationContext:
    """Frozen per-round view the scheduler optimizes against.

    Carries only reported quantities (measure values, data sizes) and the
    round's energy vector; see :func:`make_context`. ``nevals`` counts
    objective evaluations for budget accounting.
    """

    cr_weights: np.ndarray       # D_k * V_k
    per_ue_total_j: np.ndarray
    zeta: float
    beta: float
    n_selected: int
    nevals: int = field(default=0)

    @property
    def k(self) -> int:
        return self.per_ue_total_j.size

    def window_objectives(self, member_ids: np.ndarray, genes: np.ndarray) -> np.ndarray:
        """Objective of each row of ``genes`` over the window's members."""
        genes = np.atleast_2d(genes)
        w = self.cr_weights[member_ids]
        e = self.per_ue_total_j[member_ids]
        totals = genes @ w
        cr = np.zeros_like(totals, dtype=float)
        pos = totals > 0
        cr[pos] = totals[pos] ** (1.0 - self.beta) / (1.0 - self.beta)
        self.nevals += genes.shape[0]
        return -cr + self.zeta * (genes @ e)

    def mask_objective(self, mask: np.ndarray) -> float:
        return float(self.window_objectives(np.arange(self.k), np.asarray(mask)[None, :])[0])

    def mask_energy(self, mask: np.ndarray) -> float:
        return float(np.asarray(mask, dtype=float) @ self.per_ue_total_j)


def make_context(state: SchedulerState, breakdown: EnergyBreakdown,
                 data_sizes: np.ndarray, params: ObjectiveParams,
                 n_selected: int) -> EvaluationContext:
    sizes = np.asarray(data_sizes, dtype=float)
    if sizes.shape != (state.k,):
        raise ValueError("data_sizes must match the state length")
    if np.any(sizes <= 0):
        raise ValueError("data_sizes must be > 0")
    if not 1 <= n_selected <= state.k:
        raise ValueError("n_selected must satisfy 1 <= n_selected <= K")
    weights = sizes * measure_values(state, params.measure)
    if np.any(weights < 0):
        raise ValueError("weighted measure values must be >= 0")
    return EvaluationContext(
        cr_weights=weights,
        per_ue_total_j=breakdown.per_ue_total_j.astype(float),
        zeta=params.zeta,
        beta=params.beta,
        n_selected=n_selected,
    )
