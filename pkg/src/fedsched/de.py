"""Sliding differential evolution over energy-sorted UE windows.

UEs are sorted by their per-round energy; each contiguous window of length W
hosts an independent binary DE that picks N of the window's W members, and
the cross-window argmin of the objective wins the round. W=K degenerates to
one plain DE over the whole population; W=N leaves a single feasible
individual per window, so the round reduces to an argmin over the K-N+1
contiguous windows with no evolution at all.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .objective import EvaluationContext, fitness_scale
from .scenario import ConfigError


@dataclass
class DeParams:
    """DE hyperparameters. ``generations`` forces the per-window budget;
    left unset, the budget is capped by the window's feasible-subset count
    (see :func:`generation_budget`)."""

    population_m: int = 40
    f_weight: float = 0.5
    crossover_rate: float = 0.9
    g_de: int = 100
    window_len: int | None = None
    generations: int | None = None
    literal_crossover: bool = False

    def validate(self) -> None:
        if self.population_m < 4:
            raise ConfigError("de_params.population_m must be >= 4")
        if self.f_weight <= 0:
            raise ConfigError("de_params.f_weight must be > 0")
        if not 0 <= self.crossover_rate <= 1:
            raise ConfigError("de_params.crossover_rate must lie in [0, 1]")
        if self.g_de < 1:
            raise ConfigError("de_params.g_de must be >= 1")
        if self.window_len is not None and self.window_len < 1:
            raise ConfigError("de_params.window_len must be >= 1 when set")
        if self.generations is not None and self.generations < 1:
            raise ConfigError("de_params.generations must be >= 1 when set")


@dataclass(frozen=True)
class Window:
    """A contiguous slice of the energy-sorted UE order."""

    offset: int
    member_ids: np.ndarray


@dataclass(frozen=True)
class Individual:
    """One candidate schedule inside a window, with cached scores."""

    genes: np.ndarray
    objective: float
    fitness: float


def sort_by_energy(per_ue_total_j: np.ndarray) -> np.ndarray:
    """UE ids in ascending per-round energy order; ties keep ascending id."""
    e = np.asarray(per_ue_total_j, dtype=float)
    if e.ndim != 1 or e.size == 0:
        raise ValueError("per_ue_total_j must be a non-empty 1-D array")
    return np.argsort(e, kind="stable")


def build_windows(sorted_ids: np.ndarray, window_len: int) -> list[Window]:
    """All K-W+1 contiguous windows of the sorted order."""
    sorted_ids = np.asarray(sorted_ids)
    k = sorted_ids.size
    if not 1 <= window_len <= k:
        raise ConfigError("window_len must satisfy 1 <= window_len <= K")
    return [
        Window(offset=i, member_ids=sorted_ids[i : i + window_len])
        for i in range(k - window_len + 1)
    ]


def generation_budget(k: int, w: int, m: int, g_de: int) -> int:
    """min(ceil(C(k, w) / m), g_de), computed in exact integer arithmetic."""
    if not 1 <= w <= k:
        raise ValueError("w must satisfy 1 <= w <= k")
    if m < 1 or g_de < 1:
        raise ValueError("m and g_de must be >= 1")
    combos = math.comb(k, w)
    return min(-(-combos // m), g_de)


def init_population(window_len: int, n_ones: int, m: int,
                    rng: np.random.Generator) -> np.ndarray:
    """m random binary rows of length window_len with exactly n_ones ones."""
    if not 1 <= n_ones <= window_len:
        raise ValueError("n_ones must satisfy 1 <= n_ones <= window_len")
    if m < 1:
        raise ValueError("m must be >= 1")
    genes = np.zeros((m, window_len), dtype=np.int8)
    for i in range(m):
        genes[i, rng.choice(window_len, size=n_ones, replace=False)] = 1
    return genes


def rws_pick(fitness: np.ndarray, rng: np.random.Generator,
             forbidden: set[int] | None = None) -> int:
    """One roulette-wheel draw, restricted to indices outside ``forbidden``.

    If the admissible fitness mass is zero the draw is uniform over the
    admissible indices.
    """
    fitness = np.asarray(fitness, dtype=float)
    allowed = np.arange(fitness.size)
    if forbidden:
        allowed = allowed[~np.isin(allowed, list(forbidden))]
    if allowed.size == 0:
        raise ValueError("no admissible index to draw from")
    weights = fitness[allowed]
    total = float(weights.sum())
    if total <= 0:
        return int(allowed[rng.integers(allowed.size)])
    cut = rng.random() * total
    idx = int(np.searchsorted(np.cumsum(weights), cut, side="right"))
    return int(allowed[min(idx, allowed.size - 1)])


def rws_select3(fitness: np.ndarray, rng: np.random.Generator,
                exclude: int | None = None) -> tuple[int, int, int]:
    """Three pairwise-distinct donors, all different from ``exclude``."""
    fitness = np.asarray(fitness, dtype=float)
    needed = 3 + (1 if exclude is not None else 0)
    if fitness.size < needed:
        raise ValueError("population too small to draw three distinct donors")
    taken: set[int] = set() if exclude is None else {exclude}
    picks = []
    for _ in range(3):
        i = rws_pick(fitness, rng, taken)
        picks.append(i)
        taken.add(i)
    return picks[0], picks[1], picks[2]


def mutate(x1: np.ndarray, x2: np.ndarray, x3: np.ndarray, f_weight: float) -> np.ndarray:
    """Donor combination x1 + F * (x2 - x3); real-valued, no rounding here."""
    return np.asarray(x1, dtype=float) + f_weight * (
        np.asarray(x2, dtype=float) - np.asarray(x3, dtype=float)
    )


def binarize_repair(vector: np.ndarray, n_ones: int, rng: np.random.Generator) -> np.ndarray:
    """Threshold at 0.5 then randomly flip bits until exactly n_ones survive."""
    v = np.asarray(vector, dtype=float)
    if not 1 <= n_ones <= v.size:
        raise ValueError("n_ones must satisfy 1 <= n_ones <= len(vector)")
    genes = (v >= 0.5).astype(np.int8)
    ones = np.flatnonzero(genes)
    excess = ones.size - n_ones
    if excess > 0:
        genes[rng.choice(ones, size=excess, replace=False)] = 0
    elif excess < 0:
        zeros = np.flatnonzero(genes == 0)
        genes[rng.choice(zeros, size=-excess, replace=False)] = 1
    return genes


def exponential_run(window_len: int, crossover_rate: float, rng: np.random.Generator,
                    literal: bool = False) -> tuple[int, int]:
    """Start position and length of the gene run copied from the mutant.

    Standard semantics copy one gene then keep copying while rand() < f_CR.
    The ``literal`` variant keeps copying while rand() >= f_CR instead (so a
    high f_CR copies fewer genes); it stops unconditionally after window_len
    copies, past which further wrapped copies are no-ops.
    """
    start = int(rng.integers(window_len))
    length = 1
    if literal:
        while length < window_len and rng.random() >= crossover_rate:
            length += 1
    else:
        while length < window_len and rng.random() < crossover_rate:
            length += 1
    return start, length


def splice_run(target: np.ndarray, mutant: np.ndarray, start: int, length: int) -> np.ndarray:
    """Copy ``length`` mutant genes into the target starting at ``start``,
    wrapping modulo the window length. Returns a real-valued vector."""
    out = np.asarray(target, dtype=float).copy()
    idx = (start + np.arange(length)) % out.size
    out[idx] = np.asarray(mutant, dtype=float)[idx]
    return out


def crossover_exponential(target: np.ndarray, mutant: np.ndarray, n_ones: int,
                          crossover_rate: float, rng: np.random.Generator,
                          literal: bool = False) -> np.ndarray:
    """Exponential crossover followed by repair back to exactly n_ones ones."""
    target = np.asarray(target)
    if target.shape != np.asarray(mutant).shape:
        raise ValueError("target and mutant must have the same length")
    start, length = exponential_run(target.size, crossover_rate, rng, literal)
    return binarize_repair(splice_run(target, mutant, start, length), n_ones, rng)


def de_select(target: Individual, trial: Individual) -> Individual:
    """Greedy survivor selection; the trial wins ties.

    Comparing objectives directly is equivalent to the fitness comparison
    Q(trial) >= Q(target) for any order-preserving scaling and stays
    well-defined when a generation's scaling degenerates.
    """
    return trial if trial.objective <= target.objective else target


def _window_budget(window_len: int, n_selected: int, params: DeParams) -> int:
    if params.generations is not None:
        return params.generations
    return generation_budget(window_len, n_selected, params.population_m, params.g_de)


def evolve_population(window: Window, context: EvaluationContext, params: DeParams,
                      rng: np.random.Generator, budget: int | None = None
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Run the window's DE and return (final genes matrix, objective vector)."""
    w = window.member_ids.size
    n = context.n_selected
    m = params.population_m
    genes = init_population(w, n, m, rng)
    objectives = context.window_objectives(window.member_ids, genes)
    if budget is None:
        budget = _window_budget(w, n, params)
    for _ in range(budget):
        q = fitness_scale(objectives)
        trials = np.empty_like(genes)
        for i in range(m):
            r1, r2, r3 = rws_select3(q, rng, exclude=i)
            donor = mutate(genes[r1], genes[r2], genes[r3], params.f_weight)
            trials[i] = crossover_exponential(
                genes[i], donor, n, params.crossover_rate, rng, params.literal_crossover
            )
        trial_obj = context.window_objectives(window.member_ids, trials)
        # greedy one-to-one selection, ties favor the trial (see de_select)
        accept = trial_obj <= objectives
        genes[accept] = trials[accept]
        objectives[accept] = trial_obj[accept]
    return genes, objectives


def _expand_mask(window: Window, genes: np.ndarray, k: int) -> np.ndarray:
    mask = np.zeros(k, dtype=np.int8)
    mask[window.member_ids[genes == 1]] = 1
    return mask


def evolve_window(window: Window, context: EvaluationContext, params: DeParams,
                  rng: np.random.Generator) -> tuple[Individual, np.ndarray]:
    """Best schedule found inside one window.

    A window of exactly N members has a single feasible individual (all
    ones), which is returned without running any evolution.
    """
    w = window.member_ids.size
    n = context.n_selected
    if w < n:
        raise ConfigError("window_len must be >= the number of scheduled UEs")
    if w == n:
        genes = np.ones(w, dtype=np.int8)
        objective = float(context.window_objectives(window.member_ids, genes[None, :])[0])
        best = Individual(genes=genes, objective=objective, fitness=1.0)
        return best, _expand_mask(window, genes, context.k)
    genes, objectives = evolve_population(window, context, params, rng)
    energies = genes @ context.per_ue_total_j[window.member_ids]
    order = np.lexsort((energies, objectives))
    top = int(order[0])
    q = fitness_scale(objectives)
    best = Individual(genes=genes[top].copy(), objective=float(objectives[top]),
                      fitness=float(q[top]))
    return best, _expand_mask(window, genes[top], context.k)


def sdes_schedule(context: EvaluationContext, params: DeParams,
                  window_rng, window_len: int | None = None,
                  workers: int = 1) -> np.ndarray:
    """One round of sliding-DE scheduling.

    ``window_rng(offset)`` must hand each window its own random stream;
    windows evolve independently (optionally on a thread pool) and the
    cross-window winner is the lowest objective, ties broken by lower round
    energy and then lower window offset, so the result does not depend on
    evaluation order.
    """
    if window_len is None:
        window_len = params.window_len
    if window_len is None:
        raise ConfigError("window_len is not set")
    if not context.n_selected <= window_len <= context.k:
        raise ConfigError("window_len must satisfy N <= window_len <= K")
    order = sort_by_energy(context.per_ue_total_j)
    windows = build_windows(order, window_len)

    def run(win: Window):
        best, mask = evolve_window(win, context, params, window_rng(win.offset))
        return best.objective, context.mask_energy(mask), win.offset, mask

    if workers > 1 and len(windows) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, windows))
    else:
        results = [run(win) for win in windows]
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    return results[0][3]


def de_schedule(context: EvaluationContext, params: DeParams,
                rng: np.random.Generator) -> np.ndarray:
    """Canonical single-population DE over the whole UE set.

    Identical to :func:`sdes_schedule` with window_len=K fed the same
    substream for its one window.
    """
    order = sort_by_energy(context.per_ue_total_j)
    window = Window(offset=0, member_ids=order)
    _, mask = evolve_window(window, context, params, rng)
    return mask


def random_schedule(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random N-of-K schedule."""
    if not 1 <= n <= k:
        raise ValueError("n must satisfy 1 <= n <= k")
    mask = np.zeros(k, dtype=np.int8)
    mask[rng.choice(k, size=n, replace=False)] = 1
    return mask
