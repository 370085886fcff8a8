"""Experiment driver: per-round pipeline, multi-policy runs, result files.

Policies compared in one experiment share the population, datasets and the
per-round channel draws, but each owns isolated scheduling substreams keyed
by its name, so adding or removing a policy never perturbs the others.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import de, energy, flsim, objective
from .scenario import ConfigError, ScenarioConfig, draw_channels, generate_population, substream

DEFAULT_POLICIES = ("random", "sdes", "window-n")
POLICY_NAMES = ("random", "sdes", "window-n", "de")

# CSV columns, in order. Wall times are genuinely non-deterministic, so they
# live in the JSON sidecar; everything here is bit-stable for a given seed.
CSV_COLUMNS = (
    "round", "policy", "measure", "instantaneous_energy_j", "cumulative_energy_j",
    "global_loss", "objective_value", "cr_value", "selected_ids",
)


@dataclass
class RoundRecord:
    round: int
    policy: str
    measure: str
    instantaneous_energy_j: float
    cumulative_energy_j: float
    global_loss: float
    objective_value: float
    cr_value: float
    selected_ids: list[int]
    wall_time_ms: float


@dataclass
class ExperimentResult:
    config: dict
    records: list[RoundRecord]
    summary: dict


@dataclass
class PolicyRun:
    """Mutable per-policy simulation state advanced one round at a time."""

    config: ScenarioConfig
    policy: str
    profiles: list
    datasets: list
    data_bits: np.ndarray
    sample_sizes: dict[int, int]
    model: flsim.GlobalModel
    state: objective.SchedulerState
    cumulative_energy_j: float = 0.0
    workers: int = 1
    obj_params: objective.ObjectiveParams = field(init=False)

    def __post_init__(self) -> None:
        self.obj_params = objective.ObjectiveParams(
            zeta=self.config.zeta, beta=self.config.beta, measure=self.config.measure
        )


def _check_mask(mask: np.ndarray, k: int, n: int) -> None:
    mask = np.asarray(mask)
    if mask.shape != (k,) or int(mask.sum()) != n or not np.isin(mask, (0, 1)).all():
        raise RuntimeError("policy returned an invalid schedule mask")


def _policy_mask(run: PolicyRun, ctx: objective.EvaluationContext, round_index: int) -> np.ndarray:
    cfg = run.config
    seed = cfg.seed
    params = cfg.de_params
    label = f"sched/{run.policy}"
    if run.policy == "random":
        return de.random_schedule(cfg.K, cfg.N, substream(seed, label, round_index))
    if run.policy == "sdes":
        return de.sdes_schedule(
            ctx, params,
            window_rng=lambda off: substream(seed, label, round_index, off),
            window_len=cfg.window_len, workers=run.workers,
        )
    if run.policy == "window-n":
        return de.sdes_schedule(
            ctx, params,
            window_rng=lambda off: substream(seed, label, round_index, off),
            window_len=cfg.N, workers=run.workers,
        )
    if run.policy == "de":
        return de.de_schedule(ctx, params, substream(seed, label, round_index, 0))
    raise ConfigError(f"unknown policy {run.policy!r}; expected one of {POLICY_NAMES}")


def run_round(run: PolicyRun, round_index: int) -> RoundRecord:
    """Advance one scheduling + training round and record it."""
    t0 = time.perf_counter()
    cfg = run.config
    channels = draw_channels(cfg, run.profiles, round_index)
    breakdown = energy.round_breakdown(run.profiles, channels, cfg.model_size_bits, cfg.kappa)
    ctx = objective.make_context(run.state, breakdown, run.data_bits, run.obj_params, cfg.N)
    mask = _policy_mask(run, ctx, round_index)
    _check_mask(mask, cfg.K, cfg.N)

    obj_val = objective.objective_value(mask, run.state, breakdown, run.data_bits, run.obj_params)
    cr_val = objective.cr_value(mask, run.state, run.data_bits, run.obj_params)

    scheduled = np.flatnonzero(mask)
    updates: dict[int, np.ndarray] = {}
    losses: dict[int, float] = {}
    for ue in scheduled.tolist():
        weights, loss = flsim.local_train(
            run.model, run.datasets[ue], cfg.data_params.learning_rate, cfg.kappa
        )
        updates[ue] = weights
        losses[ue] = loss
    run.model = flsim.aggregate(run.model, updates, run.sample_sizes)
    run.state = objective.update_state(run.state, mask, losses)

    inst = energy.round_energy(mask, breakdown)
    run.cumulative_energy_j += inst
    record = RoundRecord(
        round=round_index,
        policy=run.policy,
        measure=cfg.measure,
        instantaneous_energy_j=inst,
        cumulative_energy_j=run.cumulative_energy_j,
        global_loss=flsim.global_loss(run.model, run.datasets),
        objective_value=obj_val,
        cr_value=cr_val,
        selected_ids=scheduled.tolist(),
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
    )
    return record


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("FEDSCHED_THREADS", "1"))
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigError("FEDSCHED_THREADS must be >= 0")
    return workers


def run_experiment(config: ScenarioConfig, policies: tuple[str, ...] | None = None,
                   workers: int | None = None) -> ExperimentResult:
    """Run every policy over T_rounds on one shared scenario."""
    config.validate()
    if policies is None:
        policies = DEFAULT_POLICIES
    for p in policies:
        if p not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {p!r}; expected one of {POLICY_NAMES}")
    workers = _resolve_workers(workers)

    profiles = generate_population(config)
    datasets = flsim.synthesize_datasets(config, profiles)
    data_bits = np.array([p.data_size_bits for p in profiles], dtype=np.int64)
    sample_sizes = {p.ue_id: datasets[p.ue_id].size for p in profiles}

    records: list[RoundRecord] = []
    summary: dict = {"policies": {}}
    for policy in policies:
        model = flsim.GlobalModel.initial(config.data_params.classes, config.data_params.feature_dim)
        bootstrap = np.array([flsim.local_loss(model, ds) for ds in datasets])
        run = PolicyRun(
            config=config, policy=policy, profiles=profiles, datasets=datasets,
            data_bits=data_bits, sample_sizes=sample_sizes, model=model,
            state=objective.SchedulerState.initial(bootstrap), workers=workers,
        )
        policy_records = [run_round(run, t) for t in range(config.T_rounds)]
        records.extend(policy_records)
        summary["policies"][policy] = {
            "final_global_loss": policy_records[-1].global_loss if policy_records else None,
            "total_energy_j": run.cumulative_energy_j,
            "mean_objective": (
                float(np.mean([r.objective_value for r in policy_records]))
                if policy_records else None
            ),
            "wall_time_ms": float(sum(r.wall_time_ms for r in policy_records)),
        }
    return ExperimentResult(config=config.to_dict(), records=records, summary=summary)


def _record_row(r: RoundRecord) -> list:
    return [
        r.round, r.policy, r.measure,
        repr(r.instantaneous_energy_j), repr(r.cumulative_energy_j),
        repr(r.global_loss), repr(r.objective_value), repr(r.cr_value),
        ";".join(str(i) for i in r.selected_ids),
    ]


def write_results(result: ExperimentResult, out_dir: str, fmt: str = "csv") -> list[str]:
    """Write the experiment to ``out_dir``; returns the paths written.

    csv: records table plus a JSON sidecar with the config snapshot and
    summary. json: everything in a single JSON document. Existing files are
    overwritten.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError("format must be 'csv' or 'json'")
    os.makedirs(out_dir, exist_ok=True)
    sidecar = {"config": result.config, "summary": result.summary}
    if fmt == "json":
        path = os.path.join(out_dir, "results.json")
        payload = dict(sidecar)
        payload["records"] = [asdict(r) for r in result.records]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return [path]
    csv_path = os.path.join(out_dir, "results.csv")
    json_path = os.path.join(out_dir, "results.json")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in result.records:
            writer.writerow(_record_row(r))
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [csv_path, json_path]
