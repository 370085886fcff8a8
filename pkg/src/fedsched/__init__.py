"""Energy-aware client scheduling for bandwidth-limited federated learning."""

from .scenario import (
    ChannelRealization,
    ConfigError,
    DataParams,
    ScenarioConfig,
    UeProfile,
    draw_channels,
    generate_population,
    path_gain_linear,
    substream,
    zipf_sizes,
)
from .energy import (
    EnergyBreakdown,
    compute_energy,
    data_rate,
    round_breakdown,
    round_energy,
    transmit_energy,
)
from .objective import (
    EvaluationContext,
    ObjectiveParams,
    SchedulerState,
    cr_value,
    fitness_scale,
    make_context,
    objective_value,
    update_state,
)
from .de import (
    DeParams,
    Individual,
    Window,
    binarize_repair,
    build_windows,
    crossover_exponential,
    de_schedule,
    de_select,
    evolve_window,
    generation_budget,
    init_population,
    mutate,
    random_schedule,
    rws_select3,
    sdes_schedule,
    sort_by_energy,
)
from .flsim import (
    GlobalModel,
    UeDataset,
    aggregate,
    dump_datasets,
    global_loss,
    load_datasets,
    local_loss,
    local_train,
    synthesize_datasets,
)
from .harness import (
    ExperimentResult,
    RoundRecord,
    run_experiment,
    run_round,
    write_results,
)

__version__ = "0.1.0"
