"""Multi-task particle swarm optimization with self-adaptive inter-task
knowledge transfer, plus a reproducible benchmark harness."""

from .core import (
    ALGORITHMS,
    GbestRecord,
    MtoProblem,
    Particle,
    RunConfig,
    TaskDef,
    decode,
    encode,
    evaluate_task,
)
from .benchmarks import (
    FromFiles,
    GeneratedSeeded,
    SuiteSpec,
    base_eval,
    build_suite,
    make_task,
)
from .adaptation import (
    MemoryWindow,
    SourcePool,
    check_focus,
    choose_source,
    roulette_select,
    update_probabilities,
)
from .optimizer import RunResult, SubpopState, SwarmState, init_swarm, run
from .metrics import FevTable, TransferStats, aggregate, format_cell, score, transfer_rates
from .harness import ExperimentSpec, derive_seed, execute, parse_experiment, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "ExperimentSpec",
    "FevTable",
    "FromFiles",
    "GbestRecord",
    "GeneratedSeeded",
    "MemoryWindow",
    "MtoProblem",
    "Particle",
    "RunConfig",
    "RunResult",
    "SourcePool",
    "SubpopState",
    "SuiteSpec",
    "SwarmState",
    "TaskDef",
    "TransferStats",
    "aggregate",
    "base_eval",
    "build_suite",
    "check_focus",
    "choose_source",
    "decode",
    "derive_seed",
    "encode",
    "evaluate_task",
    "execute",
    "format_cell",
    "init_swarm",
    "make_task",
    "parse_experiment",
    "roulette_select",
    "run",
    "run_experiment",
    "score",
    "transfer_rates",
    "update_probabilities",
]
