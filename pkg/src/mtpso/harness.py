"""Experiment engine: config parsing, seeded grids of runs, CSV artifacts.

An experiment is a grid of (algorithm, problem, run) cells. Every cell's
seed is derived from the master seed and the cell coordinates, so any
subset of the grid can be reproduced independently and serial/parallel
execution give identical results.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import benchmarks
from .core import ALGORITHMS, MtoProblem, RunConfig
from .optimizer import run

RESULTS_HEADER = ["experiment", "algorithm", "problem", "task", "run", "seed", "final_fev"]
CONVERGENCE_HEADER = ["algorithm", "problem", "run", "generation", "task", "best_fev"]
TRANSFER_HEADER = ["algorithm", "problem", "run", "generation", "task", "source", "fraction"]
SCORES_HEADER = ["problem", "algorithm", "score"]

DEFAULT_MASTER_SEED = 986019042187420
SWEEP_GRIDS = {
    "bp": (0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1),
    "lp": (1, 2, 5, 10, 20, 50, 100),
}


class ConfigError(ValueError):
    """An experiment configuration failed to validate."""


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    suite: str
    suite_seed: int
    problem_ids: tuple[int, ...]
    algorithms: tuple[tuple[str, RunConfig], ...]
    runs: int
    master_seed: int
    output_dir: str
    write_convergence: bool = True
    write_transfer: bool = True

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("'runs' must be >= 1")
        # an empty problem_ids tuple means "all problems in the suite",
        # resolved when the suite is loaded
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        labels = [label for label, _ in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"algorithm labels must be unique, got {labels}")


@dataclass
class CellResult:
    """Summary of one run of the grid."""

    algorithm: str
    problem_id: int
    run_index: int  # 1-based
    seed: int
    num_tasks: int
    pop_per_task: int
    final_fevs: np.ndarray
    trace: np.ndarray | None
    source_counts: np.ndarray | None


_RUNCONFIG_FIELDS = (
    "pop_per_task",
    "lp",
    "bp",
    "eps",
    "w_start",
    "w_end",
    "c1",
    "c2",
    "c3",
    "max_gens",
)
_INT_FIELDS = {"pop_per_task", "lp", "max_gens"}


def _check_number(key, value, integer=False):
    if integer:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"field {key!r}: expected an integer, got {value!r}")
    elif not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"field {key!r}: expected a number, got {value!r}")
    return value


def parse_experiment(cfg: dict, name_default: str = "experiment") -> ExperimentSpec:
    """Build a validated spec from a config dict (all fields optional except
    the algorithm list; paper-default parameters fill the gaps)."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    known = {
        "name",
        "suite",
        "suite_seed",
        "problem_ids",
        "algorithms",
        "runs",
        "master_seed",
        "output_dir",
        "write_convergence",
        "write_transfer",
        "jobs",
        *_RUNCONFIG_FIELDS,
    }
    for key in cfg:
        if key not in known:
            raise ConfigError(f"unknown config field {key!r}")

    suite = cfg.get("suite", "suite1")
    if not isinstance(suite, str):
        raise ConfigError("field 'suite': expected a suite id or problem-file path")
    runs = _check_number("runs", cfg.get("runs", 30), integer=True)
    master_seed = _check_number("master_seed", cfg.get("master_seed", DEFAULT_MASTER_SEED), integer=True)
    suite_seed = _check_number("suite_seed", cfg.get("suite_seed", benchmarks.DEFAULT_SUITE_SEED), integer=True)

    shared = {}
    for key in _RUNCONFIG_FIELDS:
        if key in cfg:
            shared[key] = _check_number(key, cfg[key], integer=key in _INT_FIELDS)

    algo_list = cfg.get("algorithms", [{"algorithm": "samtpso-s1"}, {"algorithm": "pso"}])
    if not isinstance(algo_list, list) or not algo_list:
        raise ConfigError("field 'algorithms': expected a non-empty list")
    algorithms = []
    for i, entry in enumerate(algo_list):
        if isinstance(entry, str):
            entry = {"algorithm": entry}
        if not isinstance(entry, dict):
            raise ConfigError(f"algorithms[{i}]: expected an object or algorithm name")
        algo = entry.get("algorithm")
        if algo not in ALGORITHMS:
            raise ConfigError(f"algorithms[{i}]: 'algorithm' must be one of {ALGORITHMS}, got {algo!r}")
        label = entry.get("label", algo)
        if not isinstance(label, str) or not label:
            raise ConfigError(f"algorithms[{i}]: 'label' must be a non-empty string")
        params = dict(shared)
        for key, value in entry.items():
            if key in ("algorithm", "label"):
                continue
            if key not in _RUNCONFIG_FIELDS:
                raise ConfigError(f"algorithms[{i}]: unknown field {key!r}")
            params[key] = _check_number(key, value, integer=key in _INT_FIELDS)
        try:
            config = RunConfig(algorithm=algo, runs=runs, **params)
        except ValueError as exc:
            raise ConfigError(f"algorithms[{i}]: {exc}") from exc
        algorithms.append((label, config))

    problem_ids = cfg.get("problem_ids")
    if problem_ids is None:
        problem_ids = list(range(1, 10)) if suite in benchmarks.SUITE_IDS else None
    if problem_ids is not None:
        if not isinstance(problem_ids, list) or not all(
            isinstance(p, int) and not isinstance(p, bool) for p in problem_ids
        ):
            raise ConfigError("field 'problem_ids': expected a list of integers")

    name = cfg.get("name", name_default)
    if not isinstance(name, str) or not name:
        raise ConfigError("field 'name': expected a non-empty string")
    output_dir = cfg.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("field 'output_dir': expected a path string")

    spec = ExperimentSpec(
        name=name,
        suite=suite,
        suite_seed=suite_seed,
        problem_ids=tuple(problem_ids) if problem_ids is not None else (),
        algorithms=tuple(algorithms),
        runs=runs,
        master_seed=master_seed,
        output_dir=output_dir,
        write_convergence=bool(cfg.get("write_convergence", True)),
        write_transfer=bool(cfg.get("write_transfer", True)),
    )
    return spec


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def resolve_problems(spec: ExperimentSpec) -> list[tuple[int, MtoProblem]]:
    """Problem instances for the spec's suite, keyed by 1-based id."""
    if spec.suite in benchmarks.SUITE_IDS:
        suite = benchmarks.build_suite(spec.suite, benchmarks.GeneratedSeeded(spec.suite_seed))
        problems = list(suite.problems)
    else:
        problems = benchmarks.load_problem_files(spec.suite)
    ids = spec.problem_ids or tuple(range(1, len(problems) + 1))
    out = []
    for pid in ids:
        if not 1 <= pid <= len(problems):
            raise ConfigError(f"problem id {pid} out of range 1..{len(problems)}")
        out.append((pid, problems[pid - 1]))
    return out


def derive_seed(master_seed: int, algorithm: str, problem_id: int, run_index: int) -> int:
    """Stable 64-bit per-cell seed."""
    key = f"{master_seed}|{algorithm}|{problem_id}|{run_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def _run_cell(args) -> CellResult:
    label, config, problem, problem_id, run_index, keep_trace, keep_counts = args
    result = run(problem, config)
    return CellResult(
        algorithm=label,
        problem_id=problem_id,
        run_index=run_index,
        seed=config.seed,
        num_tasks=problem.num_tasks,
        pop_per_task=config.pop_per_task,
        final_fevs=result.best_fevs,
        trace=result.fev_trace if keep_trace else None,
        source_counts=result.source_counts if keep_counts else None,
    )


def execute(
    spec: ExperimentSpec,
    jobs: int = 1,
    keep_traces: bool | None = None,
    keep_counts: bool | None = None,
    progress=None,
) -> list[CellResult]:
    """Run the whole grid; cells come back ordered by (algorithm, problem,
    run) regardless of worker count."""
    if keep_traces is None:
        keep_traces = spec.write_convergence
    if keep_counts is None:
        keep_counts = spec.write_transfer
    problems = resolve_problems(spec)
    cells = []
    for label, config in spec.algorithms:
        for pid, problem in problems:
            for run_index in range(1, spec.runs + 1):
                seed = derive_seed(spec.master_seed, label, pid, run_index)
                cell_config = replace(config, seed=seed)
                cells.append((label, cell_config, problem, pid, run_index, keep_traces, keep_counts))

    results: list[CellResult] = []
    if jobs <= 1:
        for cell in cells:
            results.append(_run_cell(cell))
            if progress is not None:
                progress(len(results), len(cells))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for res in pool.map(_run_cell, cells, chunksize=1):
                results.append(res)
                if progress is not None:
                    progress(len(results), len(cells))
    return results


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_results_csv(path, experiment_name: str, cells: list[CellResult]) -> None:
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow(RESULTS_HEADER)
        for cell in cells:
            for task in range(cell.num_tasks):
                out.writerow(
                    [
                        experiment_name,
                        cell.algorithm,
                        cell.problem_id,
                        task + 1,
                        cell.run_index,
                        cell.seed,
                        repr(float(cell.final_fevs[task])),
                    ]
                )


def write_convergence_csv(path, cells: list[CellResult]) -> None:
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow(CONVERGENCE_HEADER)
        for cell in cells:
            if cell.trace is None:
                continue
            for g in range(cell.trace.shape[0]):
                for task in range(cell.num_tasks):
                    out.writerow(
                        [
                            cell.algorithm,
                            cell.problem_id,
                            cell.run_index,
                            g + 1,
                            task + 1,
                            repr(float(cell.trace[g, task])),
                        ]
                    )


def write_transfer_csv(path, cells: list[CellResult]) -> None:
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow(TRANSFER_HEADER)
        for cell in cells:
            if cell.source_counts is None:
                continue
            k = cell.num_tasks
            for g in range(cell.source_counts.shape[0]):
                for task in range(k):
                    for source in range(k):
                        frac = cell.source_counts[g, task, source] / cell.pop_per_task
                        out.writerow(
                            [
                                cell.algorithm,
                                cell.problem_id,
                                cell.run_index,
                                g + 2,
                                task + 1,
                                source + 1,
                                repr(float(frac)),
                            ]
                        )


def spec_to_manifest(spec: ExperimentSpec, jobs: int | None = None) -> dict:
    """Fully resolved configuration; itself a valid config file."""
    manifest = {
        "name": spec.name,
        "suite": spec.suite,
        "suite_seed": spec.suite_seed,
        "problem_ids": list(spec.problem_ids),
        "runs": spec.runs,
        "master_seed": spec.master_seed,
        "output_dir": spec.output_dir,
        "write_convergence": spec.write_convergence,
        "write_transfer": spec.write_transfer,
        "algorithms": [
            {
                "algorithm": config.algorithm,
                "label": label,
                **{key: getattr(config, key) for key in _RUNCONFIG_FIELDS},
            }
            for label, config in spec.algorithms
        ],
    }
    if jobs is not None:
        manifest["jobs"] = jobs
    return manifest


def write_manifest(path, spec: ExperimentSpec, jobs: int | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_manifest(spec, jobs), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(spec: ExperimentSpec, jobs: int = 1, progress=None) -> Path:
    """Execute the grid and write results/convergence/transfer/manifest
    under the spec's output directory; returns that directory."""
    if not spec.problem_ids:
        resolved_ids = tuple(pid for pid, _ in resolve_problems(spec))
        spec = replace(spec, problem_ids=resolved_ids)
    out_dir = Path(spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = execute(spec, jobs=jobs, progress=progress)
    write_results_csv(out_dir / "results.csv", spec.name, cells)
    if spec.write_convergence:
        write_convergence_csv(out_dir / "convergence.csv", cells)
    if spec.write_transfer:
        write_transfer_csv(out_dir / "transfer.csv", cells)
    write_manifest(out_dir / "manifest.json", spec, jobs)
    return out_dir


# ---------------------------------------------------------------------------
# Scoring over results files
# ---------------------------------------------------------------------------


def read_results_csv(path):
    """Parse a results file into {algorithm: {problem: {(task, run): fev}}},
    preserving first-appearance algorithm order."""
    data: dict[str, dict[int, dict[tuple[int, int], float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULTS_HEADER:
            raise ConfigError(f"{path}: expected header {RESULTS_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(RESULTS_HEADER):
                raise ConfigError(f"{path}: line {lineno}: expected {len(RESULTS_HEADER)} fields")
            try:
                _, algorithm, problem, task, run_index, _, final_fev = row
                key = (int(task), int(run_index))
                value = float(final_fev)
                pid = int(problem)
            except ValueError as exc:
                raise ConfigError(f"{path}: line {lineno}: {exc}") from exc
            data.setdefault(algorithm, {}).setdefault(pid, {})[key] = value
    if not data:
        raise ConfigError(f"{path}: no result rows")
    return data


def merge_results(datasets: list[dict]) -> dict:
    merged: dict = {}
    for data in datasets:
        for algorithm, problems in data.items():
            if algorithm in merged:
                raise ConfigError(f"algorithm {algorithm!r} appears in more than one input")
            merged[algorithm] = problems
    return merged


def tabulate_fevs(data: dict) -> tuple[list[str], list[int], dict[int, np.ndarray]]:
    """Turn merged results into per-problem (Q, K, L) tensors; every
    algorithm must cover the identical (problem, task, run) grid."""
    algorithms = list(data)
    if len(algorithms) < 2:
        raise ConfigError("scoring needs results from at least 2 algorithms")
    reference = algorithms[0]
    problems = sorted(data[reference])
    tables: dict[int, np.ndarray] = {}
    for pid in problems:
        ref_keys = set(data[reference][pid])
        tasks = sorted({t for t, _ in ref_keys})
        runs = sorted({r for _, r in ref_keys})
        if ref_keys != {(t, r) for t in tasks for r in runs}:
            raise ConfigError(f"problem {pid}: incomplete (task, run) grid for {reference!r}")
        table = np.empty((len(algorithms), len(tasks), len(runs)))
        for qi, algorithm in enumerate(algorithms):
            if sorted(data[algorithm]) != problems:
                raise ConfigError(
                    f"problem sets differ: {reference!r} has {problems}, "
                    f"{algorithm!r} has {sorted(data[algorithm])}"
                )
            cells = data[algorithm][pid]
            if set(cells) != ref_keys:
                raise ConfigError(f"problem {pid}: (task, run) grids differ for {algorithm!r}")
            for ti, task in enumerate(tasks):
                for ri, run_index in enumerate(runs):
                    table[qi, ti, ri] = cells[(task, run_index)]
        tables[pid] = table
    return algorithms, problems, tables


def write_scores_csv(path, algorithms, problems, per_problem, mean_scores) -> None:
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow(SCORES_HEADER)
        for pid in problems:
            for qi, algorithm in enumerate(algorithms):
                out.writerow([pid, algorithm, repr(float(per_problem[pid][qi]))])
        for qi, algorithm in enumerate(algorithms):
            out.writerow(["mean", algorithm, repr(float(mean_scores[qi]))])
