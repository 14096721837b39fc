"""Classical base functions and factories for the two benchmark suites.

Every generated task is ``base(R (z - shift))`` with the base function
re-centered so the global optimum is at ``z = shift`` with value exactly 0
(for Rosenbrock and Schwefel, whose canonical optima are away from the
origin, the canonical optimum is translated onto the shift; rotated
Schwefel additionally gets the usual quadratic boundary penalty outside
+-500 so no deeper minimum exists inside the search box).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import MtoProblem, TaskDef

# Canonical 1-D minimizer of y*sin(sqrt(y)) and the value there; the
# classical 418.9829 constant is a rounding of this peak.
SCHWEFEL_OPT = 420.96874878568275
_SCHWEFEL_PEAK = SCHWEFEL_OPT * math.sin(math.sqrt(SCHWEFEL_OPT))
_SCHWEFEL_RESIDUAL = 418.9829 - _SCHWEFEL_PEAK  # ~1.2728e-5 per dimension

_WEIERSTRASS_A = 0.5
_WEIERSTRASS_KMAX = 20
_WK_A = _WEIERSTRASS_A ** np.arange(_WEIERSTRASS_KMAX + 1)
# cos(pi * 3^k) = -1 exactly (odd multiples of pi), so the bias telescopes.
_WEIERSTRASS_BIAS = float(-np.sum(_WK_A))


def _weierstrass_series(theta):
    # sum_k a^k cos(3^k theta) via the triple-angle recurrence; one cosine
    # per element instead of kmax+1.
    c = np.cos(theta)
    total = c.copy()
    for k in range(1, _WEIERSTRASS_KMAX + 1):
        c = (4.0 * c * c - 3.0) * c
        total += _WK_A[k] * c
    return total


class BenchmarkDataError(ValueError):
    """A task-data file failed to parse or validate."""


def sphere(y):
    y = np.asarray(y, dtype=float)
    return np.sum(y * y, axis=-1)


def rosenbrock(y):
    y = np.asarray(y, dtype=float)
    a, b = y[..., :-1], y[..., 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=-1)


def ackley(y):
    y = np.asarray(y, dtype=float)
    d = y.shape[-1]
    return (
        -20.0 * np.exp(-0.2 * np.sqrt(np.sum(y * y, axis=-1) / d))
        - np.exp(np.sum(np.cos(2.0 * np.pi * y), axis=-1) / d)
        + 20.0
        + math.e
    )


def rastrigin(y):
    y = np.asarray(y, dtype=float)
    return np.sum(y * y - 10.0 * np.cos(2.0 * np.pi * y) + 10.0, axis=-1)


def griewank(y):
    y = np.asarray(y, dtype=float)
    d = y.shape[-1]
    idx = np.sqrt(np.arange(1, d + 1, dtype=float))
    return 1.0 + np.sum(y * y, axis=-1) / 4000.0 - np.prod(np.cos(y / idx), axis=-1)


def weierstrass(y):
    y = np.asarray(y, dtype=float)
    d = y.shape[-1]
    return np.sum(_weierstrass_series(2.0 * np.pi * (y + 0.5)), axis=-1) - d * _WEIERSTRASS_BIAS


def schwefel(y):
    y = np.asarray(y, dtype=float)
    d = y.shape[-1]
    return 418.9829 * d - np.sum(y * np.sin(np.sqrt(np.abs(y))), axis=-1)


def _schwefel_bounded(y):
    # Standard boundary treatment for the rotated variant: fold arguments
    # beyond +-500 back toward the boundary and add a quadratic penalty, so
    # the canonical interior optimum stays global.
    y = np.asarray(y, dtype=float)
    d = y.shape[-1]
    g = y * np.sin(np.sqrt(np.abs(y)))
    hi = y > 500.0
    if np.any(hi):
        w = 500.0 - np.fmod(y[hi], 500.0)
        g[hi] = w * np.sin(np.sqrt(np.abs(w))) - (y[hi] - 500.0) ** 2 / (10000.0 * d)
    lo = y < -500.0
    if np.any(lo):
        w = np.fmod(np.abs(y[lo]), 500.0) - 500.0
        g[lo] = w * np.sin(np.sqrt(np.abs(w))) - (y[lo] + 500.0) ** 2 / (10000.0 * d)
    return 418.9829 * d - np.sum(g, axis=-1)


def _schwefel_task(y):
    y = np.asarray(y, dtype=float)
    d = y.shape[-1]
    return _schwefel_bounded(y + SCHWEFEL_OPT) - d * _SCHWEFEL_RESIDUAL


def _rosenbrock_task(y):
    return rosenbrock(np.asarray(y, dtype=float) + 1.0)


@dataclass(frozen=True)
class BaseSpec:
    """A registered base function and its canonical box."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    lower: float
    upper: float
    task_fn: Callable[[np.ndarray], np.ndarray]


_REGISTRY: dict[str, BaseSpec] = {}


def register_base(name: str, fn, lower: float, upper: float, task_fn=None) -> None:
    """Register a base function; ``task_fn`` must have its global minimum 0
    at the origin (defaults to ``fn`` for origin-centered functions)."""
    _REGISTRY[name] = BaseSpec(name, fn, float(lower), float(upper), task_fn or fn)


register_base("sphere", sphere, -100, 100)
register_base("griewank", griewank, -100, 100)
register_base("rosenbrock", rosenbrock, -50, 50, task_fn=_rosenbrock_task)
register_base("rastrigin", rastrigin, -50, 50)
register_base("ackley", ackley, -50, 50)
register_base("schwefel", schwefel, -500, 500, task_fn=_schwefel_task)
register_base("weierstrass", weierstrass, -0.5, 0.5)


def base_spec(name: str) -> BaseSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown base function {name!r}; known: {sorted(_REGISTRY)}") from None


def base_eval(name: str, y) -> float | np.ndarray:
    """Evaluate a base function by its classical textbook formula."""
    out = base_spec(name).fn(y)
    return float(out) if np.ndim(out) == 0 else out


def task_eval(name: str, y) -> float | np.ndarray:
    """Evaluate in the task frame: global minimum exactly 0 at y = 0."""
    out = base_spec(name).task_fn(y)
    return float(out) if np.ndim(out) == 0 else out


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal factor of a Gaussian matrix, sign-fixed for determinism."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def make_task(name: str, dim: int, seed) -> TaskDef:
    """Build one shifted/rotated task, deterministic in (name, dim, seed)."""
    spec = base_spec(name)
    rng = np.random.default_rng(seed)
    width = spec.upper - spec.lower
    shift = spec.lower + width * (0.1 + 0.8 * rng.random(dim))
    rotation = random_rotation(dim, rng)
    return TaskDef(
        base_fn=name,
        dim=dim,
        lower=np.full(dim, spec.lower),
        upper=np.full(dim, spec.upper),
        shift=shift,
        rotation=rotation,
    )


# ---------------------------------------------------------------------------
# Suite factories
# ---------------------------------------------------------------------------

COMPLETE, PARTIAL, NONE = "complete", "partial", "none"

# (task functions, intersection degree, per-task dims)
SUITE1_ROWS = (
    (("griewank", "rastrigin"), COMPLETE, (50, 50)),
    (("ackley", "rastrigin"), COMPLETE, (50, 50)),
    (("ackley", "schwefel"), COMPLETE, (50, 50)),
    (("rastrigin", "sphere"), PARTIAL, (50, 50)),
    (("ackley", "rosenbrock"), PARTIAL, (50, 50)),
    (("ackley", "weierstrass"), PARTIAL, (50, 25)),
    (("rosenbrock", "rastrigin"), NONE, (50, 50)),
    (("griewank", "weierstrass"), NONE, (50, 50)),
    (("rastrigin", "weierstrass"), NONE, (50, 50)),
)

SUITE2_ROWS = (
    ("sphere",) * 5,
    ("rosenbrock",) * 5,
    ("rastrigin",) * 5,
    ("sphere", "rosenbrock", "rastrigin", "sphere", "rosenbrock"),
    ("rastrigin", "griewank", "weierstrass", "rastrigin", "griewank"),
    ("rosenbrock", "griewank", "schwefel", "rosenbrock", "griewank"),
    ("ackley", "rastrigin", "weierstrass", "ackley", "rastrigin"),
    ("rosenbrock", "ackley", "rastrigin", "griewank", "weierstrass"),
    ("ackley", "rastrigin", "griewank", "weierstrass", "schwefel"),
)

SUITE_IDS = ("suite1", "suite2")
DEFAULT_SUITE_SEED = 2021


@dataclass(frozen=True)
class GeneratedSeeded:
    """Generate shifts/rotations from a seed."""

    seed: int = DEFAULT_SUITE_SEED


@dataclass(frozen=True)
class FromFiles:
    """Load task data from JSON problem files."""

    path: str


DataSource = GeneratedSeeded | FromFiles


@dataclass(frozen=True)
class SuiteSpec:
    suite_id: str
    problems: tuple[MtoProblem, ...]
    data_source: DataSource

    def __post_init__(self):
        if self.suite_id == "suite1":
            if any(p.num_tasks != 2 for p in self.problems):
                raise ValueError("suite1 problems must have exactly 2 tasks")
        elif self.suite_id == "suite2":
            for p in self.problems:
                if p.num_tasks != 5 or any(t.dim != 50 for t in p.tasks):
                    raise ValueError("suite2 problems must have five 50-D tasks")


def _task_from_unified_shift(name: str, dim: int, u_shift: np.ndarray, rot_seed) -> TaskDef:
    spec = base_spec(name)
    width = spec.upper - spec.lower
    shift = spec.lower + width * u_shift[:dim]
    rotation = random_rotation(dim, np.random.default_rng(rot_seed))
    return TaskDef(
        base_fn=name,
        dim=dim,
        lower=np.full(dim, spec.lower),
        upper=np.full(dim, spec.upper),
        shift=shift,
        rotation=rotation,
    )


def _build_problem(fns, dims, intersection, prob_ss: np.random.SeedSequence) -> MtoProblem:
    k = len(fns)
    unified = max(dims)
    children = prob_ss.spawn(k + 1)
    shift_rng = np.random.default_rng(children[0])
    u_base = 0.1 + 0.8 * shift_rng.random(unified)
    tasks = []
    for t, (name, dim) in enumerate(zip(fns, dims)):
        if intersection == COMPLETE:
            u = u_base
        elif intersection == PARTIAL:
            shared = math.ceil(unified / 2)
            u = np.concatenate([u_base[:shared], 0.1 + 0.8 * shift_rng.random(unified - shared)])
        else:
            u = 0.1 + 0.8 * shift_rng.random(unified)
        tasks.append(_task_from_unified_shift(name, dim, u, children[t + 1]))
    return MtoProblem(tasks=tuple(tasks))


def build_suite(suite_id: str, data_source: DataSource | None = None) -> SuiteSpec:
    """Construct the nine problems of a suite, either generated from a seed
    or loaded from task-data files."""
    if suite_id not in SUITE_IDS:
        raise ValueError(f"unknown suite {suite_id!r}; expected one of {SUITE_IDS}")
    if data_source is None:
        data_source = GeneratedSeeded()
    if isinstance(data_source, FromFiles):
        problems = load_problem_files(data_source.path)
        return SuiteSpec(suite_id, tuple(problems), data_source)

    master = np.random.SeedSequence(data_source.seed)
    prob_seeds = master.spawn(9)
    problems = []
    if suite_id == "suite1":
        for (fns, inter, dims), ss in zip(SUITE1_ROWS, prob_seeds):
            problems.append(_build_problem(fns, dims, inter, ss))
    else:
        for fns, ss in zip(SUITE2_ROWS, prob_seeds):
            problems.append(_build_problem(fns, (50,) * 5, NONE, ss))
    return SuiteSpec(suite_id, tuple(problems), data_source)


# ---------------------------------------------------------------------------
# Task-data files
# ---------------------------------------------------------------------------


def _parse_task(obj, where: str) -> TaskDef:
    if not isinstance(obj, dict):
        raise BenchmarkDataError(f"{where}: task entry must be an object")
    for key in ("fn", "dim", "lower", "upper", "shift", "rotation"):
        if key not in obj:
            raise BenchmarkDataError(f"{where}: missing field {key!r}")
    name = obj["fn"]
    if name not in _REGISTRY:
        raise BenchmarkDataError(f"{where}: unknown function {name!r}")
    dim = obj["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise BenchmarkDataError(f"{where}: 'dim' must be a positive integer")

    def vec(key):
        val = obj[key]
        if isinstance(val, (int, float)):
            return np.full(dim, float(val))
        arr = np.asarray(val, dtype=float)
        if arr.shape != (dim,):
            raise BenchmarkDataError(f"{where}: {key!r} must be a scalar or length-{dim} array")
        return arr

    rotation = np.asarray(obj["rotation"], dtype=float)
    if rotation.shape != (dim, dim):
        raise BenchmarkDataError(f"{where}: 'rotation' must be a {dim}x{dim} matrix")
    try:
        return TaskDef(
            base_fn=name,
            dim=dim,
            lower=vec("lower"),
            upper=vec("upper"),
            shift=vec("shift"),
            rotation=rotation,
        )
    except ValueError as exc:
        raise BenchmarkDataError(f"{where}: {exc}") from exc


def _parse_problem(obj, where: str) -> MtoProblem:
    if not isinstance(obj, dict) or "tasks" not in obj:
        raise BenchmarkDataError(f"{where}: expected an object with a 'tasks' list")
    tasks = obj["tasks"]
    if not isinstance(tasks, list) or len(tasks) < 2:
        raise BenchmarkDataError(f"{where}: 'tasks' must list at least 2 tasks")
    parsed = [_parse_task(t, f"{where}, task {i + 1}") for i, t in enumerate(tasks)]
    return MtoProblem(tasks=tuple(parsed))


def load_problem_files(path) -> list[MtoProblem]:
    """Read problems from a JSON file or a directory of one-problem files."""
    p = Path(path)
    if not p.exists():
        raise BenchmarkDataError(f"{p}: no such file or directory")
    if p.is_dir():
        files = sorted(p.glob("*.json"))
        if not files:
            raise BenchmarkDataError(f"{p}: directory contains no .json problem files")
        return [_parse_problem(_load_json(f), str(f)) for f in files]
    data = _load_json(p)
    if isinstance(data, dict) and "problems" in data:
        data = data["problems"]
    if isinstance(data, dict):
        return [_parse_problem(data, str(p))]
    if not isinstance(data, list):
        raise BenchmarkDataError(f"{p}: expected a problem object or list of problems")
    return [_parse_problem(obj, f"{p}: problem {i + 1}") for i, obj in enumerate(data)]


def _load_json(path: Path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise BenchmarkDataError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def problem_to_dict(problem: MtoProblem) -> dict:
    """JSON-serializable form accepted by :func:`load_problem_files`."""
    return {
        "tasks": [
            {
                "fn": t.base_fn,
                "dim": t.dim,
                "lower": t.lower.tolist(),
                "upper": t.upper.tolist(),
                "shift": t.shift.tolist(),
                "rotation": t.rotation.tolist(),
            }
            for t in problem.tasks
        ]
    }


def write_problem_files(suite: SuiteSpec, directory) -> list[Path]:
    """Dump each problem of a suite as problem_XX.json; returns the paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, problem in enumerate(suite.problems):
        path = out / f"problem_{i + 1:02d}.json"
        with open(path, "w") as fh:
            json.dump(problem_to_dict(problem), fh)
        paths.append(path)
    return paths
