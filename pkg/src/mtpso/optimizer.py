"""Generation loops for the multi-task swarm and the plain PSO baseline.

A run keeps one subpopulation per task in the shared unified space. Each
generation every particle picks a knowledge source (another task or its
own), moves using that source's best-known position, is re-evaluated on
its own task, and the per-source success/failure tallies feed the source
probabilities once the learning period has filled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import adaptation
from .adaptation import MemoryWindow, SourcePool
from .core import GbestRecord, MtoProblem, Particle, RunConfig, TaskDef, evaluate_task, fev


@dataclass(frozen=True)
class _SingleTask:
    """Degenerate one-task wrapper so a bare TaskDef can be optimized."""

    tasks: tuple[TaskDef, ...]
    unified_dim: int

    @property
    def num_tasks(self) -> int:
        return 1


def _as_problem(problem: MtoProblem | TaskDef):
    if isinstance(problem, TaskDef):
        return _SingleTask(tasks=(problem,), unified_dim=problem.dim)
    return problem


@dataclass
class SubpopState:
    """One task's swarm, stored as arrays of shape (N_s, D_u)."""

    task_index: int
    positions: np.ndarray
    velocities: np.ndarray
    pbest_pos: np.ndarray
    pbest_fit: np.ndarray
    last_source: np.ndarray
    gbest: GbestRecord
    pool: SourcePool
    mem: MemoryWindow
    select_rng: np.random.Generator
    vel_rng: np.random.Generator

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    def particle(self, i: int) -> Particle:
        """Copy of particle i, for inspection and tests."""
        return Particle(
            x=self.positions[i].copy(),
            v=self.velocities[i].copy(),
            pbest=self.pbest_pos[i].copy(),
            f_pbest=float(self.pbest_fit[i]),
            last_source=int(self.last_source[i]),
        )


@dataclass
class SwarmState:
    problem: MtoProblem
    config: RunConfig
    subpops: list[SubpopState]
    generation: int = 1


@dataclass
class RunResult:
    """Everything one run produces.

    ``fev_trace[g-1, t]`` is task t's best error value at generation g
    (generation 1 is the evaluated initial population). ``source_counts``
    is None for the plain PSO baseline; otherwise ``source_counts[j, t, k]``
    counts task t's particles that chose source k in generation j+2.
    """

    algorithm: str
    seed: int
    pop_per_task: int
    fev_trace: np.ndarray
    source_counts: np.ndarray | None
    best_positions: np.ndarray
    best_fevs: np.ndarray


def inertia_weight(g: int, max_gens: int, w_start: float, w_end: float) -> float:
    """Linearly decreasing inertia over the run."""
    if max_gens == 1:
        return w_start
    return w_start - (w_start - w_end) * (g - 1) / (max_gens - 1)


def velocity_s1(v, x, pbest, gbest_own, gbest_src, w, c1, c2, c3, r1, r2, r3):
    """Four-term update: inertia, cognition, own swarm best, source best."""
    return (
        w * v
        + c1 * r1 * (pbest - x)
        + c2 * r2 * (gbest_own - x)
        + c3 * r3 * (gbest_src - x)
    )


def velocity_s2(v, x, pbest, gbest_src, w, c1, c2, r1, r2):
    """Three-term update with the chosen source's best in the social term."""
    return w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest_src - x)


def velocity_pso(v, x, pbest, gbest, w, c1, c2, r1, r2):
    """Classic update used by the no-transfer baseline."""
    return w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)


BOUNCE_DAMPING = 0.5


def step_position(x, v):
    """Move within [0, 1]: positions that would leave the box are reflected
    off the walls and their velocity is reversed and damped.

    Hard clamping (zeroed velocity at the wall) collapses the swarm long
    before the inertia schedule ends and stalls convergence by orders of
    magnitude; a damped bounce keeps the box invariant without the stall.
    """
    moved = x + v
    out = (moved < 0.0) | (moved > 1.0)
    if np.any(out):
        folded = np.mod(moved, 2.0)
        reflected = np.where(folded > 1.0, 2.0 - folded, folded)
        position = np.where(out, reflected, moved)
        velocity = np.where(out, -BOUNCE_DAMPING * v, v)
        return position, velocity
    return moved, v


def init_swarm(problem: MtoProblem | TaskDef, config: RunConfig) -> SwarmState:
    """Uniform random positions, zero velocities, memories empty, uniform
    source probabilities; every subpopulation evaluated on its own task.

    Accepts a bare TaskDef for degenerate single-task (K=1) runs."""
    problem = _as_problem(problem)
    k = problem.num_tasks
    n_s = config.pop_per_task
    d_u = problem.unified_dim
    root = np.random.SeedSequence(config.seed)
    subpops = []
    for t, task_ss in enumerate(root.spawn(k)):
        init_ss, select_ss, vel_ss = task_ss.spawn(3)
        init_rng = np.random.default_rng(init_ss)
        positions = init_rng.random((n_s, d_u))
        fit = np.asarray(evaluate_task(positions, problem.tasks[t]), dtype=float)
        best = int(np.argmin(fit))
        subpops.append(
            SubpopState(
                task_index=t,
                positions=positions,
                velocities=np.zeros((n_s, d_u)),
                pbest_pos=positions.copy(),
                pbest_fit=fit.copy(),
                last_source=np.full(n_s, t, dtype=np.int64),
                gbest=GbestRecord(position=positions[best].copy(), fitness=float(fit[best])),
                pool=SourcePool.uniform(k),
                mem=MemoryWindow(config.lp, k),
                select_rng=np.random.default_rng(select_ss),
                vel_rng=np.random.default_rng(vel_ss),
            )
        )
    return SwarmState(problem=problem, config=config, subpops=subpops)


def _move_subpop(sp: SubpopState, gbest_mat: np.ndarray, w: float, config: RunConfig) -> None:
    n_s, d_u = sp.positions.shape
    t = sp.task_index
    x, v, pb = sp.positions, sp.velocities, sp.pbest_pos
    if config.algorithm == "pso":
        r1 = sp.vel_rng.random((n_s, d_u))
        r2 = sp.vel_rng.random((n_s, d_u))
        v_new = velocity_pso(v, x, pb, gbest_mat[t], w, config.c1, config.c2, r1, r2)
    else:
        if sp.pool.is_focus:
            iks = np.full(n_s, t, dtype=np.int64)
        else:
            us = sp.select_rng.random(n_s)
            iks = adaptation.roulette_select_many(sp.pool.p, us)
        sp.last_source = iks
        g_src = gbest_mat[iks]
        r1 = sp.vel_rng.random((n_s, d_u))
        r2 = sp.vel_rng.random((n_s, d_u))
        if config.algorithm == "samtpso-s1":
            r3 = sp.vel_rng.random((n_s, d_u))
            v_new = velocity_s1(
                v, x, pb, gbest_mat[t], g_src, w, config.c1, config.c2, config.c3, r1, r2, r3
            )
        else:
            v_new = velocity_s2(v, x, pb, g_src, w, config.c1, config.c2, r1, r2)
    sp.positions, sp.velocities = step_position(x, v_new)


def evaluate_and_update(sp: SubpopState, task: TaskDef, record_outcomes: bool = True) -> None:
    """Evaluate moved particles, refresh pbest/gbest (strict improvement
    only), and tally outcomes against each particle's chosen source."""
    fitness = np.asarray(evaluate_task(sp.positions, task), dtype=float)
    improved = fitness < sp.pbest_fit
    if np.any(improved):
        sp.pbest_pos[improved] = sp.positions[improved]
        sp.pbest_fit[improved] = fitness[improved]
        cand = np.flatnonzero(improved)
        j = cand[np.argmin(fitness[cand])]
        if fitness[j] < sp.gbest.fitness:
            sp.gbest.position = sp.positions[j].copy()
            sp.gbest.fitness = float(fitness[j])
    if record_outcomes:
        k = sp.mem.k
        ns_col = np.bincount(sp.last_source[improved], minlength=k)
        nf_col = np.bincount(sp.last_source[~improved], minlength=k)
        sp.mem.record_counts(ns_col, nf_col)
        sp.mem.commit_generation()


def run_generation(state: SwarmState) -> np.ndarray | None:
    """Advance one generation; returns the (K, K) source-choice counts, or
    None for the baseline."""
    state.generation += 1
    config = state.config
    adaptive = config.algorithm != "pso"
    w = inertia_weight(state.generation, config.max_gens, config.w_start, config.w_end)
    k = state.problem.num_tasks
    gbest_mat = np.stack([sp.gbest.position for sp in state.subpops])

    counts = np.zeros((k, k), dtype=np.int64) if adaptive else None
    for sp in state.subpops:
        _move_subpop(sp, gbest_mat, w, config)
        if adaptive:
            counts[sp.task_index] = np.bincount(sp.last_source, minlength=k)
    for sp in state.subpops:
        evaluate_and_update(sp, state.problem.tasks[sp.task_index], record_outcomes=adaptive)
    if adaptive and state.generation > config.lp:
        for sp in state.subpops:
            sp.pool.p = adaptation.update_probabilities(sp.mem, config.bp, config.eps)
            sp.pool.is_focus = adaptation.check_focus(sp.mem)
            sp.mem.evict_oldest()
    return counts


def run(problem: MtoProblem | TaskDef, config: RunConfig, observer=None) -> RunResult:
    """Execute one full run of ``config.max_gens`` generations.

    ``observer(state)``, when given, is called after the initial evaluation
    and after every generation; useful for invariant checks.
    """
    problem = _as_problem(problem)
    state = init_swarm(problem, config)
    k = problem.num_tasks
    gens = config.max_gens
    adaptive = config.algorithm != "pso"
    trace = np.empty((gens, k))
    trace[0] = [fev(sp.gbest.fitness, problem.tasks[sp.task_index]) for sp in state.subpops]
    counts_hist = np.zeros((gens - 1, k, k), dtype=np.int64) if adaptive else None
    if observer is not None:
        observer(state)
    while state.generation < gens:
        counts = run_generation(state)
        g = state.generation
        trace[g - 1] = [
            fev(sp.gbest.fitness, problem.tasks[sp.task_index]) for sp in state.subpops
        ]
        if counts is not None:
            counts_hist[g - 2] = counts
        if observer is not None:
            observer(state)
    return RunResult(
        algorithm=config.algorithm,
        seed=config.seed,
        pop_per_task=config.pop_per_task,
        fev_trace=trace,
        source_counts=counts_hist,
        best_positions=np.stack([sp.gbest.position for sp in state.subpops]),
        best_fevs=trace[-1].copy(),
    )
