import numpy as np
import pytest

from mtpso.adaptation import SourcePool
from mtpso.benchmarks import make_task
from mtpso.core import MtoProblem, RunConfig, evaluate_task
from mtpso.optimizer import (
    evaluate_and_update,
    inertia_weight,
    init_swarm,
    run,
    run_generation,
    step_position,
    velocity_pso,
    velocity_s1,
    velocity_s2,
)


def small_problem(seed=0, dim=5):
    return MtoProblem(tasks=(make_task("sphere", dim, seed), make_task("rastrigin", dim, seed + 1)))


class TestInertiaWeight:
    def test_schedule_start(self):
        assert inertia_weight(1, 2000, 0.9, 0.4) == 0.9

    def test_schedule_end(self):
        assert inertia_weight(2000, 2000, 0.9, 0.4) == pytest.approx(0.4)

    def test_midpoint(self):
        assert inertia_weight(501, 1001, 0.9, 0.4) == pytest.approx(0.65)

    def test_single_generation(self):
        assert inertia_weight(1, 1, 0.9, 0.4) == 0.9


class TestVelocityRules:
    def test_fixed_point(self):
        x = np.array([0.3, 0.7])
        v = np.zeros(2)
        out = velocity_s1(v, x, x, x, x, 0.5, 1.1, 1.1, 1.1, 0.5, 0.5, 0.5)
        assert np.allclose(out, 0.0)

    def test_s1_hand_arithmetic(self):
        out = velocity_s1(
            v=0.2, x=1.0, pbest=1.0, gbest_own=1.0, gbest_src=2.0,
            w=0.5, c1=1.0, c2=1.0, c3=1.0, r1=1.0, r2=1.0, r3=1.0,
        )
        assert out == pytest.approx(1.1)

    def test_s2_hand_arithmetic(self):
        out = velocity_s2(v=0.2, x=1.0, pbest=1.0, gbest_src=2.0,
                          w=0.5, c1=1.0, c2=1.0, r1=1.0, r2=1.0)
        assert out == pytest.approx(1.1)

    def test_s1_collapses_when_source_is_own(self):
        rng = np.random.default_rng(0)
        v, x, pb, gb = rng.random((4, 6))
        r1, r2, r3 = rng.random((3, 6))
        four_term = velocity_s1(v, x, pb, gb, gb, 0.7, 1.1, 1.1, 1.1, r1, r2, r3)
        merged = 0.7 * v + 1.1 * r1 * (pb - x) + (1.1 * r2 + 1.1 * r3) * (gb - x)
        assert np.allclose(four_term, merged, rtol=1e-12)

    def test_s2_with_own_source_equals_pso(self):
        rng = np.random.default_rng(1)
        v, x, pb, gb = rng.random((4, 6))
        r1, r2 = rng.random((2, 6))
        assert np.allclose(
            velocity_s2(v, x, pb, gb, 0.6, 1.494, 1.494, r1, r2),
            velocity_pso(v, x, pb, gb, 0.6, 1.494, 1.494, r1, r2),
        )

    def test_zero_coefficients_leave_inertia(self):
        v = np.array([0.4, -0.2])
        x = np.array([0.1, 0.9])
        out = velocity_s2(v, x, x + 1, x + 2, 0.5, 0.0, 0.0, 0.3, 0.7)
        assert np.allclose(out, 0.5 * v)


class TestStepPosition:
    def test_interior_move_keeps_velocity(self):
        x, v = step_position(np.array([0.5]), np.array([0.2]))
        assert x[0] == pytest.approx(0.7)
        assert v[0] == pytest.approx(0.2)

    def test_overshoot_reflects_and_damps(self):
        x, v = step_position(np.array([0.9]), np.array([0.3]))
        assert x[0] == pytest.approx(0.8)  # bounced off 1.0
        assert v[0] == pytest.approx(-0.15)

    def test_undershoot_reflects(self):
        x, v = step_position(np.array([0.1]), np.array([-0.3]))
        assert x[0] == pytest.approx(0.2)
        assert v[0] == pytest.approx(0.15)

    def test_multi_width_overshoot_stays_inside(self):
        x, v = step_position(np.array([0.0]), np.array([3.7]))
        assert x[0] == pytest.approx(0.3)
        assert 0.0 <= x[0] <= 1.0

    def test_zero_velocity_is_noop(self):
        x, v = step_position(np.array([0.25, 0.75]), np.zeros(2))
        assert np.array_equal(x, [0.25, 0.75])

    def test_exact_boundary_landing_keeps_velocity(self):
        x, v = step_position(np.array([0.5]), np.array([0.5]))
        assert x[0] == 1.0
        assert v[0] == 0.5

    def test_batch(self):
        rng = np.random.default_rng(5)
        x = rng.random((40, 7))
        v = rng.uniform(-2, 2, (40, 7))
        x2, _ = step_position(x, v)
        assert np.all(x2 >= 0.0) and np.all(x2 <= 1.0)


class TestInitSwarm:
    def test_structure(self):
        state = init_swarm(small_problem(), RunConfig(algorithm="samtpso-s1", pop_per_task=50, seed=3))
        assert len(state.subpops) == 2
        for sp in state.subpops:
            assert sp.size == 50
            assert np.allclose(sp.pool.p, 0.5)
            assert sp.pool.is_focus is False
            assert np.all(sp.velocities == 0.0)
            assert np.array_equal(sp.pbest_pos, sp.positions)
            assert sp.mem.filled == 0
        assert state.generation == 1

    def test_deterministic(self):
        cfg = RunConfig(algorithm="samtpso-s1", pop_per_task=20, seed=9)
        a = init_swarm(small_problem(), cfg)
        b = init_swarm(small_problem(), cfg)
        for sa, sb in zip(a.subpops, b.subpops):
            assert np.array_equal(sa.positions, sb.positions)
            assert np.array_equal(sa.pbest_fit, sb.pbest_fit)

    def test_gbest_is_min_pbest(self):
        state = init_swarm(small_problem(), RunConfig(algorithm="samtpso-s2", pop_per_task=30, seed=1))
        for sp in state.subpops:
            assert sp.gbest.fitness == sp.pbest_fit.min()
            assert sp.gbest.fitness <= sp.pbest_fit.min()

    def test_pbest_fitness_consistent(self):
        problem = small_problem()
        state = init_swarm(problem, RunConfig(algorithm="samtpso-s1", pop_per_task=10, seed=2))
        for sp in state.subpops:
            task = problem.tasks[sp.task_index]
            for i in range(sp.size):
                p = sp.particle(i)
                ref = evaluate_task(p.pbest, task)
                assert p.f_pbest == pytest.approx(ref, rel=1e-12)


class TestEvaluateAndUpdate:
    def make_subpop(self, positions, pbest_fit, last_source, problem):
        cfg = RunConfig(algorithm="samtpso-s1", pop_per_task=len(positions), seed=0)
        state = init_swarm(problem, cfg)
        sp = state.subpops[0]
        sp.positions = np.asarray(positions, dtype=float)
        sp.pbest_fit = np.asarray(pbest_fit, dtype=float)
        sp.pbest_pos = sp.positions * 0.0 + 0.25
        sp.last_source = np.asarray(last_source, dtype=np.int64)
        return state, sp

    def test_improve_improve_worsen_tally(self):
        problem = small_problem()
        task = problem.tasks[0]
        positions = np.array([[0.2] * 5, [0.3] * 5, [0.4] * 5])
        fits = np.asarray(evaluate_task(positions, task))
        # pbest thresholds placed so particles 0,1 improve and 2 worsens
        pbest_fit = np.array([fits[0] + 1.0, fits[1] + 1.0, fits[2] - 1.0])
        state, sp = self.make_subpop(positions, pbest_fit, [0, 1, 1], problem)
        evaluate_and_update(sp, task)
        ns, nf = sp.mem.columns()
        assert ns[-1].sum() == 2
        assert nf[-1].sum() == 1
        assert np.array_equal(ns[-1], [1, 1])
        assert np.array_equal(nf[-1], [0, 1])

    def test_tie_counts_as_failure(self):
        problem = small_problem()
        task = problem.tasks[0]
        positions = np.array([[0.2] * 5])
        fit = float(np.asarray(evaluate_task(positions, task))[0])
        state, sp = self.make_subpop(positions, [fit], [0], problem)
        old_pbest = sp.pbest_pos.copy()
        evaluate_and_update(sp, task)
        ns, nf = sp.mem.columns()
        assert ns[-1].sum() == 0 and nf[-1].sum() == 1
        assert np.array_equal(sp.pbest_pos, old_pbest)

    def test_gbest_updated_to_subpop_min(self):
        problem = small_problem()
        task = problem.tasks[0]
        positions = np.array([[0.2] * 5, [0.21] * 5])
        fits = np.asarray(evaluate_task(positions, task))
        state, sp = self.make_subpop(positions, fits + 10.0, [0, 0], problem)
        sp.gbest.fitness = fits.min() + 5.0
        evaluate_and_update(sp, task)
        assert sp.gbest.fitness == fits.min()


class TestRunLoops:
    def test_pso_ignores_adaptation(self):
        state = init_swarm(small_problem(), RunConfig(algorithm="pso", pop_per_task=10, seed=5, max_gens=30))
        for _ in range(10):
            counts = run_generation(state)
        assert counts is None
        for sp in state.subpops:
            assert sp.mem.filled == 0
            assert np.allclose(sp.pool.p, 0.5)  # untouched

    def test_single_generation_run(self):
        result = run(small_problem(), RunConfig(algorithm="samtpso-s1", pop_per_task=10, seed=1, max_gens=1))
        assert result.fev_trace.shape == (1, 2)
        assert result.source_counts.shape == (0, 2, 2)

    def test_trace_monotone_and_counts_conserved(self):
        cfg = RunConfig(algorithm="samtpso-s1", pop_per_task=12, seed=7, max_gens=60, lp=5)
        result = run(small_problem(), cfg)
        diffs = np.diff(result.fev_trace, axis=0)
        assert np.all(diffs <= 1e-15)
        assert np.all(result.source_counts.sum(axis=2) == 12)

    def test_trace_matches_final_fevs(self):
        cfg = RunConfig(algorithm="samtpso-s2", pop_per_task=10, seed=3, max_gens=25)
        result = run(small_problem(), cfg)
        assert np.array_equal(result.fev_trace[-1], result.best_fevs)
        assert result.best_positions.shape == (2, 5)

    def test_determinism_over_100_generations(self):
        cfg = RunConfig(algorithm="samtpso-s1", pop_per_task=15, seed=123, max_gens=100)
        a = run(small_problem(), cfg)
        b = run(small_problem(), cfg)
        assert np.array_equal(a.fev_trace, b.fev_trace)
        assert np.array_equal(a.source_counts, b.source_counts)
        assert np.array_equal(a.best_positions, b.best_positions)

    def test_positions_stay_in_unit_box(self):
        seen = []

        def observer(state):
            for sp in state.subpops:
                seen.append((sp.positions.min(), sp.positions.max()))

        run(small_problem(), RunConfig(algorithm="samtpso-s2", pop_per_task=10, seed=4, max_gens=40),
            observer=observer)
        lo = min(s[0] for s in seen)
        hi = max(s[1] for s in seen)
        assert lo >= 0.0 and hi <= 1.0

    def test_gbest_never_above_pbests(self):
        def observer(state):
            for sp in state.subpops:
                assert sp.gbest.fitness <= sp.pbest_fit.min() + 1e-15

        run(small_problem(), RunConfig(algorithm="samtpso-s1", pop_per_task=10, seed=6, max_gens=30),
            observer=observer)

    def test_probabilities_on_simplex_every_generation(self):
        def observer(state):
            for sp in state.subpops:
                assert abs(sp.pool.p.sum() - 1.0) <= 1e-12
                assert np.all(sp.pool.p > 0)

        run(small_problem(), RunConfig(algorithm="samtpso-s1", pop_per_task=10, seed=8, max_gens=40, lp=5),
            observer=observer)

    def test_single_task_degenerate_run(self):
        task = make_task("sphere", 6, 77)
        result = run(task, RunConfig(algorithm="samtpso-s2", pop_per_task=10, seed=2, max_gens=20))
        assert result.fev_trace.shape == (20, 1)

    def test_k1_s2_bit_identical_to_pso(self):
        task = make_task("sphere", 10, 31)
        s2 = run(task, RunConfig(algorithm="samtpso-s2", pop_per_task=20, seed=17, max_gens=50))
        pso = run(task, RunConfig(algorithm="pso", pop_per_task=20, seed=17, max_gens=50))
        assert np.array_equal(s2.fev_trace, pso.fev_trace)
        assert np.array_equal(s2.best_positions, pso.best_positions)

    def test_probabilities_uniform_until_learning_period_ends(self):
        lp = 8
        snapshots = []

        def observer(state):
            snapshots.append((state.generation, [sp.pool.p.copy() for sp in state.subpops]))

        run(small_problem(), RunConfig(algorithm="samtpso-s1", pop_per_task=10, seed=5, max_gens=lp + 3, lp=lp),
            observer=observer)
        for g, pools in snapshots:
            if g <= lp:
                for p in pools:
                    assert np.allclose(p, 0.5)
