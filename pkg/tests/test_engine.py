import pytest

from gpsizing.engine import (
    GPConfig,
    crossover_at,
    evolve,
    subtree_crossover,
    success_trial,
    tournament_select,
)
from gpsizing.problems import Direction, Evaluation, LoudProblem, OrderProblem
from gpsizing.rng import SeededRng
from gpsizing.trees import InitConfig, InitMethod, ProgramTree, tree_from_sexpr

INIT = InitConfig(method=InitMethod.RAMPED_HALF_HALF, q=0.0, max_height=4, ramp=(2, 4))


def ev_max(f):
    return Evaluation(fitness=f, direction=Direction.MAXIMIZE, correct_bb_count=0, is_optimal=False)


def fake_pop(fitnesses):
    return [(ProgramTree([-1, 0, 0]), ev_max(f)) for f in fitnesses]


def test_tournament_picks_best_of_sample():
    pop = fake_pop([2, 5, 3, 1])
    # tournament size covering the population must return the global best
    winner = tournament_select(pop, 64, SeededRng(1))
    assert winner[1].fitness == 5


def test_tournament_tie_keeps_first_drawn():
    pop = fake_pop([7, 7, 7, 7])
    rng = SeededRng(2)
    probe = SeededRng(2)
    first = pop[probe.randrange(len(pop))]
    assert tournament_select(pop, 4, rng) is first


def test_tournament_size_one_is_uniform_draw():
    pop = fake_pop([1, 2, 3, 4])
    rng = SeededRng(3)
    probe = SeededRng(3)
    for _ in range(100):
        assert tournament_select(pop, 1, rng) is pop[probe.randrange(len(pop))]


def test_crossover_at_size_arithmetic():
    p = OrderProblem(2)
    a = tree_from_sexpr(p.primitives, "(JOIN (JOIN X1 X2) (JOIN ~X1 ~X2))")  # size 7
    b = tree_from_sexpr(p.primitives, "(JOIN (JOIN X2 X1) X1)")  # size 5
    sub_a = a.subtree_end(1) - 1  # subtree at node 1 has size 3
    sub_b = b.subtree_end(4) - 4  # subtree at node 4 has size 1
    child_a, child_b = crossover_at(a, b, 1, 4, max_nodes=1024)
    assert child_a.size == a.size - sub_a + sub_b == 5
    assert child_b.size == b.size - sub_b + sub_a == 7


def test_crossover_at_roots_swaps_whole_trees():
    p = OrderProblem(2)
    a = tree_from_sexpr(p.primitives, "(JOIN X1 X2)")
    b = tree_from_sexpr(p.primitives, "(JOIN (JOIN ~X2 X1) ~X1)")
    child_a, child_b = crossover_at(a, b, 0, 0, max_nodes=1024)
    assert child_a.nodes == b.nodes and child_b.nodes == a.nodes


def test_crossover_cap_reverts_to_parent():
    p = OrderProblem(2)
    a = tree_from_sexpr(p.primitives, "(JOIN X1 X2)")
    b = tree_from_sexpr(p.primitives, "(JOIN (JOIN ~X2 X1) ~X1)")
    child_a, child_b = crossover_at(a, b, 2, 1, max_nodes=3)
    # a would grow to 5 nodes > 3: reverts; b shrinks to 3 nodes: accepted
    assert child_a is a
    assert child_b.size == 3


def test_subtree_crossover_draws_are_uniform_nodes():
    p = OrderProblem(2)
    a = tree_from_sexpr(p.primitives, "(JOIN (JOIN X1 X2) (JOIN ~X1 ~X2))")
    b = tree_from_sexpr(p.primitives, "(JOIN (JOIN X2 X1) X1)")
    rng = SeededRng(4)
    probe = SeededRng(4)
    for _ in range(50):
        i, j = probe.randrange(a.size), probe.randrange(b.size)
        want = crossover_at(a, b, i, j, 1024)
        got = subtree_crossover(a, b, 1024, rng)
        assert [t.nodes for t in got] == [t.nodes for t in want]


def test_gpconfig_validation():
    with pytest.raises(ValueError):
        GPConfig(pop_size=1, init=INIT)
    with pytest.raises(ValueError):
        GPConfig(pop_size=8, init=INIT, elite_frac=1.0)
    with pytest.raises(ValueError):
        GPConfig(pop_size=8, init=INIT, max_nodes=2)
    with pytest.raises(ValueError):
        GPConfig(pop_size=8, init=INIT, p_crossover=1.5)


def test_evolve_reaches_order_optimum():
    p = OrderProblem(4)
    cfg = GPConfig(pop_size=64, init=INIT, max_generations=100)
    stats = evolve(p, cfg, SeededRng(5))
    assert stats.converged and stats.best.is_optimal
    assert stats.best.fitness == 4
    assert stats.t_c <= stats.generations <= 100


def test_evolve_accounting_invariants():
    p = OrderProblem(6)
    cfg = GPConfig(pop_size=30, init=INIT, max_generations=40)
    stats = evolve(p, cfg, SeededRng(6))
    assert stats.n_fe == 30 * stats.generations
    assert len(stats.mean_size_per_gen) == stats.generations
    assert len(stats.best_fitness_per_gen) == stats.generations


def test_evolve_best_never_worsens():
    p = OrderProblem(8)
    cfg = GPConfig(pop_size=24, init=INIT, max_generations=60)
    stats = evolve(p, cfg, SeededRng(7))
    seq = stats.best_fitness_per_gen
    assert all(a <= b for a, b in zip(seq, seq[1:]))


def test_evolve_best_never_worsens_minimize():
    p = LoudProblem(4, 4)
    cfg = GPConfig(
        pop_size=16,
        init=InitConfig(method=InitMethod.RAMPED_HALF_HALF, q=None, max_height=7, ramp=(2, 7)),
        max_generations=60,
    )
    stats = evolve(p, cfg, SeededRng(8))
    seq = stats.best_fitness_per_gen
    assert all(a >= b for a, b in zip(seq, seq[1:]))


def test_evolve_without_crossover_only_selection():
    p = OrderProblem(8)
    cfg = GPConfig(pop_size=20, init=INIT, p_crossover=0.0, max_generations=25)
    stats = evolve(p, cfg, SeededRng(9))
    # no variation: the best is whatever initialization supplied, from gen 1
    assert stats.t_c == 1
    assert stats.best_fitness_per_gen[0] == stats.best_fitness_per_gen[-1]


def test_evolve_respects_node_cap():
    p = LoudProblem(8, 8)
    seen = []
    real_evaluate = p.evaluate

    def spying_evaluate(tree):
        seen.append(tree.size)
        return real_evaluate(tree)

    p.evaluate = spying_evaluate  # type: ignore[method-assign]
    cfg = GPConfig(
        pop_size=20,
        init=InitConfig(method=InitMethod.RAMPED_HALF_HALF, q=None, max_height=5, ramp=(2, 5)),
        max_nodes=64,
        max_generations=30,
    )
    evolve(p, cfg, SeededRng(10))
    assert seen and max(seen) <= 64


def test_evolve_rejects_init_taller_than_cap():
    p = LoudProblem(8, 8)
    cfg = GPConfig(
        pop_size=20,
        init=InitConfig(method=InitMethod.RAMPED_HALF_HALF, q=None, max_height=7, ramp=(2, 7)),
        max_nodes=64,
    )
    with pytest.raises(ValueError, match="node cap"):
        evolve(p, cfg, SeededRng(10))


def test_evolve_smallest_population():
    # n=2 exercises the ceil(0.05 * 2) = 1 elite rule and the odd fill slot
    p = OrderProblem(3)
    cfg = GPConfig(pop_size=2, init=INIT, max_generations=15)
    stats = evolve(p, cfg, SeededRng(16))
    assert stats.n_fe == 2 * stats.generations
    seq = stats.best_fitness_per_gen
    assert all(a <= b for a, b in zip(seq, seq[1:]))


def test_evolve_deterministic():
    p = OrderProblem(5)
    cfg = GPConfig(pop_size=32, init=INIT, max_generations=30)
    a = evolve(p, cfg, SeededRng(11, 3))
    b = evolve(p, cfg, SeededRng(11, 3))
    assert a == b


def test_evolve_seed_field_used_when_rng_omitted():
    p = OrderProblem(5)
    cfg = GPConfig(pop_size=32, init=INIT, max_generations=20, seed=77)
    assert evolve(p, cfg) == evolve(p, cfg, SeededRng(77))


def test_success_trial_mean_and_determinism():
    p = OrderProblem(3)
    cfg = GPConfig(pop_size=48, init=INIT, max_generations=60)
    trial = success_trial(p, cfg, 8, SeededRng(12))
    assert trial.mean_correct_bb == pytest.approx(3.0)  # easy instance: all optimal
    assert len(trial.runs) == 8
    again = success_trial(p, cfg, 8, SeededRng(12))
    assert again.mean_correct_bb == trial.mean_correct_bb
    assert [r.n_fe for r in again.runs] == [r.n_fe for r in trial.runs]


def test_success_trial_single_run():
    p = OrderProblem(4)
    cfg = GPConfig(pop_size=16, init=INIT, max_generations=30)
    trial = success_trial(p, cfg, 1, SeededRng(13))
    assert trial.mean_correct_bb == trial.runs[0].best_correct_bb


def test_success_trial_run_order_independence():
    # run i depends only on its child stream, not on earlier runs
    p = OrderProblem(4)
    cfg = GPConfig(pop_size=16, init=INIT, max_generations=30)
    rng = SeededRng(14)
    full = success_trial(p, cfg, 5, rng)
    solo = evolve(p, cfg, SeededRng(14).spawn(3))
    assert full.runs[3] == solo


def test_success_trial_early_abort():
    p = OrderProblem(8)
    cfg = GPConfig(pop_size=2, init=INIT, max_generations=5)
    trial = success_trial(p, cfg, 50, SeededRng(15), abort_below=7.99)
    assert trial.aborted_early
    assert len(trial.runs) < 50
