"""Selecto-recombinative GP loop: tournaments, subtree crossover, elitism.

No mutation. One run is strictly sequential and fully determined by its
SeededRng; independent runs take disjoint child streams so a trial's result
does not depend on execution order.

Accounting conventions (these pin down the reported numbers):

* t_c counts evaluated generations including the initial population, so a
  run whose random initial population already contains the optimum has
  t_c = 1, and n_fe = pop_size * t_c always. Fitness is deterministic, so
  elites and uncrossed copies reuse their stored evaluation; n_fe reflects
  the full-re-evaluation convention, not calls actually made.
* The crossover point is uniform over all nodes of each parent. An offspring
  that would exceed the node cap is replaced by (a share of) its first
  parent, keeping population size and budget accounting intact.
* The elite count is ceil(elite_frac * pop_size), chosen by fitness with a
  stable sort; elites remain ordinary tournament candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import fmean

from .problems import Evaluation, Problem
from .rng import SeededRng
from .trees import InitConfig, ProgramTree, create_ramped_population


@dataclass(frozen=True)
class GPConfig:
    pop_size: int
    init: InitConfig
    tournament_size: int = 4
    p_crossover: float = 1.0
    elite_frac: float = 0.05
    max_nodes: int = 1024
    max_generations: int = 200
    seed: int | None = None

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if not 0.0 <= self.p_crossover <= 1.0:
            raise ValueError("p_crossover must lie in [0, 1]")
        if not 0.0 <= self.elite_frac < 1.0:
            raise ValueError("elite_frac must lie in [0, 1)")
        if self.max_nodes < 3:
            raise ValueError("max_nodes must be >= 3 (smallest legal tree)")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")


@dataclass
class RunStats:
    """Outcome of one GP run.

    ``t_c`` is the convergence time: the generation (1-based, initial
    population = generation 1) at which the run's final best fitness was
    first attained. For runs that reach the optimum this is the generation
    the optimum appeared; runs stopped by the cap report the generation
    their best plateaued. ``generations`` counts evaluated generations
    actually executed, so n_fe = pop_size * generations always.
    """

    t_c: int
    generations: int
    converged: bool
    best: Evaluation
    best_correct_bb: int
    n_fe: int
    mean_size_per_gen: list[float] = field(default_factory=list)
    best_fitness_per_gen: list[float] = field(default_factory=list)


Individual = tuple[ProgramTree, Evaluation]


def tournament_select(pop: list[Individual], size: int, rng: SeededRng) -> Individual:
    """Best of `size` uniform draws with replacement; ties keep the first drawn."""
    best = pop[rng.randrange(len(pop))]
    for _ in range(size - 1):
        cand = pop[rng.randrange(len(pop))]
        if cand[1].beats(best[1]):
            best = cand
    return best


def crossover_at(
    a: ProgramTree, b: ProgramTree, i: int, j: int, max_nodes: int
) -> tuple[ProgramTree, ProgramTree]:
    """Swap the subtrees rooted at node i of a and node j of b.

    An offspring that would exceed max_nodes reverts to its own parent
    (trees are immutable, so the parent object itself serves as the copy).
    """
    a_end = a.subtree_end(i)
    b_end = b.subtree_end(j)
    nodes_a = a.nodes[:i] + b.nodes[j:b_end] + a.nodes[a_end:]
    nodes_b = b.nodes[:j] + a.nodes[i:a_end] + b.nodes[b_end:]
    child_a = ProgramTree(nodes_a) if len(nodes_a) <= max_nodes else a
    child_b = ProgramTree(nodes_b) if len(nodes_b) <= max_nodes else b
    return child_a, child_b


def subtree_crossover(
    a: ProgramTree, b: ProgramTree, max_nodes: int, rng: SeededRng
) -> tuple[ProgramTree, ProgramTree]:
    """Crossover at a uniformly chosen node in each parent."""
    i = rng.randrange(a.size)
    j = rng.randrange(b.size)
    return crossover_at(a, b, i, j, max_nodes)


def evolve(problem: Problem, cfg: GPConfig, rng: SeededRng | None = None) -> RunStats:
    """One generational GP run; stops at the optimum or the generation cap."""
    if rng is None:
        rng = SeededRng(cfg.seed if cfg.seed is not None else 0)
    worst_init = 2 ** (cfg.init.max_height + 1) - 1
    if worst_init > cfg.max_nodes:
        raise ValueError(
            f"init height {cfg.init.max_height} can produce {worst_init}-node trees, "
            f"over the {cfg.max_nodes}-node cap"
        )
    prims = problem.primitives
    n = cfg.pop_size
    elite_n = math.ceil(cfg.elite_frac * n)
    maximize = problem.direction.value == "maximize"

    trees = create_ramped_population(prims, cfg.init, n, rng)
    pop: list[Individual] = [(t, problem.evaluate(t)) for t in trees]

    best: Individual | None = None
    best_gen = 1
    mean_sizes: list[float] = []
    best_per_gen: list[float] = []
    gens = 0
    while True:
        gens += 1
        assert len(pop) == n
        mean_sizes.append(fmean(t.size for t, _ in pop))
        for ind in pop:
            if best is None or ind[1].beats(best[1]):
                best = ind
                best_gen = gens
        best_per_gen.append(best[1].fitness)
        if best[1].is_optimal or gens >= cfg.max_generations:
            break

        ranked = sorted(pop, key=lambda ind: ind[1].fitness, reverse=maximize)
        nxt: list[Individual] = ranked[:elite_n]
        while len(nxt) < n:
            p1 = tournament_select(pop, cfg.tournament_size, rng)
            p2 = tournament_select(pop, cfg.tournament_size, rng)
            if rng.random() < cfg.p_crossover:
                c1, c2 = subtree_crossover(p1[0], p2[0], cfg.max_nodes, rng)
                i1 = p1 if c1 is p1[0] else (c1, problem.evaluate(c1))
                i2 = p2 if c2 is p2[0] else (c2, problem.evaluate(c2))
            else:
                i1, i2 = p1, p2
            nxt.append(i1)
            if len(nxt) < n:
                nxt.append(i2)
        pop = nxt

    assert best is not None
    return RunStats(
        t_c=best_gen,
        generations=gens,
        converged=best[1].is_optimal,
        best=best[1],
        best_correct_bb=best[1].correct_bb_count,
        n_fe=n * gens,
        mean_size_per_gen=mean_sizes,
        best_fitness_per_gen=best_per_gen,
    )


@dataclass
class TrialResult:
    mean_correct_bb: float
    runs: list[RunStats]
    aborted_early: bool = False


def success_trial(
    problem: Problem,
    cfg: GPConfig,
    runs: int,
    rng: SeededRng,
    abort_below: float | None = None,
) -> TrialResult:
    """Mean best correct-block count over `runs` independent runs.

    Run i draws stream rng.spawn(i), so results are independent of execution
    order. When ``abort_below`` is set and the remaining runs can no longer
    lift the mean to that threshold even if all of them were perfect, the
    trial stops early (the outcome "below threshold" is already certain);
    the returned mean then covers only the executed runs.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    stats: list[RunStats] = []
    total = 0.0
    for i in range(runs):
        st = evolve(problem, cfg, rng.spawn(i))
        stats.append(st)
        total += st.best_correct_bb
        if abort_below is not None:
            ceiling = (total + (runs - len(stats)) * problem.m) / runs
            if ceiling < abort_below:
                return TrialResult(total / len(stats), stats, aborted_early=True)
    return TrialResult(total / runs, stats)
