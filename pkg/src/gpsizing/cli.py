"""Command-line interface.

Subcommands:
  size       print model population-size predictions for a problem instance
  run        execute one GP run and report its stats
  bisect     repeat the minimal-population bisection and report the samples
  sweep      full experiment sweep over problem sizes, CSV output
  oracle     closed-form vs enumerated expressed-block distribution
  treestats  measured vs analytic initial tree sizes

Global flags: --seed, --config (JSON experiment file), --out (output dir),
--scale (paper or desk run counts).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from statistics import fmean

from . import combinatorics, harness, sizing, trees
from .engine import GPConfig, evolve
from .problems import make_problem
from .rng import SeededRng

DEFAULT_SEED = 20240428


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpsizing", description=__doc__)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master RNG seed")
    parser.add_argument("--config", type=Path, help="JSON experiment config")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--scale", choices=sorted(harness.SCALE_PRESETS), default="desk")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_problem_flags(p):
        p.add_argument("--problem", choices=("order", "loud", "onoff"))
        p.add_argument("--m", type=int)
        p.add_argument("--p-exp", type=float, dest="p_exp")

    p_size = sub.add_parser("size", help="model population-size predictions")
    add_problem_flags(p_size)
    p_size.add_argument("--k", type=int, default=1, help="fragment defining length")

    p_run = sub.add_parser("run", help="single GP run")
    add_problem_flags(p_run)
    p_run.add_argument("--n", type=int, required=True, help="population size")
    p_run.add_argument("--max-generations", type=int)

    p_bisect = sub.add_parser("bisect", help="minimal population size by bisection")
    add_problem_flags(p_bisect)
    p_bisect.add_argument("--repetitions", type=int)
    p_bisect.add_argument("--runs", type=int)

    p_sweep = sub.add_parser("sweep", help="sweep problem sizes, write CSV")
    p_sweep.add_argument("--problem", choices=("order", "loud", "onoff"))
    p_sweep.add_argument("--m", type=int, nargs="*", dest="m_values")
    p_sweep.add_argument("--p-exp", type=float, dest="p_exp")
    p_sweep.add_argument("--csv-name", help="override output file name")

    p_oracle = sub.add_parser("oracle", help="expressed-block distribution check")
    p_oracle.add_argument("--m", type=int, required=True)
    p_oracle.add_argument("--nl", type=int, required=True, help="leaf count n_l")

    p_tree = sub.add_parser("treestats", help="measured vs analytic tree sizes")
    p_tree.add_argument(
        "--method",
        choices=[m.value for m in trees.InitMethod],
        default=trees.InitMethod.RAMPED_HALF_HALF.value,
    )
    p_tree.add_argument("--q", type=float, default=0.5)
    p_tree.add_argument("--heights", type=int, nargs=2, metavar=("LO", "HI"))
    p_tree.add_argument("--h-max", type=int, default=6)
    p_tree.add_argument("--count", type=int, default=10000)
    return parser


def _merged(args, config: dict, section: str, key: str, fallback):
    """CLI flag > config file > fallback."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get(section, {}).get(key, fallback)


def _problem_from_args(args, config: dict):
    name = getattr(args, "problem", None) or config.get("problem", {}).get("name")
    if name is None:
        raise SystemExit("a problem must be given via --problem or the config file")
    m = _merged(args, config, "problem", "m", None)
    if m is None:
        raise SystemExit("a problem size must be given via --m or the config file")
    p_exp = _merged(args, config, "problem", "p_exp", 1.0)
    return make_problem(name, int(m), p_exp=float(p_exp))


def _engine_kwargs(config: dict) -> dict:
    return dict(config.get("engine", {}))


def _bisection_config(args, config: dict, scale: str) -> harness.BisectionConfig:
    bis = harness.SCALE_PRESETS[scale]
    overrides = dict(config.get("bisection", {}))
    for key in ("runs", "repetitions"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return replace(bis, **overrides) if overrides else bis


def cmd_size(args, config) -> int:
    problem = _problem_from_args(args, config)
    init = harness.config_to_init(config) or harness.init_for(problem)
    sample = trees.create_ramped_population(
        problem.primitives, init, 1000, SeededRng(args.seed).spawn(0)
    )
    stats = trees.tree_statistics(sample)
    alpha = 1.0 / problem.m
    print("model,c_method,problem,m,k,alpha,lambda,n_l,predicted_n")
    for method in (sizing.CMethod.EXACT, sizing.CMethod.TABLE_FIT, sizing.CMethod.PAPER_TAIL):
        pred = harness.predicted_popsize(problem, stats.mean_size, stats.mean_leaves, method)
        print(
            f"decision,{method.value},{problem.name},{problem.m},{args.k},"
            f"{alpha},{stats.mean_size},{stats.mean_leaves},{pred}"
        )
    kappa = problem.primitives.chi_t ** args.k
    supply = sizing.supply_popsize(stats.mean_size, args.k, kappa, alpha)
    print(
        f"supply,-,{problem.name},{problem.m},{args.k},"
        f"{alpha},{stats.mean_size},{stats.mean_leaves},{supply}"
    )
    return 0


def cmd_run(args, config) -> int:
    problem = _problem_from_args(args, config)
    init = harness.config_to_init(config) or harness.init_for(problem)
    engine_kw = _engine_kwargs(config)
    if args.max_generations is not None:
        engine_kw["max_generations"] = args.max_generations
    cfg = GPConfig(pop_size=args.n, init=init, **engine_kw)
    stats = evolve(problem, cfg, SeededRng(args.seed))
    print(f"problem={problem.name} m={problem.m} n={cfg.pop_size}")
    print(f"converged={stats.converged} t_c={stats.t_c} n_fe={stats.n_fe}")
    print(f"best_fitness={stats.best.fitness} correct_bb={stats.best_correct_bb}")
    print(f"mean_size_final={stats.mean_size_per_gen[-1]:.2f}")
    return 0


def cmd_bisect(args, config) -> int:
    problem = _problem_from_args(args, config)
    init = harness.config_to_init(config) or harness.init_for(problem)
    template = GPConfig(pop_size=4, init=init, **_engine_kwargs(config))
    bis = _bisection_config(args, config, args.scale)
    master = SeededRng(args.seed)
    n_mins = []
    for rep in range(bis.repetitions):
        outcome = harness.bisect_min_popsize(problem, template, bis, master.spawn(rep))
        n_mins.append(outcome.n_min)
        print(f"rep={rep} n_min={outcome.n_min} probes={len(outcome.trace)}")
    print(f"mean_n_min={fmean(n_mins)}")
    return 0


def cmd_sweep(args, config) -> int:
    name = args.problem or config.get("problem", {}).get("name")
    if name is None:
        raise SystemExit("a problem must be given via --problem or the config file")
    m_values = args.m_values
    if not m_values:
        m_values = config.get("problem", {}).get("m_values", [])
    p_exp = _merged(args, config, "problem", "p_exp", 1.0)
    scale = config.get("sweep", {}).get("scale", args.scale)
    bis = _bisection_config(args, config, scale)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_name = args.csv_name or f"{name}_sweep.csv"
    out_csv = args.out / csv_name
    records = harness.sweep(
        name,
        list(m_values),
        seed=args.seed,
        out_path=out_csv,
        scale=scale,
        p_exp=float(p_exp),
        engine=_engine_kwargs(config),
        bisection=bis,
        init=harness.config_to_init(config),
        echo=lambda msg: print(msg, file=sys.stderr),
    )
    for rec in records:
        print(f"m={rec.m} lambda_k={rec.lambda_k} n_min_mean={rec.n_min_mean}")
    print(f"wrote {out_csv}")
    return 0


def cmd_oracle(args, config) -> int:
    closed = combinatorics.mean_var_expressed(args.m, args.nl)
    enum = combinatorics.oracle_enumerate(args.m, args.nl)
    print("i,count_closed,count_enum,p_closed,p_enum")
    assert closed.counts is not None
    for i in range(args.m):
        print(
            f"{i},{closed.counts[i]},{enum.counts[i]},"
            f"{closed.probs[i]},{enum.probs[i]}"
        )
    print(f"# mean {closed.mean} vs {enum.mean}; variance {closed.variance} vs {enum.variance}")
    return 0


def cmd_treestats(args, config) -> int:
    method = trees.InitMethod(args.method)
    ramp = tuple(args.heights) if args.heights else None
    h_max = max(ramp) if ramp else args.h_max
    init = trees.InitConfig(method=method, q=args.q, max_height=h_max, ramp=ramp)
    prims = trees.PrimitiveSet(functions=("f",), terminals=("a", "b"))
    pop = trees.create_ramped_population(prims, init, args.count, SeededRng(args.seed))
    stats = trees.tree_statistics(pop)
    analytic = trees.avg_size_ramped_analytic(prims, init)
    print(f"method={method.value} q={args.q} heights={ramp or h_max} count={args.count}")
    print(f"measured_mean_size={stats.mean_size}")
    print(f"analytic_mean_size={analytic}")
    print(f"measured_mean_height={stats.mean_height}")
    print(f"measured_mean_leaves={stats.mean_leaves}")
    return 0


_COMMANDS = {
    "size": cmd_size,
    "run": cmd_run,
    "bisect": cmd_bisect,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "treestats": cmd_treestats,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    config = harness.load_config(args.config) if args.config else {}
    return _COMMANDS[args.command](args, config)


if __name__ == "__main__":
    sys.exit(main())
