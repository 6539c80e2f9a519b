import json
import math
import random
from pathlib import Path

import pytest

from gpsizing.harness import (
    CSV_COLUMNS,
    BisectionConfig,
    BisectionError,
    bisect_min_popsize,
    bisect_threshold,
    config_to_init,
    even_up,
    fit_loglog_slope,
    init_for,
    initial_tree_stats,
    load_config,
    predicted_popsize,
    read_sweep_csv,
    sweep,
)
from gpsizing.engine import GPConfig
from gpsizing.problems import make_problem
from gpsizing.rng import SeededRng
from gpsizing.sizing import CMethod


def test_even_up():
    assert [even_up(x) for x in (1, 2, 3, 8, 37)] == [2, 2, 4, 8, 38]


def test_bisect_synthetic_threshold_37():
    probes = []

    def oracle(n):
        probes.append(n)
        return n >= 37

    result, trace = bisect_threshold(oracle, initial=4, cap=2**20, rel_tol=1 / 16)
    assert 37 <= result <= math.ceil(37 * (1 + 1 / 16))
    assert trace[-1][0] == probes[-1]
    assert any(n == result and ok for n, ok in trace)  # verified success


def test_bisect_always_true_returns_initial():
    result, trace = bisect_threshold(lambda n: True, initial=4)
    assert result == 4 and trace == [(4, True)]


def test_bisect_always_false_raises_with_trace():
    with pytest.raises(BisectionError) as exc:
        bisect_threshold(lambda n: False, initial=4, cap=100)
    assert exc.value.trace[-1][1] is False
    assert max(n for n, _ in exc.value.trace) <= 100


def test_bisect_hundred_random_thresholds():
    rnd = random.Random(20240428)
    tol = 1 / 16
    for _ in range(100):
        threshold = rnd.randint(1, 10_000)
        result, trace = bisect_threshold(
            lambda n, t=threshold: n >= t, initial=1, cap=2**20, rel_tol=tol
        )
        assert result >= threshold  # success side
        assert (result - threshold) / result <= tol  # within tolerance
        assert any(n == result and ok for n, ok in trace)


def test_bisect_normalized_grid():
    result, _ = bisect_threshold(lambda n: n >= 37, initial=4, normalize=even_up)
    assert result % 2 == 0 and 37 <= result <= 40


def test_bisect_min_popsize_returns_verified_trial():
    problem = make_problem("order", 4)
    template = GPConfig(pop_size=4, init=init_for(problem), max_generations=60)
    bis = BisectionConfig(runs=10, repetitions=1, initial=2)
    outcome = bisect_min_popsize(problem, template, bis, SeededRng(40))
    assert outcome.n_min >= 2
    assert len(outcome.trial.runs) == 10  # fully executed, not aborted
    assert outcome.trial.mean_correct_bb >= problem.m - 1
    assert not outcome.trial.aborted_early


def test_bisection_found_population_sustains_the_criterion():
    # the found n, re-trialed on fresh streams, keeps the mean at m - 1
    from gpsizing.engine import success_trial

    problem = make_problem("order", 8)
    template = GPConfig(pop_size=4, init=init_for(problem))
    bis = BisectionConfig(runs=20, repetitions=1, initial=2)
    outcome = bisect_min_popsize(problem, template, bis, SeededRng(41))
    from dataclasses import replace

    cfg = replace(template, pop_size=outcome.n_min)
    fresh = success_trial(problem, cfg, 20, SeededRng(42))
    assert fresh.mean_correct_bb >= problem.m - 1.5  # fresh-stream slack


def test_fit_loglog_slope_examples():
    slope, intercept = fit_loglog_slope([(1, 1), (2, 4), (4, 16)])
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert intercept == pytest.approx(0.0, abs=1e-12)
    flat, _ = fit_loglog_slope([(1, 5), (10, 5)])
    assert flat == pytest.approx(0.0, abs=1e-12)


def test_fit_loglog_slope_errors():
    with pytest.raises(ValueError):
        fit_loglog_slope([(1, 1)])
    with pytest.raises(ValueError):
        fit_loglog_slope([(1, 1), (2, -4)])


def test_init_conventions():
    order = init_for(make_problem("order", 8))
    assert order.ramp == (3, 5) and order.q == 0.0
    loud = init_for(make_problem("loud", 8))
    assert loud.ramp == (2, 7) and loud.q is None
    onoff = init_for(make_problem("onoff", 8))
    assert onoff.ramp == (2, 4) and onoff.q == 0.0


def test_predicted_popsize_domains():
    problem = make_problem("order", 8)
    stats = initial_tree_stats(problem, init_for(problem), seed=3)
    value = predicted_popsize(problem, stats.mean_size, stats.mean_leaves, CMethod.EXACT)
    assert value > 0
    tiny = make_problem("order", 2)  # alpha = 1/2 outside (0, 0.5)
    assert math.isnan(predicted_popsize(tiny, 10.0, 5.0, CMethod.EXACT))


def test_sweep_csv_roundtrip_and_determinism(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    bis = BisectionConfig(runs=5, repetitions=2, initial=2)
    for out in (out1, out2):
        records = sweep(
            "order",
            [4],
            seed=17,
            out_path=out,
            scale="desk",
            bisection=bis,
            engine={"max_generations": 40},
        )
        assert len(records) == 1

    def strip_timestamp(path: Path):
        return [line.rsplit(",", 1)[0] for line in path.read_text(encoding="utf-8").splitlines()]

    assert strip_timestamp(out1) == strip_timestamp(out2)

    rows = read_sweep_csv(out1)
    assert [r["m"] for r in rows] == [4]
    assert rows[0]["lambda_k"] == 7
    assert rows[0]["n_min_mean"] > 0
    header = out1.read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)


def test_sweep_prediction_columns_recomputable(tmp_path):
    out = tmp_path / "o.csv"
    bis = BisectionConfig(runs=5, repetitions=1, initial=2)
    sweep("order", [4], seed=23, out_path=out, bisection=bis, engine={"max_generations": 40})
    row = read_sweep_csv(out)[0]
    problem = make_problem(row["problem"], row["m"])
    stats = initial_tree_stats(problem, init_for(problem), seed=row["seed"])
    for col, method in (("pred_n_exact", CMethod.EXACT), ("pred_n_tablefit", CMethod.TABLE_FIT)):
        again = predicted_popsize(problem, stats.mean_size, stats.mean_leaves, method)
        assert row[col] == pytest.approx(again, rel=1e-12)


def test_sweep_empty_m_list_writes_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    records = sweep("order", [], seed=1, out_path=out)
    assert records == []
    assert out.read_text(encoding="utf-8") == ",".join(CSV_COLUMNS) + "\n"


def test_sweep_rejects_unsorted_m():
    with pytest.raises(ValueError):
        sweep("order", [8, 4], seed=1, out_path=None)


def test_load_config_validates_keys(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(
        json.dumps(
            {
                "problem": {"name": "order", "m": 4},
                "engine": {"max_generations": 50},
                "bisection": {"runs": 5},
            }
        )
    )
    cfg = load_config(good)
    assert cfg["problem"]["name"] == "order"

    bad_section = tmp_path / "bad1.json"
    bad_section.write_text(json.dumps({"problems": {}}))
    with pytest.raises(ValueError, match="unknown config sections"):
        load_config(bad_section)

    bad_key = tmp_path / "bad2.json"
    bad_key.write_text(json.dumps({"engine": {"max_gens": 5}}))
    with pytest.raises(ValueError, match="unknown keys"):
        load_config(bad_key)


def test_config_to_init():
    cfg = {"init": {"method": "ramped_full", "q": 0.1, "max_height": 5, "ramp": [2, 5]}}
    init = config_to_init(cfg)
    assert init.ramp == (2, 5) and init.q == 0.1
    assert config_to_init({}) is None
