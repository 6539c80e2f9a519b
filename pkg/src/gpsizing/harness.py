"""Experiment harness: bisection for minimal population size, sweeps, fits.

The minimal population size for a problem instance is found by doubling until
the success predicate holds, then bisecting the bracket until the relative
gap closes below the tolerance, returning the smallest population whose
success was actually verified. Success means the mean best correct-block
count over a trial of independent runs reaches m - 1 (error tolerance 1/m).

The predicate is statistical: every evaluation draws fresh RNG streams, so a
single bisection is one sample of the threshold and the sweep reports the
mean and spread over repetitions. All streams derive from one master seed,
which makes sweep CSVs byte-reproducible (timestamp column aside).

Population sizes are always rounded up to even so crossover pairs cleanly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from statistics import fmean, linear_regression, pstdev

from .engine import GPConfig, TrialResult, success_trial
from .problems import Problem, make_problem
from .rng import SeededRng
from .sizing import CMethod, SizingError, loud_popsize, onoff_popsize, order_popsize
from .trees import InitConfig, InitMethod, create_ramped_population, tree_statistics


class BisectionError(RuntimeError):
    """Success was never reached below the population cap."""

    def __init__(self, message: str, trace: list[tuple[int, bool]]):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class BisectionConfig:
    runs: int = 50
    rel_tol: float = 1.0 / 16.0
    initial: int = 4
    cap: int = 2**20
    repetitions: int = 30

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if not 1 <= self.initial < self.cap:
            raise ValueError("need 1 <= initial < cap")
        if self.runs < 1 or self.repetitions < 1:
            raise ValueError("runs and repetitions must be >= 1")


#: desk scale shrinks the published 50-run/30-repetition protocol to something
#: a single machine finishes in minutes; the success criterion is unchanged.
#: Both presets start probing at 2 (the smallest legal population) so small
#: problem instances resolve their true threshold instead of saturating the
#: default starting point.
SCALE_PRESETS = {
    "paper": BisectionConfig(runs=50, repetitions=30, initial=2),
    "desk": BisectionConfig(runs=20, repetitions=5, initial=2),
}


def even_up(x: int) -> int:
    """Round up to the next even integer.

    Used when turning real-valued model predictions into runnable population
    sizes (crossover then pairs cleanly). The bisection itself probes the
    plain integer grid: at desk scale the smallest thresholds sit at 3 and 7,
    which an even-only grid cannot represent, and that quantization alone
    visibly flattens the measured scaling at the low end.
    """
    x = int(x)
    return x + (x & 1)


def bisect_threshold(
    predicate,
    initial: int = 4,
    cap: int = 2**20,
    rel_tol: float = 1.0 / 16.0,
    normalize=None,
) -> tuple[int, list[tuple[int, bool]]]:
    """Smallest verified-success argument of a monotone boolean predicate.

    Doubles from `initial` until the predicate holds, then bisects until
    (hi - lo) / hi <= rel_tol. Returns (hi, trace) where trace lists every
    probe as (n, outcome). `normalize` maps candidate values onto the
    admissible grid (must be monotone and non-decreasing, e.g. even_up).
    """
    norm = normalize if normalize is not None else int
    trace: list[tuple[int, bool]] = []

    def probe(x: int) -> bool:
        ok = bool(predicate(x))
        trace.append((x, ok))
        return ok

    hi = norm(initial)
    if probe(hi):
        return hi, trace
    lo = hi
    while True:
        nxt = norm(2 * lo)
        if nxt > cap:
            raise BisectionError(
                f"no success up to cap {cap} (last failure at {lo})", trace
            )
        if probe(nxt):
            hi = nxt
            break
        lo = nxt

    while (hi - lo) / hi > rel_tol:
        mid = norm((lo + hi) // 2)
        if not lo < mid < hi:
            break  # grid exhausted
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return hi, trace


@dataclass
class BisectionOutcome:
    n_min: int
    trial: TrialResult  # the verified-success trial at n_min
    trace: list[tuple[int, bool]]


def bisect_min_popsize(
    problem: Problem,
    template: GPConfig,
    bis: BisectionConfig,
    rng: SeededRng,
) -> BisectionOutcome:
    """One bisection sample of the minimal population size for `problem`.

    Each predicate evaluation runs a fresh trial on its own child stream.
    Probes that cannot reach the mean-threshold abort early; the final
    returned trial is always a fully executed success.
    """
    threshold = problem.m - 1
    trials: dict[int, TrialResult] = {}
    calls = 0

    def predicate(n: int) -> bool:
        nonlocal calls
        cfg = replace(template, pop_size=n)
        trial = success_trial(
            problem, cfg, bis.runs, rng.spawn(calls), abort_below=threshold
        )
        calls += 1
        ok = not trial.aborted_early and trial.mean_correct_bb >= threshold
        if ok:
            trials[n] = trial
        return ok

    n_min, trace = bisect_threshold(
        predicate,
        initial=max(2, bis.initial),
        cap=bis.cap,
        rel_tol=bis.rel_tol,
        normalize=lambda x: max(2, int(x)),
    )
    return BisectionOutcome(n_min=n_min, trial=trials[n_min], trace=trace)


# ---------------------------------------------------------------------------
# experiment conventions per problem family


def init_for(problem: Problem) -> InitConfig:
    """Initialization convention for each family.

    The first-occurrence and tunable-expression problems ramp around the
    minimum height h_k whose full tree carries the target leaf budget (2m
    and m leaves respectively), with q = 0 so every tree reaches its ramp
    height. The always-expressed problem keeps its published heights [2, 7]
    with q at the primitive set's terminal frequency, which is what yields
    its characteristic ~4.5 mean tree size.
    """
    if problem.name == "loud":
        return InitConfig(
            method=InitMethod.RAMPED_HALF_HALF, q=None, max_height=7, ramp=(2, 7)
        )
    h_k = sizing_height(problem)
    lo = max(1, h_k - 1)
    return InitConfig(
        method=InitMethod.RAMPED_HALF_HALF, q=0.0, max_height=h_k + 1, ramp=(lo, h_k + 1)
    )


def sizing_height(problem: Problem) -> int:
    """h_k: minimum full-tree height averaging the family's leaf budget."""
    if problem.name == "order":
        return max(1, math.ceil(math.log2(2 * problem.m)))
    return max(1, math.ceil(math.log2(max(2, problem.m))))


def predicted_popsize(
    problem: Problem, lam: float, n_l: float, method: CMethod
) -> float:
    """Model prediction for the minimal population size, at alpha = 1/m.

    Returns nan when the instance sits outside the model's domain (alpha out
    of range for tiny m, or expression too rare)."""
    try:
        alpha = 1.0 / problem.m
        if problem.name == "order":
            return order_popsize(1, alpha, 0.25, 1.0, problem.m, n_l, lam, method)
        if problem.name == "loud":
            return loud_popsize(1, alpha, 0.25, 1.0, lam, method)
        h = sizing_height(problem)
        return onoff_popsize(1, alpha, 0.25, 1.0, lam, problem.p_exp, h, method)
    except SizingError:
        return float("nan")


# ---------------------------------------------------------------------------
# sweeps


CSV_COLUMNS = (
    "problem",
    "m",
    "lambda_k",
    "n_min_mean",
    "n_min_std",
    "t_c_mean",
    "n_fe_mean",
    "pred_n_exact",
    "pred_n_tablefit",
    "seed",
    "config_hash",
    "timestamp",
)

_MEASURE_SAMPLE = 1000  # trees drawn to measure initial lambda and leaf count


def initial_tree_stats(problem: Problem, init_cfg: InitConfig, seed: int):
    """Measured mean size/leaves of the initial population for one sweep cell.

    Uses the same derived stream the sweep uses, so the prediction columns of
    a sweep row can be recomputed from (problem, m, seed) alone.
    """
    rng = SeededRng(seed).spawn(problem.m).spawn(0)
    sample = create_ramped_population(problem.primitives, init_cfg, _MEASURE_SAMPLE, rng)
    return tree_statistics(sample)


@dataclass
class SweepRecord:
    problem: str
    m: int
    lambda_k: int
    n_min_mean: float
    n_min_std: float
    t_c_mean: float
    n_fe_mean: float
    pred_n_exact: float
    pred_n_tablefit: float
    seed: int
    config_hash: str
    timestamp: str
    n_mins: list[int] = field(default_factory=list)  # not serialized

    def row(self) -> list:
        return [getattr(self, col) for col in CSV_COLUMNS]


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def sweep(
    family: str,
    m_values: list[int],
    seed: int,
    out_path: str | Path | None = None,
    scale: str = "desk",
    p_exp: float = 1.0,
    engine: dict | None = None,
    bisection: BisectionConfig | None = None,
    init: InitConfig | None = None,
    echo=None,
) -> list[SweepRecord]:
    """Bisect the minimal population size for each problem size in m_values.

    Records are appended to the CSV as they complete, so a partial file is
    valid on crash. A failed problem size (cap exhausted) is reported on
    stderr with nan measurements and the sweep continues.
    """
    if sorted(m_values) != list(m_values):
        raise ValueError("m_values must be sorted ascending")
    if scale not in SCALE_PRESETS:
        raise ValueError(f"scale must be one of {sorted(SCALE_PRESETS)}")
    bis = bisection if bisection is not None else SCALE_PRESETS[scale]
    engine_kw = dict(engine or {})

    cfg_hash = _config_hash(
        {
            "family": family,
            "m_values": list(m_values),
            "p_exp": p_exp,
            "scale": scale,
            "bisection": asdict(bis),
            "engine": engine_kw,
            "init": None if init is None else str(init),
        }
    )

    writer = _CsvAppender(out_path) if out_path is not None else None
    master = SeededRng(seed)
    records: list[SweepRecord] = []
    try:
        for m in m_values:
            problem = make_problem(family, m, p_exp=p_exp)
            init_cfg = init if init is not None else init_for(problem)
            template = GPConfig(pop_size=4, init=init_cfg, **engine_kw)
            rng_m = master.spawn(m)

            stats = initial_tree_stats(problem, init_cfg, seed)
            lam, n_l = stats.mean_size, stats.mean_leaves

            n_mins: list[int] = []
            t_cs: list[float] = []
            n_fes: list[float] = []
            failed = False
            for rep in range(bis.repetitions):
                try:
                    outcome = bisect_min_popsize(problem, template, bis, rng_m.spawn(1 + rep))
                except BisectionError as err:
                    print(f"sweep {family} m={m} rep={rep}: {err}", file=sys.stderr)
                    failed = True
                    break
                n_mins.append(outcome.n_min)
                t_cs.extend(st.t_c for st in outcome.trial.runs)
                n_fes.extend(st.n_fe for st in outcome.trial.runs)
                if echo:
                    echo(f"{family} m={m} rep={rep}: n_min={outcome.n_min}")

            nan = float("nan")
            if failed or not n_mins:
                n_min_mean = n_min_std = t_c_mean = n_fe_mean = nan
                n_mins = []
            else:
                n_min_mean = fmean(n_mins)
                n_min_std = pstdev(n_mins) if len(n_mins) > 1 else 0.0
                t_c_mean = fmean(t_cs)
                n_fe_mean = fmean(n_fes)
            record = SweepRecord(
                problem=family,
                m=m,
                lambda_k=problem.kolmogorov_size,
                n_min_mean=n_min_mean,
                n_min_std=n_min_std,
                t_c_mean=t_c_mean,
                n_fe_mean=n_fe_mean,
                pred_n_exact=predicted_popsize(problem, lam, n_l, CMethod.EXACT),
                pred_n_tablefit=predicted_popsize(problem, lam, n_l, CMethod.TABLE_FIT),
                seed=seed,
                config_hash=cfg_hash,
                timestamp=datetime.now(timezone.utc).isoformat(),
                n_mins=n_mins,
            )
            records.append(record)
            if writer:
                writer.append(record)
    finally:
        if writer:
            writer.close()
    return records


class _CsvAppender:
    """Writes the header immediately and flushes per record (crash-safe)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(CSV_COLUMNS)
        self._fh.flush()

    def append(self, record: SweepRecord) -> None:
        self._writer.writerow(record.row())
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def read_sweep_csv(path: str | Path) -> list[dict]:
    """Load a sweep CSV into dicts with numeric fields parsed."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"CSV missing columns {sorted(missing)}")
        rows = []
        for raw in reader:
            row: dict = dict(raw)
            for key in ("m", "lambda_k", "seed"):
                row[key] = int(raw[key])
            for key in (
                "n_min_mean",
                "n_min_std",
                "t_c_mean",
                "n_fe_mean",
                "pred_n_exact",
                "pred_n_tablefit",
            ):
                row[key] = float(raw[key])
            rows.append(row)
    return rows


def fit_loglog_slope(points: list[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope and intercept of log y on log x."""
    if len(points) < 2:
        raise ValueError("need at least 2 points to fit a slope")
    if any(x <= 0 or y <= 0 for x, y in points):
        raise ValueError("log-log fit needs strictly positive coordinates")
    xs = [math.log(x) for x, _ in points]
    ys = [math.log(y) for _, y in points]
    fit = linear_regression(xs, ys)
    return fit.slope, fit.intercept


# ---------------------------------------------------------------------------
# experiment config files


_CONFIG_SCHEMA = {
    "problem": {"name", "m", "m_values", "p_exp"},
    "init": {"method", "q", "max_height", "ramp"},
    "engine": {
        "tournament_size",
        "p_crossover",
        "elite_frac",
        "max_nodes",
        "max_generations",
    },
    "bisection": {"runs", "rel_tol", "initial", "cap", "repetitions"},
    "sweep": {"scale"},
}


def load_config(path: str | Path) -> dict:
    """Read a JSON experiment config; unknown sections or keys are fatal."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config root must be a JSON object")
    unknown_sections = set(data) - set(_CONFIG_SCHEMA)
    if unknown_sections:
        raise ValueError(f"unknown config sections {sorted(unknown_sections)}")
    for section, keys in data.items():
        if not isinstance(keys, dict):
            raise ValueError(f"config section {section!r} must be an object")
        unknown = set(keys) - _CONFIG_SCHEMA[section]
        if unknown:
            raise ValueError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return data


def config_to_init(cfg: dict) -> InitConfig | None:
    section = cfg.get("init")
    if not section:
        return None
    kwargs = dict(section)
    if "method" in kwargs:
        kwargs["method"] = InitMethod(kwargs["method"])
    if "ramp" in kwargs and kwargs["ramp"] is not None:
        kwargs["ramp"] = tuple(kwargs["ramp"])
    return InitConfig(**kwargs)
