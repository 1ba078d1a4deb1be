"""Benchmark harness: prediction construction, error injection, and the
classical-vs-augmented sweep with exact offline optima.

A sweep fixes half of each instance's elements as the prediction, swaps an
alpha-fraction of them for unpredicted elements (keeping the arrival count
fixed, so the normalized error is 2*alpha), runs the requested algorithms on
one arrival order per cell, and emits one CSV row per measurement.
"""

from __future__ import annotations

import csv
import io
import math
import random
import sys
import time
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from . import decomp, setcover, wpap
from .core import (
    CheapestItemAdapter,
    ConfigurationError,
    CoveringInstance,
    IceOptions,
    NodeBudgetExceeded,
    OracleContractViolation,
    SizeLimitError,
    derive_seed,
    ice_run,
    prediction_error,
)

CSV_HEADER = [
    "dataset",
    "instance_id",
    "seed",
    "alpha",
    "eta",
    "eta_norm",
    "algorithm",
    "cost",
    "opt",
    "ratio",
    "runtime_ms",
    "oracle_kind",
]

GAMMA_BMC = math.e / (math.e - 1.0)

DEFAULT_ALPHA_GRID = tuple(Fraction(i, 20) for i in range(8))  # 0, 0.05, ..., 0.35


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "random-spec"  # random-spec | pace-dir | wpap-spec
    data_dir: str | None = None
    n_instances: int = 20
    n_elements: int = 200
    n_sets: int = 40
    set_size: int = 20
    prediction_fraction: Fraction = Fraction(1, 2)
    alpha_grid: tuple[Fraction, ...] = DEFAULT_ALPHA_GRID
    seeds: tuple[int, ...] = (0,)
    algorithms: tuple[str, ...] = ("classical", "ice_exact", "ice_approx")
    cap_elements: int | None = None
    cap_items: int | None = None
    node_budget: int = 3_000_000
    base_seed: int = 0

    def __post_init__(self):
        for a in self.alpha_grid:
            if not 0 <= a <= 1:
                raise ConfigurationError(f"alpha {a} outside [0, 1]")
        unknown = set(self.algorithms) - {"classical", "ice_exact", "ice_approx"}
        if unknown:
            raise ConfigurationError(f"unknown algorithms {sorted(unknown)}")


@dataclass(frozen=True)
class ExperimentRow:
    dataset: str
    instance_id: str
    seed: int
    alpha: float
    eta: int
    eta_norm: float
    algorithm: str
    cost: float
    opt: float
    ratio: float
    runtime_ms: float
    oracle_kind: str


def emit_rows(rows: Iterable[ExperimentRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        record = []
        for f in fields(ExperimentRow):
            value = getattr(r, f.name)
            record.append(repr(value) if isinstance(value, float) else value)
        writer.writerow(record)
    return buf.getvalue()


def parse_rows(text: str) -> list[ExperimentRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        missing = set(CSV_HEADER) - set(header)
        raise ConfigurationError(f"csv header mismatch; missing {sorted(missing)}")
    out = []
    for rec in reader:
        if not rec:
            continue
        out.append(
            ExperimentRow(
                dataset=rec[0],
                instance_id=rec[1],
                seed=int(rec[2]),
                alpha=float(rec[3]),
                eta=int(rec[4]),
                eta_norm=float(rec[5]),
                algorithm=rec[6],
                cost=float(rec[7]),
                opt=float(rec[8]),
                ratio=float(rec[9]),
                runtime_ms=float(rec[10]),
                oracle_kind=rec[11],
            )
        )
    return out


# ---------------------------------------------------------------------------
# Prediction protocol
# ---------------------------------------------------------------------------


def make_prediction(
    instance: CoveringInstance, seed: int, fraction: Fraction = Fraction(1, 2)
) -> tuple[frozenset[int], frozenset[int]]:
    """Uniformly fix floor(fraction*N) requests as the prediction; the rest
    form the swap pool."""
    if not 0 <= fraction <= 1:
        raise ConfigurationError(f"fraction {fraction} outside [0, 1]")
    rng = random.Random(derive_seed(seed, "prediction"))
    universe = sorted(instance.requests)
    count = int(Fraction(fraction) * len(universe))
    predicted = frozenset(rng.sample(universe, count))
    return predicted, frozenset(universe) - predicted


def perturb(
    predicted: frozenset[int],
    pool: frozenset[int],
    alpha: Fraction,
    seed: int,
) -> tuple[int, ...]:
    """Swap floor(alpha*|predicted|) predicted requests for pool requests and
    return the arrival sequence in a seeded uniform order."""
    swaps = int(Fraction(alpha) * len(predicted))
    if swaps > len(pool):
        raise ConfigurationError(
            f"pool of {len(pool)} cannot supply {swaps} replacement requests"
        )
    rng = random.Random(derive_seed(seed, f"perturb/{alpha}"))
    removed = rng.sample(sorted(predicted), swaps)
    added = rng.sample(sorted(pool), swaps)
    arrivals = (predicted - set(removed)) | set(added)
    order = rng.sample(sorted(arrivals), len(arrivals))
    return tuple(order)


def majority_predictor(samples: Sequence[Iterable[int]]) -> frozenset[int]:
    """Element-wise majority over request-set samples; exact ties excluded."""
    if not samples:
        raise ValueError("need at least one sample")
    counts: dict[int, int] = {}
    for s in samples:
        for e in s:
            counts[e] = counts.get(e, 0) + 1
    return frozenset(e for e, c in counts.items() if 2 * c > len(samples))


# ---------------------------------------------------------------------------
# Oracle specs
# ---------------------------------------------------------------------------


def exact_setcover_spec(
    instance: setcover.SetCoverInstance, node_budget: int = 2_000_000
) -> decomp.OracleSpec:
    """The (1,1) oracle over a set cover instance, memoized per residual."""
    cache: dict[tuple[frozenset[int], int], object] = {}
    coverage_table: dict = {}

    def oracle(residual: frozenset[int], i: int):
        key = (frozenset(residual), i)
        if key not in cache:
            cache[key] = setcover.exact_partial_cover(
                instance, residual, i, max_nodes=node_budget, coverage_table=coverage_table
            )
        return cache[key]

    return decomp.OracleSpec(Fraction(1), Fraction(1), oracle, instance, name="exact")


def bmc_setcover_spec(instance: setcover.SetCoverInstance) -> decomp.OracleSpec:
    """The (1, e/(e-1)) oracle: budgeted-greedy partial covers."""
    cache: dict[tuple[frozenset[int], int], object] = {}

    def oracle(residual: frozenset[int], i: int):
        key = (frozenset(residual), i)
        if key not in cache:
            cache[key] = setcover.partial_cover_oracle(instance, residual, i)
        return cache[key]

    return decomp.OracleSpec(1.0, GAMMA_BMC, oracle, instance, name="bmc")


def exact_wpap_spec(instance: wpap.WpapInstance) -> decomp.OracleSpec:
    cache: dict[tuple[frozenset[int], int], object] = {}

    def oracle(residual: frozenset[int], i: int):
        key = (frozenset(residual), i)
        if key not in cache:
            cache[key] = wpap.exact_partial_cover_subset(instance, residual, i)
        return cache[key]

    return decomp.OracleSpec(Fraction(1), Fraction(1), oracle, instance, name="exact")


# ---------------------------------------------------------------------------
# The sweep
# ---------------------------------------------------------------------------


@dataclass
class _Cell:
    """One (instance, seed) worth of shared state."""

    instance: CoveringInstance
    instance_id: str
    seed: int
    predicted: frozenset[int]
    pool: frozenset[int]
    decompositions: dict[str, decomp.Decomposition] = field(default_factory=dict)


def _load_dataset(config: ExperimentConfig) -> list[tuple[str, CoveringInstance]]:
    if config.dataset == "random-spec":
        out = []
        for i in range(config.n_instances):
            inst = setcover.gen_random(
                derive_seed(config.base_seed, f"instance/{i}"),
                config.n_elements,
                config.n_sets,
                config.set_size,
            )
            out.append((f"random-{i}", inst))
        return out
    if config.dataset == "pace-dir":
        if not config.data_dir:
            raise ConfigurationError("pace-dir dataset needs data_dir")
        out = []
        for path in sorted(Path(config.data_dir).iterdir()):
            if path.is_file():
                out.append((path.name, setcover.load_instance(path.read_text(), "pace")))
        if not out:
            raise ConfigurationError(f"no files in {config.data_dir}")
        return out
    if config.dataset == "wpap-spec":
        out = []
        for i in range(config.n_instances):
            rng = random.Random(derive_seed(config.base_seed, f"wpap/{i}"))
            inst = wpap.gen_parking_permit(
                3,
                (1, 4, 16),
                (Fraction(1), Fraction(rng.randint(2, 4)), Fraction(rng.randint(6, 12))),
                horizon=48,
            )
            out.append((f"wpap-{i}", wpap.as_laminar(inst)))
        return out
    raise ConfigurationError(f"unknown dataset {config.dataset!r}")


def _offline_opt(config: ExperimentConfig, instance, arrived: frozenset[int]):
    """Exact optimum over the arrived requests; (value, is_lower_bound)."""
    if isinstance(instance, wpap.WpapInstance):
        return wpap.exact_cover_subset(instance, arrived).cost, False
    try:
        sol = setcover.exact_partial_cover(
            instance,
            arrived,
            len(arrived),
            max_nodes=config.node_budget,
            cap_elements=config.cap_elements,
            cap_items=config.cap_items,
        )
        return sol.cost, False
    except NodeBudgetExceeded as exc:
        return exc.lower_bound if exc.lower_bound is not None else Fraction(0), True


def _adapter_for(instance, seed: int, tie_break):
    if isinstance(instance, setcover.SetCoverInstance):
        return setcover.SetCoverOnlineAdapter(instance, seed=seed, tie_break=tie_break)
    return wpap.WpapDetAdapter(instance)


def _run_algorithm(
    instance,
    algorithm: str,
    cell: _Cell,
    arrivals: tuple[int, ...],
    run_seed: int,
) -> tuple[Fraction, float, str]:
    """Returns (solution cost, runtime ms, oracle kind)."""
    started = time.perf_counter()
    if algorithm == "classical":
        adapter = _adapter_for(instance, run_seed, None)
        trace = ice_run(instance, frozenset(), decomp.EMPTY_DECOMPOSITION, adapter, arrivals)
        kind = "none"
    else:
        decomposition = cell.decompositions[algorithm]
        adapter = _adapter_for(instance, run_seed, decomposition)
        trace = ice_run(
            instance,
            cell.predicted,
            decomposition,
            adapter,
            arrivals,
            IceOptions(skip_covered=True),
        )
        # surfaced trace invariant: layers are bought only from accrued excess
        _check_excess_accounting(trace, decomposition)
        kind = "exact" if algorithm == "ice_exact" else "bmc"
    runtime_ms = (time.perf_counter() - started) * 1000.0
    return trace.solution_cost, runtime_ms, kind


def _check_excess_accounting(trace, decomposition) -> None:
    spent = Fraction(0)
    bought = 0
    layer_iter = iter(trace.layers_bought)
    next_buy = next(layer_iter, None)
    for pos, event in enumerate(trace.events):
        if event.routed_to == "ALG-":
            spent += event.cost
        while next_buy is not None and next_buy[1] == pos and next_buy[0] == bought + 1:
            cost = decomposition.layers[bought].solution.cost
            if spent - sum(
                decomposition.layers[j].solution.cost for j in range(bought)
            ) < cost:
                raise AssertionError("layer bought beyond accrued excess")
            bought += 1
            next_buy = next(layer_iter, None)


def _build_decompositions(config: ExperimentConfig, cell: _Cell) -> list[str]:
    """Build the needed decompositions; returns per-algorithm failure notes
    (a failed oracle drops that algorithm's rows for the cell, sweep goes on)."""
    instance = cell.instance
    failures = []
    if "ice_exact" in config.algorithms:
        spec = (
            exact_wpap_spec(instance)
            if isinstance(instance, wpap.WpapInstance)
            else exact_setcover_spec(instance, node_budget=config.node_budget)
        )
        try:
            cell.decompositions["ice_exact"] = decomp.build_decomposition(
                instance, cell.predicted, spec
            )
        except (NodeBudgetExceeded, SizeLimitError, OracleContractViolation) as exc:
            failures.append(f"ice_exact decomposition failed on {cell.instance_id}: {exc}")
    if "ice_approx" in config.algorithms:
        if isinstance(instance, wpap.WpapInstance):
            raise ConfigurationError(
                "path instances use the exact oracle; drop ice_approx for wpap-spec"
            )
        try:
            cell.decompositions["ice_approx"] = decomp.build_decomposition(
                instance, cell.predicted, bmc_setcover_spec(instance)
            )
        except OracleContractViolation as exc:
            failures.append(f"ice_approx decomposition failed on {cell.instance_id}: {exc}")
    return failures


def run_experiment(config: ExperimentConfig, out_path: str | None = None) -> list[ExperimentRow]:
    """Run the sweep; per (instance, seed, alpha, algorithm) one row.

    The classical algorithm ignores the prediction, so it is evaluated once
    per (instance, seed) on the unperturbed arrivals and its measurement is
    replicated across the alpha grid, which keeps its ratio exactly constant
    in alpha.
    """
    rows: list[ExperimentRow] = []
    failures: list[str] = []
    for instance_id, instance in _load_dataset(config):
        for seed in config.seeds:
            cell_seed = derive_seed(config.base_seed, f"{instance_id}/{seed}")
            predicted, pool = make_prediction(instance, cell_seed, config.prediction_fraction)
            cell = _Cell(instance, instance_id, seed, predicted, pool)
            failures += _build_decompositions(config, cell)

            classical_measure = None
            if "classical" in config.algorithms:
                arrivals0 = perturb(predicted, pool, Fraction(0), cell_seed)
                opt0, bound0 = _offline_opt(config, instance, frozenset(arrivals0))
                cost0, ms0, _ = _run_algorithm(
                    instance, "classical", cell, arrivals0, derive_seed(cell_seed, "classical")
                )
                classical_measure = (cost0, opt0, bound0, ms0)

            for alpha in config.alpha_grid:
                arrivals = perturb(predicted, pool, alpha, cell_seed)
                arrived = frozenset(arrivals)
                eta = prediction_error(arrived, predicted)
                eta_norm = eta / len(predicted) if predicted else 0.0
                needs_opt = any(a != "classical" for a in config.algorithms)
                if needs_opt:
                    opt, opt_is_bound = _offline_opt(config, instance, arrived)
                for algorithm in config.algorithms:
                    if algorithm == "classical":
                        cost, a_opt, a_bound, ms = classical_measure
                        kind = "none"
                    else:
                        if algorithm not in cell.decompositions:
                            continue  # oracle failed for this cell; noted above
                        cost, ms, kind = _run_algorithm(
                            instance,
                            algorithm,
                            cell,
                            arrivals,
                            derive_seed(cell_seed, algorithm),
                        )
                        a_opt, a_bound = opt, opt_is_bound
                    if algorithm == "ice_approx":
                        variant = (
                            "seeded3"
                            if len(instance.item_ids) <= setcover.DEFAULT_SEEDED3_MAX_SETS
                            else "plain"
                        )
                        kind = f"bmc-{variant}"
                    if a_bound:
                        kind += "+optlb"
                    ratio = float(cost) / float(a_opt) if a_opt else float("inf")
                    rows.append(
                        ExperimentRow(
                            dataset=config.dataset,
                            instance_id=instance_id,
                            seed=seed,
                            alpha=float(alpha),
                            eta=eta,
                            eta_norm=float(eta_norm),
                            algorithm=algorithm,
                            cost=float(cost),
                            opt=float(a_opt),
                            ratio=ratio,
                            runtime_ms=ms,
                            oracle_kind=kind,
                        )
                    )
        if out_path:
            Path(out_path).write_text(emit_rows(rows))
    if out_path:
        Path(out_path).write_text(emit_rows(rows))
    for note in failures:
        print(f"warning: {note}", file=sys.stderr)
    return rows


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    dataset: str
    algorithm: str
    bucket_pct: int  # normalized error in percent
    mean: float
    std: float
    count: int


def summarize(rows: Sequence[ExperimentRow]) -> list[SummaryRow]:
    """Mean and population std of the ratio per (dataset, algorithm, bucket),
    buckets keyed by the normalized error in percent.  Rows whose optimum is
    only a lower bound are excluded."""
    if not rows:
        raise ValueError("no rows to summarize")
    groups: dict[tuple[str, str, int], list[float]] = {}
    for r in rows:
        if "+optlb" in r.oracle_kind:
            continue
        key = (r.dataset, r.algorithm, round(r.eta_norm * 100))
        groups.setdefault(key, []).append(r.ratio)
    out = []
    for (dataset, algorithm, bucket), vals in sorted(groups.items()):
        mean = sum(vals) / len(vals)
        std = math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
        out.append(SummaryRow(dataset, algorithm, bucket, mean, std, len(vals)))
    return out
