"""Command line entry points: gen, decompose, run, bench, verify."""

from __future__ import annotations

import random
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import bench, decomp, setcover, wpap
from .core import CheapestItemAdapter, IceOptions, ice_run, prediction_error


@click.group()
def main():
    """Online covering with request predictions."""


def _echo_or_write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--seed", default=0, type=int)
@click.option("--elements", default=200, type=int)
@click.option("--sets", "n_sets", default=40, type=int)
@click.option("--set-size", default=20, type=int)
@click.option("--format", "fmt", default="json", type=click.Choice(["pace", "json"]))
@click.option("--out", default=None, type=str)
@click.option(
    "--problem",
    default="setcover",
    type=click.Choice(["setcover", "parking", "adversarial"]),
)
@click.option("--k", default=16, type=int, help="size for parking/adversarial problems")
def gen(seed, elements, n_sets, set_size, fmt, out, problem, k):
    """Generate an instance file."""
    if problem == "setcover":
        inst = setcover.gen_random(seed, elements, n_sets, set_size)
        _echo_or_write(setcover.dump_instance(inst, fmt), out)
    elif problem == "parking":
        durations = [1]
        while durations[-1] * 4 <= k:
            durations.append(durations[-1] * 4)
        costs = [Fraction(1)] + [Fraction(5 * d, 8) for d in durations[1:]]
        inst = wpap.gen_parking_permit(len(durations), durations, costs, horizon=k)
        _echo_or_write(wpap.dump_wpap(inst), out)
    else:
        inst, _ = wpap.gen_adversarial(k)
        _echo_or_write(wpap.dump_wpap(inst), out)


@main.command()
@click.option("--instance", "path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="json", type=click.Choice(["pace", "json"]))
@click.option("--seed", default=0, type=int)
@click.option("--fraction", default="1/2", type=str)
@click.option("--oracle", default="exact", type=click.Choice(["exact", "bmc"]))
@click.option("--out", default=None, type=str)
def decompose(path, fmt, seed, fraction, oracle, out):
    """Build and emit a layered decomposition of a seeded prediction."""
    inst = setcover.load_instance(Path(path).read_text(), fmt)
    predicted, _ = bench.make_prediction(inst, seed, Fraction(fraction))
    spec = (
        bench.exact_setcover_spec(inst)
        if oracle == "exact"
        else bench.bmc_setcover_spec(inst)
    )
    decomposition = decomp.build_decomposition(inst, predicted, spec)
    _echo_or_write(decomposition.to_text(), out)


@main.command()
@click.option("--instance", "path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="json", type=click.Choice(["pace", "json"]))
@click.option("--seed", default=0, type=int)
@click.option("--alpha", default=0.0, type=str)
@click.option(
    "--mode",
    default="ice-exact",
    type=click.Choice(["classical", "ice-exact", "ice-approx"]),
)
@click.option("--fraction", default="1/2", type=str)
def run(path, fmt, seed, alpha, mode, fraction):
    """Run one configured cell and print a trace summary."""
    inst = setcover.load_instance(Path(path).read_text(), fmt)
    predicted, pool = bench.make_prediction(inst, seed, Fraction(fraction))
    arrivals = bench.perturb(predicted, pool, Fraction(alpha), seed)
    if mode == "classical":
        adapter = setcover.SetCoverOnlineAdapter(inst, seed=seed)
        trace = ice_run(inst, frozenset(), decomp.EMPTY_DECOMPOSITION, adapter, arrivals)
    else:
        spec = (
            bench.exact_setcover_spec(inst)
            if mode == "ice-exact"
            else bench.bmc_setcover_spec(inst)
        )
        decomposition = decomp.build_decomposition(inst, predicted, spec)
        adapter = setcover.SetCoverOnlineAdapter(inst, seed=seed, tie_break=decomposition)
        trace = ice_run(
            inst, predicted, decomposition, adapter, arrivals, IceOptions(skip_covered=True)
        )
    opt = setcover.exact_partial_cover(inst, frozenset(arrivals), len(set(arrivals)))
    eta = prediction_error(frozenset(arrivals), predicted)
    click.echo(f"arrivals {trace.k} (plus {trace.k_plus} / minus {trace.k_minus})")
    click.echo(f"eta {eta}  delta_minus {trace.delta_minus}")
    click.echo(f"layers bought {[i for i, _ in trace.layers_bought]}")
    click.echo(f"accounting cost {trace.total_cost}  solution cost {trace.solution_cost}")
    click.echo(f"opt {opt.cost}  ratio {float(trace.solution_cost) / float(opt.cost):.4f}")


@main.command(name="bench")
@click.option(
    "--dataset",
    default="random-spec",
    type=click.Choice(["random-spec", "pace-dir", "wpap-spec"]),
)
@click.option("--data-dir", default=None, type=str)
@click.option("--seed", default=0, type=int)
@click.option("--instances", default=20, type=int)
@click.option("--elements", default=200, type=int)
@click.option("--sets", "n_sets", default=40, type=int)
@click.option("--set-size", default=20, type=int)
@click.option("--alphas", default="0,1/20,1/10,3/20,1/5,1/4,3/10,7/20", type=str)
@click.option("--algorithms", default="classical,ice_exact,ice_approx", type=str)
@click.option("--out", required=True, type=str)
@click.option("--cap-elements", default=None, type=int)
@click.option("--cap-items", default=None, type=int)
def bench_cmd(
    dataset, data_dir, seed, instances, elements, n_sets, set_size, alphas, algorithms, out,
    cap_elements, cap_items,
):
    """Full sweep to CSV."""
    config = bench.ExperimentConfig(
        dataset=dataset,
        data_dir=data_dir,
        n_instances=instances,
        n_elements=elements,
        n_sets=n_sets,
        set_size=set_size,
        alpha_grid=tuple(Fraction(a) for a in alphas.split(",")),
        algorithms=tuple(algorithms.split(",")),
        cap_elements=cap_elements,
        cap_items=cap_items,
        base_seed=seed,
    )
    rows = bench.run_experiment(config, out_path=out)
    click.echo(f"{len(rows)} rows -> {out}")
    for s in bench.summarize(rows):
        click.echo(
            f"{s.dataset} {s.algorithm} @{s.bucket_pct}%: {s.mean:.3f} ({s.std:.3f}) n={s.count}"
        )


@main.command()
@click.option(
    "--suite",
    default="all",
    type=click.Choice(["decomp", "trace", "laminar", "rounding", "all"]),
)
@click.option("--seed", default=0, type=int)
@click.option("--count", default=25, type=int)
def verify(suite, seed, count):
    """Run randomized property suites and print one line per check."""
    failures = 0

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        status = "PASS" if ok else "FAIL"
        click.echo(f"[{status}] {name}{(' ' + detail) if detail else ''}")
        if not ok:
            failures += 1

    rng = random.Random(seed)
    if suite in ("decomp", "all"):
        bad = 0
        for trial in range(count):
            inst = setcover.gen_random(rng.randrange(2**31), 12, 8, 4)
            predicted, _ = bench.make_prediction(inst, rng.randrange(2**31))
            spec = bench.exact_setcover_spec(inst)
            d = decomp.build_decomposition(inst, predicted, spec)
            rep = decomp.verify_properties(inst, d, 1, 1, spec.oracle)
            if not rep.all_ok:
                bad += 1
        report("decomposition properties (A)-(D)", bad == 0, f"{count - bad}/{count}")
    if suite in ("trace", "all"):
        bad = 0
        for trial in range(count):
            inst = setcover.gen_random(rng.randrange(2**31), 12, 8, 4)
            predicted, pool = bench.make_prediction(inst, rng.randrange(2**31))
            d = decomp.build_decomposition(inst, predicted, bench.exact_setcover_spec(inst))
            arrivals = bench.perturb(predicted, pool, Fraction(1, 4), rng.randrange(2**31))
            adapter = CheapestItemAdapter(inst, tie_break=d)
            trace = ice_run(inst, predicted, d, adapter, arrivals)
            spent = sum((e.cost for e in trace.events if e.routed_to == "ALG-"), Fraction(0))
            if trace.excess_final != spent - trace.layer_cost_total:
                bad += 1
        report("trace excess accounting", bad == 0, f"{count - bad}/{count}")
    if suite in ("laminar", "all"):
        bad = 0
        for trial in range(count):
            inst = wpap.gen_random_wpap(rng.randrange(2**31), 10, 12)
            opt = wpap.exact_cover_subset(inst, inst.requests).cost
            lam = wpap.laminarize(inst, opt)
            if not wpap.is_laminar(lam.links):
                bad += 1
        report("laminarization output laminar", bad == 0, f"{count - bad}/{count}")
    if suite in ("rounding", "all"):
        bad = 0
        for trial in range(count):
            lam = wpap.gen_random_laminar(rng.randrange(2**31), 12)
            arrivals = [e for e in sorted(lam.requests) if rng.random() < 0.6]
            for tau in (0.1, 0.5, 0.9):
                state = wpap.WpapRandState(lam, tau)
                for e in arrivals:
                    state, _, _ = wpap.rand_online_step(state, lam, e)
                    if e not in state.covered:
                        bad += 1
        report("randomized rounding feasibility", bad == 0, f"{count - bad}/{count}")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
