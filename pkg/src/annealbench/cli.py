"""Command line entry point.

Relative output paths are resolved under the directory named by the
``ANNEALBENCH_OUTPUT_ROOT`` environment variable (default: the working
directory).  Exit codes: 0 success, 2 invalid plan or arguments, 3 partial
failure (an embedding failed or some cell never reached a valid coloring).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import harness
from .embedding import (decode_embedded_samples, embed_ising, find_embedding,
                        interaction_graph, load_embedding, save_embedding)
from .errors import AnnealBenchError, EmbeddingNotFound, InvalidPlan
from .instances import DEFAULT_DENSITY, generate_ensemble, load_instance, save_ensemble
from .qubo import build_coloring_qubo, qubo_to_ising
from .samplers import KINDS, SIMULATED_ANNEALING, SamplerConfig, sample, save_samples
from .stats import (RunRecord, compute_pgs, compute_tts, json_safe, write_fits_json, write_json,
                    write_rows_csv)
from .topology import PROFILES, get_profile

log = logging.getLogger("annealbench")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_PARTIAL = 3


def _histogram_text(stats: dict) -> str:
    lines = [f"chains: {stats['num_chains']}  qubits: {stats['num_qubits']}  "
             f"max: {stats['max']}  mean: {stats['mean']:.2f}"]
    width = max(stats["histogram"].values(), default=1)
    for length, count in stats["histogram"].items():
        bar = "#" * max(1, round(40 * count / width))
        lines.append(f"{length:4d} | {bar} {count}")
    return "\n".join(lines)


def _add_sampler_flags(p: argparse.ArgumentParser, plan_mode: bool = False) -> None:
    default = None if plan_mode else SIMULATED_ANNEALING
    p.add_argument("--sampler", choices=KINDS, default=default)
    p.add_argument("--reads", type=int, default=None, help="anneals per gauge")
    p.add_argument("--gauges", type=int, default=None)
    p.add_argument("--seed", type=int, default=None if plan_mode else 0)
    p.add_argument("--sweeps-per-us", type=float, default=None if plan_mode else 100.0)


# -- subcommands ------------------------------------------------------------------

def cmd_generate(args) -> int:
    graphs = generate_ensemble(args.sizes, args.instances, args.density, args.seed)
    out = harness.resolve_output(args.out)
    save_ensemble(graphs, out, args.seed)
    for n in args.sizes:
        count = sum(g.n == n for g in graphs)
        print(f"n={n}: {count} instances, {graphs[[g.n for g in graphs].index(n)].num_edges} edges each")
    print(f"wrote {out}")
    return EXIT_OK


def _embedding_for(args, g, prof):
    hw = prof.build_graph(args.defect_seed)
    if getattr(args, "embedding", None):
        return load_embedding(args.embedding), hw
    source = interaction_graph(qubo_to_ising(build_coloring_qubo(g)))
    return find_embedding(source, hw, seed=args.embed_seed, tries=args.tries), hw


def cmd_embed(args) -> int:
    g = load_instance(args.instance)
    prof = get_profile(args.profile)
    try:
        e, _ = _embedding_for(args, g, prof)
    except EmbeddingNotFound as exc:
        print(f"embedding failed: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    print(_histogram_text(e.stats()))
    if args.out:
        out = save_embedding(e, harness.resolve_output(args.out))
        print(f"wrote {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    g = load_instance(args.instance)
    prof = get_profile(args.profile)
    lo, hi = prof.j_range
    if not lo <= args.j_f <= hi or args.anneal_time < prof.min_anneal_time:
        print(f"invalid setting for {prof.name}: need j_f in [{lo}, {hi}] and anneal time "
              f">= {prof.min_anneal_time} us", file=sys.stderr)
        return EXIT_INVALID
    try:
        e, hw = _embedding_for(args, g, prof)
    except EmbeddingNotFound as exc:
        print(f"embedding failed: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    qubo = build_coloring_qubo(g)
    ising = qubo_to_ising(qubo)
    cfg = SamplerConfig(
        kind=args.sampler,
        anneal_time_us=args.anneal_time,
        sweeps_per_us=args.sweeps_per_us,
        num_reads=args.reads if args.reads is not None else prof.default_anneals_per_gauge,
        num_gauges=args.gauges if args.gauges is not None else prof.gauges_for(g.n),
        seed=args.seed,
    )
    physical = embed_ising(ising, e, args.j_f, prof, hw)
    samples = sample(physical, cfg, args.replay)
    logical, breaks, kept = decode_embedded_samples(
        samples.spins, samples.variables, e, ising.variables, args.chain_break, args.seed)
    hits = int(np.sum(kept & harness.count_valid_colorings(qubo, logical)))
    record = RunRecord(g.instance_id, args.anneal_time, args.j_f, args.sampler, len(samples), hits)
    est = compute_tts(compute_pgs(record), args.anneal_time)
    summary = {**record.to_dict(), "p_gs": est.p_gs, "tts": est.tts,
               "break_fraction": float(np.mean(breaks)), "max_chain": max(e.chain_lengths())}
    print(json.dumps(json_safe(summary), sort_keys=True))
    if args.samples_out:
        save_samples(samples, harness.resolve_output(args.samples_out))
    if args.out:
        write_json(summary, harness.resolve_output(args.out))
    return EXIT_OK if est.finite else EXIT_PARTIAL


def _plan_from_args(args) -> harness.ExperimentPlan:
    if args.plan:
        plan = harness.load_plan(args.plan)
    else:
        if not (args.profile and args.sizes and args.instances):
            raise InvalidPlan("give --plan or all of --profile, --sizes, --instances")
        try:
            get_profile(args.profile)
        except KeyError as exc:
            raise InvalidPlan(str(exc)) from None
        plan = harness.ExperimentPlan.with_defaults(args.profile, args.sizes, args.instances)
    overrides = {
        "anneal_times": tuple(args.anneal_time) if args.anneal_time else None,
        "j_f_grid": tuple(args.j_f) if args.j_f else None,
        "sampler": args.sampler,
        "num_reads": args.reads,
        "num_gauges": args.gauges,
        "master_seed": args.seed,
        "sweeps_per_us": args.sweeps_per_us,
        "output_dir": args.out,
        "replay_dir": args.replay_dir,
        "workers": args.workers,
    }
    data = plan.to_dict()
    data.update({k: v for k, v in overrides.items() if v is not None})
    return harness.ExperimentPlan.from_dict(data).validate()


def cmd_sweep(args) -> int:
    plan = _plan_from_args(args)
    if args.write_plan:
        harness.save_plan(plan, harness.resolve_output(args.write_plan))
    result = harness.run_experiment(plan, args.max_new_cells)
    out = harness.resolve_output(plan.output_dir)
    expected = len(plan.sizes) * plan.instances_per_size * len(plan.anneal_times) * len(plan.j_f_grid)
    print(f"{len(result.cells)}/{expected} cells in {out}; "
          f"{len(result.infinite_cells)} infinite, {len(result.embedding_failures)} embedding failures")
    if not harness.is_complete(result) or result.partial_failure:
        return EXIT_PARTIAL
    return EXIT_OK


def _load_results(dirs) -> list[harness.SweepResult]:
    results = []
    for d in dirs:
        path = harness.resolve_output(d)
        if not (path / "plan.json").exists():
            raise InvalidPlan(f"{path} holds no plan.json")
        results.append(harness.load_result(path))
    return results


def cmd_analyze(args) -> int:
    results = _load_results(args.results)
    out = harness.resolve_output(args.out)
    rows = [row for r in results for row in r.summary_rows()]
    write_rows_csv(rows, out / "tts_summary.csv", harness.SUMMARY_COLUMNS)
    fits = [f for r in results for f in harness.scaling_fits(r)]
    write_fits_json(fits, out / "fits.json")
    for row in rows:
        print(f"{row['machine']:>9} n={row['n']:<3d} t={row['anneal_time_us']:<5g} j_f={row['j_f']:<7g} "
              f"median={row['median_tts']:.4g} us  [{row['ci_low']:.4g}, {row['ci_high']:.4g}]")
    for f in fits:
        err = "" if math.isnan(f.stderr_alpha) else f" +/- {f.stderr_alpha:.4f}"
        print(f"{f.label} = {f.alpha:.4f}{err}")
    print(f"wrote {out}")
    partial = any(r.partial_failure or not harness.is_complete(r) for r in results)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_report(args) -> int:
    from .report import emit_report

    results = _load_results(args.results)
    fits = [] if args.no_fits else [f for r in results for f in harness.scaling_fits(r)]
    bundle = emit_report(results, fits, harness.resolve_output(args.out), figures=not args.no_figures)
    for key, path in sorted(bundle.files.items()):
        print(f"{key}: {path}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annealbench", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a colorable instance ensemble")
    p.add_argument("--sizes", type=int, nargs="+", required=True)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--density", type=float, default=DEFAULT_DENSITY, help="edges per vertex")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="instances")
    p.set_defaults(func=cmd_generate)

    def embedding_flags(p):
        p.add_argument("instance", help="instance JSON file")
        p.add_argument("--profile", choices=sorted(PROFILES), default="2000Q")
        p.add_argument("--defect-seed", type=int, default=0)
        p.add_argument("--embed-seed", type=int, default=0)
        p.add_argument("--tries", type=int, default=10)

    p = sub.add_parser("embed", help="embed one instance and print its chain-length histogram")
    embedding_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("run", help="sample one instance at a single setting")
    embedding_flags(p)
    p.add_argument("--embedding", default=None, help="reuse a saved embedding")
    p.add_argument("--anneal-time", type=float, default=20.0, help="microseconds")
    p.add_argument("--j-f", type=float, default=-1.0, help="chain coupling")
    p.add_argument("--chain-break", choices=("majority_vote", "discard"), default="majority_vote")
    p.add_argument("--replay", default=None, help="sample file for the replay sampler")
    _add_sampler_flags(p)
    p.add_argument("--samples-out", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run or resume a grid experiment")
    p.add_argument("--plan", default=None, help="plan JSON file")
    p.add_argument("--profile", choices=sorted(PROFILES), default=None)
    p.add_argument("--sizes", type=int, nargs="+", default=None)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--anneal-time", type=float, nargs="+", default=None)
    p.add_argument("--j-f", type=float, nargs="+", default=None)
    _add_sampler_flags(p, plan_mode=True)
    p.add_argument("--replay-dir", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="experiment directory")
    p.add_argument("--write-plan", default=None, help="also save the effective plan here")
    p.add_argument("--max-new-cells", type=int, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="bootstrap medians and scaling fits")
    p.add_argument("results", nargs="+", help="experiment directories")
    p.add_argument("--out", default="analysis")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="tables, plot-ready JSON and figures")
    p.add_argument("results", nargs="+", help="experiment directories")
    p.add_argument("--out", default="report")
    p.add_argument("--no-fits", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidPlan as exc:
        print(f"invalid plan: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (AnnealBenchError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
