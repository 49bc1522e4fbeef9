"""Experiment orchestration: ensembles, embeddings, sampling cells, checkpoints.

A plan names a hardware profile, problem sizes, anneal times and a chain
coupling grid.  Every (instance, anneal time, chain coupling) cell is an
independent job with its own derived seed, and its tally is written to disk as
soon as it finishes, so a rerun only computes the cells that are missing.

Output layout under ``plan.output_dir``::

    plan.json
    instances/manifest.json, instances/nNNN/IIII.json
    embeddings/<instance>.json          (or <instance>.failed.json)
    cells/<instance>/t<t>_jf<j_f>.json
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import (DISCARD, MAJORITY_VOTE, Embedding, decode_embedded_samples, embed_ising,
                        find_embedding, interaction_graph, load_embedding, save_embedding)
from .errors import EmbeddingNotFound, InsufficientData, InvalidPlan
from .instances import (DEFAULT_DENSITY, SchedulingGraph, generate_ensemble, load_ensemble,
                        max_cross_class_pairs, save_ensemble, split_seed, target_edge_count)
from .qubo import build_coloring_qubo, qubo_energies, qubo_to_ising
from .samplers import REPLAY, SIMULATED_ANNEALING, SamplerConfig, sample_replay, sample_sa
from .stats import (DEFAULT_CONFIDENCE, DEFAULT_RESAMPLES, BootstrapResult, RunRecord,
                    bootstrap_median, compute_pgs, compute_tts, fit_scaling)
from .topology import HardwareGraph, HardwareProfile, get_profile

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "ANNEALBENCH_OUTPUT_ROOT"
PLAN_FORMAT_VERSION = 1
U_OPT = "u_opt"
I_OPT = "i_opt"

# seed-derivation streams
_EMBED_STREAM = 1
_CELL_STREAM = 2
_BOOT_STREAM = 3


def _grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    count = int(round((stop - start) / step))
    return tuple(round(start + i * step, 10) for i in range(count + 1))


# chain-coupling grids and anneal times used when a plan does not give its own
DEFAULT_JF_GRIDS = {
    "2X": _grid(-0.5, -2.0, -0.125),
    "2000Q": _grid(-0.625, -1.375, -0.125),
    "Advantage": tuple(np.round(np.linspace(-0.4, -1.0, 5), 10).tolist()),
}


def default_anneal_times(profile: HardwareProfile) -> tuple[float, ...]:
    extra = {t for t in (5.0, 20.0) if t >= profile.min_anneal_time}
    return tuple(sorted({float(profile.min_anneal_time)} | extra))


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


def resolve_output(path: str | Path) -> Path:
    """Relative output paths are taken under the output root environment variable."""
    path = Path(path)
    return path if path.is_absolute() else output_root() / path


# -- plan -----------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentPlan:
    profile: str
    sizes: tuple[int, ...]
    instances_per_size: int
    anneal_times: tuple[float, ...]
    j_f_grid: tuple[float, ...]
    sampler: str = SIMULATED_ANNEALING
    sweeps_per_us: float = 100.0
    num_reads: int | None = None
    num_gauges: int | None = None
    beta_start: float = 0.1
    beta_end: float = 10.0
    randomize_gauges: bool = True
    master_seed: int = 0
    density: float = DEFAULT_DENSITY
    chain_break: str = MAJORITY_VOTE
    embed_tries: int = 10
    resamples: int = DEFAULT_RESAMPLES
    confidence: float = DEFAULT_CONFIDENCE
    default_j_f: float | None = None
    output_dir: str = "results"
    replay_dir: str | None = None
    workers: int = 1

    @property
    def hardware(self) -> HardwareProfile:
        try:
            return get_profile(self.profile)
        except KeyError as exc:
            raise InvalidPlan(str(exc)) from None

    def reads_for(self, n: int) -> int:
        return self.num_reads if self.num_reads is not None else self.hardware.default_anneals_per_gauge

    def gauges_for(self, n: int) -> int:
        return self.num_gauges if self.num_gauges is not None else self.hardware.gauges_for(n)

    @property
    def reference_j_f(self) -> float:
        """Chain coupling treated as the machine default in comparisons."""
        if self.default_j_f is not None:
            return self.default_j_f
        return min(self.j_f_grid, key=lambda j: (abs(j + 1.0), abs(j)))

    def sampler_config(self, n: int, t: float, seed: int) -> SamplerConfig:
        return SamplerConfig(
            kind=self.sampler,
            anneal_time_us=t,
            sweeps_per_us=self.sweeps_per_us,
            num_reads=self.reads_for(n),
            num_gauges=self.gauges_for(n),
            seed=seed,
            beta_start=self.beta_start,
            beta_end=self.beta_end,
            randomize_gauges=self.randomize_gauges,
        )

    def validate(self) -> "ExperimentPlan":
        prof = self.hardware
        problems = []
        if not self.sizes:
            problems.append("no problem sizes")
        for n in self.sizes:
            if n < 3:
                problems.append(f"size {n} below 3")
            elif target_edge_count(n, self.density) > max_cross_class_pairs(n):
                problems.append(f"size {n} cannot hold {target_edge_count(n, self.density)} edges "
                                f"at density {self.density}")
        if self.instances_per_size < 1:
            problems.append("instances_per_size must be >= 1")
        if not self.anneal_times:
            problems.append("no anneal times")
        for t in self.anneal_times:
            if t < prof.min_anneal_time:
                problems.append(f"anneal time {t} us below the {prof.name} minimum {prof.min_anneal_time} us")
        if not self.j_f_grid:
            problems.append("empty chain-coupling grid")
        lo, hi = prof.j_range
        for j in self.j_f_grid:
            if j >= 0:
                problems.append(f"chain coupling {j} is not ferromagnetic")
            elif not lo <= j <= hi:
                problems.append(f"chain coupling {j} outside {prof.name} range [{lo}, {hi}]")
        if len(set(self.j_f_grid)) != len(self.j_f_grid) or len(set(self.anneal_times)) != len(self.anneal_times):
            problems.append("duplicate grid values")
        if self.sampler not in (SIMULATED_ANNEALING, REPLAY):
            problems.append(f"sampler {self.sampler!r} cannot drive an experiment (use 'sa' or 'replay')")
        if self.sampler == REPLAY and not self.replay_dir:
            problems.append("replay sampler needs replay_dir")
        if self.chain_break not in (MAJORITY_VOTE, DISCARD):
            problems.append(f"unknown chain-break policy {self.chain_break!r}")
        for name in ("num_reads", "num_gauges"):
            v = getattr(self, name)
            if v is not None and v < 1:
                problems.append(f"{name} must be >= 1")
        if self.sweeps_per_us <= 0 or not 0 < self.beta_start <= self.beta_end:
            problems.append("bad annealing schedule")
        if self.resamples < 1 or not 0 < self.confidence < 1:
            problems.append("bad bootstrap settings")
        if self.workers < 1 or self.embed_tries < 1:
            problems.append("workers and embed_tries must be >= 1")
        if problems:
            raise InvalidPlan("; ".join(problems))
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        d["anneal_times"] = list(self.anneal_times)
        d["j_f_grid"] = list(self.j_f_grid)
        d["format_version"] = PLAN_FORMAT_VERSION
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        data = dict(data)
        version = data.pop("format_version", PLAN_FORMAT_VERSION)
        if version != PLAN_FORMAT_VERSION:
            raise InvalidPlan(f"unsupported plan format_version {version!r}")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidPlan(f"unknown plan fields: {sorted(unknown)}")
        try:
            data["sizes"] = tuple(int(n) for n in data["sizes"])
            data["anneal_times"] = tuple(float(t) for t in data["anneal_times"])
            data["j_f_grid"] = tuple(float(j) for j in data["j_f_grid"])
            return cls(**data)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidPlan(f"malformed plan: {exc}") from exc

    @classmethod
    def with_defaults(cls, profile: str, sizes: Sequence[int], instances_per_size: int, **kw) -> "ExperimentPlan":
        prof = get_profile(profile)
        kw.setdefault("anneal_times", default_anneal_times(prof))
        kw.setdefault("j_f_grid", DEFAULT_JF_GRIDS.get(profile, (-1.0,)))
        return cls(profile=profile, sizes=tuple(sizes), instances_per_size=instances_per_size, **kw)


def load_plan(path: str | Path) -> ExperimentPlan:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidPlan(f"cannot read plan {path}: {exc}") from exc
    return ExperimentPlan.from_dict(data)


def save_plan(plan: ExperimentPlan, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(plan.to_dict(), indent=1, sort_keys=True) + "\n")
    return path


# -- cells ----------------------------------------------------------------------

OK = "ok"
EMBEDDING_FAILED = "embedding_failed"


@dataclass(frozen=True)
class CellResult:
    instance_id: str
    n: int
    index: int
    anneal_time_us: float
    j_f: float
    status: str
    record: RunRecord | None
    p_gs: float
    tts: float
    break_fraction: float = math.nan

    @property
    def finite(self) -> bool:
        return math.isfinite(self.tts)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "n": self.n,
            "index": self.index,
            "anneal_time_us": self.anneal_time_us,
            "j_f": self.j_f,
            "status": self.status,
            "record": self.record.to_dict() if self.record else None,
            "p_gs": self.p_gs,
            "tts": "inf" if math.isinf(self.tts) else self.tts,
            "break_fraction": None if math.isnan(self.break_fraction) else self.break_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CellResult":
        bf = d.get("break_fraction")
        return cls(
            instance_id=d["instance_id"],
            n=int(d["n"]),
            index=int(d["index"]),
            anneal_time_us=float(d["anneal_time_us"]),
            j_f=float(d["j_f"]),
            status=d["status"],
            record=RunRecord.from_dict(d["record"]) if d.get("record") else None,
            p_gs=float(d["p_gs"]),
            tts=math.inf if d["tts"] == "inf" else float(d["tts"]),
            break_fraction=math.nan if bf is None else float(bf),
        )


def cell_name(t: float, j_f: float) -> str:
    return f"t{t:g}_jf{j_f:g}"


def cell_seed(plan: ExperimentPlan, n: int, index: int, t: float, j_f: float) -> int:
    return split_seed(plan.master_seed, _CELL_STREAM, n, index,
                      int(round(t * 1_000_000)), int(round(j_f * 1_000_000)))


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def count_valid_colorings(qubo, logical: np.ndarray) -> np.ndarray:
    """True where a logical spin row decodes to a conflict-free coloring (cost 0)."""
    bits = (logical.astype(np.int64) + 1) // 2
    return np.abs(qubo_energies(qubo, bits)) < 0.5


_HARDWARE_CACHE: dict = {}


def _hardware(plan: ExperimentPlan) -> HardwareGraph:
    key = (plan.profile, plan.master_seed)
    if key not in _HARDWARE_CACHE:
        _HARDWARE_CACHE[key] = plan.hardware.build_graph(plan.master_seed)
    return _HARDWARE_CACHE[key]


def _index_of(instance: SchedulingGraph, plan: ExperimentPlan) -> int:
    for index in range(plan.instances_per_size):
        if split_seed(plan.master_seed, instance.n, index) == instance.seed:
            return index
    raise ValueError(f"instance {instance.instance_id} is not part of this plan's ensemble")


def run_cells(plan_dict: dict, instance_dict: dict, index: int, chains: dict | None,
              settings: Sequence[tuple[float, float]]) -> list[dict]:
    """Sample every (t, j_f) cell of one instance.  Picklable worker entry point."""
    plan = ExperimentPlan.from_dict(plan_dict)
    g = SchedulingGraph.from_dict(instance_dict)
    out = []
    if chains is None:
        for t, jf in settings:
            out.append(CellResult(g.instance_id, g.n, index, t, jf, EMBEDDING_FAILED, None,
                                  0.0, math.inf).to_dict())
        return out
    hw = _hardware(plan)
    qubo = build_coloring_qubo(g)
    ising = qubo_to_ising(qubo)
    emb = Embedding.from_dict(chains)
    logical_vars = ising.variables
    for t, jf in settings:
        seed = cell_seed(plan, g.n, index, t, jf)
        cfg = plan.sampler_config(g.n, t, seed)
        physical = embed_ising(ising, emb, jf, plan.hardware, hw)
        if plan.sampler == REPLAY:
            path = Path(plan.replay_dir) / g.instance_id / f"{cell_name(t, jf)}.jsonl"
            samples = sample_replay(path, physical, cfg)
        else:
            samples = sample_sa(physical, cfg)
        logical, breaks, kept = decode_embedded_samples(
            samples.spins, samples.variables, emb, logical_vars, plan.chain_break, seed)
        hits = int(np.sum(kept & count_valid_colorings(qubo, logical)))
        record = RunRecord(g.instance_id, float(t), float(jf), plan.sampler, len(samples), hits)
        p = compute_pgs(record)
        tts = compute_tts(p, t).tts
        out.append(CellResult(g.instance_id, g.n, index, float(t), float(jf), OK, record, p, tts,
                              float(np.mean(breaks))).to_dict())
    return out


# -- results ---------------------------------------------------------------------

@dataclass
class SweepResult:
    plan: ExperimentPlan
    cells: list[CellResult]
    embedding_failures: list[str] = field(default_factory=list)
    _boot: dict = field(default_factory=dict, repr=False)
    _by_key: dict = field(default_factory=dict, repr=False)
    _ids: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_key = {(c.instance_id, c.anneal_time_us, c.j_f): c for c in self.cells}
        order: dict[int, dict[str, int]] = {}
        for c in self.cells:
            order.setdefault(c.n, {})[c.instance_id] = c.index
        self._ids = {n: sorted(d, key=d.get) for n, d in order.items()}

    @property
    def machine(self) -> str:
        return self.plan.profile

    @property
    def sizes(self) -> list[int]:
        return sorted({c.n for c in self.cells})

    @property
    def anneal_times(self) -> list[float]:
        return sorted({c.anneal_time_us for c in self.cells})

    @property
    def j_f_grid(self) -> list[float]:
        return sorted({c.j_f for c in self.cells}, key=lambda j: (abs(j), j))

    def instance_ids(self, n: int) -> list[str]:
        return list(self._ids.get(n, []))

    def cell(self, instance_id: str, t: float, j_f: float) -> CellResult:
        return self._by_key[(instance_id, float(t), float(j_f))]

    def tts_values(self, n: int, t: float, j_f: float) -> list[float]:
        return [self.cell(i, t, j_f).tts for i in self.instance_ids(n)]

    def matrix(self, n: int, t: float) -> np.ndarray:
        """TTS per instance (rows) and chain coupling (columns, ``j_f_grid`` order)."""
        return np.array([[self.cell(i, t, j).tts for j in self.j_f_grid] for i in self.instance_ids(n)])

    def bootstrap(self, n: int, t: float, j_f: float) -> BootstrapResult:
        key = (n, t, j_f)
        if key not in self._boot:
            self._boot[key] = bootstrap_median(
                self.tts_values(n, t, j_f), self.plan.resamples, self.plan.confidence,
                split_seed(self.plan.master_seed, _BOOT_STREAM, n, int(round(t * 1e6)), int(round(j_f * 1e6))))
        return self._boot[key]

    @property
    def table(self) -> dict:
        return {(n, t, j): self.bootstrap(n, t, j)
                for n in self.sizes for t in self.anneal_times for j in self.j_f_grid}

    @property
    def infinite_cells(self) -> list[CellResult]:
        return [c for c in self.cells if not c.finite]

    @property
    def partial_failure(self) -> bool:
        return bool(self.embedding_failures or self.infinite_cells)

    def summary_rows(self) -> list[dict]:
        rows = []
        for n in self.sizes:
            for t in self.anneal_times:
                for j in self.j_f_grid:
                    b = self.bootstrap(n, t, j)
                    vals = self.tts_values(n, t, j)
                    rows.append({
                        "machine": self.machine, "n": n, "anneal_time_us": t, "j_f": j,
                        "instances": len(vals), "infinite": sum(math.isinf(v) for v in vals),
                        "median_tts": b.median, "boot_mean_tts": b.mean,
                        "ci_low": b.low, "ci_high": b.high,
                    })
        return rows


SUMMARY_COLUMNS = ("machine", "n", "anneal_time_us", "j_f", "instances", "infinite",
                   "median_tts", "boot_mean_tts", "ci_low", "ci_high")


# -- chain-coupling optimisation ------------------------------------------------------

@dataclass(frozen=True)
class JfOptimum:
    size: int
    anneal_time_us: float
    mode: str
    j_f: tuple[float, ...]        # one value (u_opt) or one per instance (i_opt)
    tts: tuple[float, ...]        # per instance
    boot: BootstrapResult

    @property
    def median(self) -> float:
        return self.boot.median


def _best(options: Sequence[tuple[float, float]]) -> tuple[float, float]:
    # (value, j_f) pairs; ties go to the weaker coupling
    return min(options, key=lambda vj: (vj[0], abs(vj[1])))


def optimize_jf(result: SweepResult, mode: str, t: float | None = None) -> dict[int, JfOptimum]:
    """Pick the chain coupling per size (u_opt) or per instance (i_opt)."""
    if mode not in (U_OPT, I_OPT):
        raise ValueError(f"mode must be {U_OPT!r} or {I_OPT!r}")
    grid = result.j_f_grid
    if len(grid) < 2:
        raise ValueError("chain-coupling optimisation needs at least two grid values")
    times = result.anneal_times if t is None else [t]
    out = {}
    for tt in times:
        for n in result.sizes:
            m = result.matrix(n, tt)
            if mode == U_OPT:
                medians = [float(np.median(m[:, k])) for k in range(len(grid))]
                _, jf = _best(list(zip(medians, grid)))
                k = grid.index(jf)
                choice, tts = (jf,), tuple(float(v) for v in m[:, k])
            else:
                picks = [_best(list(zip(row.tolist(), grid))) for row in m]
                choice = tuple(j for _, j in picks)
                tts = tuple(float(v) for v, _ in picks)
            boot = bootstrap_median(
                tts, result.plan.resamples, result.plan.confidence,
                split_seed(result.plan.master_seed, _BOOT_STREAM, n, int(round(tt * 1e6)), 0 if mode == U_OPT else 1))
            out[(n, tt) if t is None else n] = JfOptimum(n, tt, mode, choice, tts, boot)
    return out


# -- fits -----------------------------------------------------------------------------

def series_label(machine: str, t: float, setting) -> str:
    tag = setting if isinstance(setting, str) else f"{setting:g}"
    return f"alpha[{machine},{t:g}us,{tag}]"


def scaling_fits(result: SweepResult) -> list:
    """One fit per (t, j_f) series plus u_opt / i_opt series when the grid allows."""
    fits = []

    def attempt(points, label):
        try:
            fits.append(fit_scaling(points, label))
        except InsufficientData as exc:
            log.info("no fit for %s: %s", label, exc)

    for t in result.anneal_times:
        for j in result.j_f_grid:
            attempt([(n, result.bootstrap(n, t, j).median) for n in result.sizes],
                    series_label(result.machine, t, j))
        if len(result.j_f_grid) >= 2:
            for mode in (U_OPT, I_OPT):
                opt = optimize_jf(result, mode, t)
                attempt([(n, opt[n].median) for n in result.sizes],
                        series_label(result.machine, t, mode.replace("_", ".")))
    return fits


# -- orchestration ----------------------------------------------------------------------

def _prepare_instances(plan: ExperimentPlan, out: Path) -> list[SchedulingGraph]:
    graphs = generate_ensemble(plan.sizes, plan.instances_per_size, plan.density, plan.master_seed)
    inst_dir = out / "instances"
    if (inst_dir / "manifest.json").exists():
        stored, _ = load_ensemble(inst_dir)
        if [g.to_dict() for g in stored] != [g.to_dict() for g in graphs]:
            raise InvalidPlan(f"{inst_dir} holds a different ensemble; use a fresh output directory")
    else:
        save_ensemble(graphs, inst_dir, plan.master_seed)
    return graphs


def _prepare_embedding(plan: ExperimentPlan, g: SchedulingGraph, index: int, out: Path) -> dict | None:
    ok_path = out / "embeddings" / f"{g.instance_id}.json"
    bad_path = out / "embeddings" / f"{g.instance_id}.failed.json"
    if ok_path.exists():
        return load_embedding(ok_path).to_dict()
    if bad_path.exists():
        return None
    source = interaction_graph(qubo_to_ising(build_coloring_qubo(g)))
    try:
        e = find_embedding(source, _hardware(plan), seed=split_seed(plan.master_seed, _EMBED_STREAM, g.n, index),
                           tries=plan.embed_tries)
    except EmbeddingNotFound as exc:
        log.warning("embedding failed for %s: %s", g.instance_id, exc)
        _write_atomic(bad_path, json.dumps({"instance_id": g.instance_id, "error": str(exc)}, sort_keys=True) + "\n")
        return None
    save_embedding(e, ok_path)
    return e.to_dict()


def _load_cell(path: Path) -> CellResult | None:
    if not path.exists():
        return None
    return CellResult.from_dict(json.loads(path.read_text()))


def run_experiment(plan: ExperimentPlan, max_new_cells: int | None = None) -> SweepResult:
    """Run (or resume) every cell of ``plan``.

    ``max_new_cells`` stops after that many freshly sampled cells, which is how
    tests simulate an interrupted run; the returned result then only holds the
    finished cells.
    """
    plan.validate()
    out = resolve_output(plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    plan_path = out / "plan.json"
    if plan_path.exists():
        stored = load_plan(plan_path)
        # the worker count does not change results
        if {**stored.to_dict(), "workers": 0} != {**plan.to_dict(), "workers": 0}:
            raise InvalidPlan(f"{out} was created by a different plan")
    else:
        save_plan(plan, plan_path)

    graphs = _prepare_instances(plan, out)
    settings = [(float(t), float(j)) for t in plan.anneal_times for j in plan.j_f_grid]
    budget = math.inf if max_new_cells is None else max_new_cells
    jobs = []
    cells: dict[tuple, CellResult] = {}
    failures = []
    for g in graphs:
        index = _index_of(g, plan)
        pending = []
        for t, j in settings:
            c = _load_cell(out / "cells" / g.instance_id / f"{cell_name(t, j)}.json")
            if c is not None:
                cells[(g.instance_id, t, j)] = c
            else:
                pending.append((t, j))
        if pending and budget > 0:
            pending = pending[: int(min(budget, len(pending)))]
            budget -= len(pending)
            chains = _prepare_embedding(plan, g, index, out)
            jobs.append((plan.to_dict(), g.to_dict(), index, chains, pending))
        if (out / "embeddings" / f"{g.instance_id}.failed.json").exists():
            failures.append(g.instance_id)

    def store(results: list[dict]):
        for d in results:
            c = CellResult.from_dict(d)
            _write_atomic(out / "cells" / c.instance_id / f"{cell_name(c.anneal_time_us, c.j_f)}.json",
                          json.dumps(c.to_dict(), sort_keys=True) + "\n")
            cells[(c.instance_id, c.anneal_time_us, c.j_f)] = c

    if plan.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            for results in pool.map(run_cells, *zip(*jobs)):
                store(results)
    else:
        for job in jobs:
            store(run_cells(*job))

    ordered = [cells[k] for k in sorted(cells, key=lambda k: (k[0], k[1], abs(k[2]), k[2]))]
    return SweepResult(plan, ordered, sorted(failures))


def load_result(directory: str | Path) -> SweepResult:
    """Rebuild a :class:`SweepResult` from the checkpoints of a finished run."""
    out = Path(directory)
    plan = load_plan(out / "plan.json")
    cells = [CellResult.from_dict(json.loads(p.read_text()))
             for p in sorted((out / "cells").glob("*/*.json"))]
    cells.sort(key=lambda c: (c.instance_id, c.anneal_time_us, abs(c.j_f), c.j_f))
    failures = sorted(p.name[: -len(".failed.json")] for p in (out / "embeddings").glob("*.failed.json"))
    return SweepResult(plan, cells, failures)


def is_complete(result: SweepResult) -> bool:
    expected = len(result.plan.sizes) * result.plan.instances_per_size * \
        len(result.plan.anneal_times) * len(result.plan.j_f_grid)
    return len(result.cells) == expected
