"""Sample sources over (embedded) Ising problems.

Three interchangeable backends share one :class:`SampleSet` container:

* exact enumeration for small problems (the oracle),
* single-spin-flip Metropolis simulated annealing, the classical stand-in for
  an annealer, with a fresh random gauge per gauge batch,
* replay of a sample file written earlier or produced elsewhere.

A nominal anneal time ``t`` maps to ``round(t * sweeps_per_us)`` Metropolis
sweeps.  Every read draws its own RNG stream from ``(seed, gauge, read)``, so
results do not depend on batching or execution order.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from numba import njit

from .errors import FormatError, HashMismatch, SizeTooLarge
from .qubo import IsingProblem, apply_gauge, identity_gauge, problem_hash, random_gauge

EXACT = "exact"
SIMULATED_ANNEALING = "sa"
REPLAY = "replay"
KINDS = (EXACT, SIMULATED_ANNEALING, REPLAY)

MAX_EXACT_SPINS = 30
SAMPLE_FORMAT = "annealbench-samples"
SAMPLE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SamplerConfig:
    kind: str = SIMULATED_ANNEALING
    anneal_time_us: float = 20.0
    sweeps_per_us: float = 100.0
    num_reads: int = 100
    num_gauges: int = 1
    seed: int = 0
    beta_start: float = 0.1
    beta_end: float = 10.0
    randomize_gauges: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; expected one of {KINDS}")
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.num_gauges < 1:
            raise ValueError("num_gauges must be >= 1")
        if self.anneal_time_us <= 0:
            raise ValueError("anneal_time_us must be positive")
        if self.sweeps_per_us <= 0:
            raise ValueError("sweeps_per_us must be positive")
        if not 0 < self.beta_start <= self.beta_end:
            raise ValueError("need 0 < beta_start <= beta_end")

    @property
    def num_sweeps(self) -> int:
        return max(1, int(round(self.anneal_time_us * self.sweeps_per_us)))

    def check_profile(self, profile) -> None:
        if self.anneal_time_us < profile.min_anneal_time:
            raise ValueError(
                f"anneal time {self.anneal_time_us} us below {profile.name} minimum "
                f"{profile.min_anneal_time} us"
            )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


@dataclass
class SampleSet:
    """Reads as rows of ``spins``; columns follow ``variables``."""

    variables: list
    spins: np.ndarray
    energies: np.ndarray
    gauge_index: np.ndarray
    read_index: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.spins.shape[0])

    @property
    def records(self) -> Iterator[tuple[np.ndarray, float, int, int]]:
        for k in range(len(self)):
            yield self.spins[k], float(self.energies[k]), int(self.gauge_index[k]), int(self.read_index[k])

    @property
    def problem_hash(self) -> str:
        return self.metadata.get("problem_hash", "")

    def lowest_energy(self) -> float:
        return float(self.energies.min())


# -- vectorised energy ------------------------------------------------------------

class _Arrays:
    """Dense index view of an Ising problem for the numeric kernels."""

    def __init__(self, problem: IsingProblem):
        self.variables = problem.variables
        col = {v: i for i, v in enumerate(self.variables)}
        n = len(self.variables)
        self.h = np.array([float(problem.h[v]) for v in self.variables], dtype=np.float64)
        pairs = [(col[u], col[v], float(c)) for (u, v), c in sorted(problem.J.items()) if c != 0]
        self.a = np.array([p[0] for p in pairs], dtype=np.int64)
        self.b = np.array([p[1] for p in pairs], dtype=np.int64)
        self.c = np.array([p[2] for p in pairs], dtype=np.float64)
        self.offset = float(problem.offset)
        # symmetric CSR adjacency for the local-field updates
        rows = np.concatenate([self.a, self.b])
        cols = np.concatenate([self.b, self.a])
        vals = np.concatenate([self.c, self.c])
        order = np.lexsort((cols, rows))
        rows, self.indices, self.data = rows[order], cols[order], vals[order]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.indptr, rows + 1, 1)
        self.indptr = np.cumsum(self.indptr)

    def energies(self, spins: np.ndarray) -> np.ndarray:
        s = np.asarray(spins, dtype=np.float64)
        if s.ndim == 1:
            s = s[None, :]
        e = self.offset + s @ self.h
        if len(self.c):
            e = e + (s[:, self.a] * s[:, self.b]) @ self.c
        return e


def ising_energies(problem: IsingProblem, spins: np.ndarray) -> np.ndarray:
    """Energies of a (reads, spins) matrix whose columns follow ``problem.variables``."""
    return _Arrays(problem).energies(spins)


def _unwrap(problem) -> IsingProblem:
    return getattr(problem, "ising", problem)


# -- exact enumeration ------------------------------------------------------------------

@njit(cache=True)
def _gray_enumerate(h, indptr, indices, data, tol):
    n = h.shape[0]
    s = -np.ones(n)
    f = h.copy()
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            f[i] += data[p] * s[indices[p]]
    energy = 0.0
    for i in range(n):
        energy += s[i] * (h[i] + 0.5 * (f[i] - h[i]))
    best = energy
    codes = [np.int64(0)]
    code = np.int64(0)
    for step in range(1, np.int64(1) << n):
        k = 0
        while not (step >> k) & 1:
            k += 1
        energy += -2.0 * s[k] * f[k]
        s[k] = -s[k]
        code ^= np.int64(1) << k
        for p in range(indptr[k], indptr[k + 1]):
            f[indices[p]] += 2.0 * data[p] * s[k]
        if energy < best - tol:
            best = energy
            codes = [code]
        elif energy <= best + tol:
            codes.append(code)
    out = np.empty(len(codes), dtype=np.int64)
    for i in range(len(codes)):
        out[i] = codes[i]
    return best, out


@dataclass(frozen=True)
class ExactResult:
    variables: list
    ground_energy: float
    ground_states: np.ndarray

    @property
    def degeneracy(self) -> int:
        return int(self.ground_states.shape[0])


def sample_exact(problem) -> ExactResult:
    """Enumerate every spin state; return the ground energy and all ground states."""
    ising = _unwrap(problem)
    arr = _Arrays(ising)
    n = len(arr.variables)
    if n > MAX_EXACT_SPINS:
        raise SizeTooLarge(f"exact enumeration limited to {MAX_EXACT_SPINS} spins, got {n}")
    if n == 0:
        return ExactResult([], arr.offset, np.zeros((1, 0), dtype=np.int8))
    # loose window for running-sum drift, then an exact re-check of the survivors
    scale = 1.0 + np.abs(arr.h).sum() + np.abs(arr.c).sum()
    _, codes = _gray_enumerate(arr.h, arr.indptr, arr.indices, arr.data, 1e-7 * scale)
    bits = (codes[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    states = (2 * bits - 1).astype(np.int8)
    energies = arr.energies(states)
    best = energies.min()
    keep = energies <= best + 1e-9 * max(1.0, abs(best))
    return ExactResult(list(arr.variables), float(best), states[keep])


# -- simulated annealing ---------------------------------------------------------------------

@njit(cache=True, fastmath=True, error_model="numpy")
def _anneal(h, indptr, indices, data, betas, seeds, out):
    n = h.shape[0]
    f = np.empty(n)
    for r in range(seeds.shape[0]):
        np.random.seed(seeds[r])
        s = np.empty(n)
        for i in range(n):
            s[i] = 1.0 if np.random.random() < 0.5 else -1.0
        for i in range(n):
            acc = h[i]
            for p in range(indptr[i], indptr[i + 1]):
                acc += data[p] * s[indices[p]]
            f[i] = acc
        for t in range(betas.shape[0]):
            beta = betas[t]
            for i in range(n):
                delta = -2.0 * s[i] * f[i]
                flip = delta <= 0.0
                if not flip:
                    x = beta * delta
                    # acceptance below exp(-40) ~ 4e-18 is skipped without a draw
                    if x < 40.0:
                        flip = np.random.random() < math.exp(-x)
                if flip:
                    s[i] = -s[i]
                    two = 2.0 * s[i]
                    for p in range(indptr[i], indptr[i + 1]):
                        f[indices[p]] += two * data[p]
        for i in range(n):
            out[r, i] = np.int8(s[i])


def read_seed(seed: int, gauge: int, read: int) -> np.uint32:
    return np.random.SeedSequence([int(seed), int(gauge), int(read)]).generate_state(1)[0]


def gauge_seed(seed: int, gauge: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(gauge), 0x6761]).generate_state(1)[0])


def beta_schedule(cfg: SamplerConfig) -> np.ndarray:
    return np.geomspace(cfg.beta_start, cfg.beta_end, cfg.num_sweeps)


def sample_sa(problem, cfg: SamplerConfig) -> SampleSet:
    """Metropolis simulated annealing, ``num_gauges`` batches of ``num_reads``.

    Each batch anneals a freshly gauged copy of the problem; stored samples
    are mapped back to the original gauge and carry their original energy.
    """
    if cfg.kind != SIMULATED_ANNEALING:
        raise ValueError(f"sample_sa needs kind={SIMULATED_ANNEALING!r}, got {cfg.kind!r}")
    ising = _unwrap(problem)
    base = _Arrays(ising)
    variables = base.variables
    n = len(variables)
    betas = beta_schedule(cfg)

    blocks = []
    for g in range(cfg.num_gauges):
        gauge = (random_gauge(variables, gauge_seed(cfg.seed, g)) if cfg.randomize_gauges
                 else identity_gauge(variables))
        gauged = _Arrays(apply_gauge(ising, gauge))
        seeds = np.array([read_seed(cfg.seed, g, r) for r in range(cfg.num_reads)], dtype=np.uint32)
        raw = np.empty((cfg.num_reads, n), dtype=np.int8)
        _anneal(gauged.h, gauged.indptr, gauged.indices, gauged.data, betas, seeds, raw)
        blocks.append(raw * gauge.vector(variables)[None, :])

    spins = np.concatenate(blocks, axis=0) if n else np.zeros((cfg.num_reads * cfg.num_gauges, 0), np.int8)
    return SampleSet(
        variables=list(variables),
        spins=spins.astype(np.int8),
        energies=base.energies(spins),
        gauge_index=np.repeat(np.arange(cfg.num_gauges), cfg.num_reads),
        read_index=np.tile(np.arange(cfg.num_reads), cfg.num_gauges),
        metadata={"problem_hash": problem_hash(ising), "config": cfg.to_dict(),
                  "num_sweeps": cfg.num_sweeps},
    )


def sample(problem, cfg: SamplerConfig, replay_path: str | Path | None = None) -> SampleSet:
    """Dispatch on ``cfg.kind``.  The exact backend returns its ground states as reads."""
    if cfg.kind == SIMULATED_ANNEALING:
        return sample_sa(problem, cfg)
    if cfg.kind == REPLAY:
        if replay_path is None:
            raise ValueError("replay sampler needs a sample file")
        return sample_replay(replay_path, problem)
    ising = _unwrap(problem)
    res = sample_exact(ising)
    m = res.degeneracy
    return SampleSet(
        variables=res.variables,
        spins=res.ground_states,
        energies=np.full(m, res.ground_energy),
        gauge_index=np.zeros(m, dtype=np.int64),
        read_index=np.arange(m),
        metadata={"problem_hash": problem_hash(ising), "config": cfg.to_dict()},
    )


def audit_energies(samples: SampleSet, problem) -> float:
    """Largest gap between stored and recomputed energies."""
    if not len(samples):
        return 0.0
    ising = _unwrap(problem)
    col = {v: i for i, v in enumerate(samples.variables)}
    order = [col[v] for v in ising.variables]
    recomputed = ising_energies(ising, samples.spins[:, order])
    return float(np.max(np.abs(recomputed - samples.energies)))


# -- sample files -------------------------------------------------------------------------

def _spin_text(row: np.ndarray) -> str:
    return "".join("+" if s > 0 else "-" for s in row)


def save_samples(samples: SampleSet, path: str | Path) -> Path:
    """JSON header line, then one JSON object per read."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": SAMPLE_FORMAT,
        "version": SAMPLE_FORMAT_VERSION,
        "problem_hash": samples.problem_hash,
        "variables": [int(v) for v in samples.variables],
        "num_records": len(samples),
        "metadata": {k: v for k, v in samples.metadata.items() if k != "problem_hash"},
    }
    lines = [json.dumps(header, sort_keys=True)]
    for spins, energy, g, r in samples.records:
        lines.append(json.dumps({"g": g, "r": r, "energy": energy, "spins": _spin_text(spins)},
                                sort_keys=True))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_samples(path: str | Path) -> SampleSet:
    text = Path(path).read_text()
    if not text.endswith("\n"):
        raise FormatError(f"{path}: truncated sample file (no final newline)")
    lines = text.splitlines()
    try:
        header = json.loads(lines[0])
    except (IndexError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable header") from exc
    if header.get("format") != SAMPLE_FORMAT or header.get("version") != SAMPLE_FORMAT_VERSION:
        raise FormatError(f"{path}: not a version {SAMPLE_FORMAT_VERSION} sample file")
    body = lines[1:]
    if len(body) != header.get("num_records"):
        raise FormatError(f"{path}: expected {header.get('num_records')} records, found {len(body)}")
    variables = header["variables"]
    n = len(variables)
    spins = np.zeros((len(body), n), dtype=np.int8)
    energies = np.zeros(len(body))
    gi = np.zeros(len(body), dtype=np.int64)
    ri = np.zeros(len(body), dtype=np.int64)
    for k, line in enumerate(body):
        try:
            rec = json.loads(line)
            text = rec["spins"]
            if len(text) != n or set(text) - {"+", "-"}:
                raise ValueError("bad spin string")
            spins[k] = [1 if ch == "+" else -1 for ch in text]
            energies[k] = float(rec["energy"])
            gi[k], ri[k] = int(rec["g"]), int(rec["r"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed record {k}: {exc}") from exc
    meta = dict(header.get("metadata", {}))
    meta["problem_hash"] = header.get("problem_hash", "")
    return SampleSet(list(variables), spins, energies, gi, ri, meta)


def sample_replay(path: str | Path, problem=None, cfg: SamplerConfig | None = None) -> SampleSet:
    """Load recorded samples, refusing files recorded for a different problem."""
    samples = load_samples(path)
    if problem is not None:
        expected = problem_hash(_unwrap(problem))
        if samples.problem_hash != expected:
            raise HashMismatch(
                f"{path} holds samples for problem {samples.problem_hash[:12]}, expected {expected[:12]}"
            )
    if cfg is not None:
        samples.metadata["replay_config"] = cfg.to_dict()
    return samples
