"""Ground-state probability, time to solution, bootstrap medians and scaling fits."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .errors import InsufficientData

TARGET_SUCCESS = 0.99
DEFAULT_RESAMPLES = 5000
DEFAULT_CONFIDENCE = 0.95


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    anneal_time_us: float
    j_f: float
    sampler: str
    total_anneals: int
    ground_hits: int

    def __post_init__(self):
        if self.total_anneals < 0 or not 0 <= self.ground_hits <= self.total_anneals:
            raise ValueError(f"need 0 <= ground_hits <= total_anneals, got "
                             f"{self.ground_hits}/{self.total_anneals}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        return cls(
            instance_id=str(data["instance_id"]),
            anneal_time_us=float(data["anneal_time_us"]),
            j_f=float(data["j_f"]),
            sampler=str(data["sampler"]),
            total_anneals=int(data["total_anneals"]),
            ground_hits=int(data["ground_hits"]),
        )


def compute_pgs(r: RunRecord) -> float:
    if r.total_anneals < 1:
        raise ValueError("need at least one anneal")
    return r.ground_hits / r.total_anneals


def pool_records(records: Iterable[RunRecord]) -> RunRecord:
    """Sum hits and anneals (e.g. over gauges) of records sharing one setting."""
    records = list(records)
    if not records:
        raise ValueError("nothing to pool")
    first = records[0]
    for r in records[1:]:
        if (r.instance_id, r.anneal_time_us, r.j_f, r.sampler) != (
                first.instance_id, first.anneal_time_us, first.j_f, first.sampler):
            raise ValueError("can only pool records of the same instance and setting")
    return RunRecord(first.instance_id, first.anneal_time_us, first.j_f, first.sampler,
                     sum(r.total_anneals for r in records), sum(r.ground_hits for r in records))


# -- time to solution --------------------------------------------------------------

@dataclass(frozen=True)
class TtsEstimate:
    p_gs: float
    tts: float
    t: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.tts)


def tts_value(p_gs: float, t: float, target: float = TARGET_SUCCESS) -> float:
    if not 0.0 <= p_gs <= 1.0:
        raise ValueError(f"p_gs must lie in [0, 1], got {p_gs}")
    if not t > 0:
        raise ValueError(f"anneal time must be positive, got {t}")
    if p_gs == 0.0:
        return math.inf
    if p_gs == 1.0:
        # a single anneal already succeeds
        return float(t)
    # log1p keeps numerator and denominator identical at p_gs == target
    return math.log1p(-target) / math.log1p(-p_gs) * t


def compute_tts(p_gs: float, t: float) -> TtsEstimate:
    """Expected anneal time to reach a valid solution with 0.99 probability."""
    return TtsEstimate(float(p_gs), tts_value(p_gs, t), float(t))


# -- bootstrap ---------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapResult:
    mean: float
    low: float
    high: float
    median: float
    resamples: int
    confidence: float
    medians: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        return {
            "boot_mean": self.mean,
            "ci_low": self.low,
            "ci_high": self.high,
            "median": self.median,
            "resamples": self.resamples,
            "confidence": self.confidence,
        }


def _percentile_sorted(a: np.ndarray, q: float) -> float:
    # linear interpolation that never forms inf - inf
    pos = q * (len(a) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(a) - 1)
    frac = pos - lo
    if frac == 0.0 or a[lo] == a[hi]:
        return float(a[lo])
    if math.isinf(a[hi]):
        return math.inf
    return float(a[lo] + frac * (a[hi] - a[lo]))


def bootstrap_median(
    values: Sequence[float],
    resamples: int = DEFAULT_RESAMPLES,
    confidence: float = DEFAULT_CONFIDENCE,
    seed: int = 0,
) -> BootstrapResult:
    """Percentile bootstrap of the median; infinite values are ordinary large values."""
    x = np.asarray(values, dtype=float)
    if x.size < 1:
        raise ValueError("need at least one value")
    if np.isnan(x).any():
        raise ValueError("values contain NaN")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    medians = np.empty(resamples)
    chunk = max(1, 2_000_000 // x.size)
    for start in range(0, resamples, chunk):
        stop = min(resamples, start + chunk)
        draws = x[rng.integers(0, x.size, size=(stop - start, x.size))]
        medians[start:stop] = np.median(draws, axis=1)
    ordered = np.sort(medians)
    tail = (1.0 - confidence) / 2.0
    return BootstrapResult(
        mean=float(np.mean(medians)) if np.isfinite(medians).all() else math.inf,
        low=_percentile_sorted(ordered, tail),
        high=_percentile_sorted(ordered, 1.0 - tail),
        median=float(np.median(x)),
        resamples=int(resamples),
        confidence=float(confidence),
        medians=medians,
    )


# -- scaling fit -------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    t0: float
    alpha: float
    stderr_alpha: float
    intercept: float
    sizes: tuple[int, ...]
    excluded: tuple[int, ...]
    label: str = ""

    def to_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and not math.isfinite(v) else v

        return {
            "label": self.label,
            "alpha": self.alpha,
            "stderr": clean(self.stderr_alpha),
            "t0": self.t0,
            "intercept": self.intercept,
            "sizes": list(self.sizes),
            "excluded": list(self.excluded),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalingFit":
        stderr = data.get("stderr")
        return cls(
            t0=float(data["t0"]),
            alpha=float(data["alpha"]),
            stderr_alpha=math.nan if stderr is None else float(stderr),
            intercept=float(data["intercept"]),
            sizes=tuple(int(n) for n in data["sizes"]),
            excluded=tuple(int(n) for n in data["excluded"]),
            label=str(data.get("label", "")),
        )


def fit_scaling(points: Iterable[tuple[float, float]], label: str = "") -> ScalingFit:
    """Least squares of ln(TTS) on n; sizes with infinite TTS are left out.

    The standard error of the slope needs three or more points and is NaN
    for an exact two-point fit.
    """
    pts = sorted((int(n), float(v)) for n, v in points)
    finite = [(n, v) for n, v in pts if math.isfinite(v)]
    excluded = tuple(n for n, v in pts if not math.isfinite(v))
    if any(v <= 0 for _, v in finite):
        raise ValueError("TTS values must be positive")
    if len({n for n, _ in finite}) < 2:
        raise InsufficientData(f"need at least 2 finite sizes, got {len(finite)} (excluded {list(excluded)})")
    n = np.array([p[0] for p in finite], dtype=float)
    y = np.log([p[1] for p in finite])
    res = sps.linregress(n, y)
    stderr = float(res.stderr) if len(finite) > 2 else math.nan
    return ScalingFit(
        t0=float(math.exp(res.intercept)),
        alpha=float(res.slope),
        stderr_alpha=stderr,
        intercept=float(res.intercept),
        sizes=tuple(int(v) for v in n),
        excluded=excluded,
        label=label,
    )


# -- tabular output ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return v


def write_rows_csv(rows: Sequence[dict], path: str | Path, columns: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})
    return path


def read_rows_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def json_safe(obj):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return json_safe(obj.item())
    return obj


def write_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_safe(obj), indent=1, sort_keys=True) + "\n")
    return path


def write_fits_json(fits: Sequence[ScalingFit], path: str | Path) -> Path:
    return write_json([f.to_dict() for f in fits], path)
