"""Coloring QUBOs, QUBO/Ising conversion, energies, decoding and gauges.

Energies follow the minimization convention

    QUBO:  E(x) = offset + sum_i a_i x_i + sum_{i<j} b_ij x_i x_j,   x in {0, 1}
    Ising: E(s) = offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j,   s in {-1, +1}

and the two are linked by x = (1 + s) / 2.  Negative J is ferromagnetic.

Coloring variables are laid out vertex-major: x_{i,c} lives at index i*k + c.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import FormatError, LengthMismatch
from .instances import SchedulingGraph


def _pair(i, j):
    if i == j:
        raise ValueError(f"diagonal coupling ({i}, {i}) belongs in the linear terms")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class QuboProblem:
    num_vars: int
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0
    var_labels: tuple[tuple[int, int], ...] | None = None

    def energy(self, x) -> float:
        return qubo_energy(self, x)

    def to_dict(self) -> dict:
        return {
            "num_vars": self.num_vars,
            "linear": [[i, v] for i, v in sorted(self.linear.items())],
            "quadratic": [[i, j, v] for (i, j), v in sorted(self.quadratic.items())],
            "offset": self.offset,
            "var_labels": None if self.var_labels is None else [list(l) for l in self.var_labels],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "QuboProblem":
        try:
            labels = data.get("var_labels")
            return cls(
                num_vars=int(data["num_vars"]),
                linear={int(i): float(v) for i, v in data["linear"]},
                quadratic={_pair(int(i), int(j)): float(v) for i, j, v in data["quadratic"]},
                offset=float(data["offset"]),
                var_labels=None if labels is None else tuple((int(a), int(b)) for a, b in labels),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed QUBO document: {exc}") from exc


@dataclass(frozen=True)
class IsingProblem:
    """Ising model; every variable appears as a key of ``h`` (possibly 0)."""

    h: dict[Hashable, float] = field(default_factory=dict)
    J: dict[tuple, float] = field(default_factory=dict)
    offset: float = 0.0

    @property
    def variables(self) -> list:
        return sorted(self.h)

    @property
    def num_spins(self) -> int:
        return len(self.h)

    def energy(self, spins) -> float:
        return ising_energy(self, spins)

    def to_dict(self) -> dict:
        return {
            "h": [[v, c] for v, c in sorted(self.h.items())],
            "J": [[u, v, c] for (u, v), c in sorted(self.J.items())],
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "IsingProblem":
        try:
            return make_ising(
                {int(v): float(c) for v, c in data["h"]},
                {(int(u), int(v)): float(c) for u, v, c in data["J"]},
                float(data["offset"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed Ising document: {exc}") from exc

    def content_hash(self) -> str:
        return problem_hash(self)


def make_ising(h: Mapping, J: Mapping, offset: float = 0.0) -> IsingProblem:
    """Build an IsingProblem, normalising pair order and registering every spin in h."""
    hh = dict(h)
    jj: dict[tuple, float] = {}
    for (u, v), c in J.items():
        key = _pair(u, v)
        jj[key] = jj.get(key, 0.0) + c
        hh.setdefault(u, 0.0)
        hh.setdefault(v, 0.0)
    return IsingProblem(h=hh, J=jj, offset=offset)


def problem_hash(problem: QuboProblem | IsingProblem) -> str:
    payload = json.dumps(problem.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


# -- coloring QUBO -------------------------------------------------------------

def var_index(vertex: int, color: int, k: int) -> int:
    return vertex * k + color


def build_coloring_qubo(g: SchedulingGraph, k: int = 3) -> QuboProblem:
    """One-hot coloring penalty with unit weights.

    H(x) = sum_i (1 - sum_c x_ic)^2 + sum_{(i,j) in E} sum_c x_ic x_jc

    Expanding the square (x^2 = x) gives offset n, linear -1 per variable,
    +2 between two colors of the same vertex, +1 between equal colors of
    adjacent vertices.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    return coloring_qubo(g.n, g.edges, k)


def coloring_qubo(n: int, edges: Sequence[tuple[int, int]], k: int = 3) -> QuboProblem:
    linear = {var_index(i, c, k): -1.0 for i in range(n) for c in range(k)}
    quadratic: dict[tuple[int, int], float] = {}
    for i in range(n):
        for c1, c2 in combinations(range(k), 2):
            quadratic[_pair(var_index(i, c1, k), var_index(i, c2, k))] = 2.0
    for i, j in edges:
        for c in range(k):
            key = _pair(var_index(i, c, k), var_index(j, c, k))
            quadratic[key] = quadratic.get(key, 0.0) + 1.0
    labels = tuple((i, c) for i in range(n) for c in range(k))
    return QuboProblem(num_vars=n * k, linear=linear, quadratic=quadratic,
                       offset=float(n), var_labels=labels)


def qubo_energy(q: QuboProblem, x) -> float:
    x = np.asarray(x)
    if x.shape != (q.num_vars,):
        raise LengthMismatch(f"expected {q.num_vars} bits, got shape {x.shape}")
    e = q.offset
    for i, a in q.linear.items():
        e += a * x[i]
    for (i, j), b in q.quadratic.items():
        e += b * x[i] * x[j]
    return float(e)


def qubo_energies(q: QuboProblem, X) -> np.ndarray:
    """Vectorised energies for a (reads, num_vars) bit matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != q.num_vars:
        raise LengthMismatch(f"expected (*, {q.num_vars}) bits, got shape {X.shape}")
    e = np.full(X.shape[0], q.offset)
    if q.linear:
        idx = np.fromiter(q.linear.keys(), dtype=int)
        e += X[:, idx] @ np.fromiter(q.linear.values(), dtype=float)
    if q.quadratic:
        pairs = np.array(list(q.quadratic.keys()), dtype=int)
        coef = np.fromiter(q.quadratic.values(), dtype=float)
        e += (X[:, pairs[:, 0]] * X[:, pairs[:, 1]]) @ coef
    return e


def ising_energy(problem: IsingProblem, spins) -> float:
    """Energy of a spin assignment given as a mapping or as an array in ``variables`` order."""
    if isinstance(spins, Mapping):
        s = spins
    else:
        arr = np.asarray(spins)
        variables = problem.variables
        if arr.shape != (len(variables),):
            raise LengthMismatch(f"expected {len(variables)} spins, got shape {arr.shape}")
        s = dict(zip(variables, arr.tolist()))
    e = problem.offset
    for v, c in problem.h.items():
        e += c * s[v]
    for (u, v), c in problem.J.items():
        e += c * s[u] * s[v]
    return float(e)


# -- conversions ---------------------------------------------------------------

def qubo_to_ising(q: QuboProblem) -> IsingProblem:
    h = {i: 0.0 for i in range(q.num_vars)}
    J: dict[tuple[int, int], float] = {}
    offset = q.offset
    for i, a in q.linear.items():
        h[i] += a / 2
        offset += a / 2
    for (i, j), b in q.quadratic.items():
        J[(i, j)] = J.get((i, j), 0.0) + b / 4
        h[i] += b / 4
        h[j] += b / 4
        offset += b / 4
    return IsingProblem(h=h, J=J, offset=offset)


def ising_to_qubo(problem: IsingProblem, var_labels=None) -> QuboProblem:
    """Inverse of :func:`qubo_to_ising`; spins must be labelled 0..N-1."""
    variables = problem.variables
    if variables != list(range(len(variables))):
        raise ValueError("ising_to_qubo needs spins labelled 0..N-1")
    linear = {i: 0.0 for i in variables}
    quadratic: dict[tuple[int, int], float] = {}
    offset = problem.offset
    for i, c in problem.h.items():
        linear[i] += 2 * c
        offset -= c
    for (i, j), c in problem.J.items():
        quadratic[(i, j)] = quadratic.get((i, j), 0.0) + 4 * c
        linear[i] -= 2 * c
        linear[j] -= 2 * c
        offset += c
    linear = {i: v for i, v in linear.items() if v != 0.0}
    return QuboProblem(num_vars=len(variables), linear=linear, quadratic=quadratic,
                       offset=offset, var_labels=var_labels)


def spins_to_bits(s) -> np.ndarray:
    return ((np.asarray(s) + 1) // 2).astype(np.int8)


def bits_to_spins(x) -> np.ndarray:
    return (2 * np.asarray(x) - 1).astype(np.int8)


# -- gauges --------------------------------------------------------------------

@dataclass(frozen=True)
class Gauge:
    signs: dict
    seed: int | None = None

    def vector(self, variables) -> np.ndarray:
        return np.array([self.signs[v] for v in variables], dtype=np.int8)


def random_gauge(variables, seed: int) -> Gauge:
    rng = np.random.default_rng(seed)
    variables = list(variables)
    flips = rng.integers(0, 2, size=len(variables)) * 2 - 1
    return Gauge({v: int(g) for v, g in zip(variables, flips)}, seed)


def identity_gauge(variables) -> Gauge:
    return Gauge({v: 1 for v in variables}, None)


def apply_gauge(problem: IsingProblem, g: Gauge) -> IsingProblem:
    h = {v: g.signs[v] * c for v, c in problem.h.items()}
    J = {(u, v): g.signs[u] * g.signs[v] * c for (u, v), c in problem.J.items()}
    return IsingProblem(h=h, J=J, offset=problem.offset)


def ungauge_sample(s, g: Gauge, variables=None):
    """Map a sample of the gauged problem back to the original spins (an involution)."""
    if isinstance(s, Mapping):
        return {v: g.signs[v] * spin for v, spin in s.items()}
    if variables is None:
        variables = sorted(g.signs)
    return np.asarray(s) * g.vector(variables)


# -- decoding ------------------------------------------------------------------

@dataclass(frozen=True)
class Invalid:
    reason: str
    vertex: int | None = None
    edge: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return False


def decode_coloring(q: QuboProblem, x) -> tuple[int, ...] | Invalid:
    if q.var_labels is None:
        raise ValueError("decode_coloring needs a coloring QUBO with var_labels")
    x = np.asarray(x)
    if x.shape != (q.num_vars,):
        raise LengthMismatch(f"expected {q.num_vars} bits, got shape {x.shape}")
    n = max(v for v, _ in q.var_labels) + 1
    chosen: list[list[int]] = [[] for _ in range(n)]
    for idx, (v, c) in enumerate(q.var_labels):
        if x[idx]:
            chosen[v].append(c)
    for v, cs in enumerate(chosen):
        if not cs:
            return Invalid("uncolored vertex", vertex=v)
        if len(cs) > 1:
            return Invalid("multi-colored vertex", vertex=v)
    coloring = tuple(cs[0] for cs in chosen)
    for (a, b), coef in q.quadratic.items():
        va, ca = q.var_labels[a]
        vb, cb = q.var_labels[b]
        if va != vb and ca == cb and coef > 0 and coloring[va] == ca and coloring[vb] == cb:
            return Invalid("conflicting edge", edge=(min(va, vb), max(va, vb)))
    return coloring


# -- files -----------------------------------------------------------------------

def save_problem(problem: QuboProblem | IsingProblem, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(problem.to_dict(), sort_keys=True) + "\n")
    return path


def load_qubo(path: str | Path) -> QuboProblem:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(str(exc)) from exc
    return QuboProblem.from_dict(data)
