"""Random scheduling (graph 3-coloring) instances with a planted coloring.

Vertices are tasks and edges are conflicts between tasks.  Every instance is
built by first splitting the vertices into near-balanced color classes and
then drawing a fixed number of edges uniformly, without replacement, from the
pairs that cross classes.  The planted coloring is therefore always proper and
every generated schedule has at least one conflict-free solution.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InstanceInfeasible, SizeTooLarge

FORMAT_VERSION = 1

# Average degree 4.5 in the hard region of 3-colorability, i.e. 2.25 edges per
# vertex.  ``generate_instance`` takes edges per vertex (|E| = round(d*n)).
HARD_AVERAGE_DEGREE = 4.5
DEFAULT_DENSITY = HARD_AVERAGE_DEGREE / 2

NUM_COLORS = 3
MAX_EXHAUSTIVE_VERTICES = 30


@dataclass(frozen=True)
class SchedulingGraph:
    n: int
    edges: tuple[tuple[int, int], ...]
    hidden_coloring: tuple[int, ...]
    seed: int
    d_target: float

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def instance_id(self) -> str:
        return f"n{self.n:03d}_s{self.seed:016x}"

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "n": self.n,
            "d": self.d_target,
            "seed": self.seed,
            "edges": [list(e) for e in self.edges],
            "hidden_coloring": list(self.hidden_coloring),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SchedulingGraph":
        if data.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported instance format_version {data.get('format_version')!r}")
        return cls(
            n=int(data["n"]),
            edges=tuple((int(i), int(j)) for i, j in data["edges"]),
            hidden_coloring=tuple(int(c) for c in data["hidden_coloring"]),
            seed=int(data["seed"]),
            d_target=float(data["d"]),
        )


def target_edge_count(n: int, d: float) -> int:
    """round(d * n), with halves rounded up."""
    return int(math.floor(d * n + 0.5))


def class_sizes(n: int, k: int = NUM_COLORS) -> list[int]:
    base, extra = divmod(n, k)
    return [base + 1 if c < extra else base for c in range(k)]


def max_cross_class_pairs(n: int, k: int = NUM_COLORS) -> int:
    sizes = class_sizes(n, k)
    return sum(a * b for a, b in combinations(sizes, 2))


def split_seed(master_seed: int, *keys: int) -> int:
    """Derive a 64-bit child seed: first 8 bytes of SHA-256 over 'master:key1:key2...'."""
    text = ":".join(str(int(v)) for v in (master_seed, *keys))
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def generate_instance(n: int, d: float = DEFAULT_DENSITY, seed: int = 0) -> SchedulingGraph:
    m = target_edge_count(n, d)
    available = max_cross_class_pairs(n)
    if m > available:
        raise InstanceInfeasible(
            f"{m} edges requested but only {available} cross-class pairs exist for n={n}"
        )
    if n < NUM_COLORS:
        raise ValueError(f"need at least {NUM_COLORS} vertices, got n={n}")

    rng = np.random.default_rng(seed)
    colors = np.repeat(np.arange(NUM_COLORS), class_sizes(n))
    rng.shuffle(colors)

    allowed = [(i, j) for i, j in combinations(range(n), 2) if colors[i] != colors[j]]
    picked = rng.choice(len(allowed), size=m, replace=False)
    edges = tuple(sorted(allowed[p] for p in picked))
    return SchedulingGraph(
        n=n,
        edges=edges,
        hidden_coloring=tuple(int(c) for c in colors),
        seed=int(seed),
        d_target=float(d),
    )


def generate_ensemble(
    sizes: Iterable[int],
    count_per_size: int,
    d: float = DEFAULT_DENSITY,
    master_seed: int = 0,
) -> list[SchedulingGraph]:
    if count_per_size < 1:
        raise ValueError("count_per_size must be >= 1")
    out = []
    for n in sizes:
        for index in range(count_per_size):
            out.append(generate_instance(n, d, split_seed(master_seed, n, index)))
    return out


def _adjacency(n: int, edges: Iterable[tuple[int, int]]) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def verify_colorable(g: SchedulingGraph, k: int = NUM_COLORS) -> tuple[bool, tuple[int, ...] | None]:
    """Exhaustive backtracking k-colorability check.

    Returns ``(True, witness)`` or ``(False, None)``.  The search ignores the
    planted coloring, so it can serve as an independent check of generation.
    """
    return colorable(g.n, g.edges, k)


def colorable(n: int, edges: Sequence[tuple[int, int]], k: int) -> tuple[bool, tuple[int, ...] | None]:
    if n > MAX_EXHAUSTIVE_VERTICES:
        raise SizeTooLarge(f"exhaustive coloring limited to {MAX_EXHAUSTIVE_VERTICES} vertices, got {n}")
    if n == 0:
        return True, ()
    adj = _adjacency(n, edges)
    # highest degree first keeps the search tree shallow
    order = sorted(range(n), key=lambda v: -len(adj[v]))
    coloring = [-1] * n

    def assign(pos: int, used: int) -> bool:
        if pos == n:
            return True
        v = order[pos]
        taken = {coloring[u] for u in adj[v]}
        # a fresh color is interchangeable with any other unused one
        for c in range(min(k, used + 1)):
            if c in taken:
                continue
            coloring[v] = c
            if assign(pos + 1, max(used, c + 1)):
                return True
        coloring[v] = -1
        return False

    if assign(0, 0):
        return True, tuple(coloring)
    return False, None


def is_proper_coloring(n: int, edges: Iterable[tuple[int, int]], coloring: Sequence[int]) -> bool:
    return len(coloring) == n and all(coloring[i] != coloring[j] for i, j in edges)


# -- persistence ------------------------------------------------------------

def save_instance(g: SchedulingGraph, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(g.to_dict(), sort_keys=True) + "\n")
    return path


def load_instance(path: str | Path) -> SchedulingGraph:
    return SchedulingGraph.from_dict(json.loads(Path(path).read_text()))


def save_ensemble(
    graphs: Sequence[SchedulingGraph],
    directory: str | Path,
    master_seed: int,
) -> Path:
    """Write one JSON file per instance plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    per_size: dict[int, int] = {}
    for g in graphs:
        index = per_size.get(g.n, 0)
        per_size[g.n] = index + 1
        rel = f"n{g.n:03d}/{index:04d}.json"
        save_instance(g, directory / rel)
        entries.append({"path": rel, "n": g.n, "index": index, "seed": g.seed})
    manifest = {
        "format_version": FORMAT_VERSION,
        "master_seed": int(master_seed),
        "d": graphs[0].d_target if graphs else None,
        "instances": entries,
    }
    out = directory / "manifest.json"
    out.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return out


def load_ensemble(directory: str | Path) -> tuple[list[SchedulingGraph], dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    graphs = [load_instance(directory / e["path"]) for e in manifest["instances"]]
    return graphs, manifest
