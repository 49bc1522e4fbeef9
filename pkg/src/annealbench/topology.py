"""Chimera and Pegasus hardware graphs, defect masks and device profiles.

Chimera C_m: an m x m grid of K_{4,4} cells.  Qubit (row, col, side, k) has
linear index 8*(m*row + col) + 4*side + k; side 0 qubits are vertical and
couple to the same qubit in the cell below, side 1 qubits are horizontal and
couple to the same qubit in the cell to the right.

Pegasus P_m: qubits (u, w, k, z) with u the orientation, w the perpendicular
offset, k the track inside a 12-wide tile and z the position along the line.
Each qubit is a length-12 segment on a 12m x 12m plane; vertical segments are
shifted along y by ``VERTICAL_OFFSETS[k]`` and horizontal ones along x by
``HORIZONTAL_OFFSETS[k]``.  Couplers:

* internal: a vertical and a horizontal segment that cross,
* external: consecutive segments on the same line (z, z+1),
* odd: tracks 2j and 2j+1 of the same line segment.

Segments hanging over the fabric boundary are dropped by keeping the largest
connected component; for m = 16 this leaves 5640 qubits and 40484 couplers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Iterable

import networkx as nx
import numpy as np

VERTICAL_OFFSETS = (2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6)
HORIZONTAL_OFFSETS = (6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10)

CHIMERA = "chimera"
PEGASUS = "pegasus"


@dataclass(frozen=True)
class HardwareGraph:
    family: str
    m: int
    nodes: tuple[int, ...]
    couplers: frozenset[tuple[int, int]]
    coordinates: dict[int, tuple[int, ...]]
    defects: frozenset[int] = frozenset()
    defective_couplers: frozenset[tuple[int, int]] = frozenset()

    @property
    def name(self) -> str:
        return f"{self.family[0].upper()}{self.m}"

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def working_nodes(self) -> list[int]:
        return [q for q in self.nodes if q not in self.defects]

    @property
    def usable_couplers(self) -> list[tuple[int, int]]:
        bad = self.defective_couplers
        return sorted(
            e for e in self.couplers
            if e not in bad and e[0] not in self.defects and e[1] not in self.defects
        )

    def to_networkx(self, usable_only: bool = True) -> nx.Graph:
        g = nx.Graph(family=self.family, m=self.m)
        if usable_only:
            g.add_nodes_from(self.working_nodes)
            g.add_edges_from(self.usable_couplers)
        else:
            g.add_nodes_from(self.nodes)
            g.add_edges_from(self.couplers)
        return g

    def degree(self) -> dict[int, int]:
        deg = {q: 0 for q in self.nodes}
        for a, b in self.couplers:
            deg[a] += 1
            deg[b] += 1
        return deg

    def largest_component_size(self) -> int:
        g = self.to_networkx()
        if g.number_of_nodes() == 0:
            return 0
        return max(len(c) for c in nx.connected_components(g))

    def graph_hash(self) -> str:
        import hashlib

        payload = json.dumps(
            {"family": self.family, "m": self.m, "couplers": self.usable_couplers},
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    # -- export ---------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "m": self.m,
            "nodes": list(self.nodes),
            "couplers": [list(e) for e in sorted(self.couplers)],
            "defects": sorted(self.defects),
            "defective_couplers": [list(e) for e in sorted(self.defective_couplers)],
            "coordinates": {str(q): list(c) for q, c in sorted(self.coordinates.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HardwareGraph":
        return cls(
            family=data["family"],
            m=int(data["m"]),
            nodes=tuple(int(q) for q in data["nodes"]),
            couplers=frozenset((int(a), int(b)) for a, b in data["couplers"]),
            coordinates={int(q): tuple(c) for q, c in data["coordinates"].items()},
            defects=frozenset(int(q) for q in data.get("defects", [])),
            defective_couplers=frozenset((int(a), int(b)) for a, b in data.get("defective_couplers", [])),
        )

    def write_edgelist(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            fh.write(f"# {self.name} usable couplers\n")
            for a, b in self.usable_couplers:
                fh.write(f"{a} {b}\n")
        return path

    def write_json(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")
        return path


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


# -- Chimera ----------------------------------------------------------------------

def chimera_index(m: int, row: int, col: int, side: int, k: int) -> int:
    return 8 * (m * row + col) + 4 * side + k


def build_chimera(m: int) -> HardwareGraph:
    if m < 1:
        raise ValueError("Chimera lattice size must be >= 1")
    coords = {}
    couplers = set()
    for row, col in product(range(m), range(m)):
        for side, k in product(range(2), range(4)):
            coords[chimera_index(m, row, col, side, k)] = (row, col, side, k)
        for k0, k1 in product(range(4), range(4)):
            couplers.add(_edge(chimera_index(m, row, col, 0, k0), chimera_index(m, row, col, 1, k1)))
        for k in range(4):
            if row + 1 < m:
                couplers.add(_edge(chimera_index(m, row, col, 0, k), chimera_index(m, row + 1, col, 0, k)))
            if col + 1 < m:
                couplers.add(_edge(chimera_index(m, row, col, 1, k), chimera_index(m, row, col + 1, 1, k)))
    return HardwareGraph(CHIMERA, m, tuple(sorted(coords)), frozenset(couplers), coords)


def chimera_coupler_count(m: int) -> int:
    """16 intra-cell couplers per cell plus 4 per adjacent cell pair in each direction."""
    return 16 * m * m + 8 * m * (m - 1)


# -- Pegasus ----------------------------------------------------------------------

def pegasus_index(m: int, u: int, w: int, k: int, z: int) -> int:
    return ((u * m + w) * 12 + k) * (m - 1) + z


def _pegasus_full(m: int) -> tuple[dict[int, tuple], set[tuple[int, int]]]:
    """Every (u, w, k, z) segment and coupler before boundary trimming."""
    m1 = m - 1
    coords = {}
    for u, w, k, z in product(range(2), range(m), range(12), range(m1)):
        coords[pegasus_index(m, u, w, k, z)] = (u, w, k, z)
    couplers: set[tuple[int, int]] = set()
    for u, w, k, z in product(range(2), range(m), range(12), range(m1)):
        q = pegasus_index(m, u, w, k, z)
        if z + 1 < m1:
            couplers.add(_edge(q, pegasus_index(m, u, w, k, z + 1)))
        if k % 2 == 0:
            couplers.add(_edge(q, pegasus_index(m, u, w, k + 1, z)))

    # vertical segment (0, w, k, z): x = 12w + k, y in [12z + v_off, 12z + v_off + 12)
    # horizontal segment (1, w', k', z'): y = 12w' + k', x in [12z' + h_off, 12z' + h_off + 12)
    for w, k, z in product(range(m), range(12), range(m1)):
        x = 12 * w + k
        y0 = 12 * z + VERTICAL_OFFSETS[k]
        v = pegasus_index(m, 0, w, k, z)
        for y in range(y0, y0 + 12):
            w2, k2 = divmod(y, 12)
            if w2 >= m:
                continue
            z2 = (x - HORIZONTAL_OFFSETS[k2]) // 12
            if 0 <= z2 < m1:
                couplers.add(_edge(v, pegasus_index(m, 1, w2, k2, z2)))
    return coords, couplers


def build_pegasus(m: int) -> HardwareGraph:
    if m < 2:
        raise ValueError("Pegasus lattice size must be >= 2")
    coords, couplers = _pegasus_full(m)
    g = nx.Graph()
    g.add_nodes_from(coords)
    g.add_edges_from(couplers)
    fabric = max(nx.connected_components(g), key=len)
    coords = {q: c for q, c in coords.items() if q in fabric}
    couplers = {e for e in couplers if e[0] in fabric and e[1] in fabric}
    return HardwareGraph(PEGASUS, m, tuple(sorted(coords)), frozenset(couplers), coords)


# (vertical track group, horizontal track group, column shift, row shift) for
# the three disjoint Chimera copies; found by exhaustive search over groups
# and small shifts, checked coupler by coupler in the tests.
_CHIMERA_COPIES = ((0, 2, 1, 0), (1, 1, 0, 1), (2, 0, 0, 1))


def chimera_to_pegasus_map(m: int, copy: int = 0) -> dict[int, int]:
    """Identity-chain embedding of C_{m-1} into P_m.

    Cell (r, c) uses four vertical tracks of column c (segment r) and four
    horizontal tracks of row r (segment c), so Chimera's inter-cell couplers
    become Pegasus external couplers.
    """
    if m < 2:
        raise ValueError("Pegasus lattice size must be >= 2")
    vg, hg, dw, hw = _CHIMERA_COPIES[copy]
    mc = m - 1
    mapping = {}
    for r, c, k in product(range(mc), range(mc), range(4)):
        mapping[chimera_index(mc, r, c, 0, k)] = pegasus_index(m, 0, c + dw, 4 * vg + k, r)
        mapping[chimera_index(mc, r, c, 1, k)] = pegasus_index(m, 1, r + hw, 4 * hg + k, c)
    return mapping


# -- defects ----------------------------------------------------------------------

def apply_defects(g: HardwareGraph, working: int, seed: int = 0,
                  defect_list: Iterable[int] | None = None) -> HardwareGraph:
    """Mark ``len(nodes) - working`` uniformly random qubits unusable.

    An explicit ``defect_list`` overrides the random draw.
    """
    if defect_list is not None:
        dead = frozenset(int(q) for q in defect_list)
        unknown = dead - set(g.nodes)
        if unknown:
            raise ValueError(f"defect list names unknown qubits {sorted(unknown)[:5]}")
        return replace(g, defects=dead)
    if not 0 <= working <= g.num_nodes:
        raise ValueError(f"working={working} outside [0, {g.num_nodes}]")
    if working == g.num_nodes:
        return g
    rng = np.random.default_rng(seed)
    dead = rng.choice(np.asarray(g.nodes), size=g.num_nodes - working, replace=False)
    return replace(g, defects=frozenset(int(q) for q in dead))


# -- profiles ---------------------------------------------------------------------

@dataclass(frozen=True)
class HardwareProfile:
    name: str
    family: str
    m: int
    total_qubits: int
    working_qubits: int
    min_anneal_time: float
    default_anneals_per_gauge: int
    default_gauges: int
    h_range: tuple[float, float] = (-1.0, 1.0)
    j_range: tuple[float, float] = (-1.0, 1.0)
    temperature_mk: float | None = None
    problem_sizes: tuple[int, int] = (8, 16)
    gauge_overrides: dict[int, int] = field(default_factory=dict)

    def gauges_for(self, n: int) -> int:
        return self.gauge_overrides.get(n, self.default_gauges)

    def build_graph(self, defect_seed: int = 0) -> HardwareGraph:
        g = build_chimera(self.m) if self.family == CHIMERA else build_pegasus(self.m)
        if g.num_nodes != self.total_qubits:
            raise RuntimeError(f"{self.name}: built {g.num_nodes} qubits, expected {self.total_qubits}")
        return apply_defects(g, self.working_qubits, defect_seed)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["h_range"] = list(self.h_range)
        d["j_range"] = list(self.j_range)
        d["problem_sizes"] = list(self.problem_sizes)
        d["gauge_overrides"] = {str(k): v for k, v in self.gauge_overrides.items()}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "HardwareProfile":
        data = dict(data)
        data["h_range"] = tuple(data.get("h_range", (-1.0, 1.0)))
        data["j_range"] = tuple(data.get("j_range", (-1.0, 1.0)))
        data["problem_sizes"] = tuple(data.get("problem_sizes", (8, 16)))
        data["gauge_overrides"] = {int(k): int(v) for k, v in data.get("gauge_overrides", {}).items()}
        return cls(**data)


PROFILES: dict[str, HardwareProfile] = {
    "Two": HardwareProfile(
        "Two", CHIMERA, 8, 512, 509, 20.0, 45000, 10,
        temperature_mk=13.2, problem_sizes=(8, 16),
    ),
    "2X": HardwareProfile(
        "2X", CHIMERA, 12, 1152, 1097, 5.0, 10000, 10,
        j_range=(-2.0, 1.0), temperature_mk=12.0, problem_sizes=(8, 20),
    ),
    "2000Q": HardwareProfile(
        "2000Q", CHIMERA, 16, 2048, 2031, 1.0, 10000, 10,
        h_range=(-2.0, 2.0), j_range=(-2.0, 1.0), temperature_mk=12.1, problem_sizes=(8, 24),
        gauge_overrides={18: 50, 20: 100, 22: 100, 24: 100},
    ),
    "Advantage": HardwareProfile(
        "Advantage", PEGASUS, 16, 5640, 5436, 1.0, 500, 20,
        h_range=(-4.0, 4.0), j_range=(-2.0, 1.0), temperature_mk=15.8, problem_sizes=(8, 40),
    ),
}


def get_profile(name: str) -> HardwareProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown hardware profile {name!r}; choose from {sorted(PROFILES)}") from None


def save_profile(profile: HardwareProfile, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(profile.to_dict(), indent=1, sort_keys=True) + "\n")
    return path


def load_profile(path: str | Path) -> HardwareProfile:
    return HardwareProfile.from_dict(json.loads(Path(path).read_text()))
