"""Heuristic minor embedding, chain couplings and chain-break resolution.

The embedder grows one chain (vertex model) per logical variable.  A chain is
placed by running node-weighted shortest paths out of every already placed
neighbour chain, picking the root qubit with the smallest summed cost and
joining it to each neighbour along those paths.  Qubit weights grow
exponentially with the number of chains using the qubit, so overlaps are
allowed early on and then pushed out by ripping up and rerouting chains, where
a reroute may never worsen the overlap its chain already sits on.  Once no
qubit is shared, chains are rerouted through free qubits to shorten them.
"""
from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Mapping

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import EmbeddingNotFound, FormatError, RangeViolation
from .qubo import IsingProblem, make_ising
from .topology import HardwareGraph, HardwareProfile

log = logging.getLogger(__name__)

MAJORITY_VOTE = "majority_vote"
DISCARD = "discard"


@dataclass(frozen=True)
class Embedding:
    chains: dict[Hashable, tuple[int, ...]]
    source_hash: str = ""
    target_hash: str = ""

    def chain_lengths(self) -> list[int]:
        return [len(c) for c in self.chains.values()]

    def stats(self) -> dict:
        lengths = self.chain_lengths()
        if not lengths:
            return {"num_chains": 0, "num_qubits": 0, "max": 0, "mean": 0.0, "histogram": {}}
        return {
            "num_chains": len(lengths),
            "num_qubits": sum(lengths),
            "max": max(lengths),
            "mean": float(np.mean(lengths)),
            "histogram": dict(sorted(Counter(lengths).items())),
        }

    def to_dict(self) -> dict:
        return {
            "chains": {str(v): list(c) for v, c in sorted(self.chains.items())},
            "source_hash": self.source_hash,
            "target_hash": self.target_hash,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Embedding":
        try:
            chains = {int(v): tuple(int(q) for q in c) for v, c in data["chains"].items()}
            return cls(chains, data.get("source_hash", ""), data.get("target_hash", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed embedding document: {exc}") from exc


def save_embedding(e: Embedding, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(e.to_dict(), sort_keys=True) + "\n")
    return path


def load_embedding(path: str | Path) -> Embedding:
    try:
        return Embedding.from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise FormatError(str(exc)) from exc


def source_graph_hash(source: nx.Graph) -> str:
    edges = sorted(tuple(sorted((str(u), str(v)))) for u, v in source.edges())
    payload = json.dumps({"nodes": sorted(str(v) for v in source.nodes()), "edges": edges})
    return hashlib.sha256(payload.encode()).hexdigest()


def _as_target_graph(hardware) -> tuple[nx.Graph, str]:
    if isinstance(hardware, HardwareGraph):
        return hardware.to_networkx(usable_only=True), hardware.graph_hash()
    g = nx.Graph(hardware)
    payload = json.dumps(sorted(tuple(sorted(e)) for e in g.edges()))
    return g, hashlib.sha256(payload.encode()).hexdigest()


def interaction_graph(problem: IsingProblem) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(problem.h)
    g.add_edges_from(e for e, c in problem.J.items() if c != 0)
    return g


# -- embedding search -------------------------------------------------------------

# qubits per logical variable in the local search region
REGION_PER_VARIABLE = 16


class _Router:
    """Shortest-path chain placement over a target graph in compact 0..N-1 indices."""

    def __init__(self, target: nx.Graph, rng: np.random.Generator):
        self.qubits = sorted(target.nodes())
        self.index = {q: i for i, q in enumerate(self.qubits)}
        n = len(self.qubits)
        rows, cols = [], []
        for a, b in target.edges():
            ia, ib = self.index[a], self.index[b]
            rows += [ia, ib]
            cols += [ib, ia]
        order = np.lexsort((cols, rows))
        self.rows = np.asarray(rows, dtype=np.int64)[order]
        self.cols = np.asarray(cols, dtype=np.int64)[order]
        self.adj = [[] for _ in range(n)]
        for a, b in zip(self.rows.tolist(), self.cols.tolist()):
            self.adj[a].append(b)
        self.n = n
        self.rng = rng
        self.usage = np.zeros(n, dtype=np.int64)

    def weights(self, bound: int | None = None) -> np.ndarray:
        # overlaps dominate path length: base**fill stays below ~1e18
        top = max(int(self.usage.max()), 1)
        base = min(2.0 ** (60.0 / top), 1e6)
        w = np.power(base, self.usage.astype(float))
        if bound is not None:
            w[self.usage >= bound] = np.inf
        return w

    def _graph(self, w: np.ndarray) -> csr_matrix:
        # entering a qubit costs that qubit's weight
        data = w[self.cols]
        keep = np.isfinite(data)
        return csr_matrix((data[keep], (self.rows[keep], self.cols[keep])), shape=(self.n, self.n))

    def _pick(self, cost: np.ndarray) -> int | None:
        finite = np.isfinite(cost)
        if not finite.any():
            return None
        best = cost[finite].min()
        ties = np.flatnonzero(cost <= best * (1 + 1e-12))
        return int(ties[self.rng.integers(len(ties))])

    def place(self, neighbour_chains: list[np.ndarray], w: np.ndarray):
        """Return ``(root, paths)``; ``paths[i]`` runs from the root (excluded)
        up to, but not into, neighbour chain ``i``."""
        if not neighbour_chains:
            root = self._pick(w)
            return None if root is None else (root, [])

        graph = self._graph(w)
        total = np.zeros(self.n)
        preds = []
        for chain in neighbour_chains:
            dist, pred, _ = dijkstra(graph, directed=True, indices=chain, min_only=True,
                                     return_predecessors=True)
            inside = np.zeros(self.n, dtype=bool)
            inside[chain] = True
            # the root pays its weight once per neighbour it must reach
            total += np.where(inside, w, dist)
            preds.append((pred, inside))
        root = self._pick(total)
        if root is None:
            return None
        paths = []
        for pred, inside in preds:
            path = []
            q = root
            while not inside[q]:
                if q != root:
                    path.append(q)
                q = pred[q]
                if q < 0:
                    return None
            paths.append(path)
        return root, paths


class _Layout:
    """Chains as a core plus path segments keyed by the variable that laid them.

    When ``u`` is placed, the part of each path used only to reach neighbour
    ``v`` is handed to ``v``.  Ripping ``u`` therefore removes its core, the
    segments others laid toward it, and the segments it laid toward others,
    which frees the whole neighbourhood instead of leaving stubs behind.
    """

    def __init__(self, router: _Router, adj: dict):
        self.router = router
        self.adj = adj
        self.core: dict = {}
        self.seg: dict = {}

    def placed(self, v) -> bool:
        return v in self.core

    def members(self, v) -> set:
        out = set(self.core[v])
        for s in self.seg[v].values():
            out |= s
        return out

    def footprint(self, v) -> set:
        out = self.members(v)
        for x in self.adj[v]:
            if x in self.seg and v in self.seg[x]:
                out |= self.seg[x][v]
        return out

    def snapshot(self):
        return ({v: set(c) for v, c in self.core.items()},
                {v: {x: set(s) for x, s in d.items()} for v, d in self.seg.items()},
                self.router.usage.copy())

    def restore(self, snap):
        core, seg, usage = snap
        self.core = {v: set(c) for v, c in core.items()}
        self.seg = {v: {x: set(s) for x, s in d.items()} for v, d in seg.items()}
        self.router.usage[:] = usage

    def _touches(self, q: int, chain: set) -> bool:
        return any(p in chain for p in self.router.adj[q])

    def rip(self, u):
        usage = self.router.usage
        for q in self.members(u):
            usage[q] -= 1
        del self.core[u], self.seg[u]
        for v in self.adj[u]:
            if v in self.seg and u in self.seg[v]:
                self._trim(v, self.seg[v].pop(u))

    def _trim(self, v, dropped: set):
        """Drop ``dropped`` from chain ``v`` leaf by leaf, keeping it connected
        and keeping every remaining adjacency to placed neighbours."""
        usage = self.router.usage
        cur = self.members(v) | dropped
        nbr_chains = [self.members(x) for x in self.adj[v] if self.placed(x)]
        pending = set(dropped)
        changed = True
        while changed and pending:
            changed = False
            for q in sorted(pending):
                if len(cur) == 1:
                    break
                if sum(p in cur for p in self.router.adj[q]) > 1:
                    continue
                rest = cur - {q}
                if any(self._touches(q, c) and not any(self._touches(p, c) for p in rest)
                       for c in nbr_chains):
                    continue
                cur.discard(q)
                pending.discard(q)
                usage[q] -= 1
                changed = True
        self.core[v] |= pending

    def put(self, u, root: int, paths: list[list[int]], nbrs: list):
        usage = self.router.usage
        counts = Counter(q for path in paths for q in set(path))
        core = {root} | {q for q, c in counts.items() if c > 1}
        # grow the core along each path up to its last shared qubit
        while True:
            grew = False
            for path in paths:
                last = max((i for i, q in enumerate(path) if q in core), default=-1)
                for q in path[:last]:
                    if q not in core:
                        core.add(q)
                        grew = True
            if not grew:
                break
        self.core[u] = core
        self.seg[u] = {}
        for q in core:
            usage[q] += 1
        for v, path in zip(nbrs, paths):
            tail = [q for q in path if q not in core]
            if not tail:
                continue
            fresh = set(tail) - self.members(v)
            self.seg[v][u] = fresh
            for q in fresh:
                usage[q] += 1

    def route(self, u, bound=None) -> bool:
        nbrs = [v for v in self.adj[u] if self.placed(v)]
        chains = [np.fromiter(sorted(self.members(v)), dtype=np.int64) for v in nbrs]
        got = self.router.place(chains, self.router.weights(bound))
        if got is None:
            return False
        self.put(u, got[0], got[1], nbrs)
        return True

    def score(self) -> tuple:
        # worst overlap, overfull qubits, then longest chain and total qubits
        usage = self.router.usage
        sizes = [len(self.members(v)) for v in self.core]
        return (int(usage.max()), int(usage[usage > 1].sum()), max(sizes), int(usage.sum()))


def find_embedding(
    source,
    hardware,
    seed: int = 0,
    tries: int = 10,
    max_rounds: int = 60,
    patience: int = 8,
    shrink_patience: int = 3,
    region: int | None = None,
) -> Embedding:
    """Embed the logical graph ``source`` into ``hardware``.

    ``source`` is a networkx graph (or anything ``nx.Graph`` accepts, such as
    an edge list).  ``hardware`` is a :class:`HardwareGraph` (defective qubits
    are skipped) or a networkx graph.  Raises :class:`EmbeddingNotFound` once
    ``tries`` independent restarts have failed.

    Small sources on large targets are first routed inside a breadth-first
    ball of ``region`` qubits (default ``REGION_PER_VARIABLE`` per logical
    variable), which keeps path searches cheap; the second half of the tries
    uses the whole target.  ``region=0`` always searches the whole target.
    """
    src = source if isinstance(source, nx.Graph) else nx.Graph(source)
    target, target_hash = _as_target_graph(hardware)
    src_hash = source_graph_hash(src)
    if src.number_of_nodes() == 0:
        return Embedding({}, src_hash, target_hash)
    if src.number_of_nodes() > target.number_of_nodes():
        raise EmbeddingNotFound(
            f"{src.number_of_nodes()} logical variables cannot fit on {target.number_of_nodes()} qubits"
        )

    rng = np.random.default_rng(seed)
    if region is None:
        region = REGION_PER_VARIABLE * src.number_of_nodes()
    local = 0 < region and 2 * region <= target.number_of_nodes()
    for attempt in range(tries):
        space = target
        if local and attempt < tries // 2:
            space = _ball(target, rng, region)
        chains = _attempt(src, space, rng, max_rounds, patience, shrink_patience)
        if chains is None:
            continue
        e = Embedding(chains, src_hash, target_hash)
        problems = validate_embedding(e, src, target)
        if problems:
            log.warning("discarding inconsistent embedding: %s", problems[0])
            continue
        log.debug("embedding found on attempt %d", attempt + 1)
        return e
    raise EmbeddingNotFound(f"no embedding after {tries} tries")


def _ball(target: nx.Graph, rng: np.random.Generator, size: int) -> nx.Graph:
    """Subgraph on the first ``size`` qubits reached breadth-first from a random qubit."""
    nodes = sorted(target.nodes())
    start = nodes[int(rng.integers(len(nodes)))]
    seen = [start]
    for _, v in nx.bfs_edges(target, start):
        if len(seen) >= size:
            break
        seen.append(v)
    return target.subgraph(seen)


def _bfs_order(src: nx.Graph, rng: np.random.Generator) -> list:
    nodes = sorted(src.nodes(), key=str)
    start_order = [nodes[i] for i in rng.permutation(len(nodes))]
    seen, order = set(), []
    for start in start_order:
        if start in seen:
            continue
        seen.add(start)
        queue = [start]
        while queue:
            v = queue.pop(0)
            order.append(v)
            nbrs = sorted(src.neighbors(v), key=str)
            for i in rng.permutation(len(nbrs)):
                u = nbrs[i]
                if u not in seen:
                    seen.add(u)
                    queue.append(u)
    return order


def _attempt(src: nx.Graph, target: nx.Graph, rng, max_rounds: int, patience: int,
             shrink_patience: int):
    router = _Router(target, rng)
    adj = {v: sorted(src.neighbors(v), key=str) for v in src.nodes()}
    lay = _Layout(router, adj)

    order = _bfs_order(src, rng)
    for v in order:
        if not lay.route(v):
            return None

    best, best_snap = lay.score(), lay.snapshot()
    stale = 0
    for _ in range(max_rounds):
        if best[0] <= 1:
            break
        # a reroute may not raise the worst overlap its chain already sees,
        # except in the occasional free pass used to escape stagnation
        free_pass = stale > 0 and stale % 3 == 0
        for i in rng.permutation(len(order)):
            v = order[i]
            bound = None if free_pass else int(router.usage[list(lay.footprint(v))].max())
            snap = lay.snapshot()
            lay.rip(v)
            if not lay.route(v, bound):
                if bound is None:
                    return None
                lay.restore(snap)
        score = lay.score()
        if score < best:
            best, best_snap, stale = score, lay.snapshot(), 0
        else:
            stale += 1
            if stale >= patience:
                break
    if best[0] > 1:
        return None

    # shorten chains through free qubits only, keeping moves that do not
    # lengthen the longest chain or add qubits
    lay.restore(best_snap)
    stale = 0
    while stale < shrink_patience:
        for i in rng.permutation(len(order)):
            v = order[i]
            snap = lay.snapshot()
            before = lay.score()
            lay.rip(v)
            if not lay.route(v, bound=1) or lay.score()[2:] > before[2:]:
                lay.restore(snap)
        score = lay.score()
        if score < best:
            best, best_snap, stale = score, lay.snapshot(), 0
        else:
            stale += 1
    lay.restore(best_snap)
    return {v: tuple(router.qubits[i] for i in sorted(lay.members(v))) for v in sorted(lay.core, key=str)}


def validate_embedding(e: Embedding, source, hardware) -> list[str]:
    """Return a list of violations (empty when the embedding is valid)."""
    src = source if isinstance(source, nx.Graph) else nx.Graph(source)
    target, _ = _as_target_graph(hardware)
    problems = []
    owner: dict[int, Hashable] = {}
    for v in src.nodes():
        chain = e.chains.get(v)
        if not chain:
            problems.append(f"variable {v!r} has no chain")
            continue
        for q in chain:
            if q not in target:
                problems.append(f"chain {v!r} uses unusable qubit {q}")
            elif q in owner:
                problems.append(f"qubit {q} shared by {owner[q]!r} and {v!r}")
            else:
                owner[q] = v
        sub = target.subgraph(q for q in chain if q in target)
        if sub.number_of_nodes() and not nx.is_connected(sub):
            problems.append(f"chain {v!r} is disconnected")
    for u, v in src.edges():
        cu, cv = e.chains.get(u, ()), e.chains.get(v, ())
        if not any(target.has_edge(a, b) for a in cu for b in cv):
            problems.append(f"no coupler between chains {u!r} and {v!r}")
    return problems


# -- embedded problems ---------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddedIsing:
    """Physical Ising problem; ``exact_h``/``exact_J`` keep the rational coefficients."""

    ising: IsingProblem
    embedding: Embedding
    chain_couplers: tuple[tuple[int, int], ...]
    j_f: float
    scale: Fraction
    exact_h: dict[int, Fraction] = field(repr=False, default_factory=dict)
    exact_J: dict[tuple[int, int], Fraction] = field(repr=False, default_factory=dict)
    exact_offset: Fraction = Fraction(0)

    @property
    def h(self):
        return self.ising.h

    @property
    def J(self):
        return self.ising.J

    @property
    def variables(self) -> list[int]:
        return self.ising.variables

    def exact_energy(self, spins: Mapping[int, int]) -> Fraction:
        e = self.exact_offset
        for q, c in self.exact_h.items():
            e += c * spins[q]
        for (a, b), c in self.exact_J.items():
            e += c * spins[a] * spins[b]
        return e


def embed_ising(
    problem: IsingProblem,
    e: Embedding,
    j_f: float,
    profile: HardwareProfile | None,
    hardware,
) -> EmbeddedIsing:
    """Spread a logical Ising problem over its chains.

    Fields are split equally over a chain's qubits and couplings equally over
    all couplers joining the two chains.  Logical coefficients are then scaled
    by 1 / max(1, largest physical magnitude); ``j_f`` is in hardware units
    and is not rescaled.  Every coupler inside a chain carries ``j_f``.
    """
    if j_f >= 0:
        raise ValueError(f"chain coupling must be ferromagnetic (negative), got {j_f}")
    if profile is not None:
        lo, hi = profile.j_range
        if not lo <= j_f <= hi:
            raise RangeViolation(f"j_f={j_f} outside {profile.name} coupling range [{lo}, {hi}]")
    target, _ = _as_target_graph(hardware)

    h: dict[int, Fraction] = {}
    J: dict[tuple[int, int], Fraction] = {}
    for v, c in problem.h.items():
        chain = e.chains[v]
        share = Fraction(c) / len(chain)
        for q in chain:
            h[q] = h.get(q, Fraction(0)) + share
    for (u, v), c in problem.J.items():
        if c == 0:
            continue
        links = [
            (a, b) if a < b else (b, a)
            for a in e.chains[u] for b in e.chains[v] if target.has_edge(a, b)
        ]
        if not links:
            raise ValueError(f"embedding has no coupler between chains {u!r} and {v!r}")
        share = Fraction(c) / len(links)
        for key in links:
            J[key] = J.get(key, Fraction(0)) + share

    largest = max([abs(x) for x in h.values()] + [abs(x) for x in J.values()] + [Fraction(1)])
    scale = 1 / largest
    h = {q: c * scale for q, c in h.items()}
    J = {k: c * scale for k, c in J.items()}

    jf = Fraction(j_f)
    chain_couplers = []
    for v, chain in e.chains.items():
        members = set(chain)
        for a in chain:
            for b in target.neighbors(a):
                if b in members and a < b:
                    chain_couplers.append((a, b))
    for key in chain_couplers:
        J[key] = J.get(key, Fraction(0)) + jf
    offset = Fraction(problem.offset) * scale

    if profile is not None:
        hlo, hhi = profile.h_range
        jlo, jhi = profile.j_range
        if any(not hlo <= x <= hhi for x in h.values()) or any(not jlo <= x <= jhi for x in J.values()):
            raise RangeViolation("scaled coefficients exceed the hardware range")

    ising = make_ising({q: float(c) for q, c in h.items()},
                       {k: float(c) for k, c in J.items()}, float(offset))
    return EmbeddedIsing(
        ising=ising,
        embedding=e,
        chain_couplers=tuple(sorted(chain_couplers)),
        j_f=float(j_f),
        scale=scale,
        exact_h=h,
        exact_J=J,
        exact_offset=offset,
    )


def extend_sample(logical: Mapping[Hashable, int], e: Embedding) -> dict[int, int]:
    """Copy each logical spin onto every qubit of its chain."""
    return {q: int(logical[v]) for v, chain in e.chains.items() for q in chain}


# -- chain breaks ----------------------------------------------------------------------

@dataclass(frozen=True)
class BreakReport:
    broken: tuple
    fraction: float
    discarded: bool = False


def decode_embedded_sample(
    sample: Mapping[int, int],
    e: Embedding,
    policy: str = MAJORITY_VOTE,
    seed: int = 0,
) -> tuple[dict | None, BreakReport]:
    """Resolve one physical sample to logical spins.

    Under ``discard`` a sample with any broken chain yields ``None``.
    Majority-vote ties are settled by a coin drawn from ``seed``.
    """
    if policy not in (MAJORITY_VOTE, DISCARD):
        raise ValueError(f"unknown chain-break policy {policy!r}")
    rng = np.random.default_rng(seed)
    logical, broken = {}, []
    for v in sorted(e.chains, key=str):
        spins = [sample[q] for q in e.chains[v]]
        total = sum(spins)
        if abs(total) != len(spins):
            broken.append(v)
        if total > 0:
            logical[v] = 1
        elif total < 0:
            logical[v] = -1
        else:
            logical[v] = 1 if rng.random() < 0.5 else -1
    fraction = len(broken) / len(e.chains) if e.chains else 0.0
    if policy == DISCARD and broken:
        return None, BreakReport(tuple(broken), fraction, discarded=True)
    return logical, BreakReport(tuple(broken), fraction)


def decode_embedded_samples(
    spins: np.ndarray,
    physical_vars: list[int],
    e: Embedding,
    logical_vars: list,
    policy: str = MAJORITY_VOTE,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised chain resolution for a (reads, qubits) spin matrix.

    Returns ``(logical spins, break fraction per read, kept mask)``.
    """
    if policy not in (MAJORITY_VOTE, DISCARD):
        raise ValueError(f"unknown chain-break policy {policy!r}")
    spins = np.asarray(spins)
    col = {q: i for i, q in enumerate(physical_vars)}
    rng = np.random.default_rng(seed)
    reads = spins.shape[0]
    out = np.empty((reads, len(logical_vars)), dtype=np.int8)
    broken = np.zeros(reads, dtype=np.int64)
    for j, v in enumerate(logical_vars):
        idx = [col[q] for q in e.chains[v]]
        total = spins[:, idx].sum(axis=1, dtype=np.int64)
        broken += np.abs(total) != len(idx)
        coin = np.where(rng.random(reads) < 0.5, 1, -1)
        out[:, j] = np.where(total > 0, 1, np.where(total < 0, -1, coin))
    fraction = broken / max(len(logical_vars), 1)
    kept = np.ones(reads, dtype=bool) if policy == MAJORITY_VOTE else broken == 0
    return out, fraction, kept
