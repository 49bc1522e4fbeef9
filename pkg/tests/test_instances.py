from __future__ import annotations

import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from annealbench.errors import InstanceInfeasible, SizeTooLarge
from annealbench.instances import (DEFAULT_DENSITY, class_sizes, colorable, generate_ensemble,
                                   generate_instance, is_proper_coloring, load_ensemble,
                                   load_instance, max_cross_class_pairs, save_ensemble,
                                   save_instance, split_seed, target_edge_count, verify_colorable)
from oracles import proper_colorings


def test_edge_count_follows_density():
    g = generate_instance(8, DEFAULT_DENSITY, seed=3)
    assert g.num_edges == target_edge_count(8, DEFAULT_DENSITY) == 18


def test_target_edge_count_rounds_half_up():
    assert target_edge_count(8, 4.5) == 36
    assert target_edge_count(10, 2.25) == 23
    assert target_edge_count(2, 4.5) == 9


def test_average_degree_target_is_infeasible_for_small_graphs():
    # 36 edges cannot fit into the 21 cross-class pairs of an 8-vertex 3-partition
    assert max_cross_class_pairs(8) == 21
    with pytest.raises(InstanceInfeasible):
        generate_instance(8, 4.5, seed=0)


def test_two_vertices_infeasible():
    with pytest.raises(InstanceInfeasible):
        generate_instance(2, 4.5, seed=0)


def test_class_sizes_balanced():
    assert class_sizes(8) == [3, 3, 2]
    assert class_sizes(9) == [3, 3, 3]
    # Turan bound for 3-partite graphs
    for n in range(3, 20):
        assert max_cross_class_pairs(n) == max(
            a * b + b * c + a * c for a in range(n + 1) for b in range(n + 1 - a) for c in [n - a - b])


@given(n=st.integers(7, 16), seed=st.integers(0, 2**32))
def test_hidden_coloring_is_proper(n, seed):
    g = generate_instance(n, DEFAULT_DENSITY, seed)
    assert is_proper_coloring(g.n, g.edges, g.hidden_coloring)
    assert len(set(g.edges)) == g.num_edges
    assert all(0 <= i < j < n for i, j in g.edges)


@given(n=st.integers(7, 14), seed=st.integers(0, 2**32))
def test_generated_instances_colorable(n, seed):
    g = generate_instance(n, DEFAULT_DENSITY, seed)
    ok, witness = verify_colorable(g)
    assert ok and is_proper_coloring(g.n, g.edges, witness)


def test_colorable_small_cases():
    assert colorable(3, [(0, 1), (1, 2), (0, 2)], 3)[0]
    k4 = list(itertools.combinations(range(4), 2))
    assert colorable(4, k4, 3) == (False, None)
    assert colorable(4, k4, 4)[0]


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=12))))
def test_colorable_agrees_with_enumeration(case):
    n, raw = case
    edges = sorted({(min(a, b), max(a, b)) for a, b in raw if a != b})
    for k in (2, 3):
        ok, witness = colorable(n, edges, k)
        assert ok == bool(proper_colorings(n, edges, k))
        if ok:
            assert is_proper_coloring(n, edges, witness)


def test_colorable_size_limit():
    with pytest.raises(SizeTooLarge):
        colorable(31, [], 3)


def test_ensemble_counts_and_determinism(tmp_path):
    graphs = generate_ensemble(range(8, 17, 2), 100)
    assert len(graphs) == 500
    assert all(sum(g.n == n for g in graphs) == 100 for n in range(8, 17, 2))
    assert len(generate_ensemble([8], 1)) == 1
    a = save_ensemble(generate_ensemble([8, 10], 5, master_seed=7), tmp_path / "a", 7)
    b = save_ensemble(generate_ensemble([8, 10], 5, master_seed=7), tmp_path / "b", 7)
    assert a.read_bytes() == b.read_bytes()
    for p in sorted((tmp_path / "a").glob("n*/*.json")):
        assert p.read_bytes() == (tmp_path / "b" / p.relative_to(tmp_path / "a")).read_bytes()


def test_ensemble_seeds_differ():
    graphs = generate_ensemble([10], 20, master_seed=1)
    assert len({g.edges for g in graphs}) == 20
    assert graphs[3].seed == split_seed(1, 10, 3)


def test_round_trip(tmp_path):
    g = generate_instance(9, seed=11)
    assert load_instance(save_instance(g, tmp_path / "g.json")) == g
    graphs = generate_ensemble([8, 9], 3, master_seed=2)
    save_ensemble(graphs, tmp_path / "ens", 2)
    loaded, manifest = load_ensemble(tmp_path / "ens")
    assert loaded == graphs and manifest["master_seed"] == 2


def test_rejects_unknown_format(tmp_path):
    g = generate_instance(8, seed=0).to_dict()
    g["format_version"] = 99
    (tmp_path / "x.json").write_text(json.dumps(g))
    with pytest.raises(ValueError):
        load_instance(tmp_path / "x.json")


def test_split_seed_is_64_bit_and_key_sensitive():
    s = {split_seed(0, a, b) for a in range(5) for b in range(5)}
    assert len(s) == 25 and all(0 <= v < 2**64 for v in s)
