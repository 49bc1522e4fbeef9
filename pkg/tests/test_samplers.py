from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealbench.embedding import Embedding, embed_ising
from annealbench.errors import FormatError, HashMismatch, SizeTooLarge
from annealbench.instances import generate_instance
from annealbench.qubo import build_coloring_qubo, make_ising, qubo_to_ising
from annealbench.samplers import (EXACT, REPLAY, SIMULATED_ANNEALING, SamplerConfig, audit_energies,
                                  beta_schedule, ising_energies, load_samples, sample, sample_exact,
                                  sample_replay, sample_sa, save_samples)
from annealbench.topology import build_chimera
import oracles


def _ground_set(res):
    return {tuple(int(x) for x in row) for row in res.ground_states}


def test_ferromagnetic_pair():
    res = sample_exact(make_ising({0: 0.0, 1: 0.0}, {(0, 1): -1.0}))
    assert res.ground_energy == -1.0 and _ground_set(res) == {(1, 1), (-1, -1)}


def test_single_spin_field():
    res = sample_exact(make_ising({0: 1.0}, {}))
    assert res.ground_energy == -1.0 and _ground_set(res) == {(-1,)}


def test_triangle_coloring_ground_states():
    ising = qubo_to_ising(build_coloring_qubo(generate_instance(3, 1.0, seed=0)))
    res = sample_exact(ising)
    assert res.ground_energy == pytest.approx(0.0, abs=1e-12)
    assert res.degeneracy == 6


@st.composite
def small_ising(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    coef = st.integers(-4, 4).map(lambda v: v / 2)
    h = {i: draw(coef) for i in range(n)}
    J = {e: draw(coef) for e in itertools.combinations(range(n), 2) if draw(st.booleans())}
    return make_ising(h, J, draw(coef))


@settings(max_examples=30)
@given(small_ising())
def test_exact_matches_enumeration_oracle(p):
    best, states = oracles.ground_states(p.h, p.J, p.offset)
    res = sample_exact(p)
    assert res.ground_energy == pytest.approx(float(best))
    assert _ground_set(res) == set(states)


def test_exact_size_limit():
    with pytest.raises(SizeTooLarge):
        sample_exact(make_ising({i: 0.0 for i in range(31)}, {}))


def test_sa_on_trivially_embedded_triangle():
    ising = qubo_to_ising(build_coloring_qubo(generate_instance(3, 1.0, seed=0)))
    ground = sample_exact(ising).ground_energy
    cfg = SamplerConfig(SIMULATED_ANNEALING, anneal_time_us=1.0, sweeps_per_us=100, num_reads=100)
    ss = sample_sa(ising, cfg)
    p_gs = np.mean(np.abs(ss.energies - ground) < 1e-9)
    assert p_gs > 0.5


def test_sa_without_couplings_is_unbiased():
    n, reads = 20, 200
    cfg = SamplerConfig(SIMULATED_ANNEALING, anneal_time_us=0.1, sweeps_per_us=10, num_reads=reads)
    ss = sample_sa(make_ising({i: 0.0 for i in range(n)}, {}), cfg)
    total = ss.spins.astype(float).sum()
    sigma = np.sqrt(n * reads)
    assert abs(total) < 5 * sigma


def test_sa_deterministic_and_seed_sensitive():
    p = qubo_to_ising(build_coloring_qubo(generate_instance(7, seed=1)))
    cfg = SamplerConfig(SIMULATED_ANNEALING, anneal_time_us=0.5, num_reads=20, num_gauges=3, seed=9)
    a, b = sample_sa(p, cfg), sample_sa(p, cfg)
    assert (a.spins == b.spins).all() and (a.energies == b.energies).all()
    c = sample_sa(p, SamplerConfig(SIMULATED_ANNEALING, anneal_time_us=0.5, num_reads=20, num_gauges=3, seed=10))
    assert not (a.spins == c.spins).all()


def test_sa_gauged_energies_are_original_energies():
    p = qubo_to_ising(build_coloring_qubo(generate_instance(7, seed=2)))
    ss = sample_sa(p, SamplerConfig(SIMULATED_ANNEALING, anneal_time_us=0.2, num_reads=10, num_gauges=4))
    assert audit_energies(ss, p) < 1e-9
    assert (ss.gauge_index == np.repeat(np.arange(4), 10)).all()
    assert ss.metadata["num_sweeps"] == 20


def test_sa_on_embedded_problem():
    p = make_ising({0: 0.5, 1: -0.5}, {(0, 1): 1.0})
    emb = embed_ising(p, Embedding({0: (0, 4), 1: (1, 5)}), -1.0, None, build_chimera(1))
    ss = sample(emb, SamplerConfig(SIMULATED_ANNEALING, anneal_time_us=1.0, num_reads=20))
    assert ss.variables == [0, 1, 4, 5]
    assert np.isclose(ss.lowest_energy(), sample_exact(emb).ground_energy)


def test_exact_dispatch():
    ss = sample(make_ising({0: 0.0, 1: 0.0}, {(0, 1): -1.0}), SamplerConfig(EXACT))
    assert len(ss) == 2 and (ss.energies == -1.0).all()


def test_config_validation_and_sweeps():
    assert SamplerConfig(anneal_time_us=5, sweeps_per_us=100).num_sweeps == 500
    assert SamplerConfig(anneal_time_us=0.001, sweeps_per_us=1).num_sweeps == 1
    for bad in ({"kind": "qpu"}, {"num_reads": 0}, {"num_gauges": 0}, {"anneal_time_us": 0},
                {"sweeps_per_us": -1}, {"beta_start": 2, "beta_end": 1}):
        with pytest.raises(ValueError):
            SamplerConfig(**bad)
    cfg = SamplerConfig(num_reads=7, seed=3)
    assert SamplerConfig.from_dict(cfg.to_dict()) == cfg


def test_beta_schedule_geometric():
    b = beta_schedule(SamplerConfig(anneal_time_us=1, sweeps_per_us=5, beta_start=0.1, beta_end=10))
    assert b[0] == pytest.approx(0.1) and b[-1] == pytest.approx(10)
    assert np.allclose(b[1:] / b[:-1], b[1] / b[0])


def test_vectorised_energies_match_scalar():
    p = qubo_to_ising(build_coloring_qubo(generate_instance(7, seed=5)))
    rng = np.random.default_rng(0)
    s = rng.choice([-1, 1], size=(8, p.num_spins))
    for row, e in zip(s, ising_energies(p, s)):
        assert e == pytest.approx(p.energy(row))


# -- sample files ------------------------------------------------------------------


@pytest.fixture
def recorded(tmp_path):
    p = qubo_to_ising(build_coloring_qubo(generate_instance(7, seed=3)))
    ss = sample_sa(p, SamplerConfig(SIMULATED_ANNEALING, anneal_time_us=0.2, num_reads=6, num_gauges=2))
    return p, ss, save_samples(ss, tmp_path / "s.jsonl")


def test_replay_is_byte_identical(recorded, tmp_path):
    p, ss, path = recorded
    again = sample_replay(path, p)
    assert (again.spins == ss.spins).all() and (again.energies == ss.energies).all()
    assert save_samples(again, tmp_path / "again.jsonl").read_bytes() == path.read_bytes()
    assert len(sample(p, SamplerConfig(REPLAY), path)) == len(ss)


def test_replay_hash_mismatch(recorded):
    _, _, path = recorded
    other = qubo_to_ising(build_coloring_qubo(generate_instance(7, seed=4)))
    with pytest.raises(HashMismatch):
        sample_replay(path, other)


def test_truncated_and_malformed_files(recorded, tmp_path):
    _, _, path = recorded
    text = path.read_text()
    cut = tmp_path / "cut.jsonl"
    cut.write_text(text[:-1])
    with pytest.raises(FormatError):
        load_samples(cut)
    short = tmp_path / "short.jsonl"
    short.write_text("\n".join(text.splitlines()[:-1]) + "\n")
    with pytest.raises(FormatError):
        load_samples(short)
    bad = tmp_path / "bad.jsonl"
    lines = text.splitlines()
    lines[2] = lines[2].replace('"spins": "', '"spins": "x')
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_samples(bad)
    (tmp_path / "hdr.jsonl").write_text('{"format": "other"}\n')
    with pytest.raises(FormatError):
        load_samples(tmp_path / "hdr.jsonl")
