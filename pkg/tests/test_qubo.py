from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from annealbench.errors import FormatError, LengthMismatch
from annealbench.qubo import (Invalid, IsingProblem, QuboProblem, apply_gauge, build_coloring_qubo,
                              coloring_qubo, decode_coloring, identity_gauge, ising_energy,
                              ising_to_qubo, load_qubo, make_ising, problem_hash, qubo_energies,
                              qubo_energy, qubo_to_ising, random_gauge, save_problem, ungauge_sample)
from annealbench.instances import generate_instance
import oracles

K3 = [(0, 1), (1, 2), (0, 2)]


def one_hot(coloring, k=3):
    x = np.zeros(len(coloring) * k, dtype=int)
    for v, c in enumerate(coloring):
        x[v * k + c] = 1
    return x


def test_single_vertex_uncolored_costs_one():
    q = coloring_qubo(1, [], 3)
    assert qubo_energy(q, np.zeros(3)) == 1.0


def test_triangle_proper_coloring_is_zero():
    assert qubo_energy(coloring_qubo(3, K3), one_hot((0, 1, 2))) == 0.0


def test_same_color_edge_costs_one():
    assert qubo_energy(coloring_qubo(2, [(0, 1)]), one_hot((0, 0))) == 1.0


@given(st.integers(1, 9))
def test_all_zero_costs_n(n):
    edges = [(i, j) for i, j in itertools.combinations(range(n), 2) if (i + j) % 3]
    assert qubo_energy(coloring_qubo(n, edges), np.zeros(3 * n)) == n


def test_empty_qubo_energy_zero():
    q = QuboProblem(num_vars=4)
    assert qubo_energy(q, np.ones(4)) == 0.0


def test_energy_length_checked():
    with pytest.raises(LengthMismatch):
        qubo_energy(coloring_qubo(2, []), np.zeros(5))
    with pytest.raises(LengthMismatch):
        qubo_energies(coloring_qubo(2, []), np.zeros((2, 5)))


@st.composite
def random_qubo(draw, max_vars=10):
    n = draw(st.integers(1, max_vars))
    coef = st.integers(-4, 4).map(lambda v: v / 2)
    linear = {i: draw(coef) for i in range(n) if draw(st.booleans())}
    quadratic = {(i, j): draw(coef) for i, j in itertools.combinations(range(n), 2) if draw(st.booleans())}
    return QuboProblem(num_vars=n, linear=linear, quadratic=quadratic, offset=draw(coef))


@given(random_qubo(), st.data())
def test_energy_matches_polynomial_oracle(q, data):
    x = np.array(data.draw(st.lists(st.integers(0, 1), min_size=q.num_vars, max_size=q.num_vars)))
    assert qubo_energy(q, x) == oracles.poly_energy(q.linear, q.quadratic, q.offset, x)
    assert qubo_energies(q, x[None, :])[0] == qubo_energy(q, x)


@given(random_qubo(max_vars=8))
def test_qubo_ising_energy_agree_everywhere(q):
    ising = qubo_to_ising(q)
    for bits in itertools.product((0, 1), repeat=q.num_vars):
        s = [2 * b - 1 for b in bits]
        assert ising_energy(ising, s) == pytest.approx(qubo_energy(q, np.array(bits)), abs=1e-12)


def test_linear_term_conversion():
    ising = qubo_to_ising(QuboProblem(num_vars=1, linear={0: 1.0}))
    assert ising.h == {0: 0.5} and ising.offset == 0.5 and ising.J == {}


def test_empty_conversion():
    ising = qubo_to_ising(QuboProblem(num_vars=0))
    assert ising.h == {} and ising.J == {} and ising.offset == 0.0
    assert ising_to_qubo(ising).num_vars == 0


def test_coloring_round_trip_identical():
    q = coloring_qubo(3, K3)
    back = ising_to_qubo(qubo_to_ising(q), q.var_labels)
    assert back.linear == q.linear and back.quadratic == q.quadratic and back.offset == q.offset


@given(random_qubo(max_vars=8))
def test_round_trip_property(q):
    back = ising_to_qubo(qubo_to_ising(q))
    for bits in itertools.product((0, 1), repeat=q.num_vars):
        assert qubo_energy(back, np.array(bits)) == pytest.approx(qubo_energy(q, np.array(bits)), abs=1e-12)


def test_coloring_qubo_matches_penalty_oracle():
    g = generate_instance(5, 1.5, seed=4)
    q = build_coloring_qubo(g)
    for bits in itertools.product((0, 1), repeat=15):
        assert qubo_energy(q, np.array(bits)) == oracles.coloring_penalty(5, g.edges, 3, bits)


def test_coloring_ground_states_are_colorings_k3():
    q = coloring_qubo(3, K3)
    zero = []
    for bits in itertools.product((0, 1), repeat=9):
        x = np.array(bits)
        e = qubo_energy(q, x)
        decoded = decode_coloring(q, x)
        assert bool(decoded) == (e == 0)
        if e == 0:
            zero.append(decoded)
    assert sorted(zero) == sorted(itertools.permutations(range(3)))


def test_decode_examples():
    q = coloring_qubo(3, K3)
    assert decode_coloring(q, one_hot((0, 1, 2))) == (0, 1, 2)
    bad = decode_coloring(q, np.zeros(9))
    assert isinstance(bad, Invalid) and bad.reason == "uncolored vertex" and bad.vertex == 0
    x = one_hot((0, 1, 2))
    x[1] = 1
    assert decode_coloring(q, x).reason == "multi-colored vertex"
    clash = decode_coloring(q, one_hot((0, 0, 1)))
    assert clash.reason == "conflicting edge" and clash.edge == (0, 1)


# -- gauges ------------------------------------------------------------------------


def test_identity_gauge_is_identity():
    p = make_ising({0: 0.3, 1: -1.0}, {(0, 1): 0.7}, 0.25)
    assert apply_gauge(p, identity_gauge(p.variables)) == p


def test_single_spin_gauge():
    p = make_ising({0: 1.0}, {})
    g = identity_gauge([0])
    g.signs[0] = -1
    gp = apply_gauge(p, g)
    assert gp.h == {0: -1.0}
    ground = min((-1, 1), key=lambda s: ising_energy(gp, [s]))
    assert ground == 1
    assert ungauge_sample(np.array([ground]), g, [0])[0] == -1


@st.composite
def random_ising(draw, n):
    coef = st.integers(-8, 8).map(lambda v: v / 4)
    h = {i: draw(coef) for i in range(n)}
    J = {e: draw(coef) for e in itertools.combinations(range(n), 2) if draw(st.booleans())}
    return make_ising(h, J, draw(coef))


@given(random_ising(8), st.integers(0, 2**32))
def test_gauge_preserves_spectrum(p, seed):
    g = random_gauge(p.variables, seed)
    gp = apply_gauge(p, g)
    assert oracles.spectrum(gp.h, gp.J, gp.offset) == oracles.spectrum(p.h, p.J, p.offset)
    # each state maps to its gauge image with equal energy
    s = np.array([1, -1] * 4)
    assert ising_energy(gp, s) == pytest.approx(ising_energy(p, ungauge_sample(s, g, p.variables)))


@given(st.integers(0, 2**32))
def test_ungauge_is_involution(seed):
    g = random_gauge(range(6), seed)
    s = np.array([1, 1, -1, 1, -1, -1])
    assert (ungauge_sample(ungauge_sample(s, g), g) == s).all()


# -- identity and files ------------------------------------------------------------------


def test_problem_hash_sensitivity():
    a = coloring_qubo(3, K3)
    assert problem_hash(a) == problem_hash(coloring_qubo(3, K3))
    assert problem_hash(a) != problem_hash(coloring_qubo(3, K3[:2]))
    assert problem_hash(qubo_to_ising(a)) == qubo_to_ising(a).content_hash()


def test_save_load(tmp_path):
    q = coloring_qubo(4, [(0, 1), (2, 3)])
    assert load_qubo(save_problem(q, tmp_path / "q.json")) == q
    p = qubo_to_ising(q)
    assert IsingProblem.from_dict(p.to_dict()) == p
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(FormatError):
        load_qubo(tmp_path / "bad.json")


def test_make_ising_normalises_pairs():
    p = make_ising({}, {(2, 1): 1.0, (1, 2): 0.5})
    assert p.J == {(1, 2): 1.5} and p.variables == [1, 2]
    assert ising_energy(p, {1: 1, 2: -1}) == Fraction(-3, 2)
