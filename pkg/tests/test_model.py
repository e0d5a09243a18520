"""Tests for the discrete and binary model types."""
import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqmforge.errors import InputError
from dqmforge.model import (
    BinaryModel,
    DiscreteModel,
    Encoding,
    EncodingMeta,
    Vartype,
    binary_energy,
    bits_to_spins,
    dqm_energy,
    spins_to_bits,
    to_binary,
    to_spin,
)
from dqmforge.problems import Graph, coloring_dqm


def brute_qubo_energy(Q: dict, offset: float, b) -> float:
    """Independent evaluation of sum Q_ij b_i b_j (diagonal = linear)."""
    return offset + sum(v * b[i] * b[j] for (i, j), v in Q.items())


def random_qubo(rng, n, density=0.7):
    lin = {i: float(rng.normal()) for i in range(n)}
    quad = {(i, j): float(rng.normal()) for i, j in itertools.combinations(range(n), 2) if rng.random() < density}
    return BinaryModel(n, Vartype.BINARY, lin, quad, float(rng.normal()))


class TestDiscreteModel:
    def test_single_linear_term(self):
        m = DiscreteModel.from_terms(1, 2, [(0, 1, 2.0)])
        assert dqm_energy(m, [1]) == 2.0

    def test_zero_model(self):
        m = DiscreteModel(3, 4)
        for a in itertools.product(range(4), repeat=3):
            assert dqm_energy(m, a) == 0.0

    def test_triangle_proper_coloring(self):
        m = coloring_dqm(Graph(3, [(0, 1), (1, 2), (0, 2)]), 3)
        assert dqm_energy(m, [0, 1, 2]) == 0.0

    def test_flips_reversed_pairs(self):
        m = DiscreteModel(2, 3, quadratic={(1, 0, 2, 1): 5.0})
        assert dict(m.quadratic) == {(0, 1, 1, 2): 5.0}
        assert dqm_energy(m, [1, 2]) == 5.0
        assert dqm_energy(m, [2, 1]) == 0.0

    def test_duplicates_summed_zeros_dropped(self):
        m = DiscreteModel.from_terms(2, 2, [(0, 0, 1.0), (0, 0, -1.0)], [(0, 1, 0, 0, 2.0), (1, 0, 0, 0, 1.0)])
        assert dict(m.linear) == {}
        assert dict(m.quadratic) == {(0, 1, 0, 0): 3.0}

    def test_self_interaction_rejected(self):
        with pytest.raises(InputError):
            DiscreteModel(2, 2, quadratic={(1, 1, 0, 1): 1.0})

    @pytest.mark.parametrize("n,m", [(0, 2), (2, 1)])
    def test_bad_sizes(self, n, m):
        with pytest.raises(InputError):
            DiscreteModel(n, m)

    def test_out_of_range_index(self):
        with pytest.raises(InputError):
            DiscreteModel(2, 2, linear={(2, 0): 1.0})

    def test_assignment_checks(self):
        m = DiscreteModel(2, 3)
        with pytest.raises(InputError):
            dqm_energy(m, [0])
        with pytest.raises(InputError):
            dqm_energy(m, [0, 3])

    def test_vectorised_energies_match(self):
        rng = np.random.default_rng(1)
        terms = [(i, j, a, b, float(rng.normal())) for i, j in [(0, 1), (1, 2), (0, 2)] for a in range(3)
                 for b in range(3)]
        m = DiscreteModel.from_terms(3, 3, [(i, a, float(rng.normal())) for i in range(3) for a in range(3)], terms)
        assignments = np.array(list(itertools.product(range(3), repeat=3)))
        expected = [dqm_energy(m, a) for a in assignments]
        assert np.allclose(m.energies(assignments), expected, atol=1e-12)

    def test_json_round_trip(self):
        m = DiscreteModel.from_terms(2, 3, [(0, 2, 1.5)], [(0, 1, 1, 2, -0.5)])
        payload = json.loads(json.dumps(m.to_json()))
        assert set(payload) == {"n", "m", "linear", "quadratic"}
        assert DiscreteModel.from_json(payload) == m

    def test_json_missing_field_named(self):
        with pytest.raises(InputError, match="'m'"):
            DiscreteModel.from_json({"n": 2, "linear": [], "quadratic": []})

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_insertion_order_invariance(self, data):
        n, m = 3, 3
        keys = [(i, j, a, b) for i, j in itertools.combinations(range(n), 2) for a in range(m) for b in range(m)]
        chosen = data.draw(st.lists(st.sampled_from(keys), min_size=1, max_size=12, unique=True))
        values = data.draw(st.lists(st.integers(-5, 5), min_size=len(chosen), max_size=len(chosen)))
        terms = [(*k, float(v)) for k, v in zip(chosen, values)]
        perm = data.draw(st.permutations(terms))
        a = DiscreteModel.from_terms(n, m, quadratic=terms)
        b = DiscreteModel.from_terms(n, m, quadratic=perm)
        for asg in itertools.product(range(m), repeat=n):
            assert dqm_energy(a, asg) == dqm_energy(b, asg)


class TestBinaryModel:
    def test_offset_only(self):
        q = BinaryModel(2, Vartype.BINARY, offset=3.0)
        assert binary_energy(q, [0, 0]) == 3.0

    def test_qubo_pair(self):
        q = BinaryModel(2, Vartype.BINARY, quadratic={(0, 1): 1.0})
        assert binary_energy(q, [1, 1]) == 1.0

    def test_ferromagnetic_pair(self):
        s = BinaryModel(2, Vartype.SPIN, quadratic={(0, 1): -1.0})
        assert binary_energy(s, [1, 1]) == -1.0

    def test_self_loop_rejected(self):
        with pytest.raises(InputError):
            BinaryModel(2, Vartype.SPIN, quadratic={(1, 1): 1.0})

    def test_canonical_pairs(self):
        s = BinaryModel(3, Vartype.SPIN, quadratic={(2, 0): 1.0, (0, 2): 0.5})
        assert dict(s.quadratic) == {(0, 2): 1.5}

    @pytest.mark.parametrize("config", [[0, 2], [0], [-1, 1]])
    def test_config_checks(self, config):
        q = BinaryModel(2, Vartype.BINARY)
        with pytest.raises(InputError):
            binary_energy(q, config)

    def test_json_round_trip_with_meta(self):
        meta = EncodingMeta.standard(Encoding.DOMAIN_WALL, 2, 3, 1.5)
        s = BinaryModel(4, Vartype.SPIN, {0: 1.0}, {(1, 3): -2.0}, 0.25, meta)
        payload = json.loads(json.dumps(s.to_json()))
        assert payload["vartype"] == "SPIN"
        back = BinaryModel.from_json(payload)
        assert back == s
        assert back.meta.var_layout == meta.var_layout


class TestConversions:
    def test_single_field(self):
        s = to_spin(BinaryModel(1, Vartype.BINARY, {0: 1.0}))
        assert dict(s.linear) == {0: -0.5}
        assert s.offset == 0.5
        assert binary_energy(s, [-1]) == 1.0

    def test_product(self):
        s = to_spin(BinaryModel(2, Vartype.BINARY, quadratic={(0, 1): 1.0}))
        assert dict(s.quadratic) == {(0, 1): 0.25}
        assert dict(s.linear) == {0: -0.25, 1: -0.25}
        assert s.offset == 0.25

    def test_wrong_vartype(self):
        with pytest.raises(InputError):
            to_spin(BinaryModel(1, Vartype.SPIN))
        with pytest.raises(InputError):
            to_binary(BinaryModel(1, Vartype.BINARY))

    def test_random_qubo_exhaustive(self):
        rng = np.random.default_rng(4)
        q = random_qubo(rng, 4)
        s = to_spin(q)
        Q = {(i, i): v for i, v in q.linear.items()} | dict(q.quadratic)
        for b in itertools.product((0, 1), repeat=4):
            z = [1 - 2 * x for x in b]
            ref = brute_qubo_energy(Q, q.offset, b)
            assert binary_energy(q, b) == pytest.approx(ref, abs=1e-12)
            assert binary_energy(s, z) == pytest.approx(ref, abs=1e-9)

    def test_round_trip_random(self):
        rng = np.random.default_rng(5)
        q = random_qubo(rng, 4)
        back = to_binary(to_spin(q))
        for b in itertools.product((0, 1), repeat=4):
            assert binary_energy(back, b) == pytest.approx(binary_energy(q, b), abs=1e-9)

    def test_zero_and_offset_models(self):
        zero = BinaryModel(3, Vartype.BINARY)
        assert to_binary(to_spin(zero)) == zero
        off = BinaryModel(2, Vartype.BINARY, offset=-4.5)
        back = to_binary(to_spin(off))
        assert back.offset == -4.5 and not back.linear and not back.quadratic

    def test_meta_preserved(self):
        meta = EncodingMeta.standard(Encoding.ONE_HOT, 1, 2, 1.0)
        q = BinaryModel(2, Vartype.BINARY, {0: 1.0}, meta=meta)
        assert to_spin(q).meta == meta

    def test_bit_spin_maps(self):
        assert list(spins_to_bits(np.array([1, -1]))) == [0, 1]
        assert list(bits_to_spins(np.array([0, 1]))) == [1, -1]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
    def test_energy_equivalence_property(self, n, seed):
        rng = np.random.default_rng(seed)
        q = random_qubo(rng, n)
        s = to_spin(q)
        bits = rng.integers(0, 2, size=(64, n))
        assert np.allclose(q.energies(bits), s.energies(bits_to_spins(bits)), atol=1e-9)
        assert np.allclose(to_binary(s).energies(bits), q.energies(bits), atol=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_canonicalisation_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        s = to_spin(random_qubo(rng, 5))
        again = BinaryModel(s.num_vars, s.vartype, dict(s.linear), dict(s.quadratic), s.offset)
        assert again == s.canonical() == s
