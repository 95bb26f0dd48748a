import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finalg.abp import BabpGate, from_sparse_poly
from finalg.circuits import (AlgebraCircuit, CircuitError, LayeredCircuit, Program, all_inputs,
                             dump_evaluable, eval_circuit, eval_layered, eval_program,
                             load_evaluable, size_of, table_hex, truth_table)
from finalg.fixtures import ex_lattice, nilpo_codec
from finalg.random_sources import random_bool_circuit, random_program

BITS3 = list(itertools.product((0, 1), repeat=3))


def lattice_formula():
    c = AlgebraCircuit(ex_lattice(), 3)
    c.output = c.op("meet", c.var(0), c.op("join", c.var(1), c.var(2)))
    return c


def test_single_var():
    c = AlgebraCircuit(ex_lattice(), 1, [("var", 0)])
    assert eval_circuit(c, (1,)) == 1 and eval_circuit(c, (0,)) == 0


def test_lattice_formula():
    c = lattice_formula()
    assert eval_circuit(c, (1, 0, 1)) == 1
    for b in BITS3:
        assert eval_circuit(c, b) == (b[0] & (b[1] | b[2]))


def test_const_circuit(fx):
    alg = fx("chain(3)")
    c = AlgebraCircuit(alg, 2, [("const", 2)])
    assert all(eval_circuit(c, xs) == 2 for xs in itertools.product(range(3), repeat=2))


def test_eval_arity_mismatch():
    with pytest.raises(CircuitError):
        eval_circuit(lattice_formula(), (1, 0))


def test_gate_must_reference_earlier():
    with pytest.raises(CircuitError):
        AlgebraCircuit(ex_lattice(), 1, [("op", "meet", (0, 1))])


def test_op_arity_respected():
    with pytest.raises(CircuitError):
        AlgebraCircuit(ex_lattice(), 1, [("var", 0), ("op", "meet", (0,))])


def and_program(accepting=(1,)):
    c = AlgebraCircuit(ex_lattice(), 2)
    c.output = c.op("meet", c.var(0), c.var(1))
    return Program(c, (0, 1), frozenset(accepting))


def test_program_and():
    assert list(truth_table(and_program())) == [False, False, False, True]


def test_program_accept_all_and_none():
    assert truth_table(and_program((0, 1))).all()
    assert not truth_table(and_program(())).any()


def test_eval_program_arity():
    with pytest.raises(CircuitError):
        eval_program(and_program(), (1,))
    assert eval_program(and_program(), (1, 1))


def test_arity_zero_program():
    c = AlgebraCircuit(ex_lattice(), 0, [("const", 1)])
    assert list(truth_table(Program(c, (0, 1), {1}))) == [True]


def test_parity_program_nilpo(fx):
    alg = fx("example-nilpo(2,2)")
    codec = nilpo_codec(2, 2)
    c = AlgebraCircuit(alg, 2)
    c.output = c.op("add", c.var(0), c.var(1))
    one = codec.encode((1, 0))
    accept = {a for a in range(alg.size) if codec.decode(a)[0] == 1}
    p = Program(c, (codec.encode((0, 0)), one), accept)
    assert table_hex(truth_table(p)) == "6"
    assert "".join(str(int(v)) for v in truth_table(p)) == "0110"


def test_truth_table_cap(monkeypatch):
    monkeypatch.setenv("FINALG_MAX_ARITY", "3")
    with pytest.raises(CircuitError):
        all_inputs(4)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["chain(3)", "boolean2", "affine(3)", "example-nilpo(2,2)"]),
       st.integers(1, 5), st.integers(1, 15), st.integers(0, 10**6))
def test_complement_closure(fid, n, size, seed):
    from finalg.fixtures import fixture
    alg = fixture(fid)
    p = random_program(alg, n, size, seed)
    comp = Program(p.circuit, p.iota, frozenset(range(alg.size)) - p.accepting)
    assert np.array_equal(truth_table(comp), ~truth_table(p))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 15), st.integers(0, 10**6))
def test_swapped_iota_flips_inputs(n, size, seed):
    from finalg.fixtures import fixture
    p = random_program(fixture("chain(3)"), n, size, seed)
    q = Program(p.circuit, p.iota[::-1], p.accepting)
    flipped = (1 << n) - 1 - np.arange(1 << n)
    assert np.array_equal(truth_table(q), truth_table(p)[flipped])


def test_mod_gates():
    lc = LayeredCircuit(3)
    lc.set_output(lc.mod(2, {1}, [0, 1, 2]))
    assert eval_layered(lc, (1, 1, 1))
    lc = LayeredCircuit(2)
    lc.set_output(lc.mod(3, {2}, [0, 1]))
    assert eval_layered(lc, (1, 1)) and not eval_layered(lc, (1, 0))


def test_and_or_not():
    lc = LayeredCircuit(2)
    lc.set_output(lc.and_([0, 1]))
    assert not eval_layered(lc, (1, 0))
    lc.set_output(lc.not_(lc.or_([0, 1])))
    assert list(truth_table(lc)) == [True, False, False, False]


def test_bound_gate_table_order():
    lc = LayeredCircuit(2)
    lc.set_output(lc.bound((0, 1, 0, 0), [0, 1]))    # true exactly at b0=1, b1=0
    assert list(truth_table(lc)) == [False, True, False, False]


def test_babp_gate():
    lc = LayeredCircuit(3)
    g = BabpGate(from_sparse_poly(2, 3, [(1, (0,)), (1, (1,)), (1, (2,))]), {1})
    lc.set_output(lc.babp(g, [0, 1, 2]))
    assert list(truth_table(lc)) == [bin(i).count("1") % 2 == 1 for i in range(8)]


def test_prog_delegation():
    p = and_program()
    lc = LayeredCircuit(2)
    lc.set_output(lc.prog(p, [0, 1]))
    assert np.array_equal(truth_table(lc), truth_table(p))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(1, 20), st.integers(0, 10**6))
def test_prog_delegation_random(n, size, seed):
    from finalg.fixtures import fixture
    p = random_program(fixture("example-nilpo(2,2)"), n, size, seed)
    lc = LayeredCircuit(n)
    lc.set_output(lc.prog(p, list(range(n))))
    assert np.array_equal(truth_table(lc), truth_table(p))


def test_size_single_mod():
    lc = LayeredCircuit(4)
    lc.set_output(lc.mod(2, {0}, [0, 1, 2, 3]))
    r = size_of(lc)
    assert (r.edges, r.gate_size_sum) == (4, 1)


def test_size_prog_counts_circuit():
    p = and_program()
    lc = LayeredCircuit(2)
    lc.set_output(lc.prog(p, [0, 1]))
    assert size_of(lc).gate_size_sum == len(p.circuit.gates)


def test_size_single_var_circuit():
    c = AlgebraCircuit(ex_lattice(), 1, [("var", 0)])
    r = c.size()
    assert (r.edges, r.total) == (0, 1)


def test_size_total_is_sum():
    lc = random_bool_circuit(5, 20, 3)
    r = size_of(lc)
    assert r.total == r.edges + r.gate_size_sum


def test_layered_rejects_bad_bound():
    lc = LayeredCircuit(2)
    with pytest.raises(CircuitError):
        lc.bound((0, 1), [0, 1])


@pytest.mark.parametrize("seed", range(5))
def test_serialization_round_trip(seed, fx):
    lc = random_bool_circuit(4, 15, seed)
    lc.set_output(lc.mod(3, {1, 2}, [lc.output, 0]))
    back = load_evaluable(json.loads(dump_evaluable(lc)))
    assert np.array_equal(truth_table(back), truth_table(lc))
    p = random_program(fx("chain(3)"), 4, 12, seed)
    back = load_evaluable(json.loads(dump_evaluable(p)))
    assert np.array_equal(truth_table(back), truth_table(p))


def test_table_hex_little_endian():
    assert table_hex([1, 0, 0, 0]) == "1"
    assert table_hex([0, 0, 0, 0, 1]) == "10"
