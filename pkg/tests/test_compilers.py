import operator

import numpy as np
import pytest

from finalg.abp import BabpGate, constant, from_sparse_poly
from finalg.circuits import AlgebraCircuit, LayeredCircuit, Program, truth_table
from finalg.compilers import (CompileError, combine_product_programs, compile_abp_to_detalg,
                              compile_affine_simple, compile_bool_to_type3,
                              compile_bool_via_incomparable, compile_bool_via_mixed_types,
                              compile_cc_to_nilpotent, compile_detalg_to_abp,
                              compile_itdet_to_solvable, compile_mixed, compile_nilpotent_full,
                              compile_nilpotent_step, compile_solvable_full, compile_solvable_step,
                              demorgan, extract_multimonotone, find_incomparable_kit,
                              find_mixed_kit, flatten_and_mod_and, lift_program_quotient,
                              lift_program_subalgebra, ordered_factors)
from finalg.congruence import Congruence, quotient_algebra
from finalg.core_algebra import make_algebra
from finalg.fixtures import ex_lattice, nilpo_codec, nudet_codec
from finalg.local import totally_ordered_check
from finalg.passes import bundled_coords, type_chain
from finalg.random_sources import (random_babp, random_bool_circuit, random_cc,
                                   random_itdet, random_program)
from finalg.reps import chain_reps, find_boolean_kit, module_rep

from conftest import same_table

SEEDS = range(12)


def const_program(alg, n, value, accepting):
    return Program(AlgebraCircuit(alg, n, [("const", value)]), (0, 1), accepting)


def lattice_program(op, n=2, iota=(0, 1), accepting=(1,)):
    c = AlgebraCircuit(ex_lattice(), n)
    c.output = c.op(op, c.var(0), c.var(1))
    return Program(c, iota, frozenset(accepting))


def xor_circuit():
    lc = LayeredCircuit(2)
    a = lc.and_([0, lc.not_(1)])
    b = lc.and_([lc.not_(0), 1])
    return lc.set_output(lc.or_([a, b]))


# ----------------------------------------------------------------- transports

def test_lift_identity_embedding(fx):
    p = random_program(fx("chain(3)"), 4, 10, 0)
    q = lift_program_subalgebra(p, p.algebra, [0, 1, 2])
    assert same_table(p, q)


@pytest.mark.parametrize("emb", [[0, 1], [0, 2], [1, 2]])
def test_lift_lattice_into_chain(fx, emb):
    chain3 = fx("chain(3)")
    small = make_algebra("L", 2, [("meet", 2, [0, 0, 0, 1]), ("join", 2, [0, 1, 1, 1])])
    for seed in SEEDS:
        p = random_program(small, 6, 15, seed)
        assert same_table(p, lift_program_subalgebra(p, chain3, emb))


def test_lift_rejects_non_restriction(fx):
    p = lattice_program("meet")
    with pytest.raises(CompileError):
        lift_program_subalgebra(p, fx("chain(3)"), [1, 0])


def test_lift_quotient_zero(fx):
    alg = fx("example-nilpo(2,2)")
    p = random_program(alg, 4, 12, 1)
    q = lift_program_quotient(p, alg, Congruence.zero(alg.size))
    assert same_table(p, q)


def test_lift_quotient_nilpo(fx):
    alg = fx("example-nilpo(2,2)")
    c = nilpo_codec(2, 2)
    theta = Congruence([c.decode(a)[1] for a in range(4)])
    Q, _ = quotient_algebra(alg, theta)
    for seed in SEEDS:
        p = random_program(Q, 6, 20, seed)
        assert same_table(p, lift_program_quotient(p, alg, theta))


def test_lift_quotient_all_blocks(fx):
    alg = fx("nudet-exact(2)")
    theta = chain_reps(alg)[0].alpha
    Q, _ = quotient_algebra(alg, theta)
    p = random_program(Q, 3, 8, 2, accepting=set(range(Q.size)))
    q = lift_program_quotient(p, alg, theta)
    assert truth_table(q).all() and truth_table(p).all()


def test_combine_constant_true():
    t = lattice_program("meet", accepting=(0, 1))
    out = combine_product_programs(t, t, operator.and_)
    assert truth_table(out).all()


def test_combine_and_of_and_or():
    # the join program is realized in the meet shape: x1 v x2 = not(not x1 ^ not x2)
    p_and = lattice_program("meet")
    p_or = lattice_program("meet", iota=(1, 0), accepting=(0,))
    assert list(truth_table(p_or)) == [False, True, True, True]
    out = combine_product_programs(p_and, p_or, operator.and_)
    assert np.array_equal(truth_table(out), truth_table(p_and) & truth_table(p_or))


def test_combine_or_with_false():
    p = lattice_program("meet")
    false = lattice_program("meet", accepting=())
    out = combine_product_programs(p, false, operator.or_)
    assert same_table(out, p)


def test_combine_random_aligned(fx):
    for seed in SEEDS:
        p1 = random_program(ex_lattice(), 5, 15, seed, const_rate=0.0)
        p2 = Program(p1.circuit, p1.iota[::-1], frozenset({0}))
        for conn in (operator.and_, operator.or_, operator.xor):
            out = combine_product_programs(p1, p2, conn)
            assert np.array_equal(truth_table(out), conn(truth_table(p1), truth_table(p2)))


def test_combine_shape_mismatch():
    with pytest.raises(CompileError):
        combine_product_programs(lattice_program("meet"), lattice_program("join"), operator.and_)


def test_combine_signature_mismatch(fx):
    with pytest.raises(CompileError):
        combine_product_programs(lattice_program("meet"), random_program(fx("affine(2)"), 2, 3, 0),
                                 operator.and_)


# ----------------------------------------------------------------- Boolean circuits

def boolean_kit(alg):
    return find_boolean_kit(alg, 0, 1)


def test_type3_single_variable(fx):
    lc = LayeredCircuit(1)
    lc.set_output(lc.input(0))
    p = compile_bool_to_type3(lc, fx("boolean2"), boolean_kit(fx("boolean2")))
    assert list(truth_table(p)) == [False, True]


def test_type3_majority(fx):
    lc = LayeredCircuit(3)
    lc.set_output(lc.or_([lc.and_([0, 1]), lc.and_([1, 2]), lc.and_([0, 2])]))
    p = compile_bool_to_type3(lc, fx("boolean2"), boolean_kit(fx("boolean2")))
    assert list(truth_table(p)) == [bin(i).count("1") >= 2 for i in range(8)]


@pytest.mark.parametrize("seed", SEEDS)
def test_type3_random(fx, seed):
    lc = random_bool_circuit(6, 25, seed)
    assert same_table(lc, compile_bool_to_type3(lc, fx("boolean2"), boolean_kit(fx("boolean2"))))


def test_demorgan_pushes_negations():
    for seed in SEEDS:
        lc = random_bool_circuit(5, 25, seed)
        nnf = demorgan(lc)
        assert same_table(lc, nnf)
        for i in nnf.ancestors():
            g = nnf.gates[i]
            if g.kind == "not":
                assert nnf.gates[g.inputs[0]].kind == "input"


def test_nested_negations(fx):
    lc = LayeredCircuit(2)
    lc.set_output(lc.not_(lc.not_(lc.not_(lc.and_([0, lc.not_(1)])))))
    p = compile_bool_to_type3(lc, fx("boolean2"), boolean_kit(fx("boolean2")))
    assert same_table(lc, p)


def test_incomparable_examples(fx):
    alg = fx("boolean2")
    uo, kit = find_incomparable_kit(alg)
    assert same_table(xor_circuit(), compile_bool_via_incomparable(xor_circuit(), alg, uo, kit))
    neg = LayeredCircuit(1)
    neg.set_output(neg.not_(0))
    assert list(truth_table(compile_bool_via_incomparable(neg, alg, uo, kit))) == [True, False]
    true = LayeredCircuit(2)
    true.set_output(true.const(1))
    assert truth_table(compile_bool_via_incomparable(true, alg, uo, kit)).all()


@pytest.mark.parametrize("seed", SEEDS)
def test_incomparable_random(fx, seed):
    alg = fx("boolean2")
    uo, kit = find_incomparable_kit(alg)
    lc = random_bool_circuit(6, 25, seed)
    assert same_table(lc, compile_bool_via_incomparable(lc, alg, uo, kit))


def test_no_incomparable_kit_on_chain(fx):
    assert find_incomparable_kit(fx("chain(3)")) is None


@pytest.fixture(scope="module")
def stacked_kit():
    from finalg.fixtures import fixture
    alg = fixture("stacked(2)")
    return alg, find_mixed_kit(alg)


def test_mixed_types_examples(stacked_kit):
    alg, kit = stacked_kit
    assert kit is not None
    x = LayeredCircuit(1)
    x.set_output(x.input(0))
    assert list(truth_table(compile_bool_via_mixed_types(x, alg, kit))) == [False, True]
    x.set_output(x.not_(0))
    assert list(truth_table(compile_bool_via_mixed_types(x, alg, kit))) == [True, False]


@pytest.mark.parametrize("seed", SEEDS)
def test_mixed_types_random(stacked_kit, seed):
    alg, kit = stacked_kit
    lc = random_bool_circuit(6, 25, seed)
    assert same_table(lc, compile_bool_via_mixed_types(lc, alg, kit))


def test_no_mixed_kit_on_boolean(fx):
    assert find_mixed_kit(fx("boolean2")) is None


# ----------------------------------------------------------------- ordered algebras

def only_monotone_inside(lc):
    kinds = lc.kinds()
    assert kinds <= {"and", "or", "bound", "const"}
    for i in lc.ancestors():
        g = lc.gates[i]
        if g.kind == "bound":
            assert i == lc.output


def test_multimonotone_lattice_and():
    p = lattice_program("meet")
    lc = extract_multimonotone(p, totally_ordered_check(ex_lattice()))
    assert same_table(p, lc) and lc.kinds() <= {"and", "or"}


def test_multimonotone_upper_set_no_bound(fx):
    alg = fx("chain(3)")
    p = random_program(alg, 5, 15, 3, iota=(0, 2), accepting={1, 2})
    lc = extract_multimonotone(p, totally_ordered_check(alg))
    assert same_table(p, lc) and "bound" not in lc.kinds()


def test_multimonotone_reversed_iota():
    p = lattice_program("meet", iota=(1, 0))
    lc = extract_multimonotone(p, totally_ordered_check(ex_lattice()))
    assert same_table(p, lc)


@pytest.mark.parametrize("fid", ["ex-lattice", "chain(3)", "chain(4)"])
def test_multimonotone_random(fx, fid):
    alg = fx(fid)
    w = totally_ordered_check(alg)
    for seed in SEEDS:
        p = random_program(alg, 6, 30, seed)
        lc = extract_multimonotone(p, w)
        assert same_table(p, lc)
        only_monotone_inside(lc)


# ----------------------------------------------------------------- affine and nilpotent

def test_affine_z3_example(fx):
    alg = fx("affine(3)")
    c = AlgebraCircuit(alg, 2)
    c.output = c.op("d", c.var(0), c.const(2), c.var(1))     # x1 - 2 + x2 = x1 + x2 + 1
    p = Program(c, (0, 1), {0})
    lc = compile_affine_simple(p, module_rep(alg))
    assert list(truth_table(lc)) == [False, False, False, True]
    mods = [lc.gates[i] for i in lc.ancestors() if lc.gates[i].kind == "mod"]
    assert len(mods) == 1 and mods[0].params["m"] == 3


def test_affine_accept_all(fx):
    alg = fx("affine(3)")
    p = random_program(alg, 3, 6, 1, accepting={0, 1, 2})
    assert truth_table(compile_affine_simple(p, module_rep(alg))).all()


def test_affine_parity_z2(fx):
    alg = fx("affine(2)")
    rep = module_rep(alg)
    for seed in SEEDS:
        p = random_program(alg, 6, 25, seed)
        lc = compile_affine_simple(p, rep)
        assert same_table(p, lc)
        assert lc.kinds() <= {"mod", "and", "or", "const"}


def test_affine_rejects_multi_factor_rep(fx):
    alg = fx("nudet-exact(2)")
    with pytest.raises(CompileError):
        compile_affine_simple(random_program(alg, 2, 3, 0), chain_reps(alg)[0])


@pytest.mark.parametrize("fid", ["example-nilpo(2,2)", "example-nilpo(6,3)"])
def test_nilpotent_step_random(fx, fid):
    alg = fx(fid)
    rep = chain_reps(alg)[0]
    for seed in SEEDS:
        p = random_program(alg, 6, 30, seed)
        lc = compile_nilpotent_step(p, rep)
        assert same_table(p, lc)


def test_nilpotent_step_constant(fx):
    alg = fx("example-nilpo(2,2)")
    p = const_program(alg, 3, 2, {2})
    assert truth_table(compile_nilpotent_step(p, chain_reps(alg)[0])).all()


@pytest.mark.parametrize("fid", ["example-nilpo(2,2)", "example-nilpo(6,3)", "example-nilpo(6,2)"])
def test_nilpotent_full_random(fx, fid):
    alg = fx(fid)
    reps = chain_reps(alg)
    for seed in SEEDS:
        p = random_program(alg, 6, 30, seed)
        lc = compile_nilpotent_full(p, reps)
        assert same_table(p, lc)
        assert "prog" not in lc.kinds()


def test_nilpotent_full_mixed_moduli(fx):
    alg = fx("example-nilpo(6,2)")
    p = random_program(alg, 6, 30, 5)
    mods = {g.params["m"] for g in compile_nilpotent_full(p, chain_reps(alg)).gates if g.kind == "mod"}
    assert mods <= {2, 3}


def test_parity_of_parities(fx):
    lc = LayeredCircuit(4)
    lc.set_output(lc.mod(2, {1}, [lc.mod(2, {1}, [0, 1]), lc.mod(2, {0}, [2, 3])]))
    prog = compile_cc_to_nilpotent(lc, 2, 2)
    out = compile_nilpotent_full(prog, chain_reps(prog.algebra))
    assert same_table(lc, out) and out.kinds() <= {"mod", "and", "or", "const"}


def test_nilpotent_full_one_step(fx):
    alg = fx("affine(3)")
    p = random_program(alg, 4, 12, 2)
    assert same_table(compile_nilpotent_full(p, [module_rep(alg)]), compile_affine_simple(p, module_rep(alg)))


def test_flatten_not_over_parity():
    lc = LayeredCircuit(3)
    lc.set_output(lc.not_(lc.mod(2, {1}, [0, 1, 2])))
    flat = flatten_and_mod_and(lc)
    assert same_table(lc, flat)


def test_flatten_identity():
    lc = LayeredCircuit(4)
    lc.set_output(lc.mod(3, {0}, [lc.and_([0, 1]), 2, 3]))
    assert same_table(lc, flatten_and_mod_and(lc))


@pytest.mark.parametrize("seed", SEEDS)
def test_flatten_random_p3(seed):
    rng = np.random.default_rng(seed)
    lc = LayeredCircuit(6)
    mods = []
    for _ in range(2):                                    # d' = 2
        ands = [lc.and_([int(rng.integers(6)), int(rng.integers(6))]) for _ in range(3)]   # d = 2
        mods.append(lc.mod(3, {int(rng.integers(3))}, ands))
    lc.set_output(lc.bound(tuple(int(v) for v in rng.integers(0, 2, 4)), mods))
    flat = flatten_and_mod_and(lc)
    assert same_table(lc, flat)
    assert flat.kinds() <= {"mod", "and", "const"}


def test_flatten_shape_violation():
    lc = LayeredCircuit(2)
    lc.set_output(lc.and_([lc.mod(2, {1}, [0]), lc.mod(3, {1}, [1])]))
    with pytest.raises(CompileError):
        flatten_and_mod_and(lc)


# ----------------------------------------------------------------- MOD circuits into algebras

def test_cc_single_mod2():
    lc = LayeredCircuit(3)
    lc.set_output(lc.mod(2, {1}, [0, 1, 2]))
    assert same_table(lc, compile_cc_to_nilpotent(lc, 2, 1))


@pytest.mark.parametrize("seed", SEEDS)
def test_cc_two_layer_random(seed):
    lc = random_cc(6, 2, 2, 3, seed)
    assert same_table(lc, compile_cc_to_nilpotent(lc, 2, 2))


@pytest.mark.parametrize("seed", range(6))
def test_cc_mod6_random(seed):
    lc = random_cc(5, 6, 3, 3, seed)
    assert same_table(lc, compile_cc_to_nilpotent(lc, 6, 3))


def test_cc_input_wire():
    lc = LayeredCircuit(2)
    lc.set_output(lc.input(1))
    assert same_table(lc, compile_cc_to_nilpotent(lc, 2, 1))


def test_cc_height_exceeded():
    lc = LayeredCircuit(2)
    lc.set_output(lc.mod(2, {1}, [lc.mod(2, {0}, [lc.mod(2, {1}, [0, 1])])]))
    with pytest.raises(CompileError):
        compile_cc_to_nilpotent(lc, 2, 2)


# ----------------------------------------------------------------- ABPs and determinism

def test_abp_parity_to_detalg():
    for n in range(1, 11):
        g = BabpGate(from_sparse_poly(2, n, [(1, (v,)) for v in range(n)]), {1})
        p = compile_abp_to_detalg(g)
        assert same_table(g, p)
        assert list(truth_table(p)) == [bin(i).count("1") % 2 == 1 for i in range(1 << n)]


def test_abp_constant_to_detalg():
    p = compile_abp_to_detalg(BabpGate(constant(3, 2, 2), {2}))
    assert truth_table(p).all()


def test_abp_gf3_example():
    g = BabpGate(from_sparse_poly(3, 3, [(1, (0, 1)), (1, (2,))]), {0})
    assert same_table(g, compile_abp_to_detalg(g))


def test_abp_detalg_iota_and_accepting():
    g = BabpGate(from_sparse_poly(3, 2, [(1, (0,))]), {1, 2})
    p = compile_abp_to_detalg(g)
    c = nudet_codec(3)
    assert p.iota == (c.encode((0, 0)), c.encode((0, 1)))
    assert p.accepting == {c.encode((1, 0)), c.encode((2, 0))}


@pytest.mark.parametrize("p", [2, 3, 5])
def test_abp_round_trip(p):
    for seed in SEEDS:
        g = random_babp(p, 6, 20, seed)
        back = compile_detalg_to_abp(compile_abp_to_detalg(g))
        assert same_table(g, back)


def test_detalg_constant_program(fx):
    alg = fx("nudet-exact(3)")
    p = const_program(alg, 3, 4, {4})
    assert truth_table(compile_detalg_to_abp(p)).all()


@pytest.mark.parametrize("seed", SEEDS)
def test_detalg_random_p3(fx, seed):
    p = random_program(fx("nudet-exact(3)"), 6, 40, seed)
    assert same_table(p, compile_detalg_to_abp(p))


def test_detalg_foreign_algebra(fx):
    with pytest.raises(CompileError):
        compile_detalg_to_abp(random_program(fx("chain(3)"), 2, 3, 0))


# ----------------------------------------------------------------- solvable algebras

@pytest.mark.parametrize("fid", ["nudet-exact(2)", "nudet-exact(3)"])
def test_solvable_step_matches_detalg(fx, fid):
    alg = fx(fid)
    rep = chain_reps(alg)[0]
    for seed in SEEDS:
        p = random_program(alg, 6, 25, seed)
        lc = compile_solvable_step(p, rep)
        assert same_table(lc, compile_detalg_to_abp(p))


@pytest.mark.parametrize("fid", ["solv-construc(2,2)", "solv-construc(2,3)"])
def test_solvable_step_random(fx, fid):
    alg = fx(fid)
    rep = chain_reps(alg)[0]
    for seed in SEEDS:
        p = random_program(alg, 6, 25, seed)
        lc = compile_solvable_step(p, rep)
        assert same_table(p, lc)
        assert lc.kinds() <= {"babp", "prog", "const"}


def test_solvable_step_constant(fx):
    alg = fx("solv-construc(2,2)")
    p = const_program(alg, 2, 3, {3})
    assert truth_table(compile_solvable_step(p, chain_reps(alg)[0])).all()


@pytest.mark.parametrize("fid", ["solv-construc(2,3)", "nudet-exact(2)", "nudet-exact(3)",
                                 "example-nilpo(2,2)"])
def test_solvable_full_random(fx, fid):
    alg = fx(fid)
    reps = chain_reps(alg)
    for seed in SEEDS:
        p = random_program(alg, 6, 25, seed)
        lc = compile_solvable_full(p, reps)
        assert same_table(p, lc)
        assert lc.kinds() <= {"babp", "const"}


def test_solvable_full_single_step(fx):
    alg = fx("affine(3)")
    p = random_program(alg, 5, 15, 0)
    lc = compile_solvable_full(p, [module_rep(alg)])
    assert same_table(p, lc) and lc.kinds() <= {"babp", "const"}


def test_solvable_full_parity_nudet(fx):
    alg = fx("nudet-exact(2)")
    c = nudet_codec(2)
    circ = AlgebraCircuit(alg, 4)
    acc = circ.var(0)
    for i in range(1, 4):
        acc = circ.op("add", acc, circ.var(i))
    circ.output = acc
    p = Program(circ, (c.encode((0, 0)), c.encode((1, 0))), {c.encode((1, 0)), c.encode((1, 1))})
    lc = compile_solvable_full(p, chain_reps(alg))
    assert list(truth_table(lc)) == [bin(i).count("1") % 2 == 1 for i in range(16)]


def test_itdet_single_layer_matches_abp():
    for seed in SEEDS:
        g = random_babp(2, 4, 12, seed)
        lc = LayeredCircuit(4)
        lc.set_output(lc.babp(g, [0, 1, 2, 3]))
        assert same_table(compile_itdet_to_solvable(lc, (2,)), compile_abp_to_detalg(g))


def test_itdet_xor_of_mod3_tests():
    lc = LayeredCircuit(5)
    t1 = lc.babp(BabpGate(from_sparse_poly(3, 3, [(1, (0,)), (1, (1,)), (1, (2,))]), {0}), [0, 1, 2])
    t2 = lc.babp(BabpGate(from_sparse_poly(3, 3, [(1, (0,)), (1, (1,)), (1, (2,))]), {0}), [2, 3, 4])
    lc.set_output(lc.babp(BabpGate(from_sparse_poly(2, 2, [(1, (0,)), (1, (1,))]), {1}), [t1, t2]))
    assert same_table(lc, compile_itdet_to_solvable(lc, (2, 3)))


@pytest.mark.parametrize("seed", SEEDS)
def test_itdet_random(seed):
    lc = random_itdet(6, (2, 3), 3, 8, seed)
    assert same_table(lc, compile_itdet_to_solvable(lc, (2, 3)))


def test_itdet_constant():
    lc = LayeredCircuit(2)
    lc.set_output(lc.babp(BabpGate(constant(2, 2, 1), {1}), [0, 1]))
    assert truth_table(compile_itdet_to_solvable(lc, (2,))).all()


def test_itdet_prime_mismatch():
    lc = random_itdet(3, (2, 3), 2, 5, 0)
    with pytest.raises(CompileError):
        compile_itdet_to_solvable(lc, (3, 2))


# ----------------------------------------------------------------- mixed

def mixed_setup(alg):
    chain = type_chain(alg, "2")
    return chain[-1], chain_reps(alg, chain, coords_fns=bundled_coords(alg))


@pytest.mark.parametrize("fid", ["mixed(2)", "mixed(3)"])
def test_mixed_random(fx, fid):
    alg = fx(fid)
    beta, reps = mixed_setup(alg)
    for seed in SEEDS:
        p = random_program(alg, 6, 25, seed)
        lc = compile_mixed(p, beta, reps)
        assert same_table(p, lc)
        assert lc.kinds() <= {"babp", "and", "or", "const"}


def test_mixed_beta_zero(fx):
    alg = ex_lattice()
    for seed in SEEDS:
        p = random_program(alg, 6, 20, seed)
        lc = compile_mixed(p, Congruence.zero(2), [])
        assert same_table(p, lc)


def test_mixed_beta_one(fx):
    alg = fx("nudet-exact(2)")
    reps = chain_reps(alg)
    for seed in SEEDS:
        p = random_program(alg, 5, 20, seed)
        lc = compile_mixed(p, Congruence.one(alg.size), reps)
        assert same_table(lc, compile_solvable_full(p, reps))


def test_mixed_rejects_unordered_quotient(fx):
    alg = fx("boolean2")
    with pytest.raises(CompileError):
        compile_mixed(random_program(alg, 2, 3, 0), Congruence.zero(2), [])


def test_ordered_factors(fx):
    assert len(ordered_factors(fx("chain(3)"))) == 1
    assert ordered_factors(fx("boolean2")) is None
