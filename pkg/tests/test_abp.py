import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finalg.abp import (AbpError, AbpProcess, BabpGate, Poly, affine_substitute, babp_eval,
                        compose_bounded, constant, from_sparse_poly, interpolate, multiply,
                        substitute_polys, variable)
from finalg.random_sources import random_abp

from oracles import all_points, eval_poly, expand_process


def parity(p, n):
    return from_sparse_poly(p, n, [(1, (v,)) for v in range(n)])


def random_points(p, n, count=200, seed=0):
    return np.random.default_rng(seed).integers(0, p, size=(count, n))


def test_init_one_only():
    a = AbpProcess(5, 3, [("one",)])
    assert np.all(a.eval_batch(all_points(5, 3)) == 1)


def test_sum_gf2():
    assert parity(2, 2).eval((1, 1)) == 0


def test_product_plus_constant_gf3():
    a = from_sparse_poly(3, 2, [(1, (0, 1)), (2, ())])
    assert a.eval((2, 2)) == 0
    assert eval_poly(expand_process(a), 3, (2, 2)) == 0


def test_zero_polynomial():
    a = from_sparse_poly(5, 2, [])
    assert np.all(a.eval_batch(all_points(5, 2)) == 0)


def test_formal_square_plus_var_gf2():
    a = from_sparse_poly(2, 1, [(1, (0, 0)), (1, (0,))])
    assert expand_process(a) == {(0, 0): 1, (0,): 1}
    # pointwise it vanishes on GF(2), as x^2 + x must
    assert list(a.eval_batch(all_points(2, 1))) == [0, 0]


def test_constant_two_gf3():
    a = from_sparse_poly(3, 1, [(2, ())])
    assert ("scale", 0, 2) in a.steps and a.eval((1,)) == 2
    assert constant(3, 1, 2).steps == [("one",), ("scale", 0, 2)]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 4), st.data())
def test_sparse_poly_step_bound(p, n, data):
    monos = data.draw(st.lists(st.tuples(st.integers(1, p - 1),
                                         st.lists(st.integers(0, n - 1), max_size=3).map(tuple)),
                               max_size=6))
    a = from_sparse_poly(p, n, monos)
    assert a.size <= 2 + sum(len(m) + 1 for _, m in monos)
    pts = all_points(p, n)
    want = [sum(c * int(np.prod([x[v] for v in m])) for c, m in monos) % p for x in pts]
    assert list(a.eval_batch(pts)) == want


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 5, 7]), st.integers(0, 4), st.integers(1, 12), st.integers(0, 10**6))
def test_eval_matches_formal_expansion(p, n, size, seed):
    a = random_abp(p, n, size, seed)
    poly = expand_process(a)
    pts = all_points(p, n) if p ** n <= 625 else random_points(p, n)
    assert list(a.eval_batch(pts)) == [eval_poly(poly, p, x) for x in pts]


def test_identity_substitution():
    a = random_abp(3, 3, 15, 1)
    b = affine_substitute(a, [({v: 1}, 0) for v in range(3)])
    pts = all_points(3, 3)
    assert np.array_equal(a.eval_batch(pts), b.eval_batch(pts))


def test_complemented_parity():
    for n in range(1, 9):
        a = parity(2, n)
        b = affine_substitute(a, [({v: 1}, 1) for v in range(n)])
        pts = all_points(2, n)
        assert np.array_equal(b.eval_batch(pts), a.eval_batch(1 - pts))


def test_substitute_constant_zero():
    a = random_abp(5, 3, 20, 4)
    b = affine_substitute(a, [({}, 0)] * 3)
    assert np.all(b.eval_batch(random_points(5, 3)) == a.eval((0, 0, 0)))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_affine_substitute_pointwise_and_bound(p):
    rng = np.random.default_rng(p)
    for seed in range(20):
        n, m = 3, 4
        a = random_abp(p, n, 25, seed)
        single = [({int(rng.integers(m)): int(rng.integers(1, p))}, int(rng.integers(p))) for _ in range(n)]
        wide = [({i: int(rng.integers(p)) for i in range(m)}, int(rng.integers(p))) for _ in range(n)]
        for subs, w in ((single, 1), (wide, m)):
            b = affine_substitute(a, subs, new_arity=m)
            assert b.size <= (2 * w + 2) * a.size
            pts = random_points(p, m, seed=seed)
            mapped = np.array([[(sum(c * x[i] for i, c in f.items()) + k) % p for f, k in subs] for x in pts])
            assert np.array_equal(b.eval_batch(pts), a.eval_batch(mapped))


def test_affine_substitute_prime_mismatch():
    with pytest.raises(AbpError):
        affine_substitute(parity(2, 2), [({0: 1}, 0)] * 2, prime=3)


def test_multiply_by_one():
    a = random_abp(3, 2, 10, 2)
    b = multiply(a, AbpProcess(3, 2, [("one",)]))
    pts = all_points(3, 2)
    assert np.array_equal(a.eval_batch(pts), b.eval_batch(pts))


def test_multiply_variables_gf3():
    b = multiply(variable(3, 2, 0), variable(3, 2, 1))
    pts = all_points(3, 2)
    assert list(b.eval_batch(pts)) == [x * y % 3 for x, y in pts]


def test_parity_squared_gf2():
    a = parity(2, 5)
    pts = all_points(2, 5)
    assert np.array_equal(multiply(a, a).eval_batch(pts), a.eval_batch(pts))


def test_multiply_prime_mismatch():
    with pytest.raises(AbpError):
        multiply(parity(2, 2), parity(3, 2))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 20), st.integers(1, 20), st.integers(0, 10**6))
def test_multiply_bound_and_pointwise(p, l1, l2, seed):
    a1, a2 = random_abp(p, 4, l1, seed), random_abp(p, 4, l2, seed + 1)
    b = multiply(a1, a2)
    assert b.size <= a1.size + a2.size
    pts = np.vstack([all_points(2, 4), random_points(p, 4, seed=seed)])
    assert np.array_equal(b.eval_batch(pts), a1.eval_batch(pts) * a2.eval_batch(pts) % p)


def test_compose_identity():
    a = random_abp(5, 2, 12, 3)
    b = compose_bounded(lambda y: y, [a])
    pts = all_points(5, 2)
    assert np.array_equal(a.eval_batch(pts), b.eval_batch(pts))


def test_compose_and_gf2():
    a1, a2 = random_abp(2, 4, 10, 5), random_abp(2, 4, 10, 6)
    b = compose_bounded(lambda y, z: y & z, [a1, a2])
    pts = all_points(2, 4)
    assert np.array_equal(b.eval_batch(pts), a1.eval_batch(pts) * a2.eval_batch(pts))


def test_compose_indicator_gf3():
    for n in range(1, 5):
        a = random_abp(3, n, 10, n)
        b = compose_bounded(lambda y: int(y == 2), [a])
        pts = all_points(3, n)
        assert np.array_equal(b.eval_batch(pts), (a.eval_batch(pts) == 2).astype(int))


@pytest.mark.parametrize("p,k", [(2, 3), (3, 2), (5, 1), (2, 1)])
def test_compose_bound_and_pointwise(p, k):
    rng = np.random.default_rng(10 * p + k)
    for seed in range(5):
        parts = [random_abp(p, 3, int(rng.integers(1, 12)), seed * 7 + i) for i in range(k)]
        table = rng.integers(0, p, size=p ** k)
        b = compose_bounded(table, parts)
        assert b.size <= p ** k * (k * (p - 1) * max(a.size for a in parts) + 2)
        pts = np.vstack([all_points(2, 3), random_points(p, 3, seed=seed)])
        vals = np.stack([a.eval_batch(pts) for a in parts], axis=1)
        idx = [int(np.ravel_multi_index(tuple(v), (p,) * k)) for v in vals]
        assert np.array_equal(b.eval_batch(pts), table[idx])


def test_compose_cap():
    with pytest.raises(AbpError):
        compose_bounded(lambda *y: 0, [parity(2, 1)] * 3, cap=2)


def test_interpolation_reproduces_table():
    p, k = 3, 2
    table = np.arange(9) * 5 % 3
    C = interpolate(p, k, table)
    for x in itertools.product(range(p), repeat=k):
        v = sum(int(C[e]) * x[0] ** e[0] * x[1] ** e[1] for e in itertools.product(range(p), repeat=k)) % p
        assert v == table[x[0] * 3 + x[1]]


def test_babp_empty_accepting():
    g = BabpGate(parity(2, 3), frozenset())
    assert not any(babp_eval(g, b) for b in itertools.product((0, 1), repeat=3))


def test_babp_parity_xor():
    g = BabpGate(parity(2, 2), {1})
    assert [babp_eval(g, b) for b in itertools.product((0, 1), repeat=2)] == [False, True, True, False]


def test_babp_constant():
    g = BabpGate(constant(5, 2, 3), {3})
    assert all(babp_eval(g, b) for b in itertools.product((0, 1), repeat=2))


def test_babp_rejects_bad_accepting():
    with pytest.raises(AbpError):
        BabpGate(parity(2, 1), {2})


def test_babp_arity_mismatch():
    with pytest.raises(AbpError):
        babp_eval(BabpGate(parity(2, 2), {1}), (1,))


def test_forward_reference_rejected():
    with pytest.raises(AbpError):
        AbpProcess(2, 1, [("scale", 0, 1)])


def test_unreduced_constant_rejected():
    with pytest.raises(AbpError):
        AbpProcess(3, 1, [("one",), ("scale", 0, 4)])


def test_json_round_trip():
    a = random_abp(7, 3, 20, 9)
    b = AbpProcess.from_json(a.to_json())
    assert b.steps == a.steps and b.output == a.output


def test_trimmed_keeps_value():
    a = random_abp(3, 3, 30, 11)
    t = a.trimmed()
    assert t.size <= a.size
    pts = all_points(3, 3)
    assert np.array_equal(a.eval_batch(pts), t.eval_batch(pts))


def test_substitute_polys():
    a = multiply(variable(3, 1, 0), variable(3, 1, 0))          # x^2
    b = substitute_polys(a, [[(1, (0, 1)), (2, ())]], 2)         # x -> yz + 2
    pts = all_points(3, 2)
    assert list(b.eval_batch(pts)) == [(y * z + 2) ** 2 % 3 for y, z in pts]


def test_poly_arithmetic():
    x, y = Poly.var(3, 0), Poly.var(3, 1)
    f = (x + y) * (x + y)
    pts = all_points(3, 2)
    assert list(f.eval_batch(pts)) == [(a + b) ** 2 % 3 for a, b in pts]
    assert f.degree() == 2
    assert np.array_equal(f.to_abp(2).eval_batch(pts), f.eval_batch(pts))
    g = (x * x).boolean()
    assert g.terms == {(0,): 1}
