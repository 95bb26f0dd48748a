"""Seeded random sources for every compiler pass."""
from __future__ import annotations

import numpy as np

from .abp import AbpProcess, BabpGate, _Builder
from .circuits import AlgebraCircuit, LayeredCircuit, Program
from .core_algebra import FiniteAlgebra


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_program(alg: FiniteAlgebra, arity: int, size: int, seed=0, iota=None, accepting=None,
                   ops=None, const_rate: float = 0.1) -> Program:
    """Random circuit with `size` operation gates; later gates prefer recent ones."""
    rng = _rng(seed)
    names = [o.name for o in alg.operations if o.arity > 0 and (ops is None or o.name in ops)]
    if not names:
        raise ValueError("no operations of positive arity")
    circ = AlgebraCircuit(alg, arity)
    pool = [circ.var(i) for i in range(arity)]
    for _ in range(size):
        name = names[rng.integers(len(names))]
        r = alg.op(name).arity
        ins = []
        for _ in range(r):
            if rng.random() < const_rate:
                ins.append(circ.const(int(rng.integers(alg.size))))
            else:
                j = len(pool) - 1 - min(int(rng.geometric(0.3)) - 1, len(pool) - 1)
                ins.append(pool[j] if rng.random() < 0.7 else pool[rng.integers(len(pool))])
        pool.append(circ._append(("op", name, tuple(ins))))
    circ.output = pool[-1]
    if iota is None:
        a, b = rng.choice(alg.size, 2, replace=False)
        iota = (int(a), int(b))
    if accepting is None:
        k = int(rng.integers(1, alg.size))
        accepting = {int(x) for x in rng.choice(alg.size, k, replace=False)}
    return Program(circ, iota, accepting)


def random_bool_circuit(arity: int, size: int, seed=0, negations: bool = True) -> LayeredCircuit:
    rng = _rng(seed)
    lc = LayeredCircuit(arity)
    pool = [lc.input(i) for i in range(arity)]
    for _ in range(size):
        kind = rng.choice(["and", "or", "not"] if negations else ["and", "or"])
        if kind == "not":
            pool.append(lc.not_(pool[rng.integers(len(pool))]))
        else:
            k = int(rng.integers(2, 4))
            pool.append(lc.add(kind, [pool[rng.integers(len(pool))] for _ in range(k)]))
    return lc.set_output(pool[-1])


def random_abp(prime: int, arity: int, size: int, seed=0) -> AbpProcess:
    rng = _rng(seed)
    b = _Builder(prime, arity)
    live = [b.one()]
    while len(b.steps) < size:
        t = rng.random()
        if t < 0.45 and arity:
            live.append(b.mulvar(live[rng.integers(len(live))], int(rng.integers(arity))))
        elif t < 0.65:
            live.append(b.add(("scale", live[rng.integers(len(live))], int(rng.integers(prime)))))
        else:
            k = int(rng.integers(1, 4))
            live.append(b.add(("sum", tuple(int(x) for x in rng.choice(live, k)))))
    return b.build(live[-1])


def random_babp(prime: int, arity: int, size: int, seed=0) -> BabpGate:
    rng = _rng(seed)
    abp = random_abp(prime, arity, size, rng)
    acc = {int(x) for x in rng.choice(prime, int(rng.integers(1, prime)), replace=False)}
    return BabpGate(abp, acc)


def random_cc(arity: int, m: int, height: int, width: int, seed=0) -> LayeredCircuit:
    """MOD_m circuit with `height` layers of `width` gates; the output sits on top."""
    rng = _rng(seed)
    lc = LayeredCircuit(arity)
    prev = [lc.input(i) for i in range(arity)]
    for layer in range(height):
        cur = []
        w = 1 if layer == height - 1 else width
        for _ in range(w):
            k = int(rng.integers(1, 5))
            ins = [prev[rng.integers(len(prev))] for _ in range(k)]
            acc = {int(x) for x in rng.choice(m, int(rng.integers(1, m)), replace=False)}
            cur.append(lc.mod(m, acc, ins))
        prev = cur + prev
    return lc.set_output(prev[0])


def random_itdet(arity: int, primes, width: int, abp_size: int, seed=0) -> LayeredCircuit:
    """BABP layers; layer i (from the inputs) uses primes[-1 - i], the output is alone on top."""
    rng = _rng(seed)
    primes = list(primes)
    lc = LayeredCircuit(arity)
    prev = [lc.input(i) for i in range(arity)]
    h = len(primes)
    for layer in range(h):
        p = primes[h - 1 - layer]
        cur = []
        w = 1 if layer == h - 1 else width
        for _ in range(w):
            k = int(rng.integers(1, 4))
            ins = [prev[rng.integers(len(prev))] for _ in range(k)]
            g = random_babp(p, k, abp_size, rng)
            cur.append(lc.babp(g, ins))
        prev = cur + prev
    return lc.set_output(prev[0])
